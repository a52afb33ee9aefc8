//! A finite model of torsion on an abelian variety: the `N`-torsion group
//! `(Z/N)^(2g)`, its free direct summands standing in for abelian
//! subvarieties, torsion cosets, Lang orbits `{ l^c a }`, and exhaustive
//! searches for special decompositions.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::{Integer, Roots};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith;
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::serde_util;
use crate::snf::smith_normal_form;

/// An element of the ambient group, coordinates reduced to `[0, N)`.
pub type Point = Vec<u64>;

/// The group `(Z/N)^(2g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ModelAmbient {
    #[serde(rename = "N")]
    pub n: u64,
    pub g: u32,
}

impl ModelAmbient {
    pub fn new(n: u64, g: u32) -> Result<Self> {
        if n == 0 || g == 0 {
            return Err(Error::invalid("torsion level N and dimension g must be positive"));
        }
        if n.checked_pow(2 * g).is_none() {
            return Err(Error::invalid("N^(2g) overflows 64 bits"));
        }
        Ok(ModelAmbient { n, g })
    }

    /// Number of coordinates, `2g`.
    pub fn rank(&self) -> usize {
        2 * self.g as usize
    }

    pub fn order(&self) -> u64 {
        self.n.pow(2 * self.g)
    }

    /// Fails unless the whole group may be enumerated under `caps`.
    pub fn ensure_enumerable(&self, caps: &Caps) -> Result<usize> {
        let order = self.order();
        if order > caps.ambient_order {
            return Err(Error::cap("ambient group order", order, caps.ambient_order));
        }
        Ok(order as usize)
    }

    pub fn zero(&self) -> Point {
        vec![0; self.rank()]
    }

    pub fn check(&self, a: &[u64]) -> Result<()> {
        if a.len() != self.rank() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, expected {}",
                a.len(),
                self.rank()
            )));
        }
        if let Some(v) = a.iter().find(|&&v| v >= self.n) {
            return Err(Error::invalid(format!("coordinate {v} not reduced modulo {}", self.n)));
        }
        Ok(())
    }

    pub fn reduce(&self, a: &[i64]) -> Point {
        a.iter().map(|&v| v.rem_euclid(self.n as i64) as u64).collect()
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Point {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.n).collect()
    }

    pub fn scale(&self, k: u64, a: &[u64]) -> Point {
        let k = k % self.n;
        a.iter().map(|&x| ((x as u128 * k as u128) % self.n as u128) as u64).collect()
    }

    /// Additive order of `a`.
    pub fn point_order(&self, a: &[u64]) -> u64 {
        let content = a.iter().fold(self.n, |acc, &x| acc.gcd(&x));
        self.n / content
    }

    /// Mixed-radix index with the first coordinate most significant, so that
    /// index order agrees with lexicographic order on points.
    pub fn encode(&self, a: &[u64]) -> usize {
        a.iter().fold(0usize, |acc, &x| acc * self.n as usize + x as usize)
    }

    pub fn decode(&self, mut index: usize) -> Point {
        let mut out = vec![0; self.rank()];
        for slot in out.iter_mut().rev() {
            *slot = (index % self.n as usize) as u64;
            index /= self.n as usize;
        }
        out
    }

    /// All elements in index order.
    pub fn elements(&self, caps: &Caps) -> Result<impl Iterator<Item = Point> + '_> {
        let order = self.ensure_enumerable(caps)?;
        Ok((0..order).map(move |i| self.decode(i)))
    }

    /// Residues `l` in `[1, N)` prime to `N` (just `1` when `N = 1`).
    pub fn units(&self) -> Vec<u64> {
        if self.n == 1 {
            return vec![1];
        }
        (1..self.n).filter(|l| l.gcd(&self.n) == 1).collect()
    }
}

/// A direct summand of the ambient group isomorphic to `(Z/N)^(2b)`,
/// modelling an abelian subvariety of dimension `b`.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSubvariety {
    #[serde(flatten)]
    pub ambient: ModelAmbient,
    pub dim: u32,
    pub basis: Vec<Point>,
    /// Column transform of the Smith form of `basis`.
    #[serde(skip)]
    transform: Vec<Vec<i64>>,
}

impl PartialEq for ModelSubvariety {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.dim == other.dim && self.basis == other.basis
    }
}

impl Eq for ModelSubvariety {}

impl ModelSubvariety {
    /// Validate `basis` as a basis of a free direct summand: an even number
    /// of points whose Smith invariants are all units modulo `N`.
    pub fn new(ambient: ModelAmbient, basis: Vec<Point>) -> Result<Self> {
        if basis.len() % 2 != 0 {
            return Err(Error::invalid("a summand basis must have an even number 2b of points"));
        }
        if basis.len() > ambient.rank() {
            return Err(Error::invalid("more basis points than coordinates"));
        }
        for b in &basis {
            ambient.check(b)?;
        }
        let rows: Vec<Vec<i64>> = basis.iter().map(|b| b.iter().map(|&v| v as i64).collect()).collect();
        let transform = if rows.is_empty() {
            identity(ambient.rank())
        } else {
            let snf = smith_normal_form(&rows);
            if let Some(d) = snf.diagonal.iter().find(|d| d.gcd(&(ambient.n as i64)) != 1) {
                return Err(Error::invalid(format!(
                    "basis does not span a free direct summand (invariant factor {d} shares a factor with N = {})",
                    ambient.n
                )));
            }
            snf.right
        };
        Ok(ModelSubvariety {
            ambient,
            dim: (basis.len() / 2) as u32,
            basis,
            transform,
        })
    }

    pub fn zero(ambient: ModelAmbient) -> Self {
        ModelSubvariety::new(ambient, Vec::new()).expect("the zero summand is valid")
    }

    pub fn full(ambient: ModelAmbient) -> Self {
        let basis = (0..ambient.rank())
            .map(|i| {
                let mut e = ambient.zero();
                e[i] = 1 % ambient.n;
                e
            })
            .collect();
        ModelSubvariety::new(ambient, basis).expect("the standard basis is a summand")
    }

    /// `N^(2b)`.
    pub fn order(&self) -> u64 {
        self.ambient.n.pow(2 * self.dim)
    }

    /// Membership by the Smith form: `x` lies in the span iff the
    /// coordinates of `x V` past the rank vanish modulo `N`.
    pub fn contains(&self, x: &[u64]) -> bool {
        let n = self.ambient.n as i128;
        let r = self.basis.len();
        (r..self.ambient.rank()).all(|j| {
            let s: i128 = x
                .iter()
                .zip(&self.transform)
                .map(|(&xi, row)| xi as i128 * row[j] as i128)
                .sum();
            s.rem_euclid(n) == 0
        })
    }

    /// Every element, enumerated by coefficient vectors.
    pub fn elements(&self) -> Vec<Point> {
        let n = self.ambient.n;
        let r = self.basis.len();
        let count = self.order() as usize;
        let mut out = Vec::with_capacity(count);
        let mut coeffs = vec![0u64; r];
        for _ in 0..count {
            let mut p = self.ambient.zero();
            for (c, b) in coeffs.iter().zip(&self.basis) {
                for (pj, bj) in p.iter_mut().zip(b) {
                    *pj = (*pj + c * bj) % n;
                }
            }
            out.push(p);
            for c in coeffs.iter_mut() {
                *c += 1;
                if *c < n {
                    break;
                }
                *c = 0;
            }
        }
        out
    }
}

fn identity(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

/// A coset `point + subgroup` with its order in the quotient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TorsionCoset {
    pub point: Point,
    #[serde(flatten)]
    pub subgroup: ModelSubvariety,
    pub order: u64,
}

impl TorsionCoset {
    pub fn new(point: Point, subgroup: ModelSubvariety) -> Result<Self> {
        subgroup.ambient.check(&point)?;
        let order = coset_order_of(&point, &subgroup);
        Ok(TorsionCoset {
            point,
            subgroup,
            order,
        })
    }

    pub fn ambient(&self) -> ModelAmbient {
        self.subgroup.ambient
    }

    /// Points of `point + subgroup`, sorted.
    pub fn points(&self) -> Vec<Point> {
        let amb = self.ambient();
        let mut out: Vec<Point> = self.subgroup.elements().iter().map(|b| amb.add(&self.point, b)).collect();
        out.sort();
        out
    }
}

fn coset_order_of(point: &[u64], subgroup: &ModelSubvariety) -> u64 {
    let amb = subgroup.ambient;
    divisors(amb.n)
        .into_iter()
        .find(|&m| subgroup.contains(&amb.scale(m, point)))
        .unwrap_or(amb.n)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=n.sqrt()).filter(|d| n % d == 0).flat_map(|d| [d, n / d]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Smallest `m >= 1` with `m * point` in the subgroup.
pub fn coset_order(coset: &TorsionCoset) -> u64 {
    coset_order_of(&coset.point, &coset.subgroup)
}

/// Residues `l^c mod d` for `l` prime to `d`, sorted.
pub fn lang_multipliers(d: u64, c: u32) -> Vec<u64> {
    if d == 1 {
        return vec![0];
    }
    let set: BTreeSet<u64> = (1..d)
        .filter(|l| l.gcd(&d) == 1)
        .map(|l| pow_mod(l, c as u64, d))
        .collect();
    set.into_iter().collect()
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let mut result = 1 % m as u128;
    let mut b = base as u128 % m as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * b % m as u128;
        }
        b = b * b % m as u128;
        exp >>= 1;
    }
    result as u64
}

/// `{ l^c a : l in (Z/d)^x }` with `d` the order of `a`, sorted.
pub fn lang_orbit(ambient: &ModelAmbient, a: &[u64], c: u32) -> Result<Vec<Point>> {
    ambient.check(a)?;
    if c == 0 {
        return Err(Error::invalid("Lang exponent c must be positive"));
    }
    let d = ambient.point_order(a);
    let mut out: Vec<Point> = lang_multipliers(d, c).into_iter().map(|m| ambient.scale(m, a)).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// `q * point + subgroup`, for `q` prime to `N`.
pub fn multiply_coset(q: u64, coset: &TorsionCoset) -> Result<TorsionCoset> {
    let amb = coset.ambient();
    if q == 0 || q.gcd(&amb.n) != 1 {
        return Err(Error::invalid(format!("q = {q} is not prime to N = {}", amb.n)));
    }
    TorsionCoset::new(amb.scale(q, &coset.point), coset.subgroup.clone())
}

/// `#{ x in B : q x = 0 }`. Computed as `gcd(q, N)^(2b)`, and cross-checked
/// by enumeration whenever `B` is small enough.
pub fn torsion_count(subgroup: &ModelSubvariety, q: u64, caps: &Caps) -> Result<u64> {
    if q == 0 {
        return Err(Error::invalid("q must be positive"));
    }
    let amb = subgroup.ambient;
    let formula = q.gcd(&amb.n).pow(2 * subgroup.dim);
    if subgroup.order() <= caps.ambient_order {
        let counted = subgroup
            .elements()
            .iter()
            .filter(|x| amb.scale(q, x).iter().all(|&v| v == 0))
            .count() as u64;
        if counted != formula {
            return Err(Error::invariant(format!(
                "torsion count by enumeration {counted} differs from gcd formula {formula}"
            )));
        }
    }
    Ok(formula)
}

/// `q^(2 dim V) deg V / #B[q]`.
pub fn degree_pushforward(degree: u64, dim: u32, stab_torsion: u64, q: u64) -> Result<BigUint> {
    if degree == 0 || stab_torsion == 0 || q == 0 {
        return Err(Error::invalid("degree, stabilizer torsion and q must be positive"));
    }
    let numerator = BigUint::from(q).pow(2 * dim) * degree;
    let (quot, rem) = numerator.div_rem(&BigUint::from(stab_torsion));
    if !rem.is_zero() {
        return Err(Error::invalid(format!(
            "stabilizer torsion {stab_torsion} does not divide q^(2 dim) deg = {numerator}"
        )));
    }
    Ok(quot)
}

/// The torsion counts forced when `[q] V = [q'] V` with `q`, `q'` coprime:
/// `(q^(2 dim), q'^(2 dim), (q q')^(2 dim))`.
pub fn corhin_derive(degree: u64, dim: u32, q: u64, q_prime: u64) -> Result<(BigUint, BigUint, BigUint)> {
    if degree == 0 || q == 0 || q_prime == 0 {
        return Err(Error::invalid("degree, q and q' must be positive"));
    }
    if q.gcd(&q_prime) != 1 {
        return Err(Error::invalid(format!("q = {q} and q' = {q_prime} are not coprime")));
    }
    let e = 2 * dim;
    Ok((
        BigUint::from(q).pow(e),
        BigUint::from(q_prime).pow(e),
        BigUint::from(q).pow(e) * BigUint::from(q_prime).pow(e),
    ))
}

/// One irreducible component in a [`HindryReport`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentReport {
    pub coset: TorsionCoset,
    /// Basis of `{ x : x + C = C }`.
    pub stabilizer: Vec<Point>,
    pub stabilizer_order: u64,
    pub special: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HindryReport {
    pub vacuous: bool,
    pub q: u64,
    pub q_prime: u64,
    /// Whether `[q] V = [q'] V` as point sets.
    pub hypothesis_holds: bool,
    /// Number of distinct cosets.
    pub degree: u64,
    /// `deg(V)^(1/2) < q q'`.
    pub degree_condition: bool,
    /// Both hypotheses hold, so `V` and `[q] V` are special.
    pub conclusion: bool,
    pub components: Vec<ComponentReport>,
}

fn union_points(cosets: &[TorsionCoset]) -> BTreeSet<Point> {
    cosets.iter().flat_map(|c| c.points()).collect()
}

/// Check the hypotheses of Hindry's criterion on a union of cosets.
pub fn hindry_criterion(cosets: &[TorsionCoset], q: u64, q_prime: u64, caps: &Caps) -> Result<HindryReport> {
    let Some(first) = cosets.first() else {
        return Ok(HindryReport {
            vacuous: true,
            q,
            q_prime,
            hypothesis_holds: true,
            degree: 0,
            degree_condition: true,
            conclusion: true,
            components: Vec::new(),
        });
    };
    let amb = first.ambient();
    if cosets.iter().any(|c| c.ambient() != amb) {
        return Err(Error::invalid("cosets live in different ambient groups"));
    }
    if q == 0 || q_prime == 0 || (q * q_prime).gcd(&amb.n) != 1 {
        return Err(Error::invalid(format!("q q' = {} is not prime to N = {}", q * q_prime, amb.n)));
    }
    amb.ensure_enumerable(caps)?;
    let image = |k: u64| -> Result<Vec<TorsionCoset>> { cosets.iter().map(|c| multiply_coset(k, c)).collect() };
    let hypothesis_holds = union_points(&image(q)?) == union_points(&image(q_prime)?);

    let mut distinct: Vec<(Vec<Point>, &TorsionCoset)> = Vec::new();
    for c in cosets {
        let pts = c.points();
        if !distinct.iter().any(|(p, _)| *p == pts) {
            distinct.push((pts, c));
        }
    }
    let degree = distinct.len() as u64;
    let degree_condition = BigUint::from(degree) < BigUint::from(q * q_prime).pow(2);
    let mut components = Vec::new();
    for (pts, c) in &distinct {
        let set: BTreeSet<&Point> = pts.iter().collect();
        let stabilizer_order = amb
            .elements(caps)?
            .filter(|x| amb.add(x, &c.point) == c.point || set.contains(&amb.add(x, &c.point)))
            .filter(|x| pts.iter().all(|p| set.contains(&amb.add(x, p))))
            .count() as u64;
        if stabilizer_order != c.subgroup.order() {
            return Err(Error::invariant("coset stabilizer differs from its subgroup"));
        }
        components.push(ComponentReport {
            coset: (*c).clone(),
            stabilizer: c.subgroup.basis.clone(),
            stabilizer_order,
            special: true,
        });
    }
    Ok(HindryReport {
        vacuous: false,
        q,
        q_prime,
        hypothesis_holds,
        degree,
        degree_condition,
        conclusion: hypothesis_holds && degree_condition,
        components,
    })
}

/// Free rank-`r` summands of `(Z/p^k)^n` in Hermite form: identity on the
/// pivot columns, entries left of a row's pivot divisible by `p`.
fn local_summands(p: u64, k: u32, n: usize, r: usize) -> Vec<Vec<Vec<u64>>> {
    let q = p.pow(k);
    let mut out = Vec::new();
    for pivots in combinations(n, r) {
        // Free slots: (row, column, step, count).
        let mut slots = Vec::new();
        for (i, &c) in pivots.iter().enumerate() {
            for j in (0..n).filter(|j| !pivots.contains(j)) {
                if j < c {
                    slots.push((i, j, p, q / p));
                } else {
                    slots.push((i, j, 1, q));
                }
            }
        }
        let mut digits = vec![0u64; slots.len()];
        loop {
            let mut rows = vec![vec![0u64; n]; r];
            for (i, &c) in pivots.iter().enumerate() {
                rows[i][c] = 1 % q;
            }
            for (&(i, j, step, _), &t) in slots.iter().zip(&digits) {
                rows[i][j] = step * t;
            }
            out.push(rows);
            let mut pos = 0;
            loop {
                if pos == slots.len() {
                    break;
                }
                digits[pos] += 1;
                if digits[pos] < slots[pos].3 {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == slots.len() {
                break;
            }
        }
    }
    out
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Every direct summand `(Z/N)^(2b)` of the ambient group, in a fixed
/// canonical order, with its canonical basis.
pub fn summands(ambient: &ModelAmbient, dim: u32, caps: &Caps) -> Result<Vec<ModelSubvariety>> {
    ambient.ensure_enumerable(caps)?;
    if dim > ambient.g {
        return Err(Error::invalid("summand dimension exceeds g"));
    }
    let n = ambient.rank();
    let r = 2 * dim as usize;
    let factors = arith::factorize(ambient.n)?;
    let moduli: Vec<u64> = factors.factors().iter().map(|&(p, k)| p.pow(k)).collect();
    // CRT idempotents e_s = 1 mod q_s, 0 mod q_t.
    let idempotents: Vec<u64> = moduli
        .iter()
        .map(|&q| {
            let rest = ambient.n / q;
            let inv = mod_inverse(rest % q, q);
            (rest as u128 * inv as u128 % ambient.n as u128) as u64
        })
        .collect();
    let mut combined: Vec<Vec<Vec<u64>>> = vec![vec![vec![0; n]; r]];
    for ((&(p, k), _), &e) in factors.factors().iter().zip(&moduli).zip(&idempotents) {
        let local = local_summands(p, k, n, r);
        let mut next = Vec::with_capacity(combined.len() * local.len());
        for base in &combined {
            for rows in &local {
                let mut m = base.clone();
                for (mi, li) in m.iter_mut().zip(rows) {
                    for (x, &y) in mi.iter_mut().zip(li) {
                        *x = ((*x as u128 + e as u128 * y as u128) % ambient.n as u128) as u64;
                    }
                }
                next.push(m);
            }
        }
        combined = next;
    }
    combined
        .into_iter()
        .map(|basis| ModelSubvariety::new(*ambient, basis))
        .collect()
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let e = (a as i64).extended_gcd(&(m as i64));
    e.x.rem_euclid(m as i64) as u64
}

/// Summands of every dimension, largest first.
pub fn all_summands(ambient: &ModelAmbient, caps: &Caps) -> Result<Vec<ModelSubvariety>> {
    let mut out = Vec::new();
    for dim in (0..=ambient.g).rev() {
        out.extend(summands(ambient, dim, caps)?);
    }
    Ok(out)
}

/// A set of points of an enumerable ambient group, as a bit mask.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PointSet {
    bits: Vec<bool>,
}

impl PointSet {
    fn new(size: usize) -> Self {
        PointSet { bits: vec![false; size] }
    }

    fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    fn insert(&mut self, i: usize) {
        self.bits[i] = true;
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Precomputed addition by subgroup elements, in index form.
struct IndexedAmbient {
    ambient: ModelAmbient,
    points: Vec<Point>,
}

impl IndexedAmbient {
    fn new(ambient: ModelAmbient, caps: &Caps) -> Result<Self> {
        let points = ambient.elements(caps)?.collect();
        Ok(IndexedAmbient { ambient, points })
    }

    fn add(&self, i: usize, b: &[u64]) -> usize {
        self.ambient.encode(&self.ambient.add(&self.points[i], b))
    }

    fn lang_orbit(&self, i: usize, c: u32) -> Vec<usize> {
        let a = &self.points[i];
        let d = self.ambient.point_order(a);
        let mut out: Vec<usize> = lang_multipliers(d, c)
            .into_iter()
            .map(|m| self.ambient.encode(&self.ambient.scale(m, a)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `L a + B` as sorted indices.
    fn lang_coset(&self, i: usize, elements: &[Point], c: u32) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .lang_orbit(i, c)
            .into_iter()
            .flat_map(|x| elements.iter().map(move |b| self.add(x, b)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether `x + B` lies in `set`.
    fn coset_inside(&self, x: usize, elements: &[Point], set: &PointSet) -> bool {
        elements.iter().all(|b| set.contains(self.add(x, b)))
    }
}

/// Lang saturation of `s` together with a decomposition into Lang-stable
/// cosets `L alpha_i + B_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecialClosure {
    /// Lang exponent `c`.
    pub c: u32,
    /// All points of the closure, sorted.
    pub points: Vec<Point>,
    /// Each entry stands for `L point + subgroup`.
    pub components: Vec<TorsionCoset>,
}

/// One candidate piece `L alpha + B` inside the target set.
struct Piece {
    alpha: usize,
    subgroup: usize,
    points: Vec<usize>,
}

/// The smallest union of Lang-stable torsion cosets containing `s`.
///
/// The point set is the Lang saturation of `s`, since every Lang orbit is
/// itself a coset of the zero summand. Among all ways of writing that set
/// as such a union the one with fewest components is returned, built from
/// maximal pieces; remaining ties go to the first cover met by a
/// depth-first search over pieces in canonical order.
pub fn special_closure(ambient: &ModelAmbient, s: &[Point], c: u32, caps: &Caps) -> Result<SpecialClosure> {
    if c == 0 {
        return Err(Error::invalid("Lang exponent c must be positive"));
    }
    for p in s {
        ambient.check(p)?;
    }
    let idx = IndexedAmbient::new(*ambient, caps)?;
    let mut target = PointSet::new(idx.points.len());
    for p in s {
        for x in idx.lang_orbit(ambient.encode(p), c) {
            target.insert(x);
        }
    }
    let size = target.len();
    let subgroups: Vec<ModelSubvariety> = all_summands(ambient, caps)?
        .into_iter()
        .filter(|b| b.order() as usize <= size.max(1))
        .collect();

    let mut pieces: Vec<Piece> = Vec::new();
    for (si, b) in subgroups.iter().enumerate() {
        let elements = b.elements();
        let mut seen = PointSet::new(idx.points.len());
        for x in target.iter() {
            if seen.contains(x) || !idx.coset_inside(x, &elements, &target) {
                continue;
            }
            let points = idx.lang_coset(x, &elements, c);
            for &y in &points {
                seen.insert(y);
            }
            pieces.push(Piece {
                alpha: x,
                subgroup: si,
                points,
            });
        }
    }

    // Keep only maximal pieces; equal point sets keep the first one.
    pieces.sort_by(|a, b| b.points.len().cmp(&a.points.len()).then(a.subgroup.cmp(&b.subgroup)).then(a.alpha.cmp(&b.alpha)));
    let mut maximal: Vec<Piece> = Vec::new();
    let mut masks: Vec<PointSet> = Vec::new();
    for piece in pieces {
        let covered = masks.iter().any(|m| piece.points.iter().all(|&x| m.contains(x)));
        if !covered {
            let mut m = PointSet::new(idx.points.len());
            for &x in &piece.points {
                m.insert(x);
            }
            masks.push(m);
            maximal.push(piece);
        }
    }

    let universe: Vec<usize> = target.iter().collect();
    let chosen = min_cover(&universe, &maximal, idx.points.len(), caps)?;
    let mut components = Vec::with_capacity(chosen.len());
    for i in chosen {
        let piece = &maximal[i];
        components.push(TorsionCoset::new(idx.points[piece.alpha].clone(), subgroups[piece.subgroup].clone())?);
    }
    Ok(SpecialClosure {
        c,
        points: universe.iter().map(|&i| idx.points[i].clone()).collect(),
        components,
    })
}

/// Exact minimum set cover by iterative deepening, after taking every
/// forced piece. Returns piece indices in increasing order.
fn min_cover(universe: &[usize], pieces: &[Piece], space: usize, caps: &Caps) -> Result<Vec<usize>> {
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); space];
    for (pi, piece) in pieces.iter().enumerate() {
        for &x in &piece.points {
            covering[x].push(pi);
        }
    }
    let mut count = vec![0u32; space];
    let mut chosen = Vec::new();
    let take = |pi: usize, count: &mut Vec<u32>, chosen: &mut Vec<usize>| {
        chosen.push(pi);
        for &x in &pieces[pi].points {
            count[x] += 1;
        }
    };
    for &x in universe {
        if covering[x].is_empty() {
            return Err(Error::invariant("a closure point lies in no piece"));
        }
        if covering[x].len() == 1 && count[x] == 0 {
            take(covering[x][0], &mut count, &mut chosen);
        }
    }
    let largest = pieces.iter().map(|p| p.points.len()).max().unwrap_or(1);
    let mut nodes = 0u64;
    let mut extra = 0usize;
    loop {
        let mut path = Vec::new();
        if cover_dfs(universe, pieces, &covering, &mut count, &mut path, extra, largest, &mut nodes, caps)? {
            chosen.extend(path);
            chosen.sort_unstable();
            return Ok(chosen);
        }
        extra += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn cover_dfs(
    universe: &[usize],
    pieces: &[Piece],
    covering: &[Vec<usize>],
    count: &mut Vec<u32>,
    path: &mut Vec<usize>,
    budget: usize,
    largest: usize,
    nodes: &mut u64,
    caps: &Caps,
) -> Result<bool> {
    *nodes += 1;
    if *nodes > caps.cover_nodes {
        return Err(Error::cap("cover search nodes", *nodes, caps.cover_nodes));
    }
    let uncovered: Vec<usize> = universe.iter().copied().filter(|&x| count[x] == 0).collect();
    if uncovered.is_empty() {
        return Ok(true);
    }
    if budget == 0 || uncovered.len().div_ceil(largest) > budget {
        return Ok(false);
    }
    let pivot = *uncovered
        .iter()
        .min_by_key(|&&x| (covering[x].len(), x))
        .expect("non-empty");
    for &pi in &covering[pivot] {
        path.push(pi);
        for &x in &pieces[pi].points {
            count[x] += 1;
        }
        let found = cover_dfs(universe, pieces, covering, count, path, budget - 1, largest, nodes, caps)?;
        for &x in &pieces[pi].points {
            count[x] -= 1;
        }
        if found {
            return Ok(true);
        }
        path.pop();
    }
    Ok(false)
}

/// Points of `L alpha + B`, sorted.
pub fn lang_coset_points(coset: &TorsionCoset, c: u32) -> Result<Vec<Point>> {
    let amb = coset.ambient();
    let elements = coset.subgroup.elements();
    let mut out: Vec<Point> = lang_orbit(&amb, &coset.point, c)?
        .iter()
        .flat_map(|x| elements.iter().map(move |b| amb.add(x, b)))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Whether `l^c S = S` for every `l` prime to `N`.
pub fn is_lang_stable(ambient: &ModelAmbient, s: &BTreeSet<Point>, c: u32) -> bool {
    ambient.units().into_iter().all(|l| {
        let m = pow_mod(l, c as u64, ambient.n.max(1));
        s.iter().all(|x| s.contains(&ambient.scale(m, x)))
    })
}

/// A coset `L alpha + B` sandwiched between `L a` and `V`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyPropWitness {
    pub coset: TorsionCoset,
    /// `ord(alpha + B) <= delta_cap`.
    pub within_cap: bool,
    #[serde(serialize_with = "serde_util::big")]
    pub delta_cap: BigUint,
}

/// A coset `L alpha + B` with `L a <= L alpha + B <= V` and `ord(alpha + B)`
/// as small as possible.
///
/// Any such coset contains `a`, so it equals `L a + B`; the search runs over
/// summands `B`. Ties in the order go to the larger summand, then to the
/// earlier one in canonical order. `alpha` is the least point of the coset
/// whose own order equals the coset order.
pub fn keyprop_witness(
    ambient: &ModelAmbient,
    v: &[Point],
    a: &[u64],
    c: u32,
    delta_cap: &BigUint,
    caps: &Caps,
) -> Result<KeyPropWitness> {
    if c == 0 {
        return Err(Error::invalid("Lang exponent c must be positive"));
    }
    ambient.check(a)?;
    for p in v {
        ambient.check(p)?;
    }
    let idx = IndexedAmbient::new(*ambient, caps)?;
    let mut target = PointSet::new(idx.points.len());
    for p in v {
        target.insert(ambient.encode(p));
    }
    let ai = ambient.encode(a);
    let orbit = idx.lang_orbit(ai, c);
    if orbit.iter().any(|&x| !target.contains(x)) {
        return Err(Error::invalid("the Lang orbit of a is not contained in V"));
    }
    let size = target.len();
    let mut best: Option<(u64, u32, ModelSubvariety)> = None;
    for b in all_summands(ambient, caps)? {
        if b.order() as usize > size {
            continue;
        }
        let elements = b.elements();
        if !orbit.iter().all(|&x| idx.coset_inside(x, &elements, &target)) {
            continue;
        }
        let order = coset_order_of(a, &b);
        let better = match &best {
            None => true,
            Some((o, d, _)) => (order, std::cmp::Reverse(b.dim)) < (*o, std::cmp::Reverse(*d)),
        };
        if better {
            best = Some((order, b.dim, b));
        }
    }
    let (order, _, subgroup) = best.ok_or_else(|| Error::invariant("the zero summand always qualifies"))?;
    let elements = subgroup.elements();
    let piece = idx.lang_coset(ai, &elements, c);
    let alpha = piece
        .iter()
        .map(|&x| &idx.points[x])
        .find(|x| ambient.point_order(x) == order)
        .ok_or_else(|| Error::invariant("no point of the coset has the coset order"))?
        .clone();
    let coset = TorsionCoset::new(alpha, subgroup)?;
    if coset.order != order {
        return Err(Error::invariant("coset order changed with the representative"));
    }
    let sandwich = lang_coset_points(&coset, c)?;
    let sandwich_idx: BTreeSet<usize> = sandwich.iter().map(|p| ambient.encode(p)).collect();
    if !orbit.iter().all(|x| sandwich_idx.contains(x)) || !sandwich_idx.iter().all(|&x| target.contains(x)) {
        return Err(Error::invariant("witness coset violates L a <= L alpha + B <= V"));
    }
    Ok(KeyPropWitness {
        within_cap: BigUint::from(order) <= *delta_cap,
        coset,
        delta_cap: delta_cap.clone(),
    })
}

/// Number of summands of rank `r` in `(Z/p^k)^n`, by the Grassmannian
/// count times `p^((k-1) r (n-r))`.
pub fn summand_count(p: u64, k: u32, n: u32, r: u32) -> BigUint {
    if r > n {
        return BigUint::from(0u32);
    }
    let p_big = BigUint::from(p);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..r {
        num *= p_big.pow(n - i) - 1u32;
        den *= p_big.pow(i + 1) - 1u32;
    }
    num / den * p_big.pow((k - 1) * r * (n - r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amb(n: u64, g: u32) -> ModelAmbient {
        ModelAmbient::new(n, g).unwrap()
    }

    fn sub(a: ModelAmbient, basis: &[&[u64]]) -> ModelSubvariety {
        ModelSubvariety::new(a, basis.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn lang_orbit_examples() {
        let a = amb(5, 1);
        assert_eq!(lang_orbit(&a, &[0, 0], 1).unwrap(), vec![vec![0, 0]]);
        assert_eq!(
            lang_orbit(&a, &[1, 0], 1).unwrap(),
            vec![vec![1, 0], vec![2, 0], vec![3, 0], vec![4, 0]]
        );
        assert_eq!(lang_orbit(&a, &[1, 0], 2).unwrap(), vec![vec![1, 0], vec![4, 0]]);
    }

    #[test]
    fn coset_order_examples() {
        let a = amb(6, 2);
        let b = sub(a, &[&[0, 0, 1, 0], &[0, 0, 0, 1]]);
        assert_eq!(TorsionCoset::new(vec![0, 0, 3, 4], b.clone()).unwrap().order, 1);
        assert_eq!(TorsionCoset::new(vec![1, 0, 0, 0], b.clone()).unwrap().order, 6);
        assert_eq!(TorsionCoset::new(vec![2, 0, 0, 0], b).unwrap().order, 3);
    }

    #[test]
    fn multiply_examples() {
        let a = amb(5, 1);
        let x = TorsionCoset::new(vec![1, 3], ModelSubvariety::zero(a)).unwrap();
        assert_eq!(multiply_coset(1, &x).unwrap(), x);
        assert_eq!(multiply_coset(7, &x).unwrap().point, vec![2, 1]);
        let y = TorsionCoset::new(vec![1, 0], ModelSubvariety::zero(amb(6, 1))).unwrap();
        assert!(multiply_coset(2, &y).is_err());
    }

    #[test]
    fn torsion_count_examples() {
        let caps = Caps::default();
        let b = sub(amb(6, 2), &[&[1, 0, 0, 0], &[0, 1, 0, 0]]);
        assert_eq!(torsion_count(&b, 1, &caps).unwrap(), 1);
        assert_eq!(torsion_count(&b, 2, &caps).unwrap(), 4);
        let b = sub(amb(15, 2), &[&[1, 0, 0, 0], &[0, 1, 0, 0]]);
        assert_eq!(torsion_count(&b, 2, &caps).unwrap(), 1);
    }

    #[test]
    fn subvariety_validation() {
        assert!(ModelSubvariety::new(amb(6, 2), vec![vec![2, 0, 0, 0], vec![0, 1, 0, 0]]).is_err());
        assert!(ModelSubvariety::new(amb(6, 2), vec![vec![5, 0, 0, 0], vec![0, 1, 0, 0]]).is_ok());
        assert!(ModelSubvariety::new(amb(6, 2), vec![vec![1, 0, 0, 0]]).is_err());
        assert!(ModelSubvariety::new(amb(6, 2), vec![vec![1, 2, 0, 0], vec![2, 4, 0, 0]]).is_err());
    }

    #[test]
    fn pushforward_examples() {
        assert_eq!(degree_pushforward(1, 1, 4, 2).unwrap(), 1u32.into());
        assert_eq!(degree_pushforward(3, 1, 4, 2).unwrap(), 3u32.into());
        assert_eq!(degree_pushforward(1, 0, 1, 7).unwrap(), 1u32.into());
        assert!(degree_pushforward(1, 1, 3, 2).is_err());
    }

    #[test]
    fn pushforward_matches_model() {
        // N = 15, g = 2, b = 1, q | N: [q](a + B) is the single coset
        // qa + qB, and the fibres of [q] on B have #B[q] points.
        let a = amb(15, 2);
        let b = sub(a, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]);
        let caps = Caps::default();
        for q in [3u64, 5, 15] {
            let coset = TorsionCoset::new(vec![0, 0, 2, 7], b.clone()).unwrap();
            let image: BTreeSet<Point> = coset.points().iter().map(|x| a.scale(q, x)).collect();
            let qa = a.scale(q, &coset.point);
            let translate: BTreeSet<Point> = b.elements().iter().map(|x| a.add(&qa, &a.scale(q, x))).collect();
            assert_eq!(image, translate);
            let stab = torsion_count(&b, q, &caps).unwrap();
            assert_eq!(image.len() as u64 * stab, b.order());
            assert_eq!(degree_pushforward(1, 1, q.pow(2), q).unwrap(), 1u32.into());
        }
    }

    #[test]
    fn corhin_examples() {
        let four = BigUint::from(4u32);
        assert_eq!(corhin_derive(1, 1, 2, 3).unwrap(), (four, 9u32.into(), 36u32.into()));
        let one = BigUint::one();
        assert_eq!(corhin_derive(5, 0, 7, 11).unwrap(), (one.clone(), one.clone(), one));
        assert!(corhin_derive(1, 1, 2, 4).is_err());
    }

    #[test]
    fn hindry_examples() {
        let caps = Caps::default();
        let a = amb(5, 1);
        let inside = TorsionCoset::new(vec![0, 0], ModelSubvariety::zero(a)).unwrap();
        let r = hindry_criterion(&[inside], 2, 3, &caps).unwrap();
        assert!(r.hypothesis_holds && r.conclusion);
        assert_eq!(r.components[0].stabilizer_order, 1);
        let outside = TorsionCoset::new(vec![1, 0], ModelSubvariety::zero(a)).unwrap();
        assert_eq!(outside.order, 5);
        let r = hindry_criterion(&[outside], 2, 3, &caps).unwrap();
        assert!(!r.hypothesis_holds && !r.conclusion);
        assert!(hindry_criterion(&[], 2, 3, &caps).unwrap().vacuous);
        let mixed = [
            TorsionCoset::new(vec![0, 0], ModelSubvariety::zero(a)).unwrap(),
            TorsionCoset::new(vec![0, 0], ModelSubvariety::zero(amb(7, 1))).unwrap(),
        ];
        assert!(hindry_criterion(&mixed, 2, 3, &caps).is_err());
    }

    #[test]
    fn summand_counts() {
        let caps = Caps::default();
        assert_eq!(summands(&amb(12, 2), 1, &caps).unwrap().len(), 72_800);
        assert_eq!(summand_count(2, 2, 4, 2) * summand_count(3, 1, 4, 2), BigUint::from(72_800u32));
        assert_eq!(summands(&amb(4, 1), 1, &caps).unwrap().len(), 1);
        assert_eq!(summands(&amb(4, 2), 1, &caps).unwrap().len() as u64, 35 * 16);
        assert_eq!(summands(&amb(1, 1), 1, &caps).unwrap().len(), 1);
    }

    #[test]
    fn special_closure_examples() {
        let caps = Caps::default();
        let a = amb(5, 1);
        let z = special_closure(&a, &[vec![0, 0]], 1, &caps).unwrap();
        assert_eq!(z.points, vec![vec![0, 0]]);
        assert_eq!(z.components.len(), 1);
        let orbit = lang_orbit(&a, &[1, 0], 1).unwrap();
        let o = special_closure(&a, &orbit, 1, &caps).unwrap();
        assert_eq!(o.points, orbit);
        assert_eq!(o.components.len(), 1);
        assert_eq!(o.components[0].subgroup.dim, 0);
        let b = amb(3, 1);
        let all: Vec<Point> = b.elements(&caps).unwrap().collect();
        let f = special_closure(&b, &all, 1, &caps).unwrap();
        assert_eq!(f.points, all);
        assert_eq!(f.components.len(), 1);
        assert_eq!(f.components[0].subgroup.dim, 1);
    }

    #[test]
    fn keyprop_examples() {
        let caps = Caps::default();
        let cap = BigUint::from(1000u32);
        let a = amb(12, 1);
        let point = vec![1, 2];
        let orbit = lang_orbit(&a, &point, 1).unwrap();
        let w = keyprop_witness(&a, &orbit, &point, 1, &cap, &caps).unwrap();
        assert_eq!(w.coset.subgroup.dim, 0);
        assert!(orbit.contains(&w.coset.point));
        let all: Vec<Point> = a.elements(&caps).unwrap().collect();
        let w = keyprop_witness(&a, &all, &point, 1, &cap, &caps).unwrap();
        assert_eq!((w.coset.order, w.coset.point.clone(), w.coset.subgroup.dim), (1, vec![0, 0], 1));
        assert!(keyprop_witness(&a, &[vec![0, 0]], &point, 1, &cap, &caps).is_err());
    }

    #[test]
    fn keyprop_prefers_smaller_order() {
        // In (Z/12)^4 take B = span(e3, e4) and alpha' = (6, 0, 0, 0) of
        // order 2; a = alpha' + (0, 0, 1, 5) has order 12 but lies in
        // L alpha' + B, whose coset order is 2.
        let caps = Caps::default();
        let a = amb(12, 2);
        let b = sub(a, &[&[0, 0, 1, 0], &[0, 0, 0, 1]]);
        let alpha = TorsionCoset::new(vec![6, 0, 0, 0], b).unwrap();
        let point = vec![6, 0, 1, 5];
        let mut v: BTreeSet<Point> = lang_coset_points(&alpha, 1).unwrap().into_iter().collect();
        v.extend(lang_orbit(&a, &point, 1).unwrap());
        let v: Vec<Point> = v.into_iter().collect();
        let w = keyprop_witness(&a, &v, &point, 1, &BigUint::from(2u32), &caps).unwrap();
        assert_eq!(w.coset.order, 2);
        assert_eq!(w.coset.point, vec![6, 0, 0, 0]);
        assert_eq!(w.coset.subgroup.basis, alpha.subgroup.basis);
        assert!(w.within_cap);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn ambient() -> impl Strategy<Value = ModelAmbient> {
        prop_oneof![
            (2u64..30).prop_map(|n| ModelAmbient::new(n, 1).unwrap()),
            (2u64..6).prop_map(|n| ModelAmbient::new(n, 2).unwrap()),
        ]
    }

    fn point(amb: &ModelAmbient, seed: &[u64]) -> Point {
        (0..amb.rank()).map(|i| seed[i] % amb.n).collect()
    }

    proptest! {
        #[test]
        fn lang_orbit_size(n in 2u64..100, x in 0u64..100, c in 1u32..4) {
            let amb = ModelAmbient::new(n, 1).unwrap();
            let a = vec![x % n, 0];
            let d = amb.point_order(&a);
            let units: Vec<u64> = (1..=d).filter(|l| l.gcd(&d) == 1).collect();
            let fixed = units.iter().filter(|&&l| (0..c).fold(1u64, |acc, _| acc * l % d) == 1 % d).count();
            let orbit = lang_orbit(&amb, &a, c).unwrap();
            prop_assert_eq!(orbit.len(), units.len() / fixed);
            prop_assert_eq!(orbit, oracle::lang_orbit(n, &a, c));
        }

        #[test]
        fn multiply_coset_composes(amb in ambient(), seed in prop::collection::vec(0u64..1000, 4), q1 in 1u64..40, q2 in 1u64..40, full in any::<bool>()) {
            prop_assume!(q1.gcd(&amb.n) == 1 && q2.gcd(&amb.n) == 1);
            let sub = if full { ModelSubvariety::full(amb) } else { ModelSubvariety::zero(amb) };
            let x = TorsionCoset::new(point(&amb, &seed), sub.clone()).unwrap();
            let both = multiply_coset(q1 * q2, &x).unwrap();
            let nested = multiply_coset(q1, &multiply_coset(q2, &x).unwrap()).unwrap();
            prop_assert_eq!(both.points(), nested.points());
            // [q] permutes the cosets of the subgroup.
            let cosets: BTreeSet<Vec<Point>> = amb
                .elements(&Caps::default())
                .unwrap()
                .map(|p| TorsionCoset::new(p, sub.clone()).unwrap().points())
                .collect();
            let images: BTreeSet<Vec<Point>> = cosets
                .iter()
                .map(|c| multiply_coset(q1, &TorsionCoset::new(c[0].clone(), sub.clone()).unwrap()).unwrap().points())
                .collect();
            prop_assert_eq!(cosets, images);
        }

        #[test]
        fn torsion_count_formula(amb in ambient(), q in 1u64..30) {
            for sub in all_summands(&amb, &Caps::default()).unwrap().into_iter().take(20) {
                let brute = sub.elements().iter().filter(|x| amb.scale(q, x).iter().all(|&v| v == 0)).count() as u64;
                prop_assert_eq!(torsion_count(&sub, q, &Caps::default()).unwrap(), brute);
            }
        }

        #[test]
        fn closure_is_closure_operator(amb in ambient(), seeds in prop::collection::vec(prop::collection::vec(0u64..1000, 4), 1..4), extra in prop::collection::vec(0u64..1000, 4), c in 1u32..3) {
            let caps = Caps::default();
            let s: Vec<Point> = seeds.iter().map(|x| point(&amb, x)).collect();
            let cl = special_closure(&amb, &s, c, &caps).unwrap();
            let set: BTreeSet<Point> = cl.points.iter().cloned().collect();
            prop_assert!(s.iter().all(|x| set.contains(x)));
            prop_assert_eq!(&special_closure(&amb, &cl.points, c, &caps).unwrap().points, &cl.points);
            let mut bigger = s.clone();
            bigger.push(point(&amb, &extra));
            let cl_big = special_closure(&amb, &bigger, c, &caps).unwrap();
            prop_assert!(cl.points.iter().all(|x| cl_big.points.binary_search(x).is_ok()));
            prop_assert!(is_lang_stable(&amb, &set, c));
            prop_assert!(oracle::lang_stable(amb.n, &cl.points, c));

            let a = &s[0];
            let w = keyprop_witness(&amb, &cl.points, a, c, &BigUint::from(amb.n), &caps).unwrap();
            let coset: BTreeSet<Point> = lang_coset_points(&w.coset, c).unwrap().into_iter().collect();
            prop_assert!(lang_orbit(&amb, a, c).unwrap().iter().all(|x| coset.contains(x)));
            prop_assert!(coset.is_subset(&set));
        }
    }
}
