//! Orbit densities of matrix groups over a prime field `F_l`: the extremal
//! subspace of a density-maximization problem and the index bound for its
//! stabilizer.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::arith;
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::serde_util;

/// A vector of `F_l^dim`, entries in `[0, l)`.
pub type FVector = Vec<u32>;

fn inv_mod(a: u32, ell: u32) -> u32 {
    let mut result = 1u64;
    let mut base = a as u64 % ell as u64;
    let mut e = ell - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % ell as u64;
        }
        base = base * base % ell as u64;
        e >>= 1;
    }
    result as u32
}

/// Row-reduced echelon form of the span of `rows`, zero rows dropped.
fn rref(mut rows: Vec<FVector>, ell: u32) -> Vec<FVector> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let inv = inv_mod(rows[rank][col], ell);
        for v in rows[rank].iter_mut() {
            *v = (*v as u64 * inv as u64 % ell as u64) as u32;
        }
        for i in 0..rows.len() {
            if i != rank && rows[i][col] != 0 {
                let f = rows[i][col] as u64;
                for j in 0..cols {
                    let sub = f * rows[rank][j] as u64 % ell as u64;
                    rows[i][j] = ((rows[i][j] as u64 + ell as u64 - sub) % ell as u64) as u32;
                }
            }
        }
        rank += 1;
    }
    rows.truncate(rank);
    rows
}

/// A square matrix over `F_l`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FMatrix {
    dim: usize,
    ell: u32,
    entries: Vec<u32>,
}

impl Serialize for FMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl FMatrix {
    /// Reduce an integer matrix modulo `ell`.
    pub fn from_rows(rows: &[Vec<i64>], ell: u32) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("matrix is not square"));
        }
        let entries = rows
            .iter()
            .flatten()
            .map(|&v| v.rem_euclid(ell as i64) as u32)
            .collect();
        Ok(FMatrix { dim, ell, entries })
    }

    pub fn identity(dim: usize, ell: u32) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        FMatrix { dim, ell, entries }
    }

    pub fn rows(&self) -> Vec<FVector> {
        self.entries.chunks(self.dim.max(1)).map(<[u32]>::to_vec).collect()
    }

    pub fn mul(&self, other: &FMatrix) -> FMatrix {
        let n = self.dim;
        let l = self.ell as u64;
        let mut entries = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                let s: u64 = (0..n)
                    .map(|k| self.entries[i * n + k] as u64 * other.entries[k * n + j] as u64)
                    .sum();
                entries[i * n + j] = (s % l) as u32;
            }
        }
        FMatrix {
            dim: n,
            ell: self.ell,
            entries,
        }
    }

    pub fn apply(&self, v: &[u32]) -> FVector {
        let n = self.dim;
        let l = self.ell as u64;
        (0..n)
            .map(|i| ((0..n).map(|k| self.entries[i * n + k] as u64 * v[k] as u64).sum::<u64>() % l) as u32)
            .collect()
    }

    pub fn is_invertible(&self) -> bool {
        rref(self.rows(), self.ell).len() == self.dim
    }
}

/// The group generated by a list of invertible matrices.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixGroup {
    pub ell: u32,
    pub dim: usize,
    pub generators: Vec<FMatrix>,
    /// Elements in breadth-first order from the identity.
    #[serde(skip)]
    pub elements: Vec<FMatrix>,
}

impl MatrixGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

fn check_prime(ell: u32) -> Result<()> {
    if ell < 2 || arith::factorize(ell as u64)?.factors() != [(ell as u64, 1)] {
        return Err(Error::invalid(format!("{ell} is not prime")));
    }
    Ok(())
}

/// Breadth-first closure of `gens` under left multiplication.
pub fn generate_group(gens: &[Vec<Vec<i64>>], ell: u32, dim: usize, caps: &Caps) -> Result<MatrixGroup> {
    check_prime(ell)?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let mut generators = Vec::with_capacity(gens.len());
    for (i, g) in gens.iter().enumerate() {
        let m = FMatrix::from_rows(g, ell)?;
        if m.dim != dim {
            return Err(Error::invalid(format!("generator {i} is not {dim}x{dim}")));
        }
        if !m.is_invertible() {
            return Err(Error::invalid(format!("generator {i} is singular modulo {ell}")));
        }
        generators.push(m);
    }
    let identity = FMatrix::identity(dim, ell);
    let mut seen: HashSet<FMatrix> = HashSet::new();
    seen.insert(identity.clone());
    let mut elements = vec![identity];
    let mut head = 0;
    while head < elements.len() {
        let h = elements[head].clone();
        head += 1;
        for g in &generators {
            let next = g.mul(&h);
            if seen.insert(next.clone()) {
                elements.push(next);
                if elements.len() > caps.group_size {
                    return Err(Error::cap("matrix group order", format!("more than {}", caps.group_size), caps.group_size));
                }
            }
        }
    }
    Ok(MatrixGroup {
        ell,
        dim,
        generators,
        elements,
    })
}

fn check_vector(group: &MatrixGroup, a: &[u32]) -> Result<()> {
    if a.len() != group.dim || a.iter().any(|&v| v >= group.ell) {
        return Err(Error::invalid("vector does not lie in F_l^dim"));
    }
    Ok(())
}

/// `G a`, sorted.
pub fn orbit(group: &MatrixGroup, a: &[u32]) -> Result<Vec<FVector>> {
    check_vector(group, a)?;
    let mut out: Vec<FVector> = group.elements.iter().map(|g| g.apply(a)).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// A subspace of `F_l^dim` held by its reduced echelon basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FSubspace {
    #[serde(skip)]
    pub ell: u32,
    #[serde(skip)]
    pub ambient_dim: usize,
    pub basis: Vec<FVector>,
}

impl FSubspace {
    pub fn span(ell: u32, ambient_dim: usize, vectors: &[Vec<i64>]) -> Result<Self> {
        check_prime(ell)?;
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::invalid("spanning vector has the wrong length"));
        }
        let rows = vectors
            .iter()
            .map(|v| v.iter().map(|&x| x.rem_euclid(ell as i64) as u32).collect())
            .collect();
        Ok(Self::from_reduced(ell, ambient_dim, rows))
    }

    fn from_reduced(ell: u32, ambient_dim: usize, rows: Vec<FVector>) -> Self {
        FSubspace {
            ell,
            ambient_dim,
            basis: rref(rows, ell),
        }
    }

    pub fn full(ell: u32, ambient_dim: usize) -> Self {
        FSubspace {
            ell,
            ambient_dim,
            basis: FMatrix::identity(ambient_dim, ell).rows(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        rref(rows, self.ell).len() == self.dim()
    }

    pub fn is_subspace_of(&self, other: &FSubspace) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }

    /// `g W`.
    pub fn image(&self, g: &FMatrix) -> FSubspace {
        FSubspace::from_reduced(self.ell, self.ambient_dim, self.basis.iter().map(|b| g.apply(b)).collect())
    }

    /// All points, enumerated by coefficient vectors.
    pub fn points(&self) -> Vec<FVector> {
        let k = self.dim();
        let count = (self.ell as usize).pow(k as u32);
        let mut out = Vec::with_capacity(count);
        let mut coeffs = vec![0u32; k];
        for _ in 0..count {
            let mut p = vec![0u32; self.ambient_dim];
            for (c, b) in coeffs.iter().zip(&self.basis) {
                for (pj, bj) in p.iter_mut().zip(b) {
                    *pj = ((*pj as u64 + *c as u64 * *bj as u64) % self.ell as u64) as u32;
                }
            }
            out.push(p);
            for c in coeffs.iter_mut() {
                *c += 1;
                if *c < self.ell {
                    break;
                }
                *c = 0;
            }
        }
        out
    }
}

fn encode(v: &[u32], ell: u32) -> usize {
    v.iter().fold(0usize, |acc, &x| acc * ell as usize + x as usize)
}

/// Every subspace of `F_l^dim`, ordered by dimension and then by reduced
/// echelon basis, with point masks for fast density counts.
#[derive(Debug, Clone)]
pub struct SubspaceLattice {
    pub ell: u32,
    pub dim: usize,
    pub subspaces: Vec<FSubspace>,
    masks: Vec<Vec<bool>>,
    index: HashMap<Vec<FVector>, usize>,
}

impl SubspaceLattice {
    pub fn new(ell: u32, dim: usize, caps: &Caps) -> Result<Self> {
        check_prime(ell)?;
        let size = (ell as u64).checked_pow(dim as u32).unwrap_or(u64::MAX);
        if size > caps.lattice {
            return Err(Error::cap("subspace lattice l^dim", size, caps.lattice));
        }
        let mut subspaces = Vec::new();
        for k in 0..=dim {
            for pivots in pivot_sets(dim, k) {
                let mut slots = Vec::new();
                for (i, &c) in pivots.iter().enumerate() {
                    for j in (c + 1..dim).filter(|j| !pivots.contains(j)) {
                        slots.push((i, j));
                    }
                }
                let total = (ell as usize).pow(slots.len() as u32);
                for mut code in 0..total {
                    let mut rows = vec![vec![0u32; dim]; k];
                    for (i, &c) in pivots.iter().enumerate() {
                        rows[i][c] = 1;
                    }
                    for &(i, j) in slots.iter().rev() {
                        rows[i][j] = (code % ell as usize) as u32;
                        code /= ell as usize;
                    }
                    subspaces.push(FSubspace {
                        ell,
                        ambient_dim: dim,
                        basis: rows,
                    });
                }
            }
        }
        subspaces.sort_by(|a, b| a.dim().cmp(&b.dim()).then_with(|| a.basis.cmp(&b.basis)));
        let masks = subspaces
            .iter()
            .map(|s| {
                let mut m = vec![false; size as usize];
                for p in s.points() {
                    m[encode(&p, ell)] = true;
                }
                m
            })
            .collect();
        let index = subspaces.iter().enumerate().map(|(i, s)| (s.basis.clone(), i)).collect();
        Ok(SubspaceLattice {
            ell,
            dim,
            subspaces,
            masks,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn index_of(&self, w: &FSubspace) -> Option<usize> {
        self.index.get(&w.basis).copied()
    }

    pub fn contains_point(&self, w: usize, v: &[u32]) -> bool {
        self.masks[w][encode(v, self.ell)]
    }

    /// Whether subspace `a` lies in subspace `b`.
    pub fn is_sub(&self, a: usize, b: usize) -> bool {
        self.subspaces[a].basis.iter().all(|v| self.contains_point(b, v))
    }

    fn count_in(&self, w: usize, points: &[FVector]) -> usize {
        points.iter().filter(|p| self.contains_point(w, p)).count()
    }
}

fn pivot_sets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `#(G a cap W) / #(G a)`.
pub fn epsilon(group: &MatrixGroup, a: &[u32], w: &FSubspace) -> Result<BigRational> {
    let orb = orbit(group, a)?;
    let inside = orb.iter().filter(|p| w.contains(p)).count();
    Ok(BigRational::new(inside.into(), orb.len().into()))
}

/// Whether `(s1/t)^(4^d1) > (s2/t)^(4^d2)`, exactly.
fn density_power_gt(s1: usize, d1: usize, s2: usize, d2: usize, t: usize) -> bool {
    let e1 = 4u32.pow(d1 as u32);
    let e2 = 4u32.pow(d2 as u32);
    let lhs = BigUint::from(s1).pow(e1) * BigUint::from(t).pow(e2);
    let rhs = BigUint::from(s2).pow(e2) * BigUint::from(t).pow(e1);
    lhs > rhs
}

/// Per-group cache of subspace images under the group.
pub struct OrbitAnalyzer<'a> {
    pub group: &'a MatrixGroup,
    pub lattice: &'a SubspaceLattice,
    /// For each subspace, the indices of the `g` with `g W = W`, and the
    /// distinct translates `g W`.
    images: HashMap<usize, (Vec<usize>, Vec<usize>)>,
    orbits: HashMap<FVector, Vec<FVector>>,
}

/// The corollary witness: `g a` in `W` and `H g a` inside `W` for
/// `H = Stab_G(W)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorollaryWitness {
    pub g: FMatrix,
    pub h_order: usize,
    pub orbit_inside: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitDensityReport {
    pub ell: u32,
    pub dim: usize,
    pub a: FVector,
    pub orbit: Vec<FVector>,
    pub group_order: usize,
    #[serde(rename = "V")]
    pub v: FSubspace,
    #[serde(rename = "C", serialize_with = "serde_util::rational")]
    pub c: BigRational,
    #[serde(rename = "W")]
    pub w: FSubspace,
    #[serde(serialize_with = "serde_util::rational")]
    pub epsilon_v: BigRational,
    #[serde(serialize_with = "serde_util::rational")]
    pub epsilon_w: BigRational,
    pub stab_order: usize,
    pub stab_index: usize,
    /// `3 C^(4^dim V)`.
    #[serde(serialize_with = "serde_util::rational")]
    pub bound: BigRational,
    pub bound_holds: bool,
    /// `eps(W') < eps(W)^(4^(dim W - dim W'))` for every proper `W' < W`.
    pub optimality_holds: bool,
    /// `eps(W') < eps(W)^4` for every proper `W' < W`.
    pub optimality_quartic_holds: bool,
    pub generated_by_orbit: bool,
    /// `#(gS cap g'S) < eps(W)^4 #(G a)` for `g`, `g'` in distinct cosets of
    /// the stabilizer, `S = G a cap W`.
    pub intersection_bound_holds: bool,
    pub witness: CorollaryWitness,
}

impl<'a> OrbitAnalyzer<'a> {
    pub fn new(group: &'a MatrixGroup, lattice: &'a SubspaceLattice) -> Result<Self> {
        if group.ell != lattice.ell || group.dim != lattice.dim {
            return Err(Error::invalid("group and lattice live over different spaces"));
        }
        Ok(OrbitAnalyzer {
            group,
            lattice,
            images: HashMap::new(),
            orbits: HashMap::new(),
        })
    }

    fn images(&mut self, w: usize) -> &(Vec<usize>, Vec<usize>) {
        let (group, lattice) = (self.group, self.lattice);
        self.images.entry(w).or_insert_with(|| {
            let mut fixed = Vec::new();
            let mut seen = vec![false; lattice.len()];
            let mut distinct = Vec::new();
            for (i, g) in group.elements.iter().enumerate() {
                let image = lattice
                    .index_of(&lattice.subspaces[w].image(g))
                    .expect("lattice holds every subspace");
                if image == w {
                    fixed.push(i);
                }
                if !seen[image] {
                    seen[image] = true;
                    distinct.push(image);
                }
            }
            (fixed, distinct)
        })
    }

    /// The extremal subspace `W <= V` for the orbit of `a`, as a lattice index.
    pub fn extremal(&self, a: &[u32], v: usize) -> Result<usize> {
        let orb = orbit(self.group, a)?;
        self.extremal_for_orbit(&orb, v)
    }

    fn extremal_for_orbit(&self, orb: &[FVector], v: usize) -> Result<usize> {
        let lattice = self.lattice;
        if lattice.count_in(v, orb) == 0 {
            return Err(Error::invalid("the orbit does not meet V"));
        }
        let t = orb.len();
        let mut best: Option<(usize, usize)> = None;
        // Lattice order is dimension first, then basis, so the first
        // strict maximum is the tie-break winner.
        for w in (0..lattice.len()).filter(|&w| lattice.is_sub(w, v)) {
            let s = lattice.count_in(w, orb);
            if s == 0 {
                continue;
            }
            let d = lattice.subspaces[w].dim();
            let better = match best {
                None => true,
                Some((bw, bs)) => density_power_gt(s, d, bs, lattice.subspaces[bw].dim(), t),
            };
            if better {
                best = Some((w, s));
            }
        }
        best.map(|(w, _)| w).ok_or_else(|| Error::invariant("no subspace of V meets the orbit"))
    }

    /// Full report for `a`, `V` and the constant `C` (default `1/eps(V)`).
    fn cached_orbit(&mut self, a: &[u32]) -> Result<Vec<FVector>> {
        if let Some(o) = self.orbits.get(a) {
            return Ok(o.clone());
        }
        let o = orbit(self.group, a)?;
        self.orbits.insert(a.to_vec(), o.clone());
        Ok(o)
    }

    pub fn report(&mut self, a: &[u32], v: usize, c: Option<&BigRational>) -> Result<OrbitDensityReport> {
        let orb = self.cached_orbit(a)?;
        let t = orb.len();
        let lattice = self.lattice;
        let s_v = lattice.count_in(v, &orb);
        if s_v == 0 {
            return Err(Error::invalid("the orbit does not meet V"));
        }
        let epsilon_v = BigRational::new(s_v.into(), t.into());
        let c = match c {
            Some(c) => c.clone(),
            None => epsilon_v.recip(),
        };
        if c < BigRational::one() {
            return Err(Error::invalid("C must be at least 1"));
        }
        if &c * &epsilon_v < BigRational::one() {
            return Err(Error::invalid("#(G a cap V) < #(G a) / C"));
        }
        let w = self.extremal_for_orbit(&orb, v)?;
        let w_space = lattice.subspaces[w].clone();
        let d_w = w_space.dim();
        let s_w = lattice.count_in(w, &orb);
        let epsilon_w = BigRational::new(s_w.into(), t.into());

        let mut optimality_holds = true;
        let mut optimality_quartic_holds = true;
        for w2 in (0..lattice.len()).filter(|&x| x != w && lattice.is_sub(x, w)) {
            let s2 = lattice.count_in(w2, &orb);
            let gap = d_w - lattice.subspaces[w2].dim();
            // s2/t < (s_w/t)^(4^gap)
            let e = 4u32.pow(gap as u32);
            let lhs = BigUint::from(s2) * BigUint::from(t).pow(e);
            let rhs = BigUint::from(s_w).pow(e) * BigUint::from(t);
            optimality_holds &= lhs < rhs;
            let lhs4 = BigUint::from(s2) * BigUint::from(t).pow(4);
            let rhs4 = BigUint::from(s_w).pow(4) * BigUint::from(t);
            optimality_quartic_holds &= lhs4 < rhs4;
        }
        let generated_by_orbit = {
            let inside: Vec<FVector> = orb.iter().filter(|p| lattice.contains_point(w, p)).cloned().collect();
            rref(inside, lattice.ell) == w_space.basis
        };

        let (stabilizer, translates) = self.images(w).clone();
        let stab_order = stabilizer.len();
        let group_order = self.group.order();
        if group_order % stab_order != 0 {
            return Err(Error::invariant("stabilizer order does not divide the group order"));
        }
        let stab_index = group_order / stab_order;
        if stab_index != translates.len() {
            return Err(Error::invariant("orbit-stabilizer count mismatch"));
        }
        let e = 4u32.pow(lattice.subspaces[v].dim() as u32);
        let bound = BigRational::from_integer(3.into()) * pow_rational(&c, e);
        let bound_holds = BigRational::from_integer(stab_index.into()) <= bound;

        // gS = G a cap gW, so pairwise intersections only depend on the
        // distinct translates of W.
        let mut intersection_bound_holds = true;
        let t_cubed = BigUint::from(t).pow(3);
        let sw4 = BigUint::from(s_w).pow(4);
        for (i, &x) in translates.iter().enumerate() {
            for &y in &translates[i + 1..] {
                let both = orb
                    .iter()
                    .filter(|p| lattice.contains_point(x, p) && lattice.contains_point(y, p))
                    .count();
                // both / t < (s_w / t)^4
                intersection_bound_holds &= BigUint::from(both) * &t_cubed < sw4;
            }
        }

        let g = self
            .group
            .elements
            .iter()
            .find(|g| lattice.contains_point(w, &g.apply(a)))
            .ok_or_else(|| Error::invariant("no group element moves a into W"))?
            .clone();
        let ga = g.apply(a);
        let orbit_inside = stabilizer
            .iter()
            .all(|&h| lattice.contains_point(w, &self.group.elements[h].apply(&ga)));

        Ok(OrbitDensityReport {
            ell: lattice.ell,
            dim: lattice.dim,
            a: a.to_vec(),
            orbit: orb,
            group_order,
            v: lattice.subspaces[v].clone(),
            c,
            w: w_space,
            epsilon_v,
            epsilon_w,
            stab_order,
            stab_index,
            bound,
            bound_holds,
            optimality_holds,
            optimality_quartic_holds,
            generated_by_orbit,
            intersection_bound_holds,
            witness: CorollaryWitness {
                g,
                h_order: stab_order,
                orbit_inside,
            },
        })
    }
}

fn pow_rational(x: &BigRational, e: u32) -> BigRational {
    BigRational::new(x.numer().pow(e), x.denom().pow(e))
}

/// Extremal subspace of `V` for the orbit of `a`.
pub fn extremal_subspace(group: &MatrixGroup, a: &[u32], v: &FSubspace, caps: &Caps) -> Result<FSubspace> {
    let lattice = SubspaceLattice::new(group.ell, group.dim, caps)?;
    let vi = lattice
        .index_of(v)
        .ok_or_else(|| Error::invalid("V does not live in the group's space"))?;
    let analyzer = OrbitAnalyzer::new(group, &lattice)?;
    Ok(lattice.subspaces[analyzer.extremal(a, vi)?].clone())
}

/// Build the density report for `a`, `V` and `C`.
pub fn verify_bound(
    group: &MatrixGroup,
    a: &[u32],
    v: &FSubspace,
    c: Option<&BigRational>,
    caps: &Caps,
) -> Result<OrbitDensityReport> {
    let lattice = SubspaceLattice::new(group.ell, group.dim, caps)?;
    let vi = lattice
        .index_of(v)
        .ok_or_else(|| Error::invalid("V does not live in the group's space"))?;
    OrbitAnalyzer::new(group, &lattice)?.report(a, vi, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(gens: &[Vec<Vec<i64>>], ell: u32, dim: usize) -> MatrixGroup {
        generate_group(gens, ell, dim, &Caps::default()).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn generate_examples() {
        assert_eq!(group(&[vec![vec![1, 0], vec![0, 1]]], 7, 2).order(), 1);
        let g = group(&[vec![vec![2]]], 5, 1);
        let firsts: Vec<u32> = g.elements.iter().map(|m| m.entries[0]).collect();
        assert_eq!(firsts, vec![1, 2, 4, 3]);
        assert_eq!(group(&[vec![vec![0, 1], vec![1, 0]]], 3, 2).order(), 2);
        let singular = generate_group(&[vec![vec![1, 2], vec![2, 4]]], 5, 2, &Caps::default());
        assert!(matches!(singular, Err(Error::InvalidInput(_))));
        let capped = generate_group(&[vec![vec![2]]], 5, 1, &Caps { group_size: 3, ..Caps::default() });
        assert!(matches!(capped, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn orbit_examples() {
        let g = group(&[vec![vec![2]]], 5, 1);
        assert_eq!(orbit(&g, &[0]).unwrap(), vec![vec![0]]);
        assert_eq!(orbit(&g, &[1]).unwrap(), vec![vec![1], vec![2], vec![3], vec![4]]);
        let t = group(&[], 3, 2);
        assert_eq!(orbit(&t, &[2, 1]).unwrap(), vec![vec![2, 1]]);
    }

    #[test]
    fn epsilon_examples() {
        let g = group(&[vec![vec![2, 0], vec![0, 1]]], 5, 2);
        assert_eq!(epsilon(&g, &[1, 1], &FSubspace::full(5, 2)).unwrap(), q(1, 1));
        assert_eq!(epsilon(&g, &[1, 1], &FSubspace::span(5, 2, &[]).unwrap()).unwrap(), q(0, 1));
        let line = FSubspace::span(5, 2, &[vec![1, 0]]).unwrap();
        assert_eq!(epsilon(&g, &[1, 1], &line).unwrap(), q(0, 1));
    }

    #[test]
    fn lattice_sizes() {
        let caps = Caps::default();
        assert_eq!(SubspaceLattice::new(3, 2, &caps).unwrap().len(), 6);
        assert_eq!(SubspaceLattice::new(2, 3, &caps).unwrap().len(), 16);
        assert_eq!(SubspaceLattice::new(5, 3, &caps).unwrap().len(), 64);
        assert!(SubspaceLattice::new(7, 5, &caps).is_err());
    }

    #[test]
    fn extremal_examples() {
        let caps = Caps::default();
        let scalars = group(&[vec![vec![2]]], 5, 1);
        let full = FSubspace::full(5, 1);
        assert_eq!(extremal_subspace(&scalars, &[1], &full, &caps).unwrap(), full);
        let r = verify_bound(&scalars, &[1], &full, Some(&q(1, 1)), &caps).unwrap();
        assert_eq!((r.stab_index, r.bound.clone()), (1, q(3, 1)));
        assert!(r.bound_holds && r.optimality_holds);

        // diag(F_3^x, 1): orbit {(1,1), (2,1)} spans F_3^2, and each line
        // meets it at most once, so W = F_3^2.
        let diag = group(&[vec![vec![2, 0], vec![0, 1]]], 3, 2);
        let plane = FSubspace::full(3, 2);
        assert_eq!(extremal_subspace(&diag, &[1, 1], &plane, &caps).unwrap(), plane);

        let line = FSubspace::span(5, 2, &[vec![1, 1]]).unwrap();
        let t = group(&[], 5, 2);
        assert_eq!(extremal_subspace(&t, &[1, 1], &line, &caps).unwrap(), line);
    }

    #[test]
    fn verify_examples() {
        let caps = Caps::default();
        let t = group(&[], 3, 2);
        let v = FSubspace::span(3, 2, &[vec![1, 2]]).unwrap();
        let r = verify_bound(&t, &[2, 1], &v, Some(&q(1, 1)), &caps).unwrap();
        assert_eq!(r.stab_index, 1);
        assert!(r.bound_holds);

        let swap = group(&[vec![vec![0, 1], vec![1, 0]]], 3, 2);
        let v = FSubspace::span(3, 2, &[vec![1, 0]]).unwrap();
        let r = verify_bound(&swap, &[1, 0], &v, Some(&q(2, 1)), &caps).unwrap();
        assert_eq!(r.bound, q(48, 1));
        assert_eq!(r.w, v);
        assert_eq!(r.stab_index, 2);
        assert!(r.bound_holds && r.witness.orbit_inside && r.intersection_bound_holds);
        assert!(verify_bound(&swap, &[1, 0], &v, Some(&q(3, 2)), &caps).is_err());
        let default = verify_bound(&swap, &[1, 0], &v, None, &caps).unwrap();
        assert_eq!(default.c, q(2, 1));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn space() -> impl Strategy<Value = (u32, usize)> {
        prop::sample::select(vec![(2u32, 2usize), (2, 3), (3, 2), (5, 2), (3, 1)])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn report_invariants((ell, dim) in space(), gens in prop::collection::vec(prop::collection::vec(0i64..5, 9), 1..3), a_seed in prop::collection::vec(0u32..5, 3)) {
            let caps = Caps::default();
            let gens: Vec<Vec<Vec<i64>>> = gens
                .iter()
                .map(|g| (0..dim).map(|i| (0..dim).map(|j| g[i * 3 + j]).collect()).collect())
                .filter(|g: &Vec<Vec<i64>>| FMatrix::from_rows(g, ell).unwrap().is_invertible())
                .collect();
            let group = generate_group(&gens, ell, dim, &caps).unwrap();
            let lattice = SubspaceLattice::new(ell, dim, &caps).unwrap();
            let mut analyzer = OrbitAnalyzer::new(&group, &lattice).unwrap();
            let a: FVector = a_seed[..dim].iter().map(|&x| x % ell).collect();
            let orb = orbit(&group, &a).unwrap();
            for v in 0..lattice.len() {
                if orb.iter().all(|p| !lattice.contains_point(v, p)) {
                    continue;
                }
                let r = analyzer.report(&a, v, None).unwrap();
                prop_assert!(r.w.is_subspace_of(&r.v));
                prop_assert!(r.epsilon_w > BigRational::from_integer(0.into()));
                prop_assert!(r.generated_by_orbit);
                prop_assert!(r.bound_holds);
                prop_assert!(r.optimality_holds && r.optimality_quartic_holds);
                prop_assert!(r.intersection_bound_holds);
                prop_assert!(r.witness.orbit_inside);
                let again = OrbitAnalyzer::new(&group, &lattice).unwrap().report(&a, v, None).unwrap();
                prop_assert_eq!(r, again);
            }
        }
    }
}
