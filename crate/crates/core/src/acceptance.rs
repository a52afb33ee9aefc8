//! The acceptance suite: eight checks of the library against the oracles
//! in [`crate::oracle`] and against exact invariants. Each criterion reports
//! how many checks it ran and how many failed; any failure fails it.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{self, AlgebraElement, Representation, SplitSemisimpleAlgebra};
use crate::arith;
use crate::bounds::{self, BoundParams};
use crate::caps::Caps;
use crate::linalg::Matrix;
use crate::orbit::{self, FVector, MatrixGroup, OrbitAnalyzer, SubspaceLattice};
use crate::oracle;
use crate::torsion::{self, ModelAmbient, ModelSubvariety, Point, TorsionCoset};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub caps: Caps,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig {
            seed: 0,
            caps: Caps::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub checks: u64,
    pub violations: u64,
    pub detail: String,
}

impl CriterionOutcome {
    /// One-line human summary.
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {}: {} checks, {} violations; {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.checks,
            self.violations,
            self.detail
        )
    }
}

/// Counts checks and keeps the first few failure messages.
#[derive(Default)]
struct Tally {
    checks: u64,
    violations: u64,
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.failures.len() < 3 {
                self.failures.push(what());
            }
        }
    }

    fn error(&mut self, context: impl FnOnce() -> String, e: &Error) {
        self.check(false, || format!("{}: {e}", context()));
    }

    fn finish(self, id: u32, name: &str, detail: String) -> CriterionOutcome {
        let passed = self.violations == 0 && self.checks > 0;
        let detail = if self.failures.is_empty() {
            detail
        } else {
            format!("{detail}; first failures: {}", self.failures.join(" | "))
        };
        CriterionOutcome {
            id,
            name: name.to_string(),
            passed,
            checks: self.checks,
            violations: self.violations,
            detail,
        }
    }
}

/// A deferred criterion run.
pub type Job = Box<dyn FnOnce() -> CriterionOutcome + Send>;

/// The full suite at the stated sizes, one job per criterion.
pub fn full_suite(config: &AcceptanceConfig) -> Vec<Job> {
    let AcceptanceConfig { seed, caps } = *config;
    vec![
        Box::new(|| jacobsthal_criterion(10_000)),
        Box::new(|| coprime_shift_criterion(60, 500)),
        Box::new(|| rosser_criterion(10_000)),
        Box::new(|| bounds_consistency_criterion(50, 3)),
        Box::new(move || threshold_criterion(seed, 200)),
        Box::new(move || orbit_criterion(seed, &caps, 40, 200)),
        Box::new(move || algebra_criterion(seed, 500, 200, 1000)),
        Box::new(move || torsion_criterion(seed, &caps, 30, 100)),
    ]
}

/// The same checks on small ranges, for smoke tests.
pub fn quick_suite(config: &AcceptanceConfig) -> Vec<Job> {
    let AcceptanceConfig { seed, caps } = *config;
    vec![
        Box::new(|| jacobsthal_criterion(300)),
        Box::new(|| coprime_shift_criterion(8, 60)),
        Box::new(|| rosser_criterion(500)),
        Box::new(|| bounds_consistency_criterion(5, 2)),
        Box::new(move || threshold_criterion(seed, 10)),
        Box::new(move || orbit_criterion(seed, &caps, 2, 10)),
        Box::new(move || algebra_criterion(seed, 10, 5, 20)),
        Box::new(move || torsion_criterion(seed, &caps, 6, 5)),
    ]
}

/// Run jobs on scoped threads; results come back in job order.
pub fn run_jobs(jobs: Vec<Job>) -> Vec<CriterionOutcome> {
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs.into_iter().map(|job| s.spawn(job)).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion panicked"))
            .collect()
    })
}

pub fn jacobsthal_criterion(limit: u64) -> CriterionOutcome {
    let mut t = Tally::default();
    let mut stevens_checked = 0;
    for d in 1..=limit {
        let (g, g_rad, f) = match (
            arith::jacobsthal(d),
            arith::jacobsthal(oracle::radical(d)),
            arith::factorize(d),
        ) {
            (Ok(g), Ok(r), Ok(f)) => (g, r, f),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                t.error(|| format!("d = {d}"), &e);
                continue;
            }
        };
        let expected = oracle::jacobsthal(d);
        t.check(g == expected, || format!("g({d}) = {g}, oracle {expected}"));
        t.check(g == g_rad, || format!("g({d}) = {g} but g(rad) = {g_rad}"));
        let w = oracle::omega(d);
        t.check(g <= 1 << w, || format!("g({d}) = {g} exceeds 2^{w}"));
        if let Some(s) = arith::jacobsthal_bounds::<f64>(&f).stevens {
            stevens_checked += 1;
            t.check(g as f64 <= s, || format!("g({d}) = {g} exceeds Stevens {s}"));
        }
    }
    t.finish(
        1,
        "jacobsthal",
        format!("d <= {limit} against the definition scan; Stevens applied to {stevens_checked} values"),
    )
}

pub fn coprime_shift_criterion(max_n: u64, max_d: u64) -> CriterionOutcome {
    let mut t = Tally::default();
    let g_table: Vec<u64> = (0..=max_d).map(|d| if d == 0 { 0 } else { oracle::jacobsthal(d) }).collect();
    let mut solvable = 0u64;
    for n in 1..=max_n {
        for a in 0..n {
            for d in 1..=max_d {
                let expected = oracle::coprime_shift(a, n, d);
                match (arith::minimal_coprime_shift(a, n, d), expected) {
                    (Ok(s), Some(k)) => {
                        solvable += 1;
                        let d_prime = oracle::radical(d / d.gcd(&n));
                        let bound = g_table[d_prime as usize];
                        let ok = s.k == k && s.value == a + k * n && s.value.gcd(&d) == 1 && s.k < bound && s.bound == bound;
                        t.check(ok, || format!("(a, n, d) = ({a}, {n}, {d}): got k = {}, oracle {k}, g(d') = {bound}", s.k));
                    }
                    (Err(Error::NoSolution(_)), None) => t.check(true, String::new),
                    (got, want) => t.check(false, || format!("(a, n, d) = ({a}, {n}, {d}): {got:?} vs oracle {want:?}")),
                }
            }
        }
    }
    t.finish(
        2,
        "coprime-shift",
        format!("0 <= a < n <= {max_n}, d <= {max_d}; {solvable} solvable instances"),
    )
}

pub fn rosser_criterion(limit: u64) -> CriterionOutcome {
    let mut t = Tally::default();
    let primes = oracle::primes(limit as usize);
    for x in 4..=limit {
        let expected = primes[x as usize - 1];
        match (arith::nth_prime(x), arith::rosser_upper::<f64>(x)) {
            (Ok(p), Ok(bound)) => {
                t.check(p == expected, || format!("p({x}) = {p}, oracle {expected}"));
                // Guarded: the float bound must clear the integer with margin.
                t.check(p as f64 <= bound * (1.0 - 1e-12), || format!("p({x}) = {p} > {bound}"));
            }
            (Err(e), _) | (_, Err(e)) => t.error(|| format!("x = {x}"), &e),
        }
    }
    let p4 = arith::nth_prime(4).unwrap_or(0);
    t.check(p4 == 7, || format!("p(4) = {p4}"));
    t.finish(3, "rosser", format!("4 <= x <= {limit}; p(4) = {p4}"))
}

/// Smallest `r` with `r^k >= n`, by counting up.
fn naive_ceil_root(n: u64, k: u32) -> u64 {
    (1..).find(|&r: &u64| r.checked_pow(k).map_or(true, |v| v >= n)).unwrap_or(1)
}

pub fn bounds_consistency_criterion(limit: u64, max_exp: u32) -> CriterionOutcome {
    let mut t = Tally::default();
    let primes = oracle::primes(1000);
    let caps = Caps::default();
    let mut inexact = 0u64;
    for degree in 1..=limit {
        for d in 1..=limit {
            let w = oracle::omega(d);
            let g = oracle::jacobsthal(d);
            for dimension in 1..=max_exp {
                for c in 1..=max_exp {
                    let params = match BoundParams::new(degree, dimension, c, d, 0) {
                        Ok(p) => p,
                        Err(e) => {
                            t.error(|| format!("params ({degree}, {dimension}, {c}, {d})"), &e);
                            continue;
                        }
                    };
                    let x = naive_ceil_root(degree, 4 * c) + degree + w as u64 + 1;
                    let n = BigUint::from(primes[x as usize - 1]).pow(c) * g;
                    let floor = BigUint::from(degree).pow(2) * n.pow(2 * c * dimension);
                    match bounds::f_bound(&params) {
                        Ok(f) => t.check(f >= floor, || format!("f({degree}, {d}) below D^2 N^(2 c Delta) at Delta = {dimension}, c = {c}")),
                        Err(e) => t.error(|| format!("f_bound({degree}, {d}, {dimension}, {c})"), &e),
                    }
                    match bounds::f_iterates(&params, dimension, &caps) {
                        Ok(its) => {
                            let top = &its[dimension as usize].value;
                            inexact += u64::from(!its[dimension as usize].exact);
                            for (i, it) in its.iter().enumerate() {
                                t.check(&it.value <= top, || {
                                    format!("f_{i} > f_{dimension} at D = {degree}, d = {d}, c = {c}")
                                });
                            }
                        }
                        Err(e) => t.error(|| format!("iterates ({degree}, {d}, {dimension}, {c})"), &e),
                    }
                }
            }
        }
    }
    let half = BigRational::new(1.into(), 2.into());
    match bounds::exponent_constants(2, 1, &half) {
        Ok(k) => {
            let q = |n: i64, den: i64| BigRational::new(n.into(), den.into());
            t.check(
                k.lambda == q(3, 2) && k.delta == q(10, 1) && k.delta_prime == q(6, 1),
                || format!("exponent constants {k:?}"),
            );
        }
        Err(e) => t.error(|| "exponent constants".into(), &e),
    }
    t.finish(
        4,
        "bounds-consistency",
        format!("D, d <= {limit}, Delta, c <= {max_exp}; {inexact} top iterates use Rosser's bound"),
    )
}

/// `omega(d)` exactly for small `d`, otherwise the largest `k` whose
/// primorial is at most `d`.
fn omega_ceiling(d: &BigUint, primes: &[u64]) -> u32 {
    if let Some(v) = d.to_u64().filter(|&v| v <= 1 << 40) {
        return oracle::omega(v);
    }
    let mut primorial = BigUint::one();
    let mut k = 0;
    for &p in primes {
        primorial *= p;
        if &primorial > d {
            break;
        }
        k += 1;
    }
    k
}

pub fn threshold_criterion(seed: u64, samples: usize) -> CriterionOutcome {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5);
    let primes = oracle::primes(20_000);
    let caps = Caps::default();
    let mut largest_bits = 0;
    for degree in 1..=10u64 {
        for dimension in 1..=2u32 {
            for c in 1..=2u32 {
                let ctx = || format!("(D, Delta, c) = ({degree}, {dimension}, {c})");
                let params = match BoundParams::new(degree, dimension, c, 1, 0) {
                    Ok(p) => p,
                    Err(e) => {
                        t.error(ctx, &e);
                        continue;
                    }
                };
                let (threshold, k) = match (
                    bounds::final_delta(&params, &caps),
                    bounds::exponent_constants(dimension, c, &params.eps),
                ) {
                    (Ok(th), Ok(k)) => (th.value, k),
                    (Err(e), _) | (_, Err(e)) => {
                        t.error(ctx, &e);
                        continue;
                    }
                };
                largest_bits = largest_bits.max(threshold.bits());
                let l = k.delta.denom().lcm(k.delta_prime.denom());
                let e1 = (k.delta.numer() * &l / k.delta.denom()).to_u32().unwrap_or(u32::MAX);
                let e2 = (k.delta_prime.numer() * &l / k.delta_prime.denom()).to_u32().unwrap_or(u32::MAX);
                let l = l.to_u32().unwrap_or(u32::MAX);
                let top = &threshold * 10u32;
                let mut ds = vec![threshold.clone(), top.clone()];
                while ds.len() < samples {
                    ds.push(rng.gen_biguint_range(&threshold, &(&top + 1u32)));
                }
                for d in ds {
                    let w = omega_ceiling(&d, &primes);
                    // Kanold: g <= 2^omega, so 2 g <= 2^(omega + 1).
                    let two_g = BigUint::one() << ((w as u64 + 1) * e2 as u64);
                    let lhs = d.pow(l);
                    let first = BigUint::from(w + 1).pow(e1) * &two_g;
                    let second = BigUint::from(degree).pow(e1) * &two_g;
                    t.check(lhs >= first && lhs >= second, || format!("{} fails at d = {d}", ctx()));
                }
            }
        }
    }
    t.finish(
        5,
        "threshold-soundness",
        format!("{samples} samples per (D, Delta, c); largest threshold {largest_bits} bits"),
    )
}

fn random_matrix<R: Rng>(rng: &mut R, ell: u32, dim: usize, kind: u32) -> Vec<Vec<i64>> {
    let ell = ell as i64;
    loop {
        let m: Vec<Vec<i64>> = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| match kind {
                        // diagonal
                        0 => if i == j { rng.gen_range(1..ell) } else { 0 },
                        // upper triangular
                        1 => if i == j { rng.gen_range(1..ell) } else if j > i { rng.gen_range(0..ell) } else { 0 },
                        _ => rng.gen_range(0..ell),
                    })
                    .collect()
            })
            .collect();
        if det(&m).rem_euclid(ell) != 0 {
            return m;
        }
    }
}

/// Cofactor expansion; dimensions here are at most 3.
fn det(rows: &[Vec<i64>]) -> i64 {
    match rows.len() {
        0 => 1,
        1 => rows[0][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = rows[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * rows[0][j] * det(&minor)
            })
            .sum(),
    }
}

fn permutation_matrix<R: Rng>(rng: &mut R, dim: usize) -> Vec<Vec<i64>> {
    let mut perm: Vec<usize> = (0..dim).collect();
    perm.shuffle(rng);
    (0..dim).map(|i| (0..dim).map(|j| i64::from(perm[i] == j)).collect()).collect()
}

fn random_generators<R: Rng>(rng: &mut R, ell: u32, dim: usize) -> Vec<Vec<Vec<i64>>> {
    match rng.gen_range(0..6) {
        0 => vec![random_matrix(rng, ell, dim, 2)],
        1 => vec![random_matrix(rng, ell, dim, 2), random_matrix(rng, ell, dim, 2)],
        2 => vec![random_matrix(rng, ell, dim, 0), permutation_matrix(rng, dim)],
        3 => vec![random_matrix(rng, ell, dim, 1)],
        4 => vec![random_matrix(rng, ell, dim, 1), random_matrix(rng, ell, dim, 0)],
        _ => vec![random_matrix(rng, ell, dim, 0)],
    }
}

fn group_key(group: &MatrixGroup) -> Vec<Vec<FVector>> {
    let mut key: Vec<Vec<FVector>> = group.elements.iter().map(|g| g.rows()).collect();
    key.sort();
    key
}

/// Checks every `(a, V)` pair for one group; returns the number of pairs.
fn check_group(t: &mut Tally, group: &MatrixGroup, lattice: &SubspaceLattice) -> u64 {
    let mut analyzer = match OrbitAnalyzer::new(group, lattice) {
        Ok(a) => a,
        Err(e) => {
            t.error(|| "analyzer".into(), &e);
            return 0;
        }
    };
    let (ell, dim) = (group.ell, group.dim);
    let mut pairs = 0;
    let mut stab_cache: HashMap<usize, usize> = HashMap::new();
    for code in 0..(ell as usize).pow(dim as u32) {
        let a: FVector = (0..dim)
            .map(|i| ((code / (ell as usize).pow((dim - 1 - i) as u32)) % ell as usize) as u32)
            .collect();
        let orb: Vec<FVector> = {
            let set: BTreeSet<FVector> = group.elements.iter().map(|g| g.apply(&a)).collect();
            set.into_iter().collect()
        };
        let count = |w: usize| orb.iter().filter(|p| lattice.contains_point(w, p)).count();
        for v in 0..lattice.len() {
            if count(v) == 0 {
                continue;
            }
            pairs += 1;
            let ctx = || format!("l = {ell}, dim = {dim}, a = {a:?}, V = {:?}", lattice.subspaces[v].basis);
            let report = match analyzer.report(&a, v, None) {
                Ok(r) => r,
                Err(e) => {
                    t.error(ctx, &e);
                    continue;
                }
            };
            let Some(w) = lattice.index_of(&report.w) else {
                t.check(false, || format!("{}: W outside the lattice", ctx()));
                continue;
            };
            t.check(report.orbit == orb, || format!("{}: orbit differs from brute force", ctx()));
            // Extremality: no subspace of V beats W, ties going to the earlier one.
            let t_len = orb.len();
            let s_w = count(w);
            let e_w = 4u32.pow(report.w.dim() as u32);
            let mut extremal = lattice.is_sub(w, v) && s_w > 0;
            for x in (0..lattice.len()).filter(|&x| lattice.is_sub(x, v)) {
                let s_x = count(x);
                if s_x == 0 || x == w {
                    continue;
                }
                let e_x = 4u32.pow(lattice.subspaces[x].dim() as u32);
                let lhs = BigUint::from(s_x).pow(e_x) * BigUint::from(t_len).pow(e_w);
                let rhs = BigUint::from(s_w).pow(e_w) * BigUint::from(t_len).pow(e_x);
                extremal &= lhs < rhs || (lhs == rhs && x > w);
            }
            t.check(extremal, || format!("{}: W is not extremal", ctx()));
            t.check(report.optimality_holds, || format!("{}: optimality inequality fails", ctx()));
            let stab = *stab_cache.entry(w).or_insert_with(|| {
                group.elements.iter().filter(|g| report.w.image(g) == report.w).count()
            });
            t.check(
                report.stab_order == stab && report.stab_index * stab == group.order() && report.bound_holds,
                || format!("{}: index {} vs bound {}", ctx(), report.stab_index, report.bound),
            );
            let ga = report.witness.g.apply(&a);
            let inside = lattice.contains_point(w, &ga)
                && group
                    .elements
                    .iter()
                    .filter(|h| report.w.image(h) == report.w)
                    .all(|h| lattice.contains_point(w, &h.apply(&ga)));
            t.check(inside && report.witness.orbit_inside, || format!("{}: H g a leaves W", ctx()));
        }
    }
    pairs
}

pub fn orbit_criterion(seed: u64, caps: &Caps, per_space: usize, min_groups: usize) -> CriterionOutcome {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6);
    let mut groups = 0usize;
    let mut pairs = 0u64;
    let mut skipped = 0u64;
    let mut spaces: Vec<String> = Vec::new();
    for ell in [2u32, 3, 5] {
        for dim in 1..=3usize {
            let lattice = match SubspaceLattice::new(ell, dim, caps) {
                Ok(l) => l,
                Err(Error::CapExceeded { .. }) => {
                    spaces.push(format!("{ell}^{dim}: lattice over cap"));
                    continue;
                }
                Err(e) => {
                    t.error(|| format!("lattice {ell}^{dim}"), &e);
                    continue;
                }
            };
            let mut seen: HashSet<Vec<Vec<FVector>>> = HashSet::new();
            let mut attempts = 0;
            while seen.len() < per_space && attempts < 8 * per_space.max(40) {
                attempts += 1;
                let gens = if attempts == 1 { vec![] } else { random_generators(&mut rng, ell, dim) };
                let group = match orbit::generate_group(&gens, ell, dim, caps) {
                    Ok(g) => g,
                    Err(Error::CapExceeded { .. }) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => {
                        t.error(|| format!("group over {ell}^{dim}"), &e);
                        continue;
                    }
                };
                if !seen.insert(group_key(&group)) {
                    continue;
                }
                pairs += check_group(&mut t, &group, &lattice);
            }
            groups += seen.len();
            spaces.push(format!("{ell}^{dim}: {}", seen.len()));
        }
    }
    t.check(groups >= min_groups, || format!("only {groups} distinct groups, need {min_groups}"));
    t.finish(
        6,
        "orbit-density",
        format!(
            "{groups} distinct groups ({}), {pairs} (a, V) pairs, {skipped} candidate groups over the size cap",
            spaces.join(", ")
        ),
    )
}

/// Whether the column space of `a` lies in that of `b`, by ranks.
fn column_space_within(a: &Matrix<BigRational>, b: &Matrix<BigRational>) -> bool {
    let joined = Matrix::from_fn(b.rows(), b.cols() + a.cols(), |i, j| {
        if j < b.cols() {
            b.get(i, j).clone()
        } else {
            a.get(i, j - b.cols()).clone()
        }
    });
    joined.rank() == b.rank()
}

fn hstack(mats: &[Matrix<BigRational>]) -> Matrix<BigRational> {
    let rows = mats[0].rows();
    let widths: Vec<usize> = mats.iter().map(Matrix::cols).collect();
    Matrix::from_fn(rows, widths.iter().sum(), |i, mut j| {
        let mut k = 0;
        while j >= widths[k] {
            j -= widths[k];
            k += 1;
        }
        mats[k].get(i, j).clone()
    })
}

fn chain_holds(rep: &Representation, pi: Option<&AlgebraElement>, w: &AlgebraElement, v: &AlgebraElement, u: &AlgebraElement) -> bool {
    let with_pi = |x: &AlgebraElement| match pi {
        Some(p) => hstack(&[rep.act(x), rep.act(p)]),
        None => rep.act(x),
    };
    let (wm, vm, um) = (with_pi(w), with_pi(v), with_pi(u));
    column_space_within(&wm, &vm) && column_space_within(&vm, &um)
}

pub fn algebra_criterion(seed: u64, plain: usize, central: usize, memberships: usize) -> CriterionOutcome {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7);
    for i in 0..plain {
        let (emb, rep) = algebra::random::setup(&mut rng);
        let (u, w) = algebra::random::plain_instance(&mut rng, &emb);
        match algebra::lift_idempotent(&emb, &rep, &u, &w) {
            Ok(v) => {
                let ok = v.is_idempotent() && chain_holds(&rep, None, &emb.apply(&w), &emb.apply(&v), &u);
                t.check(ok, || format!("plain instance {i}: chain fails"));
            }
            Err(e) => t.error(|| format!("plain instance {i}"), &e),
        }
    }
    for i in 0..central {
        let (emb, rep) = algebra::random::setup(&mut rng);
        let (pi, u, w) = algebra::random::central_instance(&mut rng, &emb);
        match algebra::lift_idempotent_central(&emb, &rep, &pi, &u, &w) {
            Ok(v) => {
                let ok = v.is_idempotent() && chain_holds(&rep, Some(&pi), &emb.apply(&w), &emb.apply(&v), &u);
                t.check(ok, || format!("central instance {i}: chain fails"));
            }
            Err(e) => t.error(|| format!("central instance {i}"), &e),
        }
    }
    let mut positives = 0;
    for i in 0..memberships {
        let blocks: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=3)).collect();
        let b_alg = SplitSemisimpleAlgebra::new(blocks).expect("positive blocks");
        let mults: Vec<usize> = b_alg.blocks.iter().map(|_| rng.gen_range(1..=2)).collect();
        let dim: usize = b_alg.blocks.iter().zip(&mults).map(|(n, m)| n * m).sum();
        let p = algebra::random::unimodular(&mut rng, dim);
        let rep = Representation::natural(b_alg.clone(), &mults, Some(&p)).expect("faithful");
        let pi = algebra::random::central_idempotent(&mut rng, &b_alg);
        let u = algebra::random::idempotent(&mut rng, &b_alg);
        let b = if rng.gen_bool(0.5) {
            let y = algebra::random::element(&mut rng, &b_alg);
            let z = algebra::random::element(&mut rng, &b_alg);
            u.mul(&y).add(&pi.mul(&z))
        } else {
            algebra::random::element(&mut rng, &b_alg)
        };
        // Direct membership of b in uB + piB, by ranks.
        let gens: Vec<Vec<BigRational>> = b_alg
            .basis_elements()
            .iter()
            .flat_map(|e| [u.mul(e).coords, pi.mul(e).coords])
            .collect();
        let span = Matrix::from_rows(gens.clone());
        let mut with_b = gens;
        with_b.push(b.coords.clone());
        let direct = Matrix::from_rows(with_b).rank() == span.rank();
        positives += usize::from(direct);
        let by_rep = column_space_within(&hstack(&[rep.act(&b), rep.act(&pi)]), &hstack(&[rep.act(&u), rep.act(&pi)]));
        match algebra::ideal_membership_mod_pi(&pi, &u, &b, &rep) {
            Ok(ans) => t.check(ans == direct && ans == by_rep, || {
                format!("membership {i}: library {ans}, direct {direct}, representation {by_rep}")
            }),
            Err(e) => t.error(|| format!("membership {i}"), &e),
        }
    }
    t.finish(
        7,
        "algebra-chains",
        format!("{plain} plain lifts, {central} central lifts, {memberships} memberships ({positives} members)"),
    )
}

/// First `2 dim` rows of a random unimodular integer matrix, reduced mod `n`.
fn random_summand<R: Rng>(rng: &mut R, ambient: ModelAmbient, dim: u32) -> Vec<Point> {
    let r = ambient.rank();
    let n = ambient.n as i64;
    let mut rows: Vec<Vec<i64>> = (0..r).map(|i| (0..r).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..3 * r {
        let i = rng.gen_range(0..r);
        let j = rng.gen_range(0..r);
        if i == j {
            continue;
        }
        if rng.gen_bool(0.3) {
            rows.swap(i, j);
        } else {
            let k = rng.gen_range(1..n.max(2));
            for c in 0..r {
                rows[i][c] = (rows[i][c] + k * rows[j][c]).rem_euclid(n);
            }
        }
    }
    rows.truncate(2 * dim as usize);
    rows.iter().map(|row| row.iter().map(|&v| v.rem_euclid(n) as u64).collect()).collect()
}

fn random_point<R: Rng>(rng: &mut R, ambient: &ModelAmbient) -> Point {
    (0..ambient.rank()).map(|_| rng.gen_range(0..ambient.n)).collect()
}

fn subset(a: &[Point], b: &[Point]) -> bool {
    let set: BTreeSet<&Point> = b.iter().collect();
    a.iter().all(|x| set.contains(x))
}

/// Points of `L alpha + B` by brute force.
fn oracle_coset(coset: &TorsionCoset, c: u32) -> Vec<Point> {
    let n = coset.subgroup.ambient.n;
    let rank = coset.subgroup.ambient.rank();
    let span = oracle::span_mod(n, rank, &coset.subgroup.basis);
    let mut out: Vec<Point> = oracle::lang_orbit(n, &coset.point, c)
        .iter()
        .flat_map(|x| span.iter().map(move |b| x.iter().zip(b).map(|(u, v)| (u + v) % n).collect::<Point>()))
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn torsion_criterion(seed: u64, caps: &Caps, max_n: u64, closures: usize) -> CriterionOutcome {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x8);
    let mut pushforwards = 0;
    for n in 1..=max_n {
        for g in 1..=2u32 {
            let ambient = ModelAmbient::new(n, g).expect("positive N");
            for dim in 0..=g {
                let basis = random_summand(&mut rng, ambient, dim);
                let sub = match ModelSubvariety::new(ambient, basis.clone()) {
                    Ok(s) => s,
                    Err(e) => {
                        t.error(|| format!("summand N = {n}, g = {g}, basis {basis:?}"), &e);
                        continue;
                    }
                };
                let elements = oracle::span_mod(n, ambient.rank(), &basis);
                for q in 1..=30u64 {
                    let brute = elements.iter().filter(|x| x.iter().all(|&v| v * q % n == 0)).count() as u64;
                    match torsion::torsion_count(&sub, q, caps) {
                        Ok(k) => t.check(k == brute, || format!("#B[{q}] = {k}, brute {brute}, N = {n}, g = {g}")),
                        Err(e) => t.error(|| format!("torsion_count N = {n}, q = {q}"), &e),
                    }
                    if n % q == 0 {
                        pushforwards += 1;
                        let image: BTreeSet<Vec<u64>> =
                            elements.iter().map(|x| x.iter().map(|&v| v * q % n).collect()).collect();
                        t.check(image.len() as u64 * brute == elements.len() as u64, || {
                            format!("|qB| #B[q] != |B| at N = {n}, q = {q}")
                        });
                        match torsion::degree_pushforward(1, dim, brute, q) {
                            Ok(deg) => t.check(deg.is_one(), || format!("pushforward degree {deg} at N = {n}, q = {q}")),
                            Err(e) => t.error(|| format!("pushforward N = {n}, q = {q}"), &e),
                        }
                    }
                }
            }
        }
    }

    let mut witnesses = 0;
    for i in 0..closures {
        let ambient = match rng.gen_range(0..10) {
            0 => ModelAmbient::new(12, 2),
            1 => ModelAmbient::new(144, 1),
            2 | 3 => ModelAmbient::new(rng.gen_range(2..=6), 2),
            _ => ModelAmbient::new(rng.gen_range(2..=40), 1),
        }
        .expect("positive N");
        let c = rng.gen_range(1..=3);
        let s: Vec<Point> = (0..rng.gen_range(1..=4)).map(|_| random_point(&mut rng, &ambient)).collect();
        let mut bigger = s.clone();
        bigger.extend((0..rng.gen_range(1..=2)).map(|_| random_point(&mut rng, &ambient)));
        let ctx = || format!("closure {i}: N = {}, g = {}, c = {c}, S = {s:?}", ambient.n, ambient.g);
        let (cl, cl2, cl_big) = match (
            torsion::special_closure(&ambient, &s, c, caps),
            torsion::special_closure(&ambient, &bigger, c, caps),
        ) {
            (Ok(a), Ok(b)) => match torsion::special_closure(&ambient, &a.points, c, caps) {
                Ok(again) => (a, again, b),
                Err(e) => {
                    t.error(ctx, &e);
                    continue;
                }
            },
            (Err(e), _) | (_, Err(e)) => {
                t.error(ctx, &e);
                continue;
            }
        };
        t.check(subset(&s, &cl.points), || format!("{}: not extensive", ctx()));
        t.check(cl2.points == cl.points, || format!("{}: not idempotent", ctx()));
        t.check(subset(&cl.points, &cl_big.points), || format!("{}: not monotone", ctx()));
        t.check(oracle::lang_stable(ambient.n, &cl.points, c), || format!("{}: not Lang-stable", ctx()));
        let union: BTreeSet<Point> = cl.components.iter().flat_map(|k| oracle_coset(k, c)).collect();
        t.check(union.into_iter().collect::<Vec<_>>() == cl.points, || format!("{}: components do not cover", ctx()));

        let a = s.choose(&mut rng).expect("non-empty").clone();
        let cap = BigUint::from(ambient.n);
        match torsion::keyprop_witness(&ambient, &cl.points, &a, c, &cap, caps) {
            Ok(wit) => {
                witnesses += 1;
                let coset = oracle_coset(&wit.coset, c);
                let orbit = oracle::lang_orbit(ambient.n, &a, c);
                t.check(subset(&orbit, &coset) && subset(&coset, &cl.points), || {
                    format!("{}: keyprop sandwich fails", ctx())
                });
            }
            Err(e) => t.error(|| format!("{}: keyprop", ctx()), &e),
        }
    }
    t.finish(
        8,
        "torsion-model",
        format!(
            "N <= {max_n}, g <= 2, q <= 30; {pushforwards} pushforward instances; {closures} random closures; {witnesses} keyprop witnesses"
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let config = AcceptanceConfig { seed: 1, ..Default::default() };
        for out in run_jobs(quick_suite(&config)) {
            assert!(out.passed, "{}", out.line());
        }
    }

    #[test]
    fn tally_reports_failures() {
        let mut t = Tally::default();
        t.check(true, String::new);
        t.check(false, || "boom".into());
        let out = t.finish(9, "demo", "x".into());
        assert!(!out.passed);
        assert_eq!(out.violations, 1);
        assert!(out.line().starts_with("[FAIL] 9 demo"));
    }
}
