//! Elementary number theory: factorization, the prime sequence, Jacobsthal's
//! function and the minimal coprime shift along an arithmetic progression.

use std::sync::OnceLock;

use num_integer::Integer;
use num_traits::{Float, FromPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};

/// A positive integer together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FactoredInteger {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl FactoredInteger {
    pub fn value(&self) -> u64 {
        self.value
    }

    /// `(prime, exponent)` pairs sorted by prime.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Number of distinct prime divisors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    /// Product of the distinct prime divisors.
    pub fn radical(&self) -> u64 {
        self.factors.iter().map(|&(p, _)| p).product()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }
}

/// Factor `n` by trial division over 2, 3 and the residues 1, 5 mod 6.
pub fn factorize(n: u64) -> Result<FactoredInteger> {
    if n == 0 {
        return Err(Error::invalid("cannot factor 0"));
    }
    let mut rest = n;
    let mut factors = Vec::new();
    let mut take = |p: u64, rest: &mut u64| {
        let mut e = 0;
        while *rest % p == 0 {
            *rest /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    take(2, &mut rest);
    take(3, &mut rest);
    let mut p = 5u64;
    while p.saturating_mul(p) <= rest {
        take(p, &mut rest);
        take(p + 2, &mut rest);
        p += 6;
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(FactoredInteger { value: n, factors })
}

/// Number of distinct prime divisors of `n >= 1`.
pub fn omega(n: u64) -> Result<u32> {
    factorize(n).map(|f| f.omega())
}

/// Radical (product of distinct primes) of `n >= 1`.
pub fn radical(n: u64) -> Result<u64> {
    factorize(n).map(|f| f.radical())
}

/// Primes up to this limit are sieved once and kept for the process
/// lifetime; it covers the first 200 000 primes.
const TABLE_LIMIT: usize = 2_750_160;

/// Largest index accepted by [`nth_prime`].
pub const NTH_PRIME_CAP: u64 = 2_000_000;

fn prime_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| primes_up_to(TABLE_LIMIT as u64))
}

/// All primes `<= limit`, by the sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// The `x`-th prime, with `nth_prime(1) = 2`.
pub fn nth_prime(x: u64) -> Result<u64> {
    if x == 0 {
        return Err(Error::invalid("prime index must be at least 1"));
    }
    let table = prime_table();
    if let Some(&p) = table.get(x as usize - 1) {
        return Ok(p);
    }
    if x > NTH_PRIME_CAP {
        return Err(Error::cap("prime index", x, NTH_PRIME_CAP));
    }
    // p(x) < x (ln x + ln ln x) for x >= 6.
    let xf = x as f64;
    let limit = (xf * (xf.ln() + xf.ln().ln())).ceil() as u64 + 1;
    primes_up_to(limit)
        .get(x as usize - 1)
        .copied()
        .ok_or_else(|| Error::invariant("prime sieve bound too small"))
}

/// Rosser's upper bound `x ln x (1 + ln ln x)` on the `x`-th prime, valid for
/// `x >= 4`.
pub fn rosser_upper<F: Float + FromPrimitive>(x: u64) -> Result<F> {
    if x < 4 {
        return Err(Error::invalid(format!("rosser bound needs x >= 4, got {x}")));
    }
    let xf = F::from_u64(x).ok_or_else(|| Error::invalid("x not representable"))?;
    let ln = xf.ln();
    Ok(xf * ln * (F::one() + ln.ln()))
}

/// Jacobsthal's function: the smallest `M` such that every run of `M`
/// consecutive integers contains one coprime to `d`.
///
/// Computed exactly as the largest cyclic gap between consecutive residues
/// coprime to `rad(d)` over one period.
pub fn jacobsthal(d: u64) -> Result<u64> {
    let f = factorize(d)?;
    jacobsthal_factored(&f)
}

/// Largest radical [`jacobsthal`] will scan.
pub const JACOBSTHAL_CAP: u64 = 1 << 32;

pub fn jacobsthal_factored(d: &FactoredInteger) -> Result<u64> {
    let r = d.radical();
    if r == 1 {
        return Ok(1);
    }
    if r > JACOBSTHAL_CAP {
        return Err(Error::cap("jacobsthal radical", r, JACOBSTHAL_CAP));
    }
    let len = r as usize;
    let mut hit = vec![false; len];
    for p in d.primes() {
        let mut j = 0usize;
        while j < len {
            hit[j] = true;
            j += p as usize;
        }
    }
    // Residue 1 is always coprime, so the scan starts from a coprime point.
    let mut last = 1usize;
    let mut best = 0u64;
    for (i, &h) in hit.iter().enumerate().skip(2) {
        if !h {
            best = best.max((i - last) as u64);
            last = i;
        }
    }
    best = best.max((len + 1 - last) as u64);
    Ok(best)
}

/// Kanold's and Stevens' explicit upper bounds on `g(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobsthalBounds<F> {
    pub kanold: u64,
    pub stevens: Option<F>,
}

/// `2^omega(d)`, and `2 omega^(2 + 2e ln omega)` when `omega >= 2`.
pub fn jacobsthal_bounds<F: Float + FromPrimitive>(d: &FactoredInteger) -> JacobsthalBounds<F> {
    let w = d.omega();
    JacobsthalBounds {
        kanold: 1u64 << w,
        stevens: stevens_bound(w),
    }
}

/// Stevens' bound as a function of `omega`; natural logarithm throughout.
pub fn stevens_bound<F: Float + FromPrimitive>(omega: u32) -> Option<F> {
    if omega < 2 {
        return None;
    }
    let w = F::from_u32(omega)?;
    let two = F::from_u32(2)?;
    let e = F::from_f64(std::f64::consts::E)?;
    Some(two * w.powf(two + two * e * w.ln()))
}

/// Radical of `d / gcd(d, n)`.
pub fn squarefree_quotient(d: u64, n: u64) -> Result<u64> {
    if d == 0 || n == 0 {
        return Err(Error::invalid("squarefree_quotient needs d, n >= 1"));
    }
    radical(d / d.gcd(&n))
}

/// The minimal shift along `a, a + n, a + 2n, ...` reaching a unit mod `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoprimeShift {
    pub k: u64,
    /// `a + k n`.
    pub value: u64,
    /// `g(d')` for `d'` the square-free part of `d / gcd(d, n)`; always `> k`.
    pub bound: u64,
}

/// Smallest `k >= 0` with `gcd(a + k n, d) = 1`.
///
/// Such a `k` exists exactly when `a` is a unit modulo `gcd(n, d)`, and it is
/// then smaller than `g(d')`.
pub fn minimal_coprime_shift(a: u64, n: u64, d: u64) -> Result<CoprimeShift> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("coprime shift needs n, d >= 1"));
    }
    let g = n.gcd(&d);
    if (a % g).gcd(&g) != 1 {
        return Err(Error::NoSolution(format!(
            "{a} is not a unit modulo gcd({n}, {d}) = {g}"
        )));
    }
    let bound = jacobsthal(squarefree_quotient(d, n)?)?;
    let mut k = 0u64;
    loop {
        let value = n
            .checked_mul(k)
            .and_then(|kn| kn.checked_add(a))
            .ok_or_else(|| Error::invalid("a + k n overflows 64 bits"))?;
        if value.gcd(&d) == 1 {
            if k >= bound {
                return Err(Error::invariant(format!(
                    "shift {k} is not below g(d') = {bound}"
                )));
            }
            return Ok(CoprimeShift { k, value, bound });
        }
        k += 1;
        if k > d {
            return Err(Error::invariant("coprime shift scan ran past one period"));
        }
    }
}

/// Linnik-style comparator `n^5.2 (omega(d) + 1)`; informational only.
pub fn linnik_comparator<F: Float + FromPrimitive>(n: u64, d: &FactoredInteger) -> Result<F> {
    if n == 0 {
        return Err(Error::invalid("linnik comparator needs n >= 1"));
    }
    let q = F::from_f64(LINNIK_EXPONENT).unwrap();
    let nf = F::from_u64(n).unwrap();
    Ok(nf.powf(q) * F::from_u32(d.omega() + 1).unwrap())
}

/// Exponent in the least-prime-in-progression comparator.
pub const LINNIK_EXPONENT: f64 = 5.2;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(12).unwrap().factors(), &[(2, 2), (3, 1)]);
        assert!(factorize(1).unwrap().factors().is_empty());
        assert_eq!(factorize(97).unwrap().factors(), &[(97, 1)]);
        assert!(factorize(0).is_err());
        let big = factorize(600_851_475_143).unwrap();
        assert_eq!(big.factors(), &[(71, 1), (839, 1), (1471, 1), (6857, 1)]);
        assert_eq!(factorize(360).unwrap().radical(), 30);
        assert_eq!(factorize(360).unwrap().omega(), 3);
    }

    #[test]
    fn nth_prime_examples() {
        assert_eq!(nth_prime(1).unwrap(), 2);
        assert_eq!(nth_prime(4).unwrap(), 7);
        assert_eq!(nth_prime(25).unwrap(), 97);
        assert_eq!(nth_prime(10).unwrap(), 29);
        assert!(nth_prime(0).is_err());
        // beyond the cached table
        assert_eq!(nth_prime(250_000).unwrap(), 3_497_861);
    }

    #[test]
    fn rosser_examples() {
        let r4: f64 = rosser_upper(4).unwrap();
        assert!((r4 - 7.3564).abs() < 1e-3, "{r4}");
        assert!(r4 >= 7.0);
        let r10: f64 = rosser_upper(10).unwrap();
        assert!((r10 - 42.2302).abs() < 1e-3, "{r10}");
        assert!(rosser_upper::<f64>(3).is_err());
        let r4f: f32 = rosser_upper(4).unwrap();
        assert!((r4f - 7.3564).abs() < 1e-3);
    }

    #[test]
    fn jacobsthal_examples() {
        assert_eq!(jacobsthal(1).unwrap(), 1);
        assert_eq!(jacobsthal(2).unwrap(), 2);
        assert_eq!(jacobsthal(10).unwrap(), 4);
        assert_eq!(jacobsthal(30).unwrap(), 6);
        assert_eq!(jacobsthal(0).is_err(), true);
    }

    #[test]
    fn bounds_examples() {
        let b = jacobsthal_bounds::<f64>(&factorize(30).unwrap());
        assert_eq!(b.kanold, 8);
        assert!(b.stevens.unwrap() >= 6.0);
        assert_eq!(jacobsthal_bounds::<f64>(&factorize(2).unwrap()).kanold, 2);
        let one = jacobsthal_bounds::<f64>(&factorize(1).unwrap());
        assert_eq!((one.kanold, one.stevens), (1, None));
    }

    #[test]
    fn squarefree_quotient_examples() {
        assert_eq!(squarefree_quotient(12, 4).unwrap(), 3);
        assert_eq!(squarefree_quotient(10, 3).unwrap(), 10);
        assert_eq!(squarefree_quotient(8, 2).unwrap(), 2);
    }

    #[test]
    fn coprime_shift_examples() {
        assert_eq!(minimal_coprime_shift(1, 1, 6).unwrap().k, 0);
        let s = minimal_coprime_shift(2, 3, 10).unwrap();
        assert_eq!((s.k, s.value, s.bound), (3, 11, 4));
        assert!(matches!(
            minimal_coprime_shift(2, 2, 4),
            Err(Error::NoSolution(_))
        ));
        assert_eq!(minimal_coprime_shift(0, 1, 1).unwrap().k, 0);
    }

    #[test]
    fn linnik_examples() {
        let one = factorize(1).unwrap();
        assert_eq!(linnik_comparator::<f64>(1, &one).unwrap(), 1.0);
        let v: f64 = linnik_comparator(2, &factorize(30).unwrap()).unwrap();
        assert!((v - 147.03).abs() < 0.05, "{v}");
        let w: f64 = linnik_comparator(3, &one).unwrap();
        // 3^5.2 = 302.7126...
        assert!((w - 302.7126).abs() < 1e-3, "{w}");
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn jacobsthal_matches_scan(d in 1u64..3000) {
            let g = jacobsthal(d).unwrap();
            prop_assert_eq!(g, oracle::jacobsthal(d));
            prop_assert_eq!(g, jacobsthal(radical(d).unwrap()).unwrap());
            prop_assert!(g <= 1 << omega(d).unwrap());
        }

        #[test]
        fn coprime_shift_is_minimal(n in 1u64..60, a_seed in 0u64..1000, d in 1u64..500) {
            let a = a_seed % n;
            match minimal_coprime_shift(a, n, d) {
                Ok(s) => {
                    prop_assert_eq!(Some(s.k), oracle::coprime_shift(a, n, d));
                    prop_assert!(s.k < s.bound);
                }
                Err(Error::NoSolution(_)) => prop_assert_eq!(oracle::coprime_shift(a, n, d), None),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn nth_prime_below_rosser(x in 4u64..20_000) {
            prop_assert!((nth_prime(x).unwrap() as f64) <= rosser_upper::<f64>(x).unwrap());
        }
    }
}
