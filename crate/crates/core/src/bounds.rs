//! Explicit constants of the effective Manin-Mumford argument: the prime
//! index `x`, the modulus `N`, the multiplier set Sigma, the degree bound
//! `f(D, d)` and its iterates, the exponents `lambda`, `delta`, `delta'`, and
//! the order threshold `delta(D, Delta, c)`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{self, FactoredInteger, NTH_PRIME_CAP};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::serde_util;

/// Which form of the prime index `x` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XVariant {
    /// `ceil(D^(1/4c)) + D + omega(d) + 1`.
    #[default]
    RootCeil,
    /// The simpler `2D + omega(d) + 1`, which is never smaller.
    Doubled,
}

/// How `g(d)` is bounded when forming the closed-form comparator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum JacobsthalProfile {
    /// `g <= 2^omega`; the comparator uses the tightest `alpha = 2, beta`
    /// with `2 omega^beta >= 2^omega` on `1..=omega_max`.
    Kanold,
    /// `g <= alpha omega^beta`, checked against Kanold on `1..=omega_max`.
    Power { alpha: f64, beta: f64 },
}

/// Largest `omega` for an integer below `2^64`.
pub const DEFAULT_OMEGA_MAX: u32 = 15;

/// Inputs of the effective bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundParams {
    /// Degree `D` of the subvariety.
    #[serde(rename = "D")]
    pub degree: u64,
    /// Dimension `Delta`.
    #[serde(rename = "Delta")]
    pub dimension: u32,
    /// Lang-group exponent `c`.
    pub c: u32,
    /// Order `d` of the torsion coset.
    pub d: u64,
    /// Residue characteristic, `0` or a prime.
    pub p: u64,
    #[serde(serialize_with = "serde_util::rational")]
    pub eps: BigRational,
    pub profile: JacobsthalProfile,
    pub x_variant: XVariant,
    pub omega_max: u32,
}

impl BoundParams {
    pub fn new(degree: u64, dimension: u32, c: u32, d: u64, p: u64) -> Result<Self> {
        let params = BoundParams {
            degree,
            dimension,
            c,
            d,
            p,
            eps: BigRational::new(1.into(), 2.into()),
            profile: JacobsthalProfile::Kanold,
            x_variant: XVariant::RootCeil,
            omega_max: DEFAULT_OMEGA_MAX,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_eps(mut self, eps: BigRational) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_profile(mut self, profile: JacobsthalProfile) -> Result<Self> {
        self.profile = profile;
        self.validate()?;
        Ok(self)
    }

    pub fn with_x_variant(mut self, variant: XVariant) -> Self {
        self.x_variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 || self.c == 0 || self.d == 0 {
            return Err(Error::invalid("D, c and d must be at least 1"));
        }
        if self.p == 1 || (self.p > 1 && arith::factorize(self.p)?.factors() != [(self.p, 1)]) {
            return Err(Error::invalid(format!("characteristic {} is neither 0 nor prime", self.p)));
        }
        if !self.eps.is_positive() {
            return Err(Error::invalid("eps_slack must be positive"));
        }
        if let JacobsthalProfile::Power { alpha, beta } = self.profile {
            if !(alpha > 0.0 && beta > 0.0) {
                return Err(Error::invalid("alpha and beta must be positive"));
            }
            for w in 1..=self.omega_max {
                let kanold = 2f64.powi(w as i32);
                if alpha * (w as f64).powf(beta) < kanold {
                    return Err(Error::invalid(format!(
                        "alpha * omega^beta falls below 2^omega at omega = {w}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn d_factored(&self) -> Result<FactoredInteger> {
        arith::factorize(self.d)
    }

    /// `d * max(1, p)`.
    fn d_times_char(&self) -> Result<u64> {
        self.d
            .checked_mul(self.p.max(1))
            .ok_or_else(|| Error::invalid("d * p overflows 64 bits"))
    }

    /// The `(alpha, beta)` pair fed to the closed-form comparator.
    pub fn power_pair(&self) -> (f64, f64) {
        match self.profile {
            JacobsthalProfile::Power { alpha, beta } => (alpha, beta),
            JacobsthalProfile::Kanold => {
                let beta = (2..=self.omega_max.max(2))
                    .map(|w| (w - 1) as f64 * 2f64.ln() / (w as f64).ln())
                    .fold(1.0, f64::max);
                (2.0, beta)
            }
        }
    }
}

/// Smallest `r` with `r^k >= n`.
pub fn ceil_root(n: &BigUint, k: u32) -> BigUint {
    if k == 1 || n.is_zero() {
        return n.clone();
    }
    let r = n.nth_root(k);
    if r.pow(k) < *n {
        r + 1u32
    } else {
        r
    }
}

fn checked_pow(base: &BigUint, exp: u64, caps: &Caps) -> Result<BigUint> {
    let bits = base.bits().saturating_mul(exp);
    if bits > caps.bigint_bits {
        return Err(Error::cap("big-integer bits", bits, caps.bigint_bits));
    }
    let exp32 = u32::try_from(exp).map_err(|_| Error::cap("exponent", exp, u32::MAX))?;
    Ok(base.pow(exp32))
}

fn x_for(degree: &BigUint, omega: u32, c: u32, variant: XVariant) -> BigUint {
    match variant {
        XVariant::RootCeil => ceil_root(degree, 4 * c) + degree + BigUint::from(omega + 1),
        XVariant::Doubled => degree * 2u32 + BigUint::from(omega + 1),
    }
}

/// `p(x)` when `x` is within the exact prime cap, otherwise Rosser's upper
/// bound rounded up. The flag reports which one was used.
fn prime_or_upper(x: &BigUint) -> Result<(BigUint, bool)> {
    if let Some(small) = x.to_u64().filter(|&v| v <= NTH_PRIME_CAP) {
        return Ok((arith::nth_prime(small)?.into(), true));
    }
    // ln x from the leading 53 bits; the factor is rounded up before use.
    let bits = x.bits();
    let shift = bits.saturating_sub(53);
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    let ln = top.ln() + shift as f64 * std::f64::consts::LN_2;
    let factor = ln * (1.0 + ln.ln()) * (1.0 + 1e-12);
    const SCALE: u64 = 1 << 30;
    let num = BigUint::from((factor * SCALE as f64).ceil() as u64);
    Ok(((x * num).div_ceil(&BigUint::from(SCALE)), false))
}

/// The prime index `x`.
pub fn x_value(params: &BoundParams) -> Result<u64> {
    let omega = params.d_factored()?.omega();
    x_for(&params.degree.into(), omega, params.c, params.x_variant)
        .to_u64()
        .ok_or_else(|| Error::invalid("x overflows 64 bits"))
}

/// `g(d max(1, p))`.
fn jacobsthal_dp(params: &BoundParams) -> Result<u64> {
    arith::jacobsthal(params.d_times_char()?)
}

/// `N = p(x)^c g(d max(1, p))`.
pub fn capital_n(params: &BoundParams) -> Result<BigUint> {
    let n = arith::nth_prime(x_value(params)?)?;
    Ok(BigUint::from(n).pow(params.c) * jacobsthal_dp(params)?)
}

/// The primes an element of Sigma must avoid: those of `d`, and `p`.
fn excluded_primes(params: &BoundParams) -> Result<Vec<u64>> {
    Ok(arith::factorize(params.d_times_char()?)?.primes().collect())
}

/// `#Sigma`, by inclusion-exclusion over the excluded primes.
pub fn sigma_size(params: &BoundParams) -> Result<BigUint> {
    let n = capital_n(params)?;
    let primes = excluded_primes(params)?;
    let mut total = BigInt::zero();
    for mask in 0u32..(1 << primes.len()) {
        let divisor: BigUint = primes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| BigUint::from(p))
            .product();
        let term = BigInt::from(&n / divisor);
        if mask.count_ones() % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
        .to_biguint()
        .ok_or_else(|| Error::invariant("negative inclusion-exclusion count"))
}

/// The set `{ m^c : 1 <= m <= N, gcd(m, d) = 1, p does not divide m }`,
/// sorted increasingly.
pub fn sigma_set(params: &BoundParams, caps: &Caps) -> Result<Vec<BigUint>> {
    let n = capital_n(params)?;
    let limit = n
        .to_u64()
        .filter(|&v| v <= caps.sigma)
        .ok_or_else(|| Error::cap("sigma modulus N", &n, caps.sigma))?;
    let primes = excluded_primes(params)?;
    Ok((1..=limit)
        .filter(|m| primes.iter().all(|p| m % p != 0))
        .map(|m| BigUint::from(m).pow(params.c))
        .collect())
}

/// `f(D', d)` for an arbitrary degree argument, with `d`, `p`, `c`, `Delta`
/// taken from `params`. The flag is `false` when `p(x)` had to be replaced
/// by its Rosser bound.
fn f_of(params: &BoundParams, degree: &BigUint, caps: &Caps) -> Result<(BigUint, bool)> {
    let omega = params.d_factored()?.omega();
    let x = x_for(degree, omega, params.c, params.x_variant);
    let (n, exact) = prime_or_upper(&x)?;
    let base = checked_pow(&n, params.c as u64, caps)? * jacobsthal_dp(params)?;
    let exp = 2 * params.c as u64 * params.dimension as u64;
    let f = degree.pow(2) * checked_pow(&base, exp, caps)?;
    if f.bits() > caps.bigint_bits {
        return Err(Error::cap("big-integer bits", f.bits(), caps.bigint_bits));
    }
    Ok((f, exact))
}

/// `f(D, d) = D^2 (p(x)^c g(d max(1,p)))^(2 c Delta)`, exactly.
pub fn f_bound(params: &BoundParams) -> Result<BigUint> {
    let (f, exact) = f_of(params, &params.degree.into(), &Caps::default())?;
    debug_assert!(exact, "x for a 64-bit degree is always within the prime cap");
    Ok(f)
}

/// One value of the iteration `f_0 = D`, `f_{i+1} = f(f_i, d)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Iterate {
    #[serde(serialize_with = "serde_util::big")]
    pub value: BigUint,
    /// `false` once some step used Rosser's bound in place of `p(x)`; the
    /// value is then an upper bound for the true iterate.
    pub exact: bool,
}

/// All iterates `f_0, ..., f_i`.
pub fn f_iterates(params: &BoundParams, i: u32, caps: &Caps) -> Result<Vec<Iterate>> {
    if i > params.dimension {
        return Err(Error::invalid(format!(
            "iterate index {i} exceeds Delta = {}",
            params.dimension
        )));
    }
    let mut out = vec![Iterate {
        value: params.degree.into(),
        exact: true,
    }];
    for _ in 0..i {
        let prev = out.last().unwrap();
        let (value, exact) = f_of(params, &prev.value, caps)?;
        let exact = exact && prev.exact;
        out.push(Iterate { value, exact });
    }
    Ok(out)
}

/// `f_i(D)`.
pub fn iterated_f(params: &BoundParams, i: u32, caps: &Caps) -> Result<Iterate> {
    Ok(f_iterates(params, i, caps)?.pop().unwrap())
}

/// `lambda`, `delta(Delta, c)` and `delta'(Delta, c)` as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExponentConstants {
    #[serde(serialize_with = "serde_util::rational")]
    pub lambda: BigRational,
    #[serde(serialize_with = "serde_util::rational")]
    pub delta: BigRational,
    #[serde(serialize_with = "serde_util::rational")]
    pub delta_prime: BigRational,
}

pub fn exponent_constants(dimension: u32, c: u32, eps: &BigRational) -> Result<ExponentConstants> {
    if c == 0 {
        return Err(Error::invalid("c must be at least 1"));
    }
    if !eps.is_positive() {
        return Err(Error::invalid("eps must be positive"));
    }
    let dim = BigInt::from(dimension);
    let c_q = BigRational::from_integer(c.into());
    let pairs = BigRational::new(&dim * &dim - &dim, 2.into());
    let lambda = &c_q * &c_q * pairs * (BigRational::one() + eps);
    let two_pow = BigRational::from_integer(BigInt::one() << dimension);
    let delta = &two_pow * (BigRational::one() + &lambda);
    let delta_prime = &two_pow * &lambda / c_q;
    Ok(ExponentConstants {
        lambda,
        delta,
        delta_prime,
    })
}

/// Both order inequalities with integer exponents after clearing the
/// common denominator `L` of `delta` and `delta'`:
/// `d^L >= (omega + 1)^(delta L) (2 g)^(delta' L)` and
/// `d^L >= D^(delta L) (2 g)^(delta' L)`, where `g = 2^omega_dp` is Kanold's
/// bound on `g(d max(1,p))`.
#[derive(Debug, Clone)]
pub struct ThresholdSystem {
    degree: BigUint,
    common: u32,
    delta_num: u32,
    delta_prime_num: u32,
    has_char: bool,
}

impl ThresholdSystem {
    pub fn new(params: &BoundParams) -> Result<Self> {
        let k = exponent_constants(params.dimension, params.c, &params.eps)?;
        let l = k.delta.denom().lcm(k.delta_prime.denom());
        let to_u32 = |v: BigInt| {
            v.to_u32()
                .ok_or_else(|| Error::cap("threshold exponent", v, u32::MAX))
        };
        let common = to_u32(l.clone())?;
        let delta_num = to_u32(k.delta.numer() * &l / k.delta.denom())?;
        let delta_prime_num = to_u32(k.delta_prime.numer() * &l / k.delta_prime.denom())?;
        Ok(ThresholdSystem {
            degree: params.degree.into(),
            common,
            delta_num,
            delta_prime_num,
            has_char: params.p > 1,
        })
    }

    /// Right-hand side (raised to the power `L`) for a given `omega(d)` and
    /// `omega(d max(1,p))`.
    fn rhs_pow(&self, omega_d: u32, omega_dp: u32) -> BigUint {
        let two_g = BigUint::one() << (omega_dp as u64 + 1) * self.delta_prime_num as u64;
        let first = BigUint::from(omega_d + 1).pow(self.delta_num);
        let second = self.degree.pow(self.delta_num);
        first.max(second) * two_g
    }

    /// Exact check of both inequalities at `d`.
    pub fn holds(&self, d: &BigUint, omega_d: u32, omega_dp: u32) -> bool {
        d.pow(self.common) >= self.rhs_pow(omega_d, omega_dp)
    }

    /// Approximate bit length of `ceil_rhs`, computed without big integers.
    fn root_bits_estimate(&self, omega_d: u32, omega_dp: u32) -> u64 {
        let base = self.degree.bits().max(64 - (omega_d as u64 + 1).leading_zeros() as u64);
        let raw = self.delta_num as u64 * base + (omega_dp as u64 + 1) * self.delta_prime_num as u64;
        raw / self.common as u64
    }

    /// `log2` of the right-hand side ratio between `omega = k + 1` and `k`,
    /// after taking the `L`-th root.
    fn log2_step(&self, k: u32) -> f64 {
        let base = |w: u32| (w as f64 + 1.0).max(self.degree.to_f64().unwrap_or(f64::MAX)).log2();
        (self.delta_num as f64 * (base(k + 1) - base(k)) + self.delta_prime_num as f64)
            / self.common as f64
    }

    fn ceil_rhs(&self, omega_d: u32, omega_dp: u32) -> BigUint {
        ceil_root(&self.rhs_pow(omega_d, omega_dp), self.common)
    }

    /// Whether multiplying the primorial by `prime` keeps pace with the step
    /// of the right-hand side from `omega = k` to `k + 1`. The step ratio is
    /// non-increasing in `k` while primes increase, so once this holds at
    /// some `k` it holds for all later ones.
    fn prime_outgrows_step(&self, prime: u64, k: u32) -> bool {
        let shift = u32::from(self.has_char);
        let lhs = BigUint::from(prime).pow(self.common) * self.rhs_pow(k, k + shift);
        lhs >= self.rhs_pow(k + 1, k + 1 + shift)
    }
}

/// `omega(d)` when `d` is small enough to factor, otherwise the largest `k`
/// whose primorial is at most `d`; in both cases `omega(d)` is at most the
/// returned value.
pub fn omega_upper_bound(d: &BigUint) -> Result<u32> {
    if let Some(small) = d.to_u64().filter(|&v| v <= 1_000_000_000_000) {
        return arith::omega(small);
    }
    let mut primorial = BigUint::one();
    let mut k = 0u32;
    loop {
        let p = arith::nth_prime(k as u64 + 1)?;
        let next = &primorial * p;
        if &next > d {
            return Ok(k);
        }
        primorial = next;
        k += 1;
    }
}

/// Threshold `delta(D, Delta, c)` with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Threshold {
    /// Smallest `T` such that every `d >= T` satisfies both inequalities.
    #[serde(serialize_with = "serde_util::big")]
    pub search: BigUint,
    /// `true` when `search` was pinned down by scanning every `d` below it
    /// with exact `omega`; otherwise it is the exact threshold of the
    /// primorial relaxation, still sufficient but possibly not minimal.
    pub search_exhaustive: bool,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_prime: f64,
    pub beta_prime: f64,
    /// `max{alpha' beta'^beta', alpha'^(beta'/(beta'-1)) D^(delta beta'/(beta'-1))}`,
    /// rounded up.
    #[serde(serialize_with = "serde_util::big")]
    pub closed_form: BigUint,
    /// `max(search, closed_form)`.
    #[serde(serialize_with = "serde_util::big")]
    pub value: BigUint,
}

/// Exact threshold of the relaxed system where `omega(d)` is replaced by the
/// primorial bound `k` on `[P_k, P_{k+1})`.
fn relaxed_threshold(sys: &ThresholdSystem, caps: &Caps) -> Result<BigUint> {
    prescreen_bits(sys, caps)?;
    let mut threshold = BigUint::one();
    let mut primorial = BigUint::one();
    let mut k = 0u32;
    loop {
        let next_prime = arith::nth_prime(k as u64 + 1)?;
        let next_primorial = &primorial * next_prime;
        let omega_dp = if sys.has_char { k + 1 } else { k };
        let estimate = sys.root_bits_estimate(k, omega_dp);
        if estimate > caps.bigint_bits {
            return Err(Error::cap("threshold bits", estimate, caps.bigint_bits));
        }
        let t = sys.ceil_rhs(k, omega_dp);
        if t > primorial {
            threshold = threshold.max(t.clone().min(next_primorial.clone()));
        } else if sys.prime_outgrows_step(next_prime, k) {
            // By induction P_j >= t_j for every later j.
            return Ok(threshold);
        }
        primorial = next_primorial;
        k += 1;
    }
}

/// Floating-point dry run of [`relaxed_threshold`] that fails fast when the
/// threshold would clearly exceed the big-integer budget.
fn prescreen_bits(sys: &ThresholdSystem, caps: &Caps) -> Result<()> {
    let mut log2_primorial = 0.0f64;
    let mut k = 0u32;
    loop {
        let omega_dp = if sys.has_char { k + 1 } else { k };
        let estimate = sys.root_bits_estimate(k, omega_dp);
        if estimate > caps.bigint_bits {
            return Err(Error::cap("threshold bits", estimate, caps.bigint_bits));
        }
        let next = arith::nth_prime(k as u64 + 1)? as f64;
        if log2_primorial > estimate as f64 + 64.0 && next.log2() > sys.log2_step(k) + 1.0 {
            return Ok(());
        }
        log2_primorial += next.log2();
        k += 1;
    }
}

/// Omega of every integer in `0..limit` by a smallest-prime-factor sieve.
fn omega_table(limit: usize) -> Vec<u32> {
    let mut omega = vec![0u32; limit];
    for i in 2..limit {
        if omega[i] == 0 {
            let mut j = i;
            while j < limit {
                omega[j] += 1;
                j += i;
            }
        }
    }
    omega
}

fn closed_form(params: &BoundParams, k: &ExponentConstants) -> (f64, f64, f64, f64, BigUint) {
    let (alpha, beta) = params.power_pair();
    let delta = k.delta.to_f64().unwrap_or(f64::INFINITY);
    let delta_prime = k.delta_prime.to_f64().unwrap_or(f64::INFINITY);
    let alpha_prime = alpha.powf(delta_prime);
    let beta_prime = delta_prime * beta + delta;
    let log2_first = alpha_prime.log2() + beta_prime * beta_prime.log2();
    let ratio = beta_prime / (beta_prime - 1.0);
    let log2_second =
        ratio * alpha_prime.log2() + delta * ratio * (params.degree as f64).log2();
    let log2 = log2_first.max(log2_second);
    (alpha, beta, alpha_prime, beta_prime, ceil_pow2(log2))
}

/// `ceil(2^v)`, snapping values within `f64` noise of an integer and
/// otherwise rounding upward.
fn ceil_pow2(v: f64) -> BigUint {
    if !v.is_finite() || v <= 0.0 {
        return BigUint::one();
    }
    if v < 52.0 {
        let x = 2f64.powf(v);
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x {
            return BigUint::from(r as u64);
        }
        return BigUint::from((x * (1.0 + 1e-12)).ceil() as u64);
    }
    let v = v * (1.0 + 1e-12);
    let whole = v.floor();
    let mantissa = 2f64.powf(v - whole + 52.0).ceil() as u64;
    BigUint::from(mantissa) << (whole as u64 - 52)
}

/// The order threshold `delta(D, Delta, c)`.
///
/// The primary value comes from an exact search: the primorial relaxation
/// gives a threshold valid for every `d`, and when that threshold is within
/// `caps.threshold_scan` every smaller `d` is then re-checked with its exact
/// `omega`. The closed form is evaluated as a comparator and the larger of the
/// two is returned.
pub fn final_delta(params: &BoundParams, caps: &Caps) -> Result<Threshold> {
    let k = exponent_constants(params.dimension, params.c, &params.eps)?;
    let (alpha, beta, alpha_prime, beta_prime, closed) = closed_form(params, &k);
    if params.dimension == 0 {
        return Ok(Threshold {
            search: BigUint::one(),
            search_exhaustive: true,
            alpha,
            beta,
            alpha_prime,
            beta_prime,
            closed_form: BigUint::one(),
            value: BigUint::one(),
        });
    }
    let sys = ThresholdSystem::new(params)?;
    let relaxed = relaxed_threshold(&sys, caps)?;
    let (search, exhaustive) = match relaxed.to_u64().filter(|&t| t <= caps.threshold_scan) {
        Some(t) => {
            let omega = omega_table(t as usize);
            let p = params.p;
            let mut last_bad = 0u64;
            for d in 1..t {
                let w = omega[d as usize];
                let w_dp = if p > 1 && d % p != 0 { w + 1 } else { w };
                if !sys.holds(&BigUint::from(d), w, w_dp) {
                    last_bad = d;
                }
            }
            (BigUint::from(last_bad + 1), true)
        }
        None => (relaxed, false),
    };
    let value = search.clone().max(closed.clone());
    Ok(Threshold {
        search,
        search_exhaustive: exhaustive,
        alpha,
        beta,
        alpha_prime,
        beta_prime,
        closed_form: closed,
        value,
    })
}

/// Check both inequalities at an arbitrary `d`, bounding `omega` from above
/// when `d` is too large to factor.
pub fn threshold_holds_at(params: &BoundParams, d: &BigUint) -> Result<bool> {
    let sys = ThresholdSystem::new(params)?;
    let w = omega_upper_bound(d)?;
    let w_dp = if params.p > 1 && !(d % params.p).is_zero() { w + 1 } else { w };
    Ok(sys.holds(d, w, w_dp))
}

/// Whether `p(2D + omega + 1) <= max(D, omega + 1)^(1 + eps)` holds, the
/// prime-size estimate the exponent constants are derived from.
pub fn eps_slack_holds(params: &BoundParams) -> Result<bool> {
    let omega = params.d_factored()?.omega();
    let d_star = BigUint::from(params.degree.max(omega as u64 + 1));
    let x = 2 * params.degree + omega as u64 + 1;
    let (n, _) = prime_or_upper(&BigUint::from(x))?;
    let num = params
        .eps
        .numer()
        .to_u32()
        .ok_or_else(|| Error::invalid("eps numerator too large"))?;
    let den = params
        .eps
        .denom()
        .to_u32()
        .ok_or_else(|| Error::invalid("eps denominator too large"))?;
    Ok(n.pow(den) <= d_star.pow(den + num))
}

/// Everything computed for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub params: BoundParams,
    pub x: u64,
    pub n: u64,
    #[serde(rename = "N", serialize_with = "serde_util::big")]
    pub capital_n: BigUint,
    #[serde(serialize_with = "serde_util::big")]
    pub sigma_size: BigUint,
    #[serde(serialize_with = "serde_util::big")]
    pub f_value: BigUint,
    #[serde(serialize_with = "serde_util::big_vec")]
    pub f_iterates: Vec<BigUint>,
    pub f_iterates_exact: bool,
    #[serde(serialize_with = "serde_util::rational")]
    pub lambda: BigRational,
    #[serde(serialize_with = "serde_util::rational")]
    pub delta_exp: BigRational,
    #[serde(serialize_with = "serde_util::rational")]
    pub delta_prime_exp: BigRational,
    pub alpha_prime: f64,
    pub beta_prime: f64,
    pub eps_slack_holds: bool,
    pub threshold: Threshold,
    #[serde(serialize_with = "serde_util::big")]
    pub final_delta: BigUint,
}

pub fn bound_report(params: &BoundParams, caps: &Caps) -> Result<BoundReport> {
    params.validate()?;
    let x = x_value(params)?;
    let n = arith::nth_prime(x)?;
    let k = exponent_constants(params.dimension, params.c, &params.eps)?;
    let iterates = f_iterates(params, params.dimension, caps)?;
    let threshold = final_delta(params, caps)?;
    Ok(BoundReport {
        params: params.clone(),
        x,
        n,
        capital_n: capital_n(params)?,
        sigma_size: sigma_size(params)?,
        f_value: f_bound(params)?,
        f_iterates_exact: iterates.iter().all(|i| i.exact),
        f_iterates: iterates.into_iter().map(|i| i.value).collect(),
        lambda: k.lambda,
        delta_exp: k.delta,
        delta_prime_exp: k.delta_prime,
        alpha_prime: threshold.alpha_prime,
        beta_prime: threshold.beta_prime,
        eps_slack_holds: eps_slack_holds(params)?,
        final_delta: threshold.value.clone(),
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(degree: u64, dimension: u32, c: u32, d: u64, p: u64) -> BoundParams {
        BoundParams::new(degree, dimension, c, d, p).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn x_examples() {
        assert_eq!(x_value(&params(1, 1, 1, 1, 0)).unwrap(), 3);
        assert_eq!(x_value(&params(16, 1, 1, 6, 0)).unwrap(), 21);
        assert_eq!(x_value(&params(2, 1, 2, 2, 0)).unwrap(), 6);
        let doubled = params(16, 1, 1, 6, 0).with_x_variant(XVariant::Doubled);
        assert_eq!(x_value(&doubled).unwrap(), 35);
    }

    #[test]
    fn capital_n_examples() {
        assert_eq!(capital_n(&params(1, 1, 1, 1, 0)).unwrap(), 5u32.into());
        assert_eq!(capital_n(&params(1, 1, 1, 1, 2)).unwrap(), 10u32.into());
        assert_eq!(capital_n(&params(1, 1, 2, 1, 0)).unwrap(), 25u32.into());
    }

    #[test]
    fn sigma_examples() {
        let caps = Caps::default();
        let s = sigma_set(&params(1, 1, 1, 1, 0), &caps).unwrap();
        assert_eq!(s, (1u32..=5).map(BigUint::from).collect::<Vec<_>>());
        // x = 1 + 1 + omega(2) + 1 = 4, so N = p(4) g(2) = 14.
        let s = sigma_set(&params(1, 1, 1, 2, 0), &caps).unwrap();
        assert_eq!(s, (1u32..=13).step_by(2).map(BigUint::from).collect::<Vec<_>>());
        let s = sigma_set(&params(1, 1, 2, 1, 2), &caps).unwrap();
        let expected: Vec<BigUint> = (1u32..=50).step_by(2).map(|m| BigUint::from(m * m)).collect();
        assert_eq!(s, expected);
        for p in [params(1, 1, 1, 2, 0), params(3, 2, 2, 6, 5), params(1, 1, 2, 1, 2)] {
            assert_eq!(
                sigma_size(&p).unwrap(),
                BigUint::from(sigma_set(&p, &caps).unwrap().len())
            );
        }
    }

    #[test]
    fn sigma_cap() {
        let caps = Caps { sigma: 3, ..Caps::default() };
        assert!(matches!(
            sigma_set(&params(1, 1, 1, 1, 0), &caps),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_bound(&params(1, 1, 1, 1, 0)).unwrap(), 25u32.into());
        assert_eq!(f_bound(&params(1, 0, 1, 1, 0)).unwrap(), 1u32.into());
        assert_eq!(f_bound(&params(2, 1, 1, 1, 0)).unwrap(), 484u32.into());
    }

    #[test]
    fn iterate_examples() {
        let caps = Caps::default();
        let p = params(7, 2, 1, 1, 0);
        assert_eq!(iterated_f(&p, 0, &caps).unwrap().value, 7u32.into());
        assert_eq!(iterated_f(&params(1, 1, 1, 1, 0), 1, &caps).unwrap().value, 25u32.into());
        // Delta = 2: f(1) = 5^4 = 625; x = ceil(625^(1/4)) + 625 + 1 = 631,
        // p(631) = 4663, so f_2 = 625^2 * 4663^4.
        let two = iterated_f(&params(1, 2, 1, 1, 0), 2, &caps).unwrap();
        assert!(two.exact);
        assert_eq!(two.value, BigUint::from(625u32).pow(2) * BigUint::from(4663u32).pow(4));
        assert!(iterated_f(&params(1, 1, 1, 1, 0), 2, &caps).is_err());
    }

    #[test]
    fn exponent_examples() {
        let half = q(1, 2);
        let k = exponent_constants(1, 1, &half).unwrap();
        assert_eq!((k.lambda, k.delta, k.delta_prime), (q(0, 1), q(2, 1), q(0, 1)));
        let k = exponent_constants(2, 1, &half).unwrap();
        assert_eq!((k.lambda, k.delta, k.delta_prime), (q(3, 2), q(10, 1), q(6, 1)));
        let k = exponent_constants(0, 3, &half).unwrap();
        assert_eq!((k.lambda, k.delta, k.delta_prime), (q(0, 1), q(1, 1), q(0, 1)));
    }

    #[test]
    fn threshold_smallest_case() {
        // delta = 2, delta' = 0: d >= (omega(d) + 1)^2 first holds for good
        // from d = 7 on (d = 6 has omega = 2 and 6 < 9).
        let t = final_delta(&params(1, 1, 1, 1, 0), &Caps::default()).unwrap();
        assert!(t.search_exhaustive);
        assert_eq!(t.search, 7u32.into());
        assert_eq!(t.closed_form, 4u32.into());
        assert_eq!(t.value, 7u32.into());
        assert_eq!(final_delta(&params(3, 0, 1, 1, 0), &Caps::default()).unwrap().value, 1u32.into());
    }

    #[test]
    fn ceil_root_basics() {
        assert_eq!(ceil_root(&16u32.into(), 4), 2u32.into());
        assert_eq!(ceil_root(&17u32.into(), 4), 3u32.into());
        assert_eq!(ceil_root(&1u32.into(), 8), 1u32.into());
        assert_eq!(ceil_root(&2u32.into(), 8), 2u32.into());
    }

    #[test]
    fn power_profile_validation() {
        let ok = params(1, 1, 1, 1, 0).with_profile(JacobsthalProfile::Power { alpha: 2.0, beta: 4.0 });
        assert!(ok.is_ok());
        let bad = params(1, 1, 1, 1, 0).with_profile(JacobsthalProfile::Power { alpha: 1.0, beta: 2.0 });
        assert!(bad.is_err());
        assert!(BoundParams::new(1, 1, 1, 1, 4).is_err());
        assert!(BoundParams::new(0, 1, 1, 1, 0).is_err());
    }

    #[test]
    fn eps_slack_small_degree_fails() {
        // p(3) = 5 > 1^(3/2): the slack estimate is an asymptotic one.
        assert!(!eps_slack_holds(&params(1, 1, 1, 1, 0)).unwrap());
        assert!(eps_slack_holds(&params(10_000_000, 1, 1, 1, 0)).unwrap());
    }

    #[test]
    fn rosser_fallback_dominates_exact_prime() {
        let x = BigUint::from(NTH_PRIME_CAP + 1);
        let (upper, exact) = prime_or_upper(&x).unwrap();
        assert!(!exact);
        assert!(upper > BigUint::from(arith::nth_prime(NTH_PRIME_CAP).unwrap()));
    }

    #[test]
    fn threshold_regression_delta_two() {
        let t = final_delta(&params(2, 2, 1, 1, 0), &Caps::default()).unwrap();
        assert!(!t.search_exhaustive);
        assert!(t.search > t.closed_form);
        let pinned: BigUint = "461837142733311595741868347837303014471452359482974828785986022471352471881043312701479146259423923779690478103184156268363081055381203964750269576386060258115584".parse().unwrap();
        assert_eq!(t.value, pinned);
        assert!(threshold_holds_at(&params(2, 2, 1, 1, 0), &pinned).unwrap());
    }

    #[test]
    fn threshold_cap_reported() {
        assert!(matches!(
            final_delta(&params(1, 3, 1, 1, 0), &Caps::default()),
            Err(Error::CapExceeded { .. })
        ));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn f(degree: u64, dimension: u32, c: u32, d: u64) -> BigUint {
        f_bound(&BoundParams::new(degree, dimension, c, d, 0).unwrap()).unwrap()
    }

    proptest! {
        #[test]
        fn f_bound_monotone(degree in 1u64..50, dimension in 1u32..3, c in 1u32..3, d in 1u64..50, d2 in 1u64..50) {
            let base = f(degree, dimension, c, d);
            prop_assert!(f(degree + 1, dimension, c, d) >= base);
            prop_assert!(f(degree, dimension + 1, c, d) >= base);
            prop_assert!(f(degree, dimension, c + 1, d) >= base);
            // d enters only through omega(d) and g(d).
            if oracle::omega(d) <= oracle::omega(d2) && oracle::jacobsthal(d) <= oracle::jacobsthal(d2) {
                prop_assert!(f(degree, dimension, c, d2) >= base);
            }
        }

        #[test]
        fn f_bound_dominates_capital_n(degree in 1u64..50, dimension in 0u32..4, c in 1u32..4, d in 1u64..50, p in prop::sample::select(vec![0u64, 2, 3, 7])) {
            let params = BoundParams::new(degree, dimension, c, d, p).unwrap();
            let n = capital_n(&params).unwrap();
            let floor = BigUint::from(degree).pow(2) * n.pow(2 * c * dimension);
            prop_assert!(f_bound(&params).unwrap() >= floor);
        }

        #[test]
        fn iterates_below_top(degree in 1u64..20, dimension in 1u32..3, c in 1u32..3, d in 1u64..30) {
            let params = BoundParams::new(degree, dimension, c, d, 0).unwrap();
            let its = f_iterates(&params, dimension, &Caps::default()).unwrap();
            let top = &its.last().unwrap().value;
            prop_assert!(its.iter().all(|it| &it.value <= top));
        }

        #[test]
        fn sigma_elements_distinct_and_coprime(degree in 1u64..4, c in 1u32..3, d in 1u64..40, p in prop::sample::select(vec![0u64, 2, 5])) {
            let params = BoundParams::new(degree, 1, c, d, p).unwrap();
            let Ok(set) = sigma_set(&params, &Caps::default()) else { return Ok(()); };
            prop_assert_eq!(BigUint::from(set.len()), sigma_size(&params).unwrap());
            prop_assert!(set.windows(2).all(|w| w[0] < w[1]));
            for v in &set {
                let root = v.nth_root(c);
                prop_assert_eq!(&root.pow(c), v);
                let r = root.to_u64().unwrap();
                prop_assert_eq!(r.gcd(&d), 1);
                prop_assert!(p == 0 || r % p != 0);
            }
        }
    }
}
