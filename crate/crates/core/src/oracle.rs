//! Brute-force reference implementations, written straight from the
//! definitions and kept independent of the main modules. The acceptance
//! suite compares the library against these.

use num_integer::Integer;

/// Prime factors of `n` by trial division.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn omega(n: u64) -> u32 {
    prime_factors(n).len() as u32
}

pub fn radical(n: u64) -> u64 {
    prime_factors(n).iter().product()
}

/// Smallest `m` such that every `m` consecutive integers contain one
/// coprime to `d`, by scanning every start position in one period.
pub fn jacobsthal(d: u64) -> u64 {
    let mut worst = 0;
    for start in 0..d {
        let mut run = 0;
        while (start + run).gcd(&d) != 1 {
            run += 1;
        }
        worst = worst.max(run + 1);
    }
    worst
}

/// The first `count` primes by trial division against smaller primes.
pub fn primes(count: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 1;
    while out.len() < count {
        candidate += 1;
        if out.iter().take_while(|&&p| p * p <= candidate).all(|p| candidate % p != 0) {
            out.push(candidate);
        }
    }
    out
}

/// The `n`-th prime, 1-based.
pub fn nth_prime(n: u64) -> u64 {
    primes(n as usize)[n as usize - 1]
}

/// Smallest `k <= d` with `gcd(a + k n, d) = 1`.
pub fn coprime_shift(a: u64, n: u64, d: u64) -> Option<u64> {
    (0..=d).find(|&k| (a + k * n).gcd(&d) == 1)
}

/// Additive order of `x` in `(Z/n)^r`.
pub fn point_order(n: u64, x: &[u64]) -> u64 {
    (1..=n).find(|&k| x.iter().all(|&v| v * k % n == 0)).unwrap_or(n)
}

/// All `sum c_i b_i` over coefficient vectors in `(Z/n)^k`.
pub fn span_mod(n: u64, rank: usize, basis: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut out = vec![vec![0u64; rank]];
    for b in basis {
        let mut next = Vec::with_capacity(out.len() * n as usize);
        for x in &out {
            for c in 0..n {
                next.push(x.iter().zip(b).map(|(&xi, &bi)| (xi + c * bi) % n).collect());
            }
        }
        next.sort();
        next.dedup();
        out = next;
    }
    out
}

/// `{ m^c x : gcd(m, ord x) = 1 }`.
pub fn lang_orbit(n: u64, x: &[u64], c: u32) -> Vec<Vec<u64>> {
    let d = point_order(n, x);
    let mut out: Vec<Vec<u64>> = (1..=d.max(1))
        .filter(|m| m.gcd(&d) == 1)
        .map(|m| {
            let mc = (0..c).fold(1u64, |acc, _| acc * m % d.max(1));
            x.iter().map(|&v| v * mc % n).collect()
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Whether every point's Lang orbit stays inside the sorted set `s`.
pub fn lang_stable(n: u64, s: &[Vec<u64>], c: u32) -> bool {
    s.iter()
        .all(|x| lang_orbit(n, x, c).iter().all(|y| s.binary_search(y).is_ok()))
}
