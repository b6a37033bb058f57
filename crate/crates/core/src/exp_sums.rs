//! The complete cubic exponential sum S(q, a) = Σ_{m=1}^{q} e(a m³ / q).
//!
//! Evaluated by definition, by reduction to lowest terms, by the prime-power
//! closed forms, and by multiplicative assembly over coprime factors.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::arith::{cube_mod, factorize, gcd, is_prime, mul_mod, residue};
use crate::convolution::{
    cube_histogram, cube_triple_convolution, prime_rho_square_sum, DIRECT_CUTOFF,
};
use crate::error::{Error, Result};
use crate::summation::ComplexNeumaier;

/// S(q, a) or ν(q, a) as a pair of doubles.
pub type CubicSumValue = Complex64;

/// e(k / q) from an already-reduced residue `k`.
#[inline]
pub fn unit_root(k: u64, q: u64) -> Complex64 {
    let k = k % q;
    // map to (-q/2, q/2] so the angle stays small
    let signed = if 2 * k > q {
        k as f64 - q as f64
    } else {
        k as f64
    };
    let (s, c) = (TAU * signed / q as f64).sin_cos();
    Complex64::new(c, s)
}

/// Σ_{m=1}^{q} e(a m³ / q) by direct summation.
pub fn s_direct(q: u64, a: i64) -> CubicSumValue {
    assert!(q >= 1, "modulus must be positive");
    let a = residue(a, q);
    let mut acc = ComplexNeumaier::new();
    for m in 1..=q {
        acc.add(unit_root(mul_mod(a, cube_mod(m, q), q), q));
    }
    acc.value()
}

/// S(q, a) for every `a` in `0..q` by direct summation grouped over the
/// cube-residue histogram.
pub fn s_direct_all(q: u64) -> Vec<CubicSumValue> {
    assert!(q >= 1);
    let h = cube_histogram(q);
    let support: Vec<(u64, f64)> = h
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(r, &c)| (r as u64, c as f64))
        .collect();
    let twiddle: Vec<Complex64> = (0..q).map(|k| unit_root(k, q)).collect();
    (0..q)
        .map(|a| {
            let mut acc = ComplexNeumaier::new();
            for &(r, c) in &support {
                acc.add(twiddle[mul_mod(a, r, q) as usize] * c);
            }
            acc.value()
        })
        .collect()
}

/// r = r1 · r2² · r3³ with r1, r2 squarefree and coprime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubePartFactorization {
    pub r1: u64,
    pub r2: u64,
    pub r3: u64,
}

pub fn cube_part_factorization(r: u64) -> CubePartFactorization {
    assert!(r >= 1);
    let mut out = CubePartFactorization {
        r1: 1,
        r2: 1,
        r3: 1,
    };
    for (p, e) in factorize(r) {
        match e % 3 {
            1 => out.r1 *= p,
            2 => out.r2 *= p,
            _ => {}
        }
        out.r3 *= p.pow(e / 3);
    }
    out
}

/// Prime-power closed form, with S(p, ·) and S(9, ·) supplied by `base`.
fn prime_power_with(
    p: u64,
    alpha: u32,
    a: u64,
    base: &impl Fn(u64, u64) -> CubicSumValue,
) -> CubicSumValue {
    let u = (alpha - 1) / 3;
    let pf = p as f64;
    match alpha % 3 {
        0 => Complex64::new(pf.powi(2 * u as i32 + 2), 0.0),
        2 if p != 3 => Complex64::new(pf.powi(2 * u as i32 + 1), 0.0),
        2 => base(9, a % 9) * 3f64.powi(2 * u as i32),
        // cubing permutes the units mod p, so S(p, a) = 0 exactly
        _ if p == 3 || p % 3 == 2 => Complex64::new(0.0, 0.0),
        _ => base(p, a % p) * pf.powi(2 * u as i32),
    }
}

/// S(p^α, a) for prime `p` and `gcd(a, p) = 1` from the prime-power rules.
pub fn s_prime_power(p: u64, alpha: u32, a: i64) -> Result<CubicSumValue> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if alpha == 0 {
        return Err(Error::InvalidArgument("exponent must be positive".into()));
    }
    let ar = residue(a, p);
    if ar == 0 {
        return Err(Error::NotCoprime { a, q: p });
    }
    let q = p
        .checked_pow(alpha)
        .ok_or_else(|| Error::InvalidArgument(format!("{p}^{alpha} overflows")))?;
    Ok(prime_power_with(p, alpha, residue(a, q), &|m, c| {
        s_direct(m, c as i64)
    }))
}

/// Multiplicative assembly: for q = q1·q2 coprime,
/// S(q, a) = S(q1, a q2²) · S(q2, a q1²), peeling one prime power at a time.
fn assemble(
    factors: &[(u64, u32)],
    q: u64,
    a: u64,
    base: &impl Fn(u64, u64) -> CubicSumValue,
) -> CubicSumValue {
    match factors {
        [] => Complex64::new(1.0, 0.0),
        [(p, e), rest @ ..] => {
            let q1 = p.pow(*e);
            let q2 = q / q1;
            let a1 = mul_mod(a % q1, mul_mod(q2 % q1, q2 % q1, q1), q1);
            let a2 = if q2 == 1 {
                0
            } else {
                mul_mod(a % q2, mul_mod(q1 % q2, q1 % q2, q2), q2)
            };
            prime_power_with(*p, *e, a1, base) * assemble(rest, q2, a2, base)
        }
    }
}

/// S(q, a) for `gcd(a, q) = 1` via the factorization of `q`.
pub fn s_fast(q: u64, a: i64) -> Result<CubicSumValue> {
    let ar = residue(a, q);
    if gcd(ar, q) != 1 {
        return Err(Error::NotCoprime { a, q });
    }
    Ok(assemble(&factorize(q), q, ar, &|m, c| {
        s_direct(m, c as i64)
    }))
}

/// S(q, b) for any `b`: with g = gcd(q, b), S(q, b) = g · S(q/g, b/g).
pub fn s_reduce(q: u64, b: i64) -> CubicSumValue {
    assert!(q >= 1);
    let br = residue(b, q);
    let g = gcd(q, br);
    let r = q / g;
    s_fast(r, (br / g) as i64).expect("reduced fraction is coprime") * g as f64
}

/// ν(q, a) = S(q, a)³ / q³.
pub fn nu(q: u64, a: i64) -> Result<CubicSumValue> {
    let s = s_fast(q, a)? / q as f64;
    Ok(s * s * s)
}

/// Σ_{c=1}^{p-1} |S(p, c)|⁶ as an exact integer, from
/// Σ_{c=1}^{p-1} |S(p,c)|⁶ = p Σ_a ρ(p, a)² − p⁶.
pub fn sixth_moment_prime(p: u64) -> Result<u128> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let square_sum: u128 = if p < DIRECT_CUTOFF {
        cube_triple_convolution(p)?
            .iter()
            .map(|&r| (r as u128).pow(2))
            .sum()
    } else {
        prime_rho_square_sum(p)
    };
    Ok(p as u128 * square_sum - (p as u128).pow(6))
}

/// The same moment from the norm form 4p = L² + 27M² (p ≡ 1 mod 3): the
/// three values of S(p, ·) on the cube classes are the roots of
/// t³ − 3pt − pL, whose sixth power sum is 54p³ + 3p²L², so the moment is
/// (p − 1)p²(18p + L²). O(√p) per prime.
pub fn sixth_moment_prime_norm_form(p: u64) -> Result<u128> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    norm_form_moment(p)
}

/// [`sixth_moment_prime_norm_form`] for a `p` already known to be prime.
pub(crate) fn norm_form_moment(p: u64) -> Result<u128> {
    if p % 3 != 1 {
        return Ok(0);
    }
    let four_p = 4 * p;
    let mut m = 1u64;
    while 27 * m * m < four_p {
        let rest = four_p - 27 * m * m;
        let mut l = (rest as f64).sqrt() as u64;
        while l * l > rest {
            l -= 1;
        }
        while (l + 1) * (l + 1) <= rest {
            l += 1;
        }
        if l * l == rest {
            let (p, l) = (p as u128, l as u128);
            return Ok((p - 1) * p * p * (18 * p + l * l));
        }
        m += 1;
    }
    Err(Error::Numerical(format!(
        "no representation 4·{p} = L² + 27M²"
    )))
}

/// Σ_{(c, q) = 1} |S(q, c)|⁶ as an exact integer, obtained from
/// q Σ_a ρ(q, a)² = Σ_{r | q} (q/r)⁶ Σ_{(c, r) = 1} |S(r, c)|⁶ by peeling
/// off the proper divisors.
pub fn reduced_sixth_moment(q: u64) -> Result<u128> {
    let mut by_divisor: Vec<(u64, u128)> = Vec::new();
    for d in crate::arith::divisors(q) {
        let total: u128 = cube_triple_convolution(d)?
            .iter()
            .map(|&r| (r as u128).pow(2))
            .sum::<u128>()
            * d as u128;
        let mut rest = total;
        for &(r, m) in &by_divisor {
            if d % r == 0 {
                rest -= ((d / r) as u128).pow(6) * m;
            }
        }
        by_divisor.push((d, rest));
    }
    Ok(by_divisor.last().map(|x| x.1).unwrap_or(0))
}

/// Memoizing evaluator: S(p, ·) for primes and S(9, ·) are tabulated on
/// first use, so repeated s_fast/s_reduce calls cost O(ω(q)).
#[derive(Debug, Default)]
pub struct ExpSumCache {
    tables: RwLock<HashMap<u64, Arc<Vec<CubicSumValue>>>>,
}

impl ExpSumCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// The full row S(m, ·) for a prime `m` or `m = 9`.
    pub fn base_row(&self, m: u64) -> Arc<Vec<CubicSumValue>> {
        if let Some(t) = self.tables.read().expect("poisoned").get(&m) {
            return Arc::clone(t);
        }
        let row = Arc::new(s_direct_all(m));
        self.tables
            .write()
            .expect("poisoned")
            .entry(m)
            .or_insert(row)
            .clone()
    }

    pub fn s_fast(&self, q: u64, a: i64) -> Result<CubicSumValue> {
        let ar = residue(a, q);
        if gcd(ar, q) != 1 {
            return Err(Error::NotCoprime { a, q });
        }
        Ok(assemble(&factorize(q), q, ar, &|m, c| {
            self.base_row(m)[c as usize]
        }))
    }

    pub fn s_reduce(&self, q: u64, b: i64) -> CubicSumValue {
        let br = residue(b, q);
        let g = gcd(q, br);
        self.s_fast(q / g, (br / g) as i64)
            .expect("reduced fraction is coprime")
            * g as f64
    }
}
