//! The Euler product D₀(s) with Σ_q T(q) q^{-s} = ζ(3s + 6) D₀(s).

use serde::Serialize;

use crate::arith::{is_prime, primes_up_to};
use crate::error::{Error, Result};
use crate::exp_sums::{norm_form_moment, sixth_moment_prime};
use crate::local_densities::SIXTH_MOMENT_MOD_9;

/// Rosser–Schoenfeld: π(t) < 1.25506 t / log t for t > 1.
const PRIME_COUNT_CONSTANT: f64 = 1.25506;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerProductValue {
    pub s: f64,
    pub value: f64,
    pub prime_cutoff: u64,
    /// Relative bound: |D₀(s) / value − 1| <= tail_bound.
    pub tail_bound: f64,
}

impl EulerProductValue {
    /// Absolute error bound |D₀(s) − value|.
    pub fn abs_error(&self) -> f64 {
        self.value.abs() * self.tail_bound
    }

    /// Upper bound for D₀(s).
    pub fn upper(&self) -> f64 {
        self.value * (1.0 + self.tail_bound)
    }
}

fn factor_from_moment(p: u64, m6: u128, s: f64) -> f64 {
    let pf = p as f64;
    if p == 3 {
        return 1.0 + SIXTH_MOMENT_MOD_9 as f64 * 3f64.powf(-(2.0 * s + 14.0))
            - 3f64.powf(-(3.0 * s + 7.0));
    }
    1.0 + m6 as f64 * pf.powf(-(s + 7.0)) + (pf - 1.0) * pf.powf(-(2.0 * s + 7.0))
        - pf.powf(-(3.0 * s + 7.0))
}

/// The local factor of D₀ at `p`.
pub fn euler_factor(p: u64, s: f64) -> Result<f64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    check_domain(s)?;
    let m6 = if p == 3 { 0 } else { sixth_moment_prime(p)? };
    Ok(factor_from_moment(p, m6, s))
}

fn check_domain(s: f64) -> Result<()> {
    if s.is_nan() || s <= -2.0 {
        return Err(Error::Domain(format!(
            "Euler product for D0 diverges at s = {s} (needs s > -2)"
        )));
    }
    Ok(())
}

/// Σ_{p > x} p^{-a} for a > 1, via partial summation against the
/// Rosser–Schoenfeld bound.
pub fn prime_tail_bound(x: f64, a: f64) -> f64 {
    assert!(a > 1.0 && x > 1.0);
    PRIME_COUNT_CONSTANT * a * x.powf(1.0 - a) / ((a - 1.0) * x.ln())
}

/// Sixth moments of S(p, ·) for every prime up to a cutoff, evaluated once
/// and reused across arguments `s`.
#[derive(Debug, Clone)]
pub struct D0Evaluator {
    prime_cutoff: u64,
    moments: Vec<(u64, u128)>,
}

impl D0Evaluator {
    pub fn new(prime_cutoff: u64) -> Result<Self> {
        if prime_cutoff < 2 {
            return Err(Error::InvalidArgument(format!(
                "prime cutoff must be at least 2, got {prime_cutoff}"
            )));
        }
        let moments = primes_up_to(prime_cutoff)
            .into_iter()
            .map(|p| Ok((p, norm_form_moment(p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            prime_cutoff,
            moments,
        })
    }

    pub fn prime_cutoff(&self) -> u64 {
        self.prime_cutoff
    }

    /// Σ_{c=1}^{p-1} |S(p, c)|⁶ for the tabulated primes.
    pub fn moments(&self) -> &[(u64, u128)] {
        &self.moments
    }

    pub fn eval(&self, s: f64) -> Result<EulerProductValue> {
        self.eval_truncated(s, self.prime_cutoff)
    }

    /// The product over the tabulated primes `<= cutoff` only.
    pub fn eval_truncated(&self, s: f64, cutoff: u64) -> Result<EulerProductValue> {
        check_domain(s)?;
        let cutoff = cutoff.clamp(2, self.prime_cutoff);
        let end = self.moments.partition_point(|&(p, _)| p <= cutoff);
        let value = self.moments[..end]
            .iter()
            .map(|&(p, m6)| factor_from_moment(p, m6, s))
            .product();
        Ok(EulerProductValue {
            s,
            value,
            prime_cutoff: cutoff,
            tail_bound: tail_bound(s, cutoff),
        })
    }
}

/// exp(Σ_{p > P} |f_p(s) − 1|) − 1 with
/// |f_p(s) − 1| <= 22 p^{-(s+3)} + p^{-(2s+6)} + p^{-(3s+7)}; the first
/// constant uses Σ_c |S(p, c)|⁶ = (p − 1)p²(18p + L²) with L² < 4p.
fn tail_bound(s: f64, prime_cutoff: u64) -> f64 {
    let x = (prime_cutoff as f64).max(2.0);
    let b = 22.0 * prime_tail_bound(x, s + 3.0)
        + prime_tail_bound(x, 2.0 * s + 6.0)
        + prime_tail_bound(x, 3.0 * s + 7.0);
    b.exp_m1()
}

/// D₀(s) as a product over primes up to `prime_cutoff`.
pub fn d0(s: f64, prime_cutoff: u64) -> Result<EulerProductValue> {
    D0Evaluator::new(prime_cutoff)?.eval(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_examples() {
        assert_eq!(euler_factor(2, 0.0).unwrap(), 1.0);
        let f5 = euler_factor(5, 0.0).unwrap();
        assert!((f5 - (1.0 + 4.0 / 78_125.0 - 1.0 / 78_125.0)).abs() < 1e-16);
        let f3 = euler_factor(3, 0.0).unwrap();
        let want = 1.0 + 393_660.0 / 3f64.powi(14) - 1.0 / 3f64.powi(7);
        assert!((f3 - want).abs() < 1e-16);
        assert!(matches!(euler_factor(4, 0.0), Err(Error::NotPrime(4))));
    }

    #[test]
    fn product_examples() {
        assert_eq!(d0(0.0, 2).unwrap().value, 1.0);
        let v = d0(-5.0 / 3.0, 10_000).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0 && v.tail_bound > 0.0);
        assert!(matches!(d0(-2.0, 100), Err(Error::Domain(_))));
    }

    #[test]
    fn non_residue_primes_reduce() {
        for p in [2u64, 5, 11, 17, 23, 29] {
            for s in [0.0, -1.0, 0.7] {
                let pf = p as f64;
                let want = 1.0 + (pf - 1.0) * pf.powf(-(2.0 * s + 7.0)) - pf.powf(-(3.0 * s + 7.0));
                assert!((euler_factor(p, s).unwrap() - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tail_bound_covers_extension() {
        for s in [0.0, -0.5, -1.0, -5.0 / 3.0] {
            let small = d0(s, 1000).unwrap();
            let big = d0(s, 20_000).unwrap();
            assert!(
                (big.value - small.value).abs() <= small.abs_error(),
                "s = {s}"
            );
            assert!(big.tail_bound < small.tail_bound);
        }
    }

    #[test]
    fn moments_agree_with_histogram_route() {
        let ev = D0Evaluator::new(600).unwrap();
        for &(p, m6) in ev.moments() {
            if p != 3 {
                assert_eq!(m6, sixth_moment_prime(p).unwrap());
            }
        }
    }
}
