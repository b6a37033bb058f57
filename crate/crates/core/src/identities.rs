//! The exact identity suite shared by the CLI and the acceptance target.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{factorize, gcd};
use crate::dirichlet::SeriesContext;
use crate::error::Result;
use crate::exp_sums::{s_direct_all, CubicSumValue, ExpSumCache};
use crate::local_densities::{rho_second_moment, rho_table, rho_via_dft_all, TTable};

/// Ranges for each identity. `None` skips the Dirichlet check.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRanges {
    pub dft_q_max: u64,
    pub second_moment_q_max: u64,
    pub reduce_q_max: u64,
    pub multiplicative_max: u64,
    pub prime_power_max: u64,
    pub dirichlet: Option<DirichletRange>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletRange {
    pub s: f64,
    pub q_max: u64,
    pub prime_cutoff: u64,
}

impl Default for IdentityRanges {
    fn default() -> Self {
        Self {
            dft_q_max: 200,
            second_moment_q_max: 200,
            reduce_q_max: 2000,
            multiplicative_max: 500,
            prime_power_max: 2000,
            dirichlet: Some(DirichletRange {
                s: -1.0,
                q_max: 100_000,
                prime_cutoff: 10_000,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResult {
    pub name: String,
    pub cases: u64,
    pub max_deviation: f64,
    pub tolerance: String,
    pub passed: bool,
    pub first_failure: Option<String>,
}

#[derive(Default)]
struct Tally {
    cases: u64,
    max_dev: f64,
    failure: Option<String>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.cases += other.cases;
        self.max_dev = self.max_dev.max(other.max_dev);
        if self.failure.is_none() {
            self.failure = other.failure;
        }
        self
    }

    fn record(&mut self, dev: f64, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        self.max_dev = self.max_dev.max(dev);
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
    }

    fn finish(self, name: &str, tolerance: &str) -> IdentityResult {
        IdentityResult {
            name: name.into(),
            cases: self.cases,
            max_deviation: self.max_dev,
            tolerance: tolerance.into(),
            passed: self.failure.is_none(),
            first_failure: self.failure,
        }
    }
}

fn par_tally(qs: Vec<u64>, f: impl Fn(u64) -> Result<Tally> + Sync + Send) -> Result<Tally> {
    let parts: Vec<Tally> = qs.into_par_iter().map(f).collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(Tally::default(), Tally::merge))
}

fn cdist(a: CubicSumValue, b: CubicSumValue) -> f64 {
    (a - b).norm()
}

/// ρ(q, a) from the DFT of S(q, ·)³ equals the convolution count after
/// rounding, for every a.
pub fn dft_identity(q_max: u64) -> Result<IdentityResult> {
    let cache = ExpSumCache::new();
    let t = par_tally((1..=q_max).collect(), |q| {
        let exact = rho_table(q)?;
        let dft = rho_via_dft_all(&cache, q);
        let mut t = Tally::default();
        for (i, &v) in dft.iter().enumerate() {
            let a = i as i64 + 1;
            let want = exact.get(a);
            let ok = v.round() >= 0.0 && v.round() as u64 == want;
            t.record((v - want as f64).abs(), ok, || {
                format!("q = {q}, a = {a}: {v} vs {want}")
            });
        }
        Ok(t)
    })?;
    Ok(t.finish("dft_rho", "exact after rounding"))
}

/// Σ_a ρ(q, a)² = q⁵ Σ_{r | q} r T(r).
pub fn second_moment_identity(q_max: u64) -> Result<IdentityResult> {
    let t = par_tally((1..=q_max).collect(), |q| {
        let mut t = Tally::default();
        match rho_second_moment(q) {
            Ok(m) => {
                let dev = (m.lhs - m.rhs).abs() / m.lhs.abs().max(1.0);
                t.record(dev, true, String::new);
            }
            Err(e) => t.record(f64::INFINITY, false, || e.to_string()),
        }
        Ok(t)
    })?;
    Ok(t.finish("rho_second_moment", "1e-6 relative"))
}

/// s_reduce (reduction, multiplicative assembly, prime-power rules) against
/// direct summation for every q ≤ `reduce_q_max` and every a, together with
/// the prime-power forms for p^α ≤ `prime_power_max`. Deviations are
/// reported relative to q.
pub fn exp_sum_identities(reduce_q_max: u64, prime_power_max: u64) -> Result<[IdentityResult; 2]> {
    let cache = ExpSumCache::new();
    let q_top = reduce_q_max.max(prime_power_max);
    let parts: Vec<(Tally, Tally)> = (1..=q_top)
        .into_par_iter()
        .map(|q| -> Result<(Tally, Tally)> {
            let row = s_direct_all(q);
            let mut reduce = Tally::default();
            let mut power = Tally::default();
            let tol = 1e-9 * q as f64;
            if q <= reduce_q_max {
                for (a, &d) in row.iter().enumerate() {
                    let dev = cdist(cache.s_reduce(q, a as i64), d);
                    reduce.record(dev / q as f64, dev <= tol, || {
                        format!("S({q}, {a}) deviates by {dev}")
                    });
                }
            }
            let f = factorize(q);
            if q <= prime_power_max && f.len() == 1 {
                for (a, &d) in row.iter().enumerate() {
                    if gcd(a as u64, q) != 1 {
                        continue;
                    }
                    let dev = cdist(cache.s_fast(q, a as i64)?, d);
                    power.record(dev / q as f64, dev <= tol, || {
                        format!("S({q}, {a}) deviates by {dev}")
                    });
                }
            }
            Ok((reduce, power))
        })
        .collect::<Result<_>>()?;
    let (reduce, power) = parts
        .into_iter()
        .fold((Tally::default(), Tally::default()), |(r, p), (r2, p2)| {
            (r.merge(r2), p.merge(p2))
        });
    Ok([
        reduce.finish("s_reduce_vs_direct", "1e-9 * q"),
        power.finish("prime_power_forms", "1e-9 * q"),
    ])
}

/// S(q₁q₂, a) = S(q₁, a q₂²) S(q₂, a q₁²) for coprime q₁, q₂ ≥ 2 with
/// q₁q₂ ≤ `max`, every a, all by direct summation.
pub fn multiplicativity_identity(max: u64) -> Result<IdentityResult> {
    let rows: Vec<Vec<CubicSumValue>> = (0..=max)
        .into_par_iter()
        .map(|q| if q == 0 { Vec::new() } else { s_direct_all(q) })
        .collect();
    let t = par_tally((2..=max / 2).collect(), |q1| {
        let mut t = Tally::default();
        for q2 in 2..=max / q1 {
            if gcd(q1, q2) != 1 {
                continue;
            }
            let q = q1 * q2;
            for a in 0..q {
                let lhs = rows[q as usize][a as usize];
                let b1 = (a % q1) * (q2 % q1) % q1 * (q2 % q1) % q1;
                let b2 = (a % q2) * (q1 % q2) % q2 * (q1 % q2) % q2;
                let rhs = rows[q1 as usize][b1 as usize] * rows[q2 as usize][b2 as usize];
                let dev = cdist(lhs, rhs);
                t.record(dev / q as f64, dev <= 1e-9 * q as f64, || {
                    format!("q1 = {q1}, q2 = {q2}, a = {a}: deviation {dev}")
                });
            }
        }
        Ok(t)
    })?;
    Ok(t.finish("multiplicativity", "1e-9 * q"))
}

/// Σ T(q) q^{-s} against ζ(3s + 6) D₀(s), within the reported tail bounds.
pub fn dirichlet_identity(r: DirichletRange) -> Result<IdentityResult> {
    let ctx = SeriesContext::new(r.prime_cutoff, r.q_max)?;
    Ok(dirichlet_identities(&ctx, &[r.s])?.remove(0))
}

/// Σ_k T(2^k) = 64/63.
pub fn two_adic_sum() -> Result<IdentityResult> {
    let t = TTable::new(1 << 20)?;
    let sum: f64 = (0..=20)
        .map(|k| t.get(1 << k))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum();
    let dev = (sum - 64.0 / 63.0).abs();
    let mut tally = Tally::default();
    tally.record(dev, dev <= 1e-12, || format!("sum = {sum}"));
    Ok(tally.finish("two_adic_t_sum", "1e-12"))
}

pub fn run_suite(ranges: &IdentityRanges) -> Result<Vec<IdentityResult>> {
    let mut out = vec![
        dft_identity(ranges.dft_q_max)?,
        second_moment_identity(ranges.second_moment_q_max)?,
    ];
    out.extend(exp_sum_identities(
        ranges.reduce_q_max,
        ranges.prime_power_max,
    )?);
    out.push(multiplicativity_identity(ranges.multiplicative_max)?);
    out.push(two_adic_sum()?);
    if let Some(r) = ranges.dirichlet {
        out.push(dirichlet_identity(r)?);
    }
    Ok(out)
}

/// The Dirichlet check at several s against one series context.
pub fn dirichlet_identities(ctx: &SeriesContext, s_values: &[f64]) -> Result<Vec<IdentityResult>> {
    s_values
        .iter()
        .map(|&s| {
            let c = ctx.check_identity(s)?;
            let mut t = Tally::default();
            t.record(c.difference.abs(), c.within_bounds, || {
                format!(
                    "s = {s}: |difference| = {} exceeds {}",
                    c.difference.abs(),
                    c.series_tail_bound + c.product_error
                )
            });
            Ok(t.finish(
                &format!("dirichlet_series(s = {s})"),
                &format!("{:.3e}", c.series_tail_bound + c.product_error),
            ))
        })
        .collect()
}
