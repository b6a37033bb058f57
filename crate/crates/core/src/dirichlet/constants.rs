//! Truncated series over T(q), their tail bounds, and the constant set.

use serde::Serialize;

use super::euler::{D0Evaluator, EulerProductValue};
use super::zeta::zeta;
use crate::error::{Error, Result};
use crate::local_densities::{t_prime_power, TTable, SIXTH_MOMENT_MOD_9};
use crate::summation::Neumaier;

pub const GAMMA_EULER: f64 = 0.577_215_664_901_532_860_606_512_090_082;
/// Γ(4/3).
pub const GAMMA_4_3: f64 = 0.892_979_511_569_249_211_218_564_313_658;
/// Γ(5/3).
pub const GAMMA_5_3: f64 = 0.902_745_292_950_933_611_296_858_685_436;

pub const DEFAULT_PRIME_CUTOFF: u64 = 10_000_000;
pub const DEFAULT_SERIES_CUTOFF: u64 = 1_000_000;

// Euler products inside the Rankin tail bounds stop here; the bounds stay
// rigorous, only slightly looser.
const RANKIN_PRIME_CUTOFF: u64 = 100_000;

/// Relative size above which a truncation bound triggers a warning.
pub const WARN_RELATIVE: f64 = 1e-4;

/// Γ(4/3)⁶.
pub fn gamma_43_pow6() -> f64 {
    GAMMA_4_3.powi(6)
}

/// sup_r T(r) r², from the prime-power values: only p = 3 and the primes
/// p ≡ 1 (mod 3) below 64 have a local supremum above 1.
pub fn t_decay_constant() -> f64 {
    let mut c = SIXTH_MOMENT_MOD_9 as f64 / 3f64.powi(10);
    for p in crate::arith::primes_up_to(64) {
        if p % 3 != 1 {
            continue;
        }
        let m6 = crate::exp_sums::sixth_moment_prime_norm_form(p).expect("prime");
        let local = t_prime_power(p, 1, m6) * (p as f64).powi(2);
        c *= local.max(1.0);
    }
    c
}

/// A value with its error estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub error_estimate: f64,
}

impl Constant {
    fn new(name: &str, value: f64, error_estimate: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            error_estimate,
        }
    }
}

/// Partial sums of Σ T(q) q^{-s} (log q)^j and rigorous bounds for their
/// tails, built on one T table and one Euler-product evaluator.
#[derive(Debug, Clone)]
pub struct SeriesContext {
    series_cutoff: u64,
    // (q, T(q)) for T(q) != 0, ascending q
    support: Vec<(f64, f64)>,
    t_sup: f64,
    d0: D0Evaluator,
}

impl SeriesContext {
    pub fn new(prime_cutoff: u64, series_cutoff: u64) -> Result<Self> {
        let table = TTable::new(series_cutoff)?;
        Self::from_table(&table, prime_cutoff)
    }

    pub fn from_table(table: &TTable, prime_cutoff: u64) -> Result<Self> {
        let support = table
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != 0.0)
            .map(|(i, &t)| ((i + 1) as f64, t))
            .collect();
        Ok(Self {
            series_cutoff: table.bound(),
            support,
            t_sup: t_decay_constant(),
            d0: D0Evaluator::new(prime_cutoff)?,
        })
    }

    pub fn series_cutoff(&self) -> u64 {
        self.series_cutoff
    }

    pub fn prime_cutoff(&self) -> u64 {
        self.d0.prime_cutoff()
    }

    pub fn d0(&self, s: f64) -> Result<EulerProductValue> {
        self.d0.eval(s)
    }

    /// Σ_{q <= N} T(q) q^{-s} (log q)^j.
    pub fn partial(&self, s: f64, log_power: u32) -> f64 {
        let mut acc = Neumaier::new();
        for &(q, t) in &self.support {
            let l = if log_power == 0 {
                1.0
            } else {
                q.ln().powi(log_power as i32)
            };
            acc.add(t * q.powf(-s) * l);
        }
        acc.value()
    }

    /// Upper bound for Σ_{q > N} T(q) q^{-s} (log q)^j, j ∈ {0, 1}: the
    /// smaller of the pointwise bound T(q) <= c/q² (for s > −1) and Rankin's
    /// trick against ζ(3w + 6) D₀(w) at w = s − σ.
    pub fn tail_bound(&self, s: f64, log_power: u32) -> Result<f64> {
        if s <= -5.0 / 3.0 {
            return Err(Error::Domain(format!("series diverges at s = {s}")));
        }
        let n = self.series_cutoff as f64;
        let ln_n = n.ln();
        let mut best = f64::INFINITY;
        if s > -1.0 {
            let e = 1.0 + s;
            let integral = if log_power == 0 {
                n.powf(-e) / e
            } else {
                n.powf(-e) * (ln_n / e + 1.0 / (e * e))
            };
            best = self.t_sup * integral;
        }
        let width = s + 5.0 / 3.0;
        const STEPS: usize = 24;
        for i in 1..STEPS {
            let sigma = width * i as f64 / STEPS as f64;
            if log_power == 1 && sigma * ln_n <= 1.0 {
                // log q / q^σ is not yet decreasing at N
                continue;
            }
            let w = s - sigma;
            let d = self
                .d0
                .eval_truncated(w, self.prime_cutoff().min(RANKIN_PRIME_CUTOFF))?;
            let full = zeta(3.0 * w + 6.0)? * d.upper();
            let rest = (full - self.partial(w, 0)).max(0.0);
            let factor = if log_power == 0 { 1.0 } else { ln_n };
            best = best.min(n.powf(-sigma) * factor * rest);
        }
        Ok(best)
    }
}

/// Partial sum against the Euler-product side of
/// Σ T(q) q^{-s} = ζ(3s + 6) D₀(s).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletCheck {
    pub s: f64,
    pub q_max: u64,
    pub prime_cutoff: u64,
    pub partial_sum: f64,
    pub series_tail_bound: f64,
    pub product: f64,
    pub product_error: f64,
    pub difference: f64,
    pub within_bounds: bool,
}

pub fn check_dirichlet_identity(s: f64, q_max: u64, prime_cutoff: u64) -> Result<DirichletCheck> {
    SeriesContext::new(prime_cutoff, q_max)?.check_identity(s)
}

impl SeriesContext {
    pub fn check_identity(&self, s: f64) -> Result<DirichletCheck> {
        if s <= -5.0 / 3.0 {
            return Err(Error::Domain(format!(
                "Dirichlet identity needs s > -5/3, got {s}"
            )));
        }
        let partial_sum = self.partial(s, 0);
        let series_tail_bound = self.tail_bound(s, 0)?;
        let z = zeta(3.0 * s + 6.0)?;
        let d = self.d0(s)?;
        let product = z * d.value;
        let product_error = z.abs() * d.abs_error();
        let difference = partial_sum - product;
        let slack = 1e-13 * product.abs();
        Ok(DirichletCheck {
            s,
            q_max: self.series_cutoff,
            prime_cutoff: self.prime_cutoff(),
            partial_sum,
            series_tail_bound,
            product,
            product_error,
            difference,
            within_bounds: difference.abs() <= series_tail_bound + product_error + slack,
        })
    }
}

/// C₂ = −11/12 − 2∫_1^∞ B₂(u)/u³ du by exact integration over each
/// [n, n + 1], n < N, with |tail| <= 1/(12 N²). Returns (value, error).
pub fn c2_by_integration(cutoff: u64) -> (f64, f64) {
    let mut acc = Neumaier::new();
    for n in (1..cutoff).rev() {
        let nf = n as f64;
        let cn = (6.0 * nf * nf + 6.0 * nf + 1.0) / 12.0;
        let piece = 0.5 * (1.0 / nf).ln_1p() - (nf + 0.5) / (nf * (nf + 1.0))
            + cn * (2.0 * nf + 1.0) / (2.0 * nf * nf * (nf + 1.0) * (nf + 1.0));
        acc.add(piece);
    }
    let n = cutoff as f64;
    let value = -11.0 / 12.0 - 2.0 * acc.value();
    (value, 1.0 / (12.0 * n * n) + 1e-15)
}

/// Every named constant with its error estimate.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantSet {
    #[serde(rename = "C0")]
    pub c0: Constant,
    #[serde(rename = "C1")]
    pub c1: Constant,
    #[serde(rename = "C2")]
    pub c2: Constant,
    #[serde(rename = "A1")]
    pub a1: Constant,
    #[serde(rename = "A1_euler")]
    pub a1_euler: Constant,
    #[serde(rename = "A2")]
    pub a2: Constant,
    #[serde(rename = "D1")]
    pub d1: Constant,
    #[serde(rename = "D2")]
    pub d2: Constant,
    #[serde(rename = "D3")]
    pub d3: Constant,
    #[serde(rename = "D4")]
    pub d4: Constant,
    pub gamma: Constant,
    pub gamma_4_3: Constant,
    /// Σ T(q), Σ T(q) log q and Σ q T(q).
    pub sum_t: Constant,
    pub sum_t_log: Constant,
    pub sum_qt: Constant,
    /// ζ(−2/3) D₀(−5/3).
    pub zeta_d0_m53: Constant,
    pub prime_cutoff: u64,
    pub series_cutoff: u64,
    pub warnings: Vec<String>,
}

pub fn constants(prime_cutoff: u64, series_cutoff: u64) -> Result<ConstantSet> {
    ConstantSet::compute(&SeriesContext::new(prime_cutoff, series_cutoff)?)
}

impl ConstantSet {
    pub fn compute(ctx: &SeriesContext) -> Result<Self> {
        let g6 = gamma_43_pow6();
        let round = |v: f64| 1e-15 * v.abs();

        let st = ctx.partial(0.0, 0);
        let st_err = ctx.tail_bound(0.0, 0)? + round(st);
        let stl = ctx.partial(0.0, 1);
        let stl_err = ctx.tail_bound(0.0, 1)? + round(stl);
        let sqt = ctx.partial(-1.0, 0);
        let sqt_err = ctx.tail_bound(-1.0, 0)? + round(sqt);

        let d_m1 = ctx.d0(-1.0)?;
        let z3 = zeta(3.0)?;
        let d_m53 = ctx.d0(-5.0 / 3.0)?;
        let z23 = zeta(-2.0 / 3.0)?;
        let zd = z23 * d_m53.value;
        let zd_err = z23.abs() * d_m53.abs_error() + round(zd);

        let (c2, c2_err) = c2_by_integration(ctx.series_cutoff());

        let c0 = Constant::new("C0", g6 * st, g6 * st_err);
        let c1 = Constant::new("C1", g6 * stl, g6 * stl_err);
        let a1 = Constant::new("A1", g6 * sqt, g6 * sqt_err);
        let a1_euler = Constant::new(
            "A1_euler",
            g6 * z3 * d_m1.value,
            g6 * z3 * d_m1.abs_error() + round(g6 * z3 * d_m1.value),
        );
        let a2 = Constant::new("A2", -1.8 * g6 * zd, 1.8 * g6 * zd_err);
        let d1 = Constant::new("D1", st / 2.0, st_err / 2.0);
        let d3 = Constant::new("D3", sqt / 2.0, sqt_err / 2.0);
        let d4 = Constant::new("D4", 0.9 * zd, 0.9 * zd_err);
        let d2 = Constant::new(
            "D2",
            (c2 * st - stl) / 2.0,
            (c2.abs() * st_err + st.abs() * c2_err + stl_err) / 2.0,
        );

        let mut set = Self {
            c0,
            c1,
            c2: Constant::new("C2", c2, c2_err),
            a1,
            a1_euler,
            a2,
            d1,
            d2,
            d3,
            d4,
            gamma: Constant::new("gamma", GAMMA_EULER, f64::EPSILON * GAMMA_EULER),
            gamma_4_3: Constant::new("gamma_4_3", GAMMA_4_3, f64::EPSILON * GAMMA_4_3),
            sum_t: Constant::new("sum_T", st, st_err),
            sum_t_log: Constant::new("sum_T_log", stl, stl_err),
            sum_qt: Constant::new("sum_qT", sqt, sqt_err),
            zeta_d0_m53: Constant::new("zeta_D0_m53", zd, zd_err),
            prime_cutoff: ctx.prime_cutoff(),
            series_cutoff: ctx.series_cutoff(),
            warnings: Vec::new(),
        };
        set.warnings = set
            .named()
            .iter()
            .filter(|c| c.error_estimate > WARN_RELATIVE * c.value.abs())
            .map(|c| {
                format!(
                    "{}: error estimate {:.3e} exceeds {:.0e} of the value {:.6e}; raise the cutoffs",
                    c.name, c.error_estimate, WARN_RELATIVE, c.value
                )
            })
            .collect();
        for w in &set.warnings {
            log::warn!("{w}");
        }
        Ok(set)
    }

    /// The A₁ evaluation (series or Euler product) with the smaller error
    /// estimate.
    pub fn best_a1(&self) -> &Constant {
        if self.a1_euler.error_estimate < self.a1.error_estimate {
            &self.a1_euler
        } else {
            &self.a1
        }
    }

    /// The constants reported by the CLI, in output order.
    pub fn named(&self) -> Vec<&Constant> {
        vec![
            &self.c0,
            &self.c1,
            &self.c2,
            &self.a1,
            &self.a1_euler,
            &self.a2,
            &self.d1,
            &self.d2,
            &self.d3,
            &self.d4,
            &self.gamma,
            &self.gamma_4_3,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_constant_dominates_table() {
        let c = t_decay_constant();
        let t = TTable::new(20_000).unwrap();
        let worst = t
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| v * ((i + 1) as f64).powi(2))
            .fold(0.0, f64::max);
        assert!(worst <= c * (1.0 + 1e-12), "{worst} > {c}");
        assert!(c > 6.6 && c < 30.0);
    }

    #[test]
    fn c2_matches_closed_form() {
        let (c2, err) = c2_by_integration(100_000);
        let exact = GAMMA_EULER - 1.5;
        assert!((c2 - exact).abs() <= err, "{c2} vs {exact}");
        assert!(err < 1e-10);
    }

    #[test]
    fn identity_at_small_cutoffs() {
        let ctx = SeriesContext::new(2000, 20_000).unwrap();
        for s in [0.0, -0.5, -1.0] {
            let chk = ctx.check_identity(s).unwrap();
            assert!(chk.within_bounds, "{chk:?}");
        }
        assert!(matches!(ctx.check_identity(-2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_relations() {
        let set = constants(2000, 20_000).unwrap();
        let g6 = gamma_43_pow6();
        assert!(set.a1.value > 0.0 && set.a2.value > 0.0 && set.c0.value > 0.0);
        assert!((set.d1.value - set.c0.value / (2.0 * g6)).abs() < 1e-14);
        assert!((set.d3.value - set.a1.value / (2.0 * g6)).abs() < 1e-14);
        assert!((set.d4.value + set.a2.value / (2.0 * g6)).abs() < 1e-14);
        let gap = (set.a1.value - set.a1_euler.value).abs();
        assert!(gap <= set.a1.error_estimate + set.a1_euler.error_estimate);
    }
}
