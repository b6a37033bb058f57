//! The empirical variance V(x, Q) of r₃(n) over residue classes, its
//! comparison with the predicted main terms, and major-arc diagnostics.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd, residue};
use crate::cube_reps::CubeRepTable;
use crate::dirichlet::{ConstantSet, GAMMA_4_3};
use crate::error::{Error, Result};
use crate::exp_sums::{nu, unit_root};
use crate::local_densities::RhoCache;
use crate::main_terms::{predict, FormulaSpec, Prediction, Weights};
use crate::summation::{ComplexNeumaier, Neumaier};

/// Default exponent e in u0_residual / x^e.
pub const DEFAULT_NORMALIZE_EXPONENT: f64 = 16.0 / 9.0;

/// Exponent ε in the major-arc error scale x^{2/3} q^{1/2 + ε}(1 + x|β|).
pub const ARC_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub x: u64,
    #[serde(rename = "Q")]
    pub q: u64,
    pub v_empirical: f64,
    pub prediction: Option<Prediction>,
    pub u0_residual: Option<f64>,
    pub normalized: Option<f64>,
    pub normalize_exponent: f64,
    pub formula: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_q_contributions: Option<Vec<f64>>,
}

impl VarianceReport {
    /// Attach a prediction and fill the residual fields.
    pub fn with_prediction(mut self, prediction: Option<Prediction>, exponent: f64) -> Self {
        self.normalize_exponent = exponent;
        match &prediction {
            Some(p) => {
                let u0 = self.v_empirical - p.total;
                self.u0_residual = Some(u0);
                self.normalized = Some(u0 / (self.x as f64).powf(exponent));
                self.formula = p.formula_id.to_string();
            }
            None => {
                self.u0_residual = None;
                self.normalized = None;
                self.formula = "none".into();
            }
        }
        self.prediction = prediction;
        self
    }
}

/// Σ_a |Υ(x; q, a) − Γ(4/3)³ x ρ(q, a)/q³|² for one modulus.
pub fn variance_term(table: &CubeRepTable, rho: &RhoCache, x: u64, q: u64) -> Result<f64> {
    let ups = table.progression_sums(x, q)?;
    let dens = rho.table(q)?;
    let scale = GAMMA_4_3.powi(3) * x as f64 / (q as f64).powi(3);
    let mut acc = Neumaier::new();
    for (u, &r) in ups.iter().zip(&dens.rho) {
        let d = *u as f64 - scale * r as f64;
        acc.add(d * d);
    }
    Ok(acc.value())
}

/// V(x, Q) with no prediction attached. The q-loop runs in parallel; the
/// per-q terms are summed in order of q, so the result does not depend on
/// the number of threads.
pub fn empirical_variance(
    table: &CubeRepTable,
    rho: &RhoCache,
    x: u64,
    q_max: u64,
    keep_per_q: bool,
) -> Result<VarianceReport> {
    table.sum_r3(x)?;
    if q_max > x {
        return Err(Error::Domain(format!(
            "need Q <= x, got x = {x}, Q = {q_max}"
        )));
    }
    let per_q: Vec<f64> = (1..=q_max)
        .into_par_iter()
        .map(|q| variance_term(table, rho, x, q))
        .collect::<Result<_>>()?;
    let v = crate::summation::sum(per_q.iter().copied());
    Ok(VarianceReport {
        x,
        q: q_max,
        v_empirical: v,
        prediction: None,
        u0_residual: None,
        normalized: None,
        normalize_exponent: DEFAULT_NORMALIZE_EXPONENT,
        formula: "none".into(),
        per_q_contributions: keep_per_q.then_some(per_q),
    })
}

/// e(t) for real t, reduced to [0, 1) first.
fn e_real(t: f64) -> Complex64 {
    let f = t - t.floor();
    let (s, c) = (std::f64::consts::TAU * f).sin_cos();
    Complex64::new(c, s)
}

/// G(α) = Σ_{n <= x} r₃(n) e(nα).
pub fn g_transform(table: &CubeRepTable, x: u64, alpha: f64) -> Result<Complex64> {
    table.sum_r3(x)?;
    let a = alpha - alpha.floor();
    let mut acc = ComplexNeumaier::new();
    for &n in table.support_up_to(x) {
        acc.add(e_real(n as f64 * a) * table.r3(n) as f64);
    }
    Ok(acc.value())
}

/// G(β + a/q) with the rational part of the phase taken exactly.
fn g_at_rational(table: &CubeRepTable, x: u64, q: u64, a: u64, beta: f64) -> Complex64 {
    let mut acc = ComplexNeumaier::new();
    for &n in table.support_up_to(x) {
        let k = crate::arith::mul_mod(n % q, a, q);
        acc.add(unit_root(k, q) * e_real(n as f64 * beta) * table.r3(n) as f64);
    }
    acc.value()
}

/// J(β) = Γ(4/3)³ Σ_{n <= x} e(βn) in closed form.
pub fn j_kernel(x: u64, beta: f64) -> Complex64 {
    let g3 = GAMMA_4_3.powi(3);
    let n = x as f64;
    let frac = beta - beta.round();
    if frac == 0.0 {
        return Complex64::new(g3 * n, 0.0);
    }
    use std::f64::consts::PI;
    let ratio = (PI * n * frac).sin() / (PI * frac).sin();
    e_real(beta * (n + 1.0) / 2.0) * (g3 * ratio)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcDiagnostic {
    pub q: u64,
    pub a: u64,
    pub beta: f64,
    pub g_value: [f64; 2],
    pub approx: [f64; 2],
    pub delta_abs: f64,
    pub bound_ratio: f64,
}

/// Δ(q, a, β) = G(β + a/q) − ν(q, a) J(β) with its size relative to
/// x^{2/3} q^{1/2+ε}(1 + x|β|).
pub fn arc_diagnostic(
    table: &CubeRepTable,
    x: u64,
    q: u64,
    a: i64,
    beta: f64,
) -> Result<ArcDiagnostic> {
    table.sum_r3(x)?;
    if q == 0 {
        return Err(Error::InvalidArgument("modulus q must be positive".into()));
    }
    let ar = residue(a, q);
    if gcd(ar, q) != 1 {
        return Err(Error::NotCoprime { a, q });
    }
    let g = g_at_rational(table, x, q, ar, beta);
    let approx = nu(q, a)? * j_kernel(x, beta);
    let delta_abs = (g - approx).norm();
    let xf = x as f64;
    let scale = xf.powf(2.0 / 3.0) * (q as f64).powf(0.5 + ARC_EPSILON) * (1.0 + xf * beta.abs());
    Ok(ArcDiagnostic {
        q,
        a: ar,
        beta,
        g_value: [g.re, g.im],
        approx: [approx.re, approx.im],
        delta_abs,
        bound_ratio: delta_abs / scale,
    })
}

/// The major-arc sample grid at `x`: q <= q_max, (a, q) = 1, and
/// β ∈ {0, ±1/(2q√x), ±1/(2x)}.
pub fn arc_survey(table: &CubeRepTable, x: u64, q_max: u64) -> Result<Vec<ArcDiagnostic>> {
    let xf = x as f64;
    let cells: Vec<(u64, u64, f64)> = (1..=q_max)
        .flat_map(|q| {
            let betas = [
                0.0,
                1.0 / (2.0 * q as f64 * xf.sqrt()),
                -1.0 / (2.0 * q as f64 * xf.sqrt()),
                1.0 / (2.0 * xf),
                -1.0 / (2.0 * xf),
            ];
            (1..=q)
                .filter(move |&a| gcd(a, q) == 1)
                .flat_map(move |a| betas.into_iter().map(move |b| (q, a, b)))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(q, a, b)| arc_diagnostic(table, x, q, a as i64, b))
        .collect()
}

/// How Q is chosen from x in a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QPolicy {
    /// Q = x / m (rounded down), `x` itself for m = 1.
    Fraction(u64),
    /// Q = ⌈√x log x⌉, capped at x.
    SqrtLog,
    Fixed(u64),
}

impl QPolicy {
    pub fn choose(self, x: u64) -> u64 {
        match self {
            QPolicy::Fraction(m) => (x / m).max(1),
            QPolicy::SqrtLog => {
                let xf = x as f64;
                ((xf.sqrt() * xf.ln()).ceil() as u64).clamp(1, x)
            }
            QPolicy::Fixed(q) => q,
        }
    }
}

impl FromStr for QPolicy {
    type Err = Error;

    /// `x`, `x/m`, `sqrtlog`, or an integer.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown Q policy {s:?}"));
        match s {
            "x" => Ok(QPolicy::Fraction(1)),
            "sqrtlog" => Ok(QPolicy::SqrtLog),
            _ => {
                if let Some(m) = s.strip_prefix("x/") {
                    let m: u64 = m.parse().map_err(|_| bad())?;
                    if m == 0 {
                        return Err(bad());
                    }
                    Ok(QPolicy::Fraction(m))
                } else {
                    s.parse().map(QPolicy::Fixed).map_err(|_| bad())
                }
            }
        }
    }
}

impl fmt::Display for QPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QPolicy::Fraction(1) => f.write_str("x"),
            QPolicy::Fraction(m) => write!(f, "x/{m}"),
            QPolicy::SqrtLog => f.write_str("sqrtlog"),
            QPolicy::Fixed(q) => write!(f, "{q}"),
        }
    }
}

/// Shared inputs for prediction.
pub struct PredictionInputs<'a> {
    pub constants: &'a ConstantSet,
    pub weights: &'a Weights,
}

/// V(x, Q) for one (x, Q) with the chosen prediction attached.
pub fn variance_with_prediction(
    table: &CubeRepTable,
    rho: &RhoCache,
    x: u64,
    q: u64,
    formula: FormulaSpec,
    inputs: Option<&PredictionInputs<'_>>,
    exponent: f64,
) -> Result<VarianceReport> {
    let id = formula.resolve(x as f64, q as f64);
    let prediction = match (id, inputs) {
        (Some(id), Some(inp)) => Some(predict(
            id,
            x as f64,
            q as f64,
            table.sum_r3_squared(x)?,
            inp.constants,
            inp.weights,
        )?),
        (Some(_), None) => {
            return Err(Error::InvalidArgument(
                "a prediction needs constants and weights".into(),
            ))
        }
        (None, _) => None,
    };
    let report = empirical_variance(table, rho, x, q, false)?;
    Ok(report.with_prediction(prediction, exponent))
}

/// One report per x in `grid`, in grid order.
pub fn scan(
    table: &CubeRepTable,
    rho: &RhoCache,
    grid: &[u64],
    policy: QPolicy,
    formula: FormulaSpec,
    inputs: Option<&PredictionInputs<'_>>,
    exponent: f64,
) -> Result<Vec<VarianceReport>> {
    grid.iter()
        .map(|&x| {
            variance_with_prediction(table, rho, x, policy.choose(x), formula, inputs, exponent)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube_reps::sieve_r3;

    #[test]
    fn golden_small_cases() {
        let t = sieve_r3(10).unwrap();
        let rho = RhoCache::new();
        let v1 = empirical_variance(&t, &rho, 10, 1, false)
            .unwrap()
            .v_empirical;
        assert!((v1 - 9.738_952_155_840_31).abs() < 1e-9, "{v1}");
        let v2 = empirical_variance(&t, &rho, 10, 2, true).unwrap();
        assert!((v2.v_empirical - 16.608_428_233_760_467).abs() < 1e-9);
        assert_eq!(v2.per_q_contributions.as_ref().unwrap().len(), 2);
        assert_eq!(
            empirical_variance(&t, &rho, 10, 0, false)
                .unwrap()
                .v_empirical,
            0.0
        );
        assert!(empirical_variance(&t, &rho, 5, 6, false).is_err());
    }

    #[test]
    fn monotone_in_q() {
        let t = sieve_r3(5000).unwrap();
        let rho = RhoCache::new();
        let r = empirical_variance(&t, &rho, 5000, 300, true).unwrap();
        let per = r.per_q_contributions.unwrap();
        assert!(per.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn expected_mass_per_modulus() {
        let rho = RhoCache::new();
        let g3 = GAMMA_4_3.powi(3);
        for q in 1..=300u64 {
            let d = rho.table(q).unwrap();
            let total: f64 = crate::summation::sum(
                d.rho
                    .iter()
                    .map(|&r| g3 * 1000.0 * r as f64 / (q as f64).powi(3)),
            );
            assert!((total - g3 * 1000.0).abs() <= 1e-9 * g3 * 1000.0);
        }
    }

    #[test]
    fn transform_examples() {
        let t = sieve_r3(10).unwrap();
        assert!((g_transform(&t, 10, 0.0).unwrap() - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        assert!((g_transform(&t, 10, 0.5).unwrap() - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        let a = g_transform(&t, 10, 0.3).unwrap();
        let b = g_transform(&t, 10, 1.3).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn transform_at_rationals_regroups_progressions() {
        let t = sieve_r3(3000).unwrap();
        for q in 1..=10u64 {
            let ups = t.progression_sums(3000, q).unwrap();
            for a in 0..q {
                let direct = g_transform(&t, 3000, a as f64 / q as f64).unwrap();
                let regrouped: Complex64 = ups
                    .iter()
                    .enumerate()
                    .map(|(i, &u)| unit_root(a * (i as u64 + 1), q) * u as f64)
                    .sum();
                assert!((direct - regrouped).norm() < 1e-8, "q = {q}, a = {a}");
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let g3 = GAMMA_4_3.powi(3);
        assert!((j_kernel(7, 0.0) - Complex64::new(7.0 * g3, 0.0)).norm() < 1e-12);
        assert!(j_kernel(2, 0.5).norm() < 1e-12);
        for x in [10u64, 137, 1000] {
            for beta in [0.001, -0.013, 0.25, 0.49, -0.5] {
                let direct: Complex64 =
                    (1..=x).map(|n| e_real(beta * n as f64)).sum::<Complex64>() * g3;
                let closed = j_kernel(x, beta);
                assert!((direct - closed).norm() < 1e-9 * x as f64);
                let cap = g3 * (x as f64).min(1.0 / (2.0 * beta.abs()));
                assert!(closed.norm() <= cap * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn diagnostic_examples() {
        let t = sieve_r3(10).unwrap();
        let d = arc_diagnostic(&t, 10, 1, 1, 0.0).unwrap();
        let g3 = GAMMA_4_3.powi(3);
        assert!((d.delta_abs - (4.0 - 10.0 * g3).abs()).abs() < 1e-12);
        let d = arc_diagnostic(&t, 10, 3, 1, 0.0).unwrap();
        assert_eq!(d.approx, [0.0, 0.0]);
        let g = g_transform(&t, 10, 1.0 / 3.0).unwrap();
        assert!((d.g_value[0] - g.re).abs() < 1e-12 && (d.g_value[1] - g.im).abs() < 1e-12);
        assert!(matches!(
            arc_diagnostic(&t, 10, 4, 2, 0.0),
            Err(Error::NotCoprime { .. })
        ));
    }

    #[test]
    fn policies() {
        assert_eq!("x".parse::<QPolicy>().unwrap().choose(100), 100);
        assert_eq!("x/2".parse::<QPolicy>().unwrap().choose(101), 50);
        assert_eq!("37".parse::<QPolicy>().unwrap().choose(100), 37);
        assert_eq!("sqrtlog".parse::<QPolicy>().unwrap().choose(10_000), 922);
        assert!("x/0".parse::<QPolicy>().is_err());
        assert!("y".parse::<QPolicy>().is_err());
    }

    #[test]
    fn scan_examples() {
        let t = sieve_r3(10).unwrap();
        let rho = RhoCache::new();
        let out = scan(
            &t,
            &rho,
            &[10],
            QPolicy::Fraction(1),
            FormulaSpec::None,
            None,
            2.0,
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].q, 10);
        assert!(out[0].u0_residual.is_none());
        let empty = scan(
            &t,
            &rho,
            &[],
            QPolicy::Fraction(1),
            FormulaSpec::None,
            None,
            2.0,
        )
        .unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let t = sieve_r3(20_000).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                empirical_variance(&t, &RhoCache::new(), 20_000, 2000, false)
                    .unwrap()
                    .v_empirical
            })
        };
        let one = run(1);
        assert_eq!(one.to_bits(), run(3).to_bits());
        assert_eq!(one.to_bits(), run(8).to_bits());
    }
}
