//! Exact and asymptotic main terms of the variance: the Cesàro mean W(X),
//! Q²W(x/Q), the sums S₃ and S₂, and the assembled predictions.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::cube_reps::CubeRepTable;
use crate::dirichlet::{gamma_43_pow6, ConstantSet, GAMMA_4_3};
use crate::error::{Error, Result};
use crate::local_densities::{HTable, RhoCache, TTable};
use crate::summation::Neumaier;

/// T(q) and h(l) tabulated up to a common bound.
#[derive(Debug, Clone)]
pub struct Weights {
    t: TTable,
    h: HTable,
}

impl Weights {
    pub fn new(bound: u64) -> Result<Self> {
        let t = TTable::new(bound)?;
        let h = HTable::new(&t, bound)?;
        Ok(Self { t, h })
    }

    pub fn bound(&self) -> u64 {
        self.h.bound()
    }

    pub fn t(&self) -> &TTable {
        &self.t
    }

    pub fn h(&self, l: u64) -> Result<f64> {
        self.h.get(l)
    }
}

/// W(X) = Σ_{l <= X} (h(l)/l)(X − l)².
pub fn w_exact(weights: &Weights, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("W(X) needs X >= 0, got {x}")));
    }
    let top = x.floor() as u64;
    let mut acc = Neumaier::new();
    for l in 1..=top {
        let d = x - l as f64;
        acc.add(weights.h(l)? / l as f64 * d * d);
    }
    Ok(acc.value())
}

/// ΣT X² log X + 2D₂X² + ΣqT X + (9/5)ζ(−2/3)D₀(−5/3) X^{1/3}, with the
/// more accurate of the two Σ qT(q) evaluations.
pub fn w_asymptotic(x: f64, c: &ConstantSet) -> f64 {
    let sum_qt = c.best_a1().value / gamma_43_pow6();
    c.sum_t.value * x * x * x.ln()
        + 2.0 * c.d2.value * x * x
        + sum_qt * x
        + 1.8 * c.zeta_d0_m53.value * x.cbrt()
}

/// The largest integer k with kQ <= x.
fn quotient_floor(x: f64, q: f64) -> u64 {
    let mut k = (x / q).floor().max(0.0) as u64;
    while (k + 1) as f64 * q <= x {
        k += 1;
    }
    while k > 0 && k as f64 * q > x {
        k -= 1;
    }
    k
}

fn check_q_range(x: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && q <= x) {
        return Err(Error::Domain(format!(
            "need 0 < Q <= x, got x = {x}, Q = {q}"
        )));
    }
    Ok(())
}

/// Q²W(x/Q) = Σ_{l <= x/Q} (h(l)/l)(x − lQ)².
pub fn q2w_exact(weights: &Weights, x: f64, q: f64) -> Result<f64> {
    check_q_range(x, q)?;
    let k = quotient_floor(x, q);
    let mut acc = Neumaier::new();
    for l in 1..=k {
        let d = x - l as f64 * q;
        acc.add(weights.h(l)? / l as f64 * d * d);
    }
    Ok(acc.value())
}

/// S₃ = Γ(4/3)⁶ x² Σ_{q <= Q} h(q)/q.
pub fn s3_exact(weights: &Weights, x: f64, q: u64) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidArgument("Q must be positive".into()));
    }
    let mut acc = Neumaier::new();
    for m in 1..=q {
        acc.add(weights.h(m)? / m as f64);
    }
    Ok(gamma_43_pow6() * x * x * acc.value())
}

/// C₀x² log Q + (γC₀ − C₁)x².
pub fn s3_asymptotic(x: f64, q: f64, c: &ConstantSet) -> f64 {
    let (c0, c1) = (c.c0.value, c.c1.value);
    c0 * x * x * q.ln() + (c.gamma.value * c0 - c1) * x * x
}

/// S₂ = Γ(4/3)³ x Σ_{q <= Q} q⁻³ Σ_a ρ(q, a) Υ(x; q, a), with the inner sum
/// taken over the support of r₃ as Σ_{n <= x} r₃(n) ρ(q, n).
pub fn s2_exact(table: &CubeRepTable, rho: &RhoCache, x: u64, q_max: u64) -> Result<f64> {
    table.sum_r3(x)?;
    let support = table.support_up_to(x);
    let mut acc = Neumaier::new();
    for q in 1..=q_max {
        let dens = rho.table(q)?;
        let inner: u128 = support
            .iter()
            .map(|&n| table.r3(n) as u128 * dens.get(n as i64) as u128)
            .sum();
        acc.add(inner as f64 / (q as f64).powi(3));
    }
    Ok(GAMMA_4_3.powi(3) * x as f64 * acc.value())
}

/// (Σ_{m <= Y} (Y − m)²/m, Y² log Y + C₂Y² + Y).
pub fn lemma9_sum(y: f64, c2: f64) -> (f64, f64) {
    let mut acc = Neumaier::new();
    for m in 1..=y.floor() as u64 {
        let d = y - m as f64;
        acc.add(d * d / m as f64);
    }
    (acc.value(), y * y * y.ln() + c2 * y * y + y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaId {
    Theorem1,
    Theorem2,
    Corollary1i,
    Corollary1ii,
    Corollary2,
    Corollary3,
}

impl FormulaId {
    pub const ALL: [FormulaId; 6] = [
        FormulaId::Theorem1,
        FormulaId::Theorem2,
        FormulaId::Corollary1i,
        FormulaId::Corollary1ii,
        FormulaId::Corollary2,
        FormulaId::Corollary3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::Theorem1 => "theorem1",
            FormulaId::Theorem2 => "theorem2",
            FormulaId::Corollary1i => "corollary1i",
            FormulaId::Corollary1ii => "corollary1ii",
            FormulaId::Corollary2 => "corollary2",
            FormulaId::Corollary3 => "corollary3",
        }
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A formula choice as given on the command line: a fixed formula, `auto`,
/// or `none` for no prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaSpec {
    Fixed(FormulaId),
    Auto,
    None,
}

impl FormulaSpec {
    /// The formula used at (x, Q). `auto` picks theorem2 when Q > x/20 or
    /// when Q is below the range of theorem1, theorem1 otherwise.
    pub fn resolve(self, x: f64, q: f64) -> Option<FormulaId> {
        match self {
            FormulaSpec::Fixed(id) => Some(id),
            FormulaSpec::None => None,
            FormulaSpec::Auto => {
                if q > x / 20.0 || q < theorem1_lower(x) {
                    Some(FormulaId::Theorem2)
                } else {
                    Some(FormulaId::Theorem1)
                }
            }
        }
    }
}

impl FromStr for FormulaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => return Ok(FormulaSpec::Auto),
            "none" => return Ok(FormulaSpec::None),
            _ => {}
        }
        FormulaId::ALL
            .iter()
            .find(|id| id.as_str() == s)
            .map(|&id| FormulaSpec::Fixed(id))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown formula {s:?}")))
    }
}

impl fmt::Display for FormulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulaSpec::Fixed(id) => id.fmt(f),
            FormulaSpec::Auto => f.write_str("auto"),
            FormulaSpec::None => f.write_str("none"),
        }
    }
}

fn theorem1_lower(x: f64) -> f64 {
    x.sqrt() * x.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub x: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub main_terms: Vec<Term>,
    pub total: f64,
    pub formula_id: FormulaId,
}

impl Prediction {
    fn new(formula_id: FormulaId, x: f64, q: f64, terms: Vec<(&str, f64)>) -> Self {
        let total = crate::summation::sum(terms.iter().map(|t| t.1));
        Self {
            x,
            q,
            main_terms: terms
                .into_iter()
                .map(|(name, value)| Term {
                    name: name.to_string(),
                    value,
                })
                .collect(),
            total,
            formula_id,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.main_terms
            .iter()
            .find(|t| t.name == name)
            .map(|t| t.value)
    }
}

const REL_EQ: f64 = 1e-12;

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_EQ * a.abs().max(b.abs())
}

fn domain(id: FormulaId, x: f64, q: f64, want: &str) -> Error {
    Error::Domain(format!("{id} needs {want}; got x = {x}, Q = {q}"))
}

/// The predicted V(x, Q) under the given formula.
pub fn predict(
    id: FormulaId,
    x: f64,
    q: f64,
    sum_r3sq: u128,
    c: &ConstantSet,
    weights: &Weights,
) -> Result<Prediction> {
    check_q_range(x, q)?;
    let g6 = gamma_43_pow6();
    let qs = q * sum_r3sq as f64;
    let (c0, c1, c2) = (c.c0.value, c.c1.value, c.c2.value);
    let log_term = |m: f64| x * x * (c0 * m.ln() + c0 * c2 - c1);
    let terms = match id {
        FormulaId::Theorem1 => {
            if q < theorem1_lower(x) {
                return Err(domain(id, x, q, "sqrt(x) log x <= Q <= x"));
            }
            vec![
                ("q_times_sum_r3sq", qs),
                ("a1_term", -c.best_a1().value * q * x),
                ("a2_term", c.a2.value * q.powf(5.0 / 3.0) * x.cbrt()),
            ]
        }
        FormulaId::Theorem2 => vec![
            ("q_times_sum_r3sq", qs),
            ("log_term", log_term(x / q)),
            ("exact_w_term", -g6 * q2w_exact(weights, x, q)?),
        ],
        FormulaId::Corollary1i => {
            if !(q > x / 3.0 && q <= x / 2.0) {
                return Err(domain(id, x, q, "x/3 < Q <= x/2"));
            }
            vec![
                ("q_times_sum_r3sq", qs),
                ("log_term", log_term(x / q)),
                (
                    "exact_w_term",
                    -g6 * (1.5 * x * x - 4.0 * q * x + 3.0 * q * q),
                ),
            ]
        }
        FormulaId::Corollary1ii => {
            if q <= x / 2.0 {
                return Err(domain(id, x, q, "x/2 < Q <= x"));
            }
            vec![
                ("q_times_sum_r3sq", qs),
                ("log_term", log_term(x / q)),
                ("exact_w_term", -g6 * (x - q) * (x - q)),
            ]
        }
        FormulaId::Corollary2 => {
            if !near(q, x) {
                return Err(domain(id, x, q, "Q = x"));
            }
            vec![("q_times_sum_r3sq", qs), ("log_term", log_term(1.0))]
        }
        FormulaId::Corollary3 => {
            let m = (x / q).round();
            if m < 1.0 || !near(m * q, x) {
                return Err(domain(id, x, q, "Q = x/m for a positive integer m"));
            }
            let mut acc = Neumaier::new();
            for l in 1..=m as u64 {
                let d = m - l as f64;
                acc.add(weights.h(l)? / l as f64 * d * d);
            }
            vec![
                ("q_times_sum_r3sq", qs),
                ("log_term", log_term(m)),
                ("exact_w_term", -g6 * x * x * acc.value() / (m * m)),
            ]
        }
    };
    Ok(Prediction::new(id, x, q, terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::constants;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn weights() -> &'static Weights {
        static W: OnceLock<Weights> = OnceLock::new();
        W.get_or_init(|| Weights::new(5000).unwrap())
    }

    fn consts() -> &'static ConstantSet {
        static C: OnceLock<ConstantSet> = OnceLock::new();
        C.get_or_init(|| constants(10_000, 20_000).unwrap())
    }

    #[test]
    fn w_examples() {
        let w = weights();
        assert_eq!(w_exact(w, 1.0).unwrap(), 0.0);
        assert_eq!(w_exact(w, 2.0).unwrap(), 1.0);
        assert_eq!(w_exact(w, 3.0).unwrap(), 4.5);
        assert_eq!(w_exact(w, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn q2w_piecewise_forms() {
        let w = weights();
        let x = 1000.0;
        assert_eq!(q2w_exact(w, x, x).unwrap(), 0.0);
        for q in [501.0, 600.0, 999.5, 750.25] {
            let want = (x - q) * (x - q);
            assert!((q2w_exact(w, x, q).unwrap() - want).abs() <= 1e-9 * want.max(1.0));
        }
        for q in [333.5, 400.0, 500.0] {
            let want = 1.5 * x * x - 4.0 * q * x + 3.0 * q * q;
            assert!((q2w_exact(w, x, q).unwrap() - want).abs() <= 1e-9 * want);
        }
        assert!(matches!(q2w_exact(w, x, 0.0), Err(Error::Domain(_))));
        assert!(matches!(q2w_exact(w, x, 1001.0), Err(Error::Domain(_))));
    }

    #[test]
    fn s3_examples() {
        let w = weights();
        let g6 = gamma_43_pow6();
        assert!((s3_exact(w, 7.0, 1).unwrap() - g6 * 49.0).abs() < 1e-12);
        assert!((s3_exact(w, 7.0, 2).unwrap() - g6 * 49.0 * 1.5).abs() < 1e-12);
        // S₃/x² depends on Q only
        let a = s3_exact(w, 3.0, 200).unwrap() / 9.0;
        let b = s3_exact(w, 1234.0, 200).unwrap() / (1234.0 * 1234.0);
        assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn s3_asymptotic_scaling() {
        let c = consts();
        let v = s3_asymptotic(1.0, 1000.0, c);
        assert!((s3_asymptotic(2.0, 1000.0, c) - 4.0 * v).abs() < 1e-12 * v.abs());
        for q in [100u64, 1000] {
            let diff =
                (s3_exact(weights(), 1.0, q).unwrap() - s3_asymptotic(1.0, q as f64, c)).abs();
            assert!(diff < 10.0 * (q as f64).ln() / q as f64, "Q = {q}: {diff}");
        }
    }

    #[test]
    fn s2_examples() {
        let table = crate::cube_reps::sieve_r3(10).unwrap();
        let rho = RhoCache::new();
        let g3 = GAMMA_4_3.powi(3);
        assert!((s2_exact(&table, &rho, 10, 1).unwrap() - g3 * 10.0 * 4.0).abs() < 1e-12);
        assert!((s2_exact(&table, &rho, 10, 2).unwrap() - g3 * 10.0 * 6.0).abs() < 1e-12);
    }

    #[test]
    fn lemma9_examples() {
        assert_eq!(lemma9_sum(1.0, 0.0).0, 0.0);
        assert_eq!(lemma9_sum(2.0, 0.0).0, 1.0);
        let c2 = crate::dirichlet::GAMMA_EULER - 1.5;
        for y in [100.0, 1000.0, 10_000.0] {
            let (e, a) = lemma9_sum(y, c2);
            assert!((e - a).abs() < 1.0, "Y = {y}: {e} vs {a}");
        }
    }

    #[test]
    fn corollaries_agree_with_theorem2() {
        let (w, c) = (weights(), consts());
        let x = 2000.0;
        let s = 123_456u128;
        let pairs = [
            (FormulaId::Corollary1i, 700.0),
            (FormulaId::Corollary1i, 1000.0),
            (FormulaId::Corollary1ii, 1500.0),
            (FormulaId::Corollary1ii, 2000.0),
            (FormulaId::Corollary2, 2000.0),
            (FormulaId::Corollary3, 400.0),
            (FormulaId::Corollary3, 2000.0 / 7.0),
        ];
        for (id, q) in pairs {
            let a = predict(id, x, q, s, c, w).unwrap();
            let b = predict(FormulaId::Theorem2, x, q, s, c, w).unwrap();
            assert!(
                (a.total - b.total).abs() <= 1e-10 * b.total.abs(),
                "{id} at Q = {q}: {} vs {}",
                a.total,
                b.total
            );
        }
        // both expansions at the shared point Q = x/2
        let m2 = predict(FormulaId::Corollary3, x, 1000.0, s, c, w).unwrap();
        let c1 = predict(FormulaId::Corollary1i, x, 1000.0, s, c, w).unwrap();
        assert!((m2.total - c1.total).abs() <= 1e-10 * c1.total.abs());
    }

    #[test]
    fn prediction_totals_and_domains() {
        let (w, c) = (weights(), consts());
        let p = predict(FormulaId::Corollary2, 100.0, 100.0, 500, c, w).unwrap();
        let want = 100.0 * 500.0 + 1e4 * (c.c0.value * c.c2.value - c.c1.value);
        assert!((p.total - want).abs() < 1e-9 * want.abs());
        let sum: f64 = p.main_terms.iter().map(|t| t.value).sum();
        assert!((sum - p.total).abs() <= 1e-12 * p.total.abs());
        assert!(predict(FormulaId::Corollary2, 100.0, 99.0, 500, c, w).is_err());
        assert!(predict(FormulaId::Corollary1i, 100.0, 60.0, 500, c, w).is_err());
        assert!(predict(FormulaId::Theorem1, 10_000.0, 10.0, 500, c, w).is_err());
        assert!(predict(FormulaId::Theorem2, 100.0, 101.0, 500, c, w).is_err());
        let t1 = predict(FormulaId::Theorem1, 10_000.0, 5000.0, 500, c, w).unwrap();
        assert!(t1.term("a2_term").unwrap() > 0.0 && t1.term("a1_term").unwrap() < 0.0);
    }

    #[test]
    fn formula_parsing() {
        assert_eq!("auto".parse::<FormulaSpec>().unwrap(), FormulaSpec::Auto);
        assert_eq!("none".parse::<FormulaSpec>().unwrap(), FormulaSpec::None);
        for id in FormulaId::ALL {
            assert_eq!(
                id.as_str().parse::<FormulaSpec>().unwrap(),
                FormulaSpec::Fixed(id)
            );
        }
        assert!("theorem3".parse::<FormulaSpec>().is_err());
        assert_eq!(
            FormulaSpec::Auto.resolve(1e4, 1e4),
            Some(FormulaId::Theorem2)
        );
        assert_eq!(
            FormulaSpec::Auto.resolve(1e6, 2e4),
            Some(FormulaId::Theorem1)
        );
        assert_eq!(
            FormulaSpec::Auto.resolve(1e4, 10.0),
            Some(FormulaId::Theorem2)
        );
    }

    proptest! {
        #[test]
        fn q2w_is_scaled_w(x in 10.0f64..5000.0, ratio in 1.0f64..1000.0) {
            let w = weights();
            let q = x / ratio;
            let a = q2w_exact(w, x, q).unwrap();
            let b = q * q * w_exact(w, x / q).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
        }

        #[test]
        fn q2w_continuous_at_breakpoints(x in 100.0f64..5000.0, k in 1u64..50) {
            let w = weights();
            let q = x / k as f64;
            let at = q2w_exact(w, x, q).unwrap();
            let below = q2w_exact(w, x, q * (1.0 - 1e-9)).unwrap();
            prop_assert!((at - below).abs() <= 1e-5 * x * x);
        }

        #[test]
        fn w_monotone(x in 0.0f64..2000.0, dx in 0.0f64..10.0) {
            let w = weights();
            let a = w_exact(w, x).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!(w_exact(w, x + dx).unwrap() >= a);
        }
    }
}
