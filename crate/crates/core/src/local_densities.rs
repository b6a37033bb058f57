//! Local densities ρ(q, a), the singular weight T(r) and the divisor sum
//! h(l) = Σ_{q | l} q T(q).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::arith::{divisors, factorize, smallest_prime_factors};
use crate::convolution::{cube_triple_convolution, prime_rho};
use crate::error::{Error, Result};
use crate::exp_sums::{norm_form_moment, sixth_moment_prime, ExpSumCache};
use crate::summation::{sum_complex, Neumaier};

/// Largest modulus `rho_table` accepts by default.
pub const DEFAULT_RHO_CAPACITY: u64 = 1 << 22;

/// Σ_{(c, 3) = 1} |S(9, c)|⁶.
pub const SIXTH_MOMENT_MOD_9: u128 = 393_660;

/// ρ(q, a) for a = 1..=q; entry `a - 1`, the last entry is a ≡ 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalDensityTable {
    pub q: u64,
    pub rho: Vec<u64>,
}

impl LocalDensityTable {
    /// Convert a residue-indexed row (index `r` in `0..q`) to the 1..=q
    /// convention.
    fn from_residues(q: u64, by_residue: Vec<u64>) -> Self {
        let mut rho = by_residue;
        rho.rotate_left(1);
        Self { q, rho }
    }

    /// ρ(q, a) for any integer `a`.
    pub fn get(&self, a: i64) -> u64 {
        let r = crate::arith::residue(a, self.q);
        let idx = if r == 0 { self.q - 1 } else { r - 1 };
        self.rho[idx as usize]
    }

    pub fn total(&self) -> u128 {
        self.rho.iter().map(|&r| r as u128).sum()
    }

    pub fn square_sum(&self) -> u128 {
        self.rho.iter().map(|&r| (r as u128).pow(2)).sum()
    }
}

pub fn rho_table(q: u64) -> Result<LocalDensityTable> {
    rho_table_with_limit(q, DEFAULT_RHO_CAPACITY)
}

/// ρ(q, ·) by triple self-convolution of the cube histogram.
pub fn rho_table_with_limit(q: u64, capacity: u64) -> Result<LocalDensityTable> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus q must be positive".into()));
    }
    if q > capacity {
        return Err(Error::Capacity {
            requested: q,
            limit: capacity,
        });
    }
    Ok(LocalDensityTable::from_residues(
        q,
        cube_triple_convolution(q)?,
    ))
}

/// (1/q) Σ_b e(−ba/q) S(q, b)³.
pub fn rho_via_dft(q: u64, a: i64) -> f64 {
    rho_via_dft_with(&ExpSumCache::new(), q, a)
}

pub fn rho_via_dft_with(cache: &ExpSumCache, q: u64, a: i64) -> f64 {
    let cubes: Vec<_> = (1..=q)
        .map(|b| cache.s_reduce(q, b as i64).powu(3))
        .collect();
    dft_entry(&cubes, q, crate::arith::residue(a, q))
}

fn dft_entry(cubes: &[num_complex::Complex64], q: u64, a: u64) -> f64 {
    let terms = cubes.iter().enumerate().map(|(i, &s3)| {
        let b = i as u64 + 1;
        let k = q - crate::arith::mul_mod(b % q, a, q);
        crate::exp_sums::unit_root(k, q) * s3
    });
    sum_complex(terms).re / q as f64
}

/// Every ρ(q, a), a = 1..=q, from the DFT side, sharing the S(q, b)³ row.
pub fn rho_via_dft_all(cache: &ExpSumCache, q: u64) -> Vec<f64> {
    let cubes: Vec<_> = (1..=q)
        .map(|b| cache.s_reduce(q, b as i64).powu(3))
        .collect();
    (1..=q).map(|a| dft_entry(&cubes, q, a % q)).collect()
}

/// Both sides of Σ_a ρ(q, a)² = q⁵ Σ_{r | q} r T(r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoment {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn rho_second_moment(q: u64) -> Result<SecondMoment> {
    let lhs = rho_table(q)?.square_sum() as f64;
    let weighted = try_sum(
        divisors(q)
            .into_iter()
            .map(|r| Ok(r as f64 * t_function(r)?.value)),
    )?;
    let rhs = (q as f64).powi(5) * weighted;
    if (lhs - rhs).abs() > 1e-6 * lhs.abs().max(1.0) {
        return Err(Error::Identity(format!(
            "second moment at q = {q}: {lhs} != {rhs}"
        )));
    }
    Ok(SecondMoment { lhs, rhs })
}

fn try_sum(iter: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut acc = Neumaier::new();
    for v in iter {
        acc.add(v?);
    }
    Ok(acc.value())
}

/// T(r) = r⁻⁷ Σ_{(c, r) = 1} |S(r, c)|⁶.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularWeight {
    pub r: u64,
    pub value: f64,
}

/// T(p^k) given the sixth moment `m6` of S(p, ·) over reduced residues.
pub fn t_prime_power(p: u64, k: u32, m6: u128) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let pf = p as f64;
    let u = ((k - 1) / 3) as i32;
    match k % 3 {
        0 => (pf - 1.0) * pf.powi(-(6 * u + 7)),
        2 if p != 3 => (pf - 1.0) * pf.powi(-(6 * u + 7)),
        2 => SIXTH_MOMENT_MOD_9 as f64 * 3f64.powi(-(6 * u + 14)),
        _ => m6 as f64 * pf.powi(-(6 * u + 7)),
    }
}

/// T(r) by multiplicativity over the prime-power values.
pub fn t_function(r: u64) -> Result<SingularWeight> {
    if r == 0 {
        return Err(Error::InvalidArgument("T(r) needs r >= 1".into()));
    }
    let mut value = 1.0;
    for (p, k) in factorize(r) {
        let m6 = if k % 3 == 1 {
            sixth_moment_prime(p)?
        } else {
            0
        };
        value *= t_prime_power(p, k, m6);
    }
    Ok(SingularWeight { r, value })
}

/// h(l) = Σ_{q | l} q T(q).
pub fn h_function(l: u64) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidArgument("h(l) needs l >= 1".into()));
    }
    try_sum(
        divisors(l)
            .into_iter()
            .map(|q| Ok(q as f64 * t_function(q)?.value)),
    )
}

/// T(q) for every q up to a bound, built by a smallest-prime-factor sieve.
#[derive(Debug, Clone)]
pub struct TTable {
    values: Vec<f64>,
}

impl TTable {
    pub fn new(bound: u64) -> Result<Self> {
        if bound == 0 {
            return Err(Error::InvalidArgument(
                "T table bound must be positive".into(),
            ));
        }
        let n = bound as usize;
        let spf = smallest_prime_factors(n);
        let mut m6: HashMap<u64, u128> = HashMap::new();
        let mut values = vec![0.0; n + 1];
        values[1] = 1.0;
        for i in 2..=n {
            let p = spf[i] as u64;
            let (mut rest, mut k) = (i as u64, 0u32);
            while rest % p == 0 {
                rest /= p;
                k += 1;
            }
            let moment = if k % 3 == 1 {
                match m6.get(&p) {
                    Some(&m) => m,
                    None => {
                        let m = norm_form_moment(p)?;
                        m6.insert(p, m);
                        m
                    }
                }
            } else {
                0
            };
            values[i] = t_prime_power(p, k, moment) * values[rest as usize];
        }
        Ok(Self { values })
    }

    pub fn bound(&self) -> u64 {
        (self.values.len() - 1) as u64
    }

    pub fn get(&self, q: u64) -> Result<f64> {
        self.values
            .get(q as usize)
            .copied()
            .filter(|_| q >= 1)
            .ok_or(Error::Range {
                value: q,
                max: self.bound(),
            })
    }

    /// T(1..=bound), index `q - 1`.
    pub fn values(&self) -> &[f64] {
        &self.values[1..]
    }

    /// Σ_{q <= n} T(q) q^{-s} (log q)^j, j ∈ {0, 1}, compensated, ascending q.
    pub fn partial_sum(&self, n: u64, s: f64, log_power: u32) -> Result<f64> {
        if n > self.bound() {
            return Err(Error::Range {
                value: n,
                max: self.bound(),
            });
        }
        let mut acc = Neumaier::new();
        for q in 1..=n as usize {
            let t = self.values[q];
            if t == 0.0 {
                continue;
            }
            let qf = q as f64;
            let w = if s == 0.0 { 1.0 } else { qf.powf(-s) };
            let l = if log_power == 0 {
                1.0
            } else {
                qf.ln().powi(log_power as i32)
            };
            acc.add(t * w * l);
        }
        Ok(acc.value())
    }
}

/// h(1..=bound) from a [`TTable`] by a divisor sieve.
#[derive(Debug, Clone)]
pub struct HTable {
    values: Vec<f64>,
}

impl HTable {
    pub fn new(t: &TTable, bound: u64) -> Result<Self> {
        if bound > t.bound() {
            return Err(Error::Range {
                value: bound,
                max: t.bound(),
            });
        }
        let n = bound as usize;
        let mut acc = vec![Neumaier::new(); n + 1];
        for q in 1..=n {
            let w = q as f64 * t.values[q];
            if w == 0.0 {
                continue;
            }
            let mut m = q;
            while m <= n {
                acc[m].add(w);
                m += q;
            }
        }
        Ok(Self {
            values: acc.iter().map(Neumaier::value).collect(),
        })
    }

    pub fn bound(&self) -> u64 {
        (self.values.len() - 1) as u64
    }

    pub fn get(&self, l: u64) -> Result<f64> {
        if l == 0 || l > self.bound() {
            return Err(Error::Range {
                value: l,
                max: self.bound(),
            });
        }
        Ok(self.values[l as usize])
    }
}

/// ρ(q, ·) assembled from prime-power tables through
/// ρ(q₁q₂, a) = ρ(q₁, a) ρ(q₂, a) for coprime q₁, q₂. Prime-power tables are
/// computed once and shared.
#[derive(Debug, Default)]
pub struct RhoCache {
    tables: RwLock<HashMap<u64, Arc<Vec<u64>>>>,
}

impl RhoCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// ρ(p^k, r), r in `0..p^k`.
    fn prime_power_row(&self, p: u64, k: u32) -> Result<Arc<Vec<u64>>> {
        let m = p.pow(k);
        if let Some(t) = self.tables.read().expect("poisoned").get(&m) {
            return Ok(Arc::clone(t));
        }
        let row = if k == 1 {
            prime_rho(p)
        } else {
            cube_triple_convolution(m)?
        };
        Ok(self
            .tables
            .write()
            .expect("poisoned")
            .entry(m)
            .or_insert_with(|| Arc::new(row))
            .clone())
    }

    pub fn table(&self, q: u64) -> Result<LocalDensityTable> {
        if q == 0 {
            return Err(Error::InvalidArgument("modulus q must be positive".into()));
        }
        if q > DEFAULT_RHO_CAPACITY {
            return Err(Error::Capacity {
                requested: q,
                limit: DEFAULT_RHO_CAPACITY,
            });
        }
        let rows = factorize(q)
            .into_iter()
            .map(|(p, k)| Ok((p.pow(k), self.prime_power_row(p, k)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut by_residue = vec![1u64; q as usize];
        for (m, row) in &rows {
            let m = *m as usize;
            let mut r = 0usize;
            for v in by_residue.iter_mut() {
                *v *= row[r];
                r += 1;
                if r == m {
                    r = 0;
                }
            }
        }
        Ok(LocalDensityTable::from_residues(q, by_residue))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;

    fn brute(q: u64) -> Vec<u64> {
        let mut out = vec![0u64; q as usize];
        for a in 1..=q {
            for b in 1..=q {
                for c in 1..=q {
                    let s = (a.pow(3) + b.pow(3) + c.pow(3)) % q;
                    let idx = if s == 0 { q - 1 } else { s - 1 };
                    out[idx as usize] += 1;
                }
            }
        }
        out
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_table(1).unwrap().rho, vec![1]);
        assert_eq!(rho_table(2).unwrap().rho, vec![4, 4]);
        assert_eq!(rho_table(9).unwrap().total(), 729);
        assert!(matches!(
            rho_table_with_limit(100, 99),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn rho_matches_triple_loop() {
        for q in 1..=50 {
            assert_eq!(rho_table(q).unwrap().rho, brute(q), "q = {q}");
        }
    }

    #[test]
    fn dft_examples() {
        assert!((rho_via_dft(1, 1) - 1.0).abs() < 1e-12);
        assert!((rho_via_dft(2, 1) - 4.0).abs() < 1e-9);
        let t = rho_table(7).unwrap();
        for a in 1..=7 {
            assert!((rho_via_dft(7, a) - t.get(a) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(
            rho_second_moment(1).unwrap(),
            SecondMoment { lhs: 1.0, rhs: 1.0 }
        );
        assert_eq!(
            rho_second_moment(2).unwrap(),
            SecondMoment {
                lhs: 32.0,
                rhs: 32.0
            }
        );
        let m = rho_second_moment(4).unwrap();
        assert_eq!(m.lhs, 1024.0 * (1.0 + 4.0 / 128.0));
    }

    #[test]
    fn t_examples() {
        assert_eq!(t_function(1).unwrap().value, 1.0);
        assert_eq!(t_function(8).unwrap().value, 1.0 / 128.0);
        assert_eq!(t_function(4).unwrap().value, 1.0 / 128.0);
        assert_eq!(t_function(2).unwrap().value, 0.0);
        assert_eq!(t_function(3).unwrap().value, 0.0);
        let t9 = t_function(9).unwrap().value;
        assert!((t9 - 20.0 / 243.0).abs() < 1e-15);
        assert!((t9 - 0.0823045).abs() < 1e-7);
    }

    #[test]
    fn mod_9_moment_constant() {
        assert_eq!(
            crate::exp_sums::reduced_sixth_moment(9).unwrap(),
            SIXTH_MOMENT_MOD_9
        );
    }

    #[test]
    fn t_matches_definition() {
        let cache = ExpSumCache::new();
        for r in 1..=120u64 {
            let direct: f64 = (1..=r)
                .filter(|&c| gcd(c, r) == 1)
                .map(|c| cache.s_reduce(r, c as i64).norm().powi(6))
                .sum::<f64>()
                / (r as f64).powi(7);
            let t = t_function(r).unwrap().value;
            assert!(
                (direct - t).abs() <= 1e-9 * t.max(1e-12),
                "r = {r}: {direct} vs {t}"
            );
        }
    }

    #[test]
    fn h_examples() {
        assert_eq!(h_function(1).unwrap(), 1.0);
        assert_eq!(h_function(2).unwrap(), 1.0);
        assert_eq!(h_function(3).unwrap(), 1.0);
        assert_eq!(h_function(4).unwrap(), 33.0 / 32.0);
    }

    #[test]
    fn tables_match_pointwise() {
        let t = TTable::new(3000).unwrap();
        let h = HTable::new(&t, 3000).unwrap();
        for q in 1..=3000u64 {
            let want = t_function(q).unwrap().value;
            assert!((t.get(q).unwrap() - want).abs() <= 1e-14 * want, "q = {q}");
            if q <= 300 {
                let hw = h_function(q).unwrap();
                assert!((h.get(q).unwrap() - hw).abs() <= 1e-13 * hw, "q = {q}");
            }
        }
        assert!(matches!(t.get(3001), Err(Error::Range { .. })));
        assert!(matches!(t.get(0), Err(Error::Range { .. })));
    }

    #[test]
    fn rho_cache_matches_convolution() {
        let cache = RhoCache::new();
        for q in 1..=600 {
            assert_eq!(cache.table(q).unwrap(), rho_table(q).unwrap(), "q = {q}");
        }
    }

    #[test]
    fn decay_is_bounded() {
        let t = TTable::new(10_000).unwrap();
        let worst = (1..=10_000u64)
            .map(|r| t.get(r).unwrap() * (r as f64).powi(2))
            .fold(0.0, f64::max);
        assert!(worst < 25.0, "sup T(r) r² = {worst}");
    }
}
