//! The representation function r₃(n): the number of ordered triples of
//! positive integers whose cubes sum to `n`, tabulated by a sieve.

use rayon::prelude::*;

use crate::arith::icbrt;
use crate::error::{Error, Result};

/// Default ceiling on sieve length (entries), roughly 4.3 GB of tables.
pub const DEFAULT_MAX_ENTRIES: u64 = 1 << 28;

/// Dense table of r₃(n) for `1 <= n <= x_max` with prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeRepTable {
    x_max: u64,
    // counts[0] is always 0; counts[n] = r₃(n).
    counts: Vec<u32>,
    prefix: Vec<u64>,
    prefix_sq: Vec<u128>,
    // n with r₃(n) > 0, ascending.
    support: Vec<u64>,
}

/// Per-point and maximal values of log Σr₃(n)² / log x over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentEstimate {
    pub max: f64,
    pub points: Vec<(u64, f64)>,
}

/// Sieve r₃(n) up to `x_max` with the default memory budget.
pub fn sieve_r3(x_max: u64) -> Result<CubeRepTable> {
    sieve_r3_with_limit(x_max, DEFAULT_MAX_ENTRIES)
}

pub fn sieve_r3_with_limit(x_max: u64, max_entries: u64) -> Result<CubeRepTable> {
    if x_max == 0 {
        return Err(Error::InvalidArgument("x_max must be positive".into()));
    }
    if x_max > max_entries {
        return Err(Error::Capacity {
            requested: x_max,
            limit: max_entries,
        });
    }
    let workers = rayon::current_num_threads().max(1) as u64;
    let counts = if workers == 1 || x_max < 1 << 16 {
        sieve_stripe(x_max, 0, 1)
    } else {
        let parts: Vec<Vec<u32>> = (0..workers)
            .into_par_iter()
            .map(|w| sieve_stripe(x_max, w, workers))
            .collect();
        let mut merged = vec![0u32; x_max as usize + 1];
        for part in parts {
            for (m, c) in merged.iter_mut().zip(part) {
                *m += c;
            }
        }
        merged
    };
    Ok(CubeRepTable::from_dense(counts))
}

/// Unordered triples x1 <= x2 <= x3 with x1 ≡ stripe (mod stride), each
/// contributing its orbit size under permutation.
fn sieve_stripe(x_max: u64, stripe: u64, stride: u64) -> Vec<u32> {
    let mut counts = vec![0u32; x_max as usize + 1];
    let top = icbrt(x_max);
    let mut x1 = if stripe == 0 { stride } else { stripe };
    while x1 <= top {
        let c1 = x1 * x1 * x1;
        if 3 * c1 > x_max {
            break;
        }
        let mut x2 = x1;
        loop {
            let c12 = c1 + x2 * x2 * x2;
            if c12 + x2 * x2 * x2 > x_max {
                break;
            }
            let mut x3 = x2;
            loop {
                let n = c12 + x3 * x3 * x3;
                if n > x_max {
                    break;
                }
                let weight = if x1 == x3 {
                    1
                } else if x1 == x2 || x2 == x3 {
                    3
                } else {
                    6
                };
                counts[n as usize] += weight;
                x3 += 1;
            }
            x2 += 1;
        }
        x1 += stride;
    }
    counts
}

impl CubeRepTable {
    /// Build from a dense count vector indexed by `n` (entry 0 ignored).
    pub fn from_dense(mut counts: Vec<u32>) -> Self {
        assert!(counts.len() >= 2, "table needs at least n = 1");
        counts[0] = 0;
        let x_max = (counts.len() - 1) as u64;
        let mut prefix = Vec::with_capacity(counts.len());
        let mut prefix_sq = Vec::with_capacity(counts.len());
        let mut support = Vec::new();
        let (mut s, mut s2) = (0u64, 0u128);
        for (n, &c) in counts.iter().enumerate() {
            s += c as u64;
            s2 += (c as u128) * (c as u128);
            prefix.push(s);
            prefix_sq.push(s2);
            if c > 0 {
                support.push(n as u64);
            }
        }
        Self {
            x_max,
            counts,
            prefix,
            prefix_sq,
            support,
        }
    }

    pub fn x_max(&self) -> u64 {
        self.x_max
    }

    /// r₃(n) for `0 <= n <= x_max`.
    pub fn r3(&self, n: u64) -> u32 {
        self.counts[n as usize]
    }

    /// Dense counts, index `n` holding r₃(n).
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Ascending list of `n <= x_max` with r₃(n) > 0.
    pub fn support(&self) -> &[u64] {
        &self.support
    }

    /// Support points `n <= x`.
    pub fn support_up_to(&self, x: u64) -> &[u64] {
        let end = self.support.partition_point(|&n| n <= x);
        &self.support[..end]
    }

    fn check(&self, x: u64) -> Result<()> {
        if x == 0 || x > self.x_max {
            return Err(Error::Range {
                value: x,
                max: self.x_max,
            });
        }
        Ok(())
    }

    /// Σ_{n<=x} r₃(n).
    pub fn sum_r3(&self, x: u64) -> Result<u64> {
        self.check(x)?;
        Ok(self.prefix[x as usize])
    }

    /// Σ_{n<=x} r₃(n)².
    pub fn sum_r3_squared(&self, x: u64) -> Result<u128> {
        self.check(x)?;
        Ok(self.prefix_sq[x as usize])
    }

    /// Υ(x; q, a) for a = 1..=q; entry `a - 1`, the last entry is the class
    /// n ≡ 0 (mod q).
    pub fn progression_sums(&self, x: u64, q: u64) -> Result<Vec<u64>> {
        self.check(x)?;
        if q == 0 {
            return Err(Error::InvalidArgument("modulus q must be positive".into()));
        }
        let mut out = vec![0u64; q as usize];
        for &n in self.support_up_to(x) {
            let r = n % q;
            let idx = if r == 0 { q - 1 } else { r - 1 };
            out[idx as usize] += self.counts[n as usize] as u64;
        }
        Ok(out)
    }

    /// max over the grid of log(Σ_{n<=x} r₃(n)²) / log x, with the per-point
    /// ratios.
    pub fn estimate_upper_exponent(&self, grid: &[u64]) -> Result<ExponentEstimate> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut points = Vec::with_capacity(grid.len());
        for &x in grid {
            let s2 = self.sum_r3_squared(x)?;
            if x < 3 || s2 == 0 {
                return Err(Error::Domain(format!(
                    "exponent undefined at x = {x} (empty second moment)"
                )));
            }
            points.push((x, (s2 as f64).ln() / (x as f64).ln()));
        }
        let max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(ExponentEstimate { max, points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(x_max: u64) -> Vec<u32> {
        let mut c = vec![0u32; x_max as usize + 1];
        let top = icbrt(x_max);
        for a in 1..=top {
            for b in 1..=top {
                for d in 1..=top {
                    let n = a * a * a + b * b * b + d * d * d;
                    if n <= x_max {
                        c[n as usize] += 1;
                    }
                }
            }
        }
        c
    }

    #[test]
    fn smallest_tables() {
        let t = sieve_r3(2).unwrap();
        assert_eq!(t.counts(), &[0, 0, 0]);
        let t = sieve_r3(10).unwrap();
        for n in 0..=10 {
            let want = match n {
                3 => 1,
                10 => 3,
                _ => 0,
            };
            assert_eq!(t.r3(n), want, "n = {n}");
        }
        assert_eq!(sieve_r3(36).unwrap().r3(36), 6);
    }

    #[test]
    fn matches_triple_loop_up_to_500() {
        let t = sieve_r3(500).unwrap();
        assert_eq!(t.counts(), brute(500).as_slice());
    }

    #[test]
    fn partial_sums() {
        let t = sieve_r3(40).unwrap();
        assert_eq!(t.sum_r3(10).unwrap(), 4);
        assert_eq!(t.sum_r3(2).unwrap(), 0);
        assert_eq!(t.sum_r3_squared(10).unwrap(), 10);
        assert_eq!(t.sum_r3_squared(2).unwrap(), 0);
        // 1 + 9 + 9 + 1 + 9 + 36 from n = 3, 10, 17, 24, 29, 36
        assert_eq!(t.sum_r3_squared(36).unwrap(), 65);
        assert!(matches!(t.sum_r3(41), Err(Error::Range { .. })));
        assert!(matches!(t.sum_r3(0), Err(Error::Range { .. })));
    }

    #[test]
    fn progression_examples() {
        let t = sieve_r3(10).unwrap();
        assert_eq!(t.progression_sums(10, 3).unwrap(), vec![3, 0, 1]);
        assert_eq!(t.progression_sums(10, 1).unwrap(), vec![4]);
    }

    #[test]
    fn exponent_examples() {
        let t = sieve_r3(10).unwrap();
        let e = t.estimate_upper_exponent(&[10]).unwrap();
        assert!((e.max - 1.0).abs() < 1e-15);
        assert!(matches!(
            t.estimate_upper_exponent(&[]),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn capacity_limit() {
        assert!(matches!(
            sieve_r3_with_limit(1000, 999),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn parallel_sieve_matches_sequential() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let par = pool.install(|| sieve_r3(200_000).unwrap());
        let seq = CubeRepTable::from_dense(sieve_stripe(200_000, 0, 1));
        assert_eq!(par, seq);
    }

    #[test]
    fn orbit_sizes_of_small_values() {
        let t = sieve_r3(2000).unwrap();
        for n in 1..=2000u64 {
            let c = t.r3(n);
            if c > 0 {
                assert!(n >= 3);
            }
            // every representation class has size 1, 3 or 6
            assert!(
                c == 0 || c.is_multiple_of(3) || c % 3 == 1,
                "n = {n}, r3 = {c}"
            );
        }
    }

    proptest! {
        #[test]
        fn progressions_partition_total(x in 1u64..10_000, q in 1u64..=64) {
            let t = sieve_r3(10_000).unwrap();
            let parts = t.progression_sums(x, q).unwrap();
            prop_assert_eq!(parts.iter().sum::<u64>(), t.sum_r3(x).unwrap());
        }

        #[test]
        fn sums_are_monotone(x in 1u64..9_999) {
            let t = sieve_r3(10_000).unwrap();
            prop_assert!(t.sum_r3(x).unwrap() <= t.sum_r3(x + 1).unwrap());
            prop_assert!(t.sum_r3_squared(x).unwrap() <= t.sum_r3_squared(x + 1).unwrap());
        }
    }
}
