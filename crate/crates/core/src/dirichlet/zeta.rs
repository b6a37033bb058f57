//! Riemann zeta at real arguments.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

// B_{2k} / (2k)! for k = 1..=8
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
    -3617.0 / 510.0 / 20_922_789_888_000.0,
];

const HEAD_TERMS: u32 = 16;

/// ζ(s) for real `s ≠ 1`: Euler–Maclaurin for `s > 0`, the functional
/// equation for `s < 0`.
pub fn zeta(s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("zeta at non-finite argument {s}")));
    }
    if s == 1.0 {
        return Err(Error::Pole(s));
    }
    if s == 0.0 {
        return Ok(-0.5);
    }
    if s > 0.0 {
        return Ok(euler_maclaurin(s));
    }
    let reflected = euler_maclaurin(1.0 - s);
    Ok(2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * gamma(1.0 - s) * reflected)
}

fn euler_maclaurin(s: f64) -> f64 {
    let n = HEAD_TERMS as f64;
    let mut head = crate::summation::Neumaier::new();
    // smallest terms first
    for k in (1..HEAD_TERMS).rev() {
        head.add((k as f64).powf(-s));
    }
    head.add(n.powf(1.0 - s) / (s - 1.0));
    head.add(0.5 * n.powf(-s));
    // rising factorial s (s+1) ... (s+2k-2) times N^{-s-2k+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if k > 0 {
            let j = 2.0 * k as f64;
            rising *= (s + j - 1.0) * (s + j);
            power /= n * n;
        }
        head.add(coeff * rising * power);
    }
    head.value()
}
