//! Cube-residue histograms and their cyclic self-convolutions.
//!
//! The triple cyclic self-convolution of `h[r] = #{1 <= m <= q : m³ ≡ r}`
//! is the local density ρ(q, ·). Three evaluation routes are provided: a
//! direct sparse convolution, a power-of-two FFT with integrality check, and
//! for prime moduli a route that evaluates the convolution once per
//! cubic-residue class.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arith::{cube_mod, mul_mod};
use crate::error::{Error, Result};

/// Below this length the direct convolution is used.
pub const DIRECT_CUTOFF: u64 = 512;

/// `h[r] = #{1 <= m <= q : m³ ≡ r (mod q)}` for `r` in `0..q`.
pub fn cube_histogram(q: u64) -> Vec<u64> {
    let mut h = vec![0u64; q as usize];
    for m in 1..=q {
        h[cube_mod(m, q) as usize] += 1;
    }
    h
}

/// Cyclic convolution `(a * b)[t] = Σ_i a[i] b[t - i]`, skipping zero
/// entries of `a`.
pub fn cyclic_convolve_direct(a: &[u64], b: &[u64]) -> Vec<u64> {
    let q = a.len();
    assert_eq!(q, b.len());
    let mut out = vec![0u64; q];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let t = if i + j >= q { i + j - q } else { i + j };
            out[t] += ai * bj;
        }
    }
    out
}

/// Triple cyclic self-convolution by two direct passes.
pub fn triple_convolve_direct(h: &[u64]) -> Vec<u64> {
    let h2 = cyclic_convolve_direct(h, h);
    cyclic_convolve_direct(h, &h2)
}

/// Triple cyclic self-convolution through one zero-padded power-of-two FFT.
/// Fails if any linear-convolution entry is further than 0.25 from an
/// integer.
pub fn triple_convolve_fft(h: &[u64]) -> Result<Vec<u64>> {
    let q = h.len();
    if q == 0 {
        return Ok(Vec::new());
    }
    let n = (3 * q - 2).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(if i < q { h[i] as f64 } else { 0.0 }, 0.0))
        .collect();
    fwd.process(&mut buf);
    for z in buf.iter_mut() {
        *z = *z * *z * *z;
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut out = vec![0u64; q];
    let mut worst = 0.0f64;
    for (k, z) in buf.iter().enumerate().take(3 * q - 2) {
        let v = z.re * scale;
        let r = v.round();
        worst = worst.max((v - r).abs());
        if r < 0.0 {
            return Err(Error::Numerical(format!(
                "negative convolution entry {v} at index {k}"
            )));
        }
        out[k % q] += r as u64;
    }
    if worst >= 0.25 {
        return Err(Error::Numerical(format!(
            "FFT convolution rounding error {worst} for length {q}"
        )));
    }
    Ok(out)
}

/// Triple self-convolution of the cube histogram mod `q`: direct below
/// [`DIRECT_CUTOFF`], FFT above.
pub fn cube_triple_convolution(q: u64) -> Result<Vec<u64>> {
    let h = cube_histogram(q);
    if q < DIRECT_CUTOFF {
        Ok(triple_convolve_direct(&h))
    } else {
        triple_convolve_fft(&h)
    }
}

const ZERO_CLASS: u8 = 3;

/// ρ(p, ·) for a prime `p` evaluated once per coset of the nonzero cubes:
/// ρ(p, ·) and the pair convolution are constant on each coset.
struct PrimeClasses {
    // class of each residue: 0..=2 for the cosets, ZERO_CLASS for 0
    class: Vec<u8>,
    coset_size: u64,
    cosets: usize,
    // ρ at 0 followed by ρ on each coset
    rho: [u64; 4],
}

fn slot(c: u8) -> usize {
    if c == ZERO_CLASS {
        0
    } else {
        c as usize + 1
    }
}

fn prime_classes(p: u64) -> PrimeClasses {
    assert!(p >= 2);
    let pu = p as usize;
    let mut class = vec![u8::MAX; pu];
    class[0] = ZERO_CLASS;
    let mut cubes = Vec::with_capacity(pu);
    for y in 1..p {
        let c = cube_mod(y, p) as usize;
        if class[c] == u8::MAX {
            class[c] = 0;
            cubes.push(c as u64);
        }
    }
    let cosets = ((p - 1) / cubes.len() as u64) as usize;
    // multiplicity of each nonzero cube as y ranges over 1..p
    let mult = cosets as u64;
    let mut reps = vec![0u64, 1];
    if cosets == 3 {
        let g = (2..p)
            .find(|&t| class[t as usize] != 0)
            .expect("non-cube exists");
        let g2 = mul_mod(g, g, p);
        for &u in &cubes {
            class[mul_mod(g, u, p) as usize] = 1;
            class[mul_mod(g2, u, p) as usize] = 2;
        }
        reps.push(g);
        reps.push(g2);
    }
    debug_assert!(class.iter().all(|&c| c != u8::MAX));

    let h_of = |t: u64| -> u64 {
        match class[t as usize] {
            ZERO_CLASS => 1,
            0 => mult,
            _ => 0,
        }
    };
    let sub = |a: u64, b: u64| if a >= b { a - b } else { a + p - b };

    // pair counts c2(t) = Σ_y h(t - y³), one value per class
    let mut c2 = [0u64; 4];
    for &t in &reps {
        let mut s = h_of(t);
        for &u in &cubes {
            s += mult * h_of(sub(t, u));
        }
        c2[slot(class[t as usize])] = s;
    }
    let mut rho = [0u64; 4];
    for &a in &reps {
        let mut s = c2[slot(class[a as usize])];
        for &u in &cubes {
            s += mult * c2[slot(class[sub(a, u) as usize])];
        }
        rho[slot(class[a as usize])] = s;
    }
    PrimeClasses {
        class,
        coset_size: cubes.len() as u64,
        cosets,
        rho,
    }
}

/// ρ(p, r) for a prime `p` and every residue `r` in `0..p`, in O(p).
pub fn prime_rho(p: u64) -> Vec<u64> {
    let pc = prime_classes(p);
    pc.class.iter().map(|&c| pc.rho[slot(c)]).collect()
}

/// Σ_a ρ(p, a)² for a prime `p`. Linear in `p`, integer-only.
pub fn prime_rho_square_sum(p: u64) -> u128 {
    let pc = prime_classes(p);
    let size = pc.coset_size as u128;
    let mut total = (pc.rho[0] as u128).pow(2);
    let mut mass = pc.rho[0] as u128;
    for r in &pc.rho[1..=pc.cosets] {
        total += size * (*r as u128).pow(2);
        mass += size * *r as u128;
    }
    debug_assert_eq!(mass, (p as u128).pow(3));
    total
}
