//! Small exact-integer helpers: factorization, prime sieves, modular cubes.

use num_integer::Integer;

/// Prime factorization as `(p, e)` pairs in increasing order of `p`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    for p in [2u64, 3] {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    let mut p = 5u64;
    let mut step = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += step;
        step = 6 - step;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    matches!(factorize(n).as_slice(), [(_, 1)])
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// `a mod q` in `0..q` for a signed `a`.
pub fn residue(a: i64, q: u64) -> u64 {
    (a as i128).rem_euclid(q as i128) as u64
}

/// `m^3 mod q` without overflow.
#[inline]
pub fn cube_mod(m: u64, q: u64) -> u64 {
    if q <= u32::MAX as u64 {
        let m = m % q;
        return m * m % q * m % q;
    }
    let m = (m % q) as u128;
    let q128 = q as u128;
    (m * m % q128 * m % q128) as u64
}

#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    if q <= u32::MAX as u64 && a < q && b < q {
        return a * b % q;
    }
    ((a as u128 * b as u128) % q as u128) as u64
}

/// Primes `<= n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Smallest-prime-factor table for `0..=n` (entries 0 and 1 are 0).
pub fn smallest_prime_factors(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Sorted list of positive divisors of `n`.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

/// Integer cube root: the largest `r` with `r^3 <= n`.
pub fn icbrt(n: u64) -> u64 {
    let mut r = (n as f64).cbrt() as u64;
    while (r + 1).checked_pow(3).is_some_and(|c| c <= n) {
        r += 1;
    }
    while r.checked_pow(3).is_none_or(|c| c > n) {
        r -= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization_roundtrip() {
        for n in 1..2000u64 {
            let prod: u64 = factorize(n).iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(prod, n);
        }
        assert_eq!(factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(1), vec![]);
    }

    #[test]
    fn sieves_agree() {
        let ps = primes_up_to(500);
        let spf = smallest_prime_factors(500);
        for n in 2..=500u64 {
            assert_eq!(ps.contains(&n), is_prime(n), "{n}");
            assert_eq!(spf[n as usize] as u64, factorize(n)[0].0);
        }
    }

    #[test]
    fn cube_roots() {
        for n in 0..5000u64 {
            let r = icbrt(n);
            assert!(r * r * r <= n && (r + 1).pow(3) > n);
        }
        assert_eq!(icbrt(1_000_000), 100);
        assert_eq!(icbrt(999_999), 99);
    }

    #[test]
    fn residues_of_negatives() {
        assert_eq!(residue(-1, 7), 6);
        assert_eq!(residue(14, 7), 0);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
    }
}
