//! Elementary number theory: zeta values, Möbius, gcd helpers and exact
//! integer matrices of determinant one.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Terms summed directly before the analytic tail correction.
const ZETA_TERMS: u64 = 1_000_000;
const ZETA_CACHE: usize = 64;

/// Bernoulli numbers B_2, B_4, ..., B_20 as (numerator, denominator).
const BERNOULLI_EVEN: [(i64, i64); 10] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
];

/// Riemann zeta at an integer `n >= 2`.
///
/// Even `n <= 20` use the Bernoulli closed form. Other values sum the first
/// 10^6 terms and add an Euler-Maclaurin tail, giving full double precision.
pub fn zeta(n: i64) -> Result<f64> {
    if n < 2 {
        return Err(Error::ZetaDomain(n));
    }
    if n % 2 == 0 && n <= 20 {
        let k = (n / 2) as usize;
        let (num, den) = BERNOULLI_EVEN[k - 1];
        let b = num as f64 / den as f64;
        let two_pi_n = (2.0 * std::f64::consts::PI).powi(n as i32);
        let fact: f64 = (1..=n).map(|j| j as f64).product();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        return Ok(sign * b * two_pi_n / (2.0 * fact));
    }
    if (n as usize) < ZETA_CACHE {
        static CACHE: [OnceLock<f64>; ZETA_CACHE] = [const { OnceLock::new() }; ZETA_CACHE];
        return Ok(*CACHE[n as usize].get_or_init(|| zeta_sum(n)));
    }
    Ok(zeta_sum(n))
}

fn zeta_sum(n: i64) -> f64 {
    let s = n as f64;
    let k0 = ZETA_TERMS as f64;
    // Euler-Maclaurin estimate of sum_{k > k0} k^{-s}.
    let tail = k0.powf(1.0 - s) / (s - 1.0) - 0.5 * k0.powf(-s) + s * k0.powf(-s - 1.0) / 12.0;
    let mut acc = tail;
    for k in (1..=ZETA_TERMS).rev() {
        acc += (k as f64).powf(-s);
    }
    acc
}

/// `ζ_q(n) = ζ(n) Π_{p | q} (1 - p^{-n})`.
pub fn zeta_q(n: i64, q: u64) -> Result<f64> {
    if q == 0 {
        return Err(invalid("zeta_q needs q >= 1"));
    }
    let mut z = zeta(n)?;
    for p in prime_factors(q) {
        z *= 1.0 - (p as f64).powi(-(n as i32));
    }
    Ok(z)
}

/// Distinct prime divisors in increasing order.
pub fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            out.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// Prime factorisation as (prime, exponent) pairs.
pub fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for p in prime_factors(m) {
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        out.push((p, e));
    }
    out
}

/// Möbius function by trial division. `mobius(0)` is 0 by convention.
pub fn mobius(d: u64) -> i8 {
    if d == 0 {
        return 0;
    }
    let f = factorize(d);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Euler's totient.
pub fn totient(m: u64) -> u64 {
    prime_factors(m).into_iter().fold(m, |acc, p| acc / p * (p - 1))
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// Non-negative gcd of all entries (0 for the zero vector).
pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0, |g, &x| gcd(g, x))
}

/// Returns `(g, x, y)` with `a x + b y = g = gcd(a, b) >= 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a as i128, b as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    if r0 < 0 {
        (r0, s0, t0) = (-r0, -s0, -t0);
    }
    (r0 as i64, s0 as i64, t0 as i64)
}

/// Inverse of `a` modulo `m`, in `[0, m)`.
pub fn mod_inverse(a: i64, m: i64) -> Result<i64> {
    if m < 1 {
        return Err(invalid("modulus must be positive"));
    }
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    if g != 1 {
        return Err(Error::NotCoprime(format!("{a} has no inverse mod {m}")));
    }
    Ok(x.rem_euclid(m))
}

/// Largest positive divisor of `|w|` coprime to `q`.
pub fn coprime_part(w: i64, q: u64) -> Result<u64> {
    if w == 0 {
        return Err(invalid("coprime_part of 0"));
    }
    let mut m = w.unsigned_abs();
    for p in prime_factors(q) {
        while m % p == 0 {
            m /= p;
        }
    }
    Ok(m)
}

/// Square integer matrix with determinant exactly 1, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnimodularMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl UnimodularMatrix {
    pub fn new(n: usize, entries: Vec<i64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        let det = determinant(n, &entries)?;
        if det != 1 {
            return Err(Error::NotUnimodular(det));
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn bottom_row(&self) -> &[i64] {
        self.row(self.n - 1)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let n = self.n;
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            let row = self.row(i);
            out[i * n..(i + 1) * n].copy_from_slice(&other.left_apply(row)?);
        }
        Ok(Self { n, entries: out })
    }

    /// Row vector times matrix, `v M`, with overflow checks.
    pub fn left_apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        (0..self.n)
            .map(|j| {
                let s: i128 = (0..self.n).map(|i| v[i] as i128 * self.get(i, j) as i128).sum();
                i64::try_from(s).map_err(|_| Error::Overflow("vector-matrix product"))
            })
            .collect()
    }

    /// Exact inverse via the adjugate.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        if n == 1 {
            return Ok(self.clone());
        }
        let mut inv = vec![0i64; n * n];
        let mut minor = Vec::with_capacity((n - 1) * (n - 1));
        for i in 0..n {
            for j in 0..n {
                minor.clear();
                for r in (0..n).filter(|&r| r != j) {
                    for c in (0..n).filter(|&c| c != i) {
                        minor.push(self.get(r, c));
                    }
                }
                let cof = determinant(n - 1, &minor)?;
                let cof = if (i + j) % 2 == 0 { cof } else { -cof };
                inv[i * n + j] = i64::try_from(cof).map_err(|_| Error::Overflow("inverse"))?;
            }
        }
        Ok(Self { n, entries: inv })
    }

    /// Entries reduced into `[0, q)`.
    pub fn reduce_mod(&self, q: i64) -> Vec<i64> {
        self.entries.iter().map(|x| x.rem_euclid(q)).collect()
    }

    pub fn to_real(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.n, self.n, self.entries.iter().map(|&x| x as f64))
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination in `i128`.
pub fn determinant(n: usize, entries: &[i64]) -> Result<i128> {
    if n == 0 {
        return Ok(1);
    }
    let mut a: Vec<i128> = entries.iter().map(|&x| x as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k * n + k] == 0 {
            match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                Some(r) => {
                    for c in 0..n {
                        a.swap(k * n + c, r * n + c);
                    }
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let x = a[i * n + j]
                    .checked_mul(a[k * n + k])
                    .and_then(|p| a[i * n + k].checked_mul(a[k * n + j]).and_then(|r| p.checked_sub(r)))
                    .ok_or(Error::Overflow("determinant"))?;
                a[i * n + j] = x / prev;
            }
        }
        prev = a[k * n + k];
    }
    Ok(sign * a[n * n - 1])
}

/// A matrix in SL_n(Z) whose bottom row is the primitive vector `v`.
///
/// Adjacent coordinates are merged left to right by 2x2 Bezout blocks,
/// each with the least non-negative Bezout coefficient, so the output is
/// deterministic and `e_n` maps to the identity.
pub fn complete_primitive_vector(v: &[i64]) -> Result<UnimodularMatrix> {
    let n = v.len();
    if n < 2 {
        return Err(invalid("need dimension >= 2"));
    }
    if gcd_slice(v) != 1 {
        return Err(Error::NotPrimitive(v.to_vec()));
    }
    // v E_1 ... E_{n-1} = e_n with column blocks E_i; accumulate their inverse.
    let mut m = UnimodularMatrix::identity(n);
    let mut cur = v.to_vec();
    for i in 0..n - 1 {
        let j = i + 1;
        let (a, b) = (cur[i], cur[j]);
        if a == 0 && b >= 0 {
            continue;
        }
        let (g, mut x, _) = ext_gcd(a, b);
        let (ap, bp) = (a / g, b / g);
        let (e11, e12, e21, e22) = if b == 0 {
            // (a, 0) -> (0, |a|)
            (0, ap, -ap, 0)
        } else {
            x = x.rem_euclid(bp.abs());
            let y = ((g as i128 - a as i128 * x as i128) / b as i128) as i64;
            (bp, x, -ap, y)
        };
        // Inverse block [[e22, -e12], [-e21, e11]] acts on rows i and j of m.
        let mut next = m.entries.clone();
        for c in 0..n {
            let (ri, rj) = (m.get(i, c) as i128, m.get(j, c) as i128);
            let ni = e22 as i128 * ri - e12 as i128 * rj;
            let nj = -(e21 as i128) * ri + e11 as i128 * rj;
            next[i * n + c] = i64::try_from(ni).map_err(|_| Error::Overflow("completion"))?;
            next[j * n + c] = i64::try_from(nj).map_err(|_| Error::Overflow("completion"))?;
        }
        m.entries = next;
        cur[i] = 0;
        cur[j] = g;
    }
    let out = UnimodularMatrix::new(n, m.entries)?;
    debug_assert_eq!(out.bottom_row(), v);
    Ok(out)
}
