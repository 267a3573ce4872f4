//! Siegel transforms of shifted lattices and incomplete Eisenstein series
//! over `Γ₁(q)`, with the exact decomposition of the former into the latter.
//!
//! Every lattice point is formed as an integer vector `u` times `g`, divided
//! by an integer denominator. Both sides of the decomposition produce the
//! same integer vectors, so their floating-point images agree bit for bit
//! and indicator sums can be compared as integers.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::congruence::{make_gamma_p, make_tau};
use crate::enumerate::Ellipsoid;
use crate::error::{invalid, Error, Result};
use crate::lattice::MAX_DIM;
use crate::numtheory::{gcd, gcd_slice, mod_inverse, UnimodularMatrix};
use crate::qforms::Shift;
use crate::volume::ball_volume;

/// Sampled test function for sums that need not be exact.
pub trait TestFunction: Sync {
    fn value(&self, x: &[f64]) -> f64;
    /// `f` vanishes outside the closed ball of this radius.
    fn support_radius(&self) -> f64;
}

/// Indicator of `inner ≤ ‖x‖ ≤ outer`; a ball when `inner = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialIndicator {
    pub inner: f64,
    pub outer: f64,
}

impl RadialIndicator {
    pub fn ball(radius: f64) -> Result<Self> {
        Self::annulus(0.0, radius)
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && outer >= inner && outer.is_finite()) {
            return Err(invalid(format!("bad radii [{inner}, {outer}]")));
        }
        Ok(Self { inner, outer })
    }

    #[inline]
    pub fn contains_norm_sq(&self, r2: f64) -> bool {
        self.inner * self.inner <= r2 && r2 <= self.outer * self.outer
    }

    pub fn volume(&self, n: usize) -> f64 {
        ball_volume(n, self.outer) - ball_volume(n, self.inner)
    }

    /// `vol(f g)` for two radial indicators: volume of the common shell.
    pub fn overlap_volume(&self, other: &Self, n: usize) -> f64 {
        let lo = self.inner.max(other.inner);
        let hi = self.outer.min(other.outer);
        if hi > lo {
            ball_volume(n, hi) - ball_volume(n, lo)
        } else {
            0.0
        }
    }
}

impl TestFunction for RadialIndicator {
    fn value(&self, x: &[f64]) -> f64 {
        self.contains_norm_sq(x.iter().map(|v| v * v).sum()) as u8 as f64
    }

    fn support_radius(&self) -> f64 {
        self.outer
    }
}

/// `‖u g / den‖²`, the single code path for all lattice images.
#[inline]
pub fn image_norm_sq(u: &[i64], g: &DMatrix<f64>, den: f64) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for j in 0..n {
        let mut x = 0.0;
        for (i, &ui) in u.iter().enumerate() {
            x += ui as f64 * g[(i, j)];
        }
        let x = x / den;
        s += x * x;
    }
    s
}

fn check_matrix(g: &DMatrix<f64>) -> Result<usize> {
    let n = g.nrows();
    if n < 2 || g.ncols() != n || n > MAX_DIM {
        return Err(invalid(format!("need a square matrix of size 2..={MAX_DIM}")));
    }
    Ok(n)
}

/// `f̂((Zⁿ + p/q) g) = Σ_{v ∈ Zⁿ + p/q, v ≠ 0} f(v g)`, computed over the
/// integer vectors `u = q v ≡ p (mod q)`.
pub fn siegel_transform(f: &RadialIndicator, shift: &Shift, g: &DMatrix<f64>) -> Result<u64> {
    let n = check_matrix(g)?;
    let Shift::Rational { p, q } = shift else {
        return Err(Error::IrrationalShift);
    };
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    let den = *q as f64;
    let e = Ellipsoid::new(&(g / den), f.outer)?.congruent(p, *q);
    let mut count = 0u64;
    e.for_each(|u| {
        if u.iter().any(|&x| x != 0) && f.contains_norm_sq(image_norm_sq(u, g, den)) {
            count += 1;
        }
    });
    Ok(count)
}

/// Generic Siegel transform of a real-shifted lattice. Not exact.
pub fn siegel_transform_generic<F: TestFunction>(f: &F, shift: &[f64], g: &DMatrix<f64>) -> Result<f64> {
    let n = check_matrix(g)?;
    if shift.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: shift.len() });
    }
    let e = Ellipsoid::new(g, f.support_radius())?.shifted(shift);
    let mut sum = 0.0;
    let mut x = [0.0; MAX_DIM];
    e.for_each(|v| {
        if v.iter().zip(shift).all(|(&a, &s)| a as f64 + s == 0.0) {
            return;
        }
        for (j, xj) in x.iter_mut().enumerate().take(n) {
            *xj = (0..n).map(|i| (v[i] as f64 + shift[i]) * g[(i, j)]).sum();
        }
        sum += f.value(&x[..n]);
    });
    Ok(sum)
}

/// `Σ f((mult/den) · w M g)` over primitive `w ≡ e_n (mod q)`; the point is
/// formed as the integer vector `mult · (w M)` times `g`, over `den`.
fn theta_core(
    f: &RadialIndicator,
    q: i64,
    mult: i64,
    den: i64,
    m: Option<&UnimodularMatrix>,
    g: &DMatrix<f64>,
) -> Result<u64> {
    let n = check_matrix(g)?;
    if q < 1 {
        return Err(invalid("q must be positive"));
    }
    let mg = match m {
        Some(m) => {
            if m.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.n() });
            }
            m.to_real() * g
        }
        None => g.clone(),
    };
    let basis = mg * (mult as f64 / den as f64);
    let mut residue = vec![0i64; n];
    residue[n - 1] = 1;
    let e = Ellipsoid::new(&basis, f.outer)?.congruent(&residue, q);
    let mut count = 0u64;
    let mut err = None;
    let mut u = vec![0i64; n];
    let den_f = den as f64;
    e.for_each(|w| {
        if gcd_slice(w) != 1 || err.is_some() {
            return;
        }
        let wm = match m {
            Some(m) => match m.left_apply(w) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            },
            None => w.to_vec(),
        };
        for (ui, x) in u.iter_mut().zip(&wm) {
            *ui = mult * x;
        }
        if f.contains_norm_sq(image_norm_sq(&u, g, den_f)) {
            count += 1;
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(count),
    }
}

/// `Θ_f^{n,q}(g) = Σ_{w primitive, w ≡ e_n (mod q)} f(w g)`.
pub fn incomplete_eisenstein(f: &RadialIndicator, q: i64, g: &DMatrix<f64>) -> Result<u64> {
    theta_core(f, q, 1, 1, None, g)
}

/// `Θ_f^{n,q}(M g)` for integer `M`, evaluated as `(w M) g` so that
/// invariance under `Γ₁(q)` holds exactly.
pub fn incomplete_eisenstein_at(f: &RadialIndicator, q: i64, m: &UnimodularMatrix, g: &DMatrix<f64>) -> Result<u64> {
    theta_core(f, q, 1, 1, Some(m), g)
}

/// Both sides of the decomposition of `f̂((Zⁿ + p/q) g)` into incomplete
/// Eisenstein series.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub lhs: u64,
    pub rhs: u64,
    pub k_max: i64,
    pub equal: bool,
}

/// `f̂((Zⁿ + p/q) g) = Σ_{k ≥ 1, gcd(k,q) = 1} Θ_{f_{k/q}}(τ_{[k r̄]} γ_p g)`
/// with `r = gcd(p)` and `f_{k/q}(x) = f(k x / q)`.
pub fn siegel_eisenstein_identity_check(f: &RadialIndicator, p: &[i64], q: i64, g: &DMatrix<f64>) -> Result<IdentityCheck> {
    let n = check_matrix(g)?;
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    if q < 1 || gcd(gcd_slice(p), q) != 1 {
        return Err(Error::NotCoprime(format!("{p:?} mod {q}")));
    }
    // Z^n + 0 = Z^n + e_n when q = 1.
    let p: Vec<i64> = if p.iter().all(|&x| x == 0) {
        let mut e = vec![0; n];
        e[n - 1] = 1;
        e
    } else {
        p.to_vec()
    };
    let lhs = siegel_transform(f, &Shift::Rational { p: p.clone(), q }, g)?;

    let (r, gamma) = make_gamma_p(&p)?;
    let rbar = mod_inverse(r, q)?;
    let mut mats: BTreeMap<i64, UnimodularMatrix> = BTreeMap::new();
    let mut s_min = f64::INFINITY;
    for ell in 0..q {
        if gcd(ell, q) == 1 {
            let m = make_tau(n, q, ell.max(1))?.mul(&gamma)?;
            let sv = (m.to_real() * g).singular_values();
            s_min = s_min.min(sv.min());
            mats.insert(ell, m);
        }
    }
    if !(s_min > 0.0) {
        return Err(invalid("singular matrix"));
    }
    // One extra term guards rounding in the singular values.
    let k_max = (q as f64 * f.outer / s_min).floor() as i64 + 1;
    let mut rhs = 0u64;
    for k in 1..=k_max {
        if gcd(k, q) != 1 {
            continue;
        }
        let ell = if q == 1 { 0 } else { (k * rbar).rem_euclid(q) };
        rhs += theta_core(f, q, k, q, Some(&mats[&ell]), g)?;
    }
    Ok(IdentityCheck { lhs, rhs, k_max, equal: lhs == rhs })
}
