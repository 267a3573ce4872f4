//! Haar sampling on `SL₂(Z)\SL₂(R)`, on `X_{2,q} = Γ₁(q)\SL₂(R)` and on the
//! spaces `Y_{p/q}` of shifted lattices, with Monte Carlo checks of the first
//! and second moment formulas.
//!
//! Normalisation: every estimator averages over Haar measure scaled to total
//! mass one. The reference measure gives `SL₂(Z)\SL₂(R)` mass one and hence
//! `X_{2,q}` mass `ν_{2,q}`; conversions are done explicitly where stated.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::congruence::{make_gamma_p, CongruenceSubgroupData};
use crate::eisenstein::{incomplete_eisenstein_at, siegel_transform, RadialIndicator};
use crate::error::{invalid, Error, Result};
use crate::numtheory::{coprime_part, gcd, gcd_slice, totient, zeta, UnimodularMatrix};
use crate::qforms::Shift;
use crate::rng::{batches, stream_rng, Domain};
use crate::stats::{merge_ordered, Estimate, Moments};

/// Default absolute tolerance for each `w`-term integral.
pub const W_TERM_TOL: f64 = 1e-6;

/// Point `g = u_x a k_θ` of `SL₂(R)`, with `z = g·i = x + i y` in the upper
/// half plane. So `a = diag(√y, 1/√y)`, `u_x = [[1, x], [0, 1]]` and
/// `k_θ = [[cos θ, sin θ], [-sin θ, cos θ]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IwasawaPoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl IwasawaPoint {
    pub fn matrix(&self) -> DMatrix<f64> {
        let s = self.y.sqrt();
        let (sn, cs) = self.theta.sin_cos();
        // u_x a = [[s, x/s], [0, 1/s]]
        let (a, b, d) = (s, self.x / s, 1.0 / s);
        DMatrix::from_row_slice(2, 2, &[a * cs - b * sn, a * sn + b * cs, -d * sn, d * cs])
    }

    pub fn in_fundamental_domain(&self) -> bool {
        self.x.abs() <= 0.5 && self.x * self.x + self.y * self.y >= 1.0 - 1e-12
    }
}

/// Exact draw from Haar probability measure on `SL₂(Z)\SL₂(R)`.
///
/// The `x`-marginal `∝ (1 - x²)^{-1/2}` on `[-1/2, 1/2]` is sampled as
/// `x = sin φ` with `φ` uniform on `[-π/6, π/6]`; then `y` has density
/// `∝ y^{-2}` on `[√(1 - x²), ∞)` and `θ` is uniform.
pub fn sample_sl2_quotient<R: Rng + ?Sized>(rng: &mut R) -> IwasawaPoint {
    let phi = (rng.random::<f64>() - 0.5) * PI / 3.0;
    let x = phi.sin();
    let y0 = (1.0 - x * x).sqrt();
    let u: f64 = 1.0 - rng.random::<f64>();
    let y = y0 / u;
    let theta = 2.0 * PI * rng.random::<f64>();
    IwasawaPoint { x, y, theta }
}

/// Draw on `X_{2,q}` as `γ_i g`; returns the coset index and `g`.
pub fn sample_x2q<R: Rng + ?Sized>(rng: &mut R, data: &CongruenceSubgroupData) -> (usize, IwasawaPoint) {
    let g = sample_sl2_quotient(rng);
    let i = rng.random_range(0..data.coset_reps.len());
    (i, g)
}

/// Real matrix of a draw from [`sample_x2q`].
pub fn x2q_matrix(data: &CongruenceSubgroupData, coset: usize, g: &IwasawaPoint) -> DMatrix<f64> {
    data.coset_reps[coset].to_real() * g.matrix()
}

fn congruence_data(q: i64) -> Result<CongruenceSubgroupData> {
    if q < 1 {
        return Err(invalid("q must be positive"));
    }
    CongruenceSubgroupData::new(2, q)
}

/// Parallel Monte Carlo over batches; `draw` maps one RNG to one sample.
pub(crate) fn run_mc<F>(samples: u64, seed: u64, stream_base: u64, draw: F) -> Result<Moments>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64> + Sync,
{
    if samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    let parts: Result<Vec<Moments>> = batches(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, len)| {
            let mut rng = stream_rng(seed, Domain::Haar, stream_base + b);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(draw(&mut rng)?);
            }
            Ok(m)
        })
        .collect();
    Ok(merge_ordered(parts?))
}

/// Haar sampler on `Y_{p/q}`: draws `h = γ_p^{-1} γ_i g` so that
/// `(Z² + p/q) h` is distributed by the normalised measure.
#[derive(Clone, Debug)]
pub struct YSampler {
    pub shift: Shift,
    data: CongruenceSubgroupData,
    left: Vec<DMatrix<f64>>,
}

impl YSampler {
    /// `p = 0` with `q = 1` is read as `Z²` itself.
    pub fn new(p: &[i64], q: i64) -> Result<Self> {
        if p.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: p.len() });
        }
        if gcd(gcd_slice(p), q) != 1 {
            return Err(Error::NotCoprime(format!("{p:?} mod {q}")));
        }
        let data = congruence_data(q)?;
        let p: Vec<i64> = if p == [0, 0] { vec![0, 1] } else { p.to_vec() };
        let (_, gamma) = make_gamma_p(&p)?;
        let gamma_inv = gamma.inverse()?;
        let left = data
            .coset_reps
            .iter()
            .map(|c| gamma_inv.mul(c).map(|m| m.to_real()))
            .collect::<Result<_>>()?;
        Ok(Self { shift: Shift::Rational { p, q }, data, left })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let (i, g) = sample_x2q(rng, &self.data);
        &self.left[i] * g.matrix()
    }
}

/// Normalised mean of `f̂((Z² + p/q) γ_p^{-1} γ_i g)` over `Y_{p/q}`; its
/// target is `vol(f)`.
pub fn estimate_siegel_first_moment(f: &RadialIndicator, p: &[i64], q: i64, samples: u64, seed: u64) -> Result<Estimate> {
    let sampler = YSampler::new(p, q)?;
    let m = run_mc(samples, seed, 1 << 40, |rng| Ok(siegel_transform(f, &sampler.shift, &sampler.sample(rng))? as f64))?;
    Ok(m.estimate())
}

/// Normalised mean of `Θ_f^{2,q}` over `X_{2,q}`; its target is
/// `vol(f) / (ζ(2) ν_{2,q})`.
pub fn estimate_theta_first_moment(f: &RadialIndicator, q: i64, samples: u64, seed: u64) -> Result<Estimate> {
    let data = congruence_data(q)?;
    let m = run_mc(samples, seed, 2 << 40, |rng| {
        let (i, g) = sample_x2q(rng, &data);
        Ok(incomplete_eisenstein_at(f, q, &data.coset_reps[i], &g.matrix())? as f64)
    })?;
    Ok(m.estimate())
}

/// Both sides of the second moment identity for `n = 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondMomentCheck {
    pub q: i64,
    pub ell: i64,
    /// `ν_{2,q}` times the normalised mean of `Θ_{f₁}(g) Θ_{f₂}(τ_ℓ g)`.
    pub lhs: Estimate,
    pub rhs: f64,
    pub rhs_error: f64,
    pub diagonal: f64,
    pub w_sum: f64,
    pub pass: bool,
}

/// Right-hand side: `(δ_{ℓ≡1} vol(f₁f₂) + δ_{ℓ≡-1} vol(f₁f̃₂)) / ζ(2)` plus
/// `Σ_{w≠0} φ(w_q) / (q w_q ζ(2)) · J(q|w|)`. Returns `(diagonal, w_sum, error)`.
pub fn second_moment_rhs(f1: &RadialIndicator, f2: &RadialIndicator, q: i64, ell: i64) -> Result<(f64, f64, f64)> {
    if q < 1 || gcd(ell, q) != 1 {
        return Err(Error::NotCoprime(format!("ell = {ell}, q = {q}")));
    }
    let z2 = zeta(2)?;
    let l = ell.rem_euclid(q);
    let d_plus = (l == 1 % q) as u8 as f64;
    let d_minus = (l == (q - 1) % q) as u8 as f64;
    // f̃₂ = f₂ for radial f₂.
    let diagonal = (d_plus + d_minus) * f1.overlap_volume(f2, 2) / z2;
    let w_max = (f1.outer * f2.outer / q as f64).floor() as i64;
    let mut w_sum = 0.0;
    let mut err = 0.0;
    for w in 1..=w_max {
        let wq = coprime_part(w, q as u64)?;
        let weight = totient(wq) as f64 / (q as f64 * wq as f64 * z2);
        let (j, e) = w_term_integral(f1, f2, (q * w) as f64);
        // ±w contribute equally.
        w_sum += 2.0 * weight * j;
        err += 2.0 * weight * e;
    }
    Ok((diagonal, w_sum, err))
}

/// `J(c) = ∫_{R²} f₁(x) ∫_R f₂(c x^⊥/‖x‖² + t x) dt dx` for radial indicators.
///
/// The `t`-integral is the exact length of `{t : r₂ ≤ ‖y‖ ≤ R₂}` with
/// `‖y‖² = c²/ρ² + t²ρ²`, and the angular integral is `2π`; the remaining
/// radial integral is computed by double-exponential quadrature on pieces
/// split at the kinks `ρ = c/R₂` and `ρ = c/r₂`. Returns `(value, error)`.
pub fn w_term_integral(f1: &RadialIndicator, f2: &RadialIndicator, c: f64) -> (f64, f64) {
    let (r2, big_r2) = (f2.inner, f2.outer);
    let integrand = |rho: f64| {
        let s = c * c / (rho * rho);
        let outer = (big_r2 * big_r2 - s).max(0.0).sqrt();
        let inner = (r2 * r2 - s).max(0.0).sqrt();
        outer - inner
    };
    let mut cuts = vec![f1.inner, f1.outer];
    for k in [c / big_r2, if r2 > 0.0 { c / r2 } else { f64::INFINITY }] {
        if k > f1.inner && k < f1.outer {
            cuts.push(k);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let (mut val, mut err) = (0.0, 0.0);
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let out = quadrature::double_exponential::integrate(integrand, w[0], w[1], W_TERM_TOL / (16.0 * PI));
            val += out.integral;
            err += out.error_estimate;
        }
    }
    (4.0 * PI * val, 4.0 * PI * err)
}

/// Monte Carlo left side against the quadrature right side; passes iff
/// `|lhs - rhs| ≤ sigmas · stderr + tol`.
pub fn verify_second_moment_n2(
    f1: &RadialIndicator,
    f2: &RadialIndicator,
    q: i64,
    ell: i64,
    samples: u64,
    seed: u64,
    sigmas: f64,
    tol: f64,
) -> Result<SecondMomentCheck> {
    let (diagonal, w_sum, rhs_error) = second_moment_rhs(f1, f2, q, ell)?;
    let data = congruence_data(q)?;
    let tau = data.tau(ell)?.clone();
    let shifted: Vec<UnimodularMatrix> = data.coset_reps.iter().map(|c| tau.mul(c)).collect::<Result<_>>()?;
    let m = run_mc(samples, seed, 3 << 40, |rng| {
        let (i, g) = sample_x2q(rng, &data);
        let gm = g.matrix();
        let a = incomplete_eisenstein_at(f1, q, &data.coset_reps[i], &gm)?;
        if a == 0 {
            return Ok(0.0);
        }
        let b = incomplete_eisenstein_at(f2, q, &shifted[i], &gm)?;
        Ok((a * b) as f64)
    })?;
    let nu = data.index as f64;
    let est = m.estimate();
    let lhs = Estimate { mean: nu * est.mean, stderr: nu * est.stderr, samples: est.samples };
    let rhs = diagonal + w_sum;
    let pass = (lhs.mean - rhs).abs() <= sigmas * lhs.stderr + tol;
    Ok(SecondMomentCheck { q, ell, lhs, rhs, rhs_error, diagonal, w_sum, pass })
}

/// One calibration statistic of the sampler.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub name: &'static str,
    pub estimate: Estimate,
    pub target: f64,
}

impl Calibration {
    pub fn z_score(&self) -> f64 {
        (self.estimate.mean - self.target) / self.estimate.stderr
    }
}

/// `P(y > 2)`, `P(x > 0)`, `P(θ < π)` and `E[1/y]` against their exact values.
pub fn sampler_calibration(samples: u64, seed: u64) -> Result<Vec<Calibration>> {
    let parts: Vec<[Moments; 4]> = batches(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, len)| {
            let mut rng = stream_rng(seed, Domain::Haar, (4 << 40) + b);
            let mut m = [Moments::default(); 4];
            for _ in 0..len {
                let p = sample_sl2_quotient(&mut rng);
                m[0].push((p.y > 2.0) as u8 as f64);
                m[1].push((p.x > 0.0) as u8 as f64);
                m[2].push((p.theta < PI) as u8 as f64);
                m[3].push(1.0 / p.y);
            }
            m
        })
        .collect();
    let mut acc = [Moments::default(); 4];
    for p in parts {
        for (a, m) in acc.iter_mut().zip(p) {
            *a = a.merge(m);
        }
    }
    let names = ["P(y>2)", "P(x>0)", "P(theta<pi)", "E[1/y]"];
    // E[1/y] = (3/π) ∫ dx / (2(1 - x²)) over [-1/2, 1/2] = 3 ln 3 / (2π).
    let targets = [3.0 / (2.0 * PI), 0.5, 0.5, 3.0 * 3f64.ln() / (2.0 * PI)];
    Ok((0..4)
        .map(|k| Calibration { name: names[k], estimate: acc[k].estimate(), target: targets[k] })
        .collect())
}

/// Row of the moment CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub estimator: String,
    pub q: i64,
    pub l: Option<i64>,
    #[serde(rename = "N")]
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    pub target: f64,
    pub pass: bool,
}

/// CSV with columns `estimator, q, l, N, mean, stderr, target, pass`.
pub fn write_moment_csv<W: Write>(out: W, rows: &[MomentRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
