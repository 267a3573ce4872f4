//! Monte Carlo volumes of `{x : ‖x‖ < t, Q(x) ∈ I}` and the leading
//! constant `c_Q` in `vol ≈ c_Q |I| t^{n-2}`.
//!
//! Points are uniform in a ball: Gaussian direction, radius `t u^{1/n}`.
//! Estimates over several radii or intervals reuse one sample path.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{Interval, MAX_DIM};
use crate::qforms::QuadraticForm;
use crate::rng::{batches, stream_rng, Domain};

pub const MIN_SAMPLES: u64 = 1000;

/// `Γ(n/2 + 1)` for integer `n >= 0`.
fn gamma_half_plus_one(n: usize) -> f64 {
    if n % 2 == 0 {
        (1..=n / 2).map(|k| k as f64).product()
    } else {
        // Γ(m + 1/2) = √π (2m)! / (4^m m!) with m = (n + 1) / 2.
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 + 1.0 - 1e-9 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Volume of the Euclidean ball of radius `r` in Rⁿ.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) * r.powi(n as i32) / gamma_half_plus_one(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl VolumeEstimate {
    fn from_hits(container: f64, hits: u64, samples: u64) -> Self {
        let p = hits as f64 / samples as f64;
        let var = if samples > 1 { p * (1.0 - p) * samples as f64 / (samples as f64 - 1.0) } else { 0.0 };
        Self { value: container * p, stderr: container * (var / samples as f64).sqrt(), samples }
    }
}

/// Runs `samples` uniform draws in `B_radius` and lets `classify` bump
/// counters in a `k`-slot array. Deterministic for fixed `(seed, stream_base)`.
fn mc_hits<F>(n: usize, radius: f64, samples: u64, seed: u64, stream_base: u64, k: usize, classify: F) -> Vec<u64>
where
    F: Fn(&[f64], &mut [u64]) + Sync,
{
    let parts: Vec<Vec<u64>> = batches(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, len)| {
            let mut rng = stream_rng(seed, Domain::Volume, stream_base + b);
            let mut acc = vec![0u64; k];
            let mut x = [0.0; MAX_DIM];
            for _ in 0..len {
                sample_ball(&mut rng, radius, &mut x[..n]);
                classify(&x[..n], &mut acc);
            }
            acc
        })
        .collect();
    let mut out = vec![0u64; k];
    for p in parts {
        for (o, c) in out.iter_mut().zip(p) {
            *o += c;
        }
    }
    out
}

/// Uniform point in the ball of radius `radius`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64, x: &mut [f64]) {
    let n = x.len();
    loop {
        let mut s = 0.0;
        for xi in x.iter_mut() {
            *xi = rng.sample(StandardNormal);
            s += *xi * *xi;
        }
        if s > 0.0 {
            let u: f64 = rng.random();
            let scale = radius * u.powf(1.0 / n as f64) / s.sqrt();
            x.iter_mut().for_each(|v| *v *= scale);
            return;
        }
    }
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(invalid(format!("need at least {MIN_SAMPLES} samples")));
    }
    Ok(())
}

fn check_dim(q: &QuadraticForm) -> Result<()> {
    if q.n() > MAX_DIM {
        return Err(invalid(format!("dimension exceeds {MAX_DIM}")));
    }
    Ok(())
}

/// `vol{‖x‖ < t, Q(x) ∈ I}`.
pub fn mc_volume(q: &QuadraticForm, interval: Interval, t: f64, samples: u64, seed: u64) -> Result<VolumeEstimate> {
    Ok(mc_volume_series(q, &[interval], &[t], samples, seed)?[0][0])
}

/// Volumes for every `(interval, radius)` pair from one sample path in
/// `B_{max t}`; result is indexed `[interval][radius]`. Nested intervals or
/// radii therefore give pathwise monotone estimates.
pub fn mc_volume_series(
    q: &QuadraticForm,
    intervals: &[Interval],
    ts: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<Vec<VolumeEstimate>>> {
    check_samples(samples)?;
    check_dim(q)?;
    if ts.is_empty() || intervals.is_empty() || ts.iter().any(|&t| !(t > 0.0)) {
        return Err(invalid("need positive radii and at least one interval"));
    }
    let n = q.n();
    let t_max = ts.iter().cloned().fold(0.0, f64::max);
    let sq: Vec<f64> = ts.iter().map(|t| t * t).collect();
    let nt = ts.len();
    let hits = mc_hits(n, t_max, samples, seed, 0, intervals.len() * nt, |x, acc| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let v = q.value(x);
        for (a, i) in intervals.iter().enumerate() {
            if i.contains(v) {
                for (b, s) in sq.iter().enumerate() {
                    if r2 < *s {
                        acc[a * nt + b] += 1;
                    }
                }
            }
        }
    });
    let container = ball_volume(n, t_max);
    Ok((0..intervals.len())
        .map(|a| (0..nt).map(|b| VolumeEstimate::from_hits(container, hits[a * nt + b], samples)).collect())
        .collect())
}

/// Volumes of the shifted region `{‖y - α‖ < t, Q(y) ∈ I}` and of the
/// centred balls of radius `t ∓ ‖α‖` that sandwich it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftedVolume {
    pub lower: VolumeEstimate,
    pub shifted: VolumeEstimate,
    pub upper: VolumeEstimate,
}

pub fn mc_volume_shifted(
    q: &QuadraticForm,
    interval: Interval,
    t: f64,
    alpha: &[f64],
    samples: u64,
    seed: u64,
) -> Result<ShiftedVolume> {
    check_samples(samples)?;
    check_dim(q)?;
    let n = q.n();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
    }
    let a = alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (lo, hi) = ((t - a).max(0.0), t + a);
    let hits = mc_hits(n, hi, samples, seed, 0, 3, |x, acc| {
        if !interval.contains(q.value(x)) {
            return;
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let d2: f64 = x.iter().zip(alpha).map(|(v, s)| (v - s).powi(2)).sum();
        acc[0] += (r2 < lo * lo) as u64;
        acc[1] += (d2 < t * t) as u64;
        acc[2] += (r2 < hi * hi) as u64;
    });
    let c = ball_volume(n, hi);
    Ok(ShiftedVolume {
        lower: VolumeEstimate::from_hits(c, hits[0], samples),
        shifted: VolumeEstimate::from_hits(c, hits[1], samples),
        upper: VolumeEstimate::from_hits(c, hits[2], samples),
    })
}

/// `ĉ(t) = vol / (|I| t^{n-2})` at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CPoint {
    pub t: f64,
    pub c_hat: f64,
    pub stderr: f64,
    pub volume: VolumeEstimate,
}

/// Rule for declaring `ĉ` converged between the last two radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Convergence {
    pub rel_tol: f64,
    pub sigmas: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self { rel_tol: 0.02, sigmas: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CEstimate {
    pub points: Vec<CPoint>,
    pub converged: bool,
}

/// `ĉ` on an increasing grid of radii with independent streams per radius.
pub fn estimate_cq(
    q: &QuadraticForm,
    interval: Interval,
    ts: &[f64],
    samples: u64,
    seed: u64,
    rule: Convergence,
) -> Result<CEstimate> {
    check_samples(samples)?;
    check_dim(q)?;
    let min_t = 2.0 * interval.sup_abs().sqrt();
    if ts.is_empty() || ts.iter().any(|&t| t <= min_t) {
        return Err(invalid(format!("every radius must exceed {min_t}")));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii must increase"));
    }
    let n = q.n();
    let points: Vec<CPoint> = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let t2 = t * t;
            let hits = mc_hits(n, t, samples, seed, (k as u64 + 1) << 40, 1, |x, acc| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                acc[0] += (r2 < t2 && interval.contains(q.value(x))) as u64;
            });
            let volume = VolumeEstimate::from_hits(ball_volume(n, t), hits[0], samples);
            let norm = interval.width() * t.powi(n as i32 - 2);
            CPoint { t, c_hat: volume.value / norm, stderr: volume.stderr / norm, volume }
        })
        .collect();
    let converged = match points.as_slice() {
        [.., a, b] => {
            let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            (b.c_hat - a.c_hat).abs() <= rule.rel_tol * b.c_hat.abs() + rule.sigmas * combined
        }
        _ => false,
    };
    Ok(CEstimate { points, converged })
}

#[derive(Serialize)]
struct VolumeRow {
    t: f64,
    volume: f64,
    stderr: f64,
    samples: u64,
    c_hat: f64,
}

/// CSV with columns `t, volume, stderr, samples, c_hat`.
pub fn write_volume_csv<W: Write>(out: W, est: &CEstimate) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &est.points {
        w.serialize(VolumeRow {
            t: p.t,
            volume: p.volume.value,
            stderr: p.volume.stderr,
            samples: p.volume.samples,
            c_hat: p.c_hat,
        })?;
    }
    w.flush()?;
    Ok(())
}
