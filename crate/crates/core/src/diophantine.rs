//! Best simultaneous Diophantine approximation: exhaustive scan for the
//! best denominators, the Dirichlet and Lagarias inequalities, finite-data
//! exponent heuristics and the admissible `κ` window.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numtheory::gcd;

/// `⟨qα⟩` below this is treated as an exact hit.
pub const RATIONAL_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestEntry {
    pub q: u64,
    pub p: Vec<i64>,
    pub dist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestApproximationSequence {
    pub alpha: Vec<f64>,
    pub entries: Vec<BestEntry>,
    pub q_max: u64,
    /// Set when the scan stopped at `⟨qα⟩ < 1e-12`.
    pub rational: bool,
}

impl BestApproximationSequence {
    pub fn denominators(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.q).collect()
    }
}

/// `(p, ⟨qα⟩, error bound)` with `qα_i` carried as an exact double-double.
fn nearest(alpha: &[f64], q: u64) -> (Vec<i64>, f64, f64) {
    let qf = q as f64;
    let mut p = Vec::with_capacity(alpha.len());
    let mut dist: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for &a in alpha {
        let hi = qf * a;
        let lo = qf.mul_add(a, -hi);
        let mut k = hi.round();
        // hi - k is exact: both lie within one unit and share the exponent range.
        let mut r = (hi - k) + lo;
        if r > 0.5 {
            k += 1.0;
            r -= 1.0;
        } else if r < -0.5 {
            k -= 1.0;
            r += 1.0;
        }
        p.push(k as i64);
        let d = r.abs();
        if d > dist {
            dist = d;
        }
        // One rounding in the final sum plus slack for the adjustment step.
        bound = bound.max(2.0 * f64::EPSILON * d + f64::EPSILON * f64::EPSILON * hi.abs());
    }
    (p, dist, bound + f64::MIN_POSITIVE)
}

/// Scans `q = 1..=q_max`; `q` enters iff it strictly lowers the running
/// minimum of `⟨qα⟩` (sup norm). A strict improvement smaller than the
/// floating-point error bound aborts with [`Error::Precision`].
pub fn best_denominators(alpha: &[f64], q_max: u64) -> Result<BestApproximationSequence> {
    if q_max == 0 || alpha.is_empty() {
        return Err(invalid("need q_max >= 1 and a nonempty alpha"));
    }
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(invalid("alpha must be finite"));
    }
    if q_max > 1 << 52 {
        return Err(invalid("q_max must stay below 2^52"));
    }
    let mut entries: Vec<BestEntry> = Vec::new();
    let (mut best, mut best_err) = (f64::INFINITY, 0.0);
    let mut rational = false;
    for q in 1..=q_max {
        let (p, d, err) = nearest(alpha, q);
        if d >= best + best_err + err {
            continue;
        }
        let gap = best - d;
        if gap <= best_err + err {
            return Err(Error::Precision { q, improvement: gap, bound: best_err + err });
        }
        debug_assert_eq!(p.iter().fold(q as i64, |g, &x| gcd(g, x)), 1);
        entries.push(BestEntry { q, p, dist: d });
        best = d;
        best_err = err;
        if d < RATIONAL_THRESHOLD {
            rational = true;
            break;
        }
    }
    Ok(BestApproximationSequence { alpha: alpha.to_vec(), entries, q_max, rational })
}

/// `α` as integers `A_i` over a common `2^E`.
fn dyadic(alpha: &[f64]) -> Result<(Vec<i128>, u32)> {
    let parts: Vec<(i128, i32)> = alpha
        .iter()
        .map(|&a| {
            if a == 0.0 {
                return (0, 0);
            }
            let bits = a.abs().to_bits();
            let exp = ((bits >> 52) & 0x7ff) as i32;
            let (m, e) = if exp == 0 { (bits & ((1 << 52) - 1), -1074) } else { ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075) };
            let tz = m.trailing_zeros() as i32;
            ((m >> tz) as i128 * a.signum() as i128, e + tz)
        })
        .collect();
    let big_e = parts.iter().map(|&(_, e)| -e).max().unwrap_or(0).max(0);
    if big_e > 100 {
        return Err(Error::Overflow("alpha has too many fractional bits"));
    }
    let nums = parts
        .iter()
        .map(|&(m, e)| {
            let shift = (e + big_e) as u32;
            m.checked_mul(1i128.checked_shl(shift).filter(|&s| s > 0).ok_or(Error::Overflow("alpha"))?)
                .ok_or(Error::Overflow("alpha"))
        })
        .collect::<Result<_>>()?;
    Ok((nums, big_e as u32))
}

/// Reference scan in exact rational arithmetic on the binary value of `α`.
/// Slow but independent of floating-point rounding.
pub fn best_denominators_exact(alpha: &[f64], q_max: u64) -> Result<BestApproximationSequence> {
    if q_max == 0 || alpha.is_empty() || alpha.iter().any(|a| !a.is_finite()) {
        return Err(invalid("need q_max >= 1 and a finite nonempty alpha"));
    }
    let (nums, e) = dyadic(alpha)?;
    let one: i128 = 1 << e;
    let threshold = RATIONAL_THRESHOLD * one as f64;
    let mut entries = Vec::new();
    let mut best = i128::MAX;
    let mut rational = false;
    for q in 1..=q_max {
        let mut dist = 0i128;
        let mut p = Vec::with_capacity(nums.len());
        for &a in &nums {
            let x = a.checked_mul(q as i128).ok_or(Error::Overflow("q alpha"))?;
            let k = x.div_euclid(one);
            let r = x.rem_euclid(one);
            // Ties round away from zero, as f64::round does.
            let (k, d) = if 2 * r > one || (2 * r == one && x > 0) { (k + 1, one - r) } else { (k, r) };
            p.push(i64::try_from(k).map_err(|_| Error::Overflow("numerator"))?);
            dist = dist.max(d);
        }
        if dist < best {
            best = dist;
            entries.push(BestEntry { q, p, dist: dist as f64 / one as f64 });
            if (dist as f64) < threshold {
                rational = true;
                break;
            }
        }
    }
    Ok(BestApproximationSequence { alpha: alpha.to_vec(), entries, q_max, rational })
}

/// `‖α - p_k/q_k‖_∞ < 1/(q_k q_{k+1}^{1/n})` for every consecutive pair.
pub fn dirichlet_check(seq: &BestApproximationSequence) -> Result<bool> {
    Ok(dirichlet_margins(seq)?.iter().all(|&m| m < 1.0))
}

/// `⟨q_k α⟩ · q_{k+1}^{1/n}` per consecutive pair; Dirichlet says each is `< 1`.
pub fn dirichlet_margins(seq: &BestApproximationSequence) -> Result<Vec<f64>> {
    let e = &seq.entries;
    if e.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: e.len() });
    }
    let n = seq.alpha.len() as f64;
    Ok(e.windows(2).map(|w| w[0].dist * (w[1].q as f64).powf(1.0 / n)).collect())
}

/// `q_{k+2ⁿ} ≥ q_{k+1} + q_k` for all valid `k`.
pub fn lagarias_check(seq: &BestApproximationSequence, n: usize) -> Result<bool> {
    lagarias_holds(&seq.denominators(), n)
}

/// [`lagarias_check`] on a bare denominator list.
pub fn lagarias_holds(qs: &[u64], n: usize) -> Result<bool> {
    if n == 0 || n > 16 {
        return Err(invalid("n must lie in 1..=16"));
    }
    let step = 1usize << n;
    if qs.len() < step + 1 {
        return Err(Error::InsufficientData { needed: step + 1, got: qs.len() });
    }
    Ok((0..qs.len() - step).all(|k| qs[k + step] >= qs[k + 1] + qs[k]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub k: usize,
    pub q: u64,
    /// `log(1/⟨q_k α⟩) / log q_{k+1}`.
    pub omega_k: f64,
    /// `log q_{k+1} / (n log q_k)`, absent at `q_k = 1`.
    pub nu_k: Option<f64>,
}

/// Finite-data heuristics, not limits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    /// Minimum of `omega_k` over the tail.
    pub omega_hat: f64,
    /// Maximum of `nu_k` over the tail.
    pub nu: f64,
    /// Tail pairs are those with `q_k ≥ √q_last`.
    pub tail_start: usize,
    pub series: Vec<ExponentPoint>,
}

/// Needs at least 8 entries. The tail is chosen on the log scale of the
/// denominators so that it does not move when early entries are dropped.
pub fn estimate_exponents(seq: &BestApproximationSequence, n: usize) -> Result<ExponentEstimate> {
    let e = &seq.entries;
    if e.len() < 8 {
        return Err(Error::InsufficientData { needed: 8, got: e.len() });
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let series: Vec<ExponentPoint> = e
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let lq = (w[0].q as f64).ln();
            let lq1 = (w[1].q as f64).ln();
            ExponentPoint {
                k,
                q: w[0].q,
                omega_k: -w[0].dist.ln() / lq1,
                nu_k: (w[0].q > 1).then(|| lq1 / (n as f64 * lq)),
            }
        })
        .collect();
    let cut = (e[e.len() - 1].q as f64).sqrt();
    let tail_start = series.iter().position(|s| s.q as f64 >= cut).unwrap_or(series.len() - 1);
    let tail = &series[tail_start..];
    let omega_hat = tail.iter().map(|s| s.omega_k).fold(f64::INFINITY, f64::min);
    let nu = tail.iter().filter_map(|s| s.nu_k).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentEstimate { omega_hat, nu, tail_start, series })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaWindow {
    /// Open upper endpoint; the window is `(0, upper)`.
    pub upper: f64,
    pub empty: bool,
}

/// `((n-2)ω̂ - 2) / (n(1 + ω + ω ω̂))` for `n ≥ 5` and `ω̂ > 2/(n-2)`;
/// otherwise the empty window.
pub fn kappa_window(n: usize, omega: f64, omega_hat: f64) -> KappaWindow {
    let empty = KappaWindow { upper: 0.0, empty: true };
    if n < 5 {
        return empty;
    }
    let nf = n as f64;
    let num = (nf - 2.0) * omega_hat - 2.0;
    if num <= 0.0 {
        return empty;
    }
    KappaWindow { upper: num / (nf * (1.0 + omega + omega * omega_hat)), empty: false }
}

/// CSV with columns `k, q_k, p_k, dist, omega_k, nu_k`; `p_k` is space
/// separated and the exponent columns are blank without an estimate.
pub fn write_sequence_csv<W: Write>(out: W, seq: &BestApproximationSequence, est: Option<&ExponentEstimate>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "q_k", "p_k", "dist", "omega_k", "nu_k"])?;
    for (k, e) in seq.entries.iter().enumerate() {
        let p = e.p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let point = est.and_then(|s| s.series.get(k));
        let omega = point.map(|s| format!("{:.12e}", s.omega_k)).unwrap_or_default();
        let nu = point.and_then(|s| s.nu_k).map(|v| format!("{v:.12e}")).unwrap_or_default();
        w.write_record([k.to_string(), e.q.to_string(), p, format!("{:.12e}", e.dist), omega, nu])?;
    }
    w.flush()?;
    Ok(())
}
