//! Exact counts of integer points where an (inhomogeneous) form takes values
//! in an interval, congruence-class counts, lattice discrepancy and growth
//! exponent fits.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::enumerate::Ellipsoid;
use crate::error::{invalid, Error, Result};
use crate::qforms::{InhomogeneousForm, QuadraticForm, Shift};
use crate::volume::ball_volume;

/// Default cap on bounding-box points per enumeration.
pub const DEFAULT_BUDGET: f64 = 1e10;
/// Largest supported dimension for the stack buffers in hot loops.
pub const MAX_DIM: usize = 8;

/// Open interval `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("bad interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `sup |x|` over the interval.
    pub fn sup_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn scaled(&self, s: f64) -> Self {
        if s >= 0.0 {
            Self { lo: self.lo * s, hi: self.hi * s }
        } else {
            Self { lo: self.hi * s, hi: self.lo * s }
        }
    }

    pub fn hull(&self, other: &Self) -> Self {
        Self { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

/// `I_t = (ξ - c t^{-κ}/2, ξ + c t^{-κ}/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShrinkingTarget {
    pub xi: f64,
    pub c: f64,
    pub kappa: f64,
}

impl ShrinkingTarget {
    pub fn new(xi: f64, c: f64, kappa: f64) -> Result<Self> {
        if !(c > 0.0) || !(kappa >= 0.0) {
            return Err(invalid("need c > 0 and kappa >= 0"));
        }
        Ok(Self { xi, c, kappa })
    }

    pub fn interval(&self, t: f64) -> Interval {
        let h = 0.5 * self.c * t.powf(-self.kappa);
        Interval { lo: self.xi - h, hi: self.xi + h }
    }
}

/// Residue class `p mod q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CongruenceClass {
    pub p: Vec<i64>,
    pub q: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountRecord {
    pub t: f64,
    pub count: u64,
    pub volume: Option<f64>,
    pub congruence_class: Option<CongruenceClass>,
}

impl CountRecord {
    fn plain(t: f64, count: u64) -> Self {
        Self { t, count, volume: None, congruence_class: None }
    }
}

fn check_budget(n: usize, t: f64, budget: f64) -> Result<()> {
    let points = (2.0 * t.floor() + 1.0).powi(n as i32);
    if points > budget {
        return Err(Error::BudgetExceeded { points, budget });
    }
    Ok(())
}

fn ball_enumerator(n: usize, t: f64) -> Result<Ellipsoid> {
    if n > MAX_DIM {
        return Err(invalid(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("radius must be finite and non-negative"));
    }
    Ellipsoid::new(&DMatrix::identity(n, n), t)
}

#[inline]
fn norm_sq(w: &[i64]) -> i64 {
    w.iter().map(|x| x * x).sum()
}

#[inline]
fn shifted_value(q: &QuadraticForm, v: &[i64], alpha: &[f64]) -> f64 {
    let mut x = [0.0; MAX_DIM];
    for i in 0..v.len() {
        x[i] = v[i] as f64 + alpha[i];
    }
    q.value(&x[..v.len()])
}

/// `N(t) = #{v ∈ Zⁿ : ‖v‖ ≤ t, Q_α(v) ∈ I}` with the default budget.
pub fn count_n(form: &InhomogeneousForm, interval: Interval, t: f64) -> Result<CountRecord> {
    count_n_with_budget(form, interval, t, DEFAULT_BUDGET)
}

pub fn count_n_with_budget(form: &InhomogeneousForm, interval: Interval, t: f64, budget: f64) -> Result<CountRecord> {
    let n = form.n();
    check_budget(n, t, budget)?;
    let e = ball_enumerator(n, t)?;
    let alpha = form.shift.to_f64();
    let t2 = t * t;
    let count = e.par_count(|v| (norm_sq(v) as f64) <= t2 && interval.contains(shifted_value(&form.base, v, &alpha)));
    Ok(CountRecord::plain(t, count))
}

/// Point `v` with `‖v‖² ` and `Q_α(v)`, kept for series evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub norm_sq: i64,
    pub value: f64,
}

/// All `v` with `‖v‖ ≤ t_max` and `Q_α(v)` in `window`, sorted by norm.
pub fn collect_hits(form: &InhomogeneousForm, window: Interval, t_max: f64, budget: f64) -> Result<Vec<Hit>> {
    let n = form.n();
    check_budget(n, t_max, budget)?;
    let e = ball_enumerator(n, t_max)?;
    let alpha = form.shift.to_f64();
    let t2 = t_max * t_max;
    let mut hits: Vec<Hit> = e
        .par_fold(Vec::new, |acc: &mut Vec<Hit>, v| {
            let ns = norm_sq(v);
            if ns as f64 <= t2 {
                let value = shifted_value(&form.base, v, &alpha);
                if window.contains(value) {
                    acc.push(Hit { norm_sq: ns, value });
                }
            }
        })
        .into_iter()
        .flatten()
        .collect();
    hits.sort_by(|a, b| a.norm_sq.cmp(&b.norm_sq).then(a.value.total_cmp(&b.value)));
    Ok(hits)
}

/// `N(t)` for every `t` in `ts` with target `I_t`, from one enumeration.
/// Agrees exactly with [`count_n`] at each grid point.
pub fn count_series(form: &InhomogeneousForm, target: &ShrinkingTarget, ts: &[f64], budget: f64) -> Result<Vec<CountRecord>> {
    if ts.is_empty() {
        return Ok(Vec::new());
    }
    let t_max = ts.iter().cloned().fold(f64::MIN, f64::max);
    let window = ts.iter().map(|&t| target.interval(t)).reduce(|a, b| a.hull(&b)).unwrap();
    let hits = collect_hits(form, window, t_max, budget)?;
    Ok(ts
        .iter()
        .map(|&t| {
            let i = target.interval(t);
            let t2 = t * t;
            let count = hits.iter().filter(|h| h.norm_sq as f64 <= t2 && i.contains(h.value)).count() as u64;
            CountRecord::plain(t, count)
        })
        .collect())
}

/// `#{v : ‖v + α‖ ≤ t, Q_α(v) ∈ I}`: the box is centred at `-α`.
pub fn count_shifted_ball(form: &InhomogeneousForm, interval: Interval, t: f64) -> Result<CountRecord> {
    let n = form.n();
    check_budget(n, t + form.shift.norm(), DEFAULT_BUDGET)?;
    let alpha = form.shift.to_f64();
    let e = ball_enumerator(n, t)?.shifted(&alpha);
    let t2 = t * t;
    let count = e.par_count(|v| {
        let d: f64 = v.iter().zip(&alpha).map(|(&x, a)| (x as f64 + a).powi(2)).sum();
        d <= t2 && interval.contains(shifted_value(&form.base, v, &alpha))
    });
    Ok(CountRecord::plain(t, count))
}

/// `#{w ≡ p (mod q) : ‖w‖ < t, Q(w) ∈ I}` by strided enumeration.
pub fn count_congruence(form: &QuadraticForm, interval: Interval, t: f64, p: &[i64], q: i64) -> Result<CountRecord> {
    let n = form.n();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    if q < 1 {
        return Err(invalid("modulus must be positive"));
    }
    check_budget(n, t / q as f64, DEFAULT_BUDGET)?;
    let e = ball_enumerator(n, t)?.congruent(p, q);
    let zero = vec![0.0; n];
    let t2 = t * t;
    let count = e.par_count(|w| (norm_sq(w) as f64) < t2 && interval.contains(shifted_value(form, w, &zero)));
    let class = CongruenceClass { p: p.iter().map(|x| x.rem_euclid(q)).collect(), q };
    Ok(CountRecord { t, count, volume: None, congruence_class: Some(class) })
}

/// Residue vector for the mixed-radix index `idx` (coordinate 0 fastest).
pub fn class_of_index(idx: usize, n: usize, q: i64) -> Vec<i64> {
    let mut k = idx as i64;
    (0..n)
        .map(|_| {
            let r = k % q;
            k /= q;
            r
        })
        .collect()
}

/// Counts for all `qⁿ` classes from a single pass over the open ball,
/// indexed as in [`class_of_index`].
pub fn count_all_classes(form: &QuadraticForm, interval: Interval, t: f64, q: i64) -> Result<Vec<u64>> {
    let n = form.n();
    if q < 1 {
        return Err(invalid("modulus must be positive"));
    }
    check_budget(n, t, DEFAULT_BUDGET)?;
    let classes = (q as usize).pow(n as u32);
    let e = ball_enumerator(n, t)?;
    let zero = vec![0.0; n];
    let t2 = t * t;
    let parts = e.par_fold(
        || vec![0u64; classes],
        |acc, w| {
            if (norm_sq(w) as f64) < t2 && interval.contains(shifted_value(form, w, &zero)) {
                let mut idx = 0usize;
                for &x in w.iter().rev() {
                    idx = idx * q as usize + x.rem_euclid(q) as usize;
                }
                acc[idx] += 1;
            }
        },
    );
    let mut out = vec![0u64; classes];
    for part in parts {
        for (o, c) in out.iter_mut().zip(part) {
            *o += c;
        }
    }
    Ok(out)
}

/// `(lower, count, upper)` for the rescaling `w = p + q v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bracket {
    pub lower: u64,
    pub count: u64,
    pub upper: u64,
}

impl Bracket {
    pub fn holds(&self) -> bool {
        self.lower <= self.count && self.count <= self.upper
    }
}

/// Sandwiches the class count `#{w ≡ p : ‖w‖ < t, Q(w) ∈ I}` between counts
/// of `Q_{p/q}` with target `q^{-2} I` at radii `t/q ∓ ‖p/q‖`, where `p` is
/// reduced into `[0, q)ⁿ`. The lower radius is nudged inward so that the
/// inclusion stays strict under rounding.
pub fn rescaling_bracket(form: &QuadraticForm, interval: Interval, t: f64, p: &[i64], q: i64) -> Result<Bracket> {
    let count = count_congruence(form, interval, t, p, q)?.count;
    let p: Vec<i64> = p.iter().map(|x| x.rem_euclid(q)).collect();
    let shift = Shift::rational(p.clone(), q)?;
    let a = shift.norm();
    let scaled = InhomogeneousForm::new(form.clone(), shift)?;
    let i = interval.scaled(1.0 / (q * q) as f64);
    let r = t / q as f64;
    let lo_r = r - a - 1e-9 * (1.0 + r);
    let lower = if lo_r > 0.0 { count_n(&scaled, i, lo_r)?.count } else { 0 };
    let upper = count_n(&scaled, i, r + a)?.count;
    Ok(Bracket { lower, count, upper })
}

/// Affine lattice `(Zⁿ + α) g`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineLattice {
    pub shift: Vec<f64>,
    pub g: DMatrix<f64>,
}

impl AffineLattice {
    pub fn new(shift: &Shift, g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != shift.len() || g.ncols() != shift.len() {
            return Err(Error::DimensionMismatch { expected: shift.len(), got: g.nrows() });
        }
        Ok(Self { shift: shift.to_f64(), g })
    }

    pub fn n(&self) -> usize {
        self.shift.len()
    }

    #[inline]
    fn point(&self, v: &[i64], out: &mut [f64]) {
        let n = self.n();
        for (j, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|i| (v[i] as f64 + self.shift[i]) * self.g[(i, j)]).sum();
        }
    }
}

/// Bounded test regions in Rⁿ.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// `‖x‖ ≤ radius`.
    Ball { radius: f64 },
    /// `inner ≤ ‖x‖ ≤ outer`.
    Annulus { inner: f64, outer: f64 },
    /// `{‖x‖ ≤ radius, Q₀(x) ∈ interval}` for the diagonal form of signature `(p1, n - p1)`.
    QuadricShell { p1: usize, interval: Interval, radius: f64 },
}

impl Region {
    fn outer_radius(&self) -> f64 {
        match self {
            Self::Ball { radius } | Self::QuadricShell { radius, .. } => *radius,
            Self::Annulus { outer, .. } => *outer,
        }
    }

    #[inline]
    fn contains(&self, x: &[f64]) -> bool {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            Self::Ball { radius } => r2 <= radius * radius,
            Self::Annulus { inner, outer } => inner * inner <= r2 && r2 <= outer * outer,
            Self::QuadricShell { p1, interval, radius } => {
                let q: f64 = x.iter().enumerate().map(|(k, v)| if k < *p1 { v * v } else { -v * v }).sum();
                r2 <= radius * radius && interval.contains(q)
            }
        }
    }

    /// Exact volume in dimension `n` when available.
    pub fn volume(&self, n: usize) -> Option<f64> {
        match self {
            Self::Ball { radius } => Some(ball_volume(n, *radius)),
            Self::Annulus { inner, outer } => Some(ball_volume(n, *outer) - ball_volume(n, *inner)),
            Self::QuadricShell { .. } => None,
        }
    }
}

/// `#(Λ ∩ A)`.
pub fn lattice_count(lattice: &AffineLattice, region: &Region) -> Result<u64> {
    let n = lattice.n();
    if n > MAX_DIM {
        return Err(invalid(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    let r = region.outer_radius();
    if !r.is_finite() {
        return Err(Error::UnboundedRegion);
    }
    let e = Ellipsoid::new(&lattice.g, r)?.shifted(&lattice.shift);
    if e.box_points() > DEFAULT_BUDGET {
        return Err(Error::BudgetExceeded { points: e.box_points(), budget: DEFAULT_BUDGET });
    }
    Ok(e.par_count(|v| {
        let mut x = [0.0; MAX_DIM];
        lattice.point(v, &mut x[..n]);
        region.contains(&x[..n])
    }))
}

/// `D(Λ, A) = |#(Λ ∩ A) - vol(A)|` for regions with a closed-form volume.
pub fn discrepancy(lattice: &AffineLattice, region: &Region) -> Result<f64> {
    let vol = region
        .volume(lattice.n())
        .ok_or_else(|| invalid("region volume must be supplied"))?;
    discrepancy_with_volume(lattice, region, vol)
}

pub fn discrepancy_with_volume(lattice: &AffineLattice, region: &Region, volume: f64) -> Result<f64> {
    Ok((lattice_count(lattice, region)? as f64 - volume).abs())
}

/// Least-squares fit of `log N` against `log t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub used: usize,
    /// Indices of records dropped for a zero count.
    pub excluded: Vec<usize>,
}

pub fn fit_growth_exponent(records: &[CountRecord]) -> Result<GrowthFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.count == 0 || r.t <= 0.0 {
            excluded.push(i);
        } else {
            xs.push(r.t.ln());
            ys.push((r.count as f64).ln());
        }
    }
    let m = xs.len();
    if m < 4 {
        return Err(Error::InsufficientData { needed: 4, got: m });
    }
    let mx = xs.iter().sum::<f64>() / m as f64;
    let my = ys.iter().sum::<f64>() / m as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(invalid("radii must not all coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = (rss / (m as f64 - 2.0) / sxx).sqrt();
    Ok(GrowthFit { slope, intercept, slope_stderr, used: m, excluded })
}

#[derive(Serialize)]
struct CountRow<'a> {
    t: f64,
    count: u64,
    volume: Option<f64>,
    class: String,
    seed: u64,
    form_id: &'a str,
}

/// CSV with columns `t, count, volume, class, seed, form_id`.
pub fn write_count_csv<W: Write>(out: W, records: &[CountRecord], seed: u64, form_id: &str) -> Result<()> {
    write_count_groups(out, &[(form_id.to_string(), records.to_vec())], seed)
}

/// Several record streams, each tagged with its own `form_id`, in one CSV.
pub fn write_count_groups<W: Write>(out: W, groups: &[(String, Vec<CountRecord>)], seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (form_id, records) in groups {
        for r in records {
            let class = r
                .congruence_class
                .as_ref()
                .map(|c| {
                    let p: Vec<String> = c.p.iter().map(|x| x.to_string()).collect();
                    format!("{} mod {}", p.join(" "), c.q)
                })
                .unwrap_or_default();
            w.serialize(CountRow { t: r.t, count: r.count, volume: r.volume, class, seed, form_id })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q0() -> QuadraticForm {
        QuadraticForm::diagonal(2, 1).unwrap()
    }

    #[test]
    fn count_n_example() {
        let f = InhomogeneousForm::homogeneous(q0());
        let i = Interval::new(-0.5, 0.5).unwrap();
        assert_eq!(count_n(&f, i, 3.0).unwrap().count, 17);
    }

    #[test]
    fn congruence_q1_matches_open_ball() {
        let i = Interval::new(-0.5, 0.5).unwrap();
        assert_eq!(count_congruence(&q0(), i, 3.5, &[0, 0, 0], 1).unwrap().count, 17);
    }

    #[test]
    fn budget_is_enforced() {
        let f = InhomogeneousForm::homogeneous(q0());
        let i = Interval::new(-0.5, 0.5).unwrap();
        assert!(matches!(count_n_with_budget(&f, i, 50.0, 1e3), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn discrepancy_examples() {
        let ball = Region::Ball { radius: 1.4 };
        let z2 = AffineLattice::new(&Shift::zero(2), DMatrix::identity(2, 2)).unwrap();
        assert!((discrepancy(&z2, &ball).unwrap() - (5.0 - 1.96 * std::f64::consts::PI).abs()).abs() < 1e-12);
        let half = AffineLattice::new(&Shift::rational(vec![1, 1], 2).unwrap(), DMatrix::identity(2, 2)).unwrap();
        assert!((discrepancy(&half, &ball).unwrap() - (4.0 - 1.96 * std::f64::consts::PI).abs()).abs() < 1e-12);
        let inf = Region::Ball { radius: f64::INFINITY };
        assert!(matches!(discrepancy(&z2, &inf), Err(Error::UnboundedRegion)));
    }

    #[test]
    fn fit_exact_power_law() {
        let recs: Vec<CountRecord> = [10.0, 20.0, 40.0, 80.0, 160.0]
            .iter()
            .map(|&t: &f64| CountRecord::plain(t, (3.0 * t.powf(1.5)).round() as u64))
            .chain(std::iter::once(CountRecord::plain(1.0, 0)))
            .collect();
        let fit = fit_growth_exponent(&recs).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-3);
        assert_eq!(fit.excluded, vec![5]);
        assert!(fit_growth_exponent(&recs[..3]).is_err());
    }

    #[test]
    fn csv_columns() {
        let mut buf = Vec::new();
        let rec = CountRecord {
            t: 2.0,
            count: 3,
            volume: Some(1.5),
            congruence_class: Some(CongruenceClass { p: vec![1, 0], q: 2 }),
        };
        write_count_csv(&mut buf, &[rec], 9, "f0").unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "t,count,volume,class,seed,form_id\n2.0,3,1.5,1 0 mod 2,9,f0\n");
    }
}
