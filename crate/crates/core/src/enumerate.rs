//! Integer points of an ellipsoid `{w : ‖(w + s) B‖ ≤ R}`, optionally
//! restricted to a residue class `w ≡ a (mod m)`.
//!
//! Coordinates are enumerated last to first with Fincke-Pohst bounds from
//! the triangular factor of `B Bᵀ`. The bounds are padded, so the output is
//! a superset of the ellipsoid; callers apply their own exact test.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Result};

const PAD: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Ellipsoid {
    n: usize,
    diag: Vec<f64>,
    mu: Vec<f64>,
    shift: Vec<f64>,
    radius_sq: f64,
    modulus: i64,
    residue: Vec<i64>,
    extent: Vec<f64>,
}

impl Ellipsoid {
    /// Ellipsoid of radius `radius` for the rows of `basis`.
    pub fn new(basis: &DMatrix<f64>, radius: f64) -> Result<Self> {
        let n = basis.nrows();
        if n == 0 || basis.ncols() != n {
            return Err(invalid("basis must be square"));
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(invalid("radius must be finite and non-negative"));
        }
        let r = basis.transpose().qr().r();
        let mut diag = vec![0.0; n];
        let mut mu = vec![0.0; n * n];
        for i in 0..n {
            let rii = r[(i, i)];
            if rii.abs() < 1e-300 {
                return Err(invalid("singular basis"));
            }
            diag[i] = rii * rii;
            for j in i + 1..n {
                mu[i * n + j] = r[(i, j)] / rii;
            }
        }
        let gram_inv = (basis * basis.transpose())
            .try_inverse()
            .ok_or_else(|| invalid("singular basis"))?;
        let padded = radius * (1.0 + PAD) + PAD;
        let extent = (0..n).map(|i| padded * gram_inv[(i, i)].max(0.0).sqrt()).collect();
        Ok(Self {
            n,
            diag,
            mu,
            shift: vec![0.0; n],
            radius_sq: padded * padded,
            modulus: 1,
            residue: vec![0; n],
            extent,
        })
    }

    pub fn shifted(mut self, shift: &[f64]) -> Self {
        assert_eq!(shift.len(), self.n);
        self.shift = shift.to_vec();
        self
    }

    pub fn congruent(mut self, residue: &[i64], modulus: i64) -> Self {
        assert_eq!(residue.len(), self.n);
        assert!(modulus >= 1);
        self.modulus = modulus;
        self.residue = residue.iter().map(|r| r.rem_euclid(modulus)).collect();
        self
    }

    /// Points of the axis-parallel bounding box in the residue class; an
    /// upper bound on the enumeration work.
    pub fn box_points(&self) -> f64 {
        self.extent
            .iter()
            .map(|&h| (2.0 * h / self.modulus as f64).floor() + 1.0)
            .product()
    }

    /// Candidate values of the last coordinate.
    fn outer_range(&self) -> Vec<i64> {
        let i = self.n - 1;
        let h = (self.radius_sq / self.diag[i]).sqrt();
        self.residue_range(i, -self.shift[i], h).collect()
    }

    fn residue_range(&self, i: usize, center: f64, h: f64) -> impl Iterator<Item = i64> {
        let lo = (center - h - PAD * (1.0 + center.abs())).ceil() as i64;
        let hi = (center + h + PAD * (1.0 + center.abs())).floor() as i64;
        let m = self.modulus;
        let start = lo + (self.residue[i] - lo).rem_euclid(m);
        (start..=hi).step_by(m as usize)
    }

    fn walk<F: FnMut(&[i64])>(&self, level: usize, rem: f64, w: &mut [i64], f: &mut F) {
        let n = self.n;
        let mut c = 0.0;
        for j in level + 1..n {
            c -= self.mu[level * n + j] * (w[j] as f64 + self.shift[j]);
        }
        let h = (rem.max(0.0) / self.diag[level]).sqrt();
        let s = self.shift[level];
        for wi in self.residue_range(level, c - s, h) {
            w[level] = wi;
            if level == 0 {
                f(w);
            } else {
                let d = wi as f64 + s - c;
                let next = rem - self.diag[level] * d * d;
                if next >= -PAD * self.radius_sq.max(1.0) {
                    self.walk(level - 1, next, w, f);
                }
            }
        }
    }

    fn walk_from_outer<F: FnMut(&[i64])>(&self, outer: i64, w: &mut [i64], f: &mut F) {
        let i = self.n - 1;
        w[i] = outer;
        if i == 0 {
            f(w);
            return;
        }
        let d = outer as f64 + self.shift[i];
        let rem = self.radius_sq - self.diag[i] * d * d;
        if rem >= -PAD * self.radius_sq.max(1.0) {
            self.walk(i - 1, rem, w, f);
        }
    }

    /// Visits every candidate sequentially.
    pub fn for_each<F: FnMut(&[i64])>(&self, mut f: F) {
        let mut w = vec![0i64; self.n];
        for outer in self.outer_range() {
            self.walk_from_outer(outer, &mut w, &mut f);
        }
    }

    /// Parallel fold over slabs of the last coordinate. Returns one
    /// accumulator per slab, in slab order, so reductions stay deterministic.
    pub fn par_fold<T, I, F>(&self, init: I, visit: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, &[i64]) + Sync,
    {
        self.outer_range()
            .into_par_iter()
            .map(|outer| {
                let mut acc = init();
                let mut w = vec![0i64; self.n];
                self.walk_from_outer(outer, &mut w, &mut |v| visit(&mut acc, v));
                acc
            })
            .collect()
    }

    /// Parallel count of candidates accepted by `pred`.
    pub fn par_count<F>(&self, pred: F) -> u64
    where
        F: Fn(&[i64]) -> bool + Sync,
    {
        self.par_fold(|| 0u64, |acc, w| *acc += pred(w) as u64).into_iter().sum()
    }
}
