//! Indefinite quadratic forms `Q(x) = λ Q₀(x g)` and their inhomogeneous
//! shifts `Q_α(v) = Q(v + α)`.
//!
//! Vectors are rows. `Q₀` is the diagonal form with `p1` plus signs followed
//! by `p2` minus signs and `g` has determinant one, so the Gram matrix is
//! `λ g D gᵀ`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Deserialize;

use crate::error::{invalid, Error, Result};
use crate::numtheory::{gcd, gcd_slice};
use crate::rng::{stream_rng, Domain};

const DET_TOL: f64 = 1e-9;
const MIN_RAW_DET: f64 = 0.1;
const MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    n: usize,
    p1: usize,
    p2: usize,
    generator: DMatrix<f64>,
    scale: f64,
    gram: Vec<f64>,
}

impl QuadraticForm {
    pub fn new(p1: usize, p2: usize, generator: DMatrix<f64>, scale: f64) -> Result<Self> {
        let n = p1 + p2;
        if p1 == 0 || p2 == 0 {
            return Err(invalid("signature must be indefinite"));
        }
        if generator.nrows() != n || generator.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: generator.nrows() });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("scale must be positive"));
        }
        let det = generator.determinant();
        if (det - 1.0).abs() > DET_TOL {
            return Err(invalid(format!("generator determinant {det} is not 1")));
        }
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| generator[(i, k)] * sign(k, p1) * generator[(j, k)]).sum();
                gram[i * n + j] = scale * s;
            }
        }
        Ok(Self { n, p1, p2, generator, scale, gram })
    }

    /// `Q₀` itself: identity generator, unit scale.
    pub fn diagonal(p1: usize, p2: usize) -> Result<Self> {
        Self::new(p1, p2, DMatrix::identity(p1 + p2, p1 + p2), 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.p1, self.p2)
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Row-major Gram matrix.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    /// Same form with scale multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.p1, self.p2, self.generator.clone(), self.scale * lambda)
    }

    /// `x G xᵀ` with the Gram matrix; the fast path used by enumerators.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.gram[i * n..(i + 1) * n];
            let mut s = 0.0;
            for j in 0..n {
                s += row[j] * x[j];
            }
            acc += x[i] * s;
        }
        acc
    }

    /// `λ Q₀(x g)` through the generator.
    pub fn value_via_generator(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for k in 0..n {
            let y: f64 = (0..n).map(|i| x[i] * self.generator[(i, k)]).sum();
            acc += sign(k, self.p1) * y * y;
        }
        self.scale * acc
    }

    /// Gram entries when all of them are integers.
    pub fn integral_gram(&self) -> Option<Vec<i64>> {
        self.gram
            .iter()
            .map(|&x| (x.fract() == 0.0 && x.abs() < 2f64.powi(53)).then_some(x as i64))
            .collect()
    }

    /// Signature counted from eigenvalue signs of the Gram matrix.
    pub fn eigen_signature(&self) -> (usize, usize) {
        let g = DMatrix::from_row_slice(self.n, self.n, &self.gram);
        let ev = g.symmetric_eigen().eigenvalues;
        let pos = ev.iter().filter(|&&e| e > 0.0).count();
        let neg = ev.iter().filter(|&&e| e < 0.0).count();
        (pos, neg)
    }

    /// JSON record with 17 significant digits per real entry.
    pub fn to_json(&self) -> String {
        let gen: Vec<String> = (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| format!("{:.16e}", self.generator[(i, j)]))
            .collect();
        format!(
            "{{\"n\":{},\"p1\":{},\"p2\":{},\"generator\":[{}],\"scale\":{:.16e}}}",
            self.n,
            self.p1,
            self.p2,
            gen.join(","),
            self.scale
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Record {
            n: usize,
            p1: usize,
            p2: usize,
            generator: Vec<f64>,
            scale: f64,
        }
        let r: Record = serde_json::from_str(s)?;
        if r.p1 + r.p2 != r.n || r.generator.len() != r.n * r.n {
            return Err(invalid("inconsistent form record"));
        }
        Self::new(r.p1, r.p2, DMatrix::from_row_slice(r.n, r.n, &r.generator), r.scale)
    }
}

#[inline]
fn sign(k: usize, p1: usize) -> f64 {
    if k < p1 {
        1.0
    } else {
        -1.0
    }
}

/// Shift vector α: exact `p/q` or an arbitrary real vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Shift {
    Rational { p: Vec<i64>, q: i64 },
    Real(Vec<f64>),
}

impl Shift {
    /// `p/q` normalised so that `q > 0` and `gcd(p, q) = 1` jointly.
    pub fn rational(p: Vec<i64>, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(invalid("zero denominator"));
        }
        let g = gcd(gcd_slice(&p), q);
        let s = q.signum();
        Ok(Self::Rational { p: p.iter().map(|x| s * x / g).collect(), q: s * q / g })
    }

    pub fn zero(n: usize) -> Self {
        Self::Rational { p: vec![0; n], q: 1 }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Rational { p, .. } => p.len(),
            Self::Real(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Self::Rational { p, q } => p.iter().map(|&x| x as f64 / *q as f64).collect(),
            Self::Real(a) => a.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_f64().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InhomogeneousForm {
    pub base: QuadraticForm,
    pub shift: Shift,
}

impl InhomogeneousForm {
    pub fn new(base: QuadraticForm, shift: Shift) -> Result<Self> {
        if shift.len() != base.n() {
            return Err(Error::DimensionMismatch { expected: base.n(), got: shift.len() });
        }
        Ok(Self { base, shift })
    }

    pub fn homogeneous(base: QuadraticForm) -> Self {
        let n = base.n();
        Self { base, shift: Shift::zero(n) }
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }
}

/// `Q_α(v) = λ Q₀((v + α) g)`.
pub fn evaluate(form: &InhomogeneousForm, v: &[i64]) -> Result<f64> {
    let n = form.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    let a = form.shift.to_f64();
    let x: Vec<f64> = v.iter().zip(&a).map(|(&vi, ai)| vi as f64 + ai).collect();
    Ok(form.base.value_via_generator(&x))
}

/// Exact `Q(v + p/q)` as `(numerator, q²)` for a form with integer Gram
/// matrix and rational shift.
pub fn evaluate_exact(form: &InhomogeneousForm, v: &[i64]) -> Result<(i128, i128)> {
    let gram = form.base.integral_gram().ok_or_else(|| invalid("Gram matrix is not integral"))?;
    let Shift::Rational { p, q } = &form.shift else {
        return Err(Error::IrrationalShift);
    };
    let n = form.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    let w: Vec<i128> = v.iter().zip(p).map(|(&vi, &pi)| *q as i128 * vi as i128 + pi as i128).collect();
    let mut num = 0i128;
    for i in 0..n {
        for j in 0..n {
            num += gram[i * n + j] as i128 * w[i] * w[j];
        }
    }
    Ok((num, (*q as i128) * (*q as i128)))
}

/// Integral-shift rescaling `Q_{p/q}(v) = q^{-2} Q(q v + p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalRescale {
    pub form: QuadraticForm,
    pub p: Vec<i64>,
    pub q: i64,
}

impl RationalRescale {
    pub fn eval(&self, v: &[i64]) -> f64 {
        let x: Vec<f64> = v.iter().zip(&self.p).map(|(&vi, &pi)| (self.q * vi + pi) as f64).collect();
        self.form.value(&x) / (self.q as f64 * self.q as f64)
    }
}

pub fn rational_shift_rescale(form: &InhomogeneousForm) -> Result<RationalRescale> {
    match &form.shift {
        Shift::Rational { p, q } => Ok(RationalRescale { form: form.base.clone(), p: p.clone(), q: *q }),
        Shift::Real(_) => Err(Error::IrrationalShift),
    }
}

/// Random form of signature `(p1, p2)` with scale 1, seeded.
pub fn random_form(n: usize, p1: usize, p2: usize, seed: u64) -> Result<QuadraticForm> {
    random_form_with(&mut stream_rng(seed, Domain::Forms, 0), n, p1, p2)
}

/// Generator entries uniform in `[-1, 1]`, rejected while `|det| < 0.1`,
/// first row negated if `det < 0`, then divided by `det^{1/n}`.
pub fn random_form_with<R: Rng + ?Sized>(rng: &mut R, n: usize, p1: usize, p2: usize) -> Result<QuadraticForm> {
    if p1 + p2 != n {
        return Err(invalid("p1 + p2 must equal n"));
    }
    for _ in 0..MAX_ATTEMPTS {
        let mut g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0f64..=1.0));
        let mut det = g.determinant();
        if det.abs() < MIN_RAW_DET {
            continue;
        }
        if det < 0.0 {
            g.row_mut(0).neg_mut();
            det = -det;
        }
        g /= det.powf(1.0 / n as f64);
        return QuadraticForm::new(p1, p2, g, 1.0);
    }
    Err(Error::RejectionExhausted(MAX_ATTEMPTS))
}
