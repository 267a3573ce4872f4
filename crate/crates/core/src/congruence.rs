//! The subgroup `Γ₁(q)` of matrices in SL_n(Z) with bottom row `≡ e_n (mod q)`:
//! index, coset representatives, the normalising matrices `τ_ℓ` and the
//! completions `γ_p`.

use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::numtheory::{complete_primitive_vector, factorize, gcd, gcd_slice, mod_inverse, UnimodularMatrix};

const ENUM_BUDGET: u128 = 100_000_000;

/// `[Γ : Γ₁(q)] = qⁿ Π_{p|q} (1 - p^{-n})`, exactly.
pub fn index_formula(n: u32, q: u64) -> Result<u64> {
    if q == 0 || n == 0 {
        return Err(invalid("need n >= 1 and q >= 1"));
    }
    let mut acc: u128 = 1;
    for (p, e) in factorize(q) {
        let pn = (p as u128).checked_pow(n).ok_or(Error::Overflow("index"))?;
        let head = (p as u128).checked_pow((e - 1) * n).ok_or(Error::Overflow("index"))?;
        acc = acc
            .checked_mul(head)
            .and_then(|a| a.checked_mul(pn - 1))
            .ok_or(Error::Overflow("index"))?;
    }
    u64::try_from(acc).map_err(|_| Error::Overflow("index"))
}

/// Number of `a ∈ (Z/q)ⁿ` with `gcd(a, q) = 1`, by enumeration.
pub fn index_enumerated(n: u32, q: u64) -> Result<u64> {
    let total = (q as u128).checked_pow(n).ok_or(Error::Overflow("index"))?;
    if total > ENUM_BUDGET {
        return Err(Error::BudgetExceeded { points: total as f64, budget: ENUM_BUDGET as f64 });
    }
    let mut count = 0;
    for_each_residue(n as usize, q as i64, |a| {
        if gcd(gcd_slice(a), q as i64) == 1 {
            count += 1;
        }
    });
    Ok(count)
}

/// Visits `(Z/q)ⁿ` in lexicographic order with entries in `[0, q)`.
fn for_each_residue<F: FnMut(&[i64])>(n: usize, q: i64, mut f: F) {
    let mut a = vec![0i64; n];
    loop {
        f(&a);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            a[i] += 1;
            if a[i] < q {
                break;
            }
            a[i] = 0;
        }
    }
}

/// A primitive integer vector congruent to `a` mod `q`.
///
/// `gcd(a, q) = 1` is required. Entries are first reduced into `[0, q)`;
/// then the first coordinate is moved by multiples of `q` until the whole
/// vector is primitive.
pub fn primitive_lift(a: &[i64], q: i64) -> Result<Vec<i64>> {
    let n = a.len();
    if n < 2 || q < 1 {
        return Err(invalid("need n >= 2 and q >= 1"));
    }
    let mut v: Vec<i64> = a.iter().map(|x| x.rem_euclid(q)).collect();
    if gcd(gcd_slice(&v), q) != 1 {
        return Err(Error::NotCoprime(format!("{a:?} mod {q}")));
    }
    if q == 1 {
        v[n - 1] = 1;
        return Ok(v);
    }
    if gcd_slice(&v) == 1 {
        return Ok(v);
    }
    if gcd_slice(&v[1..]) == 0 {
        v[1] += q;
    }
    let d = gcd_slice(&v[1..]);
    // Each prime of d either divides q (then it misses v[0]) or is avoided
    // by some k below d + 1.
    for k in 0..=d {
        if gcd(v[0] + k * q, d) == 1 {
            v[0] += k * q;
            return Ok(v);
        }
    }
    unreachable!("a lift exists within d + 1 steps")
}

/// `τ_ℓ`: a matrix in SL_n(Z) with bottom row `≡ ℓ̄ e_n (mod q)`, `ℓ ℓ̄ ≡ 1`.
pub fn make_tau(n: usize, q: i64, ell: i64) -> Result<UnimodularMatrix> {
    if gcd(ell, q) != 1 {
        return Err(Error::NotCoprime(format!("ell = {ell}, q = {q}")));
    }
    let inv = mod_inverse(ell, q)?;
    let mut a = vec![0i64; n];
    a[n - 1] = if q == 1 { 1 } else { inv };
    complete_primitive_vector(&primitive_lift(&a, q)?)
}

/// `(r, γ_p)` with `r = gcd(p)` and `r · bottom(γ_p) = p`.
pub fn make_gamma_p(p: &[i64]) -> Result<(i64, UnimodularMatrix)> {
    let r = gcd_slice(p);
    if r == 0 {
        return Err(invalid("p must be nonzero"));
    }
    let prim: Vec<i64> = p.iter().map(|x| x / r).collect();
    Ok((r, complete_primitive_vector(&prim)?))
}

/// Index, coset representatives of `Γ₁(q)\Γ` and the `τ_ℓ` table.
#[derive(Clone, Debug)]
pub struct CongruenceSubgroupData {
    pub n: usize,
    pub q: i64,
    pub index: u64,
    /// One matrix per primitive residue vector, ordered by residue.
    pub coset_reps: Vec<UnimodularMatrix>,
    /// `τ_ℓ` for each unit `ℓ ∈ [1, q)` (just `ℓ = 1` when `q = 1`).
    pub tau: BTreeMap<i64, UnimodularMatrix>,
}

impl CongruenceSubgroupData {
    pub fn new(n: usize, q: i64) -> Result<Self> {
        if n < 2 || q < 1 {
            return Err(invalid("need n >= 2 and q >= 1"));
        }
        let index = index_formula(n as u32, q as u64)?;
        let mut coset_reps = Vec::with_capacity(index as usize);
        let mut err = None;
        for_each_residue(n, q, |a| {
            if err.is_none() && gcd(gcd_slice(a), q) == 1 {
                match primitive_lift(a, q).and_then(|v| complete_primitive_vector(&v)) {
                    Ok(m) => coset_reps.push(m),
                    Err(e) => err = Some(e),
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if coset_reps.len() as u64 != index {
            return Err(invalid("coset count disagrees with the index formula"));
        }
        let mut tau = BTreeMap::new();
        for ell in 1..q.max(2) {
            if gcd(ell, q) == 1 {
                tau.insert(ell, make_tau(n, q, ell)?);
            }
        }
        Ok(Self { n, q, index, coset_reps, tau })
    }

    /// `τ_ℓ` for any `ℓ` coprime to `q`.
    pub fn tau(&self, ell: i64) -> Result<&UnimodularMatrix> {
        let key = if self.q == 1 { 1 } else { ell.rem_euclid(self.q) };
        self.tau.get(&key).ok_or_else(|| Error::NotCoprime(format!("ell = {ell}, q = {}", self.q)))
    }

    /// Whether `m` lies in `Γ₁(q)`.
    pub fn contains(&self, m: &UnimodularMatrix) -> bool {
        let n = self.n;
        m.bottom_row()
            .iter()
            .enumerate()
            .all(|(j, &x)| (x - (j == n - 1) as i64).rem_euclid(self.q) == 0)
    }
}

/// Outcome of [`orbit_decomposition_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitCheck {
    pub orbit_size: usize,
    pub union_size: usize,
    pub equal: bool,
}

/// Compares `O(p) = {v ≠ 0 : v ≡ p (mod q)}` with the disjoint union over
/// `k ≥ 1`, `gcd(k, q) = 1` of `k · {w primitive : w ≡ k̄ p (mod q)}`, as
/// multisets inside the sup-norm box of radius `box_radius`.
pub fn orbit_decomposition_check(p: &[i64], q: i64, box_radius: i64) -> Result<OrbitCheck> {
    let n = p.len();
    if q < 1 || box_radius < 0 || n == 0 {
        return Err(invalid("need q >= 1, n >= 1 and box_radius >= 0"));
    }
    if gcd(gcd_slice(p), q) != 1 {
        return Err(Error::NotCoprime(format!("{p:?} mod {q}")));
    }
    let side = 2 * box_radius + 1;
    if (side as f64).powi(n as i32) > ENUM_BUDGET as f64 {
        return Err(Error::BudgetExceeded { points: (side as f64).powi(n as i32), budget: ENUM_BUDGET as f64 });
    }
    let mut box_points = Vec::new();
    for_each_residue(n, side, |a| box_points.push(a.iter().map(|x| x - box_radius).collect::<Vec<i64>>()));

    let mut orbit: Vec<Vec<i64>> = box_points
        .iter()
        .filter(|v| v.iter().any(|&x| x != 0) && v.iter().zip(p).all(|(x, y)| (x - y).rem_euclid(q) == 0))
        .cloned()
        .collect();
    let mut union = Vec::new();
    for k in 1..=box_radius {
        if gcd(k, q) != 1 {
            continue;
        }
        let kbar = mod_inverse(k, q)?;
        let target: Vec<i64> = p.iter().map(|x| (kbar * x).rem_euclid(q)).collect();
        let reach = box_radius / k;
        for w in box_points.iter().filter(|w| w.iter().all(|x| x.abs() <= reach)) {
            if gcd_slice(w) == 1 && w.iter().zip(&target).all(|(x, t)| (x - t).rem_euclid(q) == 0) {
                union.push(w.iter().map(|x| k * x).collect::<Vec<i64>>());
            }
        }
    }
    orbit.sort();
    union.sort();
    Ok(OrbitCheck { orbit_size: orbit.len(), union_size: union.len(), equal: orbit == union })
}

/// Checks `O(e_n; [1]) τ_ℓ = O(e_n; [ℓ])` inside the sup-norm box: every
/// primitive `w ≡ e_n` maps to a primitive vector `≡ ℓ̄ e_n`, and every
/// primitive `u ≡ ℓ̄ e_n` in the box has a preimage `≡ e_n`.
pub fn tau_orbit_check(n: usize, q: i64, ell: i64, box_radius: i64) -> Result<bool> {
    if n < 2 || q < 1 || box_radius < 0 {
        return Err(invalid("need n >= 2, q >= 1 and box_radius >= 0"));
    }
    let side = 2 * box_radius + 1;
    if (side as f64).powi(n as i32) > ENUM_BUDGET as f64 {
        return Err(Error::BudgetExceeded { points: (side as f64).powi(n as i32), budget: ENUM_BUDGET as f64 });
    }
    let tau = make_tau(n, q, ell)?;
    let tau_inv = tau.inverse()?;
    let lbar = if q == 1 { 0 } else { mod_inverse(ell, q)? };
    let congruent = |v: &[i64], s: i64| v.iter().enumerate().all(|(j, &x)| (x - if j == n - 1 { s } else { 0 }).rem_euclid(q) == 0);
    let mut ok = true;
    let mut err = None;
    for_each_residue(n, side, |a| {
        if !ok || err.is_some() {
            return;
        }
        let v: Vec<i64> = a.iter().map(|x| x - box_radius).collect();
        if gcd_slice(&v) != 1 {
            return;
        }
        if congruent(&v, 1) {
            match tau.left_apply(&v) {
                Ok(u) => ok &= gcd_slice(&u) == 1 && congruent(&u, lbar),
                Err(e) => err = Some(e),
            }
        }
        if congruent(&v, lbar) {
            match tau_inv.left_apply(&v) {
                Ok(w) => ok &= gcd_slice(&w) == 1 && congruent(&w, 1),
                Err(e) => err = Some(e),
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(ok),
    }
}
