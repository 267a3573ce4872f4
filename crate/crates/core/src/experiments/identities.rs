//! E4 (index formula, coset and orbit identities) and E5 (exact
//! Siegel–Eisenstein identity on random instances).

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{join, Check, Config, Findings, Outputs};
use crate::congruence::{index_enumerated, index_formula, orbit_decomposition_check, tau_orbit_check, CongruenceSubgroupData};
use crate::eisenstein::{siegel_eisenstein_identity_check, RadialIndicator};
use crate::error::{Error, Result};
use crate::numtheory::{gcd, gcd_slice, mod_inverse, zeta, zeta_q};
use crate::rng::{stream_rng, Domain};

const MAX_ATTEMPTS: usize = 10_000;

/// Random `g ∈ SL_n(R)` with condition number at most `max_cond`: uniform
/// entries in `[-1, 1]`, normalised to determinant one, rejected when
/// ill-conditioned.
pub fn random_sl_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, max_cond: f64) -> Result<DMatrix<f64>> {
    for _ in 0..MAX_ATTEMPTS {
        let mut g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0f64..=1.0));
        let det = g.determinant();
        if det.abs() < 1e-3 {
            continue;
        }
        if det < 0.0 {
            g.row_mut(0).neg_mut();
        }
        g /= det.abs().powf(1.0 / n as f64);
        let sv = g.singular_values();
        if sv.max() / sv.min() <= max_cond {
            return Ok(g);
        }
    }
    Err(Error::RejectionExhausted(MAX_ATTEMPTS))
}

/// Uniform residue vector in `[0, q)ⁿ` with `gcd(p, q) = 1` (zero for `q = 1`).
fn random_residue<R: Rng + ?Sized>(rng: &mut R, n: usize, q: i64) -> Vec<i64> {
    loop {
        let p: Vec<i64> = (0..n).map(|_| rng.random_range(0..q)).collect();
        if gcd(gcd_slice(&p), q) == 1 {
            return p;
        }
    }
}

#[derive(Serialize)]
struct IndexRow {
    n: usize,
    q: u64,
    enumerated: u64,
    formula: u64,
    zeta_expression: f64,
    rel_err: f64,
    equal: bool,
}

#[derive(Serialize)]
struct CosetRow {
    n: usize,
    q: i64,
    index: u64,
    reps: usize,
    distinct_primitive_rows: bool,
    tau_rows: bool,
}

#[derive(Serialize)]
struct TauRow {
    n: usize,
    q: i64,
    ell: i64,
    box_radius: i64,
    bijection: bool,
}

#[derive(Serialize)]
struct OrbitRow {
    instance: usize,
    n: usize,
    q: i64,
    p: String,
    orbit_size: usize,
    union_size: usize,
    equal: bool,
}

fn coset_row(n: usize, q: i64) -> Result<CosetRow> {
    let d = CongruenceSubgroupData::new(n, q)?;
    let mut rows: Vec<Vec<i64>> = d.coset_reps.iter().map(|m| m.bottom_row().iter().map(|x| x.rem_euclid(q)).collect()).collect();
    let primitive = rows.iter().all(|r| gcd(gcd_slice(r), q) == 1);
    rows.sort();
    rows.dedup();
    let mut tau_rows = true;
    for (&ell, t) in &d.tau {
        let lbar = if q == 1 { 0 } else { mod_inverse(ell, q)? };
        tau_rows &= t
            .bottom_row()
            .iter()
            .enumerate()
            .all(|(j, &x)| (x - if j == n - 1 { lbar } else { 0 }).rem_euclid(q) == 0);
    }
    Ok(CosetRow {
        n,
        q,
        index: d.index,
        reps: d.coset_reps.len(),
        distinct_primitive_rows: primitive && rows.len() as u64 == d.index,
        tau_rows,
    })
}

pub(crate) fn e4(cfg: &Config, seed: u64, out: &mut Outputs) -> Result<Findings> {
    let index_ns: Vec<usize> = cfg.list("index_n", &[2, 3, 4])?;
    let index_q_max: u64 = cfg.get("index_q_max", 12)?;
    let zeta_tol: f64 = cfg.get("zeta_rel_tol", 1e-9)?;
    let coset_ns: Vec<usize> = cfg.list("coset_n", &[2, 3])?;
    let coset_q_max: i64 = cfg.get("coset_q_max", 12)?;
    let tau_ns: Vec<usize> = cfg.list("tau_n", &[2, 3])?;
    let tau_q_max: i64 = cfg.get("tau_q_max", 6)?;
    let tau_box: i64 = cfg.get("tau_box", 6)?;
    let orbit_instances: usize = cfg.get("orbit_instances", 20)?;
    let orbit_ns: Vec<usize> = cfg.list("orbit_n", &[2, 3])?;
    let orbit_q_max: i64 = cfg.get("orbit_q_max", 6)?;
    let orbit_box: i64 = cfg.get("orbit_box", 12)?;

    let mut index_rows = Vec::new();
    for &n in &index_ns {
        for q in 1..=index_q_max {
            let enumerated = index_enumerated(n as u32, q)?;
            let formula = index_formula(n as u32, q)?;
            let z = (q as f64).powi(n as i32) * zeta_q(n as i64, q)? / zeta(n as i64)?;
            index_rows.push(IndexRow {
                n,
                q,
                enumerated,
                formula,
                zeta_expression: z,
                rel_err: (z - formula as f64).abs() / formula as f64,
                equal: enumerated == formula,
            });
        }
    }
    let mut coset_rows = Vec::new();
    for &n in &coset_ns {
        for q in 1..=coset_q_max {
            coset_rows.push(coset_row(n, q)?);
        }
    }
    let mut tau_rows = Vec::new();
    for &n in &tau_ns {
        for q in 1..=tau_q_max {
            for ell in (1..q.max(2)).filter(|&l| gcd(l, q) == 1) {
                tau_rows.push(TauRow { n, q, ell, box_radius: tau_box, bijection: tau_orbit_check(n, q, ell, tau_box)? });
            }
        }
    }
    if orbit_ns.is_empty() || orbit_q_max < 1 {
        return Err(Error::Config("orbit_n must be nonempty and orbit_q_max positive".into()));
    }
    let mut rng = stream_rng(seed, Domain::Instances, 0);
    let mut orbit_rows = Vec::new();
    for instance in 0..orbit_instances {
        let n = orbit_ns[rng.random_range(0..orbit_ns.len())];
        let q = rng.random_range(1..=orbit_q_max);
        let p = random_residue(&mut rng, n, q);
        let c = orbit_decomposition_check(&p, q, orbit_box)?;
        orbit_rows.push(OrbitRow { instance, n, q, p: join(&p), orbit_size: c.orbit_size, union_size: c.union_size, equal: c.equal });
    }
    out.rows("e4_index.csv", &index_rows)?;
    out.rows("e4_cosets.csv", &coset_rows)?;
    out.rows("e4_tau.csv", &tau_rows)?;
    out.rows("e4_orbits.csv", &orbit_rows)?;

    let mut f = Findings::default();
    f.checks.push(Check::exact("index: enumeration vs closed form", index_rows.iter().filter(|r| !r.equal).count()));
    let worst = index_rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    f.checks.push(Check::at_most("index: max relative error of q^n zeta_q(n)/zeta(n)", worst, zeta_tol));
    f.checks.push(Check::exact(
        "coset representatives: bottom rows biject onto primitive residues, tau rows correct",
        coset_rows.iter().filter(|r| !(r.distinct_primitive_rows && r.tau_rows && r.reps as u64 == r.index)).count(),
    ));
    f.checks.push(Check::exact("orbit of e_n under tau_l: bijection in the box", tau_rows.iter().filter(|r| !r.bijection).count()));
    f.checks.push(Check::exact("orbit decomposition: multiset equality", orbit_rows.iter().filter(|r| !r.equal).count()));
    Ok(f)
}

#[derive(Serialize)]
struct IdentityRow {
    n: usize,
    q: i64,
    instance: usize,
    p: String,
    inner: f64,
    outer: f64,
    lhs: u64,
    rhs: u64,
    k_max: i64,
    equal: bool,
}

pub(crate) fn e5(cfg: &Config, seed: u64, out: &mut Outputs) -> Result<Findings> {
    let ns: Vec<usize> = cfg.list("n", &[2, 3])?;
    let qs: Vec<i64> = cfg.list("q", &[1, 2, 3, 4])?;
    let instances: usize = cfg.get("instances", 100)?;
    let max_radius: f64 = cfg.get("max_radius", 6.0)?;
    let max_cond: f64 = cfg.get("max_cond", 6.0)?;
    if !(max_radius > 1.0) {
        return Err(Error::Config("max_radius must exceed 1".into()));
    }
    let mut rows = Vec::new();
    for &n in &ns {
        for &q in &qs {
            let block: Vec<IdentityRow> = (0..instances)
                .into_par_iter()
                .map(|i| {
                    let stream = ((n as u64) << 48) | ((q as u64) << 32) | i as u64;
                    let mut rng = stream_rng(seed, Domain::Instances, stream);
                    let g = random_sl_matrix(&mut rng, n, max_cond)?;
                    let p = random_residue(&mut rng, n, q);
                    let outer = rng.random_range(1.0..=max_radius);
                    let inner = if rng.random::<bool>() { 0.0 } else { rng.random_range(0.0..outer) };
                    let f = RadialIndicator::annulus(inner, outer)?;
                    let c = siegel_eisenstein_identity_check(&f, &p, q, &g)?;
                    Ok(IdentityRow { n, q, instance: i, p: join(&p), inner, outer, lhs: c.lhs, rhs: c.rhs, k_max: c.k_max, equal: c.equal })
                })
                .collect::<Result<_>>()?;
            rows.extend(block);
        }
    }
    out.rows("e5_instances.csv", &rows)?;
    let mut f = Findings::default();
    f.checks.push(Check::exact("Siegel transform equals the Eisenstein sum (exact integers)", rows.iter().filter(|r| !r.equal).count()));
    let nonzero = rows.iter().filter(|r| r.lhs > 0).count();
    f.notes.push(format!("{nonzero} of {} instances have a nonzero Siegel transform", rows.len()));
    Ok(f)
}
