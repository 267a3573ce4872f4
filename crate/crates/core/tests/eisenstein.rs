use nalgebra::DMatrix;
use opplab_core::congruence::CongruenceSubgroupData;
use opplab_core::eisenstein::*;
use opplab_core::numtheory::gcd_slice;
use opplab_core::qforms::Shift;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn id(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

fn ball(r: f64) -> RadialIndicator {
    RadialIndicator::ball(r).unwrap()
}

/// `g ∈ SL_n(R)` with entries in `[-1, 1]` and bounded condition number.
fn random_g(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let mut g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0f64..=1.0));
        let det = g.determinant();
        if det.abs() < 0.05 {
            continue;
        }
        if det < 0.0 {
            g.row_mut(0).neg_mut();
        }
        g /= det.abs().powf(1.0 / n as f64);
        let sv = g.singular_values();
        if sv.max() / sv.min() < 5.0 {
            return g;
        }
    }
}

/// Counts `u ∈ Zⁿ` in a box with `(u + α) g ≠ 0` inside `f`.
fn naive_siegel(f: &RadialIndicator, alpha: &[f64], g: &DMatrix<f64>, box_radius: i64) -> u64 {
    let n = alpha.len();
    let mut u = vec![-box_radius; n];
    let mut count = 0;
    loop {
        let x: Vec<f64> = (0..n).map(|j| (0..n).map(|i| (u[i] as f64 + alpha[i]) * g[(i, j)]).sum()).collect();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 > 1e-18 && f.contains_norm_sq(r2) {
            count += 1;
        }
        let mut k = 0;
        while k < n && u[k] == box_radius {
            u[k] = -box_radius;
            k += 1;
        }
        if k == n {
            return count;
        }
        u[k] += 1;
    }
}

#[test]
fn siegel_transform_examples() {
    assert_eq!(siegel_transform(&ball(1.4), &Shift::zero(2), &id(2)).unwrap(), 4);
    let half = Shift::rational(vec![1, 1], 2).unwrap();
    assert_eq!(siegel_transform(&ball(1.4), &half, &id(2)).unwrap(), 4);
    assert_eq!(siegel_transform(&ball(0.4), &Shift::zero(2), &id(2)).unwrap(), 0);
}

#[test]
fn incomplete_eisenstein_examples() {
    assert_eq!(incomplete_eisenstein(&ball(1.5), 1, &id(2)).unwrap(), 8);
    assert_eq!(incomplete_eisenstein(&ball(1.5), 2, &id(2)).unwrap(), 2);
    for q in 2..6 {
        assert_eq!(incomplete_eisenstein(&ball(0.9), q, &id(2)).unwrap(), 0);
    }
}

#[test]
fn identity_examples() {
    let c = siegel_eisenstein_identity_check(&ball(2.5), &[0, 0, 1], 1, &id(3)).unwrap();
    assert!(c.equal);
    // Nonzero integer points of norm at most 2.5.
    assert_eq!(c.lhs, naive_siegel(&ball(2.5), &[0.0; 3], &id(3), 3));
    let c = siegel_eisenstein_identity_check(&ball(3.0), &[1, 1, 1], 2, &id(3)).unwrap();
    assert!(c.equal);
    assert_eq!(c.lhs, naive_siegel(&ball(3.0), &[0.5; 3], &id(3), 4));
}

#[test]
fn identity_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..100 {
        let g = random_g(&mut rng, 3);
        let p: Vec<i64> = loop {
            let p: Vec<i64> = (0..3).map(|_| rng.random_range(0..3)).collect();
            if gcd_slice(&[gcd_slice(&p), 3]) == 1 {
                break p;
            }
        };
        let f = RadialIndicator::annulus(rng.random_range(0.0..1.0), rng.random_range(1.0..3.0)).unwrap();
        let c = siegel_eisenstein_identity_check(&f, &p, 3, &g).unwrap();
        assert!(c.equal, "trial {trial}: {c:?}");
    }
}

#[test]
fn siegel_transform_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let g = random_g(&mut rng, 2);
        let f = RadialIndicator::annulus(0.5, 3.0).unwrap();
        let shift = Shift::rational(vec![1, 2], 3).unwrap();
        let alpha = shift.to_f64();
        // Condition number below 5 keeps every hit inside |u| <= 20.
        assert_eq!(siegel_transform(&f, &shift, &g).unwrap(), naive_siegel(&f, &alpha, &g, 20));
    }
}

struct Smooth;

impl TestFunction for Smooth {
    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (1.0 - r2 / 4.0).max(0.0)
    }
    fn support_radius(&self) -> f64 {
        2.0
    }
}

#[test]
fn generic_siegel_transform_of_a_smooth_bump() {
    // Z²: points (±1,0),(0,±1) give 3/4 each, (±1,±1) give 1/2 each.
    let v = siegel_transform_generic(&Smooth, &[0.0, 0.0], &id(2)).unwrap();
    assert!((v - 5.0).abs() < 1e-12);
}

#[test]
fn theta_is_invariant_under_gamma1() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for q in [2, 3, 5] {
        let d = CongruenceSubgroupData::new(2, q).unwrap();
        let g = random_g(&mut rng, 2);
        let f = ball(3.0);
        let base = incomplete_eisenstein(&f, q, &g).unwrap();
        // u_k = [[1, k], [0, 1]] and [[1, 0], [q, 1]] generate elements of Γ₁(q).
        for k in -3..=3 {
            for m in [
                opplab_core::UnimodularMatrix::new(2, vec![1, k, 0, 1]).unwrap(),
                opplab_core::UnimodularMatrix::new(2, vec![1, 0, q * k, 1]).unwrap(),
            ] {
                assert!(d.contains(&m));
                assert_eq!(incomplete_eisenstein_at(&f, q, &m, &g).unwrap(), base);
            }
        }
    }
}

#[test]
fn radial_indicator_volumes() {
    let f = RadialIndicator::annulus(1.0, 2.0).unwrap();
    assert!((f.volume(2) - 3.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!((f.overlap_volume(&ball(1.5), 2) - 1.25 * std::f64::consts::PI).abs() < 1e-12);
    assert!(RadialIndicator::annulus(2.0, 1.0).is_err());
}
