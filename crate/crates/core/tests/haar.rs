use approx::assert_relative_eq;
use opplab_core::congruence::CongruenceSubgroupData;
use opplab_core::eisenstein::RadialIndicator;
use opplab_core::haar::*;
use opplab_core::numtheory::zeta;
use opplab_core::rng::{stream_rng, Domain};
use std::f64::consts::PI;

fn annulus() -> RadialIndicator {
    RadialIndicator::annulus(1.0, 2.0).unwrap()
}

#[test]
fn draws_lie_in_the_fundamental_domain_with_unit_determinant() {
    let mut rng = stream_rng(1, Domain::Haar, 0);
    for _ in 0..10_000 {
        let p = sample_sl2_quotient(&mut rng);
        assert!(p.in_fundamental_domain());
        assert!((0.0..2.0 * PI).contains(&p.theta));
        assert!((p.matrix().determinant() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn calibration_statistics_within_four_sigma() {
    for c in sampler_calibration(1_000_000, 9).unwrap() {
        assert!(c.z_score().abs() <= 4.0, "{} z = {}", c.name, c.z_score());
    }
}

#[test]
fn inverse_height_target_matches_quadrature() {
    // (3/π) ∫_{-1/2}^{1/2} dx / (2 (1 - x²)) by the midpoint rule.
    let steps = 100_000;
    let h = 1.0 / steps as f64;
    let sum: f64 = (0..steps).map(|k| -0.5 + (k as f64 + 0.5) * h).map(|x| 0.5 / (1.0 - x * x)).sum();
    let oracle = 3.0 / PI * sum * h;
    let target = sampler_calibration(10_000, 1).unwrap()[3].target;
    assert!((oracle - target).abs() < 1e-9);
}

#[test]
fn coset_choice_is_uniform() {
    // Chi-square over the 24 cosets for q = 5 (23 dof, 99% point 41.64).
    let data = CongruenceSubgroupData::new(2, 5).unwrap();
    let k = data.coset_reps.len();
    assert_eq!(k, 24);
    let mut counts = vec![0u64; k];
    let mut rng = stream_rng(2, Domain::Haar, 0);
    let draws = 100_000;
    for _ in 0..draws {
        counts[sample_x2q(&mut rng, &data).0] += 1;
    }
    let e = draws as f64 / k as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    assert!(chi2 < 41.64, "chi2 = {chi2}");

    let data = CongruenceSubgroupData::new(2, 2).unwrap();
    let mut counts = [0u64; 3];
    for _ in 0..draws {
        counts[sample_x2q(&mut rng, &data).0] += 1;
    }
    let sigma = (draws as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for c in counts {
        assert!((c as f64 - draws as f64 / 3.0).abs() <= 3.0 * sigma);
    }
}

#[test]
fn x2q_matrix_is_unimodular() {
    let data = CongruenceSubgroupData::new(2, 3).unwrap();
    let mut rng = stream_rng(3, Domain::Haar, 0);
    for _ in 0..100 {
        let (i, g) = sample_x2q(&mut rng, &data);
        assert!((x2q_matrix(&data, i, &g).determinant() - 1.0).abs() < 1e-9);
    }
}

fn within(e: opplab_core::stats::Estimate, target: f64, sigmas: f64) -> bool {
    (e.mean - target).abs() <= sigmas * e.stderr
}

#[test]
fn siegel_first_moment_targets_the_volume() {
    let ball = RadialIndicator::ball(2.0).unwrap();
    assert!(within(estimate_siegel_first_moment(&ball, &[1, 1], 1, 100_000, 4).unwrap(), 4.0 * PI, 3.0));
    for (p, q) in [([1, 0], 2), ([1, 1], 3)] {
        assert!(within(estimate_siegel_first_moment(&annulus(), &p, q, 100_000, 5).unwrap(), 3.0 * PI, 3.0));
    }
}

#[test]
fn theta_first_moment_targets() {
    let e = estimate_theta_first_moment(&annulus(), 1, 100_000, 6).unwrap();
    assert!(within(e, 18.0 / PI, 3.0));
    let e = estimate_theta_first_moment(&annulus(), 2, 100_000, 6).unwrap();
    assert!(within(e, 6.0 / PI, 3.0));
    let empty = RadialIndicator::annulus(1.5, 1.5).unwrap();
    assert_eq!(estimate_theta_first_moment(&empty, 1, 10_000, 6).unwrap().mean, 0.0);
}

#[test]
fn stderr_scales_like_inverse_root_n() {
    let a = estimate_theta_first_moment(&annulus(), 1, 25_000, 7).unwrap();
    let b = estimate_theta_first_moment(&annulus(), 1, 400_000, 8).unwrap();
    let ratio = a.stderr / b.stderr;
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

/// `∫ √(R² − c²/ρ²) dρ = √(R²ρ² − c²) − c·acos(c/(Rρ))` for `ρ ≥ c/R`.
fn ball_radial(c: f64, radius: f64, a: f64, b: f64) -> f64 {
    let f = |rho: f64| (radius * radius * rho * rho - c * c).sqrt() - c * (c / (radius * rho)).acos();
    let lo = a.max(c / radius);
    if lo >= b {
        0.0
    } else {
        f(b) - f(lo)
    }
}

fn j_closed_form(f1: (f64, f64), f2: (f64, f64), c: f64) -> f64 {
    let outer = ball_radial(c, f2.1, f1.0, f1.1);
    let inner = if f2.0 > 0.0 { ball_radial(c, f2.0, f1.0, f1.1) } else { 0.0 };
    4.0 * PI * (outer - inner)
}

#[test]
fn w_term_matches_closed_form() {
    for (f1, f2) in [((1.0, 2.0), (1.0, 2.0)), ((0.0, 1.5), (0.5, 2.5)), ((0.5, 3.0), (0.0, 2.0))] {
        let a = RadialIndicator::annulus(f1.0, f1.1).unwrap();
        let b = RadialIndicator::annulus(f2.0, f2.1).unwrap();
        for c in [0.5, 1.0, 2.0, 3.0, 3.9] {
            let (v, err) = w_term_integral(&a, &b, c);
            let exact = j_closed_form(f1, f2, c);
            assert!((v - exact).abs() <= 1e-6_f64.max(10.0 * err), "c={c} {v} vs {exact}");
        }
    }
}

#[test]
fn second_moment_rhs_structure() {
    let f = annulus();
    let z2 = zeta(2).unwrap();
    let (d, _, _) = second_moment_rhs(&f, &f, 1, 1).unwrap();
    assert_relative_eq!(d, 2.0 * 3.0 * PI / z2, max_relative = 1e-12);
    let (d, _, _) = second_moment_rhs(&f, &f, 2, 1).unwrap();
    assert_relative_eq!(d, 2.0 * 3.0 * PI / z2, max_relative = 1e-12);
    let (d, _, _) = second_moment_rhs(&f, &f, 3, 1).unwrap();
    assert_relative_eq!(d, 3.0 * PI / z2, max_relative = 1e-12);
    let (d, _, _) = second_moment_rhs(&f, &f, 5, 2).unwrap();
    assert_eq!(d, 0.0);
    assert!(second_moment_rhs(&f, &f, 4, 2).is_err());
}

#[test]
fn second_moment_passes_on_small_runs() {
    let f = annulus();
    for (q, ell) in [(1, 1), (2, 1), (3, 2)] {
        let c = verify_second_moment_n2(&f, &f, q, ell, 200_000, 10, 3.0, 1e-4).unwrap();
        assert!(c.pass, "{c:?}");
        assert!(c.rhs_error < 1e-4);
    }
}

#[test]
fn y_sampler_rejects_bad_residues() {
    assert!(YSampler::new(&[2, 4], 6).is_err());
    assert!(YSampler::new(&[1, 0, 0], 2).is_err());
    let s = YSampler::new(&[0, 0], 1).unwrap();
    let mut rng = stream_rng(1, Domain::Haar, 0);
    assert!((s.sample(&mut rng).determinant() - 1.0).abs() < 1e-9);
}
