use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use opplab_core::lattice::*;
use opplab_core::qforms::{evaluate, random_form, InhomogeneousForm, QuadraticForm, Shift};
use opplab_core::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn q0() -> QuadraticForm {
    QuadraticForm::diagonal(2, 1).unwrap()
}

fn interval(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

/// Brute force over the box: closed ball, open interval.
fn naive_count(form: &InhomogeneousForm, i: Interval, t: f64) -> u64 {
    let r = t.floor() as i64;
    let n = form.n();
    let mut v = vec![-r; n];
    let mut count = 0;
    loop {
        let norm2: i64 = v.iter().map(|x| x * x).sum();
        if (norm2 as f64) <= t * t && i.contains(evaluate(form, &v).unwrap()) {
            count += 1;
        }
        let mut k = 0;
        while k < n && v[k] == r {
            v[k] = -r;
            k += 1;
        }
        if k == n {
            return count;
        }
        v[k] += 1;
    }
}

#[test]
fn isotropic_count_example() {
    let f = InhomogeneousForm::homogeneous(q0());
    let i = interval(-0.5, 0.5);
    assert_eq!(count_n(&f, i, 3.0).unwrap().count, 17);
    assert_eq!(naive_count(&f, i, 3.0), 17);
    assert!(count_n(&f, i, 5.0).unwrap().count >= 17);
}

#[test]
fn unreachable_target_counts_zero() {
    let f = InhomogeneousForm::homogeneous(q0());
    assert_eq!(count_n(&f, interval(1e6, 1e6 + 1.0), 10.0).unwrap().count, 0);
}

#[test]
fn congruence_count_with_trivial_modulus() {
    assert_eq!(count_congruence(&q0(), interval(-0.5, 0.5), 3.5, &[0, 0, 0], 1).unwrap().count, 17);
}

#[test]
fn partition_identity_on_random_forms() {
    for seed in 0..3 {
        let form = random_form(3, 2, 1, seed).unwrap();
        let i = interval(-2.0, 3.0);
        let classes = count_all_classes(&form, i, 10.0, 2).unwrap();
        assert_eq!(classes.len(), 8);
        let total: u64 = classes.iter().sum();
        assert_eq!(total, count_congruence(&form, i, 10.0, &[0, 0, 0], 1).unwrap().count);
        for (idx, &c) in classes.iter().enumerate() {
            let p = class_of_index(idx, 3, 2);
            assert_eq!(c, count_congruence(&form, i, 10.0, &p, 2).unwrap().count);
        }
    }
}

#[test]
fn negation_symmetry_between_classes() {
    let form = random_form(3, 2, 1, 4).unwrap();
    let i = interval(-1.0, 1.0);
    for p in [[1, 0, 2], [1, 1, 1], [2, 2, 0]] {
        let neg: Vec<i64> = p.iter().map(|x| (3 - x) % 3).collect();
        assert_eq!(
            count_congruence(&form, i, 12.0, &p, 3).unwrap().count,
            count_congruence(&form, i, 12.0, &neg, 3).unwrap().count
        );
    }
}

#[test]
fn rescaling_bracket_holds() {
    for seed in 0..3 {
        let form = random_form(3, 2, 1, seed).unwrap();
        for q in [2, 3, 5] {
            for p in [[1, 0, 0], [1, 1, 0], [0, 0, 1], [q - 1, 2 % q, 1]] {
                let b = rescaling_bracket(&form, interval(-5.0, 5.0), 20.0, &p, q).unwrap();
                assert!(b.holds(), "q={q} p={p:?} {b:?}");
            }
        }
    }
}

#[test]
fn shifted_counts_match_naive_enumeration() {
    let form = random_form(3, 2, 1, 11).unwrap();
    for shift in [Shift::rational(vec![1, 0, 0], 2).unwrap(), Shift::Real(vec![0.31, -0.7, 0.05])] {
        let f = InhomogeneousForm::new(form.clone(), shift).unwrap();
        for t in [4.0, 7.5, 9.0] {
            let i = interval(-1.5, 2.0);
            assert_eq!(count_n(&f, i, t).unwrap().count, naive_count(&f, i, t));
        }
    }
}

#[test]
fn series_is_monotone_for_a_fixed_interval() {
    let f = InhomogeneousForm::new(random_form(3, 2, 1, 2).unwrap(), Shift::rational(vec![1, 0, 0], 2).unwrap()).unwrap();
    let target = ShrinkingTarget::new(0.0, 2.0, 0.0).unwrap();
    let records = count_series(&f, &target, &[5.0, 10.0, 20.0, 30.0], DEFAULT_BUDGET).unwrap();
    assert!(records.windows(2).all(|w| w[0].count <= w[1].count));
    for r in &records {
        assert_eq!(r.count, count_n(&f, target.interval(r.t), r.t).unwrap().count);
    }
}

#[test]
fn shrinking_target_width() {
    let target = ShrinkingTarget::new(0.5, 2.0, 0.3).unwrap();
    let i = target.interval(10.0);
    assert_abs_diff_eq!(i.width(), 2.0 * 10f64.powf(-0.3), epsilon = 1e-14);
    assert_abs_diff_eq!(0.5 * (i.lo + i.hi), 0.5, epsilon = 1e-14);
}

#[test]
fn budget_is_enforced() {
    let f = InhomogeneousForm::homogeneous(q0());
    let err = count_n_with_budget(&f, interval(-1.0, 1.0), 100.0, 1e3).unwrap_err();
    assert!(matches!(err, Error::BudgetExceeded { .. }));
}

#[test]
fn discrepancy_examples() {
    let ball = Region::Ball { radius: 1.4 };
    let z2 = AffineLattice::new(&Shift::zero(2), DMatrix::identity(2, 2)).unwrap();
    assert_abs_diff_eq!(discrepancy(&z2, &ball).unwrap(), (5.0 - 1.96 * PI).abs(), epsilon = 1e-12);
    let half = AffineLattice::new(&Shift::rational(vec![1, 1], 2).unwrap(), DMatrix::identity(2, 2)).unwrap();
    assert_abs_diff_eq!(discrepancy(&half, &ball).unwrap(), (4.0 - 1.96 * PI).abs(), epsilon = 1e-12);
    let degenerate = Region::Annulus { inner: 1.0, outer: 1.0 };
    assert_eq!(discrepancy(&z2, &degenerate).unwrap(), lattice_count(&z2, &degenerate).unwrap() as f64);
    assert_eq!(lattice_count(&z2, &degenerate).unwrap(), 4);
}

fn records(points: &[(f64, f64)]) -> Vec<CountRecord> {
    points.iter().map(|&(t, c)| CountRecord { t, count: c as u64, volume: None, congruence_class: None }).collect()
}

#[test]
fn growth_fit_on_power_laws() {
    let cubic = records(&[10.0, 20.0, 40.0, 80.0].map(|t| (t, t * t * t)));
    let fit = fit_growth_exponent(&cubic).unwrap();
    assert_abs_diff_eq!(fit.slope, 3.0, epsilon = 1e-9);
    // Rounded counts: the slope is exact only up to the rounding.
    let ts = [100.0, 1e3, 1e4, 1e5, 1e6];
    let fit = fit_growth_exponent(&records(&ts.map(|t| (t, (5.0 * f64::powf(t, 1.3)).round())))).unwrap();
    assert_abs_diff_eq!(fit.slope, 1.3, epsilon = 1e-4);
    assert_abs_diff_eq!(fit.intercept, 5f64.ln(), epsilon = 1e-3);
}

#[test]
fn growth_fit_drops_zero_counts() {
    let fit = fit_growth_exponent(&records(&[(1.0, 0.0), (2.0, 4.0), (4.0, 16.0), (8.0, 64.0), (16.0, 256.0)])).unwrap();
    assert_eq!(fit.excluded, vec![0]);
    assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
    assert!(fit_growth_exponent(&records(&[(1.0, 0.0), (2.0, 0.0)])).is_err());
}

#[test]
fn count_csv_has_header_and_rows() {
    let f = InhomogeneousForm::homogeneous(q0());
    let r = vec![count_n(&f, interval(-0.5, 0.5), 3.0).unwrap()];
    let mut buf = Vec::new();
    write_count_csv(&mut buf, &r, 7, "q0").unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("count"));
    assert!(lines.next().unwrap().contains("17"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn enumeration_matches_naive_box_scan(seed in 0u64..1000, t in 1.0f64..7.0, lo in -4.0f64..2.0, w in 0.1f64..4.0) {
        let base = random_form(3, 1, 2, seed).unwrap();
        let f = InhomogeneousForm::new(base, Shift::rational(vec![1, 2, 0], 3).unwrap()).unwrap();
        let i = interval(lo, lo + w);
        prop_assert_eq!(count_n(&f, i, t).unwrap().count, naive_count(&f, i, t));
    }
}
