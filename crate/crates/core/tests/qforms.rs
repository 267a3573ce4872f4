use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use opplab_core::qforms::*;

fn q0() -> QuadraticForm {
    QuadraticForm::diagonal(2, 1).unwrap()
}

fn shifted(p: Vec<i64>, q: i64) -> InhomogeneousForm {
    InhomogeneousForm::new(q0(), Shift::rational(p, q).unwrap()).unwrap()
}

#[test]
fn evaluation_examples() {
    assert_eq!(evaluate(&InhomogeneousForm::homogeneous(q0()), &[1, 0, 1]).unwrap(), 0.0);
    assert_abs_diff_eq!(evaluate(&shifted(vec![1, 0, 0], 2), &[0, 0, 0]).unwrap(), 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(evaluate(&shifted(vec![1, 1, 1], 2), &[1, 1, 1]).unwrap(), 2.25, epsilon = 1e-14);
}

#[test]
fn exact_evaluation_agrees_with_float() {
    let f = shifted(vec![1, 2, 0], 3);
    let (num, den) = evaluate_exact(&f, &[1, 0, 0]).unwrap();
    assert_eq!(num * 9, 20 * den);
    assert_abs_diff_eq!(evaluate(&f, &[1, 0, 0]).unwrap(), 20.0 / 9.0, epsilon = 1e-14);
}

#[test]
fn rescaling_reproduces_the_shifted_form() {
    let f = shifted(vec![1, 2, 0], 3);
    let r = rational_shift_rescale(&f).unwrap();
    assert_abs_diff_eq!(r.eval(&[1, 0, 0]), 20.0 / 9.0, epsilon = 1e-14);
    let half = shifted(vec![1, 0, 0], 2);
    let r = rational_shift_rescale(&half).unwrap();
    assert_abs_diff_eq!(r.eval(&[0, 0, 0]), 0.25, epsilon = 1e-15);
    let zero = InhomogeneousForm::homogeneous(q0());
    let r = rational_shift_rescale(&zero).unwrap();
    assert_eq!(r.eval(&[2, -1, 3]), q0().value(&[2.0, -1.0, 3.0]));
}

#[test]
fn rescaling_rejects_real_shifts() {
    let f = InhomogeneousForm::new(q0(), Shift::Real(vec![0.1, 0.2, 0.3])).unwrap();
    assert!(rational_shift_rescale(&f).is_err());
}

#[test]
fn random_forms_are_reproducible_and_normalised() {
    for (n, p1, p2) in [(3, 2, 1), (3, 1, 2), (4, 2, 2), (5, 3, 2)] {
        let a = random_form(n, p1, p2, 17).unwrap();
        let b = random_form(n, p1, p2, 17).unwrap();
        assert_eq!(a.gram(), b.gram());
        assert_abs_diff_eq!(a.generator().determinant().abs(), 1.0, epsilon = 1e-10);
        assert_eq!(a.eigen_signature(), (p1, p2));
        assert_ne!(a.gram(), random_form(n, p1, p2, 18).unwrap().gram());
    }
}

#[test]
fn value_paths_agree() {
    let f = random_form(4, 2, 2, 5).unwrap();
    let x = [0.3, -1.2, 2.5, 0.7];
    assert_abs_diff_eq!(f.value(&x), f.value_via_generator(&x), epsilon = 1e-12);
}

#[test]
fn json_round_trip_is_lossless() {
    let f = random_form(3, 2, 1, 99).unwrap();
    let back = QuadraticForm::from_json(&f.to_json()).unwrap();
    assert_eq!(back.gram(), f.gram());
    assert_eq!(back.signature(), f.signature());
}

#[test]
fn invalid_forms_are_rejected() {
    assert!(QuadraticForm::diagonal(0, 0).is_err());
    let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
    assert!(QuadraticForm::new(1, 1, singular, 1.0).is_err());
    assert!(Shift::rational(vec![1], 0).is_err());
    assert!(InhomogeneousForm::new(q0(), Shift::zero(2)).is_err());
}

#[test]
fn integral_gram_for_the_diagonal_form() {
    assert_eq!(q0().integral_gram(), Some(vec![1, 0, 0, 0, 1, 0, 0, 0, -1]));
}
