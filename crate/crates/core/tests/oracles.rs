//! Reference values checked against independently computed oracles: closed
//! forms, dense linear algebra and the finite-difference backend.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use spexact::matrix::{discretize, eigs_in_rect, smallest_singular_value, SminOptions};
use spexact::ode::OdeForm;
use spexact::potentials::{AssumptionCase, PotentialSpec, SingularPart};
use spexact::shooting::{decay_bound, eigenfunction, find_eigenvalues, tail_mass, BoundaryCondition, EigenRecord, TruncatedProblem};
use spexact::sweep::{rate_bound_check, Classification, Trajectory};
use spexact::{Complex64, Error, Rect};
use statrs::function::erf::erfc;

const D: BoundaryCondition = BoundaryCondition::Dirichlet;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rect(a: f64, b: f64, cc: f64, d: f64) -> Rect {
    Rect::new(a, b, cc, d).unwrap()
}

fn builtin(name: &str, s: f64) -> TruncatedProblem {
    TruncatedProblem::symmetric(PotentialSpec::builtin(name).unwrap(), s, D).unwrap()
}

fn plain(q: &str) -> PotentialSpec {
    PotentialSpec::new(q, "0", SingularPart::None, 1).unwrap()
}

#[test]
fn ix3_low_eigenvalues() {
    let got = find_eigenvalues(&builtin("ix3", 10.0), &rect(0.0, 20.0, -2.0, 2.0), 1e-10).unwrap();
    for (r, want) in got.iter().zip([1.1562671, 4.1092288, 7.5622739]) {
        assert!((r.lambda - c(want, 0.0)).norm() < 1e-6, "{} vs {want}", r.lambda);
    }
}

#[test]
fn free_box_levels() {
    let p = TruncatedProblem::new(OdeForm::cartesian(plain("0")), 0.0, PI, D, D).unwrap();
    let got = find_eigenvalues(&p, &rect(0.5, 9.5, -1.0, 1.0), 1e-10).unwrap();
    assert_eq!(got.len(), 3);
    for (r, k) in got.iter().zip([1.0, 4.0, 9.0]) {
        assert!((r.lambda - c(k, 0.0)).norm() < 1e-8);
        assert_eq!(r.multiplicity, 1);
    }
}

#[test]
fn complex_harmonic_delta_matches_matrix_oracle() {
    let p = builtin("shifted_complex_harmonic_delta", 8.0);
    let window = rect(0.0, 8.0, -1.0, 5.0);
    let shot = find_eigenvalues(&p, &window, 1e-11).unwrap();
    assert!(shot.len() >= 3);
    let wide = rect(-1.0, 9.0, -2.0, 6.0);
    let (n1, n2) = (800, 1600);
    let m1 = eigs_in_rect(&discretize(&p, n1).unwrap(), &wide).unwrap();
    let m2 = eigs_in_rect(&discretize(&p, n2).unwrap(), &wide).unwrap();
    let h = 16.0 / (n2 + 1) as f64;
    for r in &shot {
        let near = |m: &[spexact::matrix::MatrixEigenvalue]| {
            m.iter().map(|e| e.lambda).min_by(|a, b| (a - r.lambda).norm().total_cmp(&(b - r.lambda).norm())).unwrap()
        };
        let (z1, z2) = (near(&m1), near(&m2));
        // O(h²) on the finer mesh; Richardson removes the leading term
        assert!((z2 - r.lambda).norm() < 5.0 * (1.0 + r.lambda.norm_sqr()) * h * h + 1e-6, "{} vs {z2}", r.lambda);
        let extrapolated = (4.0 * z2 - z1) / 3.0;
        assert!((extrapolated - r.lambda).norm() < 1e-4, "{} vs {extrapolated}", r.lambda);
    }
}

#[test]
fn harmonic_ground_state_shape() {
    let p = builtin("harmonic", 8.0);
    let phi = eigenfunction(&p, c(1.0, 0.0), 1601).unwrap();
    // fix the global phase at the peak
    let mid = phi.values[phi.values.len() / 2];
    let phase = mid / mid.norm();
    let worst = phi
        .x
        .iter()
        .zip(&phi.values)
        .map(|(x, v)| (v / phase - c(PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0)).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn sine_mode_up_to_phase() {
    let p = TruncatedProblem::new(OdeForm::cartesian(plain("0")), 0.0, PI, D, D).unwrap();
    let phi = eigenfunction(&p, c(4.0, 0.0), 801).unwrap();
    let k = phi.x.iter().position(|x| *x >= PI / 4.0).unwrap();
    let phase = phi.values[k] / phi.values[k].norm();
    for (x, v) in phi.x.iter().zip(&phi.values) {
        assert!((v / phase - c((2.0 / PI).sqrt() * (2.0 * x).sin(), 0.0)).norm() < 1e-6);
    }
}

#[test]
fn ix3_match_is_consistent() {
    let p = builtin("ix3", 10.0);
    let l1 = find_eigenvalues(&p, &rect(0.5, 2.0, -1.0, 1.0), 1e-12).unwrap()[0].lambda;
    let phi = eigenfunction(&p, l1, 2001).unwrap();
    assert!(phi.derivative_mismatch < 1e-5, "{}", phi.derivative_mismatch);
    assert!(matches!(eigenfunction(&p, c(2.0, 0.0), 101), Err(Error::NotAnEigenvalue(..))));
}

#[test]
fn gaussian_tail_against_erfc() {
    let p = builtin("harmonic", 8.0);
    // the sampled tail is a one-sided Riemann sum, O(h) off the integral
    let phi = eigenfunction(&p, c(1.0, 0.0), 32001).unwrap();
    // ∫_{|x|>3} π^{-1/2} e^{-x²} dx = erfc(3)
    let want = erfc(3.0).sqrt();
    let got = tail_mass(&phi, 3.0).unwrap();
    assert!((got - want).abs() < 1e-3 * want, "{got} vs {want}");
    assert!((tail_mass(&phi, 0.0).unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(tail_mass(&phi, 9.0).unwrap(), 0.0);
    assert!(matches!(tail_mass(&phi, -1.0), Err(Error::OutOfRange(_))));
}

#[test]
fn decay_bound_uses_the_case_exponent() {
    let h = plain("x^2");
    // inf |x²| over |x| ≥ 2 is 4
    assert!((decay_bound(&h, AssumptionCase::Sectorial, 1.0, 2.0, 6.0, 50).unwrap() - 0.5).abs() < 1e-12);
    assert!((decay_bound(&h, AssumptionCase::Accretive, 1.0, 2.0, 6.0, 50).unwrap() - 0.25).abs() < 1e-12);
}

fn trajectory(records: Vec<EigenRecord>, limit: Complex64) -> Trajectory {
    let n = records.len();
    Trajectory {
        id: 0,
        records,
        classification: Classification::Converged { limit, rate: None },
        partner: None,
        ambiguous: vec![false; n],
    }
}

#[test]
fn harmonic_rate_constant_is_finite() {
    let sizes = [4.0, 4.5, 5.0, 5.5, 6.0];
    let records: Vec<EigenRecord> = sizes
        .iter()
        .map(|&s| find_eigenvalues(&builtin("harmonic", s), &rect(0.5, 1.5, -0.5, 0.5), 1e-13).unwrap()[0].clone())
        .collect();
    // closed-form Gaussian tails beyond r = s
    let tails: Vec<f64> = sizes.iter().map(|&s| erfc(s).sqrt()).collect();
    let b = rate_bound_check(&trajectory(records, c(1.0, 0.0)), c(1.0, 0.0), &tails).unwrap();
    assert!(b.c_hat.is_finite() && b.c_hat > 0.0, "{b:?}");
    assert!(b.ratios.iter().all(|r| r.1 < 1e3), "{b:?}");
}

#[test]
fn ix3_rate_bound_is_satisfied() {
    let sizes: Vec<f64> = (0..=10).map(|k| 3.0 + 0.5 * k as f64).collect();
    let window = rect(0.5, 2.0, -1.0, 1.0);
    let records: Vec<EigenRecord> =
        sizes.iter().map(|&s| find_eigenvalues(&builtin("ix3", s), &window, 1e-12).unwrap()[0].clone()).collect();
    let reference = builtin("ix3", 10.0);
    let limit = find_eigenvalues(&reference, &window, 1e-13).unwrap()[0].lambda;
    let phi = eigenfunction(&reference, limit, 4001).unwrap();
    let tails: Vec<f64> = sizes.iter().map(|&s| tail_mass(&phi, s).unwrap()).collect();
    let b = rate_bound_check(&trajectory(records, limit), limit, &tails).unwrap();
    assert!(b.satisfied, "{b:?}");
}

#[test]
fn dense_svd_oracle_for_ix() {
    let p = builtin("ix", 5.0);
    let a = discretize(&p, 100).unwrap();
    let dense = a.to_dense();
    let opts = SminOptions { rel_tol: 1e-12, max_iter: 2000, seed: 3 };
    for z in [c(1.0, 0.0), c(3.0, 2.0), c(6.0, -1.5), c(0.0, 4.0)] {
        let m = DMatrix::from_fn(100, 100, |i, j| dense[i][j] - if i == j { z } else { c(0.0, 0.0) });
        let want = m.singular_values().min();
        let got = smallest_singular_value(&a, z, &opts).unwrap();
        assert!((got - want).abs() < 1e-6 * want.max(1e-3), "{z}: {got} vs {want}");
    }
    // every located eigenvalue makes the dense matrix singular
    for e in eigs_in_rect(&a, &rect(0.0, 10.0, -5.0, 5.0)).unwrap() {
        let m = DMatrix::from_fn(100, 100, |i, j| dense[i][j] - if i == j { e.lambda } else { c(0.0, 0.0) });
        assert!(m.singular_values().min() < 1e-8, "{}", e.lambda);
    }
}
