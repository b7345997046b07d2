mod common;

use affine_libor::calibration::CalibratedModel;
use affine_libor::pricing::{
    bond_call_price, bond_option_forward, bond_option_price, cds_spread, cds_spread_model_independent,
    vulnerable_option_price, DampingVector,
};
use affine_libor::quadrature::QuadratureConfig;
use affine_libor::special::complex_log_gamma;
use affine_libor::ModelError;
use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn model() -> &'static CalibratedModel {
    static MODEL: OnceLock<CalibratedModel> = OnceLock::new();
    MODEL.get_or_init(|| common::desk_model(0.05))
}

#[test]
fn cds_routes_agree_and_are_monotone_in_recovery() {
    let m = model();
    let mut previous = f64::INFINITY;
    for pi in [0.0, 0.2, 0.4, 0.6] {
        for mat in 1..=m.n() {
            let closed = cds_spread(m, mat, pi, 0.05).unwrap();
            let independent = cds_spread_model_independent(m.curves(), mat, pi, 0.05).unwrap();
            assert_relative_eq!(closed, independent, max_relative = 1e-10);
        }
        let s = cds_spread(m, 6, pi, 0.0).unwrap();
        assert!(s >= 0.0 && s < previous);
        previous = s;
    }
}

#[test]
fn vulnerable_option_limits_and_monotonicity() {
    let m = model();
    let c = m.curves();
    let quad = QuadratureConfig::default_1d();
    let r = DampingVector::default_1d();
    let (k, mat) = (2, 6);
    let riskless = bond_call_price(m, k, mat, 0.96, &r, &quad).unwrap();
    let q_one = vulnerable_option_price(m, k, mat, 0.96, 1.0, &r, &quad).unwrap();
    assert_relative_eq!(riskless.value, q_one.value, max_relative = 1e-8);
    let forward = vulnerable_option_price(m, k, mat, 0.0, 1.0, &r, &quad).unwrap();
    assert_relative_eq!(forward.value, c.risk_free(mat), max_relative = 1e-12);
    // a tiny strike is always exercised, so the Fourier route must return the forward minus the strike
    let strike = 1e-6;
    let tiny = vulnerable_option_price(m, k, mat, strike, 1.0, &r, &quad).unwrap();
    assert_relative_eq!(tiny.value, c.risk_free(mat) - strike * c.risk_free(k), max_relative = 1e-6);

    let mut previous = f64::INFINITY;
    for strike in [0.9, 0.94, 0.96, 0.98, 1.0] {
        let value = vulnerable_option_price(m, k, mat, strike, 0.3, &r, &quad).unwrap().value;
        assert!(value <= previous && value >= 0.0, "K = {strike}: {value} after {previous}");
        previous = value;
    }
    let mut previous = 0.0;
    for q in [0.0, 0.25, 0.5, 1.0] {
        let value = vulnerable_option_price(m, k, mat, 0.95, q, &r, &quad).unwrap().value;
        assert!(value >= previous);
        previous = value;
    }
    let other = vulnerable_option_price(m, k, mat, 0.95, 0.3, &DampingVector::one(-1.0), &quad).unwrap();
    let default = vulnerable_option_price(m, k, mat, 0.95, 0.3, &r, &quad).unwrap();
    assert_relative_eq!(other.value, default.value, max_relative = 1e-6);
    assert!(matches!(
        vulnerable_option_price(m, k, mat, 0.95, 0.3, &DampingVector::one(0.5), &quad),
        Err(ModelError::Damping { .. })
    ));
}

#[test]
fn bond_option_limits_monotonicity_and_damping_invariance() {
    let m = model();
    let c = m.curves();
    let quad = QuadratureConfig::default_2d();
    let (i, mat, pi) = (2, 6, 0.4);
    let collapse = pi * c.defaultable(i) * c.risk_free(mat) / c.risk_free(i) + (1.0 - pi) * c.defaultable(mat);
    assert_relative_eq!(bond_option_forward(m, i, mat, pi).unwrap(), collapse, max_relative = 1e-12);
    let strike = 1e-6;
    let tiny = bond_option_price(m, i, mat, strike, pi, &DampingVector::default_2d(), &quad).unwrap();
    assert_relative_eq!(tiny.value, collapse - strike * c.defaultable(i), max_relative = 1e-6);

    let a = bond_option_price(m, i, mat, 0.95, pi, &DampingVector::default_2d(), &quad).unwrap();
    let b = bond_option_price(m, i, mat, 0.95, pi, &DampingVector::two(-1.0, -2.0), &quad).unwrap();
    assert_relative_eq!(a.value, b.value, max_relative = 1e-6);

    let mut previous = f64::INFINITY;
    for strike in [0.85, 0.9, 0.95, 1.0] {
        let value = bond_option_price(m, i, mat, strike, pi, &DampingVector::default_2d(), &quad).unwrap().value;
        assert!(value <= previous && value >= 0.0);
        previous = value;
    }
    match bond_option_price(m, i, mat, 0.95, pi, &DampingVector::two(2.0, -0.5), &quad) {
        Err(ModelError::Damping { suggested, .. }) => assert_eq!(suggested.len(), 2),
        other => panic!("expected a damping error, got {other:?}"),
    }
}

#[test]
fn node_doubling_changes_prices_by_less_than_1e_8() {
    let m = model();
    let quad_1d = QuadratureConfig::default_1d();
    let a = vulnerable_option_price(m, 2, 6, 0.95, 0.3, &DampingVector::default_1d(), &quad_1d).unwrap();
    let b = vulnerable_option_price(m, 2, 6, 0.95, 0.3, &DampingVector::default_1d(), &quad_1d.refined()).unwrap();
    assert!((a.value - b.value).abs() < 1e-8);
    let quad_2d = QuadratureConfig::default_2d();
    let a = bond_option_price(m, 2, 6, 0.95, 0.4, &DampingVector::default_2d(), &quad_2d).unwrap();
    let b = bond_option_price(m, 2, 6, 0.95, 0.4, &DampingVector::default_2d(), &quad_2d.refined()).unwrap();
    assert!((a.value - b.value).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn log_gamma_recurrence(re in -20.0..20.0f64, im in -200.0..200.0f64) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() > 1e-3 && (z + 1.0).norm() > 1e-3);
        prop_assume!(!(im.abs() < 1e-9 && re <= 0.0 && re.fract() == 0.0));
        let lhs = complex_log_gamma(z + 1.0).unwrap();
        let rhs = complex_log_gamma(z).unwrap() + z.ln();
        let diff = lhs - rhs;
        let turns = (diff.im / (2.0 * std::f64::consts::PI)).round();
        let residual = Complex64::new(diff.re, diff.im - turns * 2.0 * std::f64::consts::PI);
        prop_assert!(residual.norm() <= 1e-12 * (1.0 + lhs.norm()), "z = {}: residual {}", z, residual);
    }
}

#[test]
fn log_gamma_known_values() {
    assert!(complex_log_gamma(Complex64::new(1.0, 0.0)).unwrap().norm() < 1e-15);
    assert_relative_eq!(
        complex_log_gamma(Complex64::new(0.5, 0.0)).unwrap().re,
        0.5 * std::f64::consts::PI.ln(),
        max_relative = 1e-14
    );
    assert!(matches!(complex_log_gamma(Complex64::new(-3.0, 0.0)), Err(ModelError::GammaPole(_))));
}
