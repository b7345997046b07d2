mod common;

use affine_libor::calibration::CalibratedModel;
use affine_libor::term::Curve;
use approx::assert_relative_eq;
use proptest::prelude::*;
use std::sync::OnceLock;

fn model() -> &'static CalibratedModel {
    static MODEL: OnceLock<CalibratedModel> = OnceLock::new();
    MODEL.get_or_init(|| common::desk_model(0.05))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rates_are_nonnegative_and_consistent(
        x in prop::array::uniform2(0.0..3.0f64),
        k in 1usize..8,
        frac in 0.0..1.0f64,
    ) {
        let m = model();
        let t = frac * m.grid().date(k);
        let delta = m.grid().delta(k);
        let l = m.libor(&x, t, k).unwrap();
        let lb = m.defaultable_libor(&x, t, k).unwrap();
        let h = m.default_intensity(&x, t, k).unwrap();
        let s = m.spread(&x, t, k).unwrap();
        prop_assert!(l >= 0.0 && lb >= 0.0 && h >= 0.0 && s >= 0.0);
        prop_assert!(lb >= l);
        let lhs = (1.0 + delta * l) * (1.0 + delta * h);
        prop_assert!((lhs / (1.0 + delta * lb) - 1.0).abs() <= 1e-12);
        prop_assert!((s - h * (1.0 + delta * l)).abs() <= 1e-12 * (1.0 + s));
    }

    #[test]
    fn survival_process_is_bounded_and_ordered(x in prop::array::uniform2(0.0..3.0f64), frac in 0.0..1.0f64) {
        let m = model();
        let t = frac * m.grid().date(1);
        let mut previous = 1.0;
        for k in 1..m.n() {
            let value = m.survival_process(&x, t, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&value));
            prop_assert!(value <= previous * (1.0 + 1e-14));
            previous = value;
        }
    }

    #[test]
    fn hazard_matches_survival_process(x in prop::array::uniform2(0.0..3.0f64), k in 1usize..8) {
        let m = model();
        let gamma = m.hazard_at_tenor(&x, k).unwrap();
        let survival = m.survival_process(&x, m.grid().date(k), k).unwrap();
        prop_assert!(gamma >= 0.0);
        prop_assert!(((-gamma).exp() - survival).abs() <= 1e-12);
    }

    #[test]
    fn aggregated_bonds_are_discount_factors(x in prop::array::uniform2(0.0..3.0f64), i in 1usize..8, span in 1usize..8) {
        let m = model();
        let end = (i + span).min(m.n());
        prop_assume!(end > i);
        let rf = m.aggregate_coefficients(i, end, Curve::RiskFree).unwrap().value(&x);
        let df = m.aggregate_coefficients(i, end, Curve::Defaultable).unwrap().value(&x);
        prop_assert!(rf > 0.0 && rf <= 1.0 + 1e-15);
        prop_assert!(df > 0.0 && df <= rf * (1.0 + 1e-14));
        let t = m.grid().date(i);
        let product: f64 = (i..end).map(|l| 1.0 / (1.0 + m.grid().delta(l) * m.libor(&x, t, l).unwrap())).product();
        prop_assert!((rf / product - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn measure_change_exponents(v in prop::array::uniform2(-2.0..1.0f64), k in 1usize..=8, frac in 0.0..1.0f64) {
        let m = model();
        let t = frac * m.grid().date(k);
        let e = m.forward_measure_exponents(k, &v, t).unwrap();
        let driver = m.driver();
        let horizon = m.grid().horizon();
        let base = driver.exponents(m.u(k), horizon - t).unwrap().psi;
        let shifted: Vec<f64> = base.iter().zip(&v).map(|(b, v)| b + v).collect();
        let direct = driver.exponents(&shifted, t).unwrap().phi - driver.exponents(&base, t).unwrap().phi;
        prop_assert!((e.phi - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        let zero = m.restricted_forward_exponents(k, &[0.0, 0.0], t).unwrap();
        prop_assert!(zero.phi.abs() <= 1e-14 && zero.psi.iter().all(|p| p.abs() <= 1e-14));
    }
}

#[test]
fn initial_values_reproduce_curves() {
    let m = model();
    let c = m.curves();
    let x0 = m.initial_state();
    for k in 1..m.n() {
        let delta = m.grid().delta(k);
        assert_relative_eq!(1.0 + delta * m.libor(x0, 0.0, k).unwrap(), c.risk_free(k) / c.risk_free(k + 1), max_relative = 1e-12);
        assert_relative_eq!(
            1.0 + delta * m.defaultable_libor(x0, 0.0, k).unwrap(),
            c.defaultable(k) / c.defaultable(k + 1),
            max_relative = 1e-12
        );
        let bond_route = c.defaultable(k) / c.defaultable(k + 1) * c.risk_free(k + 1) / c.risk_free(k);
        assert_relative_eq!(1.0 + delta * m.default_intensity(x0, 0.0, k).unwrap(), bond_route, max_relative = 1e-12);
        assert_relative_eq!(
            m.survival_process(x0, 0.0, k).unwrap(),
            c.defaultable(k + 1) / c.risk_free(k + 1),
            max_relative = 1e-12
        );
    }
}

#[test]
fn aggregate_coefficients_telescope() {
    let m = model();
    let driver = m.driver();
    let horizon = m.grid().horizon();
    for (i, end) in [(1, 2), (2, 5), (3, 8)] {
        let t = horizon - m.grid().date(i);
        let a = m.aggregate_coefficients(i, end, Curve::RiskFree).unwrap();
        let direct = driver.exponents(m.u(end), t).unwrap().phi - driver.exponents(m.u(i), t).unwrap().phi;
        assert_relative_eq!(a.a, direct, max_relative = 1e-12, epsilon = 1e-15);
    }
}

#[test]
fn zero_spread_model_has_no_credit_quantities() {
    let m = common::zero_spread_model();
    let x = [0.05, 0.9];
    for k in 1..m.n() {
        assert_eq!(m.defaultable_libor(&x, 0.1, k).unwrap(), m.libor(&x, 0.1, k).unwrap());
        assert_eq!(m.default_intensity(&x, 0.1, k).unwrap(), 0.0);
        assert_eq!(m.spread(&x, 0.1, k).unwrap(), 0.0);
        assert_eq!(m.survival_process(&x, 0.1, k).unwrap(), 1.0);
        assert_eq!(m.hazard_at_tenor(&x, k).unwrap(), 0.0);
    }
}
