#![allow(dead_code)]

use affine_libor::calibration::{calibrate, CalibratedModel, CalibrationSettings, InitialCurves, TenorGrid};
use affine_libor::{AffineComponentSpec, ProductAffineSpec};

/// Quarterly curves from per-period LIBOR rates and relative spreads.
pub fn curves_from_rates(libor: &[f64], intensity: &[f64], delta: f64) -> InitialCurves {
    let mut rf = Vec::with_capacity(libor.len());
    let mut df = Vec::with_capacity(libor.len());
    let (mut b, mut bb) = (1.0, 1.0);
    for (l, h) in libor.iter().zip(intensity) {
        b /= 1.0 + delta * l;
        bb /= (1.0 + delta * l) * (1.0 + delta * h);
        rf.push(b);
        df.push(bb);
    }
    InitialCurves::new(rf, df).unwrap()
}

/// One risk-free CIR-with-jumps factor and one spread CIR factor.
pub fn two_factor_driver(spread_eta: f64) -> ProductAffineSpec {
    ProductAffineSpec::new(
        vec![
            AffineComponentSpec::new(0.5, 0.04, 0.1, 0.3, 0.01, 0.04).unwrap(),
            AffineComponentSpec::new(0.3, 1.0, spread_eta, 0.0, 0.0, 1.0).unwrap(),
        ],
        1,
    )
    .unwrap()
}

/// Eight quarterly periods with upward-sloping rates and spreads.
pub fn desk_model(spread_eta: f64) -> CalibratedModel {
    let n = 8;
    let libor: Vec<f64> = (0..n).map(|k| 0.03 + 0.002 * k as f64).collect();
    let intensity: Vec<f64> = (0..n).map(|k| 0.01 + 0.0005 * k as f64).collect();
    let curves = curves_from_rates(&libor, &intensity, 0.25);
    let grid = TenorGrid::uniform(n, 0.25).unwrap();
    calibrate(&two_factor_driver(spread_eta), &grid, &curves, &CalibrationSettings::default()).unwrap()
}

pub fn zero_spread_model() -> CalibratedModel {
    let n = 6;
    let libor = vec![0.03; n];
    let curves = curves_from_rates(&libor, &vec![0.0; n], 0.25);
    let grid = TenorGrid::uniform(n, 0.25).unwrap();
    calibrate(&two_factor_driver(0.02), &grid, &curves, &CalibrationSettings::default()).unwrap()
}
