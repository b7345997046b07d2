//! Closed-form and Fourier pricers: CDS spreads, options on defaultable
//! bonds and vulnerable options.
//!
//! Fourier prices use the convention
//! `E[f(Y)] = (2π)^{-n} ∫ f̂(iR - w) M_Y(R + iw) dw`, where `f̂` is the
//! Fourier transform of the payoff and `M_Y` the moment generating function
//! of the log-payoff variables under the relevant measure.

use num_complex::Complex64;

use crate::affine::AffineComponentSpec;
use crate::calibration::{CalibratedModel, InitialCurves};
use crate::error::{check_index, ModelError, Result};
use crate::quadrature::{
    fourier_quadrature_1d_hermitian, fourier_quadrature_2d_hermitian, separable_quadrature_2d_hermitian,
    QuadratureConfig, QuadratureResult,
};
use crate::simulation::{check_recovery, check_strike, PriceEstimate, PricingMethod};
use crate::special::complex_log_gamma;
use crate::term::{Curve, RateCoefficients};

/// Real damping parameters of the Fourier contour.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingVector {
    pub values: Vec<f64>,
}

impl DampingVector {
    pub fn one(r: f64) -> Self {
        Self { values: vec![r] }
    }

    pub fn two(r1: f64, r2: f64) -> Self {
        Self { values: vec![r1, r2] }
    }

    pub fn default_1d() -> Self {
        Self::one(1.5)
    }

    pub fn default_2d() -> Self {
        Self::two(-1.5, -1.5)
    }
}

fn loss_given_default(pi: f64, c: f64) -> Result<f64> {
    check_recovery(pi, c)?;
    Ok(1.0 - pi * (1.0 + c))
}

/// Model-independent CDS spread from the initial curves alone.
pub fn cds_spread_model_independent(curves: &InitialCurves, m: usize, pi: f64, c: f64) -> Result<f64> {
    check_index(m, 1, curves.n())?;
    let lgd = loss_given_default(pi, c)?;
    let mut protection = 0.0;
    let mut fee = 0.0;
    for k in 1..=m {
        let (b_prev, b) = (curves.risk_free(k - 1), curves.risk_free(k));
        let (bb_prev, bb) = (curves.defaultable(k - 1), curves.defaultable(k));
        protection += (bb_prev * b - bb * b_prev) / b_prev;
        fee += bb_prev;
    }
    Ok(lgd * protection / fee)
}

/// Closed-form CDS spread from the restricted defaultable forward measures.
pub fn cds_spread(model: &CalibratedModel, m: usize, pi: f64, c: f64) -> Result<f64> {
    check_index(m, 1, model.n())?;
    let lgd = loss_given_default(pi, c)?;
    let curves = model.curves();
    let x0 = model.initial_state();
    let mut protection = 0.0;
    let mut fee = 0.0;
    for k in 1..=m {
        let t = model.grid().date(k - 1);
        // log(1 + δ_{k-1} H(T_{k-1},T_{k-1})) = A_k + <B_k, X_{T_{k-1}}>
        let mut coeffs = model.exponent_difference(model.u(k), model.v(k), t)?;
        if k > 1 {
            let prev = model.exponent_difference(model.v(k - 1), model.u(k - 1), t)?;
            coeffs.a += prev.a;
            for (b, p) in coeffs.b.iter_mut().zip(&prev.b) {
                *b += p;
            }
        }
        let e = model.restricted_forward_exponents(k, &coeffs.b, t)?;
        let expectation = coeffs.a + e.phi + crate::affine::dot(&e.psi, x0);
        protection += curves.defaultable(k) * expectation.exp_m1();
        fee += curves.defaultable(k - 1);
    }
    Ok(lgd * protection / fee)
}

/// Moment generating function of `<a, X_t>` under a measure whose density
/// with respect to `P_N` is `M^p_t / M^p_0`. The logarithm splits into a sum
/// of per-component terms, each vanishing at a zero argument.
struct ShiftedMgf<'a> {
    components: &'a [AffineComponentSpec],
    t: f64,
    base: Vec<f64>,
    base_phi: Vec<f64>,
    base_psi: Vec<f64>,
    x0: &'a [f64],
}

impl<'a> ShiftedMgf<'a> {
    fn new(model: &'a CalibratedModel, param: &[f64], t: f64) -> Result<Self> {
        let driver = model.driver();
        let base = driver.exponents(param, model.grid().horizon() - t)?.psi;
        let (base_phi, base_psi) = driver
            .components()
            .iter()
            .zip(&base)
            .map(|(c, b)| c.exponents(*b, t))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(Self {
            components: driver.components(),
            t,
            base,
            base_phi,
            base_psi,
            x0: model.initial_state(),
        })
    }

    /// Checks that the real argument `a` keeps the moment finite.
    fn check_real(&self, a: &[f64]) -> Result<()> {
        for (j, c) in self.components.iter().enumerate() {
            c.exponents(self.base[j] + a[j], self.t).map_err(|e| e.with_component(j))?;
        }
        Ok(())
    }

    fn log_mgf_real(&self, a: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (j, c) in self.components.iter().enumerate() {
            if a[j] != 0.0 {
                let (phi, psi) = c.exponents(self.base[j] + a[j], self.t)?;
                total += phi - self.base_phi[j] + (psi - self.base_psi[j]) * self.x0[j];
            }
        }
        Ok(total)
    }

    /// Contribution of component `j` to `log E[exp(<u, X_t>)]` at `u_j = u`.
    fn component_log_mgf(&self, j: usize, u: Complex64) -> Complex64 {
        if u == Complex64::new(0.0, 0.0) {
            return u;
        }
        match self.components[j].exponents_complex(u + self.base[j], self.t) {
            Ok((phi, psi)) => phi - self.base_phi[j] + (psi - self.base_psi[j]) * self.x0[j],
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// `log E[exp(<u, X_t>)]` for complex `u_j = arg(j)`.
    fn log_mgf(&self, arg: impl Fn(usize) -> Complex64) -> Complex64 {
        (0..self.components.len()).map(|j| self.component_log_mgf(j, arg(j))).sum()
    }
}

fn log_gamma_or_nan(z: Complex64) -> Complex64 {
    complex_log_gamma(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

fn damping_error(reason: String, suggested: Vec<f64>) -> ModelError {
    ModelError::Damping { reason, suggested }
}

/// `E[(e^Z - K)^+]` for `Z = A + <B, X_t>` under the measure of `mgf`.
fn expected_call_1d(
    mgf: &ShiftedMgf<'_>,
    coeffs: &RateCoefficients,
    strike: f64,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let forward = (coeffs.a + mgf.log_mgf_real(&coeffs.b)?).exp();
    if strike == 0.0 {
        return Ok((forward, 0.0));
    }
    let candidates = [1.5, 1.25, 1.1, 2.0, 3.0, -0.5, -1.0, -2.0];
    let feasible = |r: f64| {
        let a: Vec<f64> = coeffs.b.iter().map(|b| r * b).collect();
        mgf.check_real(&a).is_ok()
    };
    let suggestion = || candidates.iter().copied().filter(|c| feasible(*c)).take(1).collect::<Vec<_>>();
    if (0.0..=1.0).contains(&r) || !r.is_finite() {
        return Err(damping_error(format!("R = {r} must satisfy R > 1 or R < 0"), suggestion()));
    }
    if !feasible(r) {
        return Err(damping_error(
            format!("moment generating function is infinite at R = {r}"),
            suggestion(),
        ));
    }
    let log_k = strike.ln();
    let integrand = |v: f64| {
        let z = Complex64::new(r, v);
        let log_m = z * coeffs.a + mgf.log_mgf(|j| z * coeffs.b[j]);
        // ĝ(iR - v) = K^{1+iz}/(iz(1+iz)) with iz = -R - iv
        let iz = -z;
        let g = ((iz + 1.0) * log_k).exp() / (iz * (iz + 1.0));
        g * log_m.exp()
    };
    let QuadratureResult { value, error, .. } = fourier_quadrature_1d_hermitian(integrand, quad)?;
    if r > 1.0 {
        Ok((value, error))
    } else {
        Ok((forward - strike + value, error))
    }
}

/// Option values are nonnegative; quadrature noise around a zero price is
/// floored, the error estimate is kept.
fn fourier_estimate(value: f64, error: f64) -> PriceEstimate {
    PriceEstimate {
        value: value.max(0.0),
        method: PricingMethod::Fourier,
        std_error: None,
        quadrature_error: Some(error),
    }
}

fn single_damping(damping: &DampingVector) -> Result<(f64, f64)> {
    match damping.values.as_slice() {
        [r] => Ok((*r, *r)),
        [r1, r2] => Ok((*r1, *r2)),
        _ => Err(damping_error("expected one or two damping values".into(), vec![1.5])),
    }
}

/// Default-free call `B(0,T_k)·E_k[(B(T_k,T_m) - K)^+]` on the bond maturing at `T_m`.
pub fn bond_call_price(
    model: &CalibratedModel,
    k: usize,
    m: usize,
    strike: f64,
    damping: &DampingVector,
    quad: &QuadratureConfig,
) -> Result<PriceEstimate> {
    vulnerable_option_price(model, k, m, strike, 1.0, damping, quad)
}

/// Vulnerable call with recovery `q` on the default-free bond maturing at
/// `T_m`, exercised at `T_k`:
/// `B̄(0,T_k)(1-q)·Ē_k[(e^Z-K)^+] + B(0,T_k) q·E_k[(e^Z-K)^+]`.
/// One damping value is used for both integrals, two values apply to the
/// restricted and the forward measure respectively.
pub fn vulnerable_option_price(
    model: &CalibratedModel,
    k: usize,
    m: usize,
    strike: f64,
    q: f64,
    damping: &DampingVector,
    quad: &QuadratureConfig,
) -> Result<PriceEstimate> {
    check_strike(strike)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(ModelError::Parameter(format!("recovery {q} outside [0, 1]")));
    }
    let (r_restricted, r_forward) = single_damping(damping)?;
    let coeffs = model.aggregate_coefficients(k, m, Curve::RiskFree)?;
    let t = model.grid().date(k);
    let curves = model.curves();
    let mut value = 0.0;
    let mut error = 0.0;
    if q < 1.0 {
        let mgf = ShiftedMgf::new(model, model.v(k), t)?;
        let (v, e) = expected_call_1d(&mgf, &coeffs, strike, r_restricted, quad)?;
        value += curves.defaultable(k) * (1.0 - q) * v;
        error += curves.defaultable(k) * (1.0 - q) * e;
    }
    if q > 0.0 {
        let mgf = ShiftedMgf::new(model, model.u(k), t)?;
        let (v, e) = expected_call_1d(&mgf, &coeffs, strike, r_forward, quad)?;
        value += curves.risk_free(k) * q * v;
        error += curves.risk_free(k) * q * e;
    }
    Ok(fourier_estimate(value, error))
}

/// Value of the defaultable bond option at strike zero,
/// `B̄(0,T_i)·Ē_i[π B(T_i,T_m) + (1-π) B̄(T_i,T_m)]`.
pub fn bond_option_forward(model: &CalibratedModel, i: usize, m: usize, pi: f64) -> Result<f64> {
    let rf = model.aggregate_coefficients(i, m, Curve::RiskFree)?;
    let df = model.aggregate_coefficients(i, m, Curve::Defaultable)?;
    let mgf = ShiftedMgf::new(model, model.v(i), model.grid().date(i))?;
    let first = (rf.a + mgf.log_mgf_real(&rf.b)?).exp();
    let second = (df.a + mgf.log_mgf_real(&df.b)?).exp();
    Ok(model.curves().defaultable(i) * (pi * first + (1.0 - pi) * second))
}

/// Option on the defaultable bond with fractional recovery of treasury
/// value `π`, exercised at `T_i` on the bond maturing at `T_m`: pays
/// `1_{τ>T_i}(π B(T_i,T_m) + (1-π) B̄(T_i,T_m) - K)^+`.
///
/// With `Y₁ = log π + A^m_i + <B^m_i, X>` and `Y₂ = log(1-π) + Ā^m_i + <B̄^m_i, X>`
/// the price is `B̄(0,T_i)·Ē_i[(e^{Y₁} + e^{Y₂} - K)^+]`, computed as
/// forward minus strike plus the put, whose transform
/// `K^{1+iz₁+iz₂} Γ(iz₁) Γ(iz₂) / Γ(2+iz₁+iz₂)` needs `R₁ < 0`, `R₂ < 0`.
pub fn bond_option_price(
    model: &CalibratedModel,
    i: usize,
    m: usize,
    strike: f64,
    pi: f64,
    damping: &DampingVector,
    quad: &QuadratureConfig,
) -> Result<PriceEstimate> {
    check_strike(strike)?;
    if !(0.0..=1.0).contains(&pi) {
        return Err(ModelError::Parameter(format!("recovery {pi} outside [0, 1]")));
    }
    let rf = model.aggregate_coefficients(i, m, Curve::RiskFree)?;
    let df = model.aggregate_coefficients(i, m, Curve::Defaultable)?;
    let t = model.grid().date(i);
    let scale = model.curves().defaultable(i);
    let mgf = ShiftedMgf::new(model, model.v(i), t)?;
    if strike == 0.0 {
        return Ok(PriceEstimate::closed_form(bond_option_forward(model, i, m, pi)?));
    }
    if pi == 0.0 || pi == 1.0 {
        let coeffs = if pi == 1.0 { rf } else { df };
        let (v, e) = expected_call_1d(&mgf, &coeffs, strike, 1.5, quad)?;
        return Ok(fourier_estimate(scale * v, scale * e));
    }
    let (r1, r2) = match damping.values.as_slice() {
        [r1, r2] => (*r1, *r2),
        _ => return Err(damping_error("expected two damping values".into(), vec![-1.5, -1.5])),
    };
    let arg = |r1: f64, r2: f64| -> Vec<f64> { rf.b.iter().zip(&df.b).map(|(b, bb)| r1 * b + r2 * bb).collect() };
    let candidates = [(-1.5, -1.5), (-1.0, -1.0), (-0.5, -0.5), (-0.25, -0.25), (-2.0, -1.5), (-0.1, -0.1)];
    let suggestion = || {
        candidates
            .iter()
            .find(|(a, b)| mgf.check_real(&arg(*a, *b)).is_ok())
            .map(|(a, b)| vec![*a, *b])
            .unwrap_or_default()
    };
    if !(r1 < 0.0 && r2 < 0.0) {
        return Err(damping_error(format!("R = ({r1}, {r2}) must have both entries negative"), suggestion()));
    }
    if mgf.check_real(&arg(r1, r2)).is_err() {
        return Err(damping_error(
            format!("moment generating function is infinite at R = ({r1}, {r2})"),
            suggestion(),
        ));
    }
    let (log_pi, log_1mpi) = (pi.ln(), (1.0 - pi).ln());
    let log_k = strike.ln();
    let c1 = log_pi + rf.a;
    let c2 = log_1mpi + df.a;
    let forward = (c1 + mgf.log_mgf_real(&rf.b)?).exp() + (c2 + mgf.log_mgf_real(&df.b)?).exp();
    // The transform is evaluated at iR - w, where iz_j = -z_j with z_j = R_j + i w_j.
    let separable = rf.b.iter().zip(&df.b).all(|(b, bb)| *b == 0.0 || *bb == 0.0 || b == bb);
    let put = if separable {
        let half_pi = 0.5 * std::f64::consts::PI;
        let a = |w1: f64| {
            let z1 = Complex64::new(r1, w1);
            let mut total = z1 * c1 + log_gamma_or_nan(-z1) + half_pi * w1.abs();
            for (j, (b, bb)) in rf.b.iter().zip(&df.b).enumerate() {
                if *bb == 0.0 {
                    total += mgf.component_log_mgf(j, z1 * *b);
                }
            }
            total
        };
        let b = |w2: f64| {
            let z2 = Complex64::new(r2, w2);
            let mut total = z2 * c2 + log_gamma_or_nan(-z2) + half_pi * w2.abs();
            for (j, (b, bb)) in rf.b.iter().zip(&df.b).enumerate() {
                if *b == 0.0 {
                    total += mgf.component_log_mgf(j, z2 * *bb);
                }
            }
            total
        };
        let c = |sigma: f64| {
            let s = Complex64::new(r1 + r2, sigma);
            let mut total = (1.0 - s) * log_k - log_gamma_or_nan(2.0 - s) - half_pi * sigma.abs();
            for (j, (b, bb)) in rf.b.iter().zip(&df.b).enumerate() {
                if *b != 0.0 && *bb != 0.0 {
                    total += mgf.component_log_mgf(j, s * *b);
                }
            }
            total
        };
        separable_quadrature_2d_hermitian(a, b, c, quad)?
    } else {
        let integrand = |w1: f64, w2: f64| {
            let z1 = Complex64::new(r1, w1);
            let z2 = Complex64::new(r2, w2);
            let log_m = z1 * c1 + z2 * c2 + mgf.log_mgf(|j| z1 * rf.b[j] + z2 * df.b[j]);
            let log_g = (1.0 - z1 - z2) * log_k + log_gamma_or_nan(-z1) + log_gamma_or_nan(-z2)
                - log_gamma_or_nan(2.0 - z1 - z2);
            (log_g + log_m).exp()
        };
        fourier_quadrature_2d_hermitian(integrand, quad)?
    };
    Ok(fourier_estimate(
        scale * (forward - strike + put.value),
        scale * put.error,
    ))
}
