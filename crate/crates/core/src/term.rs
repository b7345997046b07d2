//! Model quantities implied by a calibrated model: LIBOR and defaultable
//! LIBOR rates, default intensities, the survival process, the hazard process
//! at tenor dates and the affine exponents under forward measures.
//!
//! Every evaluation takes the driver state `x` explicitly, so the same
//! functions serve closed-form pricing (`x = x₀`) and per-path simulation.

use num_complex::Complex64;

use crate::affine::{dot, ComplexExponentPair, ExponentPair};
use crate::calibration::CalibratedModel;
use crate::error::{check_index, ModelError, Result};

/// Coefficients `(A, B)` of an exponential-affine expression `exp(A + <B, x>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCoefficients {
    pub a: f64,
    pub b: Vec<f64>,
}

impl RateCoefficients {
    pub fn exponent(&self, x: &[f64]) -> f64 {
        self.a + dot(&self.b, x)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.exponent(x).exp()
    }
}

/// Which bond curve an aggregate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    RiskFree,
    Defaultable,
}

impl CalibratedModel {
    fn check_time(&self, t: f64, limit: f64) -> Result<()> {
        if !(0.0..=limit).contains(&t) {
            return Err(ModelError::Parameter(format!("time {t} outside [0, {limit}]")));
        }
        Ok(())
    }

    /// `(φ_{T_N-t}(p) - φ_{T_N-t}(q), ψ_{T_N-t}(p) - ψ_{T_N-t}(q))`.
    pub fn exponent_difference(&self, p: &[f64], q: &[f64], t: f64) -> Result<RateCoefficients> {
        let horizon = self.grid().horizon() - t;
        let ep = self.driver().exponents(p, horizon)?;
        let eq = self.driver().exponents(q, horizon)?;
        Ok(RateCoefficients {
            a: ep.phi - eq.phi,
            b: ep.psi.iter().zip(&eq.psi).map(|(x, y)| x - y).collect(),
        })
    }

    /// `log(1 + δ_k L(t,T_k)) = A_{T_N-t}(u_k, u_{k+1}) + <B_{T_N-t}(u_k, u_{k+1}), x>`.
    fn log_libor_factor(&self, x: &[f64], t: f64, k: usize, curve: Curve) -> Result<f64> {
        check_index(k, 1, self.n() - 1)?;
        self.check_time(t, self.grid().date(k))?;
        let (p, q) = match curve {
            Curve::RiskFree => (self.u(k), self.u(k + 1)),
            Curve::Defaultable => (self.v(k), self.v(k + 1)),
        };
        Ok(self.exponent_difference(p, q, t)?.exponent(x))
    }

    /// LIBOR rate `L(t,T_k)` for `k = 1…N-1`.
    pub fn libor(&self, x: &[f64], t: f64, k: usize) -> Result<f64> {
        Ok(self.log_libor_factor(x, t, k, Curve::RiskFree)?.exp_m1() / self.grid().delta(k))
    }

    /// Defaultable LIBOR rate `L̄(t,T_k)` for `k = 1…N-1`.
    pub fn defaultable_libor(&self, x: &[f64], t: f64, k: usize) -> Result<f64> {
        Ok(self.log_libor_factor(x, t, k, Curve::Defaultable)?.exp_m1() / self.grid().delta(k))
    }

    /// `log ℍ(t,T_k) = log M^{v_{k+1}}_t - log M^{u_{k+1}}_t` for `k = 0…N-1`.
    fn log_survival(&self, x: &[f64], t: f64, k: usize) -> Result<f64> {
        check_index(k, 0, self.n() - 1)?;
        Ok(self.exponent_difference(self.v(k + 1), self.u(k + 1), t)?.exponent(x))
    }

    /// Survival process `ℍ(t,T_k) = M^{v_{k+1}}_t / M^{u_{k+1}}_t` for
    /// `k = 0…N-1` and `0 ≤ t ≤ T_k`.
    pub fn survival_process(&self, x: &[f64], t: f64, k: usize) -> Result<f64> {
        check_index(k, 0, self.n() - 1)?;
        self.check_time(t, self.grid().date(k))?;
        Ok(self.log_survival(x, t, k)?.exp())
    }

    /// Forward default intensity `H(t,T_k)` from
    /// `1 + δ_k H(t,T_k) = ℍ(t,T_{k-1}) / ℍ(t,T_k)` for `k = 0…N-1`, with
    /// `ℍ(·,T_{-1}) ≡ 1`.
    pub fn default_intensity(&self, x: &[f64], t: f64, k: usize) -> Result<f64> {
        check_index(k, 0, self.n() - 1)?;
        self.check_time(t, self.grid().date(k))?;
        let previous = if k == 0 { 0.0 } else { self.log_survival(x, t, k - 1)? };
        let log_factor = previous - self.log_survival(x, t, k)?;
        Ok(log_factor.exp_m1() / self.grid().delta(k))
    }

    /// LIBOR spread `S(t,T_k) = L̄(t,T_k) - L(t,T_k)` for `k = 1…N-1`.
    pub fn spread(&self, x: &[f64], t: f64, k: usize) -> Result<f64> {
        Ok(self.defaultable_libor(x, t, k)? - self.libor(x, t, k)?)
    }

    /// Coefficients of the hazard value `Γ_{T_{k+1}} = A + <B, X_{T_k}>`, i.e.
    /// `A = A_{T_N-T_k}(u_{k+1}, v_{k+1})`, for `k = 0…N-1`.
    pub fn hazard_coefficients(&self, k: usize) -> Result<RateCoefficients> {
        check_index(k, 0, self.n() - 1)?;
        self.exponent_difference(self.u(k + 1), self.v(k + 1), self.grid().date(k))
    }

    /// Hazard process at the next tenor date, `Γ_{T_{k+1}} = -log ℍ(T_k,T_k)`,
    /// from the state at `T_k`.
    pub fn hazard_at_tenor(&self, x_at_tk: &[f64], k: usize) -> Result<f64> {
        Ok(self.hazard_coefficients(k)?.exponent(x_at_tk))
    }

    /// `(A^m_i, B^m_i)` or `(Ā^m_i, B̄^m_i)` with
    /// `B(T_i,T_m) = exp(A^m_i + <B^m_i, X_{T_i}>)`, for `1 ≤ i < m ≤ N`.
    pub fn aggregate_coefficients(&self, i: usize, m: usize, curve: Curve) -> Result<RateCoefficients> {
        check_index(m, 2, self.n())?;
        check_index(i, 1, m - 1)?;
        let (p, q) = match curve {
            Curve::RiskFree => (self.u(m), self.u(i)),
            Curve::Defaultable => (self.v(m), self.v(i)),
        };
        self.exponent_difference(p, q, self.grid().date(i))
    }

    fn shifted_exponents(&self, base_param: &[f64], v: &[f64], t: f64) -> Result<ExponentPair> {
        self.check_time(t, self.grid().horizon())?;
        let driver = self.driver();
        let base = driver.exponents(base_param, self.grid().horizon() - t)?.psi;
        let shifted: Vec<f64> = base.iter().zip(v).map(|(a, b)| a + b).collect();
        let e_shift = driver.exponents(&shifted, t)?;
        let e_base = driver.exponents(&base, t)?;
        Ok(ExponentPair {
            phi: e_shift.phi - e_base.phi,
            psi: e_shift.psi.iter().zip(&e_base.psi).map(|(a, b)| a - b).collect(),
        })
    }

    fn shifted_exponents_complex(&self, base_param: &[f64], v: &[Complex64], t: f64) -> Result<ComplexExponentPair> {
        self.check_time(t, self.grid().horizon())?;
        let driver = self.driver();
        let base = driver.exponents(base_param, self.grid().horizon() - t)?.psi;
        let shifted: Vec<Complex64> = base.iter().zip(v).map(|(a, b)| b + a).collect();
        let e_shift = driver.exponents_complex(&shifted, t)?;
        let e_base = driver.exponents(&base, t)?;
        Ok(ComplexExponentPair {
            phi: e_shift.phi - e_base.phi,
            psi: e_shift.psi.iter().zip(&e_base.psi).map(|(a, b)| a - b).collect(),
        })
    }

    /// Exponents of `X_t` under the forward measure `P_k`:
    /// `E_k[exp(<v, X_t>)] = exp(φ^k_t(v) + <ψ^k_t(v), x₀>)`.
    pub fn forward_measure_exponents(&self, k: usize, v: &[f64], t: f64) -> Result<ExponentPair> {
        check_index(k, 1, self.n())?;
        self.shifted_exponents(self.u(k), v, t)
    }

    /// Exponents of `X_t` under the restricted defaultable forward measure `P̄_k`.
    pub fn restricted_forward_exponents(&self, k: usize, w: &[f64], t: f64) -> Result<ExponentPair> {
        check_index(k, 1, self.n())?;
        self.shifted_exponents(self.v(k), w, t)
    }

    /// Complex-argument version of [`Self::forward_measure_exponents`].
    pub fn forward_measure_exponents_complex(&self, k: usize, v: &[Complex64], t: f64) -> Result<ComplexExponentPair> {
        check_index(k, 1, self.n())?;
        self.shifted_exponents_complex(self.u(k), v, t)
    }

    /// Complex-argument version of [`Self::restricted_forward_exponents`].
    pub fn restricted_forward_exponents_complex(
        &self,
        k: usize,
        w: &[Complex64],
        t: f64,
    ) -> Result<ComplexExponentPair> {
        check_index(k, 1, self.n())?;
        self.shifted_exponents_complex(self.v(k), w, t)
    }

    /// `E_N[exp(-Γ_{T_k})] = E_N[ℍ(T_{k-1},T_{k-1})]` for `k = 1…N`.
    pub fn terminal_survival_probability(&self, k: usize) -> Result<f64> {
        check_index(k, 1, self.n())?;
        let h = self.hazard_coefficients(k - 1)?;
        let minus_b: Vec<f64> = h.b.iter().map(|b| -b).collect();
        let e = self.driver().exponents(&minus_b, self.grid().date(k - 1))?;
        Ok((-h.a + e.phi + dot(&e.psi, self.initial_state())).exp())
    }

    /// `E_k[exp(-Γ_{T_k})]` for `k = 1…N`, via the forward-measure exponents.
    pub fn forward_survival_probability(&self, k: usize) -> Result<f64> {
        check_index(k, 1, self.n())?;
        let h = self.hazard_coefficients(k - 1)?;
        let minus_b: Vec<f64> = h.b.iter().map(|b| -b).collect();
        let e = self.forward_measure_exponents(k, &minus_b, self.grid().date(k - 1))?;
        Ok((-h.a + e.phi + dot(&e.psi, self.initial_state())).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{AffineComponentSpec, ProductAffineSpec};
    use crate::calibration::{calibrate, CalibrationSettings, InitialCurves, TenorGrid};
    use approx::assert_relative_eq;

    fn model(spread: bool) -> CalibratedModel {
        let driver = ProductAffineSpec::new(
            vec![
                AffineComponentSpec::new(0.5, 0.04, 0.1, 0.2, 0.01, 0.04).unwrap(),
                AffineComponentSpec::new(0.3, 1.0, 0.02, 0.0, 0.0, 1.0).unwrap(),
            ],
            1,
        )
        .unwrap();
        let n = 6;
        let grid = TenorGrid::uniform(n, 0.25).unwrap();
        let rf: Vec<f64> = (1..=n).map(|k| 1.01f64.powi(-(k as i32))).collect();
        let df: Vec<f64> = if spread {
            (1..=n).map(|k| rf[k - 1] * (-0.02 * k as f64 * 0.25).exp()).collect()
        } else {
            rf.clone()
        };
        calibrate(&driver, &grid, &InitialCurves::new(rf, df).unwrap(), &CalibrationSettings::default()).unwrap()
    }

    #[test]
    fn initial_values_reproduce_curves() {
        let m = model(true);
        let x0 = m.initial_state().to_vec();
        let c = m.curves();
        for k in 1..m.n() {
            let d = m.grid().delta(k);
            assert_relative_eq!(1.0 + d * m.libor(&x0, 0.0, k).unwrap(), c.risk_free(k) / c.risk_free(k + 1), max_relative = 1e-12);
            assert_relative_eq!(
                1.0 + d * m.defaultable_libor(&x0, 0.0, k).unwrap(),
                c.defaultable(k) / c.defaultable(k + 1),
                max_relative = 1e-12
            );
            let implied = c.defaultable(k) / c.defaultable(k + 1) * c.risk_free(k + 1) / c.risk_free(k);
            assert_relative_eq!(1.0 + d * m.default_intensity(&x0, 0.0, k).unwrap(), implied, max_relative = 1e-12);
        }
        for k in 0..m.n() {
            assert_relative_eq!(
                m.survival_process(&x0, 0.0, k).unwrap(),
                c.defaultable(k + 1) / c.risk_free(k + 1),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn zero_spread_model_has_no_credit_quantities() {
        let m = model(false);
        let x = [0.07, 1.3];
        for k in 1..m.n() {
            assert_eq!(m.defaultable_libor(&x, 0.1, k).unwrap(), m.libor(&x, 0.1, k).unwrap());
            assert_eq!(m.default_intensity(&x, 0.1, k).unwrap(), 0.0);
            assert_eq!(m.spread(&x, 0.1, k).unwrap(), 0.0);
        }
        for k in 0..m.n() {
            assert_eq!(m.survival_process(&x, 0.0, k).unwrap(), 1.0);
            assert_eq!(m.hazard_at_tenor(&x, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn identities_at_random_states() {
        let m = model(true);
        for (i, x) in [[0.0, 0.0], [0.01, 0.5], [0.2, 2.0], [1.0, 0.1]].iter().enumerate() {
            let t = 0.05 * i as f64;
            for k in 1..m.n() {
                let d = m.grid().delta(k);
                let l = m.libor(x, t, k).unwrap();
                let lb = m.defaultable_libor(x, t, k).unwrap();
                let h = m.default_intensity(x, t, k).unwrap();
                assert!(l >= 0.0 && lb >= l && h >= 0.0);
                assert_relative_eq!((1.0 + d * l) * (1.0 + d * h), 1.0 + d * lb, max_relative = 1e-12);
                assert_relative_eq!(m.spread(x, t, k).unwrap(), h * (1.0 + d * l), max_relative = 1e-10, epsilon = 1e-15);
            }
            for k in 0..m.n() {
                let s = m.survival_process(x, t.min(m.grid().date(k)), k).unwrap();
                assert!((0.0..=1.0).contains(&s));
            }
        }
    }

    #[test]
    fn hazard_matches_survival_process() {
        let m = model(true);
        let x = [0.05, 0.8];
        for k in 0..m.n() {
            let gamma = m.hazard_at_tenor(&x, k).unwrap();
            let s = m.survival_process(&x, m.grid().date(k), k).unwrap();
            assert_relative_eq!((-gamma).exp(), s, max_relative = 1e-12);
        }
    }

    #[test]
    fn aggregate_coefficients_telescope() {
        let m = model(true);
        let x = [0.03, 1.2];
        for i in 1..m.n() {
            let single = m.aggregate_coefficients(i, i + 1, Curve::RiskFree).unwrap();
            let period = m.exponent_difference(m.u(i), m.u(i + 1), m.grid().date(i)).unwrap();
            assert_relative_eq!(single.a, -period.a, max_relative = 1e-14);
            for m_idx in i + 1..=m.n() {
                let agg = m.aggregate_coefficients(i, m_idx, Curve::RiskFree).unwrap();
                let mut product = 1.0;
                for l in i..m_idx {
                    let d = m.grid().delta(l);
                    product /= 1.0 + d * m.libor(&x, m.grid().date(i), l).unwrap();
                }
                assert_relative_eq!(agg.value(&x), product, max_relative = 1e-12);
                assert!(agg.value(&x) <= 1.0);
            }
        }
    }

    #[test]
    fn forward_exponents_reduce_correctly() {
        let m = model(false);
        let n = m.n();
        let v = [0.3, -0.2];
        let e = m.forward_measure_exponents(n, &v, 0.7).unwrap();
        let plain = m.driver().exponents(&v, 0.7).unwrap();
        assert_relative_eq!(e.phi, plain.phi, max_relative = 1e-14);
        let zero = m.forward_measure_exponents(2, &[0.0, 0.0], 0.7).unwrap();
        assert_eq!(zero.phi, 0.0);
        let r = m.restricted_forward_exponents(2, &v, 0.7).unwrap();
        let f = m.forward_measure_exponents(2, &v, 0.7).unwrap();
        assert_eq!(r, f);
    }

    #[test]
    fn forward_survival_equals_curve_ratio() {
        let m = model(true);
        let c = m.curves();
        for k in 1..=m.n() {
            let ratio = c.defaultable(k) / c.risk_free(k);
            assert_relative_eq!(m.forward_survival_probability(k).unwrap(), ratio, max_relative = 1e-12);
        }
    }

    #[test]
    fn index_errors() {
        let m = model(true);
        let x = m.initial_state().to_vec();
        assert!(matches!(m.libor(&x, 0.0, 0), Err(ModelError::Index { .. })));
        assert!(matches!(m.libor(&x, 0.0, m.n()), Err(ModelError::Index { .. })));
        assert!(m.libor(&x, 10.0, 1).is_err());
        assert!(m.aggregate_coefficients(3, 3, Curve::RiskFree).is_err());
    }
}
