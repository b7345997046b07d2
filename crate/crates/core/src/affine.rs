//! Affine exponents of the CIR-with-jumps family and of products of
//! independent factors.
//!
//! A component follows
//! `dX = -λ(X - θ) dt + 2η √X dW + dZ`, where `Z` is compound Poisson with
//! intensity `ℓ` and exponentially distributed jumps of mean `μ`. Its
//! exponential moments are `E[exp(u X_t)] = exp(φ_t(u) + ψ_t(u) x)` with
//! `φ' = F(ψ)`, `ψ' = R(ψ)`, `F(u) = λθu + ℓμu/(1-μu)`, `R(u) = 2η²u² - λu`.

use num_complex::Complex64;

use crate::error::{ModelError, Result};

/// Parameters of one scalar CIR-with-jumps factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineComponentSpec {
    pub lambda: f64,
    pub theta: f64,
    pub eta: f64,
    pub ell: f64,
    pub mu: f64,
    pub x0: f64,
}

/// Value of the affine exponents `(φ_t(u), ψ_t(u))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentPair {
    pub phi: f64,
    pub psi: Vec<f64>,
}

/// Complex-argument counterpart of [`ExponentPair`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexExponentPair {
    pub phi: Complex64,
    pub psi: Vec<Complex64>,
}

/// `log(1 + εx)/ε`, continuous at `ε = 0`.
fn log_ratio(eps: f64, x: f64) -> f64 {
    if eps == 0.0 {
        x
    } else {
        (eps * x).ln_1p() / eps
    }
}

fn log_ratio_complex(eps: f64, x: Complex64) -> Complex64 {
    let z = x * eps;
    if z.norm() < 1e-3 {
        // x (1 - z/2 + z²/3 - ...), truncated well below double precision
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 1..=8 {
            sum += term / n as f64;
            term *= -z;
        }
        x * sum
    } else {
        (z + 1.0).ln() / eps
    }
}

impl AffineComponentSpec {
    /// Builds a validated component.
    pub fn new(lambda: f64, theta: f64, eta: f64, ell: f64, mu: f64, x0: f64) -> Result<Self> {
        let spec = Self {
            lambda,
            theta,
            eta,
            ell,
            mu,
            x0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Deterministic drift towards `theta` with no diffusion and no jumps.
    pub fn deterministic(lambda: f64, theta: f64, x0: f64) -> Result<Self> {
        Self::new(lambda, theta, 0.0, 0.0, 0.0, x0)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda", self.lambda),
            ("theta", self.theta),
            ("eta", self.eta),
            ("ell", self.ell),
            ("mu", self.mu),
            ("x0", self.x0),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(ModelError::Parameter(format!("{name} must be finite, got {value}")));
            }
            if value < 0.0 {
                return Err(ModelError::Parameter(format!("{name} must be nonnegative, got {value}")));
            }
        }
        if self.ell > 0.0 && self.mu <= 0.0 {
            return Err(ModelError::Parameter(
                "mu must be positive when the jump intensity is positive".into(),
            ));
        }
        Ok(())
    }

    fn c(&self) -> f64 {
        2.0 * self.eta * self.eta
    }

    fn has_jumps(&self) -> bool {
        self.ell > 0.0
    }

    /// `(a(t), b(t)) = (e^{-λt}, (1 - e^{-λt})/λ)`, with `b = t` when `λ = 0`.
    fn ab(&self, t: f64) -> (f64, f64) {
        if self.lambda == 0.0 {
            (1.0, t)
        } else {
            ((-self.lambda * t).exp(), -(-self.lambda * t).exp_m1() / self.lambda)
        }
    }

    /// `F(u) = λθu + ℓμu/(1-μu)`.
    pub fn drift_exponent(&self, u: f64) -> f64 {
        let mut f = self.lambda * self.theta * u;
        if self.has_jumps() {
            f += self.ell * self.mu * u / (1.0 - self.mu * u);
        }
        f
    }

    /// `R(u) = 2η²u² - λu`.
    pub fn state_exponent(&self, u: f64) -> f64 {
        self.c() * u * u - self.lambda * u
    }

    /// Supremum of the real `u` for which the exponents at `horizon` are finite.
    pub fn domain_bound(&self, horizon: f64) -> Result<f64> {
        self.validate()?;
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(ModelError::Parameter(format!("horizon must be finite and nonnegative, got {horizon}")));
        }
        if horizon == 0.0 {
            return Ok(f64::INFINITY);
        }
        let (a, b) = self.ab(horizon);
        let c = self.c();
        let mut bound = f64::INFINITY;
        if c * b > 0.0 {
            bound = 1.0 / (c * b);
        }
        if self.has_jumps() {
            let jump_bound = if self.lambda * self.mu >= c {
                1.0 / self.mu
            } else {
                1.0 / (self.mu * a + c * b)
            };
            bound = bound.min(jump_bound);
        }
        Ok(bound)
    }

    fn check_domain(&self, u: f64, t: f64) -> Result<()> {
        let bound = self.domain_bound(t)?;
        if u.is_nan() || u >= bound {
            return Err(ModelError::Domain {
                component: None,
                u,
                bound,
            });
        }
        Ok(())
    }

    /// Closed-form exponents `(φ_t(u), ψ_t(u))`.
    pub fn exponents(&self, u: f64, t: f64) -> Result<(f64, f64)> {
        if t == 0.0 {
            self.validate()?;
            return Ok((0.0, u));
        }
        self.check_domain(u, t)?;
        let (a, b) = self.ab(t);
        let c = self.c();
        let bu = b * u;
        let psi = a * u / (1.0 - c * bu);
        let mut phi = self.lambda * self.theta * log_ratio(-c, bu);
        if self.has_jumps() {
            let eps = self.lambda * self.mu - c;
            phi += self.ell * self.mu * log_ratio(eps, bu / (1.0 - self.mu * u));
        }
        Ok((phi, psi))
    }

    /// Closed-form exponents at complex argument. Only `Re u` is checked
    /// against the real domain; inside that strip every logarithm argument
    /// has positive real part, so principal branches are continuous.
    pub fn exponents_complex(&self, u: Complex64, t: f64) -> Result<(Complex64, Complex64)> {
        if t == 0.0 {
            self.validate()?;
            return Ok((Complex64::new(0.0, 0.0), u));
        }
        self.check_domain(u.re, t)?;
        let (a, b) = self.ab(t);
        let c = self.c();
        let bu = u * b;
        let psi = u * a / (1.0 - bu * c);
        let mut phi = log_ratio_complex(-c, bu) * (self.lambda * self.theta);
        if self.has_jumps() {
            let eps = self.lambda * self.mu - c;
            phi += log_ratio_complex(eps, bu / (1.0 - u * self.mu)) * (self.ell * self.mu);
        }
        Ok((phi, psi))
    }

    /// Exponents obtained by integrating the Riccati system with an adaptive
    /// Dormand–Prince 5(4) scheme (atol 1e-12, rtol 1e-10).
    pub fn exponents_ode(&self, u: f64, t: f64) -> Result<(f64, f64)> {
        self.validate()?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(ModelError::Parameter(format!("time must be finite and nonnegative, got {t}")));
        }
        if self.has_jumps() && self.mu * u >= 1.0 {
            return Err(self.ode_domain_error(u, t));
        }
        if t == 0.0 {
            return Ok((0.0, u));
        }
        let rhs = |y: [f64; 2]| -> Option<[f64; 2]> {
            let psi = y[1];
            if self.has_jumps() && self.mu * psi >= 1.0 {
                return None;
            }
            let out = [self.drift_exponent(psi), self.state_exponent(psi)];
            (out[0].is_finite() && out[1].is_finite()).then_some(out)
        };
        dormand_prince(rhs, [0.0, u], t).map_err(|failure| match failure {
            OdeFailure::StepCollapse => self.ode_domain_error(u, t),
            OdeFailure::TooManySteps => {
                ModelError::Numerical(format!("Riccati integration did not finish for u = {u}, t = {t}"))
            }
        })
    }

    fn ode_domain_error(&self, u: f64, t: f64) -> ModelError {
        ModelError::Domain {
            component: None,
            u,
            bound: self.domain_bound(t).unwrap_or(f64::NAN),
        }
    }
}

enum OdeFailure {
    StepCollapse,
    TooManySteps,
}

const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
const ODE_ATOL: f64 = 1e-12;
const ODE_RTOL: f64 = 1e-10;
const ODE_MAX_STEPS: usize = 1_000_000;

/// Integrates an autonomous two-dimensional system from 0 to `t_end`.
/// `rhs` returns `None` where the vector field is undefined.
fn dormand_prince<F>(rhs: F, y0: [f64; 2], t_end: f64) -> std::result::Result<(f64, f64), OdeFailure>
where
    F: Fn([f64; 2]) -> Option<[f64; 2]>,
{
    let mut y = y0;
    let mut t = 0.0;
    let mut h = (t_end * 1e-3).min(1e-2);
    let h_min = 1e-14 * t_end.max(1.0);
    let mut k1 = rhs(y).ok_or(OdeFailure::StepCollapse)?;
    for _ in 0..ODE_MAX_STEPS {
        if t >= t_end {
            return Ok((y[0], y[1]));
        }
        h = h.min(t_end - t);
        if h < h_min && t_end - t > h_min {
            return Err(OdeFailure::StepCollapse);
        }
        match dp_step(&rhs, y, k1, h) {
            Some((y_new, k7, err)) if err <= 1.0 => {
                t = if t_end - t <= h { t_end } else { t + h };
                y = y_new;
                k1 = k7;
                let factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                h *= factor.clamp(0.2, 5.0);
            }
            Some((_, _, err)) => {
                let factor = if err.is_finite() { 0.9 * err.powf(-0.2) } else { 0.1 };
                h *= factor.clamp(0.1, 0.5);
            }
            None => h *= 0.25,
        }
    }
    Err(OdeFailure::TooManySteps)
}

fn dp_step<F>(rhs: &F, y: [f64; 2], k1: [f64; 2], h: f64) -> Option<([f64; 2], [f64; 2], f64)>
where
    F: Fn([f64; 2]) -> Option<[f64; 2]>,
{
    let mut k = [[0.0; 2]; 7];
    k[0] = k1;
    for stage in 0..6 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(stage + 1) {
            let a = DP_A[stage][j];
            ys[0] += h * a * kj[0];
            ys[1] += h * a * kj[1];
        }
        k[stage + 1] = rhs(ys)?;
        if stage == 5 {
            // The last stage is evaluated at the fifth-order solution.
            let mut err = 0.0f64;
            for c in 0..2 {
                let mut e = 0.0;
                for (i, ki) in k.iter().enumerate() {
                    let b5 = if i < 6 { DP_A[5][i] } else { 0.0 };
                    e += (b5 - DP_B4[i]) * ki[c];
                }
                let scale = ODE_ATOL + ODE_RTOL * y[c].abs().max(ys[c].abs());
                err = err.max((h * e).abs() / scale);
            }
            if !ys[0].is_finite() || !ys[1].is_finite() {
                return None;
            }
            return Some((ys, k[6], err));
        }
    }
    None
}

/// Ordered product of independent components, split into a risk-free block
/// (the first `d1` components) and a spread block (the remaining ones).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductAffineSpec {
    components: Vec<AffineComponentSpec>,
    d1: usize,
}

impl ProductAffineSpec {
    pub fn new(components: Vec<AffineComponentSpec>, d1: usize) -> Result<Self> {
        if d1 == 0 || d1 >= components.len() {
            return Err(ModelError::Parameter(format!(
                "need at least one risk-free and one spread component, got d1 = {d1} of {}",
                components.len()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            c.validate()
                .map_err(|e| ModelError::Parameter(format!("component {i}: {e}")))?;
        }
        Ok(Self { components, d1 })
    }

    pub fn components(&self) -> &[AffineComponentSpec] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.components.len() - self.d1
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.x0).collect()
    }

    pub fn domain_bounds(&self, horizon: f64) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.domain_bound(horizon)).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(ModelError::Parameter(format!(
                "vector of length {len} does not match driver dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Product exponents: `φ` adds over components, `ψ` acts componentwise.
    pub fn exponents(&self, u: &[f64], t: f64) -> Result<ExponentPair> {
        self.check_len(u.len())?;
        let mut phi = 0.0;
        let mut psi = Vec::with_capacity(u.len());
        for (i, (c, &ui)) in self.components.iter().zip(u).enumerate() {
            let (p, s) = c.exponents(ui, t).map_err(|e| e.with_component(i))?;
            phi += p;
            psi.push(s);
        }
        Ok(ExponentPair { phi, psi })
    }

    pub fn exponents_complex(&self, u: &[Complex64], t: f64) -> Result<ComplexExponentPair> {
        self.check_len(u.len())?;
        let mut phi = Complex64::new(0.0, 0.0);
        let mut psi = Vec::with_capacity(u.len());
        for (i, (c, &ui)) in self.components.iter().zip(u).enumerate() {
            let (p, s) = c.exponents_complex(ui, t).map_err(|e| e.with_component(i))?;
            phi += p;
            psi.push(s);
        }
        Ok(ComplexExponentPair { phi, psi })
    }

    /// `log M^u_t = φ_{T_N - t}(u) + <ψ_{T_N - t}(u), x>`, with `u` checked
    /// against the domain at `horizon`.
    pub fn log_martingale_value(&self, x: &[f64], u: &[f64], t: f64, horizon: f64) -> Result<f64> {
        self.check_len(x.len())?;
        if !(0.0..=horizon).contains(&t) {
            return Err(ModelError::Parameter(format!("time {t} outside [0, {horizon}]")));
        }
        for (i, (c, &ui)) in self.components.iter().zip(u).enumerate() {
            c.check_domain(ui, horizon).map_err(|e| e.with_component(i))?;
        }
        let e = self.exponents(u, horizon - t)?;
        Ok(e.phi + dot(&e.psi, x))
    }

    /// `M^u_t = exp(φ_{T_N - t}(u) + <ψ_{T_N - t}(u), x>)`.
    pub fn martingale_value(&self, x: &[f64], u: &[f64], t: f64, horizon: f64) -> Result<f64> {
        self.log_martingale_value(x, u, t, horizon).map(f64::exp)
    }

    /// Largest moment `E[exp(<s·direction, X_T>)]` over the probe scalars `s`.
    /// Probes outside the domain are skipped.
    pub fn gamma_lower_bound(&self, horizon: f64, direction: &[f64], probes: &[f64]) -> Result<f64> {
        self.check_len(direction.len())?;
        let x0 = self.initial_state();
        let mut best: Option<f64> = None;
        for &s in probes {
            let u: Vec<f64> = direction.iter().map(|d| s * d).collect();
            if let Ok(e) = self.exponents(&u, horizon) {
                let value = (e.phi + dot(&e.psi, &x0)).exp();
                best = Some(best.map_or(value, |b: f64| b.max(value)));
            }
        }
        best.ok_or_else(|| ModelError::Validation("no probe lies inside the exponent domain".into()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cir(lambda: f64, theta: f64, eta: f64) -> AffineComponentSpec {
        AffineComponentSpec::new(lambda, theta, eta, 0.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn domain_bound_without_singularity_is_infinite() {
        let spec = AffineComponentSpec::deterministic(0.5, 1.0, 1.0).unwrap();
        assert_eq!(spec.domain_bound(2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn domain_bound_of_pure_diffusion() {
        let spec = cir(1.0, 1.0, 0.5);
        let expected = 1.0 / (0.5 * (1.0 - (-1.0f64).exp()));
        assert_relative_eq!(spec.domain_bound(1.0).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(spec.domain_bound(1.0).unwrap(), 3.1639534, max_relative = 1e-7);
    }

    #[test]
    fn domain_bound_of_pure_jumps() {
        let spec = AffineComponentSpec::new(0.3, 1.0, 0.0, 1.0, 2.0, 1.0).unwrap();
        assert!(spec.domain_bound(1.0).unwrap() <= 0.5);
        assert!(spec.exponents_ode(0.5, 1.0).is_err());
        assert!(spec.exponents(0.5, 1.0).is_err());
    }

    #[test]
    fn jump_log_pole_limits_domain_when_diffusion_dominates() {
        let spec = AffineComponentSpec::new(0.1, 1.0, 0.8, 0.5, 0.5, 1.0).unwrap();
        let t = 2.0;
        let bound = spec.domain_bound(t).unwrap();
        assert!(bound < 1.0 / spec.mu);
        assert!(spec.exponents_ode(0.999 * bound, t).is_ok());
        assert!(matches!(
            spec.exponents_ode(1.001 * bound, t),
            Err(ModelError::Domain { .. })
        ));
    }

    #[test]
    fn psi_hand_value() {
        let spec = cir(1.0, 1.0, 0.5);
        let (_, psi) = spec.exponents(0.1, 1.0).unwrap();
        let a = (-1.0f64).exp();
        let b = 1.0 - a;
        assert_relative_eq!(psi, a * 0.1 / (1.0 - 0.5 * b * 0.1), max_relative = 1e-15);
        assert_relative_eq!(psi, 0.037988613, max_relative = 1e-8);
    }

    #[test]
    fn zero_and_initial_conditions() {
        let spec = AffineComponentSpec::new(0.7, 0.4, 0.3, 0.2, 0.1, 0.5).unwrap();
        assert_eq!(spec.exponents(0.0, 1.3).unwrap(), (0.0, 0.0));
        assert_eq!(spec.exponents(0.8, 0.0).unwrap(), (0.0, 0.8));
        let (phi, psi) = spec.exponents_ode(0.0, 1.3).unwrap();
        assert_eq!((phi, psi), (0.0, 0.0));
    }

    #[test]
    fn ode_matches_pure_drift_closed_form() {
        let spec = AffineComponentSpec::deterministic(0.8, 0.05, 0.03).unwrap();
        let (u, t) = (1.7, 2.5);
        let (phi, psi) = spec.exponents_ode(u, t).unwrap();
        let b = (1.0 - (-0.8 * t).exp()) / 0.8;
        assert_relative_eq!(psi, (-0.8 * t).exp() * u, max_relative = 1e-9);
        assert_relative_eq!(phi, 0.8 * 0.05 * u * b, max_relative = 1e-9);
    }

    #[test]
    fn ode_matches_analytic_with_jumps_and_zero_lambda() {
        for spec in [
            AffineComponentSpec::new(0.0, 0.0, 0.2, 0.4, 0.3, 0.7).unwrap(),
            AffineComponentSpec::new(1.2, 0.5, 0.1, 0.8, 0.05, 0.3).unwrap(),
        ] {
            for u in [-3.0, -0.2, 0.4, 1.1] {
                let (pa, sa) = spec.exponents(u, 1.5).unwrap();
                let (po, so) = spec.exponents_ode(u, 1.5).unwrap();
                assert_relative_eq!(pa, po, max_relative = 1e-8, epsilon = 1e-12);
                assert_relative_eq!(sa, so, max_relative = 1e-8, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn complex_matches_real_on_real_axis() {
        let spec = AffineComponentSpec::new(0.9, 0.6, 0.25, 0.3, 0.2, 0.4).unwrap();
        for u in [-2.0, 1e-6, 0.5] {
            let (p, s) = spec.exponents(u, 1.1).unwrap();
            let (pc, sc) = spec.exponents_complex(Complex64::new(u, 0.0), 1.1).unwrap();
            assert_relative_eq!(pc.re, p, max_relative = 1e-13);
            assert_relative_eq!(sc.re, s, max_relative = 1e-13);
            assert_eq!(pc.im, 0.0);
        }
    }

    #[test]
    fn complex_exponents_give_characteristic_function_of_deterministic_state() {
        let spec = AffineComponentSpec::deterministic(0.5, 2.0, 1.0).unwrap();
        let t = 1.0;
        let x_t = 2.0 + (1.0 - 2.0) * (-0.5f64).exp();
        let u = Complex64::new(0.3, 4.0);
        let (phi, psi) = spec.exponents_complex(u, t).unwrap();
        let value = (phi + psi * spec.x0).exp();
        let expected = (u * x_t).exp();
        assert_relative_eq!(value.re, expected.re, max_relative = 1e-12);
        assert_relative_eq!(value.im, expected.im, max_relative = 1e-12);
    }

    #[test]
    fn product_exponents_and_martingale_values() {
        let driver = ProductAffineSpec::new(vec![cir(1.0, 1.0, 0.5), cir(0.5, 0.2, 0.1)], 1).unwrap();
        let e = driver.exponents(&[0.1, 0.0], 1.0).unwrap();
        let (p1, s1) = driver.components()[0].exponents(0.1, 1.0).unwrap();
        assert_eq!(e.phi, p1);
        assert_eq!(e.psi, vec![s1, 0.0]);
        let x = [0.3, 0.7];
        assert_eq!(driver.martingale_value(&x, &[0.0, 0.0], 0.4, 2.0).unwrap(), 1.0);
        assert_relative_eq!(
            driver.martingale_value(&x, &[0.2, -0.4], 2.0, 2.0).unwrap(),
            (0.2f64 * 0.3 - 0.4 * 0.7).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn product_domain_error_names_component() {
        let driver = ProductAffineSpec::new(vec![cir(1.0, 1.0, 0.0), cir(1.0, 1.0, 0.5)], 1).unwrap();
        let err = driver.exponents(&[10.0, 10.0], 1.0).unwrap_err();
        assert!(matches!(err, ModelError::Domain { component: Some(1), .. }));
    }

    #[test]
    fn gamma_lower_bound_behaviour() {
        let driver = ProductAffineSpec::new(vec![cir(1.0, 1.0, 0.5), cir(0.5, 0.2, 0.1)], 1).unwrap();
        assert_eq!(driver.gamma_lower_bound(1.0, &[1.0, 0.0], &[0.0]).unwrap(), 1.0);
        let bound = driver.components()[0].domain_bound(1.0).unwrap();
        let near = driver.gamma_lower_bound(1.0, &[1.0, 0.0], &[0.9 * bound]).unwrap();
        let nearer = driver.gamma_lower_bound(1.0, &[1.0, 0.0], &[0.999 * bound]).unwrap();
        assert!(nearer > 100.0 * near);
        assert!(driver.gamma_lower_bound(1.0, &[1.0, 0.0], &[2.0 * bound]).is_err());

        let det = ProductAffineSpec::new(
            vec![
                AffineComponentSpec::deterministic(0.5, 2.0, 1.0).unwrap(),
                AffineComponentSpec::deterministic(1.0, 0.0, 1.0).unwrap(),
            ],
            1,
        )
        .unwrap();
        let x_t = 2.0 - (-0.5f64).exp();
        let value = det.gamma_lower_bound(1.0, &[1.0, 0.0], &[0.7]).unwrap();
        assert_relative_eq!(value, (0.7 * x_t).exp(), max_relative = 1e-14);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(AffineComponentSpec::new(-1.0, 1.0, 0.1, 0.0, 0.0, 1.0).is_err());
        assert!(AffineComponentSpec::new(1.0, 1.0, 0.1, 0.5, 0.0, 1.0).is_err());
        assert!(AffineComponentSpec::new(1.0, f64::NAN, 0.1, 0.0, 0.0, 1.0).is_err());
        assert!(ProductAffineSpec::new(vec![cir(1.0, 1.0, 0.1)], 1).is_err());
    }
}
