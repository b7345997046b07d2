//! Monte Carlo simulation of the driver under the terminal measure `P_N`
//! and of the default time by the Cox construction.
//!
//! Each path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! so individual paths do not depend on the number of paths or threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::affine::AffineComponentSpec;
use crate::calibration::CalibratedModel;
use crate::error::{check_index, ModelError, Result};
use crate::term::{Curve, RateCoefficients};

/// Discretisation of the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Full-truncation Euler for the diffusion plus compound Poisson jumps
    /// per sub-step.
    EulerFullTruncation,
    /// Exact noncentral chi-square transition; only for components without jumps.
    ExactCir,
}

/// Shape of the hazard process between tenor dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HazardInterpolation {
    Linear,
    PiecewiseConstant,
}

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub steps_per_period: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub interpolation: HazardInterpolation,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            steps_per_period: 64,
            seed: 0,
            scheme: Scheme::EulerFullTruncation,
            interpolation: HazardInterpolation::Linear,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, model: &CalibratedModel) -> Result<()> {
        if self.n_paths == 0 {
            return Err(ModelError::Parameter("n_paths must be at least 1".into()));
        }
        if self.steps_per_period == 0 {
            return Err(ModelError::Parameter("steps_per_period must be at least 1".into()));
        }
        if self.scheme == Scheme::ExactCir && model.driver().components().iter().any(|c| c.ell > 0.0) {
            return Err(ModelError::Parameter(
                "the exact CIR scheme requires components without jumps".into(),
            ));
        }
        Ok(())
    }
}

/// Simulated paths: driver states and hazard values at `T_0, …, T_N`, the
/// unit-exponential triggers and the default times.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    n_paths: usize,
    n_dates: usize,
    dim: usize,
    dates: Vec<f64>,
    states: Vec<f64>,
    hazards: Vec<f64>,
    triggers: Vec<f64>,
    defaults: Vec<f64>,
    buckets: Vec<usize>,
    hazard_decreases: usize,
}

/// Read-only view of one simulated path.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    bundle: &'a PathBundle,
    index: usize,
}

impl<'a> PathView<'a> {
    pub fn index(&self) -> usize {
        self.index
    }

    /// `X_{T_k}`.
    pub fn state(&self, k: usize) -> &'a [f64] {
        self.bundle.state(self.index, k)
    }

    /// `Γ_{T_k}`.
    pub fn hazard(&self, k: usize) -> f64 {
        self.bundle.hazard(self.index, k)
    }

    pub fn trigger(&self) -> f64 {
        self.bundle.triggers[self.index]
    }

    pub fn default_time(&self) -> f64 {
        self.bundle.defaults[self.index]
    }

    /// `1_{τ > T_k}`, from tenor-date hazard crossings.
    pub fn survived(&self, k: usize) -> bool {
        self.bundle.buckets[self.index] > k
    }
}

impl PathBundle {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    /// Number of recorded dates, `N + 1`.
    pub fn n_dates(&self) -> usize {
        self.n_dates
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn path(&self, index: usize) -> PathView<'_> {
        PathView { bundle: self, index }
    }

    pub fn state(&self, path: usize, k: usize) -> &[f64] {
        let start = (path * self.n_dates + k) * self.dim;
        &self.states[start..start + self.dim]
    }

    pub fn hazard(&self, path: usize, k: usize) -> f64 {
        self.hazards[path * self.n_dates + k]
    }

    pub fn trigger(&self, path: usize) -> f64 {
        self.triggers[path]
    }

    /// Default time, `+∞` when the hazard never reaches the trigger by `T_N`.
    pub fn default_time(&self, path: usize) -> f64 {
        self.defaults[path]
    }

    /// Number of steps `Γ_{T_{k+1}} < Γ_{T_k}` over all paths.
    pub fn hazard_decreases(&self) -> usize {
        self.hazard_decreases
    }

    /// Recomputes default times under another interpolation of the hazard.
    pub fn with_interpolation(&self, interpolation: HazardInterpolation) -> Self {
        let mut out = self.clone();
        for p in 0..self.n_paths {
            out.defaults[p] = default_time(
                &self.dates,
                &self.hazards[p * self.n_dates..(p + 1) * self.n_dates],
                self.buckets[p],
                self.triggers[p],
                interpolation,
            );
        }
        out
    }
}

fn default_time(dates: &[f64], hazards: &[f64], bucket: usize, trigger: f64, interpolation: HazardInterpolation) -> f64 {
    if bucket >= dates.len() {
        return f64::INFINITY;
    }
    match interpolation {
        HazardInterpolation::PiecewiseConstant => dates[bucket],
        HazardInterpolation::Linear => {
            let (g0, g1) = (hazards[bucket - 1], hazards[bucket]);
            let (t0, t1) = (dates[bucket - 1], dates[bucket]);
            t0 + (trigger - g0) / (g1 - g0) * (t1 - t0)
        }
    }
}

struct PathRecord {
    states: Vec<f64>,
    hazards: Vec<f64>,
    trigger: f64,
    decreases: usize,
}

fn euler_step<R: Rng>(c: &AffineComponentSpec, x: f64, dt: f64, rng: &mut R) -> f64 {
    let xp = x.max(0.0);
    let z: f64 = StandardNormal.sample(rng);
    let mut next = x + c.lambda * (c.theta - xp) * dt + 2.0 * c.eta * (xp * dt).sqrt() * z;
    if c.ell > 0.0 {
        // Poisson count by inversion; the mean ℓ·dt is small.
        let mean = c.ell * dt;
        let u: f64 = rng.gen();
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut count = 0u32;
        while u > cdf && count < 1000 {
            count += 1;
            p *= mean / count as f64;
            cdf += p;
        }
        for _ in 0..count {
            let e: f64 = Exp1.sample(rng);
            next += c.mu * e;
        }
    }
    next
}

fn exact_step<R: Rng>(c: &AffineComponentSpec, x: f64, dt: f64, rng: &mut R) -> f64 {
    if c.eta == 0.0 {
        let a = (-c.lambda * dt).exp();
        return c.theta + (x - c.theta) * a;
    }
    let eta2 = c.eta * c.eta;
    let scale = if c.lambda == 0.0 {
        eta2 * dt
    } else {
        eta2 * -(-c.lambda * dt).exp_m1() / c.lambda
    };
    let df = c.lambda * c.theta / eta2;
    let nc = x * (-c.lambda * dt).exp() / scale;
    let n = if nc > 0.0 {
        Poisson::new(0.5 * nc).expect("positive mean").sample(rng)
    } else {
        0.0
    };
    let shape = 0.5 * df + n;
    if shape == 0.0 {
        return 0.0;
    }
    let chi2 = Gamma::new(shape, 2.0).expect("positive shape").sample(rng);
    scale * chi2
}

fn simulate_path(model: &CalibratedModel, config: &SimConfig, hazard_coeffs: &[RateCoefficients], index: usize) -> PathRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let trigger: f64 = Exp1.sample(&mut rng);
    let components = model.driver().components();
    let d = components.len();
    let n = model.n();
    let mut states = Vec::with_capacity((n + 1) * d);
    let mut x: Vec<f64> = model.initial_state().to_vec();
    states.extend_from_slice(&x);
    for k in 0..n {
        let delta = model.grid().delta(k);
        for (j, c) in components.iter().enumerate() {
            x[j] = match config.scheme {
                Scheme::EulerFullTruncation => {
                    let dt = delta / config.steps_per_period as f64;
                    let mut xj = x[j];
                    for _ in 0..config.steps_per_period {
                        xj = euler_step(c, xj, dt, &mut rng);
                    }
                    xj
                }
                Scheme::ExactCir => exact_step(c, x[j], delta, &mut rng),
            };
        }
        states.extend(x.iter().map(|v| v.max(0.0)));
    }
    let mut hazards = Vec::with_capacity(n + 1);
    hazards.push(0.0);
    let mut decreases = 0;
    for (k, coeffs) in hazard_coeffs.iter().enumerate() {
        let g = coeffs.exponent(&states[k * d..(k + 1) * d]);
        if g < hazards[k] {
            decreases += 1;
        }
        hazards.push(g);
    }
    PathRecord {
        states,
        hazards,
        trigger,
        decreases,
    }
}

/// Simulates `config.n_paths` paths of the driver under `P_N`, the hazard
/// process at tenor dates and the default times.
pub fn simulate(model: &CalibratedModel, config: &SimConfig) -> Result<PathBundle> {
    config.validate(model)?;
    let n = model.n();
    let hazard_coeffs: Vec<RateCoefficients> = (0..n).map(|k| model.hazard_coefficients(k)).collect::<Result<_>>()?;
    let records: Vec<PathRecord> = (0..config.n_paths)
        .into_par_iter()
        .map(|p| simulate_path(model, config, &hazard_coeffs, p))
        .collect();
    let dates: Vec<f64> = (0..=n).map(|k| model.grid().date(k)).collect();
    let dim = model.driver().dim();
    let mut bundle = PathBundle {
        n_paths: config.n_paths,
        n_dates: n + 1,
        dim,
        dates,
        states: Vec::with_capacity(config.n_paths * (n + 1) * dim),
        hazards: Vec::with_capacity(config.n_paths * (n + 1)),
        triggers: Vec::with_capacity(config.n_paths),
        defaults: Vec::with_capacity(config.n_paths),
        buckets: Vec::with_capacity(config.n_paths),
        hazard_decreases: 0,
    };
    for r in records {
        let bucket = r.hazards.iter().position(|g| *g >= r.trigger).unwrap_or(n + 1);
        bundle.defaults.push(default_time(&bundle.dates, &r.hazards, bucket, r.trigger, config.interpolation));
        bundle.buckets.push(bucket);
        bundle.states.extend(r.states);
        bundle.hazards.extend(r.hazards);
        bundle.triggers.push(r.trigger);
        bundle.hazard_decreases += r.decreases;
    }
    Ok(bundle)
}

/// How a price was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingMethod {
    ClosedForm,
    Fourier,
    MonteCarlo,
}

/// A price with its method and error information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate {
    pub value: f64,
    pub method: PricingMethod,
    pub std_error: Option<f64>,
    pub quadrature_error: Option<f64>,
}

impl PriceEstimate {
    pub fn closed_form(value: f64) -> Self {
        Self {
            value,
            method: PricingMethod::ClosedForm,
            std_error: None,
            quadrature_error: None,
        }
    }

    pub fn monte_carlo(value: f64, std_error: f64) -> Self {
        Self {
            value,
            method: PricingMethod::MonteCarlo,
            std_error: Some(std_error),
            quadrature_error: None,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_error: self.std_error.map(|s| s * factor.abs()),
            quadrature_error: self.quadrature_error.map(|s| s * factor.abs()),
            ..self
        }
    }
}

/// Sample mean and standard error of a per-path quantity. The per-path
/// values are computed in parallel and summed in path order.
pub fn mc_mean<F>(bundle: &PathBundle, f: F) -> PriceEstimate
where
    F: Fn(PathView<'_>) -> f64 + Sync,
{
    let values: Vec<f64> = (0..bundle.n_paths).into_par_iter().map(|p| f(bundle.path(p))).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    PriceEstimate::monte_carlo(mean, (var / n).sqrt())
}

/// `log M^p_{T_j}` as `a + <b, x>` for `j = 0…N`.
pub fn martingale_table(model: &CalibratedModel, p: &[f64]) -> Result<Vec<RateCoefficients>> {
    let driver = model.driver();
    let horizon = model.grid().horizon();
    (0..=model.n())
        .map(|j| {
            let e = driver.exponents(p, horizon - model.grid().date(j))?;
            Ok(RateCoefficients { a: e.phi, b: e.psi })
        })
        .collect()
}

/// Density `dP_k/dP_N` on `F_{T_k}` per path, `M^{u_k}_{T_k}/M^{u_k}_0`.
struct ForwardDensity {
    at_tk: RateCoefficients,
    log_initial: f64,
    k: usize,
}

impl ForwardDensity {
    fn new(model: &CalibratedModel, k: usize) -> Result<Self> {
        let table = martingale_table(model, model.u(k))?;
        let log_initial = table[0].exponent(model.initial_state());
        Ok(Self {
            at_tk: table[k].clone(),
            log_initial,
            k,
        })
    }

    fn weight(&self, path: &PathView<'_>) -> f64 {
        (self.at_tk.exponent(path.state(self.k)) - self.log_initial).exp()
    }
}

/// Estimates `E_k[payoff]` by reweighting `P_N` paths with
/// `M^{u_k}_{T_k}/M^{u_k}_0`.
pub fn mc_expect_forward<F>(model: &CalibratedModel, bundle: &PathBundle, k: usize, payoff: F) -> Result<PriceEstimate>
where
    F: Fn(PathView<'_>) -> f64 + Sync,
{
    check_index(k, 1, model.n())?;
    let density = ForwardDensity::new(model, k)?;
    Ok(mc_mean(bundle, |p| payoff(p) * density.weight(&p)))
}

/// Monte Carlo CDS legs and spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdsEstimate {
    /// Protection leg value.
    pub protection: PriceEstimate,
    /// Fee leg per unit spread, `Σ_{l=1}^m B̄(0,T_{l-1})`.
    pub fee_leg: f64,
    /// Implied spread `protection / fee_leg`.
    pub spread: PriceEstimate,
}

/// `Σ_{l=1}^m B̄(0,T_{l-1})`.
pub fn cds_fee_leg(model: &CalibratedModel, m: usize) -> f64 {
    (1..=m).map(|l| model.curves().defaultable(l - 1)).sum()
}

/// Monte Carlo CDS with maturity `T_m`, recovery `pi` and coupon `c`; the
/// loss `1 - π(1+c)` is paid at `T_k` for default in `(T_{k-1}, T_k]`.
pub fn mc_price_cds(model: &CalibratedModel, bundle: &PathBundle, m: usize, pi: f64, c: f64) -> Result<CdsEstimate> {
    check_index(m, 1, model.n())?;
    check_recovery(pi, c)?;
    let lgd = 1.0 - pi * (1.0 + c);
    let densities: Vec<ForwardDensity> = (1..=m).map(|k| ForwardDensity::new(model, k)).collect::<Result<_>>()?;
    let curves = model.curves();
    let protection = mc_mean(bundle, |p| {
        let mut leg = 0.0;
        for (density, k) in densities.iter().zip(1..) {
            if p.survived(k - 1) && !p.survived(k) {
                leg += curves.risk_free(k) * density.weight(&p);
            }
        }
        lgd * leg
    });
    let fee_leg = cds_fee_leg(model, m);
    Ok(CdsEstimate {
        protection,
        fee_leg,
        spread: protection.scaled(1.0 / fee_leg),
    })
}

pub(crate) fn check_recovery(pi: f64, c: f64) -> Result<()> {
    if !(0.0..1.0).contains(&pi) {
        return Err(ModelError::Parameter(format!("recovery {pi} outside [0, 1)")));
    }
    if !c.is_finite() || c < 0.0 || pi * (1.0 + c) > 1.0 {
        return Err(ModelError::Parameter(format!("coupon {c} gives recovered amount above par")));
    }
    Ok(())
}

pub(crate) fn check_strike(strike: f64) -> Result<()> {
    if !(strike >= 0.0) || !strike.is_finite() {
        return Err(ModelError::Parameter(format!("strike {strike} must be finite and nonnegative")));
    }
    Ok(())
}

/// Monte Carlo price of the option
/// `1_{τ>T_i}(π B(T_i,T_m) + (1-π) B̄(T_i,T_m) - K)^+` paid at `T_i`.
pub fn mc_price_bond_option(
    model: &CalibratedModel,
    bundle: &PathBundle,
    i: usize,
    m: usize,
    strike: f64,
    pi: f64,
) -> Result<PriceEstimate> {
    check_strike(strike)?;
    if !(0.0..=1.0).contains(&pi) {
        return Err(ModelError::Parameter(format!("recovery {pi} outside [0, 1]")));
    }
    let rf = model.aggregate_coefficients(i, m, Curve::RiskFree)?;
    let df = model.aggregate_coefficients(i, m, Curve::Defaultable)?;
    let estimate = mc_expect_forward(model, bundle, i, |p| {
        if !p.survived(i) {
            return 0.0;
        }
        let x = p.state(i);
        (pi * rf.value(x) + (1.0 - pi) * df.value(x) - strike).max(0.0)
    })?;
    Ok(estimate.scaled(model.curves().risk_free(i)))
}

/// Monte Carlo price of the vulnerable call
/// `(1_{τ>T_k}(1-q) + q)(B(T_k,T_m) - K)^+` paid at `T_k`.
pub fn mc_price_vulnerable_option(
    model: &CalibratedModel,
    bundle: &PathBundle,
    k: usize,
    m: usize,
    strike: f64,
    q: f64,
) -> Result<PriceEstimate> {
    check_strike(strike)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(ModelError::Parameter(format!("recovery {q} outside [0, 1]")));
    }
    let rf = model.aggregate_coefficients(k, m, Curve::RiskFree)?;
    let estimate = mc_expect_forward(model, bundle, k, |p| {
        let factor = if p.survived(k) { 1.0 } else { q };
        factor * (rf.value(p.state(k)) - strike).max(0.0)
    })?;
    Ok(estimate.scaled(model.curves().risk_free(k)))
}

/// Empirical `P_N(τ > T_k)` for `k = 0…N`.
pub fn empirical_survival(bundle: &PathBundle, k: usize) -> PriceEstimate {
    mc_mean(bundle, |p| if p.survived(k) { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::ProductAffineSpec;
    use crate::calibration::{calibrate, CalibrationSettings, InitialCurves, TenorGrid};

    fn model(spread_eta: f64, spread: bool) -> CalibratedModel {
        let driver = ProductAffineSpec::new(
            vec![
                AffineComponentSpec::new(0.5, 0.04, 0.1, 0.3, 0.01, 0.04).unwrap(),
                AffineComponentSpec::new(0.3, 1.0, spread_eta, 0.0, 0.0, 1.0).unwrap(),
            ],
            1,
        )
        .unwrap();
        let n = 4;
        let grid = TenorGrid::uniform(n, 0.25).unwrap();
        let rf: Vec<f64> = (1..=n).map(|k| 1.01f64.powi(-(k as i32))).collect();
        let df: Vec<f64> = if spread {
            (1..=n).map(|k| rf[k - 1] * (-0.1 * k as f64 * 0.25).exp()).collect()
        } else {
            rf.clone()
        };
        calibrate(&driver, &grid, &InitialCurves::new(rf, df).unwrap(), &CalibrationSettings::default()).unwrap()
    }

    fn config(n_paths: usize) -> SimConfig {
        SimConfig {
            n_paths,
            steps_per_period: 16,
            seed: 11,
            ..SimConfig::default()
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let m = model(0.02, true);
        let a = simulate(&m, &config(500)).unwrap();
        let b = simulate(&m, &config(500)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn paths_do_not_depend_on_path_count() {
        let m = model(0.02, true);
        let small = simulate(&m, &config(10)).unwrap();
        let large = simulate(&m, &config(40)).unwrap();
        for p in 0..10 {
            for k in 0..small.n_dates() {
                assert_eq!(small.state(p, k), large.state(p, k));
            }
            assert_eq!(small.trigger(p), large.trigger(p));
        }
    }

    #[test]
    fn zero_spread_model_never_defaults() {
        let m = model(0.02, false);
        let b = simulate(&m, &config(2000)).unwrap();
        for p in 0..b.n_paths() {
            assert_eq!(b.default_time(p), f64::INFINITY);
            for k in 0..b.n_dates() {
                assert_eq!(b.hazard(p, k), 0.0);
            }
        }
    }

    #[test]
    fn default_times_are_consistent_with_triggers() {
        let m = model(0.02, true);
        let b = simulate(&m, &config(4000)).unwrap();
        let pc = b.with_interpolation(HazardInterpolation::PiecewiseConstant);
        let mut defaults = 0;
        for p in 0..b.n_paths() {
            let tau = b.default_time(p);
            if tau.is_finite() {
                defaults += 1;
                let view = b.path(p);
                let k = (1..b.n_dates()).find(|&k| !view.survived(k)).unwrap();
                assert!(tau > m.grid().date(k - 1) && tau <= m.grid().date(k));
                assert_eq!(pc.default_time(p), m.grid().date(k));
            }
        }
        assert!(defaults > 0);
    }

    #[test]
    fn unit_payoff_has_unit_forward_expectation() {
        let m = model(0.02, true);
        let b = simulate(&m, &config(20_000)).unwrap();
        for k in 1..=m.n() {
            let e = mc_expect_forward(&m, &b, k, |_| 1.0).unwrap();
            assert!((e.value - 1.0).abs() < 3.0 * e.std_error.unwrap().max(1e-12));
        }
    }

    #[test]
    fn exact_scheme_rejects_jumps_and_matches_moments() {
        let m = model(0.02, true);
        let cfg = SimConfig {
            scheme: Scheme::ExactCir,
            ..config(100)
        };
        assert!(simulate(&m, &cfg).is_err());

        let driver = ProductAffineSpec::new(
            vec![
                AffineComponentSpec::new(0.5, 0.04, 0.1, 0.0, 0.0, 0.04).unwrap(),
                AffineComponentSpec::new(0.3, 1.0, 0.05, 0.0, 0.0, 1.0).unwrap(),
            ],
            1,
        )
        .unwrap();
        let grid = TenorGrid::uniform(4, 0.25).unwrap();
        let rf: Vec<f64> = (1..=4).map(|k| 1.01f64.powi(-k)).collect();
        let cm = calibrate(&driver, &grid, &InitialCurves::new(rf.clone(), rf).unwrap(), &CalibrationSettings::default())
            .unwrap();
        let cfg = SimConfig {
            scheme: Scheme::ExactCir,
            n_paths: 40_000,
            ..config(0)
        };
        let b = simulate(&cm, &cfg).unwrap();
        // E[exp(0.5 X_1)] against the affine formula
        let u = [0.5, 0.0];
        let e = driver.exponents(&u, 1.0).unwrap();
        let expected = (e.phi + e.psi[0] * 0.04).exp();
        let est = mc_mean(&b, |p| (0.5 * p.state(4)[0]).exp());
        assert!((est.value - expected).abs() < 3.0 * est.std_error.unwrap());
    }

    #[test]
    fn high_spread_volatility_breaks_hazard_monotonicity() {
        let m = model(0.6, true);
        let b = simulate(&m, &config(4000)).unwrap();
        assert!(b.hazard_decreases() > 0);
    }
}
