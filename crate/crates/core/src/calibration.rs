//! Fitting the martingale parameter sequences `u_k` and `v_k = (ū_k, w̄_k)` to
//! initial default-free and defaultable discount curves.

use crate::affine::ProductAffineSpec;
use crate::error::{ModelError, Result};

/// Relative slack used when validating curve inequalities read from files.
const CURVE_SLACK: f64 = 1e-13;

/// Tenor dates `T_1 < … < T_N`, with `T_0 = 0` implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct TenorGrid {
    dates: Vec<f64>,
}

impl TenorGrid {
    pub fn new(dates: Vec<f64>) -> Result<Self> {
        if dates.len() < 2 {
            return Err(ModelError::Validation(format!(
                "tenor grid needs at least two dates, got {}",
                dates.len()
            )));
        }
        let mut previous = 0.0;
        for (i, &d) in dates.iter().enumerate() {
            if !d.is_finite() || d <= previous {
                return Err(ModelError::Validation(format!(
                    "tenor date {} (T_{}) = {d} is not strictly after {previous}",
                    i + 1,
                    i + 1
                )));
            }
            previous = d;
        }
        Ok(Self { dates })
    }

    /// `T_k = k·δ` for `k = 1…n`.
    pub fn uniform(n: usize, delta: f64) -> Result<Self> {
        Self::new((1..=n).map(|k| k as f64 * delta).collect())
    }

    /// Number of tenor dates `N`.
    pub fn n(&self) -> usize {
        self.dates.len()
    }

    /// `T_1, …, T_N`.
    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    /// `T_k` for `k = 0…N`.
    pub fn date(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.dates[k - 1]
        }
    }

    /// `δ_k = T_{k+1} - T_k` for `k = 0…N-1`.
    pub fn delta(&self, k: usize) -> f64 {
        self.date(k + 1) - self.date(k)
    }

    /// `T_N`.
    pub fn horizon(&self) -> f64 {
        *self.dates.last().expect("grid is nonempty")
    }
}

/// Initial discount curves `B(0,T_k)` and `B̄(0,T_k)` for `k = 1…N`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCurves {
    risk_free: Vec<f64>,
    defaultable: Vec<f64>,
}

impl InitialCurves {
    pub fn new(risk_free: Vec<f64>, defaultable: Vec<f64>) -> Result<Self> {
        if risk_free.len() != defaultable.len() || risk_free.is_empty() {
            return Err(ModelError::Validation(format!(
                "curves must have equal nonzero length, got {} and {}",
                risk_free.len(),
                defaultable.len()
            )));
        }
        for k in 0..risk_free.len() {
            let (b, bb) = (risk_free[k], defaultable[k]);
            if !(b > 0.0 && b <= 1.0 + CURVE_SLACK) {
                return Err(ModelError::Validation(format!("B(0,T_{}) = {b} is not in (0,1]", k + 1)));
            }
            if !(bb > 0.0 && bb <= b * (1.0 + CURVE_SLACK)) {
                return Err(ModelError::Validation(format!(
                    "B̄(0,T_{}) = {bb} is not in (0, B(0,T_{})] = (0, {b}]",
                    k + 1,
                    k + 1
                )));
            }
            let (b_prev, bb_prev) = if k == 0 { (1.0, 1.0) } else { (risk_free[k - 1], defaultable[k - 1]) };
            let ratio = b_prev / b;
            if ratio < 1.0 - CURVE_SLACK {
                return Err(ModelError::Validation(format!(
                    "risk-free curve increases at T_{}: negative initial LIBOR rate",
                    k + 1
                )));
            }
            if bb_prev / bb < ratio * (1.0 - CURVE_SLACK) {
                return Err(ModelError::Validation(format!(
                    "defaultable rate below the risk-free rate on the period ending at T_{}",
                    k + 1
                )));
            }
        }
        Ok(Self { risk_free, defaultable })
    }

    pub fn n(&self) -> usize {
        self.risk_free.len()
    }

    /// `B(0,T_k)` for `k = 0…N` (with `B(0,T_0) = 1`).
    pub fn risk_free(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.risk_free[k - 1]
        }
    }

    /// `B̄(0,T_k)` for `k = 0…N` (with `B̄(0,T_0) = 1`).
    pub fn defaultable(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.defaultable[k - 1]
        }
    }

    pub fn risk_free_curve(&self) -> &[f64] {
        &self.risk_free
    }

    pub fn defaultable_curve(&self) -> &[f64] {
        &self.defaultable
    }
}

/// Root-finding settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    /// Direction over the risk-free block; all ones when `None`.
    pub risk_free_direction: Option<Vec<f64>>,
    /// Direction over the spread block; all ones when `None`.
    pub spread_direction: Option<Vec<f64>>,
    /// Absolute tolerance on the scaling `ξ`.
    pub xi_tolerance: f64,
    /// Relative tolerance on the fitted martingale values.
    pub target_tolerance: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            risk_free_direction: None,
            spread_direction: None,
            xi_tolerance: 1e-12,
            target_tolerance: 1e-10,
        }
    }
}

/// Calibrated model: the driver, the grid, the initial curves and the
/// parameter sequences. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedModel {
    grid: TenorGrid,
    curves: InitialCurves,
    driver: ProductAffineSpec,
    x0: Vec<f64>,
    u: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl CalibratedModel {
    /// Builds a model from parts without checking any invariant. Intended for
    /// diagnostics and tests; use [`assemble`] for validated models.
    pub fn from_parts_unchecked(
        driver: ProductAffineSpec,
        grid: TenorGrid,
        curves: InitialCurves,
        u: Vec<Vec<f64>>,
        w: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
    ) -> Self {
        let x0 = driver.initial_state();
        Self {
            grid,
            curves,
            driver,
            x0,
            u,
            w,
            v,
        }
    }

    pub fn grid(&self) -> &TenorGrid {
        &self.grid
    }

    pub fn curves(&self) -> &InitialCurves {
        &self.curves
    }

    pub fn driver(&self) -> &ProductAffineSpec {
        &self.driver
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.x0
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// `u_k` for `k = 1…N`.
    pub fn u(&self, k: usize) -> &[f64] {
        &self.u[k - 1]
    }

    /// `v_k` for `k = 1…N`.
    pub fn v(&self, k: usize) -> &[f64] {
        &self.v[k - 1]
    }

    /// Spread-block parameters `w̄_k` for `k = 1…N`.
    pub fn w(&self, k: usize) -> &[f64] {
        &self.w[k - 1]
    }

    pub fn u_sequence(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn v_sequence(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn w_sequence(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// `M^u_t` at state `x`, with the model horizon `T_N`.
    pub fn martingale(&self, x: &[f64], u: &[f64], t: f64) -> Result<f64> {
        self.driver.martingale_value(x, u, t, self.grid.horizon())
    }
}

/// Monotone scalar root-finder for `log M_0^{ξ·direction} = log target`.
struct MomentFit<'a> {
    driver: &'a ProductAffineSpec,
    direction: Vec<f64>,
    horizon: f64,
    x0: Vec<f64>,
    settings: &'a CalibrationSettings,
}

impl MomentFit<'_> {
    fn log_moment(&self, xi: f64) -> Result<f64> {
        let u: Vec<f64> = self.direction.iter().map(|d| xi * d).collect();
        let e = self.driver.exponents(&u, self.horizon)?;
        Ok(e.phi + crate::affine::dot(&e.psi, &self.x0))
    }

    /// Largest admissible ξ along the direction: 95% of the domain bound.
    fn cap(&self) -> Result<f64> {
        let bounds = self.driver.domain_bounds(self.horizon)?;
        let mut cap = f64::INFINITY;
        for (b, d) in bounds.iter().zip(&self.direction) {
            if *d > 0.0 {
                cap = cap.min(0.95 * b / d);
            }
        }
        Ok(cap)
    }

    /// Finds the end of a bracket `[0, ξ]` (or `[ξ, 0]` when `sign < 0`) on
    /// which the log-moment reaches `extreme_target`.
    fn bracket(&self, extreme_target: f64, sign: f64, index: usize) -> Result<f64> {
        let cap = if sign > 0.0 { self.cap()? } else { f64::INFINITY };
        let mut xi = 1.0f64.min(cap);
        let reached = |value: f64| if sign > 0.0 { value >= extreme_target } else { value <= extreme_target };
        for _ in 0..200 {
            let value = self.log_moment(sign * xi)?;
            if reached(value) {
                return Ok(sign * xi);
            }
            if xi >= cap || xi > 1e12 {
                return Err(ModelError::Infeasible {
                    index,
                    target: extreme_target.exp(),
                    attained: value.exp(),
                });
            }
            xi = (2.0 * xi).min(cap);
        }
        unreachable!("doubling terminates through the cap or the size limit")
    }

    fn assert_monotone(&self, lo: f64, hi: f64) -> Result<()> {
        const SAMPLES: usize = 16;
        let mut previous = self.log_moment(lo)?;
        for i in 1..=SAMPLES {
            let xi = lo + (hi - lo) * i as f64 / SAMPLES as f64;
            let value = self.log_moment(xi)?;
            if value < previous {
                return Err(ModelError::Numerical(format!(
                    "moment along the calibration direction is not increasing on [{lo}, {hi}]"
                )));
            }
            previous = value;
        }
        Ok(())
    }

    fn solve(&self, log_target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
        if log_target == 0.0 {
            return Ok(0.0);
        }
        let tol = self.settings.target_tolerance;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            let value = self.log_moment(mid)?;
            let converged_xi = hi - lo <= self.settings.xi_tolerance;
            if (value - log_target).abs() <= 1e-3 * tol || (converged_xi && (value - log_target).abs() <= tol) {
                return Ok(mid);
            }
            if mid == lo || mid == hi {
                break;
            }
            if value < log_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        let residual = (self.log_moment(mid)? - log_target).abs();
        if residual <= tol {
            Ok(mid)
        } else {
            Err(ModelError::Numerical(format!(
                "bisection stalled with relative residual {residual:.3e}"
            )))
        }
    }
}

fn embed(driver: &ProductAffineSpec, block: std::ops::Range<usize>, direction: &[f64]) -> Result<Vec<f64>> {
    if direction.len() != block.len() {
        return Err(ModelError::Parameter(format!(
            "direction has length {} but the block has {} components",
            direction.len(),
            block.len()
        )));
    }
    if direction.iter().any(|d| !(d.is_finite() && *d >= 0.0)) || direction.iter().all(|d| *d == 0.0) {
        return Err(ModelError::Parameter("direction must be nonnegative and nonzero".into()));
    }
    let mut full = vec![0.0; driver.dim()];
    full[block].copy_from_slice(direction);
    Ok(full)
}

fn check_sizes(grid: &TenorGrid, curves: &InitialCurves) -> Result<()> {
    if grid.n() != curves.n() {
        return Err(ModelError::Validation(format!(
            "tenor grid has {} dates but the curves have {} points",
            grid.n(),
            curves.n()
        )));
    }
    Ok(())
}

/// Fits `u_k = ξ_k·direction` (risk-free block, zero spread block) so that
/// `M_0^{u_k} = B(0,T_k)/B(0,T_N)`. Returns `u_1, …, u_N`.
pub fn fit_risk_free(
    driver: &ProductAffineSpec,
    grid: &TenorGrid,
    curves: &InitialCurves,
    direction: &[f64],
    settings: &CalibrationSettings,
) -> Result<Vec<Vec<f64>>> {
    check_sizes(grid, curves)?;
    let n = grid.n();
    let fit = MomentFit {
        driver,
        direction: embed(driver, 0..driver.d1(), direction)?,
        horizon: grid.horizon(),
        x0: driver.initial_state(),
        settings,
    };
    let b_n = curves.risk_free(n);
    let log_targets: Vec<f64> = (1..=n).map(|k| (curves.risk_free(k) / b_n).ln().max(0.0)).collect();
    let largest = log_targets[0];
    let mut xis = vec![0.0; n];
    if largest > 0.0 {
        let hi = fit.bracket(largest, 1.0, 1)?;
        fit.assert_monotone(0.0, hi)?;
        let mut upper = hi;
        for k in 0..n - 1 {
            xis[k] = fit.solve(log_targets[k], 0.0, upper)?;
            upper = xis[k];
        }
    }
    Ok(xis
        .iter()
        .map(|xi| fit.direction.iter().map(|d| xi * d).collect())
        .collect())
}

/// Fits the spread-block parameters `w̄_k = ξ_k·direction` with `ξ_k ≤ 0` so
/// that `M_0^{w̄_k} = B̄(0,T_k)/B(0,T_k)`. Returns `w̄_1, …, w̄_N` as vectors
/// over the spread block.
pub fn fit_spread(
    driver: &ProductAffineSpec,
    grid: &TenorGrid,
    curves: &InitialCurves,
    direction: &[f64],
    settings: &CalibrationSettings,
) -> Result<Vec<Vec<f64>>> {
    check_sizes(grid, curves)?;
    let n = grid.n();
    let d1 = driver.d1();
    let fit = MomentFit {
        driver,
        direction: embed(driver, d1..driver.dim(), direction)?,
        horizon: grid.horizon(),
        x0: driver.initial_state(),
        settings,
    };
    let mut log_targets = Vec::with_capacity(n);
    for k in 1..=n {
        let ratio = curves.defaultable(k) / curves.risk_free(k);
        if ratio > 1.0 + CURVE_SLACK {
            return Err(ModelError::Validation(format!("B̄(0,T_{k})/B(0,T_{k}) = {ratio} exceeds 1")));
        }
        log_targets.push(ratio.ln().min(0.0));
    }
    let smallest = log_targets.iter().copied().fold(0.0, f64::min);
    let mut xis = vec![0.0; n];
    if smallest < 0.0 {
        let lo = fit.bracket(smallest, -1.0, n)?;
        fit.assert_monotone(lo, 0.0)?;
        let mut lower = lo;
        for k in (0..n).rev() {
            xis[k] = fit.solve(log_targets[k], lower, 0.0)?;
            lower = xis[k];
        }
    }
    Ok(xis
        .iter()
        .map(|xi| direction.iter().map(|d| xi * d).collect())
        .collect())
}

/// Combines the fitted sequences into `v_k = (ū_k, w̄_k)` and checks every
/// invariant of a calibrated model.
pub fn assemble(
    driver: &ProductAffineSpec,
    grid: &TenorGrid,
    curves: &InitialCurves,
    u_seq: Vec<Vec<f64>>,
    w_seq: Vec<Vec<f64>>,
    settings: &CalibrationSettings,
) -> Result<CalibratedModel> {
    check_sizes(grid, curves)?;
    let n = grid.n();
    let (d, d1) = (driver.dim(), driver.d1());
    if u_seq.len() != n || w_seq.len() != n {
        return Err(ModelError::Assembly {
            index: 0,
            reason: format!("expected {n} parameters, got {} and {}", u_seq.len(), w_seq.len()),
        });
    }
    let mut v_seq = Vec::with_capacity(n);
    for k in 0..n {
        let fail = |reason: String| ModelError::Assembly { index: k + 1, reason };
        let (u, w) = (&u_seq[k], &w_seq[k]);
        if u.len() != d || w.len() != d - d1 {
            return Err(fail("parameter vector has the wrong length".into()));
        }
        if u[d1..].iter().any(|x| *x != 0.0) {
            return Err(fail("u has a nonzero spread block".into()));
        }
        if w.iter().any(|x| *x > 0.0) {
            return Err(fail("spread parameter is positive".into()));
        }
        let mut v = u[..d1].to_vec();
        v.extend_from_slice(w);
        v_seq.push(v);
    }
    let model = CalibratedModel::from_parts_unchecked(driver.clone(), grid.clone(), curves.clone(), u_seq, w_seq, v_seq);
    if model.u(n).iter().any(|x| *x != 0.0) {
        return Err(ModelError::Assembly {
            index: n,
            reason: "u_N is not zero".into(),
        });
    }
    let x0 = model.initial_state().to_vec();
    let b_n = curves.risk_free(n);
    let tol = 10.0 * settings.target_tolerance;
    for k in 1..=n {
        let fail = |reason: String| ModelError::Assembly { index: k, reason };
        let (u, v) = (model.u(k), model.v(k));
        if k < n {
            if u.iter().zip(model.u(k + 1)).any(|(a, b)| a < b) {
                return Err(fail("u_k < u_{k+1}".into()));
            }
            if v.iter().zip(model.v(k + 1)).any(|(a, b)| a < b) {
                return Err(fail("v_k < v_{k+1}".into()));
            }
        }
        if v.iter().zip(u).any(|(a, b)| a > b) {
            return Err(fail("v_k exceeds u_k".into()));
        }
        let mu = model.martingale(&x0, u, 0.0)?;
        let target_u = curves.risk_free(k) / b_n;
        if (mu / target_u - 1.0).abs() > tol {
            return Err(fail(format!("M_0^(u_k) = {mu} does not reproduce B(0,T_k)/B(0,T_N) = {target_u}")));
        }
        let mv = model.martingale(&x0, v, 0.0)?;
        let target_v = curves.defaultable(k) / b_n;
        if (mv / target_v - 1.0).abs() > tol {
            return Err(fail(format!("M_0^(v_k) = {mv} does not reproduce B̄(0,T_k)/B(0,T_N) = {target_v}")));
        }
    }
    Ok(model)
}

/// Runs both fits and assembles the model.
pub fn calibrate(
    driver: &ProductAffineSpec,
    grid: &TenorGrid,
    curves: &InitialCurves,
    settings: &CalibrationSettings,
) -> Result<CalibratedModel> {
    let rf_dir = settings.risk_free_direction.clone().unwrap_or_else(|| vec![1.0; driver.d1()]);
    let sp_dir = settings.spread_direction.clone().unwrap_or_else(|| vec![1.0; driver.d2()]);
    let u = fit_risk_free(driver, grid, curves, &rf_dir, settings)?;
    let w = fit_spread(driver, grid, curves, &sp_dir, settings)?;
    assemble(driver, grid, curves, u, w, settings)
}

/// Outcome of one of the conditions (C1)–(C4).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionCheck {
    pub violations: Vec<String>,
}

impl ConditionCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Structured report of the model conditions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    /// `u_k` nonincreasing with `u_N = 0`.
    pub c1: ConditionCheck,
    /// `v_k` nonincreasing.
    pub c2: ConditionCheck,
    /// `u_k ≥ v_k`.
    pub c3: ConditionCheck,
    /// `φ_t(v_k) - φ_t(u_k)` and `ψ_t(v_k) - ψ_t(u_k)` nonincreasing in `k`.
    pub c4: ConditionCheck,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.c1.passed() && self.c2.passed() && self.c3.passed() && self.c4.passed()
    }
}

/// Checks conditions (C1)–(C4); (C4) is evaluated at each exponent time in
/// `time_grid`.
pub fn verify_conditions(model: &CalibratedModel, time_grid: &[f64]) -> ConditionReport {
    let n = model.n();
    let mut report = ConditionReport::default();
    let ge = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x >= y);
    for k in 1..n {
        if !ge(model.u(k), model.u(k + 1)) {
            report.c1.violations.push(format!("u_{k} < u_{}", k + 1));
        }
        if !ge(model.v(k), model.v(k + 1)) {
            report.c2.violations.push(format!("v_{k} < v_{}", k + 1));
        }
    }
    if model.u(n).iter().any(|x| *x != 0.0) {
        report.c1.violations.push(format!("u_{n} is not zero"));
    }
    for k in 1..=n {
        if !ge(model.u(k), model.v(k)) {
            report.c3.violations.push(format!("v_{k} exceeds u_{k}"));
        }
    }
    let driver = model.driver();
    for &t in time_grid {
        let mut previous: Option<(f64, Vec<f64>)> = None;
        for k in 1..=n {
            let diff = driver
                .exponents(model.v(k), t)
                .and_then(|ev| driver.exponents(model.u(k), t).map(|eu| (ev, eu)));
            let (ev, eu) = match diff {
                Ok(pair) => pair,
                Err(e) => {
                    report.c4.violations.push(format!("t = {t}, k = {k}: {e}"));
                    continue;
                }
            };
            let dphi = ev.phi - eu.phi;
            let dpsi: Vec<f64> = ev.psi.iter().zip(&eu.psi).map(|(a, b)| a - b).collect();
            if let Some((pphi, ppsi)) = &previous {
                let slack = |a: f64, b: f64| 1e-12 * (1.0 + a.abs() + b.abs());
                if dphi > pphi + slack(dphi, *pphi) {
                    report.c4.violations.push(format!("t = {t}: φ difference increases at k = {k}"));
                }
                if dpsi.iter().zip(ppsi).any(|(a, b)| *a > b + slack(*a, *b)) {
                    report.c4.violations.push(format!("t = {t}: ψ difference increases at k = {k}"));
                }
            }
            previous = Some((dphi, dpsi));
        }
    }
    report
}
