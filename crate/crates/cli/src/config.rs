//! Configuration file, curve file and model file formats.

use std::path::{Path, PathBuf};

use affine_libor::calibration::{
    assemble, CalibratedModel, CalibrationSettings, ConditionCheck, ConditionReport, InitialCurves, TenorGrid,
};
use affine_libor::quadrature::{QuadratureConfig, QuadratureRule};
use affine_libor::simulation::{HazardInterpolation, Scheme, SimConfig};
use affine_libor::{AffineComponentSpec, ProductAffineSpec};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Parameters of one CIR-with-jumps factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub lambda: f64,
    pub theta: f64,
    pub eta: f64,
    #[serde(default)]
    pub ell: f64,
    #[serde(default)]
    pub mu: f64,
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    pub risk_free: Vec<ComponentConfig>,
    pub spread: Vec<ComponentConfig>,
}

impl DriverConfig {
    pub fn build(&self) -> Result<ProductAffineSpec> {
        let components = self
            .risk_free
            .iter()
            .chain(&self.spread)
            .enumerate()
            .map(|(i, c)| {
                AffineComponentSpec::new(c.lambda, c.theta, c.eta, c.ell, c.mu, c.x0)
                    .with_context(|| format!("driver component {i}"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductAffineSpec::new(components, self.risk_free.len())?)
    }

    pub fn from_driver(driver: &ProductAffineSpec) -> Self {
        let config = |c: &AffineComponentSpec| ComponentConfig {
            lambda: c.lambda,
            theta: c.theta,
            eta: c.eta,
            ell: c.ell,
            mu: c.mu,
            x0: c.x0,
        };
        let (rf, sp) = driver.components().split_at(driver.d1());
        Self {
            risk_free: rf.iter().map(config).collect(),
            spread: sp.iter().map(config).collect(),
        }
    }
}

/// Tenor dates given explicitly or as `n` periods of length `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TenorConfig {
    Dates { dates: Vec<f64> },
    Uniform { n: usize, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub risk_free_direction: Option<Vec<f64>>,
    pub spread_direction: Option<Vec<f64>>,
    pub xi_tolerance: Option<f64>,
    pub target_tolerance: Option<f64>,
}

impl CalibrationConfig {
    pub fn settings(&self) -> CalibrationSettings {
        let defaults = CalibrationSettings::default();
        CalibrationSettings {
            risk_free_direction: self.risk_free_direction.clone(),
            spread_direction: self.spread_direction.clone(),
            xi_tolerance: self.xi_tolerance.unwrap_or(defaults.xi_tolerance),
            target_tolerance: self.target_tolerance.unwrap_or(defaults.target_tolerance),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    EulerFullTruncation,
    ExactCir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationName {
    Linear,
    PiecewiseConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub steps_per_period: usize,
    pub seed: u64,
    pub scheme: SchemeName,
    pub interpolation: InterpolationName,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            n_paths: d.n_paths,
            steps_per_period: d.steps_per_period,
            seed: d.seed,
            scheme: SchemeName::EulerFullTruncation,
            interpolation: InterpolationName::Linear,
        }
    }
}

impl SimulationConfig {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_paths: self.n_paths,
            steps_per_period: self.steps_per_period,
            seed: self.seed,
            scheme: match self.scheme {
                SchemeName::EulerFullTruncation => Scheme::EulerFullTruncation,
                SchemeName::ExactCir => Scheme::ExactCir,
            },
            interpolation: match self.interpolation {
                InterpolationName::Linear => HazardInterpolation::Linear,
                InterpolationName::PiecewiseConstant => HazardInterpolation::PiecewiseConstant,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Trapezoid,
    GaussLegendre,
    TanhSinh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSettings {
    pub truncation: f64,
    pub nodes: usize,
    pub rule: RuleName,
    pub tail_tolerance: f64,
}

impl QuadratureSettings {
    fn config(&self) -> QuadratureConfig {
        QuadratureConfig {
            truncation: self.truncation,
            nodes: self.nodes,
            rule: match self.rule {
                RuleName::Trapezoid => QuadratureRule::Trapezoid,
                RuleName::GaussLegendre => QuadratureRule::GaussLegendre,
                RuleName::TanhSinh => QuadratureRule::TanhSinh,
            },
            tail_tolerance: self.tail_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PricingConfig {
    pub damping_1d: f64,
    pub damping_2d: [f64; 2],
    pub quadrature_1d: Option<QuadratureSettings>,
    pub quadrature_2d: Option<QuadratureSettings>,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            damping_1d: 1.5,
            damping_2d: [-1.5, -1.5],
            quadrature_1d: None,
            quadrature_2d: None,
        }
    }
}

impl PricingConfig {
    pub fn quadrature_1d(&self) -> QuadratureConfig {
        self.quadrature_1d.map_or_else(QuadratureConfig::default_1d, |q| q.config())
    }

    pub fn quadrature_2d(&self) -> QuadratureConfig {
        self.quadrature_2d.map_or_else(QuadratureConfig::default_2d, |q| q.config())
    }
}

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub driver: DriverConfig,
    /// Optional; when present it must agree with the dates of the curve file.
    #[serde(default)]
    pub tenor: Option<TenorConfig>,
    /// Curve file, relative to the configuration file.
    pub curves: PathBuf,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub pricing: PricingConfig,
}

/// Configuration together with the directory its relative paths refer to.
pub struct LoadedConfig {
    pub config: ModelConfig,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let config: ModelConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base })
    }

    pub fn curve_path(&self) -> PathBuf {
        self.base.join(&self.config.curves)
    }

    /// Reads the curve file and checks it against the tenor block.
    pub fn grid_and_curves(&self) -> Result<(TenorGrid, InitialCurves)> {
        let path = self.curve_path();
        let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let (dates, curves) = parse_curves(&text).with_context(|| format!("curve file {}", path.display()))?;
        if let Some(tenor) = &self.config.tenor {
            let expected = match tenor {
                TenorConfig::Dates { dates } => dates.clone(),
                TenorConfig::Uniform { n, delta } => (1..=*n).map(|k| k as f64 * delta).collect(),
            };
            let matches = expected.len() == dates.len()
                && expected.iter().zip(&dates).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            if !matches {
                bail!("tenor block {expected:?} does not match the curve file dates {dates:?}");
            }
        }
        Ok((TenorGrid::new(dates)?, curves))
    }
}

pub const CURVE_HEADER: [&str; 3] = ["tenor_date", "riskfree_bond", "defaultable_bond"];

/// Parses `tenor_date,riskfree_bond,defaultable_bond` rows.
pub fn parse_curves(text: &str) -> Result<(Vec<f64>, InitialCurves)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CURVE_HEADER {
        bail!("line 1: expected header {}, found {}", CURVE_HEADER.join(","), header.join(","));
    }
    let (mut dates, mut rf, mut df) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            bail!("line {line}: expected 3 fields, found {}", record.len());
        }
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| anyhow::anyhow!("line {line}: {} '{}' is not a finite number", CURVE_HEADER[i], &record[i]))
        };
        let (date, b, bb) = (field(0)?, field(1)?, field(2)?);
        if let Some(previous) = dates.last() {
            if date <= *previous {
                bail!("line {line}: tenor_date {date} is not after the previous date {previous}; rows must be sorted");
            }
        }
        dates.push(date);
        rf.push(b);
        df.push(bb);
    }
    if dates.is_empty() {
        bail!("no curve rows");
    }
    let curves = InitialCurves::new(rf, df)?;
    Ok((dates, curves))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesRecord {
    pub risk_free: Vec<f64>,
    pub defaultable: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub passed: bool,
    pub violations: Vec<String>,
}

impl From<&ConditionCheck> for CheckRecord {
    fn from(check: &ConditionCheck) -> Self {
        Self {
            passed: check.passed(),
            violations: check.violations.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsRecord {
    pub c1: CheckRecord,
    pub c2: CheckRecord,
    pub c3: CheckRecord,
    pub c4: CheckRecord,
}

impl From<&ConditionReport> for ConditionsRecord {
    fn from(report: &ConditionReport) -> Self {
        Self {
            c1: (&report.c1).into(),
            c2: (&report.c2).into(),
            c3: (&report.c3).into(),
            c4: (&report.c4).into(),
        }
    }
}

/// Serialized calibrated model with its condition report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub driver: DriverConfig,
    pub tenor_dates: Vec<f64>,
    pub curves: CurvesRecord,
    /// `u_1, …, u_N` over all components.
    pub u: Vec<Vec<f64>>,
    /// `w̄_1, …, w̄_N` over the spread block.
    pub w: Vec<Vec<f64>>,
    /// `v_k = (ū_k, w̄_k)`.
    pub v: Vec<Vec<f64>>,
    pub conditions: ConditionsRecord,
}

impl ModelFile {
    pub fn from_model(model: &CalibratedModel, report: &ConditionReport) -> Self {
        Self {
            driver: DriverConfig::from_driver(model.driver()),
            tenor_dates: model.grid().dates().to_vec(),
            curves: CurvesRecord {
                risk_free: model.curves().risk_free_curve().to_vec(),
                defaultable: model.curves().defaultable_curve().to_vec(),
            },
            u: model.u_sequence().to_vec(),
            w: model.w_sequence().to_vec(),
            v: model.v_sequence().to_vec(),
            conditions: report.into(),
        }
    }

    /// Rebuilds the model; the stored sequences are re-verified against the curves.
    pub fn to_model(&self) -> Result<CalibratedModel> {
        let driver = self.driver.build()?;
        let grid = TenorGrid::new(self.tenor_dates.clone())?;
        let curves = InitialCurves::new(self.curves.risk_free.clone(), self.curves.defaultable.clone())?;
        let model = assemble(&driver, &grid, &curves, self.u.clone(), self.w.clone(), &CalibrationSettings::default())?;
        if model.v_sequence() != self.v.as_slice() {
            bail!("stored v sequence differs from (ū_k, w̄_k)");
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<CalibratedModel> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        file.to_model().with_context(|| format!("model file {}", path.display()))
    }
}
