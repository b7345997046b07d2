//! Command implementations.

use std::collections::BTreeMap;
use std::path::Path;

use affine_libor::calibration::{calibrate, verify_conditions, CalibratedModel};
use affine_libor::pricing::{bond_option_price, cds_spread, vulnerable_option_price, DampingVector};
use affine_libor::simulation::{
    empirical_survival, martingale_table, mc_mean, mc_price_bond_option, mc_price_cds, mc_price_vulnerable_option,
    simulate, PathBundle, PriceEstimate, PricingMethod, SimConfig,
};
use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use crate::config::{LoadedConfig, ModelFile, PricingConfig, SimulationConfig};
use crate::output::{emit, number, to_json, CsvTable};
use crate::{Cli, Command, Instrument, Method, ModelArgs, PriceArgs, SimulateArgs};

struct Session {
    config: Option<LoadedConfig>,
    seed: Option<u64>,
}

impl Session {
    fn config(&self) -> Result<&LoadedConfig> {
        self.config.as_ref().ok_or_else(|| anyhow!("--config is required for this command"))
    }

    fn pricing(&self) -> PricingConfig {
        self.config.as_ref().map(|c| c.config.pricing.clone()).unwrap_or_default()
    }

    fn sim_config(&self, paths: Option<usize>) -> SimConfig {
        let mut config = self
            .config
            .as_ref()
            .map(|c| c.config.simulation.clone())
            .unwrap_or_else(SimulationConfig::default)
            .sim_config();
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(paths) = paths {
            config.n_paths = paths;
        }
        config
    }

    fn calibrated(&self) -> Result<CalibratedModel> {
        let loaded = self.config()?;
        let (grid, curves) = loaded.grid_and_curves()?;
        let driver = loaded.config.driver.build()?;
        Ok(calibrate(&driver, &grid, &curves, &loaded.config.calibration.settings())?)
    }

    fn model(&self, args: &ModelArgs) -> Result<CalibratedModel> {
        match &args.model {
            Some(path) => ModelFile::load(path),
            None => self.calibrated(),
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref().map(LoadedConfig::load).transpose()?;
    let ctx = Session { config, seed: cli.seed };
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Calibrate => cmd_calibrate(&ctx, out),
        Command::Price(args) => cmd_price(&ctx, args, out),
        Command::Simulate(args) => cmd_simulate(&ctx, args, out),
        Command::Curves(args) => cmd_curves(&ctx, args, out),
    }
}

/// Times at which the (C4) exponent ordering is checked: every tenor date.
fn condition_times(model: &CalibratedModel) -> Vec<f64> {
    (0..=model.n()).map(|k| model.grid().date(k)).collect()
}

fn cmd_calibrate(ctx: &Session, out: Option<&Path>) -> Result<()> {
    let model = ctx.calibrated()?;
    let report = verify_conditions(&model, &condition_times(&model));
    emit(&to_json(&ModelFile::from_model(&model, &report))?, out)
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(untagged)]
enum Parameter {
    Index(usize),
    Value(f64),
}

#[derive(Debug, Clone, Serialize)]
struct Quote {
    method: &'static str,
    price: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature_error: Option<f64>,
}

impl From<PriceEstimate> for Quote {
    fn from(estimate: PriceEstimate) -> Self {
        Self {
            method: match estimate.method {
                PricingMethod::ClosedForm => "closed-form",
                PricingMethod::Fourier => "fourier",
                PricingMethod::MonteCarlo => "monte-carlo",
            },
            price: estimate.value,
            standard_error: estimate.std_error,
            quadrature_error: estimate.quadrature_error,
        }
    }
}

#[derive(Debug, Serialize)]
struct PriceReport {
    instrument: &'static str,
    parameters: BTreeMap<&'static str, Parameter>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    single: Option<Quote>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic: Option<Quote>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<Quote>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_score: Option<f64>,
}

fn z_score(analytic: &PriceEstimate, mc: &PriceEstimate) -> f64 {
    let diff = mc.value - analytic.value;
    let se = mc.std_error.unwrap_or(0.0);
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

fn cmd_price(ctx: &Session, args: &PriceArgs, out: Option<&Path>) -> Result<()> {
    let model = ctx.model(&args.model)?;
    let pricing = ctx.pricing();
    let needs_mc = args.method != Method::Analytic;
    let bundle = if needs_mc { Some(run_simulation(&model, &ctx.sim_config(args.paths))?) } else { None };
    let bundle = bundle.as_ref();
    use Parameter::{Index, Value};
    let (instrument, parameters, analytic, mc): (&'static str, Vec<(&'static str, Parameter)>, _, _) = match args.instrument {
        Instrument::Cds { maturity, recovery, coupon } => {
            let analytic = || -> Result<PriceEstimate> {
                Ok(PriceEstimate::closed_form(cds_spread(&model, maturity, recovery, coupon)?))
            };
            let mc = |b: &PathBundle| -> Result<PriceEstimate> { Ok(mc_price_cds(&model, b, maturity, recovery, coupon)?.spread) };
            (
                "cds",
                vec![("maturity", Index(maturity)), ("recovery", Value(recovery)), ("coupon", Value(coupon))],
                if args.method != Method::Mc { Some(analytic()?) } else { None },
                bundle.map(mc).transpose()?,
            )
        }
        Instrument::BondOption { exercise, maturity, strike, recovery } => {
            let damping = DampingVector::two(pricing.damping_2d[0], pricing.damping_2d[1]);
            let quad = pricing.quadrature_2d();
            let analytic = || bond_option_price(&model, exercise, maturity, strike, recovery, &damping, &quad);
            let mc = |b: &PathBundle| mc_price_bond_option(&model, b, exercise, maturity, strike, recovery);
            (
                "bond-option",
                vec![
                    ("exercise", Index(exercise)),
                    ("maturity", Index(maturity)),
                    ("strike", Value(strike)),
                    ("recovery", Value(recovery)),
                ],
                if args.method != Method::Mc { Some(analytic()?) } else { None },
                bundle.map(mc).transpose()?,
            )
        }
        Instrument::Vulnerable { exercise, maturity, strike, recovery } => {
            let damping = DampingVector::one(pricing.damping_1d);
            let quad = pricing.quadrature_1d();
            let analytic = || vulnerable_option_price(&model, exercise, maturity, strike, recovery, &damping, &quad);
            let mc = |b: &PathBundle| mc_price_vulnerable_option(&model, b, exercise, maturity, strike, recovery);
            (
                "vulnerable",
                vec![
                    ("exercise", Index(exercise)),
                    ("maturity", Index(maturity)),
                    ("strike", Value(strike)),
                    ("recovery", Value(recovery)),
                ],
                if args.method != Method::Mc { Some(analytic()?) } else { None },
                bundle.map(mc).transpose()?,
            )
        }
    };
    let mut report = PriceReport {
        instrument,
        parameters: parameters.into_iter().collect(),
        single: None,
        analytic: None,
        monte_carlo: None,
        z_score: None,
    };
    match (args.method, analytic, mc) {
        (Method::Both, Some(a), Some(m)) => {
            report.z_score = Some(z_score(&a, &m));
            report.analytic = Some(a.into());
            report.monte_carlo = Some(m.into());
        }
        (_, Some(estimate), None) | (_, None, Some(estimate)) => report.single = Some(estimate.into()),
        _ => unreachable!("the method selects at least one pricer"),
    }
    emit(&to_json(&report)?, out)
}

fn run_simulation(model: &CalibratedModel, config: &SimConfig) -> Result<PathBundle> {
    simulate(model, config).context("simulation")
}

#[derive(Debug, Serialize)]
struct SurvivalRow {
    tenor_index: usize,
    tenor_date: f64,
    empirical: f64,
    standard_error: f64,
    model: f64,
    z_score: f64,
}

#[derive(Debug, Serialize)]
struct MeanRow {
    tenor_index: usize,
    mean: f64,
    standard_error: f64,
    z_score: f64,
}

#[derive(Debug, Serialize)]
struct MartingaleRow {
    k: usize,
    initial: f64,
    means: Vec<MeanRow>,
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    n_paths: usize,
    steps_per_period: usize,
    seed: u64,
    hazard_decreases: usize,
    survival: Vec<SurvivalRow>,
    martingales: Vec<MartingaleRow>,
}

fn standardized(value: f64, target: f64, se: f64) -> f64 {
    if value == target {
        0.0
    } else {
        (value - target) / se
    }
}

fn cmd_simulate(ctx: &Session, args: &SimulateArgs, out: Option<&Path>) -> Result<()> {
    let model = ctx.model(&args.model)?;
    let config = ctx.sim_config(args.paths);
    let bundle = run_simulation(&model, &config)?;
    let n = model.n();
    let survival = (1..=n)
        .map(|k| -> Result<SurvivalRow> {
            let e = empirical_survival(&bundle, k);
            let target = model.terminal_survival_probability(k)?;
            let se = e.std_error.unwrap_or(0.0);
            Ok(SurvivalRow {
                tenor_index: k,
                tenor_date: model.grid().date(k),
                empirical: e.value,
                standard_error: se,
                model: target,
                z_score: standardized(e.value, target, se),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let martingales = (1..=n)
        .map(|k| -> Result<MartingaleRow> {
            let table = martingale_table(&model, model.u(k))?;
            let initial = table[0].value(model.initial_state());
            let means = (1..=n)
                .map(|j| {
                    let e = mc_mean(&bundle, |p| table[j].value(p.state(j)));
                    let se = e.std_error.unwrap_or(0.0);
                    MeanRow { tenor_index: j, mean: e.value, standard_error: se, z_score: standardized(e.value, initial, se) }
                })
                .collect();
            Ok(MartingaleRow { k, initial, means })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = SimulationReport {
        n_paths: config.n_paths,
        steps_per_period: config.steps_per_period,
        seed: config.seed,
        hazard_decreases: bundle.hazard_decreases(),
        survival,
        martingales,
    };
    if let Some(path) = &args.dump_paths {
        emit(&paths_csv(&bundle)?, Some(path))?;
    }
    emit(&to_json(&report)?, out)
}

/// `path_id,tenor_index,state_0..state_{d-1},gamma,tau`.
fn paths_csv(bundle: &PathBundle) -> Result<String> {
    let mut header = vec!["path_id".to_string(), "tenor_index".to_string()];
    header.extend((0..bundle.dim()).map(|j| format!("state_{j}")));
    header.extend(["gamma".to_string(), "tau".to_string()]);
    let mut table = CsvTable::new(&header)?;
    for p in 0..bundle.n_paths() {
        let path = bundle.path(p);
        let tau = number(path.default_time());
        for k in 0..bundle.n_dates() {
            let mut row = vec![p.to_string(), k.to_string()];
            row.extend(path.state(k).iter().map(|x| number(*x)));
            row.push(number(path.hazard(k)));
            row.push(tau.clone());
            table.row(&row)?;
        }
    }
    table.finish()
}

/// `tenor_date,L0,Lbar0,H0,S0,survival` for `k = 1…N-1`, where `survival`
/// is `B̄(0,T_k)/B(0,T_k)`.
fn cmd_curves(ctx: &Session, args: &ModelArgs, out: Option<&Path>) -> Result<()> {
    let model = ctx.model(args)?;
    let header: Vec<String> =
        ["tenor_date", "L0", "Lbar0", "H0", "S0", "survival"].iter().map(|s| s.to_string()).collect();
    let mut table = CsvTable::new(&header)?;
    let x0 = model.initial_state();
    for k in 1..model.n() {
        let row = [
            model.grid().date(k),
            model.libor(x0, 0.0, k)?,
            model.defaultable_libor(x0, 0.0, k)?,
            model.default_intensity(x0, 0.0, k)?,
            model.spread(x0, 0.0, k)?,
            model.survival_process(x0, 0.0, k - 1)?,
        ];
        table.row(&row.iter().map(|v| number(*v)).collect::<Vec<_>>())?;
    }
    emit(&table.finish()?, out)
}
