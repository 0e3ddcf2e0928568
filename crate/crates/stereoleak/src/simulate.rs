//! Monte-Carlo suites for the leakage regression: recovery of planted
//! coefficients with Wald coverage, and false-positive rates under the null.
//!
//! Every replicate draws from its own ChaCha stream of the run seed, so a
//! replicate's data do not depend on how many others ran before it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use stereoleak_core::leakage::{fit_leakage, AssembledDesign, LeakageResult, LeakageSpec, Predictor};
use stereoleak_core::linalg::Matrix;
use stereoleak_core::mixedfx::{DesignMatrix, FitMethod};
use stereoleak_core::Language;

use crate::error::Result;
use crate::results::Versioned;

/// Two-sided 95% normal quantile.
pub const Z_975: f64 = 1.959_963_984_540_054;

const NULL_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub reps: usize,
    pub n_groups: usize,
    pub per_group: usize,
    /// Intercept followed by the EN, RU, ZH, HI coefficients.
    pub planted: [f64; 5],
    pub sigma_u2: f64,
    pub sigma_e2: f64,
    pub alpha: f64,
    pub method: FitMethod,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            reps: 500,
            n_groups: 30,
            per_group: 16,
            planted: [0.0, 0.5, 0.0, 0.3, 0.0],
            sigma_u2: 0.25,
            sigma_e2: 1.0,
            alpha: 0.05,
            method: FitMethod::Reml,
        }
    }
}

pub fn spec(config: &SimConfig) -> LeakageSpec {
    let mut spec = LeakageSpec::new("simulated", Language::ru());
    spec.alpha = config.alpha;
    spec.lmm.method = config.method;
    spec
}

/// Draws one data set from the regression with standard-normal predictors
/// and a random intercept per group.
pub fn draw_design(rng: &mut ChaCha8Rng, config: &SimConfig, beta: &[f64; 5]) -> Result<AssembledDesign> {
    let predictors = spec(config).predictor_list();
    let n = config.n_groups * config.per_group;
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * 5);
    let mut groups = Vec::with_capacity(n);
    for g in 0..config.n_groups {
        let u = config.sigma_u2.sqrt() * rng.sample::<f64, _>(StandardNormal);
        for _ in 0..config.per_group {
            let row = [
                1.0,
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ];
            let e = config.sigma_e2.sqrt() * rng.sample::<f64, _>(StandardNormal);
            y.push(row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + u + e);
            x.extend(row);
            groups.push(format!("g{g:02}"));
        }
    }
    let mut names = vec!["intercept".to_string()];
    names.extend(predictors.iter().map(ToString::to_string));
    let design = DesignMatrix::new(y, Matrix::from_row_major(n, 5, x)?, names, groups, vec![])?;
    Ok(AssembledDesign { design, predictors, n_dropped: 0, dropped_reasons: Default::default() })
}

pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub planted: f64,
    pub mean_estimate: f64,
    /// Share of replicates whose 95% Wald interval covers the planted value.
    pub coverage: f64,
    /// Share of replicates with p < alpha.
    pub rejection_rate: f64,
    /// Share of replicates flagged significant (positive and p < alpha).
    pub flag_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reps: usize,
    pub planted: [f64; 5],
    pub coefficients: Vec<CoefficientSummary>,
    /// Share of replicates with no predictor flagged.
    pub no_flag_rate: f64,
    pub boundary_fits: usize,
}

fn summarize(results: &[LeakageResult], planted: [f64; 5], alpha: f64) -> SuiteReport {
    let reps = results.len();
    let share = |k: usize| k as f64 / reps as f64;
    let names = &results[0].fit.coefficient_names;
    let coefficients = (0..5)
        .map(|j| {
            let est: Vec<f64> = results.iter().map(|r| r.fit.beta[j]).collect();
            let covered = results
                .iter()
                .filter(|r| (r.fit.beta[j] - planted[j]).abs() <= Z_975 * r.fit.se[j])
                .count();
            let rejected = results.iter().filter(|r| r.fit.p_values[j] < alpha).count();
            let flagged = if j == 0 { 0 } else { results.iter().filter(|r| r.per_predictor[j - 1].significant).count() };
            CoefficientSummary {
                name: names[j].clone(),
                planted: planted[j],
                mean_estimate: est.iter().sum::<f64>() / reps as f64,
                coverage: share(covered),
                rejection_rate: share(rejected),
                flag_rate: share(flagged),
            }
        })
        .collect();
    let no_flag = results.iter().filter(|r| r.per_predictor.iter().all(|e| !e.significant)).count();
    let boundary = results.iter().filter(|r| r.fit.metadata.boundary_lower || r.fit.metadata.boundary_upper).count();
    SuiteReport { reps, planted, coefficients, no_flag_rate: share(no_flag), boundary_fits: boundary }
}

fn run_suite(config: &SimConfig, planted: [f64; 5], stream_offset: u64) -> Result<(SuiteReport, Vec<LeakageResult>)> {
    let spec = spec(config);
    let mut results = Vec::with_capacity(config.reps);
    for rep in 0..config.reps {
        let mut rng = replicate_rng(config.seed, stream_offset + rep as u64);
        let design = draw_design(&mut rng, config, &planted)?;
        results.push(fit_leakage(&spec, &design)?);
    }
    if results.is_empty() {
        return Err(crate::error::Error::Config("simulation needs at least one replicate".into()));
    }
    Ok((summarize(&results, planted, config.alpha), results))
}

/// Planted coefficients from the config.
pub fn recovery(config: &SimConfig) -> Result<(SuiteReport, Vec<LeakageResult>)> {
    run_suite(config, config.planted, 0)
}

/// Every coefficient zero; only the random intercept and noise remain.
pub fn null(config: &SimConfig) -> Result<(SuiteReport, Vec<LeakageResult>)> {
    run_suite(config, [0.0; 5], NULL_STREAM_OFFSET)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub config: SimConfig,
    pub recovery: SuiteReport,
    pub null: SuiteReport,
}

impl Versioned for SimulationFile {
    const SCHEMA_KEY: &'static str = "simulation_schema";
}

pub fn run(config: &SimConfig) -> Result<SimulationFile> {
    Ok(SimulationFile { config: config.clone(), recovery: recovery(config)?.0, null: null(config)?.0 })
}

/// Predictor labels in design order.
pub fn predictor_names() -> Vec<String> {
    spec(&SimConfig::default()).predictor_list().iter().map(Predictor::to_string).collect()
}
