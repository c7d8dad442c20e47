//! One Monte Carlo replicate of the simulation study, and the reduction of
//! many replicates into accuracy summaries.
//!
//! Replicate `r` draws its data from `derive_seed(seed, r)`, independently of
//! the sample size and of the design. A sparse and a complete replicate with
//! the same index therefore observe the same underlying paths, and the first
//! 100 subjects of an `n = 200` replicate are the `n = 100` replicate.

use alloc::vec::Vec;

use crate::edr::{fit, sign_align};
use crate::error::{Error, Result};
use crate::grid::FunctionOnGrid;
use crate::kernels::{BandwidthRule, SmootherSpec};
use crate::metrics::{projection_correlation, MonteCarloSummary};
use crate::simulation::{brownian_paths, derive_seed, simulate, true_beta, SimConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DataType {
    Complete,
    Sparse,
}

impl DataType {
    pub fn label(self) -> &'static str {
        match self {
            DataType::Complete => "Complete",
            DataType::Sparse => "Sparse",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidths {
    /// Resolve the plug-in rule on every replicate's data.
    Auto(BandwidthRule),
    /// Use the same bandwidths everywhere.
    Fixed(SmootherSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationSettings {
    pub grid_size: usize,
    pub fve_threshold: f64,
    pub noise_sd: f64,
    pub n_obs_range: (usize, usize),
    pub fixed_n_obs: Option<usize>,
    pub bandwidths: Bandwidths,
    pub seed: u64,
    /// Size of the out-of-sample path set used for the projection correlation.
    pub eval_paths: usize,
}

impl Default for ReplicationSettings {
    fn default() -> Self {
        ReplicationSettings {
            grid_size: 31,
            fve_threshold: 0.95,
            noise_sd: 0.1,
            n_obs_range: (2, 10),
            fixed_n_obs: None,
            bandwidths: Bandwidths::Auto(BandwidthRule::default()),
            seed: 0,
            eval_paths: 1000,
        }
    }
}

/// Seed index reserved for the evaluation paths; replicate indices never reach it.
const EVAL_STREAM: u64 = u64::MAX;

impl ReplicationSettings {
    pub fn sim_config(&self, n: usize, data_type: DataType, run: usize) -> SimConfig {
        SimConfig {
            n,
            grid_size: self.grid_size,
            noise_sd: self.noise_sd,
            sparse: data_type == DataType::Sparse,
            n_obs_range: self.n_obs_range,
            fixed_n_obs: self.fixed_n_obs,
            seed: derive_seed(self.seed, run as u64),
            ..SimConfig::default()
        }
    }

    /// Fresh dense paths, independent of every replicate, for the correlation metric.
    pub fn evaluation_paths(&self) -> Result<Vec<FunctionOnGrid>> {
        let cfg = SimConfig {
            n: self.eval_paths.max(2),
            grid_size: self.grid_size,
            ..SimConfig::default()
        };
        brownian_paths(cfg.grid()?, cfg.n, derive_seed(self.seed, EVAL_STREAM))
    }

    /// Bandwidths the replicate at `(n, data_type, run)` would use.
    pub fn resolve_spec(&self, n: usize, data_type: DataType, run: usize) -> Result<SmootherSpec> {
        match self.bandwidths {
            Bandwidths::Fixed(spec) => Ok(spec),
            Bandwidths::Auto(rule) => rule.resolve(&simulate(&self.sim_config(n, data_type, run))?.dataset),
        }
    }
}

/// What one replicate contributes to the summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    /// `beta_hat`, sign-aligned with the true `beta` and scaled to unit L2 norm.
    pub beta: FunctionOnGrid,
    /// Standardized direction, sign-aligned with the true `beta`.
    pub eta: FunctionOnGrid,
    pub correlation: f64,
    pub spec: SmootherSpec,
    pub retained_rank: usize,
    pub eigenvalue: f64,
}

/// Simulates, fits a single direction, aligns it and scores it.
pub fn run_once(
    settings: &ReplicationSettings,
    n: usize,
    data_type: DataType,
    run: usize,
    eval_paths: &[FunctionOnGrid],
) -> Result<RunOutcome> {
    let cfg = settings.sim_config(n, data_type, run);
    let sim = simulate(&cfg)?;
    let spec = match settings.bandwidths {
        Bandwidths::Fixed(spec) => spec,
        Bandwidths::Auto(rule) => rule.resolve(&sim.dataset)?,
    };
    let grid = cfg.grid()?;
    let fitted = fit(&sim.dataset, &spec, &grid, settings.fve_threshold, 1)?;
    let truth = &sim.model.beta;
    let aligned = sign_align(&fitted, truth, 0)?;
    let beta = aligned.normalized_beta(0);
    let eta = aligned.eta[0].clone();
    let correlation = projection_correlation(&beta, truth, eval_paths)?;
    Ok(RunOutcome {
        run,
        beta,
        eta,
        correlation,
        spec,
        retained_rank: aligned.retained_rank,
        eigenvalue: aligned.eigenvalues[0],
    })
}

/// Accuracy summaries for one `(n, data type)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSummary {
    pub n: usize,
    pub data_type: DataType,
    /// Metrics for the normalized `beta_hat` against the true `beta`.
    pub beta: MonteCarloSummary,
    /// Metrics for `eta_hat`; its truth is the normalized `beta`, which is
    /// proportional to `Γ^{1/2} beta` here because `beta` is an eigenfunction of
    /// the Brownian covariance.
    pub eta: MonteCarloSummary,
}

/// Reduces outcomes in the order given.
pub fn summarize(n: usize, data_type: DataType, outcomes: &[RunOutcome], grid_size: usize) -> Result<DesignSummary> {
    if outcomes.is_empty() {
        return Err(Error::EmptyEstimateList);
    }
    let grid = crate::grid::Grid::unit(grid_size)?;
    let truth = true_beta(grid);
    let betas: Vec<FunctionOnGrid> = outcomes.iter().map(|o| o.beta.clone()).collect();
    let etas: Vec<FunctionOnGrid> = outcomes.iter().map(|o| o.eta.clone()).collect();
    let correlations: Vec<f64> = outcomes.iter().map(|o| o.correlation).collect();
    Ok(DesignSummary {
        n,
        data_type,
        beta: MonteCarloSummary::new(&betas, &truth, correlations.clone())?,
        eta: MonteCarloSummary::new(&etas, &truth.normalized(), correlations)?,
    })
}
