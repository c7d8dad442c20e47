//! JSON experiment configuration.
//!
//! Every field has a default, so `{}` plus a subcommand and a seed is a valid
//! configuration. Unknown keys are rejected. Example:
//!
//! ```json
//! {
//!   "mode": "replicate-table1",
//!   "seed": 42,
//!   "sim": { "noise_sd": 0.1, "n_obs_range": [2, 10] },
//!   "smoother": "auto",
//!   "grid_size": 31,
//!   "n_runs": 100,
//!   "sample_sizes": [100, 200],
//!   "output_dir": "out"
//! }
//! ```
//!
//! `smoother` is either `"auto"` or an object. The object may set the kernel
//! (`"epanechnikov"`, `"quartic"`, `"gaussian"`), the plug-in constants
//! `c_2d`/`c_1d`, and either none or all four of `h_t`, `h_y`, `h_mu`, `h_phi`.

use std::path::{Path, PathBuf};

use fsir_core::replicate::{Bandwidths, ReplicationSettings};
use fsir_core::simulation::SimConfig;
use fsir_core::{BandwidthRule, Kernel1D, Kernel2D, SmootherSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Fit,
    #[value(name = "replicate-table1")]
    #[serde(rename = "replicate-table1")]
    ReplicateTable1,
    RateCheck,
    Link,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Fit => "fit",
            Mode::ReplicateTable1 => "replicate-table1",
            Mode::RateCheck => "rate-check",
            Mode::Link => "link",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Sample size for `simulate`, `fit` and `link` when no input file is given.
    pub n: usize,
    pub noise_sd: f64,
    pub sparse: bool,
    pub n_obs_range: [usize; 2],
    pub fixed_n_obs: Option<usize>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            n: 200,
            noise_sd: 0.1,
            sparse: false,
            n_obs_range: [2, 10],
            fixed_n_obs: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    #[default]
    Epanechnikov,
    Quartic,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmootherOverrides {
    pub kernel: KernelName,
    /// Support radius of the truncated Gaussian.
    pub gaussian_radius: Option<f64>,
    pub c_2d: Option<f64>,
    pub c_1d: Option<f64>,
    pub h_t: Option<f64>,
    pub h_y: Option<f64>,
    pub h_mu: Option<f64>,
    pub h_phi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SmootherConfig {
    Keyword(String),
    Overrides(SmootherOverrides),
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig::Keyword("auto".into())
    }
}

impl SmootherConfig {
    /// Plug-in rule or fixed bandwidths.
    pub fn bandwidths(&self) -> Result<Bandwidths> {
        let o = match self {
            SmootherConfig::Keyword(k) if k == "auto" => return Ok(Bandwidths::Auto(BandwidthRule::default())),
            SmootherConfig::Keyword(k) => {
                return Err(CliError::config(
                    "smoother",
                    format!("expected \"auto\" or an object, got \"{k}\""),
                ))
            }
            SmootherConfig::Overrides(o) => o,
        };
        let kernel = match o.kernel {
            KernelName::Epanechnikov => Kernel1D::EPANECHNIKOV,
            KernelName::Quartic => Kernel1D::QUARTIC,
            KernelName::Gaussian => Kernel1D::gaussian_truncated(o.gaussian_radius.unwrap_or(3.0))?,
        };
        let defaults = BandwidthRule::default();
        let rule = BandwidthRule {
            c_2d: o.c_2d.unwrap_or(defaults.c_2d),
            c_1d: o.c_1d.unwrap_or(defaults.c_1d),
            kernel,
        };
        match (o.h_t, o.h_y, o.h_mu, o.h_phi) {
            (None, None, None, None) => Ok(Bandwidths::Auto(rule)),
            (Some(h_t), Some(h_y), Some(h_mu), Some(h_phi)) => {
                let spec = SmootherSpec {
                    kernel: Kernel2D::product(kernel),
                    h_t,
                    h_y,
                    h_mu,
                    h_phi,
                };
                spec.validate()?;
                Ok(Bandwidths::Fixed(spec))
            }
            _ => Err(CliError::config(
                "smoother",
                "set all four of h_t, h_y, h_mu, h_phi or none of them",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub sim: SimSection,
    pub smoother: SmootherConfig,
    pub grid_size: usize,
    /// Defaults to 0.99 for `rate-check` and 0.95 otherwise.
    pub fve_threshold: Option<f64>,
    /// Extra thresholds reported by `fit`, e.g. `[0.99, 0.95, 0.9]`.
    pub fve_sweep: Vec<f64>,
    pub k: usize,
    pub n_runs: usize,
    /// Defaults to `[100, 200]` for `replicate-table1`, `[100, 200, 400]` for `rate-check`.
    pub sample_sizes: Option<Vec<usize>>,
    /// Out-of-sample paths for the projection correlation.
    pub eval_paths: usize,
    /// Long-format CSV for `fit` and `link`; simulated data is used otherwise.
    pub input: Option<PathBuf>,
    pub interval: [f64; 2],
    /// Points per axis of the `link` probe grid.
    pub probe_grid: usize,
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: None,
            seed: None,
            sim: SimSection::default(),
            smoother: SmootherConfig::default(),
            grid_size: 31,
            fve_threshold: None,
            fve_sweep: Vec::new(),
            k: 1,
            n_runs: 100,
            sample_sizes: None,
            eval_paths: 1000,
            input: None,
            interval: [0.0, 1.0],
            probe_grid: 20,
            workers: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode.ok_or_else(|| CliError::config("mode", "no mode given"))
    }

    pub fn fve(&self) -> f64 {
        self.fve_threshold.unwrap_or(match self.mode {
            Some(Mode::RateCheck) => 0.99,
            _ => 0.95,
        })
    }

    pub fn sample_sizes(&self) -> Vec<usize> {
        self.sample_sizes.clone().unwrap_or_else(|| match self.mode {
            Some(Mode::RateCheck) => vec![100, 200, 400],
            _ => vec![100, 200],
        })
    }

    /// Whether the mode draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        match self.mode {
            Some(Mode::Fit) | Some(Mode::Link) => self.input.is_none(),
            _ => true,
        }
    }

    /// Fills mode-dependent defaults so the echoed configuration is explicit.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.fve_threshold = Some(self.fve());
        if matches!(self.mode, Some(Mode::ReplicateTable1 | Mode::RateCheck)) {
            c.sample_sizes = Some(self.sample_sizes());
        }
        if self.mode == Some(Mode::RateCheck) {
            c.sim.sparse = true;
            c.sim.fixed_n_obs = Some(self.sim.fixed_n_obs.unwrap_or(6));
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        if self.k == 0 {
            return Err(CliError::config("k", "must be at least 1"));
        }
        if mode == Mode::Link && self.k > 2 {
            return Err(CliError::config("k", "the link smoother supports k = 1 or 2"));
        }
        if self.is_stochastic() && self.seed.is_none() {
            return Err(CliError::config(
                "seed",
                format!("mode `{}` needs an explicit seed", mode.name()),
            ));
        }
        let fve = self.fve();
        if !(fve > 0.0 && fve <= 1.0) {
            return Err(CliError::config("fve_threshold", "must lie in (0, 1]"));
        }
        if self.fve_sweep.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(CliError::config("fve_sweep", "thresholds must lie in (0, 1]"));
        }
        if matches!(mode, Mode::ReplicateTable1 | Mode::RateCheck) {
            if self.n_runs < 2 {
                return Err(CliError::config("n_runs", "need at least 2 runs"));
            }
            let sizes = self.sample_sizes();
            if sizes.is_empty() || (mode == Mode::RateCheck && sizes.len() < 2) {
                return Err(CliError::config("sample_sizes", "too few sample sizes"));
            }
            if sizes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::config("sample_sizes", "must be strictly increasing"));
            }
            if self.interval != [0.0, 1.0] {
                return Err(CliError::config("interval", "the simulation study runs on [0, 1]"));
            }
        }
        if self.eval_paths < 2 {
            return Err(CliError::config("eval_paths", "need at least 2 paths"));
        }
        if self.probe_grid < 2 {
            return Err(CliError::config("probe_grid", "need at least 2 points per axis"));
        }
        if self.workers == Some(0) {
            return Err(CliError::config("workers", "must be at least 1"));
        }
        self.smoother.bandwidths()?;
        let mut sim = self.sim_config(self.sim.n, self.sim.sparse, 0);
        if let Some(sizes) = self.sample_sizes.as_ref().filter(|_| mode != Mode::Simulate) {
            sim.n = sizes.iter().copied().min().unwrap_or(sim.n);
        }
        sim.validate()?;
        Ok(())
    }

    pub fn sim_config(&self, n: usize, sparse: bool, seed: u64) -> SimConfig {
        SimConfig {
            n,
            grid_size: self.grid_size,
            t0: self.interval[0],
            t_end: self.interval[1],
            noise_sd: self.sim.noise_sd,
            sparse,
            n_obs_range: (self.sim.n_obs_range[0], self.sim.n_obs_range[1]),
            fixed_n_obs: self.sim.fixed_n_obs,
            seed,
        }
    }

    pub fn replication_settings(&self) -> Result<ReplicationSettings> {
        Ok(ReplicationSettings {
            grid_size: self.grid_size,
            fve_threshold: self.fve(),
            noise_sd: self.sim.noise_sd,
            n_obs_range: (self.sim.n_obs_range[0], self.sim.n_obs_range[1]),
            fixed_n_obs: self.sim.fixed_n_obs,
            bandwidths: self.smoother.bandwidths()?,
            seed: self.seed.unwrap_or(0),
            eval_paths: self.eval_paths,
        })
    }
}
