//! Synthetic single-index data driven by standard Brownian motion.
//!
//! Covariates are Brownian paths on an equally spaced grid over `[t0, t_end]`.
//! The response is `Y = 3 + exp(<beta, X>) + eps` with
//! `beta(t) = √2 sin(3πt/2)` and `eps ~ N(0, noise_sd²)`. A sparse design keeps
//! `N_i` distinct grid points per subject, drawn from every index except 0.
//!
//! # Random streams
//!
//! Every random draw comes from a ChaCha20 generator keyed by
//! `(seed, purpose)` and positioned on stream `subject index`. Subject `i`
//! therefore sees the same numbers whatever `n` is, so a sample of size 100 is
//! a prefix of the sample of size 200 with the same seed. The purposes are
//! disjoint ([`Stream`]), so the path, noise and design draws never overlap.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::data::{LongitudinalDataset, Subject};
use crate::error::{Error, Result};
use crate::grid::{FunctionOnGrid, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Path = 1,
    Noise = 2,
    Design = 3,
}

/// Generator for `(seed, purpose)` positioned at substream `index`.
pub fn substream(seed: u64, purpose: Stream, index: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for replicate `index` of a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(0x5eed)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub grid_size: usize,
    pub t0: f64,
    pub t_end: f64,
    pub noise_sd: f64,
    pub sparse: bool,
    /// Inclusive range of `N_i` for the sparse design.
    pub n_obs_range: (usize, usize),
    /// Overrides `n_obs_range` with the same `N_i` for every subject.
    pub fixed_n_obs: Option<usize>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 100,
            grid_size: 31,
            t0: 0.0,
            t_end: 1.0,
            noise_sd: 0.1,
            sparse: false,
            n_obs_range: (2, 10),
            fixed_n_obs: None,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("n", "need at least 2 subjects"));
        }
        if self.grid_size < 3 {
            return Err(Error::config("grid_size", "need at least 3 grid points"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::config("noise_sd", "must be a nonnegative number"));
        }
        Grid::new(self.t0, self.t_end, self.grid_size)?;
        let available = self.grid_size - 1;
        let (lo, hi) = self.n_obs_range;
        if lo < 1 || lo > hi || hi > available {
            return Err(Error::config(
                "n_obs_range",
                alloc::format!("must satisfy 1 <= min <= max <= {available}"),
            ));
        }
        if let Some(m) = self.fixed_n_obs {
            if m < 1 || m > available {
                return Err(Error::config(
                    "fixed_n_obs",
                    alloc::format!("must lie in 1..={available}"),
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.t0, self.t_end, self.grid_size)
    }
}

/// The single-index model `Y = intercept + exp(<beta, X>) + eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueModel {
    pub beta: FunctionOnGrid,
    pub intercept: f64,
}

impl TrueModel {
    /// `beta(t) = √2 sin(3πt/2)`, intercept 3.
    pub fn standard(grid: Grid) -> TrueModel {
        TrueModel {
            beta: true_beta(grid),
            intercept: 3.0,
        }
    }

    /// `<beta, X>` by the trapezoid rule.
    pub fn index(&self, path: &FunctionOnGrid) -> Result<f64> {
        self.beta.inner(path)
    }

    pub fn mean_response(&self, index: f64) -> f64 {
        self.intercept + libm::exp(index)
    }
}

pub fn true_beta(grid: Grid) -> FunctionOnGrid {
    FunctionOnGrid::from_fn(grid, |t| {
        core::f64::consts::SQRT_2 * libm::sin(1.5 * core::f64::consts::PI * t)
    })
}

/// `n` standard Brownian paths started at 0 on the configured grid.
pub fn simulate_brownian(config: &SimConfig) -> Result<Vec<FunctionOnGrid>> {
    config.validate()?;
    brownian_paths(config.grid()?, config.n, config.seed)
}

pub fn brownian_paths(grid: Grid, n: usize, seed: u64) -> Result<Vec<FunctionOnGrid>> {
    let ts = grid.points();
    let steps: Vec<f64> = ts.windows(2).map(|w| libm::sqrt(w[1] - w[0])).collect();
    (0..n)
        .map(|i| {
            let mut rng = substream(seed, Stream::Path, i as u64);
            let mut x = 0.0;
            let mut values = Vec::with_capacity(ts.len());
            values.push(0.0);
            for sd in &steps {
                let z: f64 = rng.sample(StandardNormal);
                x += sd * z;
                values.push(x);
            }
            FunctionOnGrid::new(grid, values)
        })
        .collect()
}

/// `Y_i = intercept + exp(<beta, X_i>) + eps_i`.
pub fn generate_responses(trajectories: &[FunctionOnGrid], model: &TrueModel, config: &SimConfig) -> Result<Vec<f64>> {
    trajectories
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let mut rng = substream(config.seed, Stream::Noise, i as u64);
            let eps: f64 = rng.sample(StandardNormal);
            Ok(model.mean_response(model.index(path)?) + config.noise_sd * eps)
        })
        .collect()
}

/// Observation design: sparse subjects keep `N_i` distinct grid indices from
/// `1..grid_size`, sorted; complete subjects keep all of them.
pub fn sample_indices(config: &SimConfig, subject: usize) -> Vec<usize> {
    let available = config.grid_size - 1;
    if !config.sparse {
        return (1..=available).collect();
    }
    let mut rng = substream(config.seed, Stream::Design, subject as u64);
    let count = match config.fixed_n_obs {
        Some(m) => m,
        None => rng.random_range(config.n_obs_range.0..=config.n_obs_range.1),
    };
    let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, available, count)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    idx.sort_unstable();
    idx
}

/// Observes each trajectory on its design and attaches the responses.
pub fn sparsify(trajectories: &[FunctionOnGrid], responses: &[f64], config: &SimConfig) -> Result<LongitudinalDataset> {
    config.validate()?;
    if trajectories.len() != responses.len() {
        return Err(Error::InvalidData("one response per trajectory required".into()));
    }
    let grid = config.grid()?;
    let subjects = trajectories
        .iter()
        .zip(responses)
        .enumerate()
        .map(|(i, (path, &y))| {
            if *path.grid() != grid {
                return Err(Error::GridMismatch);
            }
            let idx = sample_indices(config, i);
            Ok(Subject {
                id: (i + 1).to_string(),
                times: idx.iter().map(|&j| grid.point(j)).collect(),
                values: idx.iter().map(|&j| path.values()[j]).collect(),
                response: y,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LongitudinalDataset::new(subjects, (config.t0, config.t_end))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedData {
    pub trajectories: Vec<FunctionOnGrid>,
    pub responses: Vec<f64>,
    pub dataset: LongitudinalDataset,
    pub model: TrueModel,
}

/// Paths, responses and the observed dataset for one configuration.
pub fn simulate(config: &SimConfig) -> Result<SimulatedData> {
    config.validate()?;
    let model = TrueModel::standard(config.grid()?);
    let trajectories = simulate_brownian(config)?;
    let responses = generate_responses(&trajectories, &model, config)?;
    let dataset = sparsify(&trajectories, &responses, config)?;
    Ok(SimulatedData {
        trajectories,
        responses,
        dataset,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_start_at_zero_and_are_reproducible() {
        let cfg = SimConfig {
            n: 20,
            seed: 42,
            ..SimConfig::default()
        };
        let a = simulate_brownian(&cfg).unwrap();
        let b = simulate_brownian(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.values()[0] == 0.0));
        let c = simulate_brownian(&SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_path_gives_intercept_plus_one() {
        let cfg = SimConfig {
            n: 3,
            noise_sd: 0.0,
            ..SimConfig::default()
        };
        let grid = cfg.grid().unwrap();
        let model = TrueModel::standard(grid);
        let zeros = alloc::vec![FunctionOnGrid::zeros(grid); 3];
        let y = generate_responses(&zeros, &model, &cfg).unwrap();
        assert!(y.iter().all(|&v| v == 4.0));
    }

    #[test]
    fn design_rules() {
        let cfg = SimConfig {
            n: 50,
            sparse: true,
            seed: 9,
            ..SimConfig::default()
        };
        for i in 0..50 {
            let idx = sample_indices(&cfg, i);
            assert!((2..=10).contains(&idx.len()));
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
            assert!(idx[0] >= 1 && *idx.last().unwrap() <= 30);
        }
        let full = SimConfig {
            fixed_n_obs: Some(30),
            ..cfg.clone()
        };
        assert_eq!(sample_indices(&full, 3), (1..=30).collect::<Vec<_>>());
        let dense = SimConfig { sparse: false, ..cfg };
        assert_eq!(sample_indices(&dense, 0).len(), 30);
    }

    #[test]
    fn config_validation() {
        let base = SimConfig::default();
        assert!(base.validate().is_ok());
        for bad in [
            SimConfig { n: 1, ..base.clone() },
            SimConfig {
                grid_size: 2,
                ..base.clone()
            },
            SimConfig {
                noise_sd: -1.0,
                ..base.clone()
            },
            SimConfig {
                n_obs_range: (2, 31),
                ..base.clone()
            },
            SimConfig {
                n_obs_range: (0, 3),
                ..base.clone()
            },
            SimConfig {
                fixed_n_obs: Some(31),
                ..base.clone()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::ConfigInvalid { .. })), "{bad:?}");
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
