//! Monte Carlo accuracy statistics for estimated directions.
//!
//! ISB, IVAR and IMSE use the left-endpoint Riemann sum
//! `Σ_{j=0}^{p-2} g(t_j) (t_{j+1} − t_j)` over the shared grid. With the
//! pointwise mean `b̄ = (1/N) Σ b_i`, the estimators satisfy
//! `IMSE = ISB + IVAR` exactly in exact arithmetic.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{FunctionOnGrid, Grid};

fn left_riemann(grid: &Grid, g: impl Fn(usize) -> f64) -> f64 {
    let t = grid.points();
    (0..t.len() - 1).map(|j| g(j) * (t[j + 1] - t[j])).sum()
}

fn shared_grid(estimates: &[FunctionOnGrid]) -> Result<Grid> {
    let first = estimates.first().ok_or(Error::EmptyEstimateList)?;
    let grid = *first.grid();
    if estimates.iter().any(|e| *e.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(grid)
}

/// Pointwise mean of the estimates.
pub fn mean_curve(estimates: &[FunctionOnGrid]) -> Result<FunctionOnGrid> {
    let grid = shared_grid(estimates)?;
    let n = estimates.len() as f64;
    let mut mean = alloc::vec![0.0; grid.len()];
    for e in estimates {
        for (m, v) in mean.iter_mut().zip(e.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    FunctionOnGrid::new(grid, mean)
}

/// Integrated squared bias of the pointwise mean estimate.
pub fn compute_isb(estimates: &[FunctionOnGrid], truth: &FunctionOnGrid) -> Result<f64> {
    let mean = mean_curve(estimates)?;
    mean.check_grid(truth)?;
    let (m, b) = (mean.values(), truth.values());
    Ok(left_riemann(mean.grid(), |j| (m[j] - b[j]) * (m[j] - b[j])))
}

/// Integrated pointwise variance across the estimates.
pub fn compute_ivar(estimates: &[FunctionOnGrid]) -> Result<f64> {
    let mean = mean_curve(estimates)?;
    let n = estimates.len() as f64;
    let m = mean.values();
    let var: Vec<f64> = (0..m.len())
        .map(|j| {
            estimates
                .iter()
                .map(|e| (e.values()[j] - m[j]) * (e.values()[j] - m[j]))
                .sum::<f64>()
                / n
        })
        .collect();
    Ok(left_riemann(mean.grid(), |j| var[j]))
}

/// Mean over runs of each run's integrated squared error (MISE).
pub fn compute_imse(estimates: &[FunctionOnGrid], truth: &FunctionOnGrid) -> Result<f64> {
    let grid = shared_grid(estimates)?;
    if *truth.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let b = truth.values();
    let total: f64 = estimates
        .iter()
        .map(|e| {
            let v = e.values();
            left_riemann(&grid, |j| (v[j] - b[j]) * (v[j] - b[j]))
        })
        .sum();
    Ok(total / estimates.len() as f64)
}

/// Summary of a batch of Monte Carlo estimates of one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloSummary {
    pub n_runs: usize,
    pub mean_estimate: FunctionOnGrid,
    pub isb: f64,
    pub ivar: f64,
    pub imse: f64,
    pub mean_abs_correlation: f64,
    pub per_run_correlations: Vec<f64>,
}

impl MonteCarloSummary {
    /// Estimates are expected to be sign-aligned (and normalized, if the
    /// comparison calls for it) before they get here.
    pub fn new(estimates: &[FunctionOnGrid], truth: &FunctionOnGrid, correlations: Vec<f64>) -> Result<Self> {
        let mean_abs_correlation = if correlations.is_empty() {
            f64::NAN
        } else {
            correlations.iter().map(|c| c.abs()).sum::<f64>() / correlations.len() as f64
        };
        Ok(MonteCarloSummary {
            n_runs: estimates.len(),
            mean_estimate: mean_curve(estimates)?,
            isb: compute_isb(estimates, truth)?,
            ivar: compute_ivar(estimates)?,
            imse: compute_imse(estimates, truth)?,
            mean_abs_correlation,
            per_run_correlations: correlations,
        })
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    Ok(sab / libm::sqrt(saa * sbb))
}

/// `|corr(<beta, X>, <beta_hat, X>)|` over a sample of trajectories.
pub fn projection_correlation(
    fit_beta: &FunctionOnGrid,
    true_beta: &FunctionOnGrid,
    eval_paths: &[FunctionOnGrid],
) -> Result<f64> {
    if eval_paths.len() < 2 {
        return Err(Error::DegenerateVariance);
    }
    let est = eval_paths
        .iter()
        .map(|x| fit_beta.inner(x))
        .collect::<Result<Vec<_>>>()?;
    let truth = eval_paths
        .iter()
        .map(|x| true_beta.inner(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(pearson(&est, &truth)?.abs().min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRatio {
    pub n_small: usize,
    pub n_large: usize,
    /// `√IVAR(n_small) / √IVAR(n_large)`
    pub ratio: f64,
    /// `√(n_large / n_small)`, the parametric-rate prediction.
    pub expected: f64,
}

/// `√IVAR` ratios between consecutive `(n, IVAR)` entries, in the order given.
pub fn ivar_rate_ratio(ivars: &[(usize, f64)]) -> Result<Vec<RateRatio>> {
    if ivars.len() < 2 {
        return Err(Error::config("sample_sizes", "need at least two sample sizes"));
    }
    ivars
        .windows(2)
        .map(|w| {
            let ((n0, v0), (n1, v1)) = (w[0], w[1]);
            if !(v0 >= 0.0 && v1 > 0.0) {
                return Err(Error::DegenerateVariance);
            }
            Ok(RateRatio {
                n_small: n0,
                n_large: n1,
                ratio: libm::sqrt(v0) / libm::sqrt(v1),
                expected: libm::sqrt(n1 as f64 / n0 as f64),
            })
        })
        .collect()
}
