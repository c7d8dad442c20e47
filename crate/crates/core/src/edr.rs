//! End-to-end estimation of the e.d.r. directions.

use alloc::vec::Vec;

use crate::data::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::grid::{FunctionOnGrid, Grid};
use crate::kernels::SmootherSpec;
use crate::linalg::symmetric_eigen;
use crate::operators::{estimate_gamma, estimate_gamma_e, regularized_inv_sqrt, OperatorMatrix};
use crate::smoother::SmoothDiagnostics;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitDiagnostics {
    /// Mean and cross-product smoothing behind `Γ̂`.
    pub gamma_smoothing: SmoothDiagnostics,
    /// Inverse-regression surface smoothing behind `Γ̂_e`.
    pub gamma_e_smoothing: SmoothDiagnostics,
    /// `λ_1 / λ_L` of the retained part of `Γ̂`.
    pub gamma_condition: f64,
    /// Cumulative fraction of the positive spectrum of `M̂` explained by the
    /// first `j + 1` eigenvalues; a guide for choosing `k`.
    pub m_fve: Vec<f64>,
}

/// Estimated e.d.r. directions.
///
/// `eta[j]` are the standardized directions (eigenfunctions of
/// `M̂ = Γ̂^{-1/2} Γ̂_e Γ̂^{-1/2}`) and `beta[j] = Γ̂^{-1/2} eta[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdrFit {
    pub k: usize,
    /// Leading `k` eigenvalues of `M̂`.
    pub eigenvalues: Vec<f64>,
    /// Full spectrum of `M̂`, descending.
    pub m_eigenvalues: Vec<f64>,
    pub eta: Vec<FunctionOnGrid>,
    pub beta: Vec<FunctionOnGrid>,
    pub retained_rank: usize,
    /// Achieved fraction of variance explained by the retained components of `Γ̂`.
    pub fve: f64,
    pub fve_threshold: f64,
    pub spec: Option<SmootherSpec>,
    pub gamma: OperatorMatrix,
    pub gamma_e: OperatorMatrix,
    pub inv_sqrt: OperatorMatrix,
    pub diagnostics: FitDiagnostics,
}

impl EdrFit {
    pub fn grid(&self) -> &Grid {
        self.gamma.grid()
    }

    /// `beta[j]` rescaled to unit L2 norm.
    pub fn normalized_beta(&self, j: usize) -> FunctionOnGrid {
        self.beta[j].normalized()
    }

    /// `max |<eta_i, eta_j> − δ_ij|` under the grid's Riemann inner product.
    pub fn eta_orthonormality_error(&self) -> f64 {
        let g = self.grid();
        let mut worst: f64 = 0.0;
        for (i, a) in self.eta.iter().enumerate() {
            for (j, b) in self.eta.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.riemann_inner(a.values(), b.values()) - target).abs());
            }
        }
        worst
    }

    /// `max |<beta_i, Γ̂ beta_j> − δ_ij|`.
    pub fn beta_gamma_orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.beta.iter().enumerate() {
            for (j, b) in self.beta.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                let form = self.gamma.quadratic_form(a, b).unwrap_or(f64::NAN);
                worst = worst.max((form - target).abs());
            }
        }
        worst
    }
}

fn validate_request(fve_threshold: f64, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    if !(fve_threshold > 0.0 && fve_threshold <= 1.0) {
        return Err(Error::config("fve_threshold", "must lie in (0, 1]"));
    }
    Ok(())
}

/// Estimates `k` e.d.r. directions from sparse longitudinal data.
pub fn fit(
    data: &LongitudinalDataset,
    spec: &SmootherSpec,
    grid: &Grid,
    fve_threshold: f64,
    k: usize,
) -> Result<EdrFit> {
    validate_request(fve_threshold, k)?;
    spec.validate()?;
    if data.n_subjects() < 2 {
        return Err(Error::InvalidData(
            "covariance estimation needs at least 2 subjects".into(),
        ));
    }
    let gamma = estimate_gamma(data, spec, grid)?;
    let gamma_e = estimate_gamma_e(data, spec, grid)?;
    let mut fit = fit_operators(gamma.operator, gamma_e.operator, fve_threshold, k)?;
    fit.spec = Some(*spec);
    fit.diagnostics.gamma_smoothing = gamma.diagnostics;
    fit.diagnostics.gamma_e_smoothing = gamma_e.diagnostics;
    Ok(fit)
}

/// Eigen-analysis step alone, from already discretized `Γ̂` and `Γ̂_e`.
pub fn fit_operators(gamma: OperatorMatrix, gamma_e: OperatorMatrix, fve_threshold: f64, k: usize) -> Result<EdrFit> {
    validate_request(fve_threshold, k)?;
    if gamma.grid() != gamma_e.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *gamma.grid();
    let dt = grid.spacing();
    let (inv_sqrt, spectrum) = regularized_inv_sqrt(&gamma, fve_threshold)?;
    if k > spectrum.retained_rank {
        return Err(Error::RankTooSmall {
            requested: k,
            retained: spectrum.retained_rank,
        });
    }

    let r = inv_sqrt.action();
    let m = r.matmul(&gamma_e.action()).matmul(&r).symmetrized();
    let eig = symmetric_eigen(&m);

    let scale = 1.0 / libm::sqrt(dt);
    let mut eta = Vec::with_capacity(k);
    let mut beta = Vec::with_capacity(k);
    for j in 0..k {
        let e: Vec<f64> = eig.vector(j).iter().map(|v| v * scale).collect();
        let b = r.matvec(&e);
        eta.push(FunctionOnGrid::new(grid, e)?);
        beta.push(FunctionOnGrid::new(grid, b)?);
    }

    let positive: f64 = eig.values.iter().filter(|v| **v > 0.0).sum();
    let mut cum = 0.0;
    let m_fve = eig
        .values
        .iter()
        .map(|v| {
            cum += v.max(0.0);
            if positive > 0.0 {
                cum / positive
            } else {
                0.0
            }
        })
        .collect();

    Ok(EdrFit {
        k,
        eigenvalues: eig.values[..k].to_vec(),
        m_eigenvalues: eig.values,
        eta,
        beta,
        retained_rank: spectrum.retained_rank,
        fve: spectrum.fve,
        fve_threshold,
        spec: None,
        diagnostics: FitDiagnostics {
            gamma_condition: spectrum.condition_number(),
            m_fve,
            ..FitDiagnostics::default()
        },
        gamma,
        gamma_e,
        inv_sqrt,
    })
}

/// Indices `<beta_j, X>` for one trajectory, by trapezoid quadrature.
pub fn project(fit: &EdrFit, trajectory: &FunctionOnGrid) -> Result<Vec<f64>> {
    fit.beta.iter().map(|b| b.inner(trajectory)).collect()
}

/// Flips `beta[j]` and `eta[j]` together so that `<beta[j], reference> ≥ 0`.
/// An exactly orthogonal direction is left as is.
pub fn sign_align(fit: &EdrFit, reference: &FunctionOnGrid, j: usize) -> Result<EdrFit> {
    if j >= fit.k {
        return Err(Error::config("j", "direction index out of range"));
    }
    let mut out = fit.clone();
    if fit.beta[j].inner(reference)? < 0.0 {
        out.beta[j] = fit.beta[j].scaled(-1.0);
        out.eta[j] = fit.eta[j].scaled(-1.0);
    }
    Ok(out)
}
