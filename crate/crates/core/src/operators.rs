//! Discretized covariance operators and their regularized inverse square root.
//!
//! An [`OperatorMatrix`] stores kernel values `K(t_a, t_b)` on an equally
//! spaced grid. The operator acts on a sampled function through the Riemann
//! sum `(K f)(t_a) ≈ Δ Σ_b K(t_a, t_b) f(t_b)`, so all spectral work is done on
//! the *action matrix* `Δ·K`. Its eigenvalues approximate the operator
//! eigenvalues, and eigenvectors divided by `√Δ` have unit L2 norm as functions.

use alloc::vec::Vec;

use crate::data::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::grid::{FunctionOnGrid, Grid};
use crate::kernels::SmootherSpec;
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::smoother::{
    cross_product_smoother, local_linear_1d, CrossProductOptions, LocalLinear2d, Point1, Point2, SmoothDiagnostics,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    /// Covariance of `X`.
    Gamma,
    /// Covariance of the inverse regression curve `E[X | Y]`.
    GammaE,
    /// Regularized inverse square root of a covariance.
    InvSqrt,
    Generic,
}

/// A symmetric kernel discretized on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    grid: Grid,
    values: SquareMatrix,
    kind: OperatorKind,
}

impl OperatorMatrix {
    /// Symmetrizes `values` on construction.
    pub fn new(grid: Grid, values: SquareMatrix, kind: OperatorKind) -> Result<Self> {
        if values.dim() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("operator has non-finite entries".into()));
        }
        Ok(OperatorMatrix {
            grid,
            values: values.symmetrized(),
            kind,
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &SquareMatrix {
        &self.values
    }

    #[inline]
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn with_kind(self, kind: OperatorKind) -> Self {
        OperatorMatrix { kind, ..self }
    }

    /// `Δ · K`, the matrix that maps grid samples of `f` to grid samples of `K f`.
    pub fn action(&self) -> SquareMatrix {
        self.values.scaled(self.grid.spacing())
    }

    pub fn apply(&self, f: &FunctionOnGrid) -> Result<FunctionOnGrid> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        FunctionOnGrid::new(self.grid, self.action().matvec(f.values()))
    }

    /// `<f, K g>` under the grid's Riemann inner product.
    pub fn quadratic_form(&self, f: &FunctionOnGrid, g: &FunctionOnGrid) -> Result<f64> {
        let kg = self.apply(g)?;
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.grid.riemann_inner(f.values(), kg.values()))
    }
}

/// Eigen-analysis of a covariance operator with FVE truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    /// All eigenvalues of the action matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// The retained eigenfunctions, orthonormal under `Δ Σ f g`.
    pub eigenfunctions: Vec<FunctionOnGrid>,
    /// Fraction of the positive-eigenvalue mass carried by the retained components.
    pub fve: f64,
    pub retained_rank: usize,
}

impl SpectralDecomposition {
    pub fn retained_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.retained_rank]
    }

    /// `λ_1 / λ_L` over the retained components.
    pub fn condition_number(&self) -> f64 {
        self.eigenvalues[0] / self.eigenvalues[self.retained_rank - 1]
    }
}

/// Eigenvalues at or below this fraction of the largest one count as zero.
pub const POSITIVE_EIGEN_TOL: f64 = 1e-12;
/// Relative tolerance under which two eigenvalues are treated as tied.
pub const EIGEN_TIE_TOL: f64 = 1e-10;

/// Smallest `L` whose leading positive eigenvalues explain at least
/// `fve_threshold` of the positive mass, extended over ties at the boundary.
/// `values` must be sorted descending. Returns `(L, achieved_fve)`.
pub fn fve_rank(values: &[f64], fve_threshold: f64) -> Result<(usize, f64)> {
    if !(fve_threshold > 0.0 && fve_threshold <= 1.0) {
        return Err(Error::config("fve_threshold", "must lie in (0, 1]"));
    }
    let top = values.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::AllNonpositive);
    }
    let positive: Vec<f64> = values
        .iter()
        .copied()
        .take_while(|&v| v > POSITIVE_EIGEN_TOL * top)
        .collect();
    let total: f64 = positive.iter().sum();
    let target = fve_threshold * total * (1.0 - 1e-12);
    let mut cum = 0.0;
    let mut rank = positive.len();
    for (i, v) in positive.iter().enumerate() {
        cum += v;
        if cum >= target {
            rank = i + 1;
            break;
        }
    }
    while rank < positive.len() && positive[rank] >= positive[rank - 1] * (1.0 - EIGEN_TIE_TOL) {
        rank += 1;
    }
    let explained: f64 = positive[..rank].iter().sum();
    Ok((rank, explained / total))
}

/// Truncated Moore–Penrose inverse square root `Σ_{i≤L} ξ_i^{-1/2} φ_i ⊗ φ_i`.
///
/// Nonpositive eigenvalues are always discarded; of the rest, the smallest
/// leading set reaching `fve_threshold` is kept (see [`fve_rank`]).
pub fn regularized_inv_sqrt(
    gamma: &OperatorMatrix,
    fve_threshold: f64,
) -> Result<(OperatorMatrix, SpectralDecomposition)> {
    let grid = *gamma.grid();
    let dt = grid.spacing();
    let eig = symmetric_eigen(&gamma.action());
    let (rank, fve) = fve_rank(&eig.values, fve_threshold)?;

    let p = grid.len();
    let mut inv = SquareMatrix::zeros(p);
    let mut eigenfunctions = Vec::with_capacity(rank);
    for i in 0..rank {
        let v = eig.vector(i);
        let c = 1.0 / (libm::sqrt(eig.values[i]) * dt);
        for a in 0..p {
            for b in 0..p {
                inv[(a, b)] += c * v[a] * v[b];
            }
        }
        let scale = 1.0 / libm::sqrt(dt);
        eigenfunctions.push(FunctionOnGrid::new(grid, v.iter().map(|x| x * scale).collect())?);
    }
    let decomposition = SpectralDecomposition {
        eigenvalues: eig.values,
        eigenfunctions,
        fve,
        retained_rank: rank,
    };
    Ok((OperatorMatrix::new(grid, inv, OperatorKind::InvSqrt)?, decomposition))
}

/// A covariance estimate with the smoothing diagnostics that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceEstimate {
    pub operator: OperatorMatrix,
    /// Mean curve (μ̂ for Γ̂, the mean inverse-regression curve for Γ̂_e).
    pub mean: FunctionOnGrid,
    pub diagnostics: SmoothDiagnostics,
}

fn check_inputs(data: &LongitudinalDataset, spec: &SmootherSpec, grid: &Grid) -> Result<()> {
    spec.validate()?;
    if data.n_subjects() == 0 {
        return Err(Error::InvalidData("dataset has no subjects".into()));
    }
    let (a, b) = data.interval();
    if grid.start() < a || grid.end() > b {
        return Err(Error::config("grid", "grid must lie inside the data interval"));
    }
    Ok(())
}

/// Mean curve `μ̂` from the pooled observations.
pub fn estimate_mean(
    data: &LongitudinalDataset,
    spec: &SmootherSpec,
    grid: &Grid,
) -> Result<(FunctionOnGrid, SmoothDiagnostics)> {
    let points: Vec<Point1> = data
        .subjects()
        .iter()
        .flat_map(|s| s.times.iter().zip(&s.values).map(|(&t, &x)| Point1::new(t, x)))
        .collect();
    let fit = local_linear_1d(&points, spec.h_mu, spec.kernel.k_t, &grid.points())?;
    Ok((FunctionOnGrid::new(*grid, fit.values)?, fit.diagnostics))
}

/// `Γ̂(s, t) = φ̂(s, t) − μ̂(s) μ̂(t)`.
pub fn estimate_gamma(data: &LongitudinalDataset, spec: &SmootherSpec, grid: &Grid) -> Result<CovarianceEstimate> {
    estimate_gamma_with(data, spec, grid, CrossProductOptions::default())
}

pub fn estimate_gamma_with(
    data: &LongitudinalDataset,
    spec: &SmootherSpec,
    grid: &Grid,
    options: CrossProductOptions,
) -> Result<CovarianceEstimate> {
    check_inputs(data, spec, grid)?;
    let (mean, mut diagnostics) = estimate_mean(data, spec, grid)?;
    let (phi, phi_diag) = cross_product_smoother(data, spec, grid, options)?;
    diagnostics += phi_diag;
    let mu = mean.values();
    let p = grid.len();
    let gamma = SquareMatrix::from_fn(p, |a, b| phi.values()[(a, b)] - mu[a] * mu[b]);
    Ok(CovarianceEstimate {
        operator: OperatorMatrix::new(*grid, gamma, OperatorKind::Gamma)?,
        mean,
        diagnostics,
    })
}

/// Fitted inverse-regression curves `m̂(·, Y_i)` on the grid, one per subject.
pub fn inverse_regression_curves(
    data: &LongitudinalDataset,
    spec: &SmootherSpec,
    grid: &Grid,
) -> Result<(Vec<Vec<f64>>, SmoothDiagnostics)> {
    check_inputs(data, spec, grid)?;
    let points: Vec<Point2> = data
        .subjects()
        .iter()
        .flat_map(|s| {
            s.times
                .iter()
                .zip(&s.values)
                .map(move |(&t, &x)| Point2::new(t, s.response, x))
        })
        .collect();
    let smoother = LocalLinear2d::new(&points, spec.kernel, spec.h_t, spec.h_y)?;
    let ts = grid.points();
    let mut diag = SmoothDiagnostics::default();
    let curves = data
        .subjects()
        .iter()
        .map(|s| {
            ts.iter()
                .map(|&t| smoother.eval(t, s.response, &mut diag))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((curves, diag))
}

/// Empirical covariance of the fitted curves `m̂(·, Y_i)`, i.e. `Γ̂_e`.
pub fn estimate_gamma_e(data: &LongitudinalDataset, spec: &SmootherSpec, grid: &Grid) -> Result<CovarianceEstimate> {
    let (curves, diagnostics) = inverse_regression_curves(data, spec, grid)?;
    let p = grid.len();
    let n = curves.len() as f64;
    let mut mean = alloc::vec![0.0; p];
    for c in &curves {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v / n;
        }
    }
    let mut cov = SquareMatrix::zeros(p);
    for c in &curves {
        let d: Vec<f64> = c.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for a in 0..p {
            for b in a..p {
                cov[(a, b)] += d[a] * d[b] / n;
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    Ok(CovarianceEstimate {
        operator: OperatorMatrix::new(*grid, cov, OperatorKind::GammaE)?,
        mean: FunctionOnGrid::new(*grid, mean)?,
        diagnostics,
    })
}
