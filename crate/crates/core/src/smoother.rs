//! Scattered-data local linear regression in one and two dimensions.
//!
//! At an evaluation point the smoothers solve a kernel-weighted least-squares
//! problem for an intercept plus slope(s) and return the intercept. Design
//! coordinates are scaled by the bandwidth before the Gram matrix is formed,
//! which leaves the intercept unchanged and keeps the 2×2 / 3×3 systems well
//! conditioned. When the Cholesky pivots still signal a thin, nearly
//! collinear window, the solution gets one refinement step from residuals
//! against the raw window data.
//!
//! Finite-sample gaps are handled per evaluation point:
//! * a window that is empty or too thin for the full linear fit is retried
//!   with every bandwidth multiplied by [`WIDENING_FACTOR`], at most
//!   [`MAX_WIDENINGS`] times;
//! * if it is still empty, [`Error::EmptyWindow`] is returned; if it is
//!   nonempty but rank deficient, the fit drops to a lower order (a single
//!   slope, then a weighted mean) and is counted in [`SmoothDiagnostics`].
//!
//! Both decisions depend only on the design, so every smoothed value is a
//! linear functional of the response values.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::AddAssign;

use crate::data::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{Kernel1D, Kernel2D, SmootherSpec};
use crate::linalg::{solve_normal_equations, solve_with_pivot_ratio, SquareMatrix};
use crate::operators::{OperatorKind, OperatorMatrix};

pub const WIDENING_FACTOR: f64 = 1.5;
pub const MAX_WIDENINGS: usize = 4;
/// Below this Cholesky pivot ratio the normal-equations solution gets one
/// refinement step from residuals against the raw window data.
const REFINE_BELOW: f64 = 1e-4;

/// Counts of fallbacks taken while smoothing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SmoothDiagnostics {
    pub evaluations: usize,
    /// Evaluation points whose window had to be widened at least once.
    pub widened: usize,
    /// Evaluation points that fell back to a lower-order fit.
    pub degenerate: usize,
}

impl AddAssign for SmoothDiagnostics {
    fn add_assign(&mut self, rhs: Self) {
        self.evaluations += rhs.evaluations;
        self.widened += rhs.widened;
        self.degenerate += rhs.degenerate;
    }
}

/// Smoothed values at the requested evaluation points.
#[derive(Clone, Debug, PartialEq)]
pub struct Smoothed {
    pub values: Vec<f64>,
    pub diagnostics: SmoothDiagnostics,
}

/// Observation `(t, x)` carrying a nonnegative weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point1 {
    pub t: f64,
    pub x: f64,
    pub weight: f64,
}

impl Point1 {
    pub fn new(t: f64, x: f64) -> Self {
        Point1 { t, x, weight: 1.0 }
    }
}

/// Observation `x` at design location `(t, y)` carrying a nonnegative weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2 {
    pub t: f64,
    pub y: f64,
    pub x: f64,
    pub weight: f64,
}

impl Point2 {
    pub fn new(t: f64, y: f64, x: f64) -> Self {
        Point2 { t, y, x, weight: 1.0 }
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::config("bandwidth", "must be positive and finite"))
    }
}

fn check_weights(mut it: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    if it.all(|(v, w)| v.is_finite() && w.is_finite() && w >= 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidData("non-finite value or negative weight".into()))
    }
}

/// Local linear smoother on scattered 1D data.
#[derive(Clone, Debug)]
pub struct LocalLinear1d {
    points: Vec<Point1>,
    kernel: Kernel1D,
    h: f64,
}

impl LocalLinear1d {
    pub fn new(points: &[Point1], kernel: Kernel1D, h: f64) -> Result<Self> {
        check_bandwidth(h)?;
        check_weights(points.iter().map(|p| (p.t + p.x, p.weight)))?;
        let mut points = points.to_vec();
        points.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(LocalLinear1d { points, kernel, h })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    /// Calls `f(w, u, x)` for every point with positive weight in the window.
    fn for_each_in_window(&self, t: f64, h: f64, skip: Option<usize>, mut f: impl FnMut(f64, f64, f64)) {
        let reach = h * self.kernel.support_radius();
        let lo = self.points.partition_point(|p| p.t < t - reach);
        let hi = self.points.partition_point(|p| p.t <= t + reach);
        for (idx, p) in self.points[lo..hi].iter().enumerate() {
            if skip == Some(lo + idx) {
                continue;
            }
            let u = (p.t - t) / h;
            let w = p.weight * self.kernel.eval(u);
            if w != 0.0 {
                f(w, u, p.x);
            }
        }
    }

    fn accumulate(&self, t: f64, h: f64, skip: Option<usize>) -> ([[f64; 2]; 2], [f64; 2]) {
        let (mut s0, mut s1, mut s2, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        self.for_each_in_window(t, h, skip, |w, u, x| {
            s0 += w;
            s1 += w * u;
            s2 += w * u * u;
            r0 += w * x;
            r1 += w * u * x;
        });
        ([[s0, s1], [s1, s2]], [r0, r1])
    }

    fn refine(&self, t: f64, h: f64, skip: Option<usize>, gram: [[f64; 2]; 2], beta: [f64; 2]) -> f64 {
        let mut r = [0.0; 2];
        self.for_each_in_window(t, h, skip, |w, u, x| {
            let e = x - beta[0] - beta[1] * u;
            r[0] += w * e;
            r[1] += w * u * e;
        });
        solve_normal_equations(gram, r).map_or(beta[0], |d| beta[0] + d[0])
    }

    fn eval_inner(&self, t: f64, skip: Option<usize>, diag: &mut SmoothDiagnostics) -> Result<f64> {
        diag.evaluations += 1;
        let mut h = self.h;
        for attempt in 0..=MAX_WIDENINGS {
            let (gram, rhs) = self.accumulate(t, h, skip);
            if gram[0][0] > 0.0 {
                if let Some((beta, ratio)) = solve_with_pivot_ratio(gram, rhs) {
                    return Ok(if ratio < REFINE_BELOW {
                        self.refine(t, h, skip, gram, beta)
                    } else {
                        beta[0]
                    });
                }
                if attempt == MAX_WIDENINGS {
                    diag.degenerate += 1;
                    return Ok(rhs[0] / gram[0][0]);
                }
            }
            if attempt == 0 {
                diag.widened += 1;
            }
            h *= WIDENING_FACTOR;
        }
        Err(Error::EmptyWindow { t, y: None })
    }

    pub fn eval(&self, t: f64, diag: &mut SmoothDiagnostics) -> Result<f64> {
        self.eval_inner(t, None, diag)
    }

    pub fn eval_many(&self, ts: &[f64]) -> Result<Smoothed> {
        let mut diagnostics = SmoothDiagnostics::default();
        let values = ts
            .iter()
            .map(|&t| self.eval(t, &mut diagnostics))
            .collect::<Result<_>>()?;
        Ok(Smoothed { values, diagnostics })
    }

    /// Weighted leave-one-out squared prediction error.
    pub fn loo_error(&self) -> Result<f64> {
        let mut diag = SmoothDiagnostics::default();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            if p.weight == 0.0 {
                continue;
            }
            let fit = self.eval_inner(p.t, Some(i), &mut diag)?;
            num += p.weight * (p.x - fit) * (p.x - fit);
            den += p.weight;
        }
        Ok(num / den)
    }
}

/// Local linear fit of `x` on `t`, evaluated at every point of `eval`.
pub fn local_linear_1d(points: &[Point1], h: f64, kernel: Kernel1D, eval: &[f64]) -> Result<Smoothed> {
    LocalLinear1d::new(points, kernel, h)?.eval_many(eval)
}

/// Local plane smoother on scattered 2D data.
#[derive(Clone, Debug)]
pub struct LocalLinear2d {
    points: Vec<Point2>,
    kernel: Kernel2D,
    h_t: f64,
    h_y: f64,
}

type Gram3 = ([[f64; 3]; 3], [f64; 3]);

impl LocalLinear2d {
    pub fn new(points: &[Point2], kernel: Kernel2D, h_t: f64, h_y: f64) -> Result<Self> {
        check_bandwidth(h_t)?;
        check_bandwidth(h_y)?;
        check_weights(points.iter().map(|p| (p.t + p.y + p.x, p.weight)))?;
        let mut points = points.to_vec();
        points.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.y.total_cmp(&b.y)));
        Ok(LocalLinear2d {
            points,
            kernel,
            h_t,
            h_y,
        })
    }

    pub fn bandwidths(&self) -> (f64, f64) {
        (self.h_t, self.h_y)
    }

    /// Calls `f(w, u, v, x)` for every point with positive weight in the window.
    fn for_each_in_window(
        &self,
        (t, y): (f64, f64),
        (h_t, h_y): (f64, f64),
        skip: Option<usize>,
        mut f: impl FnMut(f64, f64, f64, f64),
    ) {
        let reach_t = h_t * self.kernel.k_t.support_radius();
        let reach_y = h_y * self.kernel.k_y.support_radius();
        let lo = self.points.partition_point(|p| p.t < t - reach_t);
        let hi = self.points.partition_point(|p| p.t <= t + reach_t);
        for (idx, p) in self.points[lo..hi].iter().enumerate() {
            if skip == Some(lo + idx) || (p.y - y).abs() > reach_y {
                continue;
            }
            let u = (p.t - t) / h_t;
            let v = (p.y - y) / h_y;
            let w = p.weight * self.kernel.eval(u, v);
            if w != 0.0 {
                f(w, u, v, p.x);
            }
        }
    }

    fn refine(&self, at: (f64, f64), h: (f64, f64), skip: Option<usize>, g: [[f64; 3]; 3], beta: [f64; 3]) -> f64 {
        let mut r = [0.0; 3];
        self.for_each_in_window(at, h, skip, |w, u, v, x| {
            let e = x - beta[0] - beta[1] * u - beta[2] * v;
            r[0] += w * e;
            r[1] += w * u * e;
            r[2] += w * v * e;
        });
        solve_normal_equations(g, r).map_or(beta[0], |d| beta[0] + d[0])
    }

    fn accumulate(&self, t: f64, y: f64, h_t: f64, h_y: f64, skip: Option<usize>) -> Gram3 {
        let mut g = [[0.0; 3]; 3];
        let mut r = [0.0; 3];
        self.for_each_in_window((t, y), (h_t, h_y), skip, |w, u, v, x| {
            let (wu, wv) = (w * u, w * v);
            g[0][0] += w;
            g[0][1] += wu;
            g[0][2] += wv;
            g[1][1] += wu * u;
            g[1][2] += wu * v;
            g[2][2] += wv * v;
            r[0] += w * x;
            r[1] += wu * x;
            r[2] += wv * x;
        });
        g[1][0] = g[0][1];
        g[2][0] = g[0][2];
        g[2][1] = g[1][2];
        (g, r)
    }

    fn eval_inner(&self, t: f64, y: f64, skip: Option<usize>, diag: &mut SmoothDiagnostics) -> Result<f64> {
        diag.evaluations += 1;
        let (mut h_t, mut h_y) = (self.h_t, self.h_y);
        for attempt in 0..=MAX_WIDENINGS {
            let (g, r) = self.accumulate(t, y, h_t, h_y, skip);
            if g[0][0] > 0.0 {
                if let Some((beta, ratio)) = solve_with_pivot_ratio(g, r) {
                    return Ok(if ratio < REFINE_BELOW {
                        self.refine((t, y), (h_t, h_y), skip, g, beta)
                    } else {
                        beta[0]
                    });
                }
                if attempt == MAX_WIDENINGS {
                    diag.degenerate += 1;
                    for axis in [1, 2] {
                        let sub = [[g[0][0], g[0][axis]], [g[axis][0], g[axis][axis]]];
                        if let Some(beta) = solve_normal_equations(sub, [r[0], r[axis]]) {
                            return Ok(beta[0]);
                        }
                    }
                    return Ok(r[0] / g[0][0]);
                }
            }
            if attempt == 0 {
                diag.widened += 1;
            }
            h_t *= WIDENING_FACTOR;
            h_y *= WIDENING_FACTOR;
        }
        Err(Error::EmptyWindow { t, y: Some(y) })
    }

    pub fn eval(&self, t: f64, y: f64, diag: &mut SmoothDiagnostics) -> Result<f64> {
        self.eval_inner(t, y, None, diag)
    }

    pub fn eval_many(&self, at: &[(f64, f64)]) -> Result<Smoothed> {
        let mut diagnostics = SmoothDiagnostics::default();
        let values = at
            .iter()
            .map(|&(t, y)| self.eval(t, y, &mut diagnostics))
            .collect::<Result<_>>()?;
        Ok(Smoothed { values, diagnostics })
    }

    /// Weighted leave-one-out squared prediction error.
    pub fn loo_error(&self) -> Result<f64> {
        let mut diag = SmoothDiagnostics::default();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            if p.weight == 0.0 {
                continue;
            }
            let fit = self.eval_inner(p.t, p.y, Some(i), &mut diag)?;
            num += p.weight * (p.x - fit) * (p.x - fit);
            den += p.weight;
        }
        Ok(num / den)
    }
}

/// Estimate of `m(t, y) = E[X(t) | Y = y]` at each `(t, y)` in `eval`, using
/// the kernel and the `h_t`, `h_y` bandwidths of `spec`.
pub fn local_linear_2d(points: &[Point2], spec: &SmootherSpec, eval: &[(f64, f64)]) -> Result<Smoothed> {
    LocalLinear2d::new(points, spec.kernel, spec.h_t, spec.h_y)?.eval_many(eval)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CrossProductOptions {
    /// Drop the `j = k` squares, for data with measurement error on `X`.
    pub exclude_diagonal: bool,
}

/// The within-subject cross products `(T_ij, T_ik, X_ij X_ik)` over all
/// ordered pairs `j, k`, with coincident design locations merged.
///
/// Merging replicates into their mean with a count weight leaves every
/// weighted least-squares solution unchanged.
pub fn cross_product_points(data: &LongitudinalDataset, options: CrossProductOptions) -> Vec<Point2> {
    let mut cells: BTreeMap<(u64, u64), (f64, f64)> = BTreeMap::new();
    for s in data.subjects() {
        for (j, (&tj, &xj)) in s.times.iter().zip(&s.values).enumerate() {
            for (k, (&tk, &xk)) in s.times.iter().zip(&s.values).enumerate() {
                if options.exclude_diagonal && j == k {
                    continue;
                }
                let cell = cells.entry((tj.to_bits(), tk.to_bits())).or_insert((0.0, 0.0));
                cell.0 += xj * xk;
                cell.1 += 1.0;
            }
        }
    }
    cells
        .into_iter()
        .map(|((t, s), (sum, count))| Point2 {
            t: f64::from_bits(t),
            y: f64::from_bits(s),
            x: sum / count,
            weight: count,
        })
        .collect()
}

/// Smoothed second-moment surface `phi(s, t) = E[X(s) X(t)]` on `grid × grid`.
///
/// Uses the product kernel `k_t × k_t` with bandwidth `h_phi` on both axes and
/// returns the symmetrized matrix `(phi + phiᵀ) / 2`.
pub fn cross_product_smoother(
    data: &LongitudinalDataset,
    spec: &SmootherSpec,
    grid: &Grid,
    options: CrossProductOptions,
) -> Result<(OperatorMatrix, SmoothDiagnostics)> {
    let points = cross_product_points(data, options);
    let kernel = Kernel2D::product(spec.kernel.k_t);
    let smoother = LocalLinear2d::new(&points, kernel, spec.h_phi, spec.h_phi)?;
    let p = grid.len();
    let mut diag = SmoothDiagnostics::default();
    let mut phi = SquareMatrix::zeros(p);
    for a in 0..p {
        for b in 0..p {
            phi[(a, b)] = smoother.eval(grid.point(a), grid.point(b), &mut diag)?;
        }
    }
    Ok((OperatorMatrix::new(*grid, phi, OperatorKind::Generic)?, diag))
}

/// Grid-search bandwidth selection by leave-one-out prediction error.
#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub best: f64,
    /// `(candidate, score)` in candidate order; failed candidates are skipped.
    pub scores: Vec<(f64, f64)>,
}

fn pick_best(scores: Vec<(f64, f64)>) -> Result<CvResult> {
    let best = scores
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|s| s.0)
        .ok_or_else(|| Error::config("bandwidth", "no candidate bandwidth produced a fit"))?;
    Ok(CvResult { best, scores })
}

pub fn cross_validate_1d(points: &[Point1], kernel: Kernel1D, candidates: &[f64]) -> Result<CvResult> {
    let scores = candidates
        .iter()
        .filter_map(|&h| {
            let s = LocalLinear1d::new(points, kernel, h).ok()?;
            s.loo_error().ok().map(|e| (h, e))
        })
        .collect();
    pick_best(scores)
}

/// Two-dimensional counterpart of [`CvResult`]; candidates are `(h_t, h_y)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Cv2dResult {
    pub best: (f64, f64),
    pub scores: Vec<((f64, f64), f64)>,
}

pub fn cross_validate_2d(points: &[Point2], kernel: Kernel2D, candidates: &[(f64, f64)]) -> Result<Cv2dResult> {
    let scores: Vec<((f64, f64), f64)> = candidates
        .iter()
        .filter_map(|&(ht, hy)| {
            let s = LocalLinear2d::new(points, kernel, ht, hy).ok()?;
            s.loo_error().ok().map(|e| ((ht, hy), e))
        })
        .collect();
    let best = scores
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|s| s.0)
        .ok_or_else(|| Error::config("bandwidth", "no candidate bandwidth produced a fit"))?;
    Ok(Cv2dResult { best, scores })
}
