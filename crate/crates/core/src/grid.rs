//! Equally spaced evaluation grids and functions sampled on them.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An equally spaced grid `start = t_0 < t_1 < ... < t_{len-1} = end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    start: f64,
    end: f64,
    len: usize,
}

impl Grid {
    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::config("grid_size", "a grid needs at least 2 points"));
        }
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::config("grid", "grid bounds must be finite with start < end"));
        }
        Ok(Grid { start, end, len })
    }

    /// `len` equally spaced points on `[0, 1]`.
    pub fn unit(len: usize) -> Result<Self> {
        Grid::new(0.0, 1.0, len)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.end
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / (self.len - 1) as f64
    }

    /// The `i`-th grid point; the last point is exactly `end`.
    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.len {
            self.end
        } else {
            self.start + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Trapezoid-rule quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = alloc::vec![h; self.len];
        w[0] = 0.5 * h;
        w[self.len - 1] = 0.5 * h;
        w
    }

    /// `spacing * sum_j a_j b_j`, the inner product the operator discretization uses.
    pub fn riemann_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len);
        debug_assert_eq!(b.len(), self.len);
        self.spacing() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Trapezoid-rule approximation of `∫ a(t) b(t) dt`.
    pub fn trapezoid_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len);
        debug_assert_eq!(b.len(), self.len);
        let interior: f64 = (1..self.len - 1).map(|j| a[j] * b[j]).sum();
        let ends = 0.5 * (a[0] * b[0] + a[self.len - 1] * b[self.len - 1]);
        self.spacing() * (interior + ends)
    }
}

/// Values of a function at the points of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionOnGrid {
    grid: Grid,
    values: Vec<f64>,
}

impl FunctionOnGrid {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(FunctionOnGrid { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        FunctionOnGrid { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        FunctionOnGrid {
            grid,
            values: alloc::vec![0.0; grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn check_grid(&self, other: &FunctionOnGrid) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `∫ f g` by the trapezoid rule.
    pub fn inner(&self, other: &FunctionOnGrid) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.grid.trapezoid_inner(&self.values, &other.values))
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.grid.trapezoid_inner(&self.values, &self.values))
    }

    pub fn scaled(&self, c: f64) -> FunctionOnGrid {
        FunctionOnGrid {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Rescaled to unit L2 norm; the zero function is returned unchanged.
    pub fn normalized(&self) -> FunctionOnGrid {
        let norm = self.l2_norm();
        if norm > 0.0 {
            self.scaled(1.0 / norm)
        } else {
            self.clone()
        }
    }
}
