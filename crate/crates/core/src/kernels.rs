//! Smoothing kernels and bandwidth specifications.

use crate::data::LongitudinalDataset;
use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelShape {
    /// `0.75 (1 - u²)` on `[-1, 1]`
    Epanechnikov,
    /// `15/16 (1 - u²)²` on `[-1, 1]`
    Quartic,
    /// Standard normal density restricted to `[-r, r]` and renormalized.
    GaussianTruncated,
}

/// A symmetric, compactly supported, order-(0,2) univariate kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel1D {
    shape: KernelShape,
    support_radius: f64,
    /// Normalizing constant for the truncated Gaussian, 1 otherwise.
    norm: f64,
}

impl Kernel1D {
    pub const EPANECHNIKOV: Kernel1D = Kernel1D {
        shape: KernelShape::Epanechnikov,
        support_radius: 1.0,
        norm: 1.0,
    };

    pub const QUARTIC: Kernel1D = Kernel1D {
        shape: KernelShape::Quartic,
        support_radius: 1.0,
        norm: 1.0,
    };

    pub fn gaussian_truncated(radius: f64) -> Result<Kernel1D> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::config("kernel", "truncation radius must be positive"));
        }
        Ok(Kernel1D {
            shape: KernelShape::GaussianTruncated,
            support_radius: radius,
            norm: libm::erf(radius / core::f64::consts::SQRT_2),
        })
    }

    /// The kernel of the given shape with its default support (radius 3 for the Gaussian).
    pub fn from_shape(shape: KernelShape) -> Kernel1D {
        match shape {
            KernelShape::Epanechnikov => Kernel1D::EPANECHNIKOV,
            KernelShape::Quartic => Kernel1D::QUARTIC,
            KernelShape::GaussianTruncated => Kernel1D::gaussian_truncated(3.0).unwrap(),
        }
    }

    #[inline]
    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    #[inline]
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() > self.support_radius {
            return 0.0;
        }
        match self.shape {
            KernelShape::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelShape::Quartic => {
                let a = 1.0 - u * u;
                0.9375 * a * a
            }
            KernelShape::GaussianTruncated => INV_SQRT_2PI * libm::exp(-0.5 * u * u) / self.norm,
        }
    }

    /// `∫ u² K(u) du`.
    pub fn second_moment(&self) -> f64 {
        match self.shape {
            KernelShape::Epanechnikov => 0.2,
            KernelShape::Quartic => 1.0 / 7.0,
            KernelShape::GaussianTruncated => {
                let r = self.support_radius;
                1.0 - 2.0 * r * INV_SQRT_2PI * libm::exp(-0.5 * r * r) / self.norm
            }
        }
    }

    /// `∫ K(u)² du`.
    pub fn roughness(&self) -> f64 {
        match self.shape {
            KernelShape::Epanechnikov => 0.6,
            KernelShape::Quartic => 5.0 / 7.0,
            KernelShape::GaussianTruncated => {
                let r = self.support_radius;
                libm::erf(r) / (2.0 * libm::sqrt(core::f64::consts::PI) * self.norm * self.norm)
            }
        }
    }
}

impl Default for Kernel1D {
    fn default() -> Self {
        Kernel1D::EPANECHNIKOV
    }
}

/// Product kernel `K2(u, v) = k_t(u) · k_y(v)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Kernel2D {
    pub k_t: Kernel1D,
    pub k_y: Kernel1D,
}

impl Kernel2D {
    pub fn product(k: Kernel1D) -> Kernel2D {
        Kernel2D { k_t: k, k_y: k }
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.k_t.eval(u) * self.k_y.eval(v)
    }
}

/// Kernel plus the four bandwidths of the estimator.
///
/// `h_t`/`h_y` drive the inverse regression surface `m(t, y)`, `h_mu` the
/// mean curve and `h_phi` the cross-product surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmootherSpec {
    pub kernel: Kernel2D,
    pub h_t: f64,
    pub h_y: f64,
    pub h_mu: f64,
    pub h_phi: f64,
}

impl SmootherSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, h) in [
            ("h_t", self.h_t),
            ("h_y", self.h_y),
            ("h_mu", self.h_mu),
            ("h_phi", self.h_phi),
        ] {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::config(field, "bandwidth must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Plug-in bandwidths `h = c · range · N^(-1/6)` for the 2D smoothers and
/// `h_mu = c · range · N^(-1/5)` for the mean, where `N = n · E[N_i]` is the
/// total number of observations. Each bandwidth is capped at the data range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandwidthRule {
    pub c_2d: f64,
    pub c_1d: f64,
    pub kernel: Kernel1D,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule {
            c_2d: 1.0,
            c_1d: 1.0,
            kernel: Kernel1D::EPANECHNIKOV,
        }
    }
}

impl BandwidthRule {
    pub fn resolve(&self, data: &LongitudinalDataset) -> Result<SmootherSpec> {
        if !(self.c_2d > 0.0 && self.c_1d > 0.0) {
            return Err(Error::config("bandwidth", "rule constants must be positive"));
        }
        let total = data.total_observations();
        if total == 0 {
            return Err(Error::InvalidData("dataset has no observations".into()));
        }
        let total = total as f64;
        let (t_lo, t_hi) = data.time_range();
        let (y_lo, y_hi) = data.response_range();
        let rate_2d = libm::pow(total, -1.0 / 6.0);
        let rate_1d = libm::pow(total, -0.2);
        let capped = |range: f64, c: f64, rate: f64| {
            if range > 0.0 {
                (c * range * rate).min(range)
            } else {
                1.0
            }
        };
        let spec = SmootherSpec {
            kernel: Kernel2D::product(self.kernel),
            h_t: capped(t_hi - t_lo, self.c_2d, rate_2d),
            h_y: capped(y_hi - y_lo, self.c_2d, rate_2d),
            h_mu: capped(t_hi - t_lo, self.c_1d, rate_1d),
            h_phi: capped(t_hi - t_lo, self.c_2d, rate_2d),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_kernels() -> [Kernel1D; 4] {
        [
            Kernel1D::EPANECHNIKOV,
            Kernel1D::QUARTIC,
            Kernel1D::gaussian_truncated(3.0).unwrap(),
            Kernel1D::gaussian_truncated(1.5).unwrap(),
        ]
    }

    /// Composite Simpson rule on [-r, r].
    fn simpson(f: impl Fn(f64) -> f64, r: f64) -> f64 {
        let m = 20_000;
        let h = 2.0 * r / m as f64;
        let mut s = f(-r) + f(r);
        for i in 1..m {
            let x = -r + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn moment_conditions_hold_under_quadrature() {
        for k in all_kernels() {
            let r = k.support_radius();
            assert!((simpson(|u| k.eval(u), r) - 1.0).abs() < 1e-10, "{k:?}");
            assert!(simpson(|u| u * k.eval(u), r).abs() < 1e-10, "{k:?}");
            let m2 = simpson(|u| u * u * k.eval(u), r);
            assert!(m2 > 0.01);
            assert!((m2 - k.second_moment()).abs() < 1e-10, "{k:?}");
            assert!((simpson(|u| k.eval(u) * k.eval(u), r) - k.roughness()).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_and_compact() {
        for k in all_kernels() {
            for i in 0..200 {
                let u = -2.0 + 0.0371 * i as f64;
                assert_eq!(k.eval(u), k.eval(-u));
            }
            assert_eq!(k.eval(k.support_radius() + 1e-9), 0.0);
        }
        assert_eq!(Kernel1D::EPANECHNIKOV.eval(0.0), 0.75);
    }

    #[test]
    fn product_kernel() {
        let k = Kernel2D::default();
        assert!((k.eval(0.5, -0.5) - 0.5625 * 0.5625).abs() < 1e-15);
        assert_eq!(k.eval(1.2, 0.0), 0.0);
    }

    #[test]
    fn spec_validation() {
        let mut s = SmootherSpec {
            kernel: Kernel2D::default(),
            h_t: 0.1,
            h_y: 0.1,
            h_mu: 0.1,
            h_phi: 0.1,
        };
        assert!(s.validate().is_ok());
        s.h_phi = 0.0;
        assert!(matches!(s.validate(), Err(Error::ConfigInvalid { field: "h_phi", .. })));
    }
}
