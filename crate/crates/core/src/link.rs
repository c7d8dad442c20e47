//! Nonparametric link estimation on the estimated indices.
//!
//! After reduction, `E[Y | X]` is a function of `k ∈ {1, 2}` scalar indices;
//! it is estimated by a local linear smoother over the index points. Fits are
//! leave-in: the fitted value at a training point uses that point too.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{Kernel1D, Kernel2D};
use crate::smoother::{LocalLinear1d, LocalLinear2d, Point1, Point2, SmoothDiagnostics};

#[derive(Clone, Debug)]
enum LinkSmoother {
    One(LocalLinear1d),
    Two(LocalLinear2d),
}

#[derive(Clone, Debug)]
pub struct LinkFit {
    /// `n × k` training indices.
    pub index_points: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
    pub fitted: Vec<f64>,
    pub bandwidths: Vec<f64>,
    /// `(1/n) Σ (y_i − ŷ_i)²`.
    pub fitted_error: f64,
    pub diagnostics: SmoothDiagnostics,
    hull: Vec<[f64; 2]>,
    smoother: LinkSmoother,
}

impl LinkFit {
    pub fn k(&self) -> usize {
        self.bandwidths.len()
    }
}

/// Default per-axis bandwidth `sd(index_j) · n^(-1/6)`.
pub fn default_bandwidths(indices: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = indices.len();
    let k = indices.first().map_or(0, |r| r.len());
    let rate = libm::pow(n as f64, -1.0 / 6.0);
    (0..k)
        .map(|j| {
            let mean = indices.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = indices.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / (n as f64 - 1.0);
            let sd = libm::sqrt(var);
            if sd > 0.0 {
                Ok(sd * rate)
            } else {
                Err(Error::DegenerateDesign(alloc::format!("index {} is constant", j + 1)))
            }
        })
        .collect()
}

/// Fits `y ≈ f(index)` with local linear smoothing and reports the mean
/// squared fitted error.
pub fn fit_link(indices: &[Vec<f64>], responses: &[f64], bandwidths: Option<&[f64]>) -> Result<LinkFit> {
    let n = indices.len();
    let k = indices.first().map_or(0, |r| r.len());
    if !(k == 1 || k == 2) {
        return Err(Error::config("k", "link smoothing supports one or two indices"));
    }
    if indices.iter().any(|r| r.len() != k) || responses.len() != n {
        return Err(Error::InvalidData("index rows and responses must align".into()));
    }
    if n < 3 * (k + 1) {
        return Err(Error::DegenerateDesign(alloc::format!(
            "need at least {} points for a {k}-index link",
            3 * (k + 1)
        )));
    }
    let bandwidths = match bandwidths {
        Some(h) if h.len() == k => h.to_vec(),
        Some(_) => return Err(Error::config("bandwidths", "one bandwidth per index required")),
        None => default_bandwidths(indices)?,
    };

    let smoother = if k == 1 {
        let pts: Vec<Point1> = indices
            .iter()
            .zip(responses)
            .map(|(r, &y)| Point1::new(r[0], y))
            .collect();
        LinkSmoother::One(LocalLinear1d::new(&pts, Kernel1D::EPANECHNIKOV, bandwidths[0])?)
    } else {
        let pts: Vec<Point2> = indices
            .iter()
            .zip(responses)
            .map(|(r, &y)| Point2::new(r[0], r[1], y))
            .collect();
        LinkSmoother::Two(LocalLinear2d::new(
            &pts,
            Kernel2D::default(),
            bandwidths[0],
            bandwidths[1],
        )?)
    };

    let mut diagnostics = SmoothDiagnostics::default();
    let fitted = indices
        .iter()
        .map(|r| eval(&smoother, r, &mut diagnostics))
        .collect::<Result<Vec<_>>>()?;
    let fitted_error = fitted
        .iter()
        .zip(responses)
        .map(|(f, y)| (y - f) * (y - f))
        .sum::<f64>()
        / n as f64;
    let hull = if k == 2 {
        convex_hull(indices.iter().map(|r| [r[0], r[1]]).collect())
    } else {
        let lo = indices.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
        let hi = indices.iter().map(|r| r[0]).fold(f64::NEG_INFINITY, f64::max);
        alloc::vec![[lo, 0.0], [hi, 0.0]]
    };

    Ok(LinkFit {
        index_points: indices.to_vec(),
        responses: responses.to_vec(),
        fitted,
        bandwidths,
        fitted_error,
        diagnostics,
        hull,
        smoother,
    })
}

fn eval(smoother: &LinkSmoother, at: &[f64], diag: &mut SmoothDiagnostics) -> Result<f64> {
    match smoother {
        LinkSmoother::One(s) => s.eval(at[0], diag),
        LinkSmoother::Two(s) => s.eval(at[0], at[1], diag),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkPrediction {
    pub values: Vec<f64>,
    /// `true` where the point lies outside the convex hull of the training indices.
    pub extrapolated: Vec<bool>,
}

pub fn predict_link(fit: &LinkFit, new_indices: &[Vec<f64>]) -> Result<LinkPrediction> {
    let k = fit.k();
    if new_indices.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidData(
            "prediction points must have one coordinate per index".into(),
        ));
    }
    let mut diag = SmoothDiagnostics::default();
    let values = new_indices
        .iter()
        .map(|r| eval(&fit.smoother, r, &mut diag))
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = new_indices
        .iter()
        .map(|r| {
            if k == 1 {
                r[0] < fit.hull[0][0] || r[0] > fit.hull[1][0]
            } else {
                !inside_hull(&fit.hull, [r[0], r[1]])
            }
        })
        .collect();
    Ok(LinkPrediction { values, extrapolated })
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn half_hull<'a>(pts: impl Iterator<Item = &'a [f64; 2]>) -> Vec<[f64; 2]> {
    let mut h: Vec<[f64; 2]> = Vec::new();
    for &p in pts {
        while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
            h.pop();
        }
        h.push(p);
    }
    h.pop();
    h
}

/// Counter-clockwise hull by Andrew's monotone chain.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull = half_hull(pts.iter());
    hull.extend(half_hull(pts.iter().rev()));
    hull
}

fn inside_hull(hull: &[[f64; 2]], p: [f64; 2]) -> bool {
    if hull.len() < 3 {
        return hull.contains(&p);
    }
    let scale = hull.iter().fold(1.0_f64, |m, h| m.max(h[0].abs()).max(h[1].abs()));
    let tol = 1e-12 * scale * scale;
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lattice(m: usize) -> Vec<Vec<f64>> {
        (0..m * m)
            .map(|i| vec![(i % m) as f64 / (m - 1) as f64, (i / m) as f64 / (m - 1) as f64])
            .collect()
    }

    #[test]
    fn linear_surface_is_reproduced() {
        let idx = lattice(8);
        let y: Vec<f64> = idx.iter().map(|r| 1.0 + 2.0 * r[0] - 3.0 * r[1]).collect();
        let fit = fit_link(&idx, &y, None).unwrap();
        assert!(fit.fitted_error < 1e-18);
        let probe = vec![vec![0.31, 0.77], vec![1.4, 0.2]];
        let pred = predict_link(&fit, &probe).unwrap();
        assert!((pred.values[0] - (1.0 + 0.62 - 2.31)).abs() < 1e-9);
        assert_eq!(pred.extrapolated, vec![false, true]);
    }

    #[test]
    fn constant_response() {
        let idx: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.1]).collect();
        let fit = fit_link(&idx, &[2.5; 20], None).unwrap();
        let worst = fit.fitted.iter().fold(0.0_f64, |m, f| m.max((f - 2.5).abs()));
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn input_validation() {
        let idx: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        assert!(matches!(
            fit_link(&idx, &[0.0; 5], None),
            Err(Error::DegenerateDesign(_))
        ));
        let three: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64; 3]).collect();
        assert!(fit_link(&three, &[0.0; 20], None).is_err());
        let flat: Vec<Vec<f64>> = (0..20).map(|_| vec![1.0]).collect();
        assert!(matches!(
            fit_link(&flat, &[0.0; 20], None),
            Err(Error::DegenerateDesign(_))
        ));
    }

    #[test]
    fn hull_membership() {
        let hull = convex_hull(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        assert_eq!(hull.len(), 4);
        assert!(inside_hull(&hull, [0.5, 0.5]));
        assert!(inside_hull(&hull, [1.0, 0.5]));
        assert!(!inside_hull(&hull, [1.01, 0.5]));
    }
}
