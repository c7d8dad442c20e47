//! Sparse longitudinal observations `(T_ij, X_ij)` with a scalar response `Y_i`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub id: String,
    /// Observation times, nondecreasing.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub response: f64,
}

/// A validated collection of subjects observed on the interval `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LongitudinalDataset {
    subjects: Vec<Subject>,
    interval: (f64, f64),
}

impl LongitudinalDataset {
    /// Validates every subject: at least one observation, matching lengths,
    /// finite values, nondecreasing times inside the closed interval.
    pub fn new(subjects: Vec<Subject>, interval: (f64, f64)) -> Result<Self> {
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::config("interval", "need finite a < b"));
        }
        for s in &subjects {
            if s.times.is_empty() {
                return Err(Error::InvalidData(format!("subject {} has no observations", s.id)));
            }
            if s.times.len() != s.values.len() {
                return Err(Error::InvalidData(format!(
                    "subject {}: {} times but {} values",
                    s.id,
                    s.times.len(),
                    s.values.len()
                )));
            }
            if !s.response.is_finite() || s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("subject {} has non-finite data", s.id)));
            }
            if let Some(t) = s.times.iter().find(|t| !(**t >= a && **t <= b)) {
                return Err(Error::InvalidData(format!(
                    "subject {}: time {t} outside [{a}, {b}]",
                    s.id
                )));
            }
            if s.times.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidData(format!("subject {}: times not sorted", s.id)));
            }
        }
        Ok(LongitudinalDataset { subjects, interval })
    }

    #[inline]
    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    #[inline]
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    #[inline]
    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn total_observations(&self) -> usize {
        self.subjects.iter().map(|s| s.times.len()).sum()
    }

    pub fn mean_observations(&self) -> f64 {
        self.total_observations() as f64 / self.subjects.len().max(1) as f64
    }

    pub fn responses(&self) -> Vec<f64> {
        self.subjects.iter().map(|s| s.response).collect()
    }

    /// `(min, max)` of the pooled observation times.
    pub fn time_range(&self) -> (f64, f64) {
        self.subjects
            .iter()
            .flat_map(|s| s.times.iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
                (lo.min(t), hi.max(t))
            })
    }

    pub fn response_range(&self) -> (f64, f64) {
        self.subjects
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.response), hi.max(s.response))
            })
    }

    /// Same design with every `X_ij` multiplied by `c`.
    pub fn scale_values(&self, c: f64) -> LongitudinalDataset {
        let subjects = self
            .subjects
            .iter()
            .map(|s| Subject {
                values: s.values.iter().map(|v| c * v).collect(),
                ..s.clone()
            })
            .collect();
        LongitudinalDataset {
            subjects,
            interval: self.interval,
        }
    }
}
