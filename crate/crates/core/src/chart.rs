//! Coordinate charts: dimension, labels, open domain bounds, periodicity.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real;

/// A single coordinate chart.
///
/// Non-periodic coordinates live in open intervals (finite or infinite).
/// Periodic coordinates have finite bounds giving the period; any real value
/// is accepted for them and gets wrapped into the fundamental interval before
/// field evaluation, so flows can record continuous (unwrapped) traces.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    bounds: Vec<(f64, f64)>,
    periodic: Vec<bool>,
    sample_box: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(names: &[&str], bounds: &[(f64, f64)], periodic: &[bool]) -> Result<Chart> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidChart("dimension must be at least 1".into()));
        }
        if bounds.len() != n || periodic.len() != n {
            return Err(Error::InvalidChart(format!(
                "got {n} names, {} bounds, {} periodic flags",
                bounds.len(),
                periodic.len()
            )));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::InvalidChart(format!(
                    "bounds for `{}` are not ordered: ({lo}, {hi})",
                    names[i]
                )));
            }
            if periodic[i] && !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidChart(format!(
                    "periodic coordinate `{}` needs finite bounds",
                    names[i]
                )));
            }
        }
        let sample_box = bounds
            .iter()
            .zip(periodic)
            .map(|(&(lo, hi), &per)| {
                if per {
                    (lo, hi)
                } else if lo.is_finite() && hi.is_finite() {
                    let margin = 0.1 * (hi - lo);
                    (lo + margin, hi - margin)
                } else {
                    (lo.max(-1.0), hi.min(1.0))
                }
            })
            .collect();
        Ok(Chart {
            names: names.iter().map(|s| s.to_string()).collect(),
            bounds: bounds.to_vec(),
            periodic: periodic.to_vec(),
            sample_box,
        })
    }

    /// Overrides the box used by seeded samplers (must sit inside the domain).
    pub fn with_sample_box(mut self, sample_box: &[(f64, f64)]) -> Result<Chart> {
        if sample_box.len() != self.dim() {
            return Err(Error::InvalidChart("sample box dimension mismatch".into()));
        }
        for (i, &(lo, hi)) in sample_box.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidChart(format!(
                    "sample box for `{}` is not a finite ordered interval",
                    self.names[i]
                )));
            }
        }
        self.sample_box = sample_box.to_vec();
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.names.iter().map(|s| s.as_str()).collect()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn is_periodic(&self, i: usize) -> bool {
        self.periodic[i]
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    /// Period of coordinate `i`, if periodic.
    pub fn period(&self, i: usize) -> Option<f64> {
        self.periodic[i].then(|| self.bounds[i].1 - self.bounds[i].0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check_contains(x).is_ok()
    }

    pub fn check_contains(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "point has {} coordinates, chart has {}",
                x.len(),
                self.dim()
            )));
        }
        for i in 0..self.dim() {
            if !x[i].is_finite() {
                return Err(self.out_of_domain(x, i));
            }
            if self.periodic[i] {
                continue;
            }
            let (lo, hi) = self.bounds[i];
            if !(x[i] > lo && x[i] < hi) {
                return Err(self.out_of_domain(x, i));
            }
        }
        Ok(())
    }

    fn out_of_domain(&self, x: &[f64], i: usize) -> Error {
        Error::OutOfDomain {
            point: x.to_vec(),
            name: self.names[i].clone(),
            lo: self.bounds[i].0,
            hi: self.bounds[i].1,
        }
    }

    /// Copy of `x` with periodic coordinates reduced into `[lo, hi)`.
    pub fn wrapped(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for (i, v) in out.iter_mut().enumerate() {
            if self.periodic[i] {
                let (lo, hi) = self.bounds[i];
                *v = lo + real::rem_euclid(*v - lo, hi - lo);
            }
        }
        out
    }

    /// Per-coordinate difference `a - b`, shifted to the minimal image on
    /// periodic axes. This is the displacement used by chart-Euclidean
    /// distances.
    pub fn delta(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let mut d = a[i] - b[i];
                if self.periodic[i] {
                    let period = self.bounds[i].1 - self.bounds[i].0;
                    d = real::rem_euclid(d + 0.5 * period, period) - 0.5 * period;
                }
                d
            })
            .collect()
    }

    /// Chart-Euclidean distance with periodic wrapping.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        real::hypot_n(&self.delta(a, b))
    }
}
