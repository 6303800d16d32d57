//! Seeded, reproducible sampling of chart points and phase points.
//!
//! Base points are uniform over the chart's sample box; momenta are drawn on
//! the unit sphere of the metric (`|p|_{g^{-1}} = 1`), so sampled phase
//! points sit on the unit-energy level `2H = 1`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::integrals::PhasePoint;
use crate::linalg;
use crate::metric::MetricField;
use crate::real;

pub struct PhaseSampler {
    metric: MetricField,
    rng: ChaCha8Rng,
}

impl PhaseSampler {
    pub fn new(metric: &MetricField, seed: u64) -> PhaseSampler {
        PhaseSampler {
            metric: metric.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw from the chart's sample box.
    pub fn next_point(&mut self) -> Vec<f64> {
        let sample_box = self.metric.chart().sample_box().to_vec();
        sample_box
            .iter()
            .map(|&(lo, hi)| self.rng.random_range(lo..hi))
            .collect()
    }

    /// Standard normal via Box-Muller.
    fn next_gaussian(&mut self) -> f64 {
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        real::sqrt(-2.0 * real::ln(u1)) * real::cos(core::f64::consts::TAU * u2)
    }

    /// Random direction with unit metric norm at `x`.
    pub fn unit_velocity(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.metric.eval(x)?;
        loop {
            let v: Vec<f64> = (0..self.metric.dim())
                .map(|_| self.next_gaussian())
                .collect();
            let norm = real::sqrt(linalg::dot(&g.mul_vec(&v), &v));
            if norm > 1e-8 {
                return Ok(v.iter().map(|c| c / norm).collect());
            }
        }
    }

    /// Phase point with `x` in the sample box and `p = g xi` for a
    /// `g`-unit random direction `xi`.
    pub fn next_phase_point(&mut self) -> Result<PhasePoint> {
        let x = self.next_point();
        let xi = self.unit_velocity(&x)?;
        let g = self.metric.eval(&x)?;
        let p = g.mul_vec(&xi);
        Ok(PhasePoint { x, p })
    }
}
