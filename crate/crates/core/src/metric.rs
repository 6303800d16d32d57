//! Metric fields on a chart: evaluation, inverses, determinants, partial
//! derivatives, and metrics induced by or pulled back along smooth maps.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::linalg::{self, Mat};
use crate::real;

/// Default finite-difference base step; scaled per coordinate by
/// `max(1, |x_i|)` at use.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Symmetry tolerance for evaluated metric matrices.
const SYMMETRY_TOL: f64 = 1e-12;

pub type MetricFn = dyn Fn(&[f64]) -> Result<Mat> + Send + Sync;
pub type MapFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;

#[derive(Clone)]
enum MetricSource {
    Exprs(Arc<Vec<Vec<Expression>>>),
    Builtin(Arc<MetricFn>),
}

/// A smooth field of symmetric positive-definite matrices over a chart.
///
/// Every evaluation wraps periodic coordinates, verifies the chart domain,
/// checks symmetry (within `1e-12`, scale-adjusted), averages the matrix with
/// its transpose, and confirms positive definiteness through a Cholesky
/// factorization.
#[derive(Clone)]
pub struct MetricField {
    chart: Arc<Chart>,
    source: MetricSource,
    fd_step: f64,
    id: String,
}

impl core::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MetricField")
            .field("id", &self.id)
            .field("dim", &self.chart.dim())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl MetricField {
    /// Metric with entries given as parsed expressions (row-major `n x n`).
    pub fn from_exprs(
        chart: Arc<Chart>,
        entries: Vec<Vec<Expression>>,
        fd_step: f64,
    ) -> Result<MetricField> {
        let n = chart.dim();
        if entries.len() != n || entries.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter(format!(
                "metric needs {n}x{n} entries"
            )));
        }
        if fd_step <= 0.0 {
            return Err(Error::InvalidParameter("fd_step must be positive".into()));
        }
        Ok(MetricField {
            chart,
            source: MetricSource::Exprs(Arc::new(entries)),
            fd_step,
            id: "expr".to_string(),
        })
    }

    /// Metric backed by a closed-form evaluator (catalog entries, pullbacks,
    /// transformed pairs). The evaluator receives wrapped in-domain points.
    pub fn from_fn(chart: Arc<Chart>, id: &str, f: Arc<MetricFn>) -> MetricField {
        MetricField {
            chart,
            source: MetricSource::Builtin(f),
            fd_step: DEFAULT_FD_STEP,
            id: id.to_string(),
        }
    }

    pub fn with_id(mut self, id: &str) -> MetricField {
        self.id = id.to_string();
        self
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> MetricField {
        self.fd_step = fd_step;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// Evaluates the metric matrix at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Mat> {
        self.chart.check_contains(x)?;
        let w = self.chart.wrapped(x);
        let mut m = match &self.source {
            MetricSource::Exprs(entries) => {
                let n = self.dim();
                let mut m = Mat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = entries[i][j].eval(&w)?;
                    }
                }
                m
            }
            MetricSource::Builtin(f) => f(&w)?,
        };
        let (defect, i, j) = m.symmetry_defect();
        if defect > SYMMETRY_TOL * m.norm_inf().max(1.0) {
            return Err(Error::NotSymmetric {
                point: x.to_vec(),
                i,
                j,
                defect,
            });
        }
        m.symmetrize();
        if let Err(pivot) = linalg::cholesky(&m) {
            return Err(Error::NotPositiveDefinite {
                point: x.to_vec(),
                pivot,
            });
        }
        Ok(m)
    }

    /// Inverse matrix and determinant at `x`; the determinant is positive.
    pub fn inverse_and_det(&self, x: &[f64]) -> Result<(Mat, f64)> {
        let m = self.eval(x)?;
        linalg::spd_inverse_det(&m).map_err(|pivot| Error::NotPositiveDefinite {
            point: x.to_vec(),
            pivot,
        })
    }

    /// Central-difference partial derivative of the metric along coordinate
    /// `i`, with the field's own step scaled by `max(1, |x_i|)`.
    pub fn partials(&self, x: &[f64], i: usize) -> Result<Mat> {
        let h = self.fd_step * real::abs(x[i]).max(1.0);
        self.partials_with_step(x, i, h)
    }

    /// Central-difference partial with an explicit step.
    pub fn partials_with_step(&self, x: &[f64], i: usize, h: f64) -> Result<Mat> {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let gp = self.eval(&plus)?;
        let gm = self.eval(&minus)?;
        Ok(gp.sub(&gm).scale(1.0 / (2.0 * h)))
    }
}

// ---------------------------------------------------------------------------
// Embeddings and pullbacks
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum MapSource {
    Exprs(Arc<Vec<Expression>>),
    Builtin(Arc<MapFn>),
}

/// Metric carried by the target coordinates of an [`EmbeddingMap`].
#[derive(Clone)]
pub enum AmbientMetric {
    Euclidean,
    Field(Arc<MetricFn>),
}

/// A smooth map from the chart into `m` ambient coordinates carrying a
/// metric. With `m = n` it doubles as a diffeomorphism for pullbacks.
#[derive(Clone)]
pub struct EmbeddingMap {
    chart: Arc<Chart>,
    ambient_dim: usize,
    map: MapSource,
    ambient: AmbientMetric,
    fd_step: f64,
}

/// Numeric-rank tolerance for embedding Jacobians.
const JACOBIAN_RANK_TOL: f64 = 1e-8;

impl EmbeddingMap {
    pub fn from_exprs(
        chart: Arc<Chart>,
        components: Vec<Expression>,
        ambient: AmbientMetric,
    ) -> Result<EmbeddingMap> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "embedding needs at least one component".into(),
            ));
        }
        let ambient_dim = components.len();
        Ok(EmbeddingMap {
            chart,
            ambient_dim,
            map: MapSource::Exprs(Arc::new(components)),
            ambient,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    pub fn from_fn(
        chart: Arc<Chart>,
        ambient_dim: usize,
        f: Arc<MapFn>,
        ambient: AmbientMetric,
    ) -> EmbeddingMap {
        EmbeddingMap {
            chart,
            ambient_dim,
            map: MapSource::Builtin(f),
            ambient,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Evaluates the map at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.chart.check_contains(x)?;
        let w = self.chart.wrapped(x);
        let y = match &self.map {
            MapSource::Exprs(components) => {
                let mut y = Vec::with_capacity(self.ambient_dim);
                for c in components.iter() {
                    y.push(c.eval(&w)?);
                }
                y
            }
            MapSource::Builtin(f) => f(&w)?,
        };
        if y.len() != self.ambient_dim {
            return Err(Error::InvalidParameter(format!(
                "embedding produced {} components, declared {}",
                y.len(),
                self.ambient_dim
            )));
        }
        Ok(y)
    }

    /// Finite-difference Jacobian (`m x n`), verified to have full column
    /// rank within a relative singular-value tolerance of `1e-8`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Mat> {
        let n = self.chart.dim();
        let mut j = Mat::zeros(self.ambient_dim, n);
        for col in 0..n {
            let h = self.fd_step * real::abs(x[col]).max(1.0);
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[col] += h;
            minus[col] -= h;
            let yp = self.eval(&plus)?;
            let ym = self.eval(&minus)?;
            for row in 0..self.ambient_dim {
                j[(row, col)] = (yp[row] - ym[row]) / (2.0 * h);
            }
        }
        let sv = linalg::singular_values(&j)?;
        let (smax, smin) = (sv[0], sv[n - 1]);
        if smin.is_nan() || smin <= JACOBIAN_RANK_TOL * smax {
            return Err(Error::RankDeficient {
                point: x.to_vec(),
                ratio: if smax > 0.0 { smin / smax } else { 0.0 },
            });
        }
        Ok(j)
    }

    fn ambient_matrix(&self, y: &[f64]) -> Result<Mat> {
        match &self.ambient {
            AmbientMetric::Euclidean => Ok(Mat::identity(self.ambient_dim)),
            AmbientMetric::Field(f) => f(y),
        }
    }

    /// First fundamental form `J^T A(e(x)) J` of the map, as a metric field.
    pub fn induced_metric(&self, id: &str) -> MetricField {
        let this = self.clone();
        MetricField::from_fn(
            self.chart.clone(),
            id,
            Arc::new(move |x: &[f64]| {
                let j = this.jacobian(x)?;
                let y = this.eval(x)?;
                let a = this.ambient_matrix(&y)?;
                let mut m = j.transpose().mat_mul(&a).mat_mul(&j);
                m.symmetrize();
                Ok(m)
            }),
        )
    }

    /// Pullback of the ambient metric under the map, requiring `m = n`.
    ///
    /// `(phi^* g)(x) = J(x)^T g(phi(x)) J(x)`; the Jacobian must be
    /// nonsingular on the domain. Numerically this is the same assembly as
    /// [`EmbeddingMap::induced_metric`], and the square case inherits its
    /// rank (here: nonsingularity) check.
    pub fn pullback_metric(&self, id: &str) -> Result<MetricField> {
        if self.ambient_dim != self.chart.dim() {
            return Err(Error::InvalidParameter(format!(
                "pullback needs a square map; got {} -> {}",
                self.chart.dim(),
                self.ambient_dim
            )));
        }
        Ok(self.induced_metric(id))
    }
}
