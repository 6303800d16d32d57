//! Pointwise operators attached to a pair of metrics on a shared chart.
//!
//! For metrics `g`, `gbar` the comparison operator is the matrix field
//! `g^{-1} gbar`: the unique endomorphism self-adjoint with respect to `g`
//! whose `g`-inner products reproduce `gbar`. Its characteristic polynomial
//! (computed by the Faddeev-LeVerrier recurrence), the derived family of
//! integral-generating operators, and the Sinjukov transform operator are all
//! built here. The spectrum of the comparison operator is always real; it is
//! computed through the symmetric generalized eigenproblem
//! `gbar v = lambda g v` after a Cholesky reduction, never by nonsymmetric
//! iteration.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::metric::{MetricField, MetricFn};
use crate::real;

/// Two metric fields on one chart; the unit of all equivalence analysis.
#[derive(Clone, Debug)]
pub struct MetricPair {
    g: MetricField,
    gbar: MetricField,
}

/// A mixed (1,1)-tensor evaluated at a chart point.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorAtPoint {
    pub matrix: Mat,
    pub basepoint: Vec<f64>,
}

impl OperatorAtPoint {
    fn new(matrix: Mat, basepoint: &[f64]) -> Result<OperatorAtPoint> {
        if !matrix.all_finite() {
            return Err(Error::InvalidParameter(
                "operator has non-finite entries".into(),
            ));
        }
        Ok(OperatorAtPoint {
            matrix,
            basepoint: basepoint.to_vec(),
        })
    }

    /// Coefficients of `det(M - mu E)` by the Faddeev-LeVerrier recurrence.
    pub fn char_poly(&self) -> CharPoly {
        CharPoly::of(&self.matrix)
    }
}

/// Characteristic polynomial `det(M - mu E) = c_0 mu^n + ... + c_n`,
/// stored as `c_0..c_n`. The leading coefficient is exactly `(-1)^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CharPoly {
    coeffs: Vec<f64>,
}

impl CharPoly {
    pub fn of(m: &Mat) -> CharPoly {
        assert!(m.is_square());
        let n = m.rows();
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        // Monic coefficients a_k of det(mu I - M):
        //   M_1 = I, a_1 = -tr(M);  M_{k} = M M_{k-1} + a_{k-1} I,
        //   a_k = -tr(M M_{k-1} + a_{k-1} M) / k.
        let mut coeffs = Vec::with_capacity(n + 1);
        coeffs.push(sign);
        let mut aux = Mat::identity(n);
        let mut a_prev = 0.0;
        for k in 1..=n {
            if k > 1 {
                let mut next = m.mat_mul(&aux);
                for i in 0..n {
                    next[(i, i)] += a_prev;
                }
                aux = next;
            }
            let a_k = -m.mat_mul(&aux).trace() / (k as f64);
            coeffs.push(sign * a_k);
            a_prev = a_k;
        }
        CharPoly { coeffs }
    }

    /// `c_0..c_n`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, mu: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc * mu + c)
    }
}

/// Counts clusters in an ascending list of eigenvalues separated by more
/// than `gap_tol`.
pub fn cluster_count(sorted_eigenvalues: &[f64], gap_tol: f64) -> usize {
    if sorted_eigenvalues.is_empty() {
        return 0;
    }
    1 + sorted_eigenvalues
        .windows(2)
        .filter(|w| w[1] - w[0] > gap_tol)
        .count()
}

impl MetricPair {
    pub fn new(g: MetricField, gbar: MetricField) -> Result<MetricPair> {
        if g.chart().as_ref() != gbar.chart().as_ref() {
            return Err(Error::InvalidParameter(
                "metric pair members live on different charts".into(),
            ));
        }
        Ok(MetricPair { g, gbar })
    }

    pub fn g(&self) -> &MetricField {
        &self.g
    }

    pub fn gbar(&self) -> &MetricField {
        &self.gbar
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.g.chart()
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// The comparison operator `g^{-1} gbar` at `x`. For tangent vectors
    /// `xi`, `nu` it satisfies `g(M xi, nu) = gbar(xi, nu)`.
    pub fn comparison(&self, x: &[f64]) -> Result<OperatorAtPoint> {
        let (ginv, _) = self.g.inverse_and_det(x)?;
        let gbar = self.gbar.eval(x)?;
        OperatorAtPoint::new(ginv.mat_mul(&gbar), x)
    }

    /// Characteristic polynomial of the comparison operator at `x`.
    pub fn char_poly(&self, x: &[f64]) -> Result<CharPoly> {
        Ok(self.comparison(x)?.char_poly())
    }

    /// The k-th integral-generating operator at `x` (`0 <= k < n`):
    ///
    /// ```text
    /// S_k = (det g / det gbar)^{(k+2)/(n+1)} * sum_{i=0..k} c_i M^{k-i+1}
    /// ```
    ///
    /// with `M` the comparison operator and `c_i` its characteristic
    /// coefficients. For `gbar = g` this gives `S_0 = E` and (n = 2)
    /// `S_1 = -E`; in general `S_{n-1} = -E` up to rounding.
    pub fn integral_generator(&self, x: &[f64], k: usize) -> Result<OperatorAtPoint> {
        let n = self.dim();
        if k >= n {
            return Err(Error::InvalidParameter(format!(
                "integral generator index {k} out of range (n = {n})"
            )));
        }
        let (ginv, det_g) = self.g.inverse_and_det(x)?;
        let gbar = self.gbar.eval(x)?;
        let det_gbar = linalg::lu_det(&gbar);
        let m = ginv.mat_mul(&gbar);
        let coeffs = CharPoly::of(&m);
        let factor = real::powf(det_g / det_gbar, (k as f64 + 2.0) / (n as f64 + 1.0));
        let mut acc = Mat::zeros(n, n);
        // power = M^{k-i+1} for i = k down to 0.
        let mut power = m.clone();
        for i in (0..=k).rev() {
            acc = acc.add(&power.scale(coeffs.coeffs()[i]));
            if i > 0 {
                power = power.mat_mul(&m);
            }
        }
        OperatorAtPoint::new(acc.scale(factor), x)
    }

    /// Real spectrum of the comparison operator at `x`, ascending, from the
    /// symmetric generalized problem `gbar v = lambda g v`.
    pub fn eigenvalues(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.g.eval(x)?;
        let gbar = self.gbar.eval(x)?;
        linalg::generalized_sym_eigenvalues(&gbar, &g).map_err(|e| match e {
            Error::NotPositiveDefinite { pivot, .. } => Error::NotPositiveDefinite {
                point: x.to_vec(),
                pivot,
            },
            other => other,
        })
    }

    /// Default eigenvalue clustering tolerance: `1e-6 * (1 + spectral radius)`.
    pub fn default_gap_tol(eigenvalues: &[f64]) -> f64 {
        let radius = eigenvalues.iter().fold(0.0f64, |m, v| m.max(real::abs(*v)));
        1e-6 * (1.0 + radius)
    }

    /// Number of eigenvalue clusters of the comparison operator at `x`.
    /// `gap_tol = None` uses the scale-aware default.
    pub fn distinct_eigenvalue_count(&self, x: &[f64], gap_tol: Option<f64>) -> Result<usize> {
        let eigs = self.eigenvalues(x)?;
        let tol = gap_tol.unwrap_or_else(|| Self::default_gap_tol(&eigs));
        if tol <= 0.0 {
            return Err(Error::InvalidParameter("gap_tol must be positive".into()));
        }
        Ok(cluster_count(&eigs, tol))
    }

    /// The Sinjukov transform operator at `x`:
    ///
    /// ```text
    /// B = (det gbar / det g)^{1/(n+1)} * gbar^{-1} g
    /// ```
    ///
    /// `B` is self-adjoint with respect to both metrics; the symmetry of
    /// `g B` and `gbar B` is verified on evaluation.
    pub fn sinjukov_operator(&self, x: &[f64]) -> Result<OperatorAtPoint> {
        let n = self.dim();
        let g = self.g.eval(x)?;
        let det_g = linalg::lu_det(&g);
        let gbar = self.gbar.eval(x)?;
        let (gbar_inv, det_gbar) =
            linalg::spd_inverse_det(&gbar).map_err(|pivot| Error::NotPositiveDefinite {
                point: x.to_vec(),
                pivot,
            })?;
        let factor = real::powf(det_gbar / det_g, 1.0 / (n as f64 + 1.0));
        let b = gbar_inv.mat_mul(&g).scale(factor);
        for (metric, name) in [(&g, "g*B"), (&gbar, "gbar*B")] {
            let prod = metric.mat_mul(&b);
            let (defect, i, j) = prod.symmetry_defect();
            if defect > 1e-8 * prod.norm_inf().max(1.0) {
                let _ = name;
                return Err(Error::NotSymmetric {
                    point: x.to_vec(),
                    i,
                    j,
                    defect,
                });
            }
        }
        OperatorAtPoint::new(b, x)
    }

    /// New pair with both metrics composed with `B^power`:
    /// `g'(xi, nu) = g(B^power xi, nu)` and likewise for `gbar`. Powers in
    /// `{-2, -1, 1, 2}` are the supported range; `0` (the identity
    /// transform) is rejected.
    pub fn sinjukov_transform(&self, power: i32) -> Result<MetricPair> {
        if power == 0 {
            return Err(Error::InvalidParameter(
                "Sinjukov power 0 is the identity transform".into(),
            ));
        }
        let make = |which_gbar: bool| -> MetricField {
            let pair = self.clone();
            let field_id = if which_gbar {
                format!("{}_b{power}", self.gbar.id())
            } else {
                format!("{}_b{power}", self.g.id())
            };
            let eval: Arc<MetricFn> = Arc::new(move |x: &[f64]| {
                let b = pair.sinjukov_operator(x)?;
                let b_pow = linalg::mat_powi(&b.matrix, power).ok_or_else(|| Error::Singular {
                    context: String::from("Sinjukov transform (B not invertible)"),
                    point: x.to_vec(),
                })?;
                let base = if which_gbar {
                    pair.gbar.eval(x)?
                } else {
                    pair.g.eval(x)?
                };
                let mut m = base.mat_mul(&b_pow);
                m.symmetrize();
                Ok(m)
            });
            MetricField::from_fn(self.chart().clone(), &field_id, eval).with_fd_step(
                if which_gbar {
                    self.gbar.fd_step()
                } else {
                    self.g.fd_step()
                },
            )
        };
        MetricPair::new(make(false), make(true))
    }
}
