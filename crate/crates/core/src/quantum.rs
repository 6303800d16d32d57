//! Grid-discretized second-order operators attached to a metric pair, with
//! commutator and self-adjointness diagnostics.
//!
//! For a pair on a 2d chart the k-th operator acts on scalar functions as
//!
//! ```text
//! L_k f = det(g)^{-1/2} d_i [ (S_k)^i_a det(g)^{1/2} g^{aj} d_j f ]
//! ```
//!
//! realized in divergence form on a regular grid. Writing
//! `W = sqrt(det g) S_k g^{-1}` (symmetric), the two diagonal terms use
//! half-step flux coefficients and the mixed term uses corner-sampled
//! coefficients with averaged corner gradients. Both pieces are exactly
//! symmetric as matrices, so the discrete operators are self-adjoint with
//! respect to the `sqrt(det g)`-weighted grid inner product to rounding, not
//! merely to O(h^2). The top operator (`k = n-1`) reproduces the discretized
//! Laplace-Beltrami operator with its leading minus sign, because
//! `S_{n-1} = -E`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::metric::MetricField;
use crate::operators::MetricPair;
use crate::real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridBoundary {
    /// Indices wrap on both axes.
    Periodic,
    /// The function is extended by zero outside the grid.
    Zero,
}

/// A regular grid over a chart rectangle.
///
/// Periodic grids place nodes at `lo + i h` with `h = (hi - lo)/n` (the seam
/// node appears once); zero-boundary grids place nodes strictly inside at
/// `lo + (i+1) h` with `h = (hi - lo)/(n + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub bounds: [(f64, f64); 2],
    pub resolution: [usize; 2],
    pub boundary: GridBoundary,
}

impl GridSpec {
    pub fn new(
        bounds: [(f64, f64); 2],
        resolution: [usize; 2],
        boundary: GridBoundary,
    ) -> Result<GridSpec> {
        for &(lo, hi) in &bounds {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidParameter(
                    "grid bounds must be finite ordered intervals".into(),
                ));
            }
        }
        if resolution.iter().any(|r| *r < 8) {
            return Err(Error::InvalidParameter(
                "grid resolution must be at least 8 per axis".into(),
            ));
        }
        Ok(GridSpec {
            bounds,
            resolution,
            boundary,
        })
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        match self.boundary {
            GridBoundary::Periodic => (hi - lo) / self.resolution[axis] as f64,
            GridBoundary::Zero => (hi - lo) / (self.resolution[axis] + 1) as f64,
        }
    }

    pub fn node_coord(&self, axis: usize, idx: usize) -> f64 {
        let (lo, _) = self.bounds[axis];
        match self.boundary {
            GridBoundary::Periodic => lo + idx as f64 * self.spacing(axis),
            GridBoundary::Zero => lo + (idx as f64 + 1.0) * self.spacing(axis),
        }
    }

    /// Position offset by half a cell below node `idx` (wrapped into the
    /// rectangle on periodic grids).
    fn half_coord(&self, axis: usize, idx: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        let pos = self.node_coord(axis, idx) - 0.5 * self.spacing(axis);
        match self.boundary {
            GridBoundary::Periodic => lo + real::rem_euclid(pos - lo, hi - lo),
            GridBoundary::Zero => pos,
        }
    }

    pub fn node_count(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    #[inline]
    fn flat(&self, i: usize, j: usize) -> usize {
        i * self.resolution[1] + j
    }
}

/// Real scalar samples on a [`GridSpec`].
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn from_fn(spec: &GridSpec, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let (n1, n2) = (spec.resolution[0], spec.resolution[1]);
        let mut values = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            let x1 = spec.node_coord(0, i);
            for j in 0..n2 {
                values.push(f(x1, spec.node_coord(1, j)));
            }
        }
        GridFunction {
            spec: spec.clone(),
            values,
        }
    }

    pub fn zeros(spec: &GridSpec) -> GridFunction {
        GridFunction {
            spec: spec.clone(),
            values: vec![0.0; spec.node_count()],
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(real::abs(*v)))
    }

    /// Boundary-aware sample access.
    #[inline]
    fn get(&self, i: i64, j: i64) -> f64 {
        let (n1, n2) = (
            self.spec.resolution[0] as i64,
            self.spec.resolution[1] as i64,
        );
        match self.spec.boundary {
            GridBoundary::Periodic => {
                let i = i.rem_euclid(n1) as usize;
                let j = j.rem_euclid(n2) as usize;
                self.values[self.spec.flat(i, j)]
            }
            GridBoundary::Zero => {
                if i < 0 || j < 0 || i >= n1 || j >= n2 {
                    0.0
                } else {
                    self.values[self.spec.flat(i as usize, j as usize)]
                }
            }
        }
    }
}

/// A linear divergence-form operator with precomputed coefficient fields.
#[derive(Clone, Debug)]
pub struct GridOperator {
    spec: GridSpec,
    id: String,
    /// `1/sqrt(det g)` at nodes.
    inv_sqrt_det: Vec<f64>,
    /// `sqrt(det g)` at nodes (quadrature weight).
    sqrt_det: Vec<f64>,
    /// `W_11` on x-faces: index `fi * n2 + j`, face `fi` between nodes
    /// `fi-1` and `fi` along axis 0. Zero grids carry `n1+1` face rows.
    w11: Vec<f64>,
    /// `W_22` on y-faces: index `i * stride + fj`.
    w22: Vec<f64>,
    /// `W_12` on corners: corner `(ci, cj)` down-left of node `(ci, cj)`.
    w12: Vec<f64>,
}

/// Number of face/corner slots along an axis.
fn extended(spec: &GridSpec, axis: usize) -> usize {
    match spec.boundary {
        GridBoundary::Periodic => spec.resolution[axis],
        GridBoundary::Zero => spec.resolution[axis] + 1,
    }
}

struct CoefficientFields {
    inv_sqrt_det: Vec<f64>,
    sqrt_det: Vec<f64>,
    w11: Vec<f64>,
    w22: Vec<f64>,
    w12: Vec<f64>,
}

fn coefficient_fields(
    spec: &GridSpec,
    mut w_of: impl FnMut(&[f64]) -> Result<Mat>,
    mut det_of: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<CoefficientFields> {
    let (n1, n2) = (spec.resolution[0], spec.resolution[1]);
    let (e1, e2) = (extended(spec, 0), extended(spec, 1));
    let mut inv_sqrt_det = Vec::with_capacity(n1 * n2);
    let mut sqrt_det = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let x = [spec.node_coord(0, i), spec.node_coord(1, j)];
            let det = det_of(&x)?;
            let root = real::sqrt(det);
            sqrt_det.push(root);
            inv_sqrt_det.push(1.0 / root);
        }
    }
    let mut w11 = Vec::with_capacity(e1 * n2);
    for fi in 0..e1 {
        for j in 0..n2 {
            let x = [spec.half_coord(0, fi), spec.node_coord(1, j)];
            w11.push(w_of(&x)?[(0, 0)]);
        }
    }
    let mut w22 = Vec::with_capacity(n1 * e2);
    for i in 0..n1 {
        for fj in 0..e2 {
            let x = [spec.node_coord(0, i), spec.half_coord(1, fj)];
            w22.push(w_of(&x)?[(1, 1)]);
        }
    }
    let mut w12 = Vec::with_capacity(e1 * e2);
    for ci in 0..e1 {
        for cj in 0..e2 {
            let x = [spec.half_coord(0, ci), spec.half_coord(1, cj)];
            w12.push(w_of(&x)?[(0, 1)]);
        }
    }
    Ok(CoefficientFields {
        inv_sqrt_det,
        sqrt_det,
        w11,
        w22,
        w12,
    })
}

/// Builds the k-th commuting operator of the pair on the given grid.
pub fn build_quantum_operator(
    pair: &MetricPair,
    k: usize,
    spec: &GridSpec,
) -> Result<GridOperator> {
    if pair.dim() != 2 {
        return Err(Error::InvalidParameter(
            "grid operators support 2d charts".into(),
        ));
    }
    let w_of = |x: &[f64]| -> Result<Mat> {
        let s = pair.integral_generator(x, k)?.matrix;
        let (ginv, det) = pair.g().inverse_and_det(x)?;
        let mut w = s.mat_mul(&ginv).scale(real::sqrt(det));
        w.symmetrize();
        Ok(w)
    };
    let det_of = |x: &[f64]| -> Result<f64> { Ok(pair.g().inverse_and_det(x)?.1) };
    let fields = coefficient_fields(spec, w_of, det_of)?;
    Ok(GridOperator {
        spec: spec.clone(),
        id: alloc::format!("I{k}"),
        inv_sqrt_det: fields.inv_sqrt_det,
        sqrt_det: fields.sqrt_det,
        w11: fields.w11,
        w22: fields.w22,
        w12: fields.w12,
    })
}

/// Directly discretized Laplace-Beltrami operator of a single metric (with
/// its leading minus sign), bypassing the integral-generator route.
pub fn build_laplacian(metric: &MetricField, spec: &GridSpec) -> Result<GridOperator> {
    if metric.dim() != 2 {
        return Err(Error::InvalidParameter(
            "grid operators support 2d charts".into(),
        ));
    }
    let w_of = |x: &[f64]| -> Result<Mat> {
        let (ginv, det) = metric.inverse_and_det(x)?;
        Ok(ginv.scale(-real::sqrt(det)))
    };
    let det_of = |x: &[f64]| -> Result<f64> { Ok(metric.inverse_and_det(x)?.1) };
    let fields = coefficient_fields(spec, w_of, det_of)?;
    Ok(GridOperator {
        spec: spec.clone(),
        id: String::from("laplacian"),
        inv_sqrt_det: fields.inv_sqrt_det,
        sqrt_det: fields.sqrt_det,
        w11: fields.w11,
        w22: fields.w22,
        w12: fields.w12,
    })
}

impl GridOperator {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Applies the operator. Linear in the input to rounding.
    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        assert_eq!(f.spec, self.spec, "grid mismatch");
        let spec = &self.spec;
        let (n1, n2) = (spec.resolution[0], spec.resolution[1]);
        let (h1, h2) = (spec.spacing(0), spec.spacing(1));
        let e2 = extended(spec, 1);
        let periodic = spec.boundary == GridBoundary::Periodic;
        let mut out = GridFunction::zeros(spec);

        // Face/corner index convention: slot `s` along an axis refers to the face
        // or corner *below* node `s`; on periodic grids node n wraps to 0.
        let wrap = |s: i64, n: usize| -> usize {
            if periodic {
                s.rem_euclid(n as i64) as usize
            } else {
                s as usize
            }
        };

        for i in 0..n1 {
            let ii = i as i64;
            for j in 0..n2 {
                let jj = j as i64;
                let center = f.get(ii, jj);

                // Diagonal flux terms with half-step coefficients.
                let w11_lo = self.w11[wrap(ii, extended(spec, 0)) * n2 + j];
                let w11_hi = self.w11[wrap(ii + 1, extended(spec, 0)) * n2 + j];
                let flux_x = (w11_hi * (f.get(ii + 1, jj) - center)
                    - w11_lo * (center - f.get(ii - 1, jj)))
                    / (h1 * h1);

                let w22_lo = self.w22[i * e2 + wrap(jj, e2)];
                let w22_hi = self.w22[i * e2 + wrap(jj + 1, e2)];
                let flux_y = (w22_hi * (f.get(ii, jj + 1) - center)
                    - w22_lo * (center - f.get(ii, jj - 1)))
                    / (h2 * h2);

                // Mixed terms with corner coefficients and averaged corner
                // gradients; symmetric by construction.
                let corner = |ci: i64, cj: i64| -> f64 {
                    self.w12[wrap(ci, extended(spec, 0)) * e2 + wrap(cj, e2)]
                };
                // d2 f at the four corners around the node.
                let g2 = |ci: i64, cj: i64| -> f64 {
                    (f.get(ci - 1, cj) + f.get(ci, cj) - f.get(ci - 1, cj - 1) - f.get(ci, cj - 1))
                        / (2.0 * h2)
                };
                let g1 = |ci: i64, cj: i64| -> f64 {
                    (f.get(ci, cj - 1) + f.get(ci, cj) - f.get(ci - 1, cj - 1) - f.get(ci - 1, cj))
                        / (2.0 * h1)
                };
                let mixed_x = (corner(ii + 1, jj) * g2(ii + 1, jj)
                    + corner(ii + 1, jj + 1) * g2(ii + 1, jj + 1)
                    - corner(ii, jj) * g2(ii, jj)
                    - corner(ii, jj + 1) * g2(ii, jj + 1))
                    / (2.0 * h1);
                let mixed_y = (corner(ii, jj + 1) * g1(ii, jj + 1)
                    + corner(ii + 1, jj + 1) * g1(ii + 1, jj + 1)
                    - corner(ii, jj) * g1(ii, jj)
                    - corner(ii + 1, jj) * g1(ii + 1, jj))
                    / (2.0 * h2);

                let idx = spec.flat(i, j);
                out.values[idx] = self.inv_sqrt_det[idx] * (flux_x + flux_y + mixed_x + mixed_y);
            }
        }
        out
    }

    /// Grid quadrature `<u, v> = sum u v sqrt(det g) h1 h2`.
    pub fn weighted_inner(&self, u: &GridFunction, v: &GridFunction) -> f64 {
        assert_eq!(u.spec, self.spec);
        assert_eq!(v.spec, self.spec);
        let cell = self.spec.spacing(0) * self.spec.spacing(1);
        let mut acc = 0.0;
        for idx in 0..self.spec.node_count() {
            acc += u.values[idx] * v.values[idx] * self.sqrt_det[idx];
        }
        acc * cell
    }
}

/// Max over test functions of `|A B f - B A f|_inf / |f|_inf`.
pub fn commutator_norm(a: &GridOperator, b: &GridOperator, tests: &[GridFunction]) -> f64 {
    let mut worst = 0.0f64;
    for f in tests {
        let ab = a.apply(&b.apply(f));
        let ba = b.apply(&a.apply(f));
        let mut diff = 0.0f64;
        for (x, y) in ab.values.iter().zip(&ba.values) {
            diff = diff.max(real::abs(x - y));
        }
        worst = worst.max(diff / f.norm_inf().max(1e-300));
    }
    worst
}

/// `|<op f, h> - <f, op h>|` in the `sqrt(det g)`-weighted quadrature.
pub fn adjoint_defect(op: &GridOperator, f: &GridFunction, h: &GridFunction) -> f64 {
    let lhs = op.weighted_inner(&op.apply(f), h);
    let rhs = op.weighted_inner(f, &op.apply(h));
    real::abs(lhs - rhs)
}

/// Standard 8-function test suite: tensor trigonometric modes on periodic
/// grids, Gaussian bumps (supported away from the walls) on zero grids.
pub fn test_functions(spec: &GridSpec) -> Vec<GridFunction> {
    let (lo1, hi1) = spec.bounds[0];
    let (lo2, hi2) = spec.bounds[1];
    let (len1, len2) = (hi1 - lo1, hi2 - lo2);
    match spec.boundary {
        GridBoundary::Periodic => {
            let modes: [(f64, f64, bool, bool); 8] = [
                (1.0, 0.0, true, true),
                (0.0, 1.0, true, true),
                (1.0, 1.0, true, true),
                (1.0, 1.0, false, true),
                (1.0, 1.0, true, false),
                (2.0, 1.0, true, true),
                (1.0, 2.0, false, false),
                (2.0, 2.0, true, true),
            ];
            modes
                .iter()
                .map(|&(k1, k2, sin1, sin2)| {
                    GridFunction::from_fn(spec, |x1, x2| {
                        let s1 = core::f64::consts::TAU * k1 * (x1 - lo1) / len1;
                        let s2 = core::f64::consts::TAU * k2 * (x2 - lo2) / len2;
                        let f1 = if k1 == 0.0 {
                            1.0
                        } else if sin1 {
                            real::sin(s1)
                        } else {
                            real::cos(s1)
                        };
                        let f2 = if k2 == 0.0 {
                            1.0
                        } else if sin2 {
                            real::sin(s2)
                        } else {
                            real::cos(s2)
                        };
                        f1 * f2
                    })
                })
                .collect()
        }
        GridBoundary::Zero => {
            // Widths keep the bumps resolved on a 32^2 grid while tails at
            // the walls stay below ~1e-7 of the peak: wider bumps stall the
            // commutator convergence on a wall-noise floor, narrower ones
            // push the asymptotic regime past the coarse grids.
            let centers: [(f64, f64, f64); 8] = [
                (0.500, 0.500, 0.090),
                (0.510, 0.490, 0.085),
                (0.490, 0.510, 0.085),
                (0.515, 0.515, 0.080),
                (0.485, 0.485, 0.080),
                (0.520, 0.480, 0.075),
                (0.480, 0.520, 0.075),
                (0.500, 0.480, 0.070),
            ];
            centers
                .iter()
                .map(|&(cx, cy, sigma)| {
                    GridFunction::from_fn(spec, |x1, x2| {
                        let dx = (x1 - lo1) / len1 - cx;
                        let dy = (x2 - lo2) / len2 - cy;
                        real::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
                    })
                })
                .collect()
        }
    }
}

/// Least-squares convergence order of `norms` against grid resolutions:
/// the slope of `-log(norm)` versus `log(resolution)`. Returns infinity when
/// every norm is exactly zero.
pub fn fitted_order(resolutions: &[usize], norms: &[f64]) -> f64 {
    assert_eq!(resolutions.len(), norms.len());
    if norms.iter().all(|v| *v == 0.0) {
        return f64::INFINITY;
    }
    let pairs: Vec<(f64, f64)> = resolutions
        .iter()
        .zip(norms)
        .map(|(r, v)| (real::ln(*r as f64), real::ln(v.max(1e-300))))
        .collect();
    let n = pairs.len() as f64;
    let mean_t = pairs.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in &pairs {
        num += (t - mean_t) * (y - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    -num / den
}
