//! Built-in metric pairs on the two-sphere chart, plus a flat non-equivalent
//! control pair, and the pointwise-proportionality scan.
//!
//! All sphere-family entries live on the spherical chart `(theta, phi)` with
//! polar caps excised (`theta` in `(0.05, pi - 0.05)`, `phi` periodic).
//! Verification samples are drawn from a narrower band away from the caps.
//!
//! The sphere-map pair takes the round metric together with its pullback
//! under `u -> A u / |A u|` for a nondegenerate matrix `A`; that map carries
//! great circles to great circles, so the pair is geodesically equivalent.
//! With `A = diag(1/sqrt(a_1), 1/sqrt(a_2), 1/sqrt(a_3))` its transform
//! chain reproduces the other catalog entries under the scaled-sphere
//! identification `x_i = sqrt(a_i) u_i` (see the builders below):
//!
//! * power +1 first member  = `(a_1 a_2 a_3)^{-1/3}` times the ellipsoid
//!   metric of semi-axes-squared `a`;
//! * power +2 second member = `(a_1 a_2 a_3)^{-2/3}` times the
//!   inverse-square-weighted sphere metric (the `poisson-sphere` entry's
//!   first member).

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::linalg::{self, Mat};
use crate::metric::{AmbientMetric, EmbeddingMap, MetricField, DEFAULT_FD_STEP};
use crate::operators::MetricPair;
use crate::real;

/// Half-angle of the excised polar caps.
pub const POLAR_CAP: f64 = 0.05;

/// The single working chart for the sphere family.
pub fn sphere_chart() -> Arc<Chart> {
    let pi = core::f64::consts::PI;
    let chart = Chart::new(
        &["theta", "phi"],
        &[(POLAR_CAP, pi - POLAR_CAP), (0.0, core::f64::consts::TAU)],
        &[false, true],
    )
    .unwrap()
    .with_sample_box(&[(0.4, pi - 0.4), (0.0, core::f64::consts::TAU)])
    .unwrap();
    Arc::new(chart)
}

/// The unit-sphere point of chart coordinates `(theta, phi)`.
pub fn sphere_point(x: &[f64]) -> [f64; 3] {
    let (st, ct) = (real::sin(x[0]), real::cos(x[0]));
    let (sp, cp) = (real::sin(x[1]), real::cos(x[1]));
    [st * cp, st * sp, ct]
}

/// Analytic Jacobian (3x2) of [`sphere_point`].
fn sphere_jacobian(x: &[f64]) -> Mat {
    let (st, ct) = (real::sin(x[0]), real::cos(x[0]));
    let (sp, cp) = (real::sin(x[1]), real::cos(x[1]));
    Mat::from_rows(&[&[ct * cp, -st * sp], &[ct * sp, st * cp], &[-st, 0.0]])
}

/// Round-sphere metric `diag(1, sin^2 theta)` on the spherical chart.
pub fn round_sphere_metric() -> MetricField {
    MetricField::from_fn(
        sphere_chart(),
        "sphere.g",
        Arc::new(|x: &[f64]| {
            let s = real::sin(x[0]);
            Ok(Mat::diag(&[1.0, s * s]))
        }),
    )
}

/// Round metric plus its pullback under the sphere self-map
/// `u -> A u / |A u|`, for a nondegenerate `(n+1) x (n+1)` matrix `A`.
pub fn beltrami_pair(a: &Mat) -> Result<MetricPair> {
    if !a.is_square() || a.rows() != 3 {
        return Err(Error::InvalidParameter(
            "sphere-map matrix must be 3x3 for the 2-sphere chart".into(),
        ));
    }
    if real::abs(linalg::lu_det(a)) < 1e-12 {
        return Err(Error::Singular {
            context: "sphere-map matrix".to_string(),
            point: Vec::new(),
        });
    }
    let g = round_sphere_metric();
    let a_owned = a.clone();
    let gbar = MetricField::from_fn(
        sphere_chart(),
        "sphere.map_pullback",
        Arc::new(move |x: &[f64]| {
            let u = sphere_point(x);
            let ju = sphere_jacobian(x);
            let w = a_owned.mul_vec(&u);
            let r2 = linalg::dot(&w, &w);
            let r = real::sqrt(r2);
            // d(w/|w|) = (I/r - w w^T / r^3) A J_u
            let jw = a_owned.mat_mul(&ju);
            let mut je = Mat::zeros(3, 2);
            for col in 0..2 {
                let jcol = [jw[(0, col)], jw[(1, col)], jw[(2, col)]];
                let w_dot = linalg::dot(&w, &jcol);
                for row in 0..3 {
                    je[(row, col)] = jcol[row] / r - w[row] * w_dot / (r2 * r);
                }
            }
            let mut m = je.transpose().mat_mul(&je);
            m.symmetrize();
            Ok(m)
        }),
    );
    MetricPair::new(g, gbar)
}

/// Convenience wrapper: diagonal sphere-map matrix.
pub fn beltrami_pair_diag(diag: &[f64]) -> Result<MetricPair> {
    if diag.len() != 3 {
        return Err(Error::InvalidParameter(
            "diagonal sphere-map parameter needs 3 entries".into(),
        ));
    }
    beltrami_pair(&Mat::diag(diag))
}

fn check_axes(axes: &[f64]) -> Result<()> {
    if axes.len() != 3 {
        return Err(Error::InvalidParameter(
            "semi-axes parameter needs 3 entries".into(),
        ));
    }
    if axes.iter().any(|a| !a.is_finite() || *a <= 0.0) {
        return Err(Error::InvalidParameter(
            "semi-axes-squared must all be positive".into(),
        ));
    }
    Ok(())
}

/// The diagonal matrix `diag(1/sqrt(a_i))` whose sphere-map pair transforms
/// to the ellipsoid pair with semi-axes-squared `a` (documented
/// identification).
pub fn sphere_map_matrix_for_axes(axes: &[f64]) -> Result<Mat> {
    check_axes(axes)?;
    Ok(Mat::diag(&[
        1.0 / real::sqrt(axes[0]),
        1.0 / real::sqrt(axes[1]),
        1.0 / real::sqrt(axes[2]),
    ]))
}

/// Constant conformal factor relating the power +1 transform of the
/// sphere-map pair to the ellipsoid metric: `(a_1 a_2 a_3)^{-1/3}`.
pub fn ellipsoid_identification_factor(axes: &[f64]) -> f64 {
    real::powf(axes[0] * axes[1] * axes[2], -1.0 / 3.0)
}

/// Constant conformal factor relating the power +2 transform's second member
/// to the poisson-sphere first member: `(a_1 a_2 a_3)^{-2/3}`.
pub fn poisson_identification_factor(axes: &[f64]) -> f64 {
    real::powf(axes[0] * axes[1] * axes[2], -2.0 / 3.0)
}

/// Ellipsoid pair on the scaled-sphere parametrization `x_i = sqrt(a_i) u_i`
/// of `sum x_i^2 / a_i = 1`:
///
/// * `g` restricts the Euclidean ambient metric;
/// * `gbar` restricts `[sum (x_i/a_i)^2]^{-1} diag(1/a_i)`.
pub fn ellipsoid_pair(axes: &[f64]) -> Result<MetricPair> {
    check_axes(axes)?;
    let a = [axes[0], axes[1], axes[2]];
    let g = MetricField::from_fn(
        sphere_chart(),
        "ellipsoid.g",
        Arc::new(move |x: &[f64]| {
            let ju = sphere_jacobian(x);
            let d2 = Mat::diag(&a);
            let mut m = ju.transpose().mat_mul(&d2).mat_mul(&ju);
            m.symmetrize();
            Ok(m)
        }),
    );
    let a2 = [axes[0], axes[1], axes[2]];
    let gbar = MetricField::from_fn(
        sphere_chart(),
        "ellipsoid.gbar",
        Arc::new(move |x: &[f64]| {
            let u = sphere_point(x);
            let ju = sphere_jacobian(x);
            // Ambient x = D u with D = diag(sqrt(a)); conformal factor
            // 1 / sum (x_i/a_i)^2 = 1 / sum (u_i^2 / a_i).
            let conf = 1.0 / (u[0] * u[0] / a2[0] + u[1] * u[1] / a2[1] + u[2] * u[2] / a2[2]);
            let amb = Mat::diag(&[conf / a2[0], conf / a2[1], conf / a2[2]]);
            let d = Mat::diag(&[real::sqrt(a2[0]), real::sqrt(a2[1]), real::sqrt(a2[2])]);
            let je = d.mat_mul(&ju);
            let mut m = je.transpose().mat_mul(&amb).mat_mul(&je);
            m.symmetrize();
            Ok(m)
        }),
    );
    MetricPair::new(g, gbar)
}

/// Poisson-sphere pair on the same parametrization of the ellipsoid:
///
/// * `g` restricts `[sum x_i^2/a_i^2]^{-1}` times the Euclidean metric;
/// * `gbar` restricts `sum a_i (dx^i)^2 - (sum x_i dx^i)^2`, with the
///   subtracted rank-one term formed exactly.
pub fn poisson_pair(axes: &[f64]) -> Result<MetricPair> {
    check_axes(axes)?;
    let a = [axes[0], axes[1], axes[2]];
    let g = MetricField::from_fn(
        sphere_chart(),
        "poisson.g",
        Arc::new(move |x: &[f64]| {
            let u = sphere_point(x);
            let ju = sphere_jacobian(x);
            let d = Mat::diag(&[real::sqrt(a[0]), real::sqrt(a[1]), real::sqrt(a[2])]);
            let je = d.mat_mul(&ju);
            // x_i = sqrt(a_i) u_i, so sum x_i^2/a_i^2 = sum u_i^2 / a_i.
            let conf = 1.0 / (u[0] * u[0] / a[0] + u[1] * u[1] / a[1] + u[2] * u[2] / a[2]);
            let mut m = je.transpose().mat_mul(&je).scale(conf);
            m.symmetrize();
            Ok(m)
        }),
    );
    let a2 = [axes[0], axes[1], axes[2]];
    let gbar = MetricField::from_fn(
        sphere_chart(),
        "poisson.gbar",
        Arc::new(move |x: &[f64]| {
            let u = sphere_point(x);
            let ju = sphere_jacobian(x);
            let d = Mat::diag(&[real::sqrt(a2[0]), real::sqrt(a2[1]), real::sqrt(a2[2])]);
            let je = d.mat_mul(&ju);
            let ambient_x = [
                real::sqrt(a2[0]) * u[0],
                real::sqrt(a2[1]) * u[1],
                real::sqrt(a2[2]) * u[2],
            ];
            // amb = diag(a) - x x^T
            let mut amb = Mat::diag(&a2);
            for i in 0..3 {
                for j in 0..3 {
                    amb[(i, j)] -= ambient_x[i] * ambient_x[j];
                }
            }
            let mut m = je.transpose().mat_mul(&amb).mat_mul(&je);
            m.symmetrize();
            Ok(m)
        }),
    );
    MetricPair::new(g, gbar)
}

/// Flat metric against a curved one on a box; NOT geodesically equivalent.
/// Both members evaluate to the identity at the origin (proportional at a
/// point, not equivalent globally).
pub fn control_pair_nonequivalent() -> MetricPair {
    let chart = Arc::new(
        Chart::new(&["x1", "x2"], &[(-0.9, 0.9), (-0.9, 0.9)], &[false, false])
            .unwrap()
            .with_sample_box(&[(-0.45, 0.45), (-0.45, 0.45)])
            .unwrap(),
    );
    let vars = ["x1", "x2"];
    let parse_row = |row: [&str; 2]| -> Vec<Expression> {
        row.iter()
            .map(|s| Expression::parse(s, &vars).unwrap())
            .collect()
    };
    let g = MetricField::from_exprs(
        chart.clone(),
        vec![parse_row(["1", "0"]), parse_row(["0", "1"])],
        DEFAULT_FD_STEP,
    )
    .unwrap()
    .with_id("control.g");
    let gbar = MetricField::from_exprs(
        chart,
        vec![parse_row(["1+x1*x2", "0"]), parse_row(["0", "1"])],
        DEFAULT_FD_STEP,
    )
    .unwrap()
    .with_id("control.gbar");
    MetricPair::new(g, gbar).unwrap()
}

// ---------------------------------------------------------------------------
// Auxiliary embeddings (cross-check routes for the sphere family)
// ---------------------------------------------------------------------------

/// Expression-based embedding of the spherical chart into Euclidean 3-space.
pub fn sphere_embedding_exprs() -> EmbeddingMap {
    let vars = ["theta", "phi"];
    EmbeddingMap::from_exprs(
        sphere_chart(),
        vec![
            Expression::parse("sin(theta)*cos(phi)", &vars).unwrap(),
            Expression::parse("sin(theta)*sin(phi)", &vars).unwrap(),
            Expression::parse("cos(theta)", &vars).unwrap(),
        ],
        AmbientMetric::Euclidean,
    )
    .unwrap()
}

/// The sphere self-map `u -> A u / |A u|` expressed in chart coordinates,
/// carrying the round metric on its target; pulling this back is one route
/// to the sphere-map pair's second member.
pub fn sphere_self_map(a: &Mat) -> EmbeddingMap {
    let a = a.clone();
    let target_chart = sphere_chart();
    EmbeddingMap::from_fn(
        sphere_chart(),
        2,
        Arc::new(move |x: &[f64]| {
            let u = sphere_point(x);
            let w = a.mul_vec(&u);
            let r = real::hypot_n(&w);
            let theta = real::acos((w[2] / r).clamp(-1.0, 1.0));
            let phi = real::atan2(w[1], w[0]);
            Ok(vec![theta, phi])
        }),
        AmbientMetric::Field({
            let chart = target_chart;
            Arc::new(move |y: &[f64]| {
                chart.check_contains(y)?;
                let s = real::sin(y[0]);
                Ok(Mat::diag(&[1.0, s * s]))
            })
        }),
    )
}

/// The composed ambient embedding `(theta, phi) -> A u / |A u|` into
/// Euclidean 3-space; inducing along it is the alternate route to the
/// sphere-map pair's second member.
pub fn sphere_map_ambient_embedding(a: &Mat) -> EmbeddingMap {
    let a = a.clone();
    EmbeddingMap::from_fn(
        sphere_chart(),
        3,
        Arc::new(move |x: &[f64]| {
            let u = sphere_point(x);
            let w = a.mul_vec(&u);
            let r = real::hypot_n(&w);
            Ok(vec![w[0] / r, w[1] / r, w[2] / r])
        }),
        AmbientMetric::Euclidean,
    )
}

// ---------------------------------------------------------------------------
// Proportionality scan
// ---------------------------------------------------------------------------

/// Normalized spread of the comparison-operator spectrum at `x`:
/// `(lambda_max - lambda_min) / (1 + |lambda|_max)`. Zero exactly at
/// pointwise-proportional metrics.
pub fn eigenvalue_spread(pair: &MetricPair, x: &[f64]) -> Result<f64> {
    let eigs = pair.eigenvalues(x)?;
    let lo = eigs[0];
    let hi = eigs[eigs.len() - 1];
    let radius = eigs.iter().fold(0.0f64, |m, v| m.max(real::abs(*v)));
    Ok((hi - lo) / (1.0 + radius))
}

#[derive(Clone, Debug)]
pub struct ScanComponent {
    /// Refined location of the proportionality point.
    pub representative: Vec<f64>,
    /// Number of flagged grid nodes in the component.
    pub size: usize,
    /// Normalized spectral spread at the refined representative.
    pub min_spread: f64,
}

#[derive(Clone, Debug)]
pub enum ScanResult {
    /// Essentially every grid node is proportional (conformal pair).
    AllProportional,
    Components(Vec<ScanComponent>),
}

impl ScanResult {
    pub fn component_count(&self) -> Option<usize> {
        match self {
            ScanResult::AllProportional => None,
            ScanResult::Components(c) => Some(c.len()),
        }
    }
}

/// Grid scan for pointwise-proportionality loci on a 2d chart.
///
/// Proportionality points are isolated zeros of the spectral spread, so a
/// fixed tolerance cannot both find them on a finite grid and reject places
/// where the spread is merely small. The scan therefore flags candidate
/// nodes with a resolution-aware threshold, clusters them (8-connected,
/// periodic axes wrap), and validates each cluster by a local refinement
/// descent: a cluster counts only if the spread can actually be driven
/// below `gap_tol` inside the chart.
pub fn proportionality_scan(
    pair: &MetricPair,
    grid_density: usize,
    gap_tol: Option<f64>,
) -> Result<ScanResult> {
    if pair.dim() != 2 {
        return Err(Error::InvalidParameter(
            "proportionality scan supports 2d charts".into(),
        ));
    }
    if grid_density < 8 {
        return Err(Error::InvalidParameter("grid density too small".into()));
    }
    let chart = pair.chart().clone();
    let n = grid_density;
    let bounds = chart.bounds();
    let spacing: Vec<f64> = (0..2)
        .map(|axis| {
            let (lo, hi) = bounds[axis];
            if chart.is_periodic(axis) {
                (hi - lo) / n as f64
            } else {
                (hi - lo) / (n + 1) as f64
            }
        })
        .collect();
    let node = |axis: usize, idx: usize| -> f64 {
        let (lo, _) = bounds[axis];
        if chart.is_periodic(axis) {
            lo + idx as f64 * spacing[axis]
        } else {
            lo + (idx + 1) as f64 * spacing[axis]
        }
    };

    let mut spreads = Vec::with_capacity(n * n);
    let mut exact = 0usize;
    for i in 0..n {
        for j in 0..n {
            let x = [node(0, i), node(1, j)];
            let spread = eigenvalue_spread(pair, &x)?;
            // Matches the default eigenvalue gap tolerance scaling.
            let tol = gap_tol.unwrap_or(1e-6);
            if spread <= tol {
                exact += 1;
            }
            spreads.push(spread);
        }
    }
    if exact * 100 >= 99 * n * n {
        return Ok(ScanResult::AllProportional);
    }

    // Resolution-aware candidate threshold: spread gradients are O(1), so
    // nodes within a cell of a true zero fall under a few cell diameters.
    let candidate_tol = 2.0 * (spacing[0] + spacing[1]);
    let flagged: Vec<bool> = spreads.iter().map(|s| *s <= candidate_tol).collect();

    // Union-find over flagged nodes, 8-connected, wrapping periodic axes.
    let mut parent: Vec<usize> = (0..n * n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let index = |i: usize, j: usize| i * n + j;
    for i in 0..n {
        for j in 0..n {
            if !flagged[index(i, j)] {
                continue;
            }
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = i as i64 + di;
                    let nj = j as i64 + dj;
                    let ni = if chart.is_periodic(0) {
                        (ni.rem_euclid(n as i64)) as usize
                    } else if (0..n as i64).contains(&ni) {
                        ni as usize
                    } else {
                        continue;
                    };
                    let nj = if chart.is_periodic(1) {
                        (nj.rem_euclid(n as i64)) as usize
                    } else if (0..n as i64).contains(&nj) {
                        nj as usize
                    } else {
                        continue;
                    };
                    if flagged[index(ni, nj)] {
                        let a = find(&mut parent, index(i, j));
                        let b = find(&mut parent, index(ni, nj));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
    }

    // Collect clusters with their best node.
    struct Cluster {
        size: usize,
        best: [f64; 2],
        best_spread: f64,
    }
    let mut clusters: Vec<(usize, Cluster)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let idx = index(i, j);
            if !flagged[idx] {
                continue;
            }
            let root = find(&mut parent, idx);
            let x = [node(0, i), node(1, j)];
            match clusters.iter_mut().find(|(r, _)| *r == root) {
                Some((_, c)) => {
                    c.size += 1;
                    if spreads[idx] < c.best_spread {
                        c.best_spread = spreads[idx];
                        c.best = x;
                    }
                }
                None => clusters.push((
                    root,
                    Cluster {
                        size: 1,
                        best: x,
                        best_spread: spreads[idx],
                    },
                )),
            }
        }
    }

    // Validate each cluster by refinement descent from its best node.
    let accept_tol = gap_tol.unwrap_or(1e-6);
    let mut components = Vec::new();
    for (_, cluster) in clusters {
        let mut center = cluster.best;
        let mut best_spread = cluster.best_spread;
        let mut radius = [spacing[0], spacing[1]];
        for _ in 0..60 {
            let mut improved = false;
            for di in -1i32..=1 {
                for dj in -1i32..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let mut x = [
                        center[0] + di as f64 * radius[0],
                        center[1] + dj as f64 * radius[1],
                    ];
                    // Clamp non-periodic axes strictly inside the domain.
                    for axis in 0..2 {
                        if !chart.is_periodic(axis) {
                            let (lo, hi) = bounds[axis];
                            let eps = 1e-9 * (hi - lo);
                            x[axis] = x[axis].clamp(lo + eps, hi - eps);
                        }
                    }
                    if let Ok(spread) = eigenvalue_spread(pair, &x) {
                        if spread < best_spread {
                            best_spread = spread;
                            center = x;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                radius[0] *= 0.5;
                radius[1] *= 0.5;
                if radius[0] < 1e-13 && radius[1] < 1e-13 {
                    break;
                }
            }
        }
        if best_spread <= accept_tol {
            components.push(ScanComponent {
                representative: chart.wrapped(&center),
                size: cluster.size,
                min_spread: best_spread,
            });
        }
    }
    Ok(ScanResult::Components(components))
}

// ---------------------------------------------------------------------------
// Catalog listing
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub chart: &'static str,
    pub caveats: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "beltrami-sphere",
            params: "A: 3 diagonal entries (nondegenerate), default 1,2,3",
            chart: "spherical (theta, phi), caps excised at 0.05",
            caveats:
                "proportionality points on the polar axis fall outside the chart for axisymmetric A",
        },
        CatalogEntry {
            name: "ellipsoid",
            params: "a: 3 positive semi-axes-squared, default 1,2,3",
            chart: "scaled-sphere parametrization x_i = sqrt(a_i) u_i(theta, phi)",
            caveats: "single chart; verification samples avoid the caps",
        },
        CatalogEntry {
            name: "poisson-sphere",
            params: "a: 3 positive parameters, default 1,2,3",
            chart: "scaled-sphere parametrization x_i = sqrt(a_i) u_i(theta, phi)",
            caveats: "single chart; verification samples avoid the caps",
        },
        CatalogEntry {
            name: "control-nonequivalent",
            params: "none",
            chart: "flat box (-0.9, 0.9)^2",
            caveats: "documented NOT geodesically equivalent; negative control",
        },
    ]
}

/// Builds a catalog pair by name. `values` feeds the entry's parameter list
/// (diagonal sphere-map entries or semi-axes-squared); `None` uses the
/// defaults.
pub fn build_pair(name: &str, values: Option<&[f64]>) -> Result<MetricPair> {
    let default = [1.0, 2.0, 3.0];
    let vals = values.unwrap_or(&default);
    match name {
        "beltrami-sphere" => beltrami_pair_diag(vals),
        "ellipsoid" => ellipsoid_pair(vals),
        "poisson-sphere" => poisson_pair(vals),
        "control-nonequivalent" => Ok(control_pair_nonequivalent()),
        other => Err(Error::InvalidParameter(format!(
            "unknown catalog entry `{other}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_chart_point(rng: &mut ChaCha8Rng) -> [f64; 2] {
        [
            rng.random_range(0.4..core::f64::consts::PI - 0.4),
            rng.random_range(0.0..core::f64::consts::TAU),
        ]
    }

    #[test]
    fn identity_map_gives_equal_pair() {
        for scale in [1.0, 2.0] {
            let pair = beltrami_pair(&Mat::identity(3).scale(scale)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            for _ in 0..10 {
                let x = random_chart_point(&mut rng);
                let g = pair.g().eval(&x).unwrap();
                let gbar = pair.gbar().eval(&x).unwrap();
                assert!(
                    g.sub(&gbar).norm_inf() < 1e-10,
                    "pullback deviates for A = {scale} I"
                );
            }
        }
    }

    #[test]
    fn round_metric_at_equator_matches_jacobian_product() {
        let g = round_sphere_metric();
        let x = [core::f64::consts::FRAC_PI_2, 1.3];
        let m = g.eval(&x).unwrap();
        let j = sphere_jacobian(&x);
        let oracle = j.transpose().mat_mul(&j);
        assert!(m.sub(&oracle).norm_inf() < 1e-14);
        assert!(m.sub(&Mat::identity(2)).norm_inf() < 1e-14);
    }

    #[test]
    fn singular_map_rejected() {
        assert!(matches!(
            beltrami_pair_diag(&[1.0, 0.0, 2.0]).unwrap_err(),
            Error::Singular { .. }
        ));
        assert!(matches!(
            ellipsoid_pair(&[1.0, -1.0, 2.0]).unwrap_err(),
            Error::InvalidParameter(_)
        ));
    }

    #[test]
    fn unit_axes_collapse_to_round_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let round = round_sphere_metric();
        let ell = ellipsoid_pair(&[1.0, 1.0, 1.0]).unwrap();
        let poi = poisson_pair(&[1.0, 1.0, 1.0]).unwrap();
        for _ in 0..10 {
            let x = random_chart_point(&mut rng);
            let r = round.eval(&x).unwrap();
            for field in [ell.g(), ell.gbar(), poi.g(), poi.gbar()] {
                let m = field.eval(&x).unwrap();
                assert!(m.sub(&r).norm_inf() < 1e-12, "{} deviates", field.id());
            }
        }
    }

    #[test]
    fn poisson_first_member_matches_inverse_square_weighted_form() {
        // Independent route: restriction of the ambient conformal metric
        // via the generic embedding machinery with fd Jacobians.
        let axes = [1.0, 2.0, 3.0];
        let pair = poisson_pair(&axes).unwrap();
        let chart = sphere_chart();
        let vars = ["theta", "phi"];
        let emb = EmbeddingMap::from_exprs(
            chart,
            vec![
                Expression::parse(
                    &format!("{}*sin(theta)*cos(phi)", real::sqrt(axes[0])),
                    &vars,
                )
                .unwrap(),
                Expression::parse(
                    &format!("{}*sin(theta)*sin(phi)", real::sqrt(axes[1])),
                    &vars,
                )
                .unwrap(),
                Expression::parse(&format!("{}*cos(theta)", real::sqrt(axes[2])), &vars).unwrap(),
            ],
            AmbientMetric::Field(Arc::new(move |y: &[f64]| {
                let denom = y[0] * y[0] / (axes[0] * axes[0])
                    + y[1] * y[1] / (axes[1] * axes[1])
                    + y[2] * y[2] / (axes[2] * axes[2]);
                Ok(Mat::identity(3).scale(1.0 / denom))
            })),
        )
        .unwrap();
        let via_embedding = emb.induced_metric("poisson.reference");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = random_chart_point(&mut rng);
            let a = pair.g().eval(&x).unwrap();
            let b = via_embedding.eval(&x).unwrap();
            assert!(a.sub(&b).norm_inf() < 1e-6, "mismatch at {x:?}");
        }
    }

    #[test]
    fn ellipsoid_first_member_matches_fd_assembly() {
        let axes = [1.0, 2.0, 3.0];
        let pair = ellipsoid_pair(&axes).unwrap();
        let chart = sphere_chart();
        let vars = ["theta", "phi"];
        let emb = EmbeddingMap::from_exprs(
            chart,
            vec![
                Expression::parse(
                    &format!("{}*sin(theta)*cos(phi)", real::sqrt(axes[0])),
                    &vars,
                )
                .unwrap(),
                Expression::parse(
                    &format!("{}*sin(theta)*sin(phi)", real::sqrt(axes[1])),
                    &vars,
                )
                .unwrap(),
                Expression::parse(&format!("{}*cos(theta)", real::sqrt(axes[2])), &vars).unwrap(),
            ],
            AmbientMetric::Euclidean,
        )
        .unwrap();
        let x = [1.1, 2.3];
        // Direct dense product with the same fd Jacobian.
        let j = emb.jacobian(&x).unwrap();
        let direct = j.transpose().mat_mul(&j);
        let induced = emb.induced_metric("ellipsoid.reference").eval(&x).unwrap();
        assert!(direct.sub(&induced).norm_inf() < 1e-10);
        // And the catalog closed form agrees with the fd route.
        let catalog = pair.g().eval(&x).unwrap();
        assert!(catalog.sub(&direct).norm_inf() < 1e-6);
    }

    #[test]
    fn pullback_routes_agree_for_sphere_map() {
        // Route A: pull the round metric back along the chart self-map.
        // Route B: induce along the composed ambient embedding.
        // Route C: catalog closed form.
        let a = Mat::diag(&[1.0, 1.0, 2.0]);
        let pair = beltrami_pair(&a).unwrap();
        let route_a = sphere_self_map(&a).pullback_metric("route_a").unwrap();
        let route_b = sphere_map_ambient_embedding(&a).induced_metric("route_b");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = random_chart_point(&mut rng);
            let c = pair.gbar().eval(&x).unwrap();
            let b = route_b.eval(&x).unwrap();
            let a_m = route_a.eval(&x).unwrap();
            assert!(
                b.sub(&c).norm_inf() < 1e-6,
                "ambient route deviates at {x:?}"
            );
            assert!(
                a_m.sub(&c).norm_inf() < 1e-6,
                "self-map route deviates at {x:?}"
            );
        }
    }

    #[test]
    fn transform_chain_reproduces_catalog_members() {
        let axes = [1.0, 2.0, 3.0];
        let a = sphere_map_matrix_for_axes(&axes).unwrap();
        let base = beltrami_pair(&a).unwrap();
        let ell = ellipsoid_pair(&axes).unwrap();
        let poi = poisson_pair(&axes).unwrap();
        let power1 = base.sinjukov_transform(1).unwrap();
        let power2 = base.sinjukov_transform(2).unwrap();
        let kappa1 = ellipsoid_identification_factor(&axes);
        let kappa2 = poisson_identification_factor(&axes);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let x = random_chart_point(&mut rng);
            let lhs = power1.g().eval(&x).unwrap();
            let rhs = ell.g().eval(&x).unwrap().scale(kappa1);
            let rel = lhs.sub(&rhs).norm_inf() / rhs.norm_inf().max(1e-300);
            assert!(rel < 1e-6, "ellipsoid identification off by {rel} at {x:?}");

            let lhs = power2.gbar().eval(&x).unwrap();
            let rhs = poi.g().eval(&x).unwrap().scale(kappa2);
            let rel = lhs.sub(&rhs).norm_inf() / rhs.norm_inf().max(1e-300);
            assert!(rel < 1e-6, "poisson identification off by {rel} at {x:?}");
        }
    }

    #[test]
    fn control_pair_is_identity_at_origin() {
        let pair = control_pair_nonequivalent();
        let g = pair.g().eval(&[0.0, 0.0]).unwrap();
        let gbar = pair.gbar().eval(&[0.0, 0.0]).unwrap();
        assert_eq!(g, Mat::identity(2));
        assert_eq!(gbar, Mat::identity(2));
    }

    #[test]
    fn scan_conformal_pair_reports_all() {
        let g = round_sphere_metric();
        let gbar = MetricField::from_fn(
            sphere_chart(),
            "scaled",
            Arc::new(|x: &[f64]| {
                let s = real::sin(x[0]);
                Ok(Mat::diag(&[5.0, 5.0 * s * s]))
            }),
        );
        let pair = MetricPair::new(g, gbar).unwrap();
        let result = proportionality_scan(&pair, 40, None).unwrap();
        assert!(matches!(result, ScanResult::AllProportional));
    }

    #[test]
    fn scan_generic_diagonal_finds_four_points() {
        let pair = beltrami_pair_diag(&[1.0, 2.0, 3.0]).unwrap();
        let result = proportionality_scan(&pair, 150, None).unwrap();
        let components = match result {
            ScanResult::Components(c) => c,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(components.len(), 4, "components: {components:?}");
        // The zeros sit in the u2 = 0 plane at u1^2 = 27/32.
        let theta_star = real::acos(real::sqrt(5.0 / 32.0));
        for c in &components {
            let theta_ok = (c.representative[0] - theta_star).abs() < 1e-5
                || (c.representative[0] - (core::f64::consts::PI - theta_star)).abs() < 1e-5;
            let phi = c.representative[1];
            let phi_ok = phi.abs() < 1e-5
                || (phi - core::f64::consts::PI).abs() < 1e-5
                || (phi - core::f64::consts::TAU).abs() < 1e-5;
            assert!(
                theta_ok && phi_ok,
                "unexpected representative {:?}",
                c.representative
            );
        }
    }

    #[test]
    fn scan_axisymmetric_finds_no_interior_points() {
        let pair = beltrami_pair_diag(&[1.0, 1.0, 2.0]).unwrap();
        let result = proportionality_scan(&pair, 120, None).unwrap();
        match result {
            ScanResult::Components(c) => assert!(c.is_empty(), "spurious components {c:?}"),
            other => panic!("unexpected {other:?}"),
        }
        // The proportionality locus sits at the excised poles: the spread
        // shrinks monotonically as the caps are approached.
        let spreads: Vec<f64> = [0.2, 0.1, POLAR_CAP + 1e-6]
            .iter()
            .map(|&theta| eigenvalue_spread(&pair, &[theta, 1.0]).unwrap())
            .collect();
        assert!(spreads[0] > spreads[1] && spreads[1] > spreads[2]);
        assert!(spreads[2] > 1e-6, "interior spread must stay positive");
    }

    #[test]
    fn geodesics_stay_on_great_circles() {
        use crate::flow::integrate_geodesic;
        let g = round_sphere_metric();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let x0 = random_chart_point(&mut rng);
            let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let gm = g.eval(&x0).unwrap();
            let norm = real::sqrt(linalg::dot(&gm.mul_vec(&v), &v));
            if norm < 1e-3 {
                continue;
            }
            let v0 = [v[0] / norm, v[1] / norm];
            let trace = integrate_geodesic(&g, &x0, &v0, 2.0, 1e-3).unwrap();
            // Plane normal from ambient position and velocity at the start.
            let u0 = sphere_point(&x0);
            let j = sphere_jacobian(&x0);
            let v_amb = [
                j[(0, 0)] * v0[0] + j[(0, 1)] * v0[1],
                j[(1, 0)] * v0[0] + j[(1, 1)] * v0[1],
                j[(2, 0)] * v0[0] + j[(2, 1)] * v0[1],
            ];
            let normal = [
                u0[1] * v_amb[2] - u0[2] * v_amb[1],
                u0[2] * v_amb[0] - u0[0] * v_amb[2],
                u0[0] * v_amb[1] - u0[1] * v_amb[0],
            ];
            let normal_len = real::hypot_n(&normal);
            for s in trace.samples.iter().step_by(50) {
                let u = sphere_point(&s.x);
                let off = linalg::dot(&u, &normal) / normal_len;
                assert!(off.abs() <= 1e-6, "left the great-circle plane by {off}");
            }
        }
    }
}
