//! The quadratic first-integral family of a metric pair, canonical Poisson
//! brackets, rank analysis, the orbital map, and transfer of linear
//! integrals.
//!
//! For a pair `(g, gbar)` and `0 <= k < n` the integrals are the quadratic
//! momentum forms built from the integral-generating operators `S_k`:
//!
//! ```text
//! I_k(x, p) = g^{ai} (S_k)^j_a p_i p_j
//! ```
//!
//! equivalently `I_k(x, xi) = g(S_k xi, xi)` after raising `p` to
//! `xi = g^{-1} p`. The top integral satisfies `I_{n-1} = -2H` with
//! `H = (1/2) g^{ij} p_i p_j` the geodesic-flow Hamiltonian.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::linalg::{self, Mat};
use crate::metric::MapFn;
use crate::operators::MetricPair;
use crate::par;
use crate::real;
use crate::sample::PhaseSampler;

/// Base step for phase-space finite differences, scaled per component by
/// `1 + |component|`.
pub const DEFAULT_PHASE_STEP: f64 = 1e-5;

/// Momentum norms below this are treated as degenerate for rank analysis.
const DEGENERATE_P_NORM: f64 = 1e-9;

/// A cotangent-bundle point: base coordinates plus momentum covector.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: &[f64], p: &[f64]) -> PhasePoint {
        PhasePoint {
            x: x.to_vec(),
            p: p.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// The `n` closed-form integrals `I_0..I_{n-1}` bound to a metric pair.
#[derive(Clone, Debug)]
pub struct IntegralFamily {
    pair: MetricPair,
}

impl IntegralFamily {
    pub fn new(pair: MetricPair) -> IntegralFamily {
        IntegralFamily { pair }
    }

    pub fn pair(&self) -> &MetricPair {
        &self.pair
    }

    /// Number of integrals (the chart dimension).
    pub fn len(&self) -> usize {
        self.pair.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Geodesic-flow Hamiltonian `H = (1/2) p^T g^{-1} p`.
    pub fn hamiltonian(&self, pp: &PhasePoint) -> Result<f64> {
        let (ginv, _) = self.pair.g().inverse_and_det(&pp.x)?;
        Ok(0.5 * linalg::dot(&ginv.mul_vec(&pp.p), &pp.p))
    }

    /// `I_k` in the momentum form `g^{ai} (S_k)^j_a p_i p_j`.
    pub fn eval(&self, k: usize, pp: &PhasePoint) -> Result<f64> {
        let s = self.pair.integral_generator(&pp.x, k)?.matrix;
        let (ginv, _) = self.pair.g().inverse_and_det(&pp.x)?;
        let quad = s.mat_mul(&ginv);
        let n = pp.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += pp.p[i] * pp.p[j] * quad[(j, i)];
            }
        }
        Ok(acc)
    }

    /// `I_k` in the raised-index form `g(S_k xi, xi)`, `xi = g^{-1} p`.
    /// Algebraically identical to [`IntegralFamily::eval`]; kept as the
    /// independent evaluation route.
    pub fn eval_raised(&self, k: usize, pp: &PhasePoint) -> Result<f64> {
        let g = self.pair.g().eval(&pp.x)?;
        let (ginv, _) = self.pair.g().inverse_and_det(&pp.x)?;
        let xi = ginv.mul_vec(&pp.p);
        let s = self.pair.integral_generator(&pp.x, k)?.matrix;
        let s_xi = s.mul_vec(&xi);
        Ok(linalg::dot(&g.mul_vec(&s_xi), &xi))
    }

    /// All `n` integrals at once (shared metric work).
    pub fn eval_all(&self, pp: &PhasePoint) -> Result<Vec<f64>> {
        (0..self.len()).map(|k| self.eval(k, pp)).collect()
    }
}

// ---------------------------------------------------------------------------
// Canonical Poisson bracket
// ---------------------------------------------------------------------------

fn phase_shifted(pp: &PhasePoint, slot: usize, delta: f64) -> PhasePoint {
    let n = pp.dim();
    let mut out = pp.clone();
    if slot < n {
        out.x[slot] += delta;
    } else {
        out.p[slot - n] += delta;
    }
    out
}

fn phase_component(pp: &PhasePoint, slot: usize) -> f64 {
    let n = pp.dim();
    if slot < n {
        pp.x[slot]
    } else {
        pp.p[slot - n]
    }
}

fn phase_partial<F>(f: &F, pp: &PhasePoint, slot: usize, base_step: f64) -> Result<f64>
where
    F: Fn(&PhasePoint) -> Result<f64>,
{
    let h = base_step * (1.0 + real::abs(phase_component(pp, slot)));
    let plus = f(&phase_shifted(pp, slot, h))?;
    let minus = f(&phase_shifted(pp, slot, -h))?;
    Ok((plus - minus) / (2.0 * h))
}

/// Canonical Poisson bracket by central differences:
///
/// ```text
/// {f, h} = sum_i (df/dx^i dh/dp_i - df/dp_i dh/dx^i)
/// ```
///
/// with the sign convention `{x^i, p_i} = +1`. `base_step` is scaled per
/// component by `1 + |component|`.
pub fn poisson_bracket<F, H>(f: F, h: H, pp: &PhasePoint, base_step: f64) -> Result<f64>
where
    F: Fn(&PhasePoint) -> Result<f64>,
    H: Fn(&PhasePoint) -> Result<f64>,
{
    let n = pp.dim();
    let mut acc = 0.0;
    for i in 0..n {
        let df_dx = phase_partial(&f, pp, i, base_step)?;
        let dh_dp = phase_partial(&h, pp, n + i, base_step)?;
        let df_dp = phase_partial(&f, pp, n + i, base_step)?;
        let dh_dx = phase_partial(&h, pp, i, base_step)?;
        acc += df_dx * dh_dp - df_dp * dh_dx;
    }
    Ok(acc)
}

/// Normalization for brackets of quadratic integrals:
/// `max(1, |I_j|, |I_k|) * max(1, |p|^2)`.
pub fn bracket_scale(value_j: f64, value_k: f64, pp: &PhasePoint) -> f64 {
    let p_sq: f64 = pp.p.iter().map(|c| c * c).sum();
    real::abs(value_j).max(real::abs(value_k)).max(1.0) * p_sq.max(1.0)
}

/// Pairwise max normalized brackets over seeded phase points.
#[derive(Clone, Debug)]
pub struct BracketReport {
    /// Max of `|{I_j, I_k}|/scale` over samples; symmetric, zero diagonal.
    pub max_normalized: Mat,
    /// Same quantity evaluated with the fd step halved (Richardson data:
    /// for true involution the residual is O(h^2) noise and drops ~4x).
    pub max_normalized_halved: Mat,
    /// Phase point realizing the max, per `j < k` (row-major upper triangle).
    pub argmax: Vec<Option<PhasePoint>>,
    pub samples_requested: usize,
    pub samples_used: usize,
    pub skipped: usize,
}

impl BracketReport {
    pub fn overall_max(&self) -> f64 {
        self.max_normalized.norm_inf()
    }

    pub fn overall_max_halved(&self) -> f64 {
        self.max_normalized_halved.norm_inf()
    }

    fn tri_index(n: usize, j: usize, k: usize) -> usize {
        // j < k
        j * n - j * (j + 1) / 2 + (k - j - 1)
    }

    pub fn argmax_for(&self, j: usize, k: usize) -> Option<&PhasePoint> {
        let n = self.max_normalized.rows();
        let (j, k) = if j < k { (j, k) } else { (k, j) };
        self.argmax[Self::tri_index(n, j, k)].as_ref()
    }
}

/// Options for [`bracket_report`].
#[derive(Clone, Debug)]
pub struct BracketOptions {
    pub fd_step: f64,
    pub threads: usize,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions {
            fd_step: DEFAULT_PHASE_STEP,
            threads: 1,
        }
    }
}

/// Evaluates `max |{I_j, I_k}|/scale` over `samples` seeded phase points for
/// every pair `j < k`. Sample points whose stencils leave the domain are
/// skipped and counted.
pub fn bracket_report(
    fam: &IntegralFamily,
    samples: usize,
    seed: u64,
    opts: &BracketOptions,
) -> Result<BracketReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let n = fam.len();
    let mut sampler = PhaseSampler::new(fam.pair().g(), seed);
    let points: Vec<PhasePoint> = (0..samples)
        .map(|_| sampler.next_phase_point())
        .collect::<Result<_>>()?;

    let n_pairs = n * (n - 1) / 2;
    type SampleOut = Option<(Vec<f64>, Vec<f64>)>;
    let per_sample: Vec<SampleOut> = par::map_indexed(samples, opts.threads, |idx| {
        let pp = &points[idx];
        let values = match fam.eval_all(pp) {
            Ok(v) => v,
            Err(_) => return None,
        };
        let mut at_h = Vec::with_capacity(n_pairs);
        let mut at_h2 = Vec::with_capacity(n_pairs);
        for j in 0..n {
            for k in (j + 1)..n {
                let scale = bracket_scale(values[j], values[k], pp);
                let fj = |q: &PhasePoint| fam.eval(j, q);
                let fk = |q: &PhasePoint| fam.eval(k, q);
                let b_h = match poisson_bracket(fj, fk, pp, opts.fd_step) {
                    Ok(v) => v,
                    Err(_) => return None,
                };
                let fj = |q: &PhasePoint| fam.eval(j, q);
                let fk = |q: &PhasePoint| fam.eval(k, q);
                let b_h2 = match poisson_bracket(fj, fk, pp, 0.5 * opts.fd_step) {
                    Ok(v) => v,
                    Err(_) => return None,
                };
                at_h.push(real::abs(b_h) / scale);
                at_h2.push(real::abs(b_h2) / scale);
            }
        }
        Some((at_h, at_h2))
    });

    let mut max_normalized = Mat::zeros(n, n);
    let mut max_halved = Mat::zeros(n, n);
    let mut argmax: Vec<Option<PhasePoint>> = alloc::vec![None; n_pairs];
    let mut used = 0;
    for (idx, sample) in per_sample.iter().enumerate() {
        let Some((at_h, at_h2)) = sample else {
            continue;
        };
        used += 1;
        let mut slot = 0;
        for j in 0..n {
            for k in (j + 1)..n {
                if argmax[slot].is_none() || at_h[slot] > max_normalized[(j, k)] {
                    max_normalized[(j, k)] = max_normalized[(j, k)].max(at_h[slot]);
                    argmax[slot] = Some(points[idx].clone());
                }
                if at_h2[slot] > max_halved[(j, k)] {
                    max_halved[(j, k)] = at_h2[slot];
                }
                slot += 1;
            }
        }
    }
    // Mirror the upper triangle (diagonal stays zero by construction).
    for j in 0..n {
        for k in (j + 1)..n {
            max_normalized[(k, j)] = max_normalized[(j, k)];
            max_halved[(k, j)] = max_halved[(j, k)];
        }
    }
    Ok(BracketReport {
        max_normalized,
        max_normalized_halved: max_halved,
        argmax,
        samples_requested: samples,
        samples_used: used,
        skipped: samples - used,
    })
}

// ---------------------------------------------------------------------------
// Rank analysis
// ---------------------------------------------------------------------------

/// Numeric rank of the `n x 2n` matrix of phase-space gradients of
/// `I_0..I_{n-1}` (singular values above `rank_tol * sigma_max`).
///
/// Near `p = 0` the gradients of quadratic forms vanish; such points are
/// rejected as degenerate rather than reported with a meaningless rank.
pub fn differential_rank(fam: &IntegralFamily, pp: &PhasePoint, rank_tol: f64) -> Result<usize> {
    let p_norm = real::hypot_n(&pp.p);
    if p_norm <= DEGENERATE_P_NORM {
        return Err(Error::DegeneratePhasePoint { p_norm });
    }
    let n = fam.len();
    let mut grads = Mat::zeros(n, 2 * n);
    for k in 0..n {
        let f = |q: &PhasePoint| fam.eval(k, q);
        for slot in 0..(2 * n) {
            grads[(k, slot)] = phase_partial(&f, pp, slot, DEFAULT_PHASE_STEP)?;
        }
    }
    linalg::numeric_rank(&grads, rank_tol)
}

// ---------------------------------------------------------------------------
// Orbital map and linear-integral transfer
// ---------------------------------------------------------------------------

/// The fiberwise orbital map `(x, xi) -> (x, (|xi|_g / |xi|_gbar) xi)`,
/// which carries orbits of the `g`-flow to orbits of the `gbar`-flow.
pub fn orbital_map(pair: &MetricPair, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let norm_sq: f64 = xi.iter().map(|c| c * c).sum();
    if norm_sq == 0.0 {
        return Err(Error::ZeroVector("orbital_map".to_string()));
    }
    let g = pair.g().eval(x)?;
    let gbar = pair.gbar().eval(x)?;
    let norm_g = real::sqrt(linalg::dot(&g.mul_vec(xi), xi));
    let norm_gbar = real::sqrt(linalg::dot(&gbar.mul_vec(xi), xi));
    Ok(xi.iter().map(|c| c * norm_g / norm_gbar).collect())
}

/// A covector field `a_i(x)` on the chart.
#[derive(Clone)]
pub enum CovectorField {
    Exprs(Vec<Expression>),
    Builtin(Arc<MapFn>),
}

impl CovectorField {
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            CovectorField::Exprs(components) => components
                .iter()
                .map(|e| e.eval(x).map_err(Error::from))
                .collect(),
            CovectorField::Builtin(f) => f(x),
        }
    }
}

/// Phase-space function transferring a velocity-linear integral of the
/// `gbar`-flow to the `g`-flow:
///
/// ```text
/// F(x, xi) = (det g / det gbar)^{1/(n+1)} * sum_i a_i(x) xi^i,   xi = g^{-1} p.
/// ```
///
/// When `sum a_i xi^i` is conserved along `gbar`-geodesics, `F` is conserved
/// along `g`-geodesics.
#[derive(Clone)]
pub struct TransferredIntegral {
    pair: MetricPair,
    covector: CovectorField,
}

pub fn killing_transfer(pair: &MetricPair, covector: CovectorField) -> TransferredIntegral {
    TransferredIntegral {
        pair: pair.clone(),
        covector,
    }
}

impl TransferredIntegral {
    pub fn eval(&self, pp: &PhasePoint) -> Result<f64> {
        let n = self.pair.dim() as f64;
        let (ginv, det_g) = self.pair.g().inverse_and_det(&pp.x)?;
        let gbar = self.pair.gbar().eval(&pp.x)?;
        let det_gbar = linalg::lu_det(&gbar);
        let xi = ginv.mul_vec(&pp.p);
        let w = self.pair.chart().wrapped(&pp.x);
        let a = self.covector.eval(&w)?;
        let factor = real::powf(det_g / det_gbar, 1.0 / (n + 1.0));
        Ok(factor * linalg::dot(&a, &xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::metric::MetricField;
    use alloc::vec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn box_chart() -> Arc<Chart> {
        Arc::new(Chart::new(&["x1", "x2"], &[(-2.0, 2.0), (-2.0, 2.0)], &[false, false]).unwrap())
    }

    fn const_metric(m: Mat) -> MetricField {
        MetricField::from_fn(
            box_chart(),
            "const",
            Arc::new(move |_: &[f64]| Ok(m.clone())),
        )
    }

    fn proportional_family(factor: f64) -> IntegralFamily {
        let g = const_metric(Mat::identity(2));
        let gbar = const_metric(Mat::identity(2).scale(factor));
        IntegralFamily::new(MetricPair::new(g, gbar).unwrap())
    }

    fn curved_family() -> IntegralFamily {
        let chart = box_chart();
        let g = MetricField::from_fn(
            chart.clone(),
            "g",
            Arc::new(|x: &[f64]| {
                Ok(Mat::from_rows(&[
                    &[1.0 + 0.1 * x[0] * x[0], 0.05 * x[0] * x[1]],
                    &[0.05 * x[0] * x[1], 1.5 + 0.1 * x[1] * x[1]],
                ]))
            }),
        );
        let gbar = MetricField::from_fn(
            chart,
            "gbar",
            Arc::new(|x: &[f64]| {
                Ok(Mat::from_rows(&[
                    &[2.0 + 0.2 * x[1] * x[1], 0.1 * (x[0] + x[1])],
                    &[0.1 * (x[0] + x[1]), 1.0 + 0.05 * x[0] * x[0]],
                ]))
            }),
        );
        IntegralFamily::new(MetricPair::new(g, gbar).unwrap())
    }

    fn sphere_metric() -> MetricField {
        let chart = Arc::new(
            Chart::new(
                &["theta", "phi"],
                &[
                    (0.05, core::f64::consts::PI - 0.05),
                    (0.0, core::f64::consts::TAU),
                ],
                &[false, true],
            )
            .unwrap(),
        );
        MetricField::from_fn(
            chart,
            "round",
            Arc::new(|x: &[f64]| {
                let s = real::sin(x[0]);
                Ok(Mat::diag(&[1.0, s * s]))
            }),
        )
    }

    #[test]
    fn hamiltonian_values() {
        let fam = proportional_family(1.0);
        let h = fam
            .hamiltonian(&PhasePoint::new(&[0.0, 0.0], &[1.0, 0.0]))
            .unwrap();
        assert_relative_eq!(h, 0.5);

        let g4 = IntegralFamily::new(
            MetricPair::new(
                const_metric(Mat::identity(2).scale(4.0)),
                const_metric(Mat::identity(2).scale(4.0)),
            )
            .unwrap(),
        );
        let h = g4
            .hamiltonian(&PhasePoint::new(&[0.0, 0.0], &[2.0, 0.0]))
            .unwrap();
        assert_relative_eq!(h, 0.5);

        let sphere = sphere_metric();
        let fam = IntegralFamily::new(MetricPair::new(sphere.clone(), sphere).unwrap());
        let h = fam
            .hamiltonian(&PhasePoint::new(
                &[core::f64::consts::FRAC_PI_2, 1.0],
                &[0.0, 1.0],
            ))
            .unwrap();
        assert_relative_eq!(h, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn equal_pair_integrals_are_energy_multiples() {
        let fam = proportional_family(1.0);
        let pp = PhasePoint::new(&[0.3, -0.4], &[0.7, -1.1]);
        let h = fam.hamiltonian(&pp).unwrap();
        assert_relative_eq!(fam.eval(0, &pp).unwrap(), 2.0 * h, max_relative = 1e-13);
        assert_relative_eq!(fam.eval(1, &pp).unwrap(), -2.0 * h, max_relative = 1e-13);
    }

    #[test]
    fn momentum_and_raised_forms_agree() {
        let fam = curved_family();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let pp = PhasePoint::new(
                &[rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
                &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            );
            for k in 0..2 {
                let a = fam.eval(k, &pp).unwrap();
                let b = fam.eval_raised(k, &pp).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn top_integral_is_minus_twice_hamiltonian() {
        let fam = curved_family();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let pp = PhasePoint::new(
                &[rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
                &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            );
            let top = fam.eval(1, &pp).unwrap();
            let h = fam.hamiltonian(&pp).unwrap();
            let rel = real::abs(top + 2.0 * h) / h.abs().max(1.0);
            assert!(rel <= 1e-10, "Remark-1 identity violated: {rel}");
        }
    }

    #[test]
    fn canonical_bracket_sign() {
        let pp = PhasePoint::new(&[0.3, 0.4], &[0.5, 0.6]);
        let b = poisson_bracket(
            |q: &PhasePoint| Ok(q.x[0]),
            |q: &PhasePoint| Ok(q.p[0]),
            &pp,
            DEFAULT_PHASE_STEP,
        )
        .unwrap();
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn bracket_of_function_with_itself_vanishes() {
        let fam = curved_family();
        let pp = PhasePoint::new(&[0.2, -0.3], &[0.8, 0.1]);
        let h1 = |q: &PhasePoint| fam.hamiltonian(q);
        let h2 = |q: &PhasePoint| fam.hamiltonian(q);
        let b = poisson_bracket(h1, h2, &pp, DEFAULT_PHASE_STEP).unwrap();
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bracket_antisymmetry_and_bilinearity() {
        let fam = curved_family();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let pp = PhasePoint::new(
                &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            );
            let f = |q: &PhasePoint| fam.eval(0, q);
            let h = |q: &PhasePoint| fam.hamiltonian(q);
            let fh = poisson_bracket(f, h, &pp, DEFAULT_PHASE_STEP).unwrap();
            let hf = poisson_bracket(h, f, &pp, DEFAULT_PHASE_STEP).unwrap();
            assert_abs_diff_eq!(fh, -hf, epsilon = 1e-8);

            let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let combo = |q: &PhasePoint| Ok(alpha * fam.eval(0, q)? + beta * fam.eval(1, q)?);
            let lhs = poisson_bracket(combo, h, &pp, DEFAULT_PHASE_STEP).unwrap();
            let f0 = |q: &PhasePoint| fam.eval(0, q);
            let f1 = |q: &PhasePoint| fam.eval(1, q);
            let rhs = alpha * poisson_bracket(f0, h, &pp, DEFAULT_PHASE_STEP).unwrap()
                + beta * poisson_bracket(f1, h, &pp, DEFAULT_PHASE_STEP).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-8 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn quadratic_homogeneity() {
        let fam = curved_family();
        let pp = PhasePoint::new(&[0.4, 0.3], &[0.9, -0.2]);
        for lambda in [2.0, -1.0] {
            let scaled =
                PhasePoint::new(&pp.x, &pp.p.iter().map(|c| lambda * c).collect::<Vec<_>>());
            for k in 0..2 {
                let a = fam.eval(k, &scaled).unwrap();
                let b = lambda * lambda * fam.eval(k, &pp).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-14 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn bracket_report_proportional_pair_is_tiny() {
        let fam = proportional_family(2.0);
        let report = bracket_report(&fam, 40, 42, &BracketOptions::default()).unwrap();
        assert_eq!(report.skipped, 0);
        assert!(report.overall_max() <= 1e-8, "max {}", report.overall_max());
        assert_eq!(report.max_normalized[(0, 0)], 0.0);
        assert_eq!(report.max_normalized[(1, 1)], 0.0);
    }

    #[test]
    fn differential_rank_detects_dependence() {
        let fam = proportional_family(1.0);
        let pp = PhasePoint::new(&[0.2, 0.1], &[0.6, 0.8]);
        assert_eq!(differential_rank(&fam, &pp, 1e-6).unwrap(), 1);

        let degenerate = PhasePoint::new(&[0.2, 0.1], &[1e-12, 0.0]);
        assert!(matches!(
            differential_rank(&fam, &degenerate, 1e-6).unwrap_err(),
            Error::DegeneratePhasePoint { .. }
        ));
    }

    #[test]
    fn orbital_map_rescales_by_norm_ratio() {
        let pair = MetricPair::new(
            const_metric(Mat::identity(2)),
            const_metric(Mat::identity(2).scale(4.0)),
        )
        .unwrap();
        let xi = [0.3, -0.4];
        let out = orbital_map(&pair, &[0.0, 0.0], &xi).unwrap();
        assert_relative_eq!(out[0], xi[0] / 2.0, max_relative = 1e-13);
        assert_relative_eq!(out[1], xi[1] / 2.0, max_relative = 1e-13);

        let id_pair = MetricPair::new(
            const_metric(Mat::identity(2)),
            const_metric(Mat::identity(2)),
        )
        .unwrap();
        let out = orbital_map(&id_pair, &[0.0, 0.0], &xi).unwrap();
        assert_relative_eq!(out[0], xi[0]);
        assert_relative_eq!(out[1], xi[1]);

        assert!(matches!(
            orbital_map(&id_pair, &[0.0, 0.0], &[0.0, 0.0]).unwrap_err(),
            Error::ZeroVector(_)
        ));
    }

    #[test]
    fn orbital_map_sends_unit_vectors_to_unit_vectors() {
        let fam = curved_family();
        let pair = fam.pair();
        let mut sampler = PhaseSampler::new(pair.g(), 31);
        for _ in 0..20 {
            let x = sampler.next_point();
            let xi = sampler.unit_velocity(&x).unwrap();
            let out = orbital_map(pair, &x, &xi).unwrap();
            let gbar = pair.gbar().eval(&x).unwrap();
            let norm = real::sqrt(linalg::dot(&gbar.mul_vec(&out), &out));
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn killing_transfer_trivial_pair_is_identity() {
        let g = const_metric(Mat::identity(2));
        let pair = MetricPair::new(g.clone(), g).unwrap();
        let a = CovectorField::Exprs(vec![
            Expression::parse("x2", &["x1", "x2"]).unwrap(),
            Expression::parse("-x1", &["x1", "x2"]).unwrap(),
        ]);
        let transferred = killing_transfer(&pair, a);
        let pp = PhasePoint::new(&[0.3, 0.7], &[0.5, -0.2]);
        // xi = p for the flat metric; expected a . xi exactly.
        let expected = 0.7 * 0.5 + (-0.3) * (-0.2);
        assert_relative_eq!(
            transferred.eval(&pp).unwrap(),
            expected,
            max_relative = 1e-14
        );
    }
}
