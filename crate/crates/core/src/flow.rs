//! Hamiltonian integration of geodesic flows, conservation-drift
//! measurement, and unparameterized-curve comparison of two metrics.
//!
//! Geodesics are integrated as the Hamiltonian system of
//! `H = (1/2) p^T g^{-1} p` with fixed-step RK4. The spatial force
//! `-dH/dx` needs metric derivatives; those use Richardson-extrapolated
//! central differences (two stencil widths combined to fourth order) so the
//! finite-difference floor sits well below the RK4 truncation error that the
//! drift diagnostics measure.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::integrals::{IntegralFamily, PhasePoint};
use crate::linalg::{self, Mat};
use crate::metric::MetricField;
use crate::operators::MetricPair;
use crate::par;
use crate::real;
use crate::sample::PhaseSampler;

/// One recorded flow sample.
#[derive(Clone, Debug)]
pub struct TraceSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

/// A time-sampled solution of Hamilton's equations for one metric.
///
/// Periodic coordinates are *not* wrapped in the recorded samples, so traces
/// are continuous across the seam; wrapping happens inside metric
/// evaluation.
#[derive(Clone, Debug)]
pub struct GeodesicTrace {
    pub metric_id: String,
    pub samples: Vec<TraceSample>,
    pub step: f64,
    pub method: &'static str,
    /// Max relative Hamiltonian drift over the recorded samples.
    pub energy_drift: f64,
    /// True when integration stopped early at the chart boundary.
    pub exited_domain: bool,
}

impl GeodesicTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Fourth-order metric derivative: Richardson combination of two central
/// differences, `(4 D_{h/2} - D_h) / 3`.
fn metric_partial_o4(metric: &MetricField, x: &[f64], i: usize) -> Result<Mat> {
    let h = metric.fd_step() * real::abs(x[i]).max(1.0);
    let coarse = metric.partials_with_step(x, i, h)?;
    let fine = metric.partials_with_step(x, i, 0.5 * h)?;
    Ok(fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0)))
}

/// Hamiltonian right-hand side: `dx = g^{-1} p`,
/// `dp_i = (1/2) xi^T (d_i g) xi` with `xi = g^{-1} p`.
fn hamiltonian_rhs(metric: &MetricField, x: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (ginv, _) = metric.inverse_and_det(x)?;
    let xi = ginv.mul_vec(p);
    let n = x.len();
    let mut dp = Vec::with_capacity(n);
    for i in 0..n {
        let dg = metric_partial_o4(metric, x, i)?;
        dp.push(0.5 * linalg::dot(&dg.mul_vec(&xi), &xi));
    }
    Ok((xi, dp))
}

/// Options for [`integrate_geodesic_with`].
#[derive(Clone, Debug)]
pub struct FlowOptions {
    /// Record every k-th step (the initial and final samples always appear).
    pub record_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { record_every: 1 }
    }
}

/// Integrates the geodesic through `x0` with initial velocity `v0` (momentum
/// `p0 = g(x0) v0`) for `t_end` using fixed-step RK4. The trace is truncated
/// with a domain-exit flag if the trajectory reaches the chart boundary.
pub fn integrate_geodesic(
    metric: &MetricField,
    x0: &[f64],
    v0: &[f64],
    t_end: f64,
    step: f64,
) -> Result<GeodesicTrace> {
    integrate_geodesic_with(metric, x0, v0, t_end, step, &FlowOptions::default())
}

pub fn integrate_geodesic_with(
    metric: &MetricField,
    x0: &[f64],
    v0: &[f64],
    t_end: f64,
    step: f64,
    opts: &FlowOptions,
) -> Result<GeodesicTrace> {
    if step <= 0.0 || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "step and t_end must be positive".into(),
        ));
    }
    if v0.iter().all(|c| *c == 0.0) {
        return Err(Error::ZeroVector("integrate_geodesic".to_string()));
    }
    metric.chart().check_contains(x0)?;
    let record_every = opts.record_every.max(1);

    let g0 = metric.eval(x0)?;
    let mut x = x0.to_vec();
    let mut p = g0.mul_vec(v0);
    let n_steps = (real::round(t_end / step) as usize).max(1);

    let mut samples = Vec::with_capacity(n_steps / record_every + 2);
    samples.push(TraceSample {
        t: 0.0,
        x: x.clone(),
        p: p.clone(),
    });
    let mut exited = false;

    'steps: for s in 0..n_steps {
        let stage = |xs: &[f64], ps: &[f64]| -> core::result::Result<(Vec<f64>, Vec<f64>), Error> {
            hamiltonian_rhs(metric, xs, ps)
        };
        macro_rules! try_stage {
            ($xs:expr, $ps:expr) => {
                match stage($xs, $ps) {
                    Ok(v) => v,
                    Err(Error::OutOfDomain { .. }) => {
                        exited = true;
                        break 'steps;
                    }
                    Err(e) => return Err(e),
                }
            };
        }
        let (k1x, k1p) = try_stage!(&x, &p);
        let half = 0.5 * step;
        let x2: Vec<f64> = x.iter().zip(&k1x).map(|(a, k)| a + half * k).collect();
        let p2: Vec<f64> = p.iter().zip(&k1p).map(|(a, k)| a + half * k).collect();
        let (k2x, k2p) = try_stage!(&x2, &p2);
        let x3: Vec<f64> = x.iter().zip(&k2x).map(|(a, k)| a + half * k).collect();
        let p3: Vec<f64> = p.iter().zip(&k2p).map(|(a, k)| a + half * k).collect();
        let (k3x, k3p) = try_stage!(&x3, &p3);
        let x4: Vec<f64> = x.iter().zip(&k3x).map(|(a, k)| a + step * k).collect();
        let p4: Vec<f64> = p.iter().zip(&k3p).map(|(a, k)| a + step * k).collect();
        let (k4x, k4p) = try_stage!(&x4, &p4);

        let sixth = step / 6.0;
        for i in 0..x.len() {
            x[i] += sixth * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            p[i] += sixth * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
        if !metric.chart().contains(&x) {
            exited = true;
            break;
        }
        let t = (s + 1) as f64 * step;
        if (s + 1) % record_every == 0 || s + 1 == n_steps {
            samples.push(TraceSample {
                t,
                x: x.clone(),
                p: p.clone(),
            });
        }
    }

    // Relative Hamiltonian drift over the recorded samples.
    let mut energy_drift = 0.0f64;
    let mut h0 = None;
    for s in &samples {
        let (ginv, _) = metric.inverse_and_det(&s.x)?;
        let h = 0.5 * linalg::dot(&ginv.mul_vec(&s.p), &s.p);
        match h0 {
            None => h0 = Some(h),
            Some(h0) => {
                energy_drift = energy_drift.max(real::abs(h - h0) / real::abs(h0).max(1e-300));
            }
        }
    }

    Ok(GeodesicTrace {
        metric_id: metric.id().to_string(),
        samples,
        step,
        method: "rk4",
        energy_drift,
        exited_domain: exited,
    })
}

/// Max relative drift `max_t |I_k(t) - I_k(0)| / max(1, |I_k(0)|)` of each
/// integral along a recorded trace.
pub fn integral_drift(trace: &GeodesicTrace, fam: &IntegralFamily) -> Result<Vec<f64>> {
    let n = fam.len();
    let mut out = alloc::vec![0.0f64; n];
    let mut first: Option<Vec<f64>> = None;
    for s in &trace.samples {
        let pp = PhasePoint::new(&s.x, &s.p);
        let values = fam.eval_all(&pp)?;
        match &first {
            None => first = Some(values),
            Some(initial) => {
                for k in 0..n {
                    let drift = real::abs(values[k] - initial[k]) / initial[k].abs().max(1.0);
                    out[k] = out[k].max(drift);
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Unparameterized curve comparison
// ---------------------------------------------------------------------------

/// Distance from point `q` to the segment `a..b`, using minimal-image
/// deltas on periodic axes.
fn point_segment_distance(chart: &Chart, q: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let to_q = chart.delta(q, a);
    let dir = chart.delta(b, a);
    let len_sq = linalg::dot(&dir, &dir);
    let t = if len_sq > 0.0 {
        (linalg::dot(&to_q, &dir) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let resid: Vec<f64> = to_q.iter().zip(&dir).map(|(d, s)| d - t * s).collect();
    real::hypot_n(&resid)
}

fn directed_polyline_distance(chart: &Chart, from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for q in from {
        let mut best = f64::INFINITY;
        if to.len() == 1 {
            best = chart.distance(q, &to[0]);
        }
        for w in to.windows(2) {
            best = best.min(point_segment_distance(chart, q, &w[0], &w[1]));
        }
        worst = worst.max(best);
    }
    worst
}

/// Symmetrized max-min polyline distance between two traces in chart
/// coordinates (chart-Euclidean with minimal-image periodic deltas; a
/// chart-dependent diagnostic, not a Riemannian distance).
pub fn unparameterized_distance(a: &GeodesicTrace, b: &GeodesicTrace, chart: &Chart) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "traces must be nonempty");
    let pa: Vec<Vec<f64>> = a.samples.iter().map(|s| s.x.clone()).collect();
    let pb: Vec<Vec<f64>> = b.samples.iter().map(|s| s.x.clone()).collect();
    directed_polyline_distance(chart, &pa, &pb).max(directed_polyline_distance(chart, &pb, &pa))
}

/// Chart arc-length prefix of a trace, cut at exactly `max_len` (the final
/// point is interpolated inside the last segment so two prefixes of equal
/// length end at the same arc position).
fn arc_length_prefix(chart: &Chart, samples: &[TraceSample], max_len: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    for (i, s) in samples.iter().enumerate() {
        if i > 0 {
            let prev = &samples[i - 1].x;
            let seg = chart.distance(&s.x, prev);
            if acc + seg > max_len {
                if seg > 0.0 {
                    let t = (max_len - acc) / seg;
                    let delta = chart.delta(&s.x, prev);
                    let cut: Vec<f64> = prev.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
                    out.push(cut);
                }
                break;
            }
            acc += seg;
        }
        out.push(s.x.clone());
    }
    out
}

fn total_arc_length(chart: &Chart, samples: &[TraceSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| chart.distance(&w[1].x, &w[0].x))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct GeodesicComparison {
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    /// Coverage-matched unparameterized distance; `None` when the geodesic
    /// was unusable (immediate domain exit).
    pub distance: Option<f64>,
    pub g_exited: bool,
    pub gbar_exited: bool,
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub verdict: Verdict,
    pub tol: f64,
    /// Worst distance over usable geodesics and its index.
    pub worst: f64,
    pub worst_index: Option<usize>,
    pub rows: Vec<GeodesicComparison>,
    pub skipped: usize,
}

#[derive(Clone, Debug)]
pub struct EquivalenceOptions {
    pub seed: u64,
    pub record_every: usize,
    pub threads: usize,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            seed: 42,
            record_every: 5,
            threads: 1,
        }
    }
}

/// Integrates matched geodesics of both metrics from seeded initial
/// conditions and compares them as unparameterized point sets.
///
/// The `g`-geodesic starts with a `g`-unit velocity `xi`; the `gbar`-side
/// initial velocity is the orbital-map image `xi / |xi|_gbar`, which matches
/// orbits but not time parameterizations. Both traces are therefore trimmed
/// to their common chart arc length before the symmetrized polyline distance
/// is taken; without the trim, the faster curve's overhang would dominate
/// the comparison even for identical geodesics.
pub fn check_equivalence(
    pair: &MetricPair,
    n_geodesics: usize,
    t_end: f64,
    step: f64,
    tol: f64,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceReport> {
    if n_geodesics == 0 || t_end <= 0.0 || step <= 0.0 || tol <= 0.0 {
        return Err(Error::InvalidParameter(
            "check_equivalence parameters must be positive".into(),
        ));
    }
    let chart = pair.chart().clone();
    let mut sampler = PhaseSampler::new(pair.g(), opts.seed);
    let mut initial = Vec::with_capacity(n_geodesics);
    for _ in 0..n_geodesics {
        let x0 = sampler.next_point();
        let v0 = sampler.unit_velocity(&x0)?;
        initial.push((x0, v0));
    }

    let flow_opts = FlowOptions {
        record_every: opts.record_every,
    };
    let rows: Vec<Result<GeodesicComparison>> =
        par::map_indexed(n_geodesics, opts.threads, |idx| {
            let (x0, v0) = &initial[idx];
            let vbar0 = crate::integrals::orbital_map(pair, x0, v0)?;
            let tg = integrate_geodesic_with(pair.g(), x0, v0, t_end, step, &flow_opts)?;
            let tb = integrate_geodesic_with(pair.gbar(), x0, &vbar0, t_end, step, &flow_opts)?;
            if tg.len() < 2 || tb.len() < 2 {
                return Ok(GeodesicComparison {
                    x0: x0.clone(),
                    v0: v0.clone(),
                    distance: None,
                    g_exited: tg.exited_domain,
                    gbar_exited: tb.exited_domain,
                });
            }
            let common =
                total_arc_length(&chart, &tg.samples).min(total_arc_length(&chart, &tb.samples));
            let pa = arc_length_prefix(&chart, &tg.samples, common);
            let pb = arc_length_prefix(&chart, &tb.samples, common);
            let distance = directed_polyline_distance(&chart, &pa, &pb)
                .max(directed_polyline_distance(&chart, &pb, &pa));
            Ok(GeodesicComparison {
                x0: x0.clone(),
                v0: v0.clone(),
                distance: Some(distance),
                g_exited: tg.exited_domain,
                gbar_exited: tb.exited_domain,
            })
        });

    let mut out_rows = Vec::with_capacity(n_geodesics);
    let mut worst = 0.0f64;
    let mut worst_index = None;
    let mut skipped = 0;
    for (idx, row) in rows.into_iter().enumerate() {
        let row = row?;
        match row.distance {
            Some(d) => {
                if worst_index.is_none() || d > worst {
                    worst = d;
                    worst_index = Some(idx);
                }
            }
            None => skipped += 1,
        }
        out_rows.push(row);
    }
    let verdict = if worst_index.is_none() {
        Verdict::Inconclusive
    } else if worst <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(EquivalenceReport {
        verdict,
        tol,
        worst,
        worst_index,
        rows: out_rows,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use alloc::sync::Arc;
    use approx::assert_abs_diff_eq;

    fn flat_metric(extent: f64) -> MetricField {
        let chart = Arc::new(
            Chart::new(
                &["x1", "x2"],
                &[(-extent, extent), (-extent, extent)],
                &[false, false],
            )
            .unwrap(),
        );
        MetricField::from_fn(chart, "flat", Arc::new(|_: &[f64]| Ok(Mat::identity(2))))
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
    fn flat_geodesic_is_straight_line() {
        let g = flat_metric(10.0);
        let trace = integrate_geodesic(&g, &[0.0, 0.0], &[1.0, 0.0], 1.0, 1e-3).unwrap();
        let end = trace.samples.last().unwrap();
        assert_abs_diff_eq!(end.x[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(end.x[1], 0.0, epsilon = 1e-10);
        assert!(!trace.exited_domain);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let g = flat_metric(1.0);
        assert!(integrate_geodesic(&g, &[0.0, 0.0], &[1.0, 0.0], 1.0, 0.0).is_err());
        assert!(integrate_geodesic(&g, &[0.0, 0.0], &[0.0, 0.0], 1.0, 1e-2).is_err());
        assert!(integrate_geodesic(&g, &[5.0, 0.0], &[1.0, 0.0], 1.0, 1e-2).is_err());
    }

    #[test]
    fn domain_exit_truncates_with_flag() {
        let g = flat_metric(1.0);
        let trace = integrate_geodesic(&g, &[0.0, 0.0], &[1.0, 0.0], 5.0, 1e-2).unwrap();
        assert!(trace.exited_domain);
        let end = trace.samples.last().unwrap();
        assert!(end.x[0] < 1.0 + 1e-9);
    }

    #[test]
    fn equator_is_a_geodesic() {
        let g = sphere_metric();
        let theta0 = core::f64::consts::FRAC_PI_2;
        let trace = integrate_geodesic(&g, &[theta0, 0.0], &[0.0, 1.0], 2.0, 1e-3).unwrap();
        for s in &trace.samples {
            assert_abs_diff_eq!(s.x[0], theta0, epsilon = 1e-8);
        }
    }

    #[test]
    fn rk4_endpoint_error_is_fourth_order_on_flat_polar_lines() {
        // Flat plane in polar coordinates: geodesics are straight lines, but
        // the coordinate ODE is nonlinear, so the endpoint error shows the
        // integrator's true order against the exact Cartesian line.
        let chart = Arc::new(
            Chart::new(
                &["r", "phi"],
                &[(0.05, 50.0), (0.0, core::f64::consts::TAU)],
                &[false, true],
            )
            .unwrap(),
        );
        let g = MetricField::from_fn(
            chart,
            "polar",
            Arc::new(|x: &[f64]| Ok(Mat::diag(&[1.0, x[0] * x[0]]))),
        );
        // Start at (r, phi) = (1, 0) with (dr/dt, dphi/dt) = (0.3, 0.9):
        // Cartesian velocity (0.3, 0.9) from (1, 0).
        let t_end = 1.0;
        let exact_xy = [1.0 + 0.3 * t_end, 0.9 * t_end];
        let exact_r = real::hypot_n(&exact_xy);
        let exact_phi = real::atan2(exact_xy[1], exact_xy[0]);
        let endpoint_error = |step: f64| -> f64 {
            let trace = integrate_geodesic(&g, &[1.0, 0.0], &[0.3, 0.9], t_end, step).unwrap();
            let end = trace.samples.last().unwrap();
            let dx = end.x[0] * real::cos(end.x[1]) - exact_r * real::cos(exact_phi);
            let dy = end.x[0] * real::sin(end.x[1]) - exact_r * real::sin(exact_phi);
            real::hypot_n(&[dx, dy])
        };
        let e1 = endpoint_error(0.02);
        let e2 = endpoint_error(0.01);
        let e3 = endpoint_error(0.005);
        let r1 = e1 / e2;
        let r2 = e2 / e3;
        assert!(
            (11.2..=20.8).contains(&r1) && (11.2..=20.8).contains(&r2),
            "expected ~16x decay, got {r1} and {r2} (errors {e1:e}, {e2:e}, {e3:e})"
        );
    }

    #[test]
    fn time_reversal_recovers_start() {
        let g = sphere_metric();
        let x0 = [1.1, 0.7];
        let v0 = [0.4, 0.6];
        let step = 1e-3;
        let t_end = 2.0;
        let fwd = integrate_geodesic(&g, &x0, &v0, t_end, step).unwrap();
        let end = fwd.samples.last().unwrap();
        // Endpoint error estimated by step halving.
        let fine = integrate_geodesic(&g, &x0, &v0, t_end, 0.5 * step).unwrap();
        let fine_end = fine.samples.last().unwrap();
        let endpoint_err =
            real::hypot_n(&[end.x[0] - fine_end.x[0], end.x[1] - fine_end.x[1]]).max(1e-14);

        let (ginv, _) = g.inverse_and_det(&end.x).unwrap();
        let v_end = ginv.mul_vec(&end.p);
        let back = integrate_geodesic(
            &g,
            &end.x,
            &v_end.iter().map(|c| -c).collect::<Vec<_>>(),
            t_end,
            step,
        )
        .unwrap();
        let back_end = back.samples.last().unwrap();
        let recovery = real::hypot_n(&[back_end.x[0] - x0[0], back_end.x[1] - x0[1]]);
        assert!(
            recovery <= 10.0 * endpoint_err.max(1e-12) + 1e-12,
            "reversal error {recovery} vs endpoint error {endpoint_err}"
        );
    }

    #[test]
    fn distance_of_trace_to_itself_is_zero() {
        let g = sphere_metric();
        let trace = integrate_geodesic(&g, &[1.0, 0.5], &[0.3, 0.8], 1.0, 1e-2).unwrap();
        let d = unparameterized_distance(&trace, &trace, g.chart());
        assert_eq!(d, 0.0);
    }

    #[test]
    fn distance_to_reversed_half_density_trace_is_interpolation_small() {
        let g = sphere_metric();
        let full = integrate_geodesic(&g, &[1.0, 0.5], &[0.3, 0.8], 1.0, 1e-2).unwrap();
        let mut reversed = full.clone();
        reversed.samples = full.samples.iter().rev().step_by(2).cloned().collect();
        let d = unparameterized_distance(&full, &reversed, g.chart());
        // Chord deviation of a curve with O(1) curvature over 2*step spacing.
        assert!(d <= 1e-3, "distance {d}");
    }

    #[test]
    fn distance_detects_rigid_shift() {
        let g = flat_metric(10.0);
        let base = integrate_geodesic(&g, &[0.0, 0.0], &[1.0, 0.0], 1.0, 1e-2).unwrap();
        let mut shifted = base.clone();
        for s in &mut shifted.samples {
            s.x[1] += 1e-3;
        }
        let d = unparameterized_distance(&base, &shifted, g.chart());
        assert!((9e-4..=1.1e-3).contains(&d), "distance {d}");
    }

    #[test]
    fn equal_pair_integral_drift_matches_energy_drift() {
        let g = sphere_metric();
        let pair = MetricPair::new(g.clone(), g.clone()).unwrap();
        let fam = IntegralFamily::new(pair);
        // Unit-speed initial data: 2H = 1, so both quantities carry the same
        // normalizer. The step is deliberately coarse so the drift sits far
        // above the rounding floor of the two evaluation routes.
        let x0 = [1.2, 0.3];
        let gm = g.eval(&x0).unwrap();
        let v = [0.5, 0.4];
        let norm = real::sqrt(linalg::dot(&gm.mul_vec(&v), &v));
        let v0: Vec<f64> = v.iter().map(|c| c / norm).collect();
        let trace = integrate_geodesic(&g, &x0, &v0, 2.0, 0.05).unwrap();
        let drifts = integral_drift(&trace, &fam).unwrap();
        assert!(trace.energy_drift > 1e-12, "drift too small to compare");
        let rel = (drifts[1] - trace.energy_drift).abs() / trace.energy_drift;
        assert!(rel <= 1e-6, "relative mismatch {rel}");
    }

    #[test]
    fn conformal_pair_passes_equivalence() {
        let g = flat_metric(20.0);
        let gbar = MetricField::from_fn(
            g.chart().clone(),
            "flat3",
            Arc::new(|_: &[f64]| Ok(Mat::identity(2).scale(3.0))),
        );
        let pair = MetricPair::new(g, gbar).unwrap();
        let report =
            check_equivalence(&pair, 5, 1.0, 1e-2, 1e-6, &EquivalenceOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.worst <= 1e-9, "worst {}", report.worst);
    }
}
