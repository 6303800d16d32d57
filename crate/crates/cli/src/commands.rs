//! Command implementations. Exit codes: 0 pass, 1 fail, 2 inconclusive,
//! 64 configuration/file errors (handled by `main`).

use anyhow::{bail, Result};
use geoequiv_core::catalog::{self, ScanResult};
use geoequiv_core::flow::{
    check_equivalence, integrate_geodesic_with, EquivalenceOptions, FlowOptions, Verdict,
};
use geoequiv_core::integrals::{
    bracket_report, differential_rank, BracketOptions, BracketReport, IntegralFamily,
};
use geoequiv_core::quantum::{
    adjoint_defect, build_quantum_operator, commutator_norm, fitted_order, test_functions,
    GridBoundary, GridSpec,
};
use geoequiv_core::sample::PhaseSampler;
use geoequiv_core::{Error as CoreError, MetricPair};
use std::collections::BTreeMap;

use crate::args::{AnalysisArgs, GeodesicArgs, QuantumArgs, RunArgs, ScanArgs, SinjukovArgs};
use crate::pairdef::{resolve, ResolvedPair};
use crate::report::{fmt_f64, point_blob, Csv};

/// Threshold on max normalized brackets for the `check` verdict.
const BRACKET_TOL: f64 = 1e-6;
/// Geodesics integrated by the `check` comparison.
const CHECK_GEODESICS: usize = 20;
/// Quantum verdict thresholds: fitted commutator order and adjoint defect.
const QUANTUM_ORDER_MIN: f64 = 1.5;
const QUANTUM_DEFECT_TOL: f64 = 1e-9;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

/// Worker cap: `GEOEQUIV_THREADS` overrides the detected parallelism.
pub fn thread_cap() -> usize {
    if let Ok(v) = std::env::var("GEOEQUIV_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
        eprintln!("warning: ignoring invalid GEOEQUIV_THREADS=`{v}`");
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn bracket_options() -> BracketOptions {
    BracketOptions {
        threads: thread_cap(),
        ..BracketOptions::default()
    }
}

fn equivalence_options(seed: u64) -> EquivalenceOptions {
    EquivalenceOptions {
        seed,
        record_every: 5,
        threads: thread_cap(),
    }
}

struct CheckReport {
    exit: i32,
    csv: Csv,
}

struct RankSummary {
    ranks: BTreeMap<usize, usize>,
    degenerate: usize,
    eigen_counts: BTreeMap<usize, usize>,
}

fn rank_and_eigen_summary(pair: &MetricPair, samples: usize, seed: u64) -> Result<RankSummary> {
    let fam = IntegralFamily::new(pair.clone());
    let mut sampler = PhaseSampler::new(pair.g(), seed);
    let mut ranks: BTreeMap<usize, usize> = BTreeMap::new();
    let mut degenerate = 0usize;
    let mut eigen_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..samples {
        let pp = sampler.next_phase_point()?;
        match differential_rank(&fam, &pp, 1e-6) {
            Ok(rank) => *ranks.entry(rank).or_insert(0) += 1,
            Err(CoreError::DegeneratePhasePoint { .. }) => degenerate += 1,
            Err(e) => return Err(e.into()),
        }
        let count = pair.distinct_eigenvalue_count(&pp.x, None)?;
        *eigen_counts.entry(count).or_insert(0) += 1;
    }
    Ok(RankSummary {
        ranks,
        degenerate,
        eigen_counts,
    })
}

fn bracket_rows(csv: &mut Csv, section: &str, report: &BracketReport) {
    let n = report.max_normalized.rows();
    for j in 0..n {
        for k in (j + 1)..n {
            let argmax = report
                .argmax_for(j, k)
                .map(|pp| format!("{};{}", point_blob("x", &pp.x), point_blob("p", &pp.p)))
                .unwrap_or_default();
            csv.row(&[
                section.to_string(),
                j.to_string(),
                k.to_string(),
                fmt_f64(report.max_normalized[(j, k)]),
                argmax,
            ]);
            csv.row(&[
                format!("{section}_halved_step"),
                j.to_string(),
                k.to_string(),
                fmt_f64(report.max_normalized_halved[(j, k)]),
                String::new(),
            ]);
        }
    }
}

/// The composite analysis behind `check` and `sinjukov`.
fn run_check_pipeline(label: &str, pair: &MetricPair, run: &RunArgs) -> Result<CheckReport> {
    let fam = IntegralFamily::new(pair.clone());
    let mut csv = Csv::new("section,key1,key2,value,detail");
    println!("pair     : {label}");

    // Involution component.
    let brackets = bracket_report(&fam, run.samples, run.seed, &bracket_options())?;
    bracket_rows(&mut csv, "bracket", &brackets);
    let bracket_state = if brackets.samples_used == 0 {
        "INCONCLUSIVE"
    } else if brackets.overall_max() <= BRACKET_TOL {
        "PASS"
    } else {
        "FAIL"
    };
    println!(
        "brackets : max |{{I_j,I_k}}|/scale = {:.3e} over {} points, halved-step {:.3e} (threshold {BRACKET_TOL:.0e}, skipped {}) .. {bracket_state}",
        brackets.overall_max(),
        brackets.samples_used,
        brackets.overall_max_halved(),
        brackets.skipped,
    );

    // Geodesic comparison component.
    let equivalence = check_equivalence(
        pair,
        CHECK_GEODESICS,
        run.t_end,
        run.step,
        run.tol,
        &equivalence_options(run.seed),
    )?;
    for (idx, row) in equivalence.rows.iter().enumerate() {
        csv.row(&[
            "equivalence".to_string(),
            idx.to_string(),
            String::new(),
            row.distance.map(fmt_f64).unwrap_or_default(),
            format!(
                "{};{};exited_g={};exited_gbar={}",
                point_blob("x", &row.x0),
                point_blob("v", &row.v0),
                row.g_exited,
                row.gbar_exited
            ),
        ]);
    }
    let eq_state = match equivalence.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "INCONCLUSIVE",
    };
    println!(
        "geodesics: worst unparameterized distance = {:.3e} over {} geodesics (tol {:.0e}, skipped {}) .. {eq_state}",
        equivalence.worst, CHECK_GEODESICS, run.tol, equivalence.skipped,
    );

    // Rank and eigenvalue summaries (informational).
    let RankSummary {
        ranks,
        degenerate,
        eigen_counts,
    } = rank_and_eigen_summary(pair, run.samples, run.seed)?;
    for (rank, count) in &ranks {
        csv.row(&[
            "rank_hist".to_string(),
            rank.to_string(),
            String::new(),
            count.to_string(),
            String::new(),
        ]);
    }
    if degenerate > 0 {
        csv.row(&[
            "rank_degenerate".to_string(),
            String::new(),
            String::new(),
            degenerate.to_string(),
            String::new(),
        ]);
    }
    for (count, points) in &eigen_counts {
        csv.row(&[
            "eigen_hist".to_string(),
            count.to_string(),
            String::new(),
            points.to_string(),
            String::new(),
        ]);
    }
    println!("rank     : distribution {ranks:?} (degenerate skipped: {degenerate})");
    println!("eigen    : distinct-eigenvalue counts {eigen_counts:?}");

    let exit = match (bracket_state, eq_state) {
        ("PASS", "PASS") => EXIT_PASS,
        ("FAIL", _) | (_, "FAIL") => EXIT_FAIL,
        _ => EXIT_INCONCLUSIVE,
    };
    let verdict = match exit {
        EXIT_PASS => "PASS",
        EXIT_FAIL => "FAIL",
        _ => "INCONCLUSIVE",
    };
    csv.row(&[
        "summary".to_string(),
        "brackets".to_string(),
        String::new(),
        fmt_f64(brackets.overall_max()),
        bracket_state.to_string(),
    ]);
    csv.row(&[
        "summary".to_string(),
        "equivalence".to_string(),
        String::new(),
        fmt_f64(equivalence.worst),
        eq_state.to_string(),
    ]);
    csv.row(&[
        "summary".to_string(),
        "overall".to_string(),
        String::new(),
        exit.to_string(),
        verdict.to_string(),
    ]);
    println!("verdict  : {verdict} (exit {exit})");
    Ok(CheckReport { exit, csv })
}

pub fn cmd_check(args: &AnalysisArgs) -> Result<i32> {
    let ResolvedPair { label, pair } = resolve(&args.source)?;
    let report = run_check_pipeline(&label, &pair, &args.run)?;
    if let Some(path) = &args.run.emit {
        report.csv.write(path)?;
    }
    Ok(report.exit)
}

pub fn cmd_brackets(args: &AnalysisArgs) -> Result<i32> {
    let ResolvedPair { label, pair } = resolve(&args.source)?;
    let fam = IntegralFamily::new(pair.clone());
    let report = bracket_report(&fam, args.run.samples, args.run.seed, &bracket_options())?;
    let n = pair.dim();
    let mut header = String::from("j,k,max_normalized_bracket,halved_step_value");
    for i in 1..=n {
        header.push_str(&format!(",x{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",p{i}"));
    }
    let mut csv = Csv::new(&header);
    for j in 0..n {
        for k in (j + 1)..n {
            let mut row = vec![
                j.to_string(),
                k.to_string(),
                fmt_f64(report.max_normalized[(j, k)]),
                fmt_f64(report.max_normalized_halved[(j, k)]),
            ];
            match report.argmax_for(j, k) {
                Some(pp) => {
                    row.extend(pp.x.iter().map(|v| fmt_f64(*v)));
                    row.extend(pp.p.iter().map(|v| fmt_f64(*v)));
                }
                None => row.extend(std::iter::repeat_n(String::new(), 2 * n)),
            }
            csv.row(&row);
        }
    }
    println!(
        "pair {label}: max normalized bracket {:.3e} over {} samples ({} skipped)",
        report.overall_max(),
        report.samples_used,
        report.skipped
    );
    if let Some(path) = &args.run.emit {
        csv.write(path)?;
    }
    Ok(EXIT_PASS)
}

pub fn cmd_rank(args: &AnalysisArgs) -> Result<i32> {
    let ResolvedPair { label, pair } = resolve(&args.source)?;
    let RankSummary {
        ranks,
        degenerate,
        eigen_counts,
    } = rank_and_eigen_summary(&pair, args.run.samples, args.run.seed)?;
    let mut csv = Csv::new("kind,value,count");
    for (rank, count) in &ranks {
        csv.row(&["rank".to_string(), rank.to_string(), count.to_string()]);
    }
    csv.row(&[
        "degenerate".to_string(),
        String::new(),
        degenerate.to_string(),
    ]);
    for (count, points) in &eigen_counts {
        csv.row(&[
            "distinct_eigenvalues".to_string(),
            count.to_string(),
            points.to_string(),
        ]);
    }
    println!("pair {label}: rank distribution {ranks:?} (degenerate {degenerate}), distinct-eigenvalue counts {eigen_counts:?}");
    if let Some(path) = &args.run.emit {
        csv.write(path)?;
    }
    Ok(EXIT_PASS)
}

pub fn cmd_sinjukov(args: &SinjukovArgs) -> Result<i32> {
    if args.power == 0 {
        bail!("--power 0 is the identity transform; choose a nonzero power");
    }
    let ResolvedPair { label, pair } = resolve(&args.source)?;
    let transformed = pair.sinjukov_transform(args.power)?;
    let label = format!("{label} (B-transform, power {})", args.power);
    if let Some(path) = &args.emit_pair {
        export_tabulated(&transformed, path)?;
        println!("tabulated transformed pair written to {}", path.display());
    }
    let report = run_check_pipeline(&label, &transformed, &args.run)?;
    if let Some(path) = &args.run.emit {
        report.csv.write(path)?;
    }
    Ok(report.exit)
}

/// Exports a transformed pair as point samples on a regular grid over the
/// chart's sampling region. The values are tabulated, not closed-form:
/// consumers must interpolate, and this tool does not load such files back.
fn export_tabulated(pair: &MetricPair, path: &std::path::Path) -> Result<()> {
    const RES: usize = 33;
    let chart = pair.chart();
    let sample_box = chart.sample_box();
    let n = pair.dim();
    let grids: Vec<Vec<f64>> = sample_box
        .iter()
        .map(|&(lo, hi)| {
            (0..RES)
                .map(|i| lo + (hi - lo) * i as f64 / (RES - 1) as f64)
                .collect()
        })
        .collect();
    if n != 2 {
        bail!("tabulated export supports 2d charts");
    }
    let mut g_values = Vec::new();
    let mut gbar_values = Vec::new();
    for &x1 in &grids[0] {
        for &x2 in &grids[1] {
            let x = [x1, x2];
            let g = pair.g().eval(&x)?;
            let gbar = pair.gbar().eval(&x)?;
            g_values.push(g.data().to_vec());
            gbar_values.push(gbar.data().to_vec());
        }
    }
    let doc = serde_json::json!({
        "tabulated": true,
        "notice": "point samples of a transformed pair; evaluation between nodes requires interpolation, and this file cannot be loaded back as a pair definition",
        "coords": chart.names(),
        "grid": { "bounds": sample_box, "resolution": [RES, RES] },
        "entry_layout": "row-major n*n per node, nodes ordered x1-major",
        "g_values": g_values,
        "gbar_values": gbar_values,
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn cmd_geodesics(args: &GeodesicArgs) -> Result<i32> {
    let ResolvedPair { label, pair } = resolve(&args.source)?;
    let n = pair.dim();
    let mut sampler = PhaseSampler::new(pair.g(), args.run.seed);
    let x0 = match &args.x0 {
        Some(x) => {
            if x.len() != n {
                bail!("--x0 needs {n} coordinates");
            }
            x.clone()
        }
        None => sampler.next_point(),
    };
    let v0 = match &args.v0 {
        Some(v) => {
            if v.len() != n {
                bail!("--v0 needs {n} components");
            }
            v.clone()
        }
        None => sampler.unit_velocity(&x0)?,
    };
    let trace = integrate_geodesic_with(
        pair.g(),
        &x0,
        &v0,
        args.run.t_end,
        args.run.step,
        &FlowOptions { record_every: 1 },
    )?;
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",p{i}"));
    }
    let mut csv = Csv::new(&header);
    for s in &trace.samples {
        let mut row = vec![fmt_f64(s.t)];
        row.extend(s.x.iter().map(|v| fmt_f64(*v)));
        row.extend(s.p.iter().map(|v| fmt_f64(*v)));
        csv.row(&row);
    }
    println!(
        "pair {label}: integrated {} samples (metric `{}`, energy drift {:.3e}{})",
        trace.samples.len(),
        trace.metric_id,
        trace.energy_drift,
        if trace.exited_domain {
            ", exited domain"
        } else {
            ""
        }
    );
    if let Some(path) = &args.run.emit {
        csv.write(path)?;
    }
    Ok(EXIT_PASS)
}

pub fn cmd_quantum(args: &QuantumArgs) -> Result<i32> {
    let ResolvedPair { label, pair } = resolve(&args.source)?;
    if pair.dim() != 2 {
        bail!("the grid study supports 2d charts");
    }
    let mut resolutions = args.grid.clone();
    resolutions.sort_unstable();
    resolutions.dedup();
    if resolutions.len() < 2 {
        bail!("need at least two grid resolutions for the convergence study");
    }
    let rect = {
        let b = pair.chart().sample_box();
        [(b[0].0, b[0].1), (b[1].0, b[1].1)]
    };
    let n = pair.dim();
    let mut csv = Csv::new("kind,resolution,j,k,value");
    let mut norms: Vec<f64> = Vec::new();
    let mut worst_defect = 0.0f64;
    for &res in &resolutions {
        let spec = GridSpec::new(rect, [res, res], GridBoundary::Zero)?;
        let ops: Vec<_> = (0..n)
            .map(|k| build_quantum_operator(&pair, k, &spec))
            .collect::<geoequiv_core::Result<_>>()?;
        let tests = test_functions(&spec);
        let mut res_worst = 0.0f64;
        for j in 0..n {
            for k in (j + 1)..n {
                let norm = commutator_norm(&ops[j], &ops[k], &tests);
                res_worst = res_worst.max(norm);
                csv.row(&[
                    "commutator".to_string(),
                    res.to_string(),
                    j.to_string(),
                    k.to_string(),
                    fmt_f64(norm),
                ]);
            }
        }
        norms.push(res_worst);
        for (k, op) in ops.iter().enumerate() {
            let defect = adjoint_defect(op, &tests[0], &tests[1])
                .max(adjoint_defect(op, &tests[2], &tests[3]));
            worst_defect = worst_defect.max(defect);
            csv.row(&[
                "adjoint_defect".to_string(),
                res.to_string(),
                k.to_string(),
                String::new(),
                fmt_f64(defect),
            ]);
        }
    }
    if let Some(path) = &args.emit_grid {
        let res = *resolutions.last().unwrap();
        let spec = GridSpec::new(rect, [res, res], GridBoundary::Zero)?;
        let op = build_quantum_operator(&pair, 0, &spec)?;
        let image = op.apply(&test_functions(&spec)[0]);
        crate::report::grid_csv(&image).write(path)?;
        println!("grid field written to {}", path.display());
    }
    let order = fitted_order(&resolutions, &norms);
    let pass = order >= QUANTUM_ORDER_MIN && worst_defect <= QUANTUM_DEFECT_TOL;
    csv.row(&[
        "summary".to_string(),
        "fitted_order".to_string(),
        String::new(),
        String::new(),
        if order.is_finite() {
            fmt_f64(order)
        } else {
            "exact".to_string()
        },
    ]);
    csv.row(&[
        "summary".to_string(),
        "verdict".to_string(),
        String::new(),
        String::new(),
        if pass { "PASS" } else { "FAIL" }.to_string(),
    ]);
    println!(
        "pair {label}: commutator norms {norms:?} over resolutions {resolutions:?}, fitted order {}, worst adjoint defect {worst_defect:.3e} .. {}",
        if order.is_finite() {
            format!("{order:.2}")
        } else {
            "exact (all zero)".to_string()
        },
        if pass { "PASS" } else { "FAIL" }
    );
    if let Some(path) = &args.run.emit {
        csv.write(path)?;
    }
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

pub fn cmd_scan(args: &ScanArgs) -> Result<i32> {
    let ResolvedPair { label, pair } = resolve(&args.source)?;
    let result = catalog::proportionality_scan(&pair, args.grid, None)?;
    let mut csv = Csv::new("component,theta_like,phi_like,size,min_spread");
    match &result {
        ScanResult::AllProportional => {
            println!("pair {label}: proportional at every grid node (conformal pair)");
            csv.row(&[
                "all".to_string(),
                String::new(),
                String::new(),
                args.grid.pow(2).to_string(),
                String::new(),
            ]);
        }
        ScanResult::Components(components) => {
            println!(
                "pair {label}: {} proportionality component(s) on a {grid}x{grid} grid",
                components.len(),
                grid = args.grid,
            );
            for (idx, c) in components.iter().enumerate() {
                println!(
                    "  component {idx}: near ({:.6}, {:.6}), {} grid nodes, refined spread {:.3e}",
                    c.representative[0], c.representative[1], c.size, c.min_spread
                );
                csv.row(&[
                    idx.to_string(),
                    fmt_f64(c.representative[0]),
                    fmt_f64(c.representative[1]),
                    c.size.to_string(),
                    fmt_f64(c.min_spread),
                ]);
            }
        }
    }
    if let Some(path) = &args.run.emit {
        csv.write(path)?;
    }
    Ok(EXIT_PASS)
}

pub fn cmd_catalog() -> i32 {
    println!("built-in metric pairs:");
    for entry in catalog::catalog() {
        println!("  {:<24} params: {}", entry.name, entry.params);
        println!("  {:<24} chart:  {}", "", entry.chart);
        println!("  {:<24} notes:  {}", "", entry.caveats);
    }
    EXIT_PASS
}
