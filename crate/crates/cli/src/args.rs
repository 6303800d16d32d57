//! Command-line surface.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "geoequiv",
    version,
    about = "Verification toolkit for pairs of Riemannian metrics: commuting quadratic integrals, geodesic-trace comparison, Sinjukov transforms, and grid-discretized commuting operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the full verdict: Poisson brackets, matched geodesics, rank and
    /// eigenvalue summaries (exit 0 = pass, 1 = fail, 2 = inconclusive).
    Check(AnalysisArgs),
    /// Max normalized Poisson brackets of the integral family over seeded
    /// phase points.
    Brackets(AnalysisArgs),
    /// Distribution of the differential rank of the integral family.
    Rank(AnalysisArgs),
    /// Apply the Sinjukov transform and re-run the full verdict on the
    /// transformed pair.
    Sinjukov(SinjukovArgs),
    /// Integrate one seeded geodesic and export the trace as CSV.
    Geodesics(GeodesicArgs),
    /// Grid-operator study: commutator convergence over three resolutions
    /// plus self-adjointness defects.
    Quantum(QuantumArgs),
    /// Scan the chart for pointwise-proportionality loci.
    Scan(ScanArgs),
    /// List the built-in metric pairs.
    Catalog,
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Catalog pair name (see `geoequiv catalog`).
    #[arg(long, conflicts_with = "file")]
    pub catalog: Option<String>,
    /// Pair-definition JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Diagonal entries of the sphere-map matrix (beltrami-sphere), e.g. 1,2,3.
    #[arg(long = "A", value_delimiter = ',', allow_negative_numbers = true)]
    pub sphere_map_diag: Option<Vec<f64>>,
    /// Semi-axes-squared (ellipsoid, poisson-sphere), e.g. 1,2,3.
    #[arg(long = "a", value_delimiter = ',')]
    pub axes: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Seeded phase-point samples for bracket/rank/eigenvalue summaries.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Seed for all sampling in this run.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Unparameterized-distance tolerance for the geodesic comparison.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Flow duration per geodesic.
    #[arg(long = "t-end", default_value_t = 3.0)]
    pub t_end: f64,
    /// RK4 step.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Write the machine-readable CSV report here.
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalysisArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct SinjukovArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Transform power (nonzero; -2, -1, 1, 2 are the supported range).
    #[arg(long)]
    pub power: i32,
    /// Export the transformed pair as tabulated samples (JSON).
    #[arg(long = "emit-pair")]
    pub emit_pair: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Initial chart point (comma-separated); seeded when absent.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Initial velocity (comma-separated); seeded unit vector when absent.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub v0: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct QuantumArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Grid resolutions for the convergence study.
    #[arg(long, value_delimiter = ',', default_values_t = vec![32usize, 64, 128])]
    pub grid: Vec<usize>,
    /// Export one plottable grid field (`x1,x2,value` rows): the image of
    /// the first test function under the first operator, finest resolution.
    #[arg(long = "emit-grid")]
    pub emit_grid: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Grid density per axis.
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
}
