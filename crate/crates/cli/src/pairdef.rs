//! Pair-definition files and catalog resolution.
//!
//! A definition file either references a catalog entry:
//!
//! ```json
//! {"catalog": "beltrami-sphere", "params": {"A": [1, 1, 2]}}
//! ```
//!
//! or spells the pair out with expression entries:
//!
//! ```json
//! {"n": 2, "coords": ["x1", "x2"], "domain": [[-1, 1], [-1, 1]],
//!  "periodic": [false, false],
//!  "g": [["1", "0"], ["0", "1"]],
//!  "gbar": [["1+x1*x2", "0"], ["0", "1"]],
//!  "fd_step": 1e-5}
//! ```

use anyhow::{anyhow, bail, Context, Result};
use geoequiv_core::catalog;
use geoequiv_core::expr::Expression;
use geoequiv_core::{Chart, MetricField, MetricPair};
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

use crate::args::SourceArgs;

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum PairDef {
    Catalog {
        catalog: String,
        #[serde(default)]
        params: CatalogParams,
    },
    Explicit {
        n: usize,
        coords: Vec<String>,
        domain: Vec<[f64; 2]>,
        periodic: Vec<bool>,
        g: Vec<Vec<String>>,
        gbar: Vec<Vec<String>>,
        #[serde(default = "default_fd_step")]
        fd_step: f64,
    },
}

fn default_fd_step() -> f64 {
    geoequiv_core::metric::DEFAULT_FD_STEP
}

#[derive(Deserialize, Debug, Default)]
struct CatalogParams {
    #[serde(rename = "A")]
    sphere_map_diag: Option<Vec<f64>>,
    a: Option<Vec<f64>>,
}

/// Human-readable label of the resolved pair (for report headers).
pub struct ResolvedPair {
    pub label: String,
    pub pair: MetricPair,
}

pub fn resolve(source: &SourceArgs) -> Result<ResolvedPair> {
    let resolved = match (&source.catalog, &source.file) {
        (Some(name), None) => {
            let values = source
                .sphere_map_diag
                .clone()
                .or_else(|| source.axes.clone());
            build_catalog(name, values.as_deref())?
        }
        (None, Some(path)) => load_file(path)?,
        (None, None) => bail!("a pair source is required: --catalog NAME or --file PATH"),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    // Smoke-evaluate both members once so malformed definitions surface as
    // configuration errors rather than mid-analysis failures.
    let probe: Vec<f64> = resolved
        .pair
        .chart()
        .sample_box()
        .iter()
        .map(|&(lo, hi)| 0.5 * (lo + hi))
        .collect();
    resolved
        .pair
        .g()
        .eval(&probe)
        .with_context(|| format!("pair `{}`: g is not evaluable", resolved.label))?;
    resolved
        .pair
        .gbar()
        .eval(&probe)
        .with_context(|| format!("pair `{}`: gbar is not evaluable", resolved.label))?;
    Ok(resolved)
}

fn build_catalog(name: &str, values: Option<&[f64]>) -> Result<ResolvedPair> {
    let pair = catalog::build_pair(name, values)?;
    let label = match values {
        Some(v) => format!(
            "{name}({})",
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        None => format!("{name}(defaults)"),
    };
    Ok(ResolvedPair { label, pair })
}

fn load_file(path: &Path) -> Result<ResolvedPair> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read pair definition `{}`", path.display()))?;
    let def: PairDef = serde_json::from_str(&text)
        .with_context(|| format!("malformed pair definition `{}`", path.display()))?;
    match def {
        PairDef::Catalog {
            catalog: name,
            params,
        } => {
            let values = params.sphere_map_diag.or(params.a);
            build_catalog(&name, values.as_deref())
        }
        PairDef::Explicit {
            n,
            coords,
            domain,
            periodic,
            g,
            gbar,
            fd_step,
        } => {
            if coords.len() != n || domain.len() != n || periodic.len() != n {
                bail!("definition declares n = {n} but field lengths disagree");
            }
            let names: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
            let bounds: Vec<(f64, f64)> = domain.iter().map(|d| (d[0], d[1])).collect();
            let chart = Arc::new(Chart::new(&names, &bounds, &periodic)?);
            let parse_matrix =
                |rows: &[Vec<String>], which: &str| -> Result<Vec<Vec<Expression>>> {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        bail!("`{which}` must be an {n}x{n} matrix of expressions");
                    }
                    rows.iter()
                        .map(|row| {
                            row.iter()
                                .map(|src| {
                                    Expression::parse(src, &names)
                                        .map_err(|e| anyhow!("in `{which}` entry `{src}`: {e}"))
                                })
                                .collect()
                        })
                        .collect()
                };
            let g_entries = parse_matrix(&g, "g")?;
            let gbar_entries = parse_matrix(&gbar, "gbar")?;
            let g_field =
                MetricField::from_exprs(chart.clone(), g_entries, fd_step)?.with_id("file.g");
            let gbar_field =
                MetricField::from_exprs(chart, gbar_entries, fd_step)?.with_id("file.gbar");
            Ok(ResolvedPair {
                label: format!("file:{}", path.display()),
                pair: MetricPair::new(g_field, gbar_field)?,
            })
        }
    }
}
