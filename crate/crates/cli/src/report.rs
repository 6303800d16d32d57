//! CSV assembly with lossless float formatting.

use anyhow::{Context, Result};
use std::path::Path;

/// 17-significant-digit scientific formatting: doubles round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Csv {
        Csv {
            buf: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.buf)
            .with_context(|| format!("cannot write report `{}`", path.display()))
    }
}

/// `name=value` blobs kept comma-free so they fit in one CSV field.
pub fn point_blob(prefix: &str, values: &[f64]) -> String {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{prefix}{}={}", i + 1, fmt_f64(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

/// `x1,x2,value` rows of a grid function, for external plotting.
pub fn grid_csv(f: &geoequiv_core::quantum::GridFunction) -> Csv {
    let mut csv = Csv::new("x1,x2,value");
    let spec = &f.spec;
    for i in 0..spec.resolution[0] {
        for j in 0..spec.resolution[1] {
            csv.row(&[
                fmt_f64(spec.node_coord(0, i)),
                fmt_f64(spec.node_coord(1, j)),
                fmt_f64(f.values[i * spec.resolution[1] + j]),
            ]);
        }
    }
    csv
}
