//! CSV and JSON output.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// C-style `%.12e`: two-digit minimum exponent with explicit sign.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// A header row plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| sci(x)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.to_csv())
    }

    /// Parse CSV produced by [`Table::to_csv`].
    pub fn parse(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CliError::Usage("empty CSV".into()))?
            .split(',')
            .map(str::to_owned)
            .collect();
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| c.parse::<f64>().map_err(|_| CliError::Usage(format!("bad CSV cell {c:?}"))))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok((header, rows))
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Structured record of one command run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub inputs: serde_json::Value,
    pub outputs: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Only recorded on request, so that reports stay byte-reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Plotting script written next to a sweep CSV.
pub fn plot_script(csv_name: &str, x_column: &str, family_column: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Plot p and F from {csv_name}. Generated by `fredkin sweep`."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "{csv_name}")
families = defaultdict(list)
with open(path) as fh:
    for row in csv.DictReader(fh):
        families[float(row["{family_column}"])].append(
            (float(row["{x_column}"]), float(row["p"]), float(row["F"]))
        )

fig, (ax_p, ax_f) = plt.subplots(2, 1, sharex=True, figsize=(5, 6))
for key in sorted(families):
    pts = sorted(families[key])
    xs = [x for x, _, _ in pts]
    ax_p.plot(xs, [p for _, p, _ in pts], label="{family_column} = %g" % key)
    ax_f.plot(xs, [f for _, _, f in pts], label="{family_column} = %g" % key)
ax_p.set_ylabel("loss p")
ax_f.set_ylabel("fidelity F")
ax_f.set_xlabel("{x_column}")
ax_p.legend()
fig.tight_layout()
out = os.path.splitext(path)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
"#
    )
}
