//! Snapshot CSV files, the run manifest and the plotting stub.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use netwave_core::Samples;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: Option<String>,
    /// `explicit` or `oracle`.
    pub mode: String,
    pub labels: Vec<String>,
    pub c: Option<f64>,
    pub l: Option<Vec<usize>>,
    pub ell: Option<usize>,
    pub b_tilde_sha256: Option<String>,
    pub grid: Option<usize>,
    pub snapshots: Vec<Snapshot>,
}

/// SHA-256 of the row-major little-endian IEEE-754 entries of `m`.
pub fn matrix_sha256(m: &DMatrix<f64>) -> String {
    let mut h = Sha256::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            h.update(m[(i, j)].to_le_bytes());
        }
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn csv(samples: &Samples, labels: &[String]) -> String {
    let mut out = String::from("x");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (k, x) in samples.xs.iter().enumerate() {
        let _ = write!(out, "{x:.16e}");
        for comp in &samples.values {
            let _ = write!(out, ",{:.16e}", comp[k]);
        }
        out.push('\n');
    }
    out
}

pub fn snapshot_name(k: usize) -> String {
    format!("snapshot_{k:03}.csv")
}

const PLOT_STUB: &str = r#"#!/usr/bin/env python3
"""Plot the snapshots listed in manifest.json (requires matplotlib)."""
import csv
import json
import pathlib
import sys

import matplotlib.pyplot as plt

root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent)
manifest = json.loads((root / "manifest.json").read_text())
for snap in manifest["snapshots"]:
    with open(root / snap["file"]) as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]
    xs = [r[0] for r in data]
    fig, ax = plt.subplots()
    for j, label in enumerate(header[1:], start=1):
        ax.plot(xs, [r[j] for r in data], label=label)
    ax.set_title(f"t = {snap['t']}")
    ax.set_xlabel("x")
    ax.legend()
    fig.savefig(root / (snap["file"][:-4] + ".png"))
    plt.close(fig)
"#;

pub fn write_run(dir: &Path, manifest: &Manifest, snapshots: &[Samples]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (snap, samples) in manifest.snapshots.iter().zip(snapshots) {
        fs::write(dir.join(&snap.file), csv(samples, &manifest.labels))?;
    }
    let json = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    fs::write(dir.join("plot.py"), PLOT_STUB)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let s = Samples {
            xs: vec![0.0, 0.5],
            values: vec![vec![1.0, 0.1], vec![-2.0, 1.0 / 3.0]],
        };
        let text = csv(&s, &["u1+".into(), "u1-".into()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,u1+,u1-");
        assert_eq!(
            lines[2],
            "5.0000000000000000e-1,1.0000000000000001e-1,3.3333333333333331e-1"
        );
        let back: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn hash_is_stable() {
        let m = DMatrix::<f64>::identity(2, 2);
        assert_eq!(matrix_sha256(&m), matrix_sha256(&m.clone()));
        assert_ne!(matrix_sha256(&m), matrix_sha256(&(m * 2.0)));
        assert_eq!(matrix_sha256(&DMatrix::<f64>::zeros(1, 1)).len(), 64);
    }
}
