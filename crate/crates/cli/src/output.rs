//! Artifact writers. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use spincharge::dynamics::DiagnosticsSeries;
use spincharge::{FieldState, SpectralGrid};

use crate::error::{CliError, CliResult};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn series_header(series: &DiagnosticsSeries) -> String {
    let mut cols: Vec<String> = [
        "t",
        "omega_x",
        "omega_y",
        "omega_z",
        "omega_dot_norm",
        "H",
        "pi_norm",
        "omega_tilde_x",
        "omega_tilde_y",
        "omega_tilde_z",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(series.radii.iter().map(|r| format!("dist_R_{r}")));
    cols.join(",")
}

pub fn series_csv(series: &DiagnosticsSeries) -> String {
    let mut out = series_header(series);
    out.push('\n');
    for s in &series.samples {
        let row: Vec<String> = [s.t]
            .iter()
            .chain(&s.omega)
            .chain([s.omega_dot_norm, s.h, s.pi_norm].iter())
            .chain(&s.omega_tilde)
            .chain(&s.dist)
            .map(|v| num(*v))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_series_csv(path: &Path, series: &DiagnosticsSeries) -> CliResult<()> {
    fs::write(path, series_csv(series)).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

/// Field values on the z = 0 grid plane.
pub fn write_slice(path: &Path, field: &FieldState, grid: &SpectralGrid) -> CliResult<()> {
    let comps = field.to_real(grid);
    let n = grid.n();
    let mz = n / 2;
    let mut out = String::from("x,y,A_x,A_y,A_z,Pi_x,Pi_y,Pi_z\n");
    for mx in 0..n {
        for my in 0..n {
            let p = grid.point(mx, my, mz);
            let idx = grid.real_index(mx, my, mz);
            let row: Vec<String> = [p[0], p[1]].into_iter().chain(comps.iter().map(|c| c[idx])).map(num).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
    }
    fs::write(path, out).map_err(io_err(path))
}
