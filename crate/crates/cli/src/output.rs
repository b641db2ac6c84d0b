//! Results tables, plot series and nodal snapshots, and their files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use poro_core::stepper::State;
use poro_core::Mesh;
use serde::Serialize;

/// One line of `results.csv`. Missing quantities serialize as empty fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultRow {
    pub scheme: String,
    pub h: f64,
    pub tau: f64,
    pub alpha: f64,
    pub err_u_a: Option<f64>,
    #[serde(rename = "err_u_HV")]
    pub err_u_hv: Option<f64>,
    pub err_p_c: Option<f64>,
    #[serde(rename = "err_p_Q")]
    pub err_p_q: Option<f64>,
    #[serde(rename = "err_p_HQ")]
    pub err_p_hq: Option<f64>,
    pub err_triple: Option<f64>,
    pub order_u_a: Option<f64>,
    pub order_p_c: Option<f64>,
    pub picard_mean: Option<f64>,
    pub picard_max: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub blowup_flag: Option<bool>,
}

pub const COLUMNS: [&str; 16] = [
    "scheme",
    "h",
    "tau",
    "alpha",
    "err_u_a",
    "err_u_HV",
    "err_p_c",
    "err_p_Q",
    "err_p_HQ",
    "err_triple",
    "order_u_a",
    "order_p_c",
    "picard_mean",
    "picard_max",
    "wall_time_s",
    "blowup_flag",
];

/// A log-log plot: one x column and one y column per series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub file_name: String,
    pub x_label: String,
    pub xs: Vec<f64>,
    pub series: Vec<(String, Vec<Option<f64>>)>,
}

impl PlotData {
    /// Collects `(series, x, y)` points on the union of all x values,
    /// sorted in decreasing order.
    pub fn from_points(file_name: &str, x_label: &str, points: &[(String, f64, Option<f64>)]) -> Self {
        let mut xs: Vec<f64> = points.iter().map(|p| p.1).collect();
        xs.sort_by(|a, b| b.total_cmp(a));
        xs.dedup();
        let mut names: Vec<String> = Vec::new();
        for (name, _, _) in points {
            if !names.contains(name) {
                names.push(name.clone());
            }
        }
        let series = names
            .into_iter()
            .map(|name| {
                let ys = xs
                    .iter()
                    .map(|x| points.iter().find(|p| p.0 == name && p.1 == *x).and_then(|p| p.2))
                    .collect();
                (name, ys)
            })
            .collect();
        PlotData { file_name: file_name.into(), x_label: x_label.into(), xs, series }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub file_name: String,
    /// Rows of `(x, y, u1, u2, p)` over all mesh nodes.
    pub rows: Vec<[f64; 5]>,
}

impl Snapshot {
    pub fn new(file_name: String, mesh: &Mesh, state: &State) -> Self {
        let [u1, u2] = mesh.expand_vector(&state.u);
        let p = mesh.expand_scalar(&state.p);
        let rows = mesh.nodes().iter().enumerate().map(|(k, x)| [x[0], x[1], u1[k], u2[k], p[k]]).collect();
        Snapshot { file_name, rows }
    }
}

/// Everything a subcommand produces.
#[derive(Debug, Clone, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
    /// Human-readable summary lines (speed-up factors, reference info).
    pub summary: Vec<String>,
    pub plots: Vec<PlotData>,
    pub snapshots: Vec<Snapshot>,
    /// Runs that failed; a non-empty list maps to exit code 3 outside sweeps.
    pub failures: Vec<String>,
}

pub fn results_csv(rows: &[ResultRow]) -> csv::Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        writer.write_record(COLUMNS)?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn plot_csv(plot: &PlotData) -> csv::Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec![plot.x_label.clone()];
    header.extend(plot.series.iter().map(|s| s.0.clone()));
    writer.write_record(&header)?;
    for (i, x) in plot.xs.iter().enumerate() {
        let mut record = vec![x.to_string()];
        record.extend(plot.series.iter().map(|s| s.1[i].map(|v| v.to_string()).unwrap_or_default()));
        writer.write_record(&record)?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn io_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Writes `results.csv`, plot CSVs, snapshots and `summary.txt` (when there
/// are summary lines) into `dir`; returns the written paths.
pub fn write_all(table: &ResultsTable, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("results.csv");
    fs::write(&path, results_csv(&table.rows).map_err(io_error)?)?;
    written.push(path);
    for plot in &table.plots {
        let path = dir.join(&plot.file_name);
        fs::write(&path, plot_csv(plot).map_err(io_error)?)?;
        written.push(path);
    }
    for snapshot in &table.snapshots {
        let path = dir.join(&snapshot.file_name);
        let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
        writeln!(file, "x y u1 u2 p")?;
        for r in &snapshot.rows {
            writeln!(file, "{} {} {} {} {}", r[0], r[1], r[2], r[3], r[4])?;
        }
        file.flush()?;
        written.push(path);
    }
    if !table.summary.is_empty() {
        let path = dir.join("summary.txt");
        fs::write(&path, table.summary.join("\n") + "\n")?;
        written.push(path);
    }
    Ok(written)
}
