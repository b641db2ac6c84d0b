//! Drivers behind the four subcommands. They only combine library calls:
//! every number in a row comes from `poro_core` operations on the row's
//! parameters.

use std::sync::Arc;

use poro_core::analysis::{compare_states, error_vs_manufactured, error_vs_reference, ErrorReport, NormKind, Norms};
use poro_core::forcing::Experiment;
use poro_core::stepper::{run, Discretization, HistoryFn, Scheme, Trajectory};
use poro_core::Mesh;
use rayon::prelude::*;

use crate::config::{Command, ConfigError, ExperimentConfig, HistoryConfig, SchemeConfig};
use crate::output::{PlotData, ResultRow, ResultsTable, Snapshot};

/// Deviation above which a sweep point counts as blown up.
pub const BLOWUP_THRESHOLD: f64 = 10.0;

/// Delay history for the configured shape; `None` means `Phi = p0`.
pub fn history_for(scheme: &SchemeConfig, mesh: &Mesh, experiment: &Experiment, tau: f64) -> Option<HistoryFn> {
    match scheme {
        SchemeConfig::DelayImplicit { history: HistoryConfig::Oscillating { amplitude } } => {
            let p0 = mesh.interpolate_scalar(|x| (experiment.data.p0)(x));
            let bump = mesh.interpolate_scalar(|x| 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
            let amplitude = *amplitude;
            Some(Arc::new(move |t: f64| {
                let w = amplitude * (std::f64::consts::PI * t / tau).sin();
                p0.iter().zip(&bump).map(|(p, b)| p + w * b).collect()
            }))
        }
        _ => None,
    }
}

/// Runs one scheme on the `n x n` mesh.
pub fn simulate(
    experiment: &Experiment,
    scheme: &SchemeConfig,
    n: usize,
    tau: f64,
    linear_tol: f64,
) -> poro_core::Result<(Mesh, Trajectory)> {
    let mesh = Mesh::structured(n)?;
    let disc = Discretization::new(&mesh, &experiment.coefficients)?;
    let mut cfg = scheme.stepper(tau, experiment.final_time, linear_tol);
    cfg.history = history_for(scheme, &mesh, experiment, tau);
    let trajectory = run(&disc, &cfg, &experiment.data)?;
    Ok((mesh, trajectory))
}

/// What errors are measured against.
pub enum Truth {
    Exact,
    Reference { mesh: Mesh, trajectory: Trajectory, label: String },
}

impl Truth {
    pub fn build(config: &ExperimentConfig, experiment: &Experiment) -> Result<Self, String> {
        if experiment.data.exact.is_some() {
            return Ok(Truth::Exact);
        }
        let r = config.reference.as_ref().ok_or("no exact solution and no reference configured")?;
        let label = format!("{} n={} tau={}", r.scheme.label(), r.n_ref, r.tau_ref);
        let (mesh, trajectory) = simulate(experiment, &r.scheme, r.n_ref, r.tau_ref, config.linear_tol)
            .map_err(|e| format!("reference run ({label}) failed: {e}"))?;
        Ok(Truth::Reference { mesh, trajectory, label })
    }

    pub fn errors(
        &self,
        experiment: &Experiment,
        mesh: &Mesh,
        trajectory: &Trajectory,
        kinds: &[NormKind],
    ) -> poro_core::Result<ErrorReport> {
        match self {
            Truth::Exact => {
                let exact = experiment.data.exact.as_ref().expect("checked when the truth was built");
                let norms = Norms::new(mesh, &experiment.coefficients)?;
                error_vs_manufactured(&norms, trajectory, exact, trajectory.last().t, kinds)
            }
            Truth::Reference { mesh: ref_mesh, trajectory: reference, .. } => {
                let norms = Norms::new(ref_mesh, &experiment.coefficients)?;
                error_vs_reference(trajectory, reference, mesh, &norms, kinds)
            }
        }
    }
}

fn base_row(scheme: &SchemeConfig, experiment: &Experiment, n: usize, tau: f64) -> ResultRow {
    ResultRow {
        scheme: scheme.label(),
        h: 1.0 / n as f64,
        tau,
        alpha: experiment.coefficients.alpha,
        ..Default::default()
    }
}

fn fill_errors(row: &mut ResultRow, report: &ErrorReport) {
    row.err_u_a = report.relative(NormKind::A);
    row.err_u_hv = report.relative(NormKind::HV);
    row.err_p_c = report.relative(NormKind::C);
    row.err_p_q = report.relative(NormKind::Q);
    row.err_p_hq = report.relative(NormKind::HQ);
    row.err_triple = report.relative(NormKind::Triple);
    row.picard_mean = report.picard_mean;
    row.picard_max = report.picard_max;
    row.wall_time_s = Some(report.wall_time);
}

fn pool(config: &ExperimentConfig) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(1))
        .build()
        .expect("thread pool with a positive worker count")
}

struct JobResult {
    row: ResultRow,
    failure: Option<String>,
    snapshot: Option<Snapshot>,
}

fn measured_job(
    config: &ExperimentConfig,
    experiment: &Experiment,
    truth: &Truth,
    scheme: &SchemeConfig,
    n: usize,
    tau: f64,
    snapshot: bool,
) -> JobResult {
    let mut row = base_row(scheme, experiment, n, tau);
    let describe = |e: &dyn std::fmt::Display| format!("{} n={n} tau={tau}: {e}", scheme.label());
    let (mesh, trajectory) = match simulate(experiment, scheme, n, tau, config.linear_tol) {
        Ok(run) => run,
        Err(e) => return JobResult { row, failure: Some(describe(&e)), snapshot: None },
    };
    let snapshot = snapshot.then(|| {
        Snapshot::new(format!("snapshot_{}_n{n}_tau{tau}.txt", scheme.label()), &mesh, trajectory.last())
    });
    match truth.errors(experiment, &mesh, &trajectory, &config.norms) {
        Ok(report) => {
            fill_errors(&mut row, &report);
            JobResult { row, failure: None, snapshot }
        }
        Err(e) => {
            row.wall_time_s = Some(trajectory.report.wall_time);
            JobResult { row, failure: Some(describe(&e)), snapshot }
        }
    }
}

fn truth_or_failure(config: &ExperimentConfig, experiment: &Experiment, table: &mut ResultsTable) -> Option<Truth> {
    match Truth::build(config, experiment) {
        Ok(truth) => {
            if let Truth::Reference { label, .. } = &truth {
                table.summary.push(format!("reference: {label}"));
            }
            Some(truth)
        }
        Err(e) => {
            table.failures.push(e);
            None
        }
    }
}

/// Single (scheme, h, tau) run.
pub fn cmd_run(config: &ExperimentConfig) -> Result<ResultsTable, ConfigError> {
    config.validate(Command::Run)?;
    let experiment = config.experiment()?;
    let mut table = ResultsTable::default();
    let Some(truth) = truth_or_failure(config, &experiment, &mut table) else {
        return Ok(table);
    };
    let job = measured_job(
        config,
        &experiment,
        &truth,
        &config.schemes[0],
        config.mesh_levels[0],
        config.tau_levels[0],
        config.snapshots,
    );
    table.rows.push(job.row);
    table.failures.extend(job.failure);
    table.snapshots.extend(job.snapshot);
    Ok(table)
}

fn pair_order(coarse: Option<f64>, fine: Option<f64>) -> Option<f64> {
    match (coarse, fine) {
        (Some(a), Some(b)) => poro_core::analysis::convergence_order(&[a, b]).ok().map(|o| o[0]),
        _ => None,
    }
}

const PLOT_COLUMNS: [(NormKind, &str); 6] = [
    (NormKind::A, "err_u_a"),
    (NormKind::HV, "err_u_HV"),
    (NormKind::C, "err_p_c"),
    (NormKind::Q, "err_p_Q"),
    (NormKind::HQ, "err_p_HQ"),
    (NormKind::Triple, "err_triple"),
];

fn row_value(row: &ResultRow, kind: NormKind) -> Option<f64> {
    match kind {
        NormKind::A => row.err_u_a,
        NormKind::HV => row.err_u_hv,
        NormKind::C => row.err_p_c,
        NormKind::Q => row.err_p_q,
        NormKind::HQ => row.err_p_hq,
        NormKind::Triple => row.err_triple,
        NormKind::V => None,
    }
}

/// Rows for every (scheme, h, tau) level with observed orders between
/// adjacent levels of each series; with `coupled`, `tau = h` per level.
pub fn cmd_convergence(config: &ExperimentConfig) -> Result<ResultsTable, ConfigError> {
    config.validate(Command::Convergence)?;
    let experiment = config.experiment()?;
    let mut table = ResultsTable::default();
    let Some(truth) = truth_or_failure(config, &experiment, &mut table) else {
        return Ok(table);
    };

    // series key, scheme, n, tau
    let mut jobs: Vec<(String, SchemeConfig, usize, f64)> = Vec::new();
    for scheme in &config.schemes {
        if config.coupled {
            let mut levels = config.mesh_levels.clone();
            levels.sort_unstable();
            for n in levels {
                jobs.push((scheme.label(), *scheme, n, 1.0 / n as f64));
            }
        } else {
            for &n in &config.mesh_levels {
                let mut taus = config.tau_levels.clone();
                taus.sort_by(|a, b| b.total_cmp(a));
                let key = if config.mesh_levels.len() > 1 { format!("{}_n{n}", scheme.label()) } else { scheme.label() };
                for tau in taus {
                    jobs.push((key.clone(), *scheme, n, tau));
                }
            }
        }
    }

    let results: Vec<JobResult> = pool(config).install(|| {
        jobs.par_iter()
            .map(|(_, scheme, n, tau)| measured_job(config, &experiment, &truth, scheme, *n, *tau, config.snapshots))
            .collect()
    });

    let mut points = Vec::new();
    let mut previous: Option<(String, ResultRow)> = None;
    for ((key, ..), job) in jobs.iter().zip(results) {
        let mut row = job.row;
        if let Some((prev_key, prev)) = &previous {
            if prev_key == key {
                row.order_u_a = pair_order(prev.err_u_a, row.err_u_a);
                row.order_p_c = pair_order(prev.err_p_c, row.err_p_c);
            }
        }
        let x = if config.coupled { row.h } else { row.tau };
        for (kind, _) in PLOT_COLUMNS {
            points.push((kind, key.clone(), x, row_value(&row, kind)));
        }
        table.failures.extend(job.failure);
        table.snapshots.extend(job.snapshot);
        previous = Some((key.clone(), row.clone()));
        table.rows.push(row);
    }
    let x_label = if config.coupled { "h" } else { "tau" };
    for (kind, column) in PLOT_COLUMNS {
        if !config.norms.contains(&kind) {
            continue;
        }
        let series: Vec<(String, f64, Option<f64>)> =
            points.iter().filter(|p| p.0 == kind).map(|p| (p.1.clone(), p.2, p.3)).collect();
        table.plots.push(PlotData::from_points(&format!("convergence_{column}.csv"), x_label, &series));
    }
    Ok(table)
}

/// Outcome of one (alpha, tau) sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub tau: f64,
    /// Relative triple-norm deviation of the semi-explicit from the implicit
    /// final state; `None` when the semi-explicit run broke down.
    pub deviation: Option<f64>,
    pub blowup: bool,
}

/// Semi-explicit against implicit Picard for every (alpha, tau).
pub fn cmd_sweep_alpha(config: &ExperimentConfig) -> Result<ResultsTable, ConfigError> {
    config.validate(Command::SweepAlpha)?;
    let semi = *config.schemes.iter().find(|s| s.scheme() == Scheme::SemiExplicit).expect("validated");
    let implicit = *config.schemes.iter().find(|s| s.scheme() == Scheme::ImplicitPicard).expect("validated");
    let n = config.mesh_levels[0];
    let mut experiments = Vec::new();
    for &alpha in &config.alphas {
        experiments.push(config.experiment_with_alpha(Some(alpha))?);
    }
    let mut jobs = Vec::new();
    for (i, &alpha) in config.alphas.iter().enumerate() {
        for &tau in &config.tau_levels {
            jobs.push((i, alpha, tau));
        }
    }
    jobs.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.2.total_cmp(&a.2)));

    let results: Vec<(ResultRow, Option<String>)> = pool(config).install(|| {
        jobs.par_iter()
            .map(|&(i, alpha, tau)| {
                let experiment = &experiments[i];
                let mut row = base_row(&semi, experiment, n, tau);
                let reference = match simulate(experiment, &implicit, n, tau, config.linear_tol) {
                    Ok(r) => r,
                    Err(e) => {
                        let msg = format!("{} alpha={alpha} tau={tau}: {e}", implicit.label());
                        return (row, Some(msg));
                    }
                };
                let point = sweep_point(experiment, &reference, &semi, n, tau, config.linear_tol, &mut row);
                row.err_triple = point.deviation;
                row.blowup_flag = Some(point.blowup);
                (row, None)
            })
            .collect()
    });

    let mut table = ResultsTable::default();
    let mut points = Vec::new();
    for (row, failure) in results {
        points.push((format!("tau={}", row.tau), row.alpha, row.err_triple));
        table.rows.push(row);
        table.failures.extend(failure);
    }
    table.plots.push(PlotData::from_points("sweep_alpha.csv", "alpha", &points));
    let blown: Vec<String> =
        table.rows.iter().filter(|r| r.blowup_flag == Some(true)).map(|r| format!("({}, {})", r.alpha, r.tau)).collect();
    table.summary.push(format!("blow-up (deviation > {BLOWUP_THRESHOLD}) at (alpha, tau): {}", blown.join(" ")));
    Ok(table)
}

fn sweep_point(
    experiment: &Experiment,
    reference: &(Mesh, Trajectory),
    semi: &SchemeConfig,
    n: usize,
    tau: f64,
    linear_tol: f64,
    row: &mut ResultRow,
) -> SweepPoint {
    let alpha = experiment.coefficients.alpha;
    let broken = SweepPoint { alpha, tau, deviation: None, blowup: true };
    // overflow shows up as a failed solve or as non-finite values
    let Ok((mesh, trajectory)) = simulate(experiment, semi, n, tau, linear_tol) else {
        return broken;
    };
    row.wall_time_s = Some(trajectory.report.wall_time);
    let Ok(norms) = Norms::new(&mesh, &experiment.coefficients) else {
        return broken;
    };
    match compare_states(&norms, trajectory.last(), reference.1.last(), &[NormKind::Triple]) {
        Ok(report) => match report.triple.and_then(|e| e.relative) {
            Some(d) if d.is_finite() => SweepPoint { alpha, tau, deviation: Some(d), blowup: d > BLOWUP_THRESHOLD },
            _ => broken,
        },
        Err(_) => broken,
    }
}

/// Speed-up of the first semi-explicit row over every implicit row,
/// `wall(implicit) / wall(semi-explicit)`.
pub fn speedups(rows: &[ResultRow]) -> Vec<(String, f64)> {
    let Some(semi) = rows.iter().find(|r| r.scheme == "semi_explicit") else {
        return Vec::new();
    };
    let Some(base) = semi.wall_time_s else {
        return Vec::new();
    };
    rows.iter()
        .filter(|r| r.scheme.starts_with("implicit_picard"))
        .filter_map(|r| r.wall_time_s.map(|w| (format!("{} tau={}", r.scheme, r.tau), w / base)))
        .collect()
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Wall times (median over `repeats`) and errors for each (scheme, tau)
/// pair, executed sequentially so timings do not compete.
pub fn cmd_compare(config: &ExperimentConfig) -> Result<ResultsTable, ConfigError> {
    config.validate(Command::Compare)?;
    let experiment = config.experiment()?;
    let n = config.mesh_levels[0];
    let mut table = ResultsTable::default();
    let Some(truth) = truth_or_failure(config, &experiment, &mut table) else {
        return Ok(table);
    };
    for pair in &config.pairs {
        let mut row = base_row(&pair.scheme, &experiment, n, pair.tau);
        let mut times = Vec::with_capacity(config.repeats);
        let mut last = None;
        for _ in 0..config.repeats {
            match simulate(&experiment, &pair.scheme, n, pair.tau, config.linear_tol) {
                Ok(run) => {
                    times.push(run.1.report.wall_time);
                    last = Some(run);
                }
                Err(e) => {
                    table.failures.push(format!("{} n={n} tau={}: {e}", pair.scheme.label(), pair.tau));
                    last = None;
                    break;
                }
            }
        }
        if let Some((mesh, trajectory)) = last {
            match truth.errors(&experiment, &mesh, &trajectory, &config.norms) {
                Ok(report) => fill_errors(&mut row, &report),
                Err(e) => table.failures.push(format!("{} n={n} tau={}: {e}", pair.scheme.label(), pair.tau)),
            }
            row.wall_time_s = Some(median(times));
        }
        table.rows.push(row);
    }
    for (label, factor) in speedups(&table.rows) {
        table.summary.push(format!("speed-up of semi_explicit vs {label}: {factor:.3}"));
    }
    Ok(table)
}
