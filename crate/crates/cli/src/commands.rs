//! Subcommand implementations and the CSV report writers.
//!
//! Every CSV is schema-stable: fixed column order, one header row,
//! dot-decimal numbers, newline-terminated rows.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nsl_core::classical;
use nsl_core::driver::{self, NslConfig, NslTrajectory};
use nsl_core::metrics::{self, ErrorReport};
use nsl_core::scenarios::Scenario;

use crate::config::{write_manifest, RunConfig, SolverKind};

#[derive(Debug)]
pub struct RuntimeError(pub String);

impl std::fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for RuntimeError {}

fn rt<E: std::fmt::Display>(e: E) -> RuntimeError {
    RuntimeError(e.to_string())
}

struct Csv {
    out: std::io::BufWriter<std::fs::File>,
}

impl Csv {
    fn create(path: &Path, header: &str) -> Result<Self, RuntimeError> {
        let file = std::fs::File::create(path).map_err(rt)?;
        let mut out = std::io::BufWriter::new(file);
        writeln!(out, "{header}").map_err(rt)?;
        Ok(Self { out })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), RuntimeError> {
        writeln!(self.out, "{}", fields.join(",")).map_err(rt)
    }

    fn comment(&mut self, text: &str) -> Result<(), RuntimeError> {
        writeln!(self.out, "# {text}").map_err(rt)
    }
}

/// Rough upper bound on the solver's dominant allocations, in bytes.
fn nsl_mem_hint(cfg: &NslConfig) -> usize {
    let n = cfg.network.dof_count();
    let k = cfg.iter.n_collocation.max(cfg.init.n_collocation);
    8 * (k * (n + cfg.network.input_dim + 2) + 2 * n * n)
}

fn classical_mem_hint(n_x: usize, d: usize) -> usize {
    8 * n_x.pow(d as u32) * (2 * d + 2)
}

fn wall(config: &RunConfig, ms: f64) -> f64 {
    if config.deterministic_timing {
        0.0
    } else {
        ms
    }
}

fn error_row(
    config: &RunConfig,
    scenario: &Scenario,
    n_t: usize,
    n_x: Option<usize>,
    time: f64,
    report: &ErrorReport,
    wall_ms: f64,
    mem_hint: usize,
) -> Vec<String> {
    vec![
        scenario.name.clone(),
        scenario.dim().to_string(),
        n_t.to_string(),
        n_x.map(|n| n.to_string()).unwrap_or_default(),
        format!("{time:e}"),
        format!("{:e}", report.e_l2),
        format!("{:e}", report.e_linf),
        format!("{:.0}", wall(config, wall_ms)),
        mem_hint.to_string(),
    ]
}

const ERRORS_HEADER: &str = "scenario,d,n_t,n_x,time,e_l2,e_linf,wall_ms,peak_mem_hint";

/// `run`: executes one solve and writes errors.csv, diagnostics.csv,
/// checkpoints, and the manifest.
pub fn cmd_run(config: &RunConfig) -> Result<(), RuntimeError> {
    let (scenario, cfg) = config.build().map_err(rt)?;
    std::fs::create_dir_all(&config.out_dir).map_err(rt)?;
    write_manifest(
        &config.out_dir.join("manifest.toml"),
        &config.manifest("run", &scenario, &cfg),
    )
    .map_err(rt)?;

    let start = Instant::now();
    match config.solver {
        SolverKind::Classical => {
            let (_field, report) = classical::sl_run(&scenario, config.n_x, cfg.n_t, config.mem_cap).map_err(rt)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let mut errors = Csv::create(&config.out_dir.join("errors.csv"), ERRORS_HEADER)?;
            errors.row(&error_row(
                config,
                &scenario,
                cfg.n_t,
                Some(config.n_x),
                cfg.t_final,
                &report,
                ms,
                classical_mem_hint(config.n_x, scenario.dim()),
            ))?;
        }
        SolverKind::Nsl => {
            let trajectory = driver::run(&scenario, &cfg, config.seed).map_err(rt)?;
            write_nsl_reports(config, &scenario, &cfg, &trajectory)?;
        }
    }
    Ok(())
}

fn write_nsl_reports(
    config: &RunConfig,
    scenario: &Scenario,
    cfg: &NslConfig,
    trajectory: &NslTrajectory,
) -> Result<(), RuntimeError> {
    let mut diagnostics = Csv::create(&config.out_dir.join("diagnostics.csv"), "step,epoch,loss,wall_ms")?;
    for (step, entry) in trajectory.entries.iter().enumerate() {
        diagnostics.row(&[
            step.to_string(),
            entry.diagnostics.epochs.to_string(),
            format!("{:e}", entry.diagnostics.final_loss),
            format!("{:.0}", wall(config, entry.diagnostics.wall_ms)),
        ])?;
    }

    let mut errors = Csv::create(&config.out_dir.join("errors.csv"), ERRORS_HEADER)?;
    if scenario.exact.is_some() {
        let mem = nsl_mem_hint(cfg);
        let mut cumulative_ms = 0.0;
        for entry in &trajectory.entries {
            cumulative_ms += entry.diagnostics.wall_ms;
            let is_last = entry.time == trajectory.entries.last().unwrap().time;
            if config.eval_each_step || is_last {
                let report = driver::nsl_error(scenario, cfg, &entry.params, entry.time, config.error_probes, config.seed)
                    .map_err(rt)?;
                errors.row(&error_row(config, scenario, cfg.n_t, None, entry.time, &report, cumulative_ms, mem))?;
            }
        }
    }
    Ok(())
}

/// `converge`: runs the scenario for each requested step count and reports
/// the fitted error slope.
pub fn cmd_converge(config: &RunConfig, n_t_list: &[usize]) -> Result<(), RuntimeError> {
    let (scenario, base_cfg) = config.build().map_err(rt)?;
    std::fs::create_dir_all(&config.out_dir).map_err(rt)?;
    write_manifest(
        &config.out_dir.join("manifest.toml"),
        &config.manifest("converge", &scenario, &base_cfg),
    )
    .map_err(rt)?;

    let mut csv = Csv::create(&config.out_dir.join("converge.csv"), "n_t,e_l2,e_linf,wall_ms")?;
    let mut pairs = Vec::new();
    for &n_t in n_t_list {
        let mut cfg = base_cfg.clone();
        cfg.n_t = n_t;
        cfg.checkpoint_dir = None;
        let start = Instant::now();
        let report = match config.solver {
            SolverKind::Classical => classical::sl_run(&scenario, config.n_x, n_t, config.mem_cap).map_err(rt)?.1,
            SolverKind::Nsl => {
                let trajectory = driver::run(&scenario, &cfg, config.seed).map_err(rt)?;
                driver::nsl_error(
                    &scenario,
                    &cfg,
                    trajectory.final_params().expect("trajectory has entries"),
                    cfg.t_final,
                    config.error_probes,
                    config.seed,
                )
                .map_err(rt)?
            }
        };
        let ms = start.elapsed().as_secs_f64() * 1e3;
        csv.row(&[
            n_t.to_string(),
            format!("{:e}", report.e_l2),
            format!("{:e}", report.e_linf),
            format!("{:.0}", wall(config, ms)),
        ])?;
        pairs.push((n_t as f64, report.e_l2));
    }
    let slope = metrics::convergence_slope(&pairs).map_err(rt)?;
    csv.comment(&format!("slope_l2 = {slope:e}"))?;
    println!("converge: slope_l2 = {slope:.4}");
    Ok(())
}

/// `compare-sl`: runs the classical and neural solvers on the same scenario
/// and seed for each dimension, one row per (dimension, solver).
pub fn cmd_compare_sl(config: &RunConfig, dims: &[usize], n_x_list: &[usize]) -> Result<(), RuntimeError> {
    std::fs::create_dir_all(&config.out_dir).map_err(rt)?;
    let mut csv = Csv::create(
        &config.out_dir.join("compare.csv"),
        "scenario,seed,d,solver,resolution,e_l2,e_linf,wall_ms,status",
    )?;
    let mut manifest_written = false;
    for (&d, &n_x) in dims.iter().zip(n_x_list) {
        let mut per_dim = config.clone();
        per_dim.dim = d;
        per_dim.n_x = n_x;
        let built = per_dim.build();
        let (scenario, cfg) = match built {
            Ok(x) => x,
            Err(e) => {
                for solver in ["classical", "nsl"] {
                    csv.row(&[
                        config.scenario_name.clone(),
                        config.seed.to_string(),
                        d.to_string(),
                        solver.into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("error: {e}"),
                    ])?;
                }
                continue;
            }
        };
        if !manifest_written {
            write_manifest(
                &config.out_dir.join("manifest.toml"),
                &config.manifest("compare-sl", &scenario, &cfg),
            )
            .map_err(rt)?;
            manifest_written = true;
        }

        let start = Instant::now();
        match classical::sl_run(&scenario, n_x, cfg.n_t, config.mem_cap) {
            Ok((_field, report)) => {
                let ms = start.elapsed().as_secs_f64() * 1e3;
                csv.row(&[
                    scenario.name.clone(),
                    config.seed.to_string(),
                    d.to_string(),
                    "classical".into(),
                    n_x.to_string(),
                    format!("{:e}", report.e_l2),
                    format!("{:e}", report.e_linf),
                    format!("{:.0}", wall(config, ms)),
                    "ok".into(),
                ])?;
            }
            Err(e) => {
                csv.row(&[
                    scenario.name.clone(),
                    config.seed.to_string(),
                    d.to_string(),
                    "classical".into(),
                    n_x.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("error: {e}"),
                ])?;
            }
        }

        let mut nsl_cfg = cfg.clone();
        nsl_cfg.checkpoint_dir = None;
        let start = Instant::now();
        let outcome = driver::run(&scenario, &nsl_cfg, config.seed).map_err(rt).and_then(|traj| {
            driver::nsl_error(
                &scenario,
                &nsl_cfg,
                traj.final_params().expect("trajectory has entries"),
                nsl_cfg.t_final,
                config.error_probes,
                config.seed,
            )
            .map_err(rt)
        });
        match outcome {
            Ok(report) => {
                let ms = start.elapsed().as_secs_f64() * 1e3;
                csv.row(&[
                    scenario.name.clone(),
                    config.seed.to_string(),
                    d.to_string(),
                    "nsl".into(),
                    nsl_cfg.network.dof_count().to_string(),
                    format!("{:e}", report.e_l2),
                    format!("{:e}", report.e_linf),
                    format!("{:.0}", wall(config, ms)),
                    "ok".into(),
                ])?;
            }
            Err(e) => {
                csv.row(&[
                    scenario.name.clone(),
                    config.seed.to_string(),
                    d.to_string(),
                    "nsl".into(),
                    nsl_cfg.network.dof_count().to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("error: {e}"),
                ])?;
            }
        }
    }
    Ok(())
}

/// `vlasov-ref`: computes the grid reference for the fixed-field Vlasov
/// problem and dumps one grid file per requested time.
pub fn cmd_vlasov_ref(
    config: &RunConfig,
    n_x: usize,
    n_v: usize,
    n_t: usize,
    t_final: f64,
    times: &[f64],
) -> Result<(), RuntimeError> {
    std::fs::create_dir_all(&config.out_dir).map_err(rt)?;
    let start = Instant::now();
    let snapshots = nsl_core::scenarios::vlasov_reference(n_x, n_v, t_final, n_t, times).map_err(rt)?;
    let mut csv = Csv::create(&config.out_dir.join("vlasov_ref.csv"), "time,path,mass,wall_ms")?;
    for (t, field) in &snapshots {
        let path = config.out_dir.join(format!("vlasov_t{t:.4}.grid"));
        classical::dump_grid(&path, field).map_err(rt)?;
        let cell: f64 = field.grid.spacing(0) * field.grid.spacing(1);
        let mass: f64 = field.values.iter().sum::<f64>() * cell;
        csv.row(&[
            format!("{t:e}"),
            path.display().to_string(),
            format!("{mass:e}"),
            format!("{:.0}", wall(config, start.elapsed().as_secs_f64() * 1e3)),
        ])?;
    }
    println!("vlasov-ref: wrote {} snapshots", snapshots.len());
    Ok(())
}

/// Shared post-run summary line for `run`.
pub fn summary_line(config: &RunConfig) -> String {
    format!(
        "run: scenario {} seed {} -> {}",
        config.scenario_name,
        config.seed,
        config.out_dir.display()
    )
}
