//! `nsl` — configuration-driven experiment runner for the neural
//! semi-Lagrangian solver and its classical grid baseline.
//!
//! Subcommands: `run`, `converge`, `compare-sl`, `vlasov-ref`. Configuration
//! comes from a TOML file (`--config`) with flag overrides; every run writes
//! a manifest that reproduces it. Exit codes: 0 success, 1 runtime failure
//! (with a JSON error record on stderr), 2 configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, FlagOverrides, RunConfig};

#[derive(Parser)]
#[command(name = "nsl", version, about = "Neural semi-Lagrangian solver for parametric advection-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonFlags {
    /// Scenario name (constant_1d, constant_1d_param, rotating_2d,
    /// vlasov_1d1v, cylinder_3d, levelset_2d, levelset_3d, ad_periodic,
    /// ad_gaussian)
    #[arg(long)]
    scenario: Option<String>,
    /// TOML config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Space dimension (scenarios with a free dimension)
    #[arg(long)]
    dim: Option<usize>,
    /// Number of time steps
    #[arg(long)]
    nt: Option<usize>,
    /// Grid points per axis for the classical solver
    #[arg(long)]
    nx: Option<usize>,
    /// RNG seed (required, for reproducibility)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); results are identical for any count
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: $NSL_OUT_DIR or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write errors.csv, diagnostics.csv, checkpoints,
    /// and a manifest
    Run {
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Run a scenario across several step counts and fit the error slope
    Converge {
        #[command(flatten)]
        common: CommonFlags,
        /// Comma-separated list of step counts, e.g. 4,16,64
        #[arg(long = "nt-list", value_delimiter = ',')]
        nt_list: Vec<usize>,
    },
    /// Run the classical and neural solvers side by side across dimensions
    CompareSl {
        #[command(flatten)]
        common: CommonFlags,
        /// Comma-separated dimensions, e.g. 1,2
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        /// Grid resolution per dimension (same length as --dims)
        #[arg(long = "nx-list", value_delimiter = ',')]
        nx_list: Vec<usize>,
    },
    /// Compute the grid reference for the fixed-field Vlasov problem
    VlasovRef {
        #[command(flatten)]
        common: CommonFlags,
        /// Space resolution
        #[arg(long, default_value_t = 256)]
        nx_space: usize,
        /// Velocity resolution
        #[arg(long, default_value_t = 512)]
        nv: usize,
        /// Final time
        #[arg(long, default_value_t = 1.5)]
        tfinal: f64,
        /// Comma-separated snapshot times
        #[arg(long, value_delimiter = ',', default_value = "1.5")]
        times: Vec<f64>,
    },
}

fn resolve(common: &CommonFlags) -> Result<RunConfig, config::ConfigError> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = FlagOverrides {
        scenario: common.scenario.clone(),
        dim: common.dim,
        n_t: common.nt,
        n_x: common.nx,
        seed: common.seed,
        threads: common.threads,
        out: common.out.clone(),
    };
    RunConfig::resolve(file, &flags)
}

fn config_fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn runtime_fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run { common } => common,
        Command::Converge { common, .. } => common,
        Command::CompareSl { common, .. } => common,
        Command::VlasovRef { common, .. } => common,
    };
    let run_config = match resolve(common) {
        Ok(c) => c,
        Err(e) => return config_fail(e),
    };
    nsl_core::parallel::set_global_threads(run_config.threads);

    match &cli.command {
        Command::Run { .. } => match commands::cmd_run(&run_config) {
            Ok(()) => {
                println!("{}", commands::summary_line(&run_config));
                ExitCode::SUCCESS
            }
            Err(e) => runtime_fail(e),
        },
        Command::Converge { nt_list, .. } => {
            if nt_list.len() < 3 {
                return config_fail("converge needs at least 3 values in --nt-list");
            }
            let mut sorted = nt_list.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != nt_list.len() {
                return config_fail("duplicate values in --nt-list");
            }
            match commands::cmd_converge(&run_config, nt_list) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => runtime_fail(e),
            }
        }
        Command::CompareSl { dims, nx_list, .. } => {
            if dims.is_empty() || dims.len() != nx_list.len() {
                return config_fail("--dims and --nx-list must be non-empty and equally long");
            }
            match commands::cmd_compare_sl(&run_config, dims, nx_list) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => runtime_fail(e),
            }
        }
        Command::VlasovRef { nx_space, nv, tfinal, times, .. } => {
            if times.is_empty() {
                return config_fail("--times must name at least one snapshot time");
            }
            let n_t = ((tfinal * 200.0).round() as usize).max(1);
            match commands::cmd_vlasov_ref(&run_config, *nx_space, *nv, n_t, *tfinal, times) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => runtime_fail(e),
            }
        }
    }
}
