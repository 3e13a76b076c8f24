//! Time-stepping engine for the neural semi-Lagrangian scheme.
//!
//! A run fits `θ⁰` to the initial condition, then advances `n_t` steps. Each
//! step fits `u_{θ^{n+1}}` to the previous network evaluated at the wrapped
//! characteristic feet (averaged over the 2d diffusion directions when
//! `σ > 0`), warm-starting the optimizer at `θⁿ`. Steps are strictly
//! sequential; everything inside a step (feet, Jacobians, Gram products) is
//! data-parallel.

use std::path::PathBuf;

use crate::characteristics::{self, DiffusionStencil, FlowConfig};
use crate::fit::{self, BoundaryCondition, FitConfig, FitError, StepDiagnostics};
use crate::network::{self, NetworkSpec, ParamVector};
use crate::numerics::{DenseMatrix, RngStream};
use crate::sampling::{self, AdaptiveConfig, SampleBatch};
use crate::scenarios::{FocusKind, Scenario};

/// Stream index for drawing the initial parameters.
pub const STREAM_PARAM_INIT: u64 = 0;
/// Stream index for the initial-condition fit.
pub const STREAM_INIT_FIT: u64 = 1;
/// Stream index of time step `n` is `STREAM_STEP_BASE + n`.
pub const STREAM_STEP_BASE: u64 = 2;
/// Stream index for error probes, disjoint from every training stream.
pub const STREAM_METRICS: u64 = 1 << 32;

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error("fit failed at step {step}: {source}")]
    Fit {
        step: usize,
        partial: Box<NslTrajectory>,
        source: FitError,
    },
    #[error("checkpoint i/o: {0}")]
    Checkpoint(#[from] crate::network::NetworkError),
}

/// Full solver configuration for one run.
#[derive(Debug, Clone)]
pub struct NslConfig {
    pub t_final: f64,
    pub n_t: usize,
    pub network: NetworkSpec,
    pub init: FitConfig,
    pub iter: FitConfig,
    pub flow: FlowConfig,
    pub sigma: f64,
    pub boundary: BoundaryCondition,
    /// Adaptive collocation for the time steps; `None` keeps uniform sampling.
    pub adaptive: Option<AdaptiveConfig>,
    pub checkpoint_dir: Option<PathBuf>,
}

impl NslConfig {
    fn validate(&self, scenario: &Scenario) -> Result<(), DriverError> {
        if !(self.t_final > 0.0) {
            return Err(DriverError::Config(format!("t_final {} must be positive", self.t_final)));
        }
        if self.sigma < 0.0 {
            return Err(DriverError::Config(format!("sigma {} must be nonnegative", self.sigma)));
        }
        let want = scenario.domain.dim() + scenario.pspace.dim();
        if self.network.input_dim != want {
            return Err(DriverError::Config(format!(
                "network input_dim {} but scenario needs {} (space {} + params {})",
                self.network.input_dim,
                want,
                scenario.domain.dim(),
                scenario.pspace.dim()
            )));
        }
        Ok(())
    }
}

/// One entry per computed time level.
#[derive(Debug, Clone)]
pub struct TrajectoryEntry {
    pub time: f64,
    pub params: ParamVector,
    pub diagnostics: StepDiagnostics,
}

/// The sequence of fitted networks `(t^n, θ^n)` with per-step diagnostics.
#[derive(Debug, Clone, Default)]
pub struct NslTrajectory {
    pub entries: Vec<TrajectoryEntry>,
}

impl NslTrajectory {
    pub fn final_params(&self) -> Option<&ParamVector> {
        self.entries.last().map(|e| &e.params)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Monte-Carlo relative errors of a fitted network against the scenario's
/// exact solution at time `t`. Probes are drawn from the dedicated metrics
/// stream, never from a training stream.
pub fn nsl_error(
    scenario: &Scenario,
    cfg: &NslConfig,
    params: &ParamVector,
    t: f64,
    n_probe: usize,
    seed: u64,
) -> Result<crate::metrics::ErrorReport, FitError> {
    let exact = scenario
        .exact
        .as_ref()
        .ok_or_else(|| FitError::Target(format!("scenario '{}' has no exact solution", scenario.name)))?;
    let mut rng = RngStream::new(seed, STREAM_METRICS);
    let probes = sampling::uniform_sample(&scenario.domain, &scenario.pspace, n_probe, &mut rng)?;
    let inputs = probes.input_matrix();
    let approx = fit::eval_model(&cfg.network, params, &inputs, &cfg.boundary)?;
    let exact_vals: Vec<f64> = (0..probes.len())
        .map(|i| exact(t, probes.points.row(i), probes.params.row(i)))
        .collect();
    let kind = crate::metrics::ProbeKind::MonteCarlo;
    match scenario.error_metric {
        crate::metrics::ErrorMetric::PointwiseRelative => {
            crate::metrics::relative_error_values(&approx, &exact_vals, kind)
        }
        crate::metrics::ErrorMetric::NormRelative => {
            crate::metrics::norm_relative_error(&approx, &exact_vals, kind)
        }
    }
    .map_err(|e| FitError::Target(e.to_string()))
}

/// Boundary-consistent model evaluator on raw input rows (`x` then `μ`).
pub fn model_evaluator<'a>(
    spec: &'a NetworkSpec,
    theta: &'a ParamVector,
    bc: &'a BoundaryCondition,
) -> impl Fn(&DenseMatrix) -> Result<Vec<f64>, FitError> + Sync + 'a {
    move |inputs| fit::eval_model(spec, theta, inputs, bc)
}

fn concat_inputs(points: &DenseMatrix, params: &DenseMatrix) -> DenseMatrix {
    let k = points.rows();
    let d = points.cols();
    let p = params.cols();
    let mut out = DenseMatrix::zeros(k, d + p);
    for i in 0..k {
        let row = out.row_mut(i);
        row[..d].copy_from_slice(points.row(i));
        if p > 0 {
            row[d..].copy_from_slice(params.row(i));
        }
    }
    out
}

/// Fitting target of one time step: the previous model at the wrapped
/// characteristic feet, averaged over the `2d` diffusion offsets when
/// `σ > 0`. `prev` evaluates the previous time level on `(x, μ)` rows.
pub fn advected_target(
    scenario: &Scenario,
    cfg: &NslConfig,
    t_n: f64,
    dt: f64,
    prev: &(dyn Fn(&DenseMatrix) -> Result<Vec<f64>, FitError> + Sync),
    batch: &SampleBatch,
) -> Result<Vec<f64>, FitError> {
    let d = scenario.domain.dim();
    let mut feet = characteristics::foot_batch(&scenario.field, t_n, t_n + dt, &batch.points, &batch.params, &cfg.flow)
        .map_err(|e| FitError::Target(e.to_string()))?;
    if scenario.domain.has_periodic_axis() {
        for i in 0..feet.rows() {
            scenario.domain.wrap_in_place(feet.row_mut(i));
        }
    }
    if cfg.sigma == 0.0 {
        return prev(&concat_inputs(&feet, &batch.params));
    }
    let stencil = DiffusionStencil::new(d, cfg.sigma, dt);
    let k = batch.len();
    let mut acc = vec![0.0; k];
    let mut offset_feet = DenseMatrix::zeros(k, d);
    for i in 0..stencil.len() {
        let (axis, off) = stencil.direction(i);
        for r in 0..k {
            let dst = offset_feet.row_mut(r);
            dst.copy_from_slice(feet.row(r));
            dst[axis] += off;
        }
        if scenario.domain.has_periodic_axis() {
            for r in 0..k {
                scenario.domain.wrap_in_place(offset_feet.row_mut(r));
            }
        }
        let vals = prev(&concat_inputs(&offset_feet, &batch.params))?;
        for (a, v) in acc.iter_mut().zip(&vals) {
            *a += v;
        }
    }
    let scale = 1.0 / stencil.len() as f64;
    acc.iter_mut().for_each(|v| *v *= scale);
    Ok(acc)
}

/// Collocation source for one solve: adaptive when requested and a focus
/// parameter vector is available, uniform otherwise.
fn make_sampler<'a>(
    scenario: &'a Scenario,
    n: usize,
    adaptive: Option<(&'a AdaptiveConfig, &'a NetworkSpec, &'a ParamVector)>,
) -> impl FnMut(&mut RngStream) -> Result<SampleBatch, FitError> + 'a {
    let focus: Option<(AdaptiveConfig, Box<dyn Fn(&SampleBatch) -> Vec<f64> + Send + Sync>)> =
        adaptive.map(|(cfg, spec, theta)| {
            let f: Box<dyn Fn(&SampleBatch) -> Vec<f64> + Send + Sync> = match scenario.focus {
                FocusKind::Gradient => Box::new(sampling::gradient_focus(spec, theta)),
                FocusKind::Value => Box::new(sampling::value_focus(spec, theta)),
            };
            (*cfg, f)
        });
    move |rng: &mut RngStream| {
        let batch = match &focus {
            Some((cfg, f)) => sampling::adaptive_sample(&scenario.domain, &scenario.pspace, n, f, cfg, rng)?,
            None => sampling::uniform_sample(&scenario.domain, &scenario.pspace, n, rng)?,
        };
        Ok(batch)
    }
}

/// Fits `θ⁰` to the initial condition over `Ω × 𝕄`.
pub fn init_fit(scenario: &Scenario, cfg: &NslConfig, rng: &mut RngStream) -> Result<(ParamVector, StepDiagnostics), FitError> {
    let theta_start = network::init_params(&cfg.network, &mut rng.derive(STREAM_PARAM_INIT));
    let u0 = scenario.u0.clone();
    let target = move |batch: &SampleBatch| -> Result<Vec<f64>, FitError> {
        Ok((0..batch.len()).map(|i| u0(batch.points.row(i), batch.params.row(i))).collect())
    };
    let mut sampler = make_sampler(scenario, cfg.init.n_collocation, None);
    fit::fit_least_squares(&cfg.network, &theta_start, &target, &mut sampler, &cfg.init, &cfg.boundary, rng)
}

/// Advances one time step from `θⁿ` at `t_n` to `θ^{n+1}` at `t_n + dt`.
pub fn nsl_step(
    scenario: &Scenario,
    cfg: &NslConfig,
    theta_n: &ParamVector,
    t_n: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<(ParamVector, StepDiagnostics), FitError> {
    let prev = model_evaluator(&cfg.network, theta_n, &cfg.boundary);
    let target = |batch: &SampleBatch| advected_target(scenario, cfg, t_n, dt, &prev, batch);
    let mut sampler = make_sampler(
        scenario,
        cfg.iter.n_collocation,
        cfg.adaptive.as_ref().map(|a| (a, &cfg.network, theta_n)),
    );
    let (theta, mut diag) = fit::fit_least_squares(&cfg.network, theta_n, &target, &mut sampler, &cfg.iter, &cfg.boundary, rng)?;
    let base: f64 = crate::numerics::norm2(theta_n.as_slice()).max(1e-300);
    let delta: f64 = theta
        .as_slice()
        .iter()
        .zip(theta_n.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    diag.param_delta = delta / base;
    Ok((theta, diag))
}

fn checkpoint(cfg: &NslConfig, step: usize, theta: &ParamVector) -> Result<(), DriverError> {
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| DriverError::Config(format!("checkpoint dir: {e}")))?;
        let path = dir.join(format!("step_{step:04}.params"));
        network::save_params(&path, &cfg.network, theta)?;
    }
    Ok(())
}

/// Runs the full scheme: `θ⁰` from the initial-condition fit, then `n_t`
/// sequential steps with warm starts. Checkpoints are persisted per step when
/// a checkpoint directory is configured. On a fit failure the partial
/// trajectory is returned inside the error.
pub fn run(scenario: &Scenario, cfg: &NslConfig, seed: u64) -> Result<NslTrajectory, DriverError> {
    cfg.validate(scenario)?;
    let mut trajectory = NslTrajectory::default();

    let mut init_rng = RngStream::new(seed, STREAM_INIT_FIT);
    let (theta0, diag0) = match init_fit(scenario, cfg, &mut init_rng) {
        Ok(x) => x,
        Err(source) => {
            return Err(DriverError::Fit { step: 0, partial: Box::new(trajectory), source });
        }
    };
    checkpoint(cfg, 0, &theta0)?;
    trajectory.entries.push(TrajectoryEntry { time: 0.0, params: theta0, diagnostics: diag0 });

    if cfg.n_t == 0 {
        return Ok(trajectory);
    }
    let dt = cfg.t_final / cfg.n_t as f64;
    for step in 0..cfg.n_t {
        let t_n = step as f64 * dt;
        let theta_n = trajectory.entries.last().unwrap().params.clone();
        let mut rng = RngStream::new(seed, STREAM_STEP_BASE + step as u64);
        let (theta, diag) = match nsl_step(scenario, cfg, &theta_n, t_n, dt, &mut rng) {
            Ok(x) => x,
            Err(source) => {
                return Err(DriverError::Fit { step: step + 1, partial: Box::new(trajectory), source });
            }
        };
        checkpoint(cfg, step + 1, &theta)?;
        trajectory.entries.push(TrajectoryEntry {
            time: (step + 1) as f64 * dt,
            params: theta,
            diagnostics: diag,
        });
    }
    Ok(trajectory)
}
