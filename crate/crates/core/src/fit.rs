//! Nonlinear least-squares trainer: MSE loss, Adam, natural-gradient
//! preconditioning, and boundary-condition handling.
//!
//! The inner problem at every time step is a plain nonlinear least squares
//! `min_θ (1/K) Σ |u_θ(x_k, μ_k) − y_k|²`. Two update rules are offered:
//!
//! * Adam on the MSE gradient `(2/K)·Jᵀr` — the unpreconditioned path;
//! * a damped Gauss-Newton step `η = (JᵀJ/K + λI)⁻¹ (1/K)Jᵀr`, i.e. the
//!   natural-gradient direction in the Gram metric of the parameter Jacobian,
//!   applied with unit step size. The scaling makes one undamped step on a
//!   linear-in-parameters model land exactly on the normal-equations
//!   minimizer. If a trial step would increase the loss on the current batch,
//!   the damping is increased and the step retried; a step that never improves
//!   is skipped, so the loss is non-increasing on a frozen batch.
//!
//! The Gram matrix is assembled from the same collocation batch as the loss
//! gradient, so each epoch costs one Jacobian evaluation.

use std::sync::Arc;

use crate::network::{self, NetworkSpec, ParamVector};
use crate::numerics::{self, DenseMatrix, RngStream};
use crate::parallel;
use crate::sampling::SampleBatch;

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error("length mismatch: {0}")]
    Shape(String),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("loss became non-finite after {} epochs (last finite loss {})", diagnostics.epochs, diagnostics.final_loss)]
    NonFiniteLoss { diagnostics: StepDiagnostics },
    #[error("target evaluation failed: {0}")]
    Target(String),
    #[error(transparent)]
    Sampling(#[from] crate::sampling::SamplingError),
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

/// Budget and options for one least-squares solve.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub n_epochs: usize,
    pub n_collocation: usize,
    pub learning_rate: f64,
    pub resample_each_epoch: bool,
    pub natural_gradient: bool,
    pub stop_loss: Option<f64>,
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.n_epochs == 0 || self.n_collocation == 0 {
            return Err(FitError::Shape("n_epochs and n_collocation must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(FitError::Shape(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

/// Adam moment estimates with the usual constants.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }
}

/// Mean squared error `(1/K)·Σ (pred_k − target_k)²`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64, FitError> {
    if pred.len() != target.len() {
        return Err(FitError::Shape(format!("mse_loss: {} predictions vs {} targets", pred.len(), target.len())));
    }
    if pred.is_empty() {
        return Err(FitError::Shape("mse_loss: empty input".into()));
    }
    let k = pred.len();
    Ok(parallel::sum_range(k, |i| {
        let d = pred[i] - target[i];
        d * d
    }) / k as f64)
}

/// One Adam update with bias correction: mutates `theta` and `state`.
pub fn adam_step(state: &mut AdamState, theta: &mut [f64], gradient: &[f64], learning_rate: f64) -> Result<(), FitError> {
    if theta.len() != gradient.len() || theta.len() != state.m.len() {
        return Err(FitError::Shape(format!(
            "adam_step: theta {}, gradient {}, state {}",
            theta.len(),
            gradient.len(),
            state.m.len()
        )));
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(FitError::NonFiniteGradient);
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - AdamState::BETA1.powi(t);
    let bc2 = 1.0 - AdamState::BETA2.powi(t);
    for i in 0..theta.len() {
        let g = gradient[i];
        state.m[i] = AdamState::BETA1 * state.m[i] + (1.0 - AdamState::BETA1) * g;
        state.v[i] = AdamState::BETA2 * state.v[i] + (1.0 - AdamState::BETA2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        theta[i] -= learning_rate * m_hat / (v_hat.sqrt() + AdamState::EPS);
    }
    Ok(())
}

/// Natural-gradient / damped Gauss-Newton direction: solves
/// `(JᵀJ/K + λ·I) η = g`. With `g = (1/K)Jᵀr` and unit step size this is the
/// Gauss-Newton update, exact for linear least squares as `λ → 0`.
pub fn natural_grad_direction(jacobian: &DenseMatrix, gradient: &[f64], damping: f64) -> Result<Vec<f64>, FitError> {
    if jacobian.cols() != gradient.len() {
        return Err(FitError::Shape(format!(
            "natural_grad_direction: Jacobian has {} columns, gradient {}",
            jacobian.cols(),
            gradient.len()
        )));
    }
    let gram = jacobian.gram_scaled(1.0 / jacobian.rows() as f64);
    Ok(numerics::spd_solve(&gram, gradient, damping)?)
}

/// Boundary handling for the fitted model.
#[derive(Clone)]
pub enum BoundaryCondition {
    /// Nothing special; the plain network is the model.
    None,
    /// Periodic boxes: feet are wrapped into the domain before evaluation,
    /// the model itself is the plain network.
    Periodic,
    /// Dirichlet data imposed exactly: the model is `Φ·u_θ + g`, with `Φ`
    /// vanishing on the boundary. Closures receive the full `(x, μ)` row.
    StrongLevelSet {
        phi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        g: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    },
    /// Dirichlet data imposed weakly: the loss gains
    /// `weight · MSE(u_θ(boundary) − g)` over `n_boundary` sampled rows.
    WeakPenalty {
        g: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        weight: f64,
        n_boundary: usize,
        sampler: Arc<dyn Fn(&mut RngStream, usize) -> DenseMatrix + Send + Sync>,
    },
}

impl std::fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryCondition::None => write!(f, "None"),
            BoundaryCondition::Periodic => write!(f, "Periodic"),
            BoundaryCondition::StrongLevelSet { .. } => write!(f, "StrongLevelSet"),
            BoundaryCondition::WeakPenalty { weight, n_boundary, .. } => {
                write!(f, "WeakPenalty(weight={weight}, n_boundary={n_boundary})")
            }
        }
    }
}

/// Evaluates the boundary-consistent model at the given input rows.
pub fn eval_model(
    spec: &NetworkSpec,
    theta: &ParamVector,
    inputs: &DenseMatrix,
    bc: &BoundaryCondition,
) -> Result<Vec<f64>, FitError> {
    let raw = network::forward(spec, theta, inputs)?;
    Ok(apply_strong_bc(raw, inputs, bc))
}

fn apply_strong_bc(mut values: Vec<f64>, inputs: &DenseMatrix, bc: &BoundaryCondition) -> Vec<f64> {
    if let BoundaryCondition::StrongLevelSet { phi, g } = bc {
        for (i, v) in values.iter_mut().enumerate() {
            let row = inputs.row(i);
            *v = phi(row) * *v + g(row);
        }
    }
    values
}

/// Per-solve diagnostics; the final loss is the optimization-error proxy.
#[derive(Debug, Clone, Default)]
pub struct StepDiagnostics {
    pub final_loss: f64,
    pub epochs: usize,
    pub wall_ms: f64,
    /// Relative warm-start movement `‖θ_out − θ_in‖ / ‖θ_in‖` (filled by the driver).
    pub param_delta: f64,
}

/// Runs `cfg.n_epochs` epochs of least-squares fitting from `theta0`.
///
/// Each epoch (re)samples a collocation batch, evaluates `target` on it,
/// assembles the residual and parameter Jacobian of the boundary-consistent
/// model, and applies one update (Adam, or the damped Gauss-Newton step when
/// `cfg.natural_gradient` is set). Aborts with diagnostics if the loss turns
/// non-finite.
pub fn fit_least_squares(
    spec: &NetworkSpec,
    theta0: &ParamVector,
    target: &(dyn Fn(&SampleBatch) -> Result<Vec<f64>, FitError> + Sync),
    sampler: &mut dyn FnMut(&mut RngStream) -> Result<SampleBatch, FitError>,
    cfg: &FitConfig,
    bc: &BoundaryCondition,
    rng: &mut RngStream,
) -> Result<(ParamVector, StepDiagnostics), FitError> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let n = spec.dof_count();
    if theta0.len() != n {
        return Err(FitError::Shape(format!("theta0 has {} entries, spec has {n} dofs", theta0.len())));
    }

    let mut theta = theta0.clone();
    let mut adam = AdamState::new(n);
    let mut diagnostics = StepDiagnostics::default();

    let mut batch = sampler(rng)?;
    let mut inputs = batch.input_matrix();
    let mut y = target(&batch)?;
    let mut boundary = sample_boundary(bc, rng);

    let mut epochs_run = 0;
    for epoch in 0..cfg.n_epochs {
        if epoch > 0 && cfg.resample_each_epoch {
            batch = sampler(rng)?;
            inputs = batch.input_matrix();
            y = target(&batch)?;
            boundary = sample_boundary(bc, rng);
        }
        if y.len() != batch.len() {
            return Err(FitError::Shape(format!("target returned {} values for {} points", y.len(), batch.len())));
        }

        let k = batch.len();
        let (raw, jac) = network::forward_with_jacobian(spec, &theta, &inputs)?;
        let pred = apply_strong_bc(raw, &inputs, bc);
        let phi_scale = strong_phi(&inputs, bc);

        let mut residual: Vec<f64> = pred.iter().zip(&y).map(|(p, t)| p - t).collect();
        if let Some(phi) = &phi_scale {
            // model Jacobian rows are Φ(x_k)·J_k; fold Φ into the residual side
            // when forming Jᵀ(Φ-scaled r) and into the Gram scaling below.
            for (r, &f) in residual.iter_mut().zip(phi) {
                *r *= f;
            }
        }

        let mut loss = mse_loss(&pred, &y)?;
        let weak = weak_penalty_terms(spec, &theta, bc, &boundary)?;
        if let Some((b_loss, _, _)) = &weak {
            loss += b_loss;
        }
        if !loss.is_finite() {
            diagnostics.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            return Err(FitError::NonFiniteLoss { diagnostics });
        }
        diagnostics.final_loss = loss;
        epochs_run = epoch + 1;
        if let Some(stop) = cfg.stop_loss {
            if loss <= stop {
                break;
            }
        }

        if std::env::var_os("NSL_DEBUG_FIT").is_some() {
            eprintln!("epoch {epoch}: loss {loss:.3e}");
        }
        if cfg.natural_gradient {
            // Gauss-Newton scaling: unit step solves the linearized problem.
            let mut half_grad = jac.tr_mul_vec(&residual)?;
            half_grad.iter_mut().for_each(|g| *g /= k as f64);
            if let Some((_, b_grad, _)) = &weak {
                for (h, b) in half_grad.iter_mut().zip(b_grad) {
                    *h += 0.5 * b;
                }
            }
            let gram = scaled_gram(&jac, phi_scale.as_deref(), k);
            let scale = gram.trace() / n as f64 + 1.0;
            // Loss-proportional damping: while the residual is large the step
            // stays short and tracks the warm-start valley (a full
            // Gauss-Newton jump at a fresh time step can leave the basin and
            // flatten the model); as the loss shrinks the damping vanishes
            // and the iteration turns into plain Gauss-Newton with its
            // quadratic endgame. Heavier rungs back the step off when the
            // trial increases the loss on this batch, so the loss is
            // non-increasing on a frozen sample. Oversized steps live in the
            // numerical null space of the Gram (they barely move the batch
            // predictions but wreck the model between collocation points) and
            // are rejected before the loss check.
            let base = scale * loss.clamp(1e-9, 1e-2);
            // (damping, acceptance factor): the near-exact Gauss-Newton rung
            // runs first and must shrink the loss by 10× — when the
            // linearization is valid it does far better, giving the quadratic
            // endgame; when it is not (large warm-start residuals), the
            // loss-proportional rungs take over with plain non-increase.
            let rungs = [
                (1e-9 * scale, 0.1),
                (base, 1.0),
                (base * 1e2, 1.0),
                (base * 1e4, 1.0),
                (base * 1e6, 1.0),
            ];
            let max_step = 5.0 * (1.0 + numerics::norm2(theta.as_slice()));
            let mut accepted = false;
            for &(damping, factor) in &rungs {
                let eta = match numerics::cholesky_solve_damped(&gram, &half_grad, damping) {
                    Some(e) => e,
                    None => continue,
                };
                if numerics::norm2(&eta) > max_step {
                    continue;
                }
                let mut trial = theta.clone();
                for (t, e) in trial.0.iter_mut().zip(&eta) {
                    *t -= e;
                }
                let trial_pred = eval_model(spec, &trial, &inputs, bc)?;
                let mut trial_loss = mse_loss(&trial_pred, &y)?;
                if let Some((_, _, recompute)) = &weak {
                    trial_loss += recompute(spec, &trial)?;
                }
                if trial_loss.is_finite() && trial_loss <= factor * loss {
                    theta = trial;
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                // no improving step at any damping: keep θ for this epoch
                continue;
            }
        } else {
            let mut grad = jac.tr_mul_vec(&residual)?;
            grad.iter_mut().for_each(|g| *g *= 2.0 / k as f64);
            if let Some((_, b_grad, _)) = &weak {
                for (gg, b) in grad.iter_mut().zip(b_grad) {
                    *gg += b;
                }
            }
            adam_step(&mut adam, &mut theta.0, &grad, cfg.learning_rate)?;
        }
    }

    // honest post-update loss on the last batch
    let final_pred = eval_model(spec, &theta, &inputs, bc)?;
    let mut final_loss = mse_loss(&final_pred, &y)?;
    if let Some((b_loss, _, _)) = weak_penalty_terms(spec, &theta, bc, &boundary)? {
        final_loss += b_loss;
    }
    if !final_loss.is_finite() {
        diagnostics.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        return Err(FitError::NonFiniteLoss { diagnostics });
    }
    diagnostics.final_loss = final_loss;
    diagnostics.epochs = epochs_run;
    diagnostics.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((theta, diagnostics))
}

fn strong_phi(inputs: &DenseMatrix, bc: &BoundaryCondition) -> Option<Vec<f64>> {
    if let BoundaryCondition::StrongLevelSet { phi, .. } = bc {
        Some((0..inputs.rows()).map(|i| phi(inputs.row(i))).collect())
    } else {
        None
    }
}

/// `JᵀJ/K` with optional per-row Φ scaling (strong boundary conditions).
fn scaled_gram(jac: &DenseMatrix, phi: Option<&[f64]>, k: usize) -> DenseMatrix {
    match phi {
        None => jac.gram_scaled(1.0 / k as f64),
        Some(weights) => {
            let mut scaled = jac.clone();
            for i in 0..scaled.rows() {
                let w = weights[i];
                for v in scaled.row_mut(i) {
                    *v *= w;
                }
            }
            scaled.gram_scaled(1.0 / k as f64)
        }
    }
}

type WeakRecompute<'a> = Box<dyn Fn(&NetworkSpec, &ParamVector) -> Result<f64, FitError> + 'a>;

fn sample_boundary(bc: &BoundaryCondition, rng: &mut RngStream) -> Option<DenseMatrix> {
    if let BoundaryCondition::WeakPenalty { sampler, n_boundary, .. } = bc {
        Some(sampler(rng, *n_boundary))
    } else {
        None
    }
}

/// Loss contribution, gradient contribution, and a re-evaluator for the weak
/// boundary penalty on the given boundary rows.
fn weak_penalty_terms<'a>(
    spec: &NetworkSpec,
    theta: &ParamVector,
    bc: &'a BoundaryCondition,
    boundary: &'a Option<DenseMatrix>,
) -> Result<Option<(f64, Vec<f64>, WeakRecompute<'a>)>, FitError> {
    let (g, weight) = match bc {
        BoundaryCondition::WeakPenalty { g, weight, .. } => (g, *weight),
        _ => return Ok(None),
    };
    let rows = boundary.as_ref().expect("boundary rows sampled for weak penalty");
    let kb = rows.rows();
    let (values, jac) = network::forward_with_jacobian(spec, theta, rows)?;
    let residual: Vec<f64> = (0..kb).map(|i| values[i] - g(rows.row(i))).collect();
    let loss = weight * residual.iter().map(|r| r * r).sum::<f64>() / kb as f64;
    let mut grad = jac.tr_mul_vec(&residual)?;
    grad.iter_mut().for_each(|v| *v *= 2.0 * weight / kb as f64);
    let g_arc = g.clone();
    let rows_ref = rows;
    let recompute: WeakRecompute<'a> = Box::new(move |s: &NetworkSpec, t: &ParamVector| {
        let vals = network::forward(s, t, rows_ref)?;
        Ok(weight
            * (0..kb).map(|i| {
                let r = vals[i] - g_arc(rows_ref.row(i));
                r * r
            }).sum::<f64>()
            / kb as f64)
    });
    Ok(Some((loss, grad, recompute)))
}
