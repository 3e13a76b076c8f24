//! Catalog of benchmark scenarios: domains, advection fields, initial
//! conditions, exact solutions where available, and desk-scale default
//! solver configurations.
//!
//! Scenario names are part of the CLI contract:
//! `constant_1d`, `constant_1d_param`, `rotating_2d`, `vlasov_1d1v`,
//! `cylinder_3d`, `levelset_2d`, `levelset_3d`, `ad_periodic`, `ad_gaussian`.
//! Defaults are sized for workstation CPU runs; raise the widths, epoch and
//! collocation counts through the CLI config for higher accuracy.

use std::sync::Arc;

use crate::characteristics::{AdvectionField, BoundaryKind, Domain, DomainShape, FlowConfig};
use crate::classical::{self, Grid, GridBc, GridField};
use crate::driver::NslConfig;
use crate::fit::{BoundaryCondition, FitConfig};
use crate::metrics::ErrorMetric;
use crate::network::{ActivationKind, NetworkSpec};
use crate::numerics::DenseMatrix;
use crate::sampling::{AdaptiveConfig, ParamSpace};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario '{0}'")]
    UnknownName(String),
    #[error("scenario '{name}' does not support dimension {dim} ({hint})")]
    BadDimension { name: String, dim: usize, hint: String },
    #[error("scenario has no exact solution")]
    MissingExact,
    #[error(transparent)]
    Classical(#[from] crate::classical::ClassicalError),
}

/// Which focus function adaptive sampling uses for this scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FocusKind {
    /// `f = 1/(10⁻² + ‖∇u_θ‖²)` — concentrates where the solution varies.
    Gradient,
    /// `f = u_θ` — concentrates near the zero contour (level sets).
    Value,
}

pub type PointFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;

/// One benchmark problem, fully described.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub domain: Domain,
    pub pspace: ParamSpace,
    pub field: AdvectionField,
    pub sigma: f64,
    pub u0: PointFn,
    pub exact: Option<SpaceTimeFn>,
    pub t_final: f64,
    /// Desk-scale solver defaults (always populated by [`make_scenario`]).
    pub defaults: Option<NslConfig>,
    pub focus: FocusKind,
    /// Error normalization appropriate for this solution's range.
    pub error_metric: ErrorMetric,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("dim", &self.domain.dim())
            .field("params", &self.pspace.dim())
            .field("sigma", &self.sigma)
            .field("t_final", &self.t_final)
            .finish()
    }
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Canonical one-line description used for content hashing in run
    /// manifests.
    pub fn describe(&self) -> String {
        let bounds: Vec<String> = self
            .domain
            .lower()
            .iter()
            .zip(self.domain.extent())
            .map(|(l, e)| format!("[{l},{}]", l + e))
            .collect();
        let pbounds: Vec<String> = self.pspace.bounds().iter().map(|(l, h)| format!("[{l},{h}]")).collect();
        format!(
            "scenario={} dim={} domain={} params={} sigma={} t_final={} focus={:?}",
            self.name,
            self.dim(),
            bounds.join("x"),
            pbounds.join("x"),
            self.sigma,
            self.t_final,
            self.focus
        )
    }
}

/// Optional knobs accepted by [`make_scenario`]; `None` keeps the scenario
/// default.
#[derive(Debug, Clone, Default)]
pub struct ScenarioOptions {
    pub t_final: Option<f64>,
    pub sigma: Option<f64>,
    /// Gaussian pulse width for the non-parametric 1D scenario.
    pub nu: Option<f64>,
    /// Advection speed for the non-parametric 1D scenario.
    pub advection: Option<f64>,
}

/// Anisotropic Gaussian pulse used by the `ad_gaussian` scenario:
/// mean `M(t) = a·t` (with `a` the all-ones velocity), covariance
/// `Σ(t) = Σ(0) + 2σt·I`, and initial covariance
/// `Σ(0) = 2d·σ₀²·(2d·I + Σ̃)` with `Σ̃_ij = d − |i−j|`, `σ₀ = 0.05`.
#[derive(Debug, Clone)]
pub struct GaussianSpec {
    pub dim: usize,
    pub sigma0: f64,
    pub diffusion: f64,
    cov0: DenseMatrix,
    det0: f64,
}

impl GaussianSpec {
    pub fn new(dim: usize, diffusion: f64) -> Self {
        let sigma0 = 0.05;
        let d = dim as f64;
        let mut cov0 = DenseMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let tilde = d - (i as f64 - j as f64).abs();
                let diag = if i == j { 2.0 * d } else { 0.0 };
                cov0.set(i, j, 2.0 * d * sigma0 * sigma0 * (diag + tilde));
            }
        }
        let det0 = Self::cholesky_det(&cov0).expect("initial covariance is positive-definite");
        Self { dim, sigma0, diffusion, cov0, det0 }
    }

    pub fn cov0(&self) -> &DenseMatrix {
        &self.cov0
    }

    pub fn cov_at(&self, t: f64) -> DenseMatrix {
        let mut c = self.cov0.clone();
        for i in 0..self.dim {
            c.set(i, i, c.get(i, i) + 2.0 * self.diffusion * t);
        }
        c
    }

    fn cholesky_det(m: &DenseMatrix) -> Option<f64> {
        let n = m.rows();
        let mut l = m.clone();
        // in-place lower Cholesky on a copy
        for i in 0..n {
            for j in 0..=i {
                let mut s = l.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    l.set(i, i, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
            for j in i + 1..n {
                l.set(i, j, 0.0);
            }
        }
        Some((0..n).map(|i| l.get(i, i).powi(2)).product())
    }

    /// `u_ex(t, x) = 1 + √(det Σ(0)/det Σ(t)) · exp(−½ (x−M)ᵀ Σ(t)⁻¹ (x−M))`.
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let n = self.dim;
        let cov = self.cov_at(t);
        // Cholesky solve of Σ(t) y = (x − M)
        let mut l = cov.clone();
        for i in 0..n {
            for j in 0..=i {
                let mut s = l.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    l.set(i, i, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        let det_t: f64 = (0..n).map(|i| l.get(i, i).powi(2)).product();
        let mut y: Vec<f64> = (0..n).map(|i| x[i] - t).collect();
        for i in 0..n {
            for k in 0..i {
                let v = l.get(i, k) * y[k];
                y[i] -= v;
            }
            y[i] /= l.get(i, i);
        }
        // quadratic form (x−M)ᵀ Σ⁻¹ (x−M) = ‖L⁻¹(x−M)‖²
        let q: f64 = y.iter().map(|v| v * v).sum();
        1.0 + (self.det0 / det_t).sqrt() * (-0.5 * q).exp()
    }
}

fn fit_cfg(epochs: usize, collocation: usize) -> FitConfig {
    FitConfig {
        n_epochs: epochs,
        n_collocation: collocation,
        learning_rate: 1e-3,
        resample_each_epoch: true,
        natural_gradient: true,
        stop_loss: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn default_cfg(
    input_dim: usize,
    layers: Vec<usize>,
    activation: ActivationKind,
    n_c: usize,
    ne_init: usize,
    ne_iter: usize,
    n_t: usize,
    t_final: f64,
    sigma: f64,
    n_tau: usize,
    boundary: BoundaryCondition,
    adaptive: Option<AdaptiveConfig>,
) -> NslConfig {
    NslConfig {
        t_final,
        n_t,
        network: NetworkSpec::new(input_dim, layers, activation).expect("valid default network"),
        init: fit_cfg(ne_init, n_c),
        iter: fit_cfg(ne_iter, n_c),
        flow: FlowConfig::new(n_tau),
        sigma,
        boundary,
        adaptive,
        checkpoint_dir: None,
    }
}

/// Builds one of the named scenarios. `dim = 0` selects the scenario's
/// natural dimension; scenarios with a fixed dimension reject other values.
pub fn make_scenario(name: &str, dim: usize, opts: &ScenarioOptions) -> Result<Scenario, ScenarioError> {
    match name {
        "constant_1d" => {
            require_dim(name, dim, &[1])?;
            let nu = opts.nu.unwrap_or(0.1);
            let a = opts.advection.unwrap_or(1.0);
            let t_final = opts.t_final.unwrap_or(1.0);
            let domain = Domain::aligned_box(vec![0.0], vec![2.0], BoundaryKind::Periodic);
            let u0: PointFn = Arc::new(move |x: &[f64], _mu: &[f64]| (-(x[0] - 0.5).powi(2) / (2.0 * nu * nu)).exp());
            let u0c = u0.clone();
            let exact: SpaceTimeFn = Arc::new(move |t, x, mu| u0c(&[x[0] - a * t], mu));
            let field = AdvectionField::constant(1, Arc::new(move |_mu: &[f64], out: &mut [f64]| out[0] = a));
            let defaults = default_cfg(
                1,
                vec![24, 24],
                ActivationKind::Tanh,
                3000,
                250,
                200,
                4,
                t_final,
                0.0,
                1,
                BoundaryCondition::Periodic,
                None,
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace: ParamSpace::none(),
                field,
                sigma: 0.0,
                u0,
                exact: Some(exact),
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Gradient,
                error_metric: ErrorMetric::NormRelative,
            })
        }
        "constant_1d_param" => {
            require_dim(name, dim, &[1])?;
            let t_final = opts.t_final.unwrap_or(1.0);
            let domain = Domain::aligned_box(vec![0.0], vec![2.0], BoundaryKind::Periodic);
            let pspace = ParamSpace::new(vec![(0.05, 0.15), (0.5, 1.0)]).expect("static bounds");
            // μ = (ν, a): pulse width and advection speed
            let u0: PointFn = Arc::new(|x: &[f64], mu: &[f64]| (-(x[0] - 0.5).powi(2) / (2.0 * mu[0] * mu[0])).exp());
            let u0c = u0.clone();
            let exact: SpaceTimeFn = Arc::new(move |t, x, mu| u0c(&[x[0] - mu[1] * t], mu));
            let field = AdvectionField::constant(1, Arc::new(|mu: &[f64], out: &mut [f64]| out[0] = mu[1]));
            let defaults = default_cfg(
                3,
                vec![24, 24],
                ActivationKind::Tanh,
                3000,
                300,
                80,
                4,
                t_final,
                0.0,
                1,
                BoundaryCondition::Periodic,
                None,
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace,
                field,
                sigma: 0.0,
                u0,
                exact: Some(exact),
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Gradient,
                error_metric: ErrorMetric::NormRelative,
            })
        }
        "rotating_2d" => {
            require_dim(name, dim, &[2])?;
            let t_final = opts.t_final.unwrap_or(1.0);
            let domain = Domain::new(
                vec![-1.0, -1.0],
                vec![2.0, 2.0],
                vec![BoundaryKind::Open; 2],
                DomainShape::UnitDisk,
            );
            // μ = (v, c): pulse width and orbit radius
            let pspace = ParamSpace::new(vec![(0.05, 0.1), (0.2, 0.4)]).expect("static bounds");
            let exact: SpaceTimeFn = Arc::new(|t, x, mu| {
                let (v, c) = (mu[0], mu[1]);
                let (s, co) = (2.0 * std::f64::consts::PI * t).sin_cos();
                let dx = x[0] - c * co;
                let dy = x[1] - c * s;
                1.0 + (-(dx * dx + dy * dy) / (2.0 * v * v)).exp()
            });
            let e0 = exact.clone();
            let u0: PointFn = Arc::new(move |x, mu| e0(0.0, x, mu));
            let field = AdvectionField::closed_form(
                2,
                Arc::new(|s, t, x, _mu, out: &mut [f64]| crate::characteristics::rotation_flow(s, t, x, out)),
            );
            let defaults = default_cfg(
                4,
                vec![24, 24],
                ActivationKind::RegularizedHat,
                4000,
                200,
                60,
                2,
                t_final,
                0.0,
                1,
                BoundaryCondition::None,
                None,
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace,
                field,
                sigma: 0.0,
                u0,
                exact: Some(exact),
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Gradient,
                error_metric: ErrorMetric::PointwiseRelative,
            })
        }
        "vlasov_1d1v" => {
            require_dim(name, dim, &[2])?;
            let t_final = opts.t_final.unwrap_or(4.5);
            let domain = Domain::new(
                vec![0.0, -6.0],
                vec![2.0 * std::f64::consts::PI, 12.0],
                vec![BoundaryKind::Periodic; 2],
                DomainShape::Box,
            );
            let u0: PointFn = Arc::new(|x: &[f64], _mu: &[f64]| {
                (2.0 * std::f64::consts::PI).sqrt().recip() * (-0.5 * x[1] * x[1]).exp()
            });
            let field = AdvectionField::generic(
                2,
                Arc::new(|_t, x: &[f64], _mu: &[f64], out: &mut [f64]| {
                    out[0] = x[1];
                    out[1] = x[0].sin();
                }),
            );
            let defaults = default_cfg(
                2,
                vec![24, 24, 24],
                ActivationKind::RegularizedHat,
                6000,
                200,
                80,
                3,
                t_final,
                0.0,
                5,
                BoundaryCondition::Periodic,
                None,
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace: ParamSpace::none(),
                field,
                sigma: 0.0,
                u0,
                exact: None,
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Gradient,
                error_metric: ErrorMetric::NormRelative,
            })
        }
        "cylinder_3d" => {
            require_dim(name, dim, &[3])?;
            let t_final = opts.t_final.unwrap_or(2.0);
            let domain = Domain::new(
                vec![-1.0, -1.0, 0.0],
                vec![2.0, 2.0, 2.0],
                vec![BoundaryKind::Open, BoundaryKind::Open, BoundaryKind::Periodic],
                DomainShape::Cylinder,
            );
            // μ = (c, v): orbit radius and pulse width
            let pspace = ParamSpace::new(vec![(0.3, 0.5), (0.05, 0.15)]).expect("static bounds");
            let exact: SpaceTimeFn = Arc::new(|t, x, mu| {
                let (c, v) = (mu[0], mu[1]);
                let (s, co) = (2.0 * std::f64::consts::PI * t).sin_cos();
                let dx = x[0] - c * co;
                let dy = x[1] - c * s;
                let dz = (x[2] - t).rem_euclid(2.0) - 1.0;
                1.0 + (-(dx * dx + dy * dy + dz * dz) / (2.0 * v * v)).exp()
            });
            let e0 = exact.clone();
            let u0: PointFn = Arc::new(move |x, mu| e0(0.0, x, mu));
            // rotation in the first two axes, unit-speed transport along the third
            let field = AdvectionField::closed_form(
                3,
                Arc::new(|s, t, x, _mu, out: &mut [f64]| {
                    crate::characteristics::rotation_flow(s, t, x, out);
                    out[2] = x[2] - (t - s);
                }),
            );
            let defaults = default_cfg(
                5,
                vec![16, 24, 16],
                ActivationKind::Tanh,
                5000,
                120,
                40,
                4,
                t_final,
                0.0,
                1,
                BoundaryCondition::None,
                Some(AdaptiveConfig::new(0.5, 10.0, 500.0)),
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace,
                field,
                sigma: 0.0,
                u0,
                exact: Some(exact),
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Gradient,
                error_metric: ErrorMetric::PointwiseRelative,
            })
        }
        "levelset_2d" => {
            require_dim(name, dim, &[2])?;
            let t_final = opts.t_final.unwrap_or(8.0);
            let domain = Domain::aligned_box(vec![0.0, 0.0], vec![1.0, 1.0], BoundaryKind::Open);
            let u0: PointFn = Arc::new(|x: &[f64], _mu: &[f64]| {
                (x[0] - 0.5).powi(2) + (x[1] - 0.75).powi(2) - 0.15f64.powi(2)
            });
            let period = t_final;
            let field = AdvectionField::generic(
                2,
                Arc::new(move |t: f64, x: &[f64], _mu: &[f64], out: &mut [f64]| {
                    let pi = std::f64::consts::PI;
                    let ramp = (pi * t / period).cos();
                    out[0] = -(pi * x[0]).sin().powi(2) * (2.0 * pi * x[1]).sin() * ramp;
                    out[1] = (pi * x[1]).sin().powi(2) * (2.0 * pi * x[0]).sin() * ramp;
                }),
            );
            let defaults = default_cfg(
                2,
                vec![16, 24, 16],
                ActivationKind::Tanh,
                6000,
                100,
                60,
                40,
                t_final,
                0.0,
                10,
                BoundaryCondition::None,
                Some(AdaptiveConfig::new(2e-3, 1e-2, 5e-2)),
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace: ParamSpace::none(),
                field,
                sigma: 0.0,
                u0,
                exact: None,
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Value,
                error_metric: ErrorMetric::NormRelative,
            })
        }
        "levelset_3d" => {
            require_dim(name, dim, &[3])?;
            let t_final = opts.t_final.unwrap_or(3.0);
            let domain = Domain::aligned_box(vec![0.0; 3], vec![1.0; 3], BoundaryKind::Open);
            let u0: PointFn = Arc::new(|x: &[f64], _mu: &[f64]| {
                (x[0] - 0.35).powi(2) + (x[1] - 0.35).powi(2) + (x[2] - 0.35).powi(2) - 0.15f64.powi(2)
            });
            let period = t_final;
            let field = AdvectionField::generic(
                3,
                Arc::new(move |t: f64, x: &[f64], _mu: &[f64], out: &mut [f64]| {
                    let pi = std::f64::consts::PI;
                    let ramp = (pi * t / period).cos();
                    let (s1, s2, s3) = ((pi * x[0]).sin(), (pi * x[1]).sin(), (pi * x[2]).sin());
                    let (d1, d2, d3) = (
                        (2.0 * pi * x[0]).sin(),
                        (2.0 * pi * x[1]).sin(),
                        (2.0 * pi * x[2]).sin(),
                    );
                    out[0] = s1 * s1 * d2 * d3 * ramp;
                    out[1] = s2 * s2 * d1 * d3 * ramp;
                    out[2] = s3 * s3 * d1 * d2 * ramp;
                }),
            );
            let defaults = default_cfg(
                3,
                vec![18, 24, 18],
                ActivationKind::Tanh,
                8000,
                80,
                50,
                10,
                t_final,
                0.0,
                10,
                BoundaryCondition::None,
                Some(AdaptiveConfig::new(2e-3, 1e-2, 5e-2)),
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace: ParamSpace::none(),
                field,
                sigma: 0.0,
                u0,
                exact: None,
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Value,
                error_metric: ErrorMetric::NormRelative,
            })
        }
        "ad_periodic" => {
            let d = if dim == 0 { 2 } else { dim };
            if d < 1 {
                return Err(ScenarioError::BadDimension { name: name.into(), dim, hint: "needs d ≥ 1".into() });
            }
            let sigma = opts.sigma.unwrap_or(0.1);
            // default horizon: the time at which diffusion halves the amplitude
            let t_final = opts
                .t_final
                .unwrap_or(2f64.ln() / (sigma * std::f64::consts::PI.powi(2) * d as f64));
            let domain = Domain::aligned_box(vec![-1.0; d], vec![2.0; d], BoundaryKind::Periodic);
            let shifts: Vec<f64> = (0..d).map(|i| i as f64 / d as f64).collect();
            let exact: SpaceTimeFn = Arc::new(move |t, x, _mu| {
                let pi = std::f64::consts::PI;
                let phase: f64 = x.iter().zip(&shifts).map(|(xi, si)| xi - t - si).sum();
                2.0 + (pi * phase).sin() * (-sigma * pi * pi * x.len() as f64 * t).exp()
            });
            let e0 = exact.clone();
            let u0: PointFn = Arc::new(move |x, mu| e0(0.0, x, mu));
            let field = AdvectionField::constant(
                d,
                Arc::new(|_mu: &[f64], out: &mut [f64]| out.iter_mut().for_each(|v| *v = 1.0)),
            );
            let defaults = default_cfg(
                d,
                vec![16, 16],
                ActivationKind::Sin,
                4000,
                150,
                15,
                20,
                t_final,
                sigma,
                1,
                BoundaryCondition::Periodic,
                None,
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace: ParamSpace::none(),
                field,
                sigma,
                u0,
                exact: Some(exact),
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Gradient,
                error_metric: ErrorMetric::PointwiseRelative,
            })
        }
        "ad_gaussian" => {
            let d = if dim == 0 { 2 } else { dim };
            if d < 2 {
                return Err(ScenarioError::BadDimension {
                    name: name.into(),
                    dim,
                    hint: "anisotropic pulse needs d ≥ 2".into(),
                });
            }
            let sigma = opts.sigma.unwrap_or(0.05);
            let t_final = opts.t_final.unwrap_or(1.0);
            let domain = Domain::aligned_box(vec![-3.0; d], vec![6.0; d], BoundaryKind::Open);
            let spec = GaussianSpec::new(d, sigma);
            let spec0 = spec.clone();
            let exact: SpaceTimeFn = Arc::new(move |t, x, _mu| spec0.eval(t, x));
            let spec1 = spec.clone();
            let u0: PointFn = Arc::new(move |x, _mu| spec1.eval(0.0, x));
            let field = AdvectionField::constant(
                d,
                Arc::new(|_mu: &[f64], out: &mut [f64]| out.iter_mut().for_each(|v| *v = 1.0)),
            );
            let defaults = default_cfg(
                d,
                vec![7 * d, 7 * d],
                ActivationKind::RegularizedHat,
                6000,
                120,
                15,
                5,
                t_final,
                sigma,
                1,
                BoundaryCondition::None,
                Some(AdaptiveConfig::new(20.0, 100.0, 5000.0)),
            );
            Ok(Scenario {
                name: name.into(),
                domain,
                pspace: ParamSpace::none(),
                field,
                sigma,
                u0,
                exact: Some(exact),
                t_final,
                defaults: Some(defaults),
                focus: FocusKind::Gradient,
                error_metric: ErrorMetric::PointwiseRelative,
            })
        }
        other => Err(ScenarioError::UnknownName(other.into())),
    }
}

fn require_dim(name: &str, dim: usize, allowed: &[usize]) -> Result<(), ScenarioError> {
    if dim == 0 || allowed.contains(&dim) {
        Ok(())
    } else {
        Err(ScenarioError::BadDimension {
            name: name.into(),
            dim,
            hint: format!("expected one of {allowed:?}"),
        })
    }
}

/// All known scenario names, in CLI order.
pub fn scenario_names() -> &'static [&'static str] {
    &[
        "constant_1d",
        "constant_1d_param",
        "rotating_2d",
        "vlasov_1d1v",
        "cylinder_3d",
        "levelset_2d",
        "levelset_3d",
        "ad_periodic",
        "ad_gaussian",
    ]
}

/// Evaluates the scenario's analytic solution.
pub fn exact_eval(scenario: &Scenario, t: f64, x: &[f64], mu: &[f64]) -> Result<f64, ScenarioError> {
    scenario.exact.as_ref().map(|f| f(t, x, mu)).ok_or(ScenarioError::MissingExact)
}

/// Grid reference for the fixed-field Vlasov problem `a(x, v) = (v, sin x)`,
/// computed with Strang-split semi-Lagrangian sweeps (half step in `x`, full
/// step in `v`, half step in `x`). Returns the field at each requested time
/// (times are matched to the nearest step boundary).
pub fn vlasov_reference(
    n_x: usize,
    n_v: usize,
    t_final: f64,
    n_t: usize,
    record_times: &[f64],
) -> Result<Vec<(f64, GridField)>, ScenarioError> {
    let grid = Grid::new(
        vec![n_x, n_v],
        vec![0.0, -6.0],
        vec![2.0 * std::f64::consts::PI, 6.0],
        vec![GridBc::Periodic, GridBc::Periodic],
    )?;
    let maxwellian = |x: &[f64]| (2.0 * std::f64::consts::PI).sqrt().recip() * (-0.5 * x[1] * x[1]).exp();
    let mut field = GridField::sample(grid.clone(), &maxwellian);
    let dt = t_final / n_t as f64;

    let mut snapshots = Vec::new();
    let record = |t: f64, f: &GridField, out: &mut Vec<(f64, GridField)>| {
        for &rt in record_times {
            if (rt - t).abs() <= 0.5 * dt * 1e-6 + 1e-12 {
                out.push((rt, f.clone()));
            }
        }
    };
    record(0.0, &field, &mut snapshots);

    let half_x = |f: &GridField, step: f64| {
        // x-advection at speed v: displacement constant along each x-line
        classical::shift_axis_per_line(f, 0, &|idx: &[usize]| -grid.node(1, idx[1]) * step)
    };
    for step in 0..n_t {
        field = half_x(&field, 0.5 * dt)?;
        field = classical::shift_axis_per_line(&field, 1, &|idx: &[usize]| -grid.node(0, idx[0]).sin() * dt)?;
        field = half_x(&field, 0.5 * dt)?;
        record((step + 1) as f64 * dt, &field, &mut snapshots);
    }
    Ok(snapshots)
}
