//! Mesh-free neural semi-Lagrangian (NSL) solver for parametric advection and
//! advection-diffusion equations, together with a deterministic grid-based
//! semi-Lagrangian baseline and the error metrics used to compare them.
//!
//! The NSL scheme represents the solution at each discrete time as a small
//! fully-connected network `u_θ(x, μ)` and advances it by fitting
//! `u_{θ^{n+1}}` to `u_{θ^n}` evaluated at the feet of the backward
//! characteristic curves (plus a 2d-direction stencil average when diffusion
//! is present). Every inner loop — collocation sampling, characteristic
//! backtracking, Jacobian assembly, Gram products, grid sweeps, Monte-Carlo
//! error probes — is data-parallel over points; see [`parallel`] for the
//! deterministic reduction scheme shared by the threaded and sequential
//! builds.

pub mod characteristics;
pub mod classical;
pub mod driver;
pub mod fit;
pub mod metrics;
pub mod network;
pub mod numerics;
pub mod parallel;
pub mod sampling;
pub mod scenarios;

pub use characteristics::{AdvectionField, Domain, FlowConfig};
pub use driver::{NslConfig, NslTrajectory};
pub use fit::{BoundaryCondition, FitConfig, StepDiagnostics};
pub use metrics::ErrorReport;
pub use network::{ActivationKind, NetworkSpec, ParamVector};
pub use numerics::{DenseMatrix, RngStream};
pub use sampling::{AdaptiveConfig, ParamSpace, SampleBatch};
pub use scenarios::Scenario;
