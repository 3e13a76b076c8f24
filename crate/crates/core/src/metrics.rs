//! Error norms, level-set volume diagnostics, and convergence-slope
//! estimation.
//!
//! Errors are the relative L² and L∞ norms over a probe set,
//! `e_L² = √((1/N)·Σ (u−u_ex)²/u_ex²)` and `e_L∞ = max |u−u_ex|/|u_ex|`,
//! evaluated either on Monte-Carlo probes or on grid nodes. Probe points for
//! Monte-Carlo reports come from a dedicated stream, never the training
//! stream.

use crate::characteristics::Domain;
use crate::numerics::RngStream;
use crate::parallel;
use crate::sampling::{self, ParamSpace, SampleBatch};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("exact solution vanishes at probe {index} (value {value})")]
    ZeroExactProbe { index: usize, value: f64 },
    #[error("length mismatch: {0}")]
    Shape(String),
    #[error("convergence_slope needs at least 3 positive pairs, got {0}")]
    TooFewPairs(usize),
    #[error("convergence_slope requires positive values, got ({n_t}, {error})")]
    NonPositive { n_t: f64, error: f64 },
    #[error(transparent)]
    Sampling(#[from] crate::sampling::SamplingError),
}

/// Where the probes came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    MonteCarlo,
    GridNodes,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::MonteCarlo => "monte_carlo",
            ProbeKind::GridNodes => "grid_nodes",
        }
    }
}

/// Relative L²/L∞ errors over a probe set.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub e_l2: f64,
    pub e_linf: f64,
    pub n_probe: usize,
    pub kind: ProbeKind,
}

/// How "relative" is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMetric {
    /// Pointwise: `√(mean (u−u_ex)²/u_ex²)` and `max |u−u_ex|/|u_ex|`.
    /// Requires the exact solution to stay away from zero.
    PointwiseRelative,
    /// Norm ratios: `‖u−u_ex‖₂/‖u_ex‖₂` and `max|u−u_ex| / max|u_ex|`.
    /// Well-defined for solutions with vanishing tails (bare Gaussian pulses).
    NormRelative,
}

/// Norm-ratio variant of the error report.
pub fn norm_relative_error(approx: &[f64], exact: &[f64], kind: ProbeKind) -> Result<ErrorReport, MetricsError> {
    if approx.len() != exact.len() || approx.is_empty() {
        return Err(MetricsError::Shape(format!(
            "norm_relative_error: {} approx values vs {} exact",
            approx.len(),
            exact.len()
        )));
    }
    let n = approx.len();
    let num = parallel::sum_range(n, |i| (approx[i] - exact[i]) * (approx[i] - exact[i]));
    let den = parallel::sum_range(n, |i| exact[i] * exact[i]);
    if den == 0.0 {
        return Err(MetricsError::ZeroExactProbe { index: 0, value: 0.0 });
    }
    fn max_abs(n: usize, vals: impl Fn(usize) -> f64 + Send + Sync) -> f64 {
        parallel::chunk_partials(n, parallel::REDUCE_CHUNK, |range| {
            let mut m = 0.0f64;
            for i in range {
                m = m.max(vals(i).abs());
            }
            m
        })
        .into_iter()
        .fold(0.0f64, f64::max)
    }
    let max_diff = max_abs(n, |i| approx[i] - exact[i]);
    let max_exact = max_abs(n, |i| exact[i]);
    Ok(ErrorReport { e_l2: (num / den).sqrt(), e_linf: max_diff / max_exact, n_probe: n, kind })
}

/// Core formulas over paired value arrays.
pub fn relative_error_values(approx: &[f64], exact: &[f64], kind: ProbeKind) -> Result<ErrorReport, MetricsError> {
    if approx.len() != exact.len() || approx.is_empty() {
        return Err(MetricsError::Shape(format!(
            "relative_error: {} approx values vs {} exact",
            approx.len(),
            exact.len()
        )));
    }
    for (i, &e) in exact.iter().enumerate() {
        if e == 0.0 {
            return Err(MetricsError::ZeroExactProbe { index: i, value: e });
        }
    }
    let n = approx.len();
    let sum_sq = parallel::sum_range(n, |i| {
        let r = (approx[i] - exact[i]) / exact[i];
        r * r
    });
    let partials = parallel::chunk_partials(n, parallel::REDUCE_CHUNK, |range| {
        let mut m = 0.0f64;
        for i in range {
            m = m.max(((approx[i] - exact[i]) / exact[i]).abs());
        }
        m
    });
    let e_linf = partials.into_iter().fold(0.0f64, f64::max);
    Ok(ErrorReport { e_l2: (sum_sq / n as f64).sqrt(), e_linf, n_probe: n, kind })
}

/// Relative errors of `approx` against `exact` on a Monte-Carlo probe batch.
/// Both functions receive the whole batch and return one value per row.
pub fn relative_error(
    approx: &dyn Fn(&SampleBatch) -> Vec<f64>,
    exact: &dyn Fn(&SampleBatch) -> Vec<f64>,
    probes: &SampleBatch,
) -> Result<ErrorReport, MetricsError> {
    let a = approx(probes);
    let e = exact(probes);
    relative_error_values(&a, &e, ProbeKind::MonteCarlo)
}

/// Monte-Carlo estimate of `|Ω| · fraction{u < 0}`, the measure of the
/// negative region of a level-set function.
pub fn volume_negative(
    u: &dyn Fn(&SampleBatch) -> Vec<f64>,
    domain: &Domain,
    n_probe: usize,
    rng: &mut RngStream,
) -> Result<f64, MetricsError> {
    let probes = sampling::uniform_sample(domain, &ParamSpace::none(), n_probe, rng)?;
    let values = u(&probes);
    let negative = parallel::sum_range(values.len(), |i| if values[i] < 0.0 { 1.0 } else { 0.0 });
    Ok(domain.volume() * negative / n_probe as f64)
}

/// Least-squares slope of `log(error)` against `log(n_t)`.
pub fn convergence_slope(pairs: &[(f64, f64)]) -> Result<f64, MetricsError> {
    if pairs.len() < 3 {
        return Err(MetricsError::TooFewPairs(pairs.len()));
    }
    for &(n_t, err) in pairs {
        if !(n_t > 0.0) || !(err > 0.0) {
            return Err(MetricsError::NonPositive { n_t, error: err });
        }
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
