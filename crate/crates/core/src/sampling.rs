//! Uniform and adaptive generation of collocation points `(x_k, μ_k)` over
//! `Ω × 𝕄`.
//!
//! Uniform sampling draws directly on boxes and by rejection from the bounding
//! box on disk/cylinder cross-sections. Adaptive sampling concentrates points
//! near the zeros of a focus function: three rejection passes with widening
//! bandwidths `σ₁ ≤ σ₂ ≤ σ₃` each keep up to `N_c/4` candidates whose weight
//! `ω = exp(−f²/(2σ²))` exceeds the acceptance threshold, and a uniform fill
//! tops the batch up to exactly `N_c` points.
//!
//! All random draws come from a single stream in a fixed order, so batches are
//! reproducible bit for bit; only the focus evaluation is data-parallel.

use crate::characteristics::{Domain, DomainShape};
use crate::network::{self, NetworkSpec, ParamVector};
use crate::numerics::{DenseMatrix, RngStream};

#[derive(Debug, thiserror::Error)]
pub enum SamplingError {
    #[error("invalid parameter space: {0}")]
    ParamSpace(String),
    #[error("sample count must be at least {min}, got {got}")]
    Count { min: usize, got: usize },
    #[error("rejection acceptance rate fell below 1% (degenerate membership test)")]
    DegenerateAcceptance,
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
    #[error("focus evaluation returned {got} values for {want} candidates")]
    FocusShape { got: usize, want: usize },
}

/// Per-parameter interval bounds; may be empty (`p = 0`).
#[derive(Debug, Clone, Default)]
pub struct ParamSpace {
    bounds: Vec<(f64, f64)>,
}

impl ParamSpace {
    pub fn none() -> Self {
        Self { bounds: Vec::new() }
    }

    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, SamplingError> {
        for &(lo, hi) in &bounds {
            if !(lo < hi) {
                return Err(SamplingError::ParamSpace(format!("bound [{lo}, {hi}] is empty")));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.bounds.len()
            && mu.iter().zip(&self.bounds).all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }
}

/// A batch of collocation points with their parameter rows.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub points: DenseMatrix,
    pub params: DenseMatrix,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn space_dim(&self) -> usize {
        self.points.cols()
    }

    pub fn param_dim(&self) -> usize {
        self.params.cols()
    }

    /// K × (d + p) network input matrix: each row is `(x_k, μ_k)`.
    pub fn input_matrix(&self) -> DenseMatrix {
        let k = self.len();
        let d = self.space_dim();
        let p = self.param_dim();
        let mut out = DenseMatrix::zeros(k, d + p);
        for i in 0..k {
            let row = out.row_mut(i);
            row[..d].copy_from_slice(self.points.row(i));
            row[d..].copy_from_slice(self.params.row(i));
        }
        out
    }

    fn from_rows(rows: Vec<(Vec<f64>, Vec<f64>)>, d: usize, p: usize) -> Self {
        let k = rows.len();
        let mut points = DenseMatrix::zeros(k, d);
        let mut params = DenseMatrix::zeros(k, p);
        for (i, (x, mu)) in rows.into_iter().enumerate() {
            points.row_mut(i).copy_from_slice(&x);
            params.row_mut(i).copy_from_slice(&mu);
        }
        Self { points, params }
    }
}

/// Bandwidths and acceptance rule for adaptive sampling.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveConfig {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    /// Candidates qualify when `ω > threshold`.
    pub threshold: f64,
    /// Candidates drawn per pass, as a multiple of `N_c`.
    pub candidate_multiplier: usize,
}

impl AdaptiveConfig {
    pub fn new(sigma1: f64, sigma2: f64, sigma3: f64) -> Self {
        assert!(sigma1 > 0.0 && sigma1 <= sigma2 && sigma2 <= sigma3, "need 0 < σ₁ ≤ σ₂ ≤ σ₃");
        Self { sigma1, sigma2, sigma3, threshold: 0.75, candidate_multiplier: 10 }
    }

    pub fn sigmas(&self) -> [f64; 3] {
        [self.sigma1, self.sigma2, self.sigma3]
    }
}

fn draw_point(domain: &Domain, rng: &mut RngStream) -> Vec<f64> {
    (0..domain.dim())
        .map(|a| rng.uniform_one(domain.lower()[a], domain.lower()[a] + domain.extent()[a]))
        .collect()
}

fn draw_params(pspace: &ParamSpace, rng: &mut RngStream) -> Vec<f64> {
    pspace.bounds().iter().map(|&(lo, hi)| rng.uniform_one(lo, hi)).collect()
}

/// `n` points uniform over `Ω` paired with `n` uniform parameter rows.
///
/// Box domains sample directly; disk and cylinder cross-sections sample by
/// rejection from the bounding box, which fails if the acceptance rate drops
/// below 1%.
pub fn uniform_sample(
    domain: &Domain,
    pspace: &ParamSpace,
    n: usize,
    rng: &mut RngStream,
) -> Result<SampleBatch, SamplingError> {
    if n == 0 {
        return Err(SamplingError::Count { min: 1, got: 0 });
    }
    let direct = domain.shape() == DomainShape::Box;
    let mut rows = Vec::with_capacity(n);
    let mut attempts: usize = 0;
    while rows.len() < n {
        attempts += 1;
        let x = draw_point(domain, rng);
        if direct || domain.contains(&x) {
            let mu = draw_params(pspace, rng);
            rows.push((x, mu));
        }
        if attempts >= 1000 && (rows.len() as f64) < 0.01 * attempts as f64 {
            return Err(SamplingError::DegenerateAcceptance);
        }
    }
    Ok(SampleBatch::from_rows(rows, domain.dim(), pspace.dim()))
}

/// Adaptive sampling concentrated around the zeros of `focus`.
///
/// `focus` maps a candidate batch to one value per candidate. The output has
/// exactly `n` rows: up to `3·⌊n/4⌋` adaptive picks plus a uniform fill.
pub fn adaptive_sample(
    domain: &Domain,
    pspace: &ParamSpace,
    n: usize,
    focus: &(dyn Fn(&SampleBatch) -> Vec<f64> + Sync),
    cfg: &AdaptiveConfig,
    rng: &mut RngStream,
) -> Result<SampleBatch, SamplingError> {
    adaptive_sample_detailed(domain, pspace, n, focus, cfg, rng).map(|(batch, _)| batch)
}

/// Like [`adaptive_sample`], additionally reporting how many leading rows came
/// from the acceptance passes (the rest is the uniform fill).
pub fn adaptive_sample_detailed(
    domain: &Domain,
    pspace: &ParamSpace,
    n: usize,
    focus: &(dyn Fn(&SampleBatch) -> Vec<f64> + Sync),
    cfg: &AdaptiveConfig,
    rng: &mut RngStream,
) -> Result<(SampleBatch, usize), SamplingError> {
    if n < 4 {
        return Err(SamplingError::Count { min: 4, got: n });
    }
    let d = domain.dim();
    let p = pspace.dim();
    let per_pass_cap = n / 4;
    let mut selected: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n);

    for sigma in cfg.sigmas() {
        let candidates = uniform_sample(domain, pspace, cfg.candidate_multiplier * n, rng)?;
        let f_vals = focus(&candidates);
        if f_vals.len() != candidates.len() {
            return Err(SamplingError::FocusShape { got: f_vals.len(), want: candidates.len() });
        }
        let mut qualifiers: Vec<usize> = f_vals
            .iter()
            .enumerate()
            .filter(|(_, &f)| (-f * f / (2.0 * sigma * sigma)).exp() > cfg.threshold)
            .map(|(k, _)| k)
            .collect();
        // uniform choice among qualifiers: partial Fisher-Yates
        let keep = per_pass_cap.min(qualifiers.len());
        for slot in 0..keep {
            let pick = slot + rng.below(qualifiers.len() - slot);
            qualifiers.swap(slot, pick);
            let k = qualifiers[slot];
            selected.push((candidates.points.row(k).to_vec(), candidates.params.row(k).to_vec()));
        }
    }

    let adaptive_count = selected.len();
    let fill = n - adaptive_count;
    if fill > 0 {
        let extra = uniform_sample(domain, pspace, fill, rng)?;
        for k in 0..fill {
            selected.push((extra.points.row(k).to_vec(), extra.params.row(k).to_vec()));
        }
    }
    Ok((SampleBatch::from_rows(selected, d, p), adaptive_count))
}

/// Focus function for advection problems: small where the solution varies,
/// `f(x, μ) = 1/(10⁻² + ‖∇u_θ‖²)` with the gradient over the full network
/// input. Bounded in `(0, 100]`.
pub fn gradient_focus(spec: &NetworkSpec, theta: &ParamVector) -> impl Fn(&SampleBatch) -> Vec<f64> + Send + Sync + 'static {
    let spec = spec.clone();
    let theta = theta.clone();
    move |batch: &SampleBatch| {
        let inputs = batch.input_matrix();
        let grads = network::input_gradient(&spec, &theta, &inputs).expect("focus gradient shapes");
        (0..batch.len())
            .map(|i| {
                let g = grads.row(i);
                1.0 / (1e-2 + crate::numerics::dot(g, g))
            })
            .collect()
    }
}

/// Focus function for level-set problems: the approximate solution itself,
/// so sampling concentrates near its zero contour.
pub fn value_focus(spec: &NetworkSpec, theta: &ParamVector) -> impl Fn(&SampleBatch) -> Vec<f64> + Send + Sync + 'static {
    let spec = spec.clone();
    let theta = theta.clone();
    move |batch: &SampleBatch| {
        let inputs = batch.input_matrix();
        network::forward(&spec, &theta, &inputs).expect("focus forward shapes")
    }
}
