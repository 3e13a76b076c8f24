//! Small fully-connected networks `u_θ(x, μ)`: batch evaluation, parameter
//! Jacobians, and input gradients, with the activation functions used by the
//! solver (tanh, sin, and a regularized hat for localized solutions).
//!
//! The degrees of freedom live in a flat [`ParamVector`] laid out layer by
//! layer (weights row-major, then biases), so the whole state of a time step
//! is one vector that can be checkpointed and warm-started. Jacobians are
//! assembled row by row with one reverse pass per collocation point; at the
//! scales this solver targets the explicit `K×N` matrix fits comfortably in
//! memory and feeds the Gram product directly.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::numerics::{DenseMatrix, RngStream};
use crate::parallel;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse: {0}")]
    Parse(String),
}

/// Activation function applied to every hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    Tanh,
    Sin,
    /// `x ↦ exp(−12·tanh(x²/2))`, a smooth bump that saturates to `exp(−12)`
    /// away from the origin. Well suited to localized solutions.
    RegularizedHat,
}

impl ActivationKind {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Sin => x.sin(),
            ActivationKind::RegularizedHat => (-12.0 * (0.5 * x * x).tanh()).exp(),
        }
    }

    pub fn deriv(self, x: f64) -> f64 {
        match self {
            ActivationKind::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Sin => x.cos(),
            ActivationKind::RegularizedHat => {
                let t = (0.5 * x * x).tanh();
                -12.0 * x * (1.0 - t * t) * (-12.0 * t).exp()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sin => "sin",
            ActivationKind::RegularizedHat => "regularized_hat",
        }
    }

    pub fn parse(s: &str) -> Result<Self, NetworkError> {
        match s {
            "tanh" => Ok(ActivationKind::Tanh),
            "sin" => Ok(ActivationKind::Sin),
            "regularized_hat" | "hat" => Ok(ActivationKind::RegularizedHat),
            other => Err(NetworkError::Parse(format!("unknown activation '{other}'"))),
        }
    }
}

/// Shape of the network: input dimension (space plus parameter dimensions),
/// hidden widths, and the activation. The output is always scalar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub activation: ActivationKind,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, layer_sizes: Vec<usize>, activation: ActivationKind) -> Result<Self, NetworkError> {
        if input_dim == 0 {
            return Err(NetworkError::Spec("input_dim must be at least 1".into()));
        }
        if layer_sizes.iter().any(|&w| w == 0) {
            return Err(NetworkError::Spec("all hidden widths must be at least 1".into()));
        }
        Ok(Self { input_dim, layer_sizes, activation })
    }

    /// Total number of degrees of freedom: `Σ (fan_in·fan_out + fan_out)`
    /// over all layers including the scalar output layer.
    pub fn dof_count(&self) -> usize {
        self.layer_dims().map(|(fi, fo)| fi * fo + fo).sum()
    }

    /// `(fan_in, fan_out)` per layer, output layer last.
    fn layer_dims(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let widths: Vec<usize> = std::iter::once(self.input_dim)
            .chain(self.layer_sizes.iter().copied())
            .chain(std::iter::once(1))
            .collect();
        (0..widths.len() - 1).map(move |l| (widths[l], widths[l + 1]))
    }

    fn layers(&self) -> Vec<LayerSlice> {
        let mut out = Vec::new();
        let mut offset = 0;
        for (fan_in, fan_out) in self.layer_dims() {
            let w = offset;
            let b = offset + fan_in * fan_out;
            offset = b + fan_out;
            out.push(LayerSlice { w, b, fan_in, fan_out });
        }
        out
    }

    pub fn max_width(&self) -> usize {
        self.layer_sizes
            .iter()
            .copied()
            .chain([self.input_dim, 1])
            .max()
            .unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerSlice {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

/// Flat vector of network degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Glorot-uniform weights (`±√(6/(fan_in+fan_out))`) with zero biases,
/// drawn deterministically from the stream.
pub fn init_params(spec: &NetworkSpec, rng: &mut RngStream) -> ParamVector {
    let mut values = vec![0.0; spec.dof_count()];
    for layer in spec.layers() {
        let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        for k in 0..layer.fan_in * layer.fan_out {
            values[layer.w + k] = rng.uniform_one(-limit, limit);
        }
        // biases stay zero
    }
    ParamVector(values)
}

/// Per-point scratch space reused across a chunk of collocation points.
struct Workspace {
    acts: Vec<Vec<f64>>,
    dacts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_next: Vec<f64>,
}

impl Workspace {
    fn new(spec: &NetworkSpec) -> Self {
        let mut acts = vec![vec![0.0; spec.input_dim]];
        let mut dacts = Vec::new();
        for &w in &spec.layer_sizes {
            acts.push(vec![0.0; w]);
            dacts.push(vec![0.0; w]);
        }
        let width = spec.max_width();
        Self { acts, dacts, delta: vec![0.0; width], delta_next: vec![0.0; width] }
    }
}

fn check_batch(spec: &NetworkSpec, theta: &ParamVector, batch: &DenseMatrix) -> Result<(), NetworkError> {
    if batch.cols() != spec.input_dim {
        return Err(NetworkError::Shape(format!(
            "batch has {} columns, spec expects input_dim {}",
            batch.cols(),
            spec.input_dim
        )));
    }
    if theta.len() != spec.dof_count() {
        return Err(NetworkError::Shape(format!(
            "parameter vector of length {} for a spec with {} dofs",
            theta.len(),
            spec.dof_count()
        )));
    }
    Ok(())
}

/// Forward pass for one point; fills the workspace with activations and
/// activation derivatives so a reverse pass can follow.
fn forward_point(spec: &NetworkSpec, layers: &[LayerSlice], theta: &[f64], x: &[f64], ws: &mut Workspace) -> f64 {
    ws.acts[0].copy_from_slice(x);
    let n_hidden = spec.layer_sizes.len();
    for (l, layer) in layers[..n_hidden].iter().enumerate() {
        // split_at_mut keeps the borrow checker happy: input acts vs output acts
        let (prev_slice, rest) = ws.acts.split_at_mut(l + 1);
        let input = &prev_slice[l];
        let out = &mut rest[0];
        for o in 0..layer.fan_out {
            let wrow = &theta[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
            let z = crate::numerics::dot(wrow, input) + theta[layer.b + o];
            out[o] = spec.activation.eval(z);
            ws.dacts[l][o] = spec.activation.deriv(z);
        }
    }
    let out_layer = layers[n_hidden];
    let input = &ws.acts[n_hidden];
    crate::numerics::dot(&theta[out_layer.w..out_layer.w + out_layer.fan_in], input) + theta[out_layer.b]
}

/// Reverse pass for one point. Writes `∂u/∂θ` into `jac_row` (when given) and
/// `∂u/∂x` into `input_grad` (when given).
fn backward_point(
    spec: &NetworkSpec,
    layers: &[LayerSlice],
    theta: &[f64],
    ws: &mut Workspace,
    mut jac_row: Option<&mut [f64]>,
    input_grad: Option<&mut [f64]>,
) {
    let n_hidden = spec.layer_sizes.len();
    let out_layer = layers[n_hidden];
    // Output layer: ∂u/∂W_out = h_L, ∂u/∂b_out = 1.
    if let Some(row) = jac_row.as_deref_mut() {
        for i in 0..out_layer.fan_in {
            row[out_layer.w + i] = ws.acts[n_hidden][i];
        }
        row[out_layer.b] = 1.0;
    }
    // delta = ∂u/∂h_L
    let width = out_layer.fan_in;
    ws.delta[..width].copy_from_slice(&theta[out_layer.w..out_layer.w + width]);

    for l in (0..n_hidden).rev() {
        let layer = layers[l];
        // g = ∂u/∂z_l = delta ⊙ act'(z_l)
        for o in 0..layer.fan_out {
            ws.delta[o] *= ws.dacts[l][o];
        }
        if let Some(row) = jac_row.as_deref_mut() {
            for o in 0..layer.fan_out {
                let g = ws.delta[o];
                let wrow = &mut row[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
                for (dst, &a) in wrow.iter_mut().zip(&ws.acts[l]) {
                    *dst = g * a;
                }
                row[layer.b + o] = g;
            }
        }
        // delta_next = W_lᵀ g
        let prev_width = layer.fan_in;
        ws.delta_next[..prev_width].iter_mut().for_each(|v| *v = 0.0);
        for o in 0..layer.fan_out {
            let g = ws.delta[o];
            let wrow = &theta[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
            for (dst, &w) in ws.delta_next[..prev_width].iter_mut().zip(wrow) {
                *dst += g * w;
            }
        }
        ws.delta[..prev_width].copy_from_slice(&ws.delta_next[..prev_width]);
    }
    if let Some(grad) = input_grad {
        grad.copy_from_slice(&ws.delta[..spec.input_dim]);
    }
}

/// Evaluates the network at every row of `batch` (K × input_dim).
pub fn forward(spec: &NetworkSpec, theta: &ParamVector, batch: &DenseMatrix) -> Result<Vec<f64>, NetworkError> {
    check_batch(spec, theta, batch)?;
    let layers = spec.layers();
    let k = batch.rows();
    let out = parallel::chunk_partials(k, parallel::REDUCE_CHUNK, |r| {
        let mut ws = Workspace::new(spec);
        r.map(|i| forward_point(spec, &layers, theta.as_slice(), batch.row(i), &mut ws))
            .collect::<Vec<f64>>()
    });
    Ok(out.into_iter().flatten().collect())
}

/// K × N matrix whose row `k` is `∂u(X_k)/∂θ`.
pub fn param_jacobian(spec: &NetworkSpec, theta: &ParamVector, batch: &DenseMatrix) -> Result<DenseMatrix, NetworkError> {
    Ok(forward_with_jacobian(spec, theta, batch)?.1)
}

/// Fused forward + parameter Jacobian (one reverse pass per point).
pub fn forward_with_jacobian(
    spec: &NetworkSpec,
    theta: &ParamVector,
    batch: &DenseMatrix,
) -> Result<(Vec<f64>, DenseMatrix), NetworkError> {
    check_batch(spec, theta, batch)?;
    let layers = spec.layers();
    let k = batch.rows();
    let n = spec.dof_count();
    let mut jac = DenseMatrix::zeros(k, n);
    let mut values = vec![0.0; k];
    {
        let values_chunks: Vec<&mut [f64]> = values.chunks_mut(parallel::REDUCE_CHUNK).collect();
        let jac_data = jac.as_mut_slice();
        // pair (jacobian rows, value slots) chunk by chunk
        let pairs: Vec<(&mut [f64], &mut [f64])> = jac_data
            .chunks_mut(parallel::REDUCE_CHUNK * n)
            .zip(values_chunks)
            .map(|(j, v)| (j, v))
            .collect();
        parallel_pairs(pairs, |ci, (jchunk, vchunk)| {
            let mut ws = Workspace::new(spec);
            let base = ci * parallel::REDUCE_CHUNK;
            for (local, v) in vchunk.iter_mut().enumerate() {
                let i = base + local;
                *v = forward_point(spec, &layers, theta.as_slice(), batch.row(i), &mut ws);
                let row = &mut jchunk[local * n..(local + 1) * n];
                backward_point(spec, &layers, theta.as_slice(), &mut ws, Some(row), None);
            }
        });
    }
    Ok((values, jac))
}

/// K × input_dim matrix whose row `k` is `∇_X u(X_k)`.
pub fn input_gradient(spec: &NetworkSpec, theta: &ParamVector, batch: &DenseMatrix) -> Result<DenseMatrix, NetworkError> {
    check_batch(spec, theta, batch)?;
    let layers = spec.layers();
    let k = batch.rows();
    let d = spec.input_dim;
    let mut grads = DenseMatrix::zeros(k, d);
    parallel::for_chunks_mut(grads.as_mut_slice(), parallel::REDUCE_CHUNK * d, |ci, chunk| {
        let mut ws = Workspace::new(spec);
        let base = ci * parallel::REDUCE_CHUNK;
        for local in 0..chunk.len() / d {
            let i = base + local;
            forward_point(spec, &layers, theta.as_slice(), batch.row(i), &mut ws);
            backward_point(spec, &layers, theta.as_slice(), &mut ws, None, Some(&mut chunk[local * d..(local + 1) * d]));
        }
    });
    Ok(grads)
}

/// Parallel iteration over pre-split mutable chunk pairs, in index order.
fn parallel_pairs<T: Send>(pairs: Vec<T>, f: impl Fn(usize, T) + Send + Sync) {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pairs.into_par_iter().enumerate().for_each(|(i, p)| f(i, p));
    }
    #[cfg(not(feature = "parallel"))]
    {
        pairs.into_iter().enumerate().for_each(|(i, p)| f(i, p));
    }
}

/// Writes spec shape, activation name, and the flat parameter list to a text
/// checkpoint. Doubles are printed in shortest round-trip form, so a reload is
/// bit-exact.
pub fn save_params(path: &Path, spec: &NetworkSpec, theta: &ParamVector) -> Result<(), NetworkError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "nsl-params v1")?;
    writeln!(out, "activation {}", spec.activation.name())?;
    writeln!(out, "input_dim {}", spec.input_dim)?;
    write!(out, "layers")?;
    for w in &spec.layer_sizes {
        write!(out, " {w}")?;
    }
    writeln!(out)?;
    writeln!(out, "values {}", theta.len())?;
    for v in theta.as_slice() {
        writeln!(out, "{v:?}")?;
    }
    Ok(())
}

/// Reads a checkpoint written by [`save_params`].
pub fn load_params(path: &Path) -> Result<(NetworkSpec, ParamVector), NetworkError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let mut next = |what: &str| -> Result<String, NetworkError> {
        lines
            .next()
            .ok_or_else(|| NetworkError::Parse(format!("missing {what}")))?
            .map_err(NetworkError::Io)
    };
    let magic = next("header")?;
    if magic.trim() != "nsl-params v1" {
        return Err(NetworkError::Parse(format!("bad header '{magic}'")));
    }
    let act_line = next("activation")?;
    let activation = ActivationKind::parse(
        act_line.strip_prefix("activation ").ok_or_else(|| NetworkError::Parse("activation line".into()))?,
    )?;
    let dim_line = next("input_dim")?;
    let input_dim: usize = dim_line
        .strip_prefix("input_dim ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| NetworkError::Parse("input_dim line".into()))?;
    let layers_line = next("layers")?;
    let layer_sizes: Vec<usize> = layers_line
        .strip_prefix("layers")
        .ok_or_else(|| NetworkError::Parse("layers line".into()))?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| NetworkError::Parse(format!("layer width: {e}"))))
        .collect::<Result<_, _>>()?;
    let count_line = next("values count")?;
    let count: usize = count_line
        .strip_prefix("values ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| NetworkError::Parse("values line".into()))?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let line = next("parameter value")?;
        values.push(
            line.trim()
                .parse::<f64>()
                .map_err(|e| NetworkError::Parse(format!("parameter value: {e}")))?,
        );
    }
    let spec = NetworkSpec::new(input_dim, layer_sizes, activation)?;
    if spec.dof_count() != values.len() {
        return Err(NetworkError::Parse(format!(
            "checkpoint holds {} values but spec has {} dofs",
            values.len(),
            spec.dof_count()
        )));
    }
    Ok((spec, ParamVector(values)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(input: usize, layers: Vec<usize>, act: ActivationKind) -> NetworkSpec {
        NetworkSpec::new(input, layers, act).unwrap()
    }

    fn batch_of(rows: Vec<Vec<f64>>) -> DenseMatrix {
        let cols = rows[0].len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        DenseMatrix::from_vec(rows.len(), cols, flat).unwrap()
    }

    #[test]
    fn dof_arithmetic() {
        let s = spec(3, vec![30, 30], ActivationKind::Tanh);
        assert_eq!(s.dof_count(), 3 * 30 + 30 + 30 * 30 + 30 + 30 + 1);
        assert_eq!(s.dof_count(), 1081);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let s = spec(2, vec![8, 8], ActivationKind::Sin);
        let a = init_params(&s, &mut RngStream::new(3, 1));
        let b = init_params(&s, &mut RngStream::new(3, 1));
        assert_eq!(a, b);
        // bias slots: per layer, after the weight block
        let layers = s.layers();
        for layer in layers {
            for o in 0..layer.fan_out {
                assert_eq!(a.0[layer.b + o], 0.0);
            }
        }
        let limit01 = (6.0f64 / (2 + 8) as f64).sqrt();
        assert!(a.0[..16].iter().all(|w| w.abs() <= limit01));
    }

    #[test]
    fn constant_network_outputs_bias() {
        let s = spec(3, vec![5], ActivationKind::Tanh);
        let mut theta = ParamVector(vec![0.0; s.dof_count()]);
        *theta.0.last_mut().unwrap() = 2.5;
        let b = batch_of(vec![vec![0.1, -0.4, 2.0], vec![0.0, 0.0, 0.0]]);
        let v = forward(&s, &theta, &b).unwrap();
        assert_eq!(v, vec![2.5, 2.5]);
    }

    #[test]
    fn single_neuron_tanh_value() {
        // u(x) = 2 tanh(x); at x = 0.5 the value is 0.92423431452...
        let s = spec(1, vec![1], ActivationKind::Tanh);
        let theta = ParamVector(vec![1.0, 0.0, 2.0, 0.0]);
        let v = forward(&s, &theta, &batch_of(vec![vec![0.5]])).unwrap();
        assert!((v[0] - 0.924_234_314_520_019_5).abs() < 1e-12);
    }

    #[test]
    fn batch_row_matches_singleton() {
        let s = spec(2, vec![7, 3], ActivationKind::RegularizedHat);
        let theta = init_params(&s, &mut RngStream::new(11, 0));
        let big = batch_of(vec![vec![0.3, -0.2], vec![1.0, 0.5], vec![-0.7, 0.9]]);
        let one = batch_of(vec![vec![1.0, 0.5]]);
        let vb = forward(&s, &theta, &big).unwrap();
        let v1 = forward(&s, &theta, &one).unwrap();
        assert_eq!(vb[1], v1[0]);
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let s = spec(2, vec![4], ActivationKind::Tanh);
        let theta = init_params(&s, &mut RngStream::new(0, 0));
        let bad = batch_of(vec![vec![1.0, 2.0, 3.0]]);
        assert!(matches!(forward(&s, &theta, &bad), Err(NetworkError::Shape(_))));
    }

    #[test]
    fn constant_network_bias_column_is_one() {
        let s = spec(2, vec![4], ActivationKind::Tanh);
        let theta = ParamVector(vec![0.0; s.dof_count()]);
        let b = batch_of(vec![vec![0.7, -0.1], vec![0.0, 3.0]]);
        let j = param_jacobian(&s, &theta, &b).unwrap();
        let bias_col = s.dof_count() - 1;
        for k in 0..2 {
            assert_eq!(j.get(k, bias_col), 1.0);
        }
    }

    #[test]
    fn affine_model_jacobian_rows() {
        // No hidden layers: u(x) = θ₁·x + θ₂ with rows (x, 1) → at x ∈ {−1, 1}
        // the parameter Jacobian rows are (−1, 1) and (1, 1).
        let s = spec(1, vec![], ActivationKind::Tanh);
        assert_eq!(s.dof_count(), 2);
        let theta = ParamVector(vec![0.3, -0.4]);
        let j = param_jacobian(&s, &theta, &batch_of(vec![vec![-1.0], vec![1.0]])).unwrap();
        assert_eq!((j.get(0, 0), j.get(0, 1)), (-1.0, 1.0));
        assert_eq!((j.get(1, 0), j.get(1, 1)), (1.0, 1.0));
    }

    #[test]
    fn affine_input_gradient_is_slope() {
        let s = spec(1, vec![], ActivationKind::Tanh);
        let theta = ParamVector(vec![3.0, 1.0]);
        let g = input_gradient(&s, &theta, &batch_of(vec![vec![0.2], vec![-5.0]])).unwrap();
        assert_eq!(g.get(0, 0), 3.0);
        assert_eq!(g.get(1, 0), 3.0);
    }

    #[test]
    fn constant_network_zero_input_gradient() {
        let s = spec(3, vec![6, 6], ActivationKind::Sin);
        let theta = ParamVector(vec![0.0; s.dof_count()]);
        let g = input_gradient(&s, &theta, &batch_of(vec![vec![0.5, 0.5, 0.5]])).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    fn fd_check(act: ActivationKind, seed: u64) {
        let s = spec(2, vec![5, 4], act);
        let theta = init_params(&s, &mut RngStream::new(seed, 0));
        let x = batch_of(vec![vec![0.37, -0.21]]);
        let (v0, jac) = forward_with_jacobian(&s, &theta, &x).unwrap();
        let _ = v0;
        let h = 1e-6;
        for p in 0..s.dof_count() {
            let mut tp = theta.clone();
            tp.0[p] += h;
            let mut tm = theta.clone();
            tm.0[p] -= h;
            let fp = forward(&s, &tp, &x).unwrap()[0];
            let fm = forward(&s, &tm, &x).unwrap()[0];
            let fd = (fp - fm) / (2.0 * h);
            let an = jac.get(0, p);
            let scale = fd.abs().max(an.abs()).max(1.0);
            assert!(
                (fd - an).abs() / scale < 1e-5,
                "param {p}: fd {fd} vs analytic {an} ({act:?})"
            );
        }
        let grad = input_gradient(&s, &theta, &x).unwrap();
        for c in 0..2 {
            let mut xp = x.clone();
            xp.set(0, c, xp.get(0, c) + h);
            let mut xm = x.clone();
            xm.set(0, c, xm.get(0, c) - h);
            let fd = (forward(&s, &theta, &xp).unwrap()[0] - forward(&s, &theta, &xm).unwrap()[0]) / (2.0 * h);
            let an = grad.get(0, c);
            let scale = fd.abs().max(an.abs()).max(1.0);
            assert!((fd - an).abs() / scale < 1e-5, "input {c}: fd {fd} vs {an}");
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        fd_check(ActivationKind::Tanh, 21);
        fd_check(ActivationKind::Sin, 22);
        fd_check(ActivationKind::RegularizedHat, 23);
    }

    #[test]
    fn activation_values() {
        assert_eq!(ActivationKind::RegularizedHat.eval(0.0), 1.0);
        assert!((ActivationKind::RegularizedHat.eval(100.0) - (-12.0f64).exp()).abs() < 1e-10);
        assert!((ActivationKind::RegularizedHat.eval(1.0) - 0.003_905_357_747_853_434).abs() < 1e-12);
        assert!((ActivationKind::Sin.eval(std::f64::consts::FRAC_PI_2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("theta.txt");
        let s = spec(3, vec![9, 5], ActivationKind::RegularizedHat);
        let theta = init_params(&s, &mut RngStream::new(77, 2));
        save_params(&path, &s, &theta).unwrap();
        let (s2, t2) = load_params(&path).unwrap();
        assert_eq!(s, s2);
        assert_eq!(theta, t2);
    }
}
