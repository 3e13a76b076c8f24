//! Deterministic grid-based semi-Lagrangian baseline with directionwise
//! degree-3 Lagrange interpolation and the same 2d-direction diffusion
//! stencil as the neural solver.
//!
//! Advection with a constant velocity splits exactly into per-axis shifts, so
//! one step is: shift the field by `−a_i·Δt` along each axis (cubic Lagrange
//! interpolation on the uniform grid), then, when diffusion is present,
//! replace the field with the mean of its `2d` copies shifted by
//! `±√(2dσΔt)` along each axis — the grid realization of the diffusion-feet
//! average. Every 1D line is independent, so sweeps parallelize over lines
//! with writes into disjoint regions.

use std::io::{Read, Write};
use std::path::Path;

use crate::characteristics::{AdvectionField, BoundaryKind, DomainShape};
use crate::metrics::{self, ErrorReport, ProbeKind};
use crate::parallel;
use crate::scenarios::Scenario;

/// Default cap on grid values (`n_x^d`), a desk-scale memory budget.
pub const DEFAULT_MEM_CAP: usize = 200_000_000;

#[derive(Debug, thiserror::Error)]
pub enum ClassicalError {
    #[error("grid error: {0}")]
    Grid(String),
    #[error("non-finite grid values")]
    NonFinite,
    #[error("classical solver needs a constant velocity field")]
    UnsupportedField,
    #[error("classical solver needs a box domain")]
    UnsupportedDomain,
    #[error("grid of {requested} values exceeds the memory cap of {cap}")]
    MemoryCap { requested: usize, cap: usize },
    #[error("scenario has no exact solution to compare against")]
    MissingExact,
    #[error("grid file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("grid file parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

/// Boundary handling for grid axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridBc {
    Periodic,
    /// Out-of-range stencil nodes repeat the boundary value.
    Clamped,
}

/// Tensor-product grid with per-axis node counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    counts: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    bc: Vec<GridBc>,
}

impl Grid {
    pub fn new(counts: Vec<usize>, lower: Vec<f64>, upper: Vec<f64>, bc: Vec<GridBc>) -> Result<Self, ClassicalError> {
        let d = counts.len();
        if lower.len() != d || upper.len() != d || bc.len() != d {
            return Err(ClassicalError::Grid("axis descriptor lengths differ".into()));
        }
        if counts.iter().any(|&n| n < 4) {
            return Err(ClassicalError::Grid("need at least 4 nodes per axis for the cubic stencil".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(ClassicalError::Grid("upper bounds must exceed lower bounds".into()));
        }
        Ok(Self { counts, lower, upper, bc })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn bc(&self) -> &[GridBc] {
        &self.bc
    }

    /// Node spacing: periodic axes omit the duplicate endpoint.
    pub fn spacing(&self, axis: usize) -> f64 {
        let extent = self.upper[axis] - self.lower[axis];
        match self.bc[axis] {
            GridBc::Periodic => extent / self.counts[axis] as f64,
            GridBc::Clamped => extent / (self.counts[axis] - 1) as f64,
        }
    }

    pub fn node(&self, axis: usize, index: usize) -> f64 {
        self.lower[axis] + self.spacing(axis) * index as f64
    }

    pub fn total_points(&self) -> usize {
        self.counts.iter().product()
    }

    /// Row-major strides (last axis fastest).
    fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for k in (0..d.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.counts[k + 1];
        }
        s
    }

    fn coords_of(&self, mut flat: usize, out: &mut [usize]) {
        for (k, &s) in self.strides().iter().enumerate() {
            out[k] = flat / s;
            flat %= s;
        }
    }
}

/// Grid plus its value array in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, ClassicalError> {
        if values.len() != grid.total_points() {
            return Err(ClassicalError::Grid(format!(
                "value array of length {} for a grid of {} points",
                values.len(),
                grid.total_points()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node (parallel over nodes).
    pub fn sample(grid: Grid, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Self {
        let d = grid.dim();
        let total = grid.total_points();
        let values = parallel::map_range(total, |flat| {
            let mut idx = vec![0usize; d];
            grid.coords_of(flat, &mut idx);
            let x: Vec<f64> = (0..d).map(|a| grid.node(a, idx[a])).collect();
            f(&x)
        });
        Self { grid, values }
    }
}

/// Value at local coordinate `s` (node units, nodes at 0, 1, 2, 3) of the
/// unique cubic through the four node values.
pub fn lagrange3_interp(node_values: [f64; 4], s: f64) -> f64 {
    let w = lagrange3_weights(s);
    w[0] * node_values[0] + w[1] * node_values[1] + w[2] * node_values[2] + w[3] * node_values[3]
}

fn lagrange3_weights(s: f64) -> [f64; 4] {
    [
        -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
        s * (s - 2.0) * (s - 3.0) / 2.0,
        -s * (s - 1.0) * (s - 3.0) / 2.0,
        s * (s - 1.0) * (s - 2.0) / 6.0,
    ]
}

/// Shift along one axis with a per-line displacement:
/// `new(x) = old(x + δ(line)·e_axis)`. The displacement is constant within a
/// line, so the four interpolation weights are computed once per line.
pub fn shift_axis_per_line(
    field: &GridField,
    axis: usize,
    displacement: &(dyn Fn(&[usize]) -> f64 + Sync),
) -> Result<GridField, ClassicalError> {
    let grid = &field.grid;
    let d = grid.dim();
    if axis >= d {
        return Err(ClassicalError::Grid(format!("axis {axis} out of range for dimension {d}")));
    }
    let n = grid.counts[axis];
    let inner: usize = grid.counts[axis + 1..].iter().product();
    let block = n * inner;
    let h = grid.spacing(axis);
    let bc = grid.bc[axis];
    let n_isize = n as isize;

    let mut out = vec![0.0; field.values.len()];
    parallel::for_chunks_mut(&mut out, block, |o, chunk| {
        // decompose the outer index into the coordinates of axes before `axis`
        let mut idx = vec![0usize; d];
        let mut rem = o;
        for k in (0..axis).rev() {
            idx[k] = rem % grid.counts[k];
            rem /= grid.counts[k];
        }
        let src = &field.values[o * block..(o + 1) * block];
        let mut line = vec![0.0f64; n];
        for i in 0..inner {
            // coordinates of axes after `axis`
            let mut r = i;
            for k in (axis + 1..d).rev() {
                idx[k] = r % grid.counts[k];
                r /= grid.counts[k];
            }
            idx[axis] = 0;
            let delta = displacement(&idx);
            let p_shift = delta / h;
            let d_int = p_shift.floor();
            let frac = p_shift - d_int;
            let w = lagrange3_weights(1.0 + frac);
            let d_int = d_int as isize;
            for (j, v) in line.iter_mut().enumerate() {
                let base = j as isize + d_int;
                let mut acc = 0.0;
                for (m, &wm) in w.iter().enumerate() {
                    let raw = base - 1 + m as isize;
                    let node = match bc {
                        GridBc::Periodic => raw.rem_euclid(n_isize) as usize,
                        GridBc::Clamped => raw.clamp(0, n_isize - 1) as usize,
                    };
                    acc += wm * src[node * inner + i];
                }
                *v = acc;
            }
            for (j, &v) in line.iter().enumerate() {
                chunk[j * inner + i] = v;
            }
        }
    });
    Ok(GridField { grid: grid.clone(), values: out })
}

/// Uniform shift along one axis: `new(x) = old(x + δ·e_axis)`.
pub fn shift_axis(field: &GridField, axis: usize, delta: f64) -> Result<GridField, ClassicalError> {
    shift_axis_per_line(field, axis, &move |_idx: &[usize]| delta)
}

/// One semi-Lagrangian step with constant velocity `a` and diffusion `σ`:
/// directionwise advection shifts followed by the 2d-feet diffusion average.
pub fn sl_sweep_step(field: &GridField, a: &[f64], sigma: f64, dt: f64) -> Result<GridField, ClassicalError> {
    let d = field.grid.dim();
    if a.len() != d {
        return Err(ClassicalError::Grid(format!("velocity of dimension {} on a {d}-d grid", a.len())));
    }
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(ClassicalError::NonFinite);
    }
    let mut current = field.clone();
    for (axis, &ai) in a.iter().enumerate() {
        if ai != 0.0 {
            current = shift_axis(&current, axis, -ai * dt)?;
        }
    }
    if sigma > 0.0 {
        let r = (2.0 * d as f64 * sigma * dt).sqrt();
        let mut acc = vec![0.0; current.values.len()];
        for axis in 0..d {
            for offset in [r, -r] {
                let shifted = shift_axis(&current, axis, offset)?;
                for (dst, v) in acc.iter_mut().zip(&shifted.values) {
                    *dst += v;
                }
            }
        }
        let scale = 1.0 / (2.0 * d as f64);
        acc.iter_mut().for_each(|v| *v *= scale);
        current.values = acc;
    }
    Ok(current)
}

/// Runs the grid baseline on a scenario with constant velocity and a box
/// domain: samples `u0`, applies `n_t` sweep steps, and reports grid-node
/// relative errors against the exact solution at the final time.
pub fn sl_run(scenario: &Scenario, n_x: usize, n_t: usize, mem_cap: usize) -> Result<(GridField, ErrorReport), ClassicalError> {
    let d = scenario.domain.dim();
    let requested = n_x.checked_pow(d as u32).ok_or(ClassicalError::MemoryCap { requested: usize::MAX, cap: mem_cap })?;
    if requested > mem_cap {
        return Err(ClassicalError::MemoryCap { requested, cap: mem_cap });
    }
    if scenario.domain.shape() != DomainShape::Box {
        return Err(ClassicalError::UnsupportedDomain);
    }
    let velocity = match &scenario.field {
        AdvectionField::Constant { velocity, .. } => {
            let mut a = vec![0.0; d];
            velocity(&[], &mut a);
            a
        }
        _ => return Err(ClassicalError::UnsupportedField),
    };
    let exact = scenario.exact.as_ref().ok_or(ClassicalError::MissingExact)?;

    let bc: Vec<GridBc> = scenario
        .domain
        .boundary()
        .iter()
        .map(|b| match b {
            BoundaryKind::Periodic => GridBc::Periodic,
            BoundaryKind::Open => GridBc::Clamped,
        })
        .collect();
    let lower = scenario.domain.lower().to_vec();
    let upper: Vec<f64> = lower.iter().zip(scenario.domain.extent()).map(|(l, e)| l + e).collect();
    let grid = Grid::new(vec![n_x; d], lower, upper, bc)?;

    let u0 = &scenario.u0;
    let mut field = GridField::sample(grid.clone(), &|x| u0(x, &[]));
    let dt = scenario.t_final / n_t as f64;
    for _ in 0..n_t {
        field = sl_sweep_step(&field, &velocity, scenario.sigma, dt)?;
    }

    let t_final = scenario.t_final;
    let exact_field = GridField::sample(grid, &|x| exact(t_final, x, &[]));
    let report = match scenario.error_metric {
        crate::metrics::ErrorMetric::PointwiseRelative => {
            metrics::relative_error_values(&field.values, &exact_field.values, ProbeKind::GridNodes)?
        }
        crate::metrics::ErrorMetric::NormRelative => {
            metrics::norm_relative_error(&field.values, &exact_field.values, ProbeKind::GridNodes)?
        }
    };
    Ok((field, report))
}

/// Dumps a field as a flat binary of doubles with a small header
/// (dimension, per-axis counts and bounds).
pub fn dump_grid(path: &Path, field: &GridField) -> Result<(), ClassicalError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"NSLGRID1")?;
    let g = &field.grid;
    out.write_all(&(g.dim() as u32).to_le_bytes())?;
    for a in 0..g.dim() {
        out.write_all(&(g.counts[a] as u64).to_le_bytes())?;
        out.write_all(&g.lower[a].to_le_bytes())?;
        out.write_all(&g.upper[a].to_le_bytes())?;
    }
    for v in &field.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a field written by [`dump_grid`]; boundary modes are supplied by the
/// caller (the header stores only dimension, counts, and bounds).
pub fn load_grid(path: &Path, bc: Vec<GridBc>) -> Result<GridField, ClassicalError> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != b"NSLGRID1" {
        return Err(ClassicalError::Parse("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf)?;
    let d = u32::from_le_bytes(u32buf) as usize;
    if bc.len() != d {
        return Err(ClassicalError::Parse(format!("{} boundary modes for dimension {d}", bc.len())));
    }
    let mut counts = Vec::with_capacity(d);
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    let mut u64buf = [0u8; 8];
    for _ in 0..d {
        input.read_exact(&mut u64buf)?;
        counts.push(u64::from_le_bytes(u64buf) as usize);
        input.read_exact(&mut u64buf)?;
        lower.push(f64::from_le_bytes(u64buf));
        input.read_exact(&mut u64buf)?;
        upper.push(f64::from_le_bytes(u64buf));
    }
    let grid = Grid::new(counts, lower, upper, bc)?;
    let mut values = vec![0.0; grid.total_points()];
    for v in values.iter_mut() {
        input.read_exact(&mut u64buf)?;
        *v = f64::from_le_bytes(u64buf);
    }
    GridField::new(grid, values)
}
