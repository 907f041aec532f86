//! Adjoint problem, marched backwards from `T` with the same explicit step.
//!
//! The recursion is the exact transpose of the forward scheme, so the
//! gradient it produces is the derivative of the discrete functional:
//!
//! `(M/τ² + B^{k-1}/(2τ)) λ^{k-1} = (2M/τ² - K) λ^k - (M/τ² - B^{k+1}/(2τ)) λ^{k+1}
//!                                  - (w_k/τ) z_k S (u^k - ũ^k)`
//!
//! for `k = N..1`, with `λ^N = λ^{N+1} = 0`. `S` is the lumped boundary length
//! and `w_k` the trapezoid weight. The top boundary absorbs only after `t1`,
//! exactly as in the forward problem.

use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::fdgrid::FdGrid;
use crate::hybrid::{HybridOperator, HybridState, Load};
use crate::mesh::TriMesh;
use crate::wave::{check_inputs, ObservationTrace, TimeGrid, TimeSeriesField};

/// Time window `z_δ`: `1` up to `T - δ`, `0` from `T - δ/2`, and the C¹
/// cubic `1 - 3s² + 2s³` in between.
pub fn compatibility_weight(t: f64, t_final: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < t_final) {
        return Err(Error::Parameter(format!("delta = {delta} must lie in (0, {t_final})")));
    }
    Ok(window(t, t_final, delta))
}

#[inline]
pub(crate) fn window(t: f64, t_final: f64, delta: f64) -> f64 {
    let a = t_final - delta;
    let b = t_final - 0.5 * delta;
    if t <= a {
        1.0
    } else if t >= b {
        0.0
    } else {
        let s = (t - a) / (b - a);
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

/// `(u - ũ) z_δ` on the observation nodes, row-major `[level][node]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualSource {
    pub n_nodes: usize,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl ResidualSource {
    pub fn from_traces(trace: &ObservationTrace, target: &ObservationTrace, tg: &TimeGrid, delta: f64) -> Result<Self> {
        trace.check_compatible(target)?;
        if trace.n_levels() != tg.n_steps + 1 {
            return Err(Error::Shape(format!(
                "trace has {} levels, time grid {}",
                trace.n_levels(),
                tg.n_steps + 1
            )));
        }
        compatibility_weight(0.0, tg.t_final, delta)?;
        let k = trace.n_nodes();
        let mut values = Vec::with_capacity(trace.values.len());
        for n in 0..trace.n_levels() {
            let z = window(tg.time(n), tg.t_final, delta);
            let (u, ut) = (trace.level(n), target.level(n));
            values.extend(u.iter().zip(ut).map(|(a, b)| (a - b) * z));
        }
        Ok(ResidualSource { n_nodes: k, weights: trace.weights.clone(), values })
    }

    pub fn zeros(n_nodes: usize, weights: Vec<f64>, n_levels: usize) -> Self {
        ResidualSource { n_nodes, weights, values: vec![0.0; n_nodes * n_levels] }
    }

    pub fn n_levels(&self) -> usize {
        self.values.len() / self.n_nodes.max(1)
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.values[n * self.n_nodes..(n + 1) * self.n_nodes]
    }

    /// `Σ_n w_n Σ_i S_i r_i²`.
    pub fn norm_sq(&self, tg: &TimeGrid) -> f64 {
        (0..self.n_levels())
            .map(|n| tg.weight(n) * self.level(n).iter().zip(&self.weights).map(|(r, s)| s * r * r).sum::<f64>())
            .sum()
    }
}

/// One adjoint step from levels `(k, k+1)` to `k-1`; `load` holds the nodal
/// boundary forcing on the observation nodes.
pub fn adjoint_step(
    op: &HybridOperator,
    tg: &TimeGrid,
    k: usize,
    cur: &HybridState,
    old: &HybridState,
    new: &mut HybridState,
    load: &[f64],
) {
    let d = tg.damping(k);
    op.step(cur, old, new, tg.tau, d, d, Load::Observation(load));
}

/// March the adjoint from `T` to `0` with the forward scheme run in reverse
/// time, calling `observe(n, λ^n)` for `n = N, N-1, ..., 0`.
///
/// Away from the switch of the top boundary at `t1` this is the exact
/// transpose of the forward recursion.
pub fn adjoint_sweep(
    op: &HybridOperator,
    tg: &TimeGrid,
    residual: &ResidualSource,
    mut observe: impl FnMut(usize, &HybridState),
) -> Result<()> {
    if residual.n_nodes != op.obs_nodes.len() || residual.n_levels() != tg.n_steps + 1 {
        return Err(Error::Shape(format!(
            "residual is {}x{}, expected {}x{}",
            residual.n_levels(),
            residual.n_nodes,
            tg.n_steps + 1,
            op.obs_nodes.len()
        )));
    }
    let n_steps = tg.n_steps;
    let mut old = op.zero_state(); // λ^{k+1}
    let mut cur = op.zero_state(); // λ^k
    let mut new = op.zero_state(); // λ^{k-1}
    let mut load = vec![0.0; residual.n_nodes];
    observe(n_steps, &cur);
    for k in (1..=n_steps).rev() {
        let scale = -tg.weight(k) / tg.tau;
        for ((l, r), s) in load.iter_mut().zip(residual.level(k)).zip(&residual.weights) {
            *l = scale * s * r;
        }
        adjoint_step(op, tg, k, &cur, &old, &mut new, &load);
        let sum: f64 = new.fd.iter().sum::<f64>() + new.fe.iter().sum::<f64>();
        if !sum.is_finite() {
            return Err(Error::Divergence { step: k - 1 });
        }
        std::mem::swap(&mut old, &mut cur);
        std::mem::swap(&mut cur, &mut new);
        observe(k - 1, &cur);
    }
    Ok(())
}

/// Adjoint solve returning the full history indexed by forward time.
pub fn adjoint_solve(
    mesh: &TriMesh,
    grid: &FdGrid,
    c: &CoefficientField,
    tg: &TimeGrid,
    residual: &ResidualSource,
) -> Result<TimeSeriesField> {
    check_inputs(mesh, c, tg)?;
    let op = HybridOperator::new(mesh, grid, c)?;
    let n = op.n_union();
    let mut hist = TimeSeriesField::zeros(n, tg.n_steps + 1);
    let mut buf = Vec::with_capacity(n);
    adjoint_sweep(&op, tg, residual, |k, s| {
        op.to_union(s, &mut buf);
        hist.level_mut(k).copy_from_slice(&buf);
    })?;
    Ok(hist)
}
