//! Forward wave solver: `c u_tt - Δu = 0` with a plane-wave Neumann source on
//! the top boundary, first-order absorbing top/bottom boundaries and
//! homogeneous Neumann walls elsewhere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::fdgrid::FdGrid;
use crate::hybrid::{Damping, HybridOperator, HybridState, Load};
use crate::mesh::TriMesh;

pub const DEFAULT_CFL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub tau: f64,
    pub n_steps: usize,
    /// Source cutoff: the top boundary radiates the source up to `t1` and
    /// absorbs afterwards.
    pub t1: f64,
    pub cfl_safety: f64,
}

impl TimeGrid {
    /// Largest step `τ = T/N` with `τ <= cfl_safety * h_min`.
    pub fn for_mesh(t_final: f64, h_min: f64, cfl_safety: f64, t1: f64) -> Result<Self> {
        if !(cfl_safety > 0.0 && h_min > 0.0) {
            return Err(Error::Parameter(format!("cfl_safety {cfl_safety} and h {h_min} must be positive")));
        }
        let n = (t_final / (cfl_safety * h_min) - 1e-9).ceil().max(1.0) as usize;
        Self::with_steps(t_final, n, t1, cfl_safety)
    }

    pub fn with_steps(t_final: f64, n_steps: usize, t1: f64, cfl_safety: f64) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) || n_steps == 0 {
            return Err(Error::Parameter(format!("invalid time grid T = {t_final}, N = {n_steps}")));
        }
        if !(t1 > 0.0 && t1 < t_final) {
            return Err(Error::Parameter(format!("source cutoff t1 = {t1} must lie in (0, {t_final})")));
        }
        Ok(TimeGrid { t_final, tau: t_final / n_steps as f64, n_steps, t1, cfl_safety })
    }

    #[inline]
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| self.time(n)).collect()
    }

    /// Trapezoid weight of level `n`.
    #[inline]
    pub fn weight(&self, n: usize) -> f64 {
        if n == 0 || n == self.n_steps {
            0.5 * self.tau
        } else {
            self.tau
        }
    }

    /// Boundary condition in force at level `n`.
    #[inline]
    pub fn damping(&self, n: usize) -> Damping {
        Damping { top: self.time(n) > self.t1, bottom: true }
    }

    /// `τ <= cfl_safety * h_min * sqrt(min c)`.
    pub fn check_cfl(&self, h_min: f64, c_min: f64) -> Result<()> {
        let bound = self.cfl_safety * h_min * c_min.sqrt();
        if self.tau > bound * (1.0 + 1e-9) {
            return Err(Error::Stability { tau: self.tau, bound });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub omega: f64,
    pub amplitude: f64,
}

impl SourceSpec {
    pub fn new(omega: f64, amplitude: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Parameter(format!("omega = {omega} must be positive")));
        }
        Ok(SourceSpec { omega, amplitude })
    }

    pub fn duration(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

/// `amplitude * sin(ωt)` on `(0, 2π/ω)`, zero elsewhere.
pub fn plane_wave_source(t: f64, spec: &SourceSpec) -> f64 {
    if t > 0.0 && t < spec.duration() {
        spec.amplitude * (spec.omega * t).sin()
    } else {
        0.0
    }
}

/// Nodal history on the union node set, `n_steps + 1` levels.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesField {
    pub n_nodes: usize,
    pub data: Vec<f64>,
}

impl TimeSeriesField {
    pub fn with_capacity(n_nodes: usize, n_levels: usize) -> Self {
        TimeSeriesField { n_nodes, data: Vec::with_capacity(n_nodes * n_levels) }
    }

    pub fn zeros(n_nodes: usize, n_levels: usize) -> Self {
        TimeSeriesField { n_nodes, data: vec![0.0; n_nodes * n_levels] }
    }

    pub fn n_levels(&self) -> usize {
        self.data.len().checked_div(self.n_nodes).unwrap_or(0)
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.data[n * self.n_nodes..(n + 1) * self.n_nodes]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.n_nodes..(n + 1) * self.n_nodes]
    }

    pub fn push(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.n_nodes);
        self.data.extend_from_slice(values);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `u` on the top and bottom rows of `D` at every level.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationTrace {
    pub nodes: Vec<[f64; 2]>,
    /// Lumped boundary length of each node.
    pub weights: Vec<f64>,
    /// `true` for nodes on the top side.
    pub top: Vec<bool>,
    pub times: Vec<f64>,
    /// Row-major `[level][node]`.
    pub values: Vec<f64>,
}

impl ObservationTrace {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_levels(&self) -> usize {
        self.times.len()
    }

    pub fn level(&self, n: usize) -> &[f64] {
        let k = self.nodes.len();
        &self.values[n * k..(n + 1) * k]
    }

    pub fn empty_for(op: &HybridOperator, tg: &TimeGrid) -> Self {
        let nodes = op.obs_nodes.iter().map(|&g| op.grid.coord(g)).collect();
        let top = op.obs_nodes.iter().map(|&g| op.grid.on_top(g)).collect();
        ObservationTrace {
            nodes,
            weights: op.obs_weight.clone(),
            top,
            times: tg.times(),
            values: Vec::with_capacity(op.obs_nodes.len() * (tg.n_steps + 1)),
        }
    }

    /// Checks that two traces live on the same nodes and time levels.
    pub fn check_compatible(&self, other: &ObservationTrace) -> Result<()> {
        if self.nodes != other.nodes || self.weights != other.weights {
            return Err(Error::Shape("traces observe different node sets".into()));
        }
        if self.times.len() != other.times.len()
            || self.times.iter().zip(&other.times).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::Shape(format!(
                "traces use different time grids ({} vs {} levels)",
                self.times.len(),
                other.times.len()
            )));
        }
        if self.values.len() != other.values.len() {
            return Err(Error::Shape("trace value arrays differ in length".into()));
        }
        Ok(())
    }
}

fn check_finite(s: &HybridState, step: usize) -> Result<()> {
    let sum: f64 = s.fd.iter().sum::<f64>() + s.fe.iter().sum::<f64>();
    if sum.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { step })
    }
}

/// Checks the coefficient against the mesh and the step against CFL.
pub fn check_inputs(mesh: &TriMesh, c: &CoefficientField, tg: &TimeGrid) -> Result<()> {
    if c.values.len() != mesh.n_triangles() {
        return Err(Error::Shape(format!(
            "coefficient has {} values for {} triangles",
            c.values.len(),
            mesh.n_triangles()
        )));
    }
    if c.min() < 1.0 || !c.max().is_finite() {
        return Err(Error::Parameter(format!("coefficient range [{}, {}] not admissible", c.min(), c.max())));
    }
    tg.check_cfl(mesh.min_edge_length(), c.min())
}

/// One forward step from levels `(n, n-1)` to `n+1`, with the source on the
/// top boundary while `t_n <= t1` and absorbing conditions after.
pub fn forward_step(
    op: &HybridOperator,
    tg: &TimeGrid,
    src: &SourceSpec,
    n: usize,
    cur: &HybridState,
    old: &HybridState,
    new: &mut HybridState,
) {
    let t = tg.time(n);
    let load = if t <= tg.t1 { Load::Top(plane_wave_source(t, src)) } else { Load::None };
    let d = tg.damping(n);
    op.step(cur, old, new, tg.tau, d, d, load);
}

/// Time-march the forward problem, calling `observe(n, state)` at every
/// level `n = 0..=N` after the exchange. `f0` is the initial displacement on
/// the union numbering (zero when `None`); the initial velocity is zero.
pub fn simulate(
    op: &HybridOperator,
    tg: &TimeGrid,
    src: &SourceSpec,
    f0: Option<&[f64]>,
    mut observe: impl FnMut(usize, &HybridState),
) -> Result<ObservationTrace> {
    let mut trace = ObservationTrace::empty_for(op, tg);
    let mut cur = match f0 {
        Some(f) => {
            if f.len() != op.n_union() {
                return Err(Error::Shape(format!("f0 has {} values, expected {}", f.len(), op.n_union())));
            }
            op.from_union(f)
        }
        None => op.zero_state(),
    };
    let mut old = cur.clone();
    let mut new = op.zero_state();
    let record = |trace: &mut ObservationTrace, s: &HybridState| {
        trace.values.extend(op.obs_nodes.iter().map(|&g| s.fd[g]));
    };
    record(&mut trace, &cur);
    observe(0, &cur);
    for n in 0..tg.n_steps {
        forward_step(op, tg, src, n, &cur, &old, &mut new);
        check_finite(&new, n + 1)?;
        std::mem::swap(&mut old, &mut cur);
        std::mem::swap(&mut cur, &mut new);
        record(&mut trace, &cur);
        observe(n + 1, &cur);
    }
    Ok(trace)
}

/// Forward solve returning the full union history and the boundary trace.
pub fn forward_solve(
    mesh: &TriMesh,
    grid: &FdGrid,
    c: &CoefficientField,
    tg: &TimeGrid,
    src: &SourceSpec,
) -> Result<(TimeSeriesField, ObservationTrace)> {
    forward_solve_from(mesh, grid, c, tg, src, None)
}

pub fn forward_solve_from(
    mesh: &TriMesh,
    grid: &FdGrid,
    c: &CoefficientField,
    tg: &TimeGrid,
    src: &SourceSpec,
    f0: Option<&[f64]>,
) -> Result<(TimeSeriesField, ObservationTrace)> {
    check_inputs(mesh, c, tg)?;
    let op = HybridOperator::new(mesh, grid, c)?;
    let mut hist = TimeSeriesField::with_capacity(op.n_union(), tg.n_steps + 1);
    let mut buf = Vec::with_capacity(op.n_union());
    let trace = simulate(&op, tg, src, f0, |_, s| {
        op.to_union(s, &mut buf);
        hist.push(&buf);
    })?;
    Ok((hist, trace))
}

/// Discrete energy of the level pair `(a, b)`:
/// `((a-b)/τ)·M((a-b)/τ) + a·K b`.
///
/// Along the scheme this changes by `-(Δu)·B(Δu)/(2τ)` plus the source work,
/// so it never grows once the source is off, and it is non-negative when
/// `τ` satisfies the CFL bound.
pub fn pair_energy(op: &HybridOperator, a: &HybridState, b: &HybridState, tau: f64) -> f64 {
    let v = HybridState {
        fd: a.fd.iter().zip(&b.fd).map(|(x, y)| (x - y) / tau).collect(),
        fe: a.fe.iter().zip(&b.fe).map(|(x, y)| (x - y) / tau).collect(),
    };
    op.mass_form(&v, &v) + op.stiffness_form(a, b)
}

/// Energy at level `step >= 1` of a stored history.
pub fn discrete_energy(op: &HybridOperator, field: &TimeSeriesField, tau: f64, step: usize) -> Result<f64> {
    if step == 0 || step >= field.n_levels() {
        return Err(Error::Parameter(format!("energy step {step} outside 1..{}", field.n_levels())));
    }
    if field.n_nodes != op.n_union() {
        return Err(Error::Shape(format!("field has {} nodes, operator {}", field.n_nodes, op.n_union())));
    }
    let a = op.from_union(field.level(step));
    let b = op.from_union(field.level(step - 1));
    Ok(pair_energy(op, &a, &b, tau))
}
