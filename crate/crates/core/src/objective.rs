//! Tikhonov functional and its gradient with respect to the coefficient.

use crate::adjoint::{adjoint_sweep, compatibility_weight, window, ResidualSource};
use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::fdgrid::FdGrid;
use crate::geometry::Region;
use crate::hybrid::HybridOperator;
use crate::mesh::TriMesh;
use crate::wave::{check_inputs, simulate, ObservationTrace, SourceSpec, TimeGrid, TimeSeriesField};

#[derive(Clone, Debug, PartialEq)]
pub struct TikhonovConfig {
    /// Regularization weight in force.
    pub gamma: f64,
    pub gamma0: f64,
    /// Reference coefficient `c̃0`.
    pub c_ref: CoefficientField,
    /// Width of the time window `z_δ`.
    pub delta: f64,
}

impl TikhonovConfig {
    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma0 >= 0.0) {
            return Err(Error::Parameter(format!("gamma = {} must be non-negative", self.gamma)));
        }
        if self.c_ref.values.len() != mesh.n_triangles() {
            return Err(Error::Shape(format!(
                "reference coefficient has {} values for {} triangles",
                self.c_ref.values.len(),
                mesh.n_triangles()
            )));
        }
        Ok(())
    }
}

/// Per-triangle gradient density, zero off `G1`. `weights` holds the
/// triangle areas on `G1` (zero elsewhere) and defines `((·,·))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GradientField {
    pub fn zeros(mesh: &TriMesh) -> Self {
        let weights = (0..mesh.n_triangles())
            .map(|t| if mesh.element_region[t] == Region::G1 { mesh.area(t) } else { 0.0 })
            .collect();
        GradientField { values: vec![0.0; mesh.n_triangles()], weights }
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(&self.weights)
            .map(|((a, b), w)| w * a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, s: f64) -> GradientField {
        GradientField { values: self.values.iter().map(|v| s * v).collect(), weights: self.weights.clone() }
    }

    /// Largest relative difference between mirror-image triangles.
    pub fn mirror_defect(&self, mesh: &TriMesh) -> Option<f64> {
        let map = mesh.mirror_triangle_map()?;
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        Some(
            map.iter()
                .enumerate()
                .map(|(t, &s)| (self.values[t] - self.values[s]).abs() / scale)
                .fold(0.0, f64::max),
        )
    }
}

/// `½ Σ_n w_n z(t_n) Σ_i S_i (u - ũ)²`.
pub fn misfit(trace: &ObservationTrace, target: &ObservationTrace, tg: &TimeGrid, delta: f64) -> Result<f64> {
    trace.check_compatible(target)?;
    if trace.n_levels() != tg.n_steps + 1 {
        return Err(Error::Shape(format!("trace has {} levels, time grid {}", trace.n_levels(), tg.n_steps + 1)));
    }
    compatibility_weight(0.0, tg.t_final, delta)?;
    let mut total = 0.0;
    for n in 0..trace.n_levels() {
        let z = window(tg.time(n), tg.t_final, delta);
        if z == 0.0 {
            continue;
        }
        let s: f64 = trace
            .level(n)
            .iter()
            .zip(target.level(n))
            .zip(&trace.weights)
            .map(|((u, v), w)| w * (u - v) * (u - v))
            .sum();
        total += tg.weight(n) * z * s;
    }
    Ok(0.5 * total)
}

/// `½ γ Σ_{K ⊂ G1} |K| (c_K - c̃0_K)²`.
pub fn regularization(mesh: &TriMesh, c: &CoefficientField, cfg: &TikhonovConfig) -> f64 {
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        if mesh.element_region[t] == Region::G1 {
            let d = c.values[t] - cfg.c_ref.values[t];
            s += mesh.area(t) * d * d;
        }
    }
    0.5 * cfg.gamma * s
}

pub fn evaluate_functional(
    trace: &ObservationTrace,
    target: &ObservationTrace,
    c: &CoefficientField,
    cfg: &TikhonovConfig,
    mesh: &TriMesh,
    tg: &TimeGrid,
) -> Result<f64> {
    cfg.validate(mesh)?;
    if c.values.len() != mesh.n_triangles() {
        return Err(Error::Shape("coefficient does not match the mesh".into()));
    }
    Ok(misfit(trace, target, tg, cfg.delta)? + regularization(mesh, c, cfg))
}

/// `g_K = γ (c_K - c̃0_K) + (1/3) Σ_{v ∈ K} Σ_n λ_v^n (u_v^{n+1} - 2u_v^n + u_v^{n-1})/τ`
/// on `G1`, with `u^{-1} = u^0`. By summation by parts the time sum is the
/// discrete `-∫ λ_t u_t dt`, and the whole expression is the exact derivative
/// of the discrete functional divided by `|K|`.
pub fn assemble_gradient(
    u_hist: &TimeSeriesField,
    lambda_hist: &TimeSeriesField,
    c: &CoefficientField,
    cfg: &TikhonovConfig,
    mesh: &TriMesh,
    tg: &TimeGrid,
) -> Result<GradientField> {
    cfg.validate(mesh)?;
    if u_hist.n_levels() != lambda_hist.n_levels() || u_hist.n_nodes != lambda_hist.n_nodes {
        return Err(Error::Shape(format!(
            "histories differ: {}x{} vs {}x{}",
            u_hist.n_levels(),
            u_hist.n_nodes,
            lambda_hist.n_levels(),
            lambda_hist.n_nodes
        )));
    }
    if u_hist.n_levels() != tg.n_steps + 1 || u_hist.n_nodes < mesh.n_vertices() {
        return Err(Error::Shape("history does not match the time grid or mesh".into()));
    }
    let n = tg.n_steps;
    let mut s = vec![0.0; mesh.n_vertices()];
    for k in 0..n {
        let (lam, up, u0) = (lambda_hist.level(k), u_hist.level(k + 1), u_hist.level(k));
        let um = u_hist.level(k.saturating_sub(1));
        for v in 0..mesh.n_vertices() {
            s[v] += lam[v] * (up[v] - 2.0 * u0[v] + um[v]) / tg.tau;
        }
    }
    Ok(finish_gradient(mesh, c, cfg, |v| s[v]))
}

fn finish_gradient(
    mesh: &TriMesh,
    c: &CoefficientField,
    cfg: &TikhonovConfig,
    s: impl Fn(usize) -> f64,
) -> GradientField {
    let mut g = GradientField::zeros(mesh);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.element_region[t] == Region::G1 {
            let data = (s(tri[0]) + s(tri[1]) + s(tri[2])) / 3.0;
            g.values[t] = cfg.gamma * (c.values[t] - cfg.c_ref.values[t]) + data;
        }
    }
    g
}

/// Result of one forward + adjoint pass.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub functional: f64,
    pub misfit: f64,
    pub regularization: f64,
    pub gradient: GradientField,
    pub trace: ObservationTrace,
}

/// Functional only: one forward solve, no history.
pub fn functional_value(
    mesh: &TriMesh,
    grid: &FdGrid,
    c: &CoefficientField,
    tg: &TimeGrid,
    src: &SourceSpec,
    target: &ObservationTrace,
    cfg: &TikhonovConfig,
) -> Result<f64> {
    check_inputs(mesh, c, tg)?;
    let op = HybridOperator::new(mesh, grid, c)?;
    let trace = simulate(&op, tg, src, None, |_, _| {})?;
    evaluate_functional(&trace, target, c, cfg, mesh, tg)
}

/// Functional and gradient. Only the `G1` vertices of the forward history are
/// kept, and the gradient is accumulated while the adjoint is marched back.
pub fn functional_and_gradient(
    mesh: &TriMesh,
    grid: &FdGrid,
    c: &CoefficientField,
    tg: &TimeGrid,
    src: &SourceSpec,
    target: &ObservationTrace,
    cfg: &TikhonovConfig,
) -> Result<Evaluation> {
    check_inputs(mesh, c, tg)?;
    cfg.validate(mesh)?;
    let op = HybridOperator::new(mesh, grid, c)?;
    let g1 = mesh.g1_vertices();
    let m = g1.len();
    let mut u = Vec::with_capacity(m * (tg.n_steps + 1));
    let trace = simulate(&op, tg, src, None, |_, s| u.extend(g1.iter().map(|&v| s.fe[v])))?;
    let mis = misfit(&trace, target, tg, cfg.delta)?;
    let reg = regularization(mesh, c, cfg);

    let residual = ResidualSource::from_traces(&trace, target, tg, cfg.delta)?;
    let n = tg.n_steps;
    let mut acc = vec![0.0; m];
    adjoint_sweep(&op, tg, &residual, |k, lam| {
        if k >= n {
            return;
        }
        let up = &u[(k + 1) * m..(k + 2) * m];
        let u0 = &u[k * m..(k + 1) * m];
        let um = &u[k.saturating_sub(1) * m..(k.saturating_sub(1) + 1) * m];
        for (j, &v) in g1.iter().enumerate() {
            acc[j] += lam.fe[v] * (up[j] - 2.0 * u0[j] + um[j]) / tg.tau;
        }
    })?;
    let mut s = vec![0.0; mesh.n_vertices()];
    for (j, &v) in g1.iter().enumerate() {
        s[v] = acc[j];
    }
    let gradient = finish_gradient(mesh, c, cfg, |v| s[v]);
    Ok(Evaluation { functional: mis + reg, misfit: mis, regularization: reg, gradient, trace })
}
