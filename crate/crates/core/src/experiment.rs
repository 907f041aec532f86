//! Experiment configuration and the post-processing used by the driver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::fdgrid::FdGrid;
use crate::geometry::{DomainGeometry, Rect};
use crate::mesh::TriMesh;
use crate::optimizer::{homogeneous_trace, AgcmConfig, AgcmProblem, Workflow};
use crate::wave::{ObservationTrace, SourceSpec, TimeGrid, TimeSeriesField, DEFAULT_CFL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Forward,
    Optimize,
    OptimizeInterpThenRefine,
    GenerateTarget,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "forward" => Ok(Mode::Forward),
            "optimize" => Ok(Mode::Optimize),
            "optimize_interp_then_refine" => Ok(Mode::OptimizeInterpThenRefine),
            "generate_target" => Ok(Mode::GenerateTarget),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::Optimize => "optimize",
            Mode::OptimizeInterpThenRefine => "optimize_interp_then_refine",
            Mode::GenerateTarget => "generate_target",
        }
    }
}

/// Rectangles as `[x1_min, x1_max, x2_min, x2_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub h: f64,
    pub d: [f64; 4],
    pub dfem: [f64; 4],
    pub g1: [f64; 4],
    pub g0: [f64; 4],
}

impl GeometryConfig {
    /// `D = (-1.1, 1.1) x (-0.62, 0.62)`, `D_FEM = (-1, 1) x (-0.52, 0.52)`.
    pub fn standard() -> Self {
        GeometryConfig {
            h: 0.02,
            d: [-1.1, 1.1, -0.62, 0.62],
            dfem: [-1.0, 1.0, -0.52, 0.52],
            g1: [-0.3, 0.3, -0.18, 0.18],
            g0: [-0.14, 0.14, -0.08, 0.08],
        }
    }

    /// A small layout at `h = 0.1` for quick runs.
    pub fn coarse() -> Self {
        GeometryConfig {
            h: 0.1,
            d: [-1.1, 1.1, -0.7, 0.7],
            dfem: [-0.8, 0.8, -0.5, 0.5],
            g1: [-0.5, 0.5, -0.2, 0.2],
            g0: [-0.2, 0.2, -0.1, 0.1],
        }
    }

    pub fn build(&self) -> Result<DomainGeometry> {
        let r = |a: [f64; 4]| Rect::new([a[0], a[1]], [a[2], a[3]]);
        DomainGeometry::new(self.h, r(self.d), r(self.dfem), r(self.g1), r(self.g0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    /// Explicit step; must divide `t_final`. Derived from `cfl_safety` when absent.
    pub tau: Option<f64>,
    pub cfl_safety: f64,
    /// Source cutoff; defaults to the source duration `2π/ω`.
    pub t1: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { t_final: 2.0, tau: None, cfl_safety: DEFAULT_CFL, t1: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub omega: f64,
    pub amplitude: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig { omega: 60.0, amplitude: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseConfig {
    pub c0_guess: f64,
    /// Target trace CSV, relative to the config file. Generated when absent.
    pub target: Option<String>,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig { c0_guess: 1.5, target: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// Write every `stride`-th level of a field history to VTK.
    pub stride: usize,
    /// Also write the adjoint of the final iterate (optimize modes).
    pub write_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into(), stride: 100, write_fields: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// The command line's mode takes precedence.
    #[serde(default)]
    pub mode: Mode,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub inverse: InverseConfig,
    #[serde(default)]
    pub agcm: AgcmConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Error::Config(format!("{what} = {v} must be positive"));
        if !(self.geometry.h > 0.0) {
            return Err(bad("geometry.h", self.geometry.h));
        }
        if !(self.time.t_final > 0.0) {
            return Err(bad("time.t_final", self.time.t_final));
        }
        if !(self.time.cfl_safety > 0.0) {
            return Err(bad("time.cfl_safety", self.time.cfl_safety));
        }
        if let Some(tau) = self.time.tau {
            if !(tau > 0.0) {
                return Err(bad("time.tau", tau));
            }
        }
        if !(self.source.omega > 0.0) {
            return Err(bad("source.omega", self.source.omega));
        }
        if !(self.inverse.c0_guess >= 1.0) {
            return Err(Error::Config(format!("inverse.c0_guess = {} must be >= 1", self.inverse.c0_guess)));
        }
        if self.output.stride == 0 {
            return Err(Error::Config("output.stride must be positive".into()));
        }
        self.agcm.validate().map_err(|e| Error::Config(format!("agcm: {e}")))?;
        let t1 = self.t1();
        if !(t1 > 0.0 && t1 < self.time.t_final) {
            return Err(Error::Config(format!("source cutoff t1 = {t1} must lie in (0, T)")));
        }
        Ok(())
    }

    pub fn source(&self) -> SourceSpec {
        SourceSpec { omega: self.source.omega, amplitude: self.source.amplitude }
    }

    pub fn t1(&self) -> f64 {
        self.time.t1.unwrap_or(2.0 * PI / self.source.omega)
    }

    /// Time grid for a mesh: the explicit `tau` if given, else the CFL rule.
    pub fn time_grid(&self, mesh: &TriMesh) -> Result<TimeGrid> {
        match self.time.tau {
            Some(tau) => {
                let n = (self.time.t_final / tau).round();
                if n < 1.0 || (n * tau - self.time.t_final).abs() > 1e-9 * self.time.t_final {
                    return Err(Error::Discretization(format!(
                        "tau = {tau} does not divide T = {}",
                        self.time.t_final
                    )));
                }
                TimeGrid::with_steps(self.time.t_final, n as usize, self.t1(), self.time.cfl_safety)
            }
            None => TimeGrid::for_mesh(self.time.t_final, mesh.min_edge_length(), self.time.cfl_safety, self.t1()),
        }
    }

    /// Reconstruction problem for the optimize modes.
    pub fn agcm_problem(&self, target: Option<ObservationTrace>) -> Result<AgcmProblem> {
        let (_, mesh, grid) = build_geometry(self)?;
        let workflow = match self.mode {
            Mode::OptimizeInterpThenRefine => Workflow::InterpThenOptimize,
            _ => Workflow::Adaptive,
        };
        Ok(AgcmProblem {
            mesh,
            grid,
            t_final: self.time.t_final,
            cfl_safety: self.time.cfl_safety,
            t1: Some(self.t1()),
            src: self.source(),
            c0_guess: self.inverse.c0_guess,
            target,
            workflow,
        })
    }
}

pub fn build_geometry(config: &ExperimentConfig) -> Result<(DomainGeometry, TriMesh, FdGrid)> {
    let geometry = config.geometry.build()?;
    let mesh = TriMesh::from_geometry(&geometry)?;
    let grid = FdGrid::from_geometry(&geometry);
    grid.match_interface(&mesh)?;
    Ok((geometry, mesh, grid))
}

/// Non-reflecting target: the trace of the homogeneous medium `c ≡ 1`.
pub fn generate_target(config: &ExperimentConfig) -> Result<ObservationTrace> {
    let (_, mesh, grid) = build_geometry(config)?;
    let tg = config.time_grid(&mesh)?;
    homogeneous_trace(&mesh, &grid, &tg, &config.source())
}

/// Per-node `Σ_k u(t_k) e^{-iωt_k} τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSnapshot {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

pub fn fourier_snapshot(field: &TimeSeriesField, omega: f64, tau: f64) -> FourierSnapshot {
    let mut acc = FourierAccumulator::new(field.n_nodes, omega, tau);
    for k in 0..field.n_levels() {
        acc.add(k, field.level(k));
    }
    acc.finish()
}

/// Streaming form of [`fourier_snapshot`], fed one level at a time.
#[derive(Clone, Debug)]
pub struct FourierAccumulator {
    omega: f64,
    tau: f64,
    snapshot: FourierSnapshot,
}

impl FourierAccumulator {
    pub fn new(n_nodes: usize, omega: f64, tau: f64) -> Self {
        FourierAccumulator { omega, tau, snapshot: FourierSnapshot { re: vec![0.0; n_nodes], im: vec![0.0; n_nodes] } }
    }

    pub fn add(&mut self, k: usize, values: &[f64]) {
        let t = k as f64 * self.tau;
        let (c, s) = ((self.omega * t).cos() * self.tau, (self.omega * t).sin() * self.tau);
        for ((re, im), &u) in self.snapshot.re.iter_mut().zip(self.snapshot.im.iter_mut()).zip(values) {
            *re += u * c;
            *im -= u * s;
        }
    }

    pub fn finish(self) -> FourierSnapshot {
        self.snapshot
    }
}

/// `Σ_{top nodes} Σ_{t_n > t_after} u² τ S_i`: energy leaving through the top
/// after the incident pulse has gone, i.e. the backscatter.
pub fn reflection_metric(trace: &ObservationTrace, t_after: f64) -> f64 {
    let tau = if trace.times.len() > 1 { trace.times[1] - trace.times[0] } else { 0.0 };
    let mut r = 0.0;
    for (n, &t) in trace.times.iter().enumerate() {
        if t <= t_after {
            continue;
        }
        for ((u, w), &top) in trace.level(n).iter().zip(&trace.weights).zip(&trace.top) {
            if top {
                r += u * u * tau * w;
            }
        }
    }
    r
}

/// Reflection metric of a coefficient on its own mesh.
pub fn reflection_of(
    mesh: &TriMesh,
    grid: &FdGrid,
    c: &CoefficientField,
    tg: &TimeGrid,
    src: &SourceSpec,
) -> Result<f64> {
    crate::wave::check_inputs(mesh, c, tg)?;
    let op = crate::hybrid::HybridOperator::new(mesh, grid, c)?;
    let trace = crate::wave::simulate(&op, tg, src, None, |_, _| {})?;
    Ok(reflection_metric(&trace, tg.t1))
}
