//! One experiment: dispatch on the mode and write every artifact.

use std::path::{Path, PathBuf};

use acoustica_core::io::{read_trace_csv, write_hybrid_vtk, write_iterations_csv, write_mesh_vtk, write_trace_csv};
use acoustica_core::optimizer::homogeneous_trace;
use acoustica_core::{
    adjoint_sweep, build_geometry, generate_target, reflection_metric, reflection_of, run_agcm, simulate,
    CoefficientField, ExperimentConfig, FdGrid, FourierAccumulator, HybridOperator, HybridState, IterationRecord,
    LevelResult, Mode, ObservationTrace, Region, ResidualSource, StopReason, TimeGrid, TriMesh,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::manifest::{Artifacts, ManifestEntry};

pub const SUMMARY_NAME: &str = "summary.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub n_triangles: usize,
    pub n_g1: usize,
    pub n_steps: usize,
    pub tau: f64,
    pub iterations: usize,
    pub stop_reason: Option<StopReason>,
    pub initial_functional: f64,
    pub final_functional: f64,
    pub final_grad_norm: f64,
}

/// Scalar results of a run, written as `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    /// Reflection metric of the initial guess.
    pub reflection_initial: f64,
    /// Reflection metric of the result; equal to the initial one for
    /// `forward` and `generate_target`.
    pub reflection_final: f64,
    /// Reflection metric of `c ≡ 1`, the floor set by the discretization.
    pub reflection_homogeneous: f64,
    pub levels: Vec<LevelSummary>,
    pub coefficient_min: f64,
    pub coefficient_max: f64,
    pub admissible: bool,
    pub mirror_defect: f64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub manifest: Vec<ManifestEntry>,
    pub out_dir: PathBuf,
}

/// Reads a config file; TOML errors keep their line and column.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    ExperimentConfig::from_toml(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
}

/// Runs `config` and writes everything below `out`. Relative paths inside the
/// config resolve against `config_dir`.
pub fn run_experiment(config: &ExperimentConfig, config_dir: &Path, out: &Path) -> Result<RunOutput> {
    config.validate().map_err(|e| CliError::Config { path: config_dir.to_path_buf(), message: e.to_string() })?;
    let mut art = Artifacts::create(out)?;
    art.write("config.toml", "config", |b| {
        b.extend_from_slice(config.to_toml().as_bytes());
        Ok(())
    })?;
    let summary = match config.mode {
        Mode::Forward => run_forward(config, &mut art)?,
        Mode::GenerateTarget => run_generate_target(config, &mut art)?,
        Mode::Optimize | Mode::OptimizeInterpThenRefine => run_optimize(config, config_dir, &mut art)?,
    };
    art.write(SUMMARY_NAME, "summary", |b| {
        serde_json::to_writer_pretty(&mut *b, &summary).expect("summary serializes");
        b.push(b'\n');
        Ok(())
    })?;
    let out_dir = art.root().to_path_buf();
    let manifest = art.finish()?;
    Ok(RunOutput { summary, manifest, out_dir })
}

fn region_ids(mesh: &TriMesh) -> Vec<f64> {
    mesh.element_region
        .iter()
        .map(|r| match r {
            Region::G0 => 0.0,
            Region::G1 => 1.0,
            Region::G2 => 2.0,
        })
        .collect()
}

fn coefficient_vtk(art: &mut Artifacts, rel: &str, mesh: &TriMesh, fields: &[(&str, &[f64])]) -> Result<()> {
    let region = region_ids(mesh);
    let mut all: Vec<(&str, &[f64])> = fields.to_vec();
    all.push(("region", &region));
    art.write(rel, "coefficient", |b| write_mesh_vtk(b, mesh, &all))
}

/// Union-node snapshots every `stride` levels plus the Fourier transform at
/// the source frequency, collected while a solver marches.
struct FieldRecorder<'a> {
    op: &'a HybridOperator,
    stride: usize,
    fourier: FourierAccumulator,
    snapshots: Vec<(usize, Vec<f64>)>,
    buf: Vec<f64>,
}

impl<'a> FieldRecorder<'a> {
    fn new(op: &'a HybridOperator, stride: usize, omega: f64, tau: f64) -> Self {
        FieldRecorder {
            op,
            stride,
            fourier: FourierAccumulator::new(op.n_union(), omega, tau),
            snapshots: Vec::new(),
            buf: Vec::new(),
        }
    }

    fn observe(&mut self, n: usize, s: &HybridState) {
        self.op.to_union(s, &mut self.buf);
        self.fourier.add(n, &self.buf);
        if n.is_multiple_of(self.stride) {
            self.snapshots.push((n, self.buf.clone()));
        }
    }

    fn write(mut self, art: &mut Artifacts, mesh: &TriMesh, dir: &str, name: &str) -> Result<()> {
        self.snapshots.sort_by_key(|(n, _)| *n);
        for (n, values) in &self.snapshots {
            let rel = format!("{dir}fields/{name}_{n:06}.vtk");
            art.write(&rel, "field", |b| write_hybrid_vtk(b, mesh, self.op, &format!("{name} level {n}"), &[(name, values)]))?;
        }
        let f = self.fourier.finish();
        art.write(&format!("{dir}fourier_{name}.vtk"), "fourier", |b| {
            write_hybrid_vtk(b, mesh, self.op, &format!("{name} at the source frequency"), &[("re", &f.re), ("im", &f.im)])
        })
    }
}

fn trace_csv(art: &mut Artifacts, rel: &str, trace: &ObservationTrace, name: &str) -> Result<()> {
    art.write(rel, "trace", |b| write_trace_csv(b, trace, name))
}

fn single_level_summary(mesh: &TriMesh, tg: &TimeGrid) -> LevelSummary {
    LevelSummary {
        level: 0,
        n_triangles: mesh.n_triangles(),
        n_g1: mesh.count_region(Region::G1),
        n_steps: tg.n_steps,
        tau: tg.tau,
        iterations: 0,
        stop_reason: None,
        initial_functional: 0.0,
        final_functional: 0.0,
        final_grad_norm: 0.0,
    }
}

fn run_forward(config: &ExperimentConfig, art: &mut Artifacts) -> Result<RunSummary> {
    let stage = CliError::runtime;
    let (_, mesh, grid) = build_geometry(config).map_err(stage("geometry"))?;
    let tg = config.time_grid(&mesh).map_err(stage("time grid"))?;
    let c = CoefficientField::constant_guess(&mesh, config.inverse.c0_guess).map_err(stage("coefficient"))?;
    acoustica_core::wave::check_inputs(&mesh, &c, &tg).map_err(stage("forward"))?;
    let op = HybridOperator::new(&mesh, &grid, &c).map_err(stage("forward"))?;
    let src = config.source();
    let mut rec = FieldRecorder::new(&op, config.output.stride, src.omega, tg.tau);
    let trace = simulate(&op, &tg, &src, None, |n, s| rec.observe(n, s)).map_err(stage("forward"))?;
    coefficient_vtk(art, "coefficient.vtk", &mesh, &[("c", &c.values)])?;
    rec.write(art, &mesh, "", "u")?;
    trace_csv(art, "trace_u.csv", &trace, "u")?;
    let r = reflection_metric(&trace, tg.t1);
    let homogeneous = homogeneous_trace(&mesh, &grid, &tg, &src).map_err(stage("homogeneous reference"))?;
    Ok(RunSummary {
        mode: config.mode,
        reflection_initial: r,
        reflection_final: r,
        reflection_homogeneous: reflection_metric(&homogeneous, tg.t1),
        levels: vec![single_level_summary(&mesh, &tg)],
        coefficient_min: c.min(),
        coefficient_max: c.max(),
        admissible: c.validate(&mesh).is_ok(),
        mirror_defect: c.mirror_defect(&mesh).unwrap_or(f64::INFINITY),
    })
}

fn run_generate_target(config: &ExperimentConfig, art: &mut Artifacts) -> Result<RunSummary> {
    let stage = CliError::runtime;
    let (_, mesh, _) = build_geometry(config).map_err(stage("geometry"))?;
    let tg = config.time_grid(&mesh).map_err(stage("time grid"))?;
    let trace = generate_target(config).map_err(stage("generate_target"))?;
    trace_csv(art, "target.csv", &trace, "u")?;
    let r = reflection_metric(&trace, tg.t1);
    let c = CoefficientField::unit(&mesh);
    Ok(RunSummary {
        mode: config.mode,
        reflection_initial: r,
        reflection_final: r,
        reflection_homogeneous: r,
        levels: vec![single_level_summary(&mesh, &tg)],
        coefficient_min: 1.0,
        coefficient_max: 1.0,
        admissible: true,
        mirror_defect: c.mirror_defect(&mesh).unwrap_or(f64::INFINITY),
    })
}

/// Target on the level-0 layout, read from the config's `inverse.target`.
fn load_target(config: &ExperimentConfig, config_dir: &Path, mesh: &TriMesh, grid: &FdGrid) -> Result<Option<ObservationTrace>> {
    let Some(rel) = &config.inverse.target else {
        return Ok(None);
    };
    let path = config_dir.join(rel);
    let tg = config.time_grid(mesh).map_err(CliError::runtime("time grid"))?;
    let op = HybridOperator::new(mesh, grid, &CoefficientField::unit(mesh)).map_err(CliError::runtime("target layout"))?;
    let file = std::fs::File::open(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let trace = read_trace_csv(std::io::BufReader::new(file), &ObservationTrace::empty_for(&op, &tg))
        .map_err(|e| CliError::Config { path: path.clone(), message: e.to_string() })?;
    Ok(Some(trace))
}

fn run_optimize(config: &ExperimentConfig, config_dir: &Path, art: &mut Artifacts) -> Result<RunSummary> {
    let stage = CliError::runtime;
    let (_, mesh0, grid) = build_geometry(config).map_err(stage("geometry"))?;
    if let Some(tau) = config.time.tau {
        let cfl = TimeGrid::for_mesh(config.time.t_final, mesh0.min_edge_length(), config.time.cfl_safety, config.t1())
            .map_err(stage("time grid"))?;
        if (cfl.tau - tau).abs() > 1e-9 * tau {
            return Err(CliError::Config {
                path: config_dir.to_path_buf(),
                message: format!(
                    "time.tau = {tau} differs from the level-0 step {} given by cfl_safety; the optimize modes derive tau per level",
                    cfl.tau
                ),
            });
        }
    }
    let target = load_target(config, config_dir, &mesh0, &grid)?;
    let problem = config.agcm_problem(target.clone()).map_err(stage("optimize"))?;
    let mut records: Vec<IterationRecord> = Vec::new();
    let levels = run_agcm(&problem, &config.agcm, &mut |r| {
        log::info!("level {} m {} F {:.6e} |g| {:.3e} gamma {:.3e}", r.level, r.m, r.functional, r.grad_norm, r.gamma);
        records.push(r.clone());
    })
    .map_err(stage("optimize"))?;
    let last = levels.last().expect("at least one level");

    for l in &levels {
        coefficient_vtk(art, &format!("coefficients/level_{}.vtk", l.level), &l.mesh, &[("c", &l.c.values), ("c0", &l.c0.values)])?;
    }
    art.write("iterations.csv", "iterations", |b| write_iterations_csv(b, &records))?;

    let src = config.source();
    let c_guess = CoefficientField::constant_guess(&last.mesh, config.inverse.c0_guess).map_err(stage("initial guess"))?;
    let r_initial = reflection_of(&last.mesh, &grid, &c_guess, &last.tg, &src).map_err(stage("reflection of the initial guess"))?;
    let homogeneous = homogeneous_trace(&last.mesh, &grid, &last.tg, &src).map_err(stage("homogeneous reference"))?;
    let final_target = match target {
        Some(t) if t.check_compatible(&homogeneous).is_ok() => t,
        _ => homogeneous.clone(),
    };
    let r_final = final_fields(config, art, last, &grid, &final_target)?;

    Ok(RunSummary {
        mode: config.mode,
        reflection_initial: r_initial,
        reflection_final: r_final,
        reflection_homogeneous: reflection_metric(&homogeneous, last.tg.t1),
        levels: levels.iter().map(level_summary).collect(),
        coefficient_min: last.c.min(),
        coefficient_max: last.c.max(),
        admissible: last.c.validate(&last.mesh).is_ok(),
        mirror_defect: last.c.mirror_defect(&last.mesh).unwrap_or(f64::INFINITY),
    })
}

/// Forward and adjoint traces of the final iterate, plus its fields when
/// `output.write_fields` is set. Returns the reflection metric.
fn final_fields(
    config: &ExperimentConfig,
    art: &mut Artifacts,
    last: &LevelResult,
    grid: &FdGrid,
    target: &ObservationTrace,
) -> Result<f64> {
    let stage = CliError::runtime;
    let (mesh, tg, src) = (&last.mesh, &last.tg, config.source());
    let op = HybridOperator::new(mesh, grid, &last.c).map_err(stage("final forward"))?;
    let stride = if config.output.write_fields { config.output.stride } else { usize::MAX };
    let mut u_rec = FieldRecorder::new(&op, stride, src.omega, tg.tau);
    let trace = simulate(&op, tg, &src, None, |n, s| u_rec.observe(n, s)).map_err(stage("final forward"))?;
    trace_csv(art, "final/trace_u.csv", &trace, "u")?;

    let delta = config.agcm.delta_fraction * tg.t_final;
    let residual = ResidualSource::from_traces(&trace, target, tg, delta).map_err(stage("final residual"))?;
    let mut lambda_rec = FieldRecorder::new(&op, stride, src.omega, tg.tau);
    let mut lambda = vec![0.0; trace.values.len()];
    let k = op.obs_nodes.len();
    adjoint_sweep(&op, tg, &residual, |n, s| {
        for (slot, &g) in lambda[n * k..(n + 1) * k].iter_mut().zip(&op.obs_nodes) {
            *slot = s.fd[g];
        }
        lambda_rec.observe(n, s);
    })
    .map_err(stage("final adjoint"))?;
    trace_csv(art, "final/trace_lambda.csv", &ObservationTrace { values: lambda, ..trace.clone() }, "lambda")?;

    if config.output.write_fields {
        u_rec.write(art, mesh, "final/", "u")?;
        lambda_rec.write(art, mesh, "final/", "lambda")?;
    }
    Ok(reflection_metric(&trace, tg.t1))
}

fn level_summary(l: &LevelResult) -> LevelSummary {
    let h = &l.state.history;
    LevelSummary {
        level: l.level,
        n_triangles: l.mesh.n_triangles(),
        n_g1: l.mesh.count_region(Region::G1),
        n_steps: l.tg.n_steps,
        tau: l.tg.tau,
        iterations: l.state.m,
        stop_reason: l.state.stop_reason,
        initial_functional: h.first().map_or(f64::NAN, |r| r.functional),
        final_functional: h.last().map_or(f64::NAN, |r| r.functional),
        final_grad_norm: l.state.final_grad_norm(),
    }
}
