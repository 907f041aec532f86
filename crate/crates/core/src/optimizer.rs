//! Adaptive conjugate-gradient reconstruction: projected Fletcher–Reeves
//! iterations with a decaying regularization weight, nested in a loop of
//! symmetric refinements of `G1`.

use serde::{Deserialize, Serialize};

use crate::coefficient::{interpolate_coefficient, CoefficientField};
use crate::error::{Error, Result};
use crate::fdgrid::FdGrid;
use crate::geometry::Region;
use crate::mesh::TriMesh;
use crate::objective::{functional_and_gradient, GradientField, TikhonovConfig};
use crate::refine::refine_symmetric;
use crate::wave::{simulate, ObservationTrace, SourceSpec, TimeGrid};
use crate::hybrid::HybridOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workflow {
    /// Optimize on every level, interpolating the optimum to the next mesh.
    Adaptive,
    /// Optimize on the coarse mesh, carry the result to the finest mesh, and
    /// optimize only there.
    InterpThenOptimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgcmConfig {
    pub gamma0: f64,
    pub p_exponent: f64,
    pub theta: f64,
    pub max_inner_iters: usize,
    pub max_refinements: usize,
    pub stabilization_window: usize,
    pub stabilization_rel_change: f64,
    /// Width of `z_δ` as a fraction of `T`.
    pub delta_fraction: f64,
}

impl Default for AgcmConfig {
    fn default() -> Self {
        AgcmConfig {
            gamma0: 0.01,
            p_exponent: 0.9,
            theta: 1e-5,
            max_inner_iters: 10,
            max_refinements: 3,
            stabilization_window: 3,
            stabilization_rel_change: 1e-3,
            delta_fraction: 0.1,
        }
    }
}

impl AgcmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0) {
            return Err(Error::Parameter(format!("gamma0 = {} must be positive", self.gamma0)));
        }
        if !(self.p_exponent > 0.0 && self.p_exponent < 1.0) {
            return Err(Error::Parameter(format!("p_exponent = {} must lie in (0, 1)", self.p_exponent)));
        }
        if !(self.theta > 0.0) || self.stabilization_window == 0 || !(self.stabilization_rel_change > 0.0) {
            return Err(Error::Parameter("theta, stabilization window and threshold must be positive".into()));
        }
        if !(self.delta_fraction > 0.0 && self.delta_fraction < 1.0) {
            return Err(Error::Parameter(format!("delta_fraction = {} must lie in (0, 1)", self.delta_fraction)));
        }
        Ok(())
    }

    /// `γ^m = γ0 / (m+1)^p`.
    pub fn gamma(&self, m: usize) -> f64 {
        self.gamma0 / ((m + 1) as f64).powf(self.p_exponent)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    Stabilized,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub level: usize,
    pub m: usize,
    pub gamma: f64,
    /// Step taken after this evaluation; `None` on the last one.
    pub alpha: Option<f64>,
    pub grad_norm: f64,
    pub functional: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub m: usize,
    pub level: usize,
    pub g_prev: Option<GradientField>,
    pub d_prev: Option<GradientField>,
    pub gamma_m: f64,
    pub history: Vec<IterationRecord>,
    pub stop_reason: Option<StopReason>,
}

impl OptimizerState {
    pub fn new(level: usize, gamma0: f64) -> Self {
        OptimizerState { m: 0, level, g_prev: None, d_prev: None, gamma_m: gamma0, history: Vec::new(), stop_reason: None }
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.grad_norm)
    }
}

/// Fletcher–Reeves direction. Without a usable previous pair (first
/// iteration, or a zero previous gradient) it restarts with `-g`.
pub fn cg_direction(g: &GradientField, g_prev: Option<&GradientField>, d_prev: Option<&GradientField>) -> GradientField {
    match (g_prev, d_prev) {
        (Some(gp), Some(dp)) if gp.norm_sq() > 0.0 => {
            let beta = g.norm_sq() / gp.norm_sq();
            let values = g.values.iter().zip(&dp.values).map(|(gi, di)| -gi + beta * di).collect();
            GradientField { values, weights: g.weights.clone() }
        }
        _ => g.scaled(-1.0),
    }
}

/// `α = -((g, d)) / (γ ‖d‖²)`; `None` when `d = 0`.
pub fn step_size(g: &GradientField, d: &GradientField, gamma: f64) -> Result<Option<f64>> {
    if gamma == 0.0 {
        return Err(Error::Parameter("step size needs gamma > 0".into()));
    }
    let dd = d.norm_sq();
    if dd == 0.0 {
        return Ok(None);
    }
    Ok(Some(-g.dot(d) / (gamma * dd)))
}

/// `c + α d` on `G1`, clamped to the admissible box.
pub fn update_coefficient(c: &CoefficientField, d: &GradientField, alpha: f64) -> CoefficientField {
    let mut out = c.clone();
    for ((v, di), w) in out.values.iter_mut().zip(&d.values).zip(&d.weights) {
        if *w > 0.0 {
            *v = (*v + alpha * di).clamp(c.lower, c.upper);
        }
    }
    out
}

/// Relative change of the last `window` consecutive norm pairs all below `tol`.
pub fn is_stabilized(norms: &[f64], window: usize, tol: f64) -> bool {
    if norms.len() < window + 1 {
        return false;
    }
    norms[norms.len() - window - 1..]
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() <= tol * w[0].abs())
}

/// Everything one level of the optimization needs.
pub struct LevelProblem<'a> {
    pub level: usize,
    pub mesh: &'a TriMesh,
    pub grid: &'a FdGrid,
    pub tg: TimeGrid,
    pub src: SourceSpec,
    pub target: &'a ObservationTrace,
    /// Starting point and regularization reference of this level.
    pub c0: &'a CoefficientField,
}

/// Per-iteration callback, e.g. for logging.
pub type Observer<'o> = dyn FnMut(&IterationRecord) + 'o;

pub fn run_inner_loop(
    problem: &LevelProblem<'_>,
    cfg: &AgcmConfig,
    observer: &mut Observer<'_>,
) -> Result<(CoefficientField, OptimizerState)> {
    cfg.validate()?;
    let level = problem.level;
    let mut state = OptimizerState::new(level, cfg.gamma0);
    let mut c = problem.c0.clone();
    let mut norms = Vec::new();
    loop {
        let m = state.m;
        let gamma = cfg.gamma(m);
        state.gamma_m = gamma;
        let tik = TikhonovConfig {
            gamma,
            gamma0: cfg.gamma0,
            c_ref: problem.c0.clone(),
            delta: cfg.delta_fraction * problem.tg.t_final,
        };
        let eval = functional_and_gradient(problem.mesh, problem.grid, &c, &problem.tg, &problem.src, problem.target, &tik)
            .map_err(|e| e.context(format!("level {level}, iteration {m}")))?;
        let g = eval.gradient;
        let norm = g.norm();
        norms.push(norm);
        state.history.push(IterationRecord { level, m, gamma, alpha: None, grad_norm: norm, functional: eval.functional });

        let stop = if norm <= cfg.theta {
            Some(StopReason::Tolerance)
        } else if is_stabilized(&norms, cfg.stabilization_window, cfg.stabilization_rel_change) {
            Some(StopReason::Stabilized)
        } else if m >= cfg.max_inner_iters {
            Some(StopReason::MaxIter)
        } else {
            None
        };
        if let Some(reason) = stop {
            state.stop_reason = Some(reason);
            observer(state.history.last().unwrap());
            return Ok((c, state));
        }

        let d = cg_direction(&g, state.g_prev.as_ref(), state.d_prev.as_ref());
        let Some(alpha) = step_size(&g, &d, gamma)? else {
            state.stop_reason = Some(StopReason::Tolerance);
            observer(state.history.last().unwrap());
            return Ok((c, state));
        };
        state.history.last_mut().unwrap().alpha = Some(alpha);
        observer(state.history.last().unwrap());
        c = update_coefficient(&c, &d, alpha);
        state.g_prev = Some(g);
        state.d_prev = Some(d);
        state.m += 1;
    }
}

/// Observation trace of the homogeneous medium `c ≡ 1`.
pub fn homogeneous_trace(mesh: &TriMesh, grid: &FdGrid, tg: &TimeGrid, src: &SourceSpec) -> Result<ObservationTrace> {
    let c = CoefficientField::unit(mesh);
    crate::wave::check_inputs(mesh, &c, tg)?;
    let op = HybridOperator::new(mesh, grid, &c)?;
    simulate(&op, tg, src, None, |_, _| {})
}

/// Inputs of a full reconstruction.
#[derive(Clone, Debug)]
pub struct AgcmProblem {
    pub mesh: TriMesh,
    pub grid: FdGrid,
    pub t_final: f64,
    pub cfl_safety: f64,
    /// Source cutoff; `None` means the source duration.
    pub t1: Option<f64>,
    pub src: SourceSpec,
    pub c0_guess: f64,
    /// Externally supplied target. It is used on every level whose time grid
    /// matches; other levels regenerate it with `c ≡ 1` on their own mesh.
    pub target: Option<ObservationTrace>,
    pub workflow: Workflow,
}

#[derive(Clone, Debug)]
pub struct LevelResult {
    pub level: usize,
    pub mesh: TriMesh,
    pub tg: TimeGrid,
    pub c0: CoefficientField,
    pub c: CoefficientField,
    pub state: OptimizerState,
}

fn level_time_grid(problem: &AgcmProblem, mesh: &TriMesh) -> Result<TimeGrid> {
    let t1 = problem.t1.unwrap_or_else(|| problem.src.duration());
    TimeGrid::for_mesh(problem.t_final, mesh.min_edge_length(), problem.cfl_safety, t1)
}

fn level_target(problem: &AgcmProblem, mesh: &TriMesh, tg: &TimeGrid) -> Result<ObservationTrace> {
    if let Some(t) = &problem.target {
        if t.times.len() == tg.n_steps + 1 && (t.times[1] - tg.tau).abs() <= 1e-12 * tg.tau {
            return Ok(t.clone());
        }
    }
    homogeneous_trace(mesh, &problem.grid, tg, &problem.src)
}

fn run_level(
    problem: &AgcmProblem,
    level: usize,
    mesh: TriMesh,
    c0: CoefficientField,
    cfg: &AgcmConfig,
    observer: &mut Observer<'_>,
) -> Result<LevelResult> {
    let tg = level_time_grid(problem, &mesh).map_err(|e| e.context(format!("level {level}")))?;
    let target = level_target(problem, &mesh, &tg).map_err(|e| e.context(format!("level {level}, target")))?;
    let lp = LevelProblem { level, mesh: &mesh, grid: &problem.grid, tg, src: problem.src, target: &target, c0: &c0 };
    let (c, state) = run_inner_loop(&lp, cfg, observer)?;
    Ok(LevelResult { level, mesh, tg, c0, c, state })
}

pub fn run_agcm(problem: &AgcmProblem, cfg: &AgcmConfig, observer: &mut Observer<'_>) -> Result<Vec<LevelResult>> {
    cfg.validate()?;
    let c0 = CoefficientField::constant_guess(&problem.mesh, problem.c0_guess)?;
    let first = run_level(problem, 0, problem.mesh.clone(), c0, cfg, observer)?;
    let mut results = vec![first];
    match problem.workflow {
        Workflow::Adaptive => {
            for level in 1..=cfg.max_refinements {
                let prev = results.last().unwrap();
                let mesh = refine_symmetric(&prev.mesh, Region::G1).map_err(|e| e.context(format!("level {level}")))?;
                let c0 = interpolate_coefficient(&prev.mesh, &prev.c, &mesh).map_err(|e| e.context(format!("level {level}")))?;
                let res = run_level(problem, level, mesh, c0, cfg, observer)?;
                let (a, b) = (prev.state.final_grad_norm(), res.state.final_grad_norm());
                results.push(res);
                if b >= a || (b - a).abs() <= cfg.stabilization_rel_change * a {
                    break;
                }
            }
        }
        Workflow::InterpThenOptimize => {
            if cfg.max_refinements > 0 {
                let prev = results.last().unwrap();
                let (mut mesh, mut c) = (prev.mesh.clone(), prev.c.clone());
                for level in 1..=cfg.max_refinements {
                    let fine = refine_symmetric(&mesh, Region::G1).map_err(|e| e.context(format!("level {level}")))?;
                    c = interpolate_coefficient(&mesh, &c, &fine).map_err(|e| e.context(format!("level {level}")))?;
                    mesh = fine;
                }
                let res = run_level(problem, cfg.max_refinements, mesh, c, cfg, observer)?;
                results.push(res);
            }
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(values: Vec<f64>) -> GradientField {
        let n = values.len();
        GradientField { values, weights: vec![1.0; n] }
    }

    #[test]
    fn gamma_schedule() {
        let cfg = AgcmConfig::default();
        assert_eq!(cfg.gamma(0), 0.01);
        assert_eq!(cfg.gamma(1), 0.01 / 2f64.powf(0.9));
        for m in 0..20 {
            assert!(cfg.gamma(m + 1) < cfg.gamma(m));
        }
    }

    #[test]
    fn first_direction_is_steepest_descent() {
        let g = field(vec![1.0, -2.0, 3.0]);
        assert_eq!(cg_direction(&g, None, None).values, vec![-1.0, 2.0, -3.0]);
    }

    #[test]
    fn equal_gradients_give_beta_one() {
        let g = field(vec![1.0, 2.0]);
        let d = field(vec![0.5, -0.5]);
        assert_eq!(cg_direction(&g, Some(&g), Some(&d)).values, vec![-0.5, -2.5]);
    }

    #[test]
    fn doubled_gradient_gives_beta_four() {
        let gp = field(vec![1.0, 1.0]);
        let g = field(vec![2.0, 2.0]);
        let d = field(vec![1.0, 0.0]);
        assert_eq!(cg_direction(&g, Some(&gp), Some(&d)).values, vec![2.0, -2.0]);
    }

    #[test]
    fn zero_previous_gradient_restarts() {
        let g = field(vec![1.0, 2.0]);
        let z = field(vec![0.0, 0.0]);
        let d = field(vec![5.0, 5.0]);
        assert_eq!(cg_direction(&g, Some(&z), Some(&d)).values, vec![-1.0, -2.0]);
    }

    #[test]
    fn step_size_formula() {
        let g = field(vec![1.0, 2.0]);
        let a = step_size(&g, &g.scaled(-1.0), 0.01).unwrap().unwrap();
        assert!((a - 100.0).abs() < 1e-12);
        let perp = field(vec![2.0, -1.0]);
        assert_eq!(step_size(&g, &perp, 0.01).unwrap(), Some(0.0));
        // ((g, d)) = -2, ||d||^2 = 4.
        let g = field(vec![-1.0, 0.0]);
        let d = field(vec![2.0, 0.0]);
        assert_eq!(step_size(&g, &d, 0.01).unwrap(), Some(50.0));
        assert_eq!(step_size(&g, &field(vec![0.0, 0.0]), 0.01).unwrap(), None);
        assert!(step_size(&g, &d, 0.0).is_err());
    }

    #[test]
    fn update_is_clamped_and_local_to_g1() {
        let c = CoefficientField { values: vec![1.0, 1.2, 2.0], lower: 1.0, upper: 2.5 };
        let d = GradientField { values: vec![1.0, -1.0, 1.0], weights: vec![0.0, 1.0, 1.0] };
        assert_eq!(update_coefficient(&c, &d, 0.0), c);
        let out = update_coefficient(&c, &d, 0.7);
        assert_eq!(out.values, vec![1.0, 1.0, 2.5]);
    }

    #[test]
    fn stabilization_window() {
        assert!(!is_stabilized(&[1.0, 1.0, 1.0], 3, 1e-3));
        assert!(is_stabilized(&[5.0, 1.0, 1.0005, 1.0, 1.0001], 3, 1e-3));
        assert!(!is_stabilized(&[1.0, 1.0, 1.1, 1.1], 3, 1e-3));
    }
}
