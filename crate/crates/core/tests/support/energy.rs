//! Discrete energy bookkeeping for forward and adjoint runs.

use acoustica_core::adjoint::adjoint_sweep;
use acoustica_core::optimizer::homogeneous_trace;
use acoustica_core::wave::pair_energy;
use acoustica_core::{
    simulate, CoefficientField, FdGrid, GeometryConfig, HybridOperator, ResidualSource, SourceSpec, TimeGrid, TriMesh,
};

pub fn standard() -> (TriMesh, FdGrid) {
    let geo = GeometryConfig::standard().build().unwrap();
    (TriMesh::from_geometry(&geo).unwrap(), FdGrid::from_geometry(&geo))
}

pub struct ForwardEnergy {
    pub e_max: f64,
    /// Largest step-to-step increase after the source cutoff.
    pub worst_increase: f64,
}

pub fn forward_energy(mesh: &TriMesh, grid: &FdGrid, omega: f64, t_final: f64) -> ForwardEnergy {
    let src = SourceSpec::new(omega, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(t_final, mesh.min_edge_length(), 0.1, src.duration()).unwrap();
    let op = HybridOperator::new(mesh, grid, &CoefficientField::unit(mesh)).unwrap();
    let mut prev = op.zero_state();
    let mut e = Vec::with_capacity(tg.n_steps);
    simulate(&op, &tg, &src, None, |n, s| {
        if n > 0 {
            e.push((tg.time(n), pair_energy(&op, s, &prev, tg.tau)));
        }
        prev = s.clone();
    })
    .unwrap();
    let e_max = e.iter().map(|x| x.1).fold(0.0, f64::max);
    let worst_increase = e
        .windows(2)
        .filter(|w| w[0].0 > tg.t1)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    ForwardEnergy { e_max, worst_increase }
}

/// Max adjoint energy divided by the squared weighted residual norm, for
/// `c ≡ 1` driven by the misfit of a `c0 = 1.5` run.
pub fn adjoint_energy_ratio(mesh: &TriMesh, grid: &FdGrid, omega: f64, t_final: f64, delta: f64) -> f64 {
    let src = SourceSpec::new(omega, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(t_final, mesh.min_edge_length(), 0.1, src.duration()).unwrap();
    let guess = CoefficientField::constant_guess(mesh, 1.5).unwrap();
    let trace = simulate(&HybridOperator::new(mesh, grid, &guess).unwrap(), &tg, &src, None, |_, _| {}).unwrap();
    let target = homogeneous_trace(mesh, grid, &tg, &src).unwrap();
    let res = ResidualSource::from_traces(&trace, &target, &tg, delta).unwrap();
    let op = HybridOperator::new(mesh, grid, &CoefficientField::unit(mesh)).unwrap();
    let mut next = op.zero_state();
    let mut e_max: f64 = 0.0;
    adjoint_sweep(&op, &tg, &res, |_, s| {
        e_max = e_max.max(pair_energy(&op, s, &next, tg.tau));
        next = s.clone();
    })
    .unwrap();
    e_max / res.norm_sq(&tg)
}
