//! Independent 1D reference for plane waves entering through the top.

use std::f64::consts::PI;

/// `u_tt = u_yy` on `[y0, y1]` with `u_y = p(t)` at the top until `t1`, then
/// `u_y = -u_t` there, and `u_y = u_t` at the bottom. Ghost-node boundary
/// closure, leapfrog in time. Returns `u` at every `stride`-th level for the
/// nodes `y0 + k h`.
pub fn oracle_1d(y0: f64, y1: f64, h: f64, tau: f64, n_steps: usize, omega: f64, t1: f64) -> Vec<Vec<f64>> {
    let n = ((y1 - y0) / h).round() as usize;
    let p = |t: f64| if t > 0.0 && t < 2.0 * PI / omega { (omega * t).sin() } else { 0.0 };
    let r = (tau / h).powi(2);
    let mut old = vec![0.0; n + 1];
    let mut cur = vec![0.0; n + 1];
    let mut out = vec![cur.clone()];
    for step in 0..n_steps {
        let t = step as f64 * tau;
        let mut new = vec![0.0; n + 1];
        for i in 1..n {
            new[i] = 2.0 * cur[i] - old[i] + r * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]);
        }
        // Top: ghost u_{n+1} = u_{n-1} + 2h g.
        if t <= t1 {
            new[n] = 2.0 * cur[n] - old[n] + r * (2.0 * cur[n - 1] - 2.0 * cur[n] + 2.0 * h * p(t));
        } else {
            // g = -(new - old)/(2 tau), solved for new.
            let a = tau * tau / h;
            new[n] = (2.0 * cur[n] - old[n] + r * (2.0 * cur[n - 1] - 2.0 * cur[n]) + a * old[n] / tau) / (1.0 + a / tau);
        }
        // Bottom: outward normal is -y, so u_y = u_t; ghost u_{-1} = u_1 - 2h u_t.
        let a = tau * tau / h;
        new[0] = (2.0 * cur[0] - old[0] + r * (2.0 * cur[1] - 2.0 * cur[0]) + a * old[0] / tau) / (1.0 + a / tau);
        old = cur;
        cur = new;
        out.push(cur.clone());
    }
    out
}

/// Layout aligned for `h` in {0.04, 0.02, 0.01}, with `G0` low enough that
/// its echo reaches depth 0.32 only after `t = 1.12`.
pub fn layout(h: f64) -> acoustica_core::GeometryConfig {
    acoustica_core::GeometryConfig {
        h,
        d: [-0.32, 0.32, -0.8, 0.8],
        dfem: [-0.24, 0.24, -0.6, 0.6],
        g1: [-0.12, 0.12, -0.48, 0.48],
        g0: [-0.04, 0.04, -0.08, 0.08],
    }
}

pub const T_WINDOW: f64 = 0.88;
pub const PROBE_TOP_DEPTH: f64 = 0.32;
pub const H_REF: f64 = 0.000625;
pub const N_REF: usize = 14080;

/// Max error on the centre line over probe depths `<= 0.32` and all levels
/// up to `t = 0.88`, against the oracle on `H_REF`.
pub fn centre_line_error(h: f64, omega: f64) -> f64 {
    use acoustica_core::{forward_solve, CoefficientField, FdGrid, HybridOperator, SourceSpec, TimeGrid, TriMesh};
    let geo = layout(h).build().unwrap();
    let mesh = TriMesh::from_geometry(&geo).unwrap();
    let grid = FdGrid::from_geometry(&geo);
    let c = CoefficientField::unit(&mesh);
    let src = SourceSpec::new(omega, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(T_WINDOW, h, 0.1, src.duration()).unwrap();
    let (hist, _) = forward_solve(&mesh, &grid, &c, &tg, &src).unwrap();
    assert_eq!(N_REF % tg.n_steps, 0);
    let oracle = oracle_1d(-0.8, 0.8, H_REF, T_WINDOW / N_REF as f64, N_REF, omega, src.duration());
    let stride = N_REF / tg.n_steps;
    let coords = HybridOperator::new(&mesh, &grid, &c).unwrap().union_coords(&mesh);
    let probes: Vec<(usize, usize)> = coords
        .iter()
        .enumerate()
        .filter(|(_, p)| p[0] == 0.0 && p[1] >= 0.8 - PROBE_TOP_DEPTH - 1e-12)
        .map(|(k, p)| (k, ((p[1] + 0.8) / H_REF).round() as usize))
        .collect();
    assert_eq!(probes.len(), (PROBE_TOP_DEPTH / h).round() as usize + 1);
    let mut err: f64 = 0.0;
    for n in 0..=tg.n_steps {
        let level = hist.level(n);
        for &(k, i) in &probes {
            err = err.max((level[k] - oracle[n * stride][i]).abs());
        }
    }
    err
}
