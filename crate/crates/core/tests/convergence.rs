//! Plane-wave propagation in a homogeneous medium against an independent 1D
//! finite-difference solution.

#[allow(dead_code)]
mod support {
    pub mod oracle1d;
}

use std::f64::consts::PI;

use acoustica_core::{forward_solve, CoefficientField, FdGrid, HybridOperator, SourceSpec, TimeGrid, TriMesh};
use support::oracle1d::{layout, oracle_1d};

#[test]
fn oracle_matches_dalembert() {
    // Before anything reflects, u(depth s, t) = F(t - s) with
    // F(x) = (1 - cos ωx)/ω on [0, 2π/ω] and 0 elsewhere.
    let omega = 10.0;
    let (h, tau) = (0.000625, 0.0000625);
    let u = oracle_1d(-0.8, 0.8, h, tau, 8000, omega, 2.0 * PI / omega);
    let big_f = |x: f64| if x > 0.0 && x < 2.0 * PI / omega { (1.0 - (omega * x).cos()) / omega } else { 0.0 };
    let n = u[0].len() - 1;
    let mut err: f64 = 0.0;
    for (k, level) in u.iter().enumerate() {
        let t = k as f64 * tau;
        for (i, &v) in level.iter().enumerate() {
            err = err.max((v - big_f(t - (n - i) as f64 * h)).abs());
        }
    }
    assert!(err < 5e-5, "oracle deviates from d'Alembert by {err}");
}

#[test]
fn plane_wave_reduces_to_the_1d_scheme() {
    // Homogeneous medium, structured mesh: every row is uniform in x1 and the
    // centre line follows the same-h 1D scheme until the G0 echo arrives.
    for h in [0.04, 0.02] {
        let geo = layout(h).build().unwrap();
        let mesh = TriMesh::from_geometry(&geo).unwrap();
        let grid = FdGrid::from_geometry(&geo);
        let c = CoefficientField::unit(&mesh);
        let src = SourceSpec::new(10.0, 1.0).unwrap();
        let tg = TimeGrid::for_mesh(0.88, h, 0.1, src.duration()).unwrap();
        let (hist, _) = forward_solve(&mesh, &grid, &c, &tg, &src).unwrap();
        let o = oracle_1d(-0.8, 0.8, h, tg.tau, tg.n_steps, 10.0, src.duration());
        let coords = HybridOperator::new(&mesh, &grid, &c).unwrap().union_coords(&mesh);
        let mut err: f64 = 0.0;
        for (k, p) in coords.iter().enumerate() {
            if p[0] == 0.0 && p[1] >= 0.48 - 1e-12 {
                let i = ((p[1] + 0.8) / h).round() as usize;
                for n in 0..=tg.n_steps {
                    err = err.max((hist.level(n)[k] - o[n][i]).abs());
                }
            }
        }
        // Leapfrog leaks a tiny precursor of the echo ahead of the front.
        assert!(err < 1e-6, "h = {h}: {err:e}");
    }
}
