mod common;

use acoustica_core::{
    forward_solve, simulate, CoefficientField, HybridOperator, SourceSpec, TimeGrid,
};

#[test]
fn first_arrival_follows_the_plane_wave() {
    let (mesh, grid) = common::standard();
    let src = SourceSpec::new(40.0, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(0.6, 0.02, 0.1, src.duration()).unwrap();
    let (hist, _) = forward_solve(&mesh, &grid, &CoefficientField::unit(&mesh), &tg, &src).unwrap();
    let op = HybridOperator::new(&mesh, &grid, &CoefficientField::unit(&mesh)).unwrap();
    let coords = op.union_coords(&mesh);
    let h = 0.02;
    for depth in [0.1, 0.2, 0.3, 0.4] {
        let x2 = 0.62 - depth;
        let k = coords.iter().position(|p| p[0] == 0.0 && (p[1] - x2).abs() < 1e-9).unwrap();
        let n = (0..hist.n_levels()).find(|&n| hist.level(n)[k].abs() > 0.01).unwrap();
        let t = tg.time(n);
        assert!((t - depth).abs() <= 2.0 * h, "depth {depth}: arrival at {t}");
    }
}

#[test]
fn standard_configuration_runs_a_thousand_steps() {
    let (mesh, grid) = common::standard();
    let src = SourceSpec::new(60.0, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(2.0, 0.02, 0.1, src.duration()).unwrap();
    assert_eq!(tg.n_steps, 1000);
    assert!((tg.tau - 0.002).abs() < 1e-15);
    let (hist, trace) = forward_solve(&mesh, &grid, &CoefficientField::unit(&mesh), &tg, &src).unwrap();
    assert_eq!(hist.n_levels(), 1001);
    assert_eq!(trace.n_levels(), 1001);
    assert!(hist.data.iter().all(|v| v.is_finite()));
}

#[test]
fn symmetric_medium_gives_symmetric_field() {
    let (mesh, grid) = common::standard();
    let mut rng = common::rng(3);
    let c = common::symmetric_random(&mesh, &mut rng, 1.0);
    let op = HybridOperator::new(&mesh, &grid, &c).unwrap();
    let mirror = common::union_mirror(&op, &mesh);
    let src = SourceSpec::new(60.0, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(1.5, 0.02, 0.1, src.duration()).unwrap();
    let mut worst: f64 = 0.0;
    let mut buf = Vec::new();
    simulate(&op, &tg, &src, None, |_, s| {
        op.to_union(s, &mut buf);
        for (k, &j) in mirror.iter().enumerate() {
            worst = worst.max((buf[k] - buf[j]).abs());
        }
    })
    .unwrap();
    assert!(worst <= 1e-9, "{worst:e}");
}

#[test]
#[ignore = "does not hold at h = 0.02: grid-scale ringing of the pulse and the G0 echo keep |u| near 1e-2 at the top"]
fn homogeneous_target_is_transparent_at_the_top() {
    // After the pulse has left through the bottom nothing returns upward.
    let (mesh, grid) = common::standard();
    let src = SourceSpec::new(60.0, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(2.0, 0.02, 0.1, src.duration()).unwrap();
    let trace = acoustica_core::optimizer::homogeneous_trace(&mesh, &grid, &tg, &src).unwrap();
    let after = 1.24 + src.duration();
    let mut worst: f64 = 0.0;
    for n in 0..trace.n_levels() {
        if trace.times[n] > after {
            for (v, &top) in trace.level(n).iter().zip(&trace.top) {
                if top {
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    assert!(worst <= 1e-3, "{worst:e}");
}

#[test]
fn zero_amplitude_gives_zero_target() {
    let (mesh, grid) = common::coarse();
    let src = SourceSpec::new(40.0, 0.0).unwrap();
    let tg = TimeGrid::for_mesh(1.0, 0.1, 0.1, src.duration()).unwrap();
    let trace = acoustica_core::optimizer::homogeneous_trace(&mesh, &grid, &tg, &src).unwrap();
    assert!(trace.values.iter().all(|&v| v == 0.0));
}
