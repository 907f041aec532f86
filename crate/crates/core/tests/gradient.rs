mod common;

use acoustica_core::objective::functional_value;
use acoustica_core::optimizer::homogeneous_trace;
use acoustica_core::{functional_and_gradient, CoefficientField, SourceSpec, TikhonovConfig, TimeGrid};

#[test]
fn gradient_matches_central_differences() {
    let (mesh, grid) = common::coarse();
    let src = SourceSpec::new(40.0, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(1.0, mesh.min_edge_length(), 0.1, src.duration()).unwrap();
    let target = homogeneous_trace(&mesh, &grid, &tg, &src).unwrap();
    let guess = CoefficientField::constant_guess(&mesh, 1.5).unwrap();
    let mut rng = common::rng(7);
    let wiggle = common::random_g1(&mesh, &mut rng);
    let c = common::shifted(&guess, &wiggle, 0.2);
    let cfg = TikhonovConfig { gamma: 0.01, gamma0: 0.01, c_ref: guess.clone(), delta: 0.1 };
    let eval = functional_and_gradient(&mesh, &grid, &c, &tg, &src, &target, &cfg).unwrap();
    let eps = 1e-3;
    for k in 0..10 {
        let d = common::random_g1(&mesh, &mut rng);
        let fp = functional_value(&mesh, &grid, &common::shifted(&c, &d, eps), &tg, &src, &target, &cfg).unwrap();
        let fm = functional_value(&mesh, &grid, &common::shifted(&c, &d, -eps), &tg, &src, &target, &cfg).unwrap();
        let fd = (fp - fm) / (2.0 * eps);
        let adj: f64 = (0..mesh.n_triangles()).map(|t| eval.gradient.weights[t] * eval.gradient.values[t] * d[t]).sum();
        let rel = (fd - adj).abs() / fd.abs().max(adj.abs());
        println!("direction {k}: fd {fd:.6e} adjoint {adj:.6e} rel {rel:.2e}");
        assert!(rel <= 1e-2, "direction {k}: {rel}");
    }
}
