#[allow(dead_code)]
mod support {
    pub mod dot;
}

use support::dot::assemble;

#[test]
fn step_operators_are_adjoint() {
    let m = assemble(300);
    assert!(m.interior.len() > 100);
    let errs = m.dot_errors(20, 11);
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    assert!(worst <= 1e-8, "worst relative mismatch {worst:e}");
}

#[test]
fn pairing_identity_holds_for_unrestricted_vectors() {
    // Vectors touching the absorbing walls exercise the damping terms too.
    let m = assemble(300);
    let n = m.n;
    let mut a = vec![0.0; 2 * n];
    let mut b = vec![0.0; 2 * n];
    for i in 0..2 * n {
        a[i] = ((i * 31 % 17) as f64 - 8.0) / 8.0;
        b[i] = ((i * 13 % 23) as f64 - 11.0) / 11.0;
    }
    let la: Vec<f64> = (0..2 * n).map(|i| (0..2 * n).map(|j| m.forward[j][i] * a[j]).sum()).collect();
    let lb: Vec<f64> = (0..2 * n).map(|i| (0..2 * n).map(|j| m.adjoint[j][i] * b[j]).sum()).collect();
    let (lhs, rhs) = (m.pair(&la, &b), m.pair(&a, &lb));
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()));
}

#[test]
fn adjoint_step_differs_from_plain_transpose() {
    // The pairing matters: the adjoint step is not Lᵀ in the Euclidean sense.
    let m = assemble(300);
    let n = m.n;
    let mut diff: f64 = 0.0;
    for i in 0..2 * n {
        for j in 0..2 * n {
            diff = diff.max((m.adjoint[j][i] - m.forward[i][j]).abs());
        }
    }
    assert!(diff > 1e-3);
}
