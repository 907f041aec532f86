//! Step-operator matrices for the forward and adjoint recursions.
//!
//! Pairs are ordered by forward time. With `A = M/τ² + B/(2τ)` and
//! `C = M/τ² - B/(2τ)`, one forward step is
//! `L(u^{n-1}, u^n) = (u^n, A⁻¹(P u^n - C u^{n-1}))` and one adjoint step is
//! `L*(λ^k, λ^{k+1}) = (λ^{k-1}, λ^k)`. They satisfy `Lᵀ S = S L*` for the
//! pairing `xᵀ S y = -x1ᵀ C y2 + x2ᵀ A y1`.

use acoustica_core::adjoint::adjoint_step;
use acoustica_core::wave::forward_step;
use acoustica_core::{CoefficientField, FdGrid, GeometryConfig, HybridOperator, SourceSpec, TimeGrid, TriMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct StepMatrices {
    pub n: usize,
    pub forward: Vec<Vec<f64>>,
    pub adjoint: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    /// Union nodes at least two cells from every wall.
    pub interior: Vec<usize>,
}

/// Columns of `L` and `L*` at step `n` of a coarse run, by unit vectors.
pub fn assemble(n_step: usize) -> StepMatrices {
    let geo = GeometryConfig::coarse().build().unwrap();
    let mesh = TriMesh::from_geometry(&geo).unwrap();
    let grid = FdGrid::from_geometry(&geo);
    let mut c = CoefficientField::constant_guess(&mesh, 1.5).unwrap();
    for (k, v) in c.values.iter_mut().enumerate() {
        if c.upper > 1.0 && *v > 1.0 {
            *v = 1.0 + 0.5 * ((k * 7 % 11) as f64 / 10.0);
        }
    }
    let op = HybridOperator::new(&mesh, &grid, &c).unwrap();
    let src = SourceSpec::new(40.0, 1.0).unwrap();
    let tg = TimeGrid::for_mesh(1.0, mesh.min_edge_length(), 0.1, src.duration()).unwrap();
    assert!(tg.time(n_step) > tg.t1, "pick a step with the absorbing top active");
    let n = op.n_union();
    let tau = tg.tau;
    let m = op.union_mass();
    let b = op.union_damping(tg.damping(n_step));
    let a: Vec<f64> = m.iter().zip(&b).map(|(m, b)| m / (tau * tau) + b / (2.0 * tau)).collect();
    let cc: Vec<f64> = m.iter().zip(&b).map(|(m, b)| m / (tau * tau) - b / (2.0 * tau)).collect();
    assert!(m.iter().all(|&x| x > 0.0));

    let zero_load = vec![0.0; op.obs_nodes.len()];
    let apply = |x1: &[f64], x2: &[f64], adjoint: bool| -> Vec<f64> {
        let mut new = op.zero_state();
        let mut buf = Vec::new();
        let mut out = Vec::with_capacity(2 * n);
        if adjoint {
            let (cur, old) = (op.from_union(x1), op.from_union(x2));
            adjoint_step(&op, &tg, n_step, &cur, &old, &mut new, &zero_load);
            op.to_union(&new, &mut buf);
            out.extend_from_slice(&buf);
            out.extend_from_slice(x1);
        } else {
            let (old, cur) = (op.from_union(x1), op.from_union(x2));
            forward_step(&op, &tg, &src, n_step, &cur, &old, &mut new);
            op.to_union(&new, &mut buf);
            out.extend_from_slice(x2);
            out.extend_from_slice(&buf);
        }
        out
    };
    let mut forward = Vec::with_capacity(2 * n);
    let mut adjoint = Vec::with_capacity(2 * n);
    for j in 0..2 * n {
        let mut e = vec![0.0; 2 * n];
        e[j] = 1.0;
        forward.push(apply(&e[..n], &e[n..], false));
        adjoint.push(apply(&e[..n], &e[n..], true));
    }
    let coords = op.union_coords(&mesh);
    let h = geo.h;
    let interior = (0..n)
        .filter(|&k| {
            let p = coords[k];
            let inside_d = p[0] > -1.1 + 2.0 * h - 1e-9 && p[0] < 1.1 - 2.0 * h + 1e-9 && p[1] > -0.7 + 2.0 * h - 1e-9 && p[1] < 0.7 - 2.0 * h + 1e-9;
            let off_hole = !(p[0] > -0.2 - 2.0 * h - 1e-9 && p[0] < 0.2 + 2.0 * h + 1e-9 && p[1] > -0.1 - 2.0 * h - 1e-9 && p[1] < 0.1 + 2.0 * h + 1e-9);
            inside_d && off_hole
        })
        .collect();
    StepMatrices { n, forward, adjoint, a, c: cc, interior }
}

fn matvec(cols: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; cols[0].len()];
    for (col, &xj) in cols.iter().zip(x) {
        if xj != 0.0 {
            for (yi, ci) in y.iter_mut().zip(col) {
                *yi += ci * xj;
            }
        }
    }
    y
}

impl StepMatrices {
    /// `xᵀ S y = -x1ᵀ C y2 + x2ᵀ A y1`.
    pub fn pair(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            s += -x[i] * self.c[i] * y[n + i] + x[n + i] * self.a[i] * y[i];
        }
        s
    }

    /// Relative mismatch of `⟨L a, b⟩` and `⟨a, L* b⟩` for random pairs
    /// supported on interior nodes.
    pub fn dot_errors(&self, pairs: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random = |rng: &mut ChaCha8Rng| {
            let mut v = vec![0.0; 2 * self.n];
            for &k in &self.interior {
                v[k] = rng.gen_range(-1.0..1.0);
                v[self.n + k] = rng.gen_range(-1.0..1.0);
            }
            v
        };
        (0..pairs)
            .map(|_| {
                let (a, b) = (random(&mut rng), random(&mut rng));
                let lhs = self.pair(&matvec(&self.forward, &a), &b);
                let rhs = self.pair(&a, &matvec(&self.adjoint, &b));
                (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
            })
            .collect()
    }
}
