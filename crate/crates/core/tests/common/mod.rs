#![allow(dead_code)]

use acoustica_core::{CoefficientField, FdGrid, GeometryConfig, Region, TriMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn coarse() -> (TriMesh, FdGrid) {
    let geo = GeometryConfig::coarse().build().unwrap();
    (TriMesh::from_geometry(&geo).unwrap(), FdGrid::from_geometry(&geo))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random values in `[-1, 1]` on G1, zero elsewhere.
pub fn random_g1(mesh: &TriMesh, rng: &mut ChaCha8Rng) -> Vec<f64> {
    mesh.element_region
        .iter()
        .map(|&r| if r == Region::G1 { rng.gen_range(-1.0..1.0) } else { 0.0 })
        .collect()
}

pub fn shifted(c: &CoefficientField, d: &[f64], eps: f64) -> CoefficientField {
    let mut out = c.clone();
    for (v, dv) in out.values.iter_mut().zip(d) {
        *v += eps * dv;
    }
    out
}

pub fn standard() -> (TriMesh, FdGrid) {
    let geo = GeometryConfig::standard().build().unwrap();
    (TriMesh::from_geometry(&geo).unwrap(), FdGrid::from_geometry(&geo))
}

/// Union index of the mirror image `(-x1, x2)` of every union node.
pub fn union_mirror(op: &acoustica_core::HybridOperator, mesh: &TriMesh) -> Vec<usize> {
    let coords = op.union_coords(mesh);
    let key = |p: [f64; 2]| ((p[0] * 1e6).round() as i64, (p[1] * 1e6).round() as i64);
    let index: std::collections::HashMap<_, _> = coords.iter().enumerate().map(|(k, &p)| (key(p), k)).collect();
    coords.iter().map(|&p| index[&key([-p[0], p[1]])]).collect()
}

/// Mirror-symmetric coefficient with values in `[1, 1 + spread]` on G1.
pub fn symmetric_random(mesh: &TriMesh, rng: &mut ChaCha8Rng, spread: f64) -> CoefficientField {
    let mirror = mesh.mirror_triangle_map().unwrap();
    let mut c = CoefficientField::constant_guess(mesh, 1.0 + spread).unwrap();
    for t in 0..mesh.n_triangles() {
        if mesh.element_region[t] == Region::G1 && mirror[t] >= t {
            let v = 1.0 + spread * rng.gen_range(0.0..1.0);
            c.values[t] = v;
            c.values[mirror[t]] = v;
        }
    }
    c
}
