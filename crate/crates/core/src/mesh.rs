//! Unstructured triangle mesh of `D_FEM`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, DomainGeometry, LatticeRect, Region};

/// Boundary edge with its tag (`Interface` on `∂D_FEM`, `Obstacle` on `∂G0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub element_region: Vec<Region>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub refinement_level: u32,
    /// Parent triangle (at the previous level) of every triangle; empty at level 0.
    pub parent_map: Vec<usize>,
}

pub fn triangle_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn angle_at(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1]];
    let v = [c[0] - a[0], c[1] - a[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot)
}

/// Smallest interior angle of a triangle, in degrees.
pub fn min_angle_deg(p: [[f64; 2]; 3]) -> f64 {
    let a = angle_at(p[0], p[1], p[2]);
    let b = angle_at(p[1], p[2], p[0]);
    let c = angle_at(p[2], p[0], p[1]);
    a.min(b).min(c).to_degrees()
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Total order used for canonical vertex numbering: by `x2`, then `x1`.
pub(crate) fn lex_cmp(a: &[f64; 2], b: &[f64; 2]) -> std::cmp::Ordering {
    a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0]))
}

impl TriMesh {
    /// Structured triangulation of the lattice rectangle `rect`. Every cell is
    /// split by one diagonal: `/` for cells right of `x1 = 0`, `\` for cells
    /// left of it, so the pattern is its own mirror image. `region` tags a cell
    /// by its lower-left lattice corner; cells tagged `G0` are left out.
    pub fn structured(
        rect: LatticeRect,
        coord: impl Fn(i64) -> f64,
        region: impl Fn(i64, i64) -> Region,
    ) -> Result<TriMesh> {
        if rect.i[1] <= rect.i[0] || rect.j[1] <= rect.j[0] {
            return Err(Error::Geometry("empty triangulation rectangle".into()));
        }
        // Vertices used by at least one kept cell, in (j, i) order.
        let used = |i: i64, j: i64| {
            [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)]
                .iter()
                .any(|&(ci, cj)| rect.contains_cell(ci, cj) && region(ci, cj) != Region::G0)
        };
        let mut index = HashMap::new();
        let mut vertices = Vec::new();
        for j in rect.j[0]..=rect.j[1] {
            for i in rect.i[0]..=rect.i[1] {
                if used(i, j) {
                    index.insert((i, j), vertices.len());
                    vertices.push([coord(i), coord(j)]);
                }
            }
        }
        let mut triangles = Vec::new();
        let mut element_region = Vec::new();
        for cj in rect.j[0]..rect.j[1] {
            for ci in rect.i[0]..rect.i[1] {
                let r = region(ci, cj);
                if r == Region::G0 {
                    continue;
                }
                let ll = index[&(ci, cj)];
                let lr = index[&(ci + 1, cj)];
                let ur = index[&(ci + 1, cj + 1)];
                let ul = index[&(ci, cj + 1)];
                // Cell centre is at (ci + 1/2) h, never on the axis.
                if ci >= 0 {
                    triangles.push([ll, lr, ur]);
                    triangles.push([ll, ur, ul]);
                } else {
                    triangles.push([ll, lr, ul]);
                    triangles.push([lr, ur, ul]);
                }
                element_region.push(r);
                element_region.push(r);
            }
        }
        let mut mesh = TriMesh {
            vertices,
            triangles,
            element_region,
            boundary_edges: Vec::new(),
            refinement_level: 0,
            parent_map: Vec::new(),
        };
        // Outer edges of the rectangle are the seam; other free edges bound holes.
        let on_rect_boundary = |p: [f64; 2]| {
            p[0] == coord(rect.i[0]) || p[0] == coord(rect.i[1]) || p[1] == coord(rect.j[0]) || p[1] == coord(rect.j[1])
        };
        let mut edges = Vec::new();
        for (a, b) in mesh.free_edges() {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let seam = on_rect_boundary(pa) && on_rect_boundary(pb) && (pa[0] == pb[0] || pa[1] == pb[1]);
            let tag = if seam { BoundaryTag::Interface } else { BoundaryTag::Obstacle };
            edges.push(BoundaryEdge { v: [a, b], tag });
        }
        mesh.boundary_edges = edges;
        Ok(mesh)
    }

    /// Level-0 mesh of `D_FEM` for a validated geometry.
    pub fn from_geometry(geometry: &DomainGeometry) -> Result<TriMesh> {
        TriMesh::structured(
            geometry.dfem_lattice,
            |k| geometry.lattice_coord(k),
            |ci, cj| geometry.cell_region(ci, cj),
        )
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        triangle_area(self.corners(t))
    }

    pub fn total_area(&self) -> f64 {
        compensated_sum((0..self.n_triangles()).map(|t| self.area(t)))
    }

    pub fn region_area(&self, region: Region) -> f64 {
        let areas = (0..self.n_triangles())
            .filter(|&t| self.element_region[t] == region)
            .map(|t| self.area(t));
        compensated_sum(areas)
    }

    pub fn count_region(&self, region: Region) -> usize {
        self.element_region.iter().filter(|&&r| r == region).count()
    }

    pub fn min_angle_deg(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| min_angle_deg(self.corners(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Shortest edge over the whole mesh: the `h` entering the CFL bound.
    pub fn min_edge_length(&self) -> f64 {
        let mut h = f64::INFINITY;
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (self.vertices[tri[k]], self.vertices[tri[(k + 1) % 3]]);
                h = h.min((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        h
    }

    /// Map from undirected edge to the (one or two) triangles containing it.
    pub fn edge_triangles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    /// Edges with exactly one incident triangle, sorted.
    pub fn free_edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self
            .edge_triangles()
            .into_iter()
            .filter(|(_, ts)| ts.len() == 1)
            .map(|(e, _)| e)
            .collect();
        out.sort_unstable();
        out
    }

    /// Vertices lying on an `Interface` edge, i.e. on `∂D_FEM`.
    pub fn interface_vertices(&self) -> Vec<bool> {
        let mut flag = vec![false; self.n_vertices()];
        for e in &self.boundary_edges {
            if e.tag == BoundaryTag::Interface {
                flag[e.v[0]] = true;
                flag[e.v[1]] = true;
            }
        }
        flag
    }

    /// Vertices of at least one `G1` triangle, ascending.
    pub fn g1_vertices(&self) -> Vec<usize> {
        let mut flag = vec![false; self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.element_region[t] == Region::G1 {
                for &v in tri {
                    flag[v] = true;
                }
            }
        }
        (0..self.n_vertices()).filter(|&v| flag[v]).collect()
    }

    /// Conformity check: every edge is shared by at most two triangles and no
    /// vertex sits in the interior of another triangle's edge.
    pub fn is_conforming(&self) -> bool {
        let edges = self.edge_triangles();
        if edges.values().any(|ts| ts.len() > 2) {
            return false;
        }
        // A hanging node lies at the midpoint of some edge but is not an endpoint.
        let mut at: HashMap<(u64, u64), usize> = HashMap::with_capacity(self.n_vertices());
        for (v, p) in self.vertices.iter().enumerate() {
            at.insert((p[0].to_bits(), p[1].to_bits()), v);
        }
        for &(a, b) in edges.keys() {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            if at.contains_key(&(m[0].to_bits(), m[1].to_bits())) {
                return false;
            }
        }
        true
    }

    /// Largest distance between a reflected vertex and its nearest mirror
    /// partner, plus whether the triangles and their region tags map onto
    /// themselves under the reflection.
    pub fn mirror_defect(&self) -> (f64, bool) {
        let mut sorted: Vec<[f64; 2]> = self.vertices.clone();
        sorted.sort_by(lex_cmp);
        let mut mirrored: Vec<[f64; 2]> = self.vertices.iter().map(|p| [-p[0], p[1]]).collect();
        mirrored.sort_by(lex_cmp);
        let dist = sorted
            .iter()
            .zip(&mirrored)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max);
        let same = match self.mirror_triangle_map() {
            Some(map) => map
                .iter()
                .enumerate()
                .all(|(t, &s)| self.element_region[t] == self.element_region[s]),
            None => false,
        };
        (dist, same)
    }

    /// Index of the mirror partner of every vertex (`x1 -> -x1`).
    pub fn mirror_vertex_map(&self) -> Option<Vec<usize>> {
        let key = |x: f64| if x == 0.0 { 0u64 } else { x.to_bits() };
        let lookup: HashMap<(u64, u64), usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(v, p)| ((key(p[0]), key(p[1])), v))
            .collect();
        self.vertices
            .iter()
            .map(|p| lookup.get(&(key(-p[0]), key(p[1]))).copied())
            .collect()
    }

    /// Index of the mirror partner of every triangle.
    pub fn mirror_triangle_map(&self) -> Option<Vec<usize>> {
        let vmap = self.mirror_vertex_map()?;
        let mut lookup = HashMap::with_capacity(self.n_triangles());
        for (t, tri) in self.triangles.iter().enumerate() {
            let mut s = *tri;
            s.sort_unstable();
            lookup.insert(s, t);
        }
        self.triangles
            .iter()
            .map(|tri| {
                let mut s = [vmap[tri[0]], vmap[tri[1]], vmap[tri[2]]];
                s.sort_unstable();
                lookup.get(&s).copied()
            })
            .collect()
    }

    /// Renumber vertices into canonical `(x2, x1)` lexicographic order.
    pub(crate) fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.n_vertices()).collect();
        order.sort_by(|&a, &b| lex_cmp(&self.vertices[a], &self.vertices[b]));
        let mut new_index = vec![0usize; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        self.vertices = order.iter().map(|&old| self.vertices[old]).collect();
        for tri in &mut self.triangles {
            for v in tri.iter_mut() {
                *v = new_index[*v];
            }
        }
        for e in &mut self.boundary_edges {
            e.v = [new_index[e.v[0]], new_index[e.v[1]]];
        }
        self.boundary_edges
            .sort_by_key(|e| edge_key(e.v[0], e.v[1]));
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn unit_square(h_units: i64) -> TriMesh {
        let rect = LatticeRect { i: [-h_units, h_units], j: [-h_units, h_units] };
        TriMesh::structured(rect, |k| k as f64 * 0.5 / h_units as f64 * 1.0, |_, _| Region::G1).unwrap()
    }

    #[test]
    fn unit_square_splits_into_eight_triangles() {
        // (-0.5, 0.5)^2 with h = 0.5: 2x2 cells, 8 triangles of area 1/8.
        let mesh = unit_square(1);
        assert_eq!(mesh.n_triangles(), 8);
        assert_eq!(mesh.n_vertices(), 9);
        for t in 0..8 {
            assert!((mesh.area(t) - 0.125).abs() < 1e-15);
        }
        assert!((mesh.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangles_are_counter_clockwise_right_isosceles() {
        let mesh = unit_square(3);
        for t in 0..mesh.n_triangles() {
            assert!(mesh.area(t) > 0.0);
            assert!((min_angle_deg(mesh.corners(t)) - 45.0).abs() < 1e-9);
        }
    }

    #[test]
    fn structured_mesh_is_mirror_symmetric_and_conforming() {
        let mesh = unit_square(4);
        let (dist, same) = mesh.mirror_defect();
        assert_eq!(dist, 0.0);
        assert!(same);
        assert!(mesh.is_conforming());
    }

    #[test]
    fn every_axis_vertex_has_six_triangles() {
        // The mirrored diagonal pattern keeps the valence of interior vertices at
        // six, so the lumped mass is h^2 everywhere on the structured part.
        let mesh = unit_square(4);
        let mut valence = vec![0usize; mesh.n_vertices()];
        for tri in &mesh.triangles {
            for &v in tri {
                valence[v] += 1;
            }
        }
        for (v, p) in mesh.vertices.iter().enumerate() {
            let interior = p[0].abs() < 0.5 - 1e-12 && p[1].abs() < 0.5 - 1e-12;
            if interior {
                assert_eq!(valence[v], 6, "vertex {p:?}");
            }
        }
    }

    #[test]
    fn standard_mesh_has_hole_and_tagged_boundaries() {
        let g = DomainGeometry::new(
            0.02,
            Rect::new([-1.1, 1.1], [-0.62, 0.62]),
            Rect::new([-1.0, 1.0], [-0.52, 0.52]),
            Rect::new([-0.3, 0.3], [-0.18, 0.18]),
            Rect::new([-0.14, 0.14], [-0.08, 0.08]),
        )
        .unwrap();
        let mesh = TriMesh::from_geometry(&g).unwrap();
        assert!((mesh.total_area() - (g.dfem_extent.area() - g.g0_extent.area())).abs() < 1e-9);
        assert!((mesh.region_area(Region::G1) - g.g1_area()).abs() < 1e-9);
        let seam: usize = mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Interface).count();
        let wall: usize = mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Obstacle).count();
        assert_eq!(seam, 2 * (100 + 52));
        assert_eq!(wall, 2 * (14 + 8));
        assert!(mesh.min_angle_deg() >= 20.0);
        let (_, same) = mesh.mirror_defect();
        assert!(same);
        // Canonical ordering: lexicographic by (x2, x1).
        for w in mesh.vertices.windows(2) {
            assert_eq!(lex_cmp(&w[0], &w[1]), std::cmp::Ordering::Less);
        }
    }
}
