//! Hybrid FE/FD space discretization and the explicit step shared by the
//! forward and adjoint solvers.
//!
//! Finite differences own every grid node that is not strictly inside
//! `D_FEM`, the seam `∂D_FEM` included. The mesh owns every vertex strictly
//! inside `D_FEM`. After each update the seam values are copied into the mesh
//! (outer layer) and the ring just inside the seam is copied into the grid
//! (inner layer). Both stencils use unit weights across the seam, so the two
//! blocks together form one symmetric stiffness matrix and one diagonal mass.

use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::fdgrid::{FdGrid, InterfaceMap};
use crate::mesh::TriMesh;

/// Solution at one time level: the full grid array and the full vertex array.
/// Non-owned entries hold exchanged copies.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    pub fd: Vec<f64>,
    pub fe: Vec<f64>,
}

/// Right-hand side of one step.
#[derive(Clone, Copy, Debug)]
pub enum Load<'a> {
    None,
    /// Boundary pressure on the top row, scaled by the lumped edge length.
    Top(f64),
    /// Nodal values on the observation nodes, already scaled.
    Observation(&'a [f64]),
}

/// Which absorbing boundaries are active at a time level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Damping {
    pub top: bool,
    pub bottom: bool,
}

#[derive(Clone, Debug)]
pub struct HybridOperator {
    pub grid: FdGrid,
    pub interface: InterfaceMap,
    pub n_vertices: usize,
    /// Owned grid indices.
    fd_nodes: Vec<usize>,
    fd_mass: Vec<f64>,
    fd_top: Vec<f64>,
    fd_bottom: Vec<f64>,
    fd_nbr: Vec<[usize; 4]>,
    fd_w: Vec<[f64; 4]>,
    /// Owned mesh vertices and their CSR stiffness rows.
    fe_nodes: Vec<usize>,
    fe_mass: Vec<f64>,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
    /// Observation nodes: bottom row, then top row (grid indices) and their
    /// lumped boundary lengths.
    pub obs_nodes: Vec<usize>,
    pub obs_weight: Vec<f64>,
    /// Union numbering: vertices `0..n_vertices`, then grid nodes outside the
    /// closed `D_FEM` in grid order.
    fd_union: Vec<usize>,
    union_fd: Vec<usize>,
    fd_pos: Vec<usize>,
    fe_pos: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl HybridOperator {
    pub fn new(mesh: &TriMesh, grid: &FdGrid, c: &CoefficientField) -> Result<Self> {
        if c.values.len() != mesh.n_triangles() {
            return Err(Error::Shape(format!(
                "coefficient has {} values for {} triangles",
                c.values.len(),
                mesh.n_triangles()
            )));
        }
        let interface = grid.match_interface(mesh)?;
        let h = grid.h;
        let (nx, ny) = (grid.nx, grid.ny);

        // Finite-volume 5-point stencil on the rectangle D with Neumann sides.
        let mut fd_nodes = Vec::new();
        let mut fd_mass = Vec::new();
        let mut fd_top = Vec::new();
        let mut fd_bottom = Vec::new();
        let mut fd_nbr = Vec::new();
        let mut fd_w = Vec::new();
        let mut fd_pos = vec![NONE; grid.n_nodes()];
        for jj in 0..ny {
            for ii in 0..nx {
                let idx = grid.index(ii, jj);
                if !grid.is_owned(idx) {
                    continue;
                }
                let edge_x = ii == 0 || ii == nx - 1;
                let edge_y = jj == 0 || jj == ny - 1;
                let fx = if edge_x { 0.5 } else { 1.0 };
                let fy = if edge_y { 0.5 } else { 1.0 };
                let mut nbr = [idx; 4];
                let mut w = [0.0; 4];
                // Horizontal links carry the vertical dual-edge length, and the
                // other way round.
                if ii > 0 {
                    nbr[0] = idx - 1;
                    w[0] = fy;
                }
                if ii + 1 < nx {
                    nbr[1] = idx + 1;
                    w[1] = fy;
                }
                if jj > 0 {
                    nbr[2] = idx - nx;
                    w[2] = fx;
                }
                if jj + 1 < ny {
                    nbr[3] = idx + nx;
                    w[3] = fx;
                }
                fd_pos[idx] = fd_nodes.len();
                fd_nodes.push(idx);
                fd_mass.push(fx * fy * h * h);
                fd_top.push(if jj == ny - 1 { fx * h } else { 0.0 });
                fd_bottom.push(if jj == 0 { fx * h } else { 0.0 });
                fd_nbr.push(nbr);
                fd_w.push(w);
            }
        }

        // Lumped P1 elements on the vertices strictly inside D_FEM.
        let seam = mesh.interface_vertices();
        let nv = mesh.n_vertices();
        let mut fe_pos = vec![NONE; nv];
        let fe_nodes: Vec<usize> = (0..nv).filter(|&v| !seam[v]).collect();
        for (k, &v) in fe_nodes.iter().enumerate() {
            fe_pos[v] = k;
        }
        // Across the seam both stencils must see the unit-weight link of an
        // unrefined lattice cell.
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if tri.iter().any(|&v| seam[v]) && (mesh.area(t) - 0.5 * h * h).abs() > 1e-9 * h * h {
                return Err(Error::Discretization(format!(
                    "triangle {t} touches the FE/FD seam but is not an unrefined lattice half-cell"
                )));
            }
        }
        let mut fe_mass = vec![0.0; fe_nodes.len()];
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); fe_nodes.len()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = mesh.corners(t);
            let area = mesh.area(t);
            if area <= 0.0 {
                return Err(Error::Discretization(format!("triangle {t} is not counter-clockwise")));
            }
            // Edge opposite each corner; grad phi_k is its rotation / (2 area).
            let e = [
                [p[2][0] - p[1][0], p[2][1] - p[1][1]],
                [p[0][0] - p[2][0], p[0][1] - p[2][1]],
                [p[1][0] - p[0][0], p[1][1] - p[0][1]],
            ];
            for a in 0..3 {
                let r = fe_pos[tri[a]];
                if r == NONE {
                    continue;
                }
                fe_mass[r] += c.values[t] * area / 3.0;
                for b in 0..3 {
                    let kab = (e[a][0] * e[b][0] + e[a][1] * e[b][1]) / (4.0 * area);
                    rows[r].push((tri[b], kab));
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(fe_nodes.len() + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(v, _)| v);
            let mut k = 0;
            while k < row.len() {
                let v = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == v {
                    s += row[k].1;
                    k += 1;
                }
                col.push(v);
                val.push(s);
            }
            row_ptr.push(col.len());
        }

        let mut obs_nodes = Vec::with_capacity(2 * nx);
        let mut obs_weight = Vec::with_capacity(2 * nx);
        for jj in [0, ny - 1] {
            for ii in 0..nx {
                obs_nodes.push(grid.index(ii, jj));
                obs_weight.push(if ii == 0 || ii == nx - 1 { 0.5 * h } else { h });
            }
        }

        let mut fd_union = vec![NONE; grid.n_nodes()];
        let mut union_fd = Vec::new();
        for &(g, v) in &interface.outer {
            fd_union[g] = v;
        }
        for &(g, v) in &interface.inner {
            fd_union[g] = v;
        }
        for &g in &fd_nodes {
            if fd_union[g] == NONE {
                fd_union[g] = nv + union_fd.len();
                union_fd.push(g);
            }
        }

        Ok(HybridOperator {
            grid: grid.clone(),
            interface,
            n_vertices: nv,
            fd_nodes,
            fd_mass,
            fd_top,
            fd_bottom,
            fd_nbr,
            fd_w,
            fe_nodes,
            fe_mass,
            row_ptr,
            col,
            val,
            obs_nodes,
            obs_weight,
            fd_union,
            union_fd,
            fd_pos,
            fe_pos,
        })
    }

    pub fn zero_state(&self) -> HybridState {
        HybridState { fd: vec![0.0; self.grid.n_nodes()], fe: vec![0.0; self.n_vertices] }
    }

    /// Size of the union node set (interface nodes counted once).
    pub fn n_union(&self) -> usize {
        self.n_vertices + self.union_fd.len()
    }

    /// Coordinates of every union node.
    pub fn union_coords(&self, mesh: &TriMesh) -> Vec<[f64; 2]> {
        let mut out = mesh.vertices.clone();
        out.extend(self.union_fd.iter().map(|&g| self.grid.coord(g)));
        out
    }

    /// Union index of every grid node (`usize::MAX` for grid nodes inside
    /// `D_FEM` that have no mesh vertex, i.e. inside `G0` or deeper than the
    /// inner ring).
    pub fn grid_to_union(&self, g: usize) -> Option<usize> {
        let u = self.fd_union[g];
        (u != NONE).then_some(u)
    }

    pub fn obs_union(&self) -> Vec<usize> {
        self.obs_nodes.iter().map(|&g| self.fd_union[g]).collect()
    }

    pub fn to_union(&self, s: &HybridState, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&s.fe);
        out.extend(self.union_fd.iter().map(|&g| s.fd[g]));
    }

    /// Scatter a union vector into both arrays, filling the exchange copies.
    pub fn from_union(&self, u: &[f64]) -> HybridState {
        let mut s = self.zero_state();
        s.fe.copy_from_slice(&u[..self.n_vertices]);
        for (g, &k) in self.fd_union.iter().enumerate() {
            if k != NONE {
                s.fd[g] = u[k];
            }
        }
        s
    }

    /// Union value of a union node read from a state.
    #[inline]
    pub fn union_value(&self, s: &HybridState, k: usize) -> f64 {
        if k < self.n_vertices {
            s.fe[k]
        } else {
            s.fd[self.union_fd[k - self.n_vertices]]
        }
    }

    /// Lumped mass on the union numbering (owned rows only; the seam belongs to
    /// the grid).
    pub fn union_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_union()];
        for (k, &v) in self.fe_nodes.iter().enumerate() {
            m[v] = self.fe_mass[k];
        }
        for (k, &g) in self.fd_nodes.iter().enumerate() {
            m[self.fd_union[g]] = self.fd_mass[k];
        }
        m
    }

    /// Absorbing boundary lengths on the union numbering.
    pub fn union_damping(&self, d: Damping) -> Vec<f64> {
        let mut b = vec![0.0; self.n_union()];
        for (k, &g) in self.fd_nodes.iter().enumerate() {
            b[self.fd_union[g]] = self.damping_at(k, d);
        }
        b
    }

    #[inline]
    fn damping_at(&self, k: usize, d: Damping) -> f64 {
        let mut b = 0.0;
        if d.top {
            b += self.fd_top[k];
        }
        if d.bottom {
            b += self.fd_bottom[k];
        }
        b
    }

    /// `K u` on the union numbering.
    pub fn apply_stiffness_union(&self, u: &[f64]) -> Vec<f64> {
        let s = self.from_union(u);
        let mut out = vec![0.0; self.n_union()];
        for (k, &v) in self.fe_nodes.iter().enumerate() {
            out[v] = self.fe_row(k, &s.fe);
        }
        for k in 0..self.fd_nodes.len() {
            out[self.fd_union[self.fd_nodes[k]]] = self.fd_row(k, &s.fd);
        }
        out
    }

    /// `u·K w` over owned rows, for two exchanged states.
    pub fn stiffness_form(&self, u: &HybridState, w: &HybridState) -> f64 {
        let mut s = 0.0;
        for (k, &v) in self.fe_nodes.iter().enumerate() {
            s += u.fe[v] * self.fe_row(k, &w.fe);
        }
        for (k, &g) in self.fd_nodes.iter().enumerate() {
            s += u.fd[g] * self.fd_row(k, &w.fd);
        }
        s
    }

    /// `a·M b` over owned rows.
    pub fn mass_form(&self, a: &HybridState, b: &HybridState) -> f64 {
        let mut s = 0.0;
        for (k, &v) in self.fe_nodes.iter().enumerate() {
            s += self.fe_mass[k] * a.fe[v] * b.fe[v];
        }
        for (k, &g) in self.fd_nodes.iter().enumerate() {
            s += self.fd_mass[k] * a.fd[g] * b.fd[g];
        }
        s
    }

    #[inline]
    fn fe_row(&self, k: usize, fe: &[f64]) -> f64 {
        let mut s = 0.0;
        for p in self.row_ptr[k]..self.row_ptr[k + 1] {
            s += self.val[p] * fe[self.col[p]];
        }
        s
    }

    #[inline]
    fn fd_row(&self, k: usize, fd: &[f64]) -> f64 {
        let g = self.fd_nodes[k];
        let (n, w) = (&self.fd_nbr[k], &self.fd_w[k]);
        let c = fd[g];
        w[0] * (c - fd[n[0]]) + w[1] * (c - fd[n[1]]) + w[2] * (c - fd[n[2]]) + w[3] * (c - fd[n[3]])
    }

    /// One explicit step
    /// `M(new - 2 cur + old)/τ² + K cur + (B_new new - B_old old)/(2τ) = load`,
    /// followed by the two-layer exchange.
    ///
    /// Both solvers pass the damping of the current level for both sides.
    pub fn step(
        &self,
        cur: &HybridState,
        old: &HybridState,
        new: &mut HybridState,
        tau: f64,
        damp_new: Damping,
        damp_old: Damping,
        load: Load<'_>,
    ) {
        let it2 = 1.0 / (tau * tau);
        let i2t = 0.5 / tau;
        for (k, &v) in self.fe_nodes.iter().enumerate() {
            let m = self.fe_mass[k] * it2;
            let ku = self.fe_row(k, &cur.fe);
            new.fe[v] = (2.0 * m * cur.fe[v] - ku - m * old.fe[v]) / m;
        }
        for (k, &g) in self.fd_nodes.iter().enumerate() {
            let m = self.fd_mass[k] * it2;
            let bn = self.damping_at(k, damp_new) * i2t;
            let bo = self.damping_at(k, damp_old) * i2t;
            let ku = self.fd_row(k, &cur.fd);
            new.fd[g] = (2.0 * m * cur.fd[g] - ku - (m - bo) * old.fd[g]) / (m + bn);
        }
        match load {
            Load::None => {}
            Load::Top(p) => {
                let nx = self.grid.nx;
                let top = self.grid.index(0, self.grid.ny - 1);
                for g in top..top + nx {
                    let k = self.fd_pos[g];
                    let m = self.fd_mass[k] * it2;
                    let bn = self.damping_at(k, damp_new) * i2t;
                    new.fd[g] += self.fd_top[k] * p / (m + bn);
                }
            }
            Load::Observation(values) => {
                for (&g, &f) in self.obs_nodes.iter().zip(values) {
                    let k = self.fd_pos[g];
                    let m = self.fd_mass[k] * it2;
                    let bn = self.damping_at(k, damp_new) * i2t;
                    new.fd[g] += f / (m + bn);
                }
            }
        }
        self.exchange(new);
    }

    /// Copy the seam from the grid into the mesh and the inner ring from the
    /// mesh into the grid.
    pub fn exchange(&self, s: &mut HybridState) {
        for &(g, v) in &self.interface.outer {
            s.fe[v] = s.fd[g];
        }
        for &(g, v) in &self.interface.inner {
            s.fd[g] = s.fe[v];
        }
    }

    /// Largest difference between the two copies of any exchange node.
    pub fn interface_mismatch(&self, s: &HybridState) -> f64 {
        self.interface
            .outer
            .iter()
            .chain(&self.interface.inner)
            .map(|&(g, v)| (s.fd[g] - s.fe[v]).abs())
            .fold(0.0, f64::max)
    }

    /// Vertices owned by the mesh (strictly inside `D_FEM`).
    pub fn fe_owned(&self) -> &[usize] {
        &self.fe_nodes
    }

    /// `(mass contribution factor)`: `∂M_v/∂c_K = |K|/3` for owned `v ∈ K`.
    pub fn is_fe_owned(&self, v: usize) -> bool {
        self.fe_pos[v] != NONE
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainGeometry, Rect};

    fn setup() -> (TriMesh, FdGrid, HybridOperator) {
        let geo = DomainGeometry::new(
            0.1,
            Rect::new([-1.1, 1.1], [-0.7, 0.7]),
            Rect::new([-0.8, 0.8], [-0.5, 0.5]),
            Rect::new([-0.5, 0.5], [-0.2, 0.2]),
            Rect::new([-0.2, 0.2], [-0.1, 0.1]),
        )
        .unwrap();
        let mesh = TriMesh::from_geometry(&geo).unwrap();
        let grid = FdGrid::from_geometry(&geo);
        let c = CoefficientField::unit(&mesh);
        let op = HybridOperator::new(&mesh, &grid, &c).unwrap();
        (mesh, grid, op)
    }

    #[test]
    fn union_counts_interface_nodes_once() {
        let (mesh, grid, op) = setup();
        let hole_interior = 15 * 9;
        assert_eq!(op.n_union(), mesh.n_vertices() + grid.n_nodes() - hole_interior - 2 * (16 + 10));
    }

    #[test]
    fn stiffness_is_symmetric_and_annihilates_constants() {
        let (_, _, op) = setup();
        let n = op.n_union();
        let ones = vec![1.0; n];
        let k1 = op.apply_stiffness_union(&ones);
        assert!(k1.iter().all(|v| v.abs() < 1e-12));
        let e = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let cols: Vec<Vec<f64>> = (0..n).map(|i| op.apply_stiffness_union(&e(i))).collect();
        for i in 0..n {
            for j in 0..n {
                assert!((cols[i][j] - cols[j][i]).abs() < 1e-12, "K[{i},{j}]");
            }
        }
    }

    #[test]
    fn mass_sums_to_domain_area() {
        let (mesh, _, op) = setup();
        let total: f64 = op.union_mass().iter().sum();
        let area = 2.2 * 1.4 - 0.4 * 0.2;
        assert!((total - area).abs() < 1e-12, "{total} vs {area}");
        assert_eq!(op.union_mass().len(), op.n_union());
        assert!(mesh.n_vertices() < op.n_union());
    }

    #[test]
    fn exchange_makes_copies_agree() {
        let (_, _, op) = setup();
        let mut s = op.zero_state();
        for (i, v) in s.fd.iter_mut().enumerate() {
            *v = i as f64;
        }
        for (i, v) in s.fe.iter_mut().enumerate() {
            *v = -(i as f64);
        }
        op.exchange(&mut s);
        assert_eq!(op.interface_mismatch(&s), 0.0);
    }
}
