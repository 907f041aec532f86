//! Structured square grid covering `D`, with a hole where `D_FEM` sits.

use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, LatticeRect};
use crate::mesh::TriMesh;

/// Node-centred grid over the lattice rectangle of `D`.
///
/// Nodes strictly inside `D_FEM` belong to the finite element side; of those,
/// the ring one step inside the seam (`interface_inner`) is mirrored here so
/// the 5-point stencil can be applied on the seam itself (`interface_outer`).
#[derive(Clone, Debug)]
pub struct FdGrid {
    pub h: f64,
    /// Lattice index of node `(0, 0)`.
    pub origin: [i64; 2],
    pub nx: usize,
    pub ny: usize,
    /// Lattice rectangle of `D_FEM`; nodes strictly inside it are not owned here.
    pub hole: LatticeRect,
    /// Grid indices on `∂D_FEM`, in `(x2, x1)` order.
    pub interface_outer: Vec<usize>,
    /// Grid indices one step inside `∂D_FEM`, in `(x2, x1)` order.
    pub interface_inner: Vec<usize>,
}

impl FdGrid {
    pub fn from_geometry(geometry: &DomainGeometry) -> FdGrid {
        let d = geometry.d_lattice;
        let hole = geometry.dfem_lattice;
        let nx = (d.i[1] - d.i[0] + 1) as usize;
        let ny = (d.j[1] - d.j[0] + 1) as usize;
        let mut grid = FdGrid {
            h: geometry.h,
            origin: [d.i[0], d.j[0]],
            nx,
            ny,
            hole,
            interface_outer: Vec::new(),
            interface_inner: Vec::new(),
        };
        for idx in 0..nx * ny {
            let (i, j) = grid.lattice(idx);
            if hole.on_boundary(i, j) {
                grid.interface_outer.push(idx);
            } else if hole.strictly_contains_node(i, j) {
                let touches_seam = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                    .iter()
                    .any(|&(a, b)| hole.on_boundary(a, b));
                if touches_seam {
                    grid.interface_inner.push(idx);
                }
            }
        }
        grid
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, ii: usize, jj: usize) -> usize {
        jj * self.nx + ii
    }

    /// Absolute lattice coordinates of grid node `idx`.
    #[inline]
    pub fn lattice(&self, idx: usize) -> (i64, i64) {
        let ii = (idx % self.nx) as i64;
        let jj = (idx / self.nx) as i64;
        (self.origin[0] + ii, self.origin[1] + jj)
    }

    /// Same formula as [`DomainGeometry::lattice_coord`].
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.lattice(idx);
        [i as f64 * self.h, j as f64 * self.h]
    }

    /// Nodes updated by the finite difference scheme: everything not strictly
    /// inside `D_FEM`.
    pub fn is_owned(&self, idx: usize) -> bool {
        let (i, j) = self.lattice(idx);
        !self.hole.strictly_contains_node(i, j)
    }

    pub fn on_top(&self, idx: usize) -> bool {
        idx / self.nx == self.ny - 1
    }

    pub fn on_bottom(&self, idx: usize) -> bool {
        idx / self.nx == 0
    }

    pub fn on_side(&self, idx: usize) -> bool {
        let ii = idx % self.nx;
        ii == 0 || ii == self.nx - 1
    }

    /// Pairs each interface node with the mesh vertex at the bit-identical
    /// position. Fails unless the matching is a bijection onto the seam
    /// vertices (outer layer) and onto mesh vertices (inner layer).
    pub fn match_interface(&self, mesh: &TriMesh) -> Result<InterfaceMap> {
        let lookup: std::collections::HashMap<(u64, u64), usize> = mesh
            .vertices
            .iter()
            .enumerate()
            .map(|(v, p)| ((p[0].to_bits(), p[1].to_bits()), v))
            .collect();
        let find = |idx: usize| {
            let p = self.coord(idx);
            lookup.get(&(p[0].to_bits(), p[1].to_bits())).copied().ok_or_else(|| {
                Error::Discretization(format!("grid node {p:?} has no coincident mesh vertex"))
            })
        };
        let outer: Vec<(usize, usize)> = self
            .interface_outer
            .iter()
            .map(|&g| find(g).map(|v| (g, v)))
            .collect::<Result<_>>()?;
        let inner: Vec<(usize, usize)> = self
            .interface_inner
            .iter()
            .map(|&g| find(g).map(|v| (g, v)))
            .collect::<Result<_>>()?;
        let seam = mesh.interface_vertices();
        let n_seam = seam.iter().filter(|&&s| s).count();
        let mut seen = vec![false; mesh.n_vertices()];
        for &(_, v) in outer.iter().chain(&inner) {
            if seen[v] {
                return Err(Error::Discretization(format!("mesh vertex {v} matched twice")));
            }
            seen[v] = true;
        }
        if outer.len() != n_seam || outer.iter().any(|&(_, v)| !seam[v]) {
            return Err(Error::Discretization(
                "grid seam nodes do not coincide with the mesh seam vertices".into(),
            ));
        }
        if inner.iter().any(|&(_, v)| seam[v]) {
            return Err(Error::Discretization("inner exchange layer touches the seam".into()));
        }
        Ok(InterfaceMap { outer, inner })
    }
}

/// Grid-index / mesh-vertex pairs for the two exchange layers.
#[derive(Clone, Debug)]
pub struct InterfaceMap {
    /// `∂D_FEM`: finite differences own these, the mesh copy is overwritten.
    pub outer: Vec<(usize, usize)>,
    /// One step inside: the mesh owns these, the grid copy is overwritten.
    pub inner: Vec<(usize, usize)>,
}
