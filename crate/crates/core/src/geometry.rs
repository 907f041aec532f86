//! Decomposed computational domain.
//!
//! The outer rectangle `D` holds the structured finite-difference region; the
//! inner rectangle `D_FEM` is triangulated and split into the shielded core
//! `G0` (a hole with a rigid wall), the design annulus `G1` and the buffer
//! `G2 = D_FEM \ (G0 ∪ G1)`. All rectangles are axis-aligned, share one
//! lattice of spacing `h`, and are mirror-symmetric about `x1 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `x1[0] < x1 < x1[1]`, `x2[0] < x2 < x2[1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Rect {
    pub const fn new(x1: [f64; 2], x2: [f64; 2]) -> Self {
        Rect { x1, x2 }
    }

    pub fn width(&self) -> f64 {
        self.x1[1] - self.x1[0]
    }

    pub fn height(&self) -> f64 {
        self.x2[1] - self.x2[0]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Strict containment: `other` lies in the open interior of `self`.
    pub fn strictly_contains(&self, other: &Rect) -> bool {
        self.x1[0] < other.x1[0]
            && other.x1[1] < self.x1[1]
            && self.x2[0] < other.x2[0]
            && other.x2[1] < self.x2[1]
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        self.x1[0] <= p[0] && p[0] <= self.x1[1] && self.x2[0] <= p[1] && p[1] <= self.x2[1]
    }
}

/// A rectangle expressed in lattice units of the base spacing `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeRect {
    pub i: [i64; 2],
    pub j: [i64; 2],
}

impl LatticeRect {
    /// Whether the lattice cell with lower-left corner `(ci, cj)` lies inside.
    pub fn contains_cell(&self, ci: i64, cj: i64) -> bool {
        self.i[0] <= ci && ci < self.i[1] && self.j[0] <= cj && cj < self.j[1]
    }

    pub fn contains_node(&self, i: i64, j: i64) -> bool {
        self.i[0] <= i && i <= self.i[1] && self.j[0] <= j && j <= self.j[1]
    }

    pub fn strictly_contains_node(&self, i: i64, j: i64) -> bool {
        self.i[0] < i && i < self.i[1] && self.j[0] < j && j < self.j[1]
    }

    pub fn on_boundary(&self, i: i64, j: i64) -> bool {
        self.contains_node(i, j) && !self.strictly_contains_node(i, j)
    }
}

/// Subregion tag of a finite element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    G0,
    G1,
    G2,
}

/// Boundary segment tags. `Interface` marks `∂D_FEM`, which is not a physical
/// boundary but the seam where the two discretizations exchange values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// `∂_1 D`: source for `t <= t1`, absorbing afterwards.
    Top,
    /// `∂_2 D`: absorbing.
    Bottom,
    /// `∂_3 D`: rigid (homogeneous Neumann).
    Sides,
    /// `∂G0`: rigid wall around the shielded core.
    Obstacle,
    Interface,
}

/// A straight boundary segment with its tag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainGeometry {
    pub h: f64,
    pub d_extent: Rect,
    pub dfem_extent: Rect,
    pub g1_extent: Rect,
    pub g0_extent: Rect,
    pub d_lattice: LatticeRect,
    pub dfem_lattice: LatticeRect,
    pub g1_lattice: LatticeRect,
    pub g0_lattice: LatticeRect,
}

fn to_lattice(value: f64, h: f64, what: &str) -> Result<i64> {
    let k = (value / h).round();
    if (k * h - value).abs() > 1e-9 * value.abs().max(1.0) {
        return Err(Error::Discretization(format!(
            "{what} = {value} is not a multiple of h = {h}"
        )));
    }
    Ok(k as i64)
}

fn rect_to_lattice(r: &Rect, h: f64, name: &str) -> Result<LatticeRect> {
    Ok(LatticeRect {
        i: [
            to_lattice(r.x1[0], h, &format!("{name}.x1[0]"))?,
            to_lattice(r.x1[1], h, &format!("{name}.x1[1]"))?,
        ],
        j: [
            to_lattice(r.x2[0], h, &format!("{name}.x2[0]"))?,
            to_lattice(r.x2[1], h, &format!("{name}.x2[1]"))?,
        ],
    })
}

impl DomainGeometry {
    pub fn new(h: f64, d: Rect, dfem: Rect, g1: Rect, g0: Rect) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Discretization(format!("mesh size h = {h} must be positive")));
        }
        for (name, r) in [("D", &d), ("D_FEM", &dfem), ("G1", &g1), ("G0", &g0)] {
            if !(r.width() > 0.0 && r.height() > 0.0) {
                return Err(Error::Geometry(format!("{name} is empty")));
            }
            if r.x1[0] != -r.x1[1] {
                return Err(Error::Geometry(format!(
                    "{name} is not mirror-symmetric about x1 = 0: {:?}",
                    r.x1
                )));
            }
        }
        if !d.strictly_contains(&dfem) {
            return Err(Error::Geometry("D_FEM must lie strictly inside D".into()));
        }
        if !dfem.strictly_contains(&g1) {
            return Err(Error::Geometry("G1 must lie strictly inside D_FEM".into()));
        }
        if !g1.strictly_contains(&g0) {
            return Err(Error::Geometry("G0 must lie strictly inside G1".into()));
        }
        let geometry = DomainGeometry {
            h,
            d_extent: d,
            dfem_extent: dfem,
            g1_extent: g1,
            g0_extent: g0,
            d_lattice: rect_to_lattice(&d, h, "D")?,
            dfem_lattice: rect_to_lattice(&dfem, h, "D_FEM")?,
            g1_lattice: rect_to_lattice(&g1, h, "G1")?,
            g0_lattice: rect_to_lattice(&g0, h, "G0")?,
        };
        // The FE/FD overlap needs one layer of G2 cells between G1 and the seam,
        // and closure refinement next to G1 needs one more.
        let gap = [
            geometry.g1_lattice.i[0] - geometry.dfem_lattice.i[0],
            geometry.dfem_lattice.i[1] - geometry.g1_lattice.i[1],
            geometry.g1_lattice.j[0] - geometry.dfem_lattice.j[0],
            geometry.dfem_lattice.j[1] - geometry.g1_lattice.j[1],
        ];
        if gap.iter().any(|&g| g < 3) {
            return Err(Error::Geometry(format!(
                "G1 must stay at least 3 cells away from the FE/FD seam (gaps {gap:?})"
            )));
        }
        Ok(geometry)
    }

    /// Coordinate of lattice index `k`. Every structured node, in either
    /// discretization, is placed through this one function so the two copies
    /// of an interface node agree bit for bit.
    #[inline]
    pub fn lattice_coord(&self, k: i64) -> f64 {
        k as f64 * self.h
    }

    pub fn node(&self, i: i64, j: i64) -> [f64; 2] {
        [self.lattice_coord(i), self.lattice_coord(j)]
    }

    /// Region of the lattice cell with lower-left corner `(ci, cj)` inside `D_FEM`.
    pub fn cell_region(&self, ci: i64, cj: i64) -> Region {
        if self.g0_lattice.contains_cell(ci, cj) {
            Region::G0
        } else if self.g1_lattice.contains_cell(ci, cj) {
            Region::G1
        } else {
            Region::G2
        }
    }

    pub fn g1_area(&self) -> f64 {
        self.g1_extent.area() - self.g0_extent.area()
    }

    /// All tagged boundary segments: the four sides of `D`, the seam `∂D_FEM`
    /// and the wall `∂G0`.
    pub fn boundary_segments(&self) -> Vec<BoundarySegment> {
        let mut out = Vec::new();
        let mut rect = |r: &Rect, bottom: BoundaryTag, right: BoundaryTag, top: BoundaryTag, left: BoundaryTag| {
            let (a, b, c, d) = (
                [r.x1[0], r.x2[0]],
                [r.x1[1], r.x2[0]],
                [r.x1[1], r.x2[1]],
                [r.x1[0], r.x2[1]],
            );
            out.push(BoundarySegment { from: a, to: b, tag: bottom });
            out.push(BoundarySegment { from: b, to: c, tag: right });
            out.push(BoundarySegment { from: c, to: d, tag: top });
            out.push(BoundarySegment { from: d, to: a, tag: left });
        };
        use BoundaryTag::*;
        rect(&self.d_extent, Bottom, Sides, Top, Sides);
        rect(&self.dfem_extent, Interface, Interface, Interface, Interface);
        rect(&self.g0_extent, Obstacle, Obstacle, Obstacle, Obstacle);
        out
    }
}
