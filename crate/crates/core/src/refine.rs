//! Local refinement of one region with conforming closure.
//!
//! Triangles of the target region are split into four congruent children
//! through their edge midpoints. Neighbours that receive a midpoint are closed
//! by longest-edge bisection: a triangle may only be cut on an edge after its
//! longest edge has been cut, which keeps every child similar to a right
//! isosceles triangle (all angles 45° or 90°) and terminates after finitely
//! many propagation steps. The marking depends on geometry alone, so a mirror
//! symmetric mesh stays mirror symmetric.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::mesh::{edge_key, BoundaryEdge, TriMesh};

/// Default lower bound on element angles, in degrees.
pub const DEFAULT_MIN_ANGLE_DEG: f64 = 20.0;

fn longest_local_edge(mesh: &TriMesh, tri: &[usize; 3]) -> usize {
    let len2 = |a: usize, b: usize| {
        let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
    };
    let l = [len2(tri[0], tri[1]), len2(tri[1], tri[2]), len2(tri[2], tri[0])];
    let mut k = 0;
    for i in 1..3 {
        if l[i] > l[k] {
            k = i;
        }
    }
    k
}

/// How a coarse triangle was split. Used by coefficient interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Kept,
    Red,
    Bisected,
}

/// Refine every triangle tagged `region`, closing the mesh conformingly.
pub fn refine_symmetric(mesh: &TriMesh, region: Region) -> Result<TriMesh> {
    refine_symmetric_with(mesh, region, DEFAULT_MIN_ANGLE_DEG)
}

pub fn refine_symmetric_with(mesh: &TriMesh, region: Region, min_angle: f64) -> Result<TriMesh> {
    let edge_tris = mesh.edge_triangles();
    let red: Vec<bool> = mesh.element_region.iter().map(|&r| r == region).collect();
    let mut marked: HashSet<(usize, usize)> = HashSet::new();
    let mut work = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if red[t] {
            for k in 0..3 {
                let e = edge_key(tri[k], tri[(k + 1) % 3]);
                if marked.insert(e) {
                    work.extend(edge_tris[&e].iter().copied());
                }
            }
        }
    }
    if marked.is_empty() {
        return Err(Error::Refinement(format!("no triangles tagged {region:?}")));
    }

    // Closure: any triangle with a cut edge must also have its longest edge cut.
    while let Some(t) = work.pop() {
        if red[t] {
            continue;
        }
        let tri = mesh.triangles[t];
        let any = (0..3).any(|k| marked.contains(&edge_key(tri[k], tri[(k + 1) % 3])));
        if !any {
            continue;
        }
        let k = longest_local_edge(mesh, &tri);
        let e = edge_key(tri[k], tri[(k + 1) % 3]);
        if marked.insert(e) {
            work.extend(edge_tris[&e].iter().copied());
        }
    }

    let mut split = vec![Split::Kept; mesh.n_triangles()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let n = (0..3)
            .filter(|&k| marked.contains(&edge_key(tri[k], tri[(k + 1) % 3])))
            .count();
        split[t] = match (red[t], n) {
            (true, _) | (false, 3) => Split::Red,
            (false, 0) => Split::Kept,
            _ => Split::Bisected,
        };
    }

    let mut vertices = mesh.vertices.clone();
    let mut sorted_marked: Vec<_> = marked.iter().copied().collect();
    sorted_marked.sort_unstable();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(sorted_marked.len());
    for (a, b) in sorted_marked {
        let (p, q) = (vertices[a], vertices[b]);
        midpoint.insert((a, b), vertices.len());
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
    }
    let mid = |a: usize, b: usize| midpoint[&edge_key(a, b)];

    let mut triangles = Vec::with_capacity(mesh.n_triangles() * 2);
    let mut element_region = Vec::with_capacity(mesh.n_triangles() * 2);
    let mut parent_map = Vec::with_capacity(mesh.n_triangles() * 2);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let r = mesh.element_region[t];
        let children: Vec<[usize; 3]> = match split[t] {
            Split::Kept => vec![*tri],
            Split::Red => {
                let [a, b, c] = *tri;
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                vec![[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
            }
            Split::Bisected => {
                let mut out = Vec::with_capacity(3);
                bisect(&vertices, *tri, &marked, &midpoint, &mut out);
                out
            }
        };
        for child in children {
            triangles.push(child);
            element_region.push(r);
            parent_map.push(t);
        }
    }

    let mut boundary_edges = Vec::with_capacity(mesh.boundary_edges.len() * 2);
    for e in &mesh.boundary_edges {
        let key = edge_key(e.v[0], e.v[1]);
        if marked.contains(&key) {
            let m = midpoint[&key];
            boundary_edges.push(BoundaryEdge { v: [e.v[0], m], tag: e.tag });
            boundary_edges.push(BoundaryEdge { v: [m, e.v[1]], tag: e.tag });
        } else {
            boundary_edges.push(*e);
        }
    }

    let mut fine = TriMesh {
        vertices,
        triangles,
        element_region,
        boundary_edges,
        refinement_level: mesh.refinement_level + 1,
        parent_map,
    };
    let worst = fine.min_angle_deg();
    if worst < min_angle {
        return Err(Error::Refinement(format!(
            "closure produced a {worst:.2}° angle, below the {min_angle}° bound"
        )));
    }
    fine.canonicalize();
    Ok(fine)
}

/// Recursive longest-edge bisection restricted to the marked edges.
fn bisect(
    vertices: &[[f64; 2]],
    tri: [usize; 3],
    marked: &HashSet<(usize, usize)>,
    midpoint: &HashMap<(usize, usize), usize>,
    out: &mut Vec<[usize; 3]>,
) {
    let cut: Vec<usize> = (0..3)
        .filter(|&k| marked.contains(&edge_key(tri[k], tri[(k + 1) % 3])))
        .collect();
    if cut.is_empty() {
        out.push(tri);
        return;
    }
    let len2 = |a: usize, b: usize| {
        let (p, q) = (vertices[a], vertices[b]);
        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
    };
    let l = [len2(tri[0], tri[1]), len2(tri[1], tri[2]), len2(tri[2], tri[0])];
    let mut k = 0;
    for i in 1..3 {
        if l[i] > l[k] {
            k = i;
        }
    }
    // Rotate so the longest edge is (b, c) with `a` opposite.
    let (b, c, a) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
    let m = midpoint[&edge_key(b, c)];
    bisect(vertices, [a, b, m], marked, midpoint, out);
    bisect(vertices, [a, m, c], marked, midpoint, out);
}

/// Split type of every coarse triangle, recovered from the fine mesh lineage.
pub fn split_kinds(coarse: &TriMesh, fine: &TriMesh) -> Vec<Split> {
    let mut children = vec![0usize; coarse.n_triangles()];
    for &p in &fine.parent_map {
        children[p] += 1;
    }
    children
        .iter()
        .map(|&n| match n {
            1 => Split::Kept,
            4 => Split::Red,
            _ => Split::Bisected,
        })
        .collect()
}
