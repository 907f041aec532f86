//! Legacy ASCII VTK and CSV writers, and the trace reader.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::hybrid::HybridOperator;
use crate::mesh::TriMesh;
use crate::optimizer::IterationRecord;
use crate::wave::ObservationTrace;

const VTK_TRIANGLE: u8 = 5;
const VTK_QUAD: u8 = 9;

fn header(w: &mut impl Write, title: &str, points: &[[f64; 2]]) -> io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for p in points {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    Ok(())
}

fn cells(w: &mut impl Write, cells: &[(u8, Vec<usize>)]) -> io::Result<()> {
    let size: usize = cells.iter().map(|(_, c)| c.len() + 1).sum();
    writeln!(w, "CELLS {} {}", cells.len(), size)?;
    for (_, c) in cells {
        write!(w, "{}", c.len())?;
        for v in c {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for (t, _) in cells {
        writeln!(w, "{t}")?;
    }
    Ok(())
}

fn scalars(w: &mut impl Write, name: &str, values: &[f64]) -> io::Result<()> {
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Triangle mesh with per-cell scalars (coefficient, gradient, region...).
pub fn write_mesh_vtk(w: &mut impl Write, mesh: &TriMesh, cell_data: &[(&str, &[f64])]) -> Result<()> {
    for (name, v) in cell_data {
        if v.len() != mesh.n_triangles() {
            return Err(Error::Shape(format!("cell field {name} has {} values for {} triangles", v.len(), mesh.n_triangles())));
        }
    }
    let tris: Vec<(u8, Vec<usize>)> = mesh.triangles.iter().map(|t| (VTK_TRIANGLE, t.to_vec())).collect();
    (|| -> io::Result<()> {
        header(w, &format!("triangle mesh, level {}", mesh.refinement_level), &mesh.vertices)?;
        cells(w, &tris)?;
        if !cell_data.is_empty() {
            writeln!(w, "CELL_DATA {}", tris.len())?;
            for (name, v) in cell_data {
                scalars(w, name, v)?;
            }
        }
        Ok(())
    })()
    .map_err(Error::from)
}

/// Whole hybrid domain: triangles of `D_FEM` plus grid squares outside it,
/// with nodal fields on the union numbering.
pub fn write_hybrid_vtk(
    w: &mut impl Write,
    mesh: &TriMesh,
    op: &HybridOperator,
    title: &str,
    point_data: &[(&str, &[f64])],
) -> Result<()> {
    let n = op.n_union();
    for (name, v) in point_data {
        if v.len() != n {
            return Err(Error::Shape(format!("point field {name} has {} values for {n} nodes", v.len())));
        }
    }
    let grid = &op.grid;
    let mut all: Vec<(u8, Vec<usize>)> = mesh.triangles.iter().map(|t| (VTK_TRIANGLE, t.to_vec())).collect();
    for jj in 0..grid.ny - 1 {
        for ii in 0..grid.nx - 1 {
            let (i, j) = grid.lattice(grid.index(ii, jj));
            if grid.hole.contains_cell(i, j) {
                continue;
            }
            let corners = [grid.index(ii, jj), grid.index(ii + 1, jj), grid.index(ii + 1, jj + 1), grid.index(ii, jj + 1)];
            let ids: Option<Vec<usize>> = corners.iter().map(|&g| op.grid_to_union(g)).collect();
            let ids = ids.ok_or_else(|| Error::Discretization(format!("grid cell ({i}, {j}) has an unmatched corner")))?;
            all.push((VTK_QUAD, ids));
        }
    }
    let points = op.union_coords(mesh);
    (|| -> io::Result<()> {
        header(w, title, &points)?;
        cells(w, &all)?;
        if !point_data.is_empty() {
            writeln!(w, "POINT_DATA {n}")?;
            for (name, v) in point_data {
                scalars(w, name, v)?;
            }
        }
        Ok(())
    })()
    .map_err(Error::from)
}

/// `t,node_x1,node_x2,<value_name>`, one row per level and node.
pub fn write_trace_csv(w: &mut impl Write, trace: &ObservationTrace, value_name: &str) -> Result<()> {
    (|| -> io::Result<()> {
        writeln!(w, "t,node_x1,node_x2,{value_name}")?;
        for (n, &t) in trace.times.iter().enumerate() {
            for (p, u) in trace.nodes.iter().zip(trace.level(n)) {
                writeln!(w, "{t},{},{},{u}", p[0], p[1])?;
            }
        }
        Ok(())
    })()
    .map_err(Error::from)
}

/// Reads a trace written by [`write_trace_csv`] onto the layout of
/// `template` (nodes, weights and times must match).
pub fn read_trace_csv(r: impl BufRead, template: &ObservationTrace) -> Result<ObservationTrace> {
    let mut lines = r.lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::Config("empty trace file".into()))?
        .map_err(|e| Error::Config(e.to_string()))?;
    let cols: Vec<&str> = head.trim().split(',').collect();
    if cols.len() != 4 || cols[..3] != ["t", "node_x1", "node_x2"] {
        return Err(Error::Config(format!("unexpected trace header '{head}'")));
    }
    let k = template.n_nodes();
    let expected = k * template.n_levels();
    let mut values = Vec::with_capacity(expected);
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Config(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("trace line {}: {e}", row + 2)))?;
        if f.len() != 4 {
            return Err(Error::Config(format!("trace line {}: expected 4 fields", row + 2)));
        }
        let i = values.len();
        if i >= expected {
            return Err(Error::Shape(format!("trace has more than {expected} rows")));
        }
        let (n, node) = (i / k, i % k);
        let p = template.nodes[node];
        let t = template.times[n];
        if (f[0] - t).abs() > 1e-9 * t.abs().max(1.0) || f[1] != p[0] || f[2] != p[1] {
            return Err(Error::Shape(format!(
                "trace line {} is ({}, {}, {}), expected ({t}, {}, {})",
                row + 2,
                f[0],
                f[1],
                f[2],
                p[0],
                p[1]
            )));
        }
        values.push(f[3]);
    }
    if values.len() != expected {
        return Err(Error::Shape(format!("trace has {} rows, expected {expected}", values.len())));
    }
    Ok(ObservationTrace { values, ..template.clone() })
}

pub fn write_iterations_csv(w: &mut impl Write, records: &[IterationRecord]) -> Result<()> {
    (|| -> io::Result<()> {
        writeln!(w, "level,m,gamma,alpha,grad_norm,functional")?;
        for r in records {
            let alpha = r.alpha.map(|a| a.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{},{}", r.level, r.m, r.gamma, alpha, r.grad_norm, r.functional)?;
        }
        Ok(())
    })()
    .map_err(Error::from)
}
