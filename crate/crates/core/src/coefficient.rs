//! Piecewise-constant wave-speed coefficient on the triangles of `D_FEM`.

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::mesh::{edge_key, TriMesh};

/// One value per triangle, `1` outside `G1`, clamped to `[lower, upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub values: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

impl CoefficientField {
    /// `value` on every G1 triangle and `1` elsewhere; the admissible upper
    /// bound is the maximum of the guess, so at least `value`.
    pub fn constant_guess(mesh: &TriMesh, value: f64) -> Result<Self> {
        if !(value >= 1.0 && value.is_finite()) {
            return Err(Error::Parameter(format!("initial guess {value} must be >= 1")));
        }
        let values = mesh
            .element_region
            .iter()
            .map(|&r| if r == Region::G1 { value } else { 1.0 })
            .collect();
        Ok(CoefficientField { values, lower: 1.0, upper: value })
    }

    /// The homogeneous medium `c ≡ 1`.
    pub fn unit(mesh: &TriMesh) -> Self {
        CoefficientField { values: vec![1.0; mesh.n_triangles()], lower: 1.0, upper: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn clamp(&mut self) {
        for v in &mut self.values {
            *v = v.clamp(self.lower, self.upper);
        }
    }

    /// Checks shape and the admissible set: bounds everywhere, `1` off `G1`.
    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        if self.values.len() != mesh.n_triangles() {
            return Err(Error::Shape(format!(
                "coefficient has {} values for {} triangles",
                self.values.len(),
                mesh.n_triangles()
            )));
        }
        for (t, (&v, &r)) in self.values.iter().zip(&mesh.element_region).enumerate() {
            if !(self.lower..=self.upper).contains(&v) {
                return Err(Error::Parameter(format!(
                    "coefficient {v} on triangle {t} outside [{}, {}]",
                    self.lower, self.upper
                )));
            }
            if r != Region::G1 && v != 1.0 {
                return Err(Error::Parameter(format!("coefficient {v} on non-G1 triangle {t}")));
            }
        }
        Ok(())
    }

    /// Largest relative difference between mirror-image triangles.
    pub fn mirror_defect(&self, mesh: &TriMesh) -> Option<f64> {
        let map = mesh.mirror_triangle_map()?;
        Some(
            map.iter()
                .enumerate()
                .map(|(t, &s)| (self.values[t] - self.values[s]).abs() / self.values[t].abs().max(1.0))
                .fold(0.0, f64::max),
        )
    }
}

/// Transfers `field` from `coarse` to the refined mesh `fine`.
///
/// Children that touch no coarse vertex, and children of bisected triangles,
/// take the parent value. A corner child of a red-refined parent takes the
/// mean of the parent value and the values of the same-region neighbours
/// across the two parent edges meeting at that corner. The result is clamped.
pub fn interpolate_coefficient(
    coarse: &TriMesh,
    field: &CoefficientField,
    fine: &TriMesh,
) -> Result<CoefficientField> {
    if field.values.len() != coarse.n_triangles() {
        return Err(Error::Shape(format!(
            "coefficient has {} values for {} coarse triangles",
            field.values.len(),
            coarse.n_triangles()
        )));
    }
    if fine.parent_map.len() != fine.n_triangles() {
        let fine_t = fine.parent_map.len().min(fine.n_triangles());
        return Err(Error::Lineage { fine: fine_t });
    }
    if let Some(t) = fine.parent_map.iter().position(|&p| p >= coarse.n_triangles()) {
        return Err(Error::Lineage { fine: t });
    }
    let mut children = vec![0usize; coarse.n_triangles()];
    for &p in &fine.parent_map {
        children[p] += 1;
    }
    let edge_tris = coarse.edge_triangles();
    let bits = |p: [f64; 2]| (p[0].to_bits(), p[1].to_bits());

    let mut values = Vec::with_capacity(fine.n_triangles());
    for (t, &p) in fine.parent_map.iter().enumerate() {
        let parent = field.values[p];
        if children[p] != 4 {
            values.push(parent);
            continue;
        }
        let ptri = coarse.triangles[p];
        let corner = (0..3).find(|&k| {
            let pk = bits(coarse.vertices[ptri[k]]);
            fine.triangles[t].iter().any(|&v| bits(fine.vertices[v]) == pk)
        });
        let Some(k) = corner else {
            values.push(parent);
            continue;
        };
        let a = ptri[k];
        let region = coarse.element_region[p];
        let mut sum = 0.0;
        let mut n = 1.0;
        for other in [ptri[(k + 1) % 3], ptri[(k + 2) % 3]] {
            for &q in &edge_tris[&edge_key(a, other)] {
                if q != p && coarse.element_region[q] == region {
                    sum += field.values[q] - parent;
                    n += 1.0;
                }
            }
        }
        values.push(parent + sum / n);
    }
    let mut out = CoefficientField { values, lower: field.lower, upper: field.upper };
    out.clamp();
    Ok(out)
}
