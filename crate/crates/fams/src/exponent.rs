//! Scalar variable exponents `q(x)` for weighted Lebesgue-type modulars.

use crate::error::{Error, Result};
use crate::family::Point;
use crate::mesh::Mesh;

/// Pointwise exponent on the domain, bounded away from 1.
#[derive(Debug, Clone)]
pub enum ExponentField {
    Constant(f64),
    Affine { base: f64, slope: [f64; 2] },
    /// One value per mesh vertex, interpolated piecewise-linearly.
    Nodal(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct VariableExponent {
    field: ExponentField,
    lo: f64,
    hi: f64,
}

impl VariableExponent {
    pub fn new(field: ExponentField, mesh: &Mesh) -> Result<Self> {
        let (lo, hi) = match &field {
            ExponentField::Constant(q) => (*q, *q),
            ExponentField::Affine { base, slope } => {
                let b = mesh.bounds();
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let ys: Vec<f64> = if mesh.dim == 1 { vec![0.0] } else { vec![b[1][0], b[1][1]] };
                for &cx in &[b[0][0], b[0][1]] {
                    for &cy in &ys {
                        let v = base + slope[0] * cx + slope[1] * cy;
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                (lo, hi)
            }
            ExponentField::Nodal(vals) => {
                if vals.len() != mesh.vertices.len() {
                    return Err(Error::InvalidParameter(format!(
                        "nodal exponent length {} does not match vertex count {}",
                        vals.len(),
                        mesh.vertices.len()
                    )));
                }
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        };
        if !(lo > 1.0 && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponent must stay in (1, inf) on the domain, attains [{lo}, {hi}]"
            )));
        }
        Ok(VariableExponent { field, lo, hi })
    }

    pub fn constant(q: f64, mesh: &Mesh) -> Result<Self> {
        Self::new(ExponentField::Constant(q), mesh)
    }

    /// Infimum over the domain.
    pub fn q_minus(&self) -> f64 {
        self.lo
    }

    /// Supremum over the domain.
    pub fn q_plus(&self) -> f64 {
        self.hi
    }

    /// Value at a point. Nodal fields need the owning cell id.
    pub fn eval(&self, mesh: &Mesh, cell: Option<usize>, p: Point) -> f64 {
        match &self.field {
            ExponentField::Constant(q) => *q,
            ExponentField::Affine { base, slope } => {
                (base + slope[0] * p[0] + slope[1] * p[1]).clamp(self.lo, self.hi)
            }
            ExponentField::Nodal(vals) => {
                let ci = cell.expect("nodal exponent evaluation needs a cell id");
                let c = &mesh.cells[ci];
                let mut s = [0.0; crate::mesh::MAX_CELL_VERTS];
                mesh.shape_values(c, p, &mut s);
                c.vertex_ids()
                    .iter()
                    .zip(&s)
                    .map(|(&v, &sv)| sv * vals[v])
                    .sum()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_range() {
        let m = Mesh::interval(0.0, 1.0, 4).unwrap();
        let q = VariableExponent::constant(2.5, &m).unwrap();
        assert_eq!(q.q_minus(), 2.5);
        assert_eq!(q.q_plus(), 2.5);
        assert!(VariableExponent::constant(1.0, &m).is_err());
    }

    #[test]
    fn affine_field_range_and_eval() {
        let m = Mesh::interval(0.0, 1.0, 4).unwrap();
        let q = VariableExponent::new(
            ExponentField::Affine { base: 2.0, slope: [1.0, 0.0] },
            &m,
        )
        .unwrap();
        assert!((q.q_minus() - 2.0).abs() < 1e-15);
        assert!((q.q_plus() - 3.0).abs() < 1e-15);
        assert!((q.eval(&m, None, [0.25, 0.0]) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn nodal_field_interpolates() {
        let m = Mesh::interval(0.0, 1.0, 2).unwrap();
        let q = VariableExponent::new(ExponentField::Nodal(vec![2.0, 3.0, 2.0]), &m).unwrap();
        assert_eq!(q.q_minus(), 2.0);
        assert_eq!(q.q_plus(), 3.0);
        assert!((q.eval(&m, Some(0), [0.25, 0.0]) - 2.5).abs() < 1e-14);
        assert!(VariableExponent::new(ExponentField::Nodal(vec![2.0]), &m).is_err());
        assert!(VariableExponent::new(ExponentField::Nodal(vec![0.9, 2.0, 2.0]), &m).is_err());
    }
}
