//! Simplicial meshes of an interval or an axis-aligned rectangle, with the
//! piecewise-linear nodal basis used by all assembly routines.
//!
//! Vertices are stored once; each cell lists its vertex ids. Boundary
//! vertices are flagged so functions can pin them to zero. Cells expose the
//! data the pair-quadrature builder needs: vertex coordinates, measure,
//! circumscribed ball, and the shape-function values at arbitrary points.

use crate::error::{Error, Result};
use crate::family::Point;

/// Maximum vertices per cell (2 for segments, 3 for triangles).
pub const MAX_CELL_VERTS: usize = 3;

#[derive(Debug, Clone)]
pub struct Cell {
    pub verts: [usize; MAX_CELL_VERTS],
    pub n_verts: usize,
    pub measure: f64,
    pub center: Point,
    pub radius: f64,
}

impl Cell {
    pub fn vertex_ids(&self) -> &[usize] {
        &self.verts[..self.n_verts]
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub cells: Vec<Cell>,
    pub boundary: Vec<bool>,
    /// interior vertex ids in ascending order
    pub free: Vec<usize>,
    bounds: [[f64; 2]; 2],
}

impl Mesh {
    /// Uniform partition of [a, b] into `n` segments.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Mesh> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "interval mesh needs at least 2 cells, got {n}"
            )));
        }
        let h = (b - a) / n as f64;
        let vertices: Vec<Point> = (0..=n).map(|i| [a + i as f64 * h, 0.0]).collect();
        let cells = (0..n)
            .map(|i| {
                let (xa, xb) = (vertices[i][0], vertices[i + 1][0]);
                Cell {
                    verts: [i, i + 1, usize::MAX],
                    n_verts: 2,
                    measure: xb - xa,
                    center: [0.5 * (xa + xb), 0.0],
                    radius: 0.5 * (xb - xa),
                }
            })
            .collect();
        let mut boundary = vec![false; n + 1];
        boundary[0] = true;
        boundary[n] = true;
        let free = (1..n).collect();
        Ok(Mesh { dim: 1, vertices, cells, boundary, free, bounds: [[a, b], [0.0, 0.0]] })
    }

    /// `nx` by `ny` grid of rectangles on [a0,b0] x [a1,b1], each split into
    /// two triangles along the same diagonal.
    pub fn rectangle(bounds: [[f64; 2]; 2], nx: usize, ny: usize) -> Result<Mesh> {
        let [[a0, b0], [a1, b1]] = bounds;
        if !(b0 > a0 && b1 > a1) {
            return Err(Error::InvalidParameter(format!("bad rectangle bounds {bounds:?}")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "rectangle mesh needs at least 2 cells per side, got {nx} x {ny}"
            )));
        }
        let (hx, hy) = ((b0 - a0) / nx as f64, (b1 - a1) / ny as f64);
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([a0 + i as f64 * hx, a1 + j as f64 * hy]);
            }
        }
        let mut cells = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                for tri in [[v00, v10, v11], [v00, v11, v01]] {
                    cells.push(make_triangle(&vertices, tri));
                }
            }
        }
        let mut boundary = vec![false; vertices.len()];
        for j in 0..=ny {
            for i in 0..=nx {
                if i == 0 || j == 0 || i == nx || j == ny {
                    boundary[id(i, j)] = true;
                }
            }
        }
        let free = (0..vertices.len()).filter(|&v| !boundary[v]).collect();
        Ok(Mesh { dim: 2, vertices, cells, boundary, free, bounds })
    }

    /// Uniformly refined copy (every segment halved / every rectangle pair
    /// rebuilt at doubled resolution).
    pub fn refined(&self) -> Result<Mesh> {
        if self.dim == 1 {
            let n = self.cells.len();
            Mesh::interval(self.bounds[0][0], self.bounds[0][1], 2 * n)
        } else {
            let nx = self.grid_counts().0;
            let ny = self.grid_counts().1;
            Mesh::rectangle(self.bounds, 2 * nx, 2 * ny)
        }
    }

    fn grid_counts(&self) -> (usize, usize) {
        // rectangle meshes store 2*nx*ny cells and (nx+1)(ny+1) vertices;
        // recover nx from the first row of vertices
        let a0 = self.bounds[0][0];
        let b0 = self.bounds[0][1];
        let mut nx = 0;
        for v in &self.vertices {
            if (v[1] - self.bounds[1][0]).abs() < 1e-14 && v[0] > a0 - 1e-14 && v[0] < b0 + 1e-14 {
                nx += 1;
            }
        }
        let nx = nx - 1;
        let ny = self.cells.len() / (2 * nx);
        (nx, ny)
    }

    pub fn bounds(&self) -> [[f64; 2]; 2] {
        self.bounds
    }

    pub fn domain_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// Diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        let w = self.bounds[0][1] - self.bounds[0][0];
        if self.dim == 1 {
            w
        } else {
            let h = self.bounds[1][1] - self.bounds[1][0];
            (w * w + h * h).sqrt()
        }
    }

    /// Radius of the smallest ball around `center` containing the domain box.
    pub fn circumradius_about(&self, center: Point) -> f64 {
        let mut r2: f64 = 0.0;
        for &cx in &[self.bounds[0][0], self.bounds[0][1]] {
            let ys: &[f64] = if self.dim == 1 { &[0.0] } else { &[self.bounds[1][0], self.bounds[1][1]] };
            for &cy in ys {
                let (dx, dy) = (cx - center[0], cy - center[1]);
                r2 = r2.max(dx * dx + dy * dy);
            }
        }
        r2.sqrt()
    }

    pub fn box_center(&self) -> Point {
        [
            0.5 * (self.bounds[0][0] + self.bounds[0][1]),
            if self.dim == 1 { 0.0 } else { 0.5 * (self.bounds[1][0] + self.bounds[1][1]) },
        ]
    }

    /// Typical cell extent (used to grade exterior rings).
    pub fn boundary_cell_size(&self) -> f64 {
        let c = &self.cells[0];
        if self.dim == 1 {
            c.measure
        } else {
            (2.0 * c.measure).sqrt()
        }
    }

    /// Shape-function values of the cell's vertices at point `p` (barycentric
    /// coordinates; callers must pass points inside the cell).
    pub fn shape_values(&self, cell: &Cell, p: Point, out: &mut [f64; MAX_CELL_VERTS]) {
        if cell.n_verts == 2 {
            let xa = self.vertices[cell.verts[0]][0];
            let xb = self.vertices[cell.verts[1]][0];
            let t = (p[0] - xa) / (xb - xa);
            out[0] = 1.0 - t;
            out[1] = t;
            out[2] = 0.0;
        } else {
            let a = self.vertices[cell.verts[0]];
            let b = self.vertices[cell.verts[1]];
            let c = self.vertices[cell.verts[2]];
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
            out[0] = 1.0 - l1 - l2;
            out[1] = l1;
            out[2] = l2;
        }
    }

    /// Positive-weight volume quadrature of the stated polynomial order:
    /// points, weights and nodal shape values per point.
    pub fn volume_quadrature(&self, order: usize) -> VolumeQuadrature {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut shape = Vec::new();
        let mut cells = Vec::new();
        if self.dim == 1 {
            let rule = crate::quad::gauss(order.div_ceil(2).max(1));
            for (ci, cell) in self.cells.iter().enumerate() {
                let xa = self.vertices[cell.verts[0]][0];
                let xb = self.vertices[cell.verts[1]][0];
                let (mid, half) = (0.5 * (xa + xb), 0.5 * (xb - xa));
                for &(node, w) in rule {
                    let p = [mid + half * node, 0.0];
                    let mut s = [0.0; MAX_CELL_VERTS];
                    self.shape_values(cell, p, &mut s);
                    points.push(p);
                    weights.push(w * half);
                    shape.push(s);
                    cells.push(ci);
                }
            }
        } else {
            let rule = crate::quad::triangle_rule(order);
            for (ci, cell) in self.cells.iter().enumerate() {
                let a = self.vertices[cell.verts[0]];
                let b = self.vertices[cell.verts[1]];
                let c = self.vertices[cell.verts[2]];
                for &(l1, l2, l3, w) in rule {
                    let p = [
                        l1 * a[0] + l2 * b[0] + l3 * c[0],
                        l1 * a[1] + l2 * b[1] + l3 * c[1],
                    ];
                    points.push(p);
                    weights.push(w * cell.measure);
                    shape.push([l1, l2, l3]);
                    cells.push(ci);
                }
            }
        }
        VolumeQuadrature { points, weights, shape, cells }
    }
}

fn make_triangle(vertices: &[Point], ids: [usize; 3]) -> Cell {
    let (a, b, c) = (vertices[ids[0]], vertices[ids[1]], vertices[ids[2]]);
    let area = 0.5
        * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    let center = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
    let radius = [a, b, c]
        .iter()
        .map(|v| ((v[0] - center[0]).powi(2) + (v[1] - center[1]).powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    Cell { verts: [ids[0], ids[1], ids[2]], n_verts: 3, measure: area, center, radius }
}

/// Flattened positive-weight quadrature over the whole domain.
#[derive(Debug, Clone)]
pub struct VolumeQuadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub shape: Vec<[f64; MAX_CELL_VERTS]>,
    pub cells: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_mesh_bookkeeping() {
        let m = Mesh::interval(0.0, 1.0, 4).unwrap();
        assert_eq!(m.vertices.len(), 5);
        assert_eq!(m.cells.len(), 4);
        assert_eq!(m.free, vec![1, 2, 3]);
        assert!((m.domain_measure() - 1.0).abs() < 1e-15);
        assert!(m.boundary[0] && m.boundary[4] && !m.boundary[2]);
    }

    #[test]
    fn rectangle_mesh_bookkeeping() {
        let m = Mesh::rectangle([[0.0, 1.0], [0.0, 2.0]], 4, 2).unwrap();
        assert_eq!(m.vertices.len(), 15);
        assert_eq!(m.cells.len(), 16);
        assert!((m.domain_measure() - 2.0).abs() < 1e-13);
        assert_eq!(m.free.len(), 3);
        for c in &m.cells {
            assert!(c.measure > 0.0);
        }
    }

    #[test]
    fn refinement_doubles_resolution() {
        let m = Mesh::interval(0.0, 1.0, 8).unwrap().refined().unwrap();
        assert_eq!(m.cells.len(), 16);
        let r = Mesh::rectangle([[0.0, 1.0], [0.0, 1.0]], 2, 3).unwrap().refined().unwrap();
        assert_eq!(r.cells.len(), 2 * 4 * 6);
        assert!((r.domain_measure() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn shape_values_partition_unity() {
        let m = Mesh::rectangle([[0.0, 1.0], [0.0, 1.0]], 3, 3).unwrap();
        let cell = &m.cells[5];
        let mut s = [0.0; MAX_CELL_VERTS];
        m.shape_values(cell, cell.center, &mut s);
        let sum: f64 = s.iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
        for v in &s[..cell.n_verts] {
            assert!((0.0..=1.0).contains(v));
        }
        // at a vertex the matching shape function is 1
        m.shape_values(cell, m.vertices[cell.verts[1]], &mut s);
        assert!((s[1] - 1.0).abs() < 1e-14 && s[0].abs() < 1e-14 && s[2].abs() < 1e-14);
    }

    #[test]
    fn volume_quadrature_integrates_polynomials() {
        let m = Mesh::interval(0.0, 1.0, 5).unwrap();
        let q = m.volume_quadrature(4);
        // integral of x^3 over [0,1] is 1/4
        let got: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0].powi(3))
            .sum();
        assert!((got - 0.25).abs() < 1e-14);

        let m2 = Mesh::rectangle([[0.0, 1.0], [0.0, 1.0]], 3, 3).unwrap();
        let q2 = m2.volume_quadrature(2);
        // integral of x*y over the unit square is 1/4
        let got2: f64 = q2
            .points
            .iter()
            .zip(&q2.weights)
            .map(|(p, w)| w * p[0] * p[1])
            .sum();
        assert!((got2 - 0.25).abs() < 1e-13);
        let vol: f64 = q2.weights.iter().sum();
        assert!((vol - 1.0).abs() < 1e-13);
    }

    #[test]
    fn geometry_helpers() {
        let m = Mesh::rectangle([[0.0, 2.0], [0.0, 1.0]], 4, 2).unwrap();
        assert!((m.diameter() - 5.0f64.sqrt()).abs() < 1e-14);
        let c = m.box_center();
        assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        assert!((m.circumradius_about(c) - 0.5 * 5.0f64.sqrt()).abs() < 1e-14);
    }
}
