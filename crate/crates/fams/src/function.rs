//! Piecewise-linear functions on a mesh, vanishing on the boundary.
//!
//! Values live at every vertex; constructors and mutators keep boundary
//! entries at zero so each function extends by zero outside the domain,
//! which is what the nonlocal energies assume.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::family::Point;
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct DiscreteFunction {
    pub values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn zero(mesh: &Mesh) -> Self {
        DiscreteFunction { values: vec![0.0; mesh.vertices.len()] }
    }

    /// Wraps a full vertex-value vector, zeroing boundary entries.
    pub fn from_values(mesh: &Mesh, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.vertices.len() {
            return Err(Error::InvalidParameter(format!(
                "value vector length {} does not match vertex count {}",
                values.len(),
                mesh.vertices.len()
            )));
        }
        for (v, &b) in values.iter_mut().zip(&mesh.boundary) {
            if b {
                *v = 0.0;
            }
        }
        Ok(DiscreteFunction { values })
    }

    /// Nodal interpolation of a callable, boundary pinned to zero.
    pub fn interpolate<F: Fn(Point) -> f64>(mesh: &Mesh, f: F) -> Self {
        let values = mesh
            .vertices
            .iter()
            .zip(&mesh.boundary)
            .map(|(&p, &b)| if b { 0.0 } else { f(p) })
            .collect();
        DiscreteFunction { values }
    }

    /// Independent uniform values in [-1, 1] at interior vertices,
    /// reproducible from the seed.
    pub fn random(mesh: &Mesh, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = Self::zero(mesh);
        for &v in &mesh.free {
            u.values[v] = rng.gen_range(-1.0..=1.0);
        }
        u
    }

    /// Product-of-distances bump: positive inside, zero on the boundary,
    /// peak value 1.
    pub fn tent(mesh: &Mesh) -> Self {
        let [[a0, b0], [a1, b1]] = mesh.bounds();
        let dim = mesh.dim;
        let mut u = Self::interpolate(mesh, |p| {
            let gx = (p[0] - a0) * (b0 - p[0]);
            if dim == 1 {
                gx
            } else {
                gx * (p[1] - a1) * (b1 - p[1])
            }
        });
        let peak = u.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if peak > 0.0 {
            u.scale(1.0 / peak);
        }
        u
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// self += c * other
    pub fn axpy(&mut self, c: f64, other: &DiscreteFunction) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn add(&self, other: &DiscreteFunction) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &DiscreteFunction) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Largest gradient magnitude over the cells (the global Lipschitz
    /// constant of the piecewise-linear interpolant).
    pub fn lipschitz_constant(&self, mesh: &Mesh) -> f64 {
        let mut best = 0.0f64;
        for cell in &mesh.cells {
            if cell.n_verts == 2 {
                let (i, j) = (cell.verts[0], cell.verts[1]);
                let dx = mesh.vertices[j][0] - mesh.vertices[i][0];
                best = best.max(((self.values[j] - self.values[i]) / dx).abs());
            } else {
                let a = mesh.vertices[cell.verts[0]];
                let b = mesh.vertices[cell.verts[1]];
                let c = mesh.vertices[cell.verts[2]];
                let (ua, ub, uc) = (
                    self.values[cell.verts[0]],
                    self.values[cell.verts[1]],
                    self.values[cell.verts[2]],
                );
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let gx = ((ub - ua) * (c[1] - a[1]) - (uc - ua) * (b[1] - a[1])) / det;
                let gy = ((uc - ua) * (b[0] - a[0]) - (ub - ua) * (c[0] - a[0])) / det;
                best = best.max((gx * gx + gy * gy).sqrt());
            }
        }
        best
    }

    /// Adds reproducible uniform noise of amplitude `eps` at interior
    /// vertices.
    pub fn perturb(&mut self, mesh: &Mesh, eps: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for &v in &mesh.free {
            self.values[v] += eps * rng.gen_range(-1.0..=1.0);
        }
    }

    /// Euclidean inner product of the coefficient vectors.
    pub fn dot(&self, other: &DiscreteFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}
