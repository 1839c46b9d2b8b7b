//! Problem setup: directions (kernel family + fractional order), source
//! exponent, Kirchhoff coefficient, and quadrature configuration.

use crate::error::{Error, Result};
use crate::exponent::VariableExponent;
use crate::family::MusielakFamily;
use crate::kirchhoff::KirchhoffTerm;
use crate::mesh::Mesh;

/// How partial sums are combined during assembly. Both variants are
/// deterministic and independent of the worker thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summation {
    /// plain sums within fixed chunks, combined in chunk order
    Pairwise,
    /// compensated sums within chunks and across the combine
    Compensated,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// points per Gauss segment rule / degree selector for triangle rules,
    /// clamped to 1..=6 downstream
    pub gauss_order: usize,
    /// geometric refinement bands toward the contact set on same-cell pairs
    pub near_levels: usize,
    /// exterior coverage radius as a multiple of the domain diameter
    pub tail_factor: f64,
    pub summation: Summation,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            gauss_order: 4,
            near_levels: 3,
            // far enough out that the neglected-tail bound stays below half a
            // percent of a typical modular; geometric grading keeps the extra
            // exterior cells cheap (a handful per doubling)
            tail_factor: 512.0,
            summation: Summation::Compensated,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gauss_order == 0 || self.gauss_order > 6 {
            return Err(Error::InvalidParameter(format!(
                "gauss order must be in 1..=6, got {}",
                self.gauss_order
            )));
        }
        if self.near_levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 near-contact bands, got {}",
                self.near_levels
            )));
        }
        if !(self.tail_factor >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "tail factor must be at least 2 domain diameters, got {}",
                self.tail_factor
            )));
        }
        Ok(())
    }
}

/// One anisotropy direction: a kernel family and its fractional order.
#[derive(Debug, Clone)]
pub struct Direction {
    pub family: MusielakFamily,
    pub order: f64,
}

impl Direction {
    pub fn new(family: MusielakFamily, order: f64) -> Result<Self> {
        if !(0.0 < order && order < 1.0) {
            return Err(Error::Domain { what: "fractional order must lie in (0, 1)", value: order });
        }
        Ok(Direction { family, order })
    }
}

/// Full problem description shared by assembly, norms, and solvers.
#[derive(Debug, Clone)]
pub struct AnisotropicSetup {
    pub mesh: Mesh,
    pub directions: Vec<Direction>,
    pub source: VariableExponent,
    pub kirchhoff: KirchhoffTerm,
    pub quadrature: QuadratureConfig,
}

impl AnisotropicSetup {
    pub fn new(
        mesh: Mesh,
        directions: Vec<Direction>,
        source: VariableExponent,
        kirchhoff: KirchhoffTerm,
        quadrature: QuadratureConfig,
    ) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidParameter("need at least one direction".into()));
        }
        quadrature.validate()?;
        Ok(AnisotropicSetup { mesh, directions, source, kirchhoff, quadrature })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    /// Smallest lower growth index across directions.
    pub fn phi_minus_min(&self) -> f64 {
        self.directions
            .iter()
            .map(|d| d.family.declared_indices().lower)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest upper growth index across directions.
    pub fn phi_plus_max(&self) -> f64 {
        self.directions
            .iter()
            .map(|d| d.family.declared_indices().upper)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
