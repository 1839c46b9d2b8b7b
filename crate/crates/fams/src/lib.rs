//! Modular function spaces on fractional-order difference quotients, with
//! anisotropy across finitely many kernel/order directions.
//!
//! The crate covers four layers:
//! - kernel families and their structural certification ([`family`]),
//! - Luxemburg norms and modulars for discrete functions ([`modular`]),
//! - quadrature-backed nonlocal energy assembly over pairs of mesh cells
//!   ([`assembly`], [`pairquad`]),
//! - eigenvalue-type solvers for Kirchhoff-weighted problems ([`solver`])
//!   plus randomized verification suites ([`suites`]).

pub mod error;
pub mod quad;
pub mod family;
pub mod mesh;
pub mod function;
pub mod exponent;
pub mod modular;
pub mod kirchhoff;
pub mod setup;
pub mod pairquad;
pub mod assembly;
pub mod solver;
pub mod suites;

pub use assembly::{AnisoNorms, Assembler};
pub use error::{Error, Result};
pub use family::{FamilyKind, GrowthIndices, MusielakFamily, PairExponent, Point, SampleGrid};
pub use function::DiscreteFunction;
pub use mesh::Mesh;
