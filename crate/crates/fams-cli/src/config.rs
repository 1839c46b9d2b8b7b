//! Run configuration: a single JSON file describing the mesh, the kernel
//! directions, the source exponent, the coefficient, quadrature, solver
//! targets, and output locations. Every field is validated before any
//! computation starts, and validation errors name the offending key.

use serde::Deserialize;

use fams::assembly::Assembler;
use fams::error::Error;
use fams::exponent::{ExponentField, VariableExponent};
use fams::family::{MusielakFamily, PairExponent};
use fams::kirchhoff::KirchhoffTerm;
use fams::mesh::Mesh;
use fams::setup::{AnisotropicSetup, Direction, QuadratureConfig, Summation};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    /// per-axis extents, one [lo, hi] pair per dimension
    pub domain: Vec<[f64; 2]>,
    pub cells_per_axis: Vec<usize>,
    pub directions: Vec<DirectionConfig>,
    pub exponent: ExponentConfig,
    #[serde(default)]
    pub kirchhoff: KirchhoffConfig,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub suites: SuitesSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionConfig {
    pub family: FamilyConfig,
    /// fractional order in (0, 1)
    pub order: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Phi(t) = scale * t^p / p
    ConstantPower {
        p: f64,
        #[serde(default)]
        scale: Option<f64>,
    },
    /// Phi(t) = t^p
    NormalizedPower { p: f64 },
    /// pair exponent p(x, y), affine in the pair midpoint when a slope is given
    VariableExponent {
        base: f64,
        #[serde(default)]
        slope: Option<[f64; 2]>,
    },
    /// Phi'(t) = t^(p-1) * ln(shift + t)
    LogPerturbed { p: f64, shift: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentConfig {
    Constant { value: f64 },
    Affine { base: f64, slope: [f64; 2] },
    Nodal { values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KirchhoffConfig {
    #[serde(default = "default_kirchhoff_kind")]
    pub kind: String,
    #[serde(default = "one")]
    pub m0: f64,
    #[serde(default)]
    pub b: f64,
    /// optional cross-check: must equal the power implied by `kind`
    #[serde(default)]
    pub theta: Option<f64>,
}

fn default_kirchhoff_kind() -> String {
    "constant".into()
}

fn one() -> f64 {
    1.0
}

impl Default for KirchhoffConfig {
    fn default() -> Self {
        KirchhoffConfig { kind: "constant".into(), m0: 1.0, b: 0.0, theta: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default = "default_gauss")]
    pub gauss_order: usize,
    #[serde(default = "default_levels")]
    pub near_levels: usize,
    #[serde(default = "default_tail")]
    pub tail_factor: f64,
    #[serde(default = "default_summation")]
    pub summation: String,
}

fn default_gauss() -> usize {
    4
}
fn default_levels() -> usize {
    3
}
fn default_tail() -> f64 {
    512.0
}
fn default_summation() -> String {
    "compensated".into()
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection {
            gauss_order: 4,
            near_levels: 3,
            tail_factor: 512.0,
            summation: "compensated".into(),
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// single target multiplier
    #[serde(default)]
    pub lambda: Option<f64>,
    /// explicit sweep values
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    /// sweep as fractions of the computed smallness threshold
    #[serde(default)]
    pub lambda_star_fractions: Option<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_path_points")]
    pub path_points: usize,
    #[serde(default)]
    pub override_regime: bool,
    #[serde(default = "default_embedding_samples")]
    pub embedding_samples: usize,
}

fn default_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    20_000
}
fn default_path_points() -> usize {
    21
}
fn default_embedding_samples() -> usize {
    32
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuitesSection {
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default = "default_scaling_cases")]
    pub scaling_cases: usize,
}

fn default_cases() -> usize {
    200
}
fn default_scaling_cases() -> usize {
    10_000
}

impl Default for SuitesSection {
    fn default() -> Self {
        SuitesSection { cases: 200, scaling_cases: 10_000 }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
}

/// A config error with the offending key spelled out.
pub fn key_err(key: &str, e: impl std::fmt::Display) -> String {
    format!("{key}: {e}")
}

impl RunConfig {
    pub fn mesh(&self) -> Result<Mesh, String> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(key_err("dimension", "must be 1 or 2"));
        }
        if self.domain.len() != self.dimension {
            return Err(key_err(
                "domain",
                format!("need {} extent pair(s), got {}", self.dimension, self.domain.len()),
            ));
        }
        if self.cells_per_axis.len() != self.dimension {
            return Err(key_err(
                "cells_per_axis",
                format!("need {} entries, got {}", self.dimension, self.cells_per_axis.len()),
            ));
        }
        if self.dimension == 1 {
            Mesh::interval(self.domain[0][0], self.domain[0][1], self.cells_per_axis[0])
                .map_err(|e| key_err("domain/cells_per_axis", e))
        } else {
            let bounds = [self.domain[0], self.domain[1]];
            Mesh::rectangle(bounds, self.cells_per_axis[0], self.cells_per_axis[1])
                .map_err(|e| key_err("domain/cells_per_axis", e))
        }
    }

    fn family(&self, i: usize, mesh: &Mesh) -> Result<MusielakFamily, String> {
        let key = format!("directions[{i}].family");
        match &self.directions[i].family {
            FamilyConfig::ConstantPower { p, scale } => match scale {
                Some(s) => MusielakFamily::scaled_power(*p, *s),
                None => MusielakFamily::constant_power(*p),
            }
            .map_err(|e| key_err(&key, e)),
            FamilyConfig::NormalizedPower { p } => {
                MusielakFamily::normalized_power(*p).map_err(|e| key_err(&key, e))
            }
            FamilyConfig::VariableExponent { base, slope } => {
                let exponent = match slope {
                    None => PairExponent::Constant(*base),
                    Some(sl) => PairExponent::affine(*base, *sl, mesh.bounds(), mesh.dim)
                        .map_err(|e| key_err(&key, e))?,
                };
                MusielakFamily::variable_exponent(exponent).map_err(|e| key_err(&key, e))
            }
            FamilyConfig::LogPerturbed { p, shift } => {
                MusielakFamily::log_perturbed(*p, *shift).map_err(|e| key_err(&key, e))
            }
        }
    }

    pub fn exponent(&self, mesh: &Mesh) -> Result<VariableExponent, String> {
        let field = match &self.exponent {
            ExponentConfig::Constant { value } => ExponentField::Constant(*value),
            ExponentConfig::Affine { base, slope } => {
                ExponentField::Affine { base: *base, slope: *slope }
            }
            ExponentConfig::Nodal { values } => ExponentField::Nodal(values.clone()),
        };
        VariableExponent::new(field, mesh).map_err(|e| key_err("exponent", e))
    }

    pub fn kirchhoff_term(&self) -> Result<KirchhoffTerm, String> {
        let term = match self.kirchhoff.kind.as_str() {
            "constant" => KirchhoffTerm::constant(self.kirchhoff.m0),
            "affine" => KirchhoffTerm::affine(self.kirchhoff.m0, self.kirchhoff.b),
            other => {
                return Err(key_err("kirchhoff.kind", format!("unknown kind '{other}'")));
            }
        }
        .map_err(|e| key_err("kirchhoff", e))?;
        if let Some(theta) = self.kirchhoff.theta {
            if (theta - term.theta()).abs() > 1e-12 {
                return Err(key_err(
                    "kirchhoff.theta",
                    format!("declared {theta} but the kind implies {}", term.theta()),
                ));
            }
        }
        Ok(term)
    }

    pub fn quadrature_config(&self) -> Result<QuadratureConfig, String> {
        let summation = match self.quadrature.summation.as_str() {
            "compensated" => Summation::Compensated,
            "pairwise" => Summation::Pairwise,
            other => {
                return Err(key_err(
                    "quadrature.summation",
                    format!("unknown mode '{other}' (use 'compensated' or 'pairwise')"),
                ));
            }
        };
        let qc = QuadratureConfig {
            gauss_order: self.quadrature.gauss_order,
            near_levels: self.quadrature.near_levels,
            tail_factor: self.quadrature.tail_factor,
            summation,
        };
        qc.validate().map_err(|e| key_err("quadrature", e))?;
        Ok(qc)
    }

    pub fn build_setup(&self) -> Result<AnisotropicSetup, String> {
        if self.directions.is_empty() {
            return Err(key_err("directions", "need at least one direction"));
        }
        let mesh = self.mesh()?;
        let mut directions = Vec::with_capacity(self.directions.len());
        for i in 0..self.directions.len() {
            let family = self.family(i, &mesh)?;
            let dir = Direction::new(family, self.directions[i].order)
                .map_err(|e| key_err(&format!("directions[{i}].order"), e))?;
            directions.push(dir);
        }
        let source = self.exponent(&mesh)?;
        let kirchhoff = self.kirchhoff_term()?;
        let quadrature = self.quadrature_config()?;
        AnisotropicSetup::new(mesh, directions, source, kirchhoff, quadrature)
            .map_err(|e| key_err("config", e))
    }

    pub fn build_assembler(&self) -> Result<Assembler, String> {
        let setup = self.build_setup()?;
        Assembler::new(setup).map_err(|e| match e {
            Error::InvalidParameter(msg) => key_err("quadrature", msg),
            other => key_err("config", other),
        })
    }
}

pub fn load(path: &std::path::Path) -> Result<(RunConfig, serde_json::Value), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let echo: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    let cfg: RunConfig =
        serde_json::from_value(echo.clone()).map_err(|e| format!("config: {e}"))?;
    Ok((cfg, echo))
}
