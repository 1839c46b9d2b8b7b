//! Musielak function families built from symmetric kernels.
//!
//! A family couples a kernel `a(x, y, t)` (positive for t > 0, symmetric in
//! the two spatial arguments) with the odd increasing map
//! `phi(x, y, t) = a(x, y, |t|) * t` and its primitive
//! `Phi(x, y, t) = integral of phi(x, y, ...) from 0 to |t|`, which is convex
//! and even in t. The diagonal restriction `Phi(x, x, .)` drives the scalar
//! modulars on the domain itself.
//!
//! Growth is tracked through a declared index pair `(lower, upper)` with
//! `1 < lower <= t*phi/Phi <= upper < inf`; every built-in constructor
//! declares indices that the sampled certification in [`MusielakFamily::estimate_indices`]
//! re-checks on a deterministic grid.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{integrate_adaptive, invert_increasing};

/// Spatial point; one-dimensional setups store `[x, 0.0]`.
pub type Point = [f64; 2];

const INDEX_SLACK: f64 = 1e-9;
const PHI_PRIMITIVE_TOL: f64 = 1e-12;
const PHI_PRIMITIVE_DEPTH: usize = 40;
const INVERSE_REL_TOL: f64 = 1e-12;
const INVERSE_MAX_ITER: usize = 200;

/// Lower/upper growth exponents of a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthIndices {
    pub lower: f64,
    pub upper: f64,
}

impl GrowthIndices {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower <= 1.0 || upper < lower {
            return Err(Error::InvalidParameter(format!(
                "growth indices must satisfy 1 < lower <= upper < inf, got ({lower}, {upper})"
            )));
        }
        Ok(GrowthIndices { lower, upper })
    }

    /// Constant in the doubling bound `Phi(2t) <= 2^upper * Phi(t)`.
    pub fn doubling_constant(&self) -> f64 {
        2f64.powf(self.upper)
    }
}

/// Symmetric scalar exponent surface `p(x, y)`.
///
/// The affine variant evaluates on the pair midpoint, which keeps it
/// symmetric under swapping x and y; values saturate at the range attained on
/// the reference box so the declared indices stay valid for exterior points.
#[derive(Debug, Clone)]
pub enum PairExponent {
    Constant(f64),
    Affine {
        base: f64,
        slope: [f64; 2],
        clamp: (f64, f64),
    },
}

impl PairExponent {
    pub fn affine(base: f64, slope: [f64; 2], bounds: [[f64; 2]; 2], dim: usize) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let ys = if dim == 1 { vec![0.0] } else { vec![bounds[1][0], bounds[1][1]] };
        for &cx in &[bounds[0][0], bounds[0][1]] {
            for &cy in &ys {
                let v = base + slope[0] * cx + slope[1] * cy;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "variable exponent dips to {lo} <= 1 on the domain"
            )));
        }
        Ok(PairExponent::Affine { base, slope, clamp: (lo, hi) })
    }

    #[inline]
    pub fn eval(&self, x: Point, y: Point) -> f64 {
        match self {
            PairExponent::Constant(p) => *p,
            PairExponent::Affine { base, slope, clamp } => {
                let mx = 0.5 * (x[0] + y[0]);
                let my = 0.5 * (x[1] + y[1]);
                (base + slope[0] * mx + slope[1] * my).clamp(clamp.0, clamp.1)
            }
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            PairExponent::Constant(p) => (*p, *p),
            PairExponent::Affine { clamp, .. } => *clamp,
        }
    }
}

/// User-supplied kernel with caller-certified growth indices.
pub struct CustomKernel {
    pub kernel: Box<dyn Fn(Point, Point, f64) -> f64 + Send + Sync>,
    pub indices: GrowthIndices,
    pub label: String,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomKernel({})", self.label)
    }
}

#[derive(Debug, Clone)]
pub enum FamilyKind {
    /// `a(t) = scale * t^(p-2)`, so `Phi(t) = scale * t^p / p`.
    ConstantPower { p: f64, scale: f64 },
    /// `a(x, y, t) = t^(p(x,y) - 2)`.
    VariableExponent { exponent: PairExponent },
    /// `a(t) = t^(p-2) * ln(shift + t)` with `shift >= e`.
    LogPerturbed { p: f64, shift: f64 },
    Custom(Arc<CustomKernel>),
}

/// A Musielak family: kernel, odd homeomorphism, convex primitive, indices.
#[derive(Debug, Clone)]
pub struct MusielakFamily {
    kind: FamilyKind,
    declared: GrowthIndices,
}

// excess of t*phi/Phi over p for the log-perturbed kernel with shift >= e,
// maximised numerically over p in (1, 4] and t > 0 (worst case ~0.3159)
const LOG_KERNEL_INDEX_EXCESS: f64 = 0.32;

impl MusielakFamily {
    pub fn constant_power(p: f64) -> Result<Self> {
        Self::scaled_power(p, 1.0)
    }

    /// Power kernel rescaled so that `Phi(t) = t^p` exactly.
    pub fn normalized_power(p: f64) -> Result<Self> {
        Self::scaled_power(p, p)
    }

    pub fn scaled_power(p: f64, scale: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power kernel exponent must exceed 1 (growth condition 1 < lower index), got {p}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel scale must be positive, got {scale}")));
        }
        Ok(MusielakFamily {
            kind: FamilyKind::ConstantPower { p, scale },
            declared: GrowthIndices::new(p, p)?,
        })
    }

    pub fn variable_exponent(exponent: PairExponent) -> Result<Self> {
        let (lo, hi) = exponent.range();
        Ok(MusielakFamily {
            kind: FamilyKind::VariableExponent { exponent },
            declared: GrowthIndices::new(lo, hi)?,
        })
    }

    pub fn log_perturbed(p: f64, shift: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "log-perturbed exponent must exceed 1, got {p}"
            )));
        }
        if !(shift >= std::f64::consts::E) {
            return Err(Error::InvalidParameter(format!(
                "log-perturbed shift must be at least e so the kernel stays increasing, got {shift}"
            )));
        }
        Ok(MusielakFamily {
            kind: FamilyKind::LogPerturbed { p, shift },
            declared: GrowthIndices::new(p, p + LOG_KERNEL_INDEX_EXCESS)?,
        })
    }

    pub fn custom(kernel: CustomKernel) -> Self {
        let declared = kernel.indices;
        MusielakFamily { kind: FamilyKind::Custom(Arc::new(kernel)), declared }
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn declared_indices(&self) -> GrowthIndices {
        self.declared
    }

    /// True when the kernel ignores the spatial arguments.
    pub fn is_spatially_constant(&self) -> bool {
        matches!(
            self.kind,
            FamilyKind::ConstantPower { .. }
                | FamilyKind::LogPerturbed { .. }
                | FamilyKind::VariableExponent { exponent: PairExponent::Constant(_) }
        )
    }

    /// Kernel value `a(x, y, t)`; meaningful for t > 0 (may blow up at 0).
    pub fn kernel_a(&self, x: Point, y: Point, t: f64) -> f64 {
        match &self.kind {
            FamilyKind::ConstantPower { p, scale } => scale * t.powf(p - 2.0),
            FamilyKind::VariableExponent { exponent } => t.powf(exponent.eval(x, y) - 2.0),
            FamilyKind::LogPerturbed { p, shift } => t.powf(p - 2.0) * (shift + t).ln(),
            FamilyKind::Custom(k) => (k.kernel)(x, y, t),
        }
    }

    /// Odd increasing homeomorphism `phi(x, y, t) = a(x, y, |t|) * t`, with
    /// `phi(x, y, 0) = 0`.
    pub fn phi(&self, x: Point, y: Point, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let m = t.abs();
        let v = match &self.kind {
            FamilyKind::ConstantPower { p, scale } => scale * m.powf(p - 1.0),
            FamilyKind::VariableExponent { exponent } => m.powf(exponent.eval(x, y) - 1.0),
            FamilyKind::LogPerturbed { p, shift } => m.powf(p - 1.0) * (shift + m).ln(),
            FamilyKind::Custom(k) => (k.kernel)(x, y, m) * m,
        };
        if t > 0.0 { v } else { -v }
    }

    /// Convex even primitive `Phi(x, y, t)`.
    pub fn big_phi(&self, x: Point, y: Point, t: f64) -> f64 {
        let m = t.abs();
        if m == 0.0 {
            return 0.0;
        }
        match &self.kind {
            FamilyKind::ConstantPower { p, scale } => scale * m.powf(*p) / p,
            FamilyKind::VariableExponent { exponent } => {
                let p = exponent.eval(x, y);
                m.powf(p) / p
            }
            FamilyKind::LogPerturbed { p, shift } => log_power_primitive(*p, *shift, m),
            FamilyKind::Custom(_) => self.primitive_by_quadrature(x, y, m),
        }
    }

    fn primitive_by_quadrature(&self, x: Point, y: Point, m: f64) -> f64 {
        let rough = m * self.phi(x, y, m).abs();
        let tol = PHI_PRIMITIVE_TOL.max(1e-14 * rough);
        integrate_adaptive(|tau| self.phi(x, y, tau), 0.0, m, tol, PHI_PRIMITIVE_DEPTH)
            .unwrap_or(rough)
    }

    /// Diagonal primitive `Phi(x, x, t)` used by the scalar modulars.
    #[inline]
    pub fn big_phi_diag(&self, x: Point, t: f64) -> f64 {
        self.big_phi(x, x, t)
    }

    /// Inverse of the diagonal primitive in its second argument.
    pub fn big_phi_diag_inverse(&self, x: Point, v: f64) -> Result<f64> {
        if v < 0.0 {
            return Err(Error::Domain { what: "primitive inverse needs a nonnegative value", value: v });
        }
        match &self.kind {
            FamilyKind::ConstantPower { p, scale } => Ok((v * p / scale).powf(1.0 / p)),
            FamilyKind::VariableExponent { exponent } => {
                let p = exponent.eval(x, x);
                Ok((v * p).powf(1.0 / p))
            }
            _ => invert_increasing(
                |t| self.big_phi_diag(x, t),
                None,
                v,
                INVERSE_REL_TOL,
                INVERSE_MAX_ITER,
            ),
        }
    }

    /// Inverse homeomorphism `phi^{-1}(x, y, t)` for t >= 0.
    pub fn conjugate_phi(&self, x: Point, y: Point, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain { what: "conjugate kernel argument must be nonnegative", value: t });
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            FamilyKind::ConstantPower { p, scale } => Ok((t / scale).powf(1.0 / (p - 1.0))),
            FamilyKind::VariableExponent { exponent } => {
                let p = exponent.eval(x, y);
                Ok(t.powf(1.0 / (p - 1.0)))
            }
            FamilyKind::LogPerturbed { p, shift } => {
                let (p, shift) = (*p, *shift);
                let df = move |s: f64| {
                    (p - 1.0) * s.powf(p - 2.0) * (shift + s).ln() + s.powf(p - 1.0) / (shift + s)
                };
                invert_increasing(
                    |s| self.phi(x, y, s),
                    Some(&df),
                    t,
                    INVERSE_REL_TOL,
                    INVERSE_MAX_ITER,
                )
            }
            FamilyKind::Custom(_) => invert_increasing(
                |s| self.phi(x, y, s),
                None,
                t,
                INVERSE_REL_TOL,
                INVERSE_MAX_ITER,
            ),
        }
    }

    /// Primitive of the inverse homeomorphism (the conjugate Young function).
    pub fn conjugate_big_phi(&self, x: Point, y: Point, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain { what: "conjugate primitive argument must be nonnegative", value: t });
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            FamilyKind::ConstantPower { p, scale } => {
                let q = p / (p - 1.0);
                Ok(t.powf(q) / (q * scale.powf(1.0 / (p - 1.0))))
            }
            FamilyKind::VariableExponent { exponent } => {
                let p = exponent.eval(x, y);
                let q = p / (p - 1.0);
                Ok(t.powf(q) / q)
            }
            _ => {
                // each integrand value comes from an iterative inversion, so
                // the quadrature cannot resolve below that noise floor
                let rough = t * self.conjugate_phi(x, y, t)?;
                let tol = PHI_PRIMITIVE_TOL.max(1e-9 * rough.abs());
                integrate_adaptive(
                    |tau| self.conjugate_phi(x, y, tau).unwrap_or(0.0),
                    0.0,
                    t,
                    tol,
                    PHI_PRIMITIVE_DEPTH,
                )
            }
        }
    }

    /// Two-sided power envelope for `Phi` under scaling of its argument.
    ///
    /// For `sigma > 1`: `sigma^lower * Phi(t) <= Phi(sigma t) <= sigma^upper * Phi(t)`.
    /// For `sigma` in (0, 1) the exponents swap roles. `sigma = 1` is rejected
    /// because both bounds collapse to a tautology.
    pub fn scaling_bounds(&self, x: Point, y: Point, t: f64, sigma: f64) -> Result<ScalingBounds> {
        if sigma <= 0.0 {
            return Err(Error::Domain { what: "scale factor must be positive", value: sigma });
        }
        if sigma == 1.0 {
            return Err(Error::Domain { what: "scale factor 1 gives a vacuous envelope", value: sigma });
        }
        let base = self.big_phi(x, y, t);
        let value = self.big_phi(x, y, sigma * t);
        let idx = self.declared;
        let (lower, upper) = if sigma > 1.0 {
            (sigma.powf(idx.lower) * base, sigma.powf(idx.upper) * base)
        } else {
            (sigma.powf(idx.upper) * base, sigma.powf(idx.lower) * base)
        };
        Ok(ScalingBounds { lower, value, upper })
    }

    /// Sampled growth indices `(inf, sup)` of `t*phi/Phi` over the grid,
    /// checked for containment in the declared pair.
    pub fn estimate_indices(&self, grid: &SampleGrid) -> Result<GrowthIndices> {
        let pairs: &[(Point, Point)] = if self.is_spatially_constant() {
            &grid.pairs[..1.min(grid.pairs.len())]
        } else {
            &grid.pairs
        };
        let mut inf = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        let mut worst: (Point, Point, f64) = ([0.0; 2], [0.0; 2], 0.0);
        let mut worst_dev = 0.0;
        for &(x, y) in pairs {
            for &t in &grid.ts {
                let ph = self.big_phi(x, y, t);
                if !(ph > 0.0) || !ph.is_finite() {
                    continue;
                }
                let ratio = t * self.phi(x, y, t) / ph;
                if ratio < inf {
                    inf = ratio;
                }
                if ratio > sup {
                    sup = ratio;
                }
                let dev = (self.declared.lower - ratio).max(ratio - self.declared.upper);
                if dev > worst_dev {
                    worst_dev = dev;
                    worst = (x, y, t);
                }
            }
        }
        if !inf.is_finite() || !sup.is_finite() {
            return Err(Error::Certification {
                what: "growth-index ratio could not be sampled (primitive vanished everywhere)".into(),
                witness: None,
            });
        }
        if inf < self.declared.lower - INDEX_SLACK || sup > self.declared.upper + INDEX_SLACK {
            return Err(Error::Certification {
                what: format!(
                    "sampled growth ratio range ({inf}, {sup}) escapes declared ({}, {})",
                    self.declared.lower, self.declared.upper
                ),
                witness: Some(worst),
            });
        }
        GrowthIndices::new(inf.max(1.0 + 1e-12), sup)
    }

    /// Sampled structural checks: square-root convexity of the primitive,
    /// boundedness of `Phi(., ., 1)`, and the doubling bound with the
    /// declared upper index.
    pub fn certify_hypotheses(&self, grid: &SampleGrid) -> HypothesisReport {
        let pairs: &[(Point, Point)] = if self.is_spatially_constant() {
            &grid.pairs[..1.min(grid.pairs.len())]
        } else {
            &grid.pairs
        };
        let indices = self.estimate_indices(grid);
        let mut sqrt_convex = true;
        let mut sqrt_worst = 0.0f64;
        let mut sup_one = f64::NEG_INFINITY;
        let mut doubling_ok = true;
        let mut doubling_worst = 0.0f64;
        let cap = self.declared.doubling_constant();
        for &(x, y) in pairs {
            sup_one = sup_one.max(self.big_phi(x, y, 1.0));
            for &t in &grid.ts {
                // second difference of tau -> Phi(sqrt(tau)) at tau = t^2
                let tau = t * t;
                let h = 0.5 * tau;
                let g = |tt: f64| self.big_phi(x, y, tt.sqrt());
                let d2 = g(tau + h) + g(tau - h) - 2.0 * g(tau);
                let scale = g(tau + h).abs().max(1.0);
                if d2 < -1e-9 * scale {
                    sqrt_convex = false;
                }
                sqrt_worst = sqrt_worst.min(d2 / scale);

                let p1 = self.big_phi(x, y, t);
                let p2 = self.big_phi(x, y, 2.0 * t);
                if p1 > 0.0 && p1.is_finite() && p2.is_finite() {
                    let ratio = p2 / p1;
                    doubling_worst = doubling_worst.max(ratio);
                    if ratio > cap * (1.0 + 1e-12) {
                        doubling_ok = false;
                    }
                }
            }
        }
        HypothesisReport {
            indices_contained: indices.is_ok(),
            sampled_indices: indices.ok(),
            sqrt_convex,
            sqrt_convexity_worst: sqrt_worst,
            sup_phi_at_one: sup_one,
            bounded_at_one: sup_one.is_finite(),
            doubling_ok,
            doubling_worst,
            doubling_cap: cap,
        }
    }

    /// Largest primitive value over a set of spatial pairs at fixed argument.
    pub fn sup_big_phi(&self, pairs: &[(Point, Point)], t: f64) -> f64 {
        if self.is_spatially_constant() || pairs.is_empty() {
            let o = [0.0, 0.0];
            return self.big_phi(o, o, t);
        }
        pairs
            .iter()
            .map(|&(x, y)| self.big_phi(x, y, t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether the inverse-conjugate integrand is integrable near zero for
    /// fractional order `s` in dimension `dim`.
    pub fn conjugate_integrability(&self, s: f64, dim: usize) -> Result<()> {
        check_order_dim(s, dim)?;
        let expo = 1.0 / self.declared.upper - (dim as f64 + s) / dim as f64;
        if expo <= -1.0 + 1e-12 {
            return Err(Error::Domain {
                what: "inverse-conjugate integrand diverges near zero (upper growth index too large for this order/dimension)",
                value: expo,
            });
        }
        Ok(())
    }

    /// Inverse of the critical-growth conjugate: the increasing map
    /// `t -> integral over (0, t] of PhiDiagInverse(tau) * tau^(-(dim+s)/dim)`.
    pub fn sobolev_conjugate_inverse(&self, x: Point, s: f64, dim: usize, t: f64) -> Result<f64> {
        self.conjugate_integrability(s, dim)?;
        if t < 0.0 {
            return Err(Error::Domain { what: "upper limit must be nonnegative", value: t });
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let alpha_low = 1.0 / self.declared.upper - (dim as f64 + s) / dim as f64;
        // substitute tau = t * sigma^m so the worst-case endpoint behaviour
        // sigma^(m*(1+alpha_low) - 1) becomes bounded
        let m = 1.0 / (1.0 + alpha_low);
        let pow = (dim as f64 + s) / dim as f64;
        let f = |sig: f64| {
            if sig <= 0.0 {
                return 0.0;
            }
            let tau = t * sig.powf(m);
            let inv = self.big_phi_diag_inverse(x, tau).unwrap_or(0.0);
            inv * tau.powf(-pow) * t * m * sig.powf(m - 1.0)
        };
        let rough = f(1.0).abs().max(f(0.5).abs()) + 1e-300;
        integrate_adaptive(f, 0.0, 1.0, (1e-12f64).max(1e-10 * rough), PHI_PRIMITIVE_DEPTH)
    }
}

fn check_order_dim(s: f64, dim: usize) -> Result<()> {
    if !(0.0 < s && s < 1.0) {
        return Err(Error::Domain { what: "fractional order must lie in (0, 1)", value: s });
    }
    if dim != 1 && dim != 2 {
        return Err(Error::Domain { what: "dimension must be 1 or 2", value: dim as f64 });
    }
    Ok(())
}

/// Primitive of `t^(p-1) ln(c+t)`: a log series below c/2 (the closed forms
/// cancel catastrophically there), closed forms for integer p in {2, 3},
/// adaptive quadrature otherwise.
fn log_power_primitive(p: f64, c: f64, m: f64) -> f64 {
    if m < 0.5 * c {
        // integral of tau^(p-1) ln(1 + tau/c) expanded termwise:
        // Phi = m^p [ ln(c)/p + sum_k (-1)^(k+1) (m/c)^k / (k (p+k)) ]
        let x = m / c;
        let head = c.ln() / p;
        let mut pow = 1.0;
        let mut sum = 0.0;
        for k in 1..200u32 {
            pow *= x;
            let contrib = pow / (k as f64 * (p + k as f64));
            if k % 2 == 1 {
                sum += contrib;
            } else {
                sum -= contrib;
            }
            if contrib < 1e-17 * (head + sum.abs()) {
                break;
            }
        }
        return m.powf(p) * (head + sum);
    }
    if (p - 2.0).abs() < 1e-12 {
        return 0.5 * m * m * (c + m).ln() - 0.25 * m * m + 0.5 * c * m
            - 0.5 * c * c * (m / c).ln_1p();
    }
    if (p - 3.0).abs() < 1e-12 {
        let cube = m * m * m / 3.0;
        return cube * (c + m).ln()
            - (cube - 0.5 * c * m * m + c * c * m - c * c * c * (m / c).ln_1p()) / 3.0;
    }
    let rough = m.powf(p) / p * (c + m).ln();
    let tol = PHI_PRIMITIVE_TOL.max(1e-14 * rough);
    integrate_adaptive(
        |tau| {
            if tau <= 0.0 { 0.0 } else { tau.powf(p - 1.0) * (c + tau).ln() }
        },
        0.0,
        m,
        tol,
        PHI_PRIMITIVE_DEPTH,
    )
    .unwrap_or(rough)
}

/// Result of the two-sided scaling envelope: `lower <= value <= upper`.
#[derive(Debug, Clone, Copy)]
pub struct ScalingBounds {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl ScalingBounds {
    pub fn contains(&self, slack: f64) -> bool {
        let scale = self.upper.abs().max(1.0);
        self.value >= self.lower - slack * scale && self.value <= self.upper + slack * scale
    }
}

/// Sampled hypothesis certification for one family.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub indices_contained: bool,
    pub sampled_indices: Option<GrowthIndices>,
    /// convexity of `tau -> Phi(sqrt(tau))`, the gate for the two-sided
    /// parallelogram-type estimates
    pub sqrt_convex: bool,
    pub sqrt_convexity_worst: f64,
    pub sup_phi_at_one: f64,
    pub bounded_at_one: bool,
    pub doubling_ok: bool,
    pub doubling_worst: f64,
    pub doubling_cap: f64,
}

/// Deterministic sample grid over spatial pairs and a logarithmic t-range.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub pairs: Vec<(Point, Point)>,
    pub ts: Vec<f64>,
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

impl SampleGrid {
    /// `n_space` x-points paired against `n_space` y-points (full tensor) on
    /// the box, with `n_t` log-spaced arguments in [t_lo, t_hi].
    pub fn on_box(
        bounds: [[f64; 2]; 2],
        dim: usize,
        n_space: usize,
        n_t: usize,
        t_lo: f64,
        t_hi: f64,
    ) -> SampleGrid {
        let mut xs = Vec::with_capacity(n_space);
        let mut ys = Vec::with_capacity(n_space);
        for i in 0..n_space {
            let hx = halton(i + 1, 2);
            let hy = halton(i + 1, 3);
            let gx = halton(i + 1, 5);
            let gy = halton(i + 1, 7);
            let span0 = bounds[0][1] - bounds[0][0];
            let span1 = bounds[1][1] - bounds[1][0];
            if dim == 1 {
                xs.push([bounds[0][0] + hx * span0, 0.0]);
                ys.push([bounds[0][0] + gx * span0, 0.0]);
            } else {
                xs.push([bounds[0][0] + hx * span0, bounds[1][0] + hy * span1]);
                ys.push([bounds[0][0] + gx * span0, bounds[1][0] + gy * span1]);
            }
        }
        let mut pairs = Vec::with_capacity(n_space * n_space);
        for &x in &xs {
            for &y in &ys {
                pairs.push((x, y));
            }
        }
        let mut ts = Vec::with_capacity(n_t);
        let (l0, l1) = (t_lo.ln(), t_hi.ln());
        for k in 0..n_t {
            let f = if n_t == 1 { 0.5 } else { k as f64 / (n_t - 1) as f64 };
            ts.push((l0 + f * (l1 - l0)).exp());
        }
        SampleGrid { pairs, ts }
    }

    /// Default certification grid: 64 x 64 spatial pairs, 64 log-spaced
    /// arguments in [1e-6, 1e6].
    pub fn default_on_box(bounds: [[f64; 2]; 2], dim: usize) -> SampleGrid {
        SampleGrid::on_box(bounds, dim, 64, 64, 1e-6, 1e6)
    }

    pub fn unit(dim: usize) -> SampleGrid {
        SampleGrid::default_on_box([[0.0, 1.0], [0.0, 1.0]], dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: Point = [0.0, 0.0];
    const HALF: Point = [0.5, 0.0];

    #[test]
    fn power_kernel_closed_forms() {
        let f = MusielakFamily::constant_power(2.0).unwrap();
        assert_eq!(f.phi(O, O, 0.0), 0.0);
        assert!((f.phi(O, O, 3.0) - 3.0).abs() < 1e-15);
        assert!((f.phi(O, O, -3.0) + 3.0).abs() < 1e-15);
        assert!((f.big_phi(O, O, 2.0) - 2.0).abs() < 1e-15);
        let f3 = MusielakFamily::constant_power(3.0).unwrap();
        assert!((f3.big_phi(O, O, 2.0) - 8.0 / 3.0).abs() < 1e-14);
        let n = MusielakFamily::normalized_power(3.0).unwrap();
        assert!((n.big_phi(O, O, 2.0) - 8.0).abs() < 1e-13);
    }

    #[test]
    fn power_kernel_rejects_bad_exponents() {
        assert!(MusielakFamily::constant_power(1.0).is_err());
        assert!(MusielakFamily::constant_power(0.5).is_err());
        assert!(MusielakFamily::constant_power(f64::NAN).is_err());
    }

    #[test]
    fn variable_exponent_examples() {
        let e = PairExponent::Constant(3.0);
        let f = MusielakFamily::variable_exponent(e).unwrap();
        assert!((f.phi(O, HALF, 2.0) - 4.0).abs() < 1e-14);

        // p(x, y) = 2 + (x0+y0)/2 on the unit interval: p(0.5, 0.5) = 2.5
        let e = PairExponent::affine(2.0, [1.0, 0.0], [[0.0, 1.0], [0.0, 1.0]], 1).unwrap();
        let f = MusielakFamily::variable_exponent(e).unwrap();
        assert!((f.big_phi_diag(HALF, 1.0) - 0.4).abs() < 1e-14);
        let idx = f.declared_indices();
        assert!((idx.lower - 2.0).abs() < 1e-14 && (idx.upper - 3.0).abs() < 1e-14);
    }

    #[test]
    fn log_kernel_closed_form_matches_quadrature() {
        let c = std::f64::consts::E;
        for &t in &[1e-4, 0.3, 1.0, 7.5, 120.0] {
            for &p in &[2.0, 3.0] {
                let closed = log_power_primitive(p, c, t);
                let quad = integrate_adaptive(
                    |tau| tau.powf(p - 1.0) * (c + tau).ln(),
                    0.0,
                    t,
                    1e-13 * closed.max(1e-8),
                    40,
                )
                .unwrap();
                assert!(
                    (closed - quad).abs() <= 1e-10 * closed.abs().max(1e-12),
                    "p={p} t={t}: closed {closed} vs quadrature {quad}"
                );
            }
        }
    }

    #[test]
    fn young_equality_at_conjugate_pairs() {
        let grid = [0.17, 0.9, 2.3, 31.0];
        let fams = [
            MusielakFamily::constant_power(2.0).unwrap(),
            MusielakFamily::constant_power(3.0).unwrap(),
            MusielakFamily::normalized_power(2.5).unwrap(),
            MusielakFamily::log_perturbed(2.0, std::f64::consts::E).unwrap(),
        ];
        for f in &fams {
            for &t in &grid {
                let lhs = f.big_phi(O, HALF, t) + f.conjugate_big_phi(O, HALF, f.phi(O, HALF, t)).unwrap();
                let rhs = t * f.phi(O, HALF, t);
                assert!(
                    (lhs - rhs).abs() <= 1e-7 * rhs.abs().max(1.0),
                    "young equality off: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn conjugate_kernel_inverts_phi() {
        let f = MusielakFamily::log_perturbed(2.5, 3.0).unwrap();
        for &t in &[1e-5, 0.02, 1.0, 44.0, 1e4] {
            let v = f.phi(O, O, t);
            let back = f.conjugate_phi(O, O, v).unwrap();
            assert!((back - t).abs() <= 1e-8 * t.max(1e-10), "t={t} back={back}");
        }
        assert_eq!(f.conjugate_phi(O, O, 0.0).unwrap(), 0.0);
        assert!(f.conjugate_phi(O, O, -1.0).is_err());
    }

    #[test]
    fn diag_inverse_roundtrip() {
        let fams = [
            MusielakFamily::constant_power(1.5).unwrap(),
            MusielakFamily::log_perturbed(3.0, std::f64::consts::E).unwrap(),
        ];
        for f in &fams {
            for &t in &[1e-3, 0.7, 5.0, 300.0] {
                let v = f.big_phi_diag(HALF, t);
                let back = f.big_phi_diag_inverse(HALF, v).unwrap();
                assert!((back - t).abs() <= 1e-8 * t, "t={t} back={back}");
            }
        }
    }

    #[test]
    fn sampled_indices_match_power_exponent_exactly() {
        let f = MusielakFamily::constant_power(2.7).unwrap();
        let got = f.estimate_indices(&SampleGrid::unit(1)).unwrap();
        assert!((got.lower - 2.7).abs() < 1e-12);
        assert!((got.upper - 2.7).abs() < 1e-12);
    }

    #[test]
    fn sampled_indices_flag_false_declarations() {
        let k = CustomKernel {
            kernel: Box::new(|_, _, t| t.powf(1.0)), // effectively p = 3
            indices: GrowthIndices::new(1.8, 2.2).unwrap(),
            label: "misdeclared cubic".into(),
        };
        let f = MusielakFamily::custom(k);
        match f.estimate_indices(&SampleGrid::unit(1)) {
            Err(Error::Certification { witness, .. }) => assert!(witness.is_some()),
            other => panic!("expected certification failure, got {other:?}"),
        }
    }

    #[test]
    fn variable_exponent_indices_within_range() {
        let e = PairExponent::affine(2.0, [1.0, 0.0], [[0.0, 1.0], [0.0, 1.0]], 1).unwrap();
        let f = MusielakFamily::variable_exponent(e).unwrap();
        let got = f.estimate_indices(&SampleGrid::unit(1)).unwrap();
        assert!(got.lower >= 2.0 - 1e-12 && got.upper <= 3.0 + 1e-12);
    }

    #[test]
    fn scaling_envelope_is_tight_for_powers() {
        let f = MusielakFamily::constant_power(2.5).unwrap();
        for &sigma in &[0.25, 0.9, 1.5, 8.0] {
            let b = f.scaling_bounds(O, HALF, 1.3, sigma).unwrap();
            assert!((b.value - b.lower).abs() <= 1e-12 * b.value.abs());
            assert!((b.value - b.upper).abs() <= 1e-12 * b.value.abs());
        }
        assert!(f.scaling_bounds(O, O, 1.0, 1.0).is_err());
        assert!(f.scaling_bounds(O, O, 1.0, -2.0).is_err());
    }

    #[test]
    fn scaling_envelope_contains_log_kernel() {
        let f = MusielakFamily::log_perturbed(2.0, std::f64::consts::E).unwrap();
        for &sigma in &[0.1, 0.7, 1.9, 40.0] {
            for &t in &[1e-3, 0.4, 2.0, 90.0] {
                let b = f.scaling_bounds(O, O, t, sigma).unwrap();
                assert!(b.contains(1e-9), "sigma={sigma} t={t}: {b:?}");
            }
        }
    }

    #[test]
    fn certification_reports_expected_shape() {
        let grid = SampleGrid::unit(1);
        let f = MusielakFamily::constant_power(2.0).unwrap();
        let rep = f.certify_hypotheses(&grid);
        assert!(rep.indices_contained && rep.sqrt_convex && rep.doubling_ok && rep.bounded_at_one);
        assert!((rep.doubling_worst - 4.0).abs() < 1e-9);

        // p = 1.5 breaks square-root convexity (Phi(sqrt(tau)) ~ tau^0.75)
        let f = MusielakFamily::constant_power(1.5).unwrap();
        let rep = f.certify_hypotheses(&grid);
        assert!(!rep.sqrt_convex);
        assert!(rep.indices_contained && rep.doubling_ok);
    }

    #[test]
    fn conjugate_critical_map_matches_power_closed_form() {
        // for Phi(t) = t^p / p: inverse is (p tau)^(1/p) and the map is
        // p^(1/p) * t^(1/p - s/dim) / (1/p - s/dim)
        let p = 1.5;
        let s = 0.5;
        let f = MusielakFamily::constant_power(p).unwrap();
        let expo = 1.0 / p - s;
        for &t in &[0.3, 1.0, 9.0] {
            let got = f.sobolev_conjugate_inverse(O, s, 1, t).unwrap();
            let want = p.powf(1.0 / p) * t.powf(expo) / expo;
            assert!((got - want).abs() <= 1e-8 * want, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn conjugate_critical_map_flags_divergence() {
        let f = MusielakFamily::constant_power(2.0).unwrap();
        // order 0.5 in dimension 1: exponent 1/2 - 3/2 = -1 exactly
        assert!(f.sobolev_conjugate_inverse(O, 0.5, 1, 1.0).is_err());
        assert!(f.conjugate_integrability(0.5, 1).is_err());
        assert!(f.conjugate_integrability(0.3, 1).is_ok());
    }

    #[test]
    fn log_kernel_requires_safe_shift() {
        assert!(MusielakFamily::log_perturbed(2.0, 1.0).is_err());
        assert!(MusielakFamily::log_perturbed(2.0, std::f64::consts::E).is_ok());
    }
}
