//! Kirchhoff-type energy coefficients: the scalar weight applied to the
//! nonlocal modular, its primitive, and the structural checks the solvers
//! rely on.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KirchhoffTerm {
    /// m(t) = m0
    Constant { m0: f64 },
    /// m(t) = m0 + b t
    Affine { m0: f64, b: f64 },
}

impl KirchhoffTerm {
    pub fn constant(m0: f64) -> Result<Self> {
        if !(m0 > 0.0 && m0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coefficient floor must be positive, got {m0}"
            )));
        }
        Ok(KirchhoffTerm::Constant { m0 })
    }

    pub fn affine(m0: f64, b: f64) -> Result<Self> {
        if !(m0 > 0.0 && m0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coefficient floor must be positive, got {m0}"
            )));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "affine coefficient slope must be nonnegative, got {b}"
            )));
        }
        Ok(if b == 0.0 {
            KirchhoffTerm::Constant { m0 }
        } else {
            KirchhoffTerm::Affine { m0, b }
        })
    }

    pub fn m0(&self) -> f64 {
        match self {
            KirchhoffTerm::Constant { m0 } | KirchhoffTerm::Affine { m0, .. } => *m0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            KirchhoffTerm::Constant { m0 } => *m0,
            KirchhoffTerm::Affine { m0, b } => m0 + b * t,
        }
    }

    /// Primitive of the coefficient with value 0 at 0.
    pub fn primitive(&self, t: f64) -> f64 {
        match self {
            KirchhoffTerm::Constant { m0 } => m0 * t,
            KirchhoffTerm::Affine { m0, b } => m0 * t + 0.5 * b * t * t,
        }
    }

    /// Polynomial degree of the primitive (1 for constant, 2 for affine).
    pub fn theta(&self) -> f64 {
        match self {
            KirchhoffTerm::Constant { .. } => 1.0,
            KirchhoffTerm::Affine { .. } => 2.0,
        }
    }

    /// Structural checks on a positive sample grid:
    /// the coefficient never dips below its floor, the primitive controls
    /// `t m(t) <= theta M(t)`, and for t >= 1 the primitive stays under the
    /// power envelope `M(1) t^theta`.
    pub fn verify_invariants(&self, ts: &[f64]) -> KirchhoffReport {
        let theta = self.theta();
        let m1 = self.primitive(1.0);
        let mut floor_ok = true;
        let mut growth_ok = true;
        let mut envelope_ok = true;
        let mut worst_growth = 0.0f64;
        for &t in ts {
            if t <= 0.0 {
                continue;
            }
            let m = self.eval(t);
            let mh = self.primitive(t);
            if m < self.m0() * (1.0 - 1e-12) {
                floor_ok = false;
            }
            let g = t * m / (theta * mh);
            worst_growth = worst_growth.max(g);
            if g > 1.0 + 1e-12 {
                growth_ok = false;
            }
            if t >= 1.0 && mh > m1 * t.powf(theta) * (1.0 + 1e-12) {
                envelope_ok = false;
            }
        }
        KirchhoffReport { floor_ok, growth_ok, envelope_ok, worst_growth }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KirchhoffReport {
    pub floor_ok: bool,
    pub growth_ok: bool,
    pub envelope_ok: bool,
    pub worst_growth: f64,
}

impl KirchhoffReport {
    pub fn all_ok(&self) -> bool {
        self.floor_ok && self.growth_ok && self.envelope_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..60).map(|k| 10f64.powf(-3.0 + k as f64 * 0.1)).collect()
    }

    #[test]
    fn constant_coefficient() {
        let m = KirchhoffTerm::constant(2.0).unwrap();
        assert_eq!(m.eval(5.0), 2.0);
        assert_eq!(m.primitive(3.0), 6.0);
        assert_eq!(m.theta(), 1.0);
        assert!(m.verify_invariants(&grid()).all_ok());
    }

    #[test]
    fn affine_coefficient() {
        let m = KirchhoffTerm::affine(1.0, 0.5).unwrap();
        assert_eq!(m.eval(2.0), 2.0);
        assert_eq!(m.primitive(2.0), 3.0);
        assert_eq!(m.theta(), 2.0);
        let rep = m.verify_invariants(&grid());
        assert!(rep.all_ok(), "{rep:?}");
        // t m(t) <= theta M(t) is strict except in the pure-power limit
        assert!(rep.worst_growth <= 1.0);
    }

    #[test]
    fn affine_with_zero_slope_collapses_to_constant() {
        let m = KirchhoffTerm::affine(1.5, 0.0).unwrap();
        assert_eq!(m, KirchhoffTerm::Constant { m0: 1.5 });
    }

    #[test]
    fn rejects_nonpositive_floor() {
        assert!(KirchhoffTerm::constant(0.0).is_err());
        assert!(KirchhoffTerm::affine(-1.0, 1.0).is_err());
        assert!(KirchhoffTerm::affine(1.0, -0.1).is_err());
    }
}
