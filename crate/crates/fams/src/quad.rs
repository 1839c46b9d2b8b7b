//! Scalar quadrature and root-finding utilities.
//!
//! Gauss-Legendre tables up to 6 points, positive-weight symmetric triangle
//! rules, an adaptive Gauss-Kronrod integrator for one-dimensional primitives,
//! a safeguarded monotone inverter, and compensated summation.

use crate::error::{Error, Result};

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Kahan { sum: 0.0, c: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

// Gauss-Legendre nodes/weights on [-1, 1].
const G1: [(f64, f64); 1] = [(0.0, 2.0)];
const G2: [(f64, f64); 2] = [
    (-0.5773502691896257, 1.0),
    (0.5773502691896257, 1.0),
];
const G3: [(f64, f64); 3] = [
    (-0.7745966692414834, 0.5555555555555556),
    (0.0, 0.8888888888888888),
    (0.7745966692414834, 0.5555555555555556),
];
const G4: [(f64, f64); 4] = [
    (-0.8611363115940526, 0.3478548451374538),
    (-0.3399810435848563, 0.6521451548625461),
    (0.3399810435848563, 0.6521451548625461),
    (0.8611363115940526, 0.3478548451374538),
];
const G5: [(f64, f64); 5] = [
    (-0.9061798459386640, 0.2369268850561891),
    (-0.5384693101056831, 0.4786286704993665),
    (0.0, 0.5688888888888889),
    (0.5384693101056831, 0.4786286704993665),
    (0.9061798459386640, 0.2369268850561891),
];
const G6: [(f64, f64); 6] = [
    (-0.9324695142031521, 0.1713244923791704),
    (-0.6612093864662645, 0.3607615730481386),
    (-0.2386191860831969, 0.4679139345726910),
    (0.2386191860831969, 0.4679139345726910),
    (0.6612093864662645, 0.3607615730481386),
    (0.9324695142031521, 0.1713244923791704),
];

/// Gauss-Legendre rule with `n` points on [-1, 1]; `n` is clamped to 1..=6.
pub fn gauss(n: usize) -> &'static [(f64, f64)] {
    match n {
        0 | 1 => &G1,
        2 => &G2,
        3 => &G3,
        4 => &G4,
        5 => &G5,
        _ => &G6,
    }
}

/// Symmetric positive triangle rules in barycentric coordinates.
/// Each entry is (l0, l1, l2, weight); weights sum to 1 and are scaled by the
/// triangle area at use sites.
pub type TriPoint = (f64, f64, f64, f64);

const T_DEG1: [TriPoint; 1] = [(
    1.0 / 3.0,
    1.0 / 3.0,
    1.0 / 3.0,
    1.0,
)];

const T_DEG2: [TriPoint; 3] = [
    (2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0),
    (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0),
    (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0),
];

const TA1: f64 = 0.816847572980459;
const TB1: f64 = 0.091576213509771;
const TW1: f64 = 0.109951743655322;
const TA2: f64 = 0.108103018168070;
const TB2: f64 = 0.445948490915965;
const TW2: f64 = 0.223381589678011;

const T_DEG4: [TriPoint; 6] = [
    (TA1, TB1, TB1, TW1),
    (TB1, TA1, TB1, TW1),
    (TB1, TB1, TA1, TW1),
    (TA2, TB2, TB2, TW2),
    (TB2, TA2, TB2, TW2),
    (TB2, TB2, TA2, TW2),
];

const TC1: f64 = 0.797426985353087;
const TD1: f64 = 0.101286507323456;
const TV1: f64 = 0.125939180544827;
const TC2: f64 = 0.059715871789770;
const TD2: f64 = 0.470142064105115;
const TV2: f64 = 0.132394152788506;

const T_DEG5: [TriPoint; 7] = [
    (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225),
    (TC1, TD1, TD1, TV1),
    (TD1, TC1, TD1, TV1),
    (TD1, TD1, TC1, TV1),
    (TC2, TD2, TD2, TV2),
    (TD2, TC2, TD2, TV2),
    (TD2, TD2, TC2, TV2),
];

/// Triangle rule whose polynomial degree covers the requested order.
pub fn triangle_rule(order: usize) -> &'static [TriPoint] {
    match order {
        0 | 1 => &T_DEG1,
        2 => &T_DEG2,
        3 | 4 => &T_DEG4,
        _ => &T_DEG5,
    }
}

// Gauss 7 / Kronrod 15 pair on [-1, 1]; nodes sorted by |x| descending.
const K15_NODES: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let mut kron = 0.0;
    let mut gauss7 = 0.0;
    for (i, (&x, &wk)) in K15_NODES.iter().zip(K15_WEIGHTS.iter()).enumerate() {
        let (fp, fm) = if x == 0.0 {
            let v = f(c);
            (v, 0.0)
        } else {
            (f(c + h * x), f(c - h * x))
        };
        let s = fp + fm;
        kron += wk * s;
        // odd indices of the sorted Kronrod nodes are the Gauss-7 nodes
        if i % 2 == 1 {
            gauss7 += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, (kron - gauss7).abs() * h)
}

/// Adaptive Gauss-Kronrod integration of `f` over [a, b] to absolute
/// tolerance `tol`, splitting at most `max_depth` times (40 by default at
/// call sites). A global panel budget keeps integrands whose error estimate
/// plateaus (e.g. ones with their own iteration noise) from splitting
/// forever; exhausting it surfaces as an accuracy error.
pub fn integrate_adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const PANEL_BUDGET: usize = 65_536;
    fn recurse(
        f: &mut impl FnMut(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
        err_acc: &mut f64,
        panels: &mut usize,
    ) -> f64 {
        let (v, e) = gk15(f, a, b);
        *panels += 1;
        if e <= tol || depth == 0 || *panels > PANEL_BUDGET {
            *err_acc += e;
            return v;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth - 1, err_acc, panels)
            + recurse(f, m, b, 0.5 * tol, depth - 1, err_acc, panels)
    }
    let mut err = 0.0;
    let mut panels = 0usize;
    let v = recurse(&mut f, a, b, tol, max_depth, &mut err, &mut panels);
    if err > tol * 4.0 + 1e-300 {
        return Err(Error::QuadratureAccuracy { target: tol, achieved: err });
    }
    Ok(v)
}

/// Invert a continuous increasing function: find t >= 0 with f(t) = target.
///
/// Brackets by doubling/halving from 1, then bisects (with a Newton step when
/// a derivative is supplied, always kept inside the bracket) to relative
/// tolerance `rel_tol` on t. Caps at `max_iter` iterations.
pub fn invert_increasing(
    f: impl Fn(f64) -> f64,
    deriv: Option<&dyn Fn(f64) -> f64>,
    target: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    if target < 0.0 {
        return Err(Error::Domain { what: "inverse of an increasing map needs a nonnegative target", value: target });
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut iters = 0usize;
    while f(hi) < target {
        lo = hi;
        hi *= 2.0;
        iters += 1;
        if iters > max_iter || !hi.is_finite() {
            return Err(Error::RootFind { what: "bracketing an increasing map", iterations: iters, residual: f64::INFINITY });
        }
    }
    if lo == 0.0 {
        // shrink the lower edge toward the root to tighten the bracket
        let mut probe = hi * 0.5;
        while probe > 1e-300 && f(probe) > target {
            hi = probe;
            probe *= 0.5;
            iters += 1;
            if iters > max_iter {
                break;
            }
        }
        lo = probe.max(0.0);
    }
    let mut t = 0.5 * (lo + hi);
    while iters < max_iter {
        iters += 1;
        let val = f(t);
        if val > target {
            hi = t;
        } else {
            lo = t;
        }
        let mut next = 0.5 * (lo + hi);
        if let Some(df) = deriv {
            let d = df(t);
            if d > 0.0 {
                let cand = t - (val - target) / d;
                if cand > lo && cand < hi {
                    next = cand;
                }
            }
        }
        if (hi - lo) <= rel_tol * hi.max(1e-300) {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::RootFind { what: "increasing-map inversion", iterations: iters, residual: hi - lo })
}
