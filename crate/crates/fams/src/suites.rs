//! Randomized property suites: every structural inequality the library
//! relies on, bound to deterministic seeds and reported with explicit
//! slack. A failure entry carries the inputs and both sides, so a red
//! suite is directly actionable.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assembly::Assembler;
use crate::error::{Error, Result};
use crate::exponent::VariableExponent;
use crate::family::SampleGrid;
use crate::function::DiscreteFunction;
use crate::modular;

/// margin multiplier on pilot-estimated embedding constants; random cases
/// must stay under pilot * margin
const CONSTANT_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuiteId {
    ScalingBounds,
    NormEquiv,
    ModularNorm,
    Poincare,
    Monotonicity,
    Clarkson,
    GradientFd,
    Embedding,
    LebesgueModular,
}

impl SuiteId {
    pub fn all() -> [SuiteId; 9] {
        [
            SuiteId::ScalingBounds,
            SuiteId::NormEquiv,
            SuiteId::ModularNorm,
            SuiteId::Poincare,
            SuiteId::Monotonicity,
            SuiteId::Clarkson,
            SuiteId::GradientFd,
            SuiteId::Embedding,
            SuiteId::LebesgueModular,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            SuiteId::ScalingBounds => "scaling_bounds",
            SuiteId::NormEquiv => "norm_equiv",
            SuiteId::ModularNorm => "modular_norm",
            SuiteId::Poincare => "poincare",
            SuiteId::Monotonicity => "monotonicity",
            SuiteId::Clarkson => "clarkson",
            SuiteId::GradientFd => "gradient_fd",
            SuiteId::Embedding => "embedding",
            SuiteId::LebesgueModular => "lebesgue_modular",
        }
    }

    pub fn parse(name: &str) -> Result<SuiteId> {
        SuiteId::all()
            .into_iter()
            .find(|id| id.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = SuiteId::all().iter().map(|i| i.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown suite '{name}'; known suites: {}",
                    known.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone)]
pub struct SuiteFailure {
    pub case: usize,
    /// inputs that produced the violation, rendered for the report
    pub inputs: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub cases: usize,
    pub failures: Vec<SuiteFailure>,
    pub wall_ms: f64,
    /// named diagnostics (estimated constants, worst margins)
    pub stats: Vec<(String, f64)>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(case as u64))
}

fn random_point(rng: &mut ChaCha8Rng, bounds: [[f64; 2]; 2], dim: usize) -> [f64; 2] {
    let x = rng.gen_range(bounds[0][0]..=bounds[0][1]);
    let y = if dim == 1 { 0.0 } else { rng.gen_range(bounds[1][0]..=bounds[1][1]) };
    [x, y]
}

/// Random function at a scale cycling over several decades so both norm
/// branches and every summation regime get exercised.
fn random_at_scale(asm: &Assembler, rng: &mut ChaCha8Rng, case: usize) -> DiscreteFunction {
    let mesh = &asm.setup().mesh;
    let u = DiscreteFunction::random(mesh, rng.gen());
    let exp = (case % 5) as i32 - 2;
    u.scaled(10f64.powi(exp))
}

fn suite_scaling_bounds(asm: &Assembler, seed: u64, cases: usize) -> Vec<Option<SuiteFailure>> {
    let setup = asm.setup();
    let bounds = setup.mesh.bounds();
    let dim = setup.mesh.dim;
    let nd = setup.directions.len();
    (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = case_rng(seed, case);
            let fam = &setup.directions[case % nd].family;
            let x = random_point(&mut rng, bounds, dim);
            let y = random_point(&mut rng, bounds, dim);
            let t = 10f64.powf(rng.gen_range(-4.0..4.0));
            let mut sigma = 10f64.powf(rng.gen_range(-3.0..3.0));
            if (sigma - 1.0).abs() < 1e-3 {
                sigma *= 2.0;
            }
            match fam.scaling_bounds(x, y, t, sigma) {
                Ok(sb) if sb.contains(1e-9) => None,
                Ok(sb) => Some(SuiteFailure {
                    case,
                    inputs: format!("x={x:?} y={y:?} t={t:.6e} sigma={sigma:.6e}"),
                    lhs: sb.lower,
                    rhs: sb.upper,
                    slack: 1e-9,
                }),
                Err(e) => Some(SuiteFailure {
                    case,
                    inputs: format!("x={x:?} y={y:?} t={t:.6e} sigma={sigma:.6e}: {e}"),
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    slack: 1e-9,
                }),
            }
        })
        .collect()
}

fn suite_norm_equiv(asm: &Assembler, seed: u64, cases: usize) -> Result<Vec<Option<SuiteFailure>>> {
    let nd = asm.setup().directions.len() as f64;
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let u = random_at_scale(asm, &mut rng, case);
        let n = asm.norms(&u)?;
        let slack = 1e-9 * n.joint.max(1.0);
        let chain = [
            ("max <= joint", n.max_direction, n.joint),
            ("joint <= sum", n.joint, n.sum_directions),
            ("sum <= count*max", n.sum_directions, nd * n.max_direction),
        ];
        let bad = chain.iter().find(|(_, lhs, rhs)| *lhs > *rhs + slack);
        out.push(bad.map(|(what, lhs, rhs)| SuiteFailure {
            case,
            inputs: format!("{what}; norms {n:?}"),
            lhs: *lhs,
            rhs: *rhs,
            slack,
        }));
    }
    Ok(out)
}

fn suite_modular_norm(asm: &Assembler, seed: u64, cases: usize) -> Result<Vec<Option<SuiteFailure>>> {
    let lo = asm.setup().phi_minus_min();
    let hi = asm.setup().phi_plus_max();
    let slack = 1e-7;
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let u0 = DiscreteFunction::random(&asm.setup().mesh, rng.gen());
        let joint0 = asm.norms(&u0)?.joint;
        if joint0 <= 0.0 {
            out.push(None);
            continue;
        }
        // rescale exactly onto a target gauge on either side of 1
        let target = if case % 2 == 0 {
            rng.gen_range(1.2..8.0)
        } else {
            rng.gen_range(0.15..0.85)
        };
        let u = u0.scaled(target / joint0);
        let psi = asm.psi(&u);
        let (lower, upper) = if target > 1.0 {
            (target.powf(lo), target.powf(hi))
        } else {
            (target.powf(hi), target.powf(lo))
        };
        let ok = psi >= lower * (1.0 - slack) && psi <= upper * (1.0 + slack);
        out.push((!ok).then(|| SuiteFailure {
            case,
            inputs: format!("gauge={target:.6} modular={psi:.6e}"),
            lhs: lower,
            rhs: upper,
            slack,
        }));
    }
    Ok(out)
}

/// Pilot sample: interior hats, low-frequency sines, the centered bump, and
/// a fixed batch of random draws.
fn pilot_candidates(asm: &Assembler, seed: u64) -> Vec<DiscreteFunction> {
    let mesh = &asm.setup().mesh;
    let mut cands: Vec<DiscreteFunction> = Vec::new();
    for &v in &mesh.free {
        let mut hat = DiscreteFunction::zero(mesh);
        hat.values[v] = 1.0;
        cands.push(hat);
    }
    let b = mesh.bounds();
    for k in 1..=3usize {
        let kf = k as f64;
        cands.push(DiscreteFunction::interpolate(mesh, |p| {
            let sx = (std::f64::consts::PI * kf * (p[0] - b[0][0]) / (b[0][1] - b[0][0])).sin();
            if mesh.dim == 1 {
                sx
            } else {
                sx * (std::f64::consts::PI * kf * (p[1] - b[1][0]) / (b[1][1] - b[1][0])).sin()
            }
        }));
    }
    cands.push(DiscreteFunction::tent(mesh));
    for i in 0..64u64 {
        cands.push(DiscreteFunction::random(mesh, seed.wrapping_add(0x9e37 + i)));
    }
    cands
}

fn suite_poincare(
    asm: &Assembler,
    seed: u64,
    cases: usize,
    stats: &mut Vec<(String, f64)>,
) -> Result<Vec<Option<SuiteFailure>>> {
    let nd = asm.setup().directions.len();
    // pilot constants per direction
    let mut pilot = vec![0.0f64; nd];
    for u in pilot_candidates(asm, seed) {
        if u.is_zero() {
            continue;
        }
        for (i, p) in pilot.iter_mut().enumerate() {
            let semi = asm.direction_seminorm(&u, i)?;
            if semi > 0.0 {
                *p = p.max(asm.diagonal_norm(&u, i)? / semi);
            }
        }
    }
    for (i, p) in pilot.iter().enumerate() {
        stats.push((format!("pilot_constant_{i}"), *p));
    }
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let u = random_at_scale(asm, &mut rng, case);
        let mut fail = None;
        for i in 0..nd {
            let semi = asm.direction_seminorm(&u, i)?;
            if semi <= 0.0 {
                continue;
            }
            let ratio = asm.diagonal_norm(&u, i)? / semi;
            if ratio > pilot[i] * CONSTANT_MARGIN {
                fail = Some(SuiteFailure {
                    case,
                    inputs: format!("direction {i}"),
                    lhs: ratio,
                    rhs: pilot[i] * CONSTANT_MARGIN,
                    slack: CONSTANT_MARGIN - 1.0,
                });
                break;
            }
        }
        out.push(fail);
    }
    Ok(out)
}

fn suite_monotonicity(asm: &Assembler, seed: u64, cases: usize) -> Vec<Option<SuiteFailure>> {
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let u = random_at_scale(asm, &mut rng, case);
        let v = random_at_scale(asm, &mut rng, case + 1);
        let gap = asm.monotonicity_gap(&u, &v);
        let slack = 1e-12 * gap.pairing.abs().max(1.0);
        let ok = gap.pairing >= -slack && gap.pairing >= gap.floor - slack;
        out.push((!ok).then(|| SuiteFailure {
            case,
            inputs: format!("pairing vs floor, seeds case {case}"),
            lhs: gap.pairing,
            rhs: gap.floor,
            slack,
        }));
    }
    out
}

fn suite_clarkson(asm: &Assembler, seed: u64, cases: usize) -> Result<Vec<Option<SuiteFailure>>> {
    // gate: the split inequality needs certified square-root convexity
    let mesh = &asm.setup().mesh;
    let grid = SampleGrid::default_on_box(mesh.bounds(), mesh.dim);
    for (i, d) in asm.setup().directions.iter().enumerate() {
        let report = d.family.certify_hypotheses(&grid);
        if !report.sqrt_convex {
            return Err(Error::Certification {
                what: format!(
                    "direction {i} is not square-root convex (worst second difference {:.3e}); the averaged split inequality does not apply",
                    report.sqrt_convexity_worst
                ),
                witness: None,
            });
        }
    }
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let u = random_at_scale(asm, &mut rng, case);
        let v = random_at_scale(asm, &mut rng, case + 3);
        let cp = asm.clarkson(&u, &v);
        let slack = 1e-12 * cp.mean.abs().max(1.0);
        let ok = cp.mean >= cp.split - slack;
        out.push((!ok).then(|| SuiteFailure {
            case,
            inputs: format!("mean of modulars vs split, case {case}"),
            lhs: cp.mean,
            rhs: cp.split,
            slack,
        }));
    }
    Ok(out)
}

fn suite_gradient_fd(
    asm: &Assembler,
    seed: u64,
    cases: usize,
    stats: &mut Vec<(String, f64)>,
) -> Vec<Option<SuiteFailure>> {
    let mesh = &asm.setup().mesh;
    let lambda = 1.0;
    let tol = 1e-5;
    let mut worst = 0.0f64;
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let u = DiscreteFunction::random(mesh, rng.gen());
        let v = DiscreteFunction::random(mesh, rng.gen());
        let g = asm.energy_gradient(&u, lambda);
        let pair: f64 = g.iter().zip(&v.values).map(|(&a, &b)| a * b).sum();
        let eps = 1e-6;
        let mut up = u.clone();
        up.axpy(eps, &v);
        let mut dn = u.clone();
        dn.axpy(-eps, &v);
        let fd = (asm.energy(&up, lambda) - asm.energy(&dn, lambda)) / (2.0 * eps);
        let rel = (pair - fd).abs() / fd.abs().max(1e-8);
        worst = worst.max(rel);
        out.push((rel >= tol).then(|| SuiteFailure {
            case,
            inputs: format!("directional derivative, case {case}"),
            lhs: pair,
            rhs: fd,
            slack: tol,
        }));
    }
    stats.push(("worst_relative_error".into(), worst));
    out
}

fn suite_embedding(
    asm: &Assembler,
    seed: u64,
    cases: usize,
    stats: &mut Vec<(String, f64)>,
) -> Result<Vec<Option<SuiteFailure>>> {
    let mesh = &asm.setup().mesh;
    let q_minus = asm.setup().source.q_minus();
    let q_plus = asm.setup().source.q_plus();
    let e_minus = VariableExponent::constant(q_minus, mesh)?;
    let e_plus = VariableExponent::constant(q_plus, mesh)?;
    let quad = asm.volume_quadrature();
    let ratios = |u: &DiscreteFunction| -> Result<Option<(f64, f64)>> {
        let joint = asm.norms(u)?.joint;
        if joint <= 0.0 {
            return Ok(None);
        }
        let nm = modular::lebesgue_norm(mesh, &e_minus, u, quad)?;
        let np = modular::lebesgue_norm(mesh, &e_plus, u, quad)?;
        Ok(Some((nm / joint, np / joint)))
    };
    let (mut pilot_minus, mut pilot_plus) = (0.0f64, 0.0f64);
    for u in pilot_candidates(asm, seed) {
        if let Some((rm, rp)) = ratios(&u)? {
            pilot_minus = pilot_minus.max(rm);
            pilot_plus = pilot_plus.max(rp);
        }
    }
    stats.push(("pilot_constant_low_exponent".into(), pilot_minus));
    stats.push(("pilot_constant_high_exponent".into(), pilot_plus));
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let u = random_at_scale(asm, &mut rng, case);
        let fail = match ratios(&u)? {
            None => None,
            Some((rm, rp)) => {
                if rm > pilot_minus * CONSTANT_MARGIN {
                    Some(SuiteFailure {
                        case,
                        inputs: "low-exponent ratio".into(),
                        lhs: rm,
                        rhs: pilot_minus * CONSTANT_MARGIN,
                        slack: CONSTANT_MARGIN - 1.0,
                    })
                } else if rp > pilot_plus * CONSTANT_MARGIN {
                    Some(SuiteFailure {
                        case,
                        inputs: "high-exponent ratio".into(),
                        lhs: rp,
                        rhs: pilot_plus * CONSTANT_MARGIN,
                        slack: CONSTANT_MARGIN - 1.0,
                    })
                } else {
                    None
                }
            }
        };
        out.push(fail);
    }
    Ok(out)
}

fn suite_lebesgue_modular(
    asm: &Assembler,
    seed: u64,
    cases: usize,
) -> Result<Vec<Option<SuiteFailure>>> {
    let mesh = &asm.setup().mesh;
    let q = &asm.setup().source;
    let quad = asm.volume_quadrature();
    let (lo, hi) = (q.q_minus(), q.q_plus());
    let slack = 1e-7;
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let u0 = DiscreteFunction::random(mesh, rng.gen());
        let norm0 = modular::lebesgue_norm(mesh, q, &u0, quad)?;
        if norm0 <= 0.0 {
            out.push(None);
            continue;
        }
        let target = if case % 2 == 0 {
            rng.gen_range(1.2..8.0)
        } else {
            rng.gen_range(0.15..0.85)
        };
        let u = u0.scaled(target / norm0);
        let rho = modular::lebesgue_modular(mesh, q, &u, quad);
        let (lower, upper) = if target > 1.0 {
            (target.powf(lo), target.powf(hi))
        } else {
            (target.powf(hi), target.powf(lo))
        };
        let ok = rho >= lower * (1.0 - slack) && rho <= upper * (1.0 + slack);
        out.push((!ok).then(|| SuiteFailure {
            case,
            inputs: format!("norm={target:.6} modular={rho:.6e}"),
            lhs: lower,
            rhs: upper,
            slack,
        }));
    }
    Ok(out)
}

pub fn run_suite(asm: &Assembler, id: SuiteId, seed: u64, cases: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut stats: Vec<(String, f64)> = Vec::new();
    let raw = match id {
        SuiteId::ScalingBounds => suite_scaling_bounds(asm, seed, cases),
        SuiteId::NormEquiv => suite_norm_equiv(asm, seed, cases)?,
        SuiteId::ModularNorm => suite_modular_norm(asm, seed, cases)?,
        SuiteId::Poincare => suite_poincare(asm, seed, cases, &mut stats)?,
        SuiteId::Monotonicity => suite_monotonicity(asm, seed, cases),
        SuiteId::Clarkson => suite_clarkson(asm, seed, cases)?,
        SuiteId::GradientFd => suite_gradient_fd(asm, seed, cases, &mut stats),
        SuiteId::Embedding => suite_embedding(asm, seed, cases, &mut stats)?,
        SuiteId::LebesgueModular => suite_lebesgue_modular(asm, seed, cases)?,
    };
    let failures: Vec<SuiteFailure> = raw.into_iter().flatten().collect();
    Ok(SuiteReport {
        suite: id.name(),
        cases,
        failures,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        stats,
    })
}

/// Run a named suite; the name must be one of the nine known ids.
pub fn run_suite_by_name(
    asm: &Assembler,
    name: &str,
    seed: u64,
    cases: usize,
) -> Result<SuiteReport> {
    run_suite(asm, SuiteId::parse(name)?, seed, cases)
}
