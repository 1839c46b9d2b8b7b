//! Randomized structural invariants: kernel symmetry and monotonicity, the
//! two-sided scaling envelope, and absolute homogeneity of the gauges.

use fams::exponent::VariableExponent;
use fams::family::{MusielakFamily, PairExponent, Point};
use fams::function::DiscreteFunction;
use fams::mesh::{Mesh, VolumeQuadrature};
use fams::modular;
use proptest::prelude::*;
use std::sync::OnceLock;

const UNIT: [[f64; 2]; 2] = [[0.0, 1.0], [0.0, 1.0]];

fn family_from(kind: usize, p: f64, extra: f64) -> MusielakFamily {
    match kind {
        0 => MusielakFamily::constant_power(p).unwrap(),
        1 => MusielakFamily::log_perturbed(p, std::f64::consts::E + extra).unwrap(),
        _ => {
            // slope scaled so the exponent stays comfortably above 1 on the box
            let slope = 0.4 * (p - 1.0).min(1.0);
            MusielakFamily::variable_exponent(
                PairExponent::affine(p, [slope, -slope], UNIT, 2).unwrap(),
            )
            .unwrap()
        }
    }
}

fn point() -> impl Strategy<Value = Point> {
    [0.0..1.0f64, 0.0..1.0f64]
}

proptest! {
    #[test]
    fn phi_is_odd_and_monotone(
        kind in 0usize..3,
        p in 1.2f64..5.0,
        extra in 0.0f64..4.0,
        x in point(),
        y in point(),
        log_t in -3.0f64..3.0,
        factor in 1.0f64..100.0,
    ) {
        let family = family_from(kind, p, extra);
        let t = 10f64.powf(log_t);
        prop_assert_eq!(family.phi(x, y, -t), -family.phi(x, y, t));
        prop_assert_eq!(family.phi(x, y, 0.0), 0.0);
        let lo = family.phi(x, y, t);
        let hi = family.phi(x, y, t * factor);
        prop_assert!(lo <= hi, "phi({t}) = {lo} > phi({}) = {hi}", t * factor);
    }

    #[test]
    fn big_phi_is_even_and_midpoint_convex(
        kind in 0usize..3,
        p in 1.2f64..5.0,
        extra in 0.0f64..4.0,
        x in point(),
        y in point(),
        log_a in -3.0f64..3.0,
        log_b in -3.0f64..3.0,
    ) {
        let family = family_from(kind, p, extra);
        let (a, b) = (10f64.powf(log_a), 10f64.powf(log_b));
        prop_assert_eq!(family.big_phi(x, y, -a), family.big_phi(x, y, a));
        let mid = family.big_phi(x, y, 0.5 * (a + b));
        let chord = 0.5 * (family.big_phi(x, y, a) + family.big_phi(x, y, b));
        prop_assert!(
            mid <= chord * (1.0 + 1e-12),
            "midpoint {mid} above chord {chord} at a={a} b={b}"
        );
    }

    #[test]
    fn scaling_envelope_contains_value(
        kind in 0usize..3,
        p in 1.2f64..5.0,
        extra in 0.0f64..4.0,
        x in point(),
        y in point(),
        log_t in -4.0f64..4.0,
        log_sigma in -3.0f64..3.0,
    ) {
        prop_assume!(log_sigma.abs() > 1e-6);
        let family = family_from(kind, p, extra);
        let t = 10f64.powf(log_t);
        let sigma = 10f64.powf(log_sigma);
        let b = family.scaling_bounds(x, y, t, sigma).unwrap();
        prop_assert!(
            b.contains(1e-9),
            "envelope miss: {} <= {} <= {} failed at t={t} sigma={sigma}",
            b.lower, b.value, b.upper
        );
    }
}

fn grid() -> &'static (Mesh, VariableExponent, VolumeQuadrature) {
    static GRID: OnceLock<(Mesh, VariableExponent, VolumeQuadrature)> = OnceLock::new();
    GRID.get_or_init(|| {
        let mesh = Mesh::interval(0.0, 1.0, 16).unwrap();
        let q = VariableExponent::constant(2.5, &mesh).unwrap();
        let vol = mesh.volume_quadrature(3);
        (mesh, q, vol)
    })
}

proptest! {
    #[test]
    fn lebesgue_gauge_is_absolutely_homogeneous(
        seed in 0u64..1_000_000,
        log_c in -3.0f64..3.0,
        negate in proptest::bool::ANY,
    ) {
        let (mesh, q, vol) = grid();
        let u = DiscreteFunction::random(mesh, seed);
        let c = if negate { -10f64.powf(log_c) } else { 10f64.powf(log_c) };
        let base = modular::lebesgue_norm(mesh, q, &u, vol).unwrap();
        let scaled = modular::lebesgue_norm(mesh, q, &u.scaled(c), vol).unwrap();
        let expect = c.abs() * base;
        prop_assert!(
            (scaled - expect).abs() <= 1e-8 * expect.max(1e-300),
            "gauge broke homogeneity: {scaled} vs {expect}"
        );
    }

    #[test]
    fn gauge_scales_modular_to_one(
        seed in 0u64..1_000_000,
        log_c in -2.0f64..2.0,
    ) {
        let (mesh, q, vol) = grid();
        let u = DiscreteFunction::random(mesh, seed).scaled(10f64.powf(log_c));
        let lam = modular::lebesgue_norm(mesh, q, &u, vol).unwrap();
        prop_assert!(lam > 0.0);
        let rho = modular::lebesgue_modular(mesh, q, &u.scaled(1.0 / lam), vol);
        prop_assert!(rho <= 1.0, "modular above one at the gauge: {rho}");
        prop_assert!(rho >= 1.0 - 1e-6, "modular far below one at the gauge: {rho}");
    }
}
