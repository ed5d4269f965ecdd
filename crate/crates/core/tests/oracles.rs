mod common;

use attocell_core::interference::{closed_form_moments, Truncation};
use attocell_core::lattice::exact_moments;
use attocell_core::specfun::{bessel_k, gamma};
use attocell_core::{LatticeSpec, ReceiverPos, SystemParams};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn quadrature_oracles_reproduce_identities() {
    assert!(rel(common::gamma_quad(0.5), std::f64::consts::PI.sqrt()) < 1e-12);
    assert!(rel(common::gamma_quad(5.0), 24.0) < 1e-12);
    let half = (std::f64::consts::PI / 2.0).sqrt() * (-1.0f64).exp();
    assert!(rel(common::bessel_k_quad(0.5, 1.0), half) < 1e-12);
}

#[test]
fn gamma_matches_quadrature() {
    for x in [0.3, 0.5, 0.9, 1.0, 1.5, 2.0, 2.5, 3.7, 5.0, 9.5, 15.0] {
        let got = gamma(x).unwrap();
        assert!(rel(got, common::gamma_quad(x)) < 1e-10, "x={x}");
    }
}

#[test]
fn bessel_k_matches_quadrature() {
    for nu in [0.0, 0.5, 1.0, 1.3, 2.0, 3.0, 5.5, 7.0] {
        for y in [0.05, 0.3, 1.0, 1.99, 2.0, 4.0, 10.0, 30.0] {
            let got = bessel_k(nu, y).unwrap();
            let want = common::bessel_k_quad(nu, y);
            assert!(rel(got, want) < 1e-10, "nu={nu} y={y}: {got} vs {want}");
        }
    }
}

#[test]
fn exact_sum_matches_brute_force() {
    let sp = SystemParams::default();
    for (h, k, x, y) in [
        (3.0, 1, 0.0, 0.0),
        (5.0, 4, 1.0, -0.5),
        (7.0, 11, -2.0, 5.5),
    ] {
        let spec = LatticeSpec::new(1.0, h, k).unwrap();
        let d = sp.derive(h).unwrap();
        let m = exact_moments(ReceiverPos::new(x, y), &spec, &d, 200).unwrap();
        let (s1, s2) = common::lattice_sums(x, y, h, f64::from(k), d.decay_exponent, 200);
        assert!(rel(m.mean, d.mean_prefactor * s1) < 1e-13);
        assert!(rel(m.variance, d.variance_prefactor * s2) < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_matches_brute_force(
        ratio in 1.0f64..8.0,
        k in 1u32..16,
        fx in -0.5f64..0.5,
        fy in -0.5f64..0.5,
    ) {
        let sp = SystemParams::default();
        let spec = LatticeSpec::new(1.0, ratio, k).unwrap();
        let d = sp.derive(ratio).unwrap();
        let a = spec.active_spacing();
        let pos = ReceiverPos::new(fx * a, fy * a);
        let cf = closed_form_moments(pos, &spec, &d, Truncation::Adaptive).unwrap();
        let (s1, s2) = common::lattice_sums(pos.x, pos.y, ratio, a, d.decay_exponent, 600);
        // terms outside the square are bounded by the integral of r^-4 outside radius 600
        let tail = 1.2 * std::f64::consts::PI / (a.powi(4) * 600f64.powi(2)) / s1;
        prop_assert!(rel(cf.mean, d.mean_prefactor * s1) < 1e-9 + tail);
        prop_assert!(rel(cf.variance, d.variance_prefactor * s2) < 1e-9);
    }
}
