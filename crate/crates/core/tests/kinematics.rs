//! Dispersion, boost, kinetic-remainder, and time-scale tests.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use hesc_core::kinematics::{
    h2_remainder, timescale_ratio, BoostSpec, Dispersion, DispersionKind,
};

#[test]
fn nonrelativistic_values() {
    let d = Dispersion::nonrelativistic(2.0);
    assert_abs_diff_eq!(d.h0([3.0, 4.0]), 6.25, epsilon = 1e-14);
    let v = d.velocity([3.0, 4.0]);
    assert_abs_diff_eq!(v[0], 1.5, epsilon = 1e-14);
    assert_abs_diff_eq!(v[1], 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(d.speed([3.0, 4.0]), 2.5, epsilon = 1e-14);
}

#[test]
fn relativistic_values() {
    let d = Dispersion::relativistic(5.0);
    assert_abs_diff_eq!(d.h0([3.0, 4.0]), 50f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(d.h0([0.0, 0.0]), 5.0, epsilon = 1e-14);
    // v = p / E.
    let v = d.velocity([3.0, 4.0]);
    assert_abs_diff_eq!(v[0], 3.0 / 50f64.sqrt(), epsilon = 1e-14);
    assert_abs_diff_eq!(v[1], 4.0 / 50f64.sqrt(), epsilon = 1e-14);
}

#[test]
fn boost_spec_basics() {
    let d = Dispersion::nonrelativistic(1.0);
    let b = BoostSpec::new([6.0, 8.0], &d).unwrap();
    assert_abs_diff_eq!(b.magnitude(), 10.0, epsilon = 1e-14);
    assert_abs_diff_eq!(b.omega[0], 0.6, epsilon = 1e-14);
    assert_abs_diff_eq!(b.speed, 10.0, epsilon = 1e-14);
    assert!(BoostSpec::new([0.0, 0.0], &d).is_err());
}

proptest! {
    /// Relativistic speed is strictly below the light speed c = 1.
    #[test]
    fn relativistic_speed_subluminal(
        px in -200.0f64..200.0,
        py in -200.0f64..200.0,
        m in 0.1f64..10.0,
    ) {
        let d = Dispersion::relativistic(m);
        prop_assert!(d.speed([px, py]) < 1.0);
    }

    /// Velocity is the gradient of H0: finite-difference check for both
    /// dispersion kinds at random momenta.
    #[test]
    fn velocity_is_gradient(
        px in -20.0f64..20.0,
        py in -20.0f64..20.0,
        m in 0.5f64..4.0,
        rel in proptest::bool::ANY,
    ) {
        let d = if rel {
            Dispersion::relativistic(m)
        } else {
            Dispersion::nonrelativistic(m)
        };
        let h = 1e-5;
        let v = d.velocity([px, py]);
        let fd0 = (d.h0([px + h, py]) - d.h0([px - h, py])) / (2.0 * h);
        let fd1 = (d.h0([px, py + h]) - d.h0([px, py - h])) / (2.0 * h);
        prop_assert!((v[0] - fd0).abs() < 1e-7);
        prop_assert!((v[1] - fd1).abs() < 1e-7);
    }

    /// The second-order remainder reproduces the expansion identity
    /// H0(pbar + p) = H0(pbar) + v(pbar).p + H2(pbar, p) exactly.
    #[test]
    fn expansion_identity(
        bx in -50.0f64..50.0,
        by in -50.0f64..50.0,
        px in -5.0f64..5.0,
        py in -5.0f64..5.0,
        rel in proptest::bool::ANY,
    ) {
        let d = if rel {
            Dispersion::relativistic(1.0)
        } else {
            Dispersion::nonrelativistic(1.0)
        };
        let v = d.velocity([bx, by]);
        let lhs = d.h0([bx + px, by + py]);
        let rhs = d.h0([bx, by]) + v[0] * px + v[1] * py + h2_remainder(&d, [bx, by], [px, py]);
        prop_assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    /// Nonrelativistic H2 is exactly p^2/2m, independent of the boost.
    #[test]
    fn nr_remainder_is_boost_free(
        bx in -100.0f64..100.0,
        by in -100.0f64..100.0,
        px in -5.0f64..5.0,
        py in -5.0f64..5.0,
        m in 0.5f64..4.0,
    ) {
        let d = Dispersion::nonrelativistic(m);
        let expect = (px * px + py * py) / (2.0 * m);
        prop_assert!((h2_remainder(&d, [bx, by], [px, py]) - expect).abs() < 1e-10);
    }

    /// Relativistic |H2| never exceeds the free-particle bound p^2/2
    /// (the remainder of a concave-in-|p| energy is smaller than the
    /// massless parabola remainder at m >= 1).
    #[test]
    fn rel_remainder_bounded(
        bx in -100.0f64..100.0,
        px in -5.0f64..5.0,
        py in -5.0f64..5.0,
    ) {
        let d = Dispersion::relativistic(1.0);
        let h2 = h2_remainder(&d, [bx, 0.0], [px, py]);
        prop_assert!(h2.abs() <= 0.5 * (px * px + py * py) + 1e-12);
    }
}

/// Brute-force oracle for the time-scale maximization: a much finer and
/// randomized sampling of the support disk must not beat the reported
/// maximum by more than a sliver.
#[test]
fn timescale_ratio_matches_brute_force() {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for disp in [Dispersion::nonrelativistic(1.0), Dispersion::relativistic(1.0)] {
        let p_bar = [24.0, 7.0];
        let support = 2.0;
        let report = timescale_ratio(&disp, p_bar, support, 3.0).unwrap();
        let v_bar = disp.speed(p_bar);
        let mut brute: f64 = 0.0;
        for _ in 0..200_000 {
            let r = support * rng.gen::<f64>().sqrt();
            let th = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            let p = [r * th.cos(), r * th.sin()];
            brute = brute.max(h2_remainder(&disp, p_bar, p).abs() / v_bar);
        }
        assert!(
            report.ratio_bound >= brute * 0.999,
            "{:?}: scan {} vs brute {}",
            disp.kind,
            report.ratio_bound,
            brute
        );
        assert!(report.ratio_bound <= brute * 1.01);
        assert_abs_diff_eq!(report.t_interaction, 3.0 / v_bar, epsilon = 1e-12);
    }
}

/// The interaction/spreading ratio decays like 1/|pbar|: doubling the boost
/// halves the nonrelativistic ratio exactly and shrinks the relativistic
/// one at least as fast.
#[test]
fn timescale_ratio_decays() {
    for kind in [DispersionKind::NonRelativistic, DispersionKind::Relativistic] {
        let disp = Dispersion { kind, mass: 1.0 };
        let r16 = timescale_ratio(&disp, [16.0, 0.0], 1.5, 2.0).unwrap();
        let r32 = timescale_ratio(&disp, [32.0, 0.0], 1.5, 2.0).unwrap();
        let r64 = timescale_ratio(&disp, [64.0, 0.0], 1.5, 2.0).unwrap();
        assert!(r32.ratio_bound <= 0.55 * r16.ratio_bound, "{kind:?}");
        assert!(r64.ratio_bound <= 0.55 * r32.ratio_bound, "{kind:?}");
    }
    // Nonrelativistic case is exactly r^2 / (2 |pbar|).
    let d = Dispersion::nonrelativistic(1.0);
    let r = timescale_ratio(&d, [32.0, 0.0], 1.5, 2.0).unwrap();
    assert_abs_diff_eq!(r.ratio_bound, 1.5 * 1.5 / 2.0 / 32.0, epsilon = 1e-10);
}
