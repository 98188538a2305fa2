//! Grid, Fourier transform, packet construction, and observable tests.

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use hesc_core::grid::{
    energy_projection, fourier_transform, inner_product, make_packet, momentum_support_ratio,
    probability_mass, Envelope, Grid2D, PacketSpec, Region, Repr, WavePacket,
};
use hesc_core::fft::Direction;
use hesc_core::kinematics::Dispersion;
use hesc_core::HescError;

fn l2_diff(a: &WavePacket, b: &WavePacket) -> f64 {
    let b = b.to_repr(a.repr);
    let w = a.weight();
    (a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        * w)
        .sqrt()
}

#[test]
fn grid_spacing_duality() {
    let g = Grid2D::new(128, 25.0).unwrap();
    assert_abs_diff_eq!(g.dx() * g.dp() * 128.0, 2.0 * std::f64::consts::PI, epsilon = 1e-14);
    assert_abs_diff_eq!(g.x(0), -12.5, epsilon = 1e-14);
    assert_abs_diff_eq!(g.p(0), 0.0, epsilon = 1e-14);
    // FFT ordering: second half of the axis carries negative momenta.
    assert!(g.p(127) < 0.0);
    assert_abs_diff_eq!(g.p(64), -64.0 * g.dp(), epsilon = 1e-12);
}

#[test]
fn grid_rejects_bad_parameters() {
    assert!(Grid2D::new(96, 10.0).is_err());
    assert!(Grid2D::new(0, 10.0).is_err());
    assert!(Grid2D::new(64, -1.0).is_err());
    assert!(Grid2D::new(64, f64::NAN).is_err());
}

/// Self-dual Gaussian: momentum envelope exp(-|p|^2/2) transforms to the
/// position profile pi^{-1/2} exp(-|x|^2/2) under the unitary convention.
#[test]
fn gaussian_is_self_dual() {
    let grid = Grid2D::new(128, 30.0).unwrap();
    let spec = PacketSpec::envelope_only(Envelope::Gaussian { sigma: 1.0 });
    let packet = make_packet(grid, &spec).unwrap();
    let norm = std::f64::consts::PI.sqrt().recip();
    for idx in 0..grid.len() {
        let x = grid.position(idx);
        let expect = norm * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp();
        let got = packet.samples[idx];
        assert!(
            (got.re - expect).abs() < 1e-8 && got.im.abs() < 1e-8,
            "at {x:?}: got {got}, expected {expect}"
        );
    }
}

#[test]
fn packet_center_shifts_position_density() {
    let grid = Grid2D::new(128, 30.0).unwrap();
    let spec = PacketSpec {
        envelope: Envelope::Gaussian { sigma: 1.0 },
        center: [3.0, -2.0],
        boost: [0.0, 0.0],
    };
    let packet = make_packet(grid, &spec).unwrap();
    let (imax, _) = packet
        .samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .unwrap();
    let peak = grid.position(imax);
    assert!((peak[0] - 3.0).abs() <= grid.dx() && (peak[1] + 2.0).abs() <= grid.dx());
}

#[test]
fn nyquist_gate_rejects_oversized_boost() {
    let grid = Grid2D::new(64, 30.0).unwrap();
    let spec = PacketSpec {
        envelope: Envelope::Gaussian { sigma: 1.0 },
        center: [0.0, 0.0],
        boost: [10.0, 0.0],
    };
    match make_packet(grid, &spec) {
        Err(HescError::NyquistViolation { required, available }) => {
            assert!(required > available);
        }
        other => panic!("expected NyquistViolation, got {other:?}"),
    }
}

#[test]
fn bump_envelope_support_is_exact() {
    let e = Envelope::Bump { radius: 2.0 };
    assert_eq!(e.amplitude([2.0, 0.0]), 0.0);
    assert_eq!(e.amplitude([0.0, 2.1]), 0.0);
    assert!(e.amplitude([1.0, 0.5]) > 0.0);
    assert_eq!(e.effective_radius(), 2.0);
}

#[test]
fn support_ratio_bump_example() {
    // Bump radius 1 boosted to |pbar| = 10: slowest support momentum has
    // magnitude ~9, so the NR velocity ratio is ~0.9 and passes the gate.
    let grid = Grid2D::new(128, 30.0).unwrap();
    let packet = make_packet(grid, &PacketSpec::envelope_only(Envelope::Bump { radius: 1.0 }))
        .unwrap();
    let disp = Dispersion::nonrelativistic(1.0);
    let sr = momentum_support_ratio(&packet, &disp, [10.0, 0.0]).unwrap();
    assert!((sr.ratio - 0.9).abs() < 0.05, "ratio {}", sr.ratio);
    assert!(sr.pass);
}

#[test]
fn support_ratio_fails_at_low_boost() {
    let grid = Grid2D::new(128, 30.0).unwrap();
    let packet = make_packet(grid, &PacketSpec::envelope_only(Envelope::Bump { radius: 1.0 }))
        .unwrap();
    let disp = Dispersion::nonrelativistic(1.0);
    let sr = momentum_support_ratio(&packet, &disp, [2.0, 0.0]).unwrap();
    assert!(!sr.pass, "ratio {} should fail the 2/3 gate", sr.ratio);
    assert!(momentum_support_ratio(&packet, &disp, [0.0, 0.0]).is_err());
}

#[test]
fn probability_mass_partitions() {
    let grid = Grid2D::new(128, 30.0).unwrap();
    let packet = make_packet(
        grid,
        &PacketSpec {
            envelope: Envelope::Gaussian { sigma: 0.8 },
            center: [1.0, 0.5],
            boost: [1.0, -1.0],
        },
    )
    .unwrap();
    let ball = Region::Ball {
        center: [1.0, 0.5],
        radius: 2.0,
    };
    let anti = Region::ComplementBall {
        center: [1.0, 0.5],
        radius: 2.0,
    };
    let inside = probability_mass(&packet, &ball, Repr::Position);
    let outside = probability_mass(&packet, &anti, Repr::Position);
    assert_abs_diff_eq!(inside + outside, 1.0, epsilon = 1e-12);
    assert!(inside > 0.5);
}

#[test]
fn energy_projection_algebra() {
    let grid = Grid2D::new(64, 20.0).unwrap();
    let disp = Dispersion::nonrelativistic(1.0);
    let packet = make_packet(
        grid,
        &PacketSpec {
            envelope: Envelope::Gaussian { sigma: 1.0 },
            center: [0.0, 0.0],
            boost: [2.0, 1.0],
        },
    )
    .unwrap();
    let e = 2.0;
    let high = energy_projection(&packet, &disp, e);
    // Idempotent.
    let twice = energy_projection(&high, &disp, e);
    assert!(l2_diff(&high, &twice) < 1e-12);
    // Complement projection reassembles the identity.
    let mut low = packet.to_repr(Repr::Momentum);
    let high_m = high.to_repr(Repr::Momentum);
    for (a, b) in low.samples.iter_mut().zip(&high_m.samples) {
        *a -= b;
    }
    for (idx, a) in low.samples.iter().enumerate() {
        if disp.h0(grid.momentum(idx)) >= e {
            assert!(a.norm() < 1e-12);
        }
    }
    // Pythagoras for the orthogonal split.
    let low_norm2 = low.norm().powi(2);
    let high_norm2 = high.norm().powi(2);
    assert_abs_diff_eq!(low_norm2 + high_norm2, 1.0, epsilon = 1e-10);
}

#[test]
fn inner_product_rejects_mismatched_grids() {
    let a = make_packet(
        Grid2D::new(64, 20.0).unwrap(),
        &PacketSpec::envelope_only(Envelope::Gaussian { sigma: 1.0 }),
    )
    .unwrap();
    let b = make_packet(
        Grid2D::new(64, 25.0).unwrap(),
        &PacketSpec::envelope_only(Envelope::Gaussian { sigma: 1.0 }),
    )
    .unwrap();
    assert!(matches!(
        inner_product(&a, &b),
        Err(HescError::GridMismatch(_))
    ));
}

fn arb_spec() -> impl Strategy<Value = PacketSpec> {
    (
        prop_oneof![
            (0.4f64..1.0).prop_map(|sigma| Envelope::Gaussian { sigma }),
            (0.5f64..2.5).prop_map(|radius| Envelope::Bump { radius }),
        ],
        -4.0f64..4.0,
        -4.0f64..4.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
    )
        .prop_map(|(envelope, cx, cy, bx, by)| PacketSpec {
            envelope,
            center: [cx, cy],
            boost: [bx, by],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Forward then inverse transform is the identity to near machine
    /// precision, and both directions preserve the L2 norm (unitarity).
    #[test]
    fn fourier_round_trip_and_parseval(spec in arb_spec()) {
        let grid = Grid2D::new(64, 16.0).unwrap();
        let packet = make_packet(grid, &spec).unwrap();
        let mom = fourier_transform(&packet, Direction::Forward);
        prop_assert!((mom.norm() - packet.norm()).abs() < 1e-11);
        let back = fourier_transform(&mom, Direction::Inverse);
        prop_assert!(l2_diff(&packet, &back) < 1e-11);
    }

    /// The inner product is representation-independent.
    #[test]
    fn inner_product_repr_invariant(sa in arb_spec(), sb in arb_spec()) {
        let grid = Grid2D::new(64, 16.0).unwrap();
        let a = make_packet(grid, &sa).unwrap();
        let b = make_packet(grid, &sb).unwrap();
        let pos = inner_product(&a, &b).unwrap();
        let mom = inner_product(&a.to_repr(Repr::Momentum), &b.to_repr(Repr::Momentum)).unwrap();
        prop_assert!((pos - mom).norm() < 1e-11);
    }

    /// Norm of a constructed packet is 1 in both representations.
    #[test]
    fn packets_are_normalized(spec in arb_spec()) {
        let grid = Grid2D::new(64, 16.0).unwrap();
        let packet = make_packet(grid, &spec).unwrap();
        prop_assert!((packet.norm() - 1.0).abs() < 1e-12);
        prop_assert!((packet.to_repr(Repr::Momentum).norm() - 1.0).abs() < 1e-11);
    }

    /// Boosting the envelope leaves the position density unchanged.
    #[test]
    fn boost_preserves_position_density(bx in -2.0f64..2.0, by in -2.0f64..2.0) {
        let grid = Grid2D::new(64, 16.0).unwrap();
        let plain = make_packet(
            grid,
            &PacketSpec::envelope_only(Envelope::Gaussian { sigma: 1.0 }),
        ).unwrap();
        let boosted = make_packet(
            grid,
            &PacketSpec {
                envelope: Envelope::Gaussian { sigma: 1.0 },
                center: [0.0, 0.0],
                boost: [bx, by],
            },
        ).unwrap();
        for (a, b) in plain.samples.iter().zip(&boosted.samples) {
            prop_assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-10);
        }
    }
}

#[test]
fn parseval_against_direct_dft() {
    // Cross-check one transform against a brute-force O(n^4) DFT oracle.
    let grid = Grid2D::new(16, 8.0).unwrap();
    let spec = PacketSpec {
        envelope: Envelope::Gaussian { sigma: 0.8 },
        center: [0.5, -0.25],
        boost: [0.5, 0.0],
    };
    let packet = make_packet(grid, &spec).unwrap();
    let mom = packet.to_repr(Repr::Momentum);
    let scale = grid.dx() * grid.dx() / (2.0 * std::f64::consts::PI);
    for k_idx in 0..grid.len() {
        let p = grid.momentum(k_idx);
        let mut acc = Complex64::new(0.0, 0.0);
        for j_idx in 0..grid.len() {
            let x = grid.position(j_idx);
            acc += packet.samples[j_idx]
                * Complex64::from_polar(1.0, -(p[0] * x[0] + p[1] * x[1]));
        }
        let expect = acc * scale;
        assert!(
            (mom.samples[k_idx] - expect).norm() < 1e-10,
            "momentum sample {k_idx} mismatch: {} vs {}",
            mom.samples[k_idx],
            expect
        );
    }
}
