//! Periodic 2D computational grid, wave packets in dual position/momentum
//! representations, and elementary observables.

use num_complex::Complex64;

use crate::error::HescError;
use crate::exec;
use crate::fft::{self, Direction};
use crate::kinematics::Dispersion;
use crate::Result;

/// Square periodic grid with `n` points per axis over a box of side `length`.
///
/// Position samples are `x_j = -L/2 + j*dx`, momentum samples `p_k = dp*s(k)`
/// in FFT ordering mapped to signed values. `dx * dp = 2*pi/n` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    n: usize,
    length: f64,
}

impl Grid2D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(HescError::ConfigError(format!(
                "grid n must be a power of two, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(HescError::ConfigError(format!(
                "grid length must be positive and finite, got {length}"
            )));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Largest representable momentum magnitude per axis (Nyquist).
    pub fn p_nyquist(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    /// Position sample along one axis.
    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    /// Signed momentum sample along one axis (FFT ordering).
    pub fn p(&self, k: usize) -> f64 {
        let s = if k < self.n / 2 {
            k as isize
        } else {
            k as isize - self.n as isize
        };
        s as f64 * self.dp()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index for axis indices `(i, j)` (first axis is x1).
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Position vector for a flat index.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        [self.x(idx / self.n), self.x(idx % self.n)]
    }

    /// Momentum vector for a flat index.
    pub fn momentum(&self, idx: usize) -> [f64; 2] {
        [self.p(idx / self.n), self.p(idx % self.n)]
    }
}

/// Which representation the stored samples are in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    Position,
    Momentum,
}

/// A complex field on the grid, tagged with its representation.
#[derive(Debug, Clone)]
pub struct WavePacket {
    pub grid: Grid2D,
    pub repr: Repr,
    pub samples: Vec<Complex64>,
}

impl WavePacket {
    pub fn new(grid: Grid2D, repr: Repr, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(HescError::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        Ok(Self { grid, repr, samples })
    }

    /// Quadrature weight of the current representation (`dx^2` or `dp^2`).
    pub fn weight(&self) -> f64 {
        match self.repr {
            Repr::Position => self.grid.dx() * self.grid.dx(),
            Repr::Momentum => self.grid.dp() * self.grid.dp(),
        }
    }

    /// Discrete L2 norm.
    pub fn norm(&self) -> f64 {
        let w = self.weight();
        (self.samples.iter().map(|a| a.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.samples {
                *a *= inv;
            }
        }
    }

    pub fn to_repr(&self, repr: Repr) -> WavePacket {
        if self.repr == repr {
            return self.clone();
        }
        fourier_transform(
            self,
            match repr {
                Repr::Momentum => Direction::Forward,
                Repr::Position => Direction::Inverse,
            },
        )
    }
}

/// Unitary Fourier transform between representations.
///
/// `Forward` maps position to momentum with the `(2*pi)^(-1) exp(-ipx)`
/// convention; `Inverse` is its exact adjoint. Applying the direction that
/// matches the current representation switches it; the round trip is the
/// identity to machine precision.
pub fn fourier_transform(packet: &WavePacket, direction: Direction) -> WavePacket {
    let expected = match direction {
        Direction::Forward => Repr::Position,
        Direction::Inverse => Repr::Momentum,
    };
    debug_assert_eq!(packet.repr, expected, "transform direction vs representation");
    let mut samples = packet.samples.clone();
    fft::transform_2d(&mut samples, packet.grid.n(), packet.grid.length(), direction);
    WavePacket {
        grid: packet.grid,
        repr: match direction {
            Direction::Forward => Repr::Momentum,
            Direction::Inverse => Repr::Position,
        },
        samples,
    }
}

/// Momentum-space envelope of a packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// Momentum amplitude `exp(-|q|^2 / (2 sigma^2))`; position-space width
    /// `1/sigma`. Not compactly supported; the effective support radius is
    /// where the momentum density drops below 1e-12 of its peak.
    Gaussian { sigma: f64 },
    /// Smooth compactly supported bump `exp(-1/(1 - |q/radius|^2))` for
    /// `|q| < radius`, zero outside. Exact support radius.
    Bump { radius: f64 },
}

impl Envelope {
    /// Unnormalized momentum amplitude at offset `q` from the boost center.
    pub fn amplitude(&self, q: [f64; 2]) -> f64 {
        let q2 = q[0] * q[0] + q[1] * q[1];
        match self {
            Envelope::Gaussian { sigma } => (-q2 / (2.0 * sigma * sigma)).exp(),
            Envelope::Bump { radius } => {
                let u2 = q2 / (radius * radius);
                if u2 < 1.0 {
                    (-1.0 / (1.0 - u2)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Effective momentum support radius: mass outside it is below 1e-12.
    pub fn effective_radius(&self) -> f64 {
        match self {
            // Radial density exp(-q^2/sigma^2): mass outside r is exp(-r^2/sigma^2).
            Envelope::Gaussian { sigma } => sigma * (12.0 * std::f64::consts::LN_10).sqrt(),
            Envelope::Bump { radius } => *radius,
        }
    }
}

/// Recipe for a boosted, translated wave packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    pub envelope: Envelope,
    /// Position offset of the packet center.
    pub center: [f64; 2],
    /// Momentum shift applied to the envelope.
    pub boost: [f64; 2],
}

impl PacketSpec {
    pub fn envelope_only(envelope: Envelope) -> Self {
        Self {
            envelope,
            center: [0.0, 0.0],
            boost: [0.0, 0.0],
        }
    }
}

/// Nyquist margin required between the packet's momentum content and the
/// representable band.
pub const NYQUIST_MARGIN: f64 = 1.25;

/// Build a normalized packet from a spec.
///
/// Momentum samples are `env(p - boost) * exp(-i p . center)`, inverse
/// transformed to position and normalized. Fails with `NyquistViolation`
/// when `1.25 * (r_eff + |boost|)` exceeds the representable band.
pub fn make_packet(grid: Grid2D, spec: &PacketSpec) -> Result<WavePacket> {
    let boost_mag = (spec.boost[0] * spec.boost[0] + spec.boost[1] * spec.boost[1]).sqrt();
    let required = NYQUIST_MARGIN * (spec.envelope.effective_radius() + boost_mag);
    let available = grid.p_nyquist();
    if required > available {
        return Err(HescError::NyquistViolation { required, available });
    }
    let samples = exec::map_indexed(grid.len(), |idx| {
        let p = grid.momentum(idx);
        let q = [p[0] - spec.boost[0], p[1] - spec.boost[1]];
        let amp = spec.envelope.amplitude(q);
        let phase = -(p[0] * spec.center[0] + p[1] * spec.center[1]);
        amp * Complex64::new(0.0, phase).exp()
    });
    let mut packet = WavePacket::new(grid, Repr::Momentum, samples)?;
    packet.normalize();
    Ok(packet.to_repr(Repr::Position))
}

/// Region of configuration or momentum space for probability queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Ball { center: [f64; 2], radius: f64 },
    ComplementBall { center: [f64; 2], radius: f64 },
    /// Points with `v . normal >= offset` (normal need not be normalized).
    HalfPlane { normal: [f64; 2], offset: f64 },
}

impl Region {
    pub fn contains(&self, v: [f64; 2]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let dx = v[0] - center[0];
                let dy = v[1] - center[1];
                dx * dx + dy * dy < radius * radius
            }
            Region::ComplementBall { center, radius } => !Region::Ball {
                center: *center,
                radius: *radius,
            }
            .contains(v),
            Region::HalfPlane { normal, offset } => v[0] * normal[0] + v[1] * normal[1] >= *offset,
        }
    }
}

/// Riemann sum of the probability density over a region, in the chosen
/// representation.
pub fn probability_mass(packet: &WavePacket, region: &Region, space: Repr) -> f64 {
    let p = packet.to_repr(space);
    let w = p.weight();
    let grid = p.grid;
    p.samples
        .iter()
        .enumerate()
        .filter(|(idx, _)| {
            let v = match space {
                Repr::Position => grid.position(*idx),
                Repr::Momentum => grid.momentum(*idx),
            };
            region.contains(v)
        })
        .map(|(_, a)| a.norm_sqr() * w)
        .sum()
}

/// Relative momentum-density threshold defining the effective support.
pub const SUPPORT_DENSITY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportRatio {
    /// `inf { v(p)/v(pbar) }` over the boosted effective momentum support.
    pub ratio: f64,
    /// Whether the ratio clears the 2/3 gate.
    pub pass: bool,
}

/// Minimal-velocity gate for a boosted packet.
///
/// `packet` is the *envelope* (unboosted) state; the support examined is the
/// envelope's effective momentum support translated by `p_bar`. This lets
/// arbitrarily large boosts be gated without representing them on the grid.
pub fn momentum_support_ratio(
    packet: &WavePacket,
    disp: &Dispersion,
    p_bar: [f64; 2],
) -> Result<SupportRatio> {
    let v_bar = disp.speed(p_bar);
    if v_bar <= 0.0 {
        return Err(HescError::ZeroVelocity);
    }
    let p = packet.to_repr(Repr::Momentum);
    let max_density = p
        .samples
        .iter()
        .map(|a| a.norm_sqr())
        .fold(0.0_f64, f64::max);
    let threshold = SUPPORT_DENSITY_THRESHOLD * max_density;
    let mut min_v = f64::INFINITY;
    for (idx, a) in p.samples.iter().enumerate() {
        if a.norm_sqr() > threshold {
            let q = p.grid.momentum(idx);
            let v = disp.speed([p_bar[0] + q[0], p_bar[1] + q[1]]);
            min_v = min_v.min(v);
        }
    }
    let ratio = min_v / v_bar;
    Ok(SupportRatio {
        ratio,
        pass: ratio >= 2.0 / 3.0,
    })
}

/// Spectral projection onto kinetic energies `H0(p) >= energy`.
///
/// Momentum-space multiplication by a characteristic function: idempotent,
/// self-adjoint, commutes with every momentum-space multiplier.
pub fn energy_projection(packet: &WavePacket, disp: &Dispersion, energy: f64) -> WavePacket {
    let repr = packet.repr;
    let mut p = packet.to_repr(Repr::Momentum);
    for (idx, a) in p.samples.iter_mut().enumerate() {
        if disp.h0(p.grid.momentum(idx)) < energy {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    p.to_repr(repr)
}

/// Discrete L2 inner product, conjugate-linear in the first argument.
pub fn inner_product(a: &WavePacket, b: &WavePacket) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(HescError::GridMismatch(
            "inner product requires identical grids".into(),
        ));
    }
    let b = b.to_repr(a.repr);
    let w = a.weight();
    Ok(a.samples
        .iter()
        .zip(b.samples.iter())
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        * w)
}
