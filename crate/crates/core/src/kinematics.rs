//! Dispersion relations, velocity maps, the second-order kinetic remainder,
//! and interaction/spreading time-scale diagnostics.

use crate::error::HescError;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionKind {
    /// Nonrelativistic: `H0(p) = p^2 / 2m`.
    NonRelativistic,
    /// Relativistic (Klein-Gordon): `H0(p) = sqrt(p^2 + m^2)`, c = 1.
    Relativistic,
}

/// Kinetic-energy law with its mass parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub kind: DispersionKind,
    pub mass: f64,
}

impl Dispersion {
    pub fn nonrelativistic(mass: f64) -> Self {
        Self {
            kind: DispersionKind::NonRelativistic,
            mass,
        }
    }

    pub fn relativistic(mass: f64) -> Self {
        Self {
            kind: DispersionKind::Relativistic,
            mass,
        }
    }

    /// Kinetic energy `H0(p)`.
    pub fn h0(&self, p: [f64; 2]) -> f64 {
        let p2 = p[0] * p[0] + p[1] * p[1];
        match self.kind {
            DispersionKind::NonRelativistic => p2 / (2.0 * self.mass),
            DispersionKind::Relativistic => (p2 + self.mass * self.mass).sqrt(),
        }
    }

    /// Group velocity `v(p) = grad H0(p)`.
    pub fn velocity(&self, p: [f64; 2]) -> [f64; 2] {
        match self.kind {
            DispersionKind::NonRelativistic => [p[0] / self.mass, p[1] / self.mass],
            DispersionKind::Relativistic => {
                let e = self.h0(p);
                [p[0] / e, p[1] / e]
            }
        }
    }

    /// Speed `|v(p)|`. Strictly below 1 for all finite relativistic momenta.
    pub fn speed(&self, p: [f64; 2]) -> f64 {
        let v = self.velocity(p);
        (v[0] * v[0] + v[1] * v[1]).sqrt()
    }
}

/// Boost parameters of a packet family: average momentum, direction, speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostSpec {
    pub p_bar: [f64; 2],
    /// Unit direction `p_bar / |p_bar|`.
    pub omega: [f64; 2],
    /// Average speed `v(p_bar)`.
    pub speed: f64,
}

impl BoostSpec {
    pub fn new(p_bar: [f64; 2], disp: &Dispersion) -> Result<Self> {
        let mag = (p_bar[0] * p_bar[0] + p_bar[1] * p_bar[1]).sqrt();
        if mag == 0.0 {
            return Err(HescError::ZeroVelocity);
        }
        Ok(Self {
            p_bar,
            omega: [p_bar[0] / mag, p_bar[1] / mag],
            speed: disp.speed(p_bar),
        })
    }

    pub fn magnitude(&self) -> f64 {
        (self.p_bar[0] * self.p_bar[0] + self.p_bar[1] * self.p_bar[1]).sqrt()
    }
}

/// Second-order remainder of the kinetic-energy expansion around `p_bar`:
/// `H2(p_bar, p) = H0(p_bar + p) - H0(p_bar) - grad H0(p_bar) . p`.
///
/// Nonrelativistic: identically `p^2/2m`, independent of `p_bar`.
pub fn h2_remainder(disp: &Dispersion, p_bar: [f64; 2], p: [f64; 2]) -> f64 {
    let v = disp.velocity(p_bar);
    disp.h0([p_bar[0] + p[0], p_bar[1] + p[1]]) - disp.h0(p_bar) - (v[0] * p[0] + v[1] * p[1])
}

/// Interaction-time and spreading diagnostics for a boosted packet family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimescaleReport {
    /// Interaction time `R / v(p_bar)`.
    pub t_interaction: f64,
    /// `max |H2(p_bar, p)| / v(p_bar)` over `|p| <= support_radius`;
    /// the interaction/spreading time-scale ratio. Decays like `1/|p_bar|`.
    pub ratio_bound: f64,
    /// Potential radius used for the interaction time.
    pub radius: f64,
}

/// Maximize `|H2|/v(p_bar)` over the momentum-support disk.
///
/// Samples a polar raster; the maximizer sits on the boundary circle for
/// both dispersion kinds, but the interior is scanned as well.
pub fn timescale_ratio(
    disp: &Dispersion,
    p_bar: [f64; 2],
    support_radius: f64,
    potential_radius: f64,
) -> Result<TimescaleReport> {
    let v_bar = disp.speed(p_bar);
    if v_bar <= 0.0 {
        return Err(HescError::ZeroVelocity);
    }
    let n_angle = 256;
    let n_radius = 64;
    let mut max_h2 = 0.0_f64;
    for ia in 0..n_angle {
        let theta = 2.0 * std::f64::consts::PI * ia as f64 / n_angle as f64;
        let (s, c) = theta.sin_cos();
        for ir in 1..=n_radius {
            let rho = support_radius * ir as f64 / n_radius as f64;
            let p = [rho * c, rho * s];
            max_h2 = max_h2.max(h2_remainder(disp, p_bar, p).abs());
        }
    }
    Ok(TimescaleReport {
        t_interaction: potential_radius / v_bar,
        ratio_bound: max_h2 / v_bar,
        radius: potential_radius,
    })
}
