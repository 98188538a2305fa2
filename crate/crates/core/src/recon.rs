//! Sinogram assembly, packet-smearing deconvolution, filtered
//! back-projection, and reconstruction error metrics.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::HescError;
use crate::exec;
use crate::potentials::{xray_oracle, ScalarPotential};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Oracle,
    Physics,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Oracle => write!(f, "oracle"),
            Provenance::Physics => write!(f, "physics"),
        }
    }
}

/// Sampled X-ray transform: `K` angles uniform on `[0, pi)` by `J` signed
/// perpendicular offsets uniform in `[-s_max, s_max]`.
#[derive(Debug, Clone)]
pub struct Sinogram {
    pub angles: Vec<f64>,
    pub offsets: Vec<f64>,
    /// Row-major `K x J` values `W(s_j, omega_k)`.
    pub values: Vec<f64>,
    /// Cells inpainted because the extraction mask was empty there.
    pub flags: Vec<bool>,
    pub provenance: Provenance,
}

impl Sinogram {
    pub fn new(k: usize, j: usize, s_max: f64, provenance: Provenance) -> Self {
        let angles = (0..k)
            .map(|i| std::f64::consts::PI * i as f64 / k as f64)
            .collect();
        let offsets = (0..j)
            .map(|i| -s_max + 2.0 * s_max * i as f64 / (j - 1) as f64)
            .collect();
        Self {
            angles,
            offsets,
            values: vec![0.0; k * j],
            flags: vec![false; k * j],
            provenance,
        }
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_offsets(&self) -> usize {
        self.offsets.len()
    }

    pub fn s_max(&self) -> f64 {
        self.offsets.last().copied().unwrap_or(0.0)
    }

    pub fn offset_step(&self) -> f64 {
        if self.offsets.len() < 2 {
            0.0
        } else {
            self.offsets[1] - self.offsets[0]
        }
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let j = self.n_offsets();
        &self.values[k * j..(k + 1) * j]
    }

    pub fn omega(&self, k: usize) -> [f64; 2] {
        let (s, c) = self.angles[k].sin_cos();
        [c, s]
    }

    /// Perpendicular direction: lines for angle `k` are
    /// `{ s * omega_perp + r * omega }`.
    pub fn omega_perp(&self, k: usize) -> [f64; 2] {
        let (s, c) = self.angles[k].sin_cos();
        [-s, c]
    }

    /// Row quadrature sums (the Fubini mass identity makes them equal
    /// across rows for short-range potentials).
    pub fn row_sums(&self) -> Vec<f64> {
        let ds = self.offset_step();
        (0..self.n_angles())
            .map(|k| self.row(k).iter().sum::<f64>() * ds)
            .collect()
    }
}

/// Oracle sinogram: direct line-integral quadrature of the potential.
pub fn assemble_sinogram_oracle(
    potential: &ScalarPotential,
    k: usize,
    j: usize,
    s_max: f64,
) -> Result<Sinogram> {
    let short = potential.short_part();
    xray_oracle(&short, [1.0, 0.0], [0.0, 0.0])?;
    let mut sino = Sinogram::new(k, j, s_max, Provenance::Oracle);
    let values = exec::map_indexed(k * j, |idx| {
        let (ki, ji) = (idx / j, idx % j);
        let omega = sino.omega(ki);
        let perp = sino.omega_perp(ki);
        let s = sino.offsets[ji];
        xray_oracle(&short, omega, [s * perp[0], s * perp[1]]).unwrap_or(f64::NAN)
    });
    sino.values = values;
    Ok(sino)
}

/// One physics-path measurement: an extracted `W` field with its mask for
/// a single angle.
pub struct AngleField<'a> {
    pub omega: [f64; 2],
    pub w_field: &'a [f64],
    pub mask: &'a [bool],
    /// Position of grid point `idx`.
    pub position: &'a dyn Fn(usize) -> [f64; 2],
}

/// Physics-path sinogram: mask-weighted average of each extracted field over
/// the line `{x . omega_perp = s}`, binned to the offset grid. Empty cells
/// are flagged and inpainted by linear interpolation along `s`.
pub fn assemble_sinogram_physics(
    fields: &[AngleField<'_>],
    j: usize,
    s_max: f64,
) -> Result<Sinogram> {
    let k = fields.len();
    if k == 0 {
        return Err(HescError::ConfigError("no angle fields supplied".into()));
    }
    let mut sino = Sinogram::new(k, j, s_max, Provenance::Physics);
    let ds = sino.offset_step();
    for (ki, field) in fields.iter().enumerate() {
        let perp = [-field.omega[1], field.omega[0]];
        let mut sums = vec![0.0; j];
        let mut counts = vec![0usize; j];
        for (idx, (&w, &m)) in field.w_field.iter().zip(field.mask.iter()).enumerate() {
            if !m {
                continue;
            }
            let x = (field.position)(idx);
            let s = x[0] * perp[0] + x[1] * perp[1];
            let bin = ((s + s_max) / ds).round();
            if bin < 0.0 || bin >= j as f64 {
                continue;
            }
            let bin = bin as usize;
            sums[bin] += w;
            counts[bin] += 1;
        }
        let base = ki * j;
        for ji in 0..j {
            if counts[ji] > 0 {
                sino.values[base + ji] = sums[ji] / counts[ji] as f64;
            } else {
                sino.flags[base + ji] = true;
            }
        }
        inpaint_row(
            &mut sino.values[base..base + j],
            &sino.flags[base..base + j],
        );
    }
    Ok(sino)
}

fn inpaint_row(values: &mut [f64], flags: &[bool]) {
    let j = values.len();
    let known: Vec<usize> = (0..j).filter(|&i| !flags[i]).collect();
    if known.is_empty() {
        return;
    }
    for i in 0..j {
        if !flags[i] {
            continue;
        }
        let left = known.iter().rev().find(|&&u| u < i);
        let right = known.iter().find(|&&u| u > i);
        values[i] = match (left, right) {
            (Some(&l), Some(&r)) => {
                let t = (i - l) as f64 / (r - l) as f64;
                values[l] * (1.0 - t) + values[r] * t
            }
            (Some(&l), None) => values[l],
            (None, Some(&r)) => values[r],
            (None, None) => 0.0,
        };
    }
}

/// Default Tikhonov regularization strength for the packet deconvolution.
pub const DEFAULT_EPS_REG: f64 = 1e-3;

/// Fourier-domain deconvolution of a sinogram row by the packet density
/// profile, Tikhonov-regularized:
/// `g_hat * conj(rho_hat) / (|rho_hat|^2 + eps^2 max|rho_hat|^2)`.
///
/// `density` is the |phi_0|^2 profile collapsed perpendicular to the ray
/// direction, sampled on the same offset grid with the packet center at the
/// middle sample; it is renormalized to unit sum internally.
pub fn deconvolve_packet(measured: &[f64], density: &[f64], eps_reg: f64) -> Result<Vec<f64>> {
    let j = measured.len();
    if density.len() != j {
        return Err(HescError::GridMismatch(
            "density profile length differs from row".into(),
        ));
    }
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return Err(HescError::ConfigError(
            "density profile must have positive total".into(),
        ));
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(j);
    let inv = planner.plan_fft_inverse(j);

    let mut g: Vec<Complex64> = measured.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // Rotate the kernel so its center sits at index 0 (zero-phase kernel).
    let center = j / 2;
    let mut rho: Vec<Complex64> = (0..j)
        .map(|i| Complex64::new(density[(i + center) % j] / total, 0.0))
        .collect();
    fwd.process(&mut g);
    fwd.process(&mut rho);
    let max_rho2 = rho.iter().map(|r| r.norm_sqr()).fold(0.0_f64, f64::max);
    let reg = eps_reg * eps_reg * max_rho2;
    let mut out: Vec<Complex64> = g
        .iter()
        .zip(rho.iter())
        .map(|(gh, rh)| gh * rh.conj() / (rh.norm_sqr() + reg))
        .collect();
    inv.process(&mut out);
    Ok(out.iter().map(|v| v.re / j as f64).collect())
}

/// Reconstruction raster: `M x M` over `[-half, half]^2` with a circular
/// region of interest.
#[derive(Debug, Clone)]
pub struct ReconField {
    pub m: usize,
    pub half_extent: f64,
    pub roi_radius: f64,
    pub values: Vec<f64>,
}

impl ReconField {
    pub fn template(m: usize, half_extent: f64, roi_radius: f64) -> Self {
        Self {
            m,
            half_extent,
            roi_radius,
            values: vec![0.0; m * m],
        }
    }

    pub fn position(&self, idx: usize) -> [f64; 2] {
        let step = 2.0 * self.half_extent / (self.m - 1) as f64;
        [
            -self.half_extent + (idx / self.m) as f64 * step,
            -self.half_extent + (idx % self.m) as f64 * step,
        ]
    }

    pub fn in_roi(&self, idx: usize) -> bool {
        let p = self.position(idx);
        p[0] * p[0] + p[1] * p[1] <= self.roi_radius * self.roi_radius
    }
}

/// Filtered back-projection inversion of a sinogram.
///
/// Per row: ramp filter `|xi|` with a Hann window at the offset Nyquist in
/// the offset Fourier domain. Back-projection with linear interpolation in
/// `s`, angle sum normalized by `pi / K`. Linear in the sinogram.
pub fn fbp_invert(sino: &Sinogram, template: &ReconField) -> Result<ReconField> {
    let k = sino.n_angles();
    let j = sino.n_offsets();
    if k < 2 {
        return Err(HescError::ConfigError("need at least 2 angles".into()));
    }
    let s_max = sino.s_max();
    if template.roi_radius > s_max {
        return Err(HescError::InsufficientCoverage {
            roi: template.roi_radius,
            smax: s_max,
        });
    }
    let ds = sino.offset_step();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(j);
    let inv = planner.plan_fft_inverse(j);

    // Filter each row: Q(s) = (1/2pi) int |xi| hann(xi) W_hat(xi) e^{i xi s} dxi.
    let xi_nyquist = std::f64::consts::PI / ds;
    let filtered: Vec<Vec<f64>> = exec::map_indexed(k, |ki| {
        let mut row: Vec<Complex64> = sino
            .row(ki)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fwd.process(&mut row);
        for (m, v) in row.iter_mut().enumerate() {
            let sm = if m <= j / 2 { m as isize } else { m as isize - j as isize };
            let xi = 2.0 * std::f64::consts::PI * sm as f64 / (j as f64 * ds);
            let hann = 0.5 * (1.0 + (std::f64::consts::PI * xi / xi_nyquist).cos());
            *v *= xi.abs() * hann;
        }
        inv.process(&mut row);
        // Continuous pair: W_hat = ds * FFT, Q = (1/2pi) int |xi| h W_hat e^{i xi s} dxi
        // with dxi = 2pi/(J ds); the ds and dxi factors collapse to 1/J.
        row.iter().map(|v| v.re / j as f64).collect()
    });

    let mut out = template.clone();
    let angle_weight = std::f64::consts::PI / k as f64;
    let m2 = out.m * out.m;
    let values = exec::map_indexed(m2, |idx| {
        let x = out.position(idx);
        let mut acc = 0.0;
        for ki in 0..k {
            let perp = sino.omega_perp(ki);
            let s = x[0] * perp[0] + x[1] * perp[1];
            let u = (s + s_max) / ds;
            let i0 = u.floor();
            let t = u - i0;
            let i0 = i0 as isize;
            let a = sample(&filtered[ki], i0);
            let b = sample(&filtered[ki], i0 + 1);
            acc += a * (1.0 - t) + b * t;
        }
        // f(x) = (1/2pi) int_0^pi Q(x . omega_perp, theta) dtheta.
        acc * angle_weight / (2.0 * std::f64::consts::PI)
    });
    out.values = values;
    Ok(out)
}

fn sample(row: &[f64], i: isize) -> f64 {
    if i < 0 || i as usize >= row.len() {
        0.0
    } else {
        row[i as usize]
    }
}

/// Reconstruction error over the region of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconError {
    /// `||estimate - truth||_2 / ||truth||_2` over the ROI.
    pub rms_rel: f64,
    pub max_abs: f64,
}

pub fn recon_error(
    estimate: &ReconField,
    truth: &ScalarPotential,
    roi_radius: f64,
) -> ReconError {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut max_abs = 0.0_f64;
    for idx in 0..estimate.values.len() {
        let p = estimate.position(idx);
        if p[0] * p[0] + p[1] * p[1] > roi_radius * roi_radius {
            continue;
        }
        let t = truth.eval(p);
        let d = estimate.values[idx] - t;
        num += d * d;
        den += t * t;
        max_abs = max_abs.max(d.abs());
    }
    ReconError {
        rms_rel: if den > 0.0 {
            (num / den).sqrt()
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        },
        max_abs,
    }
}
