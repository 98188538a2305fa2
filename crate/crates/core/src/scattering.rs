//! Finite-time scattering operators S and S^D, convergence control over
//! the window size, high-energy limit scans, and whole-field phase-profile
//! extraction.
//!
//! Everything runs in the boosted frame: matrix elements and output fields
//! are computed for the envelope states under the exact unitary conjugation
//! `exp(-i pbar.x) S exp(i pbar.x)`, which equals the lab-frame quantities
//! identically while keeping the grid band-limited to the envelope.

use num_complex::Complex64;

use crate::error::HescError;
use crate::exec;
use crate::grid::{inner_product, make_packet, momentum_support_ratio, Grid2D, PacketSpec, Repr, WavePacket};
use crate::kinematics::BoostSpec;
use crate::kinematics::Dispersion;
use crate::potentials::{
    classify_potential, long_range_difference_integral, xray_oracle, ScalarPotential,
};
use crate::propagators::{dollard_evolve, free_evolve, interacting_evolve, EvolutionConfig};
use crate::Result;

/// Parameters of one scattering computation.
#[derive(Debug, Clone)]
pub struct ScatteringConfig {
    pub disp: Dispersion,
    pub potential: ScalarPotential,
    pub boost: BoostSpec,
    /// Initial separation half-window; doubled until convergence.
    pub r_initial: f64,
    /// Convergence tolerance epsilon; the stopping rule is
    /// `|element change| < epsilon / v(pbar)`.
    pub epsilon: f64,
    /// Cap on the separation search.
    pub r_max: f64,
    /// Box-containment margin handed to the propagators.
    pub margin: f64,
}

impl ScatteringConfig {
    /// Default windowing for a potential: initial separation `4 * R99`,
    /// epsilon 1e-4.
    pub fn standard(disp: Dispersion, potential: ScalarPotential, boost: BoostSpec) -> Self {
        let r99 = if potential.is_zero() {
            1.0
        } else {
            classify_potential(&potential.short_part()).r99.max(1.0)
        };
        Self {
            disp,
            potential,
            boost,
            r_initial: 4.0 * r99,
            epsilon: 1e-4,
            r_max: 256.0,
            margin: 0.05,
        }
    }
}

/// Converged scattering output.
#[derive(Debug, Clone)]
pub struct ScatteringResult {
    /// Matrix element of the (frame-conjugated) scattering operator.
    pub element: Complex64,
    /// `exp(-i pbar.x) S Phi_pbar` in the envelope frame, from the last window.
    pub out_field: Option<WavePacket>,
    /// `(separation r, element)` per window.
    pub convergence_log: Vec<(f64, Complex64)>,
    pub converged: bool,
    pub boost: BoostSpec,
    /// Final separation used.
    pub r_final: f64,
}

/// Finite-time scattering operator applied to an envelope packet:
/// `exp(i t_plus H0) U(t_plus - t_minus) exp(-i t_minus H0) Phi` in the
/// boosted frame, with `t_pm = r_pm / v(pbar)`.
pub fn finite_time_s(
    packet: &WavePacket,
    cfg: &ScatteringConfig,
    r_minus: f64,
    r_plus: f64,
) -> Result<WavePacket> {
    if !(r_minus < 0.0 && r_plus > 0.0) && !(r_minus == 0.0 && r_plus == 0.0) {
        return Err(HescError::ConfigError(
            "window must satisfy r_minus < 0 < r_plus".into(),
        ));
    }
    if r_minus == 0.0 && r_plus == 0.0 {
        return Ok(packet.clone());
    }
    let v = cfg.boost.speed;
    let frame = Some(cfg.boost.p_bar);
    let (t_minus, t_plus) = (r_minus / v, r_plus / v);
    let state = free_evolve(packet, &cfg.disp, t_minus, frame);
    let evo = EvolutionConfig {
        margin: cfg.margin,
        ..EvolutionConfig::auto_dt(&packet.grid, &cfg.disp, &cfg.potential, frame, t_plus - t_minus)
    };
    let state = interacting_evolve(&state, &cfg.disp, &cfg.potential, &evo, frame)?;
    Ok(free_evolve(&state, &cfg.disp, -t_plus, frame))
}

/// Dollard-modified finite-time scattering operator `S^D(t_plus, t_minus)`.
///
/// The free comparison factors are replaced by the Dollard propagators built
/// from the declared long-range part; the middle factor evolves under the
/// full potential. Reduces to [`finite_time_s`] when the long part is empty.
pub fn finite_time_sd(
    packet: &WavePacket,
    cfg: &ScatteringConfig,
    r_minus: f64,
    r_plus: f64,
) -> Result<WavePacket> {
    if !(r_minus < 0.0 && r_plus > 0.0) {
        return Err(HescError::ConfigError(
            "window must satisfy r_minus < 0 < r_plus".into(),
        ));
    }
    let long = cfg.potential.long_part();
    let v = cfg.boost.speed;
    let frame = Some(cfg.boost.p_bar);
    let (t_minus, t_plus) = (r_minus / v, r_plus / v);
    let state = dollard_evolve(packet, &cfg.disp, &long, t_minus, frame, false);
    let evo = EvolutionConfig {
        margin: cfg.margin,
        ..EvolutionConfig::auto_dt(&packet.grid, &cfg.disp, &cfg.potential, frame, t_plus - t_minus)
    };
    let state = interacting_evolve(&state, &cfg.disp, &cfg.potential, &evo, frame)?;
    Ok(dollard_evolve(&state, &cfg.disp, &long, t_plus, frame, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Plain,
    Dollard,
}

/// Double the separation window until the matrix element settles below
/// `epsilon / v(pbar)` or the cap is hit.
pub fn converged_s_element(
    bra: &WavePacket,
    ket: &WavePacket,
    cfg: &ScatteringConfig,
    op: Operator,
    keep_field: bool,
) -> Result<ScatteringResult> {
    let v = cfg.boost.speed;
    let tol = cfg.epsilon / v;
    let mut log: Vec<(f64, Complex64)> = Vec::new();
    let mut r = cfg.r_initial;
    let mut last_field: Option<WavePacket> = None;
    let mut converged = false;
    while r <= cfg.r_max {
        let out = match op {
            Operator::Plain => finite_time_s(ket, cfg, -r, r)?,
            Operator::Dollard => finite_time_sd(ket, cfg, -r, r)?,
        };
        let element = inner_product(bra, &out)?;
        if keep_field {
            last_field = Some(out);
        }
        if let Some((_, prev)) = log.last() {
            if (element - prev).norm() < tol {
                log.push((r, element));
                converged = true;
                break;
            }
        }
        log.push((r, element));
        r *= 2.0;
    }
    let (r_final, element) = *log.last().ok_or_else(|| {
        HescError::ConfigError("empty convergence search: r_initial exceeds r_max".into())
    })?;
    Ok(ScatteringResult {
        element,
        out_field: last_field,
        convergence_log: log,
        converged,
        boost: cfg.boost,
        r_final,
    })
}

/// One entry of a high-energy limit scan.
#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub p_bar: [f64; 2],
    pub p_bar_mag: f64,
    /// Measured (scaled) matrix-element combination.
    pub value: Complex64,
    /// Quadrature oracle it should approach.
    pub oracle: Complex64,
    pub delta: f64,
    pub converged: bool,
    pub r_final: f64,
}

/// X-ray field of the short part over the grid (one value per grid point).
pub fn xray_field(potential: &ScalarPotential, grid: &Grid2D, omega: [f64; 2]) -> Result<Vec<f64>> {
    let short = potential.short_part();
    // Surface the error once rather than per point.
    xray_oracle(&short, omega, [0.0, 0.0])?;
    Ok(exec::map_indexed(grid.len(), |idx| {
        xray_oracle(&short, omega, grid.position(idx)).unwrap_or(f64::NAN)
    }))
}

/// `int dr <bra, V^s(x + omega r) ket> = <bra, W(x, omega) ket>` by grid
/// quadrature of the overlap density against the X-ray oracle field.
pub fn overlap_line_oracle(
    bra: &WavePacket,
    ket: &WavePacket,
    w_field: &[f64],
) -> Result<Complex64> {
    let b = bra.to_repr(Repr::Position);
    let k = ket.to_repr(Repr::Position);
    if b.grid != k.grid {
        return Err(HescError::GridMismatch("oracle overlap grids differ".into()));
    }
    let w = b.weight();
    Ok(b.samples
        .iter()
        .zip(k.samples.iter())
        .zip(w_field.iter())
        .map(|((bb, kk), ww)| bb.conj() * kk * ww)
        .sum::<Complex64>()
        * w)
}

/// `<bra, exp{-i s W(x, omega)} ket>` by grid quadrature.
pub fn overlap_phase_oracle(
    bra: &WavePacket,
    ket: &WavePacket,
    w_field: &[f64],
    scale: f64,
) -> Result<Complex64> {
    let b = bra.to_repr(Repr::Position);
    let k = ket.to_repr(Repr::Position);
    if b.grid != k.grid {
        return Err(HescError::GridMismatch("oracle overlap grids differ".into()));
    }
    let w = b.weight();
    Ok(b.samples
        .iter()
        .zip(k.samples.iter())
        .zip(w_field.iter())
        .map(|((bb, kk), ww)| bb.conj() * kk * Complex64::from_polar(1.0, -scale * ww))
        .sum::<Complex64>()
        * w)
}

/// Template for a scan: everything but the boost magnitude.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub disp: Dispersion,
    pub potential: ScalarPotential,
    /// Boost direction (unit vector).
    pub omega: [f64; 2],
    pub epsilon: f64,
    pub r_initial: f64,
    pub r_max: f64,
    pub margin: f64,
}

impl ScanConfig {
    fn at_magnitude(&self, mag: f64) -> Result<ScatteringConfig> {
        let p_bar = [mag * self.omega[0], mag * self.omega[1]];
        Ok(ScatteringConfig {
            disp: self.disp,
            potential: self.potential.clone(),
            boost: BoostSpec::new(p_bar, &self.disp)?,
            r_initial: self.r_initial,
            epsilon: self.epsilon,
            r_max: self.r_max,
            margin: self.margin,
        })
    }
}

fn scan_packets(
    grid: Grid2D,
    bra_spec: &PacketSpec,
    ket_spec: &PacketSpec,
) -> Result<(WavePacket, WavePacket)> {
    Ok((make_packet(grid, bra_spec)?, make_packet(grid, ket_spec)?))
}

fn require_support_gate(
    packet: &WavePacket,
    disp: &Dispersion,
    p_bar: [f64; 2],
) -> Result<()> {
    let gate = momentum_support_ratio(packet, disp, p_bar)?;
    if !gate.pass {
        return Err(HescError::ConfigError(format!(
            "boost {:?} fails the minimal-velocity gate: ratio {:.3} < 2/3",
            p_bar, gate.ratio
        )));
    }
    Ok(())
}

/// Nonrelativistic high-energy scan: `v(pbar) <Phi', i(S-1) Phi>` against
/// the line-integral Born oracle, for each boost magnitude.
pub fn nr_limit_scan(
    grid: Grid2D,
    bra_spec: &PacketSpec,
    ket_spec: &PacketSpec,
    template: &ScanConfig,
    magnitudes: &[f64],
) -> Result<Vec<ScanEntry>> {
    let (bra, ket) = scan_packets(grid, bra_spec, ket_spec)?;
    let identity = inner_product(&bra, &ket)?;
    let w_field = xray_field(&template.potential, &grid, template.omega)?;
    let oracle = overlap_line_oracle(&bra, &ket, &w_field)?;
    let mut entries = Vec::with_capacity(magnitudes.len());
    for &mag in magnitudes {
        let cfg = template.at_magnitude(mag)?;
        require_support_gate(&ket, &cfg.disp, cfg.boost.p_bar)?;
        let result = converged_s_element(&bra, &ket, &cfg, Operator::Plain, false)?;
        let value = cfg.boost.speed * Complex64::i() * (result.element - identity);
        entries.push(ScanEntry {
            p_bar: cfg.boost.p_bar,
            p_bar_mag: mag,
            value,
            oracle,
            delta: (value - oracle).norm(),
            converged: result.converged,
            r_final: result.r_final,
        });
    }
    Ok(entries)
}

/// Relativistic high-energy check: the raw element against the nontrivial
/// exponential target `<Phi', exp{-i W} Phi>`.
pub fn rel_limit_check(
    grid: Grid2D,
    bra_spec: &PacketSpec,
    ket_spec: &PacketSpec,
    template: &ScanConfig,
    magnitudes: &[f64],
) -> Result<Vec<ScanEntry>> {
    let (bra, ket) = scan_packets(grid, bra_spec, ket_spec)?;
    let w_field = xray_field(&template.potential, &grid, template.omega)?;
    let target = overlap_phase_oracle(&bra, &ket, &w_field, 1.0)?;
    let mut entries = Vec::with_capacity(magnitudes.len());
    for &mag in magnitudes {
        let cfg = template.at_magnitude(mag)?;
        require_support_gate(&ket, &cfg.disp, cfg.boost.p_bar)?;
        let result = converged_s_element(&bra, &ket, &cfg, Operator::Plain, false)?;
        entries.push(ScanEntry {
            p_bar: cfg.boost.p_bar,
            p_bar_mag: mag,
            value: result.element,
            oracle: target,
            delta: (result.element - target).norm(),
            converged: result.converged,
            r_final: result.r_final,
        });
    }
    Ok(entries)
}

/// Long-range scan with the Dollard operator: the corrected combination
/// `v <Phi', i(S^D - 1) Phi> - int dr <Phi', [V^l(x+wr) - V^l(wr)] Phi>`
/// against the short-range oracle.
pub fn long_range_limit_scan(
    grid: Grid2D,
    bra_spec: &PacketSpec,
    ket_spec: &PacketSpec,
    template: &ScanConfig,
    magnitudes: &[f64],
) -> Result<Vec<ScanEntry>> {
    let (bra, ket) = scan_packets(grid, bra_spec, ket_spec)?;
    let identity = inner_product(&bra, &ket)?;
    let short = template.potential.short_part();
    let oracle_short = if short.is_zero() {
        Complex64::new(0.0, 0.0)
    } else {
        let w_field = xray_field(&short, &grid, template.omega)?;
        overlap_line_oracle(&bra, &ket, &w_field)?
    };
    // Long-range correction term, independent of the boost magnitude.
    let long = template.potential.long_part();
    let correction = if long.is_zero() {
        Complex64::new(0.0, 0.0)
    } else {
        let omega = template.omega;
        let diff_field: Vec<f64> = {
            let vals = exec::map_indexed(grid.len(), |idx| {
                long_range_difference_integral(&long, omega, grid.position(idx))
            });
            let mut out = Vec::with_capacity(vals.len());
            for v in vals {
                out.push(v?);
            }
            out
        };
        overlap_line_oracle(&bra, &ket, &diff_field)?
    };
    let mut entries = Vec::with_capacity(magnitudes.len());
    for &mag in magnitudes {
        let cfg = template.at_magnitude(mag)?;
        require_support_gate(&ket, &cfg.disp, cfg.boost.p_bar)?;
        let result = converged_s_element(&bra, &ket, &cfg, Operator::Dollard, false)?;
        let value = cfg.boost.speed * Complex64::i() * (result.element - identity) - correction;
        entries.push(ScanEntry {
            p_bar: cfg.boost.p_bar,
            p_bar_mag: mag,
            value,
            oracle: oracle_short,
            delta: (value - oracle_short).norm(),
            converged: result.converged,
            r_final: result.r_final,
        });
    }
    Ok(entries)
}

/// Whole-field phase profile extracted from a scattering run.
#[derive(Debug, Clone)]
pub struct PhaseProfile {
    /// `v(pbar) * Im log(psi_out / phi_0)` on the mask, zero elsewhere.
    pub w_field: Vec<f64>,
    pub mask: Vec<bool>,
    pub result: ScatteringResult,
}

/// Extract the line-integral field `W(x, omega)` from the phase of the
/// scattered envelope: `psi_out = exp(-i pbar.x) S Phi_pbar` compared to
/// `phi_0` on the region where the envelope is supported.
pub fn phase_profile_extract(
    ket_spec: &PacketSpec,
    grid: Grid2D,
    cfg: &ScatteringConfig,
    mask_threshold: f64,
) -> Result<PhaseProfile> {
    let ket = make_packet(grid, ket_spec)?;
    require_support_gate(&ket, &cfg.disp, cfg.boost.p_bar)?;

    // Wrap guard: sample the oracle field near the potential to bound |W|.
    let short = cfg.potential.short_part();
    if !short.is_zero() {
        let mut w_max = 0.0_f64;
        let step = (grid.n() / 32).max(1);
        for i in (0..grid.n()).step_by(step) {
            for j in (0..grid.n()).step_by(step) {
                let x = [grid.x(i), grid.x(j)];
                w_max = w_max.max(xray_oracle(&short, cfg.boost.omega, x)?.abs());
            }
        }
        let wrap = w_max / cfg.boost.speed;
        if wrap >= 0.5 * std::f64::consts::PI {
            return Err(HescError::PhaseWrapRisk(wrap));
        }
    }

    let result = converged_s_element(&ket, &ket, cfg, Operator::Plain, true)?;
    let out = result
        .out_field
        .as_ref()
        .expect("keep_field requested")
        .to_repr(Repr::Position);
    let reference = ket.to_repr(Repr::Position);
    let max_amp = reference
        .samples
        .iter()
        .map(|a| a.norm())
        .fold(0.0_f64, f64::max);
    let cut = mask_threshold * max_amp;
    let mut mask = vec![false; grid.len()];
    let mut w_field = vec![0.0; grid.len()];
    let mut any = false;
    for idx in 0..grid.len() {
        if reference.samples[idx].norm() > cut {
            mask[idx] = true;
            any = true;
            let ratio = out.samples[idx] / reference.samples[idx];
            w_field[idx] = -cfg.boost.speed * ratio.arg();
        }
    }
    if !any {
        return Err(HescError::MaskEmpty);
    }
    Ok(PhaseProfile {
        w_field,
        mask,
        result,
    })
}

/// Least-squares slope of `log delta` versus `log |pbar|`.
///
/// Returns negative infinity when any delta vanishes (perfect agreement).
pub fn error_slope_fit(scan: &[(f64, f64)]) -> Result<f64> {
    if scan.len() < 3 {
        return Err(HescError::DegenerateFit(format!(
            "need at least 3 entries, got {}",
            scan.len()
        )));
    }
    if scan.iter().any(|(_, d)| *d == 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let xs: Vec<f64> = scan.iter().map(|(p, _)| p.ln()).collect();
    let ys: Vec<f64> = scan.iter().map(|(_, d)| d.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        return Err(HescError::DegenerateFit("all magnitudes equal".into()));
    }
    Ok(num / den)
}
