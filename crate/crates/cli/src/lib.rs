//! `hesc` command-line front end: experiment orchestration over the core
//! library with deterministic, checksummed file output.
//!
//! Usage: `hesc <subcommand> --config <path> --out <dir> [--threads N]`
//! with subcommands `evolve`, `scatter`, `limit-scan`, `sinogram`,
//! `reconstruct`, `xray-oracle`. `HESC_THREADS` is the fallback for
//! `--threads`. Exit codes: 0 ok, 2 config, 3 convergence, 4 numeric
//! precondition, 5 io.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use hesc_core::grid::make_packet;
use hesc_core::io::{
    write_field, write_recon_field, write_scan, write_scatter_results, write_sinogram,
};
use hesc_core::propagators::{interacting_evolve, EvolutionConfig};
use hesc_core::kinematics::BoostSpec;
use hesc_core::recon::{
    assemble_sinogram_oracle, assemble_sinogram_physics, fbp_invert, recon_error, AngleField,
    ReconField, Sinogram,
};
use hesc_core::scattering::{
    converged_s_element, long_range_limit_scan, nr_limit_scan, phase_profile_extract,
    rel_limit_check, ScanConfig, ScanEntry, ScatteringConfig,
};
use hesc_core::{HescError, Result};

use config::{parse_config, serialize_config, ExperimentConfig, ScanKind, SinogramSource};

const USAGE: &str = "usage: hesc <evolve|scatter|limit-scan|sinogram|reconstruct|xray-oracle> \
                     --config <path> --out <dir> [--threads N]";

/// Entry point used by the binary: parses `std::env::args`, runs, and
/// returns the process exit code.
pub fn run() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run_with_args(&args)
}

/// Exit-code mapping for the module error taxonomy.
pub fn exit_code(err: &HescError) -> i32 {
    match err {
        HescError::ConfigError(_) | HescError::Format(_) => 2,
        HescError::NotConverged { .. } => 3,
        HescError::Io(_) => 5,
        _ => 4,
    }
}

/// Run with explicit arguments (exposed for tests).
pub fn run_with_args(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(converged) => {
            if converged {
                0
            } else {
                eprintln!("error: scattering element did not converge within r_max");
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Cli {
    subcommand: String,
    config: PathBuf,
    out: PathBuf,
    threads: Option<usize>,
}

fn parse_args(args: &[String]) -> Result<Cli> {
    let usage = |msg: String| HescError::ConfigError(format!("{msg}\n{USAGE}"));
    let mut it = args.iter();
    let subcommand = it
        .next()
        .ok_or_else(|| usage("missing subcommand".into()))?
        .clone();
    if !matches!(
        subcommand.as_str(),
        "evolve" | "scatter" | "limit-scan" | "sinogram" | "reconstruct" | "xray-oracle"
    ) {
        return Err(usage(format!("unknown subcommand `{subcommand}`")));
    }
    let mut config = None;
    let mut out = None;
    let mut threads = None;
    while let Some(flag) = it.next() {
        let mut value = |name: &str| {
            it.next()
                .cloned()
                .ok_or_else(|| usage(format!("flag {name} requires a value")))
        };
        match flag.as_str() {
            "--config" => config = Some(PathBuf::from(value("--config")?)),
            "--out" => out = Some(PathBuf::from(value("--out")?)),
            "--threads" => {
                let v = value("--threads")?;
                threads = Some(v.parse::<usize>().map_err(|_| {
                    usage(format!("--threads: expected an integer, got `{v}`"))
                })?);
            }
            other => return Err(usage(format!("unknown flag `{other}`"))),
        }
    }
    if threads.is_none() {
        if let Ok(v) = std::env::var("HESC_THREADS") {
            threads = Some(v.parse::<usize>().map_err(|_| {
                HescError::ConfigError(format!("HESC_THREADS: expected an integer, got `{v}`"))
            })?);
        }
    }
    Ok(Cli {
        subcommand,
        config: config.ok_or_else(|| usage("missing --config".into()))?,
        out: out.ok_or_else(|| usage("missing --out".into()))?,
        threads,
    })
}

#[cfg(feature = "parallel")]
fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if n > 0 {
            // Ignore the error if a global pool already exists (e.g. when
            // called twice in-process from tests).
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: Option<usize>) {}

/// Collects output files and writes the checksum manifest at the end.
struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Writes `manifest.txt`: one `<sha256>  <name>` line per artifact,
    /// sorted by name.
    fn finish(mut self) -> Result<()> {
        self.written.sort();
        let mut manifest = String::new();
        for name in &self.written {
            let bytes = std::fs::read(self.dir.join(name))?;
            let digest = Sha256::digest(&bytes);
            let mut hex = String::with_capacity(64);
            for b in digest {
                let _ = write!(hex, "{b:02x}");
            }
            manifest.push_str(&format!("{hex}  {name}\n"));
        }
        std::fs::write(self.dir.join("manifest.txt"), manifest)?;
        Ok(())
    }
}

/// Returns `Ok(converged)`; non-convergence maps to exit code 3 with all
/// outputs still written.
fn dispatch(args: &[String]) -> Result<bool> {
    let cli = parse_args(args)?;
    init_threads(cli.threads);
    let text = std::fs::read_to_string(&cli.config)?;
    let cfg = parse_config(&text)?;
    let mut out = OutDir::new(&cli.out)?;
    // Canonical config echo: demonstrates the round-trip contract and pins
    // the manifest to the exact configuration.
    out.write_text("config.ini", &serialize_config(&cfg))?;

    let converged = match cli.subcommand.as_str() {
        "evolve" => cmd_evolve(&cfg, &mut out)?,
        "scatter" => cmd_scatter(&cfg, &mut out)?,
        "limit-scan" => cmd_limit_scan(&cfg, &mut out)?,
        "sinogram" => cmd_sinogram(&cfg, &mut out)?,
        "reconstruct" => cmd_reconstruct(&cfg, &mut out)?,
        "xray-oracle" => cmd_xray_oracle(&cfg, &mut out)?,
        _ => unreachable!("validated in parse_args"),
    };
    out.finish()?;
    Ok(converged)
}

fn cmd_evolve(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<bool> {
    let packet = make_packet(cfg.grid, &cfg.packet)?;
    write_field(&packet, &out.path("initial.qf2d1"))?;
    let auto = EvolutionConfig::auto_dt(
        &cfg.grid,
        &cfg.disp,
        &cfg.potential,
        None,
        cfg.evolution.t_total,
    );
    let evo = EvolutionConfig {
        dt: cfg.evolution.dt.unwrap_or(auto.dt),
        t_total: cfg.evolution.t_total,
        margin: cfg.evolution.margin,
    };
    let evolved = interacting_evolve(&packet, &cfg.disp, &cfg.potential, &evo, None)?;
    write_field(&evolved, &out.path("final.qf2d1"))?;
    Ok(true)
}

fn scattering_config(cfg: &ExperimentConfig) -> Result<ScatteringConfig> {
    Ok(ScatteringConfig {
        disp: cfg.disp,
        potential: cfg.potential.clone(),
        boost: BoostSpec::new(cfg.scattering.p_bar, &cfg.disp)?,
        r_initial: cfg.scattering.r_initial,
        epsilon: cfg.scattering.epsilon,
        r_max: cfg.scattering.r_max,
        margin: cfg.scattering.margin,
    })
}

fn cmd_scatter(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<bool> {
    let packet = make_packet(cfg.grid, &cfg.packet)?;
    let scfg = scattering_config(cfg)?;
    let result = converged_s_element(&packet, &packet, &scfg, cfg.scattering.operator, true)?;
    let entry = ScanEntry {
        p_bar: scfg.boost.p_bar,
        p_bar_mag: scfg.boost.magnitude(),
        value: result.element,
        oracle: result.element,
        delta: 0.0,
        converged: result.converged,
        r_final: result.r_final,
    };
    write_scatter_results(&[entry], &out.path("elements.csv"))?;
    let mut log = String::from("# scattering convergence log\nr,element_re,element_im\n");
    for (r, el) in &result.convergence_log {
        log.push_str(&format!("{r},{},{}\n", el.re, el.im));
    }
    out.write_text("convergence.csv", &log)?;
    if let Some(field) = &result.out_field {
        write_field(field, &out.path("out_field.qf2d1"))?;
    }
    Ok(result.converged)
}

fn cmd_limit_scan(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<bool> {
    let s = &cfg.scattering;
    let mag = (s.p_bar[0] * s.p_bar[0] + s.p_bar[1] * s.p_bar[1]).sqrt();
    if mag == 0.0 {
        return Err(HescError::ConfigError(
            "[scattering] pbar must be nonzero to define the scan direction".into(),
        ));
    }
    let template = ScanConfig {
        disp: cfg.disp,
        potential: cfg.potential.clone(),
        omega: [s.p_bar[0] / mag, s.p_bar[1] / mag],
        epsilon: s.epsilon,
        r_initial: s.r_initial,
        r_max: s.r_max,
        margin: s.margin,
    };
    let entries = match s.scan {
        ScanKind::Nr => nr_limit_scan(cfg.grid, &cfg.packet, &cfg.packet, &template, &s.magnitudes)?,
        ScanKind::Rel => {
            rel_limit_check(cfg.grid, &cfg.packet, &cfg.packet, &template, &s.magnitudes)?
        }
        ScanKind::Long => {
            long_range_limit_scan(cfg.grid, &cfg.packet, &cfg.packet, &template, &s.magnitudes)?
        }
    };
    write_scan(&entries, &out.path("scan.csv"))?;
    Ok(entries.iter().all(|e| e.converged))
}

/// Builds the sinogram requested by `[reconstruction]`, physics or oracle.
/// Returns the sinogram and whether every scattering run converged.
fn build_sinogram(cfg: &ExperimentConfig) -> Result<(Sinogram, bool)> {
    let r = &cfg.reconstruction;
    match r.source {
        SinogramSource::Oracle => Ok((
            assemble_sinogram_oracle(&cfg.potential, r.angles, r.offsets, r.s_max)?,
            true,
        )),
        SinogramSource::Physics => {
            let s = &cfg.scattering;
            let mag = (s.p_bar[0] * s.p_bar[0] + s.p_bar[1] * s.p_bar[1]).sqrt();
            let mut w_fields = Vec::new();
            let mut masks = Vec::new();
            let mut omegas = Vec::new();
            let mut all_converged = true;
            for k in 0..r.angles {
                let theta = std::f64::consts::PI * k as f64 / r.angles as f64;
                let omega = [theta.cos(), theta.sin()];
                let scfg = ScatteringConfig {
                    disp: cfg.disp,
                    potential: cfg.potential.clone(),
                    boost: BoostSpec::new([mag * omega[0], mag * omega[1]], &cfg.disp)?,
                    r_initial: s.r_initial,
                    epsilon: s.epsilon,
                    r_max: s.r_max,
                    margin: s.margin,
                };
                let profile = phase_profile_extract(&cfg.packet, cfg.grid, &scfg, r.mask_threshold)?;
                all_converged &= profile.result.converged;
                w_fields.push(profile.w_field);
                masks.push(profile.mask);
                omegas.push(omega);
            }
            let grid = cfg.grid;
            let pos = move |idx: usize| grid.position(idx);
            let fields: Vec<AngleField> = (0..r.angles)
                .map(|k| AngleField {
                    omega: omegas[k],
                    w_field: &w_fields[k],
                    mask: &masks[k],
                    position: &pos,
                })
                .collect();
            Ok((
                assemble_sinogram_physics(&fields, r.offsets, r.s_max)?,
                all_converged,
            ))
        }
    }
}

fn cmd_sinogram(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<bool> {
    let (sino, converged) = build_sinogram(cfg)?;
    write_sinogram(&sino, &out.path("sinogram.csv"))?;
    Ok(converged)
}

fn cmd_reconstruct(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<bool> {
    let (sino, converged) = build_sinogram(cfg)?;
    write_sinogram(&sino, &out.path("sinogram.csv"))?;
    let r = &cfg.reconstruction;
    let template = ReconField::template(r.m, r.half_extent, r.roi);
    let recon = fbp_invert(&sino, &template)?;
    write_recon_field(&recon, &out.path("recon.qf2d1"))?;
    let err = recon_error(&recon, &cfg.potential, r.roi);
    out.write_text(
        "error.csv",
        &format!(
            "# reconstruction error vs configured potential on the roi\nrms_rel,max_abs\n{},{}\n",
            err.rms_rel, err.max_abs
        ),
    )?;
    Ok(converged)
}

fn cmd_xray_oracle(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<bool> {
    let r = &cfg.reconstruction;
    let sino = assemble_sinogram_oracle(&cfg.potential, r.angles, r.offsets, r.s_max)?;
    write_sinogram(&sino, &out.path("sinogram.csv"))?;
    // Fubini diagnostic: per-angle row sums approximate the plane integral
    // of the potential and are angle-independent.
    let mut rows = String::from("# per-angle offset-sums times ds (Fubini diagnostic)\nangle_index,row_sum\n");
    for (k, sum) in sino.row_sums().iter().enumerate() {
        rows.push_str(&format!("{k},{sum}\n"));
    }
    out.write_text("row_sums.csv", &rows)?;
    Ok(true)
}
