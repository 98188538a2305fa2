//! INI-style experiment configuration: parsing with strict unknown-key
//! rejection, validation against module invariants, and canonical
//! serialization (the round-trip contract).

use hesc_core::grid::{Envelope, Grid2D, PacketSpec};
use hesc_core::kinematics::{Dispersion, DispersionKind};
use hesc_core::potentials::{classify_potential, ScalarPotential, Term};
use hesc_core::scattering::Operator;
use hesc_core::{HescError, Result};

/// Which limit scan `limit-scan` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    Nr,
    Rel,
    Long,
}

/// Source of a sinogram: closed-form line integrals or the scattering
/// measurement pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinogramSource {
    Oracle,
    Physics,
}

/// `[scattering]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSection {
    pub p_bar: [f64; 2],
    pub r_initial: f64,
    pub epsilon: f64,
    pub r_max: f64,
    pub margin: f64,
    pub operator: Operator,
    pub scan: ScanKind,
    pub magnitudes: Vec<f64>,
}

impl Default for ScatterSection {
    fn default() -> Self {
        Self {
            p_bar: [16.0, 0.0],
            r_initial: 6.0,
            epsilon: 1e-3,
            r_max: 48.0,
            margin: 0.05,
            operator: Operator::Plain,
            scan: ScanKind::Nr,
            magnitudes: vec![8.0, 16.0, 32.0, 64.0],
        }
    }
}

/// `[evolution]` section (used by `evolve`).
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSection {
    /// `None` means the automatic step choice.
    pub dt: Option<f64>,
    pub t_total: f64,
    pub margin: f64,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            dt: None,
            t_total: 1.0,
            margin: 0.1,
        }
    }
}

/// `[reconstruction]` section (used by `sinogram`, `reconstruct`,
/// `xray-oracle`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReconSection {
    pub source: SinogramSource,
    pub angles: usize,
    pub offsets: usize,
    pub s_max: f64,
    pub m: usize,
    pub half_extent: f64,
    pub roi: f64,
    pub mask_threshold: f64,
}

impl Default for ReconSection {
    fn default() -> Self {
        Self {
            source: SinogramSource::Oracle,
            angles: 16,
            offsets: 65,
            s_max: 8.0,
            m: 81,
            half_extent: 3.0,
            roi: 2.5,
            mask_threshold: 0.02,
        }
    }
}

/// Fully validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Reserved for randomized placements; part of the determinism contract.
    pub seed: u64,
    pub grid: Grid2D,
    pub disp: Dispersion,
    pub packet: PacketSpec,
    pub potential: ScalarPotential,
    pub scattering: ScatterSection,
    pub evolution: EvolutionSection,
    pub reconstruction: ReconSection,
}

fn cfg_err(msg: impl Into<String>) -> HescError {
    HescError::ConfigError(msg.into())
}

fn parse_f64(section: &str, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| cfg_err(format!("[{section}] {key}: expected a number, got `{value}`")))
}

fn parse_usize(section: &str, key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| cfg_err(format!("[{section}] {key}: expected an integer, got `{value}`")))
}

fn parse_vec2(section: &str, key: &str, value: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(cfg_err(format!(
            "[{section}] {key}: expected two numbers, got `{value}`"
        )));
    }
    Ok([
        parse_f64(section, key, parts[0])?,
        parse_f64(section, key, parts[1])?,
    ])
}

fn parse_term(section: &str, key: &str, value: &str) -> Result<Term> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let bad = || {
        cfg_err(format!(
            "[{section}] {key}: expected `gaussian A cx cy width`, `yukawa q mu core`, \
             or `coulomb q core`, got `{value}`"
        ))
    };
    match parts.first().copied() {
        Some("gaussian") if parts.len() == 5 => Ok(Term::Gaussian {
            amplitude: parse_f64(section, key, parts[1])?,
            center: [
                parse_f64(section, key, parts[2])?,
                parse_f64(section, key, parts[3])?,
            ],
            width: parse_f64(section, key, parts[4])?,
        }),
        Some("yukawa") if parts.len() == 4 => Ok(Term::Yukawa {
            charge: parse_f64(section, key, parts[1])?,
            mu: parse_f64(section, key, parts[2])?,
            core: parse_f64(section, key, parts[3])?,
        }),
        Some("coulomb") if parts.len() == 3 => Ok(Term::CoulombLike {
            charge: parse_f64(section, key, parts[1])?,
            core: parse_f64(section, key, parts[2])?,
        }),
        _ => Err(bad()),
    }
}

fn term_to_string(t: &Term) -> String {
    match t {
        Term::Gaussian {
            amplitude,
            center,
            width,
        } => format!("gaussian {amplitude} {} {} {width}", center[0], center[1]),
        Term::Yukawa { charge, mu, core } => format!("yukawa {charge} {mu} {core}"),
        Term::CoulombLike { charge, core } => format!("coulomb {charge} {core}"),
    }
}

struct RawSection {
    name: String,
    entries: Vec<(String, String)>,
}

fn tokenize(text: &str) -> Result<(Vec<(String, String)>, Vec<RawSection>)> {
    let mut top = Vec::new();
    let mut sections: Vec<RawSection> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(format!("line {}: malformed section header `{line}`", lineno + 1)))?;
            sections.push(RawSection {
                name: name.trim().to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
        let entry = (key.trim().to_string(), value.trim().to_string());
        match sections.last_mut() {
            Some(s) => s.entries.push(entry),
            None => top.push(entry),
        }
    }
    Ok((top, sections))
}

/// Parse and validate a configuration from text. Unknown sections and keys
/// are rejected with the offending name in the message; all module-level
/// invariants (grid validity, Nyquist gate, potential classification) are
/// re-validated here.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let (top, sections) = tokenize(text)?;

    let mut seed = 0u64;
    for (key, value) in &top {
        match key.as_str() {
            "seed" => {
                seed = value
                    .parse::<u64>()
                    .map_err(|_| cfg_err(format!("seed: expected an integer, got `{value}`")))?
            }
            other => return Err(cfg_err(format!("unknown top-level key `{other}`"))),
        }
    }

    let mut grid = None;
    let mut disp = None;
    let mut packet = None;
    let mut potential = None;
    let mut scattering = ScatterSection::default();
    let mut evolution = EvolutionSection::default();
    let mut reconstruction = ReconSection::default();

    for section in &sections {
        match section.name.as_str() {
            "grid" => grid = Some(parse_grid(&section.entries)?),
            "dispersion" => disp = Some(parse_dispersion(&section.entries)?),
            "packet" => packet = Some(parse_packet(&section.entries)?),
            "potential" => potential = Some(parse_potential(&section.entries)?),
            "scattering" => scattering = parse_scattering(&section.entries)?,
            "evolution" => evolution = parse_evolution(&section.entries)?,
            "reconstruction" => reconstruction = parse_reconstruction(&section.entries)?,
            other => return Err(cfg_err(format!("unknown section `[{other}]`"))),
        }
    }

    let grid = grid.ok_or_else(|| cfg_err("missing required section [grid]"))?;
    let disp = disp.ok_or_else(|| cfg_err("missing required section [dispersion]"))?;
    let packet = packet.ok_or_else(|| cfg_err("missing required section [packet]"))?;
    let potential = potential.ok_or_else(|| cfg_err("missing required section [potential]"))?;

    let cfg = ExperimentConfig {
        seed,
        grid,
        disp,
        packet,
        potential,
        scattering,
        evolution,
        reconstruction,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn parse_grid(entries: &[(String, String)]) -> Result<Grid2D> {
    let mut n = None;
    let mut length = None;
    for (key, value) in entries {
        match key.as_str() {
            "n" => n = Some(parse_usize("grid", key, value)?),
            "length" => length = Some(parse_f64("grid", key, value)?),
            other => return Err(cfg_err(format!("unknown key `{other}` in [grid]"))),
        }
    }
    Grid2D::new(
        n.ok_or_else(|| cfg_err("[grid] missing key `n`"))?,
        length.ok_or_else(|| cfg_err("[grid] missing key `length`"))?,
    )
}

fn parse_dispersion(entries: &[(String, String)]) -> Result<Dispersion> {
    let mut kind = None;
    let mut mass = None;
    for (key, value) in entries {
        match key.as_str() {
            "kind" => {
                kind = Some(match value.as_str() {
                    "nonrelativistic" => DispersionKind::NonRelativistic,
                    "relativistic" => DispersionKind::Relativistic,
                    other => {
                        return Err(cfg_err(format!(
                            "[dispersion] kind: expected `nonrelativistic` or `relativistic`, got `{other}`"
                        )))
                    }
                })
            }
            "mass" => mass = Some(parse_f64("dispersion", key, value)?),
            other => return Err(cfg_err(format!("unknown key `{other}` in [dispersion]"))),
        }
    }
    let mass = mass.ok_or_else(|| cfg_err("[dispersion] missing key `mass`"))?;
    if !(mass > 0.0) {
        return Err(cfg_err(format!("[dispersion] mass must be positive, got {mass}")));
    }
    Ok(Dispersion {
        kind: kind.ok_or_else(|| cfg_err("[dispersion] missing key `kind`"))?,
        mass,
    })
}

fn parse_packet(entries: &[(String, String)]) -> Result<PacketSpec> {
    let mut envelope_kind = None;
    let mut sigma = None;
    let mut radius = None;
    let mut center = [0.0, 0.0];
    let mut boost = [0.0, 0.0];
    for (key, value) in entries {
        match key.as_str() {
            "envelope" => {
                envelope_kind = Some(match value.as_str() {
                    "gaussian" => "gaussian",
                    "bump" => "bump",
                    other => {
                        return Err(cfg_err(format!(
                            "[packet] envelope: expected `gaussian` or `bump`, got `{other}`"
                        )))
                    }
                })
            }
            "sigma" => sigma = Some(parse_f64("packet", key, value)?),
            "radius" => radius = Some(parse_f64("packet", key, value)?),
            "center" => center = parse_vec2("packet", key, value)?,
            "boost" => boost = parse_vec2("packet", key, value)?,
            other => return Err(cfg_err(format!("unknown key `{other}` in [packet]"))),
        }
    }
    let envelope = match envelope_kind.ok_or_else(|| cfg_err("[packet] missing key `envelope`"))? {
        "gaussian" => {
            if radius.is_some() {
                return Err(cfg_err(
                    "[packet] key `radius` does not apply to the gaussian envelope",
                ));
            }
            Envelope::Gaussian {
                sigma: sigma.ok_or_else(|| cfg_err("[packet] gaussian envelope requires `sigma`"))?,
            }
        }
        _ => {
            if sigma.is_some() {
                return Err(cfg_err(
                    "[packet] key `sigma` does not apply to the bump envelope",
                ));
            }
            Envelope::Bump {
                radius: radius.ok_or_else(|| cfg_err("[packet] bump envelope requires `radius`"))?,
            }
        }
    };
    Ok(PacketSpec {
        envelope,
        center,
        boost,
    })
}

fn parse_potential(entries: &[(String, String)]) -> Result<ScalarPotential> {
    let mut short_terms = Vec::new();
    let mut long_terms = Vec::new();
    for (key, value) in entries {
        let (prefix, rest) = if let Some(rest) = key.strip_prefix("short") {
            ("short", rest)
        } else if let Some(rest) = key.strip_prefix("long") {
            ("long", rest)
        } else {
            return Err(cfg_err(format!("unknown key `{key}` in [potential]")));
        };
        if !rest.is_empty() && rest.parse::<usize>().is_err() {
            return Err(cfg_err(format!("unknown key `{key}` in [potential]")));
        }
        let term = parse_term("potential", key, value)?;
        if prefix == "short" {
            short_terms.push(term);
        } else {
            long_terms.push(term);
        }
    }
    if short_terms.is_empty() && long_terms.is_empty() {
        return Err(cfg_err(
            "[potential] must declare at least one `shortN` or `longN` term",
        ));
    }
    Ok(ScalarPotential {
        short_terms,
        long_terms,
    })
}

fn parse_scattering(entries: &[(String, String)]) -> Result<ScatterSection> {
    let mut s = ScatterSection::default();
    for (key, value) in entries {
        match key.as_str() {
            "pbar" => s.p_bar = parse_vec2("scattering", key, value)?,
            "r_initial" => s.r_initial = parse_f64("scattering", key, value)?,
            "epsilon" => s.epsilon = parse_f64("scattering", key, value)?,
            "r_max" => s.r_max = parse_f64("scattering", key, value)?,
            "margin" => s.margin = parse_f64("scattering", key, value)?,
            "operator" => {
                s.operator = match value.as_str() {
                    "plain" => Operator::Plain,
                    "dollard" => Operator::Dollard,
                    other => {
                        return Err(cfg_err(format!(
                            "[scattering] operator: expected `plain` or `dollard`, got `{other}`"
                        )))
                    }
                }
            }
            "scan" => {
                s.scan = match value.as_str() {
                    "nr" => ScanKind::Nr,
                    "rel" => ScanKind::Rel,
                    "long" => ScanKind::Long,
                    other => {
                        return Err(cfg_err(format!(
                            "[scattering] scan: expected `nr`, `rel`, or `long`, got `{other}`"
                        )))
                    }
                }
            }
            "magnitudes" => {
                s.magnitudes = value
                    .split_whitespace()
                    .map(|v| parse_f64("scattering", key, v))
                    .collect::<Result<Vec<f64>>>()?;
                if s.magnitudes.is_empty() {
                    return Err(cfg_err("[scattering] magnitudes must be nonempty"));
                }
            }
            other => return Err(cfg_err(format!("unknown key `{other}` in [scattering]"))),
        }
    }
    Ok(s)
}

fn parse_evolution(entries: &[(String, String)]) -> Result<EvolutionSection> {
    let mut e = EvolutionSection::default();
    for (key, value) in entries {
        match key.as_str() {
            "dt" => {
                e.dt = if value == "auto" {
                    None
                } else {
                    Some(parse_f64("evolution", key, value)?)
                }
            }
            "t_total" => e.t_total = parse_f64("evolution", key, value)?,
            "margin" => e.margin = parse_f64("evolution", key, value)?,
            other => return Err(cfg_err(format!("unknown key `{other}` in [evolution]"))),
        }
    }
    Ok(e)
}

fn parse_reconstruction(entries: &[(String, String)]) -> Result<ReconSection> {
    let mut r = ReconSection::default();
    for (key, value) in entries {
        match key.as_str() {
            "source" => {
                r.source = match value.as_str() {
                    "oracle" => SinogramSource::Oracle,
                    "physics" => SinogramSource::Physics,
                    other => {
                        return Err(cfg_err(format!(
                            "[reconstruction] source: expected `oracle` or `physics`, got `{other}`"
                        )))
                    }
                }
            }
            "angles" => r.angles = parse_usize("reconstruction", key, value)?,
            "offsets" => r.offsets = parse_usize("reconstruction", key, value)?,
            "s_max" => r.s_max = parse_f64("reconstruction", key, value)?,
            "m" => r.m = parse_usize("reconstruction", key, value)?,
            "half_extent" => r.half_extent = parse_f64("reconstruction", key, value)?,
            "roi" => r.roi = parse_f64("reconstruction", key, value)?,
            "mask_threshold" => r.mask_threshold = parse_f64("reconstruction", key, value)?,
            other => return Err(cfg_err(format!("unknown key `{other}` in [reconstruction]"))),
        }
    }
    Ok(r)
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    // Grid validity was checked on construction. Re-validate the remaining
    // module invariants that the sections promise.
    if !cfg.potential.short_terms.is_empty() {
        let report = classify_potential(&cfg.potential.short_part());
        if !report.is_short {
            return Err(cfg_err(
                "[potential] declared short part fails the short-range integral check",
            ));
        }
    }
    if !cfg.potential.long_terms.is_empty() {
        let report = classify_potential(&cfg.potential.long_part());
        if !report.long_ok {
            return Err(cfg_err(
                "[potential] declared long part fails the derivative-decay checks",
            ));
        }
    }
    if !(cfg.scattering.r_initial > 0.0) || cfg.scattering.r_max < cfg.scattering.r_initial {
        return Err(cfg_err(
            "[scattering] requires 0 < r_initial <= r_max",
        ));
    }
    if !(cfg.scattering.epsilon > 0.0) {
        return Err(cfg_err("[scattering] epsilon must be positive"));
    }
    if let Some(dt) = cfg.evolution.dt {
        if !(dt > 0.0) {
            return Err(cfg_err("[evolution] dt must be positive or `auto`"));
        }
    }
    if !(cfg.evolution.t_total >= 0.0) {
        return Err(cfg_err("[evolution] t_total must be nonnegative"));
    }
    let r = &cfg.reconstruction;
    if r.angles < 2 || r.offsets < 3 || r.offsets % 2 == 0 {
        return Err(cfg_err(
            "[reconstruction] requires angles >= 2 and odd offsets >= 3",
        ));
    }
    if !(r.s_max > 0.0) || !(r.half_extent > 0.0) || !(r.roi > 0.0) || r.roi > r.s_max {
        return Err(cfg_err(
            "[reconstruction] requires 0 < roi <= s_max and positive half_extent",
        ));
    }
    if r.m < 2 {
        return Err(cfg_err("[reconstruction] m must be at least 2"));
    }
    Ok(())
}

/// Canonical serialization: `parse_config(serialize_config(c)) == c`.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("seed = {}\n\n", cfg.seed));
    out.push_str(&format!(
        "[grid]\nn = {}\nlength = {}\n\n",
        cfg.grid.n(),
        cfg.grid.length()
    ));
    let kind = match cfg.disp.kind {
        DispersionKind::NonRelativistic => "nonrelativistic",
        DispersionKind::Relativistic => "relativistic",
    };
    out.push_str(&format!(
        "[dispersion]\nkind = {kind}\nmass = {}\n\n",
        cfg.disp.mass
    ));
    out.push_str("[packet]\n");
    match cfg.packet.envelope {
        Envelope::Gaussian { sigma } => {
            out.push_str(&format!("envelope = gaussian\nsigma = {sigma}\n"))
        }
        Envelope::Bump { radius } => out.push_str(&format!("envelope = bump\nradius = {radius}\n")),
    }
    out.push_str(&format!(
        "center = {} {}\nboost = {} {}\n\n",
        cfg.packet.center[0], cfg.packet.center[1], cfg.packet.boost[0], cfg.packet.boost[1]
    ));
    out.push_str("[potential]\n");
    for (i, t) in cfg.potential.short_terms.iter().enumerate() {
        out.push_str(&format!("short{} = {}\n", i + 1, term_to_string(t)));
    }
    for (i, t) in cfg.potential.long_terms.iter().enumerate() {
        out.push_str(&format!("long{} = {}\n", i + 1, term_to_string(t)));
    }
    out.push('\n');
    let s = &cfg.scattering;
    let operator = match s.operator {
        Operator::Plain => "plain",
        Operator::Dollard => "dollard",
    };
    let scan = match s.scan {
        ScanKind::Nr => "nr",
        ScanKind::Rel => "rel",
        ScanKind::Long => "long",
    };
    let mags: Vec<String> = s.magnitudes.iter().map(|m| m.to_string()).collect();
    out.push_str(&format!(
        "[scattering]\npbar = {} {}\nr_initial = {}\nepsilon = {}\nr_max = {}\nmargin = {}\n\
         operator = {operator}\nscan = {scan}\nmagnitudes = {}\n\n",
        s.p_bar[0],
        s.p_bar[1],
        s.r_initial,
        s.epsilon,
        s.r_max,
        s.margin,
        mags.join(" ")
    ));
    let e = &cfg.evolution;
    let dt = e
        .dt
        .map(|d| d.to_string())
        .unwrap_or_else(|| "auto".to_string());
    out.push_str(&format!(
        "[evolution]\ndt = {dt}\nt_total = {}\nmargin = {}\n\n",
        e.t_total, e.margin
    ));
    let r = &cfg.reconstruction;
    let source = match r.source {
        SinogramSource::Oracle => "oracle",
        SinogramSource::Physics => "physics",
    };
    out.push_str(&format!(
        "[reconstruction]\nsource = {source}\nangles = {}\noffsets = {}\ns_max = {}\nm = {}\n\
         half_extent = {}\nroi = {}\nmask_threshold = {}\n",
        r.angles, r.offsets, r.s_max, r.m, r.half_extent, r.roi, r.mask_threshold
    ));
    out
}
