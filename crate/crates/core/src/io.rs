//! File formats: QF2D1 binary complex fields, sinogram CSV, and scan CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

use num_complex::Complex64;

use crate::error::HescError;
use crate::grid::{Grid2D, Repr, WavePacket};
use crate::recon::{Provenance, ReconField, Sinogram};
use crate::scattering::ScanEntry;
use crate::Result;

const MAGIC: &str = "QF2D1";

fn repr_name(repr: Repr) -> &'static str {
    match repr {
        Repr::Position => "position",
        Repr::Momentum => "momentum",
    }
}

/// Write a complex field in QF2D1 format: ASCII header
/// `QF2D1 n=<n> L=<float> kind=<position|momentum>\n`, then `n*n`
/// little-endian float64 (re, im) pairs in row-major position-axis order.
pub fn write_field(packet: &WavePacket, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(
        w,
        "{MAGIC} n={} L={} kind={}\n",
        packet.grid.n(),
        packet.grid.length(),
        repr_name(packet.repr)
    )?;
    for v in &packet.samples {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a QF2D1 field written by [`write_field`]; bit-exact round trip.
pub fn read_field(path: &Path) -> Result<WavePacket> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let header = header.trim_end_matches('\n');
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(HescError::Format(format!(
            "bad magic in field file {}",
            path.display()
        )));
    }
    let mut n: Option<usize> = None;
    let mut length: Option<f64> = None;
    let mut repr: Option<Repr> = None;
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| HescError::Format(format!("malformed header token `{part}`")))?;
        match key {
            "n" => {
                n = Some(value.parse().map_err(|_| {
                    HescError::Format(format!("invalid n `{value}`"))
                })?)
            }
            "L" => {
                length = Some(value.parse().map_err(|_| {
                    HescError::Format(format!("invalid L `{value}`"))
                })?)
            }
            "kind" => {
                repr = Some(match value {
                    "position" => Repr::Position,
                    "momentum" => Repr::Momentum,
                    other => {
                        return Err(HescError::Format(format!("unknown kind `{other}`")))
                    }
                })
            }
            other => return Err(HescError::Format(format!("unknown header key `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| HescError::Format("header missing n".into()))?;
    let length = length.ok_or_else(|| HescError::Format("header missing L".into()))?;
    let repr = repr.ok_or_else(|| HescError::Format("header missing kind".into()))?;
    let grid = Grid2D::new(n, length)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * n * 16 {
        return Err(HescError::Format(format!(
            "expected {} payload bytes, found {}",
            n * n * 16,
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok(WavePacket {
        grid,
        repr,
        samples,
    })
}

/// Write a reconstruction raster as QF2D1 (kind=position, imaginary parts
/// zero) with `L` the full raster extent.
pub fn write_recon_field(field: &ReconField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(
        w,
        "{MAGIC} n={} L={} kind=position\n",
        field.m,
        2.0 * field.half_extent
    )?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
        w.write_all(&0.0_f64.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Write a sinogram as CSV with the commented header
/// `# sinogram K=<K> J=<J> smax=<float> provenance=<oracle|physics>`
/// and rows `k,angle_rad,s,value,flag`.
pub fn write_sinogram(sino: &Sinogram, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "# sinogram K={} J={} smax={} provenance={}",
        sino.n_angles(),
        sino.n_offsets(),
        sino.s_max(),
        sino.provenance
    )?;
    writeln!(w, "# columns: k,angle_rad,s,value,flag (s and value in natural units)")?;
    for k in 0..sino.n_angles() {
        for jj in 0..sino.n_offsets() {
            let idx = k * sino.n_offsets() + jj;
            writeln!(
                w,
                "{},{},{},{},{}",
                k,
                sino.angles[k],
                sino.offsets[jj],
                sino.values[idx],
                sino.flags[idx] as u8
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a sinogram CSV written by [`write_sinogram`].
pub fn read_sinogram(path: &Path) -> Result<Sinogram> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| HescError::Format("empty sinogram file".into()))??;
    let header = header
        .strip_prefix("# sinogram ")
        .ok_or_else(|| HescError::Format("missing sinogram header".into()))?;
    let mut k = 0usize;
    let mut j = 0usize;
    let mut s_max = 0.0;
    let mut provenance = Provenance::Oracle;
    for token in header.split(' ') {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| HescError::Format(format!("malformed header token `{token}`")))?;
        match key {
            "K" => k = value.parse().map_err(|_| HescError::Format("bad K".into()))?,
            "J" => j = value.parse().map_err(|_| HescError::Format("bad J".into()))?,
            "smax" => {
                s_max = value
                    .parse()
                    .map_err(|_| HescError::Format("bad smax".into()))?
            }
            "provenance" => {
                provenance = match value {
                    "oracle" => Provenance::Oracle,
                    "physics" => Provenance::Physics,
                    other => {
                        return Err(HescError::Format(format!(
                            "unknown provenance `{other}`"
                        )))
                    }
                }
            }
            other => return Err(HescError::Format(format!("unknown header key `{other}`"))),
        }
    }
    if k == 0 || j < 2 {
        return Err(HescError::Format("sinogram header has degenerate K or J".into()));
    }
    let mut sino = Sinogram::new(k, j, s_max, provenance);
    let mut row = 0usize;
    for line in lines {
        let line = line?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(HescError::Format(format!("bad sinogram row `{line}`")));
        }
        if row >= k * j {
            return Err(HescError::Format("too many sinogram rows".into()));
        }
        sino.values[row] = fields[3]
            .parse()
            .map_err(|_| HescError::Format("bad value field".into()))?;
        sino.flags[row] = fields[4] == "1";
        row += 1;
    }
    if row != k * j {
        return Err(HescError::Format(format!(
            "expected {} sinogram rows, found {row}",
            k * j
        )));
    }
    Ok(sino)
}

/// Write a limit-scan as plotting CSV with columns
/// `pbar,value_re,value_im,oracle_re,oracle_im,delta`.
pub fn write_scan(entries: &[ScanEntry], path: &Path) -> Result<()> {
    if entries.is_empty() {
        return Err(HescError::ConfigError("empty scan".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "# columns: pbar (momentum, natural units), value_re, value_im, oracle_re, oracle_im, delta (all dimensionless amplitudes)"
    )?;
    writeln!(w, "pbar,value_re,value_im,oracle_re,oracle_im,delta")?;
    for e in entries {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.p_bar_mag, e.value.re, e.value.im, e.oracle.re, e.oracle.im, e.delta
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Write converged scattering elements as CSV rows
/// `pbar_x,pbar_y,re_element,im_element,converged,r_final`.
pub fn write_scatter_results(entries: &[ScanEntry], path: &Path) -> Result<()> {
    if entries.is_empty() {
        return Err(HescError::ConfigError("empty result set".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# columns: pbar_x, pbar_y (momentum), re_element, im_element, converged (0/1), r_final (time window)")?;
    writeln!(w, "pbar_x,pbar_y,re_element,im_element,converged,r_final")?;
    for e in entries {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.p_bar[0],
            e.p_bar[1],
            e.value.re,
            e.value.im,
            e.converged as u8,
            e.r_final
        )?;
    }
    w.flush()?;
    Ok(())
}
