//! Deterministic CSV reading and writing.
//!
//! All files carry a mandatory header row, `.` decimal separator, LF line
//! endings, and floats at 9 significant digits — enough to reproduce every
//! result below its fit tolerance while keeping reruns byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use spinmotion::analysis::{DeltaScan, Peak, RAD_PER_KHZ};
use spinmotion::model::ModelParams;
use spinmotion::spectra::Spectrum;

/// Fixed 9-significant-digit float format.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> io::Result<()> {
    let mut out = String::from("freq_khz,psd\n");
    for (f, p) in spectrum.freq_khz.iter().zip(&spectrum.psd) {
        let _ = writeln!(out, "{},{}", fmt_f64(*f), fmt_f64(*p));
    }
    fs::write(path, out)
}

/// Long-format scan map: one row per (delta, frequency) sample.
pub fn write_scan_csv(path: &Path, scan: &DeltaScan) -> io::Result<()> {
    let mut out = String::from("delta_khz,freq_khz,psd\n");
    for (k, spectrum) in scan.spectra.iter().enumerate() {
        let delta_khz = scan.deltas[k] / RAD_PER_KHZ;
        for (f, p) in spectrum.freq_khz.iter().zip(&spectrum.psd) {
            let _ = writeln!(out, "{},{},{}", fmt_f64(delta_khz), fmt_f64(*f), fmt_f64(*p));
        }
    }
    fs::write(path, out)
}

pub fn write_peaks_csv(path: &Path, rows: &[(f64, Peak)]) -> io::Result<()> {
    let mut out = String::from("delta_khz,center_khz,center_err_khz,height,width_khz\n");
    for (delta_khz, p) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(*delta_khz),
            fmt_f64(p.center_khz),
            fmt_f64(p.center_sigma_khz),
            fmt_f64(p.height),
            fmt_f64(p.width_khz),
        );
    }
    fs::write(path, out)
}

pub fn write_tuneout_points_csv(path: &Path, pts: &[(f64, f64, f64)]) -> io::Result<()> {
    let mut out = String::from("power_uw,omega_khz,omega_err_khz\n");
    for (p, w, e) in pts {
        let _ = writeln!(out, "{},{},{}", fmt_f64(*p), fmt_f64(*w), fmt_f64(*e));
    }
    fs::write(path, out)
}

fn bad_data(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

fn parse_field(line_no: usize, s: &str) -> io::Result<f64> {
    s.parse::<f64>().map_err(|_| bad_data(format!("line {line_no}: `{s}` is not a number")))
}

/// Read a long-format scan map back into a `DeltaScan`. The delta blocks
/// must be contiguous, strictly ascending, and share one frequency grid.
pub fn read_scan_csv(
    path: &Path,
    params: &ModelParams,
    linewidth_khz: f64,
) -> io::Result<DeltaScan> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "delta_khz,freq_khz,psd")) => {}
        other => {
            return Err(bad_data(format!(
                "expected header `delta_khz,freq_khz,psd`, got {:?}",
                other.map(|(_, l)| l)
            )))
        }
    }
    let mut deltas: Vec<f64> = Vec::new();
    let mut spectra: Vec<Spectrum> = Vec::new();
    let mut cur_freq: Vec<f64> = Vec::new();
    let mut cur_psd: Vec<f64> = Vec::new();
    let mut cur_delta: Option<f64> = None;

    let mut flush = |delta: f64, freq: &mut Vec<f64>, psd: &mut Vec<f64>| -> io::Result<()> {
        if let Some(prev) = deltas.last() {
            if delta * RAD_PER_KHZ <= *prev {
                return Err(bad_data("delta blocks are not strictly ascending".into()));
            }
        }
        if let Some(first) = spectra.first() {
            if first.freq_khz != *freq {
                return Err(bad_data("scan blocks do not share one frequency grid".into()));
            }
        }
        deltas.push(delta * RAD_PER_KHZ);
        spectra.push(Spectrum {
            freq_khz: std::mem::take(freq),
            psd: std::mem::take(psd),
            linewidth_khz,
        });
        Ok(())
    };

    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (d, f, p) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(d), Some(f), Some(p), None) => (d, f, p),
            _ => return Err(bad_data(format!("line {}: expected 3 fields", i + 1))),
        };
        let d = parse_field(i + 1, d)?;
        let f = parse_field(i + 1, f)?;
        let p = parse_field(i + 1, p)?;
        match cur_delta {
            Some(prev) if prev == d => {}
            Some(prev) => {
                flush(prev, &mut cur_freq, &mut cur_psd)?;
                cur_delta = Some(d);
            }
            None => cur_delta = Some(d),
        }
        cur_freq.push(f);
        cur_psd.push(p);
    }
    if let Some(prev) = cur_delta {
        flush(prev, &mut cur_freq, &mut cur_psd)?;
    }
    if deltas.is_empty() {
        return Err(bad_data("scan file contains no samples".into()));
    }
    Ok(DeltaScan { deltas, spectra, params: params.clone(), b0_gauss: None })
}

/// Read tune-out points `power_uw,omega_khz,omega_err_khz`.
pub fn read_tuneout_points_csv(path: &Path) -> io::Result<Vec<(f64, f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "power_uw,omega_khz,omega_err_khz")) => {}
        other => {
            return Err(bad_data(format!(
                "expected header `power_uw,omega_khz,omega_err_khz`, got {:?}",
                other.map(|(_, l)| l)
            )))
        }
    }
    let mut pts = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad_data(format!("line {}: expected 3 fields", i + 1)));
        }
        pts.push((
            parse_field(i + 1, fields[0])?,
            parse_field(i + 1, fields[1])?,
            parse_field(i + 1, fields[2])?,
        ));
    }
    Ok(pts)
}
