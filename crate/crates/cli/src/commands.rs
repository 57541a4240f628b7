//! The five pipeline commands. Each is a pure function of (config, input
//! files, seed): identical inputs produce byte-identical output files.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use spinmotion::analysis::{
    self, apply_noise, calibrate_traps, calibrate_zeeman, compare_models, find_peaks,
    fit_couplings, fit_line, scan_delta, scan_max_psd, AnalysisError, CalibrationResult,
    DeltaScan, Peak, SplitMix64, RAD_PER_KHZ,
};
use spinmotion::model::rabi_from_coupling;

use crate::config::RunConfig;
use crate::csvio;
use crate::envelope::{envelope, Json};

#[derive(Debug)]
pub enum CmdError {
    /// invalid configuration or arguments (exit 2)
    Validation(String),
    /// fit pipeline failure or non-convergence (exit 3)
    Fit(String),
    /// file system failure (exit 4)
    Io(String),
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Validation(m) => write!(f, "validation error: {m}"),
            CmdError::Fit(m) => write!(f, "fit error: {m}"),
            CmdError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Validation(_) => 2,
            CmdError::Fit(_) => 3,
            CmdError::Io(_) => 4,
        }
    }
}

impl From<io::Error> for CmdError {
    fn from(e: io::Error) -> Self {
        CmdError::Io(e.to_string())
    }
}

fn fit_err(e: AnalysisError) -> CmdError {
    CmdError::Fit(e.to_string())
}

fn validation_err(e: AnalysisError) -> CmdError {
    CmdError::Validation(e.to_string())
}

/// Common knobs coming from the command line.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub threads: usize,
    pub no_carrier: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { out_dir: PathBuf::from("."), seed: None, threads: 1, no_carrier: false }
    }
}

impl RunOptions {
    fn seed(&self, cfg: &RunConfig) -> u64 {
        self.seed.unwrap_or(cfg.noise_seed)
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), CmdError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Build the scan for the configured Zeeman grid. The recorded delta axis is
/// the nominal (coil-calibration) one; the spectra are generated at
/// delta + zeeman.offset_khz, so a synthetic calibration offset survives the
/// round trip exactly like a real stray field would. Points are distributed
/// over worker threads and merged by index.
fn synthesize_scan(cfg: &RunConfig, threads: usize, include_carrier: bool) -> Result<DeltaScan, CmdError> {
    let params = cfg.model_params().map_err(|e| CmdError::Validation(e.to_string()))?;
    let nominal =
        analysis::delta_grid_khz(cfg.scan_start_khz, cfg.scan_stop_khz, cfg.scan_step_khz)
            .map_err(validation_err)?;
    let offset = cfg.zeeman_offset_khz * RAD_PER_KHZ;
    let true_deltas: Vec<f64> = nominal.iter().map(|d| d + offset).collect();
    let settings = cfg.spectrum_settings(include_carrier);

    let n_threads = threads.max(1).min(true_deltas.len().max(1));
    let scan = if n_threads == 1 {
        scan_delta(&params, &true_deltas, &settings).map_err(validation_err)?
    } else {
        // contiguous chunks, merged in index order: identical to sequential
        let chunk = true_deltas.len().div_ceil(n_threads);
        let pieces: Vec<Result<DeltaScan, AnalysisError>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk_deltas in true_deltas.chunks(chunk) {
                let params = &params;
                let settings = &settings;
                handles.push(scope.spawn(move || scan_delta(params, chunk_deltas, settings)));
            }
            handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
        });
        let mut merged: Option<DeltaScan> = None;
        for piece in pieces {
            let piece = piece.map_err(validation_err)?;
            match &mut merged {
                None => merged = Some(piece),
                Some(m) => {
                    m.deltas.extend_from_slice(&piece.deltas);
                    m.spectra.extend(piece.spectra);
                }
            }
        }
        merged.ok_or_else(|| CmdError::Validation("empty delta grid".into()))?
    };

    let mut scan = scan;
    scan.deltas = nominal;
    let nominal_scale = cfg.nominal_zeeman_scale();
    scan.b0_gauss = Some(scan.deltas.iter().map(|d| d / nominal_scale).collect());
    Ok(scan)
}

fn apply_configured_noise(scan: &mut DeltaScan, cfg: &RunConfig, seed: u64) {
    if cfg.noise_sigma_rel > 0.0 {
        let sigma = cfg.noise_sigma_rel * scan_max_psd(scan);
        apply_noise(scan, sigma, seed);
    }
}

/// The emission operator is a leading-order expansion in the Lamb-Dicke
/// parameters; values this large leave its regime of validity.
fn warn_large_lamb_dicke(cfg: &RunConfig) {
    for (name, eta) in [
        ("emission.eta_x", Some(cfg.eta_x)),
        ("emission.eta_y", Some(cfg.eta_y)),
        ("emission.eta_z", cfg.eta_z),
    ] {
        if let Some(eta) = eta {
            if eta > 0.3 {
                eprintln!("warning: {name} = {eta} is outside the Lamb-Dicke regime");
            }
        }
    }
}

/// `spectrum`: single-splitting spectrum at zeeman.delta_khz.
pub fn cmd_spectrum(cfg: &RunConfig, opts: &RunOptions) -> Result<(), CmdError> {
    ensure_out_dir(&opts.out_dir)?;
    warn_large_lamb_dicke(cfg);
    let params = cfg.model_params().map_err(|e| CmdError::Validation(e.to_string()))?;
    let settings = cfg.spectrum_settings(cfg.include_carrier && !opts.no_carrier);
    let deltas = [cfg.delta_khz * RAD_PER_KHZ];
    let mut scan =
        scan_delta(&params, &deltas, &settings).map_err(validation_err)?;
    let seed = opts.seed(cfg);
    apply_configured_noise(&mut scan, cfg, seed);
    csvio::write_spectrum_csv(&opts.out_dir.join("spectrum.csv"), &scan.spectra[0])?;
    Ok(())
}

/// `scan`: 2D map plus extracted peaks.
pub fn cmd_scan(cfg: &RunConfig, opts: &RunOptions) -> Result<(), CmdError> {
    ensure_out_dir(&opts.out_dir)?;
    warn_large_lamb_dicke(cfg);
    let include_carrier = cfg.include_carrier && !opts.no_carrier;
    let mut scan = synthesize_scan(cfg, opts.threads, include_carrier)?;
    let seed = opts.seed(cfg);
    apply_configured_noise(&mut scan, cfg, seed);
    csvio::write_scan_csv(&opts.out_dir.join("scan.csv"), &scan)?;

    let mut rows: Vec<(f64, Peak)> = Vec::new();
    for (k, spectrum) in scan.spectra.iter().enumerate() {
        let delta_khz = scan.deltas[k] / RAD_PER_KHZ;
        let peaks =
            find_peaks(spectrum, cfg.peak_min_height_fraction, cfg.peak_min_separation_khz)
                .map_err(fit_err)?;
        for p in peaks {
            rows.push((delta_khz, p));
        }
    }
    csvio::write_peaks_csv(&opts.out_dir.join("peaks.csv"), &rows)?;
    Ok(())
}

fn calibration_json(cal: &CalibrationResult) -> Json {
    let khz = |v: f64| Json::Float(v / RAD_PER_KHZ);
    let mut traps = Json::obj();
    traps.push("omega_x_khz", khz(cal.traps.omega_x));
    traps.push("omega_x_err_khz", khz(cal.traps.sigma_x));
    traps.push("omega_y_khz", khz(cal.traps.omega_y));
    traps.push("omega_y_err_khz", khz(cal.traps.sigma_y));
    traps.push("omega_z_khz", cal.traps.omega_z.map(khz).unwrap_or(Json::Null));
    traps.push("omega_z_err_khz", cal.traps.sigma_z.map(khz).unwrap_or(Json::Null));

    let mut couplings = Json::obj();
    couplings.push("g_x_khz", khz(cal.couplings.g_x));
    couplings.push("g_x_err_khz", khz(cal.couplings.sigma_gx));
    couplings.push("g_y_khz", khz(cal.couplings.g_y));
    couplings.push("g_y_err_khz", khz(cal.couplings.sigma_gy));
    couplings.push("rabi_x_khz", khz(rabi_from_coupling(cal.couplings.g_x)));
    couplings.push("rabi_y_khz", khz(rabi_from_coupling(cal.couplings.g_y)));
    couplings.push("delta_star_x_khz", khz(cal.couplings.delta_star_x));
    couplings.push("delta_star_y_khz", khz(cal.couplings.delta_star_y));

    let zeeman = match &cal.zeeman {
        Some(z) => {
            let mut o = Json::obj();
            o.push("scale_khz_per_gauss", khz(z.scale));
            o.push("scale_err_khz_per_gauss", khz(z.sigma_scale));
            o.push("offset_khz", khz(z.offset));
            o.push("offset_err_khz", khz(z.sigma_offset));
            o
        }
        None => Json::Null,
    };

    // figures of merit, recomputed from the members
    let mut ratios = Json::obj();
    ratios.push("g_x_over_omega_x", Json::Float(cal.gx_over_wx()));
    ratios.push("g_y_over_omega_y", Json::Float(cal.gy_over_wy()));
    ratios.push("rabi_x_over_omega_x", Json::Float(cal.rabi_x_over_wx()));
    ratios.push("rabi_y_over_omega_y", Json::Float(cal.rabi_y_over_wy()));

    let mut payload = Json::obj();
    payload.push("traps", traps);
    payload.push("couplings", couplings);
    payload.push("zeeman", zeeman);
    payload.push("ratios", ratios);
    payload
}

/// `fit`: full calibration pipeline on a scan file.
pub fn cmd_fit(cfg: &RunConfig, scan_path: &Path, opts: &RunOptions) -> Result<(), CmdError> {
    ensure_out_dir(&opts.out_dir)?;
    let params = cfg.model_params().map_err(|e| CmdError::Validation(e.to_string()))?;
    let mut scan = csvio::read_scan_csv(scan_path, &params, cfg.linewidth_khz)?;
    let nominal_scale = cfg.nominal_zeeman_scale();
    scan.b0_gauss = Some(scan.deltas.iter().map(|d| d / nominal_scale).collect());

    let trap_window =
        (cfg.trap_window_min_khz * RAD_PER_KHZ, cfg.trap_window_max_khz * RAD_PER_KHZ);
    let traps = calibrate_traps(&scan, trap_window).map_err(fit_err)?;
    let couplings = fit_couplings(&scan).map_err(fit_err)?;
    let zeeman_window =
        (cfg.zeeman_window_min_khz * RAD_PER_KHZ, cfg.zeeman_window_max_khz * RAD_PER_KHZ);
    let zeeman = calibrate_zeeman(&scan, zeeman_window).ok();

    let cal = CalibrationResult { traps, couplings, zeeman };
    let payload = calibration_json(&cal);
    let json = envelope(&cfg.hash(), opts.seed(cfg), payload);
    fs::write(opts.out_dir.join("calibration.json"), json.render())?;
    Ok(())
}

/// `compare`: simplified-vs-full transition lines over the scan grid.
pub fn cmd_compare(cfg: &RunConfig, opts: &RunOptions) -> Result<(), CmdError> {
    ensure_out_dir(&opts.out_dir)?;
    warn_large_lamb_dicke(cfg);
    let params = cfg.model_params().map_err(|e| CmdError::Validation(e.to_string()))?;
    let deltas = analysis::delta_grid_khz(cfg.scan_start_khz, cfg.scan_stop_khz, cfg.scan_step_khz)
        .map_err(validation_err)?;
    let settings = cfg.spectrum_settings(true);
    let report =
        compare_models(&params, &deltas, &settings, cfg.compare_gate_khz).map_err(fit_err)?;

    let mut out = String::from("delta_khz,track,line_khz,ridge_khz,deviation_khz,status\n");
    for (t, track) in report.tracks.iter().enumerate() {
        for pt in track {
            let delta_khz = pt.delta / RAD_PER_KHZ;
            let (ridge, dev, status) = match (pt.ridge_khz, pt.skipped) {
                (Some(r), _) => (
                    csvio::fmt_f64(r),
                    csvio::fmt_f64((r - pt.line_khz).abs()),
                    "ok",
                ),
                (None, true) => (String::new(), String::new(), "skipped"),
                (None, false) => (String::new(), String::new(), "failed"),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csvio::fmt_f64(delta_khz),
                t,
                csvio::fmt_f64(pt.line_khz),
                ridge,
                dev,
                status
            ));
        }
    }
    fs::write(opts.out_dir.join("compare.csv"), out)?;

    let mut payload = Json::obj();
    payload.push("max_deviation_khz", Json::Float(report.max_deviation_khz));
    payload.push("n_associated", Json::Int(report.n_associated as i64));
    payload.push("n_failed", Json::Int(report.n_failed as i64));
    payload.push("n_skipped", Json::Int(report.n_skipped as i64));
    let json = envelope(&cfg.hash(), opts.seed(cfg), payload);
    fs::write(opts.out_dir.join("compare_summary.json"), json.render())?;
    Ok(())
}

/// `tuneout`: weighted line fit of the Rabi splitting against tune-out
/// power, from a points file or from synthetic data.
pub fn cmd_tuneout(
    cfg: &RunConfig,
    points_path: Option<&Path>,
    opts: &RunOptions,
) -> Result<(), CmdError> {
    ensure_out_dir(&opts.out_dir)?;
    let seed = opts.seed(cfg);
    let pts: Vec<(f64, f64, f64)> = match points_path {
        Some(path) => csvio::read_tuneout_points_csv(path)?,
        None => {
            // synthetic line: omega(P) = intercept + slope * P, plus noise
            if !(cfg.tuneout_power_step_uw > 0.0)
                || cfg.tuneout_power_max_uw < cfg.tuneout_power_min_uw
            {
                return Err(CmdError::Validation("tuneout power grid is empty".into()));
            }
            let mut rng = SplitMix64::new(seed);
            let n = ((cfg.tuneout_power_max_uw - cfg.tuneout_power_min_uw)
                / cfg.tuneout_power_step_uw
                + 0.5)
                .floor() as usize
                + 1;
            let sigma = cfg.tuneout_noise_sigma_khz;
            let pts: Vec<(f64, f64, f64)> = (0..n)
                .map(|k| {
                    let p = cfg.tuneout_power_min_uw + k as f64 * cfg.tuneout_power_step_uw;
                    let omega = cfg.tuneout_intercept_khz
                        + cfg.tuneout_slope_hz_per_uw * 1e-3 * p
                        + sigma * rng.next_normal();
                    (p, omega, sigma.max(1e-9))
                })
                .collect();
            csvio::write_tuneout_points_csv(&opts.out_dir.join("tuneout_points.csv"), &pts)?;
            pts
        }
    };

    let kept: Vec<(f64, f64, f64)> = match cfg.tuneout_exclude_above_uw {
        Some(cut) => pts.iter().cloned().filter(|&(p, _, _)| p <= cut).collect(),
        None => pts.clone(),
    };
    let fit = fit_line(&kept).map_err(fit_err)?;

    let mut payload = Json::obj();
    payload.push("slope_hz_per_uw", Json::Float(fit.slope * 1e3));
    payload.push("slope_err_hz_per_uw", Json::Float(fit.slope_sigma * 1e3));
    payload.push("intercept_khz", Json::Float(fit.intercept));
    payload.push("intercept_err_khz", Json::Float(fit.intercept_sigma));
    payload.push("n_points_used", Json::Int(kept.len() as i64));
    payload.push("n_points_total", Json::Int(pts.len() as i64));
    payload.push(
        "excluded_above_uw",
        cfg.tuneout_exclude_above_uw.map(Json::Float).unwrap_or(Json::Null),
    );
    let json = envelope(&cfg.hash(), seed, payload);
    fs::write(opts.out_dir.join("tuneout.json"), json.render())?;
    Ok(())
}
