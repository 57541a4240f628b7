//! Zeeman-splitting sweeps and the calibration/fit pipeline.
//!
//! A [`DeltaScan`] is a stack of rendered spectra over an ascending list of
//! Zeeman splittings. On top of it sit peak extraction, the avoided-crossing
//! gap measurement, the three-stage calibration (trap frequencies from the
//! far-detuned window, the Zeeman scale from the spin-flip line, coupling
//! strengths from the inter-dressed-state line at resonance), the
//! simplified-vs-full model comparison, and a weighted line fit for tuning
//! slopes.

use alloc::vec::Vec;
use core::fmt;

use crate::model::{self, ModelError, ModelParams, SimplifiedParams, TWO_PI};
use crate::qops::{self, QopsError};
use crate::spectra::{
    self, EmissionOperator, SpectatorMode, SpectraError, Spectrum, ThermalState, TransitionOptions,
};

pub mod fit;
pub mod noise;

pub use fit::{fit_gaussian_sum, fit_line, FitResult, GaussianPeakInit, LineFit};
pub use noise::SplitMix64;

pub const RAD_PER_KHZ: f64 = TWO_PI * 1e3;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    Model(ModelError),
    Spectra(SpectraError),
    Qops(QopsError),
    EmptyDeltaList,
    DeltasNotAscending,
    FewPoints { needed: usize, got: usize },
    InvalidThreshold,
    NoInitialPeaks,
    PeakNotFound { near_khz: f64 },
    BranchesNotFound,
    ScanDoesNotSpanCrossing,
    WindowOverlapsCrossing { omega: f64 },
    MissingFieldMetadata,
    DegenerateAbscissae,
    CouplingNotSet,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::Model(e) => write!(f, "{e}"),
            AnalysisError::Spectra(e) => write!(f, "{e}"),
            AnalysisError::Qops(e) => write!(f, "{e}"),
            AnalysisError::EmptyDeltaList => write!(f, "delta list is empty"),
            AnalysisError::DeltasNotAscending => write!(f, "delta list is not strictly ascending"),
            AnalysisError::FewPoints { needed, got } => {
                write!(f, "too few usable points: need {needed}, got {got}")
            }
            AnalysisError::InvalidThreshold => {
                write!(f, "peak thresholds must be in (0, 1] with positive separation")
            }
            AnalysisError::NoInitialPeaks => write!(f, "at least one initial peak is required"),
            AnalysisError::PeakNotFound { near_khz } => {
                write!(f, "no peak found near {near_khz} kHz")
            }
            AnalysisError::BranchesNotFound => {
                write!(f, "both dressed branches not found in window")
            }
            AnalysisError::ScanDoesNotSpanCrossing => {
                write!(f, "scan does not bracket the gap minimum")
            }
            AnalysisError::WindowOverlapsCrossing { omega } => {
                write!(f, "window overlaps the avoided crossing at {omega} rad/s")
            }
            AnalysisError::MissingFieldMetadata => {
                write!(f, "scan carries no offset-field metadata")
            }
            AnalysisError::DegenerateAbscissae => write!(f, "abscissae are degenerate"),
            AnalysisError::CouplingNotSet => write!(f, "coupling is zero; nothing to fit"),
        }
    }
}

impl From<ModelError> for AnalysisError {
    fn from(e: ModelError) -> Self {
        AnalysisError::Model(e)
    }
}
impl From<SpectraError> for AnalysisError {
    fn from(e: SpectraError) -> Self {
        AnalysisError::Spectra(e)
    }
}
impl From<QopsError> for AnalysisError {
    fn from(e: QopsError) -> Self {
        AnalysisError::Qops(e)
    }
}

/// Everything the spectrum synthesis needs besides the Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectrumSettings {
    /// frequency grid, kHz, strictly ascending
    pub grid: Vec<f64>,
    /// Gaussian peak sigma, kHz
    pub linewidth_khz: f64,
    pub mean_n_x: f64,
    pub mean_n_y: f64,
    pub mean_n_z: f64,
    pub eta_x: f64,
    pub eta_y: f64,
    /// axial Lamb-Dicke parameter; the z sideband pair appears only if set
    pub eta_z: Option<f64>,
    /// fraction of spin population promoted to m = -F+1 (0 = fully pumped)
    pub spin_excited_fraction: f64,
    pub include_carrier: bool,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        SpectrumSettings {
            grid: spectra::uniform_grid(-350.0, 350.0, 0.25).expect("static grid"),
            linewidth_khz: 2.0,
            mean_n_x: 0.5,
            mean_n_y: 0.5,
            mean_n_z: 0.5,
            eta_x: 0.1,
            eta_y: 0.15,
            eta_z: None,
            spin_excited_fraction: 0.0,
            include_carrier: true,
        }
    }
}

/// Rectangular stack of spectra over an ascending Zeeman-splitting grid.
#[derive(Debug, Clone)]
pub struct DeltaScan {
    /// rad/s, strictly ascending
    pub deltas: Vec<f64>,
    pub spectra: Vec<Spectrum>,
    pub params: ModelParams,
    /// optional per-point offset field, gauss
    pub b0_gauss: Option<Vec<f64>>,
}

fn check_deltas(deltas: &[f64]) -> Result<(), AnalysisError> {
    if deltas.is_empty() {
        return Err(AnalysisError::EmptyDeltaList);
    }
    if deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::DeltasNotAscending);
    }
    Ok(())
}

/// Sweep the full two-mode model over `deltas`: for each value build the
/// Hamiltonian, diagonalize, tabulate transitions, and render on the shared
/// grid. Deterministic and independent per point.
pub fn scan_delta(
    params: &ModelParams,
    deltas: &[f64],
    settings: &SpectrumSettings,
) -> Result<DeltaScan, AnalysisError> {
    check_deltas(deltas)?;
    params.validate()?;
    let spin_pop =
        ThermalState::spin_with_excited_fraction(params.f, settings.spin_excited_fraction);
    let thermal = ThermalState::new(settings.mean_n_x, settings.mean_n_y, spin_pop, params.n_max)?;
    let v = spectra::emission_operator(
        settings.eta_x,
        settings.eta_y,
        settings.eta_z,
        params.n_max,
        params.f,
        params.f + 1.0,
    )?;
    let opts = TransitionOptions {
        include_carrier: settings.include_carrier,
        spectator: settings.eta_z.map(|eta| SpectatorMode {
            omega: params.omega_z,
            eta,
            mean_n: settings.mean_n_z,
            n_max: params.n_max,
        }),
    };
    let mut spectra_out = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let p = ModelParams { delta, ..params.clone() };
        let h = model::build_two_mode(&p)?;
        let es = qops::eigh(&h)?;
        let table = spectra::transitions(&es, &thermal, &v, &opts)?;
        spectra_out.push(spectra::render(&table, &settings.grid, settings.linewidth_khz)?);
    }
    Ok(DeltaScan {
        deltas: deltas.to_vec(),
        spectra: spectra_out,
        params: params.clone(),
        b0_gauss: None,
    })
}

/// Sweep the 4-level simplified model the same way.
pub fn scan_delta_simplified(
    params: &ModelParams,
    deltas: &[f64],
    settings: &SpectrumSettings,
) -> Result<DeltaScan, AnalysisError> {
    check_deltas(deltas)?;
    params.validate()?;
    let populations = spectra::simplified_populations(
        settings.mean_n_x,
        settings.mean_n_y,
        settings.spin_excited_fraction,
        params.n_max,
    )?;
    let v4 = spectra::simplified_emission(settings.eta_x, settings.eta_y, params.f)?;
    let v = EmissionOperator {
        eta_x: settings.eta_x,
        eta_y: settings.eta_y,
        eta_z: None,
        spin_part: v4.clone(),
        matrix: v4,
    };
    let thermal = ThermalState {
        mean_n_x: settings.mean_n_x,
        mean_n_y: settings.mean_n_y,
        spin_population: Vec::new(),
        populations,
    };
    let opts = TransitionOptions { include_carrier: settings.include_carrier, spectator: None };
    let mut spectra_out = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let sp = SimplifiedParams { delta, ..SimplifiedParams::from_model(params) };
        let h = model::build_simplified(&sp)?;
        let es = qops::eigh(&h)?;
        let table = spectra::transitions(&es, &thermal, &v, &opts)?;
        spectra_out.push(spectra::render(&table, &settings.grid, settings.linewidth_khz)?);
    }
    Ok(DeltaScan {
        deltas: deltas.to_vec(),
        spectra: spectra_out,
        params: params.clone(),
        b0_gauss: None,
    })
}

/// Additive white Gaussian noise on every PSD sample of the scan,
/// deterministic in (sigma, seed). Spectra are visited in index order.
pub fn apply_noise(scan: &mut DeltaScan, sigma: f64, seed: u64) {
    let mut rng = SplitMix64::new(seed);
    for sp in &mut scan.spectra {
        for v in &mut sp.psd {
            *v += sigma * rng.next_normal();
        }
    }
}

/// Tallest PSD sample across the whole scan; the reference for relative
/// noise amplitudes.
pub fn scan_max_psd(scan: &DeltaScan) -> f64 {
    scan.spectra.iter().map(|s| s.max_psd()).fold(0.0, f64::max)
}

/// One extracted peak, kHz units.
#[derive(Debug, Clone, Copy)]
pub struct Peak {
    pub center_khz: f64,
    pub height: f64,
    pub width_khz: f64,
    pub center_sigma_khz: f64,
}

/// Local maxima above `min_height_fraction` of the global maximum, greedily
/// separated by at least `min_separation_khz`, each refined by a local
/// Gaussian fit. Sorted by center. An empty list is a valid outcome.
pub fn find_peaks(
    spectrum: &Spectrum,
    min_height_fraction: f64,
    min_separation_khz: f64,
) -> Result<Vec<Peak>, AnalysisError> {
    if !(min_height_fraction > 0.0 && min_height_fraction <= 1.0) || !(min_separation_khz > 0.0) {
        return Err(AnalysisError::InvalidThreshold);
    }
    let psd = &spectrum.psd;
    let freq = &spectrum.freq_khz;
    let n = psd.len();
    let global_max = spectrum.max_psd();
    if global_max <= 0.0 {
        return Ok(Vec::new());
    }
    let threshold = min_height_fraction * global_max;

    let mut candidates: Vec<usize> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if psd[i] >= threshold && psd[i] > psd[i - 1] && psd[i] >= psd[i + 1] {
            candidates.push(i);
        }
    }
    candidates.sort_by(|&a, &b| psd[b].partial_cmp(&psd[a]).expect("finite PSD").then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for idx in candidates {
        if kept.iter().all(|&k| libm::fabs(freq[idx] - freq[k]) >= min_separation_khz) {
            kept.push(idx);
        }
    }
    let mut peaks: Vec<Peak> = kept.into_iter().map(|idx| refine_peak(spectrum, idx)).collect();
    peaks.sort_by(|a, b| a.center_khz.partial_cmp(&b.center_khz).expect("finite center"));
    Ok(peaks)
}

/// Local single-Gaussian fit around grid index `idx`; falls back to a
/// three-point parabola if the fit does not converge.
fn refine_peak(spectrum: &Spectrum, idx: usize) -> Peak {
    let freq = &spectrum.freq_khz;
    let psd = &spectrum.psd;
    let half = 2.5 * spectrum.linewidth_khz;
    let lo = freq.partition_point(|&f| f < freq[idx] - half);
    let hi = freq.partition_point(|&f| f <= freq[idx] + half);
    let window_x = &freq[lo..hi];
    let window_y = &psd[lo..hi];
    if window_x.len() >= 5 {
        let init = GaussianPeakInit {
            center: freq[idx],
            height: psd[idx],
            width: spectrum.linewidth_khz,
        };
        if let Ok(fit) = fit_gaussian_sum(window_x, window_y, &[init], 60) {
            let (a, c, w) = fit.peak(0);
            let (_, sc, _) = fit.peak_sigmas(0);
            if fit.converged && a > 0.0 && c >= window_x[0] && c <= window_x[window_x.len() - 1] {
                return Peak { center_khz: c, height: a, width_khz: w, center_sigma_khz: sc };
            }
        }
    }
    // parabolic fallback through the apex samples
    let (c, h) = if idx > 0 && idx + 1 < freq.len() {
        parabola_vertex(freq[idx - 1], psd[idx - 1], freq[idx], psd[idx], freq[idx + 1], psd[idx + 1])
            .unwrap_or((freq[idx], psd[idx]))
    } else {
        (freq[idx], psd[idx])
    };
    let step = if freq.len() > 1 { freq[1] - freq[0] } else { 1.0 };
    Peak {
        center_khz: c,
        height: h,
        width_khz: spectrum.linewidth_khz,
        center_sigma_khz: step / 2.0,
    }
}

/// Vertex of the downward parabola through three points; None if degenerate
/// or opening upward.
fn parabola_vertex(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> Option<(f64, f64)> {
    let d0 = (x1 - x0) * (x2 - x0);
    let d1 = (x1 - x0) * (x2 - x1);
    let d2 = (x2 - x0) * (x2 - x1);
    if d0 == 0.0 || d1 == 0.0 || d2 == 0.0 {
        return None;
    }
    let a = y0 / d0 - y1 / d1 + y2 / d2;
    let b = -y0 * (x1 + x2) / d0 + y1 * (x0 + x2) / d1 - y2 * (x0 + x1) / d2;
    if a >= 0.0 {
        return None;
    }
    let xv = -b / (2.0 * a);
    let c = y0 * x1 * x2 / d0 - y1 * x0 * x2 / d1 + y2 * x0 * x1 / d2;
    let yv = (a * xv + b) * xv + c;
    Some((xv, yv))
}

/// Measure the tallest peak within `half_window_khz` of `center_khz` by a
/// windowed Gaussian fit. The apex must be interior to the window.
pub fn measure_peak_near(
    spectrum: &Spectrum,
    center_khz: f64,
    half_window_khz: f64,
) -> Result<Peak, AnalysisError> {
    let freq = &spectrum.freq_khz;
    let psd = &spectrum.psd;
    let lo = freq.partition_point(|&f| f < center_khz - half_window_khz);
    let hi = freq.partition_point(|&f| f <= center_khz + half_window_khz);
    if hi.saturating_sub(lo) < 5 {
        return Err(AnalysisError::PeakNotFound { near_khz: center_khz });
    }
    let mut best = lo;
    for i in lo..hi {
        if psd[i] > psd[best] {
            best = i;
        }
    }
    if best == lo || best + 1 >= hi || psd[best] <= 0.0 {
        return Err(AnalysisError::PeakNotFound { near_khz: center_khz });
    }
    Ok(refine_peak(spectrum, best))
}

/// Measure the local maximum closest to `center_khz` within the window.
/// Robust against taller neighbours inside the window (satellite lines).
pub fn measure_peak_nearest(
    spectrum: &Spectrum,
    center_khz: f64,
    half_window_khz: f64,
) -> Result<Peak, AnalysisError> {
    let candidates = local_maxima_in_window(spectrum, center_khz, half_window_khz);
    candidates
        .into_iter()
        .min_by(|a, b| {
            libm::fabs(a.center_khz - center_khz)
                .partial_cmp(&libm::fabs(b.center_khz - center_khz))
                .expect("finite center")
        })
        .ok_or(AnalysisError::PeakNotFound { near_khz: center_khz })
}

/// All interior local maxima inside a window, refined; used by the ridge
/// association of the model comparison.
fn local_maxima_in_window(spectrum: &Spectrum, center_khz: f64, half_window_khz: f64) -> Vec<Peak> {
    let freq = &spectrum.freq_khz;
    let psd = &spectrum.psd;
    let lo = freq.partition_point(|&f| f < center_khz - half_window_khz).max(1);
    let hi = freq
        .partition_point(|&f| f <= center_khz + half_window_khz)
        .min(freq.len().saturating_sub(1));
    let mut out = Vec::new();
    for i in lo..hi {
        if psd[i] > psd[i - 1] && psd[i] >= psd[i + 1] && psd[i] > 0.0 {
            out.push(refine_peak(spectrum, i));
        }
    }
    out
}

/// Avoided-crossing gap: per scan point, the distance between the two
/// dressed-branch peaks inside `window_khz`; the minimum over the sweep is
/// located by parabolic interpolation through the three smallest samples.
/// Only scan points whose splitting lies inside the window are sampled:
/// the crossing sits at Delta = omega_i, which is inside the branch window
/// by construction, and far-detuned points carry thermal satellite pairs
/// that would masquerade as a small gap. Returns `(delta_star, gap)` in
/// rad/s.
pub fn min_gap(scan: &DeltaScan, window_khz: (f64, f64)) -> Result<(f64, f64), AnalysisError> {
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (k, spectrum) in scan.spectra.iter().enumerate() {
        let delta_khz = scan.deltas[k] / RAD_PER_KHZ;
        if delta_khz < window_khz.0 || delta_khz > window_khz.1 {
            continue;
        }
        let center = 0.5 * (window_khz.0 + window_khz.1);
        let half = 0.5 * (window_khz.1 - window_khz.0);
        let mut peaks = local_maxima_in_window(spectrum, center, half);
        if peaks.len() < 2 {
            continue;
        }
        peaks.sort_by(|a, b| b.height.partial_cmp(&a.height).expect("finite height"));
        let p1 = peaks[0];
        // the dressed branches straddle the window midpoint while satellite
        // lines hug the bright branch, so the partner is the tallest
        // maximum on the other side of the midpoint
        let p2 = match peaks[1..].iter().find(|p| {
            (p.center_khz - center) * (p1.center_khz - center) < 0.0
                && libm::fabs(p.center_khz - p1.center_khz) >= 2.0 * spectrum.linewidth_khz
        }) {
            Some(p) => *p,
            None => continue,
        };
        // both branches must be genuine, comparably tall peaks; far from the
        // crossing the faint branch sinks under weak satellite lines
        if p2.height < 0.05 * p1.height {
            continue;
        }
        let gap = libm::fabs(p1.center_khz - p2.center_khz);
        samples.push((scan.deltas[k], gap));
    }
    if samples.len() < 3 {
        return Err(AnalysisError::BranchesNotFound);
    }
    let mut imin = 0;
    for (i, s) in samples.iter().enumerate() {
        if s.1 < samples[imin].1 {
            imin = i;
        }
    }
    if imin == 0 || imin + 1 == samples.len() {
        return Err(AnalysisError::ScanDoesNotSpanCrossing);
    }
    let (dm, gm) = samples[imin - 1];
    let (d0, g0) = samples[imin];
    let (dp, gp) = samples[imin + 1];
    // interpolate the minimum of the gap curve; fall back to the smallest
    // sample when the three points are collinear
    let (delta_star, gap_min) = min_parabola(dm, gm, d0, g0, dp, gp).unwrap_or((d0, g0));
    Ok((delta_star, gap_min * RAD_PER_KHZ))
}

fn min_parabola(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> Option<(f64, f64)> {
    let d0 = (x1 - x0) * (x2 - x0);
    let d1 = (x1 - x0) * (x2 - x1);
    let d2 = (x2 - x0) * (x2 - x1);
    if d0 == 0.0 || d1 == 0.0 || d2 == 0.0 {
        return None;
    }
    let a = y0 / d0 - y1 / d1 + y2 / d2;
    if a <= 0.0 {
        return None;
    }
    let b = -y0 * (x1 + x2) / d0 + y1 * (x0 + x2) / d1 - y2 * (x0 + x1) / d2;
    let c = y0 * x1 * x2 / d0 - y1 * x0 * x2 / d1 + y2 * x0 * x1 / d2;
    let xv = -b / (2.0 * a);
    if xv < x0 || xv > x2 {
        return None;
    }
    Some((xv, (a * xv + b) * xv + c))
}

/// Trap frequencies with 1σ uncertainties, rad/s.
#[derive(Debug, Clone, Copy)]
pub struct TrapCalibration {
    pub omega_x: f64,
    pub omega_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub omega_z: Option<f64>,
    pub sigma_z: Option<f64>,
}

/// Trap frequencies from the positive motional sidebands in a far-detuned
/// window `window` (rad/s): per scan point the sideband near each nominal
/// frequency is fitted, then combined as a weighted mean with the scatter as
/// uncertainty. Errors out if the window touches an avoided crossing.
pub fn calibrate_traps(
    scan: &DeltaScan,
    window: (f64, f64),
) -> Result<TrapCalibration, AnalysisError> {
    let params = &scan.params;
    for &(omega, g) in &[(params.omega_x, params.g_x), (params.omega_y, params.g_y)] {
        if g > 0.0 {
            let guard = 2.0 * model::rabi_from_coupling(g);
            if omega >= window.0 - guard && omega <= window.1 + guard {
                return Err(AnalysisError::WindowOverlapsCrossing { omega });
            }
        }
    }
    let idx: Vec<usize> = (0..scan.deltas.len())
        .filter(|&k| scan.deltas[k] >= window.0 && scan.deltas[k] <= window.1)
        .collect();
    if idx.is_empty() {
        return Err(AnalysisError::FewPoints { needed: 1, got: 0 });
    }

    // a genuine motional sideband carries real weight; without a floor the
    // z fit would happily lock onto numerically tiny combination lines when
    // no z sideband was rendered at all
    let height_floor = 1e-4 * scan_max_psd(scan);
    let fit_mode = |nominal: f64| -> Result<(f64, f64), AnalysisError> {
        let mut centers: Vec<(f64, f64)> = Vec::new();
        for &k in &idx {
            let spectrum = &scan.spectra[k];
            let half = (6.0 * spectrum.linewidth_khz).max(10.0);
            match measure_peak_near(spectrum, nominal / RAD_PER_KHZ, half) {
                Ok(p) if p.height >= height_floor => {
                    centers.push((p.center_khz, p.center_sigma_khz.max(1e-6)))
                }
                _ => continue,
            }
        }
        // a trap sideband is splitting-independent: it must show up at (at
        // least) half the window points, unlike spin lines sweeping through
        if centers.is_empty() || 2 * centers.len() < idx.len() {
            return Err(AnalysisError::PeakNotFound { near_khz: nominal / RAD_PER_KHZ });
        }
        let sw: f64 = centers.iter().map(|&(_, s)| 1.0 / (s * s)).sum();
        let mean: f64 = centers.iter().map(|&(c, s)| c / (s * s)).sum::<f64>() / sw;
        let sigma = if centers.len() > 1 {
            let scatter: f64 =
                centers.iter().map(|&(c, s)| (c - mean) * (c - mean) / (s * s)).sum::<f64>();
            libm::sqrt(scatter / ((centers.len() - 1) as f64 * sw))
        } else {
            1.0 / libm::sqrt(sw)
        };
        Ok((mean * RAD_PER_KHZ, sigma * RAD_PER_KHZ))
    };

    let (omega_x, sigma_x) = fit_mode(params.omega_x)?;
    let (omega_y, sigma_y) = fit_mode(params.omega_y)?;
    let (omega_z, sigma_z) = match fit_mode(params.omega_z) {
        Ok((w, s)) => (Some(w), Some(s)),
        Err(_) => (None, None),
    };
    Ok(TrapCalibration { omega_x, omega_y, sigma_x, sigma_y, omega_z, sigma_z })
}

/// Zeeman calibration: scale (rad/s per gauss) and offset (rad/s) of the
/// spin-flip line position against the offset field.
#[derive(Debug, Clone, Copy)]
pub struct ZeemanCalibration {
    pub scale: f64,
    pub offset: f64,
    pub sigma_scale: f64,
    pub sigma_offset: f64,
}

/// Fit the spin-flip line (position = Delta on the positive side) against
/// the recorded offset fields, for scan points inside `window` (rad/s on the
/// nominal Delta axis). Needs at least three usable points.
pub fn calibrate_zeeman(
    scan: &DeltaScan,
    window: (f64, f64),
) -> Result<ZeemanCalibration, AnalysisError> {
    let b0 = scan.b0_gauss.as_ref().ok_or(AnalysisError::MissingFieldMetadata)?;
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    for k in 0..scan.deltas.len() {
        let delta = scan.deltas[k];
        if delta < window.0 || delta > window.1 {
            continue;
        }
        let spectrum = &scan.spectra[k];
        if let Ok(p) = measure_peak_near(spectrum, delta / RAD_PER_KHZ, 15.0) {
            pts.push((
                b0[k],
                p.center_khz * RAD_PER_KHZ,
                p.center_sigma_khz.max(1e-6) * RAD_PER_KHZ,
            ));
        }
    }
    if pts.len() < 3 {
        return Err(AnalysisError::FewPoints { needed: 3, got: pts.len() });
    }
    let line = fit_line(&pts)?;
    // the windowed peak fits underestimate their centers' uncertainties
    // when the local model is imperfect; rescale by the reduced chi-square
    // (inflate only) so the reported sigmas match the actual scatter
    let chi2_red = line.residual_norm * line.residual_norm / (pts.len() - 2) as f64;
    let inflate = libm::sqrt(chi2_red.max(1.0));
    Ok(ZeemanCalibration {
        scale: line.slope,
        offset: line.intercept,
        sigma_scale: line.slope_sigma * inflate,
        sigma_offset: line.intercept_sigma * inflate,
    })
}

/// Coupling strengths from the inter-dressed-state line at resonance.
#[derive(Debug, Clone, Copy)]
pub struct CouplingFit {
    pub g_x: f64,
    pub g_y: f64,
    pub sigma_gx: f64,
    pub sigma_gy: f64,
    /// Zeeman splitting at which each gap minimum was found, rad/s
    pub delta_star_x: f64,
    pub delta_star_y: f64,
}

/// Fit the positive inter-dressed-state peak near each resonance: its
/// position sqrt((Delta-omega)^2 + Omega^2) is minimal and equal to Omega_i
/// at Delta = omega_i; g_i = Omega_i / 2.
pub fn fit_couplings(scan: &DeltaScan) -> Result<CouplingFit, AnalysisError> {
    let params = &scan.params;
    let (g_y, sy, dy) = fit_one_coupling(scan, params.omega_y, params.g_y)?;
    let (g_x, sx, dx) = fit_one_coupling(scan, params.omega_x, params.g_x)?;
    Ok(CouplingFit { g_x, g_y, sigma_gx: sx, sigma_gy: sy, delta_star_x: dx, delta_star_y: dy })
}

fn fit_one_coupling(
    scan: &DeltaScan,
    omega_nom: f64,
    g_nom: f64,
) -> Result<(f64, f64, f64), AnalysisError> {
    if g_nom <= 0.0 {
        return Err(AnalysisError::CouplingNotSet);
    }
    let rabi_nom = model::rabi_from_coupling(g_nom);
    let mut samples: Vec<(f64, f64, f64)> = Vec::new(); // (delta, pos_khz, sigma)
    for k in 0..scan.deltas.len() {
        let delta = scan.deltas[k];
        let detuning = delta - omega_nom;
        if libm::fabs(detuning) > 0.8 * rabi_nom {
            continue;
        }
        let expect = libm::sqrt(detuning * detuning + rabi_nom * rabi_nom) / RAD_PER_KHZ;
        let spectrum = &scan.spectra[k];
        // wide enough to catch the dressed gap sitting a few kHz below the
        // bare 2g guess, narrow enough to exclude the sidebands; nearest-
        // to-expected selection keeps multi-quanta satellites out
        let half = (4.0 * spectrum.linewidth_khz)
            .max(3.5)
            .min(0.3 * rabi_nom / RAD_PER_KHZ);
        if let Ok(p) = measure_peak_nearest(spectrum, expect, half) {
            samples.push((delta, p.center_khz, p.center_sigma_khz));
        }
    }
    if samples.len() < 3 {
        return Err(AnalysisError::PeakNotFound { near_khz: rabi_nom / RAD_PER_KHZ });
    }
    let mut imin = 0;
    for (i, s) in samples.iter().enumerate() {
        if s.1 < samples[imin].1 {
            imin = i;
        }
    }
    if imin == 0 || imin + 1 == samples.len() {
        return Err(AnalysisError::ScanDoesNotSpanCrossing);
    }
    let (dm, pm, _) = samples[imin - 1];
    let (d0, p0, s0) = samples[imin];
    let (dp, pp, _) = samples[imin + 1];
    let (delta_star, rabi_khz) = min_parabola(dm, pm, d0, p0, dp, pp).unwrap_or((d0, p0));
    let sigma = s0.max(1e-6) * RAD_PER_KHZ;
    Ok((0.5 * rabi_khz * RAD_PER_KHZ, 0.5 * sigma, delta_star))
}

/// Aggregated calibration output. The USC figures of merit are recomputed
/// from the members on demand, never stored.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub traps: TrapCalibration,
    pub couplings: CouplingFit,
    pub zeeman: Option<ZeemanCalibration>,
}

impl CalibrationResult {
    pub fn gx_over_wx(&self) -> f64 {
        self.couplings.g_x / self.traps.omega_x
    }

    pub fn gy_over_wy(&self) -> f64 {
        self.couplings.g_y / self.traps.omega_y
    }

    pub fn rabi_x_over_wx(&self) -> f64 {
        model::rabi_from_coupling(self.couplings.g_x) / self.traps.omega_x
    }

    pub fn rabi_y_over_wy(&self) -> f64 {
        model::rabi_from_coupling(self.couplings.g_y) / self.traps.omega_y
    }
}

/// Comparison of one simplified-model transition line against the nearest
/// full-model spectral ridge at one scan point.
#[derive(Debug, Clone, Copy)]
pub struct RidgePoint {
    pub delta: f64,
    pub line_khz: f64,
    /// None: association failed (no ridge inside the gate) or skipped
    pub ridge_khz: Option<f64>,
    /// the line is inside the unresolvable near-carrier region and was
    /// skipped by design
    pub skipped: bool,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// one track per followed transition, in the order
    /// [E1-E0, E2-E0, E3-E0, E2-E1]
    pub tracks: Vec<Vec<RidgePoint>>,
    pub max_deviation_khz: f64,
    pub n_associated: usize,
    pub n_failed: usize,
    pub n_skipped: usize,
}

/// The four low-energy transition lines of the simplified model at one
/// Zeeman splitting, identified by bare-state character rather than energy
/// order (the spin-flip level dives below the ground state at small
/// splittings, and near a crossing the dressed pair shares its character):
/// the spin-flip, y-sideband, and x-sideband lines from the ground state,
/// plus the inter-dressed line of whichever crossing is closer. Signed,
/// excitation positive; the inter-dressed line is reported positive.
fn simplified_lines(params: &ModelParams, delta: f64) -> Result<[f64; 4], AnalysisError> {
    let sp = SimplifiedParams { delta, ..SimplifiedParams::from_model(params) };
    let es = qops::eigh(&model::build_simplified(&sp)?)?;
    let u = &es.states;
    let overlap = |bare: usize, col: usize| u[(bare, col)].norm_sqr();
    let argmax = |bare: usize, taken: &[usize]| -> usize {
        let mut best = usize::MAX;
        let mut best_w = -1.0;
        for col in 0..4 {
            if taken.contains(&col) {
                continue;
            }
            let w = overlap(bare, col);
            if w > best_w {
                best_w = w;
                best = col;
            }
        }
        best
    };
    let g = argmax(0, &[]);
    let e = argmax(1, &[g]);
    let x = argmax(2, &[g, e]);
    let y = argmax(3, &[g, e, x]);
    let e_line = es.energies[e] - es.energies[g];
    let y_line = es.energies[y] - es.energies[g];
    let x_line = es.energies[x] - es.energies[g];
    let ey = libm::fabs(es.energies[e] - es.energies[y]);
    let ex = libm::fabs(es.energies[e] - es.energies[x]);
    Ok([e_line, y_line, x_line, ey.min(ex)])
}

/// Compare the four low-energy transition lines of the simplified model
/// against the peak ridges of a full-model scan. Ridges are associated by
/// nearest local maximum within `gate_khz`, ties broken toward the previous
/// point's ridge (branch continuity, swept from the far-detuned end where
/// the lines are well separated); lines closer to the carrier than 2.5
/// linewidths are skipped as unresolvable. The full-model spectra are
/// rendered without the carrier.
pub fn compare_models(
    params: &ModelParams,
    deltas: &[f64],
    settings: &SpectrumSettings,
    gate_khz: f64,
) -> Result<ComparisonReport, AnalysisError> {
    let mut cfg = settings.clone();
    cfg.include_carrier = false;
    let scan = scan_delta(params, deltas, &cfg)?;

    let mut tracks: Vec<Vec<RidgePoint>> = alloc::vec![Vec::new(); 4];
    let mut prev_ridge: [Option<f64>; 4] = [None; 4];
    let min_resolvable = 2.5 * cfg.linewidth_khz;

    for k in (0..scan.deltas.len()).rev() {
        let delta = scan.deltas[k];
        let lines = simplified_lines(params, delta)?;
        // the inter-dressed line is a real spectral feature only near the
        // crossings; elsewhere it is faint and overlaps the strong motional
        // sidebands, so it is skipped rather than mis-associated
        let near_crossing = [(params.omega_y, params.g_y), (params.omega_x, params.g_x)]
            .iter()
            .any(|&(w, g)| {
                g > 0.0 && libm::fabs(delta - w) <= 1.2 * model::rabi_from_coupling(g)
            });
        for (t, &line) in lines.iter().enumerate() {
            let line_khz = line / RAD_PER_KHZ;
            if libm::fabs(line_khz) < min_resolvable || (t == 3 && !near_crossing) {
                tracks[t].push(RidgePoint { delta, line_khz, ridge_khz: None, skipped: true });
                prev_ridge[t] = None;
                continue;
            }
            let candidates = local_maxima_in_window(&scan.spectra[k], line_khz, gate_khz);
            let reference = prev_ridge[t].unwrap_or(line_khz);
            let best = candidates.into_iter().min_by(|a, b| {
                libm::fabs(a.center_khz - reference)
                    .partial_cmp(&libm::fabs(b.center_khz - reference))
                    .expect("finite center")
            });
            match best {
                Some(p) => {
                    tracks[t].push(RidgePoint {
                        delta,
                        line_khz,
                        ridge_khz: Some(p.center_khz),
                        skipped: false,
                    });
                    prev_ridge[t] = Some(p.center_khz);
                }
                None => {
                    tracks[t].push(RidgePoint { delta, line_khz, ridge_khz: None, skipped: false });
                    prev_ridge[t] = None;
                }
            }
        }
    }
    for track in &mut tracks {
        track.reverse();
    }

    let mut max_dev = 0.0_f64;
    let mut n_assoc = 0;
    let mut n_failed = 0;
    let mut n_skipped = 0;
    for track in &tracks {
        for pt in track {
            match (pt.ridge_khz, pt.skipped) {
                (Some(r), _) => {
                    n_assoc += 1;
                    max_dev = max_dev.max(libm::fabs(r - pt.line_khz));
                }
                (None, true) => n_skipped += 1,
                (None, false) => n_failed += 1,
            }
        }
    }
    Ok(ComparisonReport {
        tracks,
        max_deviation_khz: max_dev,
        n_associated: n_assoc,
        n_failed,
        n_skipped,
    })
}

/// Ascending uniform Zeeman grid in rad/s from kHz endpoints.
pub fn delta_grid_khz(
    start_khz: f64,
    stop_khz: f64,
    step_khz: f64,
) -> Result<Vec<f64>, AnalysisError> {
    if !(step_khz > 0.0) || stop_khz < start_khz {
        return Err(AnalysisError::DeltasNotAscending);
    }
    let n = libm::floor((stop_khz - start_khz) / step_khz + 0.5) as usize + 1;
    Ok((0..n).map(|k| (start_khz + k as f64 * step_khz) * RAD_PER_KHZ).collect())
}
