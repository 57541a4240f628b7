//! Fluorescence spectrum synthesis.
//!
//! From an eigensystem, a thermal initial state, and a Lamb-Dicke emission
//! operator, builds the table of transition peaks and renders it as a
//! Gaussian-broadened power spectral density.
//!
//! Axis and sign convention: the spectrum axis is the heterodyne beat
//! frequency oriented as in the measured spectra, so a transition that
//! excites the atom (E_final > E_initial) produces a peak at positive
//! frequency. A record for initial state i and final state j therefore
//! carries omega = E_j - E_i, and its amplitude is the initial-state thermal
//! population times the squared transition element, p_i |<j|V|i>|^2. For a
//! cold atom the positive-frequency sidebands are the tall ones, and the
//! negative-to-positive height ratio of a sideband pair is n/(1+n).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

use crate::qops::{self, matrix::CMat, EigenSystem, QopsError};

#[derive(Debug, Clone, PartialEq)]
pub enum SpectraError {
    Qops(QopsError),
    NegativeMeanOccupation(f64),
    NegativeLambDicke(f64),
    /// the emission operator requires the cycling transition F' = F + 1
    InvalidExcitedSpin { f: f64, f_excited: f64 },
    DimensionMismatch { expected: usize, got: usize },
    EmptyGrid,
    GridNotAscending,
    NonPositiveLinewidth(f64),
    InvalidSpinPopulation,
}

impl fmt::Display for SpectraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectraError::Qops(e) => write!(f, "{e}"),
            SpectraError::NegativeMeanOccupation(v) => {
                write!(f, "mean occupation {v} is negative")
            }
            SpectraError::NegativeLambDicke(v) => {
                write!(f, "Lamb-Dicke parameter {v} is negative")
            }
            SpectraError::InvalidExcitedSpin { f: ff, f_excited } => {
                write!(f, "excited spin F' = {f_excited} is not F + 1 = {}", ff + 1.0)
            }
            SpectraError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            SpectraError::EmptyGrid => write!(f, "frequency grid is empty"),
            SpectraError::GridNotAscending => write!(f, "frequency grid is not strictly ascending"),
            SpectraError::NonPositiveLinewidth(v) => write!(f, "linewidth {v} kHz is not positive"),
            SpectraError::InvalidSpinPopulation => {
                write!(f, "spin population must be nonnegative with a positive sum")
            }
        }
    }
}

impl From<QopsError> for SpectraError {
    fn from(e: QopsError) -> Self {
        SpectraError::Qops(e)
    }
}

/// Truncated geometric (thermal) occupation probabilities: p_n ∝ q^n with
/// q = mean_n / (1 + mean_n), renormalized over n < n_max.
pub fn thermal_populations(mean_n: f64, n_max: usize) -> Result<Vec<f64>, SpectraError> {
    if mean_n < 0.0 || !mean_n.is_finite() {
        return Err(SpectraError::NegativeMeanOccupation(mean_n));
    }
    let q = mean_n / (1.0 + mean_n);
    let mut p = Vec::with_capacity(n_max);
    let mut w = 1.0;
    let mut norm = 0.0;
    for _ in 0..n_max {
        p.push(w);
        norm += w;
        w *= q;
    }
    for v in &mut p {
        *v /= norm;
    }
    Ok(p)
}

/// Thermal initial state over the bare product basis mode_x ⊗ mode_y ⊗ spin.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub mean_n_x: f64,
    pub mean_n_y: f64,
    /// distribution over m = -F..F in basis order
    pub spin_population: Vec<f64>,
    /// derived per-bare-state populations, sum = 1
    pub populations: Vec<f64>,
}

impl ThermalState {
    pub fn new(
        mean_n_x: f64,
        mean_n_y: f64,
        spin_population: Vec<f64>,
        n_max: usize,
    ) -> Result<Self, SpectraError> {
        let sum: f64 = spin_population.iter().sum();
        if spin_population.is_empty() || spin_population.iter().any(|&p| p < 0.0) || sum <= 0.0 {
            return Err(SpectraError::InvalidSpinPopulation);
        }
        let px = thermal_populations(mean_n_x, n_max)?;
        let py = thermal_populations(mean_n_y, n_max)?;
        let dim_s = spin_population.len();
        let mut populations = Vec::with_capacity(n_max * n_max * dim_s);
        for &wx in &px {
            for &wy in &py {
                for &ws in &spin_population {
                    populations.push(wx * wy * ws / sum);
                }
            }
        }
        Ok(ThermalState { mean_n_x, mean_n_y, spin_population, populations })
    }

    /// All spin population in the stretched state m = -F.
    pub fn spin_ground(f: f64) -> Vec<f64> {
        let dim = (2.0 * f) as usize + 1;
        let mut p = vec![0.0; dim];
        p[0] = 1.0;
        p
    }

    /// Fraction `x` of the spin population promoted to m = -F + 1.
    pub fn spin_with_excited_fraction(f: f64, x: f64) -> Vec<f64> {
        let dim = (2.0 * f) as usize + 1;
        let mut p = vec![0.0; dim];
        p[0] = 1.0 - x;
        if dim > 1 {
            p[1] = x;
        }
        p
    }
}

/// Clebsch-Gordan amplitudes of the generalized lowering operator for
/// emission of a sigma-minus photon on the cycling transition F -> F' = F+1:
/// S- = sum_m c_m |F, m-1><F, m| with c_m = <F', m-1 | F, m; 1, -1>.
pub fn sigma_minus(f: f64, f_excited: f64) -> Result<CMat, SpectraError> {
    let spin = qops::spin_operators(f)?;
    if libm::fabs(f_excited - (f + 1.0)) > 1e-9 {
        return Err(SpectraError::InvalidExcitedSpin { f, f_excited });
    }
    let dim = spin.dim;
    let mut s = CMat::zeros(dim, dim);
    for k in 1..dim {
        let m = -f + k as f64;
        // <F+1, m-1 | F, m; 1, -1> = sqrt((F-m+1)(F-m+2) / ((2F+1)(2F+2)))
        let num = (f - m + 1.0) * (f - m + 2.0);
        let den = (2.0 * f + 1.0) * (2.0 * f + 2.0);
        s[(k - 1, k)] = Complex64::new(libm::sqrt(num / den), 0.0);
    }
    Ok(s)
}

/// Lamb-Dicke emission operator on mode_x ⊗ mode_y ⊗ spin:
///
///   V = (1 + eta_x (a_x† + a_x) + eta_y (a_y† + a_y)) ⊗ S- S-†
///
/// The axial mode never enters the matrix; when `eta_z` is set it is handled
/// analytically as an uncoupled spectator by [`transitions`].
#[derive(Debug, Clone)]
pub struct EmissionOperator {
    pub eta_x: f64,
    pub eta_y: f64,
    pub eta_z: Option<f64>,
    pub matrix: CMat,
    /// eta-independent part 1 ⊗ 1 ⊗ S- S-†, used for spectator sidebands
    pub spin_part: CMat,
}

pub fn emission_operator(
    eta_x: f64,
    eta_y: f64,
    eta_z: Option<f64>,
    n_max: usize,
    f: f64,
    f_excited: f64,
) -> Result<EmissionOperator, SpectraError> {
    for eta in [Some(eta_x), Some(eta_y), eta_z].into_iter().flatten() {
        if eta < 0.0 || !eta.is_finite() {
            return Err(SpectraError::NegativeLambDicke(eta));
        }
    }
    let mode = qops::mode_operators(n_max)?;
    let s = sigma_minus(f, f_excited)?;
    let ssd = s.mul(&s.adjoint());
    let i_mode = CMat::identity(n_max);
    let x = mode.a.add(&mode.adag);
    let mut motional = qops::tensor(&i_mode, &i_mode);
    motional = motional.add(&qops::tensor(&x, &i_mode).scale_re(eta_x));
    motional = motional.add(&qops::tensor(&i_mode, &x).scale_re(eta_y));
    let matrix = qops::tensor(&motional, &ssd);
    let spin_part = qops::tensor(&qops::tensor(&i_mode, &i_mode), &ssd);
    Ok(EmissionOperator { eta_x, eta_y, eta_z, matrix, spin_part })
}

/// Uncoupled spectator mode rendered into the transition table without
/// enlarging the Hilbert space.
#[derive(Debug, Clone, Copy)]
pub struct SpectatorMode {
    pub omega: f64,
    pub eta: f64,
    pub mean_n: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TransitionOptions {
    pub include_carrier: bool,
    pub spectator: Option<SpectatorMode>,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        TransitionOptions { include_carrier: true, spectator: None }
    }
}

/// One spectral line: signed axis position (rad/s), nonnegative amplitude,
/// and the bare-basis labels of the initial and final eigenstates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub omega: f64,
    pub amplitude: f64,
    pub initial_label: usize,
    pub final_label: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TransitionTable {
    pub records: Vec<TransitionRecord>,
}

impl TransitionTable {
    pub fn total_amplitude(&self) -> f64 {
        self.records.iter().map(|r| r.amplitude).sum()
    }
}

/// Build the transition table: the population of eigenstate |i> is the
/// thermal bare population folded with |<i|bare>|^2, and each ordered pair
/// (i, j) contributes amplitude p_i |<j|V|i>|^2 at omega = E_j - E_i.
pub fn transitions(
    es: &EigenSystem,
    thermal: &ThermalState,
    v: &EmissionOperator,
    opts: &TransitionOptions,
) -> Result<TransitionTable, SpectraError> {
    let dim = es.states.rows();
    if thermal.populations.len() != dim {
        return Err(SpectraError::DimensionMismatch {
            expected: dim,
            got: thermal.populations.len(),
        });
    }
    if v.matrix.rows() != dim {
        return Err(SpectraError::DimensionMismatch { expected: dim, got: v.matrix.rows() });
    }

    let u = &es.states;
    let udag = u.adjoint();
    // eigenstate populations
    let mut p_eig = vec![0.0; dim];
    for (b, &pb) in thermal.populations.iter().enumerate() {
        if pb == 0.0 {
            continue;
        }
        for i in 0..dim {
            p_eig[i] += pb * u[(b, i)].norm_sqr();
        }
    }
    // transition elements in the eigenbasis
    let w = udag.mul(&v.matrix.mul(u));

    // spectator sidebands require both the operator's eta_z and the mode data
    let spectator = match (v.eta_z, opts.spectator) {
        (Some(eta), Some(sp)) => Some(SpectatorMode { eta, ..sp }),
        _ => None,
    };
    let (t, w_up, w_down, omega_sp) = if let Some(sp) = spectator {
        let pz = thermal_populations(sp.mean_n, sp.n_max)?;
        let mut up = 0.0;
        let mut down = 0.0;
        for (n, &p) in pz.iter().enumerate() {
            if n + 1 < sp.n_max {
                up += p * (n as f64 + 1.0);
            }
            if n >= 1 {
                down += p * n as f64;
            }
        }
        let t = udag.mul(&v.spin_part.mul(u));
        (Some(t), sp.eta * sp.eta * up, sp.eta * sp.eta * down, sp.omega)
    } else {
        (None, 0.0, 0.0, 0.0)
    };

    let mut records = Vec::new();
    for i in 0..dim {
        let pi = p_eig[i];
        for j in 0..dim {
            let omega = es.energies[j] - es.energies[i];
            // dropping the carrier removes only the elastic line; spectator
            // satellites of i = j are inelastic and stay
            if i != j || opts.include_carrier {
                let fc = w[(j, i)].norm_sqr();
                records.push(TransitionRecord {
                    omega,
                    amplitude: pi * fc,
                    initial_label: es.labels[i],
                    final_label: es.labels[j],
                });
            }
            if let Some(t) = &t {
                let tc = t[(j, i)].norm_sqr();
                records.push(TransitionRecord {
                    omega: omega + omega_sp,
                    amplitude: pi * tc * w_up,
                    initial_label: es.labels[i],
                    final_label: es.labels[j],
                });
                records.push(TransitionRecord {
                    omega: omega - omega_sp,
                    amplitude: pi * tc * w_down,
                    initial_label: es.labels[i],
                    final_label: es.labels[j],
                });
            }
        }
    }
    Ok(TransitionTable { records })
}

/// Rendered power spectral density on a frequency grid in kHz (axis oriented
/// as described in the module docs).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freq_khz: Vec<f64>,
    pub psd: Vec<f64>,
    pub linewidth_khz: f64,
}

impl Spectrum {
    /// Trapezoid integral of the PSD over the grid.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for k in 1..self.freq_khz.len() {
            let dx = self.freq_khz[k] - self.freq_khz[k - 1];
            acc += 0.5 * dx * (self.psd[k] + self.psd[k - 1]);
        }
        acc
    }

    pub fn max_psd(&self) -> f64 {
        self.psd.iter().cloned().fold(0.0, f64::max)
    }
}

const RAD_PER_KHZ: f64 = crate::model::TWO_PI * 1e3;

/// Render the table as a sum of Gaussian peaks of standard deviation
/// `linewidth_khz`: PSD(f) = sum_k A_k exp(-(f - f_k)^2 / (2 sigma^2)).
pub fn render(
    table: &TransitionTable,
    freq_khz: &[f64],
    linewidth_khz: f64,
) -> Result<Spectrum, SpectraError> {
    if freq_khz.is_empty() {
        return Err(SpectraError::EmptyGrid);
    }
    if freq_khz.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectraError::GridNotAscending);
    }
    if linewidth_khz <= 0.0 || !linewidth_khz.is_finite() {
        return Err(SpectraError::NonPositiveLinewidth(linewidth_khz));
    }
    let sigma = linewidth_khz;
    let inv_two_sig2 = 1.0 / (2.0 * sigma * sigma);
    let window = 8.5 * sigma;
    let total: f64 = table.total_amplitude();
    let floor = 1e-14 * total;

    let mut psd = vec![0.0; freq_khz.len()];
    for rec in &table.records {
        if rec.amplitude <= floor {
            continue;
        }
        let center = rec.omega / RAD_PER_KHZ;
        let lo = freq_khz.partition_point(|&f| f < center - window);
        let hi = freq_khz.partition_point(|&f| f <= center + window);
        for k in lo..hi {
            let d = freq_khz[k] - center;
            psd[k] += rec.amplitude * libm::exp(-d * d * inv_two_sig2);
        }
    }
    Ok(Spectrum { freq_khz: freq_khz.to_vec(), psd, linewidth_khz })
}

/// Uniform grid in kHz, inclusive of the endpoint up to step rounding.
pub fn uniform_grid(f_min_khz: f64, f_max_khz: f64, step_khz: f64) -> Result<Vec<f64>, SpectraError> {
    if !(step_khz > 0.0) || !(f_max_khz > f_min_khz) {
        return Err(SpectraError::GridNotAscending);
    }
    let n = libm::floor((f_max_khz - f_min_khz) / step_khz + 0.5) as usize + 1;
    Ok((0..n).map(|k| f_min_khz + k as f64 * step_khz).collect())
}

/// Emission operator projected on the 4-level basis {g, e, x, y}; the
/// counterpart of [`emission_operator`] for the simplified model.
pub fn simplified_emission(eta_x: f64, eta_y: f64, f: f64) -> Result<CMat, SpectraError> {
    let s = sigma_minus(f, f + 1.0)?;
    let ssd = s.mul(&s.adjoint());
    let d0 = ssd[(0, 0)];
    let d1 = ssd[(1, 1)];
    let mut v = CMat::zeros(4, 4);
    v[(0, 0)] = d0;
    v[(1, 1)] = d1;
    v[(2, 2)] = d0;
    v[(3, 3)] = d0;
    v[(0, 2)] = d0 * eta_x;
    v[(2, 0)] = d0 * eta_x;
    v[(0, 3)] = d0 * eta_y;
    v[(3, 0)] = d0 * eta_y;
    Ok(v)
}

/// Thermal populations of the 4-level basis {g, e, x, y}, renormalized over
/// the kept states.
pub fn simplified_populations(
    mean_n_x: f64,
    mean_n_y: f64,
    spin_excited: f64,
    n_max: usize,
) -> Result<Vec<f64>, SpectraError> {
    let px = thermal_populations(mean_n_x, n_max)?;
    let py = thermal_populations(mean_n_y, n_max)?;
    let sg = 1.0 - spin_excited;
    let raw = [
        sg * px[0] * py[0],
        spin_excited * px[0] * py[0],
        sg * px[1] * py[0],
        sg * px[0] * py[1],
    ];
    let norm: f64 = raw.iter().sum();
    Ok(raw.iter().map(|v| v / norm).collect())
}
