//! Physical constants, parameter mappings, and Hamiltonian builders.
//!
//! All Hamiltonians are returned divided by ħ, i.e. as angular-frequency
//! matrices in rad/s. The spin quantization axis is the offset-field axis;
//! spin matrices are diagonal along it (`fz`), and the gradient axis
//! component enters as `fx = (F+ + F-)/2` in that basis. No explicit 3D
//! rotation machinery is carried.

use core::fmt;
use num_complex::Complex64;

use crate::qops::{self, matrix::CMat, ModeAlgebra, QopsError, SpinAlgebra};

pub const TWO_PI: f64 = core::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    Qops(QopsError),
    /// magnetic field must be nonnegative
    NegativeField(f64),
    /// frequency must be strictly positive
    NonPositiveFrequency(f64),
    /// frequency must be nonnegative
    NegativeFrequency(f64),
    NegativeCoupling(f64),
    /// constants must be strictly positive (g_F may carry either sign)
    InvalidConstants,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Qops(e) => write!(f, "{e}"),
            ModelError::NegativeField(v) => write!(f, "magnetic field {v} G is negative"),
            ModelError::NonPositiveFrequency(v) => write!(f, "frequency {v} rad/s is not positive"),
            ModelError::NegativeFrequency(v) => write!(f, "frequency {v} rad/s is negative"),
            ModelError::NegativeCoupling(v) => write!(f, "coupling {v} rad/s is negative"),
            ModelError::InvalidConstants => write!(f, "physical constants must be positive"),
        }
    }
}

impl From<QopsError> for ModelError {
    fn from(e: QopsError) -> Self {
        ModelError::Qops(e)
    }
}

/// Physical constants. Defaults are for the cesium 6S1/2, F = 4 ground
/// state: g_F = +1/4, M = 2.20695e-25 kg, and mu_B/hbar = 2π x 1.3996 MHz/G.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// reduced Planck constant, J*s
    pub hbar: f64,
    /// Bohr magneton, J/G
    pub mu_b: f64,
    /// atomic mass, kg
    pub mass: f64,
    /// hyperfine Lande factor (dimensionless, sign allowed)
    pub g_f: f64,
}

pub const HBAR: f64 = 1.054_571_817e-34;
/// mu_B / hbar in rad/s per gauss (2π x 1.3996 MHz/G)
pub const MU_B_OVER_HBAR: f64 = TWO_PI * 1.3996e6;
/// cesium-133 mass, kg
pub const CESIUM_MASS: f64 = 2.20695e-25;

impl PhysicalConstants {
    pub fn cesium() -> Self {
        PhysicalConstants { hbar: HBAR, mu_b: MU_B_OVER_HBAR * HBAR, mass: CESIUM_MASS, g_f: 0.25 }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hbar > 0.0 && self.mu_b > 0.0 && self.mass > 0.0 && self.g_f.is_finite() {
            Ok(())
        } else {
            Err(ModelError::InvalidConstants)
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants::cesium()
    }
}

/// Model parameters. Frequencies and couplings are angular (rad/s);
/// `n_max` is the per-mode Fock truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// spin quantum number (half-integer)
    pub f: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    /// uncoupled spectator mode; never enters Hamiltonians but is available
    /// to the spectrum synthesis for the third sideband pair
    pub omega_z: f64,
    /// Zeeman splitting between adjacent m states, rad/s
    pub delta: f64,
    pub g_x: f64,
    pub g_y: f64,
    pub n_max: usize,
    /// offset field, gauss (metadata; `delta` is authoritative)
    pub b0: Option<f64>,
    /// fictitious-field gradient, gauss/m (metadata)
    pub b_y: Option<f64>,
}

impl Default for ModelParams {
    /// Baseline experimental parameter set used throughout the examples and
    /// acceptance data: trap frequencies 2π x {149, 93, 243} kHz, couplings
    /// 2π x {18, 17.5} kHz, F = 4, five motional states per mode.
    fn default() -> Self {
        ModelParams {
            f: 4.0,
            omega_x: TWO_PI * 149e3,
            omega_y: TWO_PI * 93e3,
            omega_z: TWO_PI * 243e3,
            delta: 0.0,
            g_x: TWO_PI * 18e3,
            g_y: TWO_PI * 17.5e3,
            n_max: 5,
            b0: None,
            b_y: None,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        qops::spin_operators(self.f).map(|_| ())?;
        qops::mode_operators(self.n_max).map(|_| ())?;
        for &w in &[self.omega_x, self.omega_y, self.omega_z, self.delta] {
            if w < 0.0 || !w.is_finite() {
                return Err(ModelError::NegativeFrequency(w));
            }
        }
        for &g in &[self.g_x, self.g_y] {
            if g < 0.0 || !g.is_finite() {
                return Err(ModelError::NegativeCoupling(g));
            }
        }
        Ok(())
    }

    /// Derive `delta` from an offset field, keeping the invariant
    /// delta = g_F mu_B B0 / hbar.
    pub fn with_offset_field(
        mut self,
        b0: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self, ModelError> {
        self.delta = zeeman_splitting(b0, consts)?;
        self.b0 = Some(b0);
        Ok(self)
    }

    pub fn spin_dim(&self) -> usize {
        (2.0 * self.f) as usize + 1
    }
}

/// Parameters of the 4-level reduction: bare states {g, e, x, y} with Rabi
/// frequencies Omega_i = 2 g_i on the e-x and e-y transitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedParams {
    pub delta: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub rabi_x: f64,
    pub rabi_y: f64,
}

impl SimplifiedParams {
    pub fn from_model(p: &ModelParams) -> Self {
        SimplifiedParams {
            delta: p.delta,
            omega_x: p.omega_x,
            omega_y: p.omega_y,
            rabi_x: rabi_from_coupling(p.g_x),
            rabi_y: rabi_from_coupling(p.g_y),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for &v in &[self.delta, self.omega_x, self.omega_y, self.rabi_x, self.rabi_y] {
            if v < 0.0 || !v.is_finite() {
                return Err(ModelError::NegativeFrequency(v));
            }
        }
        Ok(())
    }
}

/// Zeeman splitting Delta = g_F mu_B B0 / hbar for a nonnegative offset
/// field in gauss.
pub fn zeeman_splitting(b0: f64, consts: &PhysicalConstants) -> Result<f64, ModelError> {
    consts.validate()?;
    if b0 < 0.0 || !b0.is_finite() {
        return Err(ModelError::NegativeField(b0));
    }
    Ok(consts.g_f * consts.mu_b * b0 / consts.hbar)
}

/// Harmonic-oscillator ground-state size y0 = sqrt(hbar / (2 M omega)).
pub fn oscillator_length(omega: f64, consts: &PhysicalConstants) -> Result<f64, ModelError> {
    consts.validate()?;
    if omega <= 0.0 || !omega.is_finite() {
        return Err(ModelError::NonPositiveFrequency(omega));
    }
    Ok(libm::sqrt(consts.hbar / (2.0 * consts.mass * omega)))
}

/// Spin-motion coupling strength from a fictitious-field gradient,
///
///   g = sqrt(2F) * g_F mu_B b_y y0 / (2 hbar),
///
/// normalized against the sqrt(2F) coupling term of [`build_dicke`] so that
/// the gradient Hamiltonian [`build_lab_hamiltonian`] and the mapped model
/// coincide operator-by-operator for every F. With cesium constants,
/// b_y = 1.9 G/um and omega_y = 2π x 95 kHz this evaluates to
/// 2π x 18.81 kHz. The spin-independent variant that normalizes against a
/// sqrt(2) coupling term instead is [`coupling_from_gradient_sqrt2`].
pub fn coupling_from_gradient(
    b_y: f64,
    omega_y: f64,
    f: f64,
    consts: &PhysicalConstants,
) -> Result<f64, ModelError> {
    qops::spin_operators(f)?;
    let y0 = oscillator_length(omega_y, consts)?;
    Ok(libm::sqrt(2.0 * f) * consts.g_f * consts.mu_b * libm::fabs(b_y) * y0 / (2.0 * consts.hbar))
}

/// Gradient coupling with the spin-independent sqrt(2) normalization,
/// g = g_F mu_B b_y y0 sqrt(2) / (2 hbar). Reported alongside
/// [`coupling_from_gradient`] for reference; it equals that value at F = 1
/// and is smaller by sqrt(F) otherwise (2π x 9.40 kHz at the parameters
/// quoted above).
pub fn coupling_from_gradient_sqrt2(
    b_y: f64,
    omega_y: f64,
    consts: &PhysicalConstants,
) -> Result<f64, ModelError> {
    let y0 = oscillator_length(omega_y, consts)?;
    Ok(consts.g_f * consts.mu_b * libm::fabs(b_y) * y0 * libm::sqrt(2.0) / (2.0 * consts.hbar))
}

/// Rabi frequency of the resonant low-energy transition: Omega = 2g.
pub fn rabi_from_coupling(g: f64) -> f64 {
    2.0 * g
}

/// Single-mode spin-motion Hamiltonian on mode ⊗ spin (dimension
/// n_max * (2F+1)), in rad/s:
///
///   H/ħ = omega_y (a†a ⊗ 1) + delta (1 ⊗ Fz) + g_y/sqrt(2F) (a+a†) ⊗ (F+ + F-)
pub fn build_dicke(params: &ModelParams) -> Result<CMat, ModelError> {
    params.validate()?;
    let spin = qops::spin_operators(params.f)?;
    let mode = qops::mode_operators(params.n_max)?;
    Ok(dicke_matrix(params.omega_y, params.delta, params.g_y, &mode, &spin))
}

fn dicke_matrix(omega: f64, delta: f64, g: f64, mode: &ModeAlgebra, spin: &SpinAlgebra) -> CMat {
    let i_mode = CMat::identity(mode.n_max);
    let i_spin = CMat::identity(spin.dim);
    let x = mode.a.add(&mode.adag);
    let fpm = spin.fplus.add(&spin.fminus);
    let mut h = qops::tensor(&mode.n, &i_spin).scale_re(omega);
    h = h.add(&qops::tensor(&i_mode, &spin.fz).scale_re(delta));
    h = h.add(&qops::tensor(&x, &fpm).scale_re(g / libm::sqrt(2.0 * spin.f)));
    h
}

/// Rabi frequency extracted directly from the matrix of [`build_dicke`]:
/// 2 |<b|H|a>| with |a> = |m=-F, n=1> and |b> = |m=-F+1, n=0>. Equals 2 g_y
/// identically, for every F: the sqrt(2F) of the raising element cancels the
/// normalization of the coupling term.
pub fn rabi_matrix_element(params: &ModelParams) -> Result<f64, ModelError> {
    let h = build_dicke(params)?;
    let dim_s = params.spin_dim();
    let a = dim_s; // (n=1, m=-F)
    let b = 1; // (n=0, m=-F+1)
    Ok(2.0 * h[(b, a)].norm())
}

/// Two-mode Hamiltonian on mode_x ⊗ mode_y ⊗ spin (dimension
/// n_max² * (2F+1)), in rad/s:
///
///   H/ħ = omega_x n_x + omega_y n_y + delta Fz
///       + g_x/sqrt(2F) (a_x+a_x†)(F+ + F-) + g_y/sqrt(2F) (a_y+a_y†)(F+ + F-)
pub fn build_two_mode(params: &ModelParams) -> Result<CMat, ModelError> {
    params.validate()?;
    let spin = qops::spin_operators(params.f)?;
    let mode = qops::mode_operators(params.n_max)?;
    let i_mode = CMat::identity(mode.n_max);
    let i_spin = CMat::identity(spin.dim);
    let x_op = mode.a.add(&mode.adag);
    let fpm = spin.fplus.add(&spin.fminus);
    let norm = 1.0 / libm::sqrt(2.0 * spin.f);

    let mut h = qops::tensor(&mode.n, &qops::tensor(&i_mode, &i_spin)).scale_re(params.omega_x);
    h = h.add(&qops::tensor(&i_mode, &qops::tensor(&mode.n, &i_spin)).scale_re(params.omega_y));
    h = h.add(&qops::tensor(&i_mode, &qops::tensor(&i_mode, &spin.fz)).scale_re(params.delta));
    h = h.add(&qops::tensor(&x_op, &qops::tensor(&i_mode, &fpm)).scale_re(params.g_x * norm));
    h = h.add(&qops::tensor(&i_mode, &qops::tensor(&x_op, &fpm)).scale_re(params.g_y * norm));
    Ok(h)
}

/// 4-level reduction on the basis {|g>, |e>, |x>, |y>}:
///
///   H/ħ = delta |e><e| + omega_x |x><x| + omega_y |y><y|
///       + (Omega_x/2)(|e><x| + h.c.) + (Omega_y/2)(|e><y| + h.c.)
pub fn build_simplified(p: &SimplifiedParams) -> Result<CMat, ModelError> {
    p.validate()?;
    let mut h = CMat::zeros(4, 4);
    h[(1, 1)] = Complex64::new(p.delta, 0.0);
    h[(2, 2)] = Complex64::new(p.omega_x, 0.0);
    h[(3, 3)] = Complex64::new(p.omega_y, 0.0);
    h[(1, 2)] = Complex64::new(p.rabi_x / 2.0, 0.0);
    h[(2, 1)] = Complex64::new(p.rabi_x / 2.0, 0.0);
    h[(1, 3)] = Complex64::new(p.rabi_y / 2.0, 0.0);
    h[(3, 1)] = Complex64::new(p.rabi_y / 2.0, 0.0);
    Ok(h)
}

/// Lab-frame single-mode Hamiltonian built directly from field parameters
/// (offset field in gauss, gradient in gauss/m), divided by ħ:
///
///   H/ħ = omega_y a†a + (g_F mu_B B0/ħ) Fz + (g_F mu_B b_y y0/ħ) (a+a†) ⊗ Fx
///
/// Its eigenvalue multiset coincides with [`build_dicke`] evaluated at
/// [`zeeman_splitting`] and [`coupling_from_gradient`]; this is the
/// executable form of the parameter mapping.
pub fn build_lab_hamiltonian(
    b0: f64,
    b_y: f64,
    omega_y: f64,
    f: f64,
    n_max: usize,
    consts: &PhysicalConstants,
) -> Result<CMat, ModelError> {
    if omega_y <= 0.0 {
        return Err(ModelError::NonPositiveFrequency(omega_y));
    }
    if b0 < 0.0 {
        return Err(ModelError::NegativeField(b0));
    }
    let spin = qops::spin_operators(f)?;
    let mode = qops::mode_operators(n_max)?;
    let y0 = oscillator_length(omega_y, consts)?;
    let zeeman = consts.g_f * consts.mu_b * b0 / consts.hbar;
    let grad = consts.g_f * consts.mu_b * b_y * y0 / consts.hbar;

    let i_spin = CMat::identity(spin.dim);
    let x_op = mode.a.add(&mode.adag);
    let mut h = qops::tensor(&mode.n, &i_spin).scale_re(omega_y);
    h = h.add(&qops::tensor(&CMat::identity(n_max), &spin.fz).scale_re(zeeman));
    h = h.add(&qops::tensor(&x_op, &spin.fx).scale_re(grad));
    Ok(h)
}
