//! Exact finite-dimensional operator algebra: spin-F matrices, truncated
//! bosonic ladder operators, tensor products, and a dense Hermitian
//! eigensolver.
//!
//! Basis conventions used everywhere in this crate:
//!
//! * spin: the quantization axis is the offset-field axis; its projection
//!   operator `fz` is diagonal with entries `-F..F` in basis order, so basis
//!   index `k` is the state `m = -F + k`;
//! * mode: Fock states `|0..n_max-1|`, so ladder operators are truncated at
//!   `n_max` quanta per mode.

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

pub mod eigh;
pub mod matrix;

use matrix::CMat;

#[derive(Debug, Clone, PartialEq)]
pub enum QopsError {
    /// spin quantum number is not a positive half-integer
    InvalidSpin(f64),
    /// Fock truncation below the minimum of 2
    InvalidTruncation(usize),
    NotSquare { rows: usize, cols: usize },
    /// relative Hermiticity defect above tolerance
    NotHermitian { defect_rel: f64 },
    NoConvergence,
    EmptyMatrix,
}

impl fmt::Display for QopsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QopsError::InvalidSpin(v) => write!(f, "spin F = {v} is not a positive half-integer"),
            QopsError::InvalidTruncation(n) => write!(f, "Fock truncation n_max = {n} < 2"),
            QopsError::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            QopsError::NotHermitian { defect_rel } => {
                write!(f, "matrix is not Hermitian (relative defect {defect_rel:.3e})")
            }
            QopsError::NoConvergence => write!(f, "eigensolver failed to converge"),
            QopsError::EmptyMatrix => write!(f, "empty matrix"),
        }
    }
}

/// Matrix representation of a spin-F algebra, ħ = 1.
#[derive(Debug, Clone)]
pub struct SpinAlgebra {
    /// spin quantum number (half-integer)
    pub f: f64,
    /// dimension 2F+1
    pub dim: usize,
    /// projection on the quantization axis, diagonal entries -F..F
    pub fz: CMat,
    pub fx: CMat,
    pub fy: CMat,
    pub fplus: CMat,
    pub fminus: CMat,
}

/// Truncated bosonic mode: annihilation, creation, and number operators on
/// `n_max` Fock states.
#[derive(Debug, Clone)]
pub struct ModeAlgebra {
    pub n_max: usize,
    pub a: CMat,
    pub adag: CMat,
    pub n: CMat,
}

/// Eigendecomposition of a Hermitian matrix: energies ascending, unitary
/// column matrix of eigenvectors, and for each eigenstate the bare basis
/// index of maximum overlap.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub states: CMat,
    pub labels: Vec<usize>,
}

/// Returns true if `2f` is a positive integer (within float slack).
fn is_half_integer_spin(f: f64) -> bool {
    if !(f > 0.0) || !f.is_finite() {
        return false;
    }
    let twice = 2.0 * f;
    libm::fabs(twice - libm::round(twice)) < 1e-9 && libm::round(twice) >= 1.0
}

/// Build the spin-F matrices. `2F` must be a positive integer.
pub fn spin_operators(f: f64) -> Result<SpinAlgebra, QopsError> {
    if !is_half_integer_spin(f) {
        return Err(QopsError::InvalidSpin(f));
    }
    let twice_f = libm::round(2.0 * f) as usize;
    let f = twice_f as f64 / 2.0; // snap to the exact half-integer
    let dim = twice_f + 1;

    let mut fz = CMat::zeros(dim, dim);
    let mut fplus = CMat::zeros(dim, dim);
    for k in 0..dim {
        let m = -f + k as f64;
        fz[(k, k)] = Complex64::new(m, 0.0);
        if k + 1 < dim {
            // <m+1| F+ |m> = sqrt(F(F+1) - m(m+1))
            let elem = libm::sqrt(f * (f + 1.0) - m * (m + 1.0));
            fplus[(k + 1, k)] = Complex64::new(elem, 0.0);
        }
    }
    let fminus = fplus.adjoint();
    let fx = fplus.add(&fminus).scale_re(0.5);
    let fy = fplus.sub(&fminus).scale(Complex64::new(0.0, -0.5));
    Ok(SpinAlgebra { f, dim, fz, fx, fy, fplus, fminus })
}

/// Build truncated ladder operators on `n_max >= 2` Fock states.
pub fn mode_operators(n_max: usize) -> Result<ModeAlgebra, QopsError> {
    if n_max < 2 {
        return Err(QopsError::InvalidTruncation(n_max));
    }
    let mut a = CMat::zeros(n_max, n_max);
    for n in 1..n_max {
        // <n-1| a |n> = sqrt(n)
        a[(n - 1, n)] = Complex64::new(libm::sqrt(n as f64), 0.0);
    }
    let adag = a.adjoint();
    let n = adag.mul(&a);
    Ok(ModeAlgebra { n_max, a, adag, n })
}

/// Kronecker product.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    a.kron(b)
}

/// Diagonalize a Hermitian matrix. Inputs whose relative Hermiticity defect
/// is at most 1e-9 are symmetrized; anything worse is rejected.
pub fn eigh(h: &CMat) -> Result<EigenSystem, QopsError> {
    if !h.is_square() {
        return Err(QopsError::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    if h.rows() == 0 {
        return Err(QopsError::EmptyMatrix);
    }
    let norm = h.fro_norm();
    let defect = h.hermiticity_defect();
    if norm > 0.0 && defect > 1e-9 * norm {
        return Err(QopsError::NotHermitian { defect_rel: defect / norm });
    }
    let work = h.hermitian_part();
    let (energies, states) = eigh::solve(&work).map_err(|_| QopsError::NoConvergence)?;
    let labels = overlap_labels(&states);
    Ok(EigenSystem { energies, states, labels })
}

/// For each eigenvector column, the bare basis index with maximum |overlap|.
/// Ties resolve to the smallest index.
fn overlap_labels(states: &CMat) -> Vec<usize> {
    let n = states.rows();
    let mut labels = Vec::with_capacity(n);
    for col in 0..n {
        let mut best = 0usize;
        let mut best_val = -1.0;
        for row in 0..n {
            let w = states[(row, col)].norm_sqr();
            if w > best_val {
                best_val = w;
                best = row;
            }
        }
        labels.push(best);
    }
    labels
}

impl EigenSystem {
    /// ‖H·V − V·diag(E)‖_F, the decomposition residual against `h`.
    pub fn residual(&self, h: &CMat) -> f64 {
        let n = h.rows();
        let hv = h.mul(&self.states);
        let mut acc = 0.0;
        for j in 0..n {
            let ej = self.energies[j];
            for i in 0..n {
                let d = hv[(i, j)] - self.states[(i, j)] * ej;
                acc += d.norm_sqr();
            }
        }
        libm::sqrt(acc)
    }
}
