//! Simulation and analysis toolkit for a single trapped atom whose spin is
//! linearly coupled to its quantized motion (a spin-F Dicke-type model).
//!
//! The crate is organized in four layers:
//!
//! * [`qops`] — exact finite-dimensional operator algebra (spin and truncated
//!   bosonic modes), tensor products, and a dense Hermitian eigensolver;
//! * [`model`] — physical constants, parameter mappings, and Hamiltonian
//!   builders (lab-frame, single-mode, two-mode, and a 4-level reduction);
//! * [`spectra`] — heterodyne fluorescence spectrum synthesis from an
//!   eigensystem: thermal populations, Lamb-Dicke emission operator,
//!   transition tables, and Gaussian peak rendering;
//! * [`analysis`] — Zeeman-splitting sweeps, peak extraction, avoided-crossing
//!   gap measurement, and the calibration/fit pipeline that extracts trap
//!   frequencies, the Zeeman scale, coupling strengths, and tuning slopes.
//!
//! All frequencies inside this crate are angular frequencies in rad/s; only
//! rendered spectra carry a grid in ordinary kHz. The crate is `no_std`
//! (with `alloc`) so the numerical core stays free of I/O concerns.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod model;
pub mod qops;
pub mod spectra;

pub use qops::matrix::CMat;
