//! Minimal dense complex matrix type for the operator algebra.
//!
//! Row-major storage, `f64` complex entries. Only the operations the rest of
//! the crate needs are implemented; this is not a general linear algebra
//! library.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};
use num_complex::Complex64;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Real diagonal matrix.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = CMat::zeros(entries.len(), entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> CMat {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        let mut out = self.clone();
        for (v, r) in out.data.iter_mut().zip(&rhs.data) {
            *v += r;
        }
        out
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        let mut out = self.clone();
        for (v, r) in out.data.iter_mut().zip(&rhs.data) {
            *v -= r;
        }
        out
    }

    /// Matrix product. Loop order keeps the inner accesses contiguous.
    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch in mul");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        let nc = rhs.cols;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * nc..(k + 1) * nc];
                let out_row = &mut out.data[i * nc..(i + 1) * nc];
                for (o, &r) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * r;
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &CMat) -> CMat {
        let (ra, ca, rb, cb) = (self.rows, self.cols, rhs.rows, rhs.cols);
        let mut out = CMat::zeros(ra * rb, ca * cb);
        for ia in 0..ra {
            for ja in 0..ca {
                let a = self[(ia, ja)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for ib in 0..rb {
                    for jb in 0..cb {
                        out[(ia * rb + ib, ja * cb + jb)] = a * rhs[(ib, jb)];
                    }
                }
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        let mut s = 0.0;
        for v in &self.data {
            s += v.norm_sqr();
        }
        libm::sqrt(s)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for v in &self.data {
            m = m.max(v.norm());
        }
        m
    }

    /// Frobenius norm of `self - self†` (zero for an exactly Hermitian matrix).
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self[(i, j)] - self[(j, i)].conj();
                s += d.norm_sqr();
            }
        }
        libm::sqrt(s)
    }

    /// Hermitian part `(self + self†)/2`.
    pub fn hermitian_part(&self) -> CMat {
        assert!(self.is_square());
        let mut out = CMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let v = self[(i, j)];
                write!(f, "{:+.3e}{:+.3e}i ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
