//! Dense Hermitian eigensolver.
//!
//! Complex Householder reduction to real symmetric tridiagonal form, a phase
//! sweep to realize the subdiagonal, then implicit-shift QL iteration with
//! eigenvector accumulation (the classic tred2/tql2 route, extended to
//! complex Hermitian input). Everything is sequential and allocation-bounded,
//! so identical input bytes always produce identical output bytes.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::matrix::CMat;

const MAX_QL_ITERS: usize = 50;

/// Reduce the Hermitian matrix `a` (mutated in place) to real tridiagonal
/// form. Returns `(d, e, q)` with diagonal `d`, subdiagonal `e` (`e[i]`
/// couples `i` and `i+1`, `e[n-1]` = 0) and the unitary `q` such that
/// `a_input = q * tridiag(d, e) * q†`.
fn tridiagonalize(a: &mut CMat, n: usize) -> (Vec<f64>, Vec<f64>, CMat) {
    let mut q = CMat::identity(n);
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1; // size of the column below the diagonal
        let mut norm_sq = 0.0;
        for i in 0..m {
            norm_sq += a[(k + 1 + i, k)].norm_sqr();
        }
        let norm = libm::sqrt(norm_sq);
        if norm == 0.0 {
            continue;
        }
        // Skip if already tridiagonal in this column.
        let mut below_sq = 0.0;
        for i in 1..m {
            below_sq += a[(k + 1 + i, k)].norm_sqr();
        }
        if below_sq == 0.0 {
            continue;
        }

        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;

        for i in 0..m {
            v[i] = a[(k + 1 + i, k)];
        }
        v[0] -= alpha;
        let mut vsq = 0.0;
        for i in 0..m {
            vsq += v[i].norm_sqr();
        }
        if vsq == 0.0 {
            continue;
        }
        let beta = 2.0 / vsq;

        // p = beta * B v on the trailing block B = a[k+1.., k+1..]
        for i in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                acc += a[(k + 1 + i, k + 1 + j)] * v[j];
            }
            p[i] = acc * beta;
        }
        // w = p - (beta/2) (v† p) v ; v†Bv is real for Hermitian B
        let mut vdp = Complex64::new(0.0, 0.0);
        for i in 0..m {
            vdp += v[i].conj() * p[i];
        }
        let kappa = 0.5 * beta * vdp.re;
        for i in 0..m {
            p[i] -= kappa * v[i]; // p now holds w
        }
        // B <- B - v w† - w v†, writing the lower triangle and mirroring so
        // the block stays exactly Hermitian under rounding
        for i in 0..m {
            for j in 0..=i {
                let corr = v[i] * p[j].conj() + p[i] * v[j].conj();
                let val = a[(k + 1 + i, k + 1 + j)] - corr;
                a[(k + 1 + i, k + 1 + j)] = val;
                if i != j {
                    a[(k + 1 + j, k + 1 + i)] = val.conj();
                } else {
                    a[(k + 1 + i, k + 1 + i)] = Complex64::new(val.re, 0.0);
                }
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in 2..=m {
            if k + i < n {
                a[(k + i, k)] = Complex64::new(0.0, 0.0);
                a[(k, k + i)] = Complex64::new(0.0, 0.0);
            }
        }

        // Q <- Q (I - beta v v†), acting on columns k+1..n
        for r in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..m {
                s += q[(r, k + 1 + j)] * v[j];
            }
            let sb = s * beta;
            for j in 0..m {
                let dec = sb * v[j].conj();
                q[(r, k + 1 + j)] -= dec;
            }
        }
    }

    // Phase sweep: make the subdiagonal real nonnegative, folding the phases
    // into the columns of q.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in 0..n {
        d[i] = a[(i, i)].re;
    }
    let mut u = Complex64::new(1.0, 0.0);
    for i in 0..n.saturating_sub(1) {
        let c = a[(i + 1, i)];
        let mag = c.norm();
        e[i] = mag;
        let u_next = if mag > 0.0 { c * u / mag } else { u };
        if u_next != Complex64::new(1.0, 0.0) {
            for r in 0..n {
                q[(r, i + 1)] *= u_next;
            }
        }
        u = u_next;
    }
    (d, e, q)
}

/// Implicit-shift QL iteration on the real tridiagonal `(d, e)`, rotating the
/// columns of `z` along. `e[i]` couples `i` and `i+1`.
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut CMat) -> Result<(), &'static str> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = libm::fabs(d[m]) + libm::fabs(d[m + 1]);
                if libm::fabs(e[m]) <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERS {
                return Err("QL iteration failed to converge");
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..z.rows() {
                    let zi1 = z[(k, i + 1)];
                    let zi = z[(k, i)];
                    z[(k, i + 1)] = zi * s + zi1 * c;
                    z[(k, i)] = zi * c - zi1 * s;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full solve: returns eigenvalues ascending and the matching eigenvector
/// columns. The input must already be exactly Hermitian.
pub(super) fn solve(h: &CMat) -> Result<(Vec<f64>, CMat), &'static str> {
    let n = h.rows();
    if n == 0 {
        return Err("empty matrix");
    }
    let mut a = h.clone();
    let (mut d, mut e, mut q) = tridiagonalize(&mut a, n);
    ql_implicit(&mut d, &mut e, &mut q)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("non-finite eigenvalue").then(i.cmp(&j)));

    let mut energies = Vec::with_capacity(n);
    let mut states = CMat::zeros(n, n);
    for (c_new, &c_old) in order.iter().enumerate() {
        energies.push(d[c_old]);
        for r in 0..n {
            states[(r, c_new)] = q[(r, c_old)];
        }
    }
    Ok((energies, states))
}
