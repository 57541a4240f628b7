//! Shared test oracles, independent of the library's implementation paths.
#![allow(dead_code)]

use num_complex::Complex64;
use spinmotion::CMat;

/// Exact factorial for small n (all arguments here stay well below 23, so
/// the f64 value is exact).
fn fact(n: i64) -> f64 {
    assert!(n >= 0, "negative factorial argument {n}");
    (1..=n).map(|k| k as f64).product()
}

/// Clebsch-Gordan coefficient <j1 m1 j2 m2 | j3 m3> by the Racah series.
/// Arguments may be half-integer; every factorial argument is an integer
/// for valid inputs.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j3: f64, m3: f64) -> f64 {
    if (m1 + m2 - m3).abs() > 1e-9 {
        return 0.0;
    }
    if j3 > j1 + j2 + 1e-9 || j3 < (j1 - j2).abs() - 1e-9 {
        return 0.0;
    }
    let i = |x: f64| -> i64 {
        let r = libm::round(x);
        assert!((x - r).abs() < 1e-9, "non-integer factorial argument {x}");
        r as i64
    };
    let pref = (2.0 * j3 + 1.0)
        * fact(i(j1 + j2 - j3))
        * fact(i(j1 - j2 + j3))
        * fact(i(-j1 + j2 + j3))
        / fact(i(j1 + j2 + j3 + 1.0));
    let pref2 = fact(i(j1 + m1))
        * fact(i(j1 - m1))
        * fact(i(j2 + m2))
        * fact(i(j2 - m2))
        * fact(i(j3 + m3))
        * fact(i(j3 - m3));

    let k_lo = 0i64.max(-i(j3 - j2 + m1)).max(-i(j3 - j1 - m2));
    let k_hi = i(j1 + j2 - j3).min(i(j1 - m1)).min(i(j2 + m2));
    let mut sum = 0.0;
    let mut k = k_lo;
    while k <= k_hi {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let denom = fact(k)
            * fact(i(j1 + j2 - j3) - k)
            * fact(i(j1 - m1) - k)
            * fact(i(j2 + m2) - k)
            * fact(i(j3 - j2 + m1) + k)
            * fact(i(j3 - j1 - m2) + k);
        sum += sign / denom;
        k += 1;
    }
    libm::sqrt(pref * pref2) * sum
}

/// Cyclic Jacobi eigenvalue iteration for a complex Hermitian matrix,
/// eigenvalues only. Completely independent of the library's
/// Householder/QL solver; panics if it fails to converge, so a wrong
/// rotation cannot silently produce garbage.
pub fn jacobi_eigenvalues(h: &CMat) -> Vec<f64> {
    let n = h.rows();
    assert!(h.is_square());
    let mut a: Vec<Vec<Complex64>> =
        (0..n).map(|r| (0..n).map(|c| h[(r, c)]).collect()).collect();
    let scale = h.fro_norm().max(1e-300);
    let mut converged = false;
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q].norm_sqr();
            }
        }
        if libm::sqrt(off) <= 1e-13 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let u = apq / mag;
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                // A <- U† A U with U[p,p]=c, U[p,q]=s u, U[q,p]=-s conj(u), U[q,q]=c
                for r in 0..n {
                    let arp = a[r][p];
                    let arq = a[r][q];
                    a[r][p] = arp * c - arq * s * u.conj();
                    a[r][q] = arp * s * u + arq * c;
                }
                for col in 0..n {
                    let apc = a[p][col];
                    let aqc = a[q][col];
                    a[p][col] = apc * c - aqc * s * u;
                    a[q][col] = apc * s * u.conj() + aqc * c;
                }
            }
        }
    }
    assert!(converged, "Jacobi oracle failed to converge");
    let mut vals: Vec<f64> = (0..n).map(|k| a[k][k].re).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

/// Simpson integration of samples on a uniform grid (odd point count).
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    assert!(x.len() == y.len() && x.len() >= 3 && x.len() % 2 == 1);
    let h = x[1] - x[0];
    let n = x.len();
    let mut acc = y[0] + y[n - 1];
    for k in 1..n - 1 {
        acc += y[k] * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Deterministic pseudo-random stream for test parameter sweeps.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    pub fn complex(&mut self, scale: f64) -> Complex64 {
        Complex64::new(self.uniform(-scale, scale), self.uniform(-scale, scale))
    }
}

/// Random complex matrix with entries in [-1, 1]^2.
pub fn random_matrix(rng: &mut TestRng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| rng.complex(1.0))
}

/// Random Hermitian matrix with unit-scale entries.
pub fn random_hermitian(rng: &mut TestRng, n: usize) -> CMat {
    let mut h = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = if i == j {
                Complex64::new(rng.uniform(-1.0, 1.0), 0.0)
            } else {
                rng.complex(1.0)
            };
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    h
}
