//! Damped Gauss-Newton least squares for Gaussian peak sums, and weighted
//! linear regression with closed-form covariance.

use alloc::vec;
use alloc::vec::Vec;

use super::AnalysisError;

/// Initial guess for one Gaussian component.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPeakInit {
    pub center: f64,
    pub height: f64,
    pub width: f64,
}

/// Least-squares outcome. `params` is the flat vector
/// [height_0, center_0, width_0, height_1, ...]; `sigmas` are 1σ
/// uncertainties from the residual-scaled Gauss-Newton covariance at the
/// optimum. Non-convergence is flagged, not an error: the partial result is
/// still returned.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn peak(&self, k: usize) -> (f64, f64, f64) {
        (self.params[3 * k], self.params[3 * k + 1], self.params[3 * k + 2])
    }

    pub fn peak_sigmas(&self, k: usize) -> (f64, f64, f64) {
        (self.sigmas[3 * k], self.sigmas[3 * k + 1], self.sigmas[3 * k + 2])
    }
}

fn model_and_jacobian(x: &[f64], theta: &[f64], out: &mut [f64], jac: &mut [f64]) {
    let npk = theta.len() / 3;
    let n = x.len();
    for v in out.iter_mut() {
        *v = 0.0;
    }
    for v in jac.iter_mut() {
        *v = 0.0;
    }
    for k in 0..npk {
        let a = theta[3 * k];
        let c = theta[3 * k + 1];
        let w = libm::fabs(theta[3 * k + 2]).max(1e-300);
        for (i, &xi) in x.iter().enumerate() {
            let d = xi - c;
            let g = libm::exp(-d * d / (2.0 * w * w));
            out[i] += a * g;
            jac[i * theta.len() + 3 * k] = g;
            jac[i * theta.len() + 3 * k + 1] = a * g * d / (w * w);
            jac[i * theta.len() + 3 * k + 2] = a * g * d * d / (w * w * w);
        }
        let _ = n;
    }
}

/// Solve the symmetric positive system `m x = b` by Gaussian elimination
/// with partial pivoting. Returns None when singular.
fn solve_dense(m: &mut [f64], b: &mut [f64], p: usize) -> Option<Vec<f64>> {
    for col in 0..p {
        let mut piv = col;
        let mut best = libm::fabs(m[col * p + col]);
        for r in col + 1..p {
            let v = libm::fabs(m[r * p + col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        if piv != col {
            for c in 0..p {
                m.swap(col * p + c, piv * p + c);
            }
            b.swap(col, piv);
        }
        let diag = m[col * p + col];
        for r in col + 1..p {
            let factor = m[r * p + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for c in col..p {
                m[r * p + c] -= factor * m[col * p + c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for col in (0..p).rev() {
        let mut acc = b[col];
        for c in col + 1..p {
            acc -= m[col * p + c] * x[c];
        }
        x[col] = acc / m[col * p + col];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

fn cost(x: &[f64], y: &[f64], theta: &[f64], scratch: &mut [f64], jac: &mut [f64]) -> f64 {
    model_and_jacobian(x, theta, scratch, jac);
    let mut ssr = 0.0;
    for i in 0..y.len() {
        let r = y[i] - scratch[i];
        ssr += r * r;
    }
    ssr
}

/// Fit a sum of Gaussians to `(x, y)` with a damped Gauss-Newton
/// (Levenberg-style) iteration and analytic Jacobians. Converged when the
/// relative cost decrease drops below 1e-10 or the step norm below
/// 1e-12 relative to the parameter scale.
pub fn fit_gaussian_sum(
    x: &[f64],
    y: &[f64],
    init: &[GaussianPeakInit],
    max_iterations: usize,
) -> Result<FitResult, AnalysisError> {
    if init.is_empty() {
        return Err(AnalysisError::NoInitialPeaks);
    }
    if x.len() != y.len() || x.len() < 3 * init.len() {
        return Err(AnalysisError::FewPoints { needed: 3 * init.len(), got: x.len() });
    }
    let p = 3 * init.len();
    let n = x.len();
    let mut theta: Vec<f64> = Vec::with_capacity(p);
    for g in init {
        theta.push(g.height);
        theta.push(g.center);
        theta.push(g.width);
    }
    let mut jac = vec![0.0; n * p];
    let mut modelv = vec![0.0; n];
    let mut lambda = 1e-3;
    let mut ssr = cost(x, y, &theta, &mut modelv, &mut jac);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iterations {
        iterations += 1;
        // normal equations from the current Jacobian
        let mut jtj = vec![0.0; p * p];
        let mut jtr = vec![0.0; p];
        for i in 0..n {
            let r = y[i] - modelv[i];
            let row = &jac[i * p..(i + 1) * p];
            for a in 0..p {
                jtr[a] += row[a] * r;
                for b in a..p {
                    jtj[a * p + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                jtj[a * p + b] = jtj[b * p + a];
            }
        }

        let mut accepted = false;
        for _ in 0..16 {
            let mut m = jtj.clone();
            for a in 0..p {
                m[a * p + a] += lambda * jtj[a * p + a].max(1e-300);
            }
            let mut rhs = jtr.clone();
            let step = match solve_dense(&mut m, &mut rhs, p) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
            let trial_ssr = cost(x, y, &trial, &mut modelv, &mut jac);
            if trial_ssr <= ssr {
                let step_norm = libm::sqrt(step.iter().map(|s| s * s).sum());
                let theta_norm = libm::sqrt(theta.iter().map(|t| t * t).sum());
                let rel_decrease = if ssr > 0.0 { (ssr - trial_ssr) / ssr } else { 0.0 };
                theta = trial;
                let prev = ssr;
                ssr = trial_ssr;
                lambda = (lambda * 0.3).max(1e-14);
                accepted = true;
                if rel_decrease < 1e-10 || step_norm < 1e-12 * (1.0 + theta_norm) || prev == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // stuck: damping maxed out without a downhill step
            cost(x, y, &theta, &mut modelv, &mut jac);
            break;
        }
        if converged {
            break;
        }
        // refresh jacobian at the accepted point (cost already did)
    }
    // widths are only meaningful up to sign
    for k in 0..init.len() {
        theta[3 * k + 2] = libm::fabs(theta[3 * k + 2]);
    }
    let _ = cost(x, y, &theta, &mut modelv, &mut jac);

    // residual-scaled covariance at the optimum
    let dof = n.saturating_sub(p);
    let sigma2 = if dof > 0 { ssr / dof as f64 } else { 0.0 };
    let mut jtj = vec![0.0; p * p];
    for i in 0..n {
        let row = &jac[i * p..(i + 1) * p];
        for a in 0..p {
            for b in a..p {
                jtj[a * p + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            jtj[a * p + b] = jtj[b * p + a];
        }
    }
    let mut sigmas = vec![0.0; p];
    for a in 0..p {
        // solve JtJ u = e_a for the diagonal of the inverse
        let mut m = jtj.clone();
        let mut e = vec![0.0; p];
        e[a] = 1.0;
        if let Some(u) = solve_dense(&mut m, &mut e, p) {
            if u[a] > 0.0 {
                sigmas[a] = libm::sqrt(sigma2 * u[a]);
            }
        }
    }

    Ok(FitResult { params: theta, sigmas, residual_norm: libm::sqrt(ssr), converged, iterations })
}

/// Weighted linear regression result for y = slope * x + intercept.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    pub residual_norm: f64,
}

/// Weighted linear least squares on points `(x, y, sigma_y)`. Uncertainties
/// come from the closed-form covariance of the weighted normal equations
/// (the provided sigmas are taken at face value; with two points the
/// residual is exactly zero and the covariance is still well defined).
pub fn fit_line(points: &[(f64, f64, f64)]) -> Result<LineFit, AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::FewPoints { needed: 2, got: points.len() });
    }
    let weights: Vec<f64> = points
        .iter()
        .map(|&(_, _, s)| if s > 0.0 && s.is_finite() { 1.0 / (s * s) } else { 1.0 })
        .collect();
    let sw: f64 = weights.iter().sum();
    let xbar: f64 = points.iter().zip(&weights).map(|(&(x, _, _), &w)| w * x).sum::<f64>() / sw;
    // centered abscissa: the normal matrix is diagonal and well conditioned
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut sy = 0.0;
    for (&(x, y, _), &w) in points.iter().zip(&weights) {
        let t = x - xbar;
        stt += w * t * t;
        sty += w * t * y;
        sy += w * y;
    }
    let x_spread = points.iter().map(|&(x, _, _)| libm::fabs(x - xbar)).fold(0.0, f64::max);
    if stt <= 0.0 || x_spread == 0.0 {
        return Err(AnalysisError::DegenerateAbscissae);
    }
    let slope = sty / stt;
    let mean = sy / sw;
    let intercept = mean - slope * xbar;
    let slope_sigma = libm::sqrt(1.0 / stt);
    let intercept_sigma = libm::sqrt(1.0 / sw + xbar * xbar / stt);
    let mut ssr = 0.0;
    for (&(x, y, _), &w) in points.iter().zip(&weights) {
        let r = y - (slope * x + intercept);
        ssr += w * r * r;
    }
    Ok(LineFit { slope, intercept, slope_sigma, intercept_sigma, residual_norm: libm::sqrt(ssr) })
}
