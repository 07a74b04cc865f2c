//! Weibull accelerated failure time regression under right censoring.
//!
//! The model is `log T = intercept + x·β + σ W` where `W` has the standard
//! minimum-Gumbel density `exp(w − e^w)`. Parameters are optimized as
//! `(intercept, β, log σ)` by damped Newton iterations with step halving.

use serde::{Deserialize, Serialize};

use crate::dataset::SurvivalDataset;
use crate::error::{Error, Result};

pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 60;
const LOG_SCALE_FLOOR: f64 = -5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AftModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub log_scale: f64,
    pub included: Vec<String>,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub log_likelihood: f64,
}

impl AftModel {
    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    /// Parameter vector in optimizer order: intercept, coefficients, log σ.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.coefficients.len() + 2);
        p.push(self.intercept);
        p.extend(&self.coefficients);
        p.push(self.log_scale);
        p
    }

    /// Median of the fitted conditional distribution,
    /// `exp(intercept + x·β) · (ln 2)^σ`.
    pub fn predict_median(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::invalid(format!(
                "model has {} covariates, got a vector of {}",
                self.coefficients.len(),
                x.len()
            )));
        }
        let eta = self.intercept + dot(&self.coefficients, x);
        Ok(eta.exp() * std::f64::consts::LN_2.powf(self.scale()))
    }

    /// Median predictions for every row of `ds`, looking covariates up by name.
    pub fn predict_dataset(&self, ds: &SurvivalDataset) -> Result<Vec<f64>> {
        let design = Design::new(ds, &self.included)?;
        design.rows.iter().map(|x| self.predict_median(x)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log times, event flags and the included covariate rows.
struct Design {
    log_time: Vec<f64>,
    event: Vec<bool>,
    rows: Vec<Vec<f64>>,
}

impl Design {
    fn new(ds: &SurvivalDataset, included: &[String]) -> Result<Self> {
        let idx: Vec<usize> = included
            .iter()
            .map(|n| ds.column_index(n))
            .collect::<Result<_>>()?;
        let rows = (0..ds.n_rows())
            .map(|i| {
                let r = ds.covariates.row(i);
                idx.iter().map(|&j| r[j]).collect()
            })
            .collect();
        Ok(Self {
            log_time: ds.time.iter().map(|t| t.ln()).collect(),
            event: ds.status.iter().map(|&s| s == 1).collect(),
            rows,
        })
    }

    fn n_params(&self) -> usize {
        self.rows.first().map_or(0, Vec::len) + 2
    }
}

struct Evaluation {
    loglik: f64,
    gradient: Vec<f64>,
    /// Row-major, n_params × n_params. Empty unless requested.
    hessian: Vec<f64>,
}

fn evaluate(theta: &[f64], design: &Design, with_hessian: bool) -> Evaluation {
    let p = theta.len();
    let d = p - 2;
    let intercept = theta[0];
    let beta = &theta[1..=d];
    let log_sigma = theta[p - 1];
    let sigma = log_sigma.exp();

    let mut loglik = 0.0;
    let mut gradient = vec![0.0; p];
    let mut hessian = if with_hessian {
        vec![0.0; p * p]
    } else {
        Vec::new()
    };
    // per-row derivative of the linear predictor block, with z = (1, x)
    let mut z = vec![0.0; d + 1];
    for ((&y, &event), x) in design.log_time.iter().zip(&design.event).zip(&design.rows) {
        let eta = intercept + dot(beta, x);
        let w = (y - eta) / sigma;
        let ew = w.exp();
        let delta = if event { 1.0 } else { 0.0 };
        loglik += if event { -log_sigma - y + w - ew } else { -ew };

        let g_eta = -(delta - ew) / sigma;
        let g_s = -delta - (delta - ew) * w;
        z[0] = 1.0;
        z[1..].copy_from_slice(x);
        for (a, &za) in z.iter().enumerate() {
            gradient[a] += g_eta * za;
        }
        gradient[p - 1] += g_s;

        if with_hessian {
            let h_ee = -ew / (sigma * sigma);
            let h_es = (delta - ew - w * ew) / sigma;
            let h_ss = -ew * w * w + (delta - ew) * w;
            for (a, &za) in z.iter().enumerate() {
                for (b, &zb) in z.iter().enumerate().skip(a) {
                    hessian[a * p + b] += h_ee * za * zb;
                }
                hessian[a * p + p - 1] += h_es * za;
            }
            hessian[p * p - 1] += h_ss;
        }
    }
    if with_hessian {
        for a in 0..p {
            for b in 0..a {
                hessian[a * p + b] = hessian[b * p + a];
            }
        }
    }
    Evaluation {
        loglik,
        gradient,
        hessian,
    }
}

/// Log-likelihood and its analytic gradient with respect to
/// `(intercept, β, log σ)`, for the covariates named in `included`.
pub fn loglik_and_gradient(
    params: &[f64],
    ds: &SurvivalDataset,
    included: &[String],
) -> Result<(f64, Vec<f64>)> {
    if params.len() != included.len() + 2 {
        return Err(Error::invalid(format!(
            "expected {} parameters, got {}",
            included.len() + 2,
            params.len()
        )));
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("parameters must be finite"));
    }
    let design = Design::new(ds, included)?;
    let e = evaluate(params, &design, false);
    Ok((e.loglik, e.gradient))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Solves `a x = b` for symmetric positive definite `a` (row-major).
fn cholesky_solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let diag = a[i * n + i] - s;
                if diag.is_nan() || diag <= 0.0 || diag.is_infinite() {
                    return None;
                }
                l[i * n + i] = diag.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    Some(x)
}

/// Newton direction from the negated Hessian, with Levenberg damping when it
/// is not positive definite.
fn ascent_direction(eval: &Evaluation, p: usize) -> Vec<f64> {
    let neg_h: Vec<f64> = eval.hessian.iter().map(|h| -h).collect();
    if let Some(step) = cholesky_solve(&neg_h, &eval.gradient) {
        return step;
    }
    let scale = (0..p).map(|i| neg_h[i * p + i].abs()).fold(1e-8, f64::max);
    let mut lambda = 1e-6 * scale;
    loop {
        let mut damped = neg_h.clone();
        for i in 0..p {
            damped[i * p + i] += lambda;
        }
        if let Some(step) = cholesky_solve(&damped, &eval.gradient) {
            return step;
        }
        lambda *= 10.0;
        if !lambda.is_finite() {
            // plain gradient ascent
            return eval.gradient.iter().map(|g| g / scale).collect();
        }
    }
}

fn initial_params(design: &Design) -> Vec<f64> {
    let logs: Vec<f64> = design
        .log_time
        .iter()
        .zip(&design.event)
        .filter(|(_, &e)| e)
        .map(|(&y, _)| y)
        .collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let sd = if logs.len() > 1 {
        (logs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut theta = vec![0.0; design.n_params()];
    theta[0] = mean;
    let last = theta.len() - 1;
    theta[last] = sd.ln().max(LOG_SCALE_FLOOR);
    theta
}

/// Maximum-likelihood fit on the named covariates; an empty list fits the
/// intercept-only model.
pub fn fit(ds: &SurvivalDataset, included: &[String]) -> Result<AftModel> {
    fit_traced(ds, included).map(|(m, _)| m)
}

/// Like [`fit`], also returning the log-likelihood at the start and after
/// every accepted step.
pub fn fit_traced(ds: &SurvivalDataset, included: &[String]) -> Result<(AftModel, Vec<f64>)> {
    if ds.n_events() == 0 {
        return Err(Error::NoEvents);
    }
    let design = Design::new(ds, included)?;
    let p = design.n_params();
    let mut theta = initial_params(&design);
    let mut current = evaluate(&theta, &design, true);
    if !current.loglik.is_finite() {
        return Err(Error::NonConvergence {
            iterations: 0,
            loglik: current.loglik,
            gradient_norm: f64::NAN,
            reason: "log-likelihood is not finite at the starting point".into(),
        });
    }

    let mut trace = vec![current.loglik];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        if max_abs(&current.gradient) < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        let direction = ascent_direction(&current, p);
        let mut step = 1.0;
        let mut accepted = None;
        let mut saw_finite = false;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&direction)
                .map(|(t, d)| t + step * d)
                .collect();
            let eval = evaluate(&candidate, &design, true);
            if eval.loglik.is_finite() {
                saw_finite = true;
                // near the optimum the gain drops below rounding in L, so a
                // flat step that shrinks the gradient still counts
                let flat = eval.loglik >= current.loglik - 1e-12 * current.loglik.abs().max(1.0);
                if eval.loglik > current.loglik
                    || flat && max_abs(&eval.gradient) < max_abs(&current.gradient)
                {
                    accepted = Some((candidate, eval));
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((next, eval)) => {
                let stalled = next == theta;
                theta = next;
                current = eval;
                trace.push(current.loglik);
                if stalled {
                    break;
                }
            }
            None if !saw_finite => {
                return Err(Error::NonConvergence {
                    iterations,
                    loglik: current.loglik,
                    gradient_norm: max_abs(&current.gradient),
                    reason: "log-likelihood stayed non-finite after step halving".into(),
                });
            }
            // finite but no ascent: numerical plateau
            None => break,
        }
    }
    if !converged {
        converged = max_abs(&current.gradient) < GRADIENT_TOLERANCE;
    }

    let model = AftModel {
        intercept: theta[0],
        coefficients: theta[1..p - 1].to_vec(),
        log_scale: theta[p - 1],
        included: included.to_vec(),
        converged,
        iterations,
        final_gradient_norm: max_abs(&current.gradient),
        log_likelihood: current.loglik,
    };
    Ok((model, trace))
}
