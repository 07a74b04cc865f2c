//! Right-censored Weibull survival data with normal covariates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::SurvivalDataset;
use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

/// Mean and variance of a normal covariate, serialized as a `[mean, variance]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct NormalParams {
    pub mean: f64,
    pub variance: f64,
}

impl From<(f64, f64)> for NormalParams {
    fn from((mean, variance): (f64, f64)) -> Self {
        Self { mean, variance }
    }
}

impl From<NormalParams> for (f64, f64) {
    fn from(p: NormalParams) -> Self {
        (p.mean, p.variance)
    }
}

impl NormalParams {
    pub const fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }
}

/// Simulation settings. Event times follow a log-linear Weibull model,
/// `T = exp(event_log_scale + x·coefficients) · E^(1/event_shape)` with
/// `E ~ Exp(1)`; censoring times are covariate-free,
/// `C = exp(censor_log_scale) · E'^(1/censor_shape)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_subjects: usize,
    pub max_follow_up: f64,
    pub event_shape: f64,
    pub event_log_scale: f64,
    pub censor_shape: f64,
    pub censor_log_scale: f64,
    pub coefficients: Vec<f64>,
    pub covariate_params: Vec<NormalParams>,
    pub seed: u64,
}

impl Default for SimConfig {
    /// The five-covariate design: 1000 subjects followed for at most 100 days.
    fn default() -> Self {
        Self {
            n_subjects: 1000,
            max_follow_up: 100.0,
            event_shape: 2.0,
            event_log_scale: 1.0,
            censor_shape: 0.85,
            censor_log_scale: 5.0,
            coefficients: vec![1.4, 1.2, 0.0, 1.2, 0.2],
            covariate_params: vec![
                NormalParams::new(0.4, 1.1),
                NormalParams::new(1.0, 1.1),
                NormalParams::new(0.7, 1.1),
                NormalParams::new(0.2, 1.3),
                NormalParams::new(0.2, 1.1),
            ],
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n_subjects == 0 {
            return Err(Error::invalid("n_subjects must be at least 1"));
        }
        if !(positive(self.max_follow_up) || self.max_follow_up == f64::INFINITY) {
            return Err(Error::invalid("max_follow_up must be positive"));
        }
        if !positive(self.event_shape) || !positive(self.censor_shape) {
            return Err(Error::invalid("Weibull shapes must be positive"));
        }
        if !self.event_log_scale.is_finite() || !self.censor_log_scale.is_finite() {
            return Err(Error::invalid("Weibull log-scales must be finite"));
        }
        if self.coefficients.len() != self.covariate_params.len() {
            return Err(Error::invalid(format!(
                "{} coefficients but {} covariate distributions",
                self.coefficients.len(),
                self.covariate_params.len()
            )));
        }
        if self.coefficients.is_empty() {
            return Err(Error::invalid("at least one covariate is required"));
        }
        if self.coefficients.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        if self
            .covariate_params
            .iter()
            .any(|p| !p.mean.is_finite() || !(p.variance >= 0.0 && p.variance.is_finite()))
        {
            return Err(Error::invalid(
                "covariate means must be finite and variances non-negative",
            ));
        }
        Ok(())
    }

    pub fn n_covariates(&self) -> usize {
        self.coefficients.len()
    }
}

/// Draws a dataset. Subjects are generated sequentially from one ChaCha8
/// stream seeded with `cfg.seed`: covariates first, then the event draw, then
/// the censoring draw.
pub fn simulate(cfg: &SimConfig) -> Result<SurvivalDataset> {
    cfg.validate()?;
    let d = cfg.n_covariates();
    let n = cfg.n_subjects;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sds: Vec<f64> = cfg
        .covariate_params
        .iter()
        .map(|p| p.variance.sqrt())
        .collect();

    let mut values = Vec::with_capacity(n * d);
    let mut time = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    for _ in 0..n {
        let mut linear = cfg.event_log_scale;
        for ((p, sd), beta) in cfg.covariate_params.iter().zip(&sds).zip(&cfg.coefficients) {
            let z: f64 = StandardNormal.sample(&mut rng);
            let x = p.mean + sd * z;
            linear += beta * x;
            values.push(x);
        }
        let e: f64 = Exp1.sample(&mut rng);
        let e_c: f64 = Exp1.sample(&mut rng);
        let event = linear.exp() * e.powf(1.0 / cfg.event_shape);
        let censor = cfg.censor_log_scale.exp() * e_c.powf(1.0 / cfg.censor_shape);
        let observed = event <= censor && event <= cfg.max_follow_up;
        let t = event
            .min(censor)
            .min(cfg.max_follow_up)
            .max(f64::MIN_POSITIVE);
        time.push(t);
        status.push(u8::from(observed));
    }
    let names = (1..=d).map(|j| format!("x{j}")).collect();
    SurvivalDataset::new(
        SampleMatrix::from_row_major(n, d, values)?,
        time,
        status,
        names,
    )
}
