//! L2-regularized binary logistic regression with explicit coefficients.
//!
//! The loss is the class-weighted cross-entropy sum plus lambda * ||w||^2
//! with lambda = 1/C and the intercept left unpenalized. Minimization uses
//! the deterministic limited-memory quasi-Newton routine in [`crate::optim`];
//! the objective is convex, so the optimum is unique. Reductions run in
//! fixed left-to-right order, making training bitwise reproducible.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::PlattCalibrator;
use crate::features::{feature_index, fit_standardizer, Standardizer};
use crate::optim::{self, LbfgsParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    Uniform,
    /// Per-class weight N / (2 * N_c): classes contribute equally to the
    /// loss regardless of imbalance.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Inverse regularization strength; lambda = 1 / c.
    pub c: f64,
    pub max_iterations: usize,
    /// Convergence tolerance on the gradient max-norm.
    pub tolerance: f64,
    pub class_weight: ClassWeight,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            max_iterations: 2000,
            tolerance: 1e-8,
            class_weight: ClassWeight::Balanced,
            seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Invalid("regularization c must be > 0".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Invalid("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Invalid("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub iterations: usize,
    pub final_loss: f64,
    pub converged: bool,
    pub final_grad_max_norm: f64,
}

/// Trained model: intercept, one coefficient per feature (canonical order),
/// the standardizer it was fitted with, and an optional Platt calibrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub standardizer: Standardizer,
    pub calibrator: Option<PlattCalibrator>,
    pub config: TrainConfig,
    pub training: TrainingInfo,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Loss and gradient of the weighted regularized objective at `theta`
/// (theta[0] is the intercept). Exposed for the finite-difference checks.
pub fn loss_and_gradient(
    theta: &[f64],
    x: &[Vec<f64>],
    y: &[u8],
    weights: &[f64],
    lambda: f64,
    grad: &mut [f64],
) -> f64 {
    let n_features = theta.len() - 1;
    for g in grad.iter_mut() {
        *g = 0.0;
    }
    let mut loss = 0.0;
    for (i, row) in x.iter().enumerate() {
        let mut z = theta[0];
        for (j, v) in row.iter().enumerate() {
            z += theta[j + 1] * v;
        }
        let w = weights[i];
        let yi = y[i] as f64;
        loss += w * (softplus(z) - yi * z);
        let r = w * (sigmoid(z) - yi);
        grad[0] += r;
        for (j, v) in row.iter().enumerate() {
            grad[j + 1] += r * v;
        }
    }
    for j in 0..n_features {
        loss += lambda * theta[j + 1] * theta[j + 1];
        grad[j + 1] += 2.0 * lambda * theta[j + 1];
    }
    loss
}

pub fn class_weights(y: &[u8], scheme: ClassWeight) -> Result<Vec<f64>> {
    let n_pos = y.iter().filter(|l| **l == 1).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Insufficient(
            "training data must contain both classes".into(),
        ));
    }
    let (w0, w1) = match scheme {
        ClassWeight::Uniform => (1.0, 1.0),
        ClassWeight::Balanced => {
            let n = y.len() as f64;
            (n / (2.0 * n_neg as f64), n / (2.0 * n_pos as f64))
        }
    };
    Ok(y.iter().map(|l| if *l == 1 { w1 } else { w0 }).collect())
}

/// Trains on an already-standardized matrix and attaches `standardizer` to
/// the resulting model. Logs a warning (with the final gradient norm) when
/// the optimizer stops short of the tolerance.
pub fn train(
    z: &[Vec<f64>],
    y: &[u8],
    config: &TrainConfig,
    standardizer: Standardizer,
) -> Result<LogisticModel> {
    config.validate()?;
    if z.len() != y.len() {
        return Err(Error::Invalid(format!(
            "feature rows ({}) and labels ({}) disagree",
            z.len(),
            y.len()
        )));
    }
    if z.len() < 2 {
        return Err(Error::Insufficient("need at least 2 training rows".into()));
    }
    let n_features = standardizer.width();
    if z.iter().any(|row| row.len() != n_features) {
        return Err(Error::Invalid("ragged feature matrix".into()));
    }
    let weights = class_weights(y, config.class_weight)?;
    let lambda = 1.0 / config.c;
    let params = LbfgsParams {
        max_iterations: config.max_iterations,
        grad_tolerance: config.tolerance,
        ..Default::default()
    };
    let outcome = optim::minimize(
        |theta, grad| loss_and_gradient(theta, z, y, &weights, lambda, grad),
        vec![0.0; n_features + 1],
        &params,
    );
    if !outcome.converged {
        log::warn!(
            "training stopped after {} iterations with gradient max-norm {:.3e} (tolerance {:.3e})",
            outcome.iterations,
            outcome.grad_max_norm,
            config.tolerance
        );
    }
    if !outcome.loss.is_finite() {
        return Err(Error::Numeric("training loss diverged".into()));
    }
    Ok(LogisticModel {
        feature_names: standardizer.feature_names.clone(),
        intercept: outcome.x[0],
        coefficients: outcome.x[1..].to_vec(),
        standardizer,
        calibrator: None,
        config: *config,
        training: TrainingInfo {
            iterations: outcome.iterations,
            final_loss: outcome.loss,
            converged: outcome.converged,
            final_grad_max_norm: outcome.grad_max_norm,
        },
    })
}

/// Convenience path: fits the standardizer on the given raw rows (which must
/// be the training partition), standardizes, and trains.
pub fn fit(
    x_raw: &[Vec<f64>],
    y: &[u8],
    config: &TrainConfig,
    feature_names: &[String],
    fitted_on: &str,
) -> Result<LogisticModel> {
    let standardizer = fit_standardizer(x_raw, feature_names, fitted_on)?;
    let z: Vec<Vec<f64>> = x_raw.iter().map(|row| standardizer.apply(row)).collect();
    train(&z, y, config, standardizer)
}

impl LogisticModel {
    /// Raw decision score w0 + w . z for a raw (unstandardized) vector.
    pub fn decision_score(&self, x_raw: &[f64]) -> f64 {
        let z = self.standardizer.apply(x_raw);
        let mut s = self.intercept;
        for (w, v) in self.coefficients.iter().zip(&z) {
            s += w * v;
        }
        s
    }

    /// P(y = 1 | x): the sigmoid of the decision score, or the Platt
    /// calibrator applied to it when one is attached.
    pub fn predict_proba(&self, x_raw: &[f64]) -> f64 {
        let s = self.decision_score(x_raw);
        match &self.calibrator {
            Some(c) => c.apply(s),
            None => sigmoid(s),
        }
    }

    /// 1 iff the predicted probability is at least `threshold`.
    pub fn predict_label(&self, x_raw: &[f64], threshold: f64) -> u8 {
        u8::from(self.predict_proba(x_raw) >= threshold)
    }

    /// (feature, coefficient) pairs sorted by |coefficient| descending.
    pub fn coefficients_report(&self) -> Vec<(String, f64)> {
        let mut pairs: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.coefficients.iter().copied())
            .collect();
        pairs.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        pairs
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Invalid(format!("serialize model: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<LogisticModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: LogisticModel = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), 1, e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.feature_names.len() {
            return Err(Error::Invalid(format!(
                "model has {} coefficients for {} features",
                self.coefficients.len(),
                self.feature_names.len()
            )));
        }
        if self.standardizer.feature_names != self.feature_names {
            return Err(Error::Invalid(
                "model and standardizer feature names disagree".into(),
            ));
        }
        self.standardizer.validate()?;
        for name in &self.feature_names {
            if feature_index(name).is_none() {
                return Err(Error::Invalid(format!("unknown feature name {name:?}")));
            }
        }
        Ok(())
    }
}
