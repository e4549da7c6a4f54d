use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{softmax, Matrix};
use crate::sparse::SparseVector;

/// Multinomial naive Bayes over the classes observed in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    /// Observed class indices, ascending.
    pub classes: Vec<usize>,
    pub log_priors: Vec<f64>,
    /// `classes × dim` smoothed log-likelihoods.
    pub log_likelihoods: Matrix,
    pub smoothing: f64,
}

fn check_counts(x: &SparseVector) -> Result<()> {
    match x.iter().find(|&(_, v)| v < 0.0) {
        Some((index, value)) => Err(Error::NegativeFeature { index, value }),
        None => Ok(()),
    }
}

pub fn train_naive_bayes(data: &[(SparseVector, usize)], smoothing: f64) -> Result<NaiveBayesModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(smoothing > 0.0) {
        return Err(Error::InvalidConfig("naive Bayes smoothing must be positive".into()));
    }
    let dim = data[0].0.dim();
    let mut classes: Vec<usize> = data.iter().map(|(_, c)| *c).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut doc_counts = vec![0usize; classes.len()];
    let mut feature_counts = Matrix::zeros(classes.len(), dim);
    for (x, c) in data {
        x.check_dim(dim)?;
        check_counts(x)?;
        let k = classes.binary_search(c).unwrap();
        doc_counts[k] += 1;
        x.axpy_into(1.0, feature_counts.row_mut(k));
    }

    let n = data.len() as f64;
    let log_priors = doc_counts.iter().map(|&c| (c as f64 / n).ln()).collect();
    let mut log_likelihoods = Matrix::zeros(classes.len(), dim);
    for k in 0..classes.len() {
        let counts = feature_counts.row(k);
        let denom = (counts.iter().sum::<f64>() + smoothing * dim as f64).ln();
        for (out, c) in log_likelihoods.row_mut(k).iter_mut().zip(counts) {
            *out = (c + smoothing).ln() - denom;
        }
    }
    Ok(NaiveBayesModel {
        classes,
        log_priors,
        log_likelihoods,
        smoothing,
    })
}

impl NaiveBayesModel {
    pub fn dim(&self) -> usize {
        self.log_likelihoods.cols()
    }

    /// Unnormalized joint log-probabilities `ln P(c) + Σ x_j ln P(j|c)`.
    pub fn joint_log_scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        x.check_dim(self.dim())?;
        check_counts(x)?;
        Ok(self
            .log_priors
            .iter()
            .enumerate()
            .map(|(k, lp)| lp + x.dot_dense(self.log_likelihoods.row(k)))
            .collect())
    }

    /// Posterior over `classes`.
    pub fn posterior(&self, x: &SparseVector) -> Result<Vec<f64>> {
        Ok(softmax(&self.joint_log_scores(x)?))
    }

    /// Log-posteriors over `classes`.
    pub fn log_posterior(&self, x: &SparseVector) -> Result<Vec<f64>> {
        let s = self.joint_log_scores(x)?;
        let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        Ok(s.iter().map(|v| v - lse).collect())
    }
}
