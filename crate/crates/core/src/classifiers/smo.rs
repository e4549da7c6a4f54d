//! Linear soft-margin SVM trained by sequential minimal optimization.
//!
//! Each step picks the maximal violating pair (first-order working-set
//! selection) and solves the two-variable subproblem analytically. The
//! solver stops once the largest violation is at most `tol`, which leaves
//! every example within `tol` of its KKT condition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoConfig {
    pub c: f64,
    pub tol: f64,
    /// Pair updates are capped at `max_passes * max(n, 100)`.
    pub max_passes: usize,
    /// Unused by the deterministic pair selection; kept for config symmetry.
    pub seed: u64,
}

impl Default for SmoConfig {
    fn default() -> Self {
        SmoConfig {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmBinaryModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Indices of examples with a non-zero dual.
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    pub kernel: Kernel,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SvmBinaryModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &SparseVector) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(x.dot_dense(&self.weights) + self.bias)
    }
}

/// Kernel rows cached up to a fixed memory budget.
struct RowCache<'a> {
    xs: &'a [&'a SparseVector],
    rows: Vec<Option<Vec<f64>>>,
    cached: usize,
    limit: usize,
}

impl<'a> RowCache<'a> {
    fn new(xs: &'a [&'a SparseVector]) -> Self {
        let n = xs.len();
        let budget_floats = 4 * 1024 * 1024;
        RowCache {
            xs,
            rows: vec![None; n],
            cached: 0,
            limit: (budget_floats / n.max(1)).max(2),
        }
    }

    fn row(&mut self, i: usize) -> Vec<f64> {
        if let Some(r) = &self.rows[i] {
            return r.clone();
        }
        let xi = self.xs[i];
        let r: Vec<f64> = self.xs.iter().map(|x| xi.dot(x)).collect();
        if self.cached < self.limit {
            self.rows[i] = Some(r.clone());
            self.cached += 1;
        }
        r
    }
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && alpha < c) || (y > 0.0 && alpha > 0.0)
}

/// Largest `-y G` over the up set and smallest over the low set.
fn violating_pair(alphas: &[f64], ys: &[f64], grad: &[f64], c: f64) -> Option<(usize, f64, usize, f64)> {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for t in 0..alphas.len() {
        let v = -ys[t] * grad[t];
        if in_up(alphas[t], ys[t], c) && up.map_or(true, |(_, m)| v > m) {
            up = Some((t, v));
        }
        if in_low(alphas[t], ys[t], c) && low.map_or(true, |(_, m)| v < m) {
            low = Some((t, v));
        }
    }
    match (up, low) {
        (Some((i, m)), Some((j, mm))) => Some((i, m, j, mm)),
        _ => None,
    }
}

pub fn smo_solve(data: &[(SparseVector, f64)], config: &SmoConfig) -> Result<SvmBinaryModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(config.c > 0.0) || !(config.tol > 0.0) {
        return Err(Error::InvalidConfig("svm C and tol must be positive".into()));
    }
    let dim = data[0].0.dim();
    for (x, y) in data {
        x.check_dim(dim)?;
        if *y != 1.0 && *y != -1.0 {
            return Err(Error::InvalidConfig(format!("svm label must be +1 or -1, got {y}")));
        }
    }
    if !(data.iter().any(|(_, y)| *y > 0.0) && data.iter().any(|(_, y)| *y < 0.0)) {
        return Err(Error::SingleClass);
    }

    let n = data.len();
    let c = config.c;
    let xs: Vec<&SparseVector> = data.iter().map(|(x, _)| x).collect();
    let ys: Vec<f64> = data.iter().map(|(_, y)| *y).collect();
    let diag: Vec<f64> = xs.iter().map(|x| x.norm_sq()).collect();
    let mut cache = RowCache::new(&xs);

    let mut alphas = vec![0.0; n];
    // G = Q alpha - e, with Q_ij = y_i y_j <x_i, x_j>
    let mut grad = vec![-1.0; n];
    let mut weights = vec![0.0; dim];
    let max_iter = config.max_passes.max(1).saturating_mul(n.max(100));
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let Some((i, m_up, j, m_low)) = violating_pair(&alphas, &ys, &grad, c) else {
            converged = true;
            break;
        };
        if m_up - m_low <= config.tol {
            converged = true;
            break;
        }
        let ki = cache.row(i);
        let kj = cache.row(j);
        let eta = (diag[i] + diag[j] - 2.0 * ki[j]).max(1e-12);

        // alpha_i += y_i * lambda, alpha_j -= y_j * lambda keeps sum(y alpha) fixed.
        let bound_i = if ys[i] > 0.0 { c - alphas[i] } else { alphas[i] };
        let bound_j = if ys[j] > 0.0 { alphas[j] } else { c - alphas[j] };
        let mut lambda = (m_up - m_low) / eta;
        let mut clip_i = false;
        let mut clip_j = false;
        if lambda >= bound_i {
            lambda = bound_i;
            clip_i = true;
        }
        if lambda >= bound_j {
            lambda = bound_j;
            clip_j = true;
            clip_i = bound_i == bound_j;
        }

        alphas[i] += ys[i] * lambda;
        alphas[j] -= ys[j] * lambda;
        if clip_i {
            alphas[i] = if ys[i] > 0.0 { c } else { 0.0 };
        }
        if clip_j {
            alphas[j] = if ys[j] > 0.0 { 0.0 } else { c };
        }

        // w changes by lambda * (x_i - x_j).
        xs[i].axpy_into(lambda, &mut weights);
        xs[j].axpy_into(-lambda, &mut weights);
        for t in 0..n {
            grad[t] += ys[t] * lambda * (ki[t] - kj[t]);
        }
        iterations += 1;
    }

    if !weights.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("svm weights".into()));
    }
    // Refresh the gradient from w so the bias matches the returned weights.
    for t in 0..n {
        grad[t] = ys[t] * xs[t].dot_dense(&weights) - 1.0;
    }
    let bias = bias_from(&alphas, &ys, &grad, c);
    if !converged {
        log::warn!("smo stopped after {iterations} updates without reaching tol {}", config.tol);
    }
    let support = (0..n).filter(|&t| alphas[t] > 0.0).collect();
    Ok(SvmBinaryModel {
        alphas,
        bias,
        support,
        weights,
        kernel: Kernel::Linear,
        c,
        converged,
        iterations,
    })
}

fn bias_from(alphas: &[f64], ys: &[f64], grad: &[f64], c: f64) -> f64 {
    let free: Vec<f64> = (0..alphas.len())
        .filter(|&t| alphas[t] > 0.0 && alphas[t] < c)
        .map(|t| -ys[t] * grad[t])
        .collect();
    if !free.is_empty() {
        return free.iter().sum::<f64>() / free.len() as f64;
    }
    match violating_pair(alphas, ys, grad, c) {
        Some((_, m_up, _, m_low)) => (m_up + m_low) / 2.0,
        None => 0.0,
    }
}

/// One-vs-rest wrapper: one binary machine per observed class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmOvrModel {
    pub classes: Vec<usize>,
    pub members: Vec<SvmBinaryModel>,
    pub dim: usize,
}

pub fn train_svm_ovr(data: &[(SparseVector, usize)], config: &SmoConfig) -> Result<SvmOvrModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut classes: Vec<usize> = data.iter().map(|(_, c)| *c).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let members = classes
        .par_iter()
        .map(|&k| {
            let binary: Vec<(SparseVector, f64)> = data
                .iter()
                .map(|(x, c)| (x.clone(), if *c == k { 1.0 } else { -1.0 }))
                .collect();
            smo_solve(&binary, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmOvrModel {
        classes,
        dim: data[0].0.dim(),
        members,
    })
}

impl SvmOvrModel {
    /// Decision values aligned with `classes`.
    pub fn decisions(&self, x: &SparseVector) -> Result<Vec<f64>> {
        x.check_dim(self.dim)?;
        self.members.iter().map(|m| m.decision(x)).collect()
    }
}
