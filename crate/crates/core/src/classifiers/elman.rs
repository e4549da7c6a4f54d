//! Elman recurrent network over token sequences.
//!
//! `h_t = tanh(W_xh e(x_t) + W_hh h_{t-1} + b_h)` with `h_0 = 0`; the final
//! state feeds a softmax layer. Trained per example by SGD on cross-entropy
//! with backpropagation truncated to `bptt_limit` steps.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TokenSequence;
use crate::linalg::{softmax, Matrix};
use crate::seed::{derive_seed, rng};
use crate::term_index::TermIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElmanConfig {
    pub embed: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub bptt_limit: usize,
    pub seed: u64,
}

impl Default for ElmanConfig {
    fn default() -> Self {
        ElmanConfig {
            embed: 50,
            hidden: 32,
            epochs: 30,
            lr: 0.05,
            bptt_limit: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmanParams {
    /// `|V| × e`
    pub emb: Matrix,
    /// `h × e`
    pub w_xh: Matrix,
    /// `h × h`
    pub w_hh: Matrix,
    pub b_h: Vec<f64>,
    /// `classes × h`
    pub w_hy: Matrix,
    pub b_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElmanGrads {
    /// One entry per time step reached by backpropagation; rows may repeat.
    pub emb_rows: Vec<(usize, Vec<f64>)>,
    pub w_xh: Matrix,
    pub w_hh: Matrix,
    pub b_h: Vec<f64>,
    pub w_hy: Matrix,
    pub b_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmanModel {
    pub config: ElmanConfig,
    pub vocab: TermIndex,
    pub classes: Vec<usize>,
    pub params: ElmanParams,
    pub epoch_losses: Vec<f64>,
    /// Training examples skipped because their token sequence was empty.
    pub skipped_empty: usize,
}

impl ElmanParams {
    pub fn zeros(vocab: usize, embed: usize, hidden: usize, classes: usize) -> Self {
        ElmanParams {
            emb: Matrix::zeros(vocab, embed),
            w_xh: Matrix::zeros(hidden, embed),
            w_hh: Matrix::zeros(hidden, hidden),
            b_h: vec![0.0; hidden],
            w_hy: Matrix::zeros(classes, hidden),
            b_y: vec![0.0; classes],
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_h.len()
    }

    pub fn embed(&self) -> usize {
        self.w_xh.cols()
    }

    /// Hidden states `h_1..h_T` (empty for an empty sequence).
    fn states(&self, ids: &[usize]) -> Vec<Vec<f64>> {
        let h_n = self.hidden();
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(ids.len());
        for &w in ids {
            let x = self.emb.row(w);
            let prev = states.last();
            let h: Vec<f64> = (0..h_n)
                .map(|r| {
                    let mut a = self.b_h[r] + crate::linalg::dot(self.w_xh.row(r), x);
                    if let Some(p) = prev {
                        a += crate::linalg::dot(self.w_hh.row(r), p);
                    }
                    a.tanh()
                })
                .collect();
            states.push(h);
        }
        states
    }

    fn output(&self, last: Option<&Vec<f64>>) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.b_y.len())
            .map(|k| self.b_y[k] + last.map_or(0.0, |h| crate::linalg::dot(self.w_hy.row(k), h)))
            .collect();
        softmax(&logits)
    }

    pub fn probabilities(&self, ids: &[usize]) -> Vec<f64> {
        let states = self.states(ids);
        self.output(states.last())
    }

    fn is_finite(&self) -> bool {
        self.emb.all_finite()
            && self.w_xh.all_finite()
            && self.w_hh.all_finite()
            && self.w_hy.all_finite()
            && self.b_h.iter().chain(&self.b_y).all(|v| v.is_finite())
    }
}

/// Cross-entropy of `target` and its truncated-BPTT gradient.
pub fn elman_loss_and_grads(params: &ElmanParams, ids: &[usize], target: usize, bptt_limit: usize) -> (f64, ElmanGrads) {
    let (h_n, e_n, c_n) = (params.hidden(), params.embed(), params.b_y.len());
    let states = params.states(ids);
    let probs = params.output(states.last());
    let loss = -probs[target].max(f64::MIN_POSITIVE).ln();

    let mut g = ElmanGrads {
        emb_rows: Vec::new(),
        w_xh: Matrix::zeros(h_n, e_n),
        w_hh: Matrix::zeros(h_n, h_n),
        b_h: vec![0.0; h_n],
        w_hy: Matrix::zeros(c_n, h_n),
        b_y: vec![0.0; c_n],
    };
    let mut d_logits = probs;
    d_logits[target] -= 1.0;
    g.b_y.copy_from_slice(&d_logits);
    let Some(last) = states.last() else {
        return (loss, g);
    };
    let mut dh = vec![0.0; h_n];
    for k in 0..c_n {
        for r in 0..h_n {
            g.w_hy.set(k, r, d_logits[k] * last[r]);
            dh[r] += params.w_hy.get(k, r) * d_logits[k];
        }
    }

    let t_len = ids.len();
    let stop = t_len.saturating_sub(bptt_limit.max(1));
    for t in (stop..t_len).rev() {
        let h = &states[t];
        let da: Vec<f64> = (0..h_n).map(|r| dh[r] * (1.0 - h[r] * h[r])).collect();
        let x = params.emb.row(ids[t]);
        let mut d_emb = vec![0.0; e_n];
        let mut dh_prev = vec![0.0; h_n];
        for r in 0..h_n {
            g.b_h[r] += da[r];
            for c in 0..e_n {
                g.w_xh.set(r, c, g.w_xh.get(r, c) + da[r] * x[c]);
                d_emb[c] += params.w_xh.get(r, c) * da[r];
            }
            if t > 0 {
                let prev = &states[t - 1];
                for c in 0..h_n {
                    g.w_hh.set(r, c, g.w_hh.get(r, c) + da[r] * prev[c]);
                    dh_prev[c] += params.w_hh.get(r, c) * da[r];
                }
            }
        }
        g.emb_rows.push((ids[t], d_emb));
        dh = dh_prev;
    }
    (loss, g)
}

fn apply(params: &mut ElmanParams, g: &ElmanGrads, lr: f64) {
    for (w, d) in &g.emb_rows {
        crate::linalg::axpy(-lr, d, params.emb.row_mut(*w));
    }
    crate::linalg::axpy(-lr, g.w_xh.as_slice(), params.w_xh.as_mut_slice());
    crate::linalg::axpy(-lr, g.w_hh.as_slice(), params.w_hh.as_mut_slice());
    crate::linalg::axpy(-lr, &g.b_h, &mut params.b_h);
    crate::linalg::axpy(-lr, g.w_hy.as_slice(), params.w_hy.as_mut_slice());
    crate::linalg::axpy(-lr, &g.b_y, &mut params.b_y);
}

fn uniform(m: &mut Matrix, bound: f64, r: &mut crate::seed::Rng) {
    for v in m.as_mut_slice() {
        *v = r.gen_range(-bound..bound);
    }
}

pub fn train_elman(data: &[(TokenSequence, usize)], config: &ElmanConfig) -> Result<ElmanModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if config.hidden == 0 || config.embed == 0 {
        return Err(Error::InvalidConfig("elman embed and hidden sizes must be at least 1".into()));
    }
    let vocab = TermIndex::from_documents(data.iter().map(|(t, _)| t.iter()));
    let mut classes: Vec<usize> = data.iter().map(|(_, c)| *c).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut examples = Vec::with_capacity(data.len());
    let mut skipped_empty = 0;
    for (tokens, c) in data {
        if tokens.is_empty() {
            skipped_empty += 1;
            continue;
        }
        examples.push((vocab.encode(tokens), classes.binary_search(c).unwrap()));
    }
    if skipped_empty > 0 {
        log::warn!("elman: skipped {skipped_empty} empty sequences");
    }

    let mut r = rng(derive_seed(config.seed, "elman-init"));
    let mut params = ElmanParams::zeros(vocab.len(), config.embed, config.hidden, classes.len());
    uniform(&mut params.emb, 0.5 / (config.embed as f64).sqrt(), &mut r);
    uniform(&mut params.w_xh, 1.0 / (config.embed as f64).sqrt(), &mut r);
    uniform(&mut params.w_hh, 1.0 / (config.hidden as f64).sqrt(), &mut r);
    uniform(&mut params.w_hy, 1.0 / (config.hidden as f64).sqrt(), &mut r);

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut shuffle = rng(derive_seed(config.seed, "elman-order"));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for &i in &order {
            let (ids, target) = &examples[i];
            let (loss, g) = elman_loss_and_grads(&params, ids, *target, config.bptt_limit);
            total += loss;
            apply(&mut params, &g, config.lr);
        }
        if !total.is_finite() {
            return Err(Error::NonFinite("elman training loss".into()));
        }
        epoch_losses.push(total / examples.len().max(1) as f64);
    }
    if !params.is_finite() {
        return Err(Error::NonFinite("elman weights".into()));
    }
    Ok(ElmanModel {
        config: config.clone(),
        vocab,
        classes,
        params,
        epoch_losses,
        skipped_empty,
    })
}

impl ElmanModel {
    /// Softmax probabilities aligned with `classes`; unknown tokens skipped.
    pub fn probabilities(&self, tokens: &TokenSequence) -> Vec<f64> {
        self.params.probabilities(&self.vocab.encode(tokens))
    }
}
