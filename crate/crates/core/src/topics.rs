//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Per-document proportions `theta` and topic-word distributions `phi` are
//! averaged over samples taken every `sample_lag` sweeps after burn-in.
//! Unseen documents are folded in against a frozen `phi`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TokenSequence;
use crate::linalg::Matrix;
use crate::seed::{derive_seed, rng, Rng};
use crate::term_index::TermIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaConfig {
    pub topics: usize,
    /// Defaults to `50 / topics` when unset.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 20,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            burn_in: 200,
            sample_lag: 10,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics.max(1) as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::InvalidConfig("lda topics must be at least 1".into()));
        }
        if !(self.alpha() > 0.0) || !(self.beta > 0.0) {
            return Err(Error::InvalidConfig("lda alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub vocab: TermIndex,
    /// Row-major `topics × |V|` counts of the final sampler state.
    pub topic_word_counts: Vec<u32>,
    pub topic_counts: Vec<u32>,
    pub phi: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredTopics {
    pub theta: Vec<f64>,
    /// No token was in the model vocabulary; `theta` is then uniform.
    pub all_oov: bool,
}

/// Token-topic assignments and the count tables they induce.
#[derive(Debug, Clone)]
pub struct GibbsState {
    topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u32>,
    probs: Vec<f64>,
}

impl GibbsState {
    /// Random initial assignment of every token.
    pub fn new(docs: Vec<Vec<usize>>, vocab_size: usize, topics: usize, alpha: f64, beta: f64, rng: &mut Rng) -> Self {
        let mut st = GibbsState {
            topics,
            vocab_size,
            alpha,
            beta,
            assignments: Vec::with_capacity(docs.len()),
            doc_topic: vec![0; docs.len() * topics],
            topic_word: vec![0; topics * vocab_size],
            topic_totals: vec![0; topics],
            probs: vec![0.0; topics],
            docs: Vec::new(),
        };
        for (d, doc) in docs.iter().enumerate() {
            let z: Vec<usize> = doc.iter().map(|_| rng.gen_range(0..topics)).collect();
            for (&w, &t) in doc.iter().zip(&z) {
                st.doc_topic[d * topics + t] += 1;
                st.topic_word[t * vocab_size + w] += 1;
                st.topic_totals[t] += 1;
            }
            st.assignments.push(z);
        }
        st.docs = docs;
        st
    }

    /// Resamples every token once, in document order.
    pub fn sweep(&mut self, rng: &mut Rng) {
        let (t_n, v_n) = (self.topics, self.vocab_size);
        let v_beta = v_n as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d * t_n + old] -= 1;
                self.topic_word[old * v_n + w] -= 1;
                self.topic_totals[old] -= 1;

                let mut acc = 0.0;
                for t in 0..t_n {
                    let p = (self.doc_topic[d * t_n + t] as f64 + self.alpha)
                        * (self.topic_word[t * v_n + w] as f64 + self.beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                    acc += p;
                    self.probs[t] = acc;
                }
                let new = draw(&self.probs, rng);

                self.assignments[d][i] = new;
                self.doc_topic[d * t_n + new] += 1;
                self.topic_word[new * v_n + w] += 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    /// Recounts the tables from the assignments and compares.
    pub fn counts_consistent(&self) -> bool {
        let (t_n, v_n) = (self.topics, self.vocab_size);
        let mut dt = vec![0u32; self.docs.len() * t_n];
        let mut tw = vec![0u32; t_n * v_n];
        for (d, (doc, z)) in self.docs.iter().zip(&self.assignments).enumerate() {
            for (&w, &t) in doc.iter().zip(z) {
                dt[d * t_n + t] += 1;
                tw[t * v_n + w] += 1;
            }
        }
        let totals_match = (0..t_n).all(|t| tw[t * v_n..(t + 1) * v_n].iter().sum::<u32>() == self.topic_totals[t]);
        dt == self.doc_topic && tw == self.topic_word && totals_match
    }

    /// Corpus frequency of `w` equals its count summed over topics.
    pub fn word_total(&self, w: usize) -> u32 {
        (0..self.topics).map(|t| self.topic_word[t * self.vocab_size + w]).sum()
    }

    fn theta_into(&self, out: &mut Matrix) {
        let t_n = self.topics;
        for (d, doc) in self.docs.iter().enumerate() {
            let denom = doc.len() as f64 + t_n as f64 * self.alpha;
            for t in 0..t_n {
                let v = (self.doc_topic[d * t_n + t] as f64 + self.alpha) / denom;
                out.set(d, t, out.get(d, t) + v);
            }
        }
    }

    fn phi_into(&self, out: &mut Matrix) {
        let v_n = self.vocab_size;
        for t in 0..self.topics {
            let denom = self.topic_totals[t] as f64 + v_n as f64 * self.beta;
            for w in 0..v_n {
                let v = (self.topic_word[t * v_n + w] as f64 + self.beta) / denom;
                out.set(t, w, out.get(t, w) + v);
            }
        }
    }
}

fn draw(cumulative: &[f64], rng: &mut Rng) -> usize {
    let u = rng.gen::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

fn normalize_rows(m: &mut Matrix) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
}

/// Sweeps after which a sample is averaged: every `lag` after burn-in,
/// falling back to the last sweep when that leaves none.
fn is_sample_sweep(sweep: usize, cfg: &LdaConfig) -> bool {
    let lag = cfg.sample_lag.max(1);
    if cfg.iterations <= cfg.burn_in {
        return sweep + 1 == cfg.iterations;
    }
    sweep >= cfg.burn_in && (sweep - cfg.burn_in) % lag == 0
}

pub fn fit_lda(corpus: &[TokenSequence], config: &LdaConfig) -> Result<(LdaModel, Matrix)> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = TermIndex::from_documents(corpus.iter().map(|d| d.iter()));
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary("topics".into()));
    }
    let docs: Vec<Vec<usize>> = corpus.iter().map(|d| vocab.encode(d)).collect();
    let (t_n, v_n) = (config.topics, vocab.len());
    let mut r = rng(derive_seed(config.seed, "lda"));
    let mut st = GibbsState::new(docs, v_n, t_n, config.alpha(), config.beta, &mut r);

    let mut theta = Matrix::zeros(corpus.len(), t_n);
    let mut phi = Matrix::zeros(t_n, v_n);
    let mut samples = 0;
    for sweep in 0..config.iterations {
        st.sweep(&mut r);
        debug_assert!(st.counts_consistent());
        if is_sample_sweep(sweep, config) {
            st.theta_into(&mut theta);
            st.phi_into(&mut phi);
            samples += 1;
        }
    }
    if samples == 0 {
        st.theta_into(&mut theta);
        st.phi_into(&mut phi);
    }
    normalize_rows(&mut theta);
    normalize_rows(&mut phi);
    if !theta.all_finite() || !phi.all_finite() {
        return Err(Error::NonFinite("topic proportions".into()));
    }
    let model = LdaModel {
        config: config.clone(),
        vocab,
        topic_word_counts: st.topic_word,
        topic_counts: st.topic_totals,
        phi,
    };
    Ok((model, theta))
}

impl LdaModel {
    pub fn topics(&self) -> usize {
        self.config.topics
    }
}

/// Fold-in Gibbs sampling of one document against the frozen `phi`,
/// averaging the smoothed proportions over the second half of the sweeps.
pub fn infer_theta(model: &LdaModel, tokens: &TokenSequence, iterations: usize, seed: u64) -> InferredTopics {
    let t_n = model.topics();
    let ids = model.vocab.encode(tokens);
    if ids.is_empty() {
        return InferredTopics {
            theta: vec![1.0 / t_n as f64; t_n],
            all_oov: true,
        };
    }
    let alpha = model.config.alpha();
    let mut r = rng(derive_seed(seed, "lda-infer"));
    let mut z: Vec<usize> = ids.iter().map(|_| r.gen_range(0..t_n)).collect();
    let mut counts = vec![0u32; t_n];
    for &t in &z {
        counts[t] += 1;
    }
    let denom = ids.len() as f64 + t_n as f64 * alpha;
    let smoothed = |counts: &[u32]| counts.iter().map(|&c| (c as f64 + alpha) / denom).collect::<Vec<f64>>();

    let mut acc = vec![0.0; t_n];
    let mut samples = 0;
    let mut probs = vec![0.0; t_n];
    let start = iterations / 2;
    for sweep in 0..iterations {
        for (i, &w) in ids.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut s = 0.0;
            for t in 0..t_n {
                s += (counts[t] as f64 + alpha) * model.phi.get(t, w);
                probs[t] = s;
            }
            z[i] = draw(&probs, &mut r);
            counts[z[i]] += 1;
        }
        if sweep >= start {
            for (a, v) in acc.iter_mut().zip(smoothed(&counts)) {
                *a += v;
            }
            samples += 1;
        }
    }
    let theta = if samples == 0 {
        smoothed(&counts)
    } else {
        let s: f64 = acc.iter().sum();
        acc.iter().map(|v| v / s).collect()
    };
    InferredTopics { theta, all_oov: false }
}
