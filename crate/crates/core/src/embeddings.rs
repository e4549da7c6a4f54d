//! Paragraph-vector document embeddings (PV-DM, mean combination) trained
//! by SGD with negative sampling.
//!
//! For each position the hidden vector is the mean of the document vector and
//! the context word vectors inside the window. The center word's output
//! vector is pushed towards the hidden vector and `negatives` words drawn
//! from the unigram distribution raised to 0.75 are pushed away.
//!
//! Training parameters live in [`AtomicMatrix`] storage so several threads
//! can update them without locks. With one thread the result is
//! bit-reproducible from the seed.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TokenSequence;
use crate::linalg::{dot, sigmoid, softplus, Matrix};
use crate::seed::{derive_seed, rng, Rng};
use crate::term_index::TermIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PvConfig {
    pub dims: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
    /// 1 = deterministic; more threads train lock-free and nondeterministically.
    pub threads: usize,
}

impl Default for PvConfig {
    fn default() -> Self {
        PvConfig {
            dims: 100,
            window: 5,
            negatives: 5,
            epochs: 20,
            lr_start: 0.025,
            lr_end: 0.0001,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvModel {
    pub config: PvConfig,
    pub vocab: TermIndex,
    pub word_vectors: Matrix,
    pub doc_vectors: Matrix,
    pub output_vectors: Matrix,
    /// Negative-sampling distribution over `vocab`.
    pub unigram_probs: Vec<f64>,
    /// Mean per-position loss of each training epoch.
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredVector {
    pub vector: Vec<f64>,
    /// True when no token was in the model vocabulary; `vector` is then zero.
    pub all_oov: bool,
}

/// Shared parameter matrix of `f64` bit patterns. Concurrent updates may
/// lose increments (Hogwild-style) but never tear a value.
pub struct AtomicMatrix {
    cols: usize,
    data: Vec<AtomicU64>,
}

impl AtomicMatrix {
    pub fn from_matrix(m: &Matrix) -> Self {
        AtomicMatrix {
            cols: m.cols(),
            data: m.as_slice().iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    pub fn into_matrix(self, rows: usize) -> Matrix {
        let data = self
            .data
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect();
        Matrix::from_vec(rows, self.cols, data)
    }

    pub fn read_row(&self, r: usize, out: &mut [f64]) {
        let base = r * self.cols;
        for (c, o) in out.iter_mut().enumerate() {
            *o = f64::from_bits(self.data[base + c].load(Ordering::Relaxed));
        }
    }

    pub fn add_row(&self, r: usize, scale: f64, delta: &[f64]) {
        let base = r * self.cols;
        for (c, d) in delta.iter().enumerate() {
            let cell = &self.data[base + c];
            let old = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((old + scale * d).to_bits(), Ordering::Relaxed);
        }
    }
}

/// Loss and gradients of one negative-sampling example.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NsGradients {
    pub loss: f64,
    pub d_doc: Vec<f64>,
    /// Gradient shared by every context word vector (they enter the mean
    /// with equal weight).
    pub d_context: Vec<f64>,
    pub d_target: Vec<f64>,
    pub d_negatives: Vec<Vec<f64>>,
}

/// Loss `-ln σ(t·h) - Σ ln σ(-n·h)` with `h = mean(doc, context...)`,
/// and its gradient with respect to every participating vector.
pub fn negative_sampling_gradients(
    doc: &[f64],
    context: &[&[f64]],
    target: &[f64],
    negatives: &[&[f64]],
) -> NsGradients {
    let mut g = NsGradients::default();
    let mut hidden = vec![0.0; doc.len()];
    negative_sampling_into(doc, context, target, negatives, &mut hidden, &mut g);
    g
}

fn negative_sampling_into(
    doc: &[f64],
    context: &[&[f64]],
    target: &[f64],
    negatives: &[&[f64]],
    hidden: &mut [f64],
    g: &mut NsGradients,
) {
    let d = doc.len();
    let n_in = (1 + context.len()) as f64;
    hidden.copy_from_slice(doc);
    for c in context {
        for (h, v) in hidden.iter_mut().zip(c.iter()) {
            *h += v;
        }
    }
    for h in hidden.iter_mut() {
        *h /= n_in;
    }

    let mut d_hidden = vec![0.0; d];
    let score = dot(target, hidden);
    g.loss = softplus(-score);
    let coef = sigmoid(score) - 1.0;
    g.d_target.clear();
    g.d_target.extend(hidden.iter().map(|h| coef * h));
    for (dh, t) in d_hidden.iter_mut().zip(target) {
        *dh += coef * t;
    }

    g.d_negatives.resize(negatives.len(), Vec::new());
    for (neg, dn) in negatives.iter().zip(g.d_negatives.iter_mut()) {
        let score = dot(neg, hidden);
        g.loss += softplus(score);
        let coef = sigmoid(score);
        dn.clear();
        dn.extend(hidden.iter().map(|h| coef * h));
        for (dh, v) in d_hidden.iter_mut().zip(neg.iter()) {
            *dh += coef * v;
        }
    }

    g.d_doc.clear();
    g.d_doc.extend(d_hidden.iter().map(|v| v / n_in));
    g.d_context.clear();
    g.d_context.extend_from_slice(&g.d_doc);
}

fn uniform_matrix(rng: &mut Rng, rows: usize, d: usize) -> Matrix {
    let bound = 0.5 / d as f64;
    let data = (0..rows * d).map(|_| rng.gen_range(-bound..bound)).collect();
    Matrix::from_vec(rows, d, data)
}

fn uniform_vector(seed: u64, d: usize) -> Vec<f64> {
    uniform_matrix(&mut rng(seed), 1, d).as_slice().to_vec()
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn sample_index(cum: &[f64], rng: &mut Rng) -> usize {
    let total = *cum.last().unwrap();
    let u = rng.gen::<f64>() * total;
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

/// Inputs shared by training and inference for one document pass.
struct PassCtx<'a> {
    window: usize,
    negatives: usize,
    cum: &'a [f64],
    words: &'a AtomicMatrix,
    outputs: &'a AtomicMatrix,
    update_words: bool,
    update_outputs: bool,
}

struct Scratch {
    doc: Vec<f64>,
    ctx: Vec<Vec<f64>>,
    target: Vec<f64>,
    negs: Vec<Vec<f64>>,
    neg_ids: Vec<usize>,
    hidden: Vec<f64>,
    grads: NsGradients,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Scratch {
            doc: vec![0.0; d],
            ctx: Vec::new(),
            target: vec![0.0; d],
            negs: Vec::new(),
            neg_ids: Vec::new(),
            hidden: vec![0.0; d],
            grads: NsGradients::default(),
        }
    }
}

/// SGD over every position of one document; returns the summed loss.
fn train_document(
    pc: &PassCtx<'_>,
    ids: &[usize],
    docs: &AtomicMatrix,
    doc_row: usize,
    lr: &dyn Fn() -> f64,
    rng: &mut Rng,
    s: &mut Scratch,
) -> f64 {
    let d = s.doc.len();
    let mut total = 0.0;
    for pos in 0..ids.len() {
        let lo = pos.saturating_sub(pc.window);
        let hi = (pos + pc.window + 1).min(ids.len());
        let ctx_ids: Vec<usize> = (lo..hi).filter(|&j| j != pos).map(|j| ids[j]).collect();
        let target = ids[pos];

        s.neg_ids.clear();
        for _ in 0..pc.negatives {
            let w = sample_index(pc.cum, rng);
            if w != target {
                s.neg_ids.push(w);
            }
        }

        docs.read_row(doc_row, &mut s.doc);
        s.ctx.resize(ctx_ids.len(), vec![0.0; d]);
        for (buf, &w) in s.ctx.iter_mut().zip(&ctx_ids) {
            buf.resize(d, 0.0);
            pc.words.read_row(w, buf);
        }
        pc.outputs.read_row(target, &mut s.target);
        s.negs.resize(s.neg_ids.len(), vec![0.0; d]);
        for (buf, &w) in s.negs.iter_mut().zip(&s.neg_ids) {
            buf.resize(d, 0.0);
            pc.outputs.read_row(w, buf);
        }

        let ctx_refs: Vec<&[f64]> = s.ctx.iter().map(|v| v.as_slice()).collect();
        let neg_refs: Vec<&[f64]> = s.negs.iter().map(|v| v.as_slice()).collect();
        negative_sampling_into(&s.doc, &ctx_refs, &s.target, &neg_refs, &mut s.hidden, &mut s.grads);
        total += s.grads.loss;

        let step = -lr();
        if pc.update_outputs {
            pc.outputs.add_row(target, step, &s.grads.d_target);
            for (&w, g) in s.neg_ids.iter().zip(&s.grads.d_negatives) {
                pc.outputs.add_row(w, step, g);
            }
        }
        docs.add_row(doc_row, step, &s.grads.d_doc);
        if pc.update_words {
            for &w in &ctx_ids {
                pc.words.add_row(w, step, &s.grads.d_context);
            }
        }
    }
    total
}

impl PvModel {
    /// Doc-vector initialization `train_pv` starts from.
    pub fn initial_doc_vectors(config: &PvConfig, n_docs: usize) -> Matrix {
        uniform_matrix(&mut rng(derive_seed(config.seed, "pv-docs")), n_docs, config.dims)
    }

    pub fn initial_word_vectors(config: &PvConfig, n_words: usize) -> Matrix {
        uniform_matrix(&mut rng(derive_seed(config.seed, "pv-words")), n_words, config.dims)
    }

    pub fn dims(&self) -> usize {
        self.config.dims
    }

    pub fn doc_vector(&self, doc: usize) -> &[f64] {
        self.doc_vectors.row(doc)
    }

    pub fn is_finite(&self) -> bool {
        self.word_vectors.all_finite() && self.doc_vectors.all_finite() && self.output_vectors.all_finite()
    }
}

pub fn train_pv(corpus: &[TokenSequence], config: &PvConfig) -> Result<PvModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if config.dims == 0 {
        return Err(Error::InvalidConfig("pv dims must be at least 1".into()));
    }
    let vocab = TermIndex::from_documents(corpus.iter().map(|d| d.iter()));
    let encoded: Vec<Vec<usize>> = corpus.iter().map(|d| vocab.encode(d)).collect();

    let mut counts = vec![0.0f64; vocab.len()];
    for &w in encoded.iter().flatten() {
        counts[w] += 1.0;
    }
    let weights: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let z: f64 = weights.iter().sum();
    let unigram_probs: Vec<f64> = weights.iter().map(|w| w / z.max(f64::MIN_POSITIVE)).collect();
    let cum = cumulative(&unigram_probs);

    let d = config.dims;
    let words = AtomicMatrix::from_matrix(&PvModel::initial_word_vectors(config, vocab.len()));
    let docs = AtomicMatrix::from_matrix(&PvModel::initial_doc_vectors(config, corpus.len()));
    let outputs = AtomicMatrix::from_matrix(&Matrix::zeros(vocab.len(), d));

    let positions_per_epoch: usize = encoded.iter().map(Vec::len).sum();
    let total_positions = (positions_per_epoch * config.epochs).max(1) as f64;
    let processed = AtomicUsize::new(0);
    let threads = config.threads.max(1);

    let pc = PassCtx {
        window: config.window,
        negatives: config.negatives,
        cum: &cum,
        words: &words,
        outputs: &outputs,
        update_words: true,
        update_outputs: true,
    };
    let lr = || {
        let p = processed.fetch_add(1, Ordering::Relaxed) as f64 / total_positions;
        config.lr_start - (config.lr_start - config.lr_end) * p.min(1.0)
    };

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut rngs: Vec<Rng> = (0..threads)
        .map(|t| rng(derive_seed(config.seed, &format!("pv-train-{t}"))))
        .collect();

    if positions_per_epoch > 0 && !vocab.is_empty() {
        for _ in 0..config.epochs {
            let loss = if threads == 1 {
                let mut s = Scratch::new(d);
                let r = &mut rngs[0];
                encoded
                    .iter()
                    .enumerate()
                    .map(|(i, ids)| train_document(&pc, ids, &docs, i, &lr, r, &mut s))
                    .sum::<f64>()
            } else {
                let chunk = encoded.len().div_ceil(threads);
                std::thread::scope(|scope| {
                    let handles: Vec<_> = rngs
                        .iter_mut()
                        .enumerate()
                        .map(|(t, r)| {
                            let (pc, docs, lr, encoded) = (&pc, &docs, &lr, &encoded);
                            scope.spawn(move || {
                                let mut s = Scratch::new(d);
                                let start = (t * chunk).min(encoded.len());
                                let end = ((t + 1) * chunk).min(encoded.len());
                                (start..end)
                                    .map(|i| train_document(pc, &encoded[i], docs, i, lr, r, &mut s))
                                    .sum::<f64>()
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().unwrap()).sum::<f64>()
                })
            };
            epoch_losses.push(loss / positions_per_epoch as f64);
        }
    }

    let model = PvModel {
        config: config.clone(),
        word_vectors: words.into_matrix(vocab.len()),
        doc_vectors: docs.into_matrix(corpus.len()),
        output_vectors: outputs.into_matrix(vocab.len()),
        vocab,
        unigram_probs,
        epoch_losses,
    };
    if !model.is_finite() {
        return Err(Error::NonFinite("paragraph-vector parameters".into()));
    }
    Ok(model)
}

/// Optimizes a fresh document vector for `tokens` with word and output
/// vectors frozen. Unknown tokens are skipped.
pub fn infer_vector(model: &PvModel, tokens: &TokenSequence, steps: usize, seed: u64) -> InferredVector {
    let d = model.dims();
    let ids = model.vocab.encode(tokens);
    if ids.is_empty() {
        return InferredVector {
            vector: vec![0.0; d],
            all_oov: true,
        };
    }
    let init = uniform_vector(derive_seed(seed, "pv-infer-init"), d);
    if steps == 0 {
        return InferredVector {
            vector: init,
            all_oov: false,
        };
    }

    let cum = cumulative(&model.unigram_probs);
    let words = AtomicMatrix::from_matrix(&model.word_vectors);
    let outputs = AtomicMatrix::from_matrix(&model.output_vectors);
    let doc = AtomicMatrix::from_matrix(&Matrix::from_vec(1, d, init));
    let pc = PassCtx {
        window: model.config.window,
        negatives: model.config.negatives,
        cum: &cum,
        words: &words,
        outputs: &outputs,
        update_words: false,
        update_outputs: false,
    };
    let mut r = rng(derive_seed(seed, "pv-infer-neg"));
    let mut s = Scratch::new(d);
    let total = (steps * ids.len()) as f64;
    let counter = AtomicUsize::new(0);
    let (lr0, lr1) = (model.config.lr_start, model.config.lr_end);
    let lr = || {
        let p = counter.fetch_add(1, Ordering::Relaxed) as f64 / total;
        lr0 - (lr0 - lr1) * p.min(1.0)
    };
    for _ in 0..steps {
        train_document(&pc, &ids, &doc, 0, &lr, &mut r, &mut s);
    }
    InferredVector {
        vector: doc.into_matrix(1).as_slice().to_vec(),
        all_oov: false,
    }
}
