//! RAkEL: an ensemble of label-powerset classifiers, each trained on a
//! random k-subset of the labels, combined by thresholded voting.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{train_naive_bayes, train_svm_ovr, Classifier, Input, JointCategory, ModelKind, SmoConfig};
use crate::corpus::{EventRegistry, Sentiment};
use crate::error::{Error, Result};
use crate::linalg::argmax;
use crate::seed::{derive_seed, rng};
use crate::sparse::SparseVector;

/// Participant indicators followed by positive and negative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    participants: Vec<String>,
}

impl LabelSpace {
    pub fn new(participants: Vec<String>) -> Self {
        LabelSpace { participants }
    }

    pub fn from_registry(registry: &EventRegistry) -> Self {
        Self::new(registry.participants.clone())
    }

    pub fn len(&self) -> usize {
        self.participants.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn positive(&self) -> usize {
        self.participants.len()
    }

    pub fn negative(&self) -> usize {
        self.participants.len() + 1
    }

    pub fn sentiment_label(&self, s: Sentiment) -> usize {
        match s {
            Sentiment::Positive => self.positive(),
            Sentiment::Negative => self.negative(),
        }
    }

    pub fn name(&self, label: usize) -> &str {
        match label.checked_sub(self.participants.len()) {
            None => &self.participants[label],
            Some(0) => "positive",
            Some(_) => "negative",
        }
    }

    pub fn encode(&self, category: &JointCategory) -> Result<LabelSet> {
        let t = self
            .participants
            .iter()
            .position(|p| *p == category.target)
            .ok_or_else(|| Error::UnknownTarget {
                target: category.target.clone(),
                event_id: String::new(),
            })?;
        Ok(LabelSet::from_iter([t, self.sentiment_label(category.sentiment)]))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelSet(BTreeSet<usize>);

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.0.contains(&label)
    }

    pub fn insert(&mut self, label: usize) -> bool {
        self.0.insert(label)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn project(&self, labelset: &[usize]) -> LabelSet {
        labelset.iter().copied().filter(|l| self.contains(*l)).collect()
    }

    pub fn symmetric_difference_len(&self, other: &LabelSet) -> usize {
        self.0.symmetric_difference(&other.0).count()
    }

    /// 1.0 for members, 0.0 otherwise.
    pub fn indicator(&self, space: &LabelSpace) -> Vec<f64> {
        (0..space.len()).map(|l| if self.contains(l) { 1.0 } else { 0.0 }).collect()
    }

    pub fn check_in(&self, space: &LabelSpace) -> Result<()> {
        match self.0.iter().find(|&&l| l >= space.len()) {
            Some(l) => Err(Error::InvalidLabelSet(format!("label {l} outside a space of {}", space.len()))),
            None => Ok(()),
        }
    }

    /// Gold sets carry exactly one participant and one sentiment.
    pub fn validate_gold(&self, space: &LabelSpace) -> Result<()> {
        self.check_in(space)?;
        let n = space.participants().len();
        let targets = self.iter().filter(|&l| l < n).count();
        let sentiments = self.iter().filter(|&l| l >= n).count();
        if targets != 1 || sentiments != 1 {
            return Err(Error::InvalidLabelSet(format!(
                "expected one target and one sentiment, got {targets} and {sentiments}"
            )));
        }
        Ok(())
    }
}

impl FromIterator<usize> for LabelSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        LabelSet(iter.into_iter().collect())
    }
}

/// Base learner for powerset members (they consume feature vectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseLearner {
    Nb { smoothing: f64 },
    Svm(SmoConfig),
}

impl BaseLearner {
    pub fn kind(&self) -> ModelKind {
        match self {
            BaseLearner::Nb { .. } => ModelKind::Nb,
            BaseLearner::Svm(_) => ModelKind::Svm,
        }
    }

    fn train(&self, data: &[(SparseVector, usize)]) -> Result<Classifier> {
        Ok(match self {
            BaseLearner::Nb { smoothing } => Classifier::NaiveBayes(train_naive_bayes(data, *smoothing)?),
            BaseLearner::Svm(cfg) => Classifier::Svm(train_svm_ovr(data, cfg)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpBase {
    /// Only one powerset category was observed.
    Constant(usize),
    Model(Classifier),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpClassifier {
    /// Sorted label indices.
    pub labelset: Vec<usize>,
    /// Observed projections, sorted; a category's index is its class.
    pub categories: Vec<LabelSet>,
    pub base: LpBase,
}

pub fn train_lp(data: &[(SparseVector, LabelSet)], labelset: &[usize], base: &BaseLearner) -> Result<LpClassifier> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut labelset = labelset.to_vec();
    labelset.sort_unstable();
    labelset.dedup();
    let projected: Vec<LabelSet> = data.iter().map(|(_, y)| y.project(&labelset)).collect();
    let categories: Vec<LabelSet> = projected.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let base = if categories.len() == 1 {
        LpBase::Constant(0)
    } else {
        let rows: Vec<(SparseVector, usize)> = data
            .iter()
            .zip(&projected)
            .map(|((x, _), p)| (x.clone(), categories.binary_search(p).unwrap()))
            .collect();
        LpBase::Model(base.train(&rows)?)
    };
    Ok(LpClassifier {
        labelset,
        categories,
        base,
    })
}

impl LpClassifier {
    pub fn predict(&self, x: &SparseVector) -> Result<LabelSet> {
        let class = match &self.base {
            LpBase::Constant(c) => *c,
            LpBase::Model(m) => m.predict(Input::Vector(x))?.label,
        };
        Ok(self.categories[class].clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RakelConfig {
    pub k: usize,
    /// Defaults to `min(2|L|, C(|L|, k))`.
    pub m: Option<usize>,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for RakelConfig {
    fn default() -> Self {
        RakelConfig {
            k: 3,
            m: None,
            threshold: 0.5,
            seed: 0,
        }
    }
}

impl RakelConfig {
    pub fn members(&self, labels: usize) -> usize {
        let k = self.k.min(labels);
        self.m
            .unwrap_or_else(|| (2 * labels as u128).min(binomial(labels, k)) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RakelModel {
    pub space: LabelSpace,
    pub members: Vec<LpClassifier>,
    pub k: usize,
    pub threshold: f64,
    pub seed: u64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RakelPrediction {
    pub labels: LabelSet,
    pub ratios: Vec<f64>,
}

impl RakelPrediction {
    pub fn at_threshold(&self, threshold: f64) -> LabelSet {
        labels_above(&self.ratios, threshold)
    }
}

fn labels_above(ratios: &[f64], threshold: f64) -> LabelSet {
    (0..ratios.len()).filter(|&l| ratios[l] > threshold).collect()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// `m` distinct k-subsets of `0..n`, uniformly without replacement.
pub fn sample_labelsets(n: usize, k: usize, m: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("rakel k must be in 1..={n}, got {k}")));
    }
    let total = binomial(n, k);
    if m == 0 || m as u128 > total {
        return Err(Error::InvalidConfig(format!("rakel m must be in 1..={total}, got {m}")));
    }
    let mut r = rng(derive_seed(seed, "rakel-labelsets"));
    if total <= 100_000 {
        let mut all = combinations(n, k);
        all.shuffle(&mut r);
        all.truncate(m);
        return Ok(all);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let mut s = rand::seq::index::sample(&mut r, n, k).into_vec();
        s.sort_unstable();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn train_rakel(
    data: &[(SparseVector, LabelSet)],
    space: &LabelSpace,
    config: &RakelConfig,
    base: &BaseLearner,
) -> Result<RakelModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    for (_, y) in data {
        y.validate_gold(space)?;
    }
    if !(config.threshold > 0.0 && config.threshold < 1.0) {
        return Err(Error::InvalidConfig("rakel threshold must be in (0, 1)".into()));
    }
    let dim = data[0].0.dim();
    let labelsets = sample_labelsets(space.len(), config.k, config.members(space.len()), config.seed)?;
    let members = labelsets
        .par_iter()
        .map(|ls| train_lp(data, ls, base))
        .collect::<Result<Vec<_>>>()?;
    Ok(RakelModel {
        space: space.clone(),
        members,
        k: config.k,
        threshold: config.threshold,
        seed: config.seed,
        dim,
    })
}

pub fn predict_rakel(model: &RakelModel, x: &SparseVector) -> Result<RakelPrediction> {
    x.check_dim(model.dim)?;
    let votes = model
        .members
        .par_iter()
        .map(|m| m.predict(x).map(|p| (m, p)))
        .collect::<Result<Vec<_>>>()?;
    let n = model.space.len();
    let mut yes = vec![0usize; n];
    let mut covering = vec![0usize; n];
    for (member, predicted) in &votes {
        for &l in &member.labelset {
            covering[l] += 1;
            if predicted.contains(l) {
                yes[l] += 1;
            }
        }
    }
    let ratios: Vec<f64> = (0..n)
        .map(|l| if covering[l] == 0 { 0.0 } else { yes[l] as f64 / covering[l] as f64 })
        .collect();
    Ok(RakelPrediction {
        labels: labels_above(&ratios, model.threshold),
        ratios,
    })
}

/// Decodes per-label ratios into one joint category: the participant with
/// the highest ratio and the stronger sentiment (positive on ties).
pub fn to_pair(ratios: &[f64], space: &LabelSpace) -> JointCategory {
    let n = space.participants().len();
    let target = argmax(&ratios[..n]);
    let sentiment = if ratios[space.positive()] >= ratios[space.negative()] {
        Sentiment::Positive
    } else {
        Sentiment::Negative
    };
    JointCategory::new(space.participants()[target].clone(), sentiment)
}
