//! Hamming loss for label sets; mean F-measure and mean average precision
//! for ranked outcome lists.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::classifiers::JointCategory;
use crate::error::{Error, Result};
use crate::multilabel::{LabelSet, LabelSpace};

/// One target bit and one sentiment bit.
pub fn to_multilabel(pred: &JointCategory, space: &LabelSpace) -> Result<LabelSet> {
    space.encode(pred)
}

/// Mean over examples of `|S_i Δ Y_i| / |L|`.
pub fn hamming_loss(truth: &[LabelSet], pred: &[LabelSet], space: &LabelSpace) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch(truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return Err(Error::EmptyData);
    }
    let l = space.len() as f64;
    let mut total = 0.0;
    for (s, y) in truth.iter().zip(pred) {
        s.check_in(space)?;
        y.check_in(space)?;
        total += s.symmetric_difference_len(y) as f64 / l;
    }
    Ok(total / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfCounts {
    pub query: String,
    pub precision: f64,
    pub recall: f64,
}

impl PrfCounts {
    pub fn new(query: impl Into<String>, precision: f64, recall: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&precision) || !(0.0..=1.0).contains(&recall) {
            return Err(Error::InvalidConfig(format!(
                "precision {precision} and recall {recall} must lie in [0, 1]"
            )));
        }
        Ok(PrfCounts {
            query: query.into(),
            precision,
            recall,
        })
    }

    /// Set-based precision and recall of `predicted` against `relevant`.
    pub fn from_sets(query: impl Into<String>, predicted: &[String], relevant: &BTreeSet<String>) -> Self {
        let predicted: BTreeSet<&String> = predicted.iter().collect();
        let hits = predicted.iter().filter(|p| relevant.contains(**p)).count() as f64;
        let ratio = |n: usize| if n == 0 { 0.0 } else { hits / n as f64 };
        PrfCounts {
            query: query.into(),
            precision: ratio(predicted.len()),
            recall: ratio(relevant.len()),
        }
    }

    /// `2PR / (P + R)`, 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let s = self.precision + self.recall;
        if s == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / s
        }
    }
}

pub fn mean_f1(queries: &[PrfCounts]) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(queries.iter().map(PrfCounts::f1).sum::<f64>() / queries.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query: String,
    pub items: Vec<String>,
    pub relevant: BTreeSet<String>,
}

impl RankedList {
    pub fn new(query: impl Into<String>, items: Vec<String>, relevant: BTreeSet<String>) -> Result<Self> {
        let query = query.into();
        let distinct: BTreeSet<&String> = items.iter().collect();
        if distinct.len() != items.len() {
            return Err(Error::InvalidConfig(format!("ranked list {query:?} repeats an item")));
        }
        Ok(RankedList { query, items, relevant })
    }

    /// `Σ_k P@k · rel(k) / |RD|` over the returned list.
    pub fn average_precision(&self) -> Result<f64> {
        if self.relevant.is_empty() {
            return Err(Error::NoRelevantItems(self.query.clone()));
        }
        let mut hits = 0usize;
        let mut sum = 0.0;
        for (k, item) in self.items.iter().enumerate() {
            if self.relevant.contains(item) {
                hits += 1;
                sum += hits as f64 / (k + 1) as f64;
            }
        }
        Ok(sum / self.relevant.len() as f64)
    }
}

pub fn mean_average_precision(queries: &[RankedList]) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut total = 0.0;
    for q in queries {
        total += q.average_precision()?;
    }
    Ok(total / queries.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryValue {
    pub query: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub per_query: Vec<QueryValue>,
}

pub fn hamming_report(truth: &[LabelSet], pred: &[LabelSet], space: &LabelSpace) -> Result<MetricReport> {
    Ok(MetricReport {
        metric: "hamming_loss".into(),
        value: hamming_loss(truth, pred, space)?,
        per_query: Vec::new(),
    })
}

pub fn f1_report(queries: &[PrfCounts]) -> Result<MetricReport> {
    Ok(MetricReport {
        metric: "mean_f1".into(),
        value: mean_f1(queries)?,
        per_query: queries
            .iter()
            .map(|q| QueryValue {
                query: q.query.clone(),
                value: q.f1(),
            })
            .collect(),
    })
}

pub fn map_report(queries: &[RankedList]) -> Result<MetricReport> {
    let per_query = queries
        .iter()
        .map(|q| {
            Ok(QueryValue {
                query: q.query.clone(),
                value: q.average_precision()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        metric: "map".into(),
        value: mean_average_precision(queries)?,
        per_query,
    })
}
