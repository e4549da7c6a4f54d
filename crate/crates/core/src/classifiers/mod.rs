//! Single-label classifiers over joint (target, sentiment) categories.
//!
//! Base learners work on class indices. [`CategorySpace`] fixes the index
//! order: registry order of participants, positive before negative. Every
//! argmax breaks ties towards the lowest index.

mod elman;
mod naive_bayes;
mod smo;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use elman::{elman_loss_and_grads, train_elman, ElmanConfig, ElmanGrads, ElmanModel, ElmanParams};
pub use naive_bayes::{train_naive_bayes, NaiveBayesModel};
pub use smo::{smo_solve, train_svm_ovr, Kernel, SmoConfig, SvmBinaryModel, SvmOvrModel};

use crate::corpus::{EventRegistry, Sentiment};
use crate::error::{Error, Result};
use crate::features::TokenSequence;
use crate::linalg::argmax;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointCategory {
    pub target: String,
    pub sentiment: Sentiment,
}

impl JointCategory {
    pub fn new(target: impl Into<String>, sentiment: Sentiment) -> Self {
        JointCategory {
            target: target.into(),
            sentiment,
        }
    }
}

impl fmt::Display for JointCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.target, self.sentiment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySpace {
    categories: Vec<JointCategory>,
}

impl CategorySpace {
    pub fn from_registry(registry: &EventRegistry) -> Self {
        let categories = registry
            .participants
            .iter()
            .flat_map(|p| Sentiment::ALL.iter().map(move |&s| JointCategory::new(p.clone(), s)))
            .collect();
        CategorySpace { categories }
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn categories(&self) -> &[JointCategory] {
        &self.categories
    }

    pub fn get(&self, index: usize) -> &JointCategory {
        &self.categories[index]
    }

    pub fn index_of(&self, category: &JointCategory) -> Result<usize> {
        self.categories
            .iter()
            .position(|c| c == category)
            .ok_or_else(|| Error::UnknownTarget {
                target: category.target.clone(),
                event_id: String::new(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nb,
    Svm,
    Elman,
    Rakel,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Svm => "svm",
            ModelKind::Elman => "elman",
            ModelKind::Rakel => "rakel",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nb" => Ok(ModelKind::Nb),
            "svm" => Ok(ModelKind::Svm),
            "elman" => Ok(ModelKind::Elman),
            "rakel" => Ok(ModelKind::Rakel),
            other => Err(Error::InvalidConfig(format!("unknown model kind {other:?} (expected nb|svm|elman|rakel)"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Input<'a> {
    Vector(&'a SparseVector),
    Tokens(&'a TokenSequence),
}

/// A prediction with the model's score for every class it knows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub label: usize,
    pub classes: Vec<usize>,
    /// Log-posteriors (nb), decision values (svm) or probabilities (elman).
    pub scores: Vec<f64>,
}

impl Scored {
    fn from_scores(classes: &[usize], scores: Vec<f64>) -> Self {
        Scored {
            label: classes[argmax(&scores)],
            classes: classes.to_vec(),
            scores,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classifier {
    NaiveBayes(NaiveBayesModel),
    Svm(SvmOvrModel),
    Elman(ElmanModel),
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::NaiveBayes(_) => ModelKind::Nb,
            Classifier::Svm(_) => ModelKind::Svm,
            Classifier::Elman(_) => ModelKind::Elman,
        }
    }

    pub fn classes(&self) -> &[usize] {
        match self {
            Classifier::NaiveBayes(m) => &m.classes,
            Classifier::Svm(m) => &m.classes,
            Classifier::Elman(m) => &m.classes,
        }
    }

    pub fn predict(&self, input: Input<'_>) -> Result<Scored> {
        match (self, input) {
            (Classifier::NaiveBayes(m), Input::Vector(x)) => Ok(Scored::from_scores(&m.classes, m.log_posterior(x)?)),
            (Classifier::Svm(m), Input::Vector(x)) => Ok(Scored::from_scores(&m.classes, m.decisions(x)?)),
            (Classifier::Elman(m), Input::Tokens(t)) => Ok(Scored::from_scores(&m.classes, m.probabilities(t))),
            (Classifier::Elman(_), Input::Vector(_)) => {
                Err(Error::ModelKind("elman consumes token sequences, not feature vectors".into()))
            }
            (_, Input::Tokens(_)) => Err(Error::ModelKind(format!("{} consumes feature vectors", self.kind()))),
        }
    }

    /// Joint category of the prediction plus the score of every category
    /// the model was trained on.
    pub fn predict_category(&self, space: &CategorySpace, input: Input<'_>) -> Result<(JointCategory, Vec<(JointCategory, f64)>)> {
        let s = self.predict(input)?;
        let scores = s
            .classes
            .iter()
            .zip(&s.scores)
            .map(|(&c, &v)| (space.get(c).clone(), v))
            .collect();
        Ok((space.get(s.label).clone(), scores))
    }
}
