//! End-to-end orchestration: configuration, featurization, training and
//! batch prediction.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    train_elman, train_naive_bayes, train_svm_ovr, CategorySpace, Classifier, ElmanConfig, Input, JointCategory,
    ModelKind, SmoConfig,
};
use crate::corpus::{clean_tweet, AnnotatedTweet, EventRegistry, Tweet};
use crate::embeddings::{infer_vector, train_pv, PvConfig, PvModel};
use crate::error::{Error, Result};
use crate::features::{
    assemble_vector, fit_vocabulary, tokenize, FeatureRegistry, FeatureSet, PolarityLexicon, TokenSequence, Vocabulary,
};
use crate::multilabel::{predict_rakel, to_pair, train_rakel, BaseLearner, LabelSpace, RakelConfig, RakelModel};
use crate::seed::derive_seed;
use crate::sparse::SparseVector;
use crate::topics::{fit_lda, infer_theta, LdaConfig, LdaModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbConfig {
    pub smoothing: f64,
}

impl Default for NbConfig {
    fn default() -> Self {
        NbConfig { smoothing: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RakelSection {
    pub k: usize,
    pub m: Option<usize>,
    pub threshold: f64,
    pub base: ModelKind,
}

impl Default for RakelSection {
    fn default() -> Self {
        let d = RakelConfig::default();
        RakelSection {
            k: d.k,
            m: d.m,
            threshold: d.threshold,
            base: ModelKind::Svm,
        }
    }
}

impl RakelSection {
    pub fn config(&self, seed: u64) -> RakelConfig {
        RakelConfig {
            k: self.k,
            m: self.m,
            threshold: self.threshold,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub features: FeatureSet,
    pub model: ModelKind,
    /// Master seed; every stage seed is derived from it.
    pub seed: u64,
    pub min_count: usize,
    pub lexicon: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub pv_infer_steps: usize,
    pub lda_infer_iterations: usize,
    pub nb: NbConfig,
    pub svm: SmoConfig,
    pub elman: ElmanConfig,
    pub rakel: RakelSection,
    pub pv: PvConfig,
    pub lda: LdaConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            features: FeatureSet::F4,
            model: ModelKind::Svm,
            seed: 0,
            min_count: 1,
            lexicon: None,
            synonyms: None,
            pv_infer_steps: 50,
            lda_infer_iterations: 50,
            nb: NbConfig::default(),
            svm: SmoConfig::default(),
            elman: ElmanConfig::default(),
            rakel: RakelSection::default(),
            pv: PvConfig::default(),
            lda: LdaConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Copy with every stage seed derived from the master seed.
    pub fn with_derived_seeds(&self) -> Self {
        let mut c = self.clone();
        c.pv.seed = derive_seed(self.seed, "pv");
        c.lda.seed = derive_seed(self.seed, "lda");
        c.elman.seed = derive_seed(self.seed, "elman");
        c.svm.seed = derive_seed(self.seed, "svm");
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.model == ModelKind::Rakel && !matches!(self.rakel.base, ModelKind::Nb | ModelKind::Svm) {
            return Err(Error::InvalidConfig(format!("rakel base must be nb or svm, got {}", self.rakel.base)));
        }
        let nb_used = self.model == ModelKind::Nb || (self.model == ModelKind::Rakel && self.rakel.base == ModelKind::Nb);
        if nb_used && !self.features.is_lexical() {
            return Err(Error::InvalidConfig(format!(
                "naive Bayes needs non-negative count features; {} carries dense embeddings",
                self.features
            )));
        }
        Ok(())
    }

    fn base_learner(&self) -> BaseLearner {
        match self.rakel.base {
            ModelKind::Nb => BaseLearner::Nb {
                smoothing: self.nb.smoothing,
            },
            _ => BaseLearner::Svm(self.svm.clone()),
        }
    }

    pub fn load_lexicon(&self) -> Result<PolarityLexicon> {
        match &self.lexicon {
            Some(p) => PolarityLexicon::load(p, self.synonyms.as_deref()),
            None => Ok(PolarityLexicon::new()),
        }
    }
}

/// Cleaning is idempotent, so raw and pre-cleaned text give equal tokens.
pub fn tweet_tokens(text: &str) -> TokenSequence {
    tokenize(&clean_tweet(text))
}

/// Fitted feature extractor for one feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub feature_set: FeatureSet,
    pub vocab: Vocabulary,
    pub lexicon: PolarityLexicon,
    pub pv: Option<PvModel>,
    pub lda: Option<LdaModel>,
    pub pv_infer_steps: usize,
    pub lda_infer_iterations: usize,
    pub infer_seed: u64,
}

impl Featurizer {
    /// Fits the vocabulary and, for f5/f6, the embedding and topic models.
    /// Returns the training vectors alongside.
    pub fn fit(docs: &[TokenSequence], config: &PipelineConfig, lexicon: PolarityLexicon) -> Result<(Self, Vec<SparseVector>)> {
        let set = config.features;
        let vocab = fit_vocabulary(docs, config.min_count)?;
        let (pv, lda) = if set.is_lexical() {
            (None, None)
        } else {
            let (pv, lda) = rayon::join(
                || train_pv(docs, &config.pv),
                || set.uses_topics().then(|| fit_lda(docs, &config.lda)).transpose(),
            );
            (Some(pv?), lda?)
        };
        let (lda, theta) = match lda {
            Some((m, theta)) => (Some(m), Some(theta)),
            None => (None, None),
        };
        let f = Featurizer {
            feature_set: set,
            vocab,
            lexicon,
            pv,
            lda,
            pv_infer_steps: config.pv_infer_steps,
            lda_infer_iterations: config.lda_infer_iterations,
            infer_seed: derive_seed(config.seed, "infer"),
        };
        let vectors = if set.is_lexical() {
            docs.par_iter().map(|d| f.transform(d)).collect::<Result<Vec<_>>>()?
        } else {
            let pv = f.pv.as_ref().unwrap();
            (0..docs.len())
                .map(|i| {
                    let mut dense = pv.doc_vector(i).to_vec();
                    if let Some(theta) = &theta {
                        dense.extend_from_slice(theta.row(i));
                    }
                    SparseVector::from_dense(&dense)
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok((f, vectors))
    }

    pub fn registry(&self) -> FeatureRegistry {
        FeatureRegistry::new(
            self.feature_set,
            &self.vocab,
            self.pv.as_ref().map_or(0, |m| m.dims()),
            self.lda.as_ref().map_or(0, |m| m.topics()),
        )
    }

    pub fn dimension(&self) -> usize {
        self.registry().dimension
    }

    /// Feature vector of an unseen document. Inference seeds depend only on
    /// the tokens, so the result is a pure function of the input.
    pub fn transform(&self, tokens: &TokenSequence) -> Result<SparseVector> {
        if self.feature_set.is_lexical() {
            return assemble_vector(tokens, &self.vocab, self.feature_set, &self.lexicon);
        }
        let key = tokens.as_slice().join(" ");
        let seed = derive_seed(self.infer_seed, &key);
        let pv = self
            .pv
            .as_ref()
            .ok_or_else(|| Error::FeatureSetUnavailable(self.feature_set.to_string()))?;
        let mut dense = infer_vector(pv, tokens, self.pv_infer_steps, seed).vector;
        if self.feature_set.uses_topics() {
            let lda = self
                .lda
                .as_ref()
                .ok_or_else(|| Error::FeatureSetUnavailable(self.feature_set.to_string()))?;
            dense.extend(infer_theta(lda, tokens, self.lda_infer_iterations, seed).theta);
        }
        SparseVector::from_dense(&dense)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Single {
        space: CategorySpace,
        classifier: Classifier,
    },
    Rakel(RakelModel),
}

/// Everything needed to predict: config, registry, featurizer and model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub config: PipelineConfig,
    pub registry: EventRegistry,
    pub featurizer: Featurizer,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub ts: i64,
    pub target: String,
    pub sentiment: crate::corpus::Sentiment,
    /// Class scores (single-label models) or label vote ratios (rakel).
    pub scores: BTreeMap<String, f64>,
}

impl PredictionRecord {
    pub fn category(&self) -> JointCategory {
        JointCategory::new(self.target.clone(), self.sentiment)
    }
}

pub fn train_pipeline(data: &[AnnotatedTweet], registry: &EventRegistry, config: &PipelineConfig) -> Result<TrainedPipeline> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    for a in data {
        if !registry.contains(&a.target) {
            return Err(Error::UnknownTarget {
                target: a.target.clone(),
                event_id: registry.event_id.clone(),
            });
        }
    }
    let cfg = config.with_derived_seeds();
    let lexicon = cfg.load_lexicon()?;
    let docs: Vec<TokenSequence> = data.par_iter().map(|a| tweet_tokens(&a.tweet.text)).collect();
    let space = CategorySpace::from_registry(registry);
    let categories: Vec<usize> = data
        .iter()
        .map(|a| space.index_of(&JointCategory::new(a.target.clone(), a.sentiment)))
        .collect::<Result<_>>()?;

    let model_kind = cfg.model;
    let (featurizer, vectors) = if model_kind == ModelKind::Elman {
        // Elman reads token sequences; the featurizer is kept for the bundle.
        let lexical = PipelineConfig {
            features: if cfg.features.is_lexical() { cfg.features } else { FeatureSet::F1 },
            ..cfg.clone()
        };
        let (f, _) = Featurizer::fit(&docs, &lexical, lexicon)?;
        (f, Vec::new())
    } else {
        Featurizer::fit(&docs, &cfg, lexicon)?
    };

    let model = match model_kind {
        ModelKind::Nb | ModelKind::Svm => {
            let rows: Vec<(SparseVector, usize)> = vectors.into_iter().zip(categories).collect();
            let classifier = if model_kind == ModelKind::Nb {
                Classifier::NaiveBayes(train_naive_bayes(&rows, cfg.nb.smoothing)?)
            } else {
                Classifier::Svm(train_svm_ovr(&rows, &cfg.svm)?)
            };
            TrainedModel::Single { space, classifier }
        }
        ModelKind::Elman => {
            let rows: Vec<(TokenSequence, usize)> = docs.into_iter().zip(categories).collect();
            TrainedModel::Single {
                space,
                classifier: Classifier::Elman(train_elman(&rows, &cfg.elman)?),
            }
        }
        ModelKind::Rakel => {
            let labels = LabelSpace::from_registry(registry);
            let rows: Vec<_> = vectors
                .into_iter()
                .zip(data)
                .map(|(x, a)| Ok((x, labels.encode(&JointCategory::new(a.target.clone(), a.sentiment))?)))
                .collect::<Result<_>>()?;
            TrainedModel::Rakel(train_rakel(&rows, &labels, &cfg.rakel.config(derive_seed(cfg.seed, "rakel")), &cfg.base_learner())?)
        }
    };
    Ok(TrainedPipeline {
        config: config.clone(),
        registry: registry.clone(),
        featurizer,
        model,
    })
}

impl TrainedPipeline {
    pub fn predict_text(&self, text: &str) -> Result<(JointCategory, BTreeMap<String, f64>)> {
        let tokens = tweet_tokens(text);
        match &self.model {
            TrainedModel::Single { space, classifier } => {
                let (cat, scores) = if classifier.kind() == ModelKind::Elman {
                    classifier.predict_category(space, Input::Tokens(&tokens))?
                } else {
                    let x = self.featurizer.transform(&tokens)?;
                    classifier.predict_category(space, Input::Vector(&x))?
                };
                Ok((cat, scores.into_iter().map(|(c, v)| (c.to_string(), v)).collect()))
            }
            TrainedModel::Rakel(m) => {
                let x = self.featurizer.transform(&tokens)?;
                let p = predict_rakel(m, &x)?;
                let scores = p
                    .ratios
                    .iter()
                    .enumerate()
                    .map(|(l, &r)| (m.space.name(l).to_string(), r))
                    .collect();
                Ok((to_pair(&p.ratios, &m.space), scores))
            }
        }
    }

    /// Predictions in input order.
    pub fn predict_tweets(&self, tweets: &[Tweet]) -> Result<Vec<PredictionRecord>> {
        tweets
            .par_iter()
            .map(|t| {
                let (cat, scores) = self.predict_text(&t.text)?;
                Ok(PredictionRecord {
                    id: t.id.clone(),
                    ts: t.timestamp,
                    target: cat.target,
                    sentiment: cat.sentiment,
                    scores,
                })
            })
            .collect()
    }

    pub fn kind(&self) -> ModelKind {
        match &self.model {
            TrainedModel::Single { classifier, .. } => classifier.kind(),
            TrainedModel::Rakel(_) => ModelKind::Rakel,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SynthParticipant, SynthSpec};

    fn spec(n: u64) -> SynthSpec {
        SynthSpec {
            participants: ["Ann", "Bob"]
                .iter()
                .zip([0.8, 0.3])
                .map(|(n, r)| SynthParticipant {
                    name: n.to_string(),
                    positive_rate: r,
                    signature: Vec::new(),
                })
                .collect(),
            volumes: vec![n],
            seed: 1,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn config_toml_round_trip_and_defaults() {
        let c = PipelineConfig::from_toml_str("features = \"f6\"\nmodel = \"rakel\"\n[rakel]\nk = 2\nbase = \"svm\"\n").unwrap();
        assert_eq!(c.features, FeatureSet::F6);
        assert_eq!(c.rakel.k, 2);
        assert_eq!(c.pv.dims, 100);
        let again = PipelineConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(again, c);
        assert!(PipelineConfig::from_toml_str("features = \"f9\"").is_err());
    }

    #[test]
    fn nb_rejected_for_dense_features() {
        let c = PipelineConfig {
            features: FeatureSet::F5,
            model: ModelKind::Nb,
            ..PipelineConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let r = PipelineConfig {
            model: ModelKind::Rakel,
            rakel: RakelSection {
                base: ModelKind::Elman,
                ..RakelSection::default()
            },
            ..PipelineConfig::default()
        };
        assert!(r.validate().is_err());
    }

    #[test]
    fn lexical_pipelines_learn_synthetic_labels() {
        let s = spec(300);
        let data = generate_synthetic(&s).unwrap();
        let reg = s.registry().unwrap();
        let (train, test) = data.split_at(200);
        for model in [ModelKind::Nb, ModelKind::Svm, ModelKind::Rakel] {
            let cfg = PipelineConfig {
                features: FeatureSet::F1,
                model,
                ..PipelineConfig::default()
            };
            let p = train_pipeline(train, &reg, &cfg).unwrap();
            let tweets: Vec<Tweet> = test.iter().map(|a| a.tweet.clone()).collect();
            let preds = p.predict_tweets(&tweets).unwrap();
            let correct = preds
                .iter()
                .zip(test)
                .filter(|(p, a)| p.target == a.target && p.sentiment == a.sentiment)
                .count();
            assert!(correct as f64 / test.len() as f64 > 0.9, "{model}: {correct}");
        }
    }

    #[test]
    fn dense_pipeline_is_deterministic() {
        let s = spec(120);
        let data = generate_synthetic(&s).unwrap();
        let reg = s.registry().unwrap();
        let mut cfg = PipelineConfig {
            features: FeatureSet::F6,
            model: ModelKind::Svm,
            ..PipelineConfig::default()
        };
        cfg.pv.dims = 16;
        cfg.pv.epochs = 5;
        cfg.lda.topics = 4;
        cfg.lda.iterations = 40;
        cfg.lda.burn_in = 20;
        let a = train_pipeline(&data, &reg, &cfg).unwrap();
        let b = train_pipeline(&data, &reg, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.featurizer.dimension(), 20);
        let t = &data[0].tweet;
        assert_eq!(a.predict_text(&t.text).unwrap(), b.predict_text(&t.text).unwrap());
    }

    #[test]
    fn unknown_target_rejected() {
        let s = spec(10);
        let mut data = generate_synthetic(&s).unwrap();
        data[0].target = "Zed".into();
        let r = train_pipeline(&data, &s.registry().unwrap(), &PipelineConfig::default());
        assert!(matches!(r, Err(Error::UnknownTarget { .. })));
    }
}
