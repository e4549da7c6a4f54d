pub mod bundle;
pub mod classifiers;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod multilabel;
pub mod pipeline;
pub mod prediction;
pub mod seed;
pub mod sparse;
pub mod synth;
pub mod term_index;
pub mod topics;

pub use error::{Error, ErrorClass, Result};
