//! Headline/body stance detection.
//!
//! The pipeline runs [`textprep`] → [`vectorizer`] (TF-IDF) → [`reducer`]
//! (truncated SVD with elbow rank selection) → [`similarity`] (soft cosine
//! features) → [`neuralnet`] (dense classifier with a transfer stage), and
//! [`metrics`] scores the predictions. [`corpus`] reads FNC-1 CSV files.

pub mod corpus;
pub mod error;
pub mod metrics;
pub mod neuralnet;
pub mod reducer;
pub mod similarity;
pub mod sparse;
pub mod textprep;
pub mod vectorizer;

pub use corpus::{BodyTable, Stance, StancePair, StanceRow};
pub use error::{Error, Result};
pub use neuralnet::{LayerSpec, NetworkModel, TrainConfig, TrainHistory};
pub use reducer::SvdModel;
pub use similarity::{FeatureMode, TermSimilarityMatrix};
pub use sparse::{CsrMatrix, SparseVector};
pub use vectorizer::VectorizerModel;
