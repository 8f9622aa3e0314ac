//! Downstream evaluations on learned vectors.

mod classify;
mod retrieval;
mod topics;

pub use classify::{average_precision, classify_eval, train_classifier, Classifier, ClassifierMode, Metric};
pub use retrieval::{retrieval_eval, PrCurve, DEFAULT_RECALL_POINTS};
pub use topics::{top_words, TopWord};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::inference::HeldoutFit;
use crate::model::ModelState;

/// Vectors paired with label sets. A single-label collection simply has
/// one label per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVectors {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    labels: Vec<Vec<String>>,
}

impl LabeledVectors {
    pub fn new(vectors: Vec<Vec<f64>>, labels: Vec<Vec<String>>) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vectors and {} label sets",
                vectors.len(),
                labels.len()
            )));
        }
        if vectors.is_empty() {
            return Err(Error::Empty("no labeled vectors".into()));
        }
        let dim = vectors[0].len();
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "vector {i} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("labeled vector"));
            }
        }
        if let Some(i) = labels.iter().position(Vec::is_empty) {
            return Err(Error::MissingLabels(format!("entry {i} has no label")));
        }
        Ok(Self { dim, vectors, labels })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn labels(&self, i: usize) -> &[String] {
        &self.labels[i]
    }

    /// Sorted distinct labels.
    pub fn label_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.labels.iter().flatten().cloned().collect();
        names.sort();
        names.dedup();
        names
    }

    /// Trained document vectors with the labels of `corpus`.
    pub fn from_documents(state: &ModelState, corpus: &Corpus) -> Result<Self> {
        state.check_corpus(corpus)?;
        Self::new(
            state.psi().documents.rows().map(<[f64]>::to_vec).collect(),
            corpus.documents().iter().map(|d| d.labels.clone()).collect(),
        )
    }

    /// Inferred document vectors of `corpus`, one fit per document.
    pub fn from_fits(fits: &[HeldoutFit], corpus: &Corpus) -> Result<Self> {
        if fits.len() != corpus.num_documents() {
            return Err(Error::DimensionMismatch(format!(
                "{} fits for {} documents",
                fits.len(),
                corpus.num_documents()
            )));
        }
        Self::new(
            fits.iter().map(|f| f.document.clone()).collect(),
            corpus.documents().iter().map(|d| d.labels.clone()).collect(),
        )
    }

    /// True when every entry carries exactly one label.
    pub fn is_single_label(&self) -> bool {
        self.labels.iter().all(|l| l.len() == 1)
    }
}
