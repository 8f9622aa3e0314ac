//! Retrieve training documents for inferred held-out queries and print the
//! precision-recall rows.

use gmntm::corpus::encode_corpus;
use gmntm::eval::{retrieval_eval, LabeledVectors, DEFAULT_RECALL_POINTS};
use gmntm::inference::{infer_corpus, HeldoutConfig};
use gmntm::synthetic::{planted_corpus, planted_documents, PlantedConfig};
use gmntm::training::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = planted_corpus(&PlantedConfig::default())?;
    let (raw, _) = planted_documents(&PlantedConfig {
        documents: 100,
        seed: 11,
        ..PlantedConfig::default()
    })?;
    let queries_corpus = encode_corpus(&raw, &planted.vocab);

    let config = TrainConfig {
        topics: 2,
        dim: 8,
        init_std: 0.1,
        prior_weight: Some(0.01),
        lr: 0.1,
        ..TrainConfig::default()
    };
    let state = train(&planted.corpus, &planted.vocab, &config, |_| {})?.state;
    let database = LabeledVectors::from_documents(&state, &planted.corpus)?;
    let fits = infer_corpus(&state, &queries_corpus, &HeldoutConfig::from_train(&config))?;
    let queries = LabeledVectors::from_fits(&fits, &queries_corpus)?;
    let curve = retrieval_eval(&database, &queries, DEFAULT_RECALL_POINTS)?;
    print!("{}", curve.to_tsv());
    Ok(())
}
