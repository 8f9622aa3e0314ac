//! Held-out perplexity of a trained model next to the unigram baseline.

use gmntm::corpus::encode_corpus;
use gmntm::inference::{perplexity, unigram_perplexity, HeldoutConfig};
use gmntm::synthetic::{planted_corpus, planted_documents, PlantedConfig};
use gmntm::training::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = planted_corpus(&PlantedConfig::default())?;
    let (raw, _) = planted_documents(&PlantedConfig {
        documents: 100,
        seed: 99,
        ..PlantedConfig::default()
    })?;
    let heldout = encode_corpus(&raw, &planted.vocab);

    let config = TrainConfig {
        topics: 2,
        dim: 8,
        init_std: 0.1,
        prior_weight: Some(0.01),
        lr: 0.1,
        ..TrainConfig::default()
    };
    let out = train(&planted.corpus, &planted.vocab, &config, |_| {})?;
    let model = perplexity(&out.state, &heldout, &HeldoutConfig::from_train(&config))?;
    let base = unigram_perplexity(planted.vocab.counts(), &heldout)?;
    println!("model   {model}");
    println!("unigram {base}");
    Ok(())
}
