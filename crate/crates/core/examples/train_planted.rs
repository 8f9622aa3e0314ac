//! Train on a synthetic corpus with two planted topics and watch the
//! progress records.

use gmntm::synthetic::{planted_corpus, PlantedConfig};
use gmntm::training::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = planted_corpus(&PlantedConfig::default())?;
    let config = TrainConfig {
        topics: 2,
        dim: 2,
        init_std: 0.1,
        prior_weight: Some(0.01),
        lr: 0.1,
        ..TrainConfig::default()
    };
    println!(
        "{} documents, {} sentences, {} slots",
        planted.corpus.num_documents(),
        planted.corpus.num_sentences(),
        planted.corpus.num_slots()
    );
    let out = train(&planted.corpus, &planted.vocab, &config, |p| println!("{p}"))?;
    println!(
        "{} alternations, converged {}, prior weight {}",
        out.objectives.len(),
        out.converged,
        out.state.rho()
    );
    println!("mixture weights {:?}", out.state.gmm().weights());
    Ok(())
}
