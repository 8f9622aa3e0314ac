//! Save a trained model, load it back and inspect the header.

use gmntm::modelfile::{load_model, save_model, MODEL_MAGIC};
use gmntm::synthetic::{planted_corpus, PlantedConfig};
use gmntm::training::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = planted_corpus(&PlantedConfig {
        documents: 50,
        ..PlantedConfig::default()
    })?;
    let config = TrainConfig {
        topics: 2,
        dim: 4,
        context: 3,
        outer_iters: 2,
        ..TrainConfig::default()
    };
    let state = train(&planted.corpus, &planted.vocab, &config, |_| {})?.state;

    let path = std::env::temp_dir().join(format!("gmntm-model-{}.bin", std::process::id()));
    save_model(&state, &path)?;
    let bytes = std::fs::read(&path)?;
    assert_eq!(&bytes[..MODEL_MAGIC.len()], MODEL_MAGIC);
    let header: Vec<u64> = bytes[6..70]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    println!("{} bytes, header W S D V T m cov checksum = {header:?}", bytes.len());

    let loaded = load_model(&path)?;
    println!(
        "vocabulary {} words, prior weight {}",
        loaded.vocab().len(),
        loaded.rho()
    );
    save_model(&loaded, &path)?;
    assert_eq!(std::fs::read(&path)?, bytes, "a loaded model saves to the same bytes");
    std::fs::remove_file(&path)?;
    Ok(())
}
