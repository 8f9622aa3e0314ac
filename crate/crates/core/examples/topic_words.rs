//! Top words per topic after training on planted topics.

use gmntm::eval::top_words;
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
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train(&planted.corpus, &planted.vocab, &config, |_| {})?;
    for k in 0..2 {
        let words = top_words(&out.state, k, 10, 10)?;
        let planted_topics: Vec<String> = words
            .iter()
            .map(|w| match planted.word_topic[w.id as usize] {
                Some(t) => t.to_string(),
                None => "-".into(),
            })
            .collect();
        println!(
            "topic {k}: {}",
            words.iter().map(|w| w.word.as_str()).collect::<Vec<_>>().join(" ")
        );
        println!("  planted topics: {}", planted_topics.join(" "));
    }
    Ok(())
}
