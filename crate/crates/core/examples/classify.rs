//! Document classification on learned vectors, single-label and
//! multi-label.

use gmntm::eval::{classify_eval, train_classifier, ClassifierMode, LabeledVectors, Metric};
use gmntm::synthetic::{planted_corpus, PlantedConfig};
use gmntm::training::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = planted_corpus(&PlantedConfig::default())?;
    let config = TrainConfig {
        topics: 2,
        dim: 8,
        init_std: 0.1,
        prior_weight: Some(0.01),
        lr: 0.1,
        ..TrainConfig::default()
    };
    let state = train(&planted.corpus, &planted.vocab, &config, |_| {})?.state;
    let all = LabeledVectors::from_documents(&state, &planted.corpus)?;

    // first 300 documents train, the rest test
    let split = |range: std::ops::Range<usize>, extra: bool| {
        LabeledVectors::new(
            range.clone().map(|i| all.vector(i).to_vec()).collect(),
            range
                .map(|i| {
                    let mut l = all.labels(i).to_vec();
                    if extra && i % 3 == 0 {
                        l.push("every-third".into());
                    }
                    l
                })
                .collect(),
        )
    };
    let (train_set, test_set) = (split(0..300, false)?, split(300..400, false)?);
    let multinomial = train_classifier(&train_set, ClassifierMode::Multinomial, 1e-4, 500)?;
    let acc = classify_eval(&multinomial, &test_set, Metric::Accuracy)?;
    println!("metric=accuracy value={acc} n={}", test_set.len());

    let (train_set, test_set) = (split(0..300, true)?, split(300..400, true)?);
    let binary = train_classifier(&train_set, ClassifierMode::PerLabelBinary, 1e-4, 500)?;
    let map = classify_eval(&binary, &test_set, Metric::MeanAveragePrecision)?;
    println!("metric=map value={map} n={}", test_set.len());
    Ok(())
}
