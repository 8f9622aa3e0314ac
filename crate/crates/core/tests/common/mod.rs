#![allow(dead_code)]

use gmntm::corpus::{Corpus, Vocabulary, OOV_TOKEN};
use gmntm::gmm::{Covariance, GmmParams};
use gmntm::model::{init_model, ModelState};
use gmntm::training::TrainConfig;
use rand::Rng;

pub fn vocab(words: usize) -> Vocabulary {
    Vocabulary::from_parts(
        std::iter::once(OOV_TOKEN.to_string())
            .chain((1..words).map(|i| format!("w{i}")))
            .collect(),
        (0..words as u64).map(|i| 20 - i.min(19)).collect(),
    )
    .unwrap()
}

/// A random three-document corpus and a model with every parameter drawn
/// uniformly from [-1, 1] and a random diagonal mixture.
pub fn random_model(
    words: usize,
    dim: usize,
    context: usize,
    topics: usize,
    rng: &mut impl Rng,
) -> (ModelState, Corpus) {
    let docs: Vec<(Vec<String>, Vec<Vec<u32>>)> = (0..3)
        .map(|_| {
            let sentences = (0..2)
                .map(|_| {
                    let len = rng.random_range(1..=context + 3);
                    (0..len).map(|_| rng.random_range(0..words as u32)).collect()
                })
                .collect();
            (vec![], sentences)
        })
        .collect();
    let corpus = Corpus::from_documents(docs, words).unwrap();
    let config = TrainConfig {
        topics,
        dim,
        context,
        ..TrainConfig::default()
    };
    let mut state = init_model(&config, &corpus, &vocab(words), rng).unwrap();
    let psi = state.psi_mut();
    for table in [&mut psi.words, &mut psi.sentences, &mut psi.documents] {
        for i in 0..table.len() {
            table
                .row_mut(i)
                .iter_mut()
                .for_each(|x| *x = rng.random_range(-1.0..1.0));
        }
    }
    let u = state.weights_mut();
    for w in 0..words {
        u.row_mut(w).iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        u.bias_mut()[w] = rng.random_range(-1.0..1.0);
    }
    state.set_gmm(random_gmm(topics, dim, rng)).unwrap();
    (state, corpus)
}

pub fn random_gmm(topics: usize, dim: usize, rng: &mut impl Rng) -> GmmParams {
    let mut weights: Vec<f64> = (0..topics).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let rest: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - rest;
    GmmParams::new(
        weights,
        (0..topics)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
        (0..topics)
            .map(|_| Covariance::Diagonal((0..dim).map(|_| rng.random_range(0.3..1.5)).collect()))
            .collect(),
    )
    .unwrap()
}
