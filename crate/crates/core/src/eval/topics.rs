//! Words most strongly attached to a topic.

use crate::corpus::OOV;
use crate::error::{Error, Result};
use crate::model::ModelState;

#[derive(Debug, Clone, PartialEq)]
pub struct TopWord {
    pub id: u32,
    pub word: String,
    /// `q(z = k | vec(w))`.
    pub score: f64,
    pub count: u64,
}

/// The `n` words with the largest posterior for topic `k`, among words
/// seen at least `min_freq` times. Ties go to the more frequent word, then
/// to the smaller id. The OOV token is never listed.
pub fn top_words(state: &ModelState, k: usize, n: usize, min_freq: u64) -> Result<Vec<TopWord>> {
    let t = state.gmm().num_components();
    if k >= t {
        return Err(Error::OutOfRange {
            what: "topic",
            id: k,
            size: t,
        });
    }
    let vocab = state.vocab();
    let mut resp = vec![0.0; t];
    let mut words: Vec<TopWord> = (0..vocab.len() as u32)
        .filter(|&id| id != OOV && vocab.count(id) >= min_freq)
        .map(|id| {
            state
                .gmm()
                .responsibilities_into(state.psi().words.row(id as usize), &mut resp);
            TopWord {
                id,
                word: vocab.word(id).to_string(),
                score: resp[k],
                count: vocab.count(id),
            }
        })
        .collect();
    words.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.count.cmp(&a.count))
            .then(a.id.cmp(&b.id))
    });
    words.truncate(n);
    Ok(words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Vocabulary};
    use crate::gmm::{Covariance, CovarianceMode, GmmParams};
    use crate::model::init_model;
    use crate::training::TrainConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(topics: usize, counts: Vec<u64>) -> ModelState {
        let words = (0..counts.len())
            .map(|i| if i == 0 { "<OOV>".to_string() } else { format!("w{i}") })
            .collect();
        let vocab = Vocabulary::from_parts(words, counts).unwrap();
        let corpus = Corpus::from_documents(vec![(vec![], vec![vec![1]])], vocab.len()).unwrap();
        let config = TrainConfig {
            topics,
            dim: 2,
            context: 1,
            ..TrainConfig::default()
        };
        init_model(&config, &corpus, &vocab, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn single_topic_lists_by_frequency() {
        let state = model(1, vec![100, 5, 50, 20, 50, 3]);
        let top = top_words(&state, 0, 3, 4).unwrap();
        let ids: Vec<u32> = top.iter().map(|w| w.id).collect();
        assert_eq!(ids, vec![2, 4, 3]);
        assert!(top.iter().all(|w| w.score == 1.0));
        assert!(top_words(&state, 1, 3, 0).is_err());
    }

    #[test]
    fn words_at_a_mean_rank_first_under_that_topic() {
        let mut state = model(2, vec![1, 10, 10, 10, 10]);
        let means = vec![vec![2.0, 0.0], vec![-2.0, 0.0]];
        let gmm = GmmParams::new(
            vec![0.5, 0.5],
            means.clone(),
            vec![Covariance::identity(2, CovarianceMode::Diagonal); 2],
        )
        .unwrap();
        state.set_gmm(gmm).unwrap();
        let words = &mut state.psi_mut().words;
        words.row_mut(1).copy_from_slice(&means[1]);
        words.row_mut(2).copy_from_slice(&means[0]);
        words.row_mut(3).copy_from_slice(&[0.5, 0.0]);
        words.row_mut(4).copy_from_slice(&[-0.5, 0.0]);
        assert_eq!(top_words(&state, 0, 1, 0).unwrap()[0].id, 2);
        assert_eq!(top_words(&state, 1, 1, 0).unwrap()[0].id, 1);
    }
}
