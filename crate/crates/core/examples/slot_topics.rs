//! Topic posteriors of words, sentences, documents and single word
//! occurrences, plus the next-word distribution.

use gmntm::corpus::context_window;
use gmntm::inference::{slot_topic, topic_posterior};
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
    let state = train(&planted.corpus, &planted.vocab, &config, |_| {})?.state;
    let corpus = &planted.corpus;

    let d = 0;
    println!("document {d} (planted topic {})", planted.doc_topic[d]);
    println!(
        "  q(z|doc) = {:?}",
        topic_posterior(state.psi().documents.row(d), state.gmm())?
    );
    let s = corpus.document(d).sentences.start;
    println!(
        "  q(z|sentence) = {:?}",
        topic_posterior(state.psi().sentences.row(s), state.gmm())?
    );
    for slot in corpus.slots().filter(|x| x.sentence == s) {
        let t = slot_topic(&state, slot.word, slot.sentence, slot.doc)?;
        let ctx = context_window(corpus, &slot, state.context());
        let p = state.word_distribution(slot.doc, slot.sentence, ctx)?;
        println!(
            "  {:>8} slot topic {:.3?} p(word) {:.4}",
            planted.vocab.word(slot.word),
            t.posterior,
            p[slot.word as usize]
        );
    }
    Ok(())
}
