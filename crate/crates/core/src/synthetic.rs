//! Planted-topic corpora with a known answer.
//!
//! Each topic owns a disjoint block of words. A document picks one topic
//! uniformly and every token in it is drawn uniformly from that topic's
//! block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{build_vocabulary, encode_corpus, Corpus, RawDocument, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub topics: usize,
    pub words_per_topic: usize,
    pub documents: usize,
    pub sentences_per_document: usize,
    /// Inclusive range of sentence lengths.
    pub sentence_len: (usize, usize),
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            topics: 2,
            words_per_topic: 50,
            documents: 400,
            sentences_per_document: 5,
            sentence_len: (6, 12),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub vocab: Vocabulary,
    pub corpus: Corpus,
    /// Planted topic of every vocabulary id; `None` for OOV.
    pub word_topic: Vec<Option<usize>>,
    /// Planted topic of every document.
    pub doc_topic: Vec<usize>,
    pub raw: Vec<RawDocument>,
}

fn letters(n: usize) -> String {
    n.to_string().bytes().map(|d| (b'a' + d - b'0') as char).collect()
}

/// Name of word `j` of topic `k`. Letters only, so the token survives the
/// text preprocessor unchanged.
pub fn planted_word(k: usize, j: usize) -> String {
    format!("q{}x{}z", letters(k), letters(j))
}

fn parse_planted(word: &str) -> Option<usize> {
    let rest = word.strip_prefix('q')?.strip_suffix('z')?;
    let (k, _) = rest.split_once('x')?;
    k.bytes().try_fold(0usize, |acc, b| {
        b.is_ascii_lowercase().then(|| acc * 10 + (b - b'a') as usize)
    })
}

/// One document as a `label<TAB>text` line, sentences ending in periods.
pub fn render_line(doc: &RawDocument) -> String {
    let text: Vec<String> = doc.sentences.iter().map(|s| format!("{}.", s.join(" "))).collect();
    format!("{}\t{}", doc.labels.join(","), text.join(" "))
}

/// Documents labeled `topic<k>`, generated from `config.seed`.
pub fn planted_documents(config: &PlantedConfig) -> Result<(Vec<RawDocument>, Vec<usize>)> {
    let (lo, hi) = config.sentence_len;
    if config.topics == 0 || config.words_per_topic == 0 || lo == 0 || lo > hi {
        return Err(Error::InvalidArgument("degenerate planted corpus settings".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut docs = Vec::with_capacity(config.documents);
    let mut topics = Vec::with_capacity(config.documents);
    for _ in 0..config.documents {
        let k = rng.random_range(0..config.topics);
        let sentences = (0..config.sentences_per_document)
            .map(|_| {
                let len = rng.random_range(lo..=hi);
                (0..len)
                    .map(|_| planted_word(k, rng.random_range(0..config.words_per_topic)))
                    .collect()
            })
            .collect();
        docs.push(RawDocument {
            labels: vec![format!("topic{k}")],
            sentences,
        });
        topics.push(k);
    }
    Ok((docs, topics))
}

/// A planted corpus with its own vocabulary.
pub fn planted_corpus(config: &PlantedConfig) -> Result<PlantedCorpus> {
    let (raw, doc_topic) = planted_documents(config)?;
    let streams: Vec<&[String]> = raw.iter().flat_map(|d| d.tokens()).collect();
    let vocab = build_vocabulary(streams.iter().copied(), 1, usize::MAX)?;
    let corpus = encode_corpus(&raw, &vocab);
    let word_topic = vocab.words().iter().map(|w| parse_planted(w)).collect();
    Ok(PlantedCorpus {
        vocab,
        corpus,
        word_topic,
        doc_topic,
        raw,
    })
}
