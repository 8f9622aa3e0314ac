//! Corpus ingestion: text preprocessing, vocabulary, encoded documents.

mod archive;
mod porter;
mod text;

use std::collections::HashMap;
use std::ops::Range;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use archive::{read_directory_documents, read_line_documents, CorpusArchive, RawText, CORPUS_MAGIC};
pub use porter::stem;
pub use text::{builtin_stopwords, parse_stopwords, preprocess_text, split_sentences, Preprocessor};

/// Id of the out-of-vocabulary token.
pub const OOV: u32 = 0;
/// Surface form stored for the out-of-vocabulary id.
pub const OOV_TOKEN: &str = "<OOV>";

/// Dense word ids with corpus frequencies. Id 0 is always [`OOV_TOKEN`].
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Rebuild a vocabulary from its word list and counts.
    pub fn from_parts(words: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} words but {} counts",
                words.len(),
                counts.len()
            )));
        }
        if words.first().map(String::as_str) != Some(OOV_TOKEN) {
            return Err(Error::Format(format!("vocabulary must start with {OOV_TOKEN}")));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (id, w) in words.iter().enumerate() {
            if index.insert(w.clone(), id as u32).is_some() {
                return Err(Error::Format(format!("duplicate vocabulary entry {w:?}")));
            }
        }
        Ok(Self { words, counts, index })
    }

    /// Vocabulary holding only the OOV entry.
    pub fn empty() -> Self {
        Self::from_parts(vec![OOV_TOKEN.to_string()], vec![0]).expect("valid")
    }

    /// Number of ids, OOV included.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 1
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// Id of `word`, or [`OOV`] when unknown.
    pub fn id(&self, word: &str) -> u32 {
        self.get(word).unwrap_or(OOV)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Checksum over the word list, used to match models with corpora.
    pub fn checksum(&self) -> u64 {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update((w.len() as u64).to_le_bytes());
            hasher.update(w.as_bytes());
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// Count tokens and keep the `max_size` most frequent ones with frequency
/// at least `min_count`. Equal frequencies are ordered lexicographically.
/// Tokens that do not make the cut are counted under OOV.
pub fn build_vocabulary<'a, I>(streams: I, min_count: u64, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    if min_count == 0 {
        return Err(Error::InvalidArgument("min_count must be at least 1".into()));
    }
    if max_size == 0 {
        return Err(Error::InvalidArgument("max_size must be at least 1".into()));
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    let mut oov = 0u64;
    for stream in streams {
        for tok in stream {
            if tok == OOV_TOKEN {
                oov += 1;
            } else {
                *freq.entry(tok.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut words = vec![OOV_TOKEN.to_string()];
    let mut counts = vec![0];
    for (i, (w, c)) in ranked.into_iter().enumerate() {
        if i < max_size && c >= min_count {
            words.push(w.to_string());
            counts.push(c);
        } else {
            oov += c;
        }
    }
    counts[0] = oov;
    Vocabulary::from_parts(words, counts)
}

/// A document after preprocessing: sentences of token strings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawDocument {
    pub labels: Vec<String>,
    pub sentences: Vec<Vec<String>>,
}

impl RawDocument {
    /// Split `text` into sentences and tokenize each.
    pub fn from_text(text: &str, labels: Vec<String>, pre: &Preprocessor) -> Self {
        let sentences = split_sentences(text)
            .iter()
            .map(|s| pre.tokens(s))
            .filter(|s| !s.is_empty())
            .collect();
        Self { labels, sentences }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &[String]> {
        self.sentences.iter().map(Vec::as_slice)
    }
}

/// One encoded document: a contiguous range of global sentence ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub sentences: Range<usize>,
    pub labels: Vec<String>,
}

/// A word occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub doc: usize,
    pub sentence: usize,
    pub position: usize,
    pub word: u32,
}

/// Encoded corpus. Sentence ids are global and consecutive in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    sentences: Vec<Vec<u32>>,
    sentence_doc: Vec<usize>,
    vocab_size: usize,
    dropped_documents: usize,
}

impl Corpus {
    /// Build from encoded documents, checking every invariant.
    pub fn from_documents(documents: Vec<(Vec<String>, Vec<Vec<u32>>)>, vocab_size: usize) -> Result<Self> {
        let mut corpus = Corpus {
            documents: Vec::with_capacity(documents.len()),
            sentences: Vec::new(),
            sentence_doc: Vec::new(),
            vocab_size,
            dropped_documents: 0,
        };
        for (d, (labels, sentences)) in documents.into_iter().enumerate() {
            if sentences.is_empty() {
                return Err(Error::Format(format!("document {d} has no sentences")));
            }
            let start = corpus.sentences.len();
            for s in sentences {
                if s.is_empty() {
                    return Err(Error::Format(format!("empty sentence in document {d}")));
                }
                if let Some(&bad) = s.iter().find(|&&w| w as usize >= vocab_size) {
                    return Err(Error::OutOfRange {
                        what: "word",
                        id: bad as usize,
                        size: vocab_size,
                    });
                }
                corpus.sentences.push(s);
                corpus.sentence_doc.push(d);
            }
            corpus.documents.push(Document {
                sentences: start..corpus.sentences.len(),
                labels,
            });
        }
        Ok(corpus)
    }

    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    pub fn num_slots(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Documents dropped by [`encode_corpus`] because nothing survived encoding.
    pub fn dropped_documents(&self) -> usize {
        self.dropped_documents
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, d: usize) -> &Document {
        &self.documents[d]
    }

    pub fn sentence(&self, s: usize) -> &[u32] {
        &self.sentences[s]
    }

    pub fn sentence_document(&self, s: usize) -> usize {
        self.sentence_doc[s]
    }

    /// Sentences of document `d`, in order.
    pub fn document_sentences(&self, d: usize) -> Vec<&[u32]> {
        self.documents[d]
            .sentences
            .clone()
            .map(|s| self.sentences[s].as_slice())
            .collect()
    }

    /// Every slot in corpus order.
    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.sentences.iter().enumerate().flat_map(move |(s, words)| {
            let doc = self.sentence_doc[s];
            words.iter().enumerate().map(move |(position, &word)| Slot {
                doc,
                sentence: s,
                position,
                word,
            })
        })
    }

    /// Check that `slot` points at an existing position holding `slot.word`.
    pub fn check_slot(&self, slot: &Slot) -> Result<()> {
        if slot.doc >= self.documents.len() {
            return Err(Error::OutOfRange {
                what: "document",
                id: slot.doc,
                size: self.documents.len(),
            });
        }
        if !self.documents[slot.doc].sentences.contains(&slot.sentence) {
            return Err(Error::OutOfRange {
                what: "sentence",
                id: slot.sentence,
                size: self.sentences.len(),
            });
        }
        let sentence = &self.sentences[slot.sentence];
        if slot.position >= sentence.len() {
            return Err(Error::OutOfRange {
                what: "position",
                id: slot.position,
                size: sentence.len(),
            });
        }
        if sentence[slot.position] != slot.word {
            return Err(Error::InvalidArgument(format!(
                "slot word {} does not match corpus word {}",
                slot.word, sentence[slot.position]
            )));
        }
        Ok(())
    }

    /// Back to token strings with `vocab`. OOV ids decode to [`OOV_TOKEN`].
    pub fn decode(&self, vocab: &Vocabulary) -> Vec<RawDocument> {
        self.documents
            .iter()
            .map(|doc| RawDocument {
                labels: doc.labels.clone(),
                sentences: doc
                    .sentences
                    .clone()
                    .map(|s| self.sentences[s].iter().map(|&w| vocab.word(w).to_string()).collect())
                    .collect(),
            })
            .collect()
    }

    /// Sorted, deduplicated label names across all documents.
    pub fn label_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.documents.iter().flat_map(|d| d.labels.iter().cloned()).collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Map tokens to ids. Unknown tokens become [`OOV`]; empty sentences and
/// documents are dropped, and the number of dropped documents is recorded.
pub fn encode_corpus(documents: &[RawDocument], vocab: &Vocabulary) -> Corpus {
    let mut encoded = Vec::with_capacity(documents.len());
    let mut dropped = 0;
    for doc in documents {
        let sentences: Vec<Vec<u32>> = doc
            .sentences
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.iter().map(|t| vocab.id(t)).collect())
            .collect();
        if sentences.is_empty() {
            dropped += 1;
        } else {
            encoded.push((doc.labels.clone(), sentences));
        }
    }
    let mut corpus = Corpus::from_documents(encoded, vocab.len()).expect("ids come from vocab");
    corpus.dropped_documents = dropped;
    corpus
}

/// The at most `m` words preceding `slot` in its sentence, nearest last.
pub fn context_window<'c>(corpus: &'c Corpus, slot: &Slot, m: usize) -> &'c [u32] {
    let sentence = corpus.sentence(slot.sentence);
    let end = slot.position.min(sentence.len());
    &sentence[end.saturating_sub(m)..end]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn raw(sentences: &[&[&str]]) -> RawDocument {
        RawDocument {
            labels: vec![],
            sentences: sentences.iter().map(|s| toks(s)).collect(),
        }
    }

    #[test]
    fn vocabulary_min_count() {
        let stream = toks(&["a", "a", "b"]);
        let v = build_vocabulary([stream.as_slice()], 2, 100).unwrap();
        assert_eq!(v.words(), &["<OOV>", "a"]);
        assert_eq!(v.counts(), &[1, 2]);
    }

    #[test]
    fn vocabulary_max_size_tie_break() {
        let stream = toks(&["b", "a"]);
        let v = build_vocabulary([stream.as_slice()], 1, 1).unwrap();
        assert_eq!(v.words(), &["<OOV>", "a"]);
    }

    #[test]
    fn vocabulary_empty_stream() {
        let v = build_vocabulary(std::iter::empty::<&[String]>(), 1, 10).unwrap();
        assert_eq!(v.words(), &["<OOV>"]);
        assert_eq!(v.id("anything"), OOV);
    }

    #[test]
    fn vocabulary_rejects_bad_thresholds() {
        let s = toks(&["a"]);
        assert!(build_vocabulary([s.as_slice()], 0, 1).is_err());
        assert!(build_vocabulary([s.as_slice()], 1, 0).is_err());
    }

    #[test]
    fn vocabulary_orders_by_frequency() {
        let s = toks(&["c", "b", "c", "a", "b", "c"]);
        let v = build_vocabulary([s.as_slice()], 1, 10).unwrap();
        assert_eq!(v.words(), &["<OOV>", "c", "b", "a"]);
        assert_eq!(v.counts(), &[0, 3, 2, 1]);
    }

    #[test]
    fn checksum_depends_on_words() {
        let a = Vocabulary::from_parts(toks(&["<OOV>", "x"]), vec![0, 1]).unwrap();
        let b = Vocabulary::from_parts(toks(&["<OOV>", "x"]), vec![0, 7]).unwrap();
        let c = Vocabulary::from_parts(toks(&["<OOV>", "y"]), vec![0, 1]).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn from_parts_validation() {
        assert!(Vocabulary::from_parts(toks(&["x"]), vec![1]).is_err());
        assert!(Vocabulary::from_parts(toks(&["<OOV>", "x", "x"]), vec![0, 1, 1]).is_err());
        assert!(Vocabulary::from_parts(toks(&["<OOV>"]), vec![]).is_err());
    }

    #[test]
    fn encode_substitutes_oov() {
        let s = toks(&["a"]);
        let v = build_vocabulary([s.as_slice()], 1, 10).unwrap();
        let c = encode_corpus(&[raw(&[&["a", "c"]])], &v);
        assert_eq!(c.sentence(0), &[1, OOV]);
    }

    #[test]
    fn encode_drops_empty_documents() {
        let v = Vocabulary::empty();
        let docs = [raw(&[&[]]), raw(&[]), raw(&[&["z"]])];
        let c = encode_corpus(&docs, &v);
        assert_eq!(c.num_documents(), 1);
        assert_eq!(c.dropped_documents(), 2);
    }

    #[test]
    fn encode_assigns_dense_sentence_ids() {
        let s = toks(&["a", "b"]);
        let v = build_vocabulary([s.as_slice()], 1, 10).unwrap();
        let c = encode_corpus(&[raw(&[&["a"], &["b"]]), raw(&[&["a", "b"]])], &v);
        assert_eq!(c.num_sentences(), 3);
        assert_eq!(c.document(0).sentences, 0..2);
        assert_eq!(c.document(1).sentences, 2..3);
        assert_eq!(c.sentence_document(2), 1);
        let ids: Vec<usize> = c.slots().map(|s| s.sentence).collect();
        assert_eq!(ids, vec![0, 1, 2, 2]);
    }

    #[test]
    fn context_window_examples() {
        let c = Corpus::from_documents(vec![(vec![], vec![vec![5, 7, 9], (1..=10).collect()])], 11).unwrap();
        let slot = |sentence, position| Slot {
            doc: 0,
            sentence,
            position,
            word: c.sentence(sentence)[position],
        };
        assert_eq!(context_window(&c, &slot(0, 2), 6), &[5, 7]);
        assert!(context_window(&c, &slot(0, 0), 6).is_empty());
        // positions 2..=7 of [1..10] hold 3..=8
        assert_eq!(context_window(&c, &slot(1, 8), 6), &[3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn check_slot_rejects_bad_positions() {
        let c = Corpus::from_documents(vec![(vec![], vec![vec![1, 2]])], 3).unwrap();
        let ok = Slot {
            doc: 0,
            sentence: 0,
            position: 1,
            word: 2,
        };
        assert!(c.check_slot(&ok).is_ok());
        assert!(c.check_slot(&Slot { position: 2, ..ok }).is_err());
        assert!(c.check_slot(&Slot { doc: 1, ..ok }).is_err());
        assert!(c.check_slot(&Slot { word: 1, ..ok }).is_err());
    }

    #[test]
    fn from_documents_rejects_invalid() {
        assert!(Corpus::from_documents(vec![(vec![], vec![vec![3]])], 3).is_err());
        assert!(Corpus::from_documents(vec![(vec![], vec![vec![]])], 3).is_err());
        assert!(Corpus::from_documents(vec![(vec![], vec![])], 3).is_err());
    }

    fn corpus_strategy() -> impl Strategy<Value = Corpus> {
        let sentence = prop::collection::vec(0u32..20, 1..12);
        let doc = prop::collection::vec(sentence, 1..5);
        prop::collection::vec(doc, 1..6)
            .prop_map(|docs| Corpus::from_documents(docs.into_iter().map(|d| (vec![], d)).collect(), 20).unwrap())
    }

    proptest! {
        #[test]
        fn context_never_crosses_sentences(c in corpus_strategy(), m in 1usize..8) {
            for slot in c.slots() {
                let ctx = context_window(&c, &slot, m);
                let sentence = c.sentence(slot.sentence);
                prop_assert_eq!(ctx.len(), slot.position.min(m));
                prop_assert_eq!(ctx, &sentence[slot.position - ctx.len()..slot.position]);
            }
        }

        #[test]
        fn decode_encode_round_trip(c in corpus_strategy()) {
            let mut words = vec![OOV_TOKEN.to_string()];
            words.extend((1..20).map(|i| format!("w{i}")));
            let vocab = Vocabulary::from_parts(words, vec![1; 20]).unwrap();
            let again = encode_corpus(&c.decode(&vocab), &vocab);
            prop_assert_eq!(again, c);
        }

        #[test]
        fn preprocessing_is_deterministic(s in "[ -~]{0,80}") {
            prop_assert_eq!(preprocess_text(&s), preprocess_text(&s));
        }
    }
}
