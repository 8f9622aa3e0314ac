//! Raw corpus readers and the binary corpus archive.
//!
//! Archive layout, all integers little-endian u32:
//!
//! ```text
//! "GMNTMCORP1"
//! W, then W entries of (byte length, UTF-8 word, count)      vocabulary, id order
//! D, then per document:
//!     sentence count, then per sentence: length, ids...
//! per document: label count, then (byte length, UTF-8 label) per label
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Corpus, Vocabulary};
use crate::binio::{usize_to_u32, write_str, write_u32, LeReader};
use crate::error::{Error, Result};

pub const CORPUS_MAGIC: &[u8; 10] = b"GMNTMCORP1";

/// A document as read from disk, before preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawText {
    pub labels: Vec<String>,
    pub text: String,
}

/// One document per line, with an optional `label<TAB>` prefix.
/// Several labels may be given as a comma-separated list.
pub fn read_line_documents(path: &Path) -> Result<Vec<RawText>> {
    let content = fs::read_to_string(path)?;
    Ok(content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| match line.split_once('\t') {
            Some((labels, text)) => RawText {
                labels: labels
                    .split(',')
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect(),
                text: text.to_string(),
            },
            None => RawText {
                labels: vec![],
                text: line.to_string(),
            },
        })
        .collect())
}

/// One document per file. Files directly under `root` are unlabeled; files
/// inside a subdirectory take the first-level subdirectory name as label.
/// Traversal order is sorted by path. Non-UTF-8 bytes are replaced.
pub fn read_directory_documents(root: &Path) -> Result<Vec<RawText>> {
    let mut out = Vec::new();
    visit(root, None, &mut out)?;
    Ok(out)
}

fn visit(dir: &Path, label: Option<&str>, out: &mut Vec<RawText>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            visit(&path, Some(label.unwrap_or(&name)), out)?;
        } else {
            let bytes = fs::read(&path)?;
            out.push(RawText {
                labels: label.map(|l| vec![l.to_string()]).unwrap_or_default(),
                text: String::from_utf8_lossy(&bytes).into_owned(),
            });
        }
    }
    Ok(())
}

/// A vocabulary together with a corpus encoded against it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusArchive {
    pub vocab: Vocabulary,
    pub corpus: Corpus,
}

impl CorpusArchive {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(CORPUS_MAGIC)?;
        write_u32(w, usize_to_u32(self.vocab.len(), "vocabulary size")?)?;
        for (word, &count) in self.vocab.words().iter().zip(self.vocab.counts()) {
            write_str(w, word)?;
            let count =
                u32::try_from(count).map_err(|_| Error::InvalidArgument(format!("count of {word:?} exceeds u32")))?;
            write_u32(w, count)?;
        }
        let corpus = &self.corpus;
        write_u32(w, usize_to_u32(corpus.num_documents(), "document count")?)?;
        for d in 0..corpus.num_documents() {
            let sentences = corpus.document_sentences(d);
            write_u32(w, usize_to_u32(sentences.len(), "sentence count")?)?;
            for s in sentences {
                write_u32(w, usize_to_u32(s.len(), "sentence length")?)?;
                for &id in s {
                    write_u32(w, id)?;
                }
            }
        }
        for doc in corpus.documents() {
            write_u32(w, usize_to_u32(doc.labels.len(), "label count")?)?;
            for label in &doc.labels {
                write_str(w, label)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = LeReader::new(r);
        let mut magic = [0u8; 10];
        r.exact(&mut magic, "magic")?;
        if &magic != CORPUS_MAGIC {
            return Err(Error::BadMagic { expected: "GMNTMCORP1" });
        }
        let n_words = r.u32("vocabulary size")? as usize;
        let mut words = Vec::with_capacity(n_words.min(1 << 20));
        let mut counts = Vec::with_capacity(n_words.min(1 << 20));
        for _ in 0..n_words {
            words.push(r.string("vocabulary word")?);
            counts.push(r.u32("vocabulary count")? as u64);
        }
        let vocab = Vocabulary::from_parts(words, counts)?;

        let n_docs = r.u32("document count")? as usize;
        let mut docs = Vec::with_capacity(n_docs.min(1 << 20));
        for _ in 0..n_docs {
            let n_sent = r.u32("sentence count")? as usize;
            let mut sentences = Vec::with_capacity(n_sent.min(1 << 16));
            for _ in 0..n_sent {
                let len = r.u32("sentence length")? as usize;
                let mut ids = Vec::with_capacity(len.min(1 << 16));
                for _ in 0..len {
                    ids.push(r.u32("token id")?);
                }
                sentences.push(ids);
            }
            docs.push((Vec::new(), sentences));
        }
        for doc in docs.iter_mut() {
            let n = r.u32("label count")? as usize;
            for _ in 0..n {
                doc.0.push(r.string("label")?);
            }
        }
        if !r.at_end()? {
            return Err(Error::Format("trailing bytes after corpus archive".into()));
        }
        let corpus = Corpus::from_documents(docs, vocab.len())?;
        Ok(Self { vocab, corpus })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
