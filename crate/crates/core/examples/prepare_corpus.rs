//! Turn labeled text into a corpus archive and read it back.
//!
//! Run with `cargo run --example prepare_corpus`.

use gmntm::corpus::{build_vocabulary, encode_corpus, CorpusArchive, Preprocessor, RawDocument};

const DOCS: &[(&str, &str)] = &[
    (
        "space",
        "The shuttle reached orbit. Astronauts repaired the telescope in orbit!",
    ),
    ("space", "Mission control tracked the orbit of the new satellite."),
    ("hockey", "The goalie stopped every shot. Fans cheered the hockey team."),
    ("hockey", "A late goal won the game for the team."),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pre = Preprocessor::default();
    let docs: Vec<RawDocument> = DOCS
        .iter()
        .map(|(label, text)| RawDocument::from_text(text, vec![label.to_string()], &pre))
        .collect();
    for doc in &docs {
        println!("{:?} {:?}", doc.labels, doc.sentences);
    }

    let streams: Vec<&[String]> = docs.iter().flat_map(|d| d.tokens()).collect();
    let vocab = build_vocabulary(streams.iter().copied(), 1, 5000)?;
    let corpus = encode_corpus(&docs, &vocab);
    println!(
        "vocabulary of {} ids, {} sentences, {} slots",
        vocab.len(),
        corpus.num_sentences(),
        corpus.num_slots()
    );

    let dir = tempfile_dir()?;
    let path = dir.join("corpus.bin");
    let archive = CorpusArchive { vocab, corpus };
    archive.save(&path)?;
    let back = CorpusArchive::load(&path)?;
    assert_eq!(back, archive);
    println!("wrote and reloaded {}", path.display());
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("gmntm-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
