//! Command-line driver behind the `gmntm` binary.
//!
//! Exit codes: 0 success, 2 usage, 3 unreadable or malformed input,
//! 4 numerical failure, 5 write failure, 6 dimension or vocabulary mismatch.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    build_vocabulary, encode_corpus, parse_stopwords, read_directory_documents, read_line_documents, Corpus,
    CorpusArchive, Preprocessor, RawDocument,
};
use crate::error::Error;
use crate::eval::{
    classify_eval, retrieval_eval, top_words, train_classifier, ClassifierMode, LabeledVectors, Metric,
    DEFAULT_RECALL_POINTS,
};
use crate::inference::{infer_corpus, unigram_perplexity, HeldoutConfig, Perplexity};
use crate::model::ModelState;
use crate::modelfile::{load_model, save_model};
use crate::training::{train, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_WRITE: i32 = 5;
pub const EXIT_MISMATCH: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "gmntm", version, about = "Gaussian mixture neural topic model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize raw text into a corpus archive.
    Prepare(PrepareArgs),
    /// Train a model on a corpus archive.
    Train(Box<TrainArgs>),
    /// Held-out perplexity of a model.
    Perplexity(PerplexityArgs),
    /// Precision at fixed recall levels for held-out queries against the
    /// training documents.
    Retrieve(EvalArgs),
    /// Logistic regression on document vectors.
    Classify(ClassifyArgs),
    /// Words with the largest topic posterior.
    Topics(TopicsArgs),
}

#[derive(Debug, Args)]
struct PrepareArgs {
    /// A file with one document per line (`labels<TAB>text`) or a directory
    /// tree with one document per file, labeled by subdirectory.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Encode against the vocabulary of an existing archive.
    #[arg(long)]
    vocab_from: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    max_vocab: usize,
    #[arg(long, default_value_t = 1)]
    min_count: u64,
    /// Stopword file replacing the built-in list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

/// Every training setting, as a string handed to [`TrainConfig::set`].
#[derive(Debug, Args)]
struct TrainFlags {
    #[arg(long)]
    topics: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    context: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    lr_end: Option<String>,
    #[arg(long)]
    outer_iters: Option<String>,
    #[arg(long)]
    passes: Option<String>,
    #[arg(long)]
    em_max_iters: Option<String>,
    #[arg(long)]
    em_tol: Option<String>,
    /// A number, or `auto` for (W+S+D)/slots.
    #[arg(long)]
    prior_weight: Option<String>,
    /// `diagonal` or `full`.
    #[arg(long)]
    covariance: Option<String>,
    #[arg(long)]
    var_floor: Option<String>,
    #[arg(long)]
    init_std: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `exact` or `negative`.
    #[arg(long)]
    softmax: Option<String>,
    #[arg(long)]
    negatives: Option<String>,
    /// `implicit` or `explicit`.
    #[arg(long)]
    prior_step: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    converge_tol: Option<String>,
    #[arg(long)]
    heldout_passes: Option<String>,
}

impl TrainFlags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 20] {
        [
            ("topics", &self.topics),
            ("dim", &self.dim),
            ("context", &self.context),
            ("lr", &self.lr),
            ("lr-end", &self.lr_end),
            ("outer-iters", &self.outer_iters),
            ("passes", &self.passes),
            ("em-max-iters", &self.em_max_iters),
            ("em-tol", &self.em_tol),
            ("prior-weight", &self.prior_weight),
            ("covariance", &self.covariance),
            ("var-floor", &self.var_floor),
            ("init-std", &self.init_std),
            ("seed", &self.seed),
            ("softmax", &self.softmax),
            ("negatives", &self.negatives),
            ("prior-step", &self.prior_step),
            ("weight-decay", &self.weight_decay),
            ("converge-tol", &self.converge_tol),
            ("heldout-passes", &self.heldout_passes),
        ]
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Progress log; defaults to the output path with `.trace` appended.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// `key=value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Debug, Args)]
struct PerplexityArgs {
    #[arg(long)]
    model: PathBuf,
    /// Held-out corpus archive encoded with the model's vocabulary.
    #[arg(long)]
    corpus: PathBuf,
    /// Inference passes per document; defaults to the model's setting.
    #[arg(long)]
    passes: Option<usize>,
    /// Also report the training-frequency unigram baseline.
    #[arg(long)]
    baseline: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// The corpus archive the model was trained on.
    #[arg(long)]
    train: PathBuf,
    /// Held-out corpus archive; its documents are inferred.
    #[arg(long)]
    test: PathBuf,
    /// Comma-separated recall levels.
    #[arg(long, value_delimiter = ',')]
    recall: Option<Vec<f64>>,
    /// Write the curve here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// `accuracy` or `map`.
    #[arg(long, default_value = "accuracy")]
    metric: String,
    /// `multinomial` or `binary`; defaults to multinomial for single-label
    /// training data and binary otherwise.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    #[arg(long, default_value_t = 500)]
    iters: usize,
}

#[derive(Debug, Args)]
struct TopicsArgs {
    #[arg(long)]
    model: PathBuf,
    /// Topic index; every topic when omitted.
    #[arg(long)]
    topic: Option<usize>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    min_freq: u64,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::MetricMismatch { .. } | Error::OutOfRange { .. } => EXIT_USAGE,
        Error::NonFinite(_) | Error::TooFewSamples { .. } | Error::ZeroVector(_) => EXIT_NUMERICAL,
        Error::DimensionMismatch(_) | Error::VocabularyMismatch { .. } => EXIT_MISMATCH,
        Error::Format(_)
        | Error::BadMagic { .. }
        | Error::Truncated(_)
        | Error::Header(_)
        | Error::MissingLabels(_)
        | Error::Empty(_)
        | Error::Io(_) => EXIT_INPUT,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn reading<T>(path: &Path, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn writing<T>(path: &Path, r: std::result::Result<T, impl std::fmt::Display>) -> CliResult<T> {
    r.map_err(|e| CliError {
        code: EXIT_WRITE,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn out_err(e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_WRITE,
        message: format!("cannot write output: {e}"),
    }
}

fn usage(message: String) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message,
    }
}

/// Parse `args` (program name first), run, and return the exit code.
/// Reports go to `out`, diagnostics and progress to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Prepare(a) => prepare(a, out),
        Command::Train(a) => cmd_train(*a, err),
        Command::Perplexity(a) => cmd_perplexity(a, out),
        Command::Retrieve(a) => cmd_retrieve(a, out),
        Command::Classify(a) => cmd_classify(a, out),
        Command::Topics(a) => cmd_topics(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_INPUT,
            message: format!("{}: no such file or directory", path.display()),
        })
    }
}

fn load_archive(path: &Path) -> CliResult<CorpusArchive> {
    require_file(path)?;
    reading(path, CorpusArchive::load(path))
}

fn load(path: &Path) -> CliResult<ModelState> {
    require_file(path)?;
    reading(path, load_model(path))
}

fn same_vocab(state: &ModelState, archive: &CorpusArchive) -> CliResult<()> {
    let (model, corpus) = (state.vocab().checksum(), archive.vocab.checksum());
    if model != corpus {
        return Err(Error::VocabularyMismatch { model, corpus }.into());
    }
    Ok(())
}

fn prepare(a: PrepareArgs, out: &mut dyn Write) -> CliResult<()> {
    require_file(&a.input)?;
    let pre = match &a.stopwords {
        Some(p) => {
            require_file(p)?;
            let text = reading(p, fs::read_to_string(p).map_err(Error::from))?;
            Preprocessor::with_stopwords(parse_stopwords(&text))
        }
        None => Preprocessor::default(),
    };
    let raw = if a.input.is_dir() {
        reading(&a.input, read_directory_documents(&a.input))?
    } else {
        reading(&a.input, read_line_documents(&a.input))?
    };
    let docs: Vec<RawDocument> = raw
        .iter()
        .map(|r| RawDocument::from_text(&r.text, r.labels.clone(), &pre))
        .collect();
    let vocab = match &a.vocab_from {
        Some(p) => load_archive(p)?.vocab,
        None => {
            let streams: Vec<&[String]> = docs.iter().flat_map(|d| d.tokens()).collect();
            build_vocabulary(streams.iter().copied(), a.min_count, a.max_vocab)?
        }
    };
    let corpus = encode_corpus(&docs, &vocab);
    let archive = CorpusArchive { vocab, corpus };
    writing(&a.output, archive.save(&a.output))?;
    let c = &archive.corpus;
    writeln!(
        out,
        "docs={} sentences={} tokens={} vocab={} dropped={}",
        c.num_documents(),
        c.num_sentences(),
        c.num_slots(),
        archive.vocab.len(),
        c.dropped_documents()
    )
    .map_err(out_err)
}

fn train_config(a: &TrainArgs) -> CliResult<TrainConfig> {
    let mut config = TrainConfig::default();
    if let Some(p) = &a.config {
        require_file(p)?;
        let text = reading(p, fs::read_to_string(p).map_err(Error::from))?;
        config
            .apply_text(&text)
            .map_err(|e| usage(format!("{}: {e}", p.display())))?;
    }
    for (key, value) in a.flags.pairs() {
        if let Some(v) = value {
            config.set(key, v).map_err(|e| usage(format!("--{key}: {e}")))?;
        }
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn cmd_train(a: TrainArgs, err: &mut dyn Write) -> CliResult<()> {
    let config = train_config(&a)?;
    let archive = load_archive(&a.corpus)?;
    let trace_path = a.trace.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".trace");
        PathBuf::from(p)
    });
    let mut trace = Vec::new();
    let output = train(&archive.corpus, &archive.vocab, &config, |p| {
        let _ = writeln!(err, "{p}");
        let _ = writeln!(trace, "{p}");
    })?;
    writing(&a.output, save_model(&output.state, &a.output))?;
    writing(&trace_path, fs::write(&trace_path, trace))?;
    Ok(())
}

fn heldout(state: &ModelState, passes: Option<usize>) -> HeldoutConfig {
    let mut hc = HeldoutConfig::from_train(state.config());
    if let Some(p) = passes {
        hc.passes = p;
    }
    hc
}

fn cmd_perplexity(a: PerplexityArgs, out: &mut dyn Write) -> CliResult<()> {
    let state = load(&a.model)?;
    let archive = load_archive(&a.corpus)?;
    same_vocab(&state, &archive)?;
    let fits = infer_corpus(&state, &archive.corpus, &heldout(&state, a.passes))?;
    let p = Perplexity::from_fits(&fits)?;
    writeln!(out, "{p}").map_err(out_err)?;
    if a.baseline {
        let b = unigram_perplexity(state.vocab().counts(), &archive.corpus)?;
        writeln!(out, "baseline=unigram {b}").map_err(out_err)?;
    }
    Ok(())
}

/// Training document vectors and inferred test vectors, both labeled.
fn labeled_pair(
    state: &ModelState,
    train_path: &Path,
    test_path: &Path,
) -> CliResult<(LabeledVectors, LabeledVectors)> {
    let train = load_archive(train_path)?;
    let test = load_archive(test_path)?;
    same_vocab(state, &train)?;
    same_vocab(state, &test)?;
    require_labels(&train.corpus, train_path)?;
    require_labels(&test.corpus, test_path)?;
    let db = LabeledVectors::from_documents(state, &train.corpus)?;
    let fits = infer_corpus(state, &test.corpus, &heldout(state, None))?;
    let queries = LabeledVectors::from_fits(&fits, &test.corpus)?;
    Ok((db, queries))
}

fn require_labels(corpus: &Corpus, path: &Path) -> CliResult<()> {
    match corpus.documents().iter().position(|d| d.labels.is_empty()) {
        Some(d) => Err(Error::MissingLabels(format!("{}: document {d} has no label", path.display())).into()),
        None => Ok(()),
    }
}

fn cmd_retrieve(a: EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let state = load(&a.model)?;
    let recall = a.recall.clone().unwrap_or_else(|| DEFAULT_RECALL_POINTS.to_vec());
    let (db, queries) = labeled_pair(&state, &a.train, &a.test)?;
    let curve = retrieval_eval(&db, &queries, &recall)?;
    match &a.output {
        Some(p) => writing(p, fs::write(p, curve.to_tsv())),
        None => out.write_all(curve.to_tsv().as_bytes()).map_err(out_err),
    }
}

fn cmd_classify(a: ClassifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let metric: Metric = a.metric.parse().map_err(|e: Error| usage(e.to_string()))?;
    let explicit_mode = a
        .mode
        .as_deref()
        .map(str::parse::<ClassifierMode>)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    let state = load(&a.model)?;
    let (train, test) = labeled_pair(&state, &a.train, &a.test)?;
    let mode = explicit_mode.unwrap_or(if train.is_single_label() {
        ClassifierMode::Multinomial
    } else {
        ClassifierMode::PerLabelBinary
    });
    let compatible = matches!(
        (metric, mode),
        (Metric::Accuracy, ClassifierMode::Multinomial)
            | (Metric::MeanAveragePrecision, ClassifierMode::PerLabelBinary)
    );
    if !compatible {
        return Err(Error::MetricMismatch {
            metric: metric.as_str(),
            mode: mode.as_str(),
        }
        .into());
    }
    let classifier = train_classifier(&train, mode, a.l2, a.iters)?;
    let value = classify_eval(&classifier, &test, metric)?;
    writeln!(out, "metric={metric} value={value} n={}", test.len()).map_err(out_err)
}

fn cmd_topics(a: TopicsArgs, out: &mut dyn Write) -> CliResult<()> {
    let state = load(&a.model)?;
    let topics: Vec<usize> = match a.topic {
        Some(k) => vec![k],
        None => (0..state.gmm().num_components()).collect(),
    };
    for k in topics {
        for (rank, w) in top_words(&state, k, a.n, a.min_freq)?.iter().enumerate() {
            writeln!(
                out,
                "topic={k} rank={} word={} score={} count={}",
                rank + 1,
                w.word,
                w.score,
                w.count
            )
            .map_err(out_err)?;
        }
    }
    Ok(())
}
