//! Trainable parameters and the word softmax.
//!
//! A word score is
//!
//! ```text
//! score(w) = <u_doc^w, vec(d)> + <u_sen^w, vec(s)> + sum_t <u_t^w, vec(w_{i-t})> + b^w
//! ```
//!
//! where `t = 1` is the nearest predecessor. Prediction weights for one word
//! are stored as a single row `[u_doc | u_sen | u_1 | ... | u_m]`, so a
//! score is one dot product against the stacked input
//! `[vec(d) | vec(s) | vec(w_{i-1}) | ... | vec(w_{i-m})]` with zeros for
//! missing predecessors.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::gmm::GmmParams;
use crate::training::TrainConfig;

/// Dense row-major table of equal-length vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    dim: usize,
    data: Vec<f64>,
}

impl VectorTable {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not form rows of length {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} in table of dimension {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub(crate) fn random<R: Rng + ?Sized>(rows: usize, dim: usize, std: f64, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, std)
            .map_err(|_| Error::InvalidArgument(format!("invalid init standard deviation {std}")))?;
        Ok(Self {
            dim,
            data: (0..rows * dim).map(|_| normal.sample(rng)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Word, sentence and document vectors (Ψ).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub words: VectorTable,
    pub sentences: VectorTable,
    pub documents: VectorTable,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.words.dim()
    }

    /// All vectors in the order words, sentences, documents.
    pub fn pooled(&self) -> Vec<&[f64]> {
        self.words
            .rows()
            .chain(self.sentences.rows())
            .chain(self.documents.rows())
            .collect()
    }
}

/// Output weights (U): per-word `u_doc`, `u_sen`, `u_1..u_m` and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionWeights {
    dim: usize,
    context: usize,
    rows: VectorTable,
    bias: Vec<f64>,
}

impl PredictionWeights {
    pub fn zeros(words: usize, dim: usize, context: usize) -> Self {
        Self {
            dim,
            context,
            rows: VectorTable::zeros(words, (2 + context) * dim),
            bias: vec![0.0; words],
        }
    }

    /// Build from the separate blocks: `u_doc`, `u_sen`, `u_t` for
    /// `t = 1..=m`, each with one row per word.
    pub fn from_blocks(
        u_doc: &VectorTable,
        u_sen: &VectorTable,
        u_ctx: &[VectorTable],
        bias: Vec<f64>,
    ) -> Result<Self> {
        let words = bias.len();
        let dim = u_doc.dim();
        let blocks = std::iter::once(u_doc).chain(std::iter::once(u_sen)).chain(u_ctx);
        let mut out = Self::zeros(words, dim, u_ctx.len());
        for (b, block) in blocks.enumerate() {
            if block.len() != words || block.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "weight block {b} is {}x{}, expected {words}x{dim}",
                    block.len(),
                    block.dim()
                )));
            }
            for w in 0..words {
                out.rows.row_mut(w)[b * dim..(b + 1) * dim].copy_from_slice(block.row(w));
            }
        }
        out.bias = bias;
        Ok(out)
    }

    pub fn num_words(&self) -> usize {
        self.bias.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn context(&self) -> usize {
        self.context
    }

    /// Length of a stacked row, `(2 + m) * V`.
    pub fn row_len(&self) -> usize {
        (2 + self.context) * self.dim
    }

    pub fn row(&self, w: usize) -> &[f64] {
        self.rows.row(w)
    }

    pub fn row_mut(&mut self, w: usize) -> &mut [f64] {
        self.rows.row_mut(w)
    }

    pub fn u_doc(&self, w: usize) -> &[f64] {
        &self.row(w)[..self.dim]
    }

    pub fn u_sen(&self, w: usize) -> &[f64] {
        &self.row(w)[self.dim..2 * self.dim]
    }

    /// `u_t^w` for offset `t` in `1..=m`.
    pub fn u_ctx(&self, w: usize, t: usize) -> &[f64] {
        assert!(
            (1..=self.context).contains(&t),
            "offset {t} outside 1..={}",
            self.context
        );
        &self.row(w)[(1 + t) * self.dim..(2 + t) * self.dim]
    }

    /// Mutable block `b` of word `w`: 0 = doc, 1 = sentence, `1 + t` = offset t.
    pub fn block_mut(&mut self, w: usize, b: usize) -> &mut [f64] {
        let dim = self.dim;
        &mut self.row_mut(w)[b * dim..(b + 1) * dim]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// Rows of block `b` for every word, in word order.
    pub fn block_rows(&self, b: usize) -> impl Iterator<Item = &[f64]> + '_ {
        let dim = self.dim;
        self.rows.rows().map(move |r| &r[b * dim..(b + 1) * dim])
    }

    pub fn is_finite(&self) -> bool {
        self.rows.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }

    /// `out[w] = <row(w), x> + b^w`
    pub(crate) fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        for (w, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(w), x) + self.bias[w];
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place softmax with max shift; returns `log sum exp` of the input.
pub(crate) fn softmax_in_place(v: &mut [f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
    max + total.ln()
}

/// Ψ, U and λ together with the configuration and vocabulary they were
/// trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    psi: EmbeddingTable,
    weights: PredictionWeights,
    gmm: GmmParams,
    config: TrainConfig,
    vocab: Vocabulary,
    rho: f64,
}

impl ModelState {
    /// Assemble and check dimensional consistency.
    pub fn from_parts(
        psi: EmbeddingTable,
        weights: PredictionWeights,
        gmm: GmmParams,
        config: TrainConfig,
        vocab: Vocabulary,
        rho: f64,
    ) -> Result<Self> {
        config.validate()?;
        let v = config.dim;
        let w = vocab.len();
        let mismatch = |what: String| Err(Error::DimensionMismatch(what));
        if psi.words.dim() != v || psi.sentences.dim() != v || psi.documents.dim() != v {
            return mismatch(format!("embedding dimension differs from {v}"));
        }
        if psi.words.len() != w || weights.num_words() != w {
            return mismatch(format!(
                "{} word vectors and {} weight rows for {w} vocabulary entries",
                psi.words.len(),
                weights.num_words()
            ));
        }
        if weights.dim() != v || weights.context() != config.context {
            return mismatch(format!(
                "weights have dimension {} and context {}, config says {v} and {}",
                weights.dim(),
                weights.context(),
                config.context
            ));
        }
        if gmm.dim() != v || gmm.num_components() != config.topics || gmm.mode() != config.covariance {
            return mismatch(format!(
                "mixture has {} {} components of dimension {}",
                gmm.num_components(),
                gmm.mode().as_str(),
                gmm.dim()
            ));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidArgument(format!("prior weight {rho}")));
        }
        if !(psi.words.is_finite() && psi.sentences.is_finite() && psi.documents.is_finite()) {
            return Err(Error::NonFinite("embedding table"));
        }
        if !weights.is_finite() {
            return Err(Error::NonFinite("prediction weights"));
        }
        Ok(Self {
            psi,
            weights,
            gmm,
            config,
            vocab,
            rho,
        })
    }

    pub fn psi(&self) -> &EmbeddingTable {
        &self.psi
    }

    pub fn psi_mut(&mut self) -> &mut EmbeddingTable {
        &mut self.psi
    }

    pub fn weights(&self) -> &PredictionWeights {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut PredictionWeights {
        &mut self.weights
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut EmbeddingTable, &mut PredictionWeights, &GmmParams) {
        (&mut self.psi, &mut self.weights, &self.gmm)
    }

    pub fn gmm(&self) -> &GmmParams {
        &self.gmm
    }

    pub fn set_gmm(&mut self, gmm: GmmParams) -> Result<()> {
        if gmm.dim() != self.gmm.dim()
            || gmm.num_components() != self.gmm.num_components()
            || gmm.mode() != self.gmm.mode()
        {
            return Err(Error::DimensionMismatch(
                "replacement mixture has a different shape".into(),
            ));
        }
        self.gmm = gmm;
        Ok(())
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Prior weight resolved at initialization.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn num_words(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_sentences(&self) -> usize {
        self.psi.sentences.len()
    }

    pub fn num_documents(&self) -> usize {
        self.psi.documents.len()
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn context(&self) -> usize {
        self.config.context
    }

    /// Check that `corpus` is the one this model's Ψ was built for.
    pub fn check_corpus(&self, corpus: &Corpus) -> Result<()> {
        if corpus.vocab_size() != self.num_words()
            || corpus.num_sentences() != self.num_sentences()
            || corpus.num_documents() != self.num_documents()
        {
            return Err(Error::DimensionMismatch(format!(
                "corpus has W={} S={} D={}, model has W={} S={} D={}",
                corpus.vocab_size(),
                corpus.num_sentences(),
                corpus.num_documents(),
                self.num_words(),
                self.num_sentences(),
                self.num_documents()
            )));
        }
        Ok(())
    }

    fn check_ids(&self, d: usize, s: usize, context: &[u32]) -> Result<()> {
        let range = |what: &'static str, id: usize, size: usize| {
            if id < size {
                Ok(())
            } else {
                Err(Error::OutOfRange { what, id, size })
            }
        };
        range("document", d, self.num_documents())?;
        range("sentence", s, self.num_sentences())?;
        if context.len() > self.context() {
            return Err(Error::InvalidArgument(format!(
                "context of {} words exceeds m = {}",
                context.len(),
                self.context()
            )));
        }
        for &c in context {
            range("word", c as usize, self.num_words())?;
        }
        Ok(())
    }

    /// Stack `[dvec | svec | ctx_1 | ... | ctx_m]` into `x`. `context` is
    /// ordered oldest first, so `t = 1` is its last element.
    pub(crate) fn stack_input(&self, dvec: &[f64], svec: &[f64], context: &[u32], x: &mut [f64]) {
        let v = self.dim();
        x.fill(0.0);
        x[..v].copy_from_slice(dvec);
        x[v..2 * v].copy_from_slice(svec);
        for (t, &c) in context.iter().rev().enumerate() {
            x[(2 + t) * v..(3 + t) * v].copy_from_slice(self.psi.words.row(c as usize));
        }
    }

    /// Score of word `w` given document `d`, sentence `s` and the preceding
    /// words `context` (oldest first, nearest last).
    pub fn score(&self, w: u32, d: usize, s: usize, context: &[u32]) -> Result<f64> {
        self.check_ids(d, s, context)?;
        let w = w as usize;
        if w >= self.num_words() {
            return Err(Error::OutOfRange {
                what: "word",
                id: w,
                size: self.num_words(),
            });
        }
        let mut x = vec![0.0; self.weights.row_len()];
        self.stack_input(self.psi.documents.row(d), self.psi.sentences.row(s), context, &mut x);
        Ok(dot(self.weights.row(w), &x) + self.weights.bias[w])
    }

    /// Scores of every word.
    pub fn scores(&self, d: usize, s: usize, context: &[u32]) -> Result<Vec<f64>> {
        self.check_ids(d, s, context)?;
        let mut x = vec![0.0; self.weights.row_len()];
        self.stack_input(self.psi.documents.row(d), self.psi.sentences.row(s), context, &mut x);
        let mut out = vec![0.0; self.num_words()];
        self.weights.scores_into(&x, &mut out);
        Ok(out)
    }

    /// Softmax over all word scores.
    pub fn word_distribution(&self, d: usize, s: usize, context: &[u32]) -> Result<Vec<f64>> {
        let mut p = self.scores(d, s, context)?;
        softmax_in_place(&mut p);
        Ok(p)
    }
}

/// Fresh model: Ψ ~ N(0, σ_init² I), U = 0, λ = T standard normal
/// components with uniform weights.
pub fn init_model<R: Rng + ?Sized>(
    config: &TrainConfig,
    corpus: &Corpus,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<ModelState> {
    config.validate()?;
    if corpus.vocab_size() != vocab.len() {
        return Err(Error::DimensionMismatch(format!(
            "corpus encoded for {} words, vocabulary has {}",
            corpus.vocab_size(),
            vocab.len()
        )));
    }
    let v = config.dim;
    let psi = EmbeddingTable {
        words: VectorTable::random(vocab.len(), v, config.init_std, rng)?,
        sentences: VectorTable::random(corpus.num_sentences(), v, config.init_std, rng)?,
        documents: VectorTable::random(corpus.num_documents(), v, config.init_std, rng)?,
    };
    let weights = PredictionWeights::zeros(vocab.len(), v, config.context);
    let gmm = GmmParams::standard_normal(config.topics, v, config.covariance)?;
    let rho = config.resolve_prior_weight(corpus);
    ModelState::from_parts(psi, weights, gmm, config.clone(), vocab.clone(), rho)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::gmm::Covariance;

    /// A small random model with a matching random corpus.
    pub fn random_model(
        words: usize,
        dim: usize,
        context: usize,
        topics: usize,
        rng: &mut impl Rng,
    ) -> (ModelState, Corpus) {
        let vocab = Vocabulary::from_parts(
            std::iter::once(crate::corpus::OOV_TOKEN.to_string())
                .chain((1..words).map(|i| format!("w{i}")))
                .collect(),
            vec![1; words],
        )
        .unwrap();
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
        let mut state = init_model(&config, &corpus, &vocab, rng).unwrap();
        let fill = |t: &mut VectorTable, rng: &mut dyn rand::RngCore| {
            for i in 0..t.len() {
                for x in t.row_mut(i) {
                    *x = rng.random_range(-1.0..1.0);
                }
            }
        };
        fill(&mut state.psi.words, rng);
        fill(&mut state.psi.sentences, rng);
        fill(&mut state.psi.documents, rng);
        for w in 0..words {
            for x in state.weights.row_mut(w) {
                *x = rng.random_range(-1.0..1.0);
            }
            state.weights.bias[w] = rng.random_range(-1.0..1.0);
        }
        let mut weights: Vec<f64> = (0..topics).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let rest: f64 = weights[1..].iter().sum();
        weights[0] = 1.0 - rest;
        let gmm = GmmParams::new(
            weights,
            (0..topics)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
            (0..topics)
                .map(|_| Covariance::Diagonal((0..dim).map(|_| rng.random_range(0.3..1.5)).collect()))
                .collect(),
        )
        .unwrap();
        state.set_gmm(gmm).unwrap();
        (state, corpus)
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::random_model;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Term-by-term score evaluation straight from the definition.
    fn oracle_score(m: &ModelState, w: usize, d: usize, s: usize, context: &[u32]) -> f64 {
        let u = m.weights();
        let mut total = u.bias()[w];
        total += dot(u.u_doc(w), m.psi().documents.row(d));
        total += dot(u.u_sen(w), m.psi().sentences.row(s));
        for t in 1..=context.len() {
            let prev = context[context.len() - t] as usize;
            total += dot(u.u_ctx(w, t), m.psi().words.row(prev));
        }
        total
    }

    #[test]
    fn zero_weights_give_bias() {
        let (mut m, _) = random_model(5, 3, 2, 2, &mut rng(1));
        m.weights = PredictionWeights::zeros(5, 3, 2);
        m.weights.bias_mut().copy_from_slice(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        for w in 0..5u32 {
            assert_eq!(m.score(w, 0, 0, &[1, 2]).unwrap(), m.weights.bias()[w as usize]);
            assert_eq!(m.score(w, 1, 2, &[]).unwrap(), m.weights.bias()[w as usize]);
        }
    }

    #[test]
    fn score_matches_term_by_term_oracle() {
        let mut r = rng(2);
        for _ in 0..20 {
            let (m, _) = random_model(5, 3, 2, 2, &mut r);
            for ctx in [&[][..], &[4][..], &[3, 1][..]] {
                for w in 0..5 {
                    let got = m.score(w as u32, 2, 5, ctx).unwrap();
                    let want = oracle_score(&m, w, 2, 5, ctx);
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn offsets_count_from_nearest_word() {
        let (mut m, _) = random_model(4, 2, 2, 1, &mut rng(3));
        m.weights = PredictionWeights::zeros(4, 2, 2);
        // only u_1 of word 0 is nonzero
        m.weights.block_mut(0, 2).copy_from_slice(&[1.0, 0.0]);
        m.psi.words.row_mut(1).copy_from_slice(&[5.0, 0.0]);
        m.psi.words.row_mut(2).copy_from_slice(&[7.0, 0.0]);
        assert_eq!(m.score(0, 0, 0, &[1, 2]).unwrap(), 7.0);
        assert_eq!(m.score(0, 0, 0, &[2, 1]).unwrap(), 5.0);
    }

    #[test]
    fn rejects_bad_ids() {
        let (m, _) = random_model(5, 3, 2, 2, &mut rng(4));
        assert!(matches!(
            m.score(5, 0, 0, &[]),
            Err(Error::OutOfRange { what: "word", .. })
        ));
        assert!(m.score(0, 3, 0, &[]).is_err());
        assert!(m.score(0, 0, 6, &[]).is_err());
        assert!(m.score(0, 0, 0, &[9]).is_err());
        assert!(m.word_distribution(0, 0, &[1, 1, 1]).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        let (mut m, _) = random_model(6, 3, 2, 2, &mut rng(5));
        m.weights = PredictionWeights::zeros(6, 3, 2);
        for p in m.word_distribution(0, 0, &[1]).unwrap() {
            assert_eq!(p, 1.0 / 6.0);
        }
    }

    #[test]
    fn distribution_matches_direct_normalization() {
        let mut r = rng(6);
        for _ in 0..50 {
            let (m, _) = random_model(4, 3, 2, 2, &mut r);
            let p = m.word_distribution(1, 3, &[2, 3]).unwrap();
            let exps: Vec<f64> = (0..4).map(|w| oracle_score(&m, w, 1, 3, &[2, 3]).exp()).collect();
            let z: f64 = exps.iter().sum();
            for w in 0..4 {
                assert!((p[w] - exps[w] / z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn init_is_zero_weights_standard_prior_and_deterministic() {
        let (_, corpus) = random_model(5, 3, 2, 2, &mut rng(7));
        let vocab = Vocabulary::from_parts(
            ["<OOV>", "a", "b", "c", "d"].iter().map(|s| s.to_string()).collect(),
            vec![1; 5],
        )
        .unwrap();
        let cfg = TrainConfig {
            topics: 3,
            dim: 4,
            context: 2,
            ..TrainConfig::default()
        };
        let a = init_model(&cfg, &corpus, &vocab, &mut rng(11)).unwrap();
        let b = init_model(&cfg, &corpus, &vocab, &mut rng(11)).unwrap();
        assert_eq!(a, b);
        assert!(a.weights().row(3).iter().all(|&x| x == 0.0));
        assert!(a.weights().bias().iter().all(|&x| x == 0.0));
        for k in 0..3 {
            assert!(a.gmm().mean(k).iter().all(|&x| x == 0.0));
            assert_eq!(a.gmm().covariance(k), &crate::gmm::Covariance::Diagonal(vec![1.0; 4]));
        }
        let expected_rho = (5 + corpus.num_sentences() + corpus.num_documents()) as f64 / corpus.num_slots() as f64;
        assert_eq!(a.rho(), expected_rho);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bias_shift_leaves_distribution(seed in 0u64..100_000, c in -50.0f64..50.0) {
            let (m, _) = random_model(6, 3, 2, 2, &mut rng(seed));
            let mut shifted = m.clone();
            shifted.weights.bias_mut().iter_mut().for_each(|b| *b += c);
            let (p, q) = (m.word_distribution(0, 1, &[2]).unwrap(), shifted.word_distribution(0, 1, &[2]).unwrap());
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn distribution_is_a_simplex(seed in 0u64..100_000) {
            let (m, _) = random_model(7, 3, 3, 2, &mut rng(seed));
            let p = m.word_distribution(2, 4, &[1, 6]).unwrap();
            prop_assert!(p.iter().all(|&x| x > 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn score_is_linear_in_document_vector(seed in 0u64..100_000) {
            let (m, _) = random_model(5, 3, 2, 2, &mut rng(seed));
            let mut doubled = m.clone();
            doubled.psi.documents.row_mut(0).iter_mut().for_each(|x| *x *= 2.0);
            for w in 0..5u32 {
                let diff = doubled.score(w, 0, 1, &[3]).unwrap() - m.score(w, 0, 1, &[3]).unwrap();
                let direct = dot(m.weights().u_doc(w as usize), m.psi().documents.row(0));
                prop_assert!((diff - direct).abs() < 1e-12);
            }
        }
    }
}
