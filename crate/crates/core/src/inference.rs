//! Held-out inference, topic posteriors and perplexity.
//!
//! Held-out documents get fresh document and sentence vectors fitted by
//! stochastic gradient ascent with U, λ and the word vectors frozen. Slots
//! whose target is OOV are neither trained on nor scored.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, OOV};
use crate::error::{Error, Result};
use crate::gmm::GmmParams;
use crate::model::{ModelState, VectorTable};
use crate::training::{update_vector, LrSchedule, SlotWork, TrainConfig};

/// Vectors fitted to one held-out document and its predictive scores.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldoutFit {
    pub document: Vec<f64>,
    pub sentences: Vec<Vec<f64>>,
    /// `log p(w_i | d, s, context)` of every non-OOV slot, in reading order.
    pub log_probs: Vec<f64>,
    /// Number of tokens including OOV.
    pub tokens: usize,
}

impl HeldoutFit {
    pub fn scored(&self) -> usize {
        self.log_probs.len()
    }
}

/// Settings for held-out fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldoutConfig {
    pub passes: usize,
    pub lr: f64,
    pub lr_end: f64,
    pub seed: u64,
}

impl HeldoutConfig {
    pub fn from_train(config: &TrainConfig) -> Self {
        Self {
            passes: config.heldout_passes,
            lr: config.lr,
            lr_end: config.lr_end,
            seed: config.seed,
        }
    }

    /// Linear schedule over `passes` sweeps of `scored` slots.
    pub fn schedule(&self, scored: usize) -> Result<LrSchedule> {
        LrSchedule::new(self.lr, self.lr_end, self.passes.saturating_mul(scored))
    }
}

/// Fit `vec(d)` and `vec(s)` for a document given as encoded sentences,
/// then score each non-OOV slot under the frozen softmax.
pub fn infer_heldout<R: Rng + ?Sized>(
    state: &ModelState,
    sentences: &[&[u32]],
    schedule: &LrSchedule,
    passes: usize,
    rng: &mut R,
) -> Result<HeldoutFit> {
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(Error::Empty("held-out document has no tokens".into()));
    }
    let w = state.num_words();
    if let Some(&bad) = sentences.iter().flat_map(|s| s.iter()).find(|&&id| id as usize >= w) {
        return Err(Error::OutOfRange {
            what: "word",
            id: bad as usize,
            size: w,
        });
    }
    let v = state.dim();
    let m = state.context();
    let std = state.config().init_std;
    let mut document = VectorTable::random(1, v, std, rng)?.row(0).to_vec();
    let mut svecs = VectorTable::random(sentences.len(), v, std, rng)?;

    // (sentence, position) of every scored slot
    let mut slots: Vec<(usize, usize)> = sentences
        .iter()
        .enumerate()
        .flat_map(|(s, ids)| {
            ids.iter()
                .enumerate()
                .filter(|(_, &id)| id != OOV)
                .map(move |(i, _)| (s, i))
        })
        .collect();

    let rho = state.rho();
    let step = state.config().prior_step;
    let mut work = SlotWork::new(state);
    let mut n = 0;
    for _ in 0..passes {
        slots.shuffle(rng);
        for &(s, i) in &slots {
            let lr = schedule.rate(n);
            n += 1;
            if lr == 0.0 {
                continue;
            }
            let ids = sentences[s];
            let context = &ids[i.saturating_sub(m)..i];
            let target = ids[i] as usize;
            work.forward(state, &document, svecs.row(s), context, target);
            work.input_gradient(state, target);
            update_vector(&mut document, &work.e[..v], lr, rho, state.gmm(), step, &mut work.resp);
            update_vector(
                svecs.row_mut(s),
                &work.e[v..2 * v],
                lr,
                rho,
                state.gmm(),
                step,
                &mut work.resp,
            );
        }
    }

    let mut log_probs = Vec::new();
    for (s, ids) in sentences.iter().enumerate() {
        for (i, &id) in ids.iter().enumerate() {
            if id == OOV {
                continue;
            }
            let context = &ids[i.saturating_sub(m)..i];
            let lp = work.forward(state, &document, svecs.row(s), context, id as usize);
            if !lp.is_finite() {
                return Err(Error::NonFinite("held-out log-probability"));
            }
            log_probs.push(lp.min(0.0));
        }
    }
    Ok(HeldoutFit {
        document,
        sentences: svecs.rows().map(<[f64]>::to_vec).collect(),
        log_probs,
        tokens: sentences.iter().map(|s| s.len()).sum(),
    })
}

/// Seed for one held-out document: depends on `seed` and the document's
/// non-OOV content only, so results do not depend on document order.
pub fn document_seed(seed: u64, sentences: &[&[u32]]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for s in sentences {
        for &id in s.iter().filter(|&&id| id != OOV) {
            h.update(id.to_le_bytes());
        }
        h.update(u32::MAX.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Fit every document of `heldout` independently, in parallel.
pub fn infer_corpus(state: &ModelState, heldout: &Corpus, config: &HeldoutConfig) -> Result<Vec<HeldoutFit>> {
    if heldout.vocab_size() != state.num_words() {
        return Err(Error::DimensionMismatch(format!(
            "held-out corpus encoded for {} words, model has {}",
            heldout.vocab_size(),
            state.num_words()
        )));
    }
    (0..heldout.num_documents())
        .into_par_iter()
        .map(|d| {
            let sentences = heldout.document_sentences(d);
            let scored = sentences.iter().flat_map(|s| s.iter()).filter(|&&id| id != OOV).count();
            let schedule = config.schedule(scored)?;
            let mut rng = ChaCha8Rng::seed_from_u64(document_seed(config.seed, &sentences));
            infer_heldout(state, &sentences, &schedule, config.passes, &mut rng)
        })
        .collect()
}

/// Held-out perplexity over non-OOV tokens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perplexity {
    pub docs: usize,
    pub tokens: usize,
    pub log_prob_sum: f64,
    pub perplexity: f64,
}

impl Perplexity {
    /// `exp(-(1/N) sum log p)` over the scored slots of `fits`.
    pub fn from_fits(fits: &[HeldoutFit]) -> Result<Self> {
        let tokens: usize = fits.iter().map(HeldoutFit::scored).sum();
        if tokens == 0 {
            return Err(Error::Empty("no scorable held-out tokens".into()));
        }
        let log_prob_sum: f64 = fits.iter().flat_map(|f| f.log_probs.iter()).sum();
        Ok(Self {
            docs: fits.len(),
            tokens,
            log_prob_sum,
            perplexity: (-log_prob_sum / tokens as f64).exp(),
        })
    }
}

impl fmt::Display for Perplexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "docs={} tokens={} perplexity={}",
            self.docs, self.tokens, self.perplexity
        )
    }
}

pub fn perplexity(state: &ModelState, heldout: &Corpus, config: &HeldoutConfig) -> Result<Perplexity> {
    Perplexity::from_fits(&infer_corpus(state, heldout, config)?)
}

/// Perplexity of the training-set unigram frequencies on the non-OOV tokens
/// of `heldout`, with OOV mass excluded from the distribution.
pub fn unigram_perplexity(counts: &[u64], heldout: &Corpus) -> Result<Perplexity> {
    let total: u64 = counts.iter().skip(1).sum();
    if total == 0 {
        return Err(Error::Empty("no in-vocabulary training counts".into()));
    }
    let mut tokens = 0;
    let mut sum = 0.0;
    for s in 0..heldout.num_sentences() {
        for &id in heldout.sentence(s).iter().filter(|&&id| id != OOV) {
            let c = *counts.get(id as usize).ok_or(Error::OutOfRange {
                what: "word",
                id: id as usize,
                size: counts.len(),
            })?;
            if c == 0 {
                return Err(Error::NonFinite("unigram log-probability of an unseen word"));
            }
            sum += (c as f64 / total as f64).ln();
            tokens += 1;
        }
    }
    if tokens == 0 {
        return Err(Error::Empty("no scorable held-out tokens".into()));
    }
    Ok(Perplexity {
        docs: heldout.num_documents(),
        tokens,
        log_prob_sum: sum,
        perplexity: (-sum / tokens as f64).exp(),
    })
}

/// Posterior `q(z = k | x)` over topics; the same for words, sentences
/// and documents.
pub fn topic_posterior(x: &[f64], gmm: &GmmParams) -> Result<Vec<f64>> {
    gmm.responsibilities(x)
}

/// Topic distribution of one word occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTopic {
    pub posterior: Vec<f64>,
    /// Set when the three posteriors share no support and the result is
    /// their renormalized sum instead of their product.
    pub fallback: bool,
}

fn log_posterior(gmm: &GmmParams, x: &[f64]) -> Result<Vec<f64>> {
    let mut lj = gmm.component_log_joint(x)?;
    let lse = log_sum_exp(&lj);
    lj.iter_mut().for_each(|l| *l -= lse);
    Ok(lj)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalized product of the word, sentence and document posteriors.
pub fn slot_topic(state: &ModelState, w: u32, s: usize, d: usize) -> Result<SlotTopic> {
    let psi = state.psi();
    let check = |what: &'static str, id: usize, size: usize| {
        if id < size {
            Ok(())
        } else {
            Err(Error::OutOfRange { what, id, size })
        }
    };
    check("word", w as usize, psi.words.len())?;
    check("sentence", s, psi.sentences.len())?;
    check("document", d, psi.documents.len())?;
    let gmm = state.gmm();
    let lw = log_posterior(gmm, psi.words.row(w as usize))?;
    let ls = log_posterior(gmm, psi.sentences.row(s))?;
    let ld = log_posterior(gmm, psi.documents.row(d))?;
    Ok(combine_posteriors(&lw, &ls, &ld))
}

pub(crate) fn combine_posteriors(lw: &[f64], ls: &[f64], ld: &[f64]) -> SlotTopic {
    let mut sum: Vec<f64> = (0..lw.len()).map(|k| lw[k] + ls[k] + ld[k]).collect();
    let lse = log_sum_exp(&sum);
    if lse.is_finite() {
        sum.iter_mut().for_each(|l| *l = (*l - lse).exp());
        return SlotTopic {
            posterior: sum,
            fallback: false,
        };
    }
    let posterior = (0..lw.len())
        .map(|k| (lw[k].exp() + ls[k].exp() + ld[k].exp()) / 3.0)
        .collect();
    SlotTopic {
        posterior,
        fallback: true,
    }
}
