//! Alternating optimization: EM on the pooled embeddings (stage I) and
//! stochastic gradient ascent on per-slot objectives (stage II).
//!
//! The slot objective is
//!
//! ```text
//! J_i = rho * sum_{v in touched} log p(vec(v) | lambda) + log p(w_i | d, s, context)
//! ```
//!
//! where `touched` holds the document vector, the sentence vector and the
//! distinct context word vectors of the slot. Only the target word's
//! prediction weights receive updates.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{context_window, Corpus, Slot, Vocabulary};
use crate::error::{Error, Result};
use crate::gmm::{fit_em, fit_em_from, CovarianceMode, EmConfig, EmFit, GmmParams};
use crate::model::{dot, init_model, softmax_in_place, ModelState};

/// How the softmax likelihood gradient is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SoftmaxMode {
    /// Full normalization over the vocabulary.
    #[default]
    Exact,
    /// Logistic loss against `negatives` words drawn from unigram^0.75.
    NegativeSampling,
}

/// How the mixture prior enters a vector update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorStep {
    /// Proximal step: responsibilities are held at the current point and the
    /// resulting quadratic is solved exactly. Stable for any learning rate.
    #[default]
    Implicit,
    /// Plain gradient step `x += lr * rho * grad log p(x)`.
    Explicit,
}

/// All training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub topics: usize,
    pub dim: usize,
    pub context: usize,
    pub lr: f64,
    pub lr_end: f64,
    pub outer_iters: usize,
    pub passes: usize,
    pub em_max_iters: usize,
    pub em_tol: f64,
    /// `None` resolves to `(W + S + D) / slots`.
    pub prior_weight: Option<f64>,
    pub covariance: CovarianceMode,
    pub var_floor: f64,
    pub init_std: f64,
    pub seed: u64,
    pub softmax: SoftmaxMode,
    /// Noise words per slot in negative-sampling mode.
    pub negatives: usize,
    pub prior_step: PriorStep,
    /// L2 shrinkage on the updated weight rows. Off by default.
    pub weight_decay: f64,
    /// Stop when the mean objective improves by less than this.
    pub converge_tol: f64,
    /// Passes over each held-out document at inference time.
    pub heldout_passes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            topics: 128,
            dim: 128,
            context: 6,
            lr: 0.025,
            lr_end: 0.0001,
            outer_iters: 10,
            passes: 1,
            em_max_iters: 100,
            em_tol: 1e-4,
            prior_weight: None,
            covariance: CovarianceMode::Diagonal,
            var_floor: 1e-4,
            init_std: 0.01,
            seed: 1,
            softmax: SoftmaxMode::Exact,
            negatives: 10,
            prior_step: PriorStep::Implicit,
            weight_decay: 0.0,
            converge_tol: 1e-4,
            heldout_passes: 5,
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], in the order written by
/// [`TrainConfig::to_pairs`].
pub const CONFIG_KEYS: &[&str] = &[
    "topics",
    "dim",
    "context",
    "lr",
    "lr-end",
    "outer-iters",
    "passes",
    "em-max-iters",
    "em-tol",
    "prior-weight",
    "covariance",
    "var-floor",
    "init-std",
    "seed",
    "softmax",
    "negatives",
    "prior-step",
    "weight-decay",
    "converge-tol",
    "heldout-passes",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value {value:?} for {key}")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.topics == 0 || self.dim == 0 || self.context == 0 {
            return bad("topics, dim and context must be at least 1".into());
        }
        if !(self.lr_end > 0.0 && self.lr >= self.lr_end && self.lr.is_finite()) {
            return bad(format!("need lr >= lr-end > 0, got {} and {}", self.lr, self.lr_end));
        }
        if let Some(rho) = self.prior_weight {
            if !(rho.is_finite() && rho >= 0.0) {
                return bad(format!("prior weight must be non-negative, got {rho}"));
            }
        }
        if !(self.var_floor > 0.0 && self.var_floor.is_finite()) {
            return bad(format!("variance floor must be positive, got {}", self.var_floor));
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return bad(format!("init std must be positive, got {}", self.init_std));
        }
        if !(self.em_tol >= 0.0 && self.converge_tol >= 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay must be non-negative, got {}", self.weight_decay));
        }
        if self.passes == 0 {
            return bad("passes must be at least 1".into());
        }
        if self.softmax == SoftmaxMode::NegativeSampling && self.negatives == 0 {
            return bad("negative sampling needs at least one negative".into());
        }
        Ok(())
    }

    /// The prior weight for `corpus`: the configured value, or
    /// `(W + S + D) / slots` so that each vector's prior counts about once per pass.
    pub fn resolve_prior_weight(&self, corpus: &Corpus) -> f64 {
        self.prior_weight.unwrap_or_else(|| {
            let vectors = corpus.vocab_size() + corpus.num_sentences() + corpus.num_documents();
            vectors as f64 / corpus.num_slots().max(1) as f64
        })
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            max_iters: self.em_max_iters,
            tol: self.em_tol,
            var_floor: self.var_floor,
            mode: self.covariance,
        }
    }

    /// Set one field from its `key=value` spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "topics" => self.topics = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "context" => self.context = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "lr-end" => self.lr_end = parse(key, value)?,
            "outer-iters" => self.outer_iters = parse(key, value)?,
            "passes" => self.passes = parse(key, value)?,
            "em-max-iters" => self.em_max_iters = parse(key, value)?,
            "em-tol" => self.em_tol = parse(key, value)?,
            "prior-weight" => {
                self.prior_weight = match value.trim() {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "covariance" => self.covariance = value.trim().parse()?,
            "var-floor" => self.var_floor = parse(key, value)?,
            "init-std" => self.init_std = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "softmax" => {
                self.softmax = match value.trim() {
                    "exact" => SoftmaxMode::Exact,
                    "negative" => SoftmaxMode::NegativeSampling,
                    other => return Err(Error::InvalidArgument(format!("unknown softmax mode {other:?}"))),
                }
            }
            "negatives" => self.negatives = parse(key, value)?,
            "prior-step" => {
                self.prior_step = match value.trim() {
                    "implicit" => PriorStep::Implicit,
                    "explicit" => PriorStep::Explicit,
                    other => return Err(Error::InvalidArgument(format!("unknown prior step {other:?}"))),
                }
            }
            "weight-decay" => self.weight_decay = parse(key, value)?,
            "converge-tol" => self.converge_tol = parse(key, value)?,
            "heldout-passes" => self.heldout_passes = parse(key, value)?,
            other => return Err(Error::InvalidArgument(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Every field as `(key, value)`; feeding these back through
    /// [`TrainConfig::set`] reproduces the config exactly.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let softmax = match self.softmax {
            SoftmaxMode::Exact => "exact",
            SoftmaxMode::NegativeSampling => "negative",
        };
        vec![
            ("topics", self.topics.to_string()),
            ("dim", self.dim.to_string()),
            ("context", self.context.to_string()),
            ("lr", self.lr.to_string()),
            ("lr-end", self.lr_end.to_string()),
            ("outer-iters", self.outer_iters.to_string()),
            ("passes", self.passes.to_string()),
            ("em-max-iters", self.em_max_iters.to_string()),
            ("em-tol", self.em_tol.to_string()),
            (
                "prior-weight",
                self.prior_weight.map_or_else(|| "auto".to_string(), |r| r.to_string()),
            ),
            ("covariance", self.covariance.as_str().to_string()),
            ("var-floor", self.var_floor.to_string()),
            ("init-std", self.init_std.to_string()),
            ("seed", self.seed.to_string()),
            ("softmax", softmax.to_string()),
            ("negatives", self.negatives.to_string()),
            (
                "prior-step",
                match self.prior_step {
                    PriorStep::Implicit => "implicit",
                    PriorStep::Explicit => "explicit",
                }
                .to_string(),
            ),
            ("weight-decay", self.weight_decay.to_string()),
            ("converge-tol", self.converge_tol.to_string()),
            ("heldout-passes", self.heldout_passes.to_string()),
        ]
    }

    /// Parse `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("expected key=value, got {line:?}")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Linear decay from `lr` to `lr_end` over `total` updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    lr: f64,
    lr_end: f64,
    total: usize,
}

impl LrSchedule {
    pub fn new(lr: f64, lr_end: f64, total: usize) -> Result<Self> {
        if !(lr.is_finite() && lr_end >= 0.0 && lr >= lr_end) {
            return Err(Error::InvalidArgument(format!(
                "need lr >= lr_end >= 0, got {lr} and {lr_end}"
            )));
        }
        Ok(Self { lr, lr_end, total })
    }

    /// A constant rate.
    pub fn constant(lr: f64) -> Result<Self> {
        Self::new(lr, lr, 1)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Rate for update `n` (zero-based). The last planned update, and any
    /// beyond it, use `lr_end`.
    pub fn rate(&self, n: usize) -> f64 {
        if self.total <= 1 || n + 1 >= self.total {
            return self.lr_end;
        }
        let frac = n as f64 / (self.total - 1) as f64;
        self.lr - (self.lr - self.lr_end) * frac
    }
}

/// Gradient of one slot objective with respect to the parameters it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGradients {
    pub document: Vec<f64>,
    pub sentence: Vec<f64>,
    /// One entry per distinct context word, in ascending id order.
    pub words: Vec<(u32, Vec<f64>)>,
    /// The target word whose weights the remaining fields refer to.
    pub target: u32,
    pub u_doc: Vec<f64>,
    pub u_sen: Vec<f64>,
    /// `u_ctx[t - 1]` is the gradient for offset `t`; only present offsets.
    pub u_ctx: Vec<Vec<f64>>,
    pub bias: f64,
}

/// Scratch buffers for one slot evaluation.
pub(crate) struct SlotWork {
    /// Stacked input `[vec(d) | vec(s) | ctx_1 | ... | ctx_m]`.
    pub x: Vec<f64>,
    /// Softmax over the vocabulary.
    pub p: Vec<f64>,
    /// Likelihood gradient with respect to `x`.
    pub e: Vec<f64>,
    /// Scratch of length T.
    pub resp: Vec<f64>,
}

impl SlotWork {
    pub fn new(state: &ModelState) -> Self {
        let len = state.weights().row_len();
        Self {
            x: vec![0.0; len],
            p: vec![0.0; state.num_words()],
            e: vec![0.0; len],
            resp: vec![0.0; state.gmm().num_components()],
        }
    }

    /// Fill `x` and `p`; returns `log p(target)`.
    pub fn forward(&mut self, state: &ModelState, dvec: &[f64], svec: &[f64], context: &[u32], target: usize) -> f64 {
        state.stack_input(dvec, svec, context, &mut self.x);
        state.weights().scores_into(&self.x, &mut self.p);
        let target_score = self.p[target];
        let lse = softmax_in_place(&mut self.p);
        target_score - lse
    }

    /// `e = row(target) - sum_w p_w row(w)`, from the last `forward`.
    pub fn input_gradient(&mut self, state: &ModelState, target: usize) {
        let u = state.weights();
        self.e.copy_from_slice(u.row(target));
        for (w, &pw) in self.p.iter().enumerate() {
            if pw == 0.0 {
                continue;
            }
            for (e, r) in self.e.iter_mut().zip(u.row(w)) {
                *e -= pw * r;
            }
        }
    }
}

fn distinct(context: &[u32]) -> Vec<u32> {
    let mut ids = context.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn check_slot(state: &ModelState, corpus: &Corpus, slot: &Slot) -> Result<()> {
    state.check_corpus(corpus)?;
    corpus.check_slot(slot)
}

/// `rho * sum_{v in touched} log p(vec(v)) + log p(w_i | d, s, context)`.
pub fn slot_objective(state: &ModelState, corpus: &Corpus, slot: &Slot, rho: f64) -> Result<f64> {
    check_slot(state, corpus, slot)?;
    let context = context_window(corpus, slot, state.context());
    let psi = state.psi();
    let mut work = SlotWork::new(state);
    let dvec = psi.documents.row(slot.doc);
    let svec = psi.sentences.row(slot.sentence);
    let loglik = work.forward(state, dvec, svec, context, slot.word as usize);
    Ok(loglik + rho * touched_log_prior(state, dvec, svec, context, &mut work.resp))
}

fn touched_log_prior(state: &ModelState, dvec: &[f64], svec: &[f64], context: &[u32], scratch: &mut [f64]) -> f64 {
    let gmm = state.gmm();
    let mut total = gmm.log_density_unchecked(dvec, scratch) + gmm.log_density_unchecked(svec, scratch);
    for w in distinct(context) {
        total += gmm.log_density_unchecked(state.psi().words.row(w as usize), scratch);
    }
    total
}

/// Exact-mode gradient of [`slot_objective`].
pub fn slot_gradients(state: &ModelState, corpus: &Corpus, slot: &Slot, rho: f64) -> Result<SlotGradients> {
    check_slot(state, corpus, slot)?;
    let v = state.dim();
    let context = context_window(corpus, slot, state.context());
    let psi = state.psi();
    let gmm = state.gmm();
    let target = slot.word as usize;
    let mut work = SlotWork::new(state);
    let dvec = psi.documents.row(slot.doc);
    let svec = psi.sentences.row(slot.sentence);
    work.forward(state, dvec, svec, context, target);
    work.input_gradient(state, target);
    let miss = 1.0 - work.p[target];

    let mut document = work.e[..v].to_vec();
    gmm.add_log_density_grad(dvec, rho, &mut work.resp, &mut document);
    let mut sentence = work.e[v..2 * v].to_vec();
    gmm.add_log_density_grad(svec, rho, &mut work.resp, &mut sentence);

    let mut words: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (t, &c) in context.iter().rev().enumerate() {
        let g = words.entry(c).or_insert_with(|| vec![0.0; v]);
        for (gi, ei) in g.iter_mut().zip(&work.e[(2 + t) * v..(3 + t) * v]) {
            *gi += ei;
        }
    }
    for (&c, g) in words.iter_mut() {
        gmm.add_log_density_grad(psi.words.row(c as usize), rho, &mut work.resp, g);
    }

    let scaled = |r: std::ops::Range<usize>| work.x[r].iter().map(|x| miss * x).collect::<Vec<_>>();
    Ok(SlotGradients {
        document,
        sentence,
        words: words.into_iter().collect(),
        target: slot.word,
        u_doc: scaled(0..v),
        u_sen: scaled(v..2 * v),
        u_ctx: (0..context.len()).map(|t| scaled((2 + t) * v..(3 + t) * v)).collect(),
        bias: miss,
    })
}

/// Move `x` along `lr * (grad + rho * grad log p(x))`, with the prior part
/// handled according to `step`.
pub(crate) fn update_vector(
    x: &mut [f64],
    grad: &[f64],
    lr: f64,
    rho: f64,
    gmm: &GmmParams,
    step: PriorStep,
    resp: &mut [f64],
) {
    if rho == 0.0 {
        for (xi, g) in x.iter_mut().zip(grad) {
            *xi += lr * g;
        }
        return;
    }
    match step {
        PriorStep::Explicit => {
            let mut g = grad.to_vec();
            gmm.add_log_density_grad(x, rho, resp, &mut g);
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi += lr * gi;
            }
        }
        PriorStep::Implicit => {
            gmm.responsibilities_into(x, resp);
            let h = lr * rho;
            let v = x.len();
            match gmm.mode() {
                CovarianceMode::Diagonal => {
                    let mut a = vec![0.0; v];
                    let mut c = vec![0.0; v];
                    for (k, &r) in resp.iter().enumerate() {
                        if r == 0.0 {
                            continue;
                        }
                        let inv = gmm.inverse_variances(k).expect("diagonal mixture");
                        let mean = gmm.mean(k);
                        for i in 0..v {
                            a[i] += r * inv[i];
                            c[i] += r * inv[i] * mean[i];
                        }
                    }
                    for i in 0..v {
                        x[i] = (x[i] + lr * grad[i] + h * c[i]) / (1.0 + h * a[i]);
                    }
                }
                CovarianceMode::Full => {
                    let mut a = DMatrix::<f64>::identity(v, v);
                    let mut rhs = DVector::from_iterator(v, x.iter().zip(grad).map(|(xi, g)| xi + lr * g));
                    for (k, &r) in resp.iter().enumerate() {
                        if r == 0.0 {
                            continue;
                        }
                        let p = gmm.precision_matrix(k).expect("full mixture");
                        a += p * (h * r);
                        rhs += p * DVector::from_column_slice(gmm.mean(k)) * (h * r);
                    }
                    let a = (&a + a.transpose()) * 0.5;
                    let sol = a
                        .cholesky()
                        .expect("identity plus a positive combination of precisions")
                        .solve(&rhs);
                    x.copy_from_slice(sol.as_slice());
                }
            }
        }
    }
}

/// Mean objective of one stage II pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassStats {
    /// Mean slot objective, evaluated before each slot's update. In
    /// negative-sampling mode the likelihood part is the sampled surrogate.
    pub mean_objective: f64,
    /// Rate of the last update in the pass.
    pub lr: f64,
}

/// Noise distribution for negative sampling.
pub(crate) fn noise_distribution(vocab: &Vocabulary) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(vocab.counts().iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::InvalidArgument(format!("cannot build noise distribution: {e}")))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn ln_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Stage II: `passes` passes of single-slot updates over `corpus` in a
/// fresh random order per pass, with update `n` (counted from
/// `first_update`) using `schedule.rate(n)`. The mixture is left untouched.
pub fn stage2_sgd<R: Rng + ?Sized>(
    state: &mut ModelState,
    corpus: &Corpus,
    schedule: &LrSchedule,
    first_update: usize,
    passes: usize,
    rng: &mut R,
) -> Result<Vec<PassStats>> {
    state.check_corpus(corpus)?;
    let mut slots: Vec<Slot> = corpus.slots().collect();
    if slots.is_empty() {
        return Err(Error::Empty("corpus has no slots".into()));
    }
    let rho = state.rho();
    let cfg = state.config().clone();
    let noise = match cfg.softmax {
        SoftmaxMode::Exact => None,
        SoftmaxMode::NegativeSampling => Some(noise_distribution(state.vocab())?),
    };
    let v = state.dim();
    let mut work = SlotWork::new(state);
    let mut word_grads: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut negatives: Vec<(usize, f64)> = Vec::new();
    let mut step = first_update;
    let mut stats = Vec::with_capacity(passes);
    for _ in 0..passes {
        slots.shuffle(rng);
        let mut total = 0.0;
        let mut lr = schedule.rate(step);
        for slot in &slots {
            lr = schedule.rate(step);
            step += 1;
            let context = context_window(corpus, slot, cfg.context);
            let target = slot.word as usize;
            let (dvec, svec) = (
                state.psi().documents.row(slot.doc).to_vec(),
                state.psi().sentences.row(slot.sentence).to_vec(),
            );
            let prior = if rho == 0.0 {
                0.0
            } else {
                rho * touched_log_prior(state, &dvec, &svec, context, &mut work.resp)
            };

            // likelihood term and its gradient with respect to the stacked input
            let (loglik, target_coef) = match &noise {
                None => {
                    let ll = work.forward(state, &dvec, &svec, context, target);
                    work.input_gradient(state, target);
                    (ll, 1.0 - work.p[target])
                }
                Some(noise) => {
                    state.stack_input(&dvec, &svec, context, &mut work.x);
                    let u = state.weights();
                    let s_t = dot(u.row(target), &work.x) + u.bias()[target];
                    let coef = 1.0 - sigmoid(s_t);
                    let mut ll = ln_sigmoid(s_t);
                    work.e.iter_mut().zip(u.row(target)).for_each(|(e, r)| *e = coef * r);
                    negatives.clear();
                    for _ in 0..cfg.negatives {
                        let n = noise.sample(rng);
                        if n == target {
                            continue;
                        }
                        let s_n = dot(u.row(n), &work.x) + u.bias()[n];
                        ll += ln_sigmoid(-s_n);
                        let c = -sigmoid(s_n);
                        work.e.iter_mut().zip(u.row(n)).for_each(|(e, r)| *e += c * r);
                        negatives.push((n, c));
                    }
                    (ll, coef)
                }
            };
            total += prior + loglik;
            if lr == 0.0 {
                continue;
            }

            let (psi, weights, gmm) = state.parts_mut();
            let mut shift_row = |w: usize, coef: f64| {
                let row = weights.row_mut(w);
                if cfg.weight_decay > 0.0 {
                    for (r, x) in row.iter_mut().zip(&work.x) {
                        *r += lr * (coef * x - cfg.weight_decay * *r);
                    }
                } else {
                    for (r, x) in row.iter_mut().zip(&work.x) {
                        *r += lr * coef * x;
                    }
                }
                weights.bias_mut()[w] += lr * coef;
            };
            shift_row(target, target_coef);
            for &(n, c) in &negatives {
                shift_row(n, c);
            }
            negatives.clear();

            update_vector(
                psi.documents.row_mut(slot.doc),
                &work.e[..v],
                lr,
                rho,
                gmm,
                cfg.prior_step,
                &mut work.resp,
            );
            update_vector(
                psi.sentences.row_mut(slot.sentence),
                &work.e[v..2 * v],
                lr,
                rho,
                gmm,
                cfg.prior_step,
                &mut work.resp,
            );
            word_grads.clear();
            for (t, &c) in context.iter().rev().enumerate() {
                let g = word_grads.entry(c).or_insert_with(|| vec![0.0; v]);
                for (gi, ei) in g.iter_mut().zip(&work.e[(2 + t) * v..(3 + t) * v]) {
                    *gi += ei;
                }
            }
            for (&c, g) in &word_grads {
                update_vector(
                    psi.words.row_mut(c as usize),
                    g,
                    lr,
                    rho,
                    gmm,
                    cfg.prior_step,
                    &mut work.resp,
                );
            }
        }
        let mean_objective = total / slots.len() as f64;
        if !mean_objective.is_finite() {
            return Err(Error::NonFinite("mean slot objective"));
        }
        stats.push(PassStats { mean_objective, lr });
    }
    Ok(stats)
}

/// Stage I: refit the mixture on all word, sentence and document vectors.
/// With `warm_start` EM starts from the current mixture; otherwise it seeds
/// from the data using `rng`.
pub fn stage1_em<R: Rng + ?Sized>(state: &mut ModelState, warm_start: bool, rng: &mut R) -> Result<EmFit> {
    let cfg = state.config().em_config();
    let fit = {
        let pooled = state.psi().pooled();
        if warm_start {
            fit_em_from(&pooled, state.gmm(), &cfg)?
        } else {
            fit_em(&pooled, state.config().topics, &cfg, rng)?
        }
    };
    state.set_gmm(fit.params.clone())?;
    Ok(fit)
}

/// One progress record per stage II pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    /// Alternation, from 1.
    pub alternation: usize,
    /// Pass within the alternation, from 1.
    pub pass: usize,
    pub mean_objective: f64,
    pub lr: f64,
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alt={} pass={} mean_obj={} lr={}",
            self.alternation, self.pass, self.mean_objective, self.lr
        )
    }
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub state: ModelState,
    /// Mean objective of the last pass of each alternation.
    pub objectives: Vec<f64>,
    pub converged: bool,
}

/// Initialize, then alternate stage I and stage II until the mean objective
/// stops improving or `outer_iters` alternations have run. `observe` sees
/// every pass.
pub fn train(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
    mut observe: impl FnMut(&Progress),
) -> Result<TrainOutput> {
    config.validate()?;
    if corpus.num_slots() == 0 {
        return Err(Error::Empty("corpus has no slots".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = init_model(config, corpus, vocab, &mut rng)?;
    let total = config
        .outer_iters
        .saturating_mul(config.passes)
        .saturating_mul(corpus.num_slots());
    let schedule = LrSchedule::new(config.lr, config.lr_end, total)?;
    let mut objectives = Vec::new();
    let mut converged = false;
    let mut step = 0;
    for alt in 0..config.outer_iters {
        stage1_em(&mut state, alt > 0, &mut rng)?;
        let stats = stage2_sgd(&mut state, corpus, &schedule, step, config.passes, &mut rng)?;
        step += config.passes * corpus.num_slots();
        for (p, s) in stats.iter().enumerate() {
            observe(&Progress {
                alternation: alt + 1,
                pass: p + 1,
                mean_objective: s.mean_objective,
                lr: s.lr,
            });
        }
        let obj = stats.last().expect("at least one pass").mean_objective;
        let improved = objectives.last().map(|&prev: &f64| obj - prev);
        objectives.push(obj);
        if improved.is_some_and(|d| d < config.converge_tol) {
            converged = true;
            break;
        }
    }
    Ok(TrainOutput {
        state,
        objectives,
        converged,
    })
}
