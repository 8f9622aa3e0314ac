//! Acceptance suite. Each test writes one `[PASS]` or `[FAIL]` line to
//! standard error (uncaptured) and then asserts.

mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gmntm::corpus::{build_vocabulary, encode_corpus, read_directory_documents, Preprocessor, RawDocument};
use gmntm::eval::{
    classify_eval, retrieval_eval, top_words, train_classifier, ClassifierMode, LabeledVectors, Metric,
    DEFAULT_RECALL_POINTS,
};
use gmntm::gmm::{fit_em, CovarianceMode, EmConfig, GmmParams};
use gmntm::inference::{infer_corpus, perplexity, slot_topic, topic_posterior, unigram_perplexity, HeldoutConfig};
use gmntm::model::PredictionWeights;
use gmntm::modelfile::write_model;
use gmntm::synthetic::{planted_corpus, planted_documents, PlantedConfig};
use gmntm::training::{slot_gradients, slot_objective, stage2_sgd, train, LrSchedule, SoftmaxMode, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::random_model;

fn report(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] {name}: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Held-out perplexity on a four-category newsgroup subset.

const NEWSGROUPS_ENV: &str = "GMNTM_NEWSGROUPS_DIR";
const CATEGORIES: [&str; 4] = ["alt.atheism", "comp.graphics", "sci.space", "talk.religion.misc"];

/// Documents of the chosen categories under `split`, message headers removed,
/// at most `per_category` each.
fn newsgroup_split(split: &Path, per_category: usize, pre: &Preprocessor) -> Vec<RawDocument> {
    let docs = read_directory_documents(split).expect("readable newsgroup split");
    let mut out = Vec::new();
    for cat in CATEGORIES {
        out.extend(
            docs.iter()
                .filter(|d| d.labels.first().map(String::as_str) == Some(cat))
                .map(|d| {
                    let body = d.text.split_once("\n\n").map_or(d.text.as_str(), |(_, b)| b);
                    RawDocument::from_text(body, d.labels.clone(), pre)
                })
                .filter(|d| !d.sentences.is_empty())
                .take(per_category),
        );
    }
    out
}

#[test]
fn newsgroups_perplexity_beats_unigram() {
    let name = "newsgroup perplexity below unigram baseline";
    let Some(root) = std::env::var_os(NEWSGROUPS_ENV).map(PathBuf::from) else {
        report(
            name,
            false,
            &format!("dataset not available; set {NEWSGROUPS_ENV} to a directory holding 20news-bydate-train/ and 20news-bydate-test/"),
        );
        panic!("{NEWSGROUPS_ENV} is not set");
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let (ppl, base) = pool.install(|| {
        let pre = Preprocessor::default();
        let train_docs = newsgroup_split(&root.join("20news-bydate-train"), 500, &pre);
        let test_docs = newsgroup_split(&root.join("20news-bydate-test"), 125, &pre);
        let streams: Vec<&[String]> = train_docs.iter().flat_map(|d| d.tokens()).collect();
        let vocab = build_vocabulary(streams.iter().copied(), 1, 5000).unwrap();
        let train_corpus = encode_corpus(&train_docs, &vocab);
        let test_corpus = encode_corpus(&test_docs, &vocab);
        let config = TrainConfig {
            topics: 32,
            dim: 32,
            context: 6,
            init_std: 0.1,
            prior_weight: Some(0.01),
            ..TrainConfig::default()
        };
        let out = train(&train_corpus, &vocab, &config, |_| {}).unwrap();
        let ppl = perplexity(&out.state, &test_corpus, &HeldoutConfig::from_train(&config)).unwrap();
        let base = unigram_perplexity(vocab.counts(), &test_corpus).unwrap();
        (ppl, base)
    });
    let secs = start.elapsed().as_secs_f64();
    let pass = ppl.perplexity < base.perplexity && secs < 1800.0;
    report(
        name,
        pass,
        &format!(
            "model {:.2} vs unigram {:.2} over {} tokens in {secs:.0}s",
            ppl.perplexity, base.perplexity, ppl.tokens
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Gradient check.

#[test]
fn slot_gradients_match_finite_differences() {
    let start = Instant::now();
    let h = 1e-5;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-2);
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let words = r.random_range(3..=10);
        let (m, corpus) = random_model(
            words,
            r.random_range(1..=4),
            r.random_range(1..=3),
            r.random_range(1..=3),
            &mut r,
        );
        let slots: Vec<_> = corpus.slots().collect();
        let slot = slots[r.random_range(0..slots.len())];
        let rho = r.random_range(0.0..1.0);
        let g = slot_gradients(&m, &corpus, &slot, rho).unwrap();
        let f = |m: &gmntm::model::ModelState| slot_objective(m, &corpus, &slot, rho).unwrap();
        let fd = |perturb: &dyn Fn(&mut gmntm::model::ModelState, f64)| {
            let mut a = m.clone();
            perturb(&mut a, h);
            let mut b = m.clone();
            perturb(&mut b, -h);
            (f(&a) - f(&b)) / (2.0 * h)
        };
        let t = g.target as usize;
        for i in 0..m.dim() {
            worst = worst.max(rel(
                g.document[i],
                fd(&|s, e| s.psi_mut().documents.row_mut(slot.doc)[i] += e),
            ));
            worst = worst.max(rel(
                g.sentence[i],
                fd(&|s, e| s.psi_mut().sentences.row_mut(slot.sentence)[i] += e),
            ));
            for (w, gw) in &g.words {
                worst = worst.max(rel(gw[i], fd(&|s, e| s.psi_mut().words.row_mut(*w as usize)[i] += e)));
            }
            worst = worst.max(rel(g.u_doc[i], fd(&|s, e| s.weights_mut().block_mut(t, 0)[i] += e)));
            worst = worst.max(rel(g.u_sen[i], fd(&|s, e| s.weights_mut().block_mut(t, 1)[i] += e)));
            for (k, gu) in g.u_ctx.iter().enumerate() {
                worst = worst.max(rel(gu[i], fd(&|s, e| s.weights_mut().block_mut(t, 2 + k)[i] += e)));
            }
        }
        worst = worst.max(rel(g.bias, fd(&|s, e| s.weights_mut().bias_mut()[t] += e)));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-4 && secs < 10.0;
    report(
        "slot gradients vs finite differences",
        pass,
        &format!("worst relative error {worst:.2e} over 50 (model, slot) pairs in {secs:.2}s"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Mixture model checks.

#[test]
fn mixture_suite() {
    let mut r = rng(3);
    // EM monotonicity
    let mut worst_drop: f64 = 0.0;
    for i in 0..20 {
        let dim = r.random_range(1..=4);
        let t = r.random_range(1..=4);
        let truth = common::random_gmm(t, dim, &mut r);
        let data: Vec<Vec<f64>> = (0..200).map(|_| truth.sample(&mut r)).collect();
        let mode = if i % 2 == 0 {
            CovarianceMode::Diagonal
        } else {
            CovarianceMode::Full
        };
        let cfg = EmConfig {
            mode,
            tol: 0.0,
            max_iters: 50,
            ..EmConfig::default()
        };
        let fit = fit_em(&data, t, &cfg, &mut r).unwrap();
        for w in fit.log_likelihood.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }
    // density gradient
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-2);
    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let dim = r.random_range(1..=5);
        let g = common::random_gmm(r.random_range(1..=4), dim, &mut r);
        let x: Vec<f64> = (0..dim).map(|_| 2.0 * r.sample::<f64, _>(StandardNormal)).collect();
        let grad = g.log_density_grad(&x).unwrap();
        for i in 0..dim {
            let h = 1e-5;
            let mut a = x.clone();
            a[i] += h;
            let mut b = x.clone();
            b[i] -= h;
            let n = (g.log_density(&a).unwrap() - g.log_density(&b).unwrap()) / (2.0 * h);
            worst_grad = worst_grad.max(rel(grad[i], n));
        }
    }
    // normalization
    let mut worst_norm: f64 = 0.0;
    for _ in 0..20 {
        let g = common::random_gmm(4, 3, &mut r);
        for scale in [0.1, 1.0, 10.0, 100.0] {
            let x: Vec<f64> = (0..3).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect();
            let resp = g.responsibilities(&x).unwrap();
            worst_norm = worst_norm.max((resp.iter().sum::<f64>() - 1.0).abs());
        }
        let (m, corpus) = random_model(10, 3, 2, 2, &mut r);
        for slot in corpus.slots() {
            let ctx = gmntm::corpus::context_window(&corpus, &slot, 2);
            let p = m.word_distribution(slot.doc, slot.sentence, ctx).unwrap();
            worst_norm = worst_norm.max((p.iter().sum::<f64>() - 1.0).abs());
        }
    }
    let pass = worst_drop <= 1e-8 && worst_grad < 1e-5 && worst_norm <= 1e-9;
    report(
        "mixture suite",
        pass,
        &format!(
            "largest EM log-likelihood drop {worst_drop:.2e}, density gradient error {worst_grad:.2e}, normalization error {worst_norm:.2e}"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Brute-force oracles.

fn oracle_word_distribution(m: &gmntm::model::ModelState, d: usize, s: usize, ctx: &[u32]) -> Vec<f64> {
    let u = m.weights();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let scores: Vec<f64> = (0..m.num_words())
        .map(|w| {
            let mut z =
                dot(u.u_doc(w), m.psi().documents.row(d)) + dot(u.u_sen(w), m.psi().sentences.row(s)) + u.bias()[w];
            for t in 1..=ctx.len() {
                z += dot(u.u_ctx(w, t), m.psi().words.row(ctx[ctx.len() - t] as usize));
            }
            z
        })
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    scores.iter().map(|s| (s - max).exp() / z).collect()
}

fn oracle_slot_topic(m: &gmntm::model::ModelState, w: u32, s: usize, d: usize) -> Vec<f64> {
    let g = m.gmm();
    let q = |x: &[f64]| {
        let joint: Vec<f64> = (0..g.num_components())
            .map(|k| {
                let mean = g.mean(k);
                let var = match g.covariance(k) {
                    gmntm::gmm::Covariance::Diagonal(v) => v.clone(),
                    _ => unreachable!(),
                };
                let mut dens = g.weight(k);
                for i in 0..x.len() {
                    dens *= (-(x[i] - mean[i]).powi(2) / (2.0 * var[i])).exp()
                        / (2.0 * std::f64::consts::PI * var[i]).sqrt();
                }
                dens
            })
            .collect();
        let z: f64 = joint.iter().sum();
        joint.into_iter().map(|j| j / z).collect::<Vec<_>>()
    };
    let (qw, qs, qd) = (
        q(m.psi().words.row(w as usize)),
        q(m.psi().sentences.row(s)),
        q(m.psi().documents.row(d)),
    );
    let prod: Vec<f64> = (0..qw.len()).map(|k| qw[k] * qs[k] * qd[k]).collect();
    let z: f64 = prod.iter().sum();
    prod.iter().map(|p| p / z).collect()
}

/// Precision at each recall level by scanning an exhaustively sorted list.
fn oracle_pr(db: &LabeledVectors, qs: &LabeledVectors, recall: &[f64]) -> Vec<f64> {
    let cos = |a: &[f64], b: &[f64]| {
        let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (n(a) * n(b))
    };
    let labels = qs.label_names();
    let mut per_label = vec![(0usize, vec![0.0; recall.len()]); labels.len()];
    for q in 0..qs.len() {
        let rel = |i: usize| db.labels(i).iter().any(|l| qs.labels(q).contains(l));
        let total = (0..db.len()).filter(|&i| rel(i)).count();
        if total == 0 {
            continue;
        }
        let mut order: Vec<usize> = (0..db.len()).collect();
        order.sort_by(|&a, &b| {
            cos(db.vector(b), qs.vector(q))
                .partial_cmp(&cos(db.vector(a), qs.vector(q)))
                .unwrap()
                .then(a.cmp(&b))
        });
        for (ri, &r) in recall.iter().enumerate() {
            let mut hits = 0;
            for (k, &i) in order.iter().enumerate() {
                hits += usize::from(rel(i));
                if hits as f64 / total as f64 >= r {
                    for l in qs.labels(q) {
                        let li = labels.binary_search(l).unwrap();
                        per_label[li].1[ri] += hits as f64 / (k + 1) as f64;
                        if ri == 0 {
                            per_label[li].0 += 1;
                        }
                    }
                    break;
                }
            }
        }
    }
    let used: Vec<_> = per_label.into_iter().filter(|(n, _)| *n > 0).collect();
    (0..recall.len())
        .map(|i| used.iter().map(|(n, s)| s[i] / *n as f64).sum::<f64>() / used.len() as f64)
        .collect()
}

#[test]
fn oracle_equivalence() {
    let mut r = rng(4);
    let mut worst_dist: f64 = 0.0;
    let mut worst_topic: f64 = 0.0;
    for _ in 0..50 {
        let words = r.random_range(2..=10);
        let topics = r.random_range(1..=4);
        let (m, corpus) = random_model(words, r.random_range(1..=4), r.random_range(1..=3), topics, &mut r);
        for slot in corpus.slots() {
            let ctx = gmntm::corpus::context_window(&corpus, &slot, m.context());
            let p = m.word_distribution(slot.doc, slot.sentence, ctx).unwrap();
            let want = oracle_word_distribution(&m, slot.doc, slot.sentence, ctx);
            for (a, b) in p.iter().zip(&want) {
                worst_dist = worst_dist.max((a - b).abs());
            }
            let t = slot_topic(&m, slot.word, slot.sentence, slot.doc).unwrap();
            let want = oracle_slot_topic(&m, slot.word, slot.sentence, slot.doc);
            for (a, b) in t.posterior.iter().zip(&want) {
                worst_topic = worst_topic.max((a - b).abs());
            }
        }
    }
    let mut worst_pr: f64 = 0.0;
    for _ in 0..20 {
        let set = |r: &mut ChaCha8Rng, n: usize| {
            LabeledVectors::new(
                (0..n)
                    .map(|_| (0..3).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
                    .collect(),
                (0..n).map(|_| vec![format!("l{}", r.random_range(0..4))]).collect(),
            )
            .unwrap()
        };
        let db = set(&mut r, 100);
        let qs = set(&mut r, 25);
        let pr = retrieval_eval(&db, &qs, DEFAULT_RECALL_POINTS).unwrap();
        for (a, b) in pr.precision.iter().zip(oracle_pr(&db, &qs, DEFAULT_RECALL_POINTS)) {
            worst_pr = worst_pr.max((a - b).abs());
        }
    }
    let pass = worst_dist <= 1e-12 && worst_topic <= 1e-12 && worst_pr <= 1e-12;
    report(
        "brute-force oracle equivalence",
        pass,
        &format!("word distribution {worst_dist:.1e}, slot topic {worst_topic:.1e}, precision-recall {worst_pr:.1e}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Planted topics end to end.

/// Settings for the planted run: V = T = 2, a small prior weight and a
/// larger initial spread than the defaults. The seed is the default one.
fn planted_config() -> TrainConfig {
    TrainConfig {
        topics: 2,
        dim: 2,
        init_std: 0.1,
        prior_weight: Some(0.01),
        lr: 0.1,
        ..TrainConfig::default()
    }
}

#[test]
fn planted_topics_end_to_end() {
    let start = Instant::now();
    let planted = planted_corpus(&PlantedConfig::default()).unwrap();
    let (test_raw, _) = planted_documents(&PlantedConfig {
        documents: 200,
        seed: 8,
        ..PlantedConfig::default()
    })
    .unwrap();
    let test = encode_corpus(&test_raw, &planted.vocab);
    let config = planted_config();
    let out = train(&planted.corpus, &planted.vocab, &config, |_| {}).unwrap();
    let state = &out.state;

    // (a) top words against the planted partition, under the better of the
    // two topic-to-component matchings
    let lists: Vec<Vec<u32>> = (0..2)
        .map(|k| top_words(state, k, 50, 10).unwrap().iter().map(|w| w.id).collect())
        .collect();
    let from = |k: usize, topic: usize| {
        lists[k]
            .iter()
            .filter(|&&id| planted.word_topic[id as usize] == Some(topic))
            .count()
    };
    let straight = [from(0, 0), from(1, 1)];
    let crossed = [from(0, 1), from(1, 0)];
    let matched = if straight.iter().min() >= crossed.iter().min() {
        straight
    } else {
        crossed
    };
    let disjoint = lists[0].iter().all(|id| !lists[1].contains(id));
    let pass_a = disjoint && matched.iter().all(|&c| c >= 45);

    // (b) retrieval with inferred held-out queries against training documents
    let db = LabeledVectors::from_documents(state, &planted.corpus).unwrap();
    let fits = infer_corpus(state, &test, &HeldoutConfig::from_train(&config)).unwrap();
    let queries = LabeledVectors::from_fits(&fits, &test).unwrap();
    let precision = retrieval_eval(&db, &queries, &[0.5]).unwrap().precision[0];
    let pass_b = precision >= 0.9;

    // (c) logistic regression on document vectors
    let classifier = train_classifier(&db, ClassifierMode::Multinomial, 1e-4, 500).unwrap();
    let accuracy = classify_eval(&classifier, &queries, Metric::Accuracy).unwrap();
    let pass_c = accuracy >= 0.95;

    let secs = start.elapsed().as_secs_f64();
    let pass_time = secs < 300.0;
    report(
        "planted topics (a) top words",
        pass_a,
        &format!("planted words per list {matched:?} of 50, disjoint {disjoint}"),
    );
    report(
        "planted topics (b) retrieval",
        pass_b,
        &format!("precision at recall 0.5 = {precision:.3}"),
    );
    report(
        "planted topics (c) classification",
        pass_c,
        &format!("held-out accuracy = {accuracy:.3}"),
    );
    report("planted topics runtime", pass_time, &format!("{secs:.1}s"));
    assert!(pass_a && pass_b && pass_c && pass_time);
}

// ---------------------------------------------------------------------------
// Degenerate models.

#[test]
fn degenerate_model_identities() {
    let mut r = rng(6);
    // zero prediction weights: perplexity W
    let (mut m, corpus) = random_model(9, 3, 2, 2, &mut r);
    *m.weights_mut() = PredictionWeights::zeros(9, 3, 2);
    let ppl = perplexity(&m, &corpus, &HeldoutConfig::from_train(m.config()))
        .unwrap()
        .perplexity;
    let ppl_err = (ppl - 9.0).abs() / 9.0;

    // zero learning rate: bit-exact no-op, in both softmax modes
    let mut noop = true;
    for softmax in [SoftmaxMode::Exact, SoftmaxMode::NegativeSampling] {
        let (m, corpus) = random_model(8, 3, 2, 2, &mut r);
        let config = TrainConfig {
            softmax,
            ..m.config().clone()
        };
        let m = gmntm::model::ModelState::from_parts(
            m.psi().clone(),
            m.weights().clone(),
            m.gmm().clone(),
            config,
            m.vocab().clone(),
            0.5,
        )
        .unwrap();
        let mut after = m.clone();
        stage2_sgd(&mut after, &corpus, &LrSchedule::constant(0.0).unwrap(), 0, 3, &mut r).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_model(&m, &mut a).unwrap();
        write_model(&after, &mut b).unwrap();
        noop &= after == m && a == b;
    }

    // one topic: every posterior is exactly 1
    let (m, corpus) = random_model(7, 3, 2, 1, &mut r);
    let psi = m.psi();
    let mut all_one = [&psi.words, &psi.sentences, &psi.documents]
        .iter()
        .flat_map(|t| t.rows())
        .all(|x| topic_posterior(x, m.gmm()).unwrap() == vec![1.0]);
    for slot in corpus.slots() {
        all_one &= slot_topic(&m, slot.word, slot.sentence, slot.doc).unwrap().posterior == vec![1.0];
    }
    let g1 = GmmParams::standard_normal(1, 3, CovarianceMode::Full).unwrap();
    all_one &= topic_posterior(&[5.0, -3.0, 100.0], &g1).unwrap() == vec![1.0];

    let pass = ppl_err <= 1e-12 && noop && all_one;
    report(
        "degenerate model identities",
        pass,
        &format!("zero-U perplexity {ppl} for W = 9 (relative error {ppl_err:.1e}), zero-rate no-op {noop}, single-topic posteriors all 1 {all_one}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Determinism.

#[test]
fn identical_seeds_give_identical_model_files() {
    let planted = planted_corpus(&PlantedConfig {
        documents: 80,
        ..PlantedConfig::default()
    })
    .unwrap();
    let config = TrainConfig {
        topics: 3,
        dim: 4,
        outer_iters: 3,
        init_std: 0.1,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = train(&planted.corpus, &planted.vocab, &config, |_| {}).unwrap();
            let path = dir.path().join(format!("model{i}.bin"));
            gmntm::modelfile::save_model(&out.state, &path).unwrap();
            std::fs::read(path).unwrap()
        })
        .collect();
    let pass = files[0] == files[1];
    report(
        "determinism",
        pass,
        &format!(
            "two runs with seed {} wrote {} and {} bytes, identical {pass}",
            config.seed,
            files[0].len(),
            files[1].len()
        ),
    );
    assert!(pass);
}
