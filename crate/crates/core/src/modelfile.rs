//! Versioned binary model file.
//!
//! ```text
//! "GMNTM1"
//! W S D V T m covariance vocab_checksum          u64 each (covariance: 0 diagonal, 1 full)
//! lambda: weights[T], means[T*V], covariances    f32 (T*V diagonal or T*V*V full, row-major)
//! psi:    words[W*V], sentences[S*V], documents[D*V]
//! U:      u_doc[W*V], u_sen[W*V], u_1[W*V] .. u_m[W*V], bias[W]
//! vocabulary: W entries of (u32 byte length, UTF-8 word, u64 count)
//! prior weight                                   f64
//! training configuration                         u32 byte length, key=value text
//! ```
//!
//! All numbers are little-endian. Mixture weights are snapped to multiples
//! of 2^-24 before writing so that they are exact in f32 and still sum to
//! one after loading.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::binio::{write_f32s, write_str, write_u64, LeReader};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::gmm::{Covariance, CovarianceMode, GmmParams};
use crate::model::{EmbeddingTable, ModelState, PredictionWeights, VectorTable};
use crate::training::TrainConfig;

pub const MODEL_MAGIC: &[u8; 6] = b"GMNTM1";

const SNAP: f64 = (1u64 << 24) as f64;

/// Weights rounded to multiples of 2^-24 with the remainder put on the
/// largest one, so the sum is exactly 1.
fn snap_weights(weights: &[f64]) -> Vec<f64> {
    let mut q: Vec<i64> = weights.iter().map(|w| (w * SNAP).round() as i64).collect();
    let short = (1i64 << 24) - q.iter().sum::<i64>();
    let big = (0..q.len()).fold(0, |b, k| if q[k] > q[b] { k } else { b });
    q[big] += short;
    q.iter().map(|&x| x.max(0) as f64 / SNAP).collect()
}

pub fn write_model<W: Write>(state: &ModelState, w: &mut W) -> Result<()> {
    let gmm = state.gmm();
    let (t, v, m) = (gmm.num_components(), state.dim(), state.context());
    let vocab = state.vocab();
    w.write_all(MODEL_MAGIC)?;
    let mode = match gmm.mode() {
        CovarianceMode::Diagonal => 0,
        CovarianceMode::Full => 1,
    };
    for x in [
        state.num_words() as u64,
        state.num_sentences() as u64,
        state.num_documents() as u64,
        v as u64,
        t as u64,
        m as u64,
        mode,
        vocab.checksum(),
    ] {
        write_u64(w, x)?;
    }

    write_f32s(w, &snap_weights(&gmm.weights()))?;
    for k in 0..t {
        write_f32s(w, gmm.mean(k))?;
    }
    for k in 0..t {
        match gmm.covariance(k) {
            Covariance::Diagonal(var) => write_f32s(w, var)?,
            Covariance::Full(c) => write_f32s(w, c.transpose().as_slice())?,
        }
    }

    let psi = state.psi();
    for table in [&psi.words, &psi.sentences, &psi.documents] {
        write_f32s(w, table.as_slice())?;
    }

    let u = state.weights();
    for b in 0..2 + m {
        for row in u.block_rows(b) {
            write_f32s(w, row)?;
        }
    }
    write_f32s(w, u.bias())?;

    for (word, &count) in vocab.words().iter().zip(vocab.counts()) {
        write_str(w, word)?;
        write_u64(w, count)?;
    }
    w.write_all(&state.rho().to_le_bytes())?;
    write_str(w, &state.config().to_text())?;
    Ok(())
}

fn count(x: u64, what: &str) -> Result<usize> {
    usize::try_from(x).map_err(|_| Error::Header(format!("{what} {x} does not fit in memory")))
}

fn product(a: usize, b: usize) -> Result<usize> {
    a.checked_mul(b)
        .ok_or_else(|| Error::Header(format!("array of {a} x {b} overflows")))
}

pub fn read_model<R: Read>(r: R) -> Result<ModelState> {
    let mut r = LeReader::new(r);
    let mut magic = [0u8; 6];
    r.exact(&mut magic, "magic")?;
    if &magic != MODEL_MAGIC {
        return Err(Error::BadMagic { expected: "GMNTM1" });
    }
    let mut header = [0u64; 8];
    for (h, what) in header
        .iter_mut()
        .zip(["W", "S", "D", "V", "T", "m", "covariance mode", "vocabulary checksum"])
    {
        *h = r.u64(what)?;
    }
    let [w, s, d, v, t, m, mode, checksum] = header;
    let (w, s, d, v, t, m) = (
        count(w, "W")?,
        count(s, "S")?,
        count(d, "D")?,
        count(v, "V")?,
        count(t, "T")?,
        count(m, "m")?,
    );
    if w == 0 || v == 0 || t == 0 {
        return Err(Error::Header(format!("W={w} V={v} T={t} must all be positive")));
    }
    let mode = match mode {
        0 => CovarianceMode::Diagonal,
        1 => CovarianceMode::Full,
        other => return Err(Error::Header(format!("unknown covariance mode {other}"))),
    };

    let weights = r.f32s(t, "mixture weights")?;
    let means = r.f32s(product(t, v)?, "mixture means")?;
    let cov_len = match mode {
        CovarianceMode::Diagonal => v,
        CovarianceMode::Full => product(v, v)?,
    };
    let covs = r.f32s(product(t, cov_len)?, "mixture covariances")?;
    let gmm = GmmParams::new(
        weights,
        means.chunks_exact(v).map(<[f64]>::to_vec).collect(),
        covs.chunks_exact(cov_len)
            .map(|c| match mode {
                CovarianceMode::Diagonal => Covariance::Diagonal(c.to_vec()),
                CovarianceMode::Full => Covariance::Full(DMatrix::from_row_slice(v, v, c)),
            })
            .collect(),
    )
    .map_err(|e| Error::Header(format!("mixture parameters: {e}")))?;

    let mut table = |rows: usize, what: &'static str| -> Result<VectorTable> {
        VectorTable::from_flat(v, r.f32s(product(rows, v)?, what)?)
    };
    let psi = EmbeddingTable {
        words: table(w, "word vectors")?,
        sentences: table(s, "sentence vectors")?,
        documents: table(d, "document vectors")?,
    };
    let u_doc = table(w, "document weights")?;
    let u_sen = table(w, "sentence weights")?;
    let u_ctx = (0..m)
        .map(|_| table(w, "context weights"))
        .collect::<Result<Vec<_>>>()?;
    let bias = r.f32s(w, "biases")?;
    let weights = PredictionWeights::from_blocks(&u_doc, &u_sen, &u_ctx, bias)?;

    let mut words = Vec::with_capacity(w.min(1 << 20));
    let mut counts = Vec::with_capacity(w.min(1 << 20));
    for _ in 0..w {
        words.push(r.string("vocabulary word")?);
        counts.push(r.u64("vocabulary count")?);
    }
    let vocab = Vocabulary::from_parts(words, counts)?;
    if vocab.checksum() != checksum {
        return Err(Error::Header(format!(
            "vocabulary checksum {:016x} does not match header {checksum:016x}",
            vocab.checksum()
        )));
    }
    let mut rho = [0u8; 8];
    r.exact(&mut rho, "prior weight")?;
    let rho = f64::from_le_bytes(rho);
    let mut config = TrainConfig::default();
    config.apply_text(&r.string("training configuration")?)?;
    if !r.at_end()? {
        return Err(Error::Format("trailing bytes after model".into()));
    }
    if config.topics != t || config.dim != v || config.context != m || config.covariance != mode {
        return Err(Error::Header(format!(
            "configuration (T={} V={} m={} {}) disagrees with header (T={t} V={v} m={m} {})",
            config.topics,
            config.dim,
            config.context,
            config.covariance.as_str(),
            mode.as_str()
        )));
    }
    ModelState::from_parts(psi, weights, gmm, config, vocab, rho)
}

pub fn save_model(state: &ModelState, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(state, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelState> {
    read_model(BufReader::new(File::open(path)?))
}
