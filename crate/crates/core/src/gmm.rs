//! Gaussian mixtures over R^V: density, responsibilities, score function,
//! sampling and EM fitting.
//!
//! Densities are evaluated in log space and combined with log-sum-exp.
//! Components with zero weight are allowed and contribute `-inf` to the
//! per-component log joint.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Covariance parameterization shared by every component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceMode {
    #[default]
    Diagonal,
    Full,
}

impl CovarianceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CovarianceMode::Diagonal => "diagonal",
            CovarianceMode::Full => "full",
        }
    }
}

impl std::str::FromStr for CovarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" | "diag" => Ok(CovarianceMode::Diagonal),
            "full" => Ok(CovarianceMode::Full),
            other => Err(Error::InvalidArgument(format!("unknown covariance mode {other:?}"))),
        }
    }
}

/// One component's covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    /// Per-dimension variances.
    Diagonal(Vec<f64>),
    /// Symmetric positive-definite matrix.
    Full(DMatrix<f64>),
}

impl Covariance {
    pub fn mode(&self) -> CovarianceMode {
        match self {
            Covariance::Diagonal(_) => CovarianceMode::Diagonal,
            Covariance::Full(_) => CovarianceMode::Full,
        }
    }

    pub fn identity(dim: usize, mode: CovarianceMode) -> Self {
        match mode {
            CovarianceMode::Diagonal => Covariance::Diagonal(vec![1.0; dim]),
            CovarianceMode::Full => Covariance::Full(DMatrix::identity(dim, dim)),
        }
    }
}

#[derive(Debug, Clone)]
enum Precision {
    /// Inverse variances.
    Diagonal(Vec<f64>),
    /// Lower Cholesky factor of the covariance and the full inverse.
    Full { chol: DMatrix<f64>, inverse: DMatrix<f64> },
}

#[derive(Debug, Clone)]
struct Component {
    weight: f64,
    log_weight: f64,
    mean: Vec<f64>,
    cov: Covariance,
    precision: Precision,
    /// `-(V ln 2pi + ln det) / 2`
    log_norm: f64,
}

impl Component {
    fn new(weight: f64, mean: Vec<f64>, cov: Covariance) -> Result<Self> {
        let dim = mean.len();
        let (precision, log_det) = match &cov {
            Covariance::Diagonal(var) => {
                if var.len() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "{} variances for dimension {dim}",
                        var.len()
                    )));
                }
                if var.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                    return Err(Error::InvalidArgument("variances must be positive".into()));
                }
                let log_det = var.iter().map(|v| v.ln()).sum();
                (Precision::Diagonal(var.iter().map(|v| 1.0 / v).collect()), log_det)
            }
            Covariance::Full(m) => {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "{}x{} covariance for dimension {dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("covariance"));
                }
                if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                    return Err(Error::InvalidArgument("covariance is not symmetric".into()));
                }
                let chol = m
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
                let l = chol.l();
                let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
                let inverse = chol.inverse();
                (Precision::Full { chol: l, inverse }, log_det)
            }
        };
        Ok(Self {
            weight,
            log_weight: weight.ln(),
            mean,
            cov,
            precision,
            log_norm: -0.5 * (dim as f64 * LN_2PI + log_det),
        })
    }

    fn log_gaussian(&self, x: &[f64]) -> f64 {
        let maha = match &self.precision {
            Precision::Diagonal(inv) => x
                .iter()
                .zip(&self.mean)
                .zip(inv)
                .map(|((xi, mi), p)| {
                    let d = xi - mi;
                    d * d * p
                })
                .sum::<f64>(),
            Precision::Full { chol, .. } => {
                let diff = DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(a, b)| a - b));
                let z = chol
                    .solve_lower_triangular(&diff)
                    .expect("cholesky factor has positive diagonal");
                z.norm_squared()
            }
        };
        self.log_norm - 0.5 * maha
    }

    /// `out += scale * Sigma^{-1} (mean - x)`
    fn add_score(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        match &self.precision {
            Precision::Diagonal(inv) => {
                for i in 0..x.len() {
                    out[i] += scale * inv[i] * (self.mean[i] - x[i]);
                }
            }
            Precision::Full { inverse, .. } => {
                let diff = DVector::from_iterator(x.len(), self.mean.iter().zip(x).map(|(m, xi)| m - xi));
                let v = inverse * diff;
                for i in 0..x.len() {
                    out[i] += scale * v[i];
                }
            }
        }
    }
}

/// Mixture parameters: weights on the simplex, means, covariances.
/// Immutable once built; derived quantities are cached.
#[derive(Debug, Clone)]
pub struct GmmParams {
    dim: usize,
    mode: CovarianceMode,
    components: Vec<Component>,
}

impl PartialEq for GmmParams {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.mode == other.mode
            && self.components.len() == other.components.len()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.weight == b.weight && a.mean == b.mean && a.cov == b.cov)
    }
}

fn check_finite(x: &[f64], what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl GmmParams {
    /// Validate and build. Weights must be non-negative and sum to one
    /// within 1e-12; all covariances must share one mode.
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Covariance>) -> Result<Self> {
        let t = weights.len();
        if t == 0 {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        if means.len() != t || covariances.len() != t {
            return Err(Error::DimensionMismatch(format!(
                "{t} weights, {} means, {} covariances",
                means.len(),
                covariances.len()
            )));
        }
        check_finite(&weights, "weights")?;
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument("negative mixture weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}")));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let mode = covariances[0].mode();
        let mut components = Vec::with_capacity(t);
        for ((w, mean), cov) in weights.into_iter().zip(means).zip(covariances) {
            if mean.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "mean of length {} in dimension {dim}",
                    mean.len()
                )));
            }
            check_finite(&mean, "mean")?;
            if cov.mode() != mode {
                return Err(Error::InvalidArgument("mixed covariance modes".into()));
            }
            components.push(Component::new(w, mean, cov)?);
        }
        Ok(Self { dim, mode, components })
    }

    /// `t` identical standard normal components with uniform weights.
    pub fn standard_normal(t: usize, dim: usize, mode: CovarianceMode) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        GmmParams::new(
            uniform_weights(t),
            vec![vec![0.0; dim]; t],
            vec![Covariance::identity(dim, mode); t],
        )
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> CovarianceMode {
        self.mode
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.components[k].weight
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.components[k].mean
    }

    pub fn covariance(&self, k: usize) -> &Covariance {
        &self.components[k].cov
    }

    /// Inverse variances of component `k` in diagonal mode.
    pub fn inverse_variances(&self, k: usize) -> Option<&[f64]> {
        match &self.components[k].precision {
            Precision::Diagonal(inv) => Some(inv),
            Precision::Full { .. } => None,
        }
    }

    /// Inverse covariance of component `k` in full mode.
    pub fn precision_matrix(&self, k: usize) -> Option<&DMatrix<f64>> {
        match &self.components[k].precision {
            Precision::Full { inverse, .. } => Some(inverse),
            Precision::Diagonal(_) => None,
        }
    }

    /// Mixture mean `sum_k pi_k mu_k`.
    pub fn mixture_mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for c in &self.components {
            for (o, m) in out.iter_mut().zip(&c.mean) {
                *o += c.weight * m;
            }
        }
        out
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for mixture of dimension {}",
                x.len(),
                self.dim
            )));
        }
        check_finite(x, "input vector")
    }

    /// `log pi_k + log N(x | mu_k, Sigma_k)` for every k. No input checks.
    pub(crate) fn log_joint_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = if c.weight > 0.0 {
                c.log_weight + c.log_gaussian(x)
            } else {
                f64::NEG_INFINITY
            };
        }
    }

    /// Per-component log joint densities.
    pub fn component_log_joint(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = vec![0.0; self.components.len()];
        self.log_joint_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn log_density_unchecked(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.log_joint_into(x, scratch);
        log_sum_exp(scratch)
    }

    /// `log sum_k pi_k N(x | mu_k, Sigma_k)`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut scratch = vec![0.0; self.components.len()];
        Ok(self.log_density_unchecked(x, &mut scratch))
    }

    /// Posterior over components; writes into `out`, returns the log density.
    pub(crate) fn responsibilities_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.log_joint_into(x, out);
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
        max + total.ln()
    }

    /// Posterior probability of each component given `x`.
    pub fn responsibilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = vec![0.0; self.components.len()];
        self.responsibilities_into(x, &mut out);
        Ok(out)
    }

    /// `out += scale * grad_x log p(x)`; `resp` is scratch of length T.
    pub(crate) fn add_log_density_grad(&self, x: &[f64], scale: f64, resp: &mut [f64], out: &mut [f64]) {
        self.responsibilities_into(x, resp);
        for (c, &r) in self.components.iter().zip(resp.iter()) {
            if r > 0.0 {
                c.add_score(x, scale * r, out);
            }
        }
    }

    /// `grad_x log p(x) = sum_k r_k(x) Sigma_k^{-1} (mu_k - x)`.
    pub fn log_density_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut resp = vec![0.0; self.components.len()];
        let mut out = vec![0.0; self.dim];
        self.add_log_density_grad(x, 1.0, &mut resp, &mut out);
        Ok(out)
    }

    /// Draw a component from the weights, then a point from it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self
            .components
            .iter()
            .rposition(|c| c.weight > 0.0)
            .expect("weights sum to one");
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if c.weight > 0.0 && u < acc {
                k = i;
                break;
            }
        }
        let c = &self.components[k];
        let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        match &c.precision {
            Precision::Diagonal(inv) => c
                .mean
                .iter()
                .zip(&z)
                .zip(inv)
                .map(|((m, zi), p)| m + zi / p.sqrt())
                .collect(),
            Precision::Full { chol, .. } => {
                let lz = chol * DVector::from_vec(z);
                c.mean.iter().zip(lz.iter()).map(|(m, v)| m + v).collect()
            }
        }
    }
}

pub(crate) fn uniform_weights(t: usize) -> Vec<f64> {
    let mut w = vec![1.0 / t as f64; t];
    // make the sum exact
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    w
}

/// Settings for [`fit_em`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop when the mean per-sample log-likelihood improves by less than this.
    pub tol: f64,
    /// Lower bound on every variance (diagonal) or eigenvalue (full).
    pub var_floor: f64,
    pub mode: CovarianceMode,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-4,
            var_floor: 1e-4,
            mode: CovarianceMode::Diagonal,
        }
    }
}

/// Result of an EM run.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: GmmParams,
    /// Mean per-sample log-likelihood before each M-step, plus the final value.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
}

impl EmFit {
    pub fn iterations(&self) -> usize {
        self.log_likelihood.len().saturating_sub(1)
    }
}

fn check_data<V: AsRef<[f64]>>(data: &[V], dim: Option<usize>) -> Result<usize> {
    let dim = match dim {
        Some(d) => d,
        None => data
            .first()
            .map(|v| v.as_ref().len())
            .ok_or_else(|| Error::Empty("no vectors to fit".into()))?,
    };
    for v in data {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} in dimension {dim}",
                v.len()
            )));
        }
        check_finite(v, "training vector")?;
    }
    Ok(dim)
}

/// Fit a `t`-component mixture by EM. Means are seeded k-means++ style from
/// the data, weights start uniform and every component starts with the same
/// diagonal covariance: the per-dimension variance of each vector around its
/// nearest seed, pooled over all vectors.
pub fn fit_em<V, R>(data: &[V], t: usize, config: &EmConfig, rng: &mut R) -> Result<EmFit>
where
    V: AsRef<[f64]> + Sync,
    R: Rng + ?Sized,
{
    if t == 0 {
        return Err(Error::InvalidArgument("mixture needs at least one component".into()));
    }
    if data.len() < t {
        return Err(Error::TooFewSamples {
            needed: t,
            got: data.len(),
        });
    }
    let dim = check_data(data, None)?;
    let init = seed_params(data, t, dim, config, rng)?;
    run_em(data, init, config)
}

/// EM starting from `init`.
pub fn fit_em_from<V>(data: &[V], init: &GmmParams, config: &EmConfig) -> Result<EmFit>
where
    V: AsRef<[f64]> + Sync,
{
    if data.len() < init.num_components() {
        return Err(Error::TooFewSamples {
            needed: init.num_components(),
            got: data.len(),
        });
    }
    check_data(data, Some(init.dim()))?;
    let init = if init.mode() == config.mode {
        init.clone()
    } else {
        convert_mode(init, config.mode)?
    };
    run_em(data, init, config)
}

fn convert_mode(p: &GmmParams, mode: CovarianceMode) -> Result<GmmParams> {
    let covs = (0..p.num_components())
        .map(|k| match (p.covariance(k), mode) {
            (Covariance::Diagonal(v), CovarianceMode::Full) => {
                Covariance::Full(DMatrix::from_diagonal(&DVector::from_column_slice(v)))
            }
            (Covariance::Full(m), CovarianceMode::Diagonal) => {
                Covariance::Diagonal(m.diagonal().iter().copied().collect())
            }
            (c, _) => c.clone(),
        })
        .collect();
    GmmParams::new(
        p.weights(),
        (0..p.num_components()).map(|k| p.mean(k).to_vec()).collect(),
        covs,
    )
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn seed_params<V, R>(data: &[V], t: usize, dim: usize, config: &EmConfig, rng: &mut R) -> Result<GmmParams>
where
    V: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    let n = data.len();
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(t);
    means.push(data[rng.random_range(0..n)].as_ref().to_vec());
    let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x.as_ref(), &means[0])).collect();
    while means.len() < t {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && target < acc {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let center = data[pick].as_ref().to_vec();
        for (d, x) in d2.iter_mut().zip(data) {
            *d = d.min(sq_dist(x.as_ref(), &center));
        }
        means.push(center);
    }

    // pooled within-cluster variance around the nearest seed
    let mut var = vec![0.0; dim];
    for x in data {
        let x = x.as_ref();
        let nearest = means
            .iter()
            .min_by(|a, b| sq_dist(x, a).total_cmp(&sq_dist(x, b)))
            .expect("at least one seed");
        for ((s, v), m) in var.iter_mut().zip(x).zip(nearest) {
            *s += (v - m) * (v - m);
        }
    }
    let var: Vec<f64> = var.into_iter().map(|s| (s / n as f64).max(config.var_floor)).collect();
    let cov = match config.mode {
        CovarianceMode::Diagonal => Covariance::Diagonal(var),
        CovarianceMode::Full => Covariance::Full(DMatrix::from_diagonal(&DVector::from_vec(var))),
    };
    GmmParams::new(uniform_weights(t), means, vec![cov; t])
}

/// E-step: responsibilities (row-major, N x T) and mean log-likelihood.
fn e_step<V: AsRef<[f64]> + Sync>(data: &[V], params: &GmmParams) -> (Vec<f64>, f64) {
    let t = params.num_components();
    let mut resp = vec![0.0; data.len() * t];
    let mut ll = vec![0.0; data.len()];
    resp.par_chunks_mut(t)
        .zip(ll.par_iter_mut())
        .zip(data.par_iter())
        .for_each(|((r, l), x)| {
            *l = params.responsibilities_into(x.as_ref(), r);
        });
    let mean_ll = ll.iter().sum::<f64>() / data.len() as f64;
    (resp, mean_ll)
}

fn floor_eigenvalues(m: DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().all(|&v| v >= floor) {
        let rebuilt = eig.recompose();
        return symmetrize(rebuilt);
    }
    let clipped = eig.eigenvalues.map(|v| v.max(floor));
    let q = &eig.eigenvectors;
    symmetrize(q * DMatrix::from_diagonal(&clipped) * q.transpose())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn m_step<V: AsRef<[f64]> + Sync>(data: &[V], resp: &[f64], prev: &GmmParams, config: &EmConfig) -> Result<GmmParams> {
    let t = prev.num_components();
    let dim = prev.dim();
    let n = data.len();
    let updated: Vec<(f64, Vec<f64>, Covariance)> = (0..t)
        .into_par_iter()
        .map(|k| {
            let nk: f64 = (0..n).map(|i| resp[i * t + k]).sum();
            if nk <= f64::MIN_POSITIVE * n as f64 {
                // no support: keep shape, weight is effectively zero
                return (nk, prev.mean(k).to_vec(), prev.covariance(k).clone());
            }
            let mut mean = vec![0.0; dim];
            for (i, x) in data.iter().enumerate() {
                let r = resp[i * t + k];
                if r == 0.0 {
                    continue;
                }
                for (m, v) in mean.iter_mut().zip(x.as_ref()) {
                    *m += r * v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= nk);
            let cov = match config.mode {
                CovarianceMode::Diagonal => {
                    let mut var = vec![0.0; dim];
                    for (i, x) in data.iter().enumerate() {
                        let r = resp[i * t + k];
                        if r == 0.0 {
                            continue;
                        }
                        for ((s, v), m) in var.iter_mut().zip(x.as_ref()).zip(&mean) {
                            *s += r * (v - m) * (v - m);
                        }
                    }
                    Covariance::Diagonal(var.into_iter().map(|s| (s / nk).max(config.var_floor)).collect())
                }
                CovarianceMode::Full => {
                    let mut acc = DMatrix::<f64>::zeros(dim, dim);
                    for (i, x) in data.iter().enumerate() {
                        let r = resp[i * t + k];
                        if r == 0.0 {
                            continue;
                        }
                        let d = DVector::from_iterator(dim, x.as_ref().iter().zip(&mean).map(|(v, m)| v - m));
                        acc.ger(r, &d, &d, 1.0);
                    }
                    Covariance::Full(floor_eigenvalues(acc / nk, config.var_floor))
                }
            };
            (nk, mean, cov)
        })
        .collect();

    let total: f64 = updated.iter().map(|u| u.0).sum();
    let mut weights: Vec<f64> = updated.iter().map(|u| u.0 / total).collect();
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 0.0 {
        let k = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let rest: f64 = weights
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, w)| w)
            .sum();
        weights[k] = 1.0 - rest;
    }
    let (means, covs): (Vec<_>, Vec<_>) = updated.into_iter().map(|(_, m, c)| (m, c)).unzip();
    GmmParams::new(weights, means, covs)
}

fn run_em<V: AsRef<[f64]> + Sync>(data: &[V], init: GmmParams, config: &EmConfig) -> Result<EmFit> {
    let mut params = init;
    let mut trace = Vec::new();
    let mut converged = false;
    for iter in 0..=config.max_iters {
        let (resp, ll) = e_step(data, &params);
        if !ll.is_finite() {
            return Err(Error::NonFinite("EM log-likelihood"));
        }
        let improved = trace.last().map(|&prev: &f64| ll - prev);
        trace.push(ll);
        if let Some(delta) = improved {
            if delta < config.tol {
                converged = true;
                break;
            }
        }
        if iter == config.max_iters {
            break;
        }
        params = m_step(data, &resp, &params, config)?;
    }
    Ok(EmFit {
        params,
        log_likelihood: trace,
        converged,
    })
}
