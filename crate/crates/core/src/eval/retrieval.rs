//! Cosine-similarity retrieval with precision measured at fixed recall
//! levels.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::LabeledVectors;
use crate::error::{Error, Result};

pub const DEFAULT_RECALL_POINTS: &[f64] = &[0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0];

/// Precision at each recall point, overall and per query label.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub recall: Vec<f64>,
    /// Mean over labels of the per-label curves.
    pub precision: Vec<f64>,
    /// Per label: mean precision over the queries carrying that label.
    pub per_label: Vec<(String, Vec<f64>)>,
    /// Queries with at least one relevant database document.
    pub queries: usize,
}

impl PrCurve {
    /// Precision at `r`, if `r` is one of the evaluated recall points.
    pub fn precision_at(&self, r: f64) -> Option<f64> {
        self.recall.iter().position(|&x| x == r).map(|i| self.precision[i])
    }

    /// Tab-separated `label recall precision` rows; the macro average uses
    /// the label `all`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let rows = std::iter::once(("all", &self.precision)).chain(self.per_label.iter().map(|(l, p)| (l.as_str(), p)));
        for (label, precision) in rows {
            for (r, p) in self.recall.iter().zip(precision) {
                writeln!(out, "{label}\t{r}\t{p}").expect("writing to a String");
            }
        }
        out
    }
}

fn unit(v: &[f64], id: usize) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector(id));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Rank `database` by cosine similarity to each query (ties broken by
/// database index); a document is relevant when it shares any label with
/// the query. Queries without relevant documents are skipped.
pub fn retrieval_eval(database: &LabeledVectors, queries: &LabeledVectors, recall_points: &[f64]) -> Result<PrCurve> {
    if database.dim() != queries.dim() {
        return Err(Error::DimensionMismatch(format!(
            "database dimension {} and query dimension {}",
            database.dim(),
            queries.dim()
        )));
    }
    if recall_points.is_empty() || recall_points.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::InvalidArgument("recall points must lie in (0, 1]".into()));
    }
    let mut recall = recall_points.to_vec();
    recall.sort_by(f64::total_cmp);
    recall.dedup();

    let db: Vec<Vec<f64>> = (0..database.len())
        .map(|i| unit(database.vector(i), i))
        .collect::<Result<_>>()?;
    let qs: Vec<Vec<f64>> = (0..queries.len())
        .map(|i| unit(queries.vector(i), i))
        .collect::<Result<_>>()?;

    let per_query: Vec<Option<Vec<f64>>> = qs
        .par_iter()
        .enumerate()
        .map(|(q, qv)| {
            let qlabels = queries.labels(q);
            let relevant: Vec<bool> = (0..database.len())
                .map(|i| database.labels(i).iter().any(|l| qlabels.contains(l)))
                .collect();
            let total = relevant.iter().filter(|&&r| r).count();
            if total == 0 {
                return None;
            }
            let sims: Vec<f64> = db.iter().map(|d| d.iter().zip(qv).map(|(a, b)| a * b).sum()).collect();
            let mut order: Vec<usize> = (0..db.len()).collect();
            order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
            // rank (1-based) of the h-th relevant document
            let hit_ranks: Vec<usize> = order
                .iter()
                .enumerate()
                .filter(|(_, &i)| relevant[i])
                .map(|(rank, _)| rank + 1)
                .collect();
            Some(
                recall
                    .iter()
                    .map(|&r| {
                        let h = (1..=total).find(|&h| h as f64 / total as f64 >= r).unwrap_or(total);
                        h as f64 / hit_ranks[h - 1] as f64
                    })
                    .collect(),
            )
        })
        .collect();

    let mut groups: BTreeMap<&str, (usize, Vec<f64>)> = BTreeMap::new();
    let mut counted = 0;
    for (q, prec) in per_query.iter().enumerate() {
        let Some(prec) = prec else { continue };
        counted += 1;
        let mut labels: Vec<&str> = queries.labels(q).iter().map(String::as_str).collect();
        labels.sort_unstable();
        labels.dedup();
        for l in labels {
            let entry = groups.entry(l).or_insert_with(|| (0, vec![0.0; recall.len()]));
            entry.0 += 1;
            entry.1.iter_mut().zip(prec).for_each(|(a, p)| *a += p);
        }
    }
    if counted == 0 {
        return Err(Error::Empty("no query has a relevant database document".into()));
    }
    let per_label: Vec<(String, Vec<f64>)> = groups
        .into_iter()
        .map(|(l, (n, sum))| (l.to_string(), sum.into_iter().map(|s| s / n as f64).collect()))
        .collect();
    let precision = (0..recall.len())
        .map(|i| per_label.iter().map(|(_, p)| p[i]).sum::<f64>() / per_label.len() as f64)
        .collect();
    Ok(PrCurve {
        recall,
        precision,
        per_label,
        queries: counted,
    })
}
