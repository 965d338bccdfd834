use std::cmp::Ordering;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::lifelong::EmbTfContext;
use crate::model::{doc_representation, ModelParams, RepresentationMode};
use crate::scalar::Scalar;

/// How many training documents each query retrieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retrieval {
    /// `ceil(R * |train|)` documents, at least one.
    Fraction(f64),
    TopK(usize),
}

impl Retrieval {
    pub fn validate(self) -> Result<()> {
        match self {
            Retrieval::Fraction(r) if !(r > 0.0 && r <= 1.0) => {
                Err(Error::Config(format!("retrieval fraction {r} must be in (0, 1]")))
            }
            Retrieval::TopK(0) => Err(Error::Config("top-k must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Documents retrieved from a database of `n`.
    pub fn count(self, n: usize) -> usize {
        let want = match self {
            Retrieval::Fraction(r) => (r * n as f64).ceil() as usize,
            Retrieval::TopK(k) => k,
        };
        want.max(1).min(n)
    }

    /// Short column label, `P@0.02` or `P@5`.
    pub fn label(self) -> String {
        match self {
            Retrieval::Fraction(r) => format!("P@{r}"),
            Retrieval::TopK(k) => format!("P@{k}"),
        }
    }
}

impl std::fmt::Display for Retrieval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Retrieval::Fraction(r) => write!(f, "fraction={r}"),
            Retrieval::TopK(k) => write!(f, "top_k={k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IRResult {
    pub retrieval: Retrieval,
    /// Documents retrieved per query.
    pub retrieved: usize,
    pub mean: f64,
    pub per_query: Vec<f64>,
}

/// Labelled document vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedDoc<T> {
    pub id: String,
    pub label: String,
    pub vector: Array1<T>,
}

fn unit<T: Scalar>(v: &Array1<T>) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x.wide() * x.wide()).sum::<f64>().sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| v.iter().map(|x| x.wide() / norm).collect())
}

/// Precision of cosine retrieval over precomputed vectors, for several
/// retrieval sizes at once.
pub fn ir_precision_vectors<T: Scalar>(
    train: &[RankedDoc<T>],
    queries: &[RankedDoc<T>],
    retrievals: &[Retrieval],
) -> Result<Vec<IRResult>> {
    if train.is_empty() || queries.is_empty() {
        return Err(Error::EmptyCollection("retrieval needs train and query documents".into()));
    }
    for r in retrievals {
        r.validate()?;
    }
    if let Some(d) = train.iter().chain(queries).find(|d| d.label.is_empty()) {
        return Err(Error::Invalid(format!("document `{}` has no label", d.id)));
    }
    let db: Vec<Option<Vec<f64>>> = train.iter().map(|d| unit(&d.vector)).collect();
    let counts: Vec<usize> = retrievals.iter().map(|r| r.count(train.len())).collect();
    let mut per_query = vec![Vec::with_capacity(queries.len()); retrievals.len()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut sims = vec![0.0f64; train.len()];
    for q in queries {
        let qv = unit(&q.vector);
        for (s, d) in sims.iter_mut().zip(&db) {
            *s = match (&qv, d) {
                (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
                _ => f64::NEG_INFINITY,
            };
        }
        order.sort_by(|&a, &b| {
            sims[b]
                .partial_cmp(&sims[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| train[a].id.cmp(&train[b].id))
        });
        for (slot, &n) in per_query.iter_mut().zip(&counts) {
            let hits = order[..n].iter().filter(|&&i| train[i].label == q.label).count();
            slot.push(hits as f64 / n as f64);
        }
    }
    Ok(retrievals
        .iter()
        .zip(counts)
        .zip(per_query)
        .map(|((&retrieval, retrieved), pq)| IRResult {
            retrieval,
            retrieved,
            mean: pq.iter().sum::<f64>() / pq.len() as f64,
            per_query: pq,
        })
        .collect())
}

fn represent<T: Scalar>(
    docs: &[Document],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
    mode: RepresentationMode,
) -> Result<Vec<RankedDoc<T>>> {
    docs.iter()
        .map(|d| {
            Ok(RankedDoc {
                id: d.id.clone(),
                label: d.label.clone(),
                vector: doc_representation(&d.words, params, emb, mode)?,
            })
        })
        .collect()
}

/// Each query document retrieves its nearest training documents by cosine
/// similarity of model representations; precision is the share carrying the
/// query's label. Ties go to the lower document id.
pub fn ir_precision<T: Scalar>(
    train: &[Document],
    queries: &[Document],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
    retrieval: Retrieval,
    mode: RepresentationMode,
) -> Result<IRResult> {
    Ok(ir_precision_many(train, queries, params, emb, &[retrieval], mode)?.remove(0))
}

/// `ir_precision` for several retrieval sizes with one representation pass.
pub fn ir_precision_many<T: Scalar>(
    train: &[Document],
    queries: &[Document],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
    retrievals: &[Retrieval],
    mode: RepresentationMode,
) -> Result<Vec<IRResult>> {
    let db = represent(train, params, emb, mode)?;
    let qs = represent(queries, params, emb, mode)?;
    ir_precision_vectors(&db, &qs, retrievals)
}
