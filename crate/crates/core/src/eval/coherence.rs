use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Collection;
use crate::error::{Error, Result};
use crate::model::Topic;

/// Width of the boolean sliding window.
pub const COHERENCE_WINDOW: usize = 10;
/// Smoothing added to joint and product probabilities.
pub const COHERENCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceResult {
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

/// `log((p_ij + eps) / (p_i p_j + eps)) / -log(p_ij + eps)`, and 1 when
/// both words occur in every window.
pub fn npmi(p_i: f64, p_j: f64, p_ij: f64) -> f64 {
    let joint = p_ij + COHERENCE_EPS;
    let denom = -joint.ln();
    if denom <= COHERENCE_EPS {
        return 1.0;
    }
    (joint / (p_i * p_j + COHERENCE_EPS)).ln() / denom
}

/// Mean pairwise NPMI of each topic's words, with window probabilities
/// counted over the reference collection's training split. Documents shorter
/// than the window count as one window.
pub fn coherence(topics: &[Topic], reference: &Collection) -> Result<CoherenceResult> {
    if reference.train.is_empty() {
        return Err(Error::EmptyCollection(format!("`{}` has no training documents", reference.name)));
    }
    // local ids for every topic word present in the reference vocabulary
    let mut local: HashMap<usize, usize> = HashMap::new();
    let topic_ids: Vec<Vec<Option<usize>>> = topics
        .iter()
        .map(|t| {
            t.tokens()
                .map(|tok| {
                    reference.vocab.index_of(tok).map(|v| {
                        let n = local.len();
                        *local.entry(v).or_insert(n)
                    })
                })
                .collect()
        })
        .collect();
    let m = local.len();
    let mut single = vec![0u64; m];
    let mut joint = vec![0u64; m * m];
    let mut windows = 0u64;
    let mut present: Vec<usize> = Vec::new();
    let mut mark = vec![false; m];
    for d in &reference.train {
        let n = d.words.len();
        let count = if n <= COHERENCE_WINDOW { 1 } else { n - COHERENCE_WINDOW + 1 };
        for start in 0..count {
            let end = (start + COHERENCE_WINDOW).min(n);
            present.clear();
            for w in &d.words[start..end] {
                if let Some(&l) = local.get(w) {
                    if !mark[l] {
                        mark[l] = true;
                        present.push(l);
                    }
                }
            }
            for (x, &a) in present.iter().enumerate() {
                single[a] += 1;
                for &b in &present[x + 1..] {
                    joint[a * m + b] += 1;
                    joint[b * m + a] += 1;
                }
            }
            for &l in &present {
                mark[l] = false;
            }
            windows += 1;
        }
    }
    let nw = windows as f64;
    let prob = |id: Option<usize>| id.map_or(0.0, |l| single[l] as f64 / nw);
    let pair = |a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(a), Some(b)) if a == b => single[a] as f64 / nw,
        (Some(a), Some(b)) => joint[a * m + b] as f64 / nw,
        _ => 0.0,
    };
    let per_topic: Vec<f64> = topic_ids
        .iter()
        .map(|ids| {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    total += npmi(prob(ids[i]), prob(ids[j]), pair(ids[i], ids[j]));
                    pairs += 1;
                }
            }
            if pairs == 0 {
                0.0
            } else {
                total / pairs as f64
            }
        })
        .collect();
    let mean = if per_topic.is_empty() {
        0.0
    } else {
        per_topic.iter().sum::<f64>() / per_topic.len() as f64
    };
    Ok(CoherenceResult { per_topic, mean })
}
