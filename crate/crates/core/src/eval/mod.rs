//! Held-out perplexity, retrieval precision, topic coherence and the
//! cross-task protocols built on them.

mod baselines;
mod coherence;
mod forgetting;
mod ir;
mod ppl;

use serde::{Deserialize, Serialize};

pub use baselines::{data_augment_train, union_collection, zero_shot_eval};
pub use coherence::{coherence, npmi, CoherenceResult, COHERENCE_EPS, COHERENCE_WINDOW};
pub use forgetting::{forgetting_eval, hybrid_params};
pub use ir::{ir_precision, ir_precision_many, ir_precision_vectors, IRResult, RankedDoc, Retrieval};
pub use ppl::{perplexity, PerplexityReport};

use crate::corpus::{Collection, Vocabulary};
use crate::error::Result;
use crate::lifelong::EmbTfContext;
use crate::model::{extract_topics, ModelParams, RepresentationMode};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Test-split perplexity.
    Ppl,
    /// Test queries against the train split.
    Ir,
    /// Mean NPMI of the topics over the train split.
    Coh,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Ppl, Metric::Ir, Metric::Coh];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ppl => "ppl",
            Metric::Ir => "ir",
            Metric::Coh => "coh",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ppl" | "perplexity" => Ok(Metric::Ppl),
            "ir" | "precision" => Ok(Metric::Ir),
            "coh" | "coherence" => Ok(Metric::Coh),
            other => Err(format!("unknown metric `{other}` (expected ppl, ir or coh)")),
        }
    }
}

/// Settings shared by every metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub retrieval: Retrieval,
    pub mode: RepresentationMode,
    /// Words per topic for coherence.
    pub coh_top_n: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            retrieval: Retrieval::Fraction(0.02),
            mode: RepresentationMode::AllWords,
            coh_top_n: 10,
        }
    }
}

/// One metric of a model on its own collection. `params` must be indexed by
/// `coll.vocab`.
pub fn evaluate<T: Scalar>(
    coll: &Collection,
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
    metric: Metric,
    opts: &EvalOptions,
) -> Result<f64> {
    match metric {
        Metric::Ppl => Ok(perplexity(&coll.test, params, emb)?.ppl),
        Metric::Ir => Ok(ir_precision(&coll.train, &coll.test, params, emb, opts.retrieval, opts.mode)?.mean),
        Metric::Coh => {
            let topics = extract_topics(params, &coll.vocab, opts.coh_top_n);
            Ok(coherence(&topics, coll)?.mean)
        }
    }
}

/// `evaluate` for a model whose vocabulary differs from the collection's:
/// documents are re-encoded into `model_vocab` first.
pub fn evaluate_across<T: Scalar>(
    coll: &Collection,
    params: &ModelParams<T>,
    model_vocab: &Vocabulary,
    metric: Metric,
    opts: &EvalOptions,
) -> Result<f64> {
    if metric == Metric::Coh {
        let topics = extract_topics(params, model_vocab, opts.coh_top_n);
        return Ok(coherence(&topics, coll)?.mean);
    }
    let recoded = baselines::reencode_collection(coll, model_vocab)?;
    evaluate(&recoded, params, None, metric, opts)
}
