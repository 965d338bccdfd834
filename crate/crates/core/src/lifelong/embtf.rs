use ndarray::{Array2, ArrayView1};

use super::WordPoolEntry;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Word embeddings of one past task resolved against the current vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbSource<T> {
    pub task_id: String,
    pub lambda: T,
    /// K×H; row `v` is the past embedding of current word `v`, or zeros if
    /// task `t` never saw the word.
    pub table: Array2<T>,
    pub present: Vec<bool>,
}

/// Past word embeddings injected into every hidden pre-activation:
/// observing word `v` shifts the running pre-activation by
/// `sum_t lambda_t * E^t[:, v]` on top of `W[:, v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbTfContext<T> {
    sources: Vec<EmbSource<T>>,
    combined: Array2<T>,
}

impl<T: Scalar> EmbTfContext<T> {
    pub fn empty(vocab_size: usize, hidden: usize) -> Self {
        EmbTfContext {
            sources: Vec::new(),
            combined: Array2::zeros((vocab_size, hidden)),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn sources(&self) -> &[EmbSource<T>] {
        &self.sources
    }

    /// Total pre-activation shift contributed by observing `word`.
    pub fn shift(&self, word: usize) -> ArrayView1<'_, T> {
        self.combined.row(word)
    }

    /// Embedding of `word` from source `source`, zero when absent.
    pub fn lookup(&self, source: usize, word: usize) -> ArrayView1<'_, T> {
        self.sources[source].table.row(word)
    }

    pub fn vocab_size(&self) -> usize {
        self.combined.nrows()
    }

    pub fn hidden_size(&self) -> usize {
        self.combined.ncols()
    }

    /// K×H sum of weighted source tables.
    pub(crate) fn combined(&self) -> &Array2<T> {
        &self.combined
    }

    /// Parameters whose encoder already contains the injected embeddings:
    /// `W[:, v] + sum_t lambda_t * E^t[:, v]`. Running them without a
    /// context reproduces running `params` with this context.
    pub fn fold_into(&self, params: &ModelParams<T>) -> ModelParams<T> {
        let mut out = params.clone();
        if !self.is_empty() {
            out.w += &self.combined.t();
        }
        out
    }

    pub fn check_compatible(&self, params: &ModelParams<T>) -> Result<()> {
        if self.combined.dim() != (params.vocab_size(), params.hidden_size()) {
            return Err(Error::Shape(format!(
                "embedding context is {:?} but the model has K={}, H={}",
                self.combined.dim(),
                params.vocab_size(),
                params.hidden_size()
            )));
        }
        Ok(())
    }
}

/// Resolve every current-vocabulary word against each word-pool entry.
///
/// `lambdas[t]` scales entry `t`; entries with a zero strength are left out
/// entirely. Every entry must share the current hidden size.
pub fn build_embtf_context<T: Scalar>(
    current_vocab: &Vocabulary,
    wordpool: &[WordPoolEntry<T>],
    lambdas: &[f64],
    hidden: usize,
) -> Result<EmbTfContext<T>> {
    if lambdas.len() != wordpool.len() {
        return Err(Error::Config(format!(
            "{} embedding strengths for {} word-pool entries",
            lambdas.len(),
            wordpool.len()
        )));
    }
    let k = current_vocab.len();
    let mut ctx = EmbTfContext::empty(k, hidden);
    for (entry, &lambda) in wordpool.iter().zip(lambdas) {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!("lambda_embtf = {lambda} for `{}`", entry.task_id())));
        }
        if entry.hidden_size() != hidden {
            return Err(Error::Config(format!(
                "word pool entry `{}` has H={} but the current model has H={hidden}",
                entry.task_id(),
                entry.hidden_size()
            )));
        }
        if lambda == 0.0 {
            continue;
        }
        let lambda = T::of(lambda);
        let mut table = Array2::zeros((k, hidden));
        let mut present = vec![false; k];
        for (v, token) in current_vocab.tokens().iter().enumerate() {
            if let Some(e) = entry.get(token) {
                table.row_mut(v).assign(e);
                present[v] = true;
                ctx.combined.row_mut(v).scaled_add(lambda, e);
            }
        }
        ctx.sources.push(EmbSource {
            task_id: entry.task_id().to_string(),
            lambda,
            table,
            present,
        });
    }
    Ok(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifelong::{accumulate_knowledge, KnowledgeBase};
    use crate::model::{compute_nll, forward};
    use crate::scalar::Activation;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        Vocabulary::new(tokens.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn two_task_kb() -> (KnowledgeBase<f64>, ModelParams<f64>, ModelParams<f64>) {
        let p1 = ModelParams::init(3, 3, Activation::Tanh, 1);
        let p2 = ModelParams::init(3, 2, Activation::Tanh, 2);
        let kb = accumulate_knowledge(&p1, &vocab(&["apple", "bat", "cat"]), "t1", KnowledgeBase::new()).unwrap();
        let kb = accumulate_knowledge(&p2, &vocab(&["cat", "dog"]), "t2", kb).unwrap();
        (kb, p1, p2)
    }

    #[test]
    fn empty_pool_changes_nothing() {
        let current = vocab(&["cat", "emu"]);
        let ctx = build_embtf_context::<f64>(&current, &[], &[], 3).unwrap();
        assert!(ctx.is_empty());
        let p = ModelParams::init(3, 2, Activation::Sigmoid, 5);
        assert_eq!(forward(&[0, 1, 1], &p, Some(&ctx)).unwrap(), forward(&[0, 1, 1], &p, None).unwrap());
    }

    #[test]
    fn single_source_shift_is_the_stored_column() {
        let (kb, p1, _) = two_task_kb();
        let current = vocab(&["emu", "bat"]);
        let ctx = build_embtf_context(&current, &kb.word_pool()[..1], &[1.0], 3).unwrap();
        assert_eq!(ctx.shift(1), p1.w.column(1));
        assert!(ctx.shift(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_sources_give_weighted_sum() {
        let (kb, p1, p2) = two_task_kb();
        let current = vocab(&["cat"]);
        let ctx = build_embtf_context(&current, kb.word_pool(), &[0.5, 0.1], 3).unwrap();
        for h in 0..3 {
            let expect = 0.5 * p1.w[[h, 2]] + 0.1 * p2.w[[h, 0]];
            assert!((ctx.shift(0)[h] - expect).abs() < 1e-15);
        }
        assert_eq!(ctx.lookup(1, 0), p2.w.column(0));
    }

    #[test]
    fn zero_strength_is_neutral() {
        let (kb, _, _) = two_task_kb();
        let current = vocab(&["cat", "dog", "bat"]);
        let ctx = build_embtf_context(&current, kb.word_pool(), &[0.0, 0.0], 3).unwrap();
        assert!(ctx.is_empty());
        let p = ModelParams::init(3, 3, Activation::Tanh, 9);
        let doc = [2, 0, 1, 0];
        assert_eq!(compute_nll(&doc, &p, Some(&ctx)).unwrap(), compute_nll(&doc, &p, None).unwrap());
    }

    #[test]
    fn hidden_size_mismatch_is_a_config_error() {
        let (kb, _, _) = two_task_kb();
        let r = build_embtf_context::<f64>(&vocab(&["cat"]), kb.word_pool(), &[1.0, 1.0], 4);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
