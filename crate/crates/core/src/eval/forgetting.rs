use super::{evaluate, EvalOptions, Metric};
use crate::corpus::{align_vocabs, Collection, Vocabulary};
use crate::error::{Error, Result};
use crate::lifelong::TopicPoolEntry;
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Copy of the past task's parameters with every shared word's encoder
/// column, decoder row and visible bias taken from the future model. Also
/// returns the number of shared words.
pub fn hybrid_params<T: Scalar>(
    past: &TopicPoolEntry<T>,
    future_params: &ModelParams<T>,
    future_vocab: &Vocabulary,
) -> Result<(ModelParams<T>, usize)> {
    if future_params.hidden_size() != past.hidden_size() {
        return Err(Error::Shape(format!(
            "future model has H={} but task `{}` has H={}",
            future_params.hidden_size(),
            past.task_id(),
            past.hidden_size()
        )));
    }
    if future_vocab.len() != future_params.vocab_size() {
        return Err(Error::Shape("future vocabulary does not match the future model".into()));
    }
    let mut out = past.params().clone();
    let alignment = align_vocabs(past.vocab(), future_vocab);
    for &(k, j) in alignment.pairs() {
        out.w.column_mut(k).assign(&future_params.w.column(j));
        out.u.row_mut(k).assign(&future_params.u.row(j));
        out.b[k] = future_params.b[j];
    }
    Ok((out, alignment.len()))
}

/// Score a past task with the future model's knowledge of the words both
/// tasks share. Without shared words the past model is scored unchanged.
pub fn forgetting_eval<T: Scalar>(
    past: &TopicPoolEntry<T>,
    past_coll: &Collection,
    future_params: &ModelParams<T>,
    future_vocab: &Vocabulary,
    metric: Metric,
    opts: &EvalOptions,
) -> Result<f64> {
    if past_coll.vocab != *past.vocab() {
        return Err(Error::Invalid(format!(
            "collection `{}` does not use the vocabulary of task `{}`",
            past_coll.name,
            past.task_id()
        )));
    }
    let (hybrid, shared) = hybrid_params(past, future_params, future_vocab)?;
    if shared == 0 {
        log::warn!("task `{}` shares no vocabulary with the future model", past.task_id());
    }
    evaluate(past_coll, &hybrid, None, metric, opts)
}
