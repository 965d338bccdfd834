use std::collections::HashMap;

use ndarray::{Array1, Array2};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{write_checkpoint, ModelParams};
use crate::scalar::{Activation, Scalar};

/// Frozen record of one finished task: its topic matrix (rows of W), its
/// decoder, its biases and its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicPoolEntry<T> {
    task_id: String,
    params: ModelParams<T>,
    vocab: Vocabulary,
}

impl<T: Scalar> TopicPoolEntry<T> {
    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    /// Topic embeddings `Z`, H×K_t.
    pub fn topics(&self) -> &Array2<T> {
        &self.params.w
    }

    /// Decoder `U`, K_t×H.
    pub fn decoder(&self) -> &Array2<T> {
        &self.params.u
    }

    pub fn visible_bias(&self) -> &Array1<T> {
        &self.params.b
    }

    pub fn hidden_bias(&self) -> &Array1<T> {
        &self.params.c
    }

    pub fn activation(&self) -> Activation {
        self.params.activation
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// The complete parameter set of the finished task.
    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn hidden_size(&self) -> usize {
        self.params.hidden_size()
    }

    /// Serialized checkpoint bytes, used for persistence and fingerprints.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_checkpoint(&self.params, &self.task_id, &mut buf).expect("writing to memory cannot fail");
        buf
    }
}

/// Word embeddings (columns of W) of one finished task keyed by token.
#[derive(Debug, Clone, PartialEq)]
pub struct WordPoolEntry<T> {
    task_id: String,
    hidden: usize,
    embeddings: HashMap<String, Array1<T>>,
}

impl<T: Scalar> WordPoolEntry<T> {
    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn get(&self, token: &str) -> Option<&Array1<T>> {
        self.embeddings.get(token)
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }
}

/// Topic and word pools accumulated over the stream, in task order.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase<T> {
    topic_pool: Vec<TopicPoolEntry<T>>,
    word_pool: Vec<WordPoolEntry<T>>,
}

impl<T> Default for KnowledgeBase<T> {
    fn default() -> Self {
        KnowledgeBase {
            topic_pool: Vec::new(),
            word_pool: Vec::new(),
        }
    }
}

impl<T: Scalar> KnowledgeBase<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn topic_pool(&self) -> &[TopicPoolEntry<T>] {
        &self.topic_pool
    }

    pub fn word_pool(&self) -> &[WordPoolEntry<T>] {
        &self.word_pool
    }

    pub fn len(&self) -> usize {
        self.topic_pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topic_pool.is_empty()
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &str> {
        self.topic_pool.iter().map(|e| e.task_id.as_str())
    }

    pub fn entry(&self, task_id: &str) -> Option<&TopicPoolEntry<T>> {
        self.topic_pool.iter().find(|e| e.task_id == task_id)
    }

    /// Keep only the first `n` tasks.
    pub fn truncated(&self, n: usize) -> Self {
        KnowledgeBase {
            topic_pool: self.topic_pool.iter().take(n).cloned().collect(),
            word_pool: self.word_pool.iter().take(n).cloned().collect(),
        }
    }
}

/// Append one finished task: its W rows and decoder to the topic pool and
/// its W columns, keyed by token, to the word pool.
pub fn accumulate_knowledge<T: Scalar>(
    params: &ModelParams<T>,
    vocab: &Vocabulary,
    task_id: &str,
    mut kb: KnowledgeBase<T>,
) -> Result<KnowledgeBase<T>> {
    params.check_shapes()?;
    params.check_finite()?;
    if vocab.len() != params.vocab_size() {
        return Err(Error::Shape(format!(
            "vocabulary of size {} for a model with K={}",
            vocab.len(),
            params.vocab_size()
        )));
    }
    if kb.topic_pool.iter().any(|e| e.task_id == task_id) {
        return Err(Error::DuplicateTask(task_id.to_string()));
    }
    let embeddings = vocab
        .tokens()
        .iter()
        .enumerate()
        .map(|(v, t)| (t.clone(), params.w.column(v).to_owned()))
        .collect();
    kb.word_pool.push(WordPoolEntry {
        task_id: task_id.to_string(),
        hidden: params.hidden_size(),
        embeddings,
    });
    kb.topic_pool.push(TopicPoolEntry {
        task_id: task_id.to_string(),
        params: params.clone(),
        vocab: vocab.clone(),
    });
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        Vocabulary::new(tokens.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn accumulation_appends_one_entry_per_pool() {
        let p = ModelParams::<f64>::init(3, 4, Activation::Sigmoid, 1);
        let v = vocab(&["a", "b", "c", "d"]);
        let kb = accumulate_knowledge(&p, &v, "t1", KnowledgeBase::new()).unwrap();
        assert_eq!(kb.topic_pool().len(), 1);
        assert_eq!(kb.word_pool().len(), 1);
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(kb.word_pool()[0].get(t).unwrap(), &p.w.column(i).to_owned());
        }
        assert_eq!(kb.topic_pool()[0].topics(), &p.w);
        assert_eq!(kb.topic_pool()[0].decoder(), &p.u);
    }

    #[test]
    fn duplicate_task_is_rejected_and_earlier_entries_untouched() {
        let p = ModelParams::<f64>::init(2, 2, Activation::Sigmoid, 1);
        let v = vocab(&["a", "b"]);
        let kb = accumulate_knowledge(&p, &v, "t1", KnowledgeBase::new()).unwrap();
        let before = kb.topic_pool()[0].to_bytes();
        assert!(matches!(
            accumulate_knowledge(&p, &v, "t1", kb.clone()),
            Err(Error::DuplicateTask(_))
        ));
        let q = ModelParams::<f64>::init(2, 2, Activation::Sigmoid, 2);
        let kb = accumulate_knowledge(&q, &v, "t2", kb).unwrap();
        assert_eq!(kb.topic_pool()[0].to_bytes(), before);
        assert_eq!(kb.task_ids().collect::<Vec<_>>(), vec!["t1", "t2"]);
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let mut p = ModelParams::<f64>::init(2, 2, Activation::Sigmoid, 1);
        p.w[[0, 0]] = f64::NAN;
        assert!(accumulate_knowledge(&p, &vocab(&["a", "b"]), "t", KnowledgeBase::new()).is_err());
    }
}
