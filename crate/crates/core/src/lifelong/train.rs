use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sal::{distill_documents, AugmentedSet, DistillSource};
use super::topic_reg::{AlignmentParams, TrRegularizer};
use super::{build_embtf_context, Approaches, EmbTfContext, KnowledgeBase, LambdaTriad};
use crate::corpus::Collection;
use crate::error::{Error, Result};
use crate::model::{docs_ppl, run_sgd, selection_set, AugItem, ModelParams, Regularizer, TrainHyper, TrainOutcome};
use crate::scalar::{Activation, Scalar};

/// Settings for training one task of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifelongConfig {
    pub hidden: usize,
    pub activation: Activation,
    /// Seed of the parameter initialization.
    pub init_seed: u64,
    pub hyper: TrainHyper,
    pub approaches: Approaches,
    /// Strengths toward every past task without its own entry.
    pub lambdas: LambdaTriad,
    /// Strengths keyed by past task id.
    pub per_task: BTreeMap<String, LambdaTriad>,
    pub learn_a: bool,
    pub learn_p: bool,
}

impl Default for LifelongConfig {
    fn default() -> Self {
        LifelongConfig {
            hidden: 50,
            activation: Activation::Sigmoid,
            init_seed: 0,
            hyper: TrainHyper::default(),
            approaches: Approaches::NONE,
            lambdas: LambdaTriad::new(0.01, 1.0, 1.0),
            per_task: BTreeMap::new(),
            learn_a: true,
            learn_p: false,
        }
    }
}

impl LifelongConfig {
    pub fn lambdas_for(&self, task_id: &str) -> LambdaTriad {
        self.per_task.get(task_id).copied().unwrap_or(self.lambdas)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::Config("hidden size must be at least 1".into()));
        }
        self.hyper.validate()?;
        self.lambdas.validate()?;
        for l in self.per_task.values() {
            l.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LifelongOutcome<T> {
    /// Best-validation snapshot of the learned parameters.
    pub params: ModelParams<T>,
    /// Alignment parameters at the best snapshot, when the topic regularizer ran.
    pub alignment: Option<AlignmentParams<T>>,
    /// Embedding injection used during training, when it was active.
    pub emb: Option<EmbTfContext<T>>,
    pub outcome: TrainOutcome<T>,
    /// Plain training pass that fixed the distillation threshold.
    pub pretrain: Option<TrainOutcome<T>>,
    pub ppl_future: Option<f64>,
    pub augmented: AugmentedSet,
}

impl<T: Scalar> LifelongOutcome<T> {
    /// Parameters that reproduce the trained model without an embedding
    /// context.
    pub fn effective_params(&self) -> ModelParams<T> {
        match &self.emb {
            Some(ctx) => ctx.fold_into(&self.params),
            None => self.params.clone(),
        }
    }
}

/// Train `future` against the knowledge accumulated so far.
///
/// `past` holds the earlier collections in knowledge-base order; it is only
/// read when selective co-training is on. With every approach off, or every
/// strength zero, this is exactly plain training from the same
/// initialization.
pub fn lifelong_train<T: Scalar>(
    future: &Collection,
    kb: &KnowledgeBase<T>,
    past: &[&Collection],
    config: &LifelongConfig,
) -> Result<LifelongOutcome<T>> {
    config.validate()?;
    future.validate()?;
    let k = future.vocab.len();
    let h = config.hidden;
    let init = ModelParams::<T>::init(h, k, config.activation, config.init_seed);
    let ids: Vec<&str> = kb.task_ids().collect();
    let lambdas: Vec<LambdaTriad> = ids.iter().map(|id| config.lambdas_for(id)).collect();
    let val = selection_set(future);

    let emb = if config.approaches.embtf {
        let l: Vec<f64> = lambdas.iter().map(|l| l.embtf).collect();
        let ctx = build_embtf_context(&future.vocab, kb.word_pool(), &l, h)?;
        (!ctx.is_empty()).then_some(ctx)
    } else {
        None
    };

    let mut pretrain = None;
    let mut ppl_future = None;
    let mut augmented = AugmentedSet::default();
    let mut aug_items = Vec::new();
    if config.approaches.sal && lambdas.iter().any(|l| l.sal > 0.0) {
        if past.len() != ids.len() {
            return Err(Error::Config(format!(
                "selective co-training needs the {} past collections, got {}",
                ids.len(),
                past.len()
            )));
        }
        let plain = run_sgd(&future.train, val, init.clone(), &config.hyper, None, &[], None)?;
        let threshold = [&future.test, &future.val, &future.train]
            .into_iter()
            .find_map(|docs| docs_ppl(docs, &plain.params, None))
            .ok_or_else(|| Error::EmptyCollection(future.name.clone()))?;
        let sources: Vec<DistillSource<'_>> = ids
            .iter()
            .zip(past)
            .zip(&lambdas)
            .map(|((id, coll), l)| DistillSource {
                task_id: id,
                collection: coll,
                lambda: l.sal,
            })
            .collect();
        augmented = distill_documents(&plain.params, &future.vocab, threshold, &sources)?;
        aug_items = augmented
            .docs
            .iter()
            .filter(|a| a.lambda > 0.0)
            .map(|a| AugItem {
                id: format!("{}/{}", a.source_task, a.doc.id),
                words: a.doc.words.clone(),
                weight: T::of(a.lambda),
            })
            .collect();
        ppl_future = Some(threshold);
        pretrain = Some(plain);
    }

    let mut tr = None;
    if config.approaches.tr && lambdas.iter().any(|l| l.tr > 0.0) {
        let l: Vec<f64> = lambdas.iter().map(|l| l.tr).collect();
        let align = AlignmentParams::init(kb.topic_pool(), &future.vocab, &l, h, config.learn_a, config.learn_p)?;
        let shift = emb.as_ref().map(|c| c.combined());
        tr = Some(TrRegularizer::new(kb.topic_pool(), align, &init, shift, future.train.len())?);
    }

    let outcome = run_sgd(
        &future.train,
        val,
        init,
        &config.hyper,
        emb.as_ref(),
        &aug_items,
        tr.as_mut().map(|r| r as &mut dyn Regularizer<T>),
    )?;
    Ok(LifelongOutcome {
        params: outcome.params.clone(),
        alignment: tr.map(|r| r.best),
        emb,
        outcome,
        pretrain,
        ppl_future,
        augmented,
    })
}
