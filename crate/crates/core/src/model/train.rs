use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forward::nll_unchecked;
use super::grad::accumulate_gradients;
use super::{ModelParams, ParamGrads};
use crate::corpus::{Collection, Document};
use crate::error::{Error, Result};
use crate::lifelong::EmbTfContext;
use crate::scalar::Scalar;

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs without validation-PPL improvement before stopping.
    pub early_stop_patience: usize,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            learning_rate: 0.001,
            max_epochs: 100,
            batch_size: 1,
            seed: 0,
            early_stop_patience: 10,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning rate {} must be finite and >= 0", self.learning_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean data NLL per training document of the task itself.
    pub train_loss: f64,
    /// Topic-regularization penalty at the end of the epoch.
    pub delta_tr: f64,
    /// Weighted NLL summed over augmented documents during the epoch.
    pub delta_sal: f64,
    pub val_ppl: f64,
    pub seconds: f64,
}

impl EpochRecord {
    /// Everything except wall-clock time.
    pub fn loss_trace(&self) -> (usize, f64, f64, f64, f64) {
        (self.epoch, self.train_loss, self.delta_tr, self.delta_sal, self.val_ppl)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Snapshot with the lowest validation perplexity.
    pub params: ModelParams<T>,
    pub best_val_ppl: f64,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl<T> TrainOutcome<T> {
    /// Mean wall-clock seconds per epoch.
    pub fn r_time(&self) -> f64 {
        if self.history.is_empty() {
            return 0.0;
        }
        self.history.iter().map(|r| r.seconds).sum::<f64>() / self.history.len() as f64
    }
}

/// A past-task document replayed during co-training with its weight.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AugItem<T> {
    pub id: String,
    pub words: Vec<usize>,
    pub weight: T,
}

/// Additional penalty attached to each own-document step.
pub(crate) trait Regularizer<T: Scalar> {
    /// Add this step's gradient share w.r.t. W and U into `grads`, and
    /// accumulate gradients of the regularizer's own parameters.
    fn accumulate(&mut self, params: &ModelParams<T>, grads: &mut ParamGrads<T>) -> Result<()>;
    /// SGD update of the regularizer's own parameters.
    fn step(&mut self, lr: T);
    /// Full penalty value at `params`.
    fn value(&self, params: &ModelParams<T>) -> f64;
    /// Remember the current own parameters as belonging to the best snapshot.
    fn mark_best(&mut self);
}

/// Per-word perplexity `exp(mean_v L(v)/|v|)`; `None` for an empty set.
pub(crate) fn docs_ppl<T: Scalar>(docs: &[Document], params: &ModelParams<T>, emb: Option<&EmbTfContext<T>>) -> Option<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for d in docs.iter().filter(|d| !d.words.is_empty()) {
        total += nll_unchecked(&d.words, params, emb).wide() / d.words.len() as f64;
        n += 1;
    }
    (n > 0).then(|| (total / n as f64).exp())
}

/// Plain DocNADE training with per-document SGD and best-validation-PPL
/// model selection.
pub fn train_task<T: Scalar>(
    coll: &Collection,
    params: ModelParams<T>,
    hyper: &TrainHyper,
) -> Result<TrainOutcome<T>> {
    if coll.vocab.len() != params.vocab_size() {
        return Err(Error::Shape(format!(
            "collection `{}` has K={} but the model has K={}",
            coll.name,
            coll.vocab.len(),
            params.vocab_size()
        )));
    }
    run_sgd(&coll.train, selection_set(coll), params, hyper, None, &[], None)
}

/// Validation split, falling back to the training split when it is empty.
pub(crate) fn selection_set(coll: &Collection) -> &[Document] {
    if coll.val.is_empty() {
        log::warn!("collection `{}` has no validation split; selecting on train PPL", coll.name);
        &coll.train
    } else {
        &coll.val
    }
}

pub(crate) fn run_sgd<T: Scalar>(
    train: &[Document],
    val: &[Document],
    mut params: ModelParams<T>,
    hyper: &TrainHyper,
    emb: Option<&EmbTfContext<T>>,
    aug: &[AugItem<T>],
    mut reg: Option<&mut dyn Regularizer<T>>,
) -> Result<TrainOutcome<T>> {
    hyper.validate()?;
    params.check_shapes()?;
    params.check_finite()?;
    if train.is_empty() {
        return Err(Error::EmptyCollection("no training documents".into()));
    }
    if let Some(ctx) = emb {
        ctx.check_compatible(&params)?;
    }

    let lr = T::of(hyper.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let n_own = train.len();
    let mut order: Vec<usize> = (0..n_own + aug.len()).collect();
    let mut grads = ParamGrads::zeros_like(&params);

    let mut best: Option<(f64, usize, ModelParams<T>)> = None;
    let mut since_best = 0usize;
    let mut history = Vec::new();

    for epoch in 1..=hyper.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut own_loss = 0.0f64;
        let mut sal_loss = 0.0f64;

        for batch in order.chunks(hyper.batch_size) {
            grads.fill_zero();
            for &item in batch {
                let (id, loss) = if item < n_own {
                    let doc = &train[item];
                    let loss = accumulate_gradients(&doc.words, &params, emb, T::one(), &mut grads)
                        .map_err(|e| diverged(e, epoch, &doc.id))?
                        .wide();
                    own_loss += loss;
                    if let Some(r) = reg.as_deref_mut() {
                        r.accumulate(&params, &mut grads)?;
                    }
                    (doc.id.as_str(), loss)
                } else {
                    let a = &aug[item - n_own];
                    let loss = accumulate_gradients(&a.words, &params, emb, a.weight, &mut grads)
                        .map_err(|e| diverged(e, epoch, &a.id))?
                        .wide();
                    sal_loss += a.weight.wide() * loss;
                    (a.id.as_str(), loss)
                };
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        doc_id: id.to_string(),
                        loss,
                    });
                }
            }
            params.add_scaled(-lr, &grads);
            if let Some(r) = reg.as_deref_mut() {
                r.step(lr);
            }
        }

        let val_ppl = docs_ppl(val, &params, emb).unwrap_or(f64::NAN);
        let delta_tr = reg.as_deref().map_or(0.0, |r| r.value(&params));
        history.push(EpochRecord {
            epoch,
            train_loss: own_loss / n_own as f64,
            delta_tr,
            delta_sal: sal_loss,
            val_ppl,
            seconds: started.elapsed().as_secs_f64(),
        });
        log::debug!("epoch {epoch}: train nll {:.4}, val ppl {val_ppl:.4}", own_loss / n_own as f64);

        let improved = match &best {
            None => true,
            Some((b, _, _)) => val_ppl < *b,
        };
        if improved {
            best = Some((val_ppl, epoch, params.clone()));
            if let Some(r) = reg.as_deref_mut() {
                r.mark_best();
            }
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hyper.early_stop_patience {
                break;
            }
        }
    }

    let (best_val_ppl, best_epoch, params) = best.expect("at least one epoch runs");
    Ok(TrainOutcome {
        params,
        best_val_ppl,
        best_epoch,
        history,
    })
}

fn diverged(err: Error, epoch: usize, doc_id: &str) -> Error {
    match err {
        Error::NonFinite(_) => Error::Diverged {
            epoch,
            doc_id: doc_id.to_string(),
            loss: f64::NAN,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::model::gradients;
    use crate::scalar::Activation;

    fn toy(n: usize) -> Collection {
        let vocab = Vocabulary::new((0..6).map(|i| format!("w{i}")).collect()).unwrap();
        let docs = |prefix: &str, n: usize| -> Vec<Document> {
            (0..n)
                .map(|i| {
                    let base = if i % 2 == 0 { 0 } else { 3 };
                    Document::new(format!("{prefix}{i}"), format!("{}", i % 2), vec![base, base + 1, base + 2, base + (i % 3)])
                })
                .collect()
        };
        Collection::new("toy", vocab, docs("tr", n), docs("va", 4), docs("te", 4)).unwrap()
    }

    #[test]
    fn zero_learning_rate_keeps_initial_params() {
        let c = toy(6);
        let init = ModelParams::<f64>::init(3, 6, Activation::Sigmoid, 1);
        let hyper = TrainHyper { learning_rate: 0.0, max_epochs: 3, ..Default::default() };
        let out = train_task(&c, init.clone(), &hyper).unwrap();
        assert_eq!(out.params, init);
    }

    #[test]
    fn one_step_on_one_document_replays_the_gradient() {
        let vocab = Vocabulary::new((0..4).map(|i| format!("w{i}")).collect()).unwrap();
        let doc = Document::new("d", "x", vec![0, 2, 3, 2]);
        let c = Collection::new("one", vocab, vec![doc.clone()], vec![Document::new("v", "x", vec![1, 2])], vec![]).unwrap();
        let init = ModelParams::<f64>::init(3, 4, Activation::Tanh, 4);
        let lr = 0.05;
        let hyper = TrainHyper { learning_rate: lr, max_epochs: 1, ..Default::default() };
        let out = train_task(&c, init.clone(), &hyper).unwrap();
        let (_, g) = gradients(&doc.words, &init, None).unwrap();
        let mut expect = init;
        expect.w.zip_mut_with(&g.w, |p, g| *p -= lr * g);
        expect.u.zip_mut_with(&g.u, |p, g| *p -= lr * g);
        expect.b.zip_mut_with(&g.b, |p, g| *p -= lr * g);
        expect.c.zip_mut_with(&g.c, |p, g| *p -= lr * g);
        assert_eq!(out.params, expect);
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let c = toy(20);
        let init = ModelParams::<f64>::init(4, 6, Activation::Sigmoid, 2);
        let hyper = TrainHyper { learning_rate: 0.05, max_epochs: 15, seed: 3, ..Default::default() };
        let a = train_task(&c, init.clone(), &hyper).unwrap();
        let b = train_task(&c, init, &hyper).unwrap();
        let ta: Vec<_> = a.history.iter().map(EpochRecord::loss_trace).collect();
        let tb: Vec<_> = b.history.iter().map(EpochRecord::loss_trace).collect();
        assert_eq!(ta, tb);
        assert_eq!(a.params, b.params);
        assert!(a.history.last().unwrap().train_loss < a.history[0].train_loss);
        assert!(a.best_val_ppl < 6.0);
    }

    #[test]
    fn early_stopping_respects_patience() {
        let c = toy(8);
        let init = ModelParams::<f64>::init(3, 6, Activation::Sigmoid, 2);
        // frozen parameters never improve on the first epoch
        let hyper = TrainHyper { learning_rate: 0.0, max_epochs: 50, early_stop_patience: 2, ..Default::default() };
        let out = train_task(&c, init, &hyper).unwrap();
        assert_eq!(out.history.len(), 3);
        assert_eq!(out.best_epoch, 1);
    }

    #[test]
    fn vocabulary_mismatch_is_rejected() {
        let c = toy(4);
        let init = ModelParams::<f64>::zeros(3, 7, Activation::Sigmoid);
        assert!(matches!(train_task(&c, init, &TrainHyper::default()), Err(Error::Shape(_))));
    }

    #[test]
    fn divergence_names_epoch_and_document() {
        let c = toy(4);
        let mut init = ModelParams::<f64>::init(3, 6, Activation::Sigmoid, 2);
        init.b[0] = 1e308;
        init.b[1] = -1e308;
        let hyper = TrainHyper { learning_rate: 1e300, max_epochs: 2, ..Default::default() };
        match train_task(&c, init, &hyper) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
