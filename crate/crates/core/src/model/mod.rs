//! DocNADE: autoregressive conditionals, likelihood, analytic gradients,
//! SGD training, document representations and topic extraction.

mod checkpoint;
mod forward;
mod grad;
mod repr;
mod topics;
mod train;

use ndarray::{Array1, Array2, Zip};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use forward::{compute_nll, forward, log_softmax, ForwardTrace};
pub use grad::{accumulate_gradients, gradients};
pub use repr::{doc_representation, RepresentationMode};
pub use topics::{extract_topics, Topic};
pub use train::{train_task, EpochRecord, TrainHyper, TrainOutcome};
pub(crate) use train::{docs_ppl, run_sgd, selection_set, AugItem, Regularizer};

use crate::error::{Error, Result};
use crate::scalar::{Activation, Scalar};

/// The full DocNADE parameter set.
///
/// `w` is the H×K encoder: row `j` is topic `j`, column `v` is the embedding
/// of word `v`. `u` is the K×H decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub w: Array2<T>,
    pub u: Array2<T>,
    pub b: Array1<T>,
    pub c: Array1<T>,
    pub activation: Activation,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(hidden: usize, vocab: usize, activation: Activation) -> Self {
        ModelParams {
            w: Array2::zeros((hidden, vocab)),
            u: Array2::zeros((vocab, hidden)),
            b: Array1::zeros(vocab),
            c: Array1::zeros(hidden),
            activation,
        }
    }

    /// Fan-based uniform initialization: W and U drawn from
    /// `U(-r, r)` with `r = sqrt(6 / (H + K))`, biases zero.
    pub fn init(hidden: usize, vocab: usize, activation: Activation, seed: u64) -> Self {
        let mut p = Self::zeros(hidden, vocab, activation);
        if hidden == 0 || vocab == 0 {
            return p;
        }
        let r = (6.0 / (hidden + vocab) as f64).sqrt();
        let dist = Uniform::new(-r, r).expect("valid init range");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        p.w.iter_mut().for_each(|x| *x = T::of(dist.sample(&mut rng)));
        p.u.iter_mut().for_each(|x| *x = T::of(dist.sample(&mut rng)));
        p
    }

    pub fn hidden_size(&self) -> usize {
        self.w.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.w.ncols()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (h, k) = self.w.dim();
        if self.u.dim() != (k, h) || self.b.len() != k || self.c.len() != h {
            return Err(Error::Shape(format!(
                "W {:?}, U {:?}, b {}, c {} are inconsistent",
                self.w.dim(),
                self.u.dim(),
                self.b.len(),
                self.c.len()
            )));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        if !self.w.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("W"));
        }
        if !self.u.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("U"));
        }
        if !self.b.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("b"));
        }
        if !self.c.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("c"));
        }
        Ok(())
    }

    /// Shape, finiteness and index-bound checks run before any computation.
    pub fn check_doc(&self, words: &[usize]) -> Result<()> {
        if words.is_empty() {
            return Err(Error::EmptyDocument(String::new()));
        }
        let k = self.vocab_size();
        if let Some(&bad) = words.iter().find(|&&w| w >= k) {
            return Err(Error::IndexOutOfRange { index: bad, size: k });
        }
        self.check_shapes()?;
        self.check_finite()
    }

    /// Convert to another scalar type.
    pub fn cast<S: Scalar>(&self) -> ModelParams<S> {
        let f = |x: &T| S::of(x.wide());
        ModelParams {
            w: self.w.map(f),
            u: self.u.map(f),
            b: self.b.map(f),
            c: self.c.map(f),
            activation: self.activation,
        }
    }

    /// `self += scale * grads`.
    pub fn add_scaled(&mut self, scale: T, grads: &ParamGrads<T>) {
        self.w.scaled_add(scale, &grads.w);
        self.u.scaled_add(scale, &grads.u);
        self.b.scaled_add(scale, &grads.b);
        self.c.scaled_add(scale, &grads.c);
    }
}

/// Gradients with the same shapes as the weight and bias fields of
/// [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads<T> {
    pub w: Array2<T>,
    pub u: Array2<T>,
    pub b: Array1<T>,
    pub c: Array1<T>,
}

impl<T: Scalar> ParamGrads<T> {
    pub fn zeros_like(params: &ModelParams<T>) -> Self {
        ParamGrads {
            w: Array2::zeros(params.w.dim()),
            u: Array2::zeros(params.u.dim()),
            b: Array1::zeros(params.b.len()),
            c: Array1::zeros(params.c.len()),
        }
    }

    pub fn fill_zero(&mut self) {
        self.w.fill(T::zero());
        self.u.fill(T::zero());
        self.b.fill(T::zero());
        self.c.fill(T::zero());
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.u).chain(&self.b).chain(&self.c).all(|x| x.is_finite())
    }

    pub fn scaled_add(&mut self, scale: T, other: &ParamGrads<T>) {
        Zip::from(&mut self.w).and(&other.w).for_each(|a, &b| *a += scale * b);
        Zip::from(&mut self.u).and(&other.u).for_each(|a, &b| *a += scale * b);
        Zip::from(&mut self.b).and(&other.b).for_each(|a, &b| *a += scale * b);
        Zip::from(&mut self.c).and(&other.c).for_each(|a, &b| *a += scale * b);
    }
}
