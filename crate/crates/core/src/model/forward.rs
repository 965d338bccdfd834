use ndarray::{Array1, ArrayView1};

use super::ModelParams;
use crate::error::Result;
use crate::lifelong::EmbTfContext;
use crate::scalar::Scalar;

/// Per-position quantities of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<T> {
    /// `h_i = g(a_i)` for each position.
    pub hiddens: Vec<Array1<T>>,
    /// `a_i = c + sum_{q<i} W[:, v_q]` (plus injected embeddings).
    pub preacts: Vec<Array1<T>>,
    /// `log p(v_i | v_<i)`.
    pub logprobs: Vec<T>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn log_prob(&self) -> T {
        self.logprobs.iter().copied().sum()
    }
}

/// Numerically stable log-softmax of a logit vector.
pub fn log_softmax<T: Scalar>(logits: ArrayView1<'_, T>) -> Array1<T> {
    let lse = log_sum_exp(logits);
    logits.mapv(|z| z - lse)
}

pub(crate) fn log_sum_exp<T: Scalar>(logits: ArrayView1<'_, T>) -> T {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = logits.iter().map(|&z| (z - max).exp()).sum();
    max + sum.ln()
}

impl<T: Scalar> ModelParams<T> {
    /// Unnormalized scores `b + U h` over the vocabulary.
    pub fn logits(&self, hidden: ArrayView1<'_, T>) -> Array1<T> {
        let mut z = self.u.dot(&hidden);
        z += &self.b;
        z
    }

    /// Full conditional `log p(. | h)` over the vocabulary.
    pub fn conditional(&self, hidden: ArrayView1<'_, T>) -> Array1<T> {
        log_softmax(self.logits(hidden).view())
    }

    /// Advance a running pre-activation past one observed word.
    #[inline]
    pub(crate) fn advance(&self, preact: &mut Array1<T>, word: usize, emb: Option<&EmbTfContext<T>>) {
        *preact += &self.w.column(word);
        if let Some(ctx) = emb.filter(|c| !c.is_empty()) {
            *preact += &ctx.shift(word);
        }
    }

    pub(crate) fn activate(&self, preact: &Array1<T>) -> Array1<T> {
        let act = self.activation;
        preact.mapv(|x| act.apply(x))
    }
}

/// Run the autoregressive pass over `words`, computing every hidden vector
/// incrementally and the log-probability of each observed word.
pub fn forward<T: Scalar>(
    words: &[usize],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
) -> Result<ForwardTrace<T>> {
    params.check_doc(words)?;
    if let Some(ctx) = emb {
        ctx.check_compatible(params)?;
    }
    let d = words.len();
    let mut trace = ForwardTrace {
        hiddens: Vec::with_capacity(d),
        preacts: Vec::with_capacity(d),
        logprobs: Vec::with_capacity(d),
    };
    let mut a = params.c.clone();
    for &v in words {
        let h = params.activate(&a);
        let z = params.logits(h.view());
        trace.logprobs.push(z[v] - log_sum_exp(z.view()));
        trace.preacts.push(a.clone());
        trace.hiddens.push(h);
        params.advance(&mut a, v, emb);
    }
    Ok(trace)
}

/// Negative log-likelihood `-log p(v)` of one document.
pub fn compute_nll<T: Scalar>(
    words: &[usize],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
) -> Result<T> {
    params.check_doc(words)?;
    if let Some(ctx) = emb {
        ctx.check_compatible(params)?;
    }
    Ok(nll_unchecked(words, params, emb))
}

pub(crate) fn nll_unchecked<T: Scalar>(
    words: &[usize],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
) -> T {
    let mut a = params.c.clone();
    let mut nll = T::zero();
    for &v in words {
        let h = params.activate(&a);
        let z = params.logits(h.view());
        nll += log_sum_exp(z.view()) - z[v];
        params.advance(&mut a, v, emb);
    }
    nll
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Activation;

    fn small_params() -> ModelParams<f64> {
        let mut p = ModelParams::init(2, 3, Activation::Sigmoid, 3);
        p.b = ndarray::array![0.1, -0.2, 0.3];
        p.c = ndarray::array![0.05, -0.4];
        p
    }

    #[test]
    fn zero_params_give_uniform_conditionals() {
        let p = ModelParams::<f64>::zeros(3, 4, Activation::Sigmoid);
        let t = forward(&[0, 3, 1], &p, None).unwrap();
        for lp in &t.logprobs {
            assert!((lp + 4f64.ln()).abs() < 1e-15);
        }
        let nll = compute_nll(&[0, 3, 1], &p, None).unwrap();
        assert!((nll - 3.0 * 4f64.ln()).abs() < 1e-10);
        assert!((nll - 4.158883083359672).abs() < 1e-12);
    }

    #[test]
    fn first_hidden_is_activation_of_bias() {
        let p = small_params();
        let t = forward(&[2], &p, None).unwrap();
        let expect = p.c.mapv(|x| 1.0 / (1.0 + (-x).exp()));
        assert_eq!(t.hiddens[0], expect);
        let lp = p.conditional(expect.view())[2];
        assert_eq!(t.logprobs[0], lp);
    }

    #[test]
    fn trace_lengths_and_signs() {
        let p = small_params();
        let t = forward(&[0, 1, 1, 2], &p, None).unwrap();
        assert_eq!(t.hiddens.len(), 4);
        assert_eq!(t.preacts.len(), 4);
        assert!(t.logprobs.iter().all(|&x| x <= 0.0));
        let nll = compute_nll(&[0, 1, 1, 2], &p, None).unwrap();
        assert!((nll + t.log_prob()).abs() < 1e-12);
    }

    #[test]
    fn log_softmax_survives_huge_logits() {
        let z = ndarray::array![1000.0f64, 999.0, -1000.0];
        let l = log_softmax(z.view());
        assert!(l.iter().all(|x| x.is_finite()));
        let s: f64 = l.iter().map(|x| x.exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors_before_compute() {
        let mut p = small_params();
        assert!(forward(&[], &p, None).is_err());
        p.w[[0, 0]] = f64::INFINITY;
        assert!(compute_nll(&[1], &p, None).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = ModelParams::<f32>::zeros(2, 5, Activation::Tanh);
        let nll = compute_nll(&[1, 2], &p, None).unwrap();
        assert!((nll - 2.0 * 5f32.ln()).abs() < 1e-5);
    }
}
