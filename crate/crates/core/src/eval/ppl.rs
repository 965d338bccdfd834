use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::lifelong::EmbTfContext;
use crate::model::{compute_nll, ModelParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub ppl: f64,
    /// Documents that contributed.
    pub used: usize,
    /// Documents with no in-vocabulary word.
    pub skipped: usize,
    /// Word occurrences outside the model vocabulary.
    pub oov_tokens: usize,
}

/// `exp(mean over documents of L(v)/|v|)`.
///
/// Word indices outside the model vocabulary are dropped; documents left
/// empty are skipped and counted.
pub fn perplexity<T: Scalar>(
    docs: &[Document],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
) -> Result<PerplexityReport> {
    let k = params.vocab_size();
    let mut total = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    let mut oov_tokens = 0;
    for d in docs {
        let words: Vec<usize> = d.words.iter().copied().filter(|&w| w < k).collect();
        oov_tokens += d.words.len() - words.len();
        if words.is_empty() {
            skipped += 1;
            continue;
        }
        total += compute_nll(&words, params, emb)?.wide() / words.len() as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyCollection("no document has an in-vocabulary word".into()));
    }
    if skipped > 0 {
        log::warn!("perplexity skipped {skipped} empty documents");
    }
    Ok(PerplexityReport {
        ppl: (total / used as f64).exp(),
        used,
        skipped,
        oov_tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Activation;

    #[test]
    fn zero_model_perplexity_is_vocabulary_size() {
        for k in [1, 2, 3, 7, 50] {
            let p = ModelParams::<f64>::zeros(3, k, Activation::Sigmoid);
            let docs: Vec<Document> = (0..5)
                .map(|i| Document::new(format!("{i}"), "l", (0..=i).map(|j| (i + j) % k).collect()))
                .collect();
            let r = perplexity(&docs, &p, None).unwrap();
            assert!((r.ppl - k as f64).abs() < 1e-10 * k as f64, "{} vs {k}", r.ppl);
        }
    }

    #[test]
    fn matches_hand_computed_conditionals() {
        let p = ModelParams::<f64>::init(2, 3, Activation::Tanh, 8);
        let d1 = Document::new("a", "l", vec![0, 2]);
        let d2 = Document::new("b", "l", vec![1, 1, 0]);
        let per_word = |d: &Document| {
            let mut a = p.c.to_vec();
            let mut nll = 0.0;
            for &w in &d.words {
                let h: Vec<f64> = a.iter().map(|x| x.tanh()).collect();
                let logits: Vec<f64> = (0..3).map(|v| p.b[v] + (0..2).map(|j| p.u[[v, j]] * h[j]).sum::<f64>()).collect();
                let norm: f64 = logits.iter().map(|z| z.exp()).sum();
                nll -= logits[w] - norm.ln();
                for j in 0..2 {
                    a[j] += p.w[[j, w]];
                }
            }
            nll / d.words.len() as f64
        };
        let want = ((per_word(&d1) + per_word(&d2)) / 2.0).exp();
        let got = perplexity(&[d1, d2], &p, None).unwrap().ppl;
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn out_of_vocabulary_words_are_dropped_and_counted() {
        let p = ModelParams::<f64>::zeros(2, 4, Activation::Sigmoid);
        let docs = [Document::new("a", "l", vec![0, 9, 3]), Document::new("b", "l", vec![7])];
        let r = perplexity(&docs, &p, None).unwrap();
        assert_eq!((r.used, r.skipped, r.oov_tokens), (1, 1, 2));
        assert!(perplexity(&docs[1..], &p, None).is_err());
    }
}
