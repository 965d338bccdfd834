//! Selective co-training: distill past documents the future model already
//! explains well, then replay them with per-source weights.

use crate::corpus::{align_vocabs, Collection, Document, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{compute_nll, ModelParams};
use crate::scalar::Scalar;

/// Per-word perplexity `exp(L(v)/|v|)` of one document under a plain model.
pub fn doc_perplexity<T: Scalar>(words: &[usize], params: &ModelParams<T>) -> Result<f64> {
    let nll = compute_nll(words, params, None)?;
    Ok((nll.wide() / words.len() as f64).exp())
}

/// One past collection offered for distillation.
#[derive(Debug, Clone, Copy)]
pub struct DistillSource<'a> {
    pub task_id: &'a str,
    pub collection: &'a Collection,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDoc {
    /// Re-encoded into the future vocabulary.
    pub doc: Document,
    pub source_task: String,
    pub lambda: f64,
    /// Per-word perplexity under the future model.
    pub ppl: f64,
}

/// Selection counts for one past source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceCounts {
    pub task_id: String,
    /// Training documents of the source.
    pub examined: usize,
    /// Documents with no word left after re-encoding.
    pub emptied: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AugmentedSet {
    pub docs: Vec<AugmentedDoc>,
    pub threshold: f64,
    pub sources: Vec<SourceCounts>,
}

impl AugmentedSet {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// Keep every past training document whose per-word perplexity under the
/// future model is at most `ppl_future`. Documents are first re-encoded into
/// `future_vocab`; out-of-vocabulary tokens are dropped and documents left
/// empty are skipped.
pub fn distill_documents<T: Scalar>(
    params_future: &ModelParams<T>,
    future_vocab: &Vocabulary,
    ppl_future: f64,
    sources: &[DistillSource<'_>],
) -> Result<AugmentedSet> {
    if future_vocab.len() != params_future.vocab_size() {
        return Err(Error::Shape(format!(
            "future vocabulary has {} tokens but the model has K={}",
            future_vocab.len(),
            params_future.vocab_size()
        )));
    }
    if ppl_future.is_nan() {
        return Err(Error::NonFinite("distillation threshold"));
    }
    let mut out = AugmentedSet {
        threshold: ppl_future,
        ..Default::default()
    };
    for src in sources {
        if !(src.lambda.is_finite() && src.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda_sal = {} for `{}`", src.lambda, src.task_id)));
        }
        let alignment = align_vocabs(&src.collection.vocab, future_vocab);
        let mut counts = SourceCounts {
            task_id: src.task_id.to_string(),
            examined: src.collection.train.len(),
            emptied: 0,
            selected: 0,
        };
        for d in &src.collection.train {
            let doc = d.reencode(&alignment);
            if doc.words.is_empty() {
                counts.emptied += 1;
                continue;
            }
            let ppl = doc_perplexity(&doc.words, params_future)?;
            if ppl <= ppl_future {
                counts.selected += 1;
                out.docs.push(AugmentedDoc {
                    doc,
                    source_task: src.task_id.to_string(),
                    lambda: src.lambda,
                    ppl,
                });
            }
        }
        log::info!(
            "distilled {}/{} documents from `{}` at threshold {ppl_future:.4}",
            counts.selected,
            counts.examined,
            src.task_id
        );
        out.sources.push(counts);
    }
    Ok(out)
}

/// `sum lambda * L(v)` over the augmented set.
pub fn delta_sal<T: Scalar>(aug: &AugmentedSet, params: &ModelParams<T>) -> Result<T> {
    let mut total = T::zero();
    for a in aug.docs.iter().filter(|a| a.lambda != 0.0) {
        total += T::of(a.lambda) * compute_nll(&a.doc.words, params, None)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gradients;
    use crate::scalar::Activation;
    use proptest::prelude::*;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        Vocabulary::new(tokens.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn empty_sources_give_empty_set() {
        let p = ModelParams::<f64>::init(2, 3, Activation::Sigmoid, 1);
        let aug = distill_documents(&p, &vocab(&["a", "b", "c"]), 5.0, &[]).unwrap();
        assert!(aug.is_empty());
        assert_eq!(delta_sal(&aug, &p).unwrap(), 0.0);
    }

    #[test]
    fn threshold_is_inclusive() {
        let v = vocab(&["a", "b", "c"]);
        let p = ModelParams::<f64>::init(2, 3, Activation::Tanh, 4);
        let doc = Document::new("d", "x", vec![0, 2, 1]);
        let past = Collection::new("past", v.clone(), vec![doc.clone()], vec![], vec![]).unwrap();
        let exact = doc_perplexity(&doc.words, &p).unwrap();
        let src = [DistillSource { task_id: "past", collection: &past, lambda: 1.0 }];
        assert_eq!(distill_documents(&p, &v, exact, &src).unwrap().len(), 1);
        let below = exact - exact * 1e-9;
        assert_eq!(distill_documents(&p, &v, below, &src).unwrap().len(), 0);
    }

    #[test]
    fn out_of_vocabulary_tokens_are_dropped_and_empty_documents_skipped() {
        let past_v = vocab(&["x", "a", "y", "b"]);
        let fut_v = vocab(&["b", "a", "c"]);
        let p = ModelParams::<f64>::init(2, 3, Activation::Sigmoid, 2);
        let past = Collection::new(
            "past",
            past_v,
            vec![Document::new("keep", "l", vec![0, 1, 2, 3]), Document::new("gone", "l", vec![0, 2])],
            vec![],
            vec![],
        )
        .unwrap();
        let src = [DistillSource { task_id: "p", collection: &past, lambda: 0.5 }];
        let aug = distill_documents(&p, &fut_v, f64::INFINITY, &src).unwrap();
        assert_eq!(aug.len(), 1);
        assert_eq!(aug.docs[0].doc.words, vec![1, 0]);
        assert_eq!(aug.docs[0].lambda, 0.5);
        assert_eq!(aug.sources[0].emptied, 1);
        assert_eq!(aug.sources[0].examined, 2);
    }

    #[test]
    fn weighted_sum_matches_per_document_nll() {
        let p = ModelParams::<f64>::init(3, 4, Activation::Sigmoid, 9);
        let d1 = Document::new("1", "l", vec![0, 1, 3]);
        let d2 = Document::new("2", "l", vec![2, 2]);
        let aug = AugmentedSet {
            docs: vec![
                AugmentedDoc { doc: d1.clone(), source_task: "s".into(), lambda: 1.0, ppl: 0.0 },
                AugmentedDoc { doc: d2.clone(), source_task: "t".into(), lambda: 0.5, ppl: 0.0 },
            ],
            threshold: 0.0,
            sources: vec![],
        };
        let want = compute_nll(&d1.words, &p, None).unwrap() + 0.5 * compute_nll(&d2.words, &p, None).unwrap();
        assert!((delta_sal(&aug, &p).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn weighted_gradient_is_scaled_document_gradient() {
        let p = ModelParams::<f64>::init(3, 5, Activation::Tanh, 3);
        let words = [4, 0, 2, 2];
        let (_, g) = gradients(&words, &p, None).unwrap();
        let mut acc = crate::model::ParamGrads::zeros_like(&p);
        crate::model::accumulate_gradients(&words, &p, None, 0.25, &mut acc).unwrap();
        for (a, b) in acc.w.iter().zip(g.w.iter()) {
            assert!((a - 0.25 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn in_distribution_documents_are_selected() {
        // The future model ignores context and gives each of words 0..4 the
        // same probability, far above words 4..8. Every in-distribution
        // document of the test length then has exactly the test perplexity,
        // and every foreign document a much larger one.
        let v = Vocabulary::new((0..8).map(|i| format!("w{i}")).collect()).unwrap();
        let mut future_model = ModelParams::<f64>::zeros(4, 8, Activation::Sigmoid);
        for w in 0..8 {
            future_model.b[w] = if w < 4 { 2.0 } else { -2.0 };
        }
        let mk = |prefix: &str, base: usize, n: usize| -> Vec<Document> {
            (0..n)
                .map(|i| Document::new(format!("{prefix}{i}"), "l", (0..6).map(|j| base + (i * 5 + j * j) % 4).collect()))
                .collect()
        };
        let test = mk("ft", 0, 2);
        let ppl_future = crate::model::docs_ppl(&test, &future_model, None).unwrap();
        let mut past_docs = mk("in", 0, 50);
        past_docs.extend(mk("out", 4, 50));
        let past = Collection::new("p", v.clone(), past_docs, vec![], vec![]).unwrap();
        let src = [DistillSource { task_id: "p", collection: &past, lambda: 1.0 }];
        let aug = distill_documents(&future_model, &v, ppl_future, &src).unwrap();
        assert_eq!(aug.len(), 50);
        assert!(aug.docs.iter().all(|a| a.doc.id.starts_with("in")));
    }

    proptest! {
        #[test]
        fn selection_is_monotone_in_threshold(seed in 0u64..200, lo in 1.0f64..10.0, extra in 0.0f64..10.0) {
            let v = vocab(&["a", "b", "c", "d", "e"]);
            let p = ModelParams::<f64>::init(3, 5, Activation::Sigmoid, seed);
            let docs: Vec<Document> = (0..12)
                .map(|i| Document::new(format!("d{i}"), "l", (0..(1 + i % 5)).map(|j| (i * 7 + j * 3) % 5).collect()))
                .collect();
            let past = Collection::new("p", v.clone(), docs, vec![], vec![]).unwrap();
            let src = [DistillSource { task_id: "p", collection: &past, lambda: 1.0 }];
            let small = distill_documents(&p, &v, lo, &src).unwrap();
            let large = distill_documents(&p, &v, lo + extra, &src).unwrap();
            for d in &small.docs {
                prop_assert!(large.docs.iter().any(|e| e.doc.id == d.doc.id));
            }
        }
    }
}
