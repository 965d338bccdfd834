use super::{evaluate_across, EvalOptions, Metric};
use crate::corpus::{align_vocabs, Collection, Document, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{train_task, ModelParams, TrainHyper, TrainOutcome};
use crate::scalar::{Activation, Scalar};

fn reencode_docs(docs: &[Document], source: &Vocabulary, target: &Vocabulary) -> Vec<Document> {
    let alignment = align_vocabs(source, target);
    docs.iter()
        .map(|d| d.reencode(&alignment))
        .filter(|d| !d.words.is_empty())
        .collect()
}

/// The collection expressed in `target`'s indices, dropping documents that
/// lose every word.
pub(crate) fn reencode_collection(coll: &Collection, target: &Vocabulary) -> Result<Collection> {
    if coll.vocab == *target {
        return Ok(coll.clone());
    }
    Collection::new(
        coll.name.clone(),
        target.clone(),
        reencode_docs(&coll.train, &coll.vocab, target),
        reencode_docs(&coll.val, &coll.vocab, target),
        reencode_docs(&coll.test, &coll.vocab, target),
    )
}

/// Score the future collection with the previous task's model and no
/// training at all.
pub fn zero_shot_eval<T: Scalar>(
    future: &Collection,
    params_past: &ModelParams<T>,
    past_vocab: &Vocabulary,
    metric: Metric,
    opts: &EvalOptions,
) -> Result<f64> {
    if past_vocab.len() != params_past.vocab_size() {
        return Err(Error::Shape("past vocabulary does not match the past model".into()));
    }
    evaluate_across(future, params_past, past_vocab, metric, opts)
}

/// One collection over the union vocabulary: tokens of the first collection
/// in order, then each later collection's unseen tokens in order. Training
/// documents of every collection are concatenated (ids prefixed by the
/// collection name when there is more than one); validation and test come
/// from the last collection.
pub fn union_collection(colls: &[&Collection]) -> Result<Collection> {
    let last = *colls.last().ok_or_else(|| Error::EmptyCollection("no collections to join".into()))?;
    if colls.len() == 1 {
        return Ok(last.clone());
    }
    let mut tokens: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for c in colls {
        for t in c.vocab.tokens() {
            if seen.insert(t.as_str()) {
                tokens.push(t.clone());
            }
        }
    }
    let vocab = Vocabulary::new(tokens)?;
    let prefix = |c: &Collection, docs: Vec<Document>| -> Vec<Document> {
        docs.into_iter()
            .map(|mut d| {
                d.id = format!("{}/{}", c.name, d.id);
                d
            })
            .collect()
    };
    let mut train = Vec::new();
    for c in colls {
        train.extend(prefix(c, reencode_docs(&c.train, &c.vocab, &vocab)));
    }
    let names: Vec<&str> = colls.iter().map(|c| c.name.as_str()).collect();
    Collection::new(
        names.join("+"),
        vocab.clone(),
        train,
        prefix(last, reencode_docs(&last.val, &last.vocab, &vocab)),
        prefix(last, reencode_docs(&last.test, &last.vocab, &vocab)),
    )
}

/// Plain training on the union of every collection.
pub fn data_augment_train<T: Scalar>(
    colls: &[&Collection],
    hidden: usize,
    activation: Activation,
    init_seed: u64,
    hyper: &TrainHyper,
) -> Result<(Collection, TrainOutcome<T>)> {
    let union = union_collection(colls)?;
    let init = ModelParams::init(hidden, union.vocab.len(), activation, init_seed);
    let out = train_task(&union, init, hyper)?;
    Ok((union, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;

    fn coll(name: &str, tokens: &[&str]) -> Collection {
        let vocab = Vocabulary::new(tokens.iter().map(|s| s.to_string()).collect()).unwrap();
        let k = tokens.len();
        let docs = |p: &str| -> Vec<Document> {
            (0..6)
                .map(|i| Document::new(format!("{p}{i}"), format!("{}", i % 2), vec![i % k, (i + 2) % k, (3 * i) % k]))
                .collect()
        };
        Collection::new(name, vocab, docs("tr"), docs("va"), docs("te")).unwrap()
    }

    #[test]
    fn zero_shot_on_own_collection_equals_own_scores() {
        let c = coll("c", &["a", "b", "c", "d"]);
        let p = ModelParams::<f64>::init(3, 4, Activation::Tanh, 2);
        let opts = EvalOptions::default();
        for m in Metric::ALL {
            assert_eq!(
                zero_shot_eval(&c, &p, &c.vocab, m, &opts).unwrap(),
                evaluate(&c, &p, None, m, &opts).unwrap()
            );
        }
    }

    #[test]
    fn union_orders_tokens_by_first_appearance() {
        let a = coll("a", &["x", "y", "z"]);
        let b = coll("b", &["z", "w", "x", "v"]);
        let u = union_collection(&[&a, &b]).unwrap();
        assert_eq!(u.vocab.tokens(), &["x", "y", "z", "w", "v"]);
        assert_eq!(u.train.len(), 12);
        assert_eq!(u.test.len(), 6);
        assert!(u.train[6].id.starts_with("b/"));
    }

    #[test]
    fn single_collection_union_is_plain_training() {
        let c = coll("c", &["a", "b", "c", "d", "e"]);
        let hyper = TrainHyper { learning_rate: 0.05, max_epochs: 4, ..Default::default() };
        let (_, out) = data_augment_train::<f64>(&[&c], 3, Activation::Sigmoid, 7, &hyper).unwrap();
        let plain = train_task(&c, ModelParams::init(3, 5, Activation::Sigmoid, 7), &hyper).unwrap();
        assert_eq!(out.params, plain.params);
    }
}
