use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{tokenize, Collection, Document, Split, Vocabulary};
use crate::error::{Error, Result};

/// One raw input record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDoc {
    pub id: String,
    pub label: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl RawDoc {
    pub fn new(id: impl Into<String>, label: impl Into<String>, text: impl Into<String>) -> Self {
        RawDoc {
            id: id.into(),
            label: label.into(),
            text: text.into(),
            split: None,
        }
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOptions {
    pub name: String,
    pub lowercase: bool,
    pub min_token_len: usize,
    /// Keep only the most frequent tokens; `None` keeps all.
    pub max_vocab: Option<usize>,
    /// Documents with fewer surviving tokens are dropped. Values below 1 are
    /// treated as 1.
    pub min_doc_len: usize,
    /// Train/val/test proportions for records without an explicit split tag.
    pub split_ratios: (f64, f64, f64),
    pub seed: u64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            name: "collection".to_string(),
            lowercase: true,
            min_token_len: 2,
            max_vocab: None,
            min_doc_len: 1,
            split_ratios: (0.8, 0.1, 0.1),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub collection: Collection,
    /// Number of input records dropped for being too short after filtering.
    pub dropped: usize,
}

/// Tokenize raw records, build a frequency-capped vocabulary, encode and
/// split.
///
/// The vocabulary holds the `max_vocab` most frequent tokens over all records
/// ordered by descending frequency, ties broken lexicographically.
pub fn build_collection(raw_docs: &[RawDoc], opts: &PreprocessOptions) -> Result<BuildOutput> {
    if raw_docs.is_empty() {
        return Err(Error::EmptyCollection("no input records".into()));
    }
    let mut ids = HashSet::with_capacity(raw_docs.len());
    for d in raw_docs {
        if !ids.insert(d.id.as_str()) {
            return Err(Error::DuplicateId(d.id.clone()));
        }
    }

    let tokenized: Vec<Vec<String>> = raw_docs
        .iter()
        .map(|d| tokenize(&d.text, opts.lowercase, opts.min_token_len))
        .collect();

    let mut freq: HashMap<&str, usize> = HashMap::new();
    for toks in &tokenized {
        for t in toks {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(cap) = opts.max_vocab {
        ranked.truncate(cap);
    }
    let vocab = Vocabulary::new(ranked.into_iter().map(|(t, _)| t.to_owned()).collect())?;

    let min_len = opts.min_doc_len.max(1);
    let mut kept: Vec<(usize, Document)> = Vec::new();
    for (i, (raw, toks)) in raw_docs.iter().zip(&tokenized).enumerate() {
        let words = vocab.encode(toks.iter().map(String::as_str));
        if words.len() >= min_len {
            kept.push((i, Document::new(raw.id.clone(), raw.label.clone(), words)));
        }
    }
    let dropped = raw_docs.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::EmptyCollection(format!(
            "all {} records were empty after filtering",
            raw_docs.len()
        )));
    }

    // explicit tags first, seeded ratio split for the rest
    let mut assignment: Vec<Option<Split>> = kept.iter().map(|(i, _)| raw_docs[*i].split).collect();
    let mut untagged: Vec<usize> = (0..kept.len()).filter(|&j| assignment[j].is_none()).collect();
    if !untagged.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        untagged.shuffle(&mut rng);
        let (tr, va, te) = opts.split_ratios;
        let total = tr + va + te;
        if total.is_nan() || total <= 0.0 || tr < 0.0 || va < 0.0 || te < 0.0 {
            return Err(Error::Config(format!("invalid split ratios {:?}", opts.split_ratios)));
        }
        let n = untagged.len();
        let n_train = ((tr / total) * n as f64).round() as usize;
        let n_val = (((va / total) * n as f64).round() as usize).min(n - n_train.min(n));
        for (rank, &j) in untagged.iter().enumerate() {
            assignment[j] = Some(if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            });
        }
    }

    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for ((_, doc), split) in kept.into_iter().zip(assignment) {
        match split.expect("every document assigned") {
            Split::Train => train.push(doc),
            Split::Val => val.push(doc),
            Split::Test => test.push(doc),
        }
    }

    let collection = Collection::new(opts.name.clone(), vocab, train, val, test)?;
    Ok(BuildOutput { collection, dropped })
}
