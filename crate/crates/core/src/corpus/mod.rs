//! Raw text ingestion, vocabularies, index-encoded collections and
//! cross-task vocabulary alignment.

mod align;
mod build;
mod io;
mod tokenize;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use align::{align_vocabs, VocabAlignment};
pub use build::{build_collection, BuildOutput, PreprocessOptions, RawDoc};
pub use io::{load_collection, read_jsonl, save_collection, write_jsonl};
pub use tokenize::tokenize;

use crate::error::{Error, Result};

/// Dense bijection between token strings and indices `0..K`.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index_of: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let mut index_of = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index_of.insert(t.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate token `{t}` in vocabulary")));
            }
        }
        Ok(Vocabulary { tokens, index_of })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index_of.get(token).copied()
    }

    /// Map tokens through the vocabulary, dropping unknown ones.
    pub fn encode<'a, I>(&self, tokens: I) -> Vec<usize>
    where
        I: IntoIterator<Item = &'a str>,
    {
        tokens.into_iter().filter_map(|t| self.index_of(t)).collect()
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
    }
}

impl Eq for Vocabulary {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub label: String,
    pub words: Vec<usize>,
}

impl Document {
    pub fn new(id: impl Into<String>, label: impl Into<String>, words: Vec<usize>) -> Self {
        Document {
            id: id.into(),
            label: label.into(),
            words,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Re-encode into another vocabulary, dropping words without a counterpart.
    pub fn reencode(&self, alignment: &VocabAlignment) -> Document {
        Document {
            id: self.id.clone(),
            label: self.label.clone(),
            words: self
                .words
                .iter()
                .filter_map(|&w| alignment.target_of(w))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" | "dev" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// A document collection with train/val/test splits over one vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collection {
    pub name: String,
    pub vocab: Vocabulary,
    pub train: Vec<Document>,
    pub val: Vec<Document>,
    pub test: Vec<Document>,
}

impl Collection {
    /// Assemble a collection, checking index bounds, non-empty documents and
    /// id uniqueness across splits.
    pub fn new(
        name: impl Into<String>,
        vocab: Vocabulary,
        train: Vec<Document>,
        val: Vec<Document>,
        test: Vec<Document>,
    ) -> Result<Self> {
        let c = Collection {
            name: name.into(),
            vocab,
            train,
            val,
            test,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.vocab.len();
        let mut seen = std::collections::HashSet::new();
        for doc in self.all_docs() {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if doc.words.is_empty() {
                return Err(Error::EmptyDocument(format!(" `{}`", doc.id)));
            }
            if let Some(&bad) = doc.words.iter().find(|&&w| w >= k) {
                return Err(Error::IndexOutOfRange { index: bad, size: k });
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> &[Document] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn all_docs(&self) -> impl Iterator<Item = &Document> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }

    pub fn num_docs(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn labels(&self) -> BTreeSet<String> {
        self.all_docs().map(|d| d.label.clone()).collect()
    }

    pub fn stats(&self) -> CollectionStats {
        let total: usize = self.all_docs().map(Document::len).sum();
        let n = self.num_docs();
        CollectionStats {
            name: self.name.clone(),
            train: self.train.len(),
            val: self.val.len(),
            test: self.test.len(),
            vocab_size: self.vocab.len(),
            mean_length: if n == 0 { 0.0 } else { total as f64 / n as f64 },
            classes: self.labels().len(),
        }
    }
}

/// Size summary of a collection: split sizes, vocabulary size, mean
/// document length and number of classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub name: String,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub vocab_size: usize,
    pub mean_length: f64,
    pub classes: usize,
}

impl CollectionStats {
    pub const TSV_HEADER: &'static str = "name\ttrain\tval\ttest\tK\tL\tC";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.2}\t{}",
            self.name, self.train, self.val, self.test, self.vocab_size, self.mean_length, self.classes
        )
    }
}
