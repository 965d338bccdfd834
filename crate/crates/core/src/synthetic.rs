//! Deterministic three-task streams with controlled vocabulary overlap.
//!
//! Every document belongs to one of a few latent classes. A class owns a
//! list of characteristic words; each task sees a window of that list, so
//! the overlap between tasks' vocabularies follows from how the windows are
//! placed. The final task is sparse: few, short training documents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{RawDoc, Split};

/// Seed of the committed fixture files.
pub const FIXTURE_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overlap {
    /// All tasks draw from the same words.
    Identical,
    /// Neighbouring tasks share part of each class's words.
    Partial,
    /// No word is shared between tasks.
    Disjoint,
}

impl Overlap {
    pub const ALL: [Overlap; 3] = [Overlap::Identical, Overlap::Partial, Overlap::Disjoint];

    pub fn name(self) -> &'static str {
        match self {
            Overlap::Identical => "identical",
            Overlap::Partial => "partial",
            Overlap::Disjoint => "disjoint",
        }
    }
}

impl std::str::FromStr for Overlap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Overlap::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown overlap `{s}` (identical, partial or disjoint)"))
    }
}

/// Shape of one generated task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskShape {
    pub name: String,
    /// `(train, val, test)` document counts.
    pub sizes: (usize, usize, usize),
    /// Inclusive document length range.
    pub length: (usize, usize),
    /// First characteristic word of each class seen by this task.
    pub window_start: usize,
    pub window_len: usize,
    /// Prefix making the task's tokens its own.
    pub token_prefix: String,
}

/// Generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    /// Characteristic words per class across all tasks.
    pub class_words: usize,
    pub noise_words: usize,
    /// Probability that a word comes from the document's class.
    pub topic_prob: f64,
    pub tasks: Vec<TaskShape>,
}

impl SyntheticSpec {
    /// The bundled three-task stream for an overlap kind.
    pub fn stream(overlap: Overlap) -> SyntheticSpec {
        let window = |i: usize| match overlap {
            Overlap::Partial => [0, 4, 2][i],
            _ => 0,
        };
        let prefix = |i: usize| match overlap {
            Overlap::Disjoint => format!("t{}", i + 1),
            _ => String::new(),
        };
        let shape = |i: usize, sizes, length| TaskShape {
            name: format!("task{}", i + 1),
            sizes,
            length,
            window_start: window(i),
            window_len: 12,
            token_prefix: prefix(i),
        };
        SyntheticSpec {
            classes: 4,
            class_words: 20,
            noise_words: 24,
            topic_prob: 0.35,
            tasks: vec![
                shape(0, (240, 40, 80), (10, 20)),
                shape(1, (240, 40, 80), (10, 20)),
                shape(2, (24, 40, 120), (5, 9)),
            ],
        }
    }
}

fn class_token(prefix: &str, class: usize, word: usize) -> String {
    format!("{prefix}c{class}w{word}")
}

fn noise_token(prefix: &str, word: usize) -> String {
    format!("{prefix}noise{word}")
}

/// Raw documents of every task, split tags included. Labels are `class<n>`.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Vec<Vec<RawDoc>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spec.tasks
        .iter()
        .map(|task| {
            let (ntr, nva, nte) = task.sizes;
            let splits = std::iter::repeat_n(Split::Train, ntr)
                .chain(std::iter::repeat_n(Split::Val, nva))
                .chain(std::iter::repeat_n(Split::Test, nte));
            splits
                .enumerate()
                .map(|(i, split)| {
                    let class = rng.random_range(0..spec.classes);
                    let len = rng.random_range(task.length.0..=task.length.1);
                    let words: Vec<String> = (0..len)
                        .map(|_| {
                            if rng.random_bool(spec.topic_prob) {
                                let w = task.window_start + rng.random_range(0..task.window_len);
                                class_token(&task.token_prefix, class, w % spec.class_words)
                            } else {
                                noise_token(&task.token_prefix, rng.random_range(0..spec.noise_words))
                            }
                        })
                        .collect();
                    RawDoc::new(format!("{}-{i:04}", task.name), format!("class{class}"), words.join(" "))
                        .with_split(split)
                })
                .collect()
        })
        .collect()
}
