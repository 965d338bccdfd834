use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::Result;
use crate::lifelong::EmbTfContext;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationMode {
    /// `g(c + sum over all D words)`, summed in ascending word-index order so
    /// the result is independent of word order.
    #[default]
    AllWords,
    /// The last autoregressive hidden `h_D`, which excludes the final word.
    Exclusive,
}

impl std::str::FromStr for RepresentationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all_words" | "all-words" => Ok(RepresentationMode::AllWords),
            "exclusive" => Ok(RepresentationMode::Exclusive),
            other => Err(format!("unknown representation mode `{other}`")),
        }
    }
}

/// Length-H document vector.
pub fn doc_representation<T: Scalar>(
    words: &[usize],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
    mode: RepresentationMode,
) -> Result<Array1<T>> {
    params.check_doc(words)?;
    if let Some(ctx) = emb {
        ctx.check_compatible(params)?;
    }
    Ok(representation_unchecked(words, params, emb, mode))
}

pub(crate) fn representation_unchecked<T: Scalar>(
    words: &[usize],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
    mode: RepresentationMode,
) -> Array1<T> {
    let mut a = params.c.clone();
    match mode {
        RepresentationMode::AllWords => {
            let mut sorted = words.to_vec();
            sorted.sort_unstable();
            for v in sorted {
                params.advance(&mut a, v, emb);
            }
        }
        RepresentationMode::Exclusive => {
            for &v in &words[..words.len() - 1] {
                params.advance(&mut a, v, emb);
            }
        }
    }
    params.activate(&a)
}
