use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::corpus::Vocabulary;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub index: usize,
    /// `(token, weight)` in descending weight.
    pub words: Vec<(String, f64)>,
}

impl Topic {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|(t, _)| t.as_str())
    }
}

/// Top-`top_n` words of every row of W. Ties go to the lower word index;
/// `top_n` is clamped to K.
pub fn extract_topics<T: Scalar>(params: &ModelParams<T>, vocab: &Vocabulary, top_n: usize) -> Vec<Topic> {
    let k = params.vocab_size().min(vocab.len());
    let n = top_n.min(k);
    params
        .w
        .rows()
        .into_iter()
        .enumerate()
        .map(|(j, row)| {
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&a, &b| {
                row[b]
                    .partial_cmp(&row[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            Topic {
                index: j,
                words: idx[..n]
                    .iter()
                    .map(|&v| (vocab.tokens()[v].clone(), row[v].wide()))
                    .collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Activation;

    fn vocab(k: usize) -> Vocabulary {
        Vocabulary::new((0..k).map(|i| format!("t{i}")).collect()).unwrap()
    }

    #[test]
    fn scaled_unit_row_picks_that_word() {
        let mut p = ModelParams::<f64>::zeros(2, 8, Activation::Sigmoid);
        p.w[[1, 5]] = 10.0;
        let topics = extract_topics(&p, &vocab(8), 1);
        assert_eq!(topics[1].words[0].0, "t5");
        assert_eq!(topics.len(), 2);
    }

    #[test]
    fn equal_rows_fall_back_to_index_order() {
        let p = ModelParams::<f64>::zeros(1, 6, Activation::Sigmoid);
        let t = extract_topics(&p, &vocab(6), 3);
        assert_eq!(t[0].tokens().collect::<Vec<_>>(), vec!["t0", "t1", "t2"]);
    }

    #[test]
    fn top_n_is_clamped() {
        let p = ModelParams::<f64>::init(2, 4, Activation::Sigmoid, 0);
        let t = extract_topics(&p, &vocab(4), 10);
        assert_eq!(t[0].words.len(), 4);
        assert!(t[0].words.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}
