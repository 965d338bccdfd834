use super::Vocabulary;

/// Index pairs `(source, target)` for tokens present in both vocabularies,
/// ascending by source index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabAlignment {
    pairs: Vec<(usize, usize)>,
    forward: Vec<Option<usize>>,
    target_len: usize,
}

impl VocabAlignment {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_len(&self) -> usize {
        self.forward.len()
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn target_of(&self, source: usize) -> Option<usize> {
        self.forward.get(source).copied().flatten()
    }

    /// Same pairs with source and target swapped.
    pub fn transposed(&self) -> VocabAlignment {
        let mut backward = vec![None; self.target_len];
        for &(s, t) in &self.pairs {
            backward[t] = Some(s);
        }
        let pairs = backward
            .iter()
            .enumerate()
            .filter_map(|(t, s)| s.map(|s| (t, s)))
            .collect();
        VocabAlignment {
            pairs,
            forward: backward,
            target_len: self.forward.len(),
        }
    }
}

/// Match tokens across two vocabularies by exact string equality.
pub fn align_vocabs(source: &Vocabulary, target: &Vocabulary) -> VocabAlignment {
    let forward: Vec<Option<usize>> = source.tokens().iter().map(|t| target.index_of(t)).collect();
    let pairs = forward
        .iter()
        .enumerate()
        .filter_map(|(s, t)| t.map(|t| (s, t)))
        .collect();
    VocabAlignment {
        pairs,
        forward,
        target_len: target.len(),
    }
}
