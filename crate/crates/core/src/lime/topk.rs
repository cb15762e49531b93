use serde::{Deserialize, Serialize};

use crate::numeric::{FixedPoint, FixedVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExplanationEntry {
    pub feature: usize,
    pub value: FixedPoint,
}

/// The K most influential features, largest magnitude first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Explanation {
    pub entries: Vec<ExplanationEntry>,
}

impl Explanation {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn features(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.feature).collect()
    }
}

/// Feature indices by descending `|w|`, ties by ascending index.
pub fn ranking(w: &[i64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].unsigned_abs().cmp(&w[a].unsigned_abs()).then(a.cmp(&b)));
    idx
}

/// First `k` entries of [`ranking`]; values are copied from `w` unchanged.
pub fn top_k(w: &FixedVec, k: usize) -> Explanation {
    let entries = ranking(&w.raw)
        .into_iter()
        .take(k)
        .map(|j| ExplanationEntry {
            feature: j,
            value: FixedPoint::new(w.raw[j], w.scale),
        })
        .collect();
    Explanation { entries }
}
