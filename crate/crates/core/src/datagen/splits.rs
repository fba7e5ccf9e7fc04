use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// `(floor(f_train n), floor(f_val n), remainder)`.
pub fn split_counts(n: usize, fractions: [f64; 3]) -> (usize, usize, usize) {
    let train = (fractions[0] * n as f64).floor() as usize;
    let validation = (fractions[1] * n as f64).floor() as usize;
    (train, validation, n - train - validation)
}

/// Seeded shuffle of split tags with the counts from [`split_counts`].
pub fn assign_splits(n: usize, fractions: [f64; 3], seed: u64) -> Vec<Split> {
    let (train, validation, _) = split_counts(n, fractions);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[purpose::SPLITS]));
    let mut tags = vec![Split::Test; n];
    for (rank, &idx) in order.iter().enumerate() {
        if rank < train {
            tags[idx] = Split::Train;
        } else if rank < train + validation {
            tags[idx] = Split::Validation;
        }
    }
    tags
}
