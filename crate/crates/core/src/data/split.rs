//! Per-user stratified train/test split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{InteractionDataset, SplitDataset};
use crate::error::{Error, Result};

/// Partition each user's interactions into train and test. The per-user
/// train count is `round(train_fraction * m)`, floored at 1 for users with
/// at least 2 interactions so every trained user keeps signal.
pub fn split(ds: &InteractionDataset, train_fraction: f64, seed: u64) -> Result<SplitDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParam(
            "train_fraction must lie strictly between 0 and 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (u, mut items) in ds.items_by_user().into_iter().enumerate() {
        let m = items.len();
        if m == 0 {
            continue;
        }
        items.shuffle(&mut rng);
        let mut n_train = (train_fraction * m as f64).round() as usize;
        if m >= 2 {
            n_train = n_train.max(1);
        }
        n_train = n_train.min(m);
        for (k, j) in items.into_iter().enumerate() {
            if k < n_train {
                train.push((u as u32, j));
            } else {
                test.push((u as u32, j));
            }
        }
    }
    Ok(SplitDataset {
        train: ds.with_interactions(train),
        test: ds.with_interactions(test),
        train_fraction,
    })
}
