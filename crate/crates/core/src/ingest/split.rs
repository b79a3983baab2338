use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HOLDOUT_EVERY: usize = 8;

/// View indices assigned to training and held-out evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Holds out every `every`-th view starting at index 0.
pub fn split_train_test(n_views: usize, every: usize) -> Result<Split> {
    if n_views < 2 || every < 2 {
        return Err(Error::TooFewViews {
            views: n_views,
            every,
        });
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..n_views).partition(|i| i % every == 0);
    Ok(Split { train, test })
}
