//! Optimization of a Gaussian cloud against posed images.

pub mod adam;
pub mod config;
pub mod densify;
pub mod loss;
pub mod trainer;

pub use adam::{adam_update, Adam, AdamParams, GroupRates};
pub use config::TrainConfig;
pub use densify::{densify_and_prune, reset_opacity, DensifyReport, DensifyStats};
pub use loss::{combine, loss, LossValue};
pub use trainer::{train, train_views, train_with_checkpoints, write_loss_csv, LossRecord, TrainOutcome, TrainState, Trainer};
