//! Aggregate learning across mixed frequencies.
//!
//! A granular predictor `f` maps a small area's daily feature window to
//! that area's monthly value. It is never supervised directly: for every
//! labeled `(p, t)` and every day `τ` of `t`, the weighted sum of `f` over
//! the children of `p` is regressed onto the coarse label `y_t^p`.

mod checkpoint;
mod loss;
mod model;
mod train;

pub use checkpoint::{read_predictions, write_predictions};
pub use loss::{aggregate, aggregate_loss, loss, LossSummary};
pub use model::{GranularPrediction, MfAglModel, Scaling, TrainConfig};
pub use train::{train, train_observed, train_with_labels, EpochLoss, Trained};

/// Relative change `current / prior - 1`.
pub fn yoy_change(current: f64, prior: f64) -> f64 {
    current / prior - 1.0
}
