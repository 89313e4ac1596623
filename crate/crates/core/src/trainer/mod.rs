//! Neural certificate synthesis.

mod loss;
mod mlp;
mod train;

pub use loss::{
    beta_loss, forward, gradient, loss_and_grad, normalized_coeffs, Forward, LossConfig, LossValue, PreparedBatch, TrainPoint,
    NORM_FLOOR,
};
pub use mlp::{Cache, Layer, Mlp, DEFAULT_HIDDEN, LEAKY_SLOPE};
pub use train::{assess, generate_dataset, log_csv, train, warm_start, LogRow, TrainConfig, TrainOutcome, ValidationConfig};
