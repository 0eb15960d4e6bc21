//! Cross-entropy objective, momentum SGD and the training loop.

mod loss;
mod optim;
mod trainer;

pub use loss::{compute_class_weights, cross_entropy};
pub use optim::sgd_step;
pub use trainer::{
    batch_loss_and_grad, evaluate_windows, train, BatchGrad, EpochRecord, TrainConfig, TrainReport,
};
