//! ADAM and the training loops built on it.

mod adam;
mod ensemble;
mod train;

pub use adam::{adam_step, AdamState};
pub use ensemble::{train_ensemble, EnsembleMember, MemberRun};
pub use train::{mean_mse, train, LrSchedule, TrainConfig, TrainReport, Trainable};
