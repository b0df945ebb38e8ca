//! Time-dependent point measurements `y_t = C_t x_t`, sensor trajectories,
//! lagged windows, data partitions and min-max scaling.

mod partition;
mod scaler;
mod trajectory;
mod windows;

pub use partition::{
    extrapolation_warning, partition_windows, read_partition_csv, Partition, PartitionMode, Split, Splits,
};
pub use scaler::Scaler;
pub use trajectory::{circuit_trajectory, immobile_trajectory, random_walk_trajectory, SensorTrajectory};
pub use windows::{assemble_windows, measure, WindowSample};
