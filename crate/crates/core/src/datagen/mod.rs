//! Training data: a seeded self-touch posture sampler, dataset CSV files and
//! z-score normalization.

mod csv;
mod kinematics;
mod normalize;
mod sampler;

pub use self::csv::{load_csv, parse_csv, save_csv, to_csv_string, CSV_HEADER};
pub use self::kinematics::{forward_kinematics, Axis, ChainSpec, JointSample, Transform};
pub use self::normalize::{fit_normalization, NormalizationParams};
pub use self::sampler::{synthesize_self_touch, SampleReport};

/// Joint order of every sample, codebook column and heatmap.
pub const JOINT_NAMES: [&str; 7] = [
    "head_yaw",
    "head_pitch",
    "shoulder_roll",
    "shoulder_pitch",
    "elbow_roll",
    "elbow_yaw",
    "wrist",
];

/// Display name for column `i` of a `dims`-wide dataset.
pub fn column_name(i: usize, dims: usize) -> String {
    if dims == JOINT_NAMES.len() {
        JOINT_NAMES[i].to_string()
    } else {
        format!("column {i}")
    }
}
