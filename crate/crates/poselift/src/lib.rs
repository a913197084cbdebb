//! Depth lifting for 21-joint 2D skeletons.
//!
//! A residual fully connected network with batch normalization and dropout
//! predicts the pelvis-relative depth of every joint from its orthographic
//! projection. Forward and backward passes are written out by hand over
//! `ndarray` matrices and trained with Adam. The crate also generates
//! synthetic training poses by forward kinematics on the canonical skeleton
//! and scores predictions with RMSE and PCK.

pub mod dataset;
pub mod lifter;
pub mod metrics;
pub mod model;
pub mod normalize;
pub mod projection;
pub mod synth;
pub mod train;

use thiserror::Error;

pub use figuresdf_core::assembly::{JOINT_NAMES, PELVIS};

pub use dataset::{load_dataset, save_dataset};
pub use lifter::{evaluate, EvalReport, PoseLifter};
pub use metrics::{pck, rmse_mm, PCK_THRESHOLD_MM};
pub use model::{Forward, Gradients, MlpModel, Mode, DEFAULT_DROPOUT, DEFAULT_HIDDEN};
pub use normalize::{normalize_pose, NormStats, PoseSample};
pub use projection::{attach_depths, project_orthographic, project_perspective, Joints2, Joints3};
pub use synth::{generate_synthetic_poses, RotationRanges};
pub use train::{train, TrainConfig};

pub const NUM_JOINTS: usize = 21;
pub const INPUT_WIDTH: usize = 2 * NUM_JOINTS;

#[derive(Debug, Error)]
pub enum PoseLiftError {
    #[error("joint {joint} is behind the camera (depth {depth})")]
    BehindCamera { joint: usize, depth: f64 },
    #[error("batch normalization needs at least 2 samples in training mode, got {0}")]
    BatchTooSmall(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("dataset line {line}: {msg}")]
    Dataset { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
