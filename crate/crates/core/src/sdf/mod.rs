//! Signed distance field grids and the operations defined on them.
//!
//! Distances are negative inside, zero on and positive outside the surface.

mod field;
mod grid;
pub mod io;
mod metrics;
mod sampling;

use std::fmt;

use thiserror::Error;

pub use field::{estimate_normal, union_distance};
pub use grid::{unit_cube_layout, Axis, SdfGrid};
pub use metrics::{iou_grids, mirror_grid, rmse_grids};
pub use sampling::{sample_sdf_points, SamplePoint, Sign, REJECTION_ATTEMPTS_PER_SAMPLE};

/// Default nodes per axis for converted body parts.
pub const DEFAULT_RESOLUTION: usize = 64;

#[derive(Debug, Error)]
pub enum SdfError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point ({}, {}, {}) lies outside the grid domain", point[0], point[1], point[2])]
    OutOfDomain { point: [f64; 3] },
    #[error("degenerate normal: zero gradient at ({}, {}, {})", point[0], point[1], point[2])]
    DegenerateNormal { point: [f64; 3] },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("only {found} of {requested} {sign} samples found within {attempts} attempts")]
    InsufficientSamples { sign: Sign, requested: usize, found: usize, attempts: usize },
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("malformed SDFG data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        })
    }
}
