//! Ball-pivoting reconstruction of oriented point clouds.

mod hash;
mod pivot;

use thiserror::Error;

use crate::mesh::MeshError;
use crate::Vec3;

pub use hash::SpatialHash;
pub use pivot::{ball_center, ball_pivot, default_radius, BallPivotResult, EMPTY_BALL_SLACK};

#[derive(Debug, Error)]
pub enum RemeshError {
    #[error("ball pivoting needs at least 3 points, got {0}")]
    InsufficientPoints(usize),
    #[error("invalid radii: {0}")]
    InvalidRadii(String),
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Points with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedPointCloud {
    points: Vec<Vec3>,
    normals: Vec<Vec3>,
}

impl OrientedPointCloud {
    pub fn new(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<OrientedPointCloud, RemeshError> {
        if points.len() != normals.len() {
            return Err(RemeshError::InvalidCloud(format!("{} points but {} normals", points.len(), normals.len())));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(RemeshError::InvalidCloud(format!("point {i} is not finite")));
        }
        if let Some(i) = normals.iter().position(|n| !((n.norm() - 1.0).abs() <= 1e-6)) {
            return Err(RemeshError::InvalidCloud(format!("normal {i} is not unit length")));
        }
        Ok(OrientedPointCloud { points, normals })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
