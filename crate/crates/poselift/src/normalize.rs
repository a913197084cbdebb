use figuresdf_core::assembly::CANONICAL_HEIGHT;
use figuresdf_core::Vec2;

use crate::projection::{project_orthographic, Joints2, Joints3};
use crate::{PoseLiftError, INPUT_WIDTH, NUM_JOINTS, PELVIS};

/// An orthographic 2D skeleton with its pelvis-relative joint depths.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSample {
    pub joints2d: Joints2,
    pub depths: [f64; NUM_JOINTS],
    /// Vertical extent of `joints2d`.
    pub source_height: f64,
}

impl PoseSample {
    pub fn new(joints2d: Joints2, depths: [f64; NUM_JOINTS]) -> Result<PoseSample, PoseLiftError> {
        if !joints2d.iter().all(|p| p.x.is_finite() && p.y.is_finite()) || !depths.iter().all(|d| d.is_finite()) {
            return Err(PoseLiftError::InvalidSample("non-finite coordinate".into()));
        }
        if depths[PELVIS] != 0.0 {
            return Err(PoseLiftError::InvalidSample("pelvis depth must be 0".into()));
        }
        let source_height = vertical_extent(&joints2d);
        if !(source_height > 0.0) {
            return Err(PoseLiftError::InvalidSample("2D skeleton has no vertical extent".into()));
        }
        Ok(PoseSample { joints2d, depths, source_height })
    }

    /// Orthographic projection of a 3D skeleton.
    pub fn from_joints3d(joints: &Joints3) -> Result<PoseSample, PoseLiftError> {
        let zp = joints[PELVIS].z;
        PoseSample::new(project_orthographic(joints), joints.map(|p| p.z - zp))
    }

    /// 2D sample without known depths, e.g. for prediction.
    pub fn from_joints2d(joints2d: Joints2) -> Result<PoseSample, PoseLiftError> {
        PoseSample::new(joints2d, [0.0; NUM_JOINTS])
    }

    /// Pelvis-centered 2D coordinates rescaled to the canonical height,
    /// interleaved as `x0, y0, x1, y1, ...`.
    pub fn centered_input(&self) -> [f64; INPUT_WIDTH] {
        let p = self.joints2d[PELVIS];
        let mut v = [0.0; INPUT_WIDTH];
        for (j, q) in self.joints2d.iter().enumerate() {
            v[2 * j] = self.to_canonical(q.x - p.x);
            v[2 * j + 1] = self.to_canonical(q.y - p.y);
        }
        v
    }

    /// Depths in the rescaled frame of [`centered_input`](Self::centered_input).
    pub fn canonical_depths(&self) -> [f64; NUM_JOINTS] {
        self.depths.map(|d| self.to_canonical(d))
    }

    pub fn to_canonical(&self, v: f64) -> f64 {
        v * CANONICAL_HEIGHT / self.source_height
    }

    pub fn from_canonical(&self, v: f64) -> f64 {
        v * self.source_height / CANONICAL_HEIGHT
    }
}

fn vertical_extent(joints: &[Vec2]) -> f64 {
    let (lo, hi) = joints.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    hi - lo
}

/// Per-dimension standardization fitted on a training set: the 42 network
/// inputs by default, the 21 depth targets as `NormStats<NUM_JOINTS>`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats<const N: usize = INPUT_WIDTH> {
    pub mean: [f64; N],
    pub std: [f64; N],
}

impl<const N: usize> NormStats<N> {
    pub fn identity() -> NormStats<N> {
        NormStats { mean: [0.0; N], std: [1.0; N] }
    }

    /// Population mean and standard deviation. Dimensions with zero spread
    /// get std 1; their indices are returned.
    pub fn fit(inputs: &[[f64; N]]) -> Result<(NormStats<N>, Vec<usize>), PoseLiftError> {
        if inputs.is_empty() {
            return Err(PoseLiftError::Shape("cannot fit statistics on an empty set".into()));
        }
        let n = inputs.len() as f64;
        let mut stats = NormStats::identity();
        let mut constant = Vec::new();
        for d in 0..N {
            let mean = inputs.iter().map(|v| v[d]).sum::<f64>() / n;
            let var = inputs.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / n;
            stats.mean[d] = mean;
            if var > 0.0 {
                stats.std[d] = var.sqrt();
            } else {
                constant.push(d);
            }
        }
        Ok((stats, constant))
    }

    pub fn apply(&self, v: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|d| (v[d] - self.mean[d]) / self.std[d])
    }

    pub fn invert(&self, v: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|d| v[d] * self.std[d] + self.mean[d])
    }
}

/// Network input for a sample: centered, rescaled, standardized.
pub fn normalize_pose(sample: &PoseSample, stats: &NormStats) -> [f64; INPUT_WIDTH] {
    stats.apply(&sample.centered_input())
}
