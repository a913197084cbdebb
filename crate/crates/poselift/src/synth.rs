use std::collections::BTreeMap;

use nalgebra::Rotation3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use figuresdf_core::assembly::{joint_index, Skeleton, JOINT_PARENTS};
use figuresdf_core::{rng, Vec3};

use crate::normalize::PoseSample;
use crate::{PoseLiftError, NUM_JOINTS};

/// Rotation limits of one joint in degrees, about the x, y and z axes. The
/// joint rotation is `Rz * Ry * Rx` and turns every bone below the joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct JointRange {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

/// Per-joint rotation ranges; joints not listed stay fixed.
///
/// The defaults keep the whole figure within 90 degrees of facing the
/// camera, bend elbows forward and knees backward only, and allow arms to
/// swing up to 100 degrees forward and legs 90 degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationRanges {
    pub joints: BTreeMap<String, JointRange>,
}

impl Default for RotationRanges {
    fn default() -> Self {
        let r = |x: [f64; 2], y: [f64; 2], z: [f64; 2]| JointRange { x, y, z };
        let mut joints = BTreeMap::new();
        joints.insert("pelvis".into(), r([-10.0, 10.0], [-90.0, 90.0], [-10.0, 10.0]));
        joints.insert("thorax".into(), r([-10.0, 30.0], [-20.0, 20.0], [-10.0, 10.0]));
        joints.insert("neck".into(), r([-10.0, 20.0], [-20.0, 20.0], [-10.0, 10.0]));
        joints.insert("head".into(), r([-15.0, 15.0], [-30.0, 30.0], [-10.0, 10.0]));
        joints.insert("l_shoulder".into(), r([-100.0, 40.0], [-30.0, 30.0], [-10.0, 90.0]));
        joints.insert("r_shoulder".into(), r([-100.0, 40.0], [-30.0, 30.0], [-90.0, 10.0]));
        joints.insert("l_elbow".into(), r([-120.0, 0.0], [0.0, 0.0], [0.0, 0.0]));
        joints.insert("r_elbow".into(), r([-120.0, 0.0], [0.0, 0.0], [0.0, 0.0]));
        joints.insert("l_wrist".into(), r([-30.0, 30.0], [0.0, 0.0], [-20.0, 20.0]));
        joints.insert("r_wrist".into(), r([-30.0, 30.0], [0.0, 0.0], [-20.0, 20.0]));
        joints.insert("l_hip".into(), r([-90.0, 30.0], [-20.0, 20.0], [-5.0, 30.0]));
        joints.insert("r_hip".into(), r([-90.0, 30.0], [-20.0, 20.0], [-30.0, 5.0]));
        joints.insert("l_knee".into(), r([0.0, 120.0], [0.0, 0.0], [0.0, 0.0]));
        joints.insert("r_knee".into(), r([0.0, 120.0], [0.0, 0.0], [0.0, 0.0]));
        joints.insert("l_ankle".into(), r([-20.0, 20.0], [-10.0, 10.0], [0.0, 0.0]));
        joints.insert("r_ankle".into(), r([-20.0, 20.0], [-10.0, 10.0], [0.0, 0.0]));
        RotationRanges { joints }
    }
}

impl RotationRanges {
    pub fn zero() -> RotationRanges {
        RotationRanges { joints: BTreeMap::new() }
    }

    fn per_joint(&self) -> Result<[JointRange; NUM_JOINTS], PoseLiftError> {
        let mut out = [JointRange::default(); NUM_JOINTS];
        for (name, range) in &self.joints {
            let j = joint_index(name).ok_or_else(|| PoseLiftError::Config(format!("unknown joint '{name}'")))?;
            for [lo, hi] in [range.x, range.y, range.z] {
                if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                    return Err(PoseLiftError::Config(format!("invalid range [{lo}, {hi}] for '{name}'")));
                }
            }
            out[j] = *range;
        }
        Ok(out)
    }
}

/// Forward kinematics on the canonical skeleton with per-joint local
/// rotations.
pub fn pose_skeleton(rotations: &[Rotation3<f64>; NUM_JOINTS]) -> Skeleton {
    let canonical = *Skeleton::canonical().joints();
    let mut pos = canonical;
    let mut global = [Rotation3::identity(); NUM_JOINTS];
    global[0] = rotations[0];
    for j in 1..NUM_JOINTS {
        let p = JOINT_PARENTS[j].expect("only the pelvis is a root");
        pos[j] = pos[p] + global[p] * (canonical[j] - canonical[p]);
        global[j] = global[p] * rotations[j];
    }
    Skeleton::from_joints(pos).expect("finite joints")
}

/// `n` skeletons with joint rotations drawn uniformly from `ranges`, each
/// paired with its orthographic sample.
pub fn generate_synthetic_poses(n: usize, seed: u64, ranges: &RotationRanges) -> Result<Vec<(Skeleton, PoseSample)>, PoseLiftError> {
    if n == 0 {
        return Err(PoseLiftError::Config("at least one pose is needed".into()));
    }
    let per_joint = ranges.per_joint()?;
    let mut r = rng::seeded(seed);
    let mut draw = |[lo, hi]: [f64; 2]| (lo + (hi - lo) * r.gen::<f64>()).to_radians();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let rotations: [Rotation3<f64>; NUM_JOINTS] = std::array::from_fn(|j| {
            let g = per_joint[j];
            let (x, y, z) = (draw(g.x), draw(g.y), draw(g.z));
            Rotation3::from_euler_angles(x, y, z)
        });
        let skeleton = pose_skeleton(&rotations);
        let sample = PoseSample::from_joints3d(skeleton.joints())?;
        out.push((skeleton, sample));
    }
    Ok(out)
}

/// Lengths of the 20 bones, child by child.
pub fn bone_lengths(joints: &[Vec3; NUM_JOINTS]) -> Vec<f64> {
    (1..NUM_JOINTS).map(|j| (joints[j] - joints[JOINT_PARENTS[j].expect("non-root")]).norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_ranges_give_canonical_pose() {
        let canonical = Skeleton::canonical();
        for (s, _) in generate_synthetic_poses(3, 1, &RotationRanges::zero()).unwrap() {
            for (a, b) in s.joints().iter().zip(canonical.joints()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bone_lengths_preserved() {
        let reference = bone_lengths(Skeleton::canonical().joints());
        for (s, sample) in generate_synthetic_poses(50, 7, &RotationRanges::default()).unwrap() {
            for (a, b) in bone_lengths(s.joints()).iter().zip(&reference) {
                assert!((a - b).abs() < 1e-9);
            }
            assert_eq!(sample.depths[0], 0.0);
        }
    }

    #[test]
    fn seeded() {
        let a = generate_synthetic_poses(5, 3, &RotationRanges::default()).unwrap();
        let b = generate_synthetic_poses(5, 3, &RotationRanges::default()).unwrap();
        assert_eq!(a, b);
        assert!(generate_synthetic_poses(0, 3, &RotationRanges::default()).is_err());
    }

    #[test]
    fn ranges_round_trip_json() {
        let r = RotationRanges::default();
        let back: RotationRanges = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let bad = RotationRanges { joints: [("tail".to_string(), JointRange::default())].into() };
        assert!(generate_synthetic_poses(1, 0, &bad).is_err());
    }
}
