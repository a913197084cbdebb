use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AssemblyError;
use crate::Vec3;

/// Joint names in storage order.
pub const JOINT_NAMES: [&str; 21] = [
    "pelvis",
    "thorax",
    "neck",
    "head",
    "eye_mid",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_wrist",
    "r_wrist",
    "l_hand",
    "r_hand",
    "l_hip",
    "r_hip",
    "l_knee",
    "r_knee",
    "l_ankle",
    "r_ankle",
    "l_foot",
    "r_foot",
];

pub const PELVIS: usize = 0;
/// Height of the canonical figure in meters.
pub const CANONICAL_HEIGHT: f64 = 1.79;

pub fn joint_index(name: &str) -> Option<usize> {
    JOINT_NAMES.iter().position(|&n| n == name)
}

/// Swaps an `l_`/`r_` prefix; other names are returned unchanged.
pub fn mirror_joint_name(name: &str) -> String {
    if let Some(rest) = name.strip_prefix("l_") {
        format!("r_{rest}")
    } else if let Some(rest) = name.strip_prefix("r_") {
        format!("l_{rest}")
    } else {
        name.to_string()
    }
}

/// Parent of each joint in the kinematic tree (`None` for the pelvis).
pub const JOINT_PARENTS: [Option<usize>; 21] = [
    None,
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(1),
    Some(1),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(10),
    Some(0),
    Some(0),
    Some(13),
    Some(14),
    Some(15),
    Some(16),
    Some(17),
    Some(18),
];

/// 21 named 3D joints in meters. The figure faces +z with +y up, so its
/// left side is +x.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: [Vec3; 21],
}

#[derive(Serialize, Deserialize)]
struct SkeletonFile {
    joints: BTreeMap<String, [f64; 3]>,
}

impl Skeleton {
    pub fn from_joints(joints: [Vec3; 21]) -> Result<Skeleton, AssemblyError> {
        if let Some(i) = joints.iter().position(|j| !j.iter().all(|c| c.is_finite())) {
            return Err(AssemblyError::InvalidSkeleton(format!("joint '{}' is not finite", JOINT_NAMES[i])));
        }
        Ok(Skeleton { joints })
    }

    /// Template pose, 1.79 m tall, arms hanging, facing +z.
    pub fn canonical() -> Skeleton {
        let j = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        Skeleton {
            joints: [
                j(0.0, 0.95, 0.0),
                j(0.0, 1.25, 0.0),
                j(0.0, 1.50, 0.0),
                j(0.0, 1.65, 0.0),
                j(0.0, 1.68, 0.09),
                j(0.19, 1.45, 0.0),
                j(-0.19, 1.45, 0.0),
                j(0.21, 1.17, 0.0),
                j(-0.21, 1.17, 0.0),
                j(0.22, 0.92, 0.0),
                j(-0.22, 0.92, 0.0),
                j(0.22, 0.82, 0.0),
                j(-0.22, 0.82, 0.0),
                j(0.10, 0.92, 0.0),
                j(-0.10, 0.92, 0.0),
                j(0.10, 0.50, 0.0),
                j(-0.10, 0.50, 0.0),
                j(0.10, 0.08, 0.0),
                j(-0.10, 0.08, 0.0),
                j(0.10, 0.02, 0.14),
                j(-0.10, 0.02, 0.14),
            ],
        }
    }

    pub fn joints(&self) -> &[Vec3; 21] {
        &self.joints
    }

    pub fn joint(&self, index: usize) -> Vec3 {
        self.joints[index]
    }

    pub fn get(&self, name: &str) -> Result<Vec3, AssemblyError> {
        joint_index(name).map(|i| self.joints[i]).ok_or_else(|| AssemblyError::UnknownJoint(name.to_string()))
    }

    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3) -> Skeleton {
        Skeleton { joints: self.joints.map(|j| f(&j)) }
    }

    /// Reflection through the x = 0 plane with left and right swapped, so
    /// the result is again a valid skeleton.
    pub fn mirrored_x(&self) -> Skeleton {
        let mut joints = self.joints;
        for (i, name) in JOINT_NAMES.iter().enumerate() {
            let src = joint_index(&mirror_joint_name(name)).expect("mirrored names exist");
            let p = self.joints[src];
            joints[i] = Vec3::new(-p.x, p.y, p.z);
        }
        Skeleton { joints }
    }

    pub fn to_map(&self) -> BTreeMap<String, Vec3> {
        JOINT_NAMES.iter().zip(&self.joints).map(|(n, j)| (n.to_string(), *j)).collect()
    }

    /// Builds from a full map of 21 joints, or derives `eye_mid` from
    /// `l_eye`/`r_eye` when it is absent.
    pub fn from_map(raw: &BTreeMap<String, Vec3>) -> Result<Skeleton, AssemblyError> {
        if raw.contains_key("eye_mid") {
            let mut joints = [Vec3::zeros(); 21];
            for (i, name) in JOINT_NAMES.iter().enumerate() {
                joints[i] = *raw.get(*name).ok_or_else(|| AssemblyError::MissingJoint(name.to_string()))?;
            }
            return Skeleton::from_joints(joints);
        }
        derive_extended_joints(raw)
    }

    pub fn from_json(text: &str) -> Result<Skeleton, AssemblyError> {
        let file: SkeletonFile = serde_json::from_str(text)?;
        let raw = file.joints.into_iter().map(|(k, v)| (k, Vec3::from(v))).collect();
        Skeleton::from_map(&raw)
    }

    pub fn to_json(&self) -> String {
        let joints = self.to_map().into_iter().map(|(k, v)| (k, [v.x, v.y, v.z])).collect();
        serde_json::to_string_pretty(&SkeletonFile { joints }).expect("plain data serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Skeleton, AssemblyError> {
        Skeleton::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AssemblyError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Completes a raw joint map (20 base joints plus `l_eye` and `r_eye`) with
/// `eye_mid`, the midpoint of the eyes.
pub fn derive_extended_joints(raw: &BTreeMap<String, Vec3>) -> Result<Skeleton, AssemblyError> {
    let get = |name: &str| raw.get(name).copied().ok_or_else(|| AssemblyError::MissingJoint(name.to_string()));
    let mut joints = [Vec3::zeros(); 21];
    for (i, name) in JOINT_NAMES.iter().enumerate() {
        if *name != "eye_mid" {
            joints[i] = get(name)?;
        }
    }
    let (l, r) = (get("l_eye")?, get("r_eye")?);
    joints[joint_index("eye_mid").expect("known joint")] = (l + r) * 0.5;
    Skeleton::from_joints(joints)
}
