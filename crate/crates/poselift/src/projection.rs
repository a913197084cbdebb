use figuresdf_core::{Vec2, Vec3};

use crate::{PoseLiftError, NUM_JOINTS};

pub type Joints3 = [Vec3; NUM_JOINTS];
pub type Joints2 = [Vec2; NUM_JOINTS];

/// Drops the depth axis.
pub fn project_orthographic(joints: &Joints3) -> Joints2 {
    joints.map(|p| Vec2::new(p.x, p.y))
}

/// Pinhole projection `f * (x, y) / (z + z0)`.
pub fn project_perspective(joints: &Joints3, focal: f64, center_depth: f64) -> Result<Joints2, PoseLiftError> {
    let mut out = [Vec2::zeros(); NUM_JOINTS];
    for (j, p) in joints.iter().enumerate() {
        let depth = p.z + center_depth;
        if !(depth > 0.0) {
            return Err(PoseLiftError::BehindCamera { joint: j, depth });
        }
        out[j] = Vec2::new(focal * p.x / depth, focal * p.y / depth);
    }
    Ok(out)
}

/// Inverse of [`project_orthographic`] given the depths.
pub fn attach_depths(joints: &Joints2, depths: &[f64; NUM_JOINTS]) -> Joints3 {
    std::array::from_fn(|j| Vec3::new(joints[j].x, joints[j].y, depths[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use figuresdf_core::assembly::Skeleton;

    #[test]
    fn orthographic_drops_depth() {
        let joints = [Vec3::new(1.0, 2.0, 3.0); NUM_JOINTS];
        assert!(project_orthographic(&joints).iter().all(|p| *p == Vec2::new(1.0, 2.0)));
        let shifted = joints.map(|p| p + Vec3::new(0.0, 0.0, 5.0));
        assert_eq!(project_orthographic(&shifted), project_orthographic(&joints));
    }

    #[test]
    fn orthographic_round_trip() {
        let joints = *Skeleton::canonical().joints();
        let depths = joints.map(|p| p.z);
        assert_eq!(attach_depths(&project_orthographic(&joints), &depths), joints);
    }

    #[test]
    fn perspective_formula() {
        let mut joints = [Vec3::zeros(); NUM_JOINTS];
        joints[1] = Vec3::new(0.5, 0.0, 0.0);
        joints[2] = Vec3::new(0.3, -0.2, 1.0);
        let p = project_perspective(&joints, 1.0, 2.0).unwrap();
        assert_eq!(p[0], Vec2::zeros());
        assert_eq!(p[1], Vec2::new(0.25, 0.0));
        let p2 = project_perspective(&joints, 2.0, 2.0).unwrap();
        assert_eq!(p2[2], p[2] * 2.0);
        joints[3].z = -2.0;
        assert!(matches!(project_perspective(&joints, 1.0, 2.0), Err(PoseLiftError::BehindCamera { joint: 3, .. })));
    }
}
