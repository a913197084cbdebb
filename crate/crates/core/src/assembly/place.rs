use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};

use super::scene::{FigureScene, PlacedPart};
use super::skeleton::{mirror_joint_name, Skeleton};
use super::AssemblyError;
use crate::mesh::BodyPart;
use crate::sdf::{mirror_grid, Axis, SdfGrid};
use crate::Vec3;

/// Half-length of a default canonical bone in local units.
const DEFAULT_BONE_HALF: f64 = 0.8;

/// Width and height of a part's 2D mask, in world units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSize {
    pub width: f64,
    pub height: f64,
}

/// How a body part hangs on the skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyPartSpec {
    pub part: BodyPart,
    /// Joint names; two per part, four for the torso
    /// (`l_hip`, `r_hip`, `l_shoulder`, `r_shoulder`).
    pub anchors: Vec<String>,
    /// Take the x-mirrored grid (and anchors) of this part instead of a
    /// grid of our own.
    pub mirrored_from: Option<BodyPart>,
    /// Anchor positions in the grid's local frame.
    pub canonical_anchors: Vec<Vec3>,
}

fn default_anchor_names(part: BodyPart) -> Vec<&'static str> {
    use BodyPart::*;
    match part {
        Head => vec!["neck", "head"],
        Torso => vec!["l_hip", "r_hip", "l_shoulder", "r_shoulder"],
        LUpperArm => vec!["l_shoulder", "l_elbow"],
        RUpperArm => vec!["r_shoulder", "r_elbow"],
        LLowerArm => vec!["l_elbow", "l_wrist"],
        RLowerArm => vec!["r_elbow", "r_wrist"],
        LHand => vec!["l_wrist", "l_hand"],
        RHand => vec!["r_wrist", "r_hand"],
        LUpperLeg => vec!["l_hip", "l_knee"],
        RUpperLeg => vec!["r_hip", "r_knee"],
        LLowerLeg => vec!["l_knee", "l_ankle"],
        RLowerLeg => vec!["r_knee", "r_ankle"],
        LFoot => vec!["l_ankle", "l_foot"],
        RFoot => vec!["r_ankle", "r_foot"],
    }
}

impl BodyPartSpec {
    /// Default anchors, with canonical anchors taken from the canonical
    /// skeleton: bones are centered in the local domain with half-length 0.8,
    /// the torso's four points are centered and scaled to fit within 0.8.
    pub fn canonical(part: BodyPart) -> BodyPartSpec {
        let names = default_anchor_names(part);
        let skeleton = Skeleton::canonical();
        let pts: Vec<Vec3> = names.iter().map(|n| skeleton.get(n).expect("default anchors exist")).collect();
        let canonical_anchors = if pts.len() == 2 {
            let u = (pts[1] - pts[0]).normalize();
            vec![-u * DEFAULT_BONE_HALF, u * DEFAULT_BONE_HALF]
        } else {
            let mean = pts.iter().sum::<Vec3>() / pts.len() as f64;
            let reach = pts.iter().map(|p| (p - mean).amax()).fold(0.0, f64::max);
            pts.iter().map(|p| (p - mean) * (DEFAULT_BONE_HALF / reach)).collect()
        };
        BodyPartSpec { part, anchors: names.into_iter().map(String::from).collect(), mirrored_from: None, canonical_anchors }
    }

    /// Spec that borrows the mirrored grid of `source`.
    pub fn mirrored(part: BodyPart, source: BodyPart) -> BodyPartSpec {
        BodyPartSpec { mirrored_from: Some(source), ..BodyPartSpec::canonical(part) }
    }

    /// The spec describing `self` reflected through x = 0 as `part`.
    fn reflected_as(&self, part: BodyPart, mirrored_from: Option<BodyPart>) -> BodyPartSpec {
        BodyPartSpec {
            part,
            anchors: self.anchors.iter().map(|a| mirror_joint_name(a)).collect(),
            mirrored_from,
            canonical_anchors: self.canonical_anchors.iter().map(|c| Vec3::new(-c.x, c.y, c.z)).collect(),
        }
    }

    fn validate(&self) -> Result<(), AssemblyError> {
        let expected = if self.part == BodyPart::Torso { 4 } else { 2 };
        let err = |msg: String| Err(AssemblyError::InvalidSpec { part: self.part, msg });
        if self.anchors.len() != expected {
            return err(format!("expected {expected} anchors, got {}", self.anchors.len()));
        }
        if self.canonical_anchors.len() != expected {
            return err(format!("expected {expected} canonical anchors, got {}", self.canonical_anchors.len()));
        }
        Ok(())
    }
}

/// Canonical specs for all 14 parts, each with its own grid.
pub fn default_specs() -> Vec<BodyPartSpec> {
    BodyPart::ALL.iter().map(|&p| BodyPartSpec::canonical(p)).collect()
}

/// Unit quaternion rotating unit vector `a` onto unit vector `b` along the
/// shortest arc.
pub fn shortest_arc(a: &Vec3, b: &Vec3) -> UnitQuaternion<f64> {
    let w = 1.0 + a.dot(b);
    let c = a.cross(b);
    let q = if w > 1e-12 {
        Quaternion::new(w, c.x, c.y, c.z)
    } else {
        // Opposite vectors: half turn about any axis normal to `a`.
        let k = a.iamin();
        let mut e = Vec3::zeros();
        e[k] = 1.0;
        let axis = a.cross(&e);
        Quaternion::new(0.0, axis.x, axis.y, axis.z)
    };
    normalized(q)
}

fn normalized(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    let n = (q.w * q.w + q.i * q.i + q.j * q.j + q.k * q.k).sqrt();
    UnitQuaternion::new_unchecked(Quaternion::new(q.w / n, q.i / n, q.j / n, q.k / n))
}

/// Rotation matrix of a unit quaternion, written out term by term.
pub fn quaternion_matrix(q: &UnitQuaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

fn matrix_quaternion(m: &Matrix3<f64>) -> UnitQuaternion<f64> {
    let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let q = if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        Quaternion::new(0.25 * s, (m[(2, 1)] - m[(1, 2)]) / s, (m[(0, 2)] - m[(2, 0)]) / s, (m[(1, 0)] - m[(0, 1)]) / s)
    } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
        let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
        Quaternion::new((m[(2, 1)] - m[(1, 2)]) / s, 0.25 * s, (m[(0, 1)] + m[(1, 0)]) / s, (m[(0, 2)] + m[(2, 0)]) / s)
    } else if m[(1, 1)] > m[(2, 2)] {
        let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
        Quaternion::new((m[(0, 2)] - m[(2, 0)]) / s, (m[(0, 1)] + m[(1, 0)]) / s, 0.25 * s, (m[(1, 2)] + m[(2, 1)]) / s)
    } else {
        let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
        Quaternion::new((m[(1, 0)] - m[(0, 1)]) / s, (m[(0, 2)] + m[(2, 0)]) / s, (m[(1, 2)] + m[(2, 1)]) / s, 0.25 * s)
    };
    normalized(q)
}

/// Orthonormal frame with `y` along `longitudinal` and `x` along the part of
/// `lateral` normal to it.
fn torso_frame(longitudinal: &Vec3, lateral: &Vec3) -> Result<Matrix3<f64>, AssemblyError> {
    let ln = longitudinal.norm();
    if !(ln > 1e-12) {
        return Err(AssemblyError::DegenerateFrame);
    }
    let y = longitudinal / ln;
    let x = lateral - y * lateral.dot(&y);
    let xn = x.norm();
    if !(xn > 1e-9 * lateral.norm()) || !(xn > 0.0) {
        return Err(AssemblyError::DegenerateFrame);
    }
    let x = x / xn;
    let z = x.cross(&y);
    Ok(Matrix3::from_columns(&[x, y, z]))
}

fn mean(points: &[Vec3]) -> Vec3 {
    match points {
        [a, b] => (a + b) * 0.5,
        [a, b, c, d] => ((a + b) + (c + d)) * 0.25,
        _ => points.iter().sum::<Vec3>() / points.len() as f64,
    }
}

/// Width of the grid's interior along `axis` in local units.
fn occupied_width(grid: &SdfGrid, axis: usize) -> f64 {
    let [nx, ny, nz] = grid.dims();
    let (mut lo, mut hi) = (usize::MAX, 0);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if grid.value(i, j, k) < 0.0 {
                    let c = [i, j, k][axis];
                    lo = lo.min(c);
                    hi = hi.max(c);
                }
            }
        }
    }
    if lo > hi {
        0.0
    } else {
        (hi - lo) as f64 * grid.spacing()
    }
}

/// Places one part grid on the skeleton.
///
/// The translation is the mean of the world anchors, pinned to the mean of
/// the canonical anchors (the pivot). The local axis closest to the
/// canonical bone is the longitudinal axis and gets the ratio of world to
/// canonical anchor distance as scale; the two transverse axes use the mask
/// width over the grid's occupied width when a mask size is given, and the
/// longitudinal scale otherwise. Two-anchor parts rotate along the shortest
/// arc from the canonical bone to the world bone; the torso aligns the frame
/// spanned by its hip-to-shoulder and hip-to-hip axes.
pub fn place_part(
    grid: Arc<SdfGrid>,
    spec: &BodyPartSpec,
    skeleton: &Skeleton,
    mask_size: Option<MaskSize>,
) -> Result<PlacedPart, AssemblyError> {
    spec.validate()?;
    let world: Vec<Vec3> = spec.anchors.iter().map(|n| skeleton.get(n)).collect::<Result<_, _>>()?;
    let canon = &spec.canonical_anchors;
    let (canon_axis, world_axis) = if world.len() == 2 {
        (canon[1] - canon[0], world[1] - world[0])
    } else {
        (mean(&canon[2..]) - mean(&canon[..2]), mean(&world[2..]) - mean(&world[..2]))
    };
    if !(world_axis.norm() > 1e-12) {
        return Err(if world.len() == 2 { AssemblyError::DegenerateBone(spec.part) } else { AssemblyError::DegenerateFrame });
    }
    if !(canon_axis.norm() > 1e-12) {
        return Err(AssemblyError::InvalidSpec { part: spec.part, msg: "canonical anchors coincide".into() });
    }
    let long = canon_axis.iamax();
    let s_long = world_axis.norm() / canon_axis.norm();
    let s_trans = mask_size
        .and_then(|m| {
            let w = (0..3).filter(|&a| a != long).map(|a| occupied_width(&grid, a)).fold(0.0, f64::max);
            (w > 0.0 && m.width > 0.0).then(|| m.width / w)
        })
        .unwrap_or(s_long);
    let mut scale = Vec3::repeat(s_trans);
    scale[long] = s_long;

    let rotation = if world.len() == 2 {
        let a = canon_axis.component_mul(&scale).normalize();
        shortest_arc(&a, &world_axis.normalize())
    } else {
        let c = torso_frame(&canon_axis.component_mul(&scale), &(canon[0] - canon[1]).component_mul(&scale))?;
        let w = torso_frame(&world_axis, &(world[0] - world[1]))?;
        matrix_quaternion(&(w * c.transpose()))
    };
    PlacedPart::new(spec.part, grid, mean(&world), rotation, scale, mean(canon))
}

/// Places every spec. Specs with `mirrored_from` take the x-mirrored grid of
/// the source part together with the source's spec reflected (l/r anchor
/// names swapped, canonical x negated). Mask sizes are looked up by the
/// placed part.
pub fn assemble_figure(
    grids: &BTreeMap<BodyPart, Arc<SdfGrid>>,
    skeleton: &Skeleton,
    mask_sizes: &BTreeMap<BodyPart, MaskSize>,
    specs: &[BodyPartSpec],
) -> Result<FigureScene, AssemblyError> {
    let mut parts = Vec::with_capacity(specs.len());
    for spec in specs {
        let (grid, effective) = match spec.mirrored_from {
            Some(src) => {
                let src_grid = grids.get(&src).ok_or(AssemblyError::MissingPart(spec.part))?;
                let src_spec = specs
                    .iter()
                    .find(|s| s.part == src && s.mirrored_from.is_none())
                    .cloned()
                    .unwrap_or_else(|| BodyPartSpec::canonical(src));
                (Arc::new(mirror_grid(src_grid, Axis::X)), src_spec.reflected_as(spec.part, Some(src)))
            }
            None => (grids.get(&spec.part).cloned().ok_or(AssemblyError::MissingPart(spec.part))?, spec.clone()),
        };
        parts.push(place_part(grid, &effective, skeleton, mask_sizes.get(&spec.part).copied())?);
    }
    FigureScene::new(parts, Some(skeleton.clone()), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capsule_grid() -> Arc<SdfGrid> {
        Arc::new(
            SdfGrid::from_fn_unit_cube(17, Vec3::new(0.2, 0.5, 0.2), |p| {
                let y = p.y.clamp(-0.6, 0.6);
                (p - Vec3::new(0.0, y, 0.0)).norm() - 0.3
            })
            .unwrap(),
        )
    }

    fn skeleton_with(f: impl Fn(&str) -> Option<Vec3>) -> Skeleton {
        let base = Skeleton::canonical();
        let mut map = base.to_map();
        for (k, v) in map.iter_mut() {
            if let Some(p) = f(k) {
                *v = p;
            }
        }
        Skeleton::from_map(&map).unwrap()
    }

    fn arm_spec() -> BodyPartSpec {
        BodyPartSpec {
            part: BodyPart::LLowerArm,
            anchors: vec!["l_elbow".into(), "l_wrist".into()],
            mirrored_from: None,
            canonical_anchors: vec![Vec3::new(0.0, 0.5, 0.0), Vec3::new(0.0, -0.5, 0.0)],
        }
    }

    #[test]
    fn aligned_bone_midpoint() {
        let s = skeleton_with(|n| match n {
            "l_elbow" => Some(Vec3::new(0.0, 1.0, 0.0)),
            "l_wrist" => Some(Vec3::new(0.0, 0.7, 0.0)),
            _ => None,
        });
        let p = place_part(capsule_grid(), &arm_spec(), &s, None).unwrap();
        assert!((p.translation - Vec3::new(0.0, 0.85, 0.0)).norm() < 1e-15);
        assert_eq!(p.rotation, UnitQuaternion::identity());
        assert!((p.scale - Vec3::repeat(0.3)).norm() < 1e-15);
    }

    #[test]
    fn double_length_doubles_scale() {
        let mut spec = arm_spec();
        spec.canonical_anchors = vec![Vec3::new(0.0, 0.15, 0.0), Vec3::new(0.0, -0.15, 0.0)];
        let s = skeleton_with(|n| match n {
            "l_elbow" => Some(Vec3::new(0.3, 1.0, 0.0)),
            "l_wrist" => Some(Vec3::new(0.3, 0.4, 0.0)),
            _ => None,
        });
        let p = place_part(capsule_grid(), &spec, &s, None).unwrap();
        assert!((p.scale.y - 2.0).abs() < 1e-15);
    }

    #[test]
    fn coincident_anchors_fail() {
        let s = skeleton_with(|n| (n == "l_wrist").then(|| Skeleton::canonical().get("l_elbow").unwrap()));
        assert!(matches!(place_part(capsule_grid(), &arm_spec(), &s, None), Err(AssemblyError::DegenerateBone(_))));
    }

    #[test]
    fn rotated_bone_maps_anchors() {
        let s = skeleton_with(|n| match n {
            "l_elbow" => Some(Vec3::new(0.1, 1.2, 0.3)),
            "l_wrist" => Some(Vec3::new(0.4, 1.0, 0.1)),
            _ => None,
        });
        let spec = arm_spec();
        let p = place_part(capsule_grid(), &spec, &s, None).unwrap();
        for (c, n) in spec.canonical_anchors.iter().zip(&spec.anchors) {
            assert!((p.to_world(c) - s.get(n).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn torso_frame_is_identity_for_canonical() {
        let spec = BodyPartSpec::canonical(BodyPart::Torso);
        let p = place_part(capsule_grid(), &spec, &Skeleton::canonical(), None).unwrap();
        assert!(p.rotation.angle() < 1e-12);
        let s = skeleton_with(|n| n.ends_with("hip").then(|| Vec3::new(0.0, 0.9, 0.0)));
        assert!(matches!(place_part(capsule_grid(), &spec, &s, None), Err(AssemblyError::DegenerateFrame)));
    }

    #[test]
    fn mask_width_sets_transverse_scale() {
        let g = capsule_grid();
        let p = place_part(g.clone(), &arm_spec(), &Skeleton::canonical(), Some(MaskSize { width: 0.12, height: 0.3 })).unwrap();
        let w = occupied_width(&g, 0);
        assert!((p.scale.x - 0.12 / w).abs() < 1e-12);
        assert_eq!(p.scale.x, p.scale.z);
    }

    #[test]
    fn mirrored_parts_and_missing_grids() {
        let mut grids = BTreeMap::new();
        for p in BodyPart::ALL.iter().filter(|p| !p.is_right()) {
            grids.insert(*p, capsule_grid());
        }
        let specs: Vec<BodyPartSpec> = BodyPart::ALL
            .iter()
            .map(|&p| if p.is_right() { BodyPartSpec::mirrored(p, p.opposite()) } else { BodyPartSpec::canonical(p) })
            .collect();
        let scene = assemble_figure(&grids, &Skeleton::canonical(), &BTreeMap::new(), &specs).unwrap();
        assert_eq!(scene.parts().len(), 14);
        let l = &scene.parts()[BodyPart::LUpperArm.position()];
        let r = &scene.parts()[BodyPart::RUpperArm.position()];
        assert_eq!(r.translation, Vec3::new(-l.translation.x, l.translation.y, l.translation.z));
        grids.remove(&BodyPart::Torso);
        assert!(matches!(
            assemble_figure(&grids, &Skeleton::canonical(), &BTreeMap::new(), &specs),
            Err(AssemblyError::MissingPart(BodyPart::Torso))
        ));
    }
}
