use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::place::quaternion_matrix;
use super::skeleton::Skeleton;
use super::AssemblyError;
use crate::camera::{Camera, View};
use crate::mesh::BodyPart;
use crate::render::{TextureAtlas, TextureView};
use crate::sdf::{io::load_sdfg, mirror_grid, Axis, SdfGrid};
use crate::Vec3;

/// A grid placed in the world:
/// `world = R * ((local - pivot) * scale) + translation`.
#[derive(Debug, Clone)]
pub struct PlacedPart {
    pub part: BodyPart,
    pub grid: Arc<SdfGrid>,
    pub translation: Vec3,
    pub rotation: UnitQuaternion<f64>,
    pub scale: Vec3,
    pub pivot: Vec3,
    matrix: Matrix3<f64>,
    aabb: (Vec3, Vec3),
    scale_min: f64,
    scale_max: f64,
    boundary_min: f64,
}

impl PlacedPart {
    pub fn new(
        part: BodyPart,
        grid: Arc<SdfGrid>,
        translation: Vec3,
        rotation: UnitQuaternion<f64>,
        scale: Vec3,
        pivot: Vec3,
    ) -> Result<PlacedPart, AssemblyError> {
        let q = rotation.quaternion();
        let n = (q.w * q.w + q.i * q.i + q.j * q.j + q.k * q.k).sqrt();
        if !((n - 1.0).abs() <= 1e-9) {
            return Err(AssemblyError::InvalidScene(format!("rotation of {part} is not a unit quaternion (norm {n})")));
        }
        if !scale.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(AssemblyError::InvalidScene(format!("scale of {part} must be positive, got {scale:?}")));
        }
        if !translation.iter().chain(pivot.iter()).all(|c| c.is_finite()) {
            return Err(AssemblyError::InvalidScene(format!("placement of {part} is not finite")));
        }
        let mut p = PlacedPart {
            part,
            grid,
            translation,
            rotation,
            scale,
            pivot,
            matrix: quaternion_matrix(&rotation),
            aabb: (Vec3::zeros(), Vec3::zeros()),
            scale_min: scale.min(),
            scale_max: scale.max(),
            boundary_min: 0.0,
        };
        let (lo, hi) = (p.grid.domain_min(), p.grid.domain_max());
        let mut bmin = Vec3::repeat(f64::INFINITY);
        let mut bmax = Vec3::repeat(f64::NEG_INFINITY);
        for c in 0..8 {
            let corner =
                Vec3::new(if c & 1 == 0 { lo.x } else { hi.x }, if c & 2 == 0 { lo.y } else { hi.y }, if c & 4 == 0 { lo.z } else { hi.z });
            let w = p.to_world(&corner);
            bmin = bmin.inf(&w);
            bmax = bmax.sup(&w);
        }
        p.aabb = (bmin, bmax);
        p.boundary_min = p.grid.boundary_min().max(0.0);
        Ok(p)
    }

    pub fn part_index(&self) -> u8 {
        self.part.mask_index()
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        self.aabb
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        let m = &self.matrix;
        let v = (local - self.pivot).component_mul(&self.scale);
        Vec3::new(
            m[(0, 0)] * v.x + m[(0, 1)] * v.y + m[(0, 2)] * v.z,
            m[(1, 0)] * v.x + m[(1, 1)] * v.y + m[(1, 2)] * v.z,
            m[(2, 0)] * v.x + m[(2, 1)] * v.y + m[(2, 2)] * v.z,
        ) + self.translation
    }

    pub fn to_local(&self, world: &Vec3) -> Vec3 {
        let m = &self.matrix;
        let r = world - self.translation;
        let v = Vec3::new(
            m[(0, 0)] * r.x + m[(1, 0)] * r.y + m[(2, 0)] * r.z,
            m[(0, 1)] * r.x + m[(1, 1)] * r.y + m[(2, 1)] * r.z,
            m[(0, 2)] * r.x + m[(1, 2)] * r.y + m[(2, 2)] * r.z,
        );
        v.component_div(&self.scale) + self.pivot
    }

    /// Conservative world distance. Outside the world AABB it is the box
    /// distance plus the smallest boundary value of the grid; otherwise the
    /// grid sample at the local point scaled by the smallest scale (outside)
    /// or the largest (inside). Points beyond the grid domain get the larger
    /// of the two bounds through the nearest domain point.
    pub fn distance(&self, p: &Vec3) -> f64 {
        let box_d = box_distance(p, &self.aabb.0, &self.aabb.1);
        if box_d > 0.0 {
            return box_d + self.boundary_min * self.scale_min;
        }
        let (s, outside) = self.grid.sample_clamped(&self.to_local(p));
        let v = if outside > 0.0 { (outside + self.boundary_min).max(s - outside) } else { s };
        if v >= 0.0 {
            v * self.scale_min
        } else {
            v * self.scale_max
        }
    }

    /// World size of one grid cell along the shortest scaled axis.
    pub fn world_spacing(&self) -> f64 {
        self.grid.spacing() * self.scale_min
    }
}

fn box_distance(p: &Vec3, lo: &Vec3, hi: &Vec3) -> f64 {
    let mut d2 = 0.0;
    for a in 0..3 {
        let e = if p[a] < lo[a] {
            lo[a] - p[a]
        } else if p[a] > hi[a] {
            p[a] - hi[a]
        } else {
            0.0
        };
        d2 += e * e;
    }
    d2.sqrt()
}

/// Placed parts (unique, sorted by part index), the skeleton they hang on
/// and optional view textures.
#[derive(Debug, Clone)]
pub struct FigureScene {
    parts: Vec<PlacedPart>,
    skeleton: Option<Skeleton>,
    textures: Option<TextureAtlas>,
}

impl FigureScene {
    pub fn new(
        mut parts: Vec<PlacedPart>,
        skeleton: Option<Skeleton>,
        textures: Option<TextureAtlas>,
    ) -> Result<FigureScene, AssemblyError> {
        parts.sort_by_key(|p| p.part);
        if let Some(w) = parts.windows(2).find(|w| w[0].part == w[1].part) {
            return Err(AssemblyError::DuplicatePart(w[0].part));
        }
        Ok(FigureScene { parts, skeleton, textures })
    }

    pub fn parts(&self) -> &[PlacedPart] {
        &self.parts
    }

    pub fn skeleton(&self) -> Option<&Skeleton> {
        self.skeleton.as_ref()
    }

    pub fn textures(&self) -> Option<&TextureAtlas> {
        self.textures.as_ref()
    }

    pub fn with_textures(self, textures: Option<TextureAtlas>) -> FigureScene {
        FigureScene { textures, ..self }
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Union of the part AABBs.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.parts.iter().map(PlacedPart::aabb);
        let first = it.next()?;
        Some(it.fold(first, |(lo, hi), (a, b)| (lo.inf(&a), hi.sup(&b))))
    }

    pub fn diagonal(&self) -> f64 {
        self.bounds().map_or(0.0, |(lo, hi)| (hi - lo).norm())
    }

    /// Center and radius of the sphere around the bounds.
    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        self.bounds().map_or((Vec3::zeros(), 1.0), |(lo, hi)| ((lo + hi) * 0.5, (hi - lo).norm() * 0.5))
    }

    /// Camera of one of the four standard views framing the whole scene.
    pub fn view_camera(&self, view: View) -> Camera {
        let (c, r) = self.bounding_sphere();
        view.camera(c, r)
    }

    /// Smallest world grid spacing among the parts.
    pub fn min_world_spacing(&self) -> Option<f64> {
        self.parts.iter().map(PlacedPart::world_spacing).reduce(f64::min)
    }
}

/// Union distance of the scene and the mask index of the nearest part
/// (0 for an empty scene). Ties keep the lower part index.
pub fn scene_distance(scene: &FigureScene, p: &Vec3) -> (f64, u8) {
    let mut best = (f64::INFINITY, 0u8);
    for part in &scene.parts {
        let d = part.distance(p);
        if d < best.0 {
            best = (d, part.part_index());
        }
    }
    best
}

/// One entry of the scene file's part list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartEntry {
    pub name: String,
    pub part_index: u8,
    pub sdf_path: String,
    pub translation: [f64; 3],
    /// `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub scale: [f64; 3],
    #[serde(default)]
    pub pivot: [f64; 3],
    /// Load the grid mirrored along x.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub mirrored: bool,
}

impl PartEntry {
    pub fn from_placed(part: &PlacedPart, sdf_path: String, mirrored: bool) -> PartEntry {
        let q = part.rotation.quaternion();
        PartEntry {
            name: part.part.name().to_string(),
            part_index: part.part_index(),
            sdf_path,
            translation: part.translation.into(),
            rotation: [q.w, q.i, q.j, q.k],
            scale: part.scale.into(),
            pivot: part.pivot.into(),
            mirrored,
        }
    }
}

/// A texture given as a bare image path (camera of the standard view), or
/// with an explicit camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TextureEntry {
    Path(String),
    Full { image: String, camera: Option<Camera> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub parts: Vec<PartEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub textures: Option<BTreeMap<String, TextureEntry>>,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

pub fn save_scene(file: &SceneFile, path: impl AsRef<Path>) -> Result<(), AssemblyError> {
    std::fs::write(path, serde_json::to_string_pretty(file)?)?;
    Ok(())
}

/// Reads a scene file; relative paths are taken relative to its directory.
pub fn load_scene(path: impl AsRef<Path>) -> Result<FigureScene, AssemblyError> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let file: SceneFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let mut cache: HashMap<(PathBuf, bool), Arc<SdfGrid>> = HashMap::new();
    let mut parts = Vec::with_capacity(file.parts.len());
    for e in &file.parts {
        let part: BodyPart = e.name.parse().map_err(AssemblyError::InvalidScene)?;
        if part.mask_index() != e.part_index {
            return Err(AssemblyError::InvalidScene(format!("{} has part_index {}, expected {}", e.name, e.part_index, part.mask_index())));
        }
        let key = (resolve(base, &e.sdf_path), e.mirrored);
        let grid = match cache.get(&key) {
            Some(g) => g.clone(),
            None => {
                let g = load_sdfg(&key.0)?;
                let g = Arc::new(if e.mirrored { mirror_grid(&g, Axis::X) } else { g });
                cache.insert(key, g.clone());
                g
            }
        };
        let [w, x, y, z] = e.rotation;
        let rotation = UnitQuaternion::new_unchecked(Quaternion::new(w, x, y, z));
        parts.push(PlacedPart::new(part, grid, e.translation.into(), rotation, e.scale.into(), e.pivot.into())?);
    }
    let skeleton = file.skeleton_path.as_ref().map(|p| Skeleton::load(resolve(base, p))).transpose()?;
    let scene = FigureScene::new(parts, skeleton, None)?;
    let Some(textures) = &file.textures else { return Ok(scene) };
    let mut views = Vec::with_capacity(4);
    for view in View::ALL {
        let entry =
            textures.get(view.name()).ok_or_else(|| AssemblyError::InvalidScene(format!("texture for view '{view}' is missing")))?;
        let (image, camera) = match entry {
            TextureEntry::Path(p) => (p, None),
            TextureEntry::Full { image, camera } => (image, *camera),
        };
        let file = crate::formats::open(resolve(base, image)).map_err(|e| AssemblyError::InvalidScene(e.to_string()))?;
        let image = crate::formats::read_pam(file).map_err(|e| AssemblyError::InvalidScene(e.to_string()))?;
        views.push(TextureView { view, image, camera: camera.unwrap_or_else(|| scene.view_camera(view)) });
    }
    let atlas = TextureAtlas::new(views).map_err(|e| AssemblyError::InvalidScene(e.to_string()))?;
    Ok(scene.with_textures(Some(atlas)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_grid(r: f64) -> Arc<SdfGrid> {
        Arc::new(SdfGrid::from_fn_unit_cube(33, Vec3::repeat(2.0), |p| p.norm() - r).unwrap())
    }

    fn unit_part(part: BodyPart, t: Vec3) -> PlacedPart {
        PlacedPart::new(part, sphere_grid(0.5), t, UnitQuaternion::identity(), Vec3::repeat(1.0), Vec3::zeros()).unwrap()
    }

    #[test]
    fn identity_placement_samples_grid() {
        let part = unit_part(BodyPart::Head, Vec3::zeros());
        let scene = FigureScene::new(vec![part.clone()], None, None).unwrap();
        let p = Vec3::new(0.1, -0.2, 0.3);
        assert_eq!(scene_distance(&scene, &p), (part.grid.sample(&p).unwrap(), 1));
    }

    #[test]
    fn far_points_use_box_distance() {
        let part = unit_part(BodyPart::Head, Vec3::zeros());
        let rim = part.grid.boundary_min();
        assert!(rim > 0.4);
        let scene = FigureScene::new(vec![part], None, None).unwrap();
        let (d, _) = scene_distance(&scene, &Vec3::new(4.0, 5.0, 0.0));
        assert!((d - (9.0f64 + 16.0).sqrt() - rim).abs() < 1e-12);
    }

    #[test]
    fn just_outside_the_domain_is_not_near_the_surface() {
        let part = unit_part(BodyPart::Head, Vec3::zeros());
        let d = part.distance(&Vec3::new(0.2, 0.1, -1.001));
        assert!(d >= part.grid.boundary_min(), "{d}");
    }

    #[test]
    fn inside_second_part() {
        let a = unit_part(BodyPart::Head, Vec3::new(-3.0, 0.0, 0.0));
        let b = unit_part(BodyPart::Torso, Vec3::new(3.0, 0.0, 0.0));
        let scene = FigureScene::new(vec![a, b], None, None).unwrap();
        let (d, idx) = scene_distance(&scene, &Vec3::new(3.1, 0.0, 0.0));
        assert!(d < 0.0);
        assert_eq!(idx, 2);
    }

    #[test]
    fn duplicate_parts_rejected() {
        let a = unit_part(BodyPart::Head, Vec3::zeros());
        assert!(matches!(FigureScene::new(vec![a.clone(), a], None, None), Err(AssemblyError::DuplicatePart(_))));
    }

    #[test]
    fn scene_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = sphere_grid(0.5);
        crate::sdf::io::save_sdfg(&grid, dir.path().join("head.sdfg")).unwrap();
        let rot = UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3);
        let part = PlacedPart::new(BodyPart::Head, grid, Vec3::new(0.0, 1.6, 0.0), rot, Vec3::new(0.1, 0.12, 0.1), Vec3::zeros()).unwrap();
        let file = SceneFile { parts: vec![PartEntry::from_placed(&part, "head.sdfg".into(), false)], skeleton_path: None, textures: None };
        save_scene(&file, dir.path().join("scene.json")).unwrap();
        let back = load_scene(dir.path().join("scene.json")).unwrap();
        let q = &back.parts()[0];
        assert_eq!(q.translation, part.translation);
        assert_eq!(q.rotation, part.rotation);
        let p = Vec3::new(0.02, 1.61, 0.01);
        assert_eq!(q.distance(&p), part.distance(&p));
    }
}
