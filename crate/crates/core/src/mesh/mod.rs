//! Triangle meshes: OBJ I/O, body-part splitting, mesh to SDF conversion and
//! ray-cast view images.

mod bvh;
mod geometry;
pub mod obj;
mod parts;
mod split;
mod to_sdf;
mod topology;
mod views;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Vec2, Vec3};

pub use bvh::Bvh;
pub use geometry::{closest_point_on_triangle, intersect_triangle};
pub use parts::{BodyPart, BodyPartIndexing};
pub use split::{split_by_groups, SplitResult};
pub use to_sdf::{mesh_to_sdf, mesh_to_sdf_with_frame, LocalFrame};
pub use topology::{boundary_loops, is_watertight};
pub use views::{mesh_view_images, ray_cast, MeshViewImages, RayHit};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("triangle {triangle} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { triangle: usize, index: usize, count: usize },
    #[error("triangle {0} has zero area")]
    DegenerateTriangle(usize),
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("vertex {vertex} has no group with positive weight")]
    UnweightedVertex { vertex: usize },
    #[error("mesh has no vertex group weights")]
    NoGroups,
    #[error("vertex group '{0}' is missing")]
    MissingGroup(String),
    #[error("mesh is not watertight")]
    NotWatertight,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Grid(#[from] crate::sdf::SdfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Per-vertex skinning weights: `weights[v][g]` is the weight of vertex `v`
/// in group `names[g]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexGroups {
    pub names: Vec<String>,
    pub weights: Vec<Vec<f64>>,
}

impl VertexGroups {
    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<VertexGroups, MeshError> {
        Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
    }
}

/// Indexed triangle mesh with optional per-vertex UVs and group weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    uvs: Option<Vec<Vec2>>,
    groups: Option<VertexGroups>,
}

impl TriangleMesh {
    /// Checks index ranges and rejects zero-area triangles.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<TriangleMesh, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange { triangle: t, index, count: vertices.len() });
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            let (e1, e2) = (b - a, c - a);
            let cross = e1.cross(&e2).norm();
            if !(cross > 1e-12 * e1.norm() * e2.norm()) {
                return Err(MeshError::DegenerateTriangle(t));
            }
        }
        Ok(TriangleMesh { vertices, triangles, uvs: None, groups: None })
    }

    pub fn with_uvs(mut self, uvs: Vec<Vec2>) -> Result<TriangleMesh, MeshError> {
        if uvs.len() != self.vertices.len() {
            return Err(MeshError::LengthMismatch { what: "uv list", got: uvs.len(), expected: self.vertices.len() });
        }
        self.uvs = Some(uvs);
        Ok(self)
    }

    pub fn with_groups(mut self, groups: VertexGroups) -> Result<TriangleMesh, MeshError> {
        if groups.weights.len() != self.vertices.len() {
            return Err(MeshError::LengthMismatch { what: "vertex weight list", got: groups.weights.len(), expected: self.vertices.len() });
        }
        for (v, row) in groups.weights.iter().enumerate() {
            if row.len() != groups.names.len() {
                return Err(MeshError::LengthMismatch { what: "vertex weight row", got: row.len(), expected: groups.names.len() });
            }
            if !row.iter().any(|&w| w > 0.0) || row.iter().any(|&w| !(w >= 0.0)) {
                return Err(MeshError::UnweightedVertex { vertex: v });
            }
        }
        self.groups = Some(groups);
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn uvs(&self) -> Option<&[Vec2]> {
        self.uvs.as_deref()
    }

    pub fn groups(&self) -> Option<&VertexGroups> {
        self.groups.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Axis-aligned bounds of the referenced vertices, `None` when empty.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.triangles.iter().flatten().map(|&i| self.vertices[i]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.inf(&p), hi.sup(&p))))
    }

    /// Applies `f` to every vertex position.
    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3) -> TriangleMesh {
        TriangleMesh { vertices: self.vertices.iter().map(f).collect(), ..self.clone() }
    }
}

/// Closed axis-aligned box, handy for fixtures.
pub fn box_mesh(min: Vec3, max: Vec3) -> TriangleMesh {
    let v =
        |x: bool, y: bool, z: bool| Vec3::new(if x { max.x } else { min.x }, if y { max.y } else { min.y }, if z { max.z } else { min.z });
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [3, 6, 2],
        [3, 7, 6],
        [0, 4, 7],
        [0, 7, 3],
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriangleMesh::new(vertices, triangles).expect("box corners are distinct")
}

/// Icosphere with `subdivisions` rounds of 4-way splitting (20 * 4^n faces).
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| center + v * radius).collect();
    TriangleMesh::new(vertices, faces).expect("icosphere faces are non-degenerate")
}
