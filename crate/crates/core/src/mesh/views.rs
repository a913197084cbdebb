use rayon::prelude::*;

use super::geometry::{barycentric_weights, intersect_triangle};
use super::{Bvh, MeshError, TriangleMesh};
use crate::camera::Camera;
use crate::image::Image;
use crate::{Vec2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub triangle: usize,
    /// Weights of the triangle's three vertices, in triangle order.
    pub barycentric: [f64; 3],
    pub uv: Option<Vec2>,
}

fn make_hit(mesh: &TriangleMesh, triangle: usize, t: f64, u: f64, v: f64) -> RayHit {
    let barycentric = barycentric_weights(u, v);
    let uv = mesh.uvs().map(|uvs| {
        let [a, b, c] = mesh.triangles()[triangle];
        uvs[a] * barycentric[0] + uvs[b] * barycentric[1] + uvs[c] * barycentric[2]
    });
    RayHit { t, triangle, barycentric, uv }
}

/// Nearest intersection of the ray with the mesh (`t > 1e-9`), lowest
/// triangle index on ties. Scans every triangle.
pub fn ray_cast(mesh: &TriangleMesh, origin: &Vec3, dir: &Vec3) -> Option<RayHit> {
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.corners(t);
        if let Some((tt, u, v)) = intersect_triangle(origin, dir, &a, &b, &c) {
            if best.is_none_or(|(_, bt, _, _)| tt < bt) {
                best = Some((t, tt, u, v));
            }
        }
    }
    best.map(|(tri, t, u, v)| make_hit(mesh, tri, t, u, v))
}

/// Per-pixel ray-cast images of a list of part meshes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshViewImages {
    /// Ray parameter of the nearest hit, 0 for background.
    pub depth: Image<f64>,
    /// Position in the part list + 1 of the nearest part, 0 for background.
    pub mask: Image<u8>,
    /// Interpolated `(u, v, coverage)`; coverage is 1 on hits, 0 elsewhere.
    /// Parts without UVs report `(0, 0, 1)`.
    pub uv: Image<[f64; 3]>,
}

/// Casts one primary ray per pixel against every part. Part `i` of the list
/// is written to the mask as `i + 1`; the nearest hit wins, lower index on
/// ties.
pub fn mesh_view_images(parts: &[TriangleMesh], camera: &Camera, width: usize, height: usize) -> Result<MeshViewImages, MeshError> {
    if parts.is_empty() {
        return Err(MeshError::EmptyInput("no parts to render"));
    }
    let bvhs: Vec<Bvh> = parts.iter().map(Bvh::new).collect();
    let pixels: Vec<(f64, u8, [f64; 3])> = (0..width * height)
        .into_par_iter()
        .map(|idx| {
            let ray = camera.primary_ray(idx % width, idx / width, width, height);
            let mut best: Option<(usize, RayHit)> = None;
            for (p, bvh) in bvhs.iter().enumerate() {
                if let Some((tri, t, u, v)) = bvh.nearest_hit(&ray.origin, &ray.dir) {
                    if best.as_ref().is_none_or(|(_, h)| t < h.t) {
                        best = Some((p, make_hit(&parts[p], tri, t, u, v)));
                    }
                }
            }
            match best {
                None => (0.0, 0, [0.0; 3]),
                Some((p, hit)) => {
                    let uv = hit.uv.unwrap_or_else(Vec2::zeros);
                    (hit.t, (p + 1) as u8, [uv.x, uv.y, 1.0])
                }
            }
        })
        .collect();
    let depth = Image::from_vec(width, height, pixels.iter().map(|p| p.0).collect()).expect("pixel count");
    let mask = Image::from_vec(width, height, pixels.iter().map(|p| p.1).collect()).expect("pixel count");
    let uv = Image::from_vec(width, height, pixels.iter().map(|p| p.2).collect()).expect("pixel count");
    Ok(MeshViewImages { depth, mask, uv })
}
