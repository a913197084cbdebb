//! Articulated implicit human figures built from signed distance field grids.
//!
//! The crate covers the whole geometry side of the pipeline:
//!
//! * [`sdf`] holds the uniformly sampled [`SdfGrid`](sdf::SdfGrid), trilinear
//!   sampling, union, normals, balanced point sampling and grid metrics.
//! * [`mesh`] reads and writes OBJ meshes, splits rigged meshes into the 14
//!   body parts, converts meshes to grids and ray casts view images.
//! * [`assembly`] places body-part grids along a 3D skeleton.
//! * [`render`] sphere traces an assembled figure into depth, mask, lit and
//!   textured images and exports oriented point clouds.
//! * [`remesh`] turns point clouds back into triangle meshes by ball pivoting.
//! * [`formats`] reads and writes the PFM/PPM/PGM/PAM/PLY files.

pub mod assembly;
pub mod camera;
pub mod formats;
pub mod image;
pub mod mesh;
pub mod remesh;
pub mod render;
pub mod rng;
pub mod sdf;

/// 3-vector used for positions, directions and extents.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 2-vector used for image-plane coordinates and UVs.
pub type Vec2 = nalgebra::Vector2<f64>;
