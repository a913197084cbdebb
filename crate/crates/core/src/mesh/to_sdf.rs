use rayon::prelude::*;

use super::topology::is_watertight;
use super::{Bvh, MeshError, TriangleMesh};
use crate::sdf::{SdfError, SdfGrid};
use crate::Vec3;

/// Placement of a grid's local `[-1, 1]^3` domain in world space:
/// `world = center + local * world_per_local`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub center: Vec3,
    pub world_per_local: f64,
}

impl LocalFrame {
    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        self.center + local * self.world_per_local
    }

    pub fn to_local(&self, world: &Vec3) -> Vec3 {
        (world - self.center) / self.world_per_local
    }
}

const RAY_DIRS: [Vec3; 3] = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)];

/// Parity of surface crossings along `dir`. Hits at the same parameter (a
/// ray through a shared edge or vertex) are merged, and a merged group only
/// counts when its facings do not cancel out (a graze).
fn crossings_odd(bvh: &Bvh, p: &Vec3, dir: &Vec3, merge_tol: f64) -> bool {
    let mesh = bvh.mesh();
    let mut hits: Vec<(f64, i32)> = Vec::new();
    bvh.for_each_hit(p, dir, |tri, t, _, _| {
        let [a, b, c] = mesh.corners(tri);
        let facing = (b - a).cross(&(c - a)).dot(dir);
        hits.push((t, if facing > 0.0 { 1 } else { -1 }));
    });
    hits.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut count = 0;
    let mut i = 0;
    while i < hits.len() {
        let mut net = hits[i].1;
        let mut j = i + 1;
        while j < hits.len() && hits[j].0 - hits[j - 1].0 <= merge_tol {
            net += hits[j].1;
            j += 1;
        }
        if net != 0 {
            count += 1;
        }
        i = j;
    }
    count % 2 == 1
}

/// Like [`mesh_to_sdf`], also returning where the local domain sits in the
/// world.
pub fn mesh_to_sdf_with_frame(mesh: &TriangleMesh, resolution: usize, padding: f64) -> Result<(SdfGrid, LocalFrame), MeshError> {
    if resolution < 2 {
        return Err(SdfError::InvalidArgument(format!("resolution must be at least 2, got {resolution}")).into());
    }
    if !(padding >= 0.0 && padding.is_finite()) {
        return Err(SdfError::InvalidArgument(format!("padding must be nonnegative, got {padding}")).into());
    }
    let (lo, hi) = mesh.bounds().ok_or(MeshError::EmptyInput("mesh has no triangles"))?;
    if !is_watertight(mesh) {
        return Err(MeshError::NotWatertight);
    }
    let size = (hi - lo).add_scalar(2.0 * padding);
    let frame = LocalFrame { center: (lo + hi) * 0.5, world_per_local: size.max() * 0.5 };
    let bvh = Bvh::new(mesh);
    let merge_tol = 1e-12 * size.max();
    let zero_tol = 1e-12 * size.max();

    let probe = SdfGrid::from_fn_unit_cube(resolution, size, |_| 0.0)?;
    let n = resolution;
    let values: Vec<f32> = (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
            let p = frame.to_world(&probe.node_position(i, j, k));
            let (d2, _) = bvh.nearest(&p).expect("mesh is nonempty");
            let d = d2.sqrt();
            if d <= zero_tol {
                return 0.0;
            }
            let inside = RAY_DIRS.iter().filter(|dir| crossings_odd(&bvh, &p, dir, merge_tol)).count() >= 2;
            let local = d / frame.world_per_local;
            (if inside { -local } else { local }) as f32
        })
        .collect();
    let grid = SdfGrid::new([n; 3], probe.origin(), probe.spacing(), size, values)?;
    Ok((grid, frame))
}

/// Converts a closed mesh to a `resolution^3` signed distance grid.
///
/// The mesh bounds, inflated by `padding` (world units) on every side, are
/// centered in the local `[-1, 1]^3` domain with the longest side spanning
/// it. Values are exact point-to-triangle distances in local units, negative
/// inside by majority vote of three axis-aligned parity rays. The padded
/// world extent is stored as the original size.
pub fn mesh_to_sdf(mesh: &TriangleMesh, resolution: usize, padding: f64) -> Result<SdfGrid, MeshError> {
    mesh_to_sdf_with_frame(mesh, resolution, padding).map(|(g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, icosphere};

    fn world_value(g: &SdfGrid, f: &LocalFrame, p: Vec3) -> f64 {
        g.sample(&f.to_local(&p)).unwrap() * f.world_per_local
    }

    #[test]
    fn unit_cube_center_and_outside() {
        let cube = box_mesh(Vec3::repeat(-0.5), Vec3::repeat(0.5));
        let (g, f) = mesh_to_sdf_with_frame(&cube, 33, 1.0).unwrap();
        let h = g.spacing() * f.world_per_local;
        assert!((world_value(&g, &f, Vec3::zeros()) + 0.5).abs() <= h);
        assert!((world_value(&g, &f, Vec3::new(1.5, 0.0, 0.0)) - 1.0).abs() <= h);
        assert_eq!(g.original_size(), Vec3::repeat(3.0));
        assert!((g.world_per_local() - f.world_per_local).abs() < 1e-12);
    }

    #[test]
    fn open_cube_is_rejected() {
        let cube = box_mesh(Vec3::repeat(-0.5), Vec3::repeat(0.5));
        let open = TriangleMesh::new(cube.vertices().to_vec(), cube.triangles()[2..].to_vec()).unwrap();
        assert!(matches!(mesh_to_sdf(&open, 8, 0.1), Err(MeshError::NotWatertight)));
        assert!(matches!(mesh_to_sdf(&TriangleMesh::default(), 8, 0.1), Err(MeshError::EmptyInput(_))));
    }

    #[test]
    fn sphere_matches_analytic_field() {
        let r = 0.5;
        let mesh = icosphere(Vec3::zeros(), r, 3);
        let (g, f) = mesh_to_sdf_with_frame(&mesh, 24, 0.2).unwrap();
        let h = g.spacing() * f.world_per_local;
        let [n, _, _] = g.dims();
        let mut good = 0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let p = f.to_world(&g.node_position(i, j, k));
                    let analytic = p.norm() - r;
                    if (g.value(i, j, k) * f.world_per_local - analytic).abs() <= 1.5 * h {
                        good += 1;
                    }
                }
            }
        }
        assert!(good as f64 >= 0.99 * (n * n * n) as f64);
    }

    #[test]
    fn two_disjoint_cubes() {
        let a = box_mesh(Vec3::repeat(-1.0), Vec3::repeat(-0.5));
        let b = box_mesh(Vec3::repeat(0.5), Vec3::repeat(1.0));
        let mut v = a.vertices().to_vec();
        v.extend_from_slice(b.vertices());
        let mut t = a.triangles().to_vec();
        t.extend(b.triangles().iter().map(|tri| tri.map(|i| i + 8)));
        let m = TriangleMesh::new(v, t).unwrap();
        let (g, f) = mesh_to_sdf_with_frame(&m, 17, 0.25).unwrap();
        assert!(world_value(&g, &f, Vec3::repeat(-0.75)) < 0.0);
        assert!(world_value(&g, &f, Vec3::repeat(0.75)) < 0.0);
        assert!(world_value(&g, &f, Vec3::zeros()) > 0.0);
    }
}
