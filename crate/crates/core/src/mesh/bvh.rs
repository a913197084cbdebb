use crate::Vec3;

use super::geometry::{closest_point_on_triangle, intersect_triangle};
use super::TriangleMesh;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// Leaf: range into `order`. Inner: `start` is the left child, `count == 0`.
    start: usize,
    count: usize,
    right: usize,
}

/// Bounding volume hierarchy over a mesh's triangles. Queries return exactly
/// what a scan over all triangles would, only faster.
#[derive(Debug, Clone)]
pub struct Bvh<'a> {
    mesh: &'a TriangleMesh,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

fn box_distance_sq(p: &Vec3, lo: &Vec3, hi: &Vec3) -> f64 {
    let mut d = 0.0;
    for a in 0..3 {
        let e = (lo[a] - p[a]).max(0.0).max(p[a] - hi[a]);
        d += e * e;
    }
    d
}

/// Entry parameter of the ray into the box, if it intersects at t >= 0.
fn ray_box(origin: &Vec3, inv_dir: &Vec3, lo: &Vec3, hi: &Vec3, t_max: f64) -> Option<f64> {
    let mut t0: f64 = 0.0;
    let mut t1 = t_max;
    for a in 0..3 {
        let ta = (lo[a] - origin[a]) * inv_dir[a];
        let tb = (hi[a] - origin[a]) * inv_dir[a];
        let (near, far) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        // NaN from 0 * inf (ray in the slab plane) must not reject the box.
        if near > t0 {
            t0 = near;
        }
        if far < t1 {
            t1 = far;
        }
        // Slack for boxes that are flat along an axis.
        if t0 > t1 * (1.0 + 1e-12) + 1e-12 {
            return None;
        }
    }
    Some(t0)
}

impl<'a> Bvh<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Bvh<'a> {
        let n = mesh.triangle_count();
        let mut bvh = Bvh { mesh, nodes: Vec::new(), order: (0..n).collect() };
        if n > 0 {
            let centroids: Vec<Vec3> = (0..n).map(|t| mesh.corners(t).iter().sum::<Vec3>() / 3.0).collect();
            bvh.build(0, n, &centroids);
        }
        bvh
    }

    fn bounds(&self, start: usize, count: usize) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &t in &self.order[start..start + count] {
            for c in self.mesh.corners(t) {
                lo = lo.inf(&c);
                hi = hi.sup(&c);
            }
        }
        (lo, hi)
    }

    fn build(&mut self, start: usize, count: usize, centroids: &[Vec3]) -> usize {
        let (lo, hi) = self.bounds(start, count);
        let id = self.nodes.len();
        self.nodes.push(Node { lo, hi, start, count, right: 0 });
        if count <= LEAF_SIZE {
            return id;
        }
        let axis = (hi - lo).imax();
        let slice = &mut self.order[start..start + count];
        slice.sort_by(|&a, &b| centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b)));
        let half = count / 2;
        let left = self.build(start, half, centroids);
        let right = self.build(start + half, count - half, centroids);
        self.nodes[id] = Node { lo, hi, start: left, count: 0, right };
        id
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.mesh
    }

    /// Squared distance from `p` to the nearest triangle and its index
    /// (lowest index among equally near triangles).
    pub fn nearest(&self, p: &Vec3) -> Option<(f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if box_distance_sq(p, &node.lo, &node.hi) > best.0 {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = self.mesh.corners(t);
                    let d = (p - closest_point_on_triangle(p, &a, &b, &c)).norm_squared();
                    if d < best.0 || (d == best.0 && t < best.1) {
                        best = (d, t);
                    }
                }
            } else {
                let (l, r) = (node.start, node.right);
                let dl = box_distance_sq(p, &self.nodes[l].lo, &self.nodes[l].hi);
                let dr = box_distance_sq(p, &self.nodes[r].lo, &self.nodes[r].hi);
                // Visit the nearer child first.
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some(best)
    }

    /// Calls `visit(triangle, t, u, v)` for every triangle hit by the ray.
    pub fn for_each_hit(&self, origin: &Vec3, dir: &Vec3, mut visit: impl FnMut(usize, f64, f64, f64)) {
        self.traverse(origin, dir, f64::INFINITY, |t, hit| {
            visit(t, hit.0, hit.1, hit.2);
            f64::INFINITY
        });
    }

    /// Nearest hit `(triangle, t, u, v)`, lowest triangle index on ties.
    pub fn nearest_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<(usize, f64, f64, f64)> {
        let mut best: Option<(usize, f64, f64, f64)> = None;
        self.traverse(origin, dir, f64::INFINITY, |tri, (t, u, v)| {
            let better = match best {
                None => true,
                Some((bt, btt, _, _)) => t < btt || (t == btt && tri < bt),
            };
            if better {
                best = Some((tri, t, u, v));
            }
            best.map_or(f64::INFINITY, |b| b.1)
        });
        best
    }

    /// Walks boxes along the ray; `on_hit` returns the current pruning limit.
    fn traverse(&self, origin: &Vec3, dir: &Vec3, mut limit: f64, mut on_hit: impl FnMut(usize, (f64, f64, f64)) -> f64) {
        if self.nodes.is_empty() {
            return;
        }
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            match ray_box(origin, &inv_dir, &node.lo, &node.hi, f64::INFINITY) {
                Some(t0) if t0 <= limit * (1.0 + 1e-12) => {}
                _ => continue,
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = self.mesh.corners(t);
                    if let Some(hit) = intersect_triangle(origin, dir, &a, &b, &c) {
                        limit = on_hit(t, hit);
                    }
                }
            } else {
                stack.push(node.right);
                stack.push(node.start);
            }
        }
    }
}
