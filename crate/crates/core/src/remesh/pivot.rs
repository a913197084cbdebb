use std::collections::{HashMap, HashSet, VecDeque};

use super::hash::SpatialHash;
use super::{OrientedPointCloud, RemeshError};
use crate::mesh::TriangleMesh;
use crate::Vec3;

/// Relative tolerance of the empty-ball test: a point counts as inside when
/// it is closer than `r * (1 - EMPTY_BALL_SLACK)` to the ball center.
pub const EMPTY_BALL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BallPivotResult {
    /// Vertices are the used input points, in input order.
    pub mesh: TriangleMesh,
    /// Input index of every output vertex.
    pub source_indices: Vec<usize>,
    /// Ball radius each triangle was created with.
    pub creation_radii: Vec<f64>,
    pub seeds: usize,
}

impl BallPivotResult {
    pub fn used_points(&self) -> usize {
        self.source_indices.len()
    }
}

/// Center of the radius-`r` ball touching `a`, `b`, `c` on the side of the
/// face normal `(b - a) x (c - a)`. `None` when the triangle is degenerate or
/// its circumradius exceeds `r`.
pub fn ball_center(a: &Vec3, b: &Vec3, c: &Vec3, r: f64) -> Option<Vec3> {
    let (u, v) = (b - a, c - a);
    let w = u.cross(&v);
    let w2 = w.norm_squared();
    if !(w2 > 1e-24 * u.norm_squared() * v.norm_squared()) {
        return None;
    }
    let cc = a + (v.cross(&w) * u.norm_squared() + w.cross(&u) * v.norm_squared()) / (2.0 * w2);
    let h2 = r * r - (cc - a).norm_squared();
    if h2 < 0.0 {
        return None;
    }
    Some(cc + w * (h2.sqrt() / w2.sqrt()))
}

/// Twice the median nearest-neighbor distance.
pub fn default_radius(cloud: &OrientedPointCloud) -> Result<f64, RemeshError> {
    let pts = cloud.points();
    if pts.len() < 2 {
        return Err(RemeshError::InsufficientPoints(pts.len()));
    }
    let (lo, hi) = pts.iter().fold((pts[0], pts[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
    let diag = (hi - lo).norm();
    if !(diag > 0.0) {
        return Err(RemeshError::InvalidRadii("all points coincide".into()));
    }
    let hash = SpatialHash::new(pts, diag / (pts.len() as f64).sqrt());
    let mut nn: Vec<f64> = (0..pts.len()).filter_map(|i| hash.nearest_other(pts, i).map(|(_, d)| d)).collect();
    nn.sort_by(f64::total_cmp);
    let median = if nn.len() % 2 == 1 { nn[nn.len() / 2] } else { 0.5 * (nn[nn.len() / 2 - 1] + nn[nn.len() / 2]) };
    if !(median > 0.0) {
        return Err(RemeshError::InvalidRadii("median point spacing is zero".into()));
    }
    Ok(2.0 * median)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeState {
    Active,
    Boundary,
    Frozen,
}

#[derive(Debug, Clone, Copy)]
struct FrontEdge {
    opposite: usize,
    state: EdgeState,
}

struct Pivoter<'a> {
    points: &'a [Vec3],
    normals: &'a [Vec3],
    hash: SpatialHash,
    r: f64,
    /// Directed edges keyed as they run in their triangle.
    front: HashMap<(usize, usize), FrontEdge>,
    queue: VecDeque<(usize, usize)>,
    used_edges: HashSet<(usize, usize)>,
    used: Vec<bool>,
    open_edges: Vec<u32>,
    triangles: Vec<[usize; 3]>,
    radii: Vec<f64>,
    seed_cursor: usize,
    seeds: usize,
}

impl<'a> Pivoter<'a> {
    fn normals_agree(&self, tri: [usize; 3]) -> bool {
        let [a, b, c] = tri.map(|i| self.points[i]);
        let n = (b - a).cross(&(c - a));
        tri.iter().all(|&i| n.dot(&self.normals[i]) > 0.0)
    }

    fn ball_is_empty(&self, center: &Vec3, tri: [usize; 3]) -> bool {
        let limit = self.r * (1.0 - EMPTY_BALL_SLACK);
        self.hash.within(self.points, center, limit).iter().all(|i| tri.contains(i) || (self.points[*i] - center).norm() >= limit)
    }

    fn center(&self, tri: [usize; 3]) -> Option<Vec3> {
        let [a, b, c] = tri.map(|i| self.points[i]);
        ball_center(&a, &b, &c, self.r)
    }

    fn edges(tri: [usize; 3]) -> [(usize, usize); 3] {
        [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
    }

    fn add_triangle(&mut self, tri: [usize; 3]) {
        for (k, (x, y)) in Self::edges(tri).into_iter().enumerate() {
            self.used_edges.insert((x, y));
            let twin = self.front.get_mut(&(y, x)).filter(|e| e.state != EdgeState::Frozen);
            if let Some(twin) = twin {
                twin.state = EdgeState::Frozen;
                self.front.insert((x, y), FrontEdge { opposite: tri[(k + 2) % 3], state: EdgeState::Frozen });
                self.open_edges[x] -= 1;
                self.open_edges[y] -= 1;
            } else {
                self.front.insert((x, y), FrontEdge { opposite: tri[(k + 2) % 3], state: EdgeState::Active });
                self.queue.push_back((x, y));
                self.open_edges[x] += 1;
                self.open_edges[y] += 1;
            }
        }
        for i in tri {
            self.used[i] = true;
        }
        self.triangles.push(tri);
        self.radii.push(self.r);
    }

    /// A new triangle may not touch an interior vertex, repeat a directed
    /// edge, or give any edge a third triangle.
    fn can_attach(&self, tri: [usize; 3]) -> bool {
        if tri.iter().any(|&i| self.used[i] && self.open_edges[i] == 0) {
            return false;
        }
        Self::edges(tri).iter().all(|&(x, y)| {
            !self.used_edges.contains(&(x, y))
                && (!self.used_edges.contains(&(y, x)) || self.front.get(&(y, x)).is_some_and(|e| e.state != EdgeState::Frozen))
        })
    }

    fn try_seed(&mut self) -> bool {
        while self.seed_cursor < self.points.len() {
            let i = self.seed_cursor;
            self.seed_cursor += 1;
            if self.used[i] {
                continue;
            }
            let pi = self.points[i];
            let mut near: Vec<(f64, usize)> = self
                .hash
                .within(self.points, &pi, 2.0 * self.r)
                .into_iter()
                .filter(|&j| j != i && !self.used[j])
                .map(|j| ((self.points[j] - pi).norm(), j))
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (a, &(_, j)) in near.iter().enumerate() {
                for &(_, k) in &near[a + 1..] {
                    let n = (self.points[j] - pi).cross(&(self.points[k] - pi));
                    let tri = if n.dot(&self.normals[i]) >= 0.0 { [i, j, k] } else { [i, k, j] };
                    if !self.normals_agree(tri) {
                        continue;
                    }
                    let Some(c) = self.center(tri) else { continue };
                    if self.ball_is_empty(&c, tri) {
                        self.add_triangle(tri);
                        self.seeds += 1;
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Rolls the ball of the triangle on edge `(i, j)` over the edge and
    /// returns the first valid point it lands on.
    fn pivot(&self, i: usize, j: usize, opposite: usize) -> Option<usize> {
        let (pi, pj) = (self.points[i], self.points[j]);
        let c = self.center([i, j, opposite])?;
        let m = 0.5 * (pi + pj);
        let axis = (pj - pi).normalize();
        let u = c - m;
        let mut candidates: Vec<(f64, usize, Vec3)> = Vec::new();
        for p in self.hash.within(self.points, &m, 2.0 * self.r) {
            if p == i || p == j || p == opposite {
                continue;
            }
            let Some(cp) = self.center([j, i, p]) else { continue };
            let v = cp - m;
            let mut theta = axis.dot(&u.cross(&v)).atan2(u.dot(&v));
            if theta < 0.0 {
                theta += std::f64::consts::TAU;
            }
            candidates.push((theta, p, cp));
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.into_iter().find_map(|(_, p, cp)| {
            let tri = [j, i, p];
            (self.can_attach(tri) && self.normals_agree(tri) && self.ball_is_empty(&cp, tri)).then_some(p)
        })
    }

    fn expand(&mut self) {
        while let Some((i, j)) = self.queue.pop_front() {
            let Some(edge) = self.front.get(&(i, j)).copied() else { continue };
            if edge.state != EdgeState::Active {
                continue;
            }
            match self.pivot(i, j, edge.opposite) {
                Some(p) => self.add_triangle([j, i, p]),
                None => {
                    if let Some(e) = self.front.get_mut(&(i, j)) {
                        e.state = EdgeState::Boundary;
                    }
                }
            }
        }
    }

    fn run_radius(&mut self, r: f64) {
        self.r = r;
        self.hash = SpatialHash::new(self.points, 2.0 * r);
        self.seed_cursor = 0;
        let mut boundary: Vec<(usize, usize)> =
            self.front.iter().filter(|(_, e)| e.state == EdgeState::Boundary).map(|(&k, _)| k).collect();
        boundary.sort_unstable();
        for key in boundary {
            if let Some(e) = self.front.get_mut(&key) {
                e.state = EdgeState::Active;
            }
            self.queue.push_back(key);
        }
        loop {
            self.expand();
            if !self.try_seed() {
                break;
            }
        }
    }
}

/// Ball-pivoting reconstruction over increasing radii. Finding no seed at
/// any radius yields an empty mesh.
pub fn ball_pivot(cloud: &OrientedPointCloud, radii: &[f64]) -> Result<BallPivotResult, RemeshError> {
    if cloud.len() < 3 {
        return Err(RemeshError::InsufficientPoints(cloud.len()));
    }
    if radii.is_empty() {
        return Err(RemeshError::InvalidRadii("no radius given".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(RemeshError::InvalidRadii(format!("radius {r} is not positive")));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(RemeshError::InvalidRadii("radii must be strictly increasing".into()));
    }
    let n = cloud.len();
    let mut pv = Pivoter {
        points: cloud.points(),
        normals: cloud.normals(),
        hash: SpatialHash::new(&[], 1.0),
        r: radii[0],
        front: HashMap::new(),
        queue: VecDeque::new(),
        used_edges: HashSet::new(),
        used: vec![false; n],
        open_edges: vec![0; n],
        triangles: Vec::new(),
        radii: Vec::new(),
        seed_cursor: 0,
        seeds: 0,
    };
    for &r in radii {
        pv.run_radius(r);
    }

    let mut remap = vec![usize::MAX; n];
    let mut source_indices = Vec::new();
    for (i, _) in pv.used.iter().enumerate().filter(|(_, &u)| u) {
        remap[i] = source_indices.len();
        source_indices.push(i);
    }
    let vertices = source_indices.iter().map(|&i| cloud.points()[i]).collect();
    let triangles = pv.triangles.iter().map(|t| t.map(|i| remap[i])).collect();
    Ok(BallPivotResult { mesh: TriangleMesh::new(vertices, triangles)?, source_indices, creation_radii: pv.radii, seeds: pv.seeds })
}
