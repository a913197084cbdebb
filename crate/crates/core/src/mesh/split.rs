use std::collections::HashMap;

use super::topology::{boundary_loops, is_watertight};
use super::{BodyPartIndexing, MeshError, TriangleMesh};
use crate::{Vec2, Vec3};

/// Output of [`split_by_groups`]: one mesh per body part (in
/// [`BodyPart::ALL`](super::BodyPart::ALL) order, possibly empty) plus the
/// triangle bookkeeping.
#[derive(Debug, Clone)]
pub struct SplitResult {
    pub parts: Vec<TriangleMesh>,
    /// Triangles added by splitting boundary triangles.
    pub split_added: usize,
    /// Triangles added by closing holes.
    pub fan_added: usize,
}

impl SplitResult {
    pub fn total_triangles(&self) -> usize {
        self.parts.iter().map(TriangleMesh::triangle_count).sum()
    }
}

/// Working vertex list that grows with edge midpoints.
struct Builder {
    positions: Vec<Vec3>,
    uvs: Option<Vec<Vec2>>,
    midpoints: HashMap<(usize, usize), usize>,
}

impl Builder {
    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let (lo, hi) = key;
        self.positions.push((self.positions[lo] + self.positions[hi]) * 0.5);
        if let Some(uvs) = &mut self.uvs {
            uvs.push((uvs[lo] + uvs[hi]) * 0.5);
        }
        let m = self.positions.len() - 1;
        self.midpoints.insert(key, m);
        m
    }
}

/// Per-vertex part label: argmax over the part groups, earliest part on ties.
fn vertex_labels(mesh: &TriangleMesh, parts: &BodyPartIndexing) -> Result<Vec<usize>, MeshError> {
    let groups = mesh.groups().ok_or(MeshError::NoGroups)?;
    let columns = parts
        .names()
        .iter()
        .map(|n| groups.group_index(n).ok_or_else(|| MeshError::MissingGroup(n.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(groups
        .weights
        .iter()
        .map(|row| {
            let mut best = 0;
            for (p, &c) in columns.iter().enumerate() {
                if row[c] > row[columns[best]] {
                    best = p;
                }
            }
            best
        })
        .collect())
}

/// Splits a rigged watertight mesh into 14 closed body-part meshes.
///
/// Vertices take their strongest part group, triangles the majority of their
/// vertices (earliest part when all three differ). Every edge whose endpoints
/// carry different labels is split at its midpoint, so the corners of
/// boundary triangles can be handed to the part of their own vertex. The
/// remaining quad is cut along its shorter diagonal. Each part's holes are
/// then closed with a fan around the loop centroid.
pub fn split_by_groups(mesh: &TriangleMesh, parts: &BodyPartIndexing) -> Result<SplitResult, MeshError> {
    let labels = vertex_labels(mesh, parts)?;
    if !is_watertight(mesh) {
        return Err(MeshError::NotWatertight);
    }
    let mut b = Builder { positions: mesh.vertices().to_vec(), uvs: mesh.uvs().map(<[Vec2]>::to_vec), midpoints: HashMap::new() };
    let mut per_part: Vec<Vec<[usize; 3]>> = vec![Vec::new(); 14];
    let mut split_added = 0;
    for &[a, bb, c] in mesh.triangles() {
        let (la, lb, lc) = (labels[a], labels[bb], labels[c]);
        if la == lb && lb == lc {
            per_part[la].push([a, bb, c]);
        } else if la != lb && lb != lc && la != lc {
            let mab = b.midpoint(a, bb);
            let mbc = b.midpoint(bb, c);
            let mca = b.midpoint(c, a);
            per_part[la].push([a, mab, mca]);
            per_part[lb].push([bb, mbc, mab]);
            per_part[lc].push([c, mca, mbc]);
            per_part[la.min(lb).min(lc)].push([mab, mbc, mca]);
            split_added += 3;
        } else {
            // Rotate so that the odd vertex is last: (x, y, o).
            let [x, y, o] = if la == lb {
                [a, bb, c]
            } else if lb == lc {
                [bb, c, a]
            } else {
                [c, a, bb]
            };
            let (major, minor) = (labels[x], labels[o]);
            let myo = b.midpoint(y, o);
            let mox = b.midpoint(o, x);
            per_part[minor].push([myo, o, mox]);
            let p = &b.positions;
            if (p[x] - p[myo]).norm() <= (p[y] - p[mox]).norm() {
                per_part[major].push([x, y, myo]);
                per_part[major].push([x, myo, mox]);
            } else {
                per_part[major].push([x, y, mox]);
                per_part[major].push([y, myo, mox]);
            }
            split_added += 2;
        }
    }

    let mut fan_added = 0;
    let mut out = Vec::with_capacity(14);
    for tris in per_part {
        let loops = boundary_loops(&tris);
        let mut positions: Vec<Vec3> = Vec::new();
        let mut uvs: Vec<Vec2> = Vec::new();
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut local = |v: usize, positions: &mut Vec<Vec3>, uvs: &mut Vec<Vec2>| {
            *remap.entry(v).or_insert_with(|| {
                positions.push(b.positions[v]);
                if let Some(all) = &b.uvs {
                    uvs.push(all[v]);
                }
                positions.len() - 1
            })
        };
        let mut triangles: Vec<[usize; 3]> = tris.iter().map(|t| t.map(|v| local(v, &mut positions, &mut uvs))).collect();
        for lp in loops {
            let ids: Vec<usize> = lp.iter().map(|&v| local(v, &mut positions, &mut uvs)).collect();
            let k = ids.len() as f64;
            positions.push(ids.iter().map(|&i| positions[i]).sum::<Vec3>() / k);
            if b.uvs.is_some() {
                uvs.push(ids.iter().map(|&i| uvs[i]).sum::<Vec2>() / k);
            }
            let center = positions.len() - 1;
            for i in 0..ids.len() {
                let next = ids[(i + 1) % ids.len()];
                triangles.push([next, ids[i], center]);
            }
            fan_added += ids.len();
        }
        let part = TriangleMesh::new(positions, triangles)?;
        out.push(if b.uvs.is_some() { part.with_uvs(uvs)? } else { part });
    }
    let result = SplitResult { parts: out, split_added, fan_added };
    assert_eq!(result.total_triangles(), mesh.triangle_count() + split_added + fan_added, "split accounting identity");
    Ok(result)
}
