use std::collections::HashMap;

use crate::Vec3;

type Cell = [i64; 3];

/// Uniform grid of point indices.
#[derive(Debug, Clone)]
pub struct SpatialHash {
    cell: f64,
    cells: HashMap<Cell, Vec<usize>>,
}

impl SpatialHash {
    pub fn new(points: &[Vec3], cell: f64) -> SpatialHash {
        let mut cells: HashMap<Cell, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        SpatialHash { cell, cells }
    }

    fn key(p: &Vec3, cell: f64) -> Cell {
        [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Indices of points within `radius` of `center`, ascending.
    pub fn within(&self, points: &[Vec3], center: &Vec3, radius: f64) -> Vec<usize> {
        let lo = Self::key(&center.add_scalar(-radius), self.cell);
        let hi = Self::key(&center.add_scalar(radius), self.cell);
        let mut out = Vec::new();
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    if let Some(ids) = self.cells.get(&[x, y, z]) {
                        out.extend(ids.iter().copied().filter(|&i| (points[i] - center).norm() <= radius));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest other point to `points[i]`, searching outward ring by ring.
    pub fn nearest_other(&self, points: &[Vec3], i: usize) -> Option<(usize, f64)> {
        let c = Self::key(&points[i], self.cell);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = self.cells.keys().map(|k| (0..3).map(|a| (k[a] - c[a]).abs()).max().unwrap_or(0)).max().unwrap_or(0);
        for ring in 0..=max_ring {
            if let Some((_, d)) = best {
                // Everything beyond this ring is at least (ring - 1) cells away.
                if d <= (ring - 1) as f64 * self.cell {
                    break;
                }
            }
            for x in -ring..=ring {
                for y in -ring..=ring {
                    for z in -ring..=ring {
                        if x.abs().max(y.abs()).max(z.abs()) != ring {
                            continue;
                        }
                        let Some(ids) = self.cells.get(&[c[0] + x, c[1] + y, c[2] + z]) else { continue };
                        for &j in ids {
                            if j == i {
                                continue;
                            }
                            let d = (points[j] - points[i]).norm();
                            if best.is_none_or(|(bj, bd)| d < bd || (d == bd && j < bj)) {
                                best = Some((j, d));
                            }
                        }
                    }
                }
            }
        }
        best
    }
}
