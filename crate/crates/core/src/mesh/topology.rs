use std::collections::{HashMap, HashSet};

use super::TriangleMesh;

fn directed_edges(triangles: &[[usize; 3]]) -> HashMap<(usize, usize), usize> {
    let mut edges = HashMap::new();
    for &[a, b, c] in triangles {
        for e in [(a, b), (b, c), (c, a)] {
            *edges.entry(e).or_insert(0) += 1;
        }
    }
    edges
}

/// True when every directed edge occurs exactly once and its reverse
/// occurs exactly once. An empty mesh is trivially watertight.
pub fn is_watertight(mesh: &TriangleMesh) -> bool {
    let edges = directed_edges(mesh.triangles());
    edges.iter().all(|(&(a, b), &n)| n == 1 && edges.get(&(b, a)) == Some(&1))
}

/// Closed loops of boundary half-edges (edges without a twin), each given
/// as a vertex sequence following the half-edge direction. Loops that touch
/// at a vertex come out as separate simple cycles.
pub fn boundary_loops(triangles: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let edges = directed_edges(triangles);
    let mut boundary: Vec<(usize, usize)> = edges.keys().copied().filter(|&(a, b)| !edges.contains_key(&(b, a))).collect();
    boundary.sort_unstable();
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in &boundary {
        outgoing.entry(a).or_default().push(b);
    }
    // Pop from the back, so keep the smallest target last.
    for targets in outgoing.values_mut() {
        targets.sort_unstable_by(|x, y| y.cmp(x));
    }
    let mut loops = Vec::new();
    for &(start, _) in &boundary {
        while outgoing.get(&start).is_some_and(|t| !t.is_empty()) {
            let mut path = vec![start];
            let mut on_path: HashSet<usize> = HashSet::from([start]);
            loop {
                let cur = *path.last().unwrap();
                let Some(next) = outgoing.get_mut(&cur).and_then(|t| t.pop()) else {
                    // Closed back at the start, or a dangling chain.
                    break;
                };
                if on_path.contains(&next) {
                    // Cut the cycle off but keep `next` as the walk's tip.
                    let pos = path.iter().position(|&v| v == next).unwrap();
                    let cycle: Vec<usize> = path.drain(pos..).collect();
                    for v in &cycle[1..] {
                        on_path.remove(v);
                    }
                    path.push(next);
                    loops.push(cycle);
                } else {
                    path.push(next);
                    on_path.insert(next);
                }
            }
        }
    }
    loops
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;
    use crate::Vec3;

    #[test]
    fn open_box_has_one_loop() {
        let b = box_mesh(Vec3::repeat(-1.0), Vec3::repeat(1.0));
        assert!(boundary_loops(b.triangles()).is_empty());
        let open: Vec<[usize; 3]> = b.triangles()[2..].to_vec();
        let loops = boundary_loops(&open);
        assert_eq!(loops.len(), 1);
        let mut l = loops[0].clone();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3]);
    }

    #[test]
    fn bowtie_splits_into_two_cycles() {
        let tris = [[0, 1, 2], [0, 3, 4]];
        let loops = boundary_loops(&tris);
        assert_eq!(loops.len(), 2);
        assert!(loops.iter().all(|l| l.len() == 3));
    }

    #[test]
    fn pinch_reached_mid_walk_keeps_every_edge() {
        // Boundary 0-1-2-5 touches the triangle 2-3-4 at vertex 2.
        let tris = [[0, 1, 2], [0, 2, 5], [2, 3, 4]];
        let loops = boundary_loops(&tris);
        assert_eq!(loops.len(), 2);
        assert_eq!(loops.iter().map(Vec::len).sum::<usize>(), 7);
    }

    #[test]
    fn single_triangle_is_not_watertight() {
        let m = TriangleMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        assert!(!is_watertight(&m));
        assert!(is_watertight(&TriangleMesh::default()));
    }
}
