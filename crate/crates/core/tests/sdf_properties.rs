use figuresdf_core::sdf::{iou_grids, mirror_grid, rmse_grids, sample_sdf_points, Axis, SdfGrid};
use figuresdf_core::Vec3;
use proptest::prelude::*;

/// Random grid whose outermost node shell is nonnegative.
fn grid_strategy() -> impl Strategy<Value = SdfGrid> {
    (2usize..6, 2usize..6, 2usize..6, 0.05f64..0.5, any::<u64>()).prop_map(|(nx, ny, nz, spacing, seed)| {
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut values = Vec::with_capacity(nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let shell = i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
                    let v = next() * 2.0 - if shell { 0.0 } else { 1.0 };
                    values.push(v as f32);
                }
            }
        }
        let origin = -Vec3::new((nx - 1) as f64, (ny - 1) as f64, (nz - 1) as f64) * (0.5 * spacing);
        SdfGrid::new([nx, ny, nz], origin, spacing, Vec3::repeat(1.0), values).unwrap()
    })
}

/// Weighted sum over the eight corners, weights as products of per-axis
/// linear weights.
fn weight_product(grid: &SdfGrid, p: &Vec3) -> f64 {
    let dims = grid.dims();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let u = (p[a] - grid.origin()[a]) / grid.spacing();
        let i = (u.floor() as usize).min(dims[a] - 2);
        base[a] = i;
        frac[a] = u - i as f64;
    }
    let mut sum = 0.0;
    for corner in 0..8 {
        let o = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let mut w = 1.0;
        for a in 0..3 {
            w *= if o[a] == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        sum += w * grid.value(base[0] + o[0], base[1] + o[1], base[2] + o[2]);
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trilinear_matches_weight_products(grid in grid_strategy(), seed in any::<u64>()) {
        let (lo, hi) = (grid.domain_min(), grid.domain_max());
        let mut state = seed | 1;
        for _ in 0..1000 {
            let mut p = Vec3::zeros();
            for a in 0..3 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let t = (state >> 11) as f64 / (1u64 << 53) as f64;
                p[a] = lo[a] + t * (hi[a] - lo[a]);
            }
            let s = grid.sample(&p).unwrap();
            prop_assert!((s - weight_product(&grid, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_at_nodes(grid in grid_strategy()) {
        let [nx, ny, nz] = grid.dims();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    prop_assert_eq!(grid.sample(&grid.node_position(i, j, k)).unwrap(), grid.value(i, j, k));
                }
            }
        }
    }

    #[test]
    fn metrics_are_symmetric(a in grid_strategy(), seed in any::<u64>()) {
        let b = SdfGrid::new(
            a.dims(),
            a.origin(),
            a.spacing(),
            a.original_size(),
            a.values().iter().enumerate().map(|(i, v)| if (seed >> (i % 64)) & 1 == 1 { *v * 0.5 } else { *v + 0.3 }).collect(),
        ).unwrap();
        prop_assert_eq!(iou_grids(&a, &b).unwrap(), iou_grids(&b, &a).unwrap());
        prop_assert_eq!(rmse_grids(&a, &b).unwrap(), rmse_grids(&b, &a).unwrap());
        prop_assert_eq!(iou_grids(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(rmse_grids(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mirror_keeps_values_and_shell(grid in grid_strategy(), axis in 0usize..3) {
        let axis = [Axis::X, Axis::Y, Axis::Z][axis];
        let m = mirror_grid(&grid, axis);
        let mut a: Vec<u32> = grid.values().iter().map(|v| v.to_bits()).collect();
        let mut b: Vec<u32> = m.values().iter().map(|v| v.to_bits()).collect();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
        prop_assert!(m.boundary_min() >= 0.0);
        let back = mirror_grid(&m, axis);
        prop_assert_eq!(back.values(), grid.values());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sampling_counts_and_determinism(radius in 0.2f64..0.8, n_pos in 0usize..300, n_neg in 0usize..300, seed in any::<u64>()) {
        let grid = SdfGrid::from_fn_unit_cube(12, Vec3::repeat(1.0), |p| p.norm() - radius).unwrap();
        let a = sample_sdf_points(&grid, n_pos, n_neg, seed).unwrap();
        prop_assert_eq!(a.iter().filter(|s| s.d > 0.0).count(), n_pos);
        prop_assert_eq!(a.iter().filter(|s| s.d < 0.0).count(), n_neg);
        prop_assert_eq!(a, sample_sdf_points(&grid, n_pos, n_neg, seed).unwrap());
    }
}
