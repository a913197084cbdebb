use super::{Axis, SdfError, SdfGrid};

fn check_compatible(a: &SdfGrid, b: &SdfGrid) -> Result<(), SdfError> {
    if a.dims() != b.dims() || a.origin() != b.origin() || a.spacing() != b.spacing() {
        return Err(SdfError::IncompatibleGrids(format!(
            "dims {:?} vs {:?}, origin {:?} vs {:?}, spacing {} vs {}",
            a.dims(),
            b.dims(),
            a.origin().as_slice(),
            b.origin().as_slice(),
            a.spacing(),
            b.spacing()
        )));
    }
    Ok(())
}

/// Intersection over union of the negative (inside) node sets. Two empty
/// occupancies agree perfectly and score 1.
pub fn iou_grids(a: &SdfGrid, b: &SdfGrid) -> Result<f64, SdfError> {
    check_compatible(a, b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let (ia, ib) = (x < 0.0, y < 0.0);
        inter += (ia && ib) as usize;
        union += (ia || ib) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Root mean squared node-wise difference.
pub fn rmse_grids(a: &SdfGrid, b: &SdfGrid) -> Result<f64, SdfError> {
    check_compatible(a, b)?;
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// Reverses the node order along `axis`. Metadata is kept, so for grids on a
/// domain centered at the local origin this reflects the field through the
/// plane `axis = 0`.
pub fn mirror_grid(grid: &SdfGrid, axis: Axis) -> SdfGrid {
    let [nx, ny, nz] = grid.dims();
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let (si, sj, sk) = match axis {
                    Axis::X => (nx - 1 - i, j, k),
                    Axis::Y => (i, ny - 1 - j, k),
                    Axis::Z => (i, j, nz - 1 - k),
                };
                values.push(grid.values()[grid.index(si, sj, sk)]);
            }
        }
    }
    grid.with_values(values)
}
