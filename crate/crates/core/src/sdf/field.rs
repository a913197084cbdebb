use crate::Vec3;

use super::SdfError;

/// Union of two distance fields.
#[inline]
pub fn union_distance(d1: f64, d2: f64) -> f64 {
    d1.min(d2)
}

/// Unit surface normal from central differences of `field` around `p`.
pub fn estimate_normal<F>(field: F, p: &Vec3, eps: f64) -> Result<Vec3, SdfError>
where
    F: Fn(&Vec3) -> f64,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SdfError::InvalidArgument(format!("normal eps must be positive, got {eps}")));
    }
    let mut gradient = Vec3::zeros();
    for axis in 0..3 {
        let mut hi = *p;
        let mut lo = *p;
        hi[axis] += eps;
        lo[axis] -= eps;
        gradient[axis] = field(&hi) - field(&lo);
    }
    let norm = gradient.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(SdfError::DegenerateNormal { point: [p.x, p.y, p.z] });
    }
    Ok(gradient / norm)
}
