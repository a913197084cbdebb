use rand::Rng;

use crate::rng;
use crate::Vec3;

use super::{SdfError, SdfGrid};

/// Rejection-sampling budget: attempts allowed per requested sample.
pub const REJECTION_ATTEMPTS_PER_SAMPLE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub p: Vec3,
    pub d: f64,
}

/// Draws `n_pos` points with positive and `n_neg` points with negative
/// interpolated distance, uniformly over the grid domain, in acceptance
/// order. Points landing exactly on the surface are discarded.
pub fn sample_sdf_points(grid: &SdfGrid, n_pos: usize, n_neg: usize, seed: u64) -> Result<Vec<SamplePoint>, SdfError> {
    let budget = REJECTION_ATTEMPTS_PER_SAMPLE * (n_pos + n_neg);
    let lo = grid.domain_min();
    let extent = grid.domain_max() - lo;
    let mut rng = rng::seeded(seed);
    let mut out = Vec::with_capacity(n_pos + n_neg);
    let (mut pos, mut neg) = (0usize, 0usize);
    let mut attempts = 0usize;
    while (pos < n_pos || neg < n_neg) && attempts < budget {
        attempts += 1;
        let p = Vec3::new(lo.x + extent.x * rng.gen::<f64>(), lo.y + extent.y * rng.gen::<f64>(), lo.z + extent.z * rng.gen::<f64>());
        let d = grid.sample_in_domain(&p);
        if d > 0.0 && pos < n_pos {
            pos += 1;
            out.push(SamplePoint { p, d });
        } else if d < 0.0 && neg < n_neg {
            neg += 1;
            out.push(SamplePoint { p, d });
        }
    }
    if neg < n_neg {
        return Err(SdfError::InsufficientSamples { sign: Sign::Negative, requested: n_neg, found: neg, attempts });
    }
    if pos < n_pos {
        return Err(SdfError::InsufficientSamples { sign: Sign::Positive, requested: n_pos, found: pos, attempts });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> SdfGrid {
        SdfGrid::from_fn_unit_cube(16, Vec3::repeat(0.2), |p| p.norm() - 0.6).unwrap()
    }

    #[test]
    fn exact_counts_and_signs() {
        let g = ball();
        let pts = sample_sdf_points(&g, 2000, 2000, 7).unwrap();
        assert_eq!(pts.len(), 4000);
        assert_eq!(pts.iter().filter(|s| s.d > 0.0).count(), 2000);
        assert_eq!(pts.iter().filter(|s| s.d < 0.0).count(), 2000);
        for s in &pts {
            assert!(g.sample(&s.p).is_ok());
            assert_eq!(g.sample(&s.p).unwrap(), s.d);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let g = ball();
        let a = sample_sdf_points(&g, 50, 50, 3).unwrap();
        let b = sample_sdf_points(&g, 50, 50, 3).unwrap();
        let c = sample_sdf_points(&g, 50, 50, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_request() {
        assert!(sample_sdf_points(&ball(), 0, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn all_positive_grid_cannot_yield_negatives() {
        let g = SdfGrid::from_fn_unit_cube(8, Vec3::repeat(1.0), |_| 1.0).unwrap();
        match sample_sdf_points(&g, 0, 1, 0) {
            Err(SdfError::InsufficientSamples { sign: Sign::Negative, attempts, .. }) => assert_eq!(attempts, 1000),
            other => panic!("unexpected {other:?}"),
        }
    }
}
