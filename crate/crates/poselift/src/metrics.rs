use figuresdf_core::Vec3;

use crate::PoseLiftError;

pub const PCK_THRESHOLD_MM: f64 = 150.0;

/// Root mean squared depth error, meters in, millimeters out.
pub fn rmse_mm(pred: &[f64], truth: &[f64]) -> Result<f64, PoseLiftError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(PoseLiftError::Shape(format!("{} predicted vs {} true values", pred.len(), truth.len())));
    }
    let sq = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
    Ok((sq / pred.len() as f64).sqrt() * 1000.0)
}

/// Percentage of joints whose 3D error is strictly below `threshold_mm`.
pub fn pck(pred: &[Vec3], truth: &[Vec3], threshold_mm: f64) -> Result<f64, PoseLiftError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(PoseLiftError::Shape(format!("{} predicted vs {} true joints", pred.len(), truth.len())));
    }
    let limit = threshold_mm / 1000.0;
    let hits = pred.iter().zip(truth).filter(|(p, t)| (*p - *t).norm() < limit).count();
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let t = vec![Vec3::new(0.1, 0.2, 0.3); 21];
        assert_eq!(pck(&t, &t, PCK_THRESHOLD_MM).unwrap(), 100.0);
        assert_eq!(rmse_mm(&[0.1, 0.2], &[0.1, 0.2]).unwrap(), 0.0);
    }

    #[test]
    fn one_joint_off() {
        let t = vec![Vec3::zeros(); 21];
        let mut p = t.clone();
        p[4].z = 0.2;
        assert!((pck(&p, &t, PCK_THRESHOLD_MM).unwrap() - 100.0 * 20.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_strict() {
        let t = vec![Vec3::zeros(); 21];
        let p = vec![Vec3::new(0.15, 0.0, 0.0); 21];
        assert_eq!(pck(&p, &t, PCK_THRESHOLD_MM).unwrap(), 0.0);
    }

    #[test]
    fn rmse_in_millimeters() {
        assert!((rmse_mm(&[0.0, 0.0], &[0.003, 0.004]).unwrap() - (12.5f64).sqrt()).abs() < 1e-12);
        assert!(rmse_mm(&[0.0], &[]).is_err());
    }
}
