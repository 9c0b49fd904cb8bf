use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::AlignError;
use crate::structmodel::Vec3;

/// Rigid transform `x -> rotation * x + translation` and the RMSD it achieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superposition {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
    pub rmsd: f64,
}

impl Superposition {
    pub fn identity() -> Self {
        Superposition {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
            rmsd: 0.0,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

/// Root-mean-square deviation of paired points, without superposition.
pub fn compute_rmsd(p: &[Vec3], q: &[Vec3]) -> Result<f64, AlignError> {
    if p.len() != q.len() {
        return Err(AlignError::LengthMismatch(p.len(), q.len()));
    }
    if p.is_empty() {
        return Err(AlignError::TooFewPoints(0));
    }
    let sum: f64 = p.iter().zip(q).map(|(a, b)| (a - b).norm_squared()).sum();
    Ok((sum / p.len() as f64).sqrt())
}

/// Least-squares rigid superposition of `mobile` onto `target` (Kabsch).
///
/// The reflection case is folded into the SVD sign correction, so collinear
/// or planar inputs still yield a proper rotation (det = +1).
pub fn kabsch_superpose(mobile: &[Vec3], target: &[Vec3]) -> Result<Superposition, AlignError> {
    if mobile.len() != target.len() {
        return Err(AlignError::LengthMismatch(mobile.len(), target.len()));
    }
    if mobile.len() < 3 {
        return Err(AlignError::TooFewPoints(mobile.len()));
    }
    let pc = centroid(mobile);
    let qc = centroid(target);
    let mut h = Matrix3::zeros();
    for (p, q) in mobile.iter().zip(target) {
        h += (p - pc) * (q - qc).transpose();
    }
    let svd = h.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(AlignError::Numerical);
    };
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    let rotation = v * correction * u.transpose();
    let translation = qc - rotation * pc;

    let sum: f64 = mobile
        .iter()
        .zip(target)
        .map(|(p, q)| (rotation * p + translation - q).norm_squared())
        .sum();
    Ok(Superposition {
        rotation,
        translation,
        rmsd: (sum / mobile.len() as f64).sqrt(),
    })
}
