//! Effective elastic properties of voxelized microstructures.
//!
//! Periodic voxel homogenization produces a 6x6 stiffness tensor in
//! engineering (Voigt) notation with component order (11, 22, 33, 23, 13,
//! 12). Derived quantities: engineering constants, deviation from the
//! closest fully isotropic tensor, and compression-curve energy metrics.

mod curve;
mod homogenization;
mod isotropy;
mod sweep;

pub use curve::{analyze_compression_curve, CompressionCurve, CurveMetrics};
pub use homogenization::homogenize;
pub use isotropy::{isotropic_tensor, isotropy_deviation};
pub use sweep::{sweep, SweepRow};

use nalgebra::Matrix6;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("Young's modulus must be positive, got {0}")]
    BadYoungsModulus(f64),
    #[error("Poisson ratio must lie in (-1, 0.5), got {0}")]
    BadPoissonRatio(f64),
    #[error("stiffness tensor is singular and cannot be inverted")]
    SingularTensor,
    #[error("homogenization system did not converge; the solid phase cannot transmit load")]
    SingularSystem,
    #[error("grid contains no solid voxels")]
    EmptyGrid,
    #[error("displacement samples must be non-decreasing (sample {0})")]
    MonotoneViolation(usize),
    #[error("need at least two curve samples, got {0}")]
    TooFewSamples(usize),
    #[error("specimen cross-section area must be positive, got {0}")]
    BadArea(f64),
}

/// 6x6 effective stiffness in engineering (Voigt) notation,
/// ordered (11, 22, 33, 23, 13, 12).
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticTensor(pub Matrix6<f64>);

impl ElasticTensor {
    pub fn zeros() -> Self {
        Self(Matrix6::zeros())
    }

    /// Largest relative asymmetry |C_ij - C_ji| / max|C|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self
            .0
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let mut worst = 0.0f64;
        for i in 0..6 {
            for j in (i + 1)..6 {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs() / scale);
            }
        }
        worst
    }

    /// Smallest eigenvalue of the symmetrized tensor.
    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (self.0 + self.0.transpose()) * 0.5;
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Squared Frobenius distance to another tensor.
    pub fn frobenius_distance_squared(&self, other: &ElasticTensor) -> f64 {
        (self.0 - other.0).norm_squared()
    }
}

/// Isotropic base material of the solid phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseMaterial {
    pub young: f64,
    pub poisson: f64,
}

impl BaseMaterial {
    pub fn new(young: f64, poisson: f64) -> Result<Self, AnalysisError> {
        if young <= 0.0 {
            return Err(AnalysisError::BadYoungsModulus(young));
        }
        if poisson <= -1.0 || poisson >= 0.5 {
            return Err(AnalysisError::BadPoissonRatio(poisson));
        }
        Ok(Self { young, poisson })
    }

    /// Stiffness tensor of the base material itself.
    pub fn stiffness(&self) -> ElasticTensor {
        isotropic_tensor(self.young, self.poisson).expect("validated on construction")
    }
}

/// Young's modulus along X and the Poisson ratio for contraction in Y under
/// extension in X, from the compliance tensor.
pub fn engineering_constants(c: &ElasticTensor) -> Result<(f64, f64), AnalysisError> {
    let s = c.0.try_inverse().ok_or(AnalysisError::SingularTensor)?;
    let e_x = 1.0 / s[(0, 0)];
    let nu_xy = -s[(1, 0)] / s[(0, 0)];
    if !e_x.is_finite() || !nu_xy.is_finite() {
        return Err(AnalysisError::SingularTensor);
    }
    Ok((e_x, nu_xy))
}
