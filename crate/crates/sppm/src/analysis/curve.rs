//! Energy metrics of displacement-force compression curves.
//!
//! The effective absorption window covers the elastic and yielding stages:
//! it ends at the first sample whose force falls below a fixed fraction of
//! the running maximum. Absorbed energy is `W = integral F cos(alpha) ds`
//! over that window.

use super::AnalysisError;

/// Fraction of the running force maximum below which the yield window ends.
pub const DEFAULT_DROP_FRACTION: f64 = 0.95;

/// An ordered displacement-force record from a uniaxial compression test.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionCurve {
    /// (displacement mm, force N), displacement non-decreasing.
    pub samples: Vec<(f64, f64)>,
    /// Load angle in radians; 0 is uniaxial compression.
    pub load_angle: f64,
}

impl CompressionCurve {
    pub fn new(samples: Vec<(f64, f64)>) -> Self {
        Self {
            samples,
            load_angle: 0.0,
        }
    }

    pub fn with_load_angle(mut self, alpha: f64) -> Self {
        self.load_angle = alpha;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveMetrics {
    pub yield_strength_mpa: f64,
    pub effective_displacement_mm: f64,
    pub absorbed_energy_j: f64,
    /// Index of the yield sample in the input curve.
    pub yield_index: usize,
}

/// Computes yield strength, effective displacement and absorbed energy.
///
/// `area_mm2` is the specimen cross-section used for the stress conversion
/// (N / mm^2 = MPa). Forces in N and displacements in mm integrate to N*mm;
/// the reported energy is converted to joules.
pub fn analyze_compression_curve(
    curve: &CompressionCurve,
    area_mm2: f64,
) -> Result<CurveMetrics, AnalysisError> {
    analyze_with_drop_fraction(curve, area_mm2, DEFAULT_DROP_FRACTION)
}

pub fn analyze_with_drop_fraction(
    curve: &CompressionCurve,
    area_mm2: f64,
    drop_fraction: f64,
) -> Result<CurveMetrics, AnalysisError> {
    let samples = &curve.samples;
    if samples.len() < 2 {
        return Err(AnalysisError::TooFewSamples(samples.len()));
    }
    if area_mm2 <= 0.0 {
        return Err(AnalysisError::BadArea(area_mm2));
    }
    for (i, pair) in samples.windows(2).enumerate() {
        if pair[1].0 < pair[0].0 {
            return Err(AnalysisError::MonotoneViolation(i + 1));
        }
    }

    // Yield point: the running maximum before the first sustained drop.
    let mut max_idx = 0usize;
    let mut max_force = samples[0].1;
    for (i, &(_, f)) in samples.iter().enumerate().skip(1) {
        if f < drop_fraction * max_force {
            break;
        }
        if f > max_force {
            max_force = f;
            max_idx = i;
        }
    }

    let (s_yield, f_yield) = samples[max_idx];
    let cos_a = curve.load_angle.cos();
    let mut energy_nmm = 0.0;
    for pair in samples.windows(2).take(max_idx) {
        let (s0, f0) = pair[0];
        let (s1, f1) = pair[1];
        energy_nmm += 0.5 * (f0 + f1) * (s1 - s0);
    }
    Ok(CurveMetrics {
        yield_strength_mpa: f_yield / area_mm2,
        effective_displacement_mm: s_yield,
        absorbed_energy_j: energy_nmm * cos_a / 1000.0,
        yield_index: max_idx,
    })
}
