//! End-to-end generation of one valid unit cell at a target porosity.
//!
//! The search runs in two stages: the pore count `n` comes from a fitted
//! linear porosity model (coarse), then the surface-to-interior band depth
//! `d` is tuned by bisection (fine, to the porosity tolerance). Cells that
//! fail solid-connectivity validation or the face-periodicity check are
//! regenerated with the next seed in a deterministic sequence.

use std::fmt::Write as _;

use thiserror::Error;

use crate::connectivity::{
    bridge_surface_to_interior, build_degree_bounded_network, ConnectivityError, PoreGraph,
};
use crate::field::{
    Axis, CombinedField, FaceSide, FieldError, Pore, RegionTag, Tunnel, Vec3,
    DEFAULT_CUTOFF_EPSILON,
};
use crate::sampling::{
    default_min_distance, instantiate_cell_pores, sample_face_pattern, sample_interior_adaptive,
    CellPartition, FacePattern, SamplingConfig, SamplingError,
};
use crate::seed;
use crate::voxel::{validate_solid, voxelize, ValidationReport, VoxelError, VoxelGrid};

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("target porosity {0} outside the supported range [0.2, 0.8]")]
    TargetOutOfRange(f64),
    #[error("pore-count fit needs at least two distinct n values")]
    DegenerateFit,
    #[error("porosity {rho_lo} at the shallow end is below {rho_hi} at the deep end; band depth is not a decreasing knob here")]
    MonotoneProbeFailed { rho_lo: f64, rho_hi: f64 },
    #[error("target porosity misses both interval endpoints on the same side (rho range [{rho_hi}, {rho_lo}])")]
    TargetUnreachable { rho_lo: f64, rho_hi: f64 },
    #[error("no valid cell within {attempts} attempts")]
    GenerationExhausted { attempts: usize },
    #[error("attempt produced an invalid cell: {0:?}")]
    AttemptInvalid(InvalidReason),
    #[error("design file is malformed: {0}")]
    BadDesignFile(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Connectivity(#[from] ConnectivityError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Voxel(#[from] VoxelError),
}

/// Why a generation attempt was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidReason {
    /// A removed solid component touched the outermost voxel layer.
    SurfaceComponentRemoved,
    /// Opposite-face voxel layers mismatched beyond the budget.
    FaceMismatch,
}

/// Target and parameters for one unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub target_porosity: f64,
    pub omega: f64,
    pub mu: f64,
    pub level_c: f64,
    pub cell_side: f64,
    pub seed: u64,
    pub porosity_tolerance: f64,
    pub max_attempts: usize,
    pub cutoff_epsilon: f64,
}

impl DesignSpec {
    pub fn new(
        target_porosity: f64,
        omega: f64,
        mu: f64,
        level_c: f64,
        seed: u64,
    ) -> Result<Self, UnitError> {
        if !(0.2..=0.8).contains(&target_porosity) {
            return Err(UnitError::TargetOutOfRange(target_porosity));
        }
        Ok(Self {
            target_porosity,
            omega,
            mu,
            level_c,
            cell_side: 1.0,
            seed,
            porosity_tolerance: 0.001,
            max_attempts: 150,
            cutoff_epsilon: DEFAULT_CUTOFF_EPSILON,
        })
    }

    /// Radius of the sphere where an isolated pore kernel crosses the level
    /// value: the natural length scale of one pore.
    pub fn pore_radius(&self) -> f64 {
        Pore::level_radius(self.omega, self.level_c)
    }
}

/// Linear porosity model rho ~ slope * n + intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct PoreCountModel {
    pub slope: f64,
    pub intercept: f64,
    pub samples: Vec<(usize, f64)>,
}

impl PoreCountModel {
    pub fn predict(&self, n: usize) -> f64 {
        self.slope * n as f64 + self.intercept
    }

    /// Pore count whose predicted porosity is closest to `target`, rounded
    /// to the nearest integer and clamped to at least 1.
    pub fn invert(&self, target: f64) -> Result<usize, UnitError> {
        if self.slope <= 0.0 {
            return Err(UnitError::DegenerateFit);
        }
        let n = ((target - self.intercept) / self.slope).round();
        Ok(n.max(1.0) as usize)
    }
}

/// Ordinary least-squares fit of porosity against pore count.
pub fn fit_pore_count_model(samples: &[(usize, f64)]) -> Result<PoreCountModel, UnitError> {
    let mut distinct: Vec<usize> = samples.iter().map(|s| s.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(UnitError::DegenerateFit);
    }
    let k = samples.len() as f64;
    let sx: f64 = samples.iter().map(|s| s.0 as f64).sum();
    let sy: f64 = samples.iter().map(|s| s.1).sum();
    let sxx: f64 = samples.iter().map(|s| (s.0 as f64) * (s.0 as f64)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 as f64) * s.1).sum();
    let denom = k * sxx - sx * sx;
    let slope = (k * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / k;
    Ok(PoreCountModel {
        slope,
        intercept,
        samples: samples.to_vec(),
    })
}

/// Bisection on the band depth until the porosity reaches the target within
/// `tolerance` or the interval width drops below `1e-6 * cell_side`.
///
/// `rho` must be (weakly) decreasing over the interval; the endpoints are
/// probed first. Returns the best depth evaluated.
pub fn tune_band_depth(
    mut rho: impl FnMut(f64) -> Result<f64, UnitError>,
    target: f64,
    tolerance: f64,
    interval: (f64, f64),
    cell_side: f64,
) -> Result<f64, UnitError> {
    let (mut lo, mut hi) = interval;
    let mut rho_lo = rho(lo)?;
    if (rho_lo - target).abs() <= tolerance {
        return Ok(lo);
    }
    let rho_hi = rho(hi)?;
    if (rho_hi - target).abs() <= tolerance {
        return Ok(hi);
    }
    if rho_lo < rho_hi {
        return Err(UnitError::MonotoneProbeFailed { rho_lo, rho_hi });
    }
    if (rho_lo - target).signum() == (rho_hi - target).signum() {
        return Err(UnitError::TargetUnreachable { rho_lo, rho_hi });
    }
    let mut best = if (rho_lo - target).abs() < (rho_hi - target).abs() {
        (lo, rho_lo)
    } else {
        (hi, rho_hi)
    };
    while hi - lo >= 1e-6 * cell_side {
        let mid = 0.5 * (lo + hi);
        let r = rho(mid)?;
        if (r - target).abs() <= tolerance {
            return Ok(mid);
        }
        if (r - target).abs() < (best.1 - target).abs() {
            best = (mid, r);
        }
        // Keep the half whose endpoints straddle the target.
        if (rho_lo - target).signum() != (r - target).signum() {
            hi = mid;
        } else {
            lo = mid;
            rho_lo = r;
        }
    }
    Ok(best.0)
}

/// One generated unit cell with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCell {
    pub spec: DesignSpec,
    pub pores: Vec<Pore>,
    pub tunnels: Vec<Tunnel>,
    pub band_depth: f64,
    pub measured_porosity: f64,
    pub face_colors: [u8; 3],
    /// Seed of the attempt that produced this cell.
    pub attempt_seed: u64,
    pub n_interior: usize,
}

impl UnitCell {
    /// The cell's implicit field.
    pub fn field(&self) -> CombinedField {
        CombinedField::new(
            self.pores.clone(),
            self.tunnels.clone(),
            self.spec.cutoff_epsilon,
            self.spec.cell_side,
        )
        .expect("a constructed cell is always a valid field")
    }
}

/// Summary statistics of a repeatability study.
#[derive(Debug, Clone, PartialEq)]
pub struct PorosityStats {
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std_dev: f64,
}

impl PorosityStats {
    pub fn from_values(values: Vec<f64>) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
        Self {
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean,
            std_dev: var.sqrt(),
            values,
        }
    }
}

/// Generation policy: measurement resolution, tunnel degree bounds and the
/// face-periodicity budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDesigner {
    /// Porosity measurement resolution per axis.
    pub resolution: usize,
    pub degree_lower: usize,
    pub degree_upper: usize,
    /// Accepted fraction of mismatching outer-layer voxels between opposite
    /// faces, checked at 32^3.
    pub epsilon_face: f64,
    /// Dart-throwing distance as a fraction of the mean interior spacing.
    pub interior_spacing_factor: f64,
    /// Trace attempt outcomes to stderr.
    pub verbose: bool,
}

impl Default for UnitDesigner {
    fn default() -> Self {
        Self {
            resolution: 64,
            degree_lower: 3,
            degree_upper: 5,
            epsilon_face: 0.01,
            interior_spacing_factor: 0.7,
            verbose: false,
        }
    }
}

struct AttemptResult {
    pores: Vec<Pore>,
    tunnels: Vec<Tunnel>,
    grid: VoxelGrid,
    report: ValidationReport,
    porosity: f64,
    n_interior: usize,
}

impl UnitDesigner {
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }

    /// Face pore count whose expected void volume stays within budget for
    /// the target porosity, so the interior keeps room to tune.
    pub fn suggested_face_count(&self, spec: &DesignSpec) -> usize {
        let r = spec.pore_radius();
        // Half-ball per face pore plus an allowance for in-face tunnels.
        let per_pore = 2.0 / 3.0 * std::f64::consts::PI * r.powi(3) * 1.25;
        let budget = 0.8 * spec.target_porosity * spec.cell_side.powi(3);
        let n = (budget / (6.0 * per_pore)).floor() as usize;
        n.clamp(1, 8)
    }

    /// Samples one shared boundary pattern and builds its in-face tunnel
    /// network.
    pub fn face_pattern(
        &self,
        spec: &DesignSpec,
        color: u8,
        n_face: usize,
        pattern_seed: u64,
    ) -> Result<FacePattern, UnitError> {
        let l = face_min_distance(spec, n_face);
        let margin = l.max(edge_leak_margin(spec));
        let mut cfg = SamplingConfig::new(0, n_face, l, margin, pattern_seed);
        let mut pat = loop {
            match sample_face_pattern(&cfg, spec.cell_side, color) {
                Ok(p) => break p,
                Err(e) => {
                    cfg.min_distance *= 0.9;
                    cfg.edge_margin = cfg.min_distance.max(edge_leak_margin(spec));
                    if cfg.min_distance < 1e-4 * spec.cell_side {
                        return Err(e.into());
                    }
                }
            }
        };
        let graph =
            PoreGraph::from_face_positions(&pat.positions, self.degree_lower, self.degree_upper);
        pat.tunnels = build_degree_bounded_network(&graph)?.edges;
        Ok(pat)
    }

    /// Measures raw porosities at several pore counts and fits the linear
    /// model used to invert a target porosity into a pore count.
    pub fn calibrate(
        &self,
        spec: &DesignSpec,
        patterns: &[FacePattern; 3],
        n_values: &[usize],
        samples_per_n: usize,
    ) -> Result<PoreCountModel, UnitError> {
        let resolution = (self.resolution / 2).max(16);
        let interval = default_band_interval(spec);
        let d0 = 0.5 * (interval.0 + interval.1);
        let mut samples = Vec::new();
        for &n in n_values {
            for s in 0..samples_per_n {
                let attempt_seed =
                    seed::derive_indexed(spec.seed, "calibrate", (n as u64) << 8 | s as u64);
                let result = self.build_attempt(
                    spec,
                    patterns,
                    n,
                    d0,
                    attempt_seed,
                    resolution,
                    self.interior_spacing_factor,
                )?;
                samples.push((n, result.porosity));
            }
        }
        fit_pore_count_model(&samples)
    }

    /// Generates a valid cell at the spec's target porosity.
    ///
    /// Deterministic for a given spec and patterns: retries consume the seed
    /// sequence `derive_indexed(seed, "unit-attempt", k)`.
    pub fn generate_unit(
        &self,
        spec: &DesignSpec,
        patterns: &[FacePattern; 3],
        model: &PoreCountModel,
    ) -> Result<UnitCell, UnitError> {
        let mut n = model.invert(spec.target_porosity)?;
        let mut spacing = self.interior_spacing_factor;
        let interval = default_band_interval(spec);
        // Bracket on the pore count: largest n whose reachable porosity
        // range fell below the target, and smallest n above it.
        let mut n_below: Option<usize> = None;
        let mut n_above: Option<usize> = None;
        for attempt in 0..spec.max_attempts {
            let attempt_seed = seed::derive_indexed(spec.seed, "unit-attempt", attempt as u64);
            let outcome =
                match self.attempt_cell(spec, patterns, n, attempt_seed, interval, spacing) {
                    Err(UnitError::MonotoneProbeFailed { .. }) => self.attempt_cell_reversed(
                        spec,
                        patterns,
                        n,
                        attempt_seed,
                        interval,
                        spacing,
                    ),
                    other => other,
                };
            if self.verbose {
                match &outcome {
                    Ok(cell) => eprintln!(
                        "attempt {attempt}: accepted rho {} at depth {}",
                        cell.measured_porosity, cell.band_depth
                    ),
                    Err(e) => eprintln!("attempt {attempt}: n {n} spacing {spacing:.3}: {e}"),
                }
            }
            match outcome {
                Ok(cell) => return Ok(cell),
                Err(UnitError::TargetUnreachable { rho_lo, rho_hi }) => {
                    let target = spec.target_porosity;
                    if n == 1 && rho_lo > target && rho_hi > target {
                        // The floor of the reachable range sits above the
                        // target and the pore count cannot drop further.
                        // Tighter dart-throwing spacing lets voids overlap
                        // and pulls the floor down.
                        spacing = (spacing * 0.6).max(0.1 * self.interior_spacing_factor);
                        continue;
                    }
                    // Update the bracket; the range is entirely on one side.
                    if rho_lo.max(rho_hi) < target {
                        n_below = Some(n_below.map_or(n, |b| b.max(n)));
                    } else {
                        n_above = Some(n_above.map_or(n, |a| a.min(n)));
                    }
                    n = match (n_below, n_above) {
                        // Binary search once both sides are known.
                        (Some(b), Some(a)) if a > b + 1 => (a + b) / 2,
                        // Adjacent counts straddle the target: alternate
                        // sides and let fresh seeds shift the ranges.
                        (Some(b), Some(a)) => {
                            if attempt % 2 == 0 {
                                b.max(1)
                            } else {
                                a
                            }
                        }
                        // One-sided so far: step along the fitted line.
                        _ => {
                            let miss = if rho_lo < target {
                                target - rho_lo
                            } else {
                                target - rho_hi
                            };
                            let step =
                                ((miss / model.slope.max(1e-6)).round() as i64).clamp(-20, 20);
                            (n as i64
                                + if step == 0 {
                                    miss.signum() as i64
                                } else {
                                    step
                                })
                            .max(1) as usize
                        }
                    };
                }
                Err(UnitError::AttemptInvalid(InvalidReason::FaceMismatch)) if n > 1 => {
                    // Face mismatch comes from shallow interior features;
                    // more pores push the accepted depth deeper.
                    n += (n / 5).max(1);
                }
                Err(UnitError::AttemptInvalid(_))
                | Err(UnitError::MonotoneProbeFailed { .. })
                | Err(UnitError::Sampling(_))
                | Err(UnitError::Connectivity(ConnectivityError::NoInteriorPores)) => {
                    // Unlucky draw; new seed.
                }
                Err(other) => return Err(other),
            }
        }
        Err(UnitError::GenerationExhausted {
            attempts: spec.max_attempts,
        })
    }

    fn attempt_cell(
        &self,
        spec: &DesignSpec,
        patterns: &[FacePattern; 3],
        n: usize,
        attempt_seed: u64,
        interval: (f64, f64),
        spacing: f64,
    ) -> Result<UnitCell, UnitError> {
        let mut last: Option<(f64, AttemptResult)> = None;
        let d_star = {
            let rho_fn = |d: f64| -> Result<f64, UnitError> {
                let result = self.build_attempt(
                    spec,
                    patterns,
                    n,
                    d,
                    attempt_seed,
                    self.resolution,
                    spacing,
                )?;
                if !result.report.valid {
                    // A removed component touched the surface: this seed's
                    // geometry cannot become a valid cell at this depth.
                    return Err(UnitError::AttemptInvalid(
                        InvalidReason::SurfaceComponentRemoved,
                    ));
                }
                let rho = result.porosity;
                last = Some((d, result));
                Ok(rho)
            };
            tune_band_depth(
                rho_fn,
                spec.target_porosity,
                spec.porosity_tolerance,
                interval,
                spec.cell_side,
            )?
        };
        self.finish_attempt(spec, patterns, n, attempt_seed, spacing, d_star, last)
    }

    /// Porosity can invert its usual direction in the few-pore regime, where
    /// deeper bands pull the interior pores away from overlaps with the
    /// face voids. Retry the bisection with the depth axis flipped.
    fn attempt_cell_reversed(
        &self,
        spec: &DesignSpec,
        patterns: &[FacePattern; 3],
        n: usize,
        attempt_seed: u64,
        interval: (f64, f64),
        spacing: f64,
    ) -> Result<UnitCell, UnitError> {
        let (lo, hi) = interval;
        let mut last: Option<(f64, AttemptResult)> = None;
        let flipped = {
            let rho_fn = |t: f64| -> Result<f64, UnitError> {
                let d = lo + hi - t;
                let result = self.build_attempt(
                    spec,
                    patterns,
                    n,
                    d,
                    attempt_seed,
                    self.resolution,
                    spacing,
                )?;
                if !result.report.valid {
                    return Err(UnitError::AttemptInvalid(
                        InvalidReason::SurfaceComponentRemoved,
                    ));
                }
                let rho = result.porosity;
                last = Some((d, result));
                Ok(rho)
            };
            tune_band_depth(
                rho_fn,
                spec.target_porosity,
                spec.porosity_tolerance,
                interval,
                spec.cell_side,
            )?
        };
        let d_star = lo + hi - flipped;
        self.finish_attempt(spec, patterns, n, attempt_seed, spacing, d_star, last)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_attempt(
        &self,
        spec: &DesignSpec,
        patterns: &[FacePattern; 3],
        n: usize,
        attempt_seed: u64,
        spacing: f64,
        d_star: f64,
        last: Option<(f64, AttemptResult)>,
    ) -> Result<UnitCell, UnitError> {
        let result = match last {
            Some((d, result)) if d == d_star => result,
            _ => self.build_attempt(
                spec,
                patterns,
                n,
                d_star,
                attempt_seed,
                self.resolution,
                spacing,
            )?,
        };
        if (result.porosity - spec.target_porosity).abs() > spec.porosity_tolerance {
            return Err(UnitError::TargetUnreachable {
                rho_lo: result.porosity,
                rho_hi: result.porosity,
            });
        }
        // Face-periodicity gate at 32^3, the budget's reference resolution.
        let gate_grid;
        let gate = if self.resolution == 32 {
            &result.grid
        } else {
            let field = CombinedField::new(
                result.pores.clone(),
                result.tunnels.clone(),
                spec.cutoff_epsilon,
                spec.cell_side,
            )?;
            let raw = voxelize(&field, spec.level_c, (32, 32, 32))?;
            let (cleaned, _) = validate_solid(&raw)?;
            gate_grid = cleaned;
            &gate_grid
        };
        for axis in 0..3 {
            if gate.face_layer_mismatch(axis) > self.epsilon_face {
                return Err(UnitError::AttemptInvalid(InvalidReason::FaceMismatch));
            }
        }
        Ok(UnitCell {
            spec: *spec,
            pores: result.pores,
            tunnels: result.tunnels,
            band_depth: d_star,
            measured_porosity: result.porosity,
            face_colors: [patterns[0].color, patterns[1].color, patterns[2].color],
            attempt_seed,
            n_interior: result.n_interior,
        })
    }

    /// Builds the raw geometry for one (n, d, seed) combination and measures
    /// its validated porosity.
    #[allow(clippy::too_many_arguments)]
    fn build_attempt(
        &self,
        spec: &DesignSpec,
        patterns: &[FacePattern; 3],
        n: usize,
        band_depth: f64,
        attempt_seed: u64,
        resolution: usize,
        spacing: f64,
    ) -> Result<AttemptResult, UnitError> {
        let (pores, tunnels, n_interior) =
            self.build_geometry(spec, patterns, n, band_depth, attempt_seed, spacing)?;
        let field = CombinedField::new(
            pores.clone(),
            tunnels.clone(),
            spec.cutoff_epsilon,
            spec.cell_side,
        )?;
        let grid = voxelize(&field, spec.level_c, (resolution, resolution, resolution))?;
        let (cleaned, report) = validate_solid(&grid)?;
        Ok(AttemptResult {
            pores,
            tunnels,
            porosity: cleaned.porosity(),
            grid: cleaned,
            report,
            n_interior,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn build_geometry(
        &self,
        spec: &DesignSpec,
        patterns: &[FacePattern; 3],
        n: usize,
        band_depth: f64,
        attempt_seed: u64,
        spacing: f64,
    ) -> Result<(Vec<Pore>, Vec<Tunnel>, usize), UnitError> {
        // Interior dart-throwing distance from the band at its default
        // depth, so the point set stays comparable across the d search.
        let r = spec.pore_radius();
        let usable = (spec.cell_side - 2.0 * r).max(0.1 * spec.cell_side).powi(3);
        let l_interior = default_min_distance(usable, n) * (spacing / 0.7);

        let partition = CellPartition::new(spec.cell_side, band_depth)?;
        let l_face = patterns
            .iter()
            .map(min_pattern_distance)
            .fold(f64::INFINITY, f64::min);
        let (face_pores, layout) = instantiate_cell_pores(
            patterns,
            &[],
            spec.cell_side,
            spec.omega,
            l_face.min(l_interior),
        )?;

        let cfg = SamplingConfig::new(n.max(1), 0, l_interior, 0.0, attempt_seed);
        let (interior, _) = sample_interior_adaptive(&cfg, &partition, &face_pores, spec.omega)?;

        let mut pores = face_pores;
        let interior_offset = layout.interior_offset;
        pores.extend_from_slice(&interior);

        let mut tunnels = Vec::new();
        // Face tunnels: the pattern's 2D topology stamped on both faces.
        for (ai, pattern) in patterns.iter().enumerate() {
            for side in 0..2 {
                let base = layout.face_offsets[ai][side];
                for &(i, j) in &pattern.tunnels {
                    tunnels.push(Tunnel::new(base + i, base + j, spec.mu));
                }
            }
        }
        // Interior network.
        let graph = PoreGraph::new(
            interior.iter().map(|p| p.center).collect(),
            self.degree_lower,
            self.degree_upper,
        );
        for (i, j) in build_degree_bounded_network(&graph)?.edges {
            tunnels.push(Tunnel::new(
                interior_offset + i,
                interior_offset + j,
                spec.mu,
            ));
        }
        // Bridges: every surface pore to its nearest interior pore.
        let surface_pts: Vec<(usize, Vec3)> = pores[..interior_offset]
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.center))
            .collect();
        let interior_pts: Vec<(usize, Vec3)> = interior
            .iter()
            .enumerate()
            .map(|(i, p)| (interior_offset + i, p.center))
            .collect();
        for (s, t) in bridge_surface_to_interior(&surface_pts, &interior_pts)? {
            tunnels.push(Tunnel::new(s, t, spec.mu));
        }
        Ok((pores, tunnels, interior.len()))
    }

    /// Full standalone flow: face patterns, calibration, generation.
    ///
    /// Face patterns bound the reachable porosity range, so when generation
    /// exhausts its seed budget the patterns themselves are resampled from
    /// the next derived seed, up to [`PATTERN_TRIES`] rounds.
    pub fn design_unit(
        &self,
        spec: &DesignSpec,
        n_face: usize,
        colors: [u8; 3],
    ) -> Result<(UnitCell, [FacePattern; 3], PoreCountModel), UnitError> {
        for round in 0..PATTERN_TRIES {
            let patterns = self.pattern_round(spec, n_face, colors, round)?;
            let model = self.calibrate(spec, &patterns, &calibration_counts(spec), 1)?;
            match self.generate_unit(spec, &patterns, &model) {
                Ok(cell) => return Ok((cell, patterns, model)),
                Err(UnitError::GenerationExhausted { .. }) if round + 1 < PATTERN_TRIES => {}
                Err(other) => return Err(other),
            }
        }
        Err(UnitError::GenerationExhausted {
            attempts: PATTERN_TRIES * spec.max_attempts,
        })
    }

    /// The face patterns of one retry round, seeded per (round, color).
    pub fn pattern_round(
        &self,
        spec: &DesignSpec,
        n_face: usize,
        colors: [u8; 3],
        round: usize,
    ) -> Result<[FacePattern; 3], UnitError> {
        let mut out = Vec::with_capacity(3);
        for c in colors {
            out.push(self.face_pattern(
                spec,
                c,
                n_face,
                seed::derive_indexed(spec.seed, "facepattern", (round as u64) << 16 | c as u64),
            )?);
        }
        Ok([out[0].clone(), out[1].clone(), out[2].clone()])
    }

    /// Generates `k` cells with fixed pore count and distinct seeds and
    /// reports their porosity spread (no target matching).
    pub fn porosity_repeatability_study(
        &self,
        spec: &DesignSpec,
        patterns: &[FacePattern; 3],
        n: usize,
        k: usize,
    ) -> Result<PorosityStats, UnitError> {
        assert!(k >= 2, "a repeatability study needs at least two samples");
        let interval = default_band_interval(spec);
        let d0 = 0.5 * (interval.0 + interval.1);
        let mut values = Vec::with_capacity(k);
        for i in 0..k {
            let attempt_seed = seed::derive_indexed(spec.seed, "repeat", i as u64);
            let result = self.build_attempt(
                spec,
                patterns,
                n,
                d0,
                attempt_seed,
                self.resolution,
                self.interior_spacing_factor,
            )?;
            values.push(result.porosity);
        }
        Ok(PorosityStats::from_values(values))
    }
}

/// Rounds of face-pattern resampling before giving up on a design.
pub const PATTERN_TRIES: usize = 5;

/// Pore counts used to calibrate the linear porosity model, spread around
/// the regime the target porosity needs.
pub fn calibration_counts(spec: &DesignSpec) -> Vec<usize> {
    // One isolated pore removes roughly its level-set ball volume; the
    // high anchors compensate the saturation of porosity in the pore count.
    let ball = 4.0 / 3.0 * std::f64::consts::PI * spec.pore_radius().powi(3);
    let rough = (spec.target_porosity * spec.cell_side.powi(3) / ball).ceil() as usize;
    let mid = rough.max(4);
    vec![(mid / 2).max(1), mid, mid * 2, mid * 4]
}

/// Default band-depth search interval.
///
/// The floor sits just above the pore radius: an interior pore deeper than
/// `r = sqrt(ln(1/C) / omega)` cannot exceed the level value at the face on
/// its own, so it shifts face contours instead of punching one-sided holes,
/// keeping opposite-face voxel layers within the mismatch budget.
pub fn default_band_interval(spec: &DesignSpec) -> (f64, f64) {
    let r = spec.pore_radius();
    let lo = (r * 1.02).min(spec.cell_side * 0.38);
    // Deep depths concentrate the interior pores, trading void overlap for
    // porosity: that slope is what the bisection tunes.
    let hi = (spec.cell_side * 0.45).max(lo * 1.25);
    (lo, hi.min(spec.cell_side * 0.499))
}

/// Distance from a face's edges inside which pores would leak visibly onto
/// the perpendicular faces: the kernel must decay below a small fraction of
/// the level value across the margin.
pub fn edge_leak_margin(spec: &DesignSpec) -> f64 {
    ((1.0 / (0.1 * spec.level_c)).ln() / spec.omega).sqrt()
}

fn face_min_distance(spec: &DesignSpec, n_face: usize) -> f64 {
    let side = spec.cell_side - 2.0 * edge_leak_margin(spec);
    let area = (side.max(0.1 * spec.cell_side)).powi(2);
    0.7 * (area / n_face.max(1) as f64).sqrt()
}

fn min_pattern_distance(pattern: &FacePattern) -> f64 {
    let mut min = f64::INFINITY;
    for (i, a) in pattern.positions.iter().enumerate() {
        for b in &pattern.positions[i + 1..] {
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            min = min.min(d);
        }
    }
    min
}

// ------------------------------------------------------------------------
// Design file serialization
// ------------------------------------------------------------------------

const DESIGN_HEADER: &str = "sppm-unit v1";

/// Serializes a cell to the human-readable design format. The output is
/// byte-stable: rewriting the same cell yields identical bytes.
pub fn write_design(cell: &UnitCell) -> String {
    let mut out = String::new();
    let s = &cell.spec;
    let _ = writeln!(out, "{DESIGN_HEADER}");
    let _ = writeln!(out, "seed = {}", s.seed);
    let _ = writeln!(out, "attempt_seed = {}", cell.attempt_seed);
    let _ = writeln!(out, "target_porosity = {}", s.target_porosity);
    let _ = writeln!(out, "omega = {}", s.omega);
    let _ = writeln!(out, "mu = {}", s.mu);
    let _ = writeln!(out, "level_c = {}", s.level_c);
    let _ = writeln!(out, "cell_side = {}", s.cell_side);
    let _ = writeln!(out, "porosity_tolerance = {}", s.porosity_tolerance);
    let _ = writeln!(out, "max_attempts = {}", s.max_attempts);
    let _ = writeln!(out, "cutoff_epsilon = {}", s.cutoff_epsilon);
    let _ = writeln!(out, "band_depth = {}", cell.band_depth);
    let _ = writeln!(out, "measured_porosity = {}", cell.measured_porosity);
    let _ = writeln!(out, "n_interior = {}", cell.n_interior);
    let _ = writeln!(
        out,
        "face_colors = {} {} {}",
        cell.face_colors[0], cell.face_colors[1], cell.face_colors[2]
    );
    let _ = writeln!(out, "pores = {}", cell.pores.len());
    for p in &cell.pores {
        let region = match p.region {
            RegionTag::Interior => "interior".to_string(),
            RegionTag::Face(axis, side) => format!(
                "face {} {}",
                match axis {
                    Axis::X => "x",
                    Axis::Y => "y",
                    Axis::Z => "z",
                },
                match side {
                    FaceSide::Negative => "neg",
                    FaceSide::Positive => "pos",
                }
            ),
        };
        let _ = writeln!(
            out,
            "pore {} {} {} {} {}",
            p.center.x, p.center.y, p.center.z, p.weight, region
        );
    }
    let _ = writeln!(out, "tunnels = {}", cell.tunnels.len());
    for t in &cell.tunnels {
        let _ = writeln!(
            out,
            "tunnel {} {} {}",
            t.endpoints.0, t.endpoints.1, t.weight
        );
    }
    out
}

/// Parses a design file produced by [`write_design`].
pub fn read_design(text: &str) -> Result<UnitCell, UnitError> {
    let bad = |msg: &str| UnitError::BadDesignFile(msg.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(DESIGN_HEADER) {
        return Err(bad("missing header"));
    }
    let mut kv = std::collections::HashMap::new();
    let mut pores = Vec::new();
    let mut tunnels = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("pore ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() < 5 {
                return Err(bad("short pore record"));
            }
            let center = Vec3::new(
                parts[0].parse().map_err(|_| bad("pore x"))?,
                parts[1].parse().map_err(|_| bad("pore y"))?,
                parts[2].parse().map_err(|_| bad("pore z"))?,
            );
            let weight: f64 = parts[3].parse().map_err(|_| bad("pore weight"))?;
            let region = match parts[4] {
                "interior" => RegionTag::Interior,
                "face" => {
                    if parts.len() != 7 {
                        return Err(bad("short face record"));
                    }
                    let axis = match parts[5] {
                        "x" => Axis::X,
                        "y" => Axis::Y,
                        "z" => Axis::Z,
                        _ => return Err(bad("face axis")),
                    };
                    let side = match parts[6] {
                        "neg" => FaceSide::Negative,
                        "pos" => FaceSide::Positive,
                        _ => return Err(bad("face side")),
                    };
                    RegionTag::Face(axis, side)
                }
                _ => return Err(bad("pore region")),
            };
            pores.push(Pore::new(center, weight, region));
        } else if let Some(rest) = line.strip_prefix("tunnel ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad("short tunnel record"));
            }
            tunnels.push(Tunnel::new(
                parts[0].parse().map_err(|_| bad("tunnel endpoint"))?,
                parts[1].parse().map_err(|_| bad("tunnel endpoint"))?,
                parts[2].parse().map_err(|_| bad("tunnel weight"))?,
            ));
        } else if let Some((key, value)) = line.split_once(" = ") {
            kv.insert(key.to_string(), value.to_string());
        } else if line.split_once('=').is_some() {
            return Err(bad("malformed key-value line"));
        }
    }
    let get = |key: &str| {
        kv.get(key)
            .ok_or_else(|| bad(&format!("missing key {key}")))
    };
    let parse_f = |key: &str| -> Result<f64, UnitError> {
        get(key)?
            .parse()
            .map_err(|_| bad(&format!("bad float for {key}")))
    };
    let parse_u = |key: &str| -> Result<u64, UnitError> {
        get(key)?
            .parse()
            .map_err(|_| bad(&format!("bad integer for {key}")))
    };
    let colors: Vec<u8> = get("face_colors")?
        .split_whitespace()
        .map(|c| c.parse().map_err(|_| bad("bad color")))
        .collect::<Result<_, _>>()?;
    if colors.len() != 3 {
        return Err(bad("face_colors needs three entries"));
    }
    let spec = DesignSpec {
        target_porosity: parse_f("target_porosity")?,
        omega: parse_f("omega")?,
        mu: parse_f("mu")?,
        level_c: parse_f("level_c")?,
        cell_side: parse_f("cell_side")?,
        seed: parse_u("seed")?,
        porosity_tolerance: parse_f("porosity_tolerance")?,
        max_attempts: parse_u("max_attempts")? as usize,
        cutoff_epsilon: parse_f("cutoff_epsilon")?,
    };
    Ok(UnitCell {
        spec,
        pores,
        tunnels,
        band_depth: parse_f("band_depth")?,
        measured_porosity: parse_f("measured_porosity")?,
        face_colors: [colors[0], colors[1], colors[2]],
        attempt_seed: parse_u("attempt_seed")?,
        n_interior: parse_u("n_interior")? as usize,
    })
}
