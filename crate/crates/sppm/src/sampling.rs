//! Blue-noise pore placement.
//!
//! Dart throwing with a minimum-distance threshold, run separately on the
//! cell faces and in the interior band. Face patterns are sampled once on a
//! canonical 2D face and stamped onto both opposing faces by translation, so
//! opposite faces carry bit-identical pore distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{Axis, FaceSide, Pore, RegionTag, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("could not place pore {placed} of {requested} within {attempts} attempts (min distance {min_distance})")]
    Infeasible {
        placed: usize,
        requested: usize,
        attempts: usize,
        min_distance: f64,
    },
    #[error("instantiated pores {i} and {j} are {distance} apart, closer than {min_distance}")]
    FaceCollision {
        i: usize,
        j: usize,
        distance: f64,
        min_distance: f64,
    },
    #[error("band depth {band_depth} must satisfy 0 < d < {0} / 2", .cell_side)]
    BadBandDepth { band_depth: f64, cell_side: f64 },
}

/// Split of the cell into a surface band and an interior sampling cube.
///
/// The interior cube is `[d, L - d]^3`; everything else is the band that
/// belongs to the faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPartition {
    pub cell_side: f64,
    pub band_depth: f64,
}

impl CellPartition {
    pub fn new(cell_side: f64, band_depth: f64) -> Result<Self, SamplingError> {
        if band_depth <= 0.0 || band_depth >= cell_side / 2.0 {
            return Err(SamplingError::BadBandDepth {
                band_depth,
                cell_side,
            });
        }
        Ok(Self {
            cell_side,
            band_depth,
        })
    }

    /// Lower and upper bound of the interior cube on each axis.
    pub fn interior_range(&self) -> (f64, f64) {
        (self.band_depth, self.cell_side - self.band_depth)
    }
}

/// Knobs for one dart-throwing run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub n_interior: usize,
    pub n_face_per_axis: usize,
    /// Minimum pairwise distance between pores (dart-throwing threshold).
    pub min_distance: f64,
    /// Face pores keep this margin to the face's four edges.
    pub edge_margin: f64,
    pub seed: u64,
    pub max_attempts_per_pore: usize,
}

impl SamplingConfig {
    pub fn new(
        n_interior: usize,
        n_face_per_axis: usize,
        min_distance: f64,
        edge_margin: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_interior,
            n_face_per_axis,
            min_distance,
            edge_margin,
            seed,
            max_attempts_per_pore: 10_000,
        }
    }
}

/// Heuristic dart-throwing distance for `n` points in a region of the given
/// volume: a fixed fraction of the mean spacing.
pub fn default_min_distance(usable_volume: f64, n: usize) -> f64 {
    0.7 * (usable_volume / n.max(1) as f64).cbrt()
}

/// One shared boundary pattern: pore positions on a canonical face plus the
/// in-face tunnel topology (filled in by the connectivity stage).
///
/// Positions are 2D face coordinates in `[margin, L - margin]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FacePattern {
    pub color: u8,
    pub positions: Vec<[f64; 2]>,
    /// Index pairs into `positions`; each pair is one in-face tunnel.
    pub tunnels: Vec<(usize, usize)>,
}

fn dist2_2d(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Samples one face pattern by dart throwing on the canonical face.
///
/// Deterministic for a given `config.seed`; the color only labels the result.
pub fn sample_face_pattern(
    config: &SamplingConfig,
    cell_side: f64,
    color: u8,
) -> Result<FacePattern, SamplingError> {
    let n = config.n_face_per_axis;
    let lo = config.edge_margin;
    let hi = cell_side - config.edge_margin;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut positions: Vec<[f64; 2]> = Vec::with_capacity(n);
    let min2 = config.min_distance * config.min_distance;
    while positions.len() < n {
        let mut placed = false;
        for _ in 0..config.max_attempts_per_pore {
            if hi <= lo {
                break;
            }
            let cand = [
                lo + rng.gen::<f64>() * (hi - lo),
                lo + rng.gen::<f64>() * (hi - lo),
            ];
            if positions.iter().all(|p| dist2_2d(*p, cand) >= min2) {
                positions.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SamplingError::Infeasible {
                placed: positions.len(),
                requested: n,
                attempts: config.max_attempts_per_pore,
                min_distance: config.min_distance,
            });
        }
    }
    Ok(FacePattern {
        color,
        positions,
        tunnels: Vec::new(),
    })
}

/// Samples `n_interior` pores in the interior cube, keeping the dart-throwing
/// distance to each other and to all fixed (face) pores.
pub fn sample_interior(
    config: &SamplingConfig,
    partition: &CellPartition,
    fixed_pores: &[Pore],
    pore_weight: f64,
) -> Result<Vec<Pore>, SamplingError> {
    let (lo, hi) = partition.interior_range();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut placed: Vec<Vec3> = Vec::with_capacity(config.n_interior);
    let min2 = config.min_distance * config.min_distance;
    while placed.len() < config.n_interior {
        let mut ok = false;
        for _ in 0..config.max_attempts_per_pore {
            let cand = Vec3::new(
                lo + rng.gen::<f64>() * (hi - lo),
                lo + rng.gen::<f64>() * (hi - lo),
                lo + rng.gen::<f64>() * (hi - lo),
            );
            let clear = placed.iter().all(|p| (p - cand).norm_squared() >= min2)
                && fixed_pores
                    .iter()
                    .all(|f| (f.center - cand).norm_squared() >= min2);
            if clear {
                placed.push(cand);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(SamplingError::Infeasible {
                placed: placed.len(),
                requested: config.n_interior,
                attempts: config.max_attempts_per_pore,
                min_distance: config.min_distance,
            });
        }
    }
    Ok(placed
        .into_iter()
        .map(|c| Pore::new(c, pore_weight, RegionTag::Interior))
        .collect())
}

/// Like [`sample_interior`], but shrinks the dart-throwing distance by 0.9
/// and retries when the requested count does not fit.
pub fn sample_interior_adaptive(
    config: &SamplingConfig,
    partition: &CellPartition,
    fixed_pores: &[Pore],
    pore_weight: f64,
) -> Result<(Vec<Pore>, f64), SamplingError> {
    let mut cfg = *config;
    loop {
        match sample_interior(&cfg, partition, fixed_pores, pore_weight) {
            Ok(pores) => return Ok((pores, cfg.min_distance)),
            Err(err) => {
                cfg.min_distance *= 0.9;
                if cfg.min_distance < 1e-4 * partition.cell_side {
                    return Err(err);
                }
            }
        }
    }
}

/// Maps a 2D face coordinate onto the cell face with the given axis/side.
pub fn face_point_to_cell(uv: [f64; 2], axis: Axis, side: FaceSide, cell_side: f64) -> Vec3 {
    let c = match side {
        FaceSide::Negative => 0.0,
        FaceSide::Positive => cell_side,
    };
    match axis {
        Axis::X => Vec3::new(c, uv[0], uv[1]),
        Axis::Y => Vec3::new(uv[0], c, uv[1]),
        Axis::Z => Vec3::new(uv[0], uv[1], c),
    }
}

/// Index layout of an instantiated pore list: where each face copy and the
/// interior block start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoreLayout {
    /// `face_offsets[axis][side]` is the first index of that face's pores.
    pub face_offsets: [[usize; 2]; 3],
    pub face_count_per_axis: [usize; 3],
    pub interior_offset: usize,
    pub total: usize,
}

/// Places the three face patterns on their negative faces, duplicates each by
/// translation `+L` along its axis onto the positive face, and appends the
/// interior pores.
///
/// The translation keeps the 2D coordinates bit-identical on both faces, so
/// tiled neighbors line up exactly. Fails with `FaceCollision` if any two
/// resulting pores end up closer than `min_distance` (cross-face edge
/// proximity).
pub fn instantiate_cell_pores(
    patterns: &[FacePattern; 3],
    interior: &[Pore],
    cell_side: f64,
    pore_weight: f64,
    min_distance: f64,
) -> Result<(Vec<Pore>, PoreLayout), SamplingError> {
    let mut pores: Vec<Pore> = Vec::new();
    let mut face_offsets = [[0usize; 2]; 3];
    for (ai, axis) in Axis::ALL.into_iter().enumerate() {
        for (si, side) in [FaceSide::Negative, FaceSide::Positive]
            .into_iter()
            .enumerate()
        {
            face_offsets[ai][si] = pores.len();
            for uv in &patterns[ai].positions {
                let center = face_point_to_cell(*uv, axis, side, cell_side);
                pores.push(Pore::new(center, pore_weight, RegionTag::Face(axis, side)));
            }
        }
    }
    let interior_offset = pores.len();
    pores.extend_from_slice(interior);
    let layout = PoreLayout {
        face_offsets,
        face_count_per_axis: [
            patterns[0].positions.len(),
            patterns[1].positions.len(),
            patterns[2].positions.len(),
        ],
        interior_offset,
        total: pores.len(),
    };

    // Cross-face proximity check. Same-pattern pairs already honored the
    // threshold at sampling time and opposite faces are a full cell apart;
    // pores from faces of different axes can still collide near cube edges
    // when the margin is too small.
    let min2 = min_distance * min_distance;
    for i in 0..pores.len() {
        for j in (i + 1)..pores.len() {
            let same_axis = match (pores[i].region, pores[j].region) {
                (RegionTag::Face(a, _), RegionTag::Face(b, _)) => a == b,
                _ => false,
            };
            if same_axis {
                continue;
            }
            let d2 = (pores[i].center - pores[j].center).norm_squared();
            if d2 < min2 {
                return Err(SamplingError::FaceCollision {
                    i,
                    j,
                    distance: d2.sqrt(),
                    min_distance,
                });
            }
        }
    }
    Ok((pores, layout))
}
