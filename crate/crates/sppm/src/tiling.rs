//! Wang-tile set construction and stochastic assembly.
//!
//! A tile set over `K` face colors has one tile for every color triple
//! (`K^3` tiles), each carrying an independently generated interior behind
//! shared boundary patterns. Assembly fills a grid in scan order under two
//! rules: adjacent face colors must match (hard), and among the feasible
//! tiles the one most different from its placed neighbors wins (scored over
//! face, line and point adjacency).

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use rayon::prelude::*;

use crate::field::{CombinedField, Vec3};
use crate::seed;
use crate::unit::{
    calibration_counts, read_design, write_design, DesignSpec, UnitCell, UnitDesigner, UnitError,
};
use crate::voxel::{accumulate_field_slab, VoxelGrid};

#[derive(Debug, Error)]
pub enum TilingError {
    #[error("candidate tile violates face-color consistency at {position:?} along axis {axis}")]
    Rule1Violation {
        position: (usize, usize, usize),
        axis: usize,
    },
    #[error("position {0:?} is already occupied")]
    PositionOccupied((usize, usize, usize)),
    #[error("assembly file is malformed: {0}")]
    BadAssemblyFile(String),
    #[error("tile set directory is malformed: {0}")]
    BadTileSet(String),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One tile: a color triple plus its unit-cell payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub id: usize,
    /// Face colors per axis; opposite faces share the color.
    pub colors: [u8; 3],
    pub cell: UnitCell,
}

/// The full `K^3` tile library over `K` face colors.
#[derive(Debug, Clone, PartialEq)]
pub struct TileSet {
    pub colors: usize,
    pub tiles: Vec<Tile>,
}

impl TileSet {
    /// Index of the tile with the given color triple.
    pub fn tile_index(colors: usize, c: [u8; 3]) -> usize {
        c[0] as usize + colors * (c[1] as usize + colors * c[2] as usize)
    }

    pub fn palette(&self) -> Vec<[u8; 3]> {
        self.tiles.iter().map(|t| t.colors).collect()
    }
}

/// Generates the `K^3` tile set: `K` shared face patterns, then one valid
/// cell per color triple, each from its own derived seed.
pub fn generate_tile_set(
    designer: &UnitDesigner,
    spec: &DesignSpec,
    k: usize,
) -> Result<TileSet, TilingError> {
    assert!((1..=255).contains(&k), "color count must be in 1..=255");
    let n_face = designer.suggested_face_count(spec);
    let mut last_err = None;
    // Shared face patterns bound what every tile can reach; when any tile
    // exhausts its seeds the whole pattern set is resampled.
    'round: for round in 0..crate::unit::PATTERN_TRIES {
        let mut patterns = Vec::with_capacity(k);
        for color in 0..k {
            patterns.push(designer.face_pattern(
                spec,
                color as u8,
                n_face,
                seed::derive_indexed(
                    spec.seed,
                    "facepattern",
                    (round as u64) << 16 | color as u64,
                ),
            )?);
        }
        // One shared porosity model: same pore statistics across tiles.
        let calib = [
            patterns[0].clone(),
            patterns[1 % k].clone(),
            patterns[2 % k].clone(),
        ];
        let model = designer.calibrate(spec, &calib, &calibration_counts(spec), 1)?;

        let mut tiles = Vec::with_capacity(k * k * k);
        for cz in 0..k {
            for cy in 0..k {
                for cx in 0..k {
                    let id = TileSet::tile_index(k, [cx as u8, cy as u8, cz as u8]);
                    let mut tile_spec = *spec;
                    tile_spec.seed = seed::derive_indexed(spec.seed, "tile", id as u64);
                    let pats = [
                        patterns[cx].clone(),
                        patterns[cy].clone(),
                        patterns[cz].clone(),
                    ];
                    match designer.generate_unit(&tile_spec, &pats, &model) {
                        Ok(cell) => tiles.push(Tile {
                            id,
                            colors: [cx as u8, cy as u8, cz as u8],
                            cell,
                        }),
                        Err(e @ UnitError::GenerationExhausted { .. }) => {
                            last_err = Some(e);
                            continue 'round;
                        }
                        Err(other) => return Err(other.into()),
                    }
                }
            }
        }
        return Ok(TileSet { colors: k, tiles });
    }
    Err(last_err
        .expect("exhausted rounds imply a generation error")
        .into())
}

/// How two grid positions touch: across a face, an edge line, or a corner
/// point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacency {
    Face,
    Line,
    Point,
}

/// Difference score of two placed tiles: identical tiles score 0, distinct
/// tiles score 3/2/1 for face/line/point adjacency.
pub fn diff(a: usize, b: usize, adjacency: Adjacency) -> u32 {
    if a == b {
        return 0;
    }
    match adjacency {
        Adjacency::Face => 3,
        Adjacency::Line => 2,
        Adjacency::Point => 1,
    }
}

/// A filled assembly: grid of tile identifiers, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub dims: (usize, usize, usize),
    pub tiles: Vec<usize>,
    pub seed: u64,
    /// Free-form reference to the tile set (path or digest).
    pub tileset_ref: String,
}

impl Assembly {
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    pub fn tile_at(&self, x: usize, y: usize, z: usize) -> usize {
        self.tiles[self.index(x, y, z)]
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
}

/// Partially filled grid used during construction and scoring.
pub struct AssemblyBuilder {
    pub dims: (usize, usize, usize),
    pub slots: Vec<Option<usize>>,
    palette: Vec<[u8; 3]>,
}

impl AssemblyBuilder {
    pub fn new(dims: (usize, usize, usize), palette: Vec<[u8; 3]>) -> Self {
        Self {
            dims,
            slots: vec![None; dims.0 * dims.1 * dims.2],
            palette,
        }
    }

    fn index(&self, p: (usize, usize, usize)) -> usize {
        p.0 + self.dims.0 * (p.1 + self.dims.1 * p.2)
    }

    pub fn place(&mut self, p: (usize, usize, usize), tile: usize) -> Result<(), TilingError> {
        let idx = self.index(p);
        if self.slots[idx].is_some() {
            return Err(TilingError::PositionOccupied(p));
        }
        self.check_rule1(p, tile)?;
        self.slots[idx] = Some(tile);
        Ok(())
    }

    /// Face-color consistency of `tile` against all placed face neighbors.
    fn check_rule1(&self, p: (usize, usize, usize), tile: usize) -> Result<(), TilingError> {
        let colors = self.palette[tile];
        for axis in 0..3 {
            for dir in [-1i64, 1i64] {
                let mut q = [p.0 as i64, p.1 as i64, p.2 as i64];
                q[axis] += dir;
                let dims = [self.dims.0 as i64, self.dims.1 as i64, self.dims.2 as i64];
                if q[axis] < 0 || q[axis] >= dims[axis] {
                    continue;
                }
                let neighbor =
                    self.slots[self.index((q[0] as usize, q[1] as usize, q[2] as usize))];
                if let Some(nt) = neighbor {
                    if self.palette[nt][axis] != colors[axis] {
                        return Err(TilingError::Rule1Violation { position: p, axis });
                    }
                }
            }
        }
        Ok(())
    }

    /// Difference score of placing `tile` at `p`: the sum of `diff` against
    /// the 6 face, 12 line and 8 point neighbors. Empty slots contribute 0.
    ///
    /// Errors if the position is occupied or the tile breaks face-color
    /// consistency against placed neighbors.
    pub fn score_candidate(
        &self,
        p: (usize, usize, usize),
        tile: usize,
    ) -> Result<u32, TilingError> {
        if self.slots[self.index(p)].is_some() {
            return Err(TilingError::PositionOccupied(p));
        }
        self.check_rule1(p, tile)?;
        Ok(self.score_unchecked(p, tile))
    }

    fn score_unchecked(&self, p: (usize, usize, usize), tile: usize) -> u32 {
        let dims = [self.dims.0 as i64, self.dims.1 as i64, self.dims.2 as i64];
        let mut score = 0;
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let differing = (dx != 0) as u32 + (dy != 0) as u32 + (dz != 0) as u32;
                    if differing == 0 {
                        continue;
                    }
                    let q = [p.0 as i64 + dx, p.1 as i64 + dy, p.2 as i64 + dz];
                    if q.iter().zip(&dims).any(|(&c, &d)| c < 0 || c >= d) {
                        continue;
                    }
                    if let Some(nt) =
                        self.slots[self.index((q[0] as usize, q[1] as usize, q[2] as usize))]
                    {
                        let adjacency = match differing {
                            1 => Adjacency::Face,
                            2 => Adjacency::Line,
                            _ => Adjacency::Point,
                        };
                        score += diff(nt, tile, adjacency);
                    }
                }
            }
        }
        score
    }
}

/// Fills a grid from a full tile palette in scan order (z outer, y middle,
/// x inner). At each position the feasible tiles (face-color consistent)
/// are scored and an argmax tile is placed; score ties break uniformly at
/// random from the seeded RNG.
///
/// Deterministic for a given palette, dims and seed.
pub fn assemble(
    palette: &[[u8; 3]],
    dims: (usize, usize, usize),
    assembly_seed: u64,
    tileset_ref: &str,
) -> Assembly {
    let mut rng = ChaCha8Rng::seed_from_u64(assembly_seed);
    let mut builder = AssemblyBuilder::new(dims, palette.to_vec());
    for z in 0..dims.2 {
        for y in 0..dims.1 {
            for x in 0..dims.0 {
                // Colors constrained by already-placed face neighbors
                // (scan order means only the negative sides are placed).
                let mut required: [Option<u8>; 3] = [None, None, None];
                if x > 0 {
                    required[0] =
                        builder.slots[builder.index((x - 1, y, z))].map(|t| builder.palette[t][0]);
                }
                if y > 0 {
                    required[1] =
                        builder.slots[builder.index((x, y - 1, z))].map(|t| builder.palette[t][1]);
                }
                if z > 0 {
                    required[2] =
                        builder.slots[builder.index((x, y, z - 1))].map(|t| builder.palette[t][2]);
                }
                let candidates: Vec<usize> = (0..palette.len())
                    .filter(|&t| (0..3).all(|a| required[a].is_none_or(|c| palette[t][a] == c)))
                    .collect();
                // A full K^3 set has a tile for every color triple.
                assert!(
                    !candidates.is_empty(),
                    "full tile set always has a candidate"
                );
                let scores: Vec<u32> = candidates
                    .iter()
                    .map(|&t| builder.score_unchecked((x, y, z), t))
                    .collect();
                let best = *scores.iter().max().unwrap();
                let ties: Vec<usize> = candidates
                    .iter()
                    .zip(&scores)
                    .filter(|(_, &s)| s == best)
                    .map(|(&t, _)| t)
                    .collect();
                let chosen = if ties.len() == 1 {
                    ties[0]
                } else {
                    ties[rng.gen_range(0..ties.len())]
                };
                builder
                    .place((x, y, z), chosen)
                    .expect("candidate passed rule 1");
            }
        }
    }
    Assembly {
        dims,
        tiles: builder.slots.into_iter().map(|s| s.unwrap()).collect(),
        seed: assembly_seed,
        tileset_ref: tileset_ref.to_string(),
    }
}

/// Exhaustive face-color consistency check over every interior shared face.
pub fn verify_rule1(assembly: &Assembly, palette: &[[u8; 3]]) -> bool {
    let (nx, ny, nz) = assembly.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let t = assembly.tile_at(x, y, z);
                if x + 1 < nx && palette[t][0] != palette[assembly.tile_at(x + 1, y, z)][0] {
                    return false;
                }
                if y + 1 < ny && palette[t][1] != palette[assembly.tile_at(x, y + 1, z)][1] {
                    return false;
                }
                if z + 1 < nz && palette[t][2] != palette[assembly.tile_at(x, y, z + 1)][2] {
                    return false;
                }
            }
        }
    }
    true
}

/// Re-scores every placed tile against the final neighborhood restricted to
/// positions placed before it, confirming each was an argmax choice.
pub fn verify_greedy_scores(assembly: &Assembly, palette: &[[u8; 3]]) -> bool {
    let mut builder = AssemblyBuilder::new(assembly.dims, palette.to_vec());
    let (nx, ny, nz) = assembly.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let placed = assembly.tile_at(x, y, z);
                let mut required: [Option<u8>; 3] = [None, None, None];
                if x > 0 {
                    required[0] = Some(palette[assembly.tile_at(x - 1, y, z)][0]);
                }
                if y > 0 {
                    required[1] = Some(palette[assembly.tile_at(x, y - 1, z)][1]);
                }
                if z > 0 {
                    required[2] = Some(palette[assembly.tile_at(x, y, z - 1)][2]);
                }
                let best = (0..palette.len())
                    .filter(|&t| (0..3).all(|a| required[a].is_none_or(|c| palette[t][a] == c)))
                    .map(|t| builder.score_unchecked((x, y, z), t))
                    .max()
                    .unwrap();
                if builder.score_unchecked((x, y, z), placed) != best {
                    return false;
                }
                builder.place((x, y, z), placed).unwrap();
            }
        }
    }
    true
}

/// Builds a functionally graded bar: one row of cells whose target
/// porosities vary per segment behind shared boundary patterns.
///
/// All segments must carry the same color on abutting faces; the returned
/// assembly is `segments x 1 x 1` with tile ids in segment order.
pub fn build_gradient_bar(
    designer: &UnitDesigner,
    base_spec: &DesignSpec,
    porosities: &[f64],
    colors: &[[u8; 3]],
) -> Result<(Vec<UnitCell>, Assembly), TilingError> {
    assert_eq!(porosities.len(), colors.len());
    for pair in colors.windows(2) {
        if pair[0][0] != pair[1][0] {
            return Err(TilingError::Rule1Violation {
                position: (1, 0, 0),
                axis: 0,
            });
        }
    }
    let n_face = designer.suggested_face_count(base_spec);
    let mut palette: Vec<u8> = colors.iter().flatten().copied().collect();
    palette.sort_unstable();
    palette.dedup();
    let mut last_err = None;
    'round: for round in 0..crate::unit::PATTERN_TRIES {
        // One shared pattern per color, sampled from the base seed so every
        // segment sees identical boundary geometry.
        let mut by_color = std::collections::HashMap::new();
        for &c in &palette {
            by_color.insert(
                c,
                designer.face_pattern(
                    base_spec,
                    c,
                    n_face,
                    seed::derive_indexed(
                        base_spec.seed,
                        "facepattern",
                        (round as u64) << 16 | c as u64,
                    ),
                )?,
            );
        }
        let mut cells = Vec::with_capacity(porosities.len());
        for (i, (&rho, &c)) in porosities.iter().zip(colors).enumerate() {
            let mut spec = *base_spec;
            spec.target_porosity = rho;
            spec.seed = seed::derive_indexed(base_spec.seed, "segment", i as u64);
            let patterns = [
                by_color[&c[0]].clone(),
                by_color[&c[1]].clone(),
                by_color[&c[2]].clone(),
            ];
            let model = designer
                .calibrate(&spec, &patterns, &calibration_counts(&spec), 1)
                .map_err(TilingError::Unit)?;
            match designer.generate_unit(&spec, &patterns, &model) {
                Ok(cell) => cells.push(cell),
                Err(e @ UnitError::GenerationExhausted { .. }) => {
                    last_err = Some(e);
                    continue 'round;
                }
                Err(other) => return Err(other.into()),
            }
        }
        let assembly = Assembly {
            dims: (porosities.len(), 1, 1),
            tiles: (0..porosities.len()).collect(),
            seed: base_spec.seed,
            tileset_ref: "gradient-bar".to_string(),
        };
        return Ok((cells, assembly));
    }
    Err(last_err
        .expect("exhausted rounds imply a generation error")
        .into())
}

// ------------------------------------------------------------------------
// Assembly-scale rasterization
// ------------------------------------------------------------------------

/// Samples all tile fields of an assembly onto one value grid at
/// `res_per_cell` voxels per cell (voxel centers).
///
/// Each voxel is evaluated against its owning tile only; ownership of
/// shared planes goes to the lower-index tile.
pub fn rasterize_assembly(
    assembly: &Assembly,
    fields: &[CombinedField],
    res_per_cell: usize,
) -> (Vec<f64>, (usize, usize, usize)) {
    let (tx, ty, tz) = assembly.dims;
    let cell = fields[0].cell_side();
    let dims = (tx * res_per_cell, ty * res_per_cell, tz * res_per_cell);
    let pitch = cell / res_per_cell as f64;
    let mut values = vec![0.0f64; dims.0 * dims.1 * dims.2];
    let slab_nz = res_per_cell; // one tile layer per slab
    values
        .par_chunks_mut(dims.0 * dims.1 * slab_nz)
        .enumerate()
        .for_each(|(iz, slab)| {
            let z_lo = iz * slab_nz;
            for ty_i in 0..ty {
                for tx_i in 0..tx {
                    let field = &fields[assembly.tile_at(tx_i, ty_i, iz)];
                    let offset = Vec3::new(
                        -(tx_i as f64) * cell,
                        -(ty_i as f64) * cell,
                        -(iz as f64) * cell,
                    );
                    let clip = [
                        [tx_i * res_per_cell, (tx_i + 1) * res_per_cell],
                        [ty_i * res_per_cell, (ty_i + 1) * res_per_cell],
                        [z_lo, z_lo + slab_nz],
                    ];
                    accumulate_field_slab(
                        slab, dims.0, dims.1, z_lo, slab_nz, pitch, offset, field, &clip,
                    );
                }
            }
        });
    (values, dims)
}

/// Thresholds an assembly rasterization into a solid/void grid.
pub fn voxelize_assembly(
    assembly: &Assembly,
    fields: &[CombinedField],
    res_per_cell: usize,
    level_c: f64,
) -> VoxelGrid {
    let (values, dims) = rasterize_assembly(assembly, fields, res_per_cell);
    let occupancy = values.iter().map(|&v| v < level_c).collect();
    VoxelGrid::from_occupancy(
        dims.0,
        dims.1,
        dims.2,
        fields[0].cell_side() / res_per_cell as f64,
        Vec3::zeros(),
        occupancy,
    )
}

/// Samples all tile fields at the lattice corners of an assembly-wide cube
/// grid (for isosurface extraction). Corners on shared planes are owned by
/// the lower-index tile.
pub fn sample_assembly_lattice(
    assembly: &Assembly,
    fields: &[CombinedField],
    res_per_cell: usize,
) -> (Vec<f64>, (usize, usize, usize)) {
    let (tx, ty, tz) = assembly.dims;
    let cell = fields[0].cell_side();
    let corner_dims = (
        tx * res_per_cell + 1,
        ty * res_per_cell + 1,
        tz * res_per_cell + 1,
    );
    let pitch = cell / res_per_cell as f64;
    let mut values = vec![0.0f64; corner_dims.0 * corner_dims.1 * corner_dims.2];
    let half = Vec3::new(0.5 * pitch, 0.5 * pitch, 0.5 * pitch);
    let corner_clip = |t: usize, r: usize| -> [usize; 2] {
        let lo = if t == 0 { 0 } else { t * r + 1 };
        [lo, (t + 1) * r + 1]
    };
    for tz_i in 0..tz {
        for ty_i in 0..ty {
            for tx_i in 0..tx {
                let field = &fields[assembly.tile_at(tx_i, ty_i, tz_i)];
                let offset = Vec3::new(
                    -(tx_i as f64) * cell,
                    -(ty_i as f64) * cell,
                    -(tz_i as f64) * cell,
                ) - half;
                let clip = [
                    corner_clip(tx_i, res_per_cell),
                    corner_clip(ty_i, res_per_cell),
                    corner_clip(tz_i, res_per_cell),
                ];
                accumulate_field_slab(
                    &mut values,
                    corner_dims.0,
                    corner_dims.1,
                    0,
                    corner_dims.2,
                    pitch,
                    offset,
                    field,
                    &clip,
                );
            }
        }
    }
    (values, corner_dims)
}

// ------------------------------------------------------------------------
// Serialization
// ------------------------------------------------------------------------

const ASSEMBLY_HEADER: &str = "sppm-assembly v1";
const TILESET_MANIFEST: &str = "tileset.txt";
const TILESET_HEADER: &str = "sppm-tileset v1";

/// Serializes an assembly to its text format.
pub fn write_assembly(assembly: &Assembly) -> String {
    let ids: Vec<String> = assembly.tiles.iter().map(|t| t.to_string()).collect();
    format!(
        "{}\ndims = {} {} {}\nseed = {}\ntileset = {}\ntiles = {}\n",
        ASSEMBLY_HEADER,
        assembly.dims.0,
        assembly.dims.1,
        assembly.dims.2,
        assembly.seed,
        assembly.tileset_ref,
        ids.join(" ")
    )
}

/// Parses an assembly file produced by [`write_assembly`].
pub fn read_assembly(text: &str) -> Result<Assembly, TilingError> {
    let bad = |m: &str| TilingError::BadAssemblyFile(m.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(ASSEMBLY_HEADER) {
        return Err(bad("missing header"));
    }
    let mut dims = None;
    let mut seed = None;
    let mut tileset = None;
    let mut tiles = None;
    for line in lines {
        let Some((key, value)) = line.split_once(" = ") else {
            continue;
        };
        match key.trim() {
            "dims" => {
                let parts: Vec<usize> = value
                    .split_whitespace()
                    .map(|v| v.parse().map_err(|_| bad("bad dims")))
                    .collect::<Result<_, _>>()?;
                if parts.len() != 3 {
                    return Err(bad("dims needs three entries"));
                }
                dims = Some((parts[0], parts[1], parts[2]));
            }
            "seed" => seed = Some(value.parse().map_err(|_| bad("bad seed"))?),
            "tileset" => tileset = Some(value.to_string()),
            "tiles" => {
                tiles = Some(
                    value
                        .split_whitespace()
                        .map(|v| v.parse().map_err(|_| bad("bad tile id")))
                        .collect::<Result<Vec<usize>, _>>()?,
                );
            }
            _ => return Err(bad(&format!("unknown key {key}"))),
        }
    }
    let dims = dims.ok_or_else(|| bad("missing dims"))?;
    let tiles = tiles.ok_or_else(|| bad("missing tiles"))?;
    if tiles.len() != dims.0 * dims.1 * dims.2 {
        return Err(bad("tile count does not match dims"));
    }
    Ok(Assembly {
        dims,
        tiles,
        seed: seed.ok_or_else(|| bad("missing seed"))?,
        tileset_ref: tileset.ok_or_else(|| bad("missing tileset"))?,
    })
}

/// Writes the tile set as a directory: a manifest plus one design file per
/// tile.
pub fn save_tile_set(set: &TileSet, dir: &Path) -> Result<(), TilingError> {
    fs::create_dir_all(dir)?;
    let mut manifest = format!(
        "{}\ncolors = {}\ntiles = {}\n",
        TILESET_HEADER,
        set.colors,
        set.tiles.len()
    );
    for tile in &set.tiles {
        let name = format!("tile_{:03}.txt", tile.id);
        fs::write(dir.join(&name), write_design(&tile.cell))?;
        manifest.push_str(&format!(
            "tile {} = {} colors {} {} {}\n",
            tile.id, name, tile.colors[0], tile.colors[1], tile.colors[2]
        ));
    }
    fs::write(dir.join(TILESET_MANIFEST), manifest)?;
    Ok(())
}

/// Loads a tile set directory written by [`save_tile_set`].
pub fn load_tile_set(dir: &Path) -> Result<TileSet, TilingError> {
    let bad = |m: &str| TilingError::BadTileSet(m.to_string());
    let manifest = fs::read_to_string(dir.join(TILESET_MANIFEST))?;
    let mut lines = manifest.lines();
    if lines.next() != Some(TILESET_HEADER) {
        return Err(bad("missing manifest header"));
    }
    let mut colors = 0usize;
    let mut count = 0usize;
    let mut tiles = Vec::new();
    for line in lines {
        if let Some(value) = line.strip_prefix("colors = ") {
            colors = value.parse().map_err(|_| bad("bad colors"))?;
        } else if let Some(value) = line.strip_prefix("tiles = ") {
            count = value.parse().map_err(|_| bad("bad tile count"))?;
        } else if let Some(rest) = line.strip_prefix("tile ") {
            let (id_part, rhs) = rest.split_once(" = ").ok_or_else(|| bad("bad tile line"))?;
            let id: usize = id_part.trim().parse().map_err(|_| bad("bad tile id"))?;
            let parts: Vec<&str> = rhs.split_whitespace().collect();
            if parts.len() != 5 || parts[1] != "colors" {
                return Err(bad("bad tile record"));
            }
            let cell = read_design(&fs::read_to_string(dir.join(parts[0]))?)?;
            let c = [
                parts[2].parse().map_err(|_| bad("bad color"))?,
                parts[3].parse().map_err(|_| bad("bad color"))?,
                parts[4].parse().map_err(|_| bad("bad color"))?,
            ];
            tiles.push(Tile {
                id,
                colors: c,
                cell,
            });
        }
    }
    if tiles.len() != count {
        return Err(bad("tile count mismatch"));
    }
    tiles.sort_by_key(|t| t.id);
    Ok(TileSet { colors, tiles })
}
