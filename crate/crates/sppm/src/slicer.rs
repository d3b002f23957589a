//! Mesh-free fabrication output.
//!
//! Layer images come straight from the implicit fields: each pixel is lit
//! when its point lies inside the part model AND classifies as solid in the
//! owning tile's field. No triangle mesh is ever materialized; peak memory
//! is one layer buffer plus the tile fields.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{classify_value, CombinedField, RegionClass, Vec3};
use crate::mesh::TriangleMesh;
use crate::tiling::Assembly;
use crate::voxel::accumulate_field_slab;

#[derive(Debug, Error)]
pub enum SliceError {
    #[error("unknown primitive spec '{0}' (expected box:..., sphere:..., cylinder:...)")]
    BadPrimitive(String),
    #[error("mesh parity is inconsistent along probe rays (column {column:?} crossed {crossings} times); the mesh is not watertight")]
    OpenMesh {
        column: (usize, usize),
        crossings: usize,
    },
    #[error("OBJ input is malformed: {0}")]
    BadObj(String),
    #[error("model bounding box {0:?}..{1:?} exceeds the print volume {2:?}")]
    ModelOutsidePrintVolume(Vec3, Vec3, Vec3),
    #[error("slice job invalid: {0}")]
    BadJob(String),
    #[error("layer {layer}: {source}")]
    LayerIo {
        layer: usize,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Implicit part model: a total, deterministic inside test plus bounds.
/// All coordinates are in cell units (one unit cell = 1.0).
#[derive(Debug, Clone)]
pub enum ModelField {
    Box {
        min: Vec3,
        max: Vec3,
    },
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Z-aligned cylinder.
    Cylinder {
        center_x: f64,
        center_y: f64,
        z_min: f64,
        z_max: f64,
        radius: f64,
    },
    /// Inside/outside cached on a regular grid (from a watertight mesh).
    Grid {
        origin: Vec3,
        pitch: f64,
        dims: (usize, usize, usize),
        inside: Vec<bool>,
    },
}

impl ModelField {
    pub fn inside(&self, p: &Vec3) -> bool {
        match self {
            ModelField::Box { min, max } => (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a]),
            ModelField::Sphere { center, radius } => (p - center).norm_squared() <= radius * radius,
            ModelField::Cylinder {
                center_x,
                center_y,
                z_min,
                z_max,
                radius,
            } => {
                let dx = p.x - center_x;
                let dy = p.y - center_y;
                p.z >= *z_min && p.z <= *z_max && dx * dx + dy * dy <= radius * radius
            }
            ModelField::Grid {
                origin,
                pitch,
                dims,
                inside,
            } => {
                let q = (p - origin) / *pitch;
                if q.x < 0.0 || q.y < 0.0 || q.z < 0.0 {
                    return false;
                }
                let (x, y, z) = (q.x as usize, q.y as usize, q.z as usize);
                if x >= dims.0 || y >= dims.1 || z >= dims.2 {
                    return false;
                }
                inside[x + dims.0 * (y + dims.1 * z)]
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        match self {
            ModelField::Box { min, max } => (*min, *max),
            ModelField::Sphere { center, radius } => {
                let r = Vec3::new(*radius, *radius, *radius);
                (center - r, center + r)
            }
            ModelField::Cylinder {
                center_x,
                center_y,
                z_min,
                z_max,
                radius,
            } => (
                Vec3::new(center_x - radius, center_y - radius, *z_min),
                Vec3::new(center_x + radius, center_y + radius, *z_max),
            ),
            ModelField::Grid {
                origin,
                pitch,
                dims,
                ..
            } => (
                *origin,
                origin + Vec3::new(dims.0 as f64, dims.1 as f64, dims.2 as f64) * *pitch,
            ),
        }
    }
}

/// Parses a primitive spec string:
/// `box:x0,y0,z0,x1,y1,z1`, `sphere:cx,cy,cz,r`,
/// `cylinder:cx,cy,z0,z1,r`. Coordinates in cell units.
pub fn parse_primitive(spec: &str) -> Result<ModelField, SliceError> {
    let bad = || SliceError::BadPrimitive(spec.to_string());
    let (kind, args) = spec.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match (kind, nums.len()) {
        ("box", 6) => Ok(ModelField::Box {
            min: Vec3::new(nums[0], nums[1], nums[2]),
            max: Vec3::new(nums[3], nums[4], nums[5]),
        }),
        ("sphere", 4) => Ok(ModelField::Sphere {
            center: Vec3::new(nums[0], nums[1], nums[2]),
            radius: nums[3],
        }),
        ("cylinder", 5) => Ok(ModelField::Cylinder {
            center_x: nums[0],
            center_y: nums[1],
            z_min: nums[2],
            z_max: nums[3],
            radius: nums[4],
        }),
        _ => Err(bad()),
    }
}

/// Parses a minimal ASCII OBJ (v and f records; polygons fan-triangulated).
pub fn parse_obj(text: &str) -> Result<TriangleMesh, SliceError> {
    let bad = |m: &str| SliceError::BadObj(m.to_string());
    let mut mesh = TriangleMesh::default();
    for (ln, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = |_: &str| -> Result<f64, SliceError> {
                    parts
                        .next()
                        .ok_or_else(|| bad(&format!("short vertex at line {}", ln + 1)))?
                        .parse()
                        .map_err(|_| bad(&format!("bad vertex at line {}", ln + 1)))
                };
                let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                mesh.vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        first
                            .parse::<usize>()
                            .map_err(|_| bad(&format!("bad face index at line {}", ln + 1)))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(bad(&format!(
                        "face with fewer than 3 vertices at line {}",
                        ln + 1
                    )));
                }
                for k in 1..idx.len() - 1 {
                    mesh.triangles
                        .push([idx[0] - 1, idx[k] - 1, idx[k + 1] - 1]);
                }
            }
            _ => {}
        }
    }
    if mesh.triangles.is_empty() {
        return Err(bad("no faces"));
    }
    Ok(mesh)
}

/// Builds a cached inside/outside grid from a watertight mesh by ray-parity
/// column fills, after uniformly fitting the mesh into `target_box`.
///
/// Fails with [`SliceError::OpenMesh`] when any probe column crosses the
/// surface an odd number of times.
pub fn model_from_mesh(
    mesh: &TriangleMesh,
    target_box: (Vec3, Vec3),
    resolution: usize,
) -> Result<ModelField, SliceError> {
    // Fit: uniform scale, centered.
    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for v in &mesh.vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let extent = hi - lo;
    let target_extent = target_box.1 - target_box.0;
    let scale = (0..3)
        .map(|a| target_extent[a] / extent[a].max(1e-12))
        .fold(f64::INFINITY, f64::min);
    let center = (lo + hi) * 0.5;
    let target_center = (target_box.0 + target_box.1) * 0.5;
    let to_cell = |v: &Vec3| (v - center) * scale + target_center;

    let vertices: Vec<Vec3> = mesh.vertices.iter().map(to_cell).collect();
    let (dims, pitch, origin) = {
        let longest = (0..3).map(|a| target_extent[a]).fold(0.0f64, f64::max);
        let pitch = longest / resolution as f64;
        let dims = (
            ((target_extent.x / pitch).ceil() as usize).max(1),
            ((target_extent.y / pitch).ceil() as usize).max(1),
            ((target_extent.z / pitch).ceil() as usize).max(1),
        );
        (dims, pitch, target_box.0)
    };

    let mut inside = vec![false; dims.0 * dims.1 * dims.2];
    // Deterministic sub-pixel jitter keeps probe rays off edges/vertices.
    let jitter = pitch * 2.939_887e-4;
    for k in 0..dims.2 {
        for j in 0..dims.1 {
            let yj = origin.y + (j as f64 + 0.5) * pitch + jitter;
            let zk = origin.z + (k as f64 + 0.5) * pitch + jitter * std::f64::consts::SQRT_2;
            let mut crossings: Vec<f64> = Vec::new();
            for t in &mesh.triangles {
                let (a, b, c) = (&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]);
                // Projected edge functions in the (y, z) plane.
                let e = |p: &Vec3, q: &Vec3| (q.y - p.y) * (zk - p.z) - (q.z - p.z) * (yj - p.y);
                let (e0, e1, e2) = (e(a, b), e(b, c), e(c, a));
                let area = (b.y - a.y) * (c.z - a.z) - (b.z - a.z) * (c.y - a.y);
                if area == 0.0 {
                    continue; // parallel to the ray; neighbors cover it
                }
                let inside_tri =
                    (e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0) || (e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0);
                if !inside_tri {
                    continue;
                }
                // Barycentric interpolation of the crossing x.
                let (w0, w1, w2) = (e1 / area, e2 / area, e0 / area);
                crossings.push(w0 * a.x + w1 * b.x + w2 * c.x);
            }
            if !crossings.len().is_multiple_of(2) {
                return Err(SliceError::OpenMesh {
                    column: (j, k),
                    crossings: crossings.len(),
                });
            }
            crossings.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for pair in crossings.chunks(2) {
                let (x0, x1) = (pair[0], pair[1]);
                let i0 = (((x0 - origin.x) / pitch - 0.5).ceil().max(0.0)) as usize;
                let i1 = ((x1 - origin.x) / pitch - 0.5).floor();
                if i1 < 0.0 {
                    continue;
                }
                for i in i0..=(i1 as usize).min(dims.0 - 1) {
                    inside[i + dims.0 * (j + dims.1 * k)] = true;
                }
            }
        }
    }
    Ok(ModelField::Grid {
        origin,
        pitch,
        dims,
        inside,
    })
}

/// Physical parameters of one print job.
#[derive(Debug, Clone)]
pub struct SliceJob {
    /// Physical size of one unit cell in millimeters.
    pub mm_per_cell: f64,
    pub layer_um: f64,
    pub pixel_um: f64,
    pub out_dir: PathBuf,
}

/// Summary of a produced slice stack.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    pub layers: usize,
    pub width: usize,
    pub height: usize,
    pub total_bytes: u64,
    /// SHA-256 digest per layer file, in layer order.
    pub digests: Vec<String>,
}

/// Renders one layer into 8-bit pixels: 255 where the point lies inside the
/// model and classifies solid in the owning tile's field, 0 elsewhere.
#[allow(clippy::too_many_arguments)]
pub fn render_layer(
    model: &ModelField,
    assembly: &Assembly,
    fields: &[CombinedField],
    width: usize,
    height: usize,
    pitch_cells: f64,
    z_cell: f64,
    level_c: f64,
) -> Vec<u8> {
    let cell = fields[0].cell_side();
    let (tx, ty, tz) = assembly.dims;
    let iz = owner_index(z_cell, cell, tz);
    let mut values = vec![0.0f64; width * height];

    // Pixel ranges owned by each tile column/row.
    let ranges = |count: usize, tiles: usize| -> Vec<[usize; 2]> {
        let mut bounds = vec![[usize::MAX, 0usize]; tiles];
        for i in 0..count {
            let c = (i as f64 + 0.5) * pitch_cells;
            let t = owner_index(c, cell, tiles);
            bounds[t][0] = bounds[t][0].min(i);
            bounds[t][1] = bounds[t][1].max(i + 1);
        }
        bounds
            .iter()
            .map(|b| if b[0] == usize::MAX { [0, 0] } else { *b })
            .collect()
    };
    let x_ranges = ranges(width, tx);
    let y_ranges = ranges(height, ty);

    for ty_i in 0..ty {
        for tx_i in 0..tx {
            let field = &fields[assembly.tile_at(tx_i, ty_i, iz)];
            let offset = Vec3::new(
                -(tx_i as f64) * cell,
                -(ty_i as f64) * cell,
                z_cell - (iz as f64) * cell - 0.5 * pitch_cells,
            );
            let clip = [x_ranges[tx_i], y_ranges[ty_i], [0, 1]];
            accumulate_field_slab(
                &mut values,
                width,
                height,
                0,
                1,
                pitch_cells,
                offset,
                field,
                &clip,
            );
        }
    }

    let mut pixels = vec![0u8; width * height];
    for j in 0..height {
        for i in 0..width {
            let p = Vec3::new(
                (i as f64 + 0.5) * pitch_cells,
                (j as f64 + 0.5) * pitch_cells,
                z_cell,
            );
            let idx = i + width * j;
            if model.inside(&p) && classify_value(values[idx], level_c) == RegionClass::Solid {
                pixels[idx] = 255;
            }
        }
    }
    pixels
}

/// Index of the tile owning coordinate `c`; points exactly on a shared
/// plane belong to the lower-index tile.
fn owner_index(c: f64, cell: f64, tiles: usize) -> usize {
    let q = c / cell;
    let floor = q.floor();
    let idx = if q == floor && q > 0.0 {
        floor as usize - 1
    } else {
        floor as usize
    };
    idx.min(tiles - 1)
}

/// Boolean-intersects the model with the assembled porous field and writes
/// one grayscale PNG per layer plus a manifest.
///
/// Layers are sampled at mid-height and rendered concurrently; output bytes
/// are deterministic.
pub fn slice(
    model: &ModelField,
    assembly: &Assembly,
    fields: &[CombinedField],
    level_c: f64,
    job: &SliceJob,
) -> Result<SliceReport, SliceError> {
    if job.layer_um <= 0.0 || job.pixel_um <= 0.0 || job.mm_per_cell <= 0.0 {
        return Err(SliceError::BadJob(
            "layer, pixel and cell sizes must be positive".into(),
        ));
    }
    let cell = fields[0].cell_side();
    let (tx, ty, tz) = assembly.dims;
    let volume_max = Vec3::new(tx as f64 * cell, ty as f64 * cell, tz as f64 * cell);
    let (mlo, mhi) = model.bounding_box();
    let eps = 1e-9 * cell;
    if (0..3).any(|a| mlo[a] < -eps || mhi[a] > volume_max[a] + eps) {
        return Err(SliceError::ModelOutsidePrintVolume(mlo, mhi, volume_max));
    }

    let pitch_cells = job.pixel_um / 1000.0 / job.mm_per_cell * cell;
    let layer_cells = job.layer_um / 1000.0 / job.mm_per_cell * cell;
    let width = (volume_max.x / pitch_cells).ceil() as usize;
    let height = (volume_max.y / pitch_cells).ceil() as usize;
    let layers = (volume_max.z / layer_cells).ceil() as usize;

    fs::create_dir_all(&job.out_dir)?;
    let results: Vec<Result<(String, u64), SliceError>> = (0..layers)
        .into_par_iter()
        .map(|k| {
            let z_cell = (k as f64 + 0.5) * layer_cells;
            let pixels = render_layer(
                model,
                assembly,
                fields,
                width,
                height,
                pitch_cells,
                z_cell,
                level_c,
            );
            let img = image::GrayImage::from_raw(width as u32, height as u32, pixels)
                .expect("buffer matches dimensions");
            let path = job.out_dir.join(format!("slice_{k:05}.png"));
            img.save(&path).map_err(|e| SliceError::LayerIo {
                layer: k,
                source: std::io::Error::other(e),
            })?;
            let bytes = fs::read(&path).map_err(|e| SliceError::LayerIo {
                layer: k,
                source: e,
            })?;
            Ok((hex_digest(&bytes), bytes.len() as u64))
        })
        .collect();

    let mut digests = Vec::with_capacity(layers);
    let mut total_bytes = 0u64;
    for r in results {
        let (digest, bytes) = r?;
        digests.push(digest);
        total_bytes += bytes;
    }

    let mut manifest = fs::File::create(job.out_dir.join("manifest.txt"))?;
    writeln!(manifest, "sppm-slices v1")?;
    writeln!(manifest, "layers = {layers}")?;
    writeln!(manifest, "width = {width}")?;
    writeln!(manifest, "height = {height}")?;
    writeln!(manifest, "pixel_um = {}", job.pixel_um)?;
    writeln!(manifest, "layer_um = {}", job.layer_um)?;
    writeln!(manifest, "mm_per_cell = {}", job.mm_per_cell)?;
    writeln!(
        manifest,
        "physical_mm = {} {} {}",
        volume_max.x / cell * job.mm_per_cell,
        volume_max.y / cell * job.mm_per_cell,
        volume_max.z / cell * job.mm_per_cell
    )?;
    for (k, d) in digests.iter().enumerate() {
        writeln!(manifest, "layer {k:05} slice_{k:05}.png sha256={d}")?;
    }
    Ok(SliceReport {
        layers,
        width,
        height,
        total_bytes,
        digests,
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
