//! Voxel sampling of the implicit field.
//!
//! Occupancy is solid where the field stays below the level value. Field
//! values are accumulated kernel-by-kernel over each kernel's support box
//! rather than voxel-by-voxel over all kernels, which keeps the cost
//! proportional to the occupied volume. The per-voxel summation order is
//! fixed (pores in list order, then tunnels), so rasterized values match
//! [`CombinedField::value`] bit for bit and are independent of thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::field::{CombinedField, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum VoxelError {
    #[error("resolution must be at least 2 per axis, got {0}x{1}x{2}")]
    ResolutionTooSmall(usize, usize, usize),
    #[error("grid contains no solid voxels")]
    EmptySolid,
}

/// Boolean solid/void occupancy on a regular grid.
///
/// Voxel centers sit at `origin + (i + 0.5) * pitch`, so cell faces fall on
/// voxel boundaries, never on centers.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub pitch: f64,
    pub origin: Vec3,
    /// Solid flags, x-fastest: index = x + nx * (y + ny * z).
    pub occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn from_occupancy(
        nx: usize,
        ny: usize,
        nz: usize,
        pitch: f64,
        origin: Vec3,
        occupancy: Vec<bool>,
    ) -> Self {
        assert_eq!(occupancy.len(), nx * ny * nz);
        Self {
            nx,
            ny,
            nz,
            pitch,
            origin,
            occupancy,
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn solid(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[self.index(x, y, z)]
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    pub fn solid_count(&self) -> usize {
        self.occupancy.iter().filter(|&&s| s).count()
    }

    /// Void fraction of the grid.
    pub fn porosity(&self) -> f64 {
        let total = self.occupancy.len();
        let void = total - self.solid_count();
        void as f64 / total as f64
    }

    /// World coordinates of a voxel center.
    pub fn center(&self, x: usize, y: usize, z: usize) -> Vec3 {
        self.origin
            + Vec3::new(
                (x as f64 + 0.5) * self.pitch,
                (y as f64 + 0.5) * self.pitch,
                (z as f64 + 0.5) * self.pitch,
            )
    }

    /// Fraction of outer-layer voxels whose solid flag differs between the
    /// two opposite faces normal to `axis` (0 = x, 1 = y, 2 = z).
    pub fn face_layer_mismatch(&self, axis: usize) -> f64 {
        let (n0, n1, last) = match axis {
            0 => (self.ny, self.nz, self.nx - 1),
            1 => (self.nx, self.nz, self.ny - 1),
            _ => (self.nx, self.ny, self.nz - 1),
        };
        let mut differing = 0usize;
        for b in 0..n1 {
            for a in 0..n0 {
                let (lo, hi) = match axis {
                    0 => (self.solid(0, a, b), self.solid(last, a, b)),
                    1 => (self.solid(a, 0, b), self.solid(a, last, b)),
                    _ => (self.solid(a, b, 0), self.solid(a, b, last)),
                };
                if lo != hi {
                    differing += 1;
                }
            }
        }
        differing as f64 / (n0 * n1) as f64
    }
}

/// Outcome of the solid-connectivity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    /// False when a removed component touched the outermost voxel layer;
    /// the caller must regenerate with a new seed.
    pub valid: bool,
    pub removed_components: usize,
    pub removed_touching_surface: bool,
}

/// Accumulates the field's kernel contributions into a z-slab of voxel
/// values.
///
/// `slab` covers z indices `z_lo..z_lo + slab_nz` of a grid with x/y extents
/// `nx`/`ny`. `offset` is `grid_origin - field_origin`: voxel centers map to
/// field-local coordinates as `offset + (i + 0.5) * pitch`. `clip` bounds the
/// voxel indices a kernel may touch (used for tile ownership in assemblies).
#[allow(clippy::too_many_arguments)]
pub(crate) fn accumulate_field_slab(
    slab: &mut [f64],
    nx: usize,
    ny: usize,
    z_lo: usize,
    slab_nz: usize,
    pitch: f64,
    offset: Vec3,
    field: &CombinedField,
    clip: &[[usize; 2]; 3],
) {
    let eps = field.cutoff_epsilon();
    let inv_pitch = 1.0 / pitch;
    // Index range (clamped) of field-local coordinates [lo, hi] on one axis.
    let axis_range = |lo: f64, hi: f64, off: f64, cmin: usize, cmax: usize| -> (usize, usize) {
        let a = ((lo - off) * inv_pitch - 0.5).floor() - 1.0;
        let b = ((hi - off) * inv_pitch - 0.5).ceil() + 1.0;
        let a = if a < cmin as f64 { cmin } else { a as usize };
        let b = if b < 0.0 {
            0
        } else {
            (b as usize + 1).min(cmax)
        };
        (a, b)
    };
    let z_hi = z_lo + slab_nz;
    let zc_min = clip[2][0].max(z_lo);
    let zc_max = clip[2][1].min(z_hi);

    for pore in field.pores() {
        let r = pore.support_radius(eps);
        let c = pore.center;
        let (x0, x1) = if r.is_finite() {
            axis_range(c.x - r, c.x + r, offset.x, clip[0][0], clip[0][1])
        } else {
            (clip[0][0], clip[0][1])
        };
        let (y0, y1) = if r.is_finite() {
            axis_range(c.y - r, c.y + r, offset.y, clip[1][0], clip[1][1])
        } else {
            (clip[1][0], clip[1][1])
        };
        let (z0, z1) = if r.is_finite() {
            axis_range(c.z - r, c.z + r, offset.z, zc_min, zc_max)
        } else {
            (zc_min, zc_max)
        };
        for z in z0.max(zc_min)..z1.min(zc_max) {
            let pz = offset.z + (z as f64 + 0.5) * pitch;
            for y in y0..y1 {
                let py = offset.y + (y as f64 + 0.5) * pitch;
                let row = (z - z_lo) * nx * ny + y * nx;
                for x in x0..x1 {
                    let px = offset.x + (x as f64 + 0.5) * pitch;
                    let v = pore.kernel(&Vec3::new(px, py, pz), eps);
                    if v != 0.0 {
                        slab[row + x] += v;
                    }
                }
            }
        }
    }

    for tunnel in field.tunnels() {
        let (a, b) = field.tunnel_segment(tunnel);
        let d = tunnel.support_distance(eps);
        let lo = Vec3::new(a.x.min(b.x), a.y.min(b.y), a.z.min(b.z));
        let hi = Vec3::new(a.x.max(b.x), a.y.max(b.y), a.z.max(b.z));
        let (x0, x1) = if d.is_finite() {
            axis_range(lo.x - d, hi.x + d, offset.x, clip[0][0], clip[0][1])
        } else {
            (clip[0][0], clip[0][1])
        };
        let (y0, y1) = if d.is_finite() {
            axis_range(lo.y - d, hi.y + d, offset.y, clip[1][0], clip[1][1])
        } else {
            (clip[1][0], clip[1][1])
        };
        let (z0, z1) = if d.is_finite() {
            axis_range(lo.z - d, hi.z + d, offset.z, zc_min, zc_max)
        } else {
            (zc_min, zc_max)
        };
        let ab = b - a;
        let len2 = ab.norm_squared();
        // Conservative squared-distance reject; the exact kernel truncation
        // test still runs for everything that passes.
        let d2_max = if d.is_finite() {
            d * d * 1.0001
        } else {
            f64::INFINITY
        };
        let mu = tunnel.weight;
        let ln_inv = if eps > 0.0 { -eps.ln() } else { f64::INFINITY };
        for z in z0.max(zc_min)..z1.min(zc_max) {
            let pz = offset.z + (z as f64 + 0.5) * pitch;
            for y in y0..y1 {
                let py = offset.y + (y as f64 + 0.5) * pitch;
                let row = (z - z_lo) * nx * ny + y * nx;
                for x in x0..x1 {
                    let px = offset.x + (x as f64 + 0.5) * pitch;
                    let p = Vec3::new(px, py, pz);
                    let pa = p - a;
                    let dist2 = if len2 == 0.0 {
                        pa.norm_squared()
                    } else {
                        let t = (pa.dot(&ab) / len2).clamp(0.0, 1.0);
                        (p - (a + ab * t)).norm_squared()
                    };
                    if dist2 > d2_max {
                        continue;
                    }
                    let dist = dist2.sqrt();
                    if mu * dist > ln_inv {
                        continue;
                    }
                    slab[row + x] += (-mu * dist).exp();
                }
            }
        }
    }
}

/// Samples the field on a full `resolution` grid over `[0, L]^3` and returns
/// the raw field values, x-fastest.
pub fn rasterize_field(field: &CombinedField, resolution: (usize, usize, usize)) -> Vec<f64> {
    let (nx, ny, nz) = resolution;
    let pitch = field.cell_side() / nx as f64;
    let mut values = vec![0.0f64; nx * ny * nz];
    let clip = [[0, nx], [0, ny], [0, nz]];
    let slab_nz = nz.div_ceil(rayon::current_num_threads().max(1)).max(1);
    values
        .par_chunks_mut(nx * ny * slab_nz)
        .enumerate()
        .for_each(|(k, slab)| {
            let z_lo = k * slab_nz;
            let this_nz = slab.len() / (nx * ny);
            accumulate_field_slab(
                slab,
                nx,
                ny,
                z_lo,
                this_nz,
                pitch,
                Vec3::zeros(),
                field,
                &clip,
            );
        });
    values
}

/// Samples the field and thresholds it against the level value `c`.
///
/// Solid where the field is below `c`. Deterministic and independent of the
/// rayon thread count.
pub fn voxelize(
    field: &CombinedField,
    c: f64,
    resolution: (usize, usize, usize),
) -> Result<VoxelGrid, VoxelError> {
    let (nx, ny, nz) = resolution;
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(VoxelError::ResolutionTooSmall(nx, ny, nz));
    }
    let values = rasterize_field(field, resolution);
    let occupancy = values.iter().map(|&v| v < c).collect();
    Ok(VoxelGrid {
        nx,
        ny,
        nz,
        pitch: field.cell_side() / nx as f64,
        origin: Vec3::zeros(),
        occupancy,
    })
}

/// Labels solid components under 6-connectivity. Returns per-voxel labels
/// (usize::MAX for void) and the voxel count of each component.
pub fn label_components(grid: &VoxelGrid) -> (Vec<usize>, Vec<usize>) {
    const UNLABELED: usize = usize::MAX;
    let mut labels = vec![UNLABELED; grid.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..grid.len() {
        if !grid.occupancy[start] || labels[start] != UNLABELED {
            continue;
        }
        let label = sizes.len();
        let mut size = 0usize;
        stack.push(start);
        labels[start] = label;
        while let Some(idx) = stack.pop() {
            size += 1;
            let x = idx % grid.nx;
            let y = (idx / grid.nx) % grid.ny;
            let z = idx / (grid.nx * grid.ny);
            let mut visit = |nidx: usize| {
                if grid.occupancy[nidx] && labels[nidx] == UNLABELED {
                    labels[nidx] = label;
                    stack.push(nidx);
                }
            };
            if x > 0 {
                visit(idx - 1);
            }
            if x + 1 < grid.nx {
                visit(idx + 1);
            }
            if y > 0 {
                visit(idx - grid.nx);
            }
            if y + 1 < grid.ny {
                visit(idx + grid.nx);
            }
            if z > 0 {
                visit(idx - grid.nx * grid.ny);
            }
            if z + 1 < grid.nz {
                visit(idx + grid.nx * grid.ny);
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Keeps the largest solid component (ties break to the lowest label, i.e.
/// first in scan order) and clears the rest.
///
/// The result is invalid when a removed component contains a voxel in the
/// outermost layer: clearing it would break boundary periodicity, so the
/// caller must regenerate.
pub fn validate_solid(grid: &VoxelGrid) -> Result<(VoxelGrid, ValidationReport), VoxelError> {
    let (labels, sizes) = label_components(grid);
    if sizes.is_empty() {
        return Err(VoxelError::EmptySolid);
    }
    let keep = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1, std::cmp::Reverse(a.0)).cmp(&(b.1, std::cmp::Reverse(b.0))))
        .map(|(i, _)| i)
        .unwrap();
    let mut cleaned = grid.clone();
    let mut removed_touching_surface = false;
    for z in 0..grid.nz {
        for y in 0..grid.ny {
            for x in 0..grid.nx {
                let idx = grid.index(x, y, z);
                let label = labels[idx];
                if label == usize::MAX || label == keep {
                    continue;
                }
                cleaned.occupancy[idx] = false;
                let on_surface = x == 0
                    || y == 0
                    || z == 0
                    || x == grid.nx - 1
                    || y == grid.ny - 1
                    || z == grid.nz - 1;
                if on_surface {
                    removed_touching_surface = true;
                }
            }
        }
    }
    let report = ValidationReport {
        valid: !removed_touching_surface,
        removed_components: sizes.len() - 1,
        removed_touching_surface,
    };
    Ok((cleaned, report))
}
