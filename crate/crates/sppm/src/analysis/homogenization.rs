//! Periodic voxel homogenization of linear elasticity.
//!
//! Solid voxels become identical trilinear hexahedral elements; void voxels
//! are omitted. Periodicity is enforced by wrapping node indices, which
//! pairs opposite boundary degrees of freedom. Six unit macroscopic strain
//! cases are solved matrix-free with a Jacobi-preconditioned conjugate
//! gradient, and the effective stiffness is the energy average of the total
//! (affine + fluctuation) fields.

use rayon::prelude::*;

use super::{AnalysisError, BaseMaterial, ElasticTensor};
use crate::voxel::VoxelGrid;

/// Relative residual target of the PCG solves.
const CG_TOLERANCE: f64 = 1e-6;
const CG_MAX_ITERS: usize = 25_000;
/// Iteration window for stagnation detection.
const CG_STALL_WINDOW: usize = 1_000;

/// Gauss point coordinate in natural coordinates.
const GP: f64 = 0.577_350_269_189_625_8; // 1 / sqrt(3)

/// Corner offsets; local node order of the hexahedral element.
const CORNER: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (1, 1, 1),
    (0, 1, 1),
];

type Ke = [[f64; 24]; 24];

/// Element stiffness of a unit-cube trilinear hexahedron with the given
/// base material, by 2x2x2 Gauss quadrature. Strain rows use the Voigt
/// order (11, 22, 33, 23, 13, 12) with engineering shear.
#[allow(clippy::needless_range_loop)]
fn element_stiffness(base: &BaseMaterial) -> Ke {
    let d = base.stiffness().0;
    let mut ke = [[0.0f64; 24]; 24];
    for gz in [-GP, GP] {
        for gy in [-GP, GP] {
            for gx in [-GP, GP] {
                // dN/dx on the unit cube: natural derivatives scaled by 2.
                let mut dndx = [[0.0f64; 3]; 8];
                for (i, &(cx, cy, cz)) in CORNER.iter().enumerate() {
                    let (sx, sy, sz) = (
                        2.0 * cx as f64 - 1.0,
                        2.0 * cy as f64 - 1.0,
                        2.0 * cz as f64 - 1.0,
                    );
                    dndx[i][0] = 0.25 * sx * (1.0 + sy * gy) * (1.0 + sz * gz);
                    dndx[i][1] = 0.25 * (1.0 + sx * gx) * sy * (1.0 + sz * gz);
                    dndx[i][2] = 0.25 * (1.0 + sx * gx) * (1.0 + sy * gy) * sz;
                }
                let mut b = [[0.0f64; 24]; 6];
                for i in 0..8 {
                    let col = 3 * i;
                    b[0][col] = dndx[i][0];
                    b[1][col + 1] = dndx[i][1];
                    b[2][col + 2] = dndx[i][2];
                    // gamma_yz, gamma_xz, gamma_xy
                    b[3][col + 1] = dndx[i][2];
                    b[3][col + 2] = dndx[i][1];
                    b[4][col] = dndx[i][2];
                    b[4][col + 2] = dndx[i][0];
                    b[5][col] = dndx[i][1];
                    b[5][col + 1] = dndx[i][0];
                }
                // ke += B^T D B * detJ, detJ = 1/8 for the unit cube.
                let mut db = [[0.0f64; 24]; 6];
                for r in 0..6 {
                    for c in 0..24 {
                        let mut s = 0.0;
                        for k in 0..6 {
                            s += d[(r, k)] * b[k][c];
                        }
                        db[r][c] = s;
                    }
                }
                for r in 0..24 {
                    for c in 0..24 {
                        let mut s = 0.0;
                        for k in 0..6 {
                            s += b[k][r] * db[k][c];
                        }
                        ke[r][c] += s * 0.125;
                    }
                }
            }
        }
    }
    ke
}

/// Nodal displacements of the six unit macroscopic strain fields at the
/// local corners. Any gauge works since the element annihilates rigid parts.
fn affine_displacements() -> [[f64; 24]; 6] {
    let mut d = [[0.0f64; 24]; 6];
    for (i, &(cx, cy, cz)) in CORNER.iter().enumerate() {
        let (x, y, z) = (cx as f64, cy as f64, cz as f64);
        let col = 3 * i;
        d[0][col] = x; // eps_xx: u_x = x
        d[1][col + 1] = y; // eps_yy: u_y = y
        d[2][col + 2] = z; // eps_zz: u_z = z
        d[3][col + 2] = y; // gamma_yz: u_z = y
        d[4][col + 2] = x; // gamma_xz: u_z = x
        d[5][col + 1] = x; // gamma_xy: u_y = x
    }
    d
}

fn ke_mul(ke: &Ke, v: &[f64; 24]) -> [f64; 24] {
    let mut out = [0.0f64; 24];
    for (r, row) in ke.iter().enumerate() {
        let mut s = 0.0;
        for c in 0..24 {
            s += row[c] * v[c];
        }
        out[r] = s;
    }
    out
}

struct System {
    ke: Ke,
    /// Global dof indices per solid element, 8 nodes x 3 components.
    elem_dofs: Vec<[u32; 24]>,
    /// Element indices grouped by (ex%2, ey%2, ez%2); same-color elements
    /// share no nodes when all grid dimensions are even.
    colors: Vec<Vec<u32>>,
    parallel_safe: bool,
    ndofs: usize,
    /// The three dofs pinned to remove rigid translations.
    pinned: [usize; 3],
}

impl System {
    fn build(grid: &VoxelGrid, base: &BaseMaterial) -> Result<Self, AnalysisError> {
        let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
        let node_id =
            |x: usize, y: usize, z: usize| -> usize { (x % nx) + nx * ((y % ny) + ny * (z % nz)) };
        let mut node_active: Vec<i64> = vec![-1; nx * ny * nz];
        let mut n_active = 0usize;
        let mut elems: Vec<(usize, usize, usize)> = Vec::new();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if !grid.solid(x, y, z) {
                        continue;
                    }
                    elems.push((x, y, z));
                    for &(dx, dy, dz) in &CORNER {
                        let id = node_id(x + dx, y + dy, z + dz);
                        if node_active[id] < 0 {
                            node_active[id] = n_active as i64;
                            n_active += 1;
                        }
                    }
                }
            }
        }
        if elems.is_empty() {
            return Err(AnalysisError::EmptyGrid);
        }
        let mut elem_dofs = Vec::with_capacity(elems.len());
        let mut colors: Vec<Vec<u32>> = vec![Vec::new(); 8];
        for (ei, &(x, y, z)) in elems.iter().enumerate() {
            let mut dofs = [0u32; 24];
            for (c, &(dx, dy, dz)) in CORNER.iter().enumerate() {
                let compact = node_active[node_id(x + dx, y + dy, z + dz)] as u32;
                dofs[3 * c] = 3 * compact;
                dofs[3 * c + 1] = 3 * compact + 1;
                dofs[3 * c + 2] = 3 * compact + 2;
            }
            elem_dofs.push(dofs);
            colors[(x % 2) + 2 * (y % 2) + 4 * (z % 2)].push(ei as u32);
        }
        Ok(Self {
            ke: element_stiffness(base),
            elem_dofs,
            colors,
            parallel_safe: nx % 2 == 0 && ny % 2 == 0 && nz % 2 == 0,
            ndofs: 3 * n_active,
            pinned: [0, 1, 2],
        })
    }

    /// out = K u, with pinned dofs forced to zero.
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if self.parallel_safe {
            // Same-color elements touch disjoint nodes, so parallel
            // scatter within one pass is race-free and the accumulation
            // order (pass by pass) is fixed.
            let out_ptr = SharedSlice(out.as_mut_ptr());
            for color in &self.colors {
                color.par_iter().for_each(|&ei| {
                    let dofs = &self.elem_dofs[ei as usize];
                    let mut ue = [0.0f64; 24];
                    for (k, &d) in dofs.iter().enumerate() {
                        ue[k] = u[d as usize];
                    }
                    let we = ke_mul(&self.ke, &ue);
                    let out = out_ptr;
                    for (k, &d) in dofs.iter().enumerate() {
                        // Safety: within a color no two elements share a dof.
                        unsafe { *out.0.add(d as usize) += we[k] };
                    }
                });
            }
        } else {
            for dofs in &self.elem_dofs {
                let mut ue = [0.0f64; 24];
                for (k, &d) in dofs.iter().enumerate() {
                    ue[k] = u[d as usize];
                }
                let we = ke_mul(&self.ke, &ue);
                for (k, &d) in dofs.iter().enumerate() {
                    out[d as usize] += we[k];
                }
            }
        }
        for &p in &self.pinned {
            out[p] = 0.0;
        }
    }

    fn jacobi_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0f64; self.ndofs];
        for dofs in &self.elem_dofs {
            for (k, &d) in dofs.iter().enumerate() {
                diag[d as usize] += self.ke[k][k];
            }
        }
        for &p in &self.pinned {
            diag[p] = 1.0;
        }
        // Guard isolated dofs (cannot appear for solid elements, but keeps
        // the preconditioner total).
        for v in &mut diag {
            if *v <= 0.0 {
                *v = 1.0;
            }
        }
        diag
    }

    /// Load vector for one affine case: b = -sum_e scatter(ke d_aff).
    fn load(&self, fe: &[f64; 24]) -> Vec<f64> {
        let mut b = vec![0.0f64; self.ndofs];
        for dofs in &self.elem_dofs {
            for (k, &d) in dofs.iter().enumerate() {
                b[d as usize] -= fe[k];
            }
        }
        for &p in &self.pinned {
            b[p] = 0.0;
        }
        b
    }
}

#[derive(Clone, Copy)]
struct SharedSlice(*mut f64);
unsafe impl Send for SharedSlice {}
unsafe impl Sync for SharedSlice {}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pcg(system: &System, b: &[f64], diag: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let n = b.len();
    let norm_b = dot(b, b).sqrt();
    let mut x = vec![0.0f64; n];
    if norm_b < 1e-30 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0f64; n];
    let mut best_res = f64::INFINITY;
    let mut window_best = f64::INFINITY;
    for iter in 0..CG_MAX_ITERS {
        system.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(AnalysisError::SingularSystem);
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let res = dot(&r, &r).sqrt() / norm_b;
        if res <= CG_TOLERANCE {
            return Ok(x);
        }
        best_res = best_res.min(res);
        if (iter + 1) % CG_STALL_WINDOW == 0 {
            if best_res > 0.9995 * window_best {
                return Err(AnalysisError::SingularSystem);
            }
            window_best = best_res;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    Err(AnalysisError::SingularSystem)
}

/// Effective stiffness tensor of a voxel microstructure under periodic
/// boundary conditions.
///
/// Deterministic and independent of the rayon thread count. The result is
/// exactly symmetric and positive semidefinite by construction (energy Gram
/// matrix of the six solved fields).
#[allow(clippy::needless_range_loop)]
pub fn homogenize(grid: &VoxelGrid, base: &BaseMaterial) -> Result<ElasticTensor, AnalysisError> {
    let system = System::build(grid, base)?;
    let diag = system.jacobi_diagonal();
    let d_aff = affine_displacements();

    // Fluctuation solves for the six unit strain cases.
    let mut solutions: Vec<Vec<f64>> = Vec::with_capacity(6);
    for case in &d_aff {
        let fe = ke_mul(&system.ke, case);
        let b = system.load(&fe);
        solutions.push(pcg(&system, &b, &diag)?);
    }

    // Energy averaging of the total fields.
    let volume = (grid.nx * grid.ny * grid.nz) as f64;
    let mut c = ElasticTensor::zeros();
    for dofs in &system.elem_dofs {
        let mut v = [[0.0f64; 24]; 6];
        for case in 0..6 {
            let u = &solutions[case];
            for (k, &dof) in dofs.iter().enumerate() {
                v[case][k] = d_aff[case][k] + u[dof as usize];
            }
        }
        let w: Vec<[f64; 24]> = (0..6).map(|i| ke_mul(&system.ke, &v[i])).collect();
        for i in 0..6 {
            for j in i..6 {
                let mut s = 0.0;
                for k in 0..24 {
                    s += v[i][k] * w[j][k];
                }
                c.0[(i, j)] += s;
            }
        }
    }
    for i in 0..6 {
        for j in i..6 {
            c.0[(i, j)] /= volume;
            c.0[(j, i)] = c.0[(i, j)];
        }
    }
    Ok(c)
}
