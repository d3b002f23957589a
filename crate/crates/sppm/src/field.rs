//! Implicit representation of the porous geometry.
//!
//! Pores are isotropic Gaussian kernels `exp(-w * |p - c|^2)`, tunnels are
//! Gaussians of point-to-segment distance `exp(-mu * dist(p, seg))`, and the
//! combined field is their plain sum. Space is classified against a level
//! value `C`: field < C is solid material, field > C is void.
//!
//! Kernels are truncated: any contribution whose untruncated value falls
//! below `cutoff_epsilon` counts as exactly zero. This keeps evaluation
//! local and bounds how far interior features can leak onto the cell faces.

use nalgebra::Vector3;
use thiserror::Error;

/// 3D point / vector in unit-cell coordinates.
pub type Vec3 = Vector3<f64>;

/// Default truncation threshold for kernel contributions.
pub const DEFAULT_CUTOFF_EPSILON: f64 = 1e-4;

/// Tolerance for classifying a point as lying on the iso-surface.
pub const SURFACE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("pore weight must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("tunnel weight must be positive, got {0}")]
    NonPositiveTunnelWeight(f64),
    #[error("tunnel endpoints must be distinct, got pore {0} twice")]
    DegenerateTunnel(usize),
    #[error("tunnel references pore {0}, but only {1} pores exist")]
    DanglingTunnel(usize, usize),
    #[error("pore center {0:?} outside cell [0, {1}]^3")]
    PoreOutsideCell([f64; 3], f64),
    #[error("face-tagged pore has coordinate {got} on axis {axis:?}, expected 0 or {cell_side}")]
    FacePoreOffFace {
        axis: Axis,
        got: f64,
        cell_side: f64,
    },
}

/// Coordinate axis of the unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Which face of the cell a face pore sits on: `Negative` is the coordinate-0
/// face, `Positive` the coordinate-L face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceSide {
    Negative,
    Positive,
}

/// Placement tag for a pore.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    Interior,
    Face(Axis, FaceSide),
}

/// A spherical void seed: Gaussian kernel `exp(-weight * r^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pore {
    pub center: Vec3,
    /// Inverse-square size parameter; larger weight means smaller pore.
    pub weight: f64,
    pub region: RegionTag,
}

impl Pore {
    pub fn new(center: Vec3, weight: f64, region: RegionTag) -> Self {
        Self {
            center,
            weight,
            region,
        }
    }

    /// Kernel value at `p`, truncated to exactly 0 below `cutoff`.
    pub fn kernel(&self, p: &Vec3, cutoff: f64) -> f64 {
        let r2 = (p - self.center).norm_squared();
        if cutoff > 0.0 && self.weight * r2 > ln_inv(cutoff) {
            return 0.0;
        }
        (-self.weight * r2).exp()
    }

    /// Radius beyond which the kernel is truncated to zero.
    pub fn support_radius(&self, cutoff: f64) -> f64 {
        if cutoff <= 0.0 {
            f64::INFINITY
        } else {
            (ln_inv(cutoff) / self.weight).sqrt()
        }
    }

    /// Radius of the sphere on which an isolated pore's kernel equals `c`.
    pub fn level_radius(weight: f64, c: f64) -> f64 {
        (ln_inv(c) / weight).sqrt()
    }
}

/// A void channel between two pores: Gaussian of point-to-segment distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tunnel {
    /// Indices into the owning field's pore list.
    pub endpoints: (usize, usize),
    /// Inverse radius parameter; larger weight means thinner tunnel.
    pub weight: f64,
}

impl Tunnel {
    pub fn new(a: usize, b: usize, weight: f64) -> Self {
        Self {
            endpoints: (a, b),
            weight,
        }
    }

    /// Distance beyond which the kernel is truncated to zero.
    pub fn support_distance(&self, cutoff: f64) -> f64 {
        if cutoff <= 0.0 {
            f64::INFINITY
        } else {
            ln_inv(cutoff) / self.weight
        }
    }
}

fn ln_inv(eps: f64) -> f64 {
    -eps.ln()
}

/// Euclidean distance from `p` to the segment `[a, b]`.
///
/// Degenerates to point distance when `a == b`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Tunnel kernel value at `p` for segment `[a, b]`, truncated below `cutoff`.
pub fn tunnel_kernel(a: &Vec3, b: &Vec3, weight: f64, p: &Vec3, cutoff: f64) -> f64 {
    let d = point_segment_distance(p, a, b);
    if cutoff > 0.0 && weight * d > ln_inv(cutoff) {
        return 0.0;
    }
    (-weight * d).exp()
}

/// Classification of a point against the level value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionClass {
    /// Field below `C`: inside the solid material.
    Solid,
    /// Field above `C`: inside a pore or tunnel.
    Void,
    /// Field equal to `C` within [`SURFACE_TOLERANCE`].
    Surface,
}

/// The combined implicit field of one unit cell: all pores plus all tunnels.
///
/// Immutable after construction; evaluation is read-only and safe to share
/// across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedField {
    pores: Vec<Pore>,
    tunnels: Vec<Tunnel>,
    cutoff_epsilon: f64,
    cell_side: f64,
}

impl CombinedField {
    pub fn new(
        pores: Vec<Pore>,
        tunnels: Vec<Tunnel>,
        cutoff_epsilon: f64,
        cell_side: f64,
    ) -> Result<Self, FieldError> {
        for pore in &pores {
            if pore.weight <= 0.0 {
                return Err(FieldError::NonPositiveWeight(pore.weight));
            }
            let c = pore.center;
            let eps = 1e-12 * cell_side;
            for axis in Axis::ALL {
                let v = c[axis.index()];
                if !(-eps..=cell_side + eps).contains(&v) {
                    return Err(FieldError::PoreOutsideCell([c.x, c.y, c.z], cell_side));
                }
            }
            if let RegionTag::Face(axis, side) = pore.region {
                let v = c[axis.index()];
                let expected = match side {
                    FaceSide::Negative => 0.0,
                    FaceSide::Positive => cell_side,
                };
                if v != expected {
                    return Err(FieldError::FacePoreOffFace {
                        axis,
                        got: v,
                        cell_side,
                    });
                }
            }
        }
        for tunnel in &tunnels {
            if tunnel.weight <= 0.0 {
                return Err(FieldError::NonPositiveTunnelWeight(tunnel.weight));
            }
            let (a, b) = tunnel.endpoints;
            if a == b {
                return Err(FieldError::DegenerateTunnel(a));
            }
            for idx in [a, b] {
                if idx >= pores.len() {
                    return Err(FieldError::DanglingTunnel(idx, pores.len()));
                }
            }
        }
        Ok(Self {
            pores,
            tunnels,
            cutoff_epsilon,
            cell_side,
        })
    }

    pub fn pores(&self) -> &[Pore] {
        &self.pores
    }

    pub fn tunnels(&self) -> &[Tunnel] {
        &self.tunnels
    }

    pub fn cutoff_epsilon(&self) -> f64 {
        self.cutoff_epsilon
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    /// Segment endpoints of a tunnel, resolved to pore centers.
    pub fn tunnel_segment(&self, tunnel: &Tunnel) -> (Vec3, Vec3) {
        (
            self.pores[tunnel.endpoints.0].center,
            self.pores[tunnel.endpoints.1].center,
        )
    }

    /// Combined field value: sum of all pore and tunnel kernels at `p`,
    /// each individually truncated.
    pub fn value(&self, p: &Vec3) -> f64 {
        let mut sum = 0.0;
        for pore in &self.pores {
            sum += pore.kernel(p, self.cutoff_epsilon);
        }
        for tunnel in &self.tunnels {
            let (a, b) = self.tunnel_segment(tunnel);
            sum += tunnel_kernel(&a, &b, tunnel.weight, p, self.cutoff_epsilon);
        }
        sum
    }

    /// Classifies `p` against level value `c`.
    pub fn classify(&self, p: &Vec3, c: f64) -> RegionClass {
        classify_value(self.value(p), c)
    }
}

/// Classifies a precomputed field value against level value `c`.
pub fn classify_value(value: f64, c: f64) -> RegionClass {
    if (value - c).abs() <= SURFACE_TOLERANCE {
        RegionClass::Surface
    } else if value < c {
        RegionClass::Solid
    } else {
        RegionClass::Void
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn interior_pore(x: f64, y: f64, z: f64, w: f64) -> Pore {
        Pore::new(Vec3::new(x, y, z), w, RegionTag::Interior)
    }

    #[test]
    fn pore_kernel_is_one_at_center() {
        let pore = interior_pore(0.3, 0.4, 0.5, 30.0);
        assert_eq!(pore.kernel(&pore.center, DEFAULT_CUTOFF_EPSILON), 1.0);
    }

    #[test]
    fn pore_kernel_matches_scalar_exp() {
        // omega = 30, |p - c| = 0.1 -> exp(-0.3)
        let pore = interior_pore(0.5, 0.5, 0.5, 30.0);
        let p = Vec3::new(0.6, 0.5, 0.5);
        assert_relative_eq!(
            pore.kernel(&p, DEFAULT_CUTOFF_EPSILON),
            (-0.3f64).exp(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            pore.kernel(&p, DEFAULT_CUTOFF_EPSILON),
            0.740818,
            epsilon = 1e-6
        );
    }

    #[test]
    fn pore_kernel_truncates_far_away() {
        let pore = interior_pore(0.0, 0.0, 0.0, 30.0);
        let p = Vec3::new(10.0, 0.0, 0.0);
        assert_eq!(pore.kernel(&p, 1e-4), 0.0);
        // Without a cutoff the value is tiny but nonzero (at a distance
        // where the exponential does not underflow).
        let q = Vec3::new(2.0, 0.0, 0.0);
        assert_eq!(pore.kernel(&q, 1e-4), 0.0);
        assert!(pore.kernel(&q, 0.0) > 0.0);
    }

    #[test]
    fn tunnel_kernel_is_one_at_endpoint() {
        let a = Vec3::new(0.2, 0.2, 0.2);
        let b = Vec3::new(0.8, 0.2, 0.2);
        assert_eq!(tunnel_kernel(&a, &b, 30.0, &a, DEFAULT_CUTOFF_EPSILON), 1.0);
    }

    #[test]
    fn tunnel_kernel_uses_perpendicular_distance() {
        // mu = 30, perpendicular distance 0.1 at the midpoint -> exp(-3)
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let p = Vec3::new(0.5, 0.1, 0.0);
        let v = tunnel_kernel(&a, &b, 30.0, &p, DEFAULT_CUTOFF_EPSILON);
        assert_relative_eq!(v, (-3.0f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(v, 0.049787, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_segment_equals_point_kernel() {
        let a = Vec3::new(0.5, 0.5, 0.5);
        let p = Vec3::new(0.5, 0.5, 0.6);
        let v = tunnel_kernel(&a, &a, 30.0, &p, DEFAULT_CUTOFF_EPSILON);
        assert_relative_eq!(v, (-3.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn point_segment_distance_basics() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        // Beyond the endpoint, distance is to the endpoint, not the line.
        let p = Vec3::new(2.0, 0.0, 0.0);
        assert_relative_eq!(point_segment_distance(&p, &a, &b), 1.0);
        let q = Vec3::new(-1.0, 1.0, 0.0);
        assert_relative_eq!(point_segment_distance(&q, &a, &b), 2.0f64.sqrt());
    }

    #[test]
    fn combined_single_pore_equals_pore_kernel() {
        let pore = interior_pore(0.5, 0.5, 0.5, 30.0);
        let field = CombinedField::new(vec![pore], vec![], DEFAULT_CUTOFF_EPSILON, 1.0).unwrap();
        for p in [
            Vec3::new(0.5, 0.5, 0.5),
            Vec3::new(0.1, 0.9, 0.4),
            Vec3::new(0.6, 0.5, 0.5),
        ] {
            assert_eq!(field.value(&p), pore.kernel(&p, DEFAULT_CUTOFF_EPSILON));
        }
    }

    #[test]
    fn combined_two_pores_sum_at_midpoint() {
        // Two pores 0.2 apart, omega = 30, midpoint -> 2 * exp(-30 * 0.01)
        let field = CombinedField::new(
            vec![
                interior_pore(0.4, 0.5, 0.5, 30.0),
                interior_pore(0.6, 0.5, 0.5, 30.0),
            ],
            vec![],
            DEFAULT_CUTOFF_EPSILON,
            1.0,
        )
        .unwrap();
        let mid = Vec3::new(0.5, 0.5, 0.5);
        assert_relative_eq!(field.value(&mid), 2.0 * (-0.3f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(field.value(&mid), 1.481636, epsilon = 1e-6);
    }

    #[test]
    fn combined_truncates_distant_pore() {
        // Pores farther apart than both truncation radii: at the first
        // center only the first kernel contributes.
        let field = CombinedField::new(
            vec![
                interior_pore(0.0, 0.0, 0.0, 30.0),
                interior_pore(8.0, 8.0, 8.0, 30.0),
            ],
            vec![],
            1e-4,
            8.0,
        )
        .unwrap();
        assert_eq!(field.value(&Vec3::new(0.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn classify_solid_void_surface() {
        let field = CombinedField::new(
            vec![interior_pore(0.5, 0.5, 0.5, 30.0)],
            vec![],
            DEFAULT_CUTOFF_EPSILON,
            1.0,
        )
        .unwrap();
        // Far from the pore the field is ~0 < C.
        assert_eq!(
            field.classify(&Vec3::new(0.0, 0.0, 0.0), 0.25),
            RegionClass::Solid
        );
        // At the pore center the field is 1 > C.
        assert_eq!(
            field.classify(&Vec3::new(0.5, 0.5, 0.5), 0.25),
            RegionClass::Void
        );
        assert_eq!(classify_value(0.25, 0.25), RegionClass::Surface);
    }

    #[test]
    fn constructor_rejects_bad_inputs() {
        let p = interior_pore(0.5, 0.5, 0.5, 30.0);
        assert!(matches!(
            CombinedField::new(vec![interior_pore(0.5, 0.5, 0.5, -1.0)], vec![], 1e-4, 1.0),
            Err(FieldError::NonPositiveWeight(_))
        ));
        assert!(matches!(
            CombinedField::new(vec![p], vec![Tunnel::new(0, 0, 30.0)], 1e-4, 1.0),
            Err(FieldError::DegenerateTunnel(0))
        ));
        assert!(matches!(
            CombinedField::new(vec![p], vec![Tunnel::new(0, 3, 30.0)], 1e-4, 1.0),
            Err(FieldError::DanglingTunnel(3, 1))
        ));
        assert!(matches!(
            CombinedField::new(vec![interior_pore(1.5, 0.5, 0.5, 30.0)], vec![], 1e-4, 1.0),
            Err(FieldError::PoreOutsideCell(_, _))
        ));
        let off_face = Pore::new(
            Vec3::new(0.1, 0.5, 0.5),
            30.0,
            RegionTag::Face(Axis::X, FaceSide::Negative),
        );
        assert!(matches!(
            CombinedField::new(vec![off_face], vec![], 1e-4, 1.0),
            Err(FieldError::FacePoreOffFace { .. })
        ));
    }

    #[test]
    fn level_radius_matches_kernel() {
        let w = 30.0;
        let c = 0.25;
        let r = Pore::level_radius(w, c);
        let pore = interior_pore(0.5, 0.5, 0.5, w);
        let p = Vec3::new(0.5 + r, 0.5, 0.5);
        assert_relative_eq!(pore.kernel(&p, 0.0), c, epsilon = 1e-12);
    }

    #[test]
    fn truncation_consistency_bound() {
        // |eval with cutoff - eval without| <= (pores + tunnels) * cutoff.
        let pores = vec![
            interior_pore(0.1, 0.2, 0.3, 30.0),
            interior_pore(0.9, 0.8, 0.7, 25.0),
            interior_pore(0.5, 0.1, 0.9, 40.0),
        ];
        let tunnels = vec![Tunnel::new(0, 1, 30.0), Tunnel::new(1, 2, 35.0)];
        let eps = 1e-3;
        let with = CombinedField::new(pores.clone(), tunnels.clone(), eps, 1.0).unwrap();
        let without = CombinedField::new(pores, tunnels, 0.0, 1.0).unwrap();
        let bound = 5.0 * eps;
        for i in 0..10 {
            for j in 0..10 {
                let p = Vec3::new(i as f64 / 9.0, j as f64 / 9.0, 0.5);
                assert!((with.value(&p) - without.value(&p)).abs() <= bound);
            }
        }
    }
}
