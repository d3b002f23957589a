//! Isotropic tensor family and the deviation of a stiffness tensor from it.

use nalgebra::Matrix6;

use super::{AnalysisError, ElasticTensor};

/// Stiffness tensor of a fully isotropic material.
///
/// With `ehat = E / ((1 - 2 nu)(1 + nu))` and `g = E / (2 (1 + nu))`, the
/// diagonal blocks are `ehat (1 - nu)` / `ehat nu` and `g`.
pub fn isotropic_tensor(young: f64, poisson: f64) -> Result<ElasticTensor, AnalysisError> {
    if young <= 0.0 {
        return Err(AnalysisError::BadYoungsModulus(young));
    }
    if poisson <= -1.0 || poisson >= 0.5 {
        return Err(AnalysisError::BadPoissonRatio(poisson));
    }
    Ok(ElasticTensor(isotropic_matrix(young, poisson)))
}

fn isotropic_matrix(young: f64, poisson: f64) -> Matrix6<f64> {
    let ehat = young / ((1.0 - 2.0 * poisson) * (1.0 + poisson));
    let g = young / (2.0 * (1.0 + poisson));
    let mut m = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = if i == j {
                ehat * (1.0 - poisson)
            } else {
                ehat * poisson
            };
        }
        m[(i + 3, i + 3)] = g;
    }
    m
}

fn objective(c: &Matrix6<f64>, young: f64, poisson: f64) -> f64 {
    (isotropic_matrix(young, poisson) - c).norm_squared()
}

/// Minimal squared Frobenius distance from `c` to the isotropic family over
/// `0 < E < e_max`, `-1 < nu < 0.5`.
///
/// Coarse 64x64 grid scan followed by Nelder-Mead refinement; the whole
/// search is deterministic.
pub fn isotropy_deviation(c: &ElasticTensor, e_max: f64) -> f64 {
    assert!(e_max > 0.0, "upper Young's modulus bound must be positive");
    let m = &c.0;
    const GRID: usize = 64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..GRID {
        let e = e_max * (i as f64 + 0.5) / GRID as f64;
        for j in 0..GRID {
            let nu = -1.0 + 1.5 * (j as f64 + 0.5) / GRID as f64;
            let v = objective(m, e, nu);
            if v < best.0 {
                best = (v, e, nu);
            }
        }
    }
    let refined = nelder_mead(
        |p| objective(m, p[0], p[1]),
        [best.1, best.2],
        [e_max / GRID as f64, 1.5 / GRID as f64],
        [
            (e_max * 1e-12, e_max * (1.0 - 1e-12)),
            (-1.0 + 1e-12, 0.5 - 1e-12),
        ],
        600,
    );
    refined.min(best.0)
}

/// Minimal 2D Nelder-Mead with box clamping. Returns the best value found.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(
    f: F,
    start: [f64; 2],
    step: [f64; 2],
    bounds: [(f64, f64); 2],
    max_iter: usize,
) -> f64 {
    let clamp = |p: [f64; 2]| -> [f64; 2] {
        [
            p[0].clamp(bounds[0].0, bounds[0].1),
            p[1].clamp(bounds[1].0, bounds[1].1),
        ]
    };
    let mut simplex = vec![
        clamp(start),
        clamp([start[0] + step[0], start[1]]),
        clamp([start[0], start[1] + step[1]]),
    ];
    let mut values: Vec<f64> = simplex.iter().map(|&p| f(p)).collect();

    for _ in 0..max_iter {
        // Order best..worst.
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let (b, s, w) = (order[0], order[1], order[2]);
        if values[w] - values[b] < 1e-18 && simplex_size(&simplex) < 1e-14 {
            break;
        }
        let centroid = [
            (simplex[b][0] + simplex[s][0]) / 2.0,
            (simplex[b][1] + simplex[s][1]) / 2.0,
        ];
        let reflect = clamp([
            centroid[0] + (centroid[0] - simplex[w][0]),
            centroid[1] + (centroid[1] - simplex[w][1]),
        ]);
        let fr = f(reflect);
        if fr < values[b] {
            let expand = clamp([
                centroid[0] + 2.0 * (centroid[0] - simplex[w][0]),
                centroid[1] + 2.0 * (centroid[1] - simplex[w][1]),
            ]);
            let fe = f(expand);
            if fe < fr {
                simplex[w] = expand;
                values[w] = fe;
            } else {
                simplex[w] = reflect;
                values[w] = fr;
            }
        } else if fr < values[s] {
            simplex[w] = reflect;
            values[w] = fr;
        } else {
            let contract = clamp([
                centroid[0] + 0.5 * (simplex[w][0] - centroid[0]),
                centroid[1] + 0.5 * (simplex[w][1] - centroid[1]),
            ]);
            let fc = f(contract);
            if fc < values[w] {
                simplex[w] = contract;
                values[w] = fc;
            } else {
                // Shrink toward the best vertex.
                for k in [s, w] {
                    simplex[k] = clamp([
                        simplex[b][0] + 0.5 * (simplex[k][0] - simplex[b][0]),
                        simplex[b][1] + 0.5 * (simplex[k][1] - simplex[b][1]),
                    ]);
                    values[k] = f(simplex[k]);
                }
            }
        }
    }
    values.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn simplex_size(simplex: &[[f64; 2]]) -> f64 {
    let mut size = 0.0f64;
    for i in 0..simplex.len() {
        for j in (i + 1)..simplex.len() {
            size = size
                .max((simplex[i][0] - simplex[j][0]).abs())
                .max((simplex[i][1] - simplex[j][1]).abs());
        }
    }
    size
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn isotropic_tensor_at_zero_poisson_is_diagonal() {
        let c = isotropic_tensor(1.0, 0.0).unwrap().0;
        for i in 0..6 {
            for j in 0..6 {
                let expected = match (i, j) {
                    (i, j) if i == j && i < 3 => 1.0,
                    (i, j) if i == j => 0.5,
                    _ => 0.0,
                };
                assert_relative_eq!(c[(i, j)], expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn isotropic_tensor_hand_values() {
        // E = 1, nu = 0.3: ehat = 1 / (0.4 * 1.3).
        let c = isotropic_tensor(1.0, 0.3).unwrap().0;
        assert_relative_eq!(c[(0, 0)], 1.346154, epsilon = 1e-6);
        assert_relative_eq!(c[(0, 1)], 0.576923, epsilon = 1e-6);
        assert_relative_eq!(c[(3, 3)], 0.384615, epsilon = 1e-6);
    }

    #[test]
    fn isotropic_tensor_is_linear_in_young() {
        let a = isotropic_tensor(1.0, 0.27).unwrap().0;
        let b = isotropic_tensor(2.0, 0.27).unwrap().0;
        assert_relative_eq!((b - a * 2.0).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn isotropic_tensor_domain_checks() {
        assert!(isotropic_tensor(-1.0, 0.3).is_err());
        assert!(isotropic_tensor(1.0, 0.5).is_err());
        assert!(isotropic_tensor(1.0, -1.0).is_err());
    }

    #[test]
    fn deviation_vanishes_for_family_members() {
        for (e, nu) in [(0.7, 0.3), (0.42, 0.25), (0.1, -0.2), (0.9, 0.45)] {
            let c = isotropic_tensor(e, nu).unwrap();
            let xi = isotropy_deviation(&c, 1.0);
            assert!(xi <= 1e-8, "xi = {xi} for E = {e}, nu = {nu}");
        }
    }

    #[test]
    fn deviation_matches_dense_grid_oracle() {
        // Perturb an isotropic tensor on C44 only and compare against a
        // brute-force 512x512 grid scan.
        let mut c = isotropic_tensor(0.6, 0.3).unwrap();
        c.0[(3, 3)] += 0.1;
        let fast = isotropy_deviation(&c, 1.0);

        let mut oracle = f64::INFINITY;
        const N: usize = 512;
        for i in 0..N {
            let e = (i as f64 + 0.5) / N as f64;
            for j in 0..N {
                let nu = -1.0 + 1.5 * (j as f64 + 0.5) / N as f64;
                oracle = oracle.min(objective(&c.0, e, nu));
            }
        }
        assert!(
            (fast - oracle).abs() < 1e-4,
            "refined {fast} vs grid oracle {oracle}"
        );
        // Refinement can only improve on the oracle's grid resolution.
        assert!(fast <= oracle + 1e-12);
    }

    #[test]
    fn zero_tensor_deviation_is_finite_and_nonnegative() {
        let xi = isotropy_deviation(&ElasticTensor::zeros(), 1.0);
        assert!(xi.is_finite());
        assert!(xi >= 0.0);
        // The optimum sits at the E -> 0 boundary; the distance cannot
        // exceed the norm of the smallest family member on the grid.
        assert!(xi < 1e-2);
    }
}
