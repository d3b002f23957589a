//! Tunnel network construction.
//!
//! Pores inside one region (a face pattern or the interior) are connected by
//! a degree-bounded connected spanning subgraph: Euclidean MST plus greedy
//! augmentation until every vertex reaches the degree lower bound, never
//! exceeding the upper bound. Surface pores are then bridged to their nearest
//! interior pore, one tunnel each.

use thiserror::Error;

use crate::field::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum ConnectivityError {
    #[error("degree bounds infeasible: lower {lower} > upper {upper}")]
    BoundsInverted { lower: usize, upper: usize },
    #[error("degree bounds infeasible for {n} vertices: upper bound {upper} admits at most {max_edges} edge endpoints, a connected graph needs {needed}")]
    InfeasibleDegreeBounds {
        n: usize,
        upper: usize,
        max_edges: usize,
        needed: usize,
    },
    #[error("cannot bridge surface pores: no interior pores")]
    NoInteriorPores,
}

/// Candidate graph over one region's pores.
///
/// All pairs are candidate edges, costed by Euclidean length. Face patterns
/// embed their 2D coordinates with a zero third component.
#[derive(Debug, Clone)]
pub struct PoreGraph {
    pub points: Vec<Vec3>,
    pub degree_lower: usize,
    pub degree_upper: usize,
}

impl PoreGraph {
    pub fn new(points: Vec<Vec3>, degree_lower: usize, degree_upper: usize) -> Self {
        Self {
            points,
            degree_lower,
            degree_upper,
        }
    }

    pub fn from_face_positions(
        positions: &[[f64; 2]],
        degree_lower: usize,
        degree_upper: usize,
    ) -> Self {
        let points = positions
            .iter()
            .map(|p| Vec3::new(p[0], p[1], 0.0))
            .collect();
        Self::new(points, degree_lower, degree_upper)
    }
}

/// Result of one network build.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub edges: Vec<(usize, usize)>,
    /// True when the lower-bound augmentation had to exceed the upper bound
    /// on some endpoint to make progress.
    pub upper_bound_relaxed: bool,
}

impl Network {
    pub fn total_length(&self, points: &[Vec3]) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j)| (points[i] - points[j]).norm())
            .sum()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn sorted_candidate_edges(points: &[Vec3]) -> Vec<(f64, usize, usize)> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push(((points[i] - points[j]).norm(), i, j));
        }
    }
    edges.sort_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap());
    edges
}

/// Euclidean minimum spanning tree by Kruskal over all pairs.
pub fn euclidean_mst(points: &[Vec3]) -> Vec<(usize, usize)> {
    let n = points.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut uf = UnionFind::new(n);
    let mut mst = Vec::with_capacity(n - 1);
    for (_, i, j) in sorted_candidate_edges(points) {
        if uf.union(i, j) {
            mst.push((i, j));
            if mst.len() == n - 1 {
                break;
            }
        }
    }
    mst
}

fn component_of(
    n: usize,
    edges: &[(usize, usize)],
    start: usize,
    skip: (usize, usize),
) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        if (i, j) == skip || (j, i) == skip {
            continue;
        }
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}

/// Builds a connected spanning subgraph whose vertex degrees lie in
/// `[min(lower, n-1), upper]`, with heuristically small total length.
///
/// MST first; in the rare case an MST vertex exceeds the upper bound, its
/// longest incident edge is swapped for the shortest reconnecting edge; then
/// vertices below the lower bound greedily gain their shortest absent
/// incident edge. Deterministic for a given point order.
pub fn build_degree_bounded_network(graph: &PoreGraph) -> Result<Network, ConnectivityError> {
    let n = graph.points.len();
    if graph.degree_lower > graph.degree_upper {
        return Err(ConnectivityError::BoundsInverted {
            lower: graph.degree_lower,
            upper: graph.degree_upper,
        });
    }
    if n <= 1 {
        return Ok(Network {
            edges: Vec::new(),
            upper_bound_relaxed: false,
        });
    }
    let needed = 2 * (n - 1);
    if graph.degree_upper * n < needed {
        return Err(ConnectivityError::InfeasibleDegreeBounds {
            n,
            upper: graph.degree_upper,
            max_edges: graph.degree_upper * n,
            needed,
        });
    }
    let lower = graph.degree_lower.min(n - 1);
    let upper = graph.degree_upper;
    let points = &graph.points;

    let mut edges = euclidean_mst(points);
    let mut degree = vec![0usize; n];
    for &(i, j) in &edges {
        degree[i] += 1;
        degree[j] += 1;
    }

    // Repair pass: Euclidean MSTs rarely exceed small upper bounds, but when
    // one does, swap the offender's longest edge for the shortest edge that
    // reconnects the two halves without touching the offender.
    let mut guard = 0;
    while let Some(v) = (0..n).find(|&v| degree[v] > upper) {
        guard += 1;
        if guard > n * n {
            return Err(ConnectivityError::InfeasibleDegreeBounds {
                n,
                upper,
                max_edges: upper * n,
                needed,
            });
        }
        let &longest = edges
            .iter()
            .filter(|&&(i, j)| i == v || j == v)
            .max_by(|a, b| {
                let la = (points[a.0] - points[a.1]).norm();
                let lb = (points[b.0] - points[b.1]).norm();
                (la, a.0, a.1).partial_cmp(&(lb, b.0, b.1)).unwrap()
            })
            .unwrap();
        let side_v = component_of(n, &edges, v, longest);
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            if !side_v[a] || a == v {
                continue;
            }
            for b in 0..n {
                if side_v[b] {
                    continue;
                }
                if degree[a] >= upper || degree[b] >= upper {
                    continue;
                }
                let d = (points[a] - points[b]).norm();
                let cand = (d, a, b);
                if best.is_none_or(|cur| cand < cur) {
                    best = Some(cand);
                }
            }
        }
        let Some((_, a, b)) = best else {
            return Err(ConnectivityError::InfeasibleDegreeBounds {
                n,
                upper,
                max_edges: upper * n,
                needed,
            });
        };
        edges.retain(|&e| e != longest);
        degree[longest.0] -= 1;
        degree[longest.1] -= 1;
        edges.push((a.min(b), a.max(b)));
        degree[a] += 1;
        degree[b] += 1;
    }

    // Lower-bound augmentation: cheapest absent incident edge, preferring
    // endpoints that still have upper-bound headroom.
    let mut present = std::collections::HashSet::new();
    for &(i, j) in &edges {
        present.insert((i, j));
    }
    let mut relaxed = false;
    loop {
        let mut deficient: Vec<usize> = (0..n).filter(|&v| degree[v] < lower).collect();
        if deficient.is_empty() {
            break;
        }
        deficient.sort_by_key(|&v| (degree[v], v));
        let v = deficient[0];
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&u| u != v && !present.contains(&(v.min(u), v.max(u))))
            .map(|u| ((points[v] - points[u]).norm(), u))
            .collect();
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pick = candidates
            .iter()
            .find(|&&(_, u)| degree[u] < upper)
            .or_else(|| {
                relaxed = true;
                candidates.first()
            })
            .copied();
        match pick {
            Some((_, u)) => {
                present.insert((v.min(u), v.max(u)));
                edges.push((v.min(u), v.max(u)));
                degree[v] += 1;
                degree[u] += 1;
            }
            None => break, // complete graph reached; lower bound was clamped
        }
    }

    Ok(Network {
        edges,
        upper_bound_relaxed: relaxed,
    })
}

/// One bridge per surface pore to its nearest interior pore. Distance ties
/// break toward the lowest interior pore identifier.
///
/// Identifiers are indices into the caller's global pore list.
pub fn bridge_surface_to_interior(
    surface: &[(usize, Vec3)],
    interior: &[(usize, Vec3)],
) -> Result<Vec<(usize, usize)>, ConnectivityError> {
    if interior.is_empty() {
        return Err(ConnectivityError::NoInteriorPores);
    }
    let mut bridges = Vec::with_capacity(surface.len());
    for &(sid, sp) in surface {
        let mut best = (f64::INFINITY, usize::MAX);
        for &(iid, ip) in interior {
            let d2 = (sp - ip).norm_squared();
            if (d2, iid) < best {
                best = (d2, iid);
            }
        }
        bridges.push((sid, best.1));
    }
    Ok(bridges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn degrees(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
        let mut deg = vec![0; n];
        for &(i, j) in edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
        if n == 0 {
            return true;
        }
        component_of(n, edges, 0, (usize::MAX, usize::MAX))
            .iter()
            .all(|&s| s)
    }

    #[test]
    fn two_vertices_get_single_edge() {
        // Lower bound 3 clamps to n - 1 = 1.
        let g = PoreGraph::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)],
            3,
            5,
        );
        let net = build_degree_bounded_network(&g).unwrap();
        assert_eq!(net.edges, vec![(0, 1)]);
        assert_eq!(degrees(2, &net.edges), vec![1, 1]);
    }

    #[test]
    fn collinear_points_give_optimal_path() {
        let points: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let g = PoreGraph::new(points.clone(), 1, 2);
        let net = build_degree_bounded_network(&g).unwrap();
        assert!(is_connected(5, &net.edges));
        let cost = net.total_length(&points);

        // Brute-force oracle: all edge subsets that connect 5 vertices with
        // degrees in [1, 2]; the optimum is the path of cost 4.
        let all: Vec<(usize, usize)> = (0..5)
            .flat_map(|i| ((i + 1)..5).map(move |j| (i, j)))
            .collect();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << all.len()) {
            let subset: Vec<(usize, usize)> = all
                .iter()
                .enumerate()
                .filter(|&(k, _)| mask & (1 << k) != 0)
                .map(|(_, &e)| e)
                .collect();
            let deg = degrees(5, &subset);
            if deg.iter().any(|&d| !(1..=2).contains(&d)) || !is_connected(5, &subset) {
                continue;
            }
            let c: f64 = subset
                .iter()
                .map(|&(i, j)| (points[i] - points[j]).norm())
                .sum();
            best = best.min(c);
        }
        assert_eq!(best, 4.0);
        assert_eq!(cost, best);
    }

    #[test]
    fn random_instances_meet_degree_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..25 {
            let points: Vec<Vec3> = (0..30)
                .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()))
                .collect();
            let g = PoreGraph::new(points.clone(), 3, 5);
            let net = build_degree_bounded_network(&g).unwrap();
            assert!(is_connected(30, &net.edges));
            assert!(!net.upper_bound_relaxed);
            for d in degrees(30, &net.edges) {
                assert!((3..=5).contains(&d), "degree {d} out of [3,5]");
            }
            // Any connected spanning subgraph costs at least the MST.
            let mst = euclidean_mst(&points);
            let mst_cost: f64 = mst
                .iter()
                .map(|&(i, j)| (points[i] - points[j]).norm())
                .sum();
            assert!(net.total_length(&points) >= mst_cost - 1e-12);
        }
    }

    #[test]
    fn infeasible_upper_bound_rejected() {
        let points: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let g = PoreGraph::new(points, 1, 1);
        assert!(matches!(
            build_degree_bounded_network(&g),
            Err(ConnectivityError::InfeasibleDegreeBounds { .. })
        ));
    }

    #[test]
    fn inverted_bounds_rejected() {
        let g = PoreGraph::new(vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)], 5, 3);
        assert!(matches!(
            build_degree_bounded_network(&g),
            Err(ConnectivityError::BoundsInverted { .. })
        ));
    }

    #[test]
    fn face_network_embeds_2d() {
        let positions = [[0.1, 0.1], [0.9, 0.1], [0.5, 0.9], [0.5, 0.5]];
        let g = PoreGraph::from_face_positions(&positions, 2, 3);
        let net = build_degree_bounded_network(&g).unwrap();
        assert!(is_connected(4, &net.edges));
        for d in degrees(4, &net.edges) {
            assert!((2..=3).contains(&d));
        }
    }

    #[test]
    fn single_bridge() {
        let surface = [(0usize, Vec3::new(0.0, 0.5, 0.5))];
        let interior = [(1usize, Vec3::new(0.5, 0.5, 0.5))];
        assert_eq!(
            bridge_surface_to_interior(&surface, &interior).unwrap(),
            vec![(0, 1)]
        );
    }

    #[test]
    fn bridge_tie_breaks_to_lowest_id() {
        let surface = [(0usize, Vec3::new(0.0, 0.5, 0.5))];
        // Two interior pores exactly equidistant from the surface pore
        // (offsets of 0.25 subtract exactly in binary).
        let interior = [
            (7usize, Vec3::new(0.5, 0.75, 0.5)),
            (2usize, Vec3::new(0.5, 0.25, 0.5)),
        ];
        assert_eq!(
            bridge_surface_to_interior(&surface, &interior).unwrap(),
            vec![(0, 2)]
        );
    }

    #[test]
    fn bridges_match_exhaustive_nearest_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let surface: Vec<(usize, Vec3)> = (0..6)
            .map(|i| (i, Vec3::new(0.0, rng.gen(), rng.gen())))
            .collect();
        let interior: Vec<(usize, Vec3)> = (6..10)
            .map(|i| (i, Vec3::new(rng.gen(), rng.gen(), rng.gen())))
            .collect();
        let bridges = bridge_surface_to_interior(&surface, &interior).unwrap();
        assert_eq!(bridges.len(), 6);
        for (k, &(sid, iid)) in bridges.iter().enumerate() {
            assert_eq!(sid, surface[k].0);
            let d = (surface[k].1 - interior.iter().find(|(id, _)| *id == iid).unwrap().1).norm();
            for &(_, ip) in &interior {
                assert!(d <= (surface[k].1 - ip).norm() + 1e-15);
            }
        }
    }

    #[test]
    fn no_interior_pores_is_an_error() {
        let surface = [(0usize, Vec3::new(0.0, 0.5, 0.5))];
        assert_eq!(
            bridge_surface_to_interior(&surface, &[]).unwrap_err(),
            ConnectivityError::NoInteriorPores
        );
    }
}
