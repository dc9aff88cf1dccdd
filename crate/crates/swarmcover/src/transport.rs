//! Exact Wasserstein distances between weighted planar point sets.
//!
//! Distances of order 1 and 2 are computed by solving the discrete
//! transportation problem exactly with a primal transportation simplex, so
//! results are reference values rather than entropic approximations. Weights
//! are normalized to unit mass and zero-weight points are dropped before
//! solving.

use nalgebra::{DMatrix, Vector2};
use thiserror::Error;

use crate::real::{real, is_finite, Real};

/// Largest point count per side accepted by the brute-force matching oracle.
pub const ORACLE_MAX_POINTS: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("points and weights lengths differ: {points} vs {weights}")]
    LengthMismatch { points: usize, weights: usize },
    #[error("weight {index} is negative")]
    NegativeWeight { index: usize },
    #[error("point or weight {index} is not finite")]
    NonFinite { index: usize },
    #[error("distribution has no positive weight")]
    EmptyDistribution,
    #[error("matching oracle supports at most {max} points per side, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("matching oracle needs equally sized sets: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
}

/// Order of the Wasserstein distance: 1 uses plain distances as ground cost,
/// 2 uses squared distances and reports the square root of the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    One,
    Two,
}

/// A finite weighted point set; nonnegative finite weights, finite
/// coordinates. Construction validates, so every held value is usable.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPoints<T: Real> {
    points: Vec<Vector2<T>>,
    weights: Vec<T>,
}

impl<T: Real> WeightedPoints<T> {
    pub fn new(points: Vec<Vector2<T>>, weights: Vec<T>) -> Result<Self, TransportError> {
        if points.len() != weights.len() {
            return Err(TransportError::LengthMismatch {
                points: points.len(),
                weights: weights.len(),
            });
        }
        for (index, (p, w)) in points.iter().zip(&weights).enumerate() {
            if !is_finite(p.x) || !is_finite(p.y) || !is_finite(*w) {
                return Err(TransportError::NonFinite { index });
            }
            if *w < T::zero() {
                return Err(TransportError::NegativeWeight { index });
            }
        }
        Ok(Self { points, weights })
    }

    /// Equal weight on every point.
    pub fn uniform(points: Vec<Vector2<T>>) -> Result<Self, TransportError> {
        let weights = vec![T::one(); points.len()];
        Self::new(points, weights)
    }

    pub fn points(&self) -> &[Vector2<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> T {
        let mut t = T::zero();
        for w in &self.weights {
            t += *w;
        }
        t
    }

    /// Points with positive weight, weights rescaled to sum to one.
    fn normalized(&self) -> Result<(Vec<Vector2<T>>, Vec<T>), TransportError> {
        let total = self.total_weight();
        if total <= T::zero() {
            return Err(TransportError::EmptyDistribution);
        }
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        for (p, w) in self.points.iter().zip(&self.weights) {
            if *w > T::zero() {
                pts.push(*p);
                wts.push(*w / total);
            }
        }
        Ok((pts, wts))
    }
}

fn ground_cost<T: Real>(a: &Vector2<T>, b: &Vector2<T>, order: Order) -> T {
    let d2 = (a - b).norm_squared();
    match order {
        Order::One => d2.sqrt(),
        Order::Two => d2,
    }
}

fn finish<T: Real>(total: T, order: Order) -> T {
    match order {
        Order::One => total,
        // Squared distances can acquire a tiny negative residue through
        // cancellation in the simplex objective.
        Order::Two => total.max(T::zero()).sqrt(),
    }
}

/// Exact Wasserstein distance between two weighted point sets.
pub fn wasserstein<T: Real>(
    a: &WeightedPoints<T>,
    b: &WeightedPoints<T>,
    order: Order,
) -> Result<T, TransportError> {
    let (pa, wa) = a.normalized()?;
    let (pb, wb) = b.normalized()?;
    let cost = DMatrix::from_fn(pa.len(), pb.len(), |i, j| ground_cost(&pa[i], &pb[j], order));
    let total = solve_transport(&wa, &wb, &cost);
    Ok(finish(total, order))
}

/// Brute-force reference for uniform distributions on equally sized sets:
/// minimizes over all matchings. Valid because a linear objective over
/// couplings attains its optimum at a permutation.
pub fn matching_oracle<T: Real>(
    xs: &[Vector2<T>],
    ys: &[Vector2<T>],
    order: Order,
) -> Result<T, TransportError> {
    if xs.len() != ys.len() {
        return Err(TransportError::SizeMismatch { left: xs.len(), right: ys.len() });
    }
    let n = xs.len();
    if n == 0 {
        return Err(TransportError::EmptyDistribution);
    }
    if n > ORACLE_MAX_POINTS {
        return Err(TransportError::TooLarge { max: ORACLE_MAX_POINTS, got: n });
    }
    let share = T::one() / real::<T>(n as f64);
    let mut best: Option<T> = None;
    for_each_permutation(n, |perm| {
        let mut total = T::zero();
        for (i, &j) in perm.iter().enumerate() {
            total += share * ground_cost(&xs[i], &ys[j], order);
        }
        best = Some(match best {
            None => total,
            Some(b) => b.min(total),
        });
    });
    Ok(finish(best.expect("n >= 1"), order))
}

/// Heap's algorithm; calls `f` once per permutation of 0..n.
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&idx);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                idx.swap(0, i);
            } else {
                idx.swap(c[i], i);
            }
            f(&idx);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

struct BasisCell<T> {
    i: usize,
    j: usize,
    alloc: T,
}

/// Primal transportation simplex. `supply` and `demand` are strictly
/// positive and sum to the same total; `cost` is supply-major. Returns the
/// optimal objective value.
///
/// Deterministic pivoting: Dantzig's rule with lexicographic tie-breaks,
/// falling back to Bland's rule after a long run of degenerate pivots so
/// termination is guaranteed.
fn solve_transport<T: Real>(supply: &[T], demand: &[T], cost: &DMatrix<T>) -> T {
    let m = supply.len();
    let n = demand.len();
    debug_assert!(m >= 1 && n >= 1);

    // Northwest-corner start: exactly m + n - 1 cells forming a spanning
    // tree of the bipartite row/column graph, some possibly zero.
    let mut basis: Vec<BasisCell<T>> = Vec::with_capacity(m + n - 1);
    {
        let mut su = supply.to_vec();
        let mut de = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let t = su[i].min(de[j]).max(T::zero());
            basis.push(BasisCell { i, j, alloc: t });
            su[i] -= t;
            de[j] -= t;
            if i + 1 == m && j + 1 == n {
                break;
            }
            if su[i] <= de[j] && i + 1 < m {
                i += 1;
            } else if j + 1 < n {
                j += 1;
            } else {
                i += 1;
            }
        }
        debug_assert_eq!(basis.len(), m + n - 1);
    }

    let mut in_basis = vec![false; m * n];
    for cell in &basis {
        in_basis[cell.i * n + cell.j] = true;
    }

    // Optimality tolerance scaled to the costs; floats coarser than f64 get
    // a correspondingly coarser threshold.
    let mut scale = T::one();
    for i in 0..m {
        for j in 0..n {
            scale = scale.max(cost[(i, j)].abs());
        }
    }
    let tol = scale * real::<T>(1e-13).max(real::<T>(64.0) * T::default_epsilon());

    let stall_limit = 64 * (m + n);
    let mut degenerate_run = 0usize;
    let mut bland = false;

    let total_nodes = m + n; // rows are 0..m, columns are m..m+n
    loop {
        // Adjacency of the basis tree.
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); total_nodes];
        for (k, cell) in basis.iter().enumerate() {
            adj[cell.i].push((m + cell.j, k));
            adj[m + cell.j].push((cell.i, k));
        }

        // Duals from the spanning tree: u_i + v_j = c_ij on basic cells.
        let mut u: Vec<Option<T>> = vec![None; m];
        let mut v: Vec<Option<T>> = vec![None; n];
        u[0] = Some(T::zero());
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            for &(other, k) in &adj[node] {
                let cell = &basis[k];
                if other < m {
                    if u[other].is_none() {
                        u[other] = Some(cost[(cell.i, cell.j)] - v[cell.j].expect("column dual set"));
                        stack.push(other);
                    }
                } else if v[other - m].is_none() {
                    v[other - m] = Some(cost[(cell.i, cell.j)] - u[cell.i].expect("row dual set"));
                    stack.push(other);
                }
            }
        }

        // Entering cell: most negative reduced cost (Dantzig), first
        // negative in scan order once Bland's rule is active.
        let mut entering: Option<(usize, usize, T)> = None;
        'scan: for i in 0..m {
            let ui = u[i].expect("basis tree spans all rows");
            for j in 0..n {
                if in_basis[i * n + j] {
                    continue;
                }
                let r = cost[(i, j)] - ui - v[j].expect("basis tree spans all columns");
                if r < -tol {
                    if bland {
                        entering = Some((i, j, r));
                        break 'scan;
                    }
                    match entering {
                        Some((_, _, br)) if r >= br => {}
                        _ => entering = Some((i, j, r)),
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            break;
        };

        // Unique tree path from row ei to column ej; with the entering cell
        // it closes the pivot cycle. Collected from the column end, the path
        // cells alternate signs -,+,-,...
        let mut parent_node = vec![usize::MAX; total_nodes];
        let mut parent_cell = vec![usize::MAX; total_nodes];
        let mut seen = vec![false; total_nodes];
        seen[ei] = true;
        let mut queue = std::collections::VecDeque::from([ei]);
        while let Some(node) = queue.pop_front() {
            if node == m + ej {
                break;
            }
            for &(other, k) in &adj[node] {
                if !seen[other] {
                    seen[other] = true;
                    parent_node[other] = node;
                    parent_cell[other] = k;
                    queue.push_back(other);
                }
            }
        }
        debug_assert!(seen[m + ej], "basis must stay a spanning tree");
        let mut path = Vec::new();
        let mut node = m + ej;
        while node != ei {
            path.push(parent_cell[node]);
            node = parent_node[node];
        }

        // theta = the smallest allocation on a minus cell; that cell leaves.
        let mut theta: Option<T> = None;
        let mut leaving: Option<usize> = None;
        for (step, &k) in path.iter().enumerate() {
            if step % 2 == 0 {
                let a = basis[k].alloc;
                let better = match theta {
                    None => true,
                    Some(t) if a < t => true,
                    Some(t) => {
                        a == t
                            && leaving.map_or(true, |l| {
                                (basis[k].i, basis[k].j) < (basis[l].i, basis[l].j)
                            })
                    }
                };
                if better {
                    theta = Some(a);
                    leaving = Some(k);
                }
            }
        }
        let theta = theta.expect("pivot cycle has at least one minus cell");
        let leaving = leaving.expect("pivot cycle has at least one minus cell");

        for (step, &k) in path.iter().enumerate() {
            if step % 2 == 0 {
                basis[k].alloc = (basis[k].alloc - theta).max(T::zero());
            } else {
                basis[k].alloc += theta;
            }
        }
        in_basis[basis[leaving].i * n + basis[leaving].j] = false;
        in_basis[ei * n + ej] = true;
        basis[leaving] = BasisCell { i: ei, j: ej, alloc: theta };

        if theta > T::zero() {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
            if degenerate_run > stall_limit {
                bland = true;
            }
        }
    }

    let mut total = T::zero();
    for cell in &basis {
        total += cell.alloc * cost[(cell.i, cell.j)];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn wp(points: &[(f64, f64)], weights: &[f64]) -> WeightedPoints<f64> {
        WeightedPoints::new(
            points.iter().map(|&(x, y)| Vector2::new(x, y)).collect(),
            weights.to_vec(),
        )
        .unwrap()
    }

    fn pts(points: &[(f64, f64)]) -> Vec<Vector2<f64>> {
        points.iter().map(|&(x, y)| Vector2::new(x, y)).collect()
    }

    #[test]
    fn single_pair_is_plain_distance() {
        let a = wp(&[(0.0, 0.0)], &[1.0]);
        let b = wp(&[(3.0, 4.0)], &[1.0]);
        assert_relative_eq!(wasserstein(&a, &b, Order::One).unwrap(), 5.0);
        assert_relative_eq!(wasserstein(&a, &b, Order::Two).unwrap(), 5.0);
    }

    #[test]
    fn parallel_pairs_match_identically() {
        let a = wp(&[(0.0, 0.0), (1.0, 0.0)], &[1.0, 1.0]);
        let b = wp(&[(0.0, 1.0), (1.0, 1.0)], &[1.0, 1.0]);
        assert_relative_eq!(wasserstein(&a, &b, Order::One).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(wasserstein(&a, &b, Order::Two).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mass_splits_across_targets() {
        let a = wp(&[(0.0, 0.0)], &[2.0]);
        let b = wp(&[(-1.0, 0.0), (1.0, 0.0)], &[1.0, 1.0]);
        assert_relative_eq!(wasserstein(&a, &b, Order::One).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(wasserstein(&a, &b, Order::Two).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn orders_differ_on_uneven_split() {
        let a = wp(&[(0.0, 0.0)], &[1.0]);
        let b = wp(&[(1.0, 0.0), (3.0, 0.0)], &[0.5, 0.5]);
        assert_relative_eq!(wasserstein(&a, &b, Order::One).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(
            wasserstein(&a, &b, Order::Two).unwrap(),
            5.0f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn weights_are_normalized() {
        let a = wp(&[(0.0, 0.0), (2.0, 0.0)], &[3.0, 3.0]);
        let b = wp(&[(0.0, 1.0), (2.0, 1.0)], &[0.25, 0.25]);
        assert_relative_eq!(wasserstein(&a, &b, Order::One).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_weight_points_are_ignored() {
        let a = wp(&[(0.0, 0.0)], &[1.0]);
        let b = wp(&[(3.0, 4.0), (1e6, 1e6)], &[1.0, 0.0]);
        assert_relative_eq!(wasserstein(&a, &b, Order::One).unwrap(), 5.0);
    }

    #[test]
    fn identical_distributions_have_zero_distance() {
        let a = wp(&[(1.0, 2.0), (1.0, 2.0), (-3.0, 0.5)], &[0.5, 0.5, 1.0]);
        let d = wasserstein(&a, &a.clone(), Order::One).unwrap();
        assert!(d.abs() < 1e-12, "distance {d} should vanish");
        let d = wasserstein(&a, &a.clone(), Order::Two).unwrap();
        assert!(d.abs() < 1e-9, "distance {d} should vanish");
    }

    #[test]
    fn greedy_matching_would_be_wrong() {
        // Nearest-neighbor matching sends both left points to (0,0); the
        // optimal matching crosses. Frozen optimum: 0.5 * (1 + 2) order 1.
        let a = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        let b = pts(&[(-1.0, 0.0), (3.0, 0.0)]);
        let ua = WeightedPoints::uniform(a.clone()).unwrap();
        let ub = WeightedPoints::uniform(b.clone()).unwrap();
        let d = wasserstein(&ua, &ub, Order::One).unwrap();
        assert_relative_eq!(d, 1.5, epsilon = 1e-12);
        assert_relative_eq!(matching_oracle(&a, &b, Order::One).unwrap(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn construction_errors() {
        let e = WeightedPoints::new(pts(&[(0.0, 0.0)]), vec![1.0, 2.0]).unwrap_err();
        assert_eq!(e, TransportError::LengthMismatch { points: 1, weights: 2 });
        let e = WeightedPoints::new(pts(&[(0.0, 0.0)]), vec![-0.5]).unwrap_err();
        assert_eq!(e, TransportError::NegativeWeight { index: 0 });
        let e = WeightedPoints::new(pts(&[(f64::NAN, 0.0)]), vec![1.0]).unwrap_err();
        assert_eq!(e, TransportError::NonFinite { index: 0 });
        let e = WeightedPoints::new(pts(&[(0.0, 0.0)]), vec![f64::INFINITY]).unwrap_err();
        assert_eq!(e, TransportError::NonFinite { index: 0 });
    }

    #[test]
    fn empty_distribution_is_rejected() {
        let a = wp(&[(0.0, 0.0)], &[0.0]);
        let b = wp(&[(1.0, 0.0)], &[1.0]);
        assert_eq!(
            wasserstein(&a, &b, Order::One).unwrap_err(),
            TransportError::EmptyDistribution
        );
        assert_eq!(
            wasserstein(&b, &a, Order::One).unwrap_err(),
            TransportError::EmptyDistribution
        );
    }

    #[test]
    fn oracle_guards() {
        let nine = pts(&[(0.0, 0.0); 9]);
        assert_eq!(
            matching_oracle(&nine, &nine, Order::One).unwrap_err(),
            TransportError::TooLarge { max: 8, got: 9 }
        );
        let a = pts(&[(0.0, 0.0)]);
        let b = pts(&[(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(
            matching_oracle(&a, &b, Order::One).unwrap_err(),
            TransportError::SizeMismatch { left: 1, right: 2 }
        );
        assert_eq!(
            matching_oracle::<f64>(&[], &[], Order::One).unwrap_err(),
            TransportError::EmptyDistribution
        );
    }

    fn random_points(rng: &mut StdRng, n: usize) -> Vec<Vector2<f64>> {
        (0..n)
            .map(|_| Vector2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect()
    }

    fn random_weighted(rng: &mut StdRng) -> WeightedPoints<f64> {
        let n = rng.gen_range(1..=7);
        let points = random_points(rng, n);
        let weights = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        WeightedPoints::new(points, weights).unwrap()
    }

    #[test]
    fn simplex_agrees_with_matching_oracle() {
        let mut rng = StdRng::seed_from_u64(42);
        for trial in 0..200 {
            let n = rng.gen_range(1..=6);
            let xs = random_points(&mut rng, n);
            let ys = random_points(&mut rng, n);
            let ua = WeightedPoints::uniform(xs.clone()).unwrap();
            let ub = WeightedPoints::uniform(ys.clone()).unwrap();
            for order in [Order::One, Order::Two] {
                let solver = wasserstein(&ua, &ub, order).unwrap();
                let oracle = matching_oracle(&xs, &ys, order).unwrap();
                assert!(
                    (solver - oracle).abs() <= 1e-9 * oracle.max(1.0),
                    "trial {trial}: solver {solver} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn metric_properties_hold() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_weighted(&mut rng);
            let b = random_weighted(&mut rng);
            let c = random_weighted(&mut rng);
            for order in [Order::One, Order::Two] {
                let ab = wasserstein(&a, &b, order).unwrap();
                let ba = wasserstein(&b, &a, order).unwrap();
                assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0), "symmetry: {ab} vs {ba}");
                let ac = wasserstein(&a, &c, order).unwrap();
                let bc = wasserstein(&b, &c, order).unwrap();
                assert!(ac <= ab + bc + 1e-7, "triangle: {ac} > {ab} + {bc}");
                assert!(ab >= -1e-12, "nonnegative: {ab}");
            }
        }
    }

    #[test]
    fn translation_and_scaling() {
        let mut rng = StdRng::seed_from_u64(99);
        let shift = Vector2::new(13.5, -2.25);
        let lambda = 3.0;
        for _ in 0..50 {
            let a = random_weighted(&mut rng);
            let b = random_weighted(&mut rng);
            let translate = |w: &WeightedPoints<f64>| {
                WeightedPoints::new(
                    w.points().iter().map(|p| p + shift).collect(),
                    w.weights().to_vec(),
                )
                .unwrap()
            };
            let scale = |w: &WeightedPoints<f64>| {
                WeightedPoints::new(
                    w.points().iter().map(|p| p * lambda).collect(),
                    w.weights().to_vec(),
                )
                .unwrap()
            };
            for order in [Order::One, Order::Two] {
                let d = wasserstein(&a, &b, order).unwrap();
                let dt = wasserstein(&translate(&a), &translate(&b), order).unwrap();
                assert!((d - dt).abs() <= 1e-9 * d.max(1.0), "translation: {d} vs {dt}");
                let ds = wasserstein(&scale(&a), &scale(&b), order).unwrap();
                assert!(
                    (lambda * d - ds).abs() <= 1e-9 * ds.max(1.0),
                    "scaling: {} vs {ds}",
                    lambda * d
                );
            }
        }
    }

    #[test]
    fn coincident_points_do_not_stall() {
        // Heavily degenerate instance: duplicated points and tied costs.
        let a = wp(
            &[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0), (1.0, 0.0)],
            &[0.25, 0.25, 0.25, 0.25],
        );
        let b = wp(
            &[(0.0, 0.0), (1.0, 0.0), (0.5, 0.0), (0.5, 0.0)],
            &[0.25, 0.25, 0.25, 0.25],
        );
        for order in [Order::One, Order::Two] {
            let d = wasserstein(&a, &b, order).unwrap();
            assert!(d.is_finite());
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = WeightedPoints::<f32>::new(
            vec![Vector2::new(0.0f32, 0.0)],
            vec![1.0f32],
        )
        .unwrap();
        let b = WeightedPoints::<f32>::new(
            vec![Vector2::new(3.0f32, 4.0)],
            vec![2.0f32],
        )
        .unwrap();
        let d = wasserstein(&a, &b, Order::One).unwrap();
        assert!((d - 5.0f32).abs() < 1e-5);
    }
}
