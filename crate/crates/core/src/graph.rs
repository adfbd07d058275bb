//! Graph and signal data model.
//!
//! A [`Graph`] stores a dense complex adjacency matrix where `A[n][m]` is the
//! weight of the directed edge `v_m -> v_n`, so that the graph shift
//! `(A s)_n = Σ_m A[n][m] s_m` pulls values along edges into each vertex.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GspError, Result};
use crate::linalg;

/// Tolerance used when structurally testing an adjacency for Hermitian
/// real symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

static NEXT_GRAPH_ID: AtomicU64 = AtomicU64::new(1);

/// Identity of a vertex set. Graphs derived from one another by
/// [`normalize_shift`] share it; independently constructed graphs never do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GraphId(u64);

impl GraphId {
    fn fresh() -> Self {
        GraphId(NEXT_GRAPH_ID.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    id: GraphId,
    adjacency: DMatrix<Complex64>,
    directed: bool,
    spectral_radius: OnceLock<f64>,
}

impl Graph {
    /// Builds a graph, detecting directedness structurally.
    pub fn new(adjacency: DMatrix<Complex64>) -> Result<Self> {
        validate_adjacency(&adjacency)?;
        let directed = !is_real_symmetric(&adjacency, SYMMETRY_TOL);
        Ok(Self::from_parts(adjacency, directed))
    }

    /// Builds a graph with an explicit directedness flag. Declaring a graph
    /// undirected requires a real symmetric adjacency.
    pub fn with_directed(adjacency: DMatrix<Complex64>, directed: bool) -> Result<Self> {
        validate_adjacency(&adjacency)?;
        if !directed && !is_real_symmetric(&adjacency, SYMMETRY_TOL) {
            return Err(GspError::NotUndirected(
                "adjacency is not real symmetric".into(),
            ));
        }
        Ok(Self::from_parts(adjacency, directed))
    }

    pub fn from_real(adjacency: DMatrix<f64>) -> Result<Self> {
        Self::new(adjacency.map(|w| Complex64::new(w, 0.0)))
    }

    /// Builds a graph from `(src, dst, weight)` triples on `n` nodes.
    /// Repeated edges accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for &(src, dst, w) in edges {
            if src >= n {
                return Err(GspError::IndexOutOfRange { index: src, len: n });
            }
            if dst >= n {
                return Err(GspError::IndexOutOfRange { index: dst, len: n });
            }
            a[(dst, src)] += w;
        }
        Self::new(a)
    }

    fn from_parts(adjacency: DMatrix<Complex64>, directed: bool) -> Self {
        Graph {
            id: GraphId::fresh(),
            adjacency,
            directed,
            spectral_radius: OnceLock::new(),
        }
    }

    pub fn id(&self) -> GraphId {
        self.id
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<Complex64> {
        &self.adjacency
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// True when every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.adjacency.iter().all(|w| w.im == 0.0)
    }

    /// Real part of the adjacency; only meaningful when [`Graph::is_real`].
    pub fn real_adjacency(&self) -> DMatrix<f64> {
        self.adjacency.map(|w| w.re)
    }

    /// `|λ_max|`, the largest eigenvalue modulus. Computed once per graph.
    pub fn spectral_radius(&self) -> Result<f64> {
        if let Some(r) = self.spectral_radius.get() {
            return Ok(*r);
        }
        let r = if self.directed {
            linalg::spectral_radius(&self.adjacency)?
        } else {
            linalg::symmetric_eigen(&self.real_adjacency())
                .0
                .iter()
                .fold(0.0f64, |acc, l| acc.max(l.abs()))
        };
        let _ = self.spectral_radius.set(r);
        Ok(r)
    }

    pub(crate) fn cache_spectral_radius(&self, r: f64) {
        let _ = self.spectral_radius.set(r);
    }

    /// Adjacency scaled to unit spectral radius.
    pub fn normalized_adjacency(&self) -> Result<DMatrix<Complex64>> {
        let r = self.checked_radius()?;
        Ok(self.adjacency.map(|w| w / r))
    }

    pub(crate) fn checked_radius(&self) -> Result<f64> {
        if self
            .adjacency
            .iter()
            .all(|w| *w == Complex64::new(0.0, 0.0))
        {
            return Err(GspError::ZeroAdjacency);
        }
        let r = self.spectral_radius()?;
        if r <= 0.0 {
            // nilpotent but non-zero: no eigenvalue to normalize by
            return Err(GspError::ZeroAdjacency);
        }
        Ok(r)
    }

    /// Nodes with an edge into `n` (the in-neighborhood `𝒩_n`).
    pub fn neighbors(&self, n: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&m| self.adjacency[(n, m)] != Complex64::new(0.0, 0.0))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency
            .iter()
            .filter(|w| **w != Complex64::new(0.0, 0.0))
            .count()
    }

    /// Weakly connected components, each sorted, ordered by smallest node.
    pub fn weak_components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    let zero = Complex64::new(0.0, 0.0);
                    if comp[v] == usize::MAX
                        && (self.adjacency[(u, v)] != zero || self.adjacency[(v, u)] != zero)
                    {
                        comp[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub(crate) fn check_signal(&self, s: &GraphSignal) -> Result<()> {
        if s.len() != self.n() {
            return Err(GspError::DimensionMismatch {
                expected: self.n(),
                got: s.len(),
            });
        }
        if s.graph_id != self.id {
            return Err(GspError::GraphMismatch);
        }
        Ok(())
    }

    pub(crate) fn require_undirected_nonnegative(&self) -> Result<()> {
        if self.directed || !self.is_real() {
            return Err(GspError::NotUndirected(
                "operation needs an undirected graph with real weights".into(),
            ));
        }
        for dst in 0..self.n() {
            for src in 0..self.n() {
                let w = self.adjacency[(dst, src)].re;
                if w < 0.0 {
                    return Err(GspError::NegativeWeight {
                        src,
                        dst,
                        weight: w,
                    });
                }
            }
        }
        Ok(())
    }
}

fn validate_adjacency(a: &DMatrix<Complex64>) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(GspError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    for col in 0..a.ncols() {
        for row in 0..a.nrows() {
            let w = a[(row, col)];
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(GspError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

fn is_real_symmetric(a: &DMatrix<Complex64>, tol: f64) -> bool {
    let scale = a.iter().fold(1.0f64, |acc, w| acc.max(w.norm()));
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            let w = a[(i, j)];
            if w.im.abs() > tol * scale || (w - a[(j, i)]).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// A complex signal indexed by the vertices of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    values: DVector<Complex64>,
    graph_id: GraphId,
}

impl GraphSignal {
    pub fn new(g: &Graph, values: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(g, DVector::from_vec(values))
    }

    pub fn from_real(g: &Graph, values: &[f64]) -> Result<Self> {
        Self::new(g, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_vector(g: &Graph, values: DVector<Complex64>) -> Result<Self> {
        if values.len() != g.n() {
            return Err(GspError::DimensionMismatch {
                expected: g.n(),
                got: values.len(),
            });
        }
        if let Some(i) = values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(GspError::NonFinite { row: i, col: 0 });
        }
        Ok(GraphSignal {
            values,
            graph_id: g.id(),
        })
    }

    pub fn zeros(g: &Graph) -> Self {
        GraphSignal {
            values: DVector::zeros(g.n()),
            graph_id: g.id(),
        }
    }

    pub(crate) fn bound_to(graph_id: GraphId, values: DVector<Complex64>) -> Self {
        GraphSignal { values, graph_id }
    }

    pub fn graph_id(&self) -> GraphId {
        self.graph_id
    }

    pub fn values(&self) -> &DVector<Complex64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        GraphSignal::bound_to(self.graph_id, &self.values * c)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: Complex64, other: &GraphSignal) -> Result<Self> {
        if other.graph_id != self.graph_id {
            return Err(GspError::GraphMismatch);
        }
        Ok(GraphSignal::bound_to(
            self.graph_id,
            &self.values + &other.values * c,
        ))
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }
}

/// Two-class labels: `+1`, `-1`, or `0` for unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSignal {
    labels: Vec<f64>,
}

impl LabelSignal {
    pub fn new(labels: Vec<f64>) -> Result<Self> {
        for (node, &value) in labels.iter().enumerate() {
            if value != 1.0 && value != -1.0 && value != 0.0 {
                return Err(GspError::InvalidLabel { node, value });
            }
        }
        Ok(LabelSignal { labels })
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_known(&self, n: usize) -> bool {
        self.labels[n] != 0.0
    }

    pub fn known_count(&self) -> usize {
        self.labels.iter().filter(|l| **l != 0.0).count()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.known_count() == self.len()
    }

    /// Diagonal of the selection mask `C`.
    pub fn mask(&self) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&l| if l != 0.0 { 1.0 } else { 0.0 })
            .collect()
    }

    /// Keeps only the labels at `nodes`, zeroing the rest.
    pub fn restricted_to(&self, nodes: &[usize]) -> Self {
        let mut labels = vec![0.0; self.len()];
        for &n in nodes {
            labels[n] = self.labels[n];
        }
        LabelSignal { labels }
    }
}

/// Distance function for k-NN graph construction.
pub trait Metric {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
}

impl<F> Metric for F
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self(a, b)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Metric for Euclidean {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// Great-circle distance between `(latitude, longitude)` pairs in degrees,
/// on a sphere of the given radius (radius 1 yields the central angle).
#[derive(Debug, Clone, Copy)]
pub struct Haversine {
    pub radius: f64,
}

impl Default for Haversine {
    fn default() -> Self {
        Haversine { radius: 1.0 }
    }
}

impl Metric for Haversine {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let (lat1, lon1) = (a[0].to_radians(), a[1].to_radians());
        let (lat2, lon2) = (b[0].to_radians(), b[1].to_radians());
        let h = ((lat2 - lat1) / 2.0).sin().powi(2)
            + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
        2.0 * self.radius * h.sqrt().min(1.0).asin()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KnnOptions {
    /// Every selected edge gets weight 1.
    pub unweighted: bool,
    /// Use the union of the k-NN relation and its transpose.
    pub symmetrize: bool,
}

/// Directed k-nearest-neighbor graph with Gaussian weights
/// `A[n][m] = exp(-d²_nm) / sqrt(Σ_{k∈𝒩_n} exp(-d²_nk) · Σ_{l∈𝒩_m} exp(-d²_ml))`.
///
/// Node `n` receives edges from its `k` nearest points; ties are broken by
/// lowest index.
pub fn build_knn_graph<M: Metric + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    metric: &M,
    opts: KnnOptions,
) -> Result<Graph> {
    let n = points.len();
    if n == 0 {
        return Err(GspError::InvalidArgument("no points".into()));
    }
    if k == 0 || k >= n {
        return Err(GspError::InvalidArgument(format!(
            "k must satisfy 1 <= k < {n}, got {k}"
        )));
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(GspError::DimensionMismatch {
            expected: dim,
            got: points[bad].len(),
        });
    }

    let mut dist = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = metric.distance(&points[i], &points[j]);
            if !d.is_finite() {
                return Err(GspError::NonFinite { row: i, col: j });
            }
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }

    let mut hood: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
            others.truncate(k);
            others.sort_unstable();
            others
        })
        .collect();

    if opts.symmetrize {
        let mut sym = hood.clone();
        for (i, h) in hood.iter().enumerate() {
            for &j in h {
                if !sym[j].contains(&i) {
                    sym[j].push(i);
                }
            }
        }
        for h in &mut sym {
            h.sort_unstable();
        }
        hood = sym;
    }

    let mut a = DMatrix::<f64>::zeros(n, n);
    if opts.unweighted {
        for (i, h) in hood.iter().enumerate() {
            for &j in h {
                a[(i, j)] = 1.0;
            }
        }
    } else {
        // log Σ_{k∈𝒩_i} exp(-d²_ik), computed stably
        let log_mass: Vec<f64> = hood
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let exps: Vec<f64> = h.iter().map(|&j| -dist[(i, j)].powi(2)).collect();
                let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln()
            })
            .collect();
        for (i, h) in hood.iter().enumerate() {
            for &j in h {
                let log_w = -dist[(i, j)].powi(2) - 0.5 * (log_mass[i] + log_mass[j]);
                a[(i, j)] = log_w.exp();
            }
        }
    }
    let directed = !opts.symmetrize;
    let adjacency = a.map(|w| Complex64::new(w, 0.0));
    if directed {
        Graph::new(adjacency)
    } else {
        Graph::with_directed(adjacency, false)
    }
}

/// Returns the graph with adjacency `A / |λ_max|`; the vertex identity is kept.
pub fn normalize_shift(g: &Graph) -> Result<Graph> {
    let r = g.checked_radius()?;
    let out = Graph {
        id: g.id,
        adjacency: g.adjacency.map(|w| w / r),
        directed: g.directed,
        spectral_radius: OnceLock::new(),
    };
    let _ = out.spectral_radius.set(1.0);
    Ok(out)
}

/// `A·s`.
pub fn graph_shift(g: &Graph, s: &GraphSignal) -> Result<GraphSignal> {
    g.check_signal(s)?;
    Ok(GraphSignal::bound_to(g.id, &g.adjacency * &s.values))
}

/// Undirected version of a real graph: each vertex pair keeps the weight of
/// larger magnitude among its two directions.
pub fn symmetrized(g: &Graph) -> Result<Graph> {
    if !g.is_real() {
        return Err(GspError::NotUndirected(
            "cannot symmetrize complex weights".into(),
        ));
    }
    let a = g.real_adjacency();
    let n = g.n();
    let sym = DMatrix::from_fn(n, n, |i, j| {
        if a[(i, j)].abs() >= a[(j, i)].abs() {
            a[(i, j)]
        } else {
            a[(j, i)]
        }
    });
    Graph::with_directed(sym.map(|w| Complex64::new(w, 0.0)), false)
}

/// `L = D − A` with `D_nn = Σ_m A[n][m]`.
pub fn laplacian(g: &Graph) -> Result<DMatrix<f64>> {
    g.require_undirected_nonnegative()?;
    let a = g.real_adjacency();
    let mut l = -a.clone();
    for i in 0..g.n() {
        l[(i, i)] += a.row(i).sum();
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn symmetrizing_a_directed_path() {
        let g = Graph::from_edges(3, &[(0, 1, c(1.0)), (1, 2, c(2.0)), (2, 1, c(0.5))]).unwrap();
        let u = symmetrized(&g).unwrap();
        assert!(!u.is_directed());
        let a = u.real_adjacency();
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(1, 2)], 2.0);
        assert_eq!(a[(2, 1)], 2.0);
    }

    fn path3() -> Graph {
        Graph::from_real(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        ))
        .unwrap()
    }

    fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, c(1.0))).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn directedness_is_detected() {
        assert!(!path3().is_directed());
        assert!(cycle(3).is_directed());
        let herm = DMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                c(0.0),
            ],
        );
        assert!(Graph::new(herm).unwrap().is_directed());
    }

    #[test]
    fn explicit_undirected_flag_requires_symmetry() {
        let a = cycle(3).adjacency().clone();
        assert!(Graph::with_directed(a, false).is_err());
        let p = path3().adjacency().clone();
        assert!(Graph::with_directed(p, true).unwrap().is_directed());
    }

    #[test]
    fn rejects_bad_adjacency() {
        assert!(matches!(
            Graph::new(DMatrix::zeros(2, 3)),
            Err(GspError::NotSquare { .. })
        ));
        assert!(matches!(
            Graph::new(DMatrix::zeros(0, 0)),
            Err(GspError::NotSquare { .. })
        ));
        let mut a = DMatrix::from_element(2, 2, c(0.0));
        a[(1, 0)] = c(f64::NAN);
        assert!(matches!(
            Graph::new(a),
            Err(GspError::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn knn_collinear_points() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let g = build_knn_graph(&pts, 1, &Euclidean, KnnOptions::default()).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.neighbors(0), vec![1]);
        // node 1 is equidistant from 0 and 2: the lower index wins
        assert_eq!(g.neighbors(1), vec![0]);
        assert_eq!(g.neighbors(2), vec![1]);
    }

    #[test]
    fn knn_unweighted_is_binary() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.3],
            vec![2.0, 5.0],
            vec![0.2, 0.9],
        ];
        let opts = KnnOptions {
            unweighted: true,
            symmetrize: false,
        };
        let g = build_knn_graph(&pts, 2, &Euclidean, opts).unwrap();
        assert!(g.adjacency().iter().all(|w| *w == c(0.0) || *w == c(1.0)));
        assert_eq!(g.edge_count(), 8);
    }

    #[test]
    fn knn_unit_square_weights() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ];
        let g = build_knn_graph(&pts, 2, &Euclidean, KnnOptions::default()).unwrap();
        // independent evaluation: every node sees its two side-neighbours at distance 1
        let e = (-1.0f64).exp();
        let expected = e / ((2.0 * e) * (2.0 * e)).sqrt();
        for n in 0..4 {
            for m in 0..4 {
                let adjacent = (n + 1) % 4 == m || (m + 1) % 4 == n;
                let want = if adjacent { expected } else { 0.0 };
                assert_abs_diff_eq!(g.adjacency()[(n, m)].re, want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn knn_symmetrize_gives_undirected() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0], vec![7.0]];
        let opts = KnnOptions {
            unweighted: false,
            symmetrize: true,
        };
        let g = build_knn_graph(&pts, 1, &Euclidean, opts).unwrap();
        assert!(!g.is_directed());
        // 3 -> 2 is not a raw 1-NN edge of 2, but appears after symmetrization
        assert!(g.adjacency()[(2, 3)].re > 0.0);
    }

    #[test]
    fn knn_rejects_large_k() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(build_knn_graph(&pts, 2, &Euclidean, KnnOptions::default()).is_err());
        assert!(build_knn_graph(&[], 1, &Euclidean, KnnOptions::default()).is_err());
    }

    #[test]
    fn haversine_quarter_circle() {
        let d = Haversine::default().distance(&[0.0, 0.0], &[0.0, 90.0]);
        assert_abs_diff_eq!(d, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        let closure = |a: &[f64], b: &[f64]| (a[0] - b[0]).abs();
        assert_eq!(closure.distance(&[1.0], &[4.0]), 3.0);
    }

    #[test]
    fn normalize_examples() {
        let cyc = cycle(5);
        let norm = normalize_shift(&cyc).unwrap();
        assert!((norm.adjacency() - cyc.adjacency()).norm() < 1e-12);
        assert_eq!(norm.id(), cyc.id());

        let two_i = Graph::from_real(DMatrix::identity(3, 3) * 2.0).unwrap();
        let n = normalize_shift(&two_i).unwrap();
        assert!((n.real_adjacency() - DMatrix::identity(3, 3)).norm() < 1e-12);

        let p = normalize_shift(&path3()).unwrap();
        let want = path3().real_adjacency() / 2f64.sqrt();
        assert!((p.real_adjacency() - want).norm() < 1e-12);
    }

    #[test]
    fn normalize_zero_is_error() {
        let z = Graph::from_real(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(normalize_shift(&z).unwrap_err(), GspError::ZeroAdjacency);
    }

    #[test]
    fn shift_examples() {
        let g = cycle(3);
        let s = GraphSignal::from_real(&g, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            graph_shift(&g, &s).unwrap().real_parts(),
            vec![3.0, 1.0, 2.0]
        );

        let p = path3();
        let e0 = GraphSignal::from_real(&p, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            graph_shift(&p, &e0).unwrap().real_parts(),
            vec![0.0, 1.0, 0.0]
        );
        let z = GraphSignal::zeros(&p);
        assert_eq!(graph_shift(&p, &z).unwrap().real_parts(), vec![0.0; 3]);
    }

    #[test]
    fn shift_rejects_foreign_signal() {
        let g = cycle(3);
        let h = cycle(3);
        let s = GraphSignal::from_real(&h, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(graph_shift(&g, &s).unwrap_err(), GspError::GraphMismatch);
        assert!(GraphSignal::from_real(&g, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let l = laplacian(&path3()).unwrap();
        let want =
            DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(l, want);

        let empty = Graph::from_real(DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(laplacian(&empty).unwrap(), DMatrix::zeros(4, 4));

        let mut a = DMatrix::zeros(4, 4);
        for i in 0..4 {
            a[(i, (i + 1) % 4)] = 1.0;
            a[((i + 1) % 4, i)] = 1.0;
        }
        let l4 = laplacian(&Graph::from_real(a).unwrap()).unwrap();
        let (mut beta, _) = linalg::symmetric_eigen(&l4);
        beta.sort_by(f64::total_cmp);
        for (b, want) in beta.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert_abs_diff_eq!(*b, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_rejects_directed_and_negative() {
        assert!(matches!(
            laplacian(&cycle(3)),
            Err(GspError::NotUndirected(_))
        ));
        let neg = Graph::from_real(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0])).unwrap();
        assert!(matches!(
            laplacian(&neg),
            Err(GspError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn labels_validate() {
        assert!(LabelSignal::new(vec![1.0, -1.0, 0.0]).is_ok());
        assert!(matches!(
            LabelSignal::new(vec![1.0, 0.5]),
            Err(GspError::InvalidLabel { node: 1, .. })
        ));
        let l = LabelSignal::new(vec![1.0, 0.0, -1.0]).unwrap();
        assert_eq!(l.mask(), vec![1.0, 0.0, 1.0]);
        assert_eq!(l.known_count(), 2);
    }

    #[test]
    fn weak_components_split() {
        let edges = vec![(0, 1, c(1.0)), (2, 3, c(1.0))];
        let g = Graph::from_edges(5, &edges).unwrap();
        assert_eq!(g.weak_components(), vec![vec![0, 1], vec![2, 3], vec![4]]);
    }
}
