//! Seeded test-instance generators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GspError, Result};
use crate::graph::{Graph, GraphSignal, LabelSignal};
use crate::spectral::{igft, FrequencyOrdering, SpectralBasis};

/// The generator every seeded entry point uses.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Directed cycle `v_i → v_{i+1 mod N}`; its adjacency is the cyclic
/// permutation matrix.
pub fn cycle(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(GspError::InvalidArgument(
            "cycle needs at least one node".into(),
        ));
    }
    let edges: Vec<_> = (0..n)
        .map(|i| (i, (i + 1) % n, Complex64::new(1.0, 0.0)))
        .collect();
    Graph::from_edges(n, &edges)
}

/// Undirected path `P_N`.
pub fn path(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(GspError::InvalidArgument(
            "path needs at least one node".into(),
        ));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
        a[(i - 1, i)] = 1.0;
    }
    Graph::from_real(a)
}

/// Uniform-ish simple `d`-regular undirected graph by the pairing model
/// with rejection.
pub fn random_regular<R: Rng>(n: usize, d: usize, rng: &mut R) -> Result<Graph> {
    if d >= n {
        return Err(GspError::InvalidArgument(format!(
            "degree {d} needs more than {n} nodes"
        )));
    }
    if (n * d) % 2 == 1 {
        return Err(GspError::InvalidArgument(format!(
            "no {d}-regular graph on {n} nodes: n·d must be even"
        )));
    }
    const ATTEMPTS: usize = 10_000;
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..ATTEMPTS {
        stubs.shuffle(rng);
        let mut a = DMatrix::zeros(n, n);
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || a[(u, v)] != 0.0 {
                continue 'attempt;
            }
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        return Graph::from_real(a);
    }
    Err(GspError::InvalidArgument(format!(
        "pairing model found no simple {d}-regular graph on {n} nodes in {ATTEMPTS} attempts"
    )))
}

/// Two-block stochastic block model, undirected and unweighted. Nodes
/// `0..⌈N/2⌉` form block `+1`, the rest block `−1`.
pub fn sbm<R: Rng>(n: usize, p: f64, q: f64, rng: &mut R) -> Result<(Graph, LabelSignal)> {
    if n < 2 {
        return Err(GspError::InvalidArgument(
            "sbm needs at least two nodes".into(),
        ));
    }
    for x in [p, q] {
        if !(0.0..=1.0).contains(&x) {
            return Err(GspError::InvalidArgument(format!(
                "probability {x} outside [0, 1]"
            )));
        }
    }
    let half = n.div_ceil(2);
    let block = |i: usize| i < half;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let prob = if block(i) == block(j) { p } else { q };
            if rng.random::<f64>() < prob {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    let labels = (0..n).map(|i| if block(i) { 1.0 } else { -1.0 }).collect();
    Ok((Graph::from_real(a)?, LabelSignal::new(labels)?))
}

/// Erdős–Rényi style undirected graph with weights uniform in `[0.1, 1)`.
/// A spanning path is added so the graph is connected.
pub fn random_undirected<R: Rng>(n: usize, density: f64, rng: &mut R) -> Result<Graph> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || rng.random::<f64>() < density {
                let w = rng.random_range(0.1..1.0);
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
    }
    Graph::from_real(a)
}

/// Random directed graph with weights uniform in `[0.1, 1)`; a directed
/// Hamiltonian cycle is added so the adjacency is irreducible.
pub fn random_directed<R: Rng>(n: usize, density: f64, rng: &mut R) -> Result<Graph> {
    let mut a = DMatrix::zeros(n, n);
    for dst in 0..n {
        for src in 0..n {
            if src != dst && (dst == (src + 1) % n || rng.random::<f64>() < density) {
                a[(dst, src)] = rng.random_range(0.1..1.0);
            }
        }
    }
    Graph::from_real(a)
}

/// Uniform random points in `[0, 1)^dim`.
pub fn random_points<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// `igft` of a spectrum supported on the `count` lowest frequencies with
/// i.i.d. standard normal coefficients. Conjugate eigenvalue pairs receive
/// conjugate coefficients so the result is real for real graphs; the
/// imaginary residue is dropped.
pub fn low_band_signal<R: Rng>(
    g: &Graph,
    b: &SpectralBasis,
    ordering: &FrequencyOrdering,
    count: usize,
    rng: &mut R,
) -> Result<GraphSignal> {
    let n = b.n();
    let lambdas = b.eigenvalues();
    let mut shat = DVector::from_element(n, Complex64::new(0.0, 0.0));
    let mut assigned = vec![false; n];
    for &k in ordering.order.iter().take(count.min(n)) {
        if assigned[k] {
            continue;
        }
        let z = normal(rng);
        let w = normal(rng);
        if lambdas[k].im.abs() <= 1e-12 * b.lambda_max_abs().max(1.0) || !g.is_real() {
            shat[k] = Complex64::new(z, 0.0);
            assigned[k] = true;
            continue;
        }
        shat[k] = Complex64::new(z, w);
        assigned[k] = true;
        let conj = lambdas[k].conj();
        if let Some(j) = (0..n).find(|&j| {
            !assigned[j] && (lambdas[j] - conj).norm() <= 1e-9 * b.lambda_max_abs().max(1.0)
        }) {
            shat[j] = Complex64::new(z, -w);
            assigned[j] = true;
        }
    }
    let s = igft(b, &shat)?;
    GraphSignal::from_real(g, &s.real_parts())
}

/// Box–Muller standard normal, so the crate needs no distribution dependency.
struct StandardNormal;

impl rand::distr::Distribution<f64> for StandardNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Standard normal draw.
pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{decompose, gft, order_frequencies, VariationForm};

    #[test]
    fn cycle_is_cyclic_permutation() {
        let g = cycle(4).unwrap();
        let a = g.real_adjacency();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a[(i, j)], if i == (j + 1) % 4 { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(g.edge_count(), 4);
        assert!(g.is_directed());
    }

    #[test]
    fn path_is_undirected() {
        let g = path(3).unwrap();
        assert!(!g.is_directed());
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn regular_degrees_and_parity() {
        let mut rng = seeded(3);
        for (n, d) in [(10, 3), (12, 4), (7, 2), (30, 3)] {
            let g = random_regular(n, d, &mut rng).unwrap();
            let a = g.real_adjacency();
            for i in 0..n {
                assert_eq!(a.row(i).sum(), d as f64);
                assert_eq!(a[(i, i)], 0.0);
            }
            assert!(!g.is_directed());
        }
        assert!(random_regular(7, 3, &mut rng).is_err());
        assert!(random_regular(4, 4, &mut rng).is_err());
    }

    #[test]
    fn sbm_is_reproducible() {
        let (g1, l1) = sbm(20, 0.8, 0.05, &mut seeded(7)).unwrap();
        let (g2, l2) = sbm(20, 0.8, 0.05, &mut seeded(7)).unwrap();
        assert_eq!(g1.adjacency(), g2.adjacency());
        assert_eq!(l1, l2);
        assert_eq!(l1.labels().iter().filter(|l| **l == 1.0).count(), 10);
        let (g3, _) = sbm(20, 0.8, 0.05, &mut seeded(8)).unwrap();
        assert_ne!(g1.adjacency(), g3.adjacency());
    }

    #[test]
    fn normal_moments() {
        let mut rng = seeded(1);
        let xs: Vec<f64> = (0..20000).map(|_| normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn low_band_signal_is_real_and_band_limited() {
        let g = random_directed(12, 0.3, &mut seeded(5)).unwrap();
        let b = decompose(&g).unwrap();
        let ord = order_frequencies(&b, VariationForm::TotalVariation);
        let s = low_band_signal(&g, &b, &ord, 6, &mut seeded(6)).unwrap();
        let shat = gft(&b, &s).unwrap();
        let high: f64 = ord.order[8..].iter().map(|&k| shat[k].norm()).sum();
        let total: f64 = shat.iter().map(|z| z.norm()).sum();
        assert!(total > 0.0);
        // a conjugate partner may sit just past the cut, nothing further
        assert!(high <= 1e-9 * total, "{high} vs {total}");
    }
}
