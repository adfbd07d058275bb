//! Polynomial graph filters `h(A) = h₀I + h₁A + … + h_L A^L`: application,
//! frequency response, and design from a target response by solving the
//! Vandermonde system in the least-squares sense.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GspError, Result};
use crate::graph::{Graph, GraphSignal};
use crate::linalg;
use crate::spectral::{order_frequencies, FrequencyOrdering, SpectralBasis, VariationForm};

type C = Complex64;

/// Frequencies closer than this are merged before design.
pub const DEDUP_TOL: f64 = 1e-10;
/// Minimum pairwise distance between design frequencies.
pub const DISTINCT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFilter {
    taps: Vec<C>,
}

impl GraphFilter {
    pub fn new(taps: Vec<C>) -> Result<Self> {
        if taps.is_empty() {
            return Err(GspError::InvalidArgument(
                "a filter needs at least one tap".into(),
            ));
        }
        if let Some(i) = taps
            .iter()
            .position(|t| !t.re.is_finite() || !t.im.is_finite())
        {
            return Err(GspError::NonFinite { row: i, col: 0 });
        }
        Ok(GraphFilter { taps })
    }

    pub fn from_real(taps: &[f64]) -> Result<Self> {
        Self::new(taps.iter().map(|&t| C::new(t, 0.0)).collect())
    }

    pub fn identity() -> Self {
        GraphFilter {
            taps: vec![C::new(1.0, 0.0)],
        }
    }

    pub fn shift() -> Self {
        GraphFilter {
            taps: vec![C::new(0.0, 0.0), C::new(1.0, 0.0)],
        }
    }

    pub fn taps(&self) -> &[C] {
        &self.taps
    }

    /// Polynomial degree `L`.
    pub fn degree(&self) -> usize {
        self.taps.len() - 1
    }

    /// `h(λ)` by Horner's rule.
    pub fn eval(&self, lambda: C) -> C {
        self.taps
            .iter()
            .rev()
            .fold(C::new(0.0, 0.0), |acc, &h| acc * lambda + h)
    }

    /// `h'(λ)`, `h''(λ)/2!`, … up to order `k - 1`, starting with `h(λ)`.
    fn taylor(&self, lambda: C, k: usize) -> Vec<C> {
        // synthetic division repeated k times
        let mut coeffs: Vec<C> = self.taps.clone();
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            if coeffs.is_empty() {
                out.push(C::new(0.0, 0.0));
                continue;
            }
            let mut acc = C::new(0.0, 0.0);
            let mut quotient = vec![C::new(0.0, 0.0); coeffs.len().saturating_sub(1)];
            for i in (0..coeffs.len()).rev() {
                acc = acc * lambda + coeffs[i];
                if i > 0 {
                    quotient[i - 1] = acc;
                }
            }
            out.push(acc);
            coeffs = quotient;
        }
        out
    }
}

/// `h(A)s` (or `h(A^norm)s`) by Horner's rule: `L` shifts, never forming `A^ℓ`.
pub fn apply_filter(
    g: &Graph,
    f: &GraphFilter,
    s: &GraphSignal,
    normalized: bool,
) -> Result<GraphSignal> {
    g.check_signal(s)?;
    let shift = if normalized {
        g.normalized_adjacency()?
    } else {
        g.adjacency().clone()
    };
    let x = s.values();
    let taps = f.taps();
    let mut y = x * taps[taps.len() - 1];
    for &h in taps.iter().rev().skip(1) {
        y = &shift * y + x * h;
    }
    GraphSignal::from_vector(g, y)
}

/// `(h(λ₀), …, h(λ_{N−1}))`, evaluated on the eigenvalues of `A^norm` when
/// `normalized`.
pub fn frequency_response(b: &SpectralBasis, f: &GraphFilter, normalized: bool) -> Vec<C> {
    let lambdas = if normalized {
        b.normalized_eigenvalues()
    } else {
        b.eigenvalues().to_vec()
    };
    lambdas.into_iter().map(|l| f.eval(l)).collect()
}

/// `h(J_R(λ))` for a single Jordan block of size `R`: the upper triangular
/// Toeplitz matrix with `h^{(k)}(λ)/k!` on the `k`-th superdiagonal.
pub fn block_response(f: &GraphFilter, lambda: C, size: usize) -> DMatrix<C> {
    let t = f.taylor(lambda, size);
    DMatrix::from_fn(
        size,
        size,
        |i, j| if j >= i { t[j - i] } else { C::new(0.0, 0.0) },
    )
}

/// Desired values `α_m` at distinct frequencies `λ_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResponse {
    frequencies: Vec<C>,
    desired: Vec<C>,
}

impl TargetResponse {
    pub fn new(frequencies: Vec<C>, desired: Vec<C>) -> Result<Self> {
        if frequencies.len() != desired.len() {
            return Err(GspError::DimensionMismatch {
                expected: frequencies.len(),
                got: desired.len(),
            });
        }
        if frequencies.is_empty() {
            return Err(GspError::InvalidArgument("empty target response".into()));
        }
        for i in 0..frequencies.len() {
            for j in i + 1..frequencies.len() {
                if (frequencies[i] - frequencies[j]).norm() <= DISTINCT_TOL {
                    return Err(GspError::RepeatedFrequency {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(TargetResponse {
            frequencies,
            desired,
        })
    }

    pub fn frequencies(&self) -> &[C] {
        &self.frequencies
    }

    pub fn desired(&self) -> &[C] {
        &self.desired
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `1 − α` at the same frequencies.
    pub fn complement(&self) -> Self {
        TargetResponse {
            frequencies: self.frequencies.clone(),
            desired: self.desired.iter().map(|a| C::new(1.0, 0.0) - a).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDesign {
    pub filter: GraphFilter,
    /// `‖V h − α‖₂`
    pub residual: f64,
    /// `h(λ_m)` at each target frequency.
    pub achieved: Vec<C>,
}

/// `M × (L+1)` Vandermonde matrix `[λ_m^ℓ]`.
pub fn vandermonde(frequencies: &[C], degree: usize) -> DMatrix<C> {
    DMatrix::from_fn(frequencies.len(), degree + 1, |m, l| {
        frequencies[m].powu(l as u32)
    })
}

/// Which exact interpolant to return when `M < L + 1` leaves infinitely many.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Underdetermined {
    /// The unique interpolant of degree `M − 1`, zero-padded to `L + 1` taps.
    /// Linear in the target, and a constant target gives `(c, 0, …, 0)`.
    #[default]
    MinimalDegree,
    /// The tap vector of least ℓ₂ norm.
    MinimumNorm,
}

/// Fits taps of degree `degree` to the target. Overdetermined systems are
/// solved in the least-squares sense by pivoted Householder QR; square and
/// underdetermined ones return an exact interpolant.
pub fn design_filter(t: &TargetResponse, degree: usize) -> Result<FilterDesign> {
    design_filter_with(t, degree, Underdetermined::default())
}

pub fn design_filter_with(
    t: &TargetResponse,
    degree: usize,
    policy: Underdetermined,
) -> Result<FilterDesign> {
    let m = t.len();
    let v = vandermonde(&t.frequencies, degree);
    let alpha = DVector::from_vec(t.desired.clone());
    let rank_tol = f64::EPSILON * (m.max(degree + 1) as f64);
    let taps = if m >= degree + 1 {
        linalg::lstsq(&v, &alpha, rank_tol).0
    } else {
        match policy {
            Underdetermined::MinimalDegree => {
                let square = vandermonde(&t.frequencies, m - 1);
                let low = linalg::lstsq(&square, &alpha, rank_tol).0;
                let mut taps = DVector::from_element(degree + 1, C::new(0.0, 0.0));
                taps.rows_mut(0, m).copy_from(&low);
                taps
            }
            Underdetermined::MinimumNorm => linalg::min_norm_solve(&v, &alpha, rank_tol)?,
        }
    };
    let achieved = &v * &taps;
    let residual = (&achieved - &alpha).norm();
    Ok(FilterDesign {
        filter: GraphFilter::new(taps.iter().cloned().collect())?,
        residual,
        achieved: achieved.iter().cloned().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    LowPass,
    HighPass,
    /// Pass band given as an inclusive rank interval of the low-to-high ordering.
    BandPass {
        lo: usize,
        hi: usize,
    },
}

impl std::str::FromStr for BandKind {
    type Err = GspError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowpass" => Ok(BandKind::LowPass),
            "highpass" => Ok(BandKind::HighPass),
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                match parts.as_slice() {
                    ["bandpass", lo, hi] => {
                        let parse = |x: &str| {
                            x.parse::<usize>()
                                .map_err(|_| GspError::InvalidArgument(format!("bad band edge {x:?}")))
                        };
                        Ok(BandKind::BandPass { lo: parse(lo)?, hi: parse(hi)? })
                    }
                    _ => Err(GspError::InvalidArgument(format!(
                        "unknown filter kind {other:?} (expected lowpass, highpass or bandpass:<lo>:<hi>)"
                    ))),
                }
            }
        }
    }
}

impl std::fmt::Display for BandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BandKind::LowPass => write!(f, "lowpass"),
            BandKind::HighPass => write!(f, "highpass"),
            BandKind::BandPass { lo, hi } => write!(f, "bandpass:{lo}:{hi}"),
        }
    }
}

/// Ideal response over the distinct frequencies in `eigenvalues`, walking
/// the ordering from low to high. Low-pass passes the `⌊M/2⌋` lowest
/// frequencies, high-pass is its complement.
pub fn ideal_response(
    ordering: &FrequencyOrdering,
    eigenvalues: &[C],
    kind: BandKind,
) -> Result<TargetResponse> {
    if ordering.order.len() != eigenvalues.len() {
        return Err(GspError::DimensionMismatch {
            expected: eigenvalues.len(),
            got: ordering.order.len(),
        });
    }
    let scale = eigenvalues.iter().fold(1.0f64, |m, l| m.max(l.norm()));
    let mut freqs: Vec<C> = Vec::new();
    for &k in &ordering.order {
        let l = eigenvalues[k];
        if !freqs.iter().any(|f| (f - l).norm() < DEDUP_TOL * scale) {
            freqs.push(l);
        }
    }
    let m = freqs.len();
    let pass = |rank: usize| match kind {
        BandKind::LowPass => rank < m / 2,
        BandKind::HighPass => rank >= m / 2,
        BandKind::BandPass { lo, hi } => rank >= lo && rank <= hi,
    };
    let desired: Vec<C> = (0..m)
        .map(|r| {
            if pass(r) {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        })
        .collect();
    if desired.iter().all(|d| d.re == 0.0) {
        return Err(GspError::EmptyBand);
    }
    TargetResponse::new(freqs, desired)
}

/// Designs an ideal band filter for the graph behind `b`, using the
/// eigenvalues of `A^norm` when `normalized`.
pub fn design_ideal(
    b: &SpectralBasis,
    kind: BandKind,
    degree: usize,
    normalized: bool,
) -> Result<(TargetResponse, FilterDesign)> {
    let ordering = order_frequencies(b, VariationForm::TotalVariation);
    let lambdas = if normalized {
        b.normalized_eigenvalues()
    } else {
        b.eigenvalues().to_vec()
    };
    let target = ideal_response(&ordering, &lambdas, kind)?;
    let design = design_filter(&target, degree)?;
    Ok((target, design))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{decompose, gft};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, c(1.0, 0.0))).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn identity_and_shift_filters() {
        let g = cycle(4);
        let s = GraphSignal::from_real(&g, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let id = apply_filter(&g, &GraphFilter::identity(), &s, false).unwrap();
        assert_eq!(id.values(), s.values());
        let sh = apply_filter(&g, &GraphFilter::shift(), &s, false).unwrap();
        assert_eq!(sh.real_parts(), vec![4.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn one_plus_shift_on_eigenvector() {
        let g = cycle(4);
        let b = decompose(&g).unwrap();
        let k = b
            .eigenvalues()
            .iter()
            .position(|l| (l - c(0.0, -1.0)).norm() < 1e-10)
            .unwrap();
        let v = b.component(k).unwrap();
        let out =
            apply_filter(&g, &GraphFilter::from_real(&[1.0, 1.0]).unwrap(), &v, false).unwrap();
        let want = v.values() * c(1.0, -1.0);
        assert!((out.values() - want).norm() < 1e-12);
    }

    #[test]
    fn responses() {
        let g = cycle(4);
        let b = decompose(&g).unwrap();
        let ones = frequency_response(&b, &GraphFilter::identity(), true);
        assert!(ones.iter().all(|r| (r - c(1.0, 0.0)).norm() < 1e-15));
        let shift = frequency_response(&b, &GraphFilter::shift(), false);
        for (r, l) in shift.iter().zip(b.eigenvalues()) {
            assert_eq!(r, l);
        }
        let mut sorted: Vec<(i64, i64)> = shift
            .iter()
            .map(|r| (r.re.round() as i64, r.im.round() as i64))
            .collect();
        sorted.sort();
        assert_eq!(sorted, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
    }

    #[test]
    fn convolution_theorem_on_cycle() {
        let g = cycle(6);
        let b = decompose(&g).unwrap();
        let f = GraphFilter::new(vec![c(0.3, 0.1), c(-1.0, 0.0), c(0.5, 0.2)]).unwrap();
        let s = GraphSignal::from_real(&g, &[1.0, -2.0, 0.5, 3.0, 0.0, 1.5]).unwrap();
        let lhs = gft(&b, &apply_filter(&g, &f, &s, true).unwrap()).unwrap();
        let resp = frequency_response(&b, &f, true);
        let rhs = gft(&b, &s).unwrap();
        for i in 0..6 {
            assert!((lhs[i] - resp[i] * rhs[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn design_three_point_interpolation() {
        let t = TargetResponse::new(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let d = design_filter(&t, 2).unwrap();
        for (h, w) in d.filter.taps().iter().zip([1.0, 0.5, -0.5]) {
            assert!((h - c(w, 0.0)).norm() < 1e-12);
        }
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn design_all_ones_is_constant() {
        let freqs: Vec<C> = (0..7).map(|k| C::from_polar(0.9, k as f64)).collect();
        let t = TargetResponse::new(freqs, vec![c(1.0, 0.0); 7]).unwrap();
        for degree in [0, 3, 6, 9] {
            let d = design_filter(&t, degree).unwrap();
            assert!(d.residual < 1e-10, "degree {degree}");
            assert!((d.filter.taps()[0] - c(1.0, 0.0)).norm() < 1e-9);
            for h in &d.filter.taps()[1..] {
                assert!(h.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn underdetermined_design_is_exact_and_minimal() {
        let t = TargetResponse::new(
            vec![c(1.0, 0.0), c(-1.0, 0.0)],
            vec![c(2.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let d = design_filter_with(&t, 3, Underdetermined::MinimumNorm).unwrap();
        assert!(d.residual < 1e-12);
        // h₀ + h₂ = 1 and h₁ + h₃ = 1; the shortest solution splits each evenly
        for (h, w) in d.filter.taps().iter().zip([0.5, 0.5, 0.5, 0.5]) {
            assert!((h - c(w, 0.0)).norm() < 1e-12);
        }
        // the line through (1, 2) and (−1, 0)
        let d = design_filter(&t, 3).unwrap();
        assert!(d.residual < 1e-12);
        for (h, w) in d.filter.taps().iter().zip([1.0, 1.0, 0.0, 0.0]) {
            assert!((h - c(w, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn repeated_frequencies_are_rejected() {
        let err =
            TargetResponse::new(vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0); 2]).unwrap_err();
        assert_eq!(
            err,
            GspError::RepeatedFrequency {
                first: 0,
                second: 1
            }
        );
    }

    #[test]
    fn c4_ideal_responses() {
        let b = decompose(&cycle(4)).unwrap();
        let ord = order_frequencies(&b, VariationForm::TotalVariation);
        let low = ideal_response(&ord, b.eigenvalues(), BandKind::LowPass).unwrap();
        assert_eq!(low.len(), 4);
        assert!((low.frequencies()[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((low.frequencies()[1] - c(0.0, -1.0)).norm() < 1e-12);
        let passed: Vec<f64> = low.desired().iter().map(|d| d.re).collect();
        assert_eq!(passed, vec![1.0, 1.0, 0.0, 0.0]);

        let high = ideal_response(&ord, b.eigenvalues(), BandKind::HighPass).unwrap();
        for (h, l) in high.desired().iter().zip(low.desired()) {
            assert_eq!(*h, c(1.0, 0.0) - l);
        }
        let all =
            ideal_response(&ord, b.eigenvalues(), BandKind::BandPass { lo: 0, hi: 3 }).unwrap();
        assert!(all.desired().iter().all(|d| *d == c(1.0, 0.0)));
        assert_eq!(
            ideal_response(&ord, b.eigenvalues(), BandKind::BandPass { lo: 3, hi: 1 }).unwrap_err(),
            GspError::EmptyBand
        );
    }

    #[test]
    fn ideal_response_deduplicates_repeated_eigenvalues() {
        let g = Graph::from_real(DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0,
            ],
        ))
        .unwrap();
        let b = decompose(&g).unwrap();
        let ord = order_frequencies(&b, VariationForm::TotalVariation);
        let t = ideal_response(&ord, b.eigenvalues(), BandKind::HighPass).unwrap();
        // K₄ has frequencies {3, −1}
        assert_eq!(t.len(), 2);
        let d = design_filter(&t, 1).unwrap();
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn band_kind_parsing() {
        assert_eq!("lowpass".parse::<BandKind>().unwrap(), BandKind::LowPass);
        assert_eq!(
            "bandpass:2:5".parse::<BandKind>().unwrap(),
            BandKind::BandPass { lo: 2, hi: 5 }
        );
        assert!("bandpass:2".parse::<BandKind>().is_err());
        assert_eq!(
            BandKind::BandPass { lo: 1, hi: 2 }.to_string(),
            "bandpass:1:2"
        );
    }

    #[test]
    fn jordan_block_response() {
        // h(x) = x²: h(J₂(λ)) = [[λ², 2λ], [0, λ²]]
        let f = GraphFilter::from_real(&[0.0, 0.0, 1.0]).unwrap();
        let r = block_response(&f, c(3.0, 0.0), 2);
        assert_eq!(r[(0, 0)], c(9.0, 0.0));
        assert_eq!(r[(0, 1)], c(6.0, 0.0));
        assert_eq!(r[(1, 0)], c(0.0, 0.0));
        // cross-check against explicit J²
        let j = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(2.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(2.0, 0.0),
            ],
        );
        let f3 = GraphFilter::from_real(&[1.0, -1.0, 0.5, 2.0]).unwrap();
        let explicit = DMatrix::<C>::identity(3, 3) * f3.taps()[0]
            + &j * f3.taps()[1]
            + &j * &j * f3.taps()[2]
            + &j * &j * &j * f3.taps()[3];
        let r3 = block_response(&f3, c(2.0, 0.0), 3);
        assert!((explicit - r3).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn eval_matches_naive_powers() {
        let f = GraphFilter::new(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.0)]).unwrap();
        let l = c(0.3, -0.7);
        let naive = f.taps()[0] + f.taps()[1] * l + f.taps()[2] * l * l;
        assert_abs_diff_eq!((f.eval(l) - naive).norm(), 0.0, epsilon = 1e-15);
    }
}
