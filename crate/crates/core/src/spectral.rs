//! Graph Fourier basis, total variation and frequency ordering.
//!
//! The Fourier basis is the eigenvector matrix `V` of the adjacency, with
//! every column scaled to unit ℓ₁ norm; the transform is `F = V⁻¹`. For an
//! ℓ₁-normalized eigenvector with eigenvalue `λ` the total variation reduces
//! to `|1 − λ/|λ_max||`, which is what frequency ordering sorts by.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GspError, Result};
use crate::graph::{laplacian, Graph, GraphId, GraphSignal};
use crate::linalg;

type C = Complex64;

/// Numerical thresholds used by [`decompose_with`].
#[derive(Debug, Clone, Copy)]
pub struct SpectralConfig {
    /// Largest accepted condition number of `V`.
    pub defect_threshold: f64,
    /// `‖A V − V Λ‖_max ≤ residual_tol · ‖A‖_max`.
    pub residual_tol: f64,
    /// Eigenvalues closer than `cluster_tol · |λ_max|` share an eigenspace.
    pub cluster_tol: f64,
    /// `|Im λ| ≤ real_tol · |λ_max|` is treated as a real eigenvalue of a real matrix.
    pub real_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            defect_threshold: 1e8,
            residual_tol: 1e-8,
            cluster_tol: 1e-10,
            real_tol: 1e-10,
        }
    }
}

/// Tolerance (on the total-variation scale) under which two frequencies
/// are considered tied and the deterministic tie-break applies.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    graph_id: GraphId,
    eigenvalues: Vec<C>,
    vectors: DMatrix<C>,
    fourier: DMatrix<C>,
    basis_condition: f64,
    lambda_max_abs: f64,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn graph_id(&self) -> GraphId {
        self.graph_id
    }

    pub fn eigenvalues(&self) -> &[C] {
        &self.eigenvalues
    }

    /// Eigenvalues of `A / |λ_max|`.
    pub fn normalized_eigenvalues(&self) -> Vec<C> {
        self.eigenvalues
            .iter()
            .map(|l| l / self.lambda_max_abs)
            .collect()
    }

    /// `V`, ℓ₁-normalized eigenvectors as columns.
    pub fn vectors(&self) -> &DMatrix<C> {
        &self.vectors
    }

    /// `F = V⁻¹`.
    pub fn fourier(&self) -> &DMatrix<C> {
        &self.fourier
    }

    pub fn basis_condition(&self) -> f64 {
        self.basis_condition
    }

    pub fn lambda_max_abs(&self) -> f64 {
        self.lambda_max_abs
    }

    /// The `k`-th frequency component as a signal.
    pub fn component(&self, k: usize) -> Result<GraphSignal> {
        if k >= self.n() {
            return Err(GspError::IndexOutOfRange {
                index: k,
                len: self.n(),
            });
        }
        Ok(GraphSignal::bound_to(
            self.graph_id,
            self.vectors.column(k).into_owned(),
        ))
    }

    /// `|1 − λ_k / |λ_max||`, the total variation of component `k`.
    pub fn eigen_variation(&self, k: usize) -> f64 {
        (C::new(1.0, 0.0) - self.eigenvalues[k] / self.lambda_max_abs).norm()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(GspError::DimensionMismatch {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }
}

pub fn decompose(g: &Graph) -> Result<SpectralBasis> {
    decompose_with(g, &SpectralConfig::default())
}

/// Eigendecomposition of the adjacency. Undirected graphs use the real
/// symmetric solver; everything else goes through the general complex
/// Schur route.
pub fn decompose_with(g: &Graph, cfg: &SpectralConfig) -> Result<SpectralBasis> {
    let a = g.adjacency();
    let n = g.n();
    let a_max = a.iter().fold(0.0f64, |m, w| m.max(w.norm()));
    if a_max == 0.0 {
        return Err(GspError::ZeroAdjacency);
    }

    let (mut values, mut vectors) = if !g.is_directed() {
        let (vals, vecs) = linalg::symmetric_eigen(&g.real_adjacency());
        (
            vals.into_iter().map(|v| C::new(v, 0.0)).collect::<Vec<_>>(),
            vecs.map(|v| C::new(v, 0.0)),
        )
    } else {
        linalg::eigen(a)?
    };

    let lambda_max_abs = values.iter().fold(0.0f64, |m, l| m.max(l.norm()));
    if lambda_max_abs == 0.0 {
        return Err(GspError::ZeroAdjacency);
    }

    if g.is_directed() {
        if g.is_real() {
            pair_conjugates(&mut values, &mut vectors, cfg.real_tol * lambda_max_abs);
        }
        repair_clusters(a, g.is_real(), &values, &mut vectors, cfg, lambda_max_abs)?;
    }

    // canonical order: descending real part, then ascending imaginary part
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        values[j]
            .re
            .total_cmp(&values[i].re)
            .then(values[i].im.total_cmp(&values[j].im))
            .then(i.cmp(&j))
    });
    let values: Vec<C> = idx.iter().map(|&i| values[i]).collect();
    let mut v = DMatrix::from_fn(n, n, |r, c| vectors[(r, idx[c])]);

    for k in 0..n {
        normalize_column(&mut v, k);
    }

    let residual = (a * &v - &v * DMatrix::from_diagonal(&DVector::from_vec(values.clone())))
        .iter()
        .fold(0.0f64, |m, w| m.max(w.norm()));
    let condition = linalg::condition_number(&v);
    if residual > cfg.residual_tol * a_max || !condition.is_finite() {
        return Err(GspError::NearDefective { condition });
    }
    if condition > cfg.defect_threshold {
        return Err(GspError::NearDefective { condition });
    }
    let fourier = v
        .clone()
        .try_inverse()
        .ok_or(GspError::NearDefective { condition })?;

    g.cache_spectral_radius(lambda_max_abs);
    Ok(SpectralBasis {
        graph_id: g.id(),
        eigenvalues: values,
        vectors: v,
        fourier,
        basis_condition: condition,
        lambda_max_abs,
    })
}

/// Scales column `k` to unit ℓ₁ norm and rotates it so that its first
/// largest-modulus entry is real positive.
fn normalize_column(v: &mut DMatrix<C>, k: usize) {
    let l1: f64 = v.column(k).iter().map(|z| z.norm()).sum();
    if l1 == 0.0 {
        return;
    }
    let top = v.column(k).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let pivot = v
        .column(k)
        .iter()
        .find(|z| z.norm() >= top * (1.0 - 1e-9))
        .copied()
        .unwrap_or(C::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    for z in v.column_mut(k).iter_mut() {
        *z = *z * phase / l1;
    }
}

/// For a real matrix, forces the computed spectrum to be exactly
/// conjugate-symmetric and real eigenvalues to carry real eigenvectors.
fn pair_conjugates(values: &mut [C], vectors: &mut DMatrix<C>, tol: f64) {
    let n = values.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        done[i] = true;
        if values[i].im.abs() <= tol {
            values[i].im = 0.0;
            // a real eigenvector exists; pick the larger of the real and
            // imaginary parts after rotating the dominant entry to be real
            normalize_column(vectors, i);
            let re = vectors.column(i).map(|z| C::new(z.re, 0.0));
            let im = vectors.column(i).map(|z| C::new(z.im, 0.0));
            let pick = if re.norm() >= im.norm() { re } else { im };
            let norm = pick.norm();
            vectors.set_column(i, &(pick / C::new(norm, 0.0)));
            continue;
        }
        let target = values[i].conj();
        let partner = (0..n).filter(|&j| !done[j]).min_by(|&a, &b| {
            (values[a] - target)
                .norm()
                .total_cmp(&(values[b] - target).norm())
        });
        if let Some(j) = partner {
            done[j] = true;
            values[j] = target;
            let conj = vectors.column(i).map(|z| z.conj());
            vectors.set_column(j, &conj);
        }
    }
}

/// Replaces the columns of each repeated-eigenvalue cluster with an
/// orthonormal basis of the computed eigenspace. A cluster that does not
/// span as many independent directions as its multiplicity is defective.
fn repair_clusters(
    a: &DMatrix<C>,
    real: bool,
    values: &[C],
    vectors: &mut DMatrix<C>,
    cfg: &SpectralConfig,
    scale: f64,
) -> Result<()> {
    let n = values.len();
    let tol = cfg.cluster_tol * scale;
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut label, i);
        clusters[r].push(i);
    }
    for members in clusters.into_iter().filter(|c| c.len() > 1) {
        let lambda = members.iter().map(|&i| values[i]).sum::<C>() / members.len() as f64;
        let mut cols: Vec<DVector<C>> = Vec::new();
        for &i in &members {
            let c = vectors.column(i).into_owned();
            if real && lambda.im == 0.0 {
                cols.push(c.map(|z| C::new(z.re, 0.0)));
                cols.push(c.map(|z| C::new(z.im, 0.0)));
            } else {
                cols.push(c);
            }
        }
        let basis = linalg::orthonormal_basis(&cols, members.len(), 1.0 / cfg.defect_threshold);
        if basis.len() < members.len() {
            return Err(GspError::NearDefective {
                condition: linalg::condition_number(vectors),
            });
        }
        for (&i, b) in members.iter().zip(&basis) {
            let r = a * b - b * lambda;
            if r.norm() > cfg.residual_tol.sqrt() * scale {
                return Err(GspError::NearDefective {
                    condition: f64::INFINITY,
                });
            }
            vectors.set_column(i, b);
        }
    }
    Ok(())
}

/// `ŝ = F s`.
pub fn gft(b: &SpectralBasis, s: &GraphSignal) -> Result<DVector<C>> {
    b.check_len(s.len())?;
    if s.graph_id() != b.graph_id {
        return Err(GspError::GraphMismatch);
    }
    Ok(&b.fourier * s.values())
}

/// `s = V ŝ`.
pub fn igft(b: &SpectralBasis, shat: &DVector<C>) -> Result<GraphSignal> {
    b.check_len(shat.len())?;
    Ok(GraphSignal::bound_to(b.graph_id, &b.vectors * shat))
}

/// Per-vertex gradient `∇_n(s) = s_n − Σ_m A^norm[n][m] s_m`.
fn gradient(g: &Graph, s: &GraphSignal) -> Result<DVector<C>> {
    g.check_signal(s)?;
    let r = g.checked_radius()?;
    Ok(s.values() - (g.adjacency() * s.values()) / C::new(r, 0.0))
}

/// `‖s − A^norm s‖₁` with the complex modulus per entry.
pub fn total_variation(g: &Graph, s: &GraphSignal) -> Result<f64> {
    Ok(gradient(g, s)?.iter().map(|z| z.norm()).sum())
}

pub fn local_variation(g: &Graph, s: &GraphSignal, n: usize) -> Result<f64> {
    if n >= g.n() {
        return Err(GspError::IndexOutOfRange {
            index: n,
            len: g.n(),
        });
    }
    Ok(gradient(g, s)?[n].norm())
}

/// Discrete p-Dirichlet form `(1/p) Σ_n |∇_n(s)|^p`.
pub fn dirichlet_form(g: &Graph, s: &GraphSignal, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(GspError::InvalidArgument(format!(
            "p must be a finite value >= 1, got {p}"
        )));
    }
    let grad = gradient(g, s)?;
    Ok(grad.iter().map(|z| z.norm().powf(p)).sum::<f64>() / p)
}

/// Graph shift quadratic form `½‖s − A^norm s‖₂²`.
pub fn quadratic_form(g: &Graph, s: &GraphSignal) -> Result<f64> {
    Ok(0.5 * gradient(g, s)?.norm_squared())
}

pub fn seminorm(g: &Graph, s: &GraphSignal) -> Result<f64> {
    Ok(quadratic_form(g, s)?.sqrt())
}

/// A Jordan chain `v₀ … v_{R−1}` with `(A − λI)v₀ = 0` and
/// `(A − λI)v_r = v_{r−1}`.
#[derive(Debug, Clone)]
pub struct JordanChain {
    pub eigenvalue: C,
    pub vectors: Vec<DVector<C>>,
}

impl JordanChain {
    pub fn new(eigenvalue: C, vectors: Vec<DVector<C>>) -> Self {
        JordanChain {
            eigenvalue,
            vectors,
        }
    }

    /// Checks the chain relations against `a` to tolerance `1e-8`, relative
    /// to the matrix and vector scales.
    pub fn validate(&self, a: &DMatrix<C>) -> Result<()> {
        let n = a.nrows();
        let a_max = a.iter().fold(1.0f64, |m, w| m.max(w.norm()));
        for (r, v) in self.vectors.iter().enumerate() {
            if v.len() != n {
                return Err(GspError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            let mut res = a * v - v * self.eigenvalue;
            if r > 0 {
                res -= &self.vectors[r - 1];
            }
            let scale = a_max * max_modulus(v);
            let residual = max_modulus(&res);
            if residual > 1e-8 * scale.max(1.0) {
                return Err(GspError::InvalidChain { r, residual });
            }
        }
        Ok(())
    }
}

fn max_modulus(v: &DVector<C>) -> f64 {
    v.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Total variation of the generalized eigenvector `v_r` of a validated
/// chain: `‖v_r − (λ/|λ_max|)v_r − (1_r/|λ_max|)v_{r−1}‖₁`.
pub fn tv_of_chain_vector(g: &Graph, chain: &JordanChain, r: usize) -> Result<f64> {
    chain.validate(g.adjacency())?;
    let scale = g.checked_radius()?;
    chain_variation(chain, r, scale)
}

/// Same as [`tv_of_chain_vector`] with an explicit `|λ_max|`, for chains
/// whose matrix has no useful spectral radius (e.g. nilpotent blocks).
pub fn tv_of_chain_vector_scaled(
    a: &DMatrix<C>,
    chain: &JordanChain,
    r: usize,
    lambda_max_abs: f64,
) -> Result<f64> {
    if !(lambda_max_abs > 0.0) {
        return Err(GspError::InvalidArgument("|λ_max| must be positive".into()));
    }
    chain.validate(a)?;
    chain_variation(chain, r, lambda_max_abs)
}

fn chain_variation(chain: &JordanChain, r: usize, scale: f64) -> Result<f64> {
    let len = chain.vectors.len();
    if r >= len {
        return Err(GspError::IndexOutOfRange { index: r, len });
    }
    let v = &chain.vectors[r];
    let mut d = v - v * (chain.eigenvalue / scale);
    if r > 0 {
        d -= &chain.vectors[r - 1] / C::new(scale, 0.0);
    }
    Ok(d.iter().map(|z| z.norm()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationForm {
    /// `|1 − λ/|λ_max||`
    TotalVariation,
    /// `|1 − λ/|λ_max||²`
    Quadratic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyOrdering {
    /// Spectral indices from lowest to highest frequency.
    pub order: Vec<usize>,
    /// Variation of each spectral index (aligned with eigenvalue order, not `order`).
    pub variations: Vec<f64>,
}

impl FrequencyOrdering {
    /// Position of spectral index `k` in the low-to-high ordering.
    pub fn rank_of(&self, k: usize) -> Option<usize> {
        self.order.iter().position(|&i| i == k)
    }
}

/// Sorts frequencies from low to high variation. Values within [`TIE_TOL`]
/// (on the total-variation scale) are tied; ties go to larger `Re λ`, then
/// smaller `Im λ`, then smaller index.
pub fn order_frequencies(b: &SpectralBasis, form: VariationForm) -> FrequencyOrdering {
    let tv: Vec<f64> = (0..b.n()).map(|k| b.eigen_variation(k)).collect();
    let variations = match form {
        VariationForm::TotalVariation => tv.clone(),
        VariationForm::Quadratic => tv.iter().map(|t| t * t).collect(),
    };
    let order = order_by_variation(&variations, b.eigenvalues(), form, b.lambda_max_abs());
    FrequencyOrdering { order, variations }
}

/// Shared ordering rule; `values` are on the scale of `form`.
pub fn order_by_variation(
    values: &[f64],
    eigenvalues: &[C],
    form: VariationForm,
    lambda_max_abs: f64,
) -> Vec<usize> {
    let tv_scale = |v: f64| match form {
        VariationForm::TotalVariation => v,
        VariationForm::Quadratic => v.max(0.0).sqrt(),
    };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));

    let re_tol = TIE_TOL * lambda_max_abs;
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len()
            && tv_scale(values[idx[end]]) - tv_scale(values[idx[end - 1]]) <= TIE_TOL
        {
            end += 1;
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&i, &j| {
            eigenvalues[j]
                .re
                .total_cmp(&eigenvalues[i].re)
                .then(i.cmp(&j))
        });
        let mut s = 0;
        while s < group.len() {
            let mut e = s + 1;
            while e < group.len()
                && eigenvalues[group[e - 1]].re - eigenvalues[group[e]].re <= re_tol
            {
                e += 1;
            }
            group[s..e].sort_by(|&i, &j| {
                eigenvalues[i]
                    .im
                    .total_cmp(&eigenvalues[j].im)
                    .then(i.cmp(&j))
            });
            s = e;
        }
        out.extend(group);
        start = end;
    }
    out
}

/// `Σ_n ( Σ_m A[n][m] |s_n − s_m|² )^{1/2}`.
pub fn laplacian_total_variation(g: &Graph, s: &GraphSignal) -> Result<f64> {
    g.require_undirected_nonnegative()?;
    g.check_signal(s)?;
    let a = g.real_adjacency();
    let x = s.values();
    let n = g.n();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[(i, j)] * (x[i] - x[j]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .sum())
}

/// `sᵀ L s` for a real signal.
pub fn laplacian_quadratic_form(g: &Graph, s: &GraphSignal) -> Result<f64> {
    let l = laplacian(g)?;
    g.check_signal(s)?;
    if s.values().iter().any(|z| z.im != 0.0) {
        return Err(GspError::InvalidArgument(
            "Laplacian quadratic form needs a real signal".into(),
        ));
    }
    let x = DVector::from_iterator(s.len(), s.values().iter().map(|z| z.re));
    Ok(x.dot(&(&l * &x)))
}

/// Laplacian eigenvalues `β` in ascending order with orthonormal
/// eigenvectors as columns.
pub fn laplacian_spectrum(g: &Graph) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let l = laplacian(g)?;
    let (vals, vecs) = linalg::symmetric_eigen(&l);
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(i.cmp(&j)));
    let n = g.n();
    Ok((
        idx.iter().map(|&i| vals[i]).collect(),
        DMatrix::from_fn(n, n, |r, c| vecs[(r, idx[c])]),
    ))
}
