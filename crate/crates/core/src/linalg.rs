//! Dense complex linear algebra that nalgebra does not provide: a general
//! (non-Hermitian) eigensolver and rank-aware Householder least squares.
//!
//! The eigensolver follows the classical route: diagonal balancing,
//! Householder reduction to upper Hessenberg form, single-shift complex QR
//! iteration to Schur form `A = Z T Zᴴ`, then eigenvectors of `T` by
//! back-substitution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{GspError, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[inline]
pub(crate) fn abs1(z: C) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Real symmetric eigendecomposition; eigenvector columns are orthonormal.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
}

/// Scales rows and columns by powers of two so that their off-diagonal
/// norms are comparable. Returns `B = D⁻¹ A D` and the diagonal of `D`.
fn balance(a: &DMatrix<C>) -> (DMatrix<C>, Vec<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut b = a.clone();
    let mut scale = vec![1.0; n];
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(b[(j, i)]);
                    r += abs1(b[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                scale[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    (b, scale)
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// unitary transform into `q` (`A_in = Q H Qᴴ`).
fn hessenberg(h: &mut DMatrix<C>, q: &mut DMatrix<C>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        let mut v: Vec<C> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: C = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * h[(k + 1 + i, j)])
                .sum();
            let f = dot * (2.0 / vv);
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= f * vi;
            }
        }
        for m in [&mut *h, &mut *q] {
            for i in 0..n {
                let dot: C = v
                    .iter()
                    .enumerate()
                    .map(|(j, vj)| m[(i, k + 1 + j)] * vj)
                    .sum();
                let f = dot * (2.0 / vv);
                for (j, vj) in v.iter().enumerate() {
                    m[(i, k + 1 + j)] -= f * vj.conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Rotation `G = [[c, s], [-s̄, c]]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C, y: C) -> (f64, C) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let norm = ax.hypot(ay);
    let phase = x / ax;
    (ax / norm, phase * y.conj() / norm)
}

/// In-place complex Schur form of an upper Hessenberg matrix, accumulating
/// rotations into `z`.
fn hessenberg_qr(h: &mut DMatrix<C>, z: &mut DMatrix<C>) -> Result<()> {
    let n = h.nrows();
    if n <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let tiny = f64::MIN_POSITIVE / eps;
    let hnorm = h.iter().fold(0.0f64, |acc, z| acc.max(abs1(*z)));
    let max_iter = 60 * n.max(10);
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut its = 0usize;

    while hi > 0 {
        // locate the active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let mut s = abs1(h[(lo, lo)]) + abs1(h[(lo - 1, lo - 1)]);
            if s == 0.0 {
                s = hnorm;
            }
            if abs1(h[(lo, lo - 1)]) <= (eps * s).max(tiny) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            its = 0;
            continue;
        }

        its += 1;
        total += 1;
        if total > max_iter {
            return Err(GspError::NoConvergence { iterations: total });
        }

        let shift = if its % 10 == 0 {
            // exceptional shift breaks the cycling of unitary-like blocks
            h[(hi, hi)]
                + 0.75 * h[(hi, hi - 1)].re.abs()
                + C::new(0.0, 0.25 * abs1(h[(hi, hi - 1)]))
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let r1 = half + disc;
            let r2 = half - disc;
            d + if r1.norm() < r2.norm() { r1 } else { r2 }
        };

        for k in lo..hi {
            let (x, y) = if k == lo {
                (h[(lo, lo)] - shift, h[(lo + 1, lo)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let first_col = if k == lo { lo } else { k - 1 };
            for j in first_col..n {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            let last_row = (k + 2).min(hi);
            for i in 0..=last_row {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
            for i in 0..n {
                let a = z[(i, k)];
                let b = z[(i, k + 1)];
                z[(i, k)] = a * c + b * s.conj();
                z[(i, k + 1)] = -a * s + b * c;
            }
        }
    }
    Ok(())
}

/// Complex Schur decomposition `A = Z T Zᴴ` (`T` upper triangular) of a
/// balanced copy of `a`. Returns `(Z, T, balancing scales)`.
fn schur(a: &DMatrix<C>) -> Result<(DMatrix<C>, DMatrix<C>, Vec<f64>)> {
    let n = a.nrows();
    let (mut t, scale) = balance(a);
    let mut z = DMatrix::identity(n, n);
    hessenberg(&mut t, &mut z);
    hessenberg_qr(&mut t, &mut z)?;
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok((z, t, scale))
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &DMatrix<C>) -> Result<Vec<C>> {
    let (_, t, _) = schur(a)?;
    Ok((0..a.nrows()).map(|i| t[(i, i)]).collect())
}

pub fn spectral_radius(a: &DMatrix<C>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .fold(0.0f64, |acc, l| acc.max(l.norm())))
}

/// Eigenvalues and right eigenvectors (unit ℓ₂ columns) of a general
/// complex matrix. For repeated eigenvalues the returned columns span the
/// computed invariant subspace but are not orthogonalized.
pub fn eigen(a: &DMatrix<C>) -> Result<(Vec<C>, DMatrix<C>)> {
    let n = a.nrows();
    let (z, t, scale) = schur(a)?;
    let tnorm = t.iter().fold(0.0f64, |acc, w| acc.max(abs1(*w)));
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE * 1e10);
    let mut vectors = DMatrix::zeros(n, n);
    let mut y = vec![ZERO; n];
    for k in 0..n {
        let lambda = t[(k, k)];
        y.iter_mut().for_each(|v| *v = ZERO);
        y[k] = ONE;
        for i in (0..k).rev() {
            let s: C = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if abs1(d) < smin {
                d = C::new(smin, 0.0);
            }
            y[i] = -s / d;
            let big = abs1(y[i]);
            if big > 1e100 {
                for v in y.iter_mut().take(k + 1) {
                    *v /= big;
                }
            }
        }
        for row in 0..n {
            let mut acc = ZERO;
            for (j, yj) in y.iter().enumerate().take(k + 1) {
                acc += z[(row, j)] * yj;
            }
            vectors[(row, k)] = acc * scale[row];
        }
        let norm = vectors.column(k).norm();
        if norm > 0.0 {
            vectors.column_mut(k).unscale_mut(norm);
        }
    }
    Ok(((0..n).map(|i| t[(i, i)]).collect(), vectors))
}

/// 2-norm condition number `σ_max / σ_min`.
pub fn condition_number(m: &DMatrix<C>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Householder QR of an `m × n` matrix, optionally with column pivoting.
/// `R` lives in the upper triangle of `qr`.
pub struct HouseholderQr {
    qr: DMatrix<C>,
    reflectors: Vec<(usize, DVector<C>, f64)>,
    perm: Vec<usize>,
}

impl HouseholderQr {
    pub fn new(a: &DMatrix<C>, pivot: bool) -> Self {
        let (m, n) = a.shape();
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::new();
        for k in 0..m.min(n) {
            if pivot {
                let best = (k..n)
                    .map(|j| (j, (k..m).map(|i| qr[(i, j)].norm_sqr()).sum::<f64>()))
                    .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                    .0;
                if best != k {
                    qr.swap_columns(k, best);
                    perm.swap(k, best);
                }
            }
            let norm = (k..m).map(|i| qr[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let x0 = qr[(k, k)];
            let phase = if x0.norm() == 0.0 {
                ONE
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * norm;
            let mut v = DVector::from_iterator(m - k, (k..m).map(|i| qr[(i, k)]));
            v[0] -= alpha;
            let vv = v.norm_squared();
            if vv == 0.0 {
                continue;
            }
            for j in k..n {
                let dot: C = (0..m - k).map(|i| v[i].conj() * qr[(k + i, j)]).sum();
                let f = dot * (2.0 / vv);
                for i in 0..m - k {
                    qr[(k + i, j)] -= f * v[i];
                }
            }
            qr[(k, k)] = alpha;
            for i in k + 1..m {
                qr[(i, k)] = ZERO;
            }
            reflectors.push((k, v, vv));
        }
        HouseholderQr {
            qr,
            reflectors,
            perm,
        }
    }

    /// `b ← Qᴴ b`.
    pub fn apply_qh(&self, b: &mut DVector<C>) {
        for (k, v, vv) in &self.reflectors {
            reflect(b, *k, v, *vv);
        }
    }

    /// `b ← Q b`.
    pub fn apply_q(&self, b: &mut DVector<C>) {
        for (k, v, vv) in self.reflectors.iter().rev() {
            reflect(b, *k, v, *vv);
        }
    }

    pub fn r_diag(&self) -> Vec<C> {
        let p = self.qr.nrows().min(self.qr.ncols());
        (0..p).map(|i| self.qr[(i, i)]).collect()
    }

    /// Numerical rank from the pivoted `R` diagonal.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let d = self.r_diag();
        let top = d.first().map(|z| z.norm()).unwrap_or(0.0);
        d.iter().take_while(|z| z.norm() > rel_tol * top).count()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }
}

fn reflect(b: &mut DVector<C>, k: usize, v: &DVector<C>, vv: f64) {
    let dot: C = (0..v.len()).map(|i| v[i].conj() * b[k + i]).sum();
    let f = dot * (2.0 / vv);
    for i in 0..v.len() {
        b[k + i] -= f * v[i];
    }
}

/// Least-squares solution of `A x ≈ b` (`m ≥ n`) by pivoted Householder QR.
/// Columns beyond the numerical rank get zero coefficients.
pub fn lstsq(a: &DMatrix<C>, b: &DVector<C>, rank_tol: f64) -> (DVector<C>, usize) {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let qr = HouseholderQr::new(a, true);
    let rank = qr.rank(rank_tol);
    let mut rhs = b.clone();
    qr.apply_qh(&mut rhs);
    let mut z = DVector::zeros(n);
    for i in (0..rank).rev() {
        let s: C = (i + 1..rank).map(|j| qr.qr[(i, j)] * z[j]).sum();
        z[i] = (rhs[i] - s) / qr.qr[(i, i)];
    }
    let mut x = DVector::zeros(n);
    for (pos, &col) in qr.perm.iter().enumerate() {
        x[col] = z[pos];
    }
    (x, rank)
}

/// Minimum-ℓ₂-norm solution of an underdetermined full-row-rank system
/// (`m < n`), via QR of `Aᴴ`: `x = Q R⁻ᴴ b`.
pub fn min_norm_solve(a: &DMatrix<C>, b: &DVector<C>, rank_tol: f64) -> Result<DVector<C>> {
    let (m, n) = a.shape();
    debug_assert!(m <= n);
    let ah = a.adjoint();
    let qr = HouseholderQr::new(&ah, false);
    let d = qr.r_diag();
    let top = d.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if d.iter().any(|z| z.norm() <= rank_tol * top) {
        return Err(GspError::InvalidArgument("system is rank deficient".into()));
    }
    // Rᴴ w = b, forward substitution
    let mut w = DVector::zeros(n);
    for i in 0..m {
        let s: C = (0..i).map(|j| qr.qr[(j, i)].conj() * w[j]).sum();
        w[i] = (b[i] - s) / qr.qr[(i, i)].conj();
    }
    qr.apply_q(&mut w);
    Ok(w)
}

/// Orthonormalizes `cols` by modified Gram–Schmidt, keeping at most
/// `keep` vectors whose residual norm exceeds `tol` times the original.
pub(crate) fn orthonormal_basis(cols: &[DVector<C>], keep: usize, tol: f64) -> Vec<DVector<C>> {
    let mut out: Vec<DVector<C>> = Vec::new();
    for c in cols {
        if out.len() == keep {
            break;
        }
        let orig = c.norm();
        if orig == 0.0 {
            continue;
        }
        let mut v = c.clone();
        for _ in 0..2 {
            for u in &out {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > tol * orig {
            out.push(v / C::new(norm, 0.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn residual(a: &DMatrix<C>, vals: &[C], vecs: &DMatrix<C>) -> f64 {
        let mut worst = 0.0f64;
        for (k, l) in vals.iter().enumerate() {
            let v = vecs.column(k);
            let r = a * v - v * *l;
            worst = worst.max(r.norm());
        }
        worst
    }

    fn lcg_matrix(n: usize, seed: u64) -> DMatrix<C> {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        DMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn cyclic_permutation_converges() {
        for n in [2, 3, 4, 8, 16, 31] {
            let mut a = DMatrix::from_element(n, n, ZERO);
            for i in 0..n {
                a[((i + 1) % n, i)] = ONE;
            }
            let (vals, vecs) = eigen(&a).unwrap();
            assert!(residual(&a, &vals, &vecs) < 1e-12, "n={n}");
            for l in vals {
                assert!((l.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_complex_matrices() {
        for seed in 0..20 {
            let a = lcg_matrix(12, seed);
            let (vals, vecs) = eigen(&a).unwrap();
            assert!(residual(&a, &vals, &vecs) < 1e-12, "seed={seed}");
            let trace: C = (0..12).map(|i| a[(i, i)]).sum();
            let sum: C = vals.iter().sum();
            assert!((trace - sum).norm() < 1e-11);
        }
    }

    #[test]
    fn badly_scaled_matrix_is_balanced() {
        let mut a = lcg_matrix(6, 99);
        for i in 0..6 {
            for j in 0..6 {
                a[(i, j)] *= 10f64.powi(i as i32 * 2 - j as i32 * 2);
            }
        }
        let (vals, vecs) = eigen(&a).unwrap();
        let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(residual(&a, &vals, &vecs) < 1e-10 * scale);
    }

    #[test]
    fn triangular_and_trivial_inputs() {
        let a = DMatrix::from_row_slice(1, 1, &[c(3.0, -1.0)]);
        let (vals, _) = eigen(&a).unwrap();
        assert_eq!(vals, vec![c(3.0, -1.0)]);

        let t = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(5.0, 0.0), ZERO, c(2.0, 0.0)]);
        let (vals, vecs) = eigen(&t).unwrap();
        assert!(residual(&t, &vals, &vecs) < 1e-14);
    }

    #[test]
    fn lstsq_matches_normal_equations_on_well_conditioned_system() {
        let a = DMatrix::from_row_slice(
            4,
            2,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(2.0, 0.0),
                c(1.0, 0.0),
                c(3.0, 0.0),
            ],
        );
        let b = DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let (x, rank) = lstsq(&a, &b, 1e-12);
        assert_eq!(rank, 2);
        // normal equations by hand: [[4,6],[6,14]] x = [9,18] → x = (0.9, 0.9)
        assert!((x[0] - c(0.9, 0.0)).norm() < 1e-12);
        assert!((x[1] - c(0.9, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn min_norm_underdetermined() {
        // x0 + x1 = 2 → minimum norm solution (1, 1)
        let a = DMatrix::from_row_slice(1, 2, &[ONE, ONE]);
        let b = DVector::from_vec(vec![c(2.0, 0.0)]);
        let x = min_norm_solve(&a, &b, 1e-12).unwrap();
        assert!((x[0] - ONE).norm() < 1e-12 && (x[1] - ONE).norm() < 1e-12);
    }

    #[test]
    fn condition_of_identity_is_one() {
        let i = DMatrix::<C>::identity(5, 5);
        assert!((condition_number(&i) - 1.0).abs() < 1e-12);
    }
}
