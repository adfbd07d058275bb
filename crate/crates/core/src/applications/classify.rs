//! Semi-supervised two-class labelling by quadratic regularization.
//!
//! Both objectives are written as `½ sᵀMs + α‖C(s_known − s)‖²`. The shift
//! form uses `M = Re((I − A^norm)ᴴ(I − A^norm))`, the Laplacian form
//! `M = 2L`, so the minimizer always satisfies `(M + 2αC)s = 2αC s_known`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GspError, Result};
use crate::graph::{laplacian, Graph, LabelSignal};
use crate::linalg::symmetric_eigen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegularizationForm {
    Shift,
    Laplacian,
}

impl std::str::FromStr for RegularizationForm {
    type Err = GspError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" => Ok(RegularizationForm::Shift),
            "laplacian" => Ok(RegularizationForm::Laplacian),
            other => Err(GspError::InvalidArgument(format!(
                "unknown form {other:?} (expected shift or laplacian)"
            ))),
        }
    }
}

impl std::fmt::Display for RegularizationForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegularizationForm::Shift => "shift",
            RegularizationForm::Laplacian => "laplacian",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub alpha: f64,
    pub form: RegularizationForm,
    pub solver_tolerance: f64,
    /// Largest system solved by Cholesky; bigger ones go to conjugate gradient.
    pub direct_solve_limit: usize,
}

impl ClassifierConfig {
    pub fn new(alpha: f64, form: RegularizationForm) -> Self {
        ClassifierConfig {
            alpha,
            form,
            solver_tolerance: 1e-8,
            direct_solve_limit: 2000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(GspError::InvalidArgument(format!(
                "alpha must be finite and positive, got {}",
                self.alpha
            )));
        }
        if !(self.solver_tolerance.is_finite() && self.solver_tolerance > 0.0) {
            return Err(GspError::InvalidArgument(
                "solver tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub predicted: Vec<f64>,
    pub classes: Vec<i8>,
}

/// The variation operator of one objective, with the block structure of the
/// graph cached so repeated solves (e.g. an α sweep) reuse it.
#[derive(Debug, Clone)]
pub struct RegularizationProblem {
    m: DMatrix<f64>,
    components: Vec<Vec<usize>>,
    form: RegularizationForm,
}

impl RegularizationProblem {
    pub fn new(g: &Graph, form: RegularizationForm) -> Result<Self> {
        let m = match form {
            RegularizationForm::Shift => {
                let n = g.n();
                let b = DMatrix::<Complex64>::identity(n, n) - g.normalized_adjacency()?;
                (b.adjoint() * &b).map(|z| z.re)
            }
            RegularizationForm::Laplacian => laplacian(g)? * 2.0,
        };
        Ok(RegularizationProblem {
            m,
            components: g.weak_components(),
            form,
        })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn form(&self) -> RegularizationForm {
        self.form
    }

    /// `M`, the Hessian of the variation term.
    pub fn operator(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `½ sᵀMs + α Σ_known (s_known − s)²`
    pub fn objective(&self, labels: &LabelSignal, alpha: f64, s: &[f64]) -> f64 {
        let x = DVector::from_column_slice(s);
        let variation = 0.5 * x.dot(&(&self.m * &x));
        let fidelity: f64 = labels
            .labels()
            .iter()
            .zip(s)
            .filter(|(l, _)| **l != 0.0)
            .map(|(l, v)| (l - v) * (l - v))
            .sum();
        variation + alpha * fidelity
    }

    pub fn gradient(&self, labels: &LabelSignal, alpha: f64, s: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(s);
        let mut grad = &self.m * &x;
        for (n, &l) in labels.labels().iter().enumerate() {
            if l != 0.0 {
                grad[n] -= 2.0 * alpha * (l - s[n]);
            }
        }
        grad.iter().cloned().collect()
    }

    /// `‖(M + 2αC)s − 2αC s_known‖₂` and `‖2αC s_known‖₂`.
    pub fn stationarity_residual(&self, labels: &LabelSignal, alpha: f64, s: &[f64]) -> (f64, f64) {
        let x = DVector::from_column_slice(s);
        let mut r = &self.m * &x;
        let mut rhs_norm = 0.0;
        for (n, &l) in labels.labels().iter().enumerate() {
            if l != 0.0 {
                r[n] += 2.0 * alpha * (s[n] - l);
                rhs_norm += (2.0 * alpha * l).powi(2);
            }
        }
        (r.norm(), rhs_norm.sqrt())
    }

    /// Minimizer of the objective. Unlabelled components are decoupled from
    /// the rest; their minimizer is 0 when their block of `M` is invertible,
    /// and not unique otherwise. `strict` turns the latter into an error,
    /// otherwise those nodes are left at 0.
    pub fn solve(
        &self,
        labels: &LabelSignal,
        cfg: &ClassifierConfig,
        strict: bool,
    ) -> Result<Vec<f64>> {
        cfg.validate()?;
        if labels.len() != self.n() {
            return Err(GspError::DimensionMismatch {
                expected: self.n(),
                got: labels.len(),
            });
        }
        if labels.known_count() == 0 {
            return Err(GspError::NoLabels);
        }
        let scale = self.m.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let mut active = Vec::new();
        for comp in &self.components {
            if comp.iter().any(|&n| labels.is_known(n)) {
                active.extend_from_slice(comp);
            } else if strict {
                let block = self.m.select_rows(comp).select_columns(comp);
                let (vals, _) = symmetric_eigen(&block);
                if vals.iter().cloned().fold(f64::INFINITY, f64::min) <= 1e-10 * scale {
                    return Err(GspError::SingularSystem {
                        component: comp.clone(),
                    });
                }
            }
        }
        active.sort_unstable();

        let k = active.len();
        let mut sys = self.m.select_rows(&active).select_columns(&active);
        let mut rhs = DVector::zeros(k);
        for (i, &n) in active.iter().enumerate() {
            let l = labels.labels()[n];
            if l != 0.0 {
                sys[(i, i)] += 2.0 * cfg.alpha;
                rhs[i] = 2.0 * cfg.alpha * l;
            }
        }
        let x = if k <= cfg.direct_solve_limit {
            direct_solve(sys, &rhs, &active)?
        } else {
            conjugate_gradient(&sys, &rhs, cfg.solver_tolerance, 20 * k)?
        };
        let mut out = vec![0.0; self.n()];
        for (i, &n) in active.iter().enumerate() {
            out[n] = x[i];
        }
        Ok(out)
    }
}

fn direct_solve(sys: DMatrix<f64>, rhs: &DVector<f64>, nodes: &[usize]) -> Result<DVector<f64>> {
    let singular = || GspError::SingularSystem {
        component: nodes.to_vec(),
    };
    let diag_max = sys.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let chol = sys.cholesky().ok_or_else(singular)?;
    // a pivot this small means the PSD system is numerically singular
    let pivot_min = chol
        .l_dirty()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |a, v| a.min(*v));
    if pivot_min * pivot_min <= 1e-14 * diag_max {
        return Err(singular());
    }
    Ok(chol.solve(rhs))
}

/// Jacobi-preconditioned conjugate gradient on a symmetric positive
/// definite system; converged when `‖r‖ ≤ tol·‖b‖`.
pub fn conjugate_gradient(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    let n = b.len();
    let b_norm = b.norm();
    let mut x = DVector::zeros(n);
    if b_norm == 0.0 {
        return Ok(x);
    }
    let inv_diag: DVector<f64> = a.diagonal().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 });
    let mut r = b.clone();
    let mut z = r.component_mul(&inv_diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        if r.norm() <= tol * b_norm {
            return Ok(x);
        }
        let ap = a * &p;
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            break;
        }
        let step = rz / pap;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        z = r.component_mul(&inv_diag);
        let rz_next = r.dot(&z);
        p = &z + &p * (rz_next / rz);
        rz = rz_next;
    }
    if r.norm() <= tol * b_norm {
        Ok(x)
    } else {
        Err(GspError::SolverStalled {
            tolerance: tol,
            iterations: max_iter,
        })
    }
}

fn sign_classes(predicted: &[f64]) -> Vec<i8> {
    predicted
        .iter()
        .map(|&p| if p > 0.0 { 1 } else { -1 })
        .collect()
}

pub fn classify(g: &Graph, labels: &LabelSignal, cfg: &ClassifierConfig) -> Result<Classification> {
    if cfg.form == RegularizationForm::Laplacian {
        g.require_undirected_nonnegative()?;
    }
    let problem = RegularizationProblem::new(g, cfg.form)?;
    let predicted = problem.solve(labels, cfg, true)?;
    let classes = sign_classes(&predicted);
    Ok(Classification { predicted, classes })
}

/// Smallest α (to a relative bisection tolerance) whose minimizer keeps the
/// known labels within `‖C(s_known − s)‖₂² ≤ eps`.
pub fn alpha_for_fidelity(
    g: &Graph,
    labels: &LabelSignal,
    form: RegularizationForm,
    eps: f64,
) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(GspError::InvalidArgument("eps must be positive".into()));
    }
    if form == RegularizationForm::Laplacian {
        g.require_undirected_nonnegative()?;
    }
    let problem = RegularizationProblem::new(g, form)?;
    let misfit = |alpha: f64| -> Result<f64> {
        let s = problem.solve(labels, &ClassifierConfig::new(alpha, form), true)?;
        Ok(labels
            .labels()
            .iter()
            .zip(&s)
            .filter(|(l, _)| **l != 0.0)
            .map(|(l, v)| (l - v) * (l - v))
            .sum())
    };
    let (mut lo, mut hi) = (-8.0f64, 12.0f64);
    if misfit(10f64.powf(hi))? > eps {
        return Err(GspError::InvalidArgument(format!(
            "fidelity {eps:e} not reachable for alpha up to 1e12"
        )));
    }
    if misfit(10f64.powf(lo))? <= eps {
        return Ok(10f64.powf(lo));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if misfit(10f64.powf(mid))? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(10f64.powf(hi))
}

/// `{1/100, 1/99, …, 1/2, 1, 2, …, 100}`: 199 values, ascending.
pub fn standard_alpha_grid() -> Vec<f64> {
    let mut out: Vec<f64> = (2..=100).rev().map(|k| 1.0 / k as f64).collect();
    out.extend((1..=100).map(|k| k as f64));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub ratio: f64,
    pub mean_accuracy: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Index into `rows` of the highest mean accuracy (first on ties).
    pub best: usize,
}

impl SweepTable {
    pub fn best_row(&self) -> &SweepRow {
        &self.rows[self.best]
    }
}

/// Per-run label draws: `max(1, round(ratio·N))` nodes revealed, drawn
/// from a generator seeded by `(seed, run)`. The same draws are shared by
/// every α.
pub fn draw_known_labels(
    truth: &LabelSignal,
    ratio: f64,
    runs: usize,
    seed: u64,
) -> Vec<LabelSignal> {
    let n = truth.len();
    let count = ((ratio * n as f64).round() as usize).clamp(1, n);
    (0..runs)
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(run as u64);
            let picked = sample(&mut rng, n, count).into_vec();
            truth.restricted_to(&picked)
        })
        .collect()
}

/// Mean and population standard deviation of accuracy on
/// the unlabelled nodes for each α, evaluated in parallel and merged in α
/// order.
pub fn sweep_alpha(
    g: &Graph,
    truth: &LabelSignal,
    form: RegularizationForm,
    alphas: &[f64],
    ratio: f64,
    runs: usize,
    seed: u64,
) -> Result<SweepTable> {
    if alphas.is_empty() {
        return Err(GspError::InvalidArgument("empty alpha grid".into()));
    }
    if runs == 0 {
        return Err(GspError::InvalidArgument("runs must be at least 1".into()));
    }
    if !truth.is_fully_labeled() {
        return Err(GspError::InvalidArgument(
            "truth labels must be complete".into(),
        ));
    }
    if truth.len() != g.n() {
        return Err(GspError::DimensionMismatch {
            expected: g.n(),
            got: truth.len(),
        });
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(GspError::InvalidArgument(format!(
            "ratio must be in (0, 1], got {ratio}"
        )));
    }
    if form == RegularizationForm::Laplacian {
        g.require_undirected_nonnegative()?;
    }
    let problem = RegularizationProblem::new(g, form)?;
    let draws = draw_known_labels(truth, ratio, runs, seed);

    let rows: Vec<Result<SweepRow>> = alphas
        .par_iter()
        .map(|&alpha| {
            let cfg = ClassifierConfig::new(alpha, form);
            let mut accs = Vec::with_capacity(runs);
            for known in &draws {
                let predicted = problem.solve(known, &cfg, false)?;
                let classes = sign_classes(&predicted);
                let (mut hit, mut total) = (0usize, 0usize);
                for n in 0..truth.len() {
                    if !known.is_known(n) {
                        total += 1;
                        if f64::from(classes[n]) == truth.labels()[n] {
                            hit += 1;
                        }
                    }
                }
                accs.push(if total == 0 {
                    1.0
                } else {
                    hit as f64 / total as f64
                });
            }
            let mean = accs.iter().sum::<f64>() / runs as f64;
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / runs as f64;
            Ok(SweepRow {
                alpha,
                ratio,
                mean_accuracy: mean,
                std: var.sqrt(),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.mean_accuracy > rows[best].mean_accuracy {
            best = i;
        }
    }
    Ok(SweepTable { rows, best })
}
