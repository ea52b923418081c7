//! Cyclic coordinate descent for
//! `(1/2n)‖y − Xβ‖² + λ₁‖β‖₁ + (λ₂/2)‖β‖²`, optionally with `β ≥ 0`.

use super::{CenteredData, LambdaGrid};
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, ColMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convergence<F> {
    /// Stop when a full sweep changes no coefficient by more than this.
    MaxChange(F),
    /// Stop when `max_j (x_jᵀx_j/n)·Δβ_j²` over a full sweep is at most
    /// this fraction of `‖y‖²/n`.
    RelativeObjective(F),
}

#[derive(Debug, Clone)]
pub struct SolverOptions<F> {
    pub convergence: Convergence<F>,
    pub max_sweeps: usize,
    /// Record the objective after every sweep.
    pub record_objective: bool,
}

impl<F: Scalar> Default for SolverOptions<F> {
    fn default() -> Self {
        // 1e-7 is below f32 resolution for O(1) coefficients
        let tol = F::of(1e-7).max(F::epsilon() * F::of(16.0));
        Self {
            convergence: Convergence::MaxChange(tol),
            max_sweeps: 100_000,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats<F> {
    pub sweeps: usize,
    pub objective_trace: Vec<F>,
}

/// Penalized least-squares objective for centered data.
pub fn objective<F: Scalar>(resid: &[F], beta: &[F], l1: F, l2: F) -> F {
    let n = F::of_usize(resid.len());
    let rss = dot(resid, resid);
    let l1n: F = beta.iter().map(|b| b.abs()).sum();
    let l2n: F = beta.iter().map(|&b| b * b).sum();
    rss / (F::of(2.0) * n) + l1 * l1n + l2 * l2n / F::of(2.0)
}

#[inline]
fn soft_threshold<F: Scalar>(z: F, t: F) -> F {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        F::zero()
    }
}

/// Solves in place from the warm start in `beta`; `resid` must equal
/// `y − Xβ` on entry and is kept consistent.
#[allow(clippy::too_many_arguments)]
pub fn solve_penalized<F: Scalar>(
    x: &ColMatrix<F>,
    col_sq: &[F],
    beta: &mut [F],
    resid: &mut [F],
    l1: F,
    l2: F,
    nonneg: bool,
    opts: &SolverOptions<F>,
) -> Result<SolveStats<F>> {
    let n = F::of_usize(x.nrows());
    let k = x.ncols();
    let scale = match opts.convergence {
        Convergence::MaxChange(_) => F::one(),
        Convergence::RelativeObjective(_) => {
            // ‖y‖²/n with y = r + Xβ
            let fitted = x.mul(beta);
            let yy: F = resid
                .iter()
                .zip(&fitted)
                .map(|(&r, &f)| (r + f) * (r + f))
                .sum();
            (yy / n).max(F::min_positive_value())
        }
    };
    let converged = |score: F| match opts.convergence {
        Convergence::MaxChange(tol) => score <= tol,
        Convergence::RelativeObjective(tol) => score <= tol * scale,
    };
    let score_of = |j: usize, change: F| match opts.convergence {
        Convergence::MaxChange(_) => change.abs(),
        Convergence::RelativeObjective(_) => col_sq[j] * change * change,
    };

    let mut stats = SolveStats::default();
    let update = |j: usize, beta: &mut [F], resid: &mut [F]| -> F {
        let xj = x.col(j);
        let old = beta[j];
        let z = dot(xj, resid) / n + col_sq[j] * old;
        let mut new = soft_threshold(z, l1) / (col_sq[j] + l2);
        if nonneg && new < F::zero() {
            new = F::zero();
        }
        if new != old {
            axpy(old - new, xj, resid);
            beta[j] = new;
        }
        new - old
    };
    let mut active: Vec<usize> = Vec::with_capacity(k);
    loop {
        let mut worst = F::zero();
        for j in 0..k {
            let d = update(j, beta, resid);
            worst = worst.max(score_of(j, d));
        }
        stats.sweeps += 1;
        if opts.record_objective {
            stats.objective_trace.push(objective(resid, beta, l1, l2));
        }
        if converged(worst) {
            return Ok(stats);
        }
        active.clear();
        active.extend((0..k).filter(|&j| beta[j] != F::zero()));
        loop {
            if stats.sweeps >= opts.max_sweeps {
                return Err(Error::NoConvergence {
                    lambda: (l1 + l2).as_f64(),
                    sweeps: stats.sweeps,
                });
            }
            let mut worst = F::zero();
            for &j in &active {
                let d = update(j, beta, resid);
                worst = worst.max(score_of(j, d));
            }
            stats.sweeps += 1;
            if opts.record_objective {
                stats.objective_trace.push(objective(resid, beta, l1, l2));
            }
            if converged(worst) {
                break;
            }
        }
        if stats.sweeps >= opts.max_sweeps {
            return Err(Error::NoConvergence {
                lambda: (l1 + l2).as_f64(),
                sweeps: stats.sweeps,
            });
        }
    }
}

/// Lasso (or non-negative lasso) coefficients at every grid λ.
#[derive(Debug, Clone)]
pub struct LassoPath<F> {
    pub grid: LambdaGrid<F>,
    /// `|grid| × k` on the raw predictor scale.
    pub coefficients: Vec<Vec<F>>,
    /// Same values on the centered/scaled predictor scale.
    pub standardized: Vec<Vec<F>>,
    pub intercepts: Vec<F>,
    pub nonneg: bool,
}

impl<F: Scalar> LassoPath<F> {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn lambdas(&self) -> Vec<F> {
        self.grid.lambdas()
    }

    /// Coefficients at the smallest grid λ.
    pub fn at_smallest_lambda(&self) -> &[F] {
        self.coefficients.last().expect("non-empty path")
    }
}

#[derive(Debug, Clone, Default)]
pub struct PathDiagnostics<F> {
    pub sweeps: Vec<usize>,
    pub objective_traces: Vec<Vec<F>>,
}

pub fn lasso_path<F: Scalar>(
    data: &CenteredData<F>,
    grid: &LambdaGrid<F>,
    nonneg: bool,
) -> Result<LassoPath<F>> {
    lasso_path_with(data, grid, nonneg, &SolverOptions::default()).map(|(p, _)| p)
}

/// Warm-started path from the largest to the smallest λ.
pub fn lasso_path_with<F: Scalar>(
    data: &CenteredData<F>,
    grid: &LambdaGrid<F>,
    nonneg: bool,
    opts: &SolverOptions<F>,
) -> Result<(LassoPath<F>, PathDiagnostics<F>)> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    let n = F::of_usize(data.n());
    let col_sq: Vec<F> = (0..data.k())
        .map(|j| dot(data.x.col(j), data.x.col(j)) / n)
        .collect();
    let mut beta = vec![F::zero(); data.k()];
    let mut resid = data.y.clone();
    let mut standardized = Vec::with_capacity(grid.len());
    let mut coefficients = Vec::with_capacity(grid.len());
    let mut intercepts = Vec::with_capacity(grid.len());
    let mut diag = PathDiagnostics::default();
    for lambda in grid.lambdas() {
        let stats = solve_penalized(
            &data.x,
            &col_sq,
            &mut beta,
            &mut resid,
            lambda,
            F::zero(),
            nonneg,
            opts,
        )
        .map_err(|e| match e {
            Error::NoConvergence { sweeps, .. } => Error::NoConvergence {
                lambda: lambda.as_f64(),
                sweeps,
            },
            other => other,
        })?;
        diag.sweeps.push(stats.sweeps);
        if opts.record_objective {
            diag.objective_traces.push(stats.objective_trace);
        }
        let original = data.to_original(&beta);
        intercepts.push(data.intercept(&original));
        coefficients.push(original);
        standardized.push(beta.clone());
    }
    Ok((
        LassoPath {
            grid: grid.clone(),
            coefficients,
            standardized,
            intercepts,
            nonneg,
        },
        diag,
    ))
}
