use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cd::{Convergence, SolverOptions};
use super::center::{center_and_scale, center_vec, CenteredData};
use crate::error::{Error, Result};
use crate::matrix::{dot, ColMatrix};
use crate::scalar::Scalar;

/// Mixing values swept by cross-validation.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone)]
pub struct ElasticNetOptions<F> {
    pub n_lambdas: usize,
    /// Smallest λ as a fraction of `λ_max(α)`.
    pub lambda_min_ratio: F,
    pub solver: SolverOptions<F>,
}

impl<F: Scalar> Default for ElasticNetOptions<F> {
    fn default() -> Self {
        Self {
            n_lambdas: 60,
            lambda_min_ratio: F::of(1e-3),
            solver: SolverOptions {
                convergence: Convergence::RelativeObjective(F::of(1e-7)),
                ..SolverOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvPoint<F> {
    pub alpha: F,
    pub lambda: F,
    /// Mean out-of-fold squared error.
    pub error: F,
}

#[derive(Debug, Clone)]
pub struct ElasticNetFit<F> {
    pub alpha: F,
    pub lambda: F,
    /// Index of the winning λ within its α grid.
    pub lambda_index: usize,
    pub standardized: Vec<F>,
    pub coefficients: Vec<F>,
    pub intercept: F,
    pub cv_error: F,
    pub cv_curve: Vec<CvPoint<F>>,
    pub data: CenteredData<F>,
}

/// `n_lambdas` log-spaced values from `max|Xᵀy|/(n α)` down to
/// `ratio · λ_max`.
pub fn elastic_net_lambda_grid<F: Scalar>(
    max_corr: F,
    n: usize,
    alpha: F,
    n_lambdas: usize,
    ratio: F,
) -> Vec<F> {
    let lmax = (max_corr / (F::of_usize(n) * alpha)).max(F::min_positive_value());
    if n_lambdas <= 1 {
        return vec![lmax];
    }
    let hi = lmax.ln();
    let lo = (lmax * ratio).ln();
    (0..n_lambdas)
        .map(|i| (hi + (lo - hi) * F::of_usize(i) / F::of_usize(n_lambdas - 1)).exp())
        .collect()
}

/// `XᵀX/n` for covariance-update coordinate descent. Fixed designs reuse it
/// across responses.
#[derive(Debug, Clone)]
pub struct Gram<F> {
    k: usize,
    g: Vec<F>,
}

impl<F: Scalar> Gram<F> {
    pub fn new(x: &ColMatrix<F>) -> Self {
        let k = x.ncols();
        let n = F::of_usize(x.nrows());
        let mut g = vec![F::zero(); k * k];
        for p in 0..k {
            for q in p..k {
                let v = dot(x.col(p), x.col(q)) / n;
                g[p * k + q] = v;
                g[q * k + p] = v;
            }
        }
        Self { k, g }
    }

    #[inline]
    fn col(&self, j: usize) -> &[F] {
        &self.g[j * self.k..(j + 1) * self.k]
    }

    #[inline]
    fn diag(&self, j: usize) -> F {
        self.g[j * self.k + j]
    }

    /// Warm-started path for the response summarized by `xty = Xᵀy/n` and
    /// `yy = yᵀy/n`.
    pub fn path(
        &self,
        xty: &[F],
        yy: F,
        alpha: F,
        lambdas: &[F],
        solver: &SolverOptions<F>,
    ) -> Result<Vec<Vec<F>>> {
        let mut beta = vec![F::zero(); self.k];
        let mut grad = xty.to_vec();
        let mut out = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            self.solve(&mut beta, &mut grad, yy, lambda * alpha, lambda * (F::one() - alpha), solver)?;
            out.push(beta.clone());
        }
        Ok(out)
    }

    /// `grad` holds `Xᵀ(y − Xβ)/n` and is kept consistent with `beta`.
    fn solve(
        &self,
        beta: &mut [F],
        grad: &mut [F],
        yy: F,
        l1: F,
        l2: F,
        solver: &SolverOptions<F>,
    ) -> Result<()> {
        let (tol, weighted) = match solver.convergence {
            Convergence::MaxChange(t) => (t, false),
            Convergence::RelativeObjective(t) => (t * yy.max(F::min_positive_value()), true),
        };
        let mut sweeps = 0usize;
        let mut active: Vec<usize> = Vec::new();
        let step = |j: usize, beta: &mut [F], grad: &mut [F]| -> F {
            let d = self.diag(j);
            let old = beta[j];
            let z = grad[j] + d * old;
            let new = soft(z, l1) / (d + l2);
            let delta = new - old;
            if delta != F::zero() {
                beta[j] = new;
                for (g, &v) in grad.iter_mut().zip(self.col(j)) {
                    *g -= v * delta;
                }
            }
            if weighted {
                d * delta * delta
            } else {
                delta.abs()
            }
        };
        loop {
            let mut worst = F::zero();
            for j in 0..self.k {
                worst = worst.max(step(j, beta, grad));
            }
            sweeps += 1;
            if worst <= tol {
                return Ok(());
            }
            active.clear();
            active.extend((0..self.k).filter(|&j| beta[j] != F::zero()));
            loop {
                if sweeps >= solver.max_sweeps {
                    return Err(Error::NoConvergence {
                        lambda: (l1 + l2).as_f64(),
                        sweeps,
                    });
                }
                let mut worst = F::zero();
                for &j in &active {
                    worst = worst.max(step(j, beta, grad));
                }
                sweeps += 1;
                if worst <= tol {
                    break;
                }
            }
        }
    }
}

#[inline]
fn soft<F: Scalar>(z: F, t: F) -> F {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        F::zero()
    }
}

/// Centered data plus its Gram matrix; answers elastic-net fits for any
/// response on the same predictors.
#[derive(Debug, Clone)]
pub struct EnetProblem<F> {
    pub data: CenteredData<F>,
    pub gram: Gram<F>,
}

impl<F: Scalar> EnetProblem<F> {
    pub fn new(data: CenteredData<F>) -> Self {
        let gram = Gram::new(&data.x);
        Self { data, gram }
    }

    /// Standardized coefficients for a centered response at (α, λ), reached
    /// along the α grid of that response.
    pub fn fit_centered(
        &self,
        y_c: &[F],
        alpha: F,
        lambda: F,
        opts: &ElasticNetOptions<F>,
    ) -> Result<Vec<F>> {
        let n = F::of_usize(self.data.n());
        let xty: Vec<F> = self.data.x.tr_mul(y_c).into_iter().map(|v| v / n).collect();
        let max_corr = xty.iter().fold(F::zero(), |m, v| m.max(v.abs())) * n;
        let grid = elastic_net_lambda_grid(max_corr, self.data.n(), alpha, opts.n_lambdas, opts.lambda_min_ratio);
        let mut lambdas: Vec<F> = grid.into_iter().filter(|&l| l > lambda).collect();
        lambdas.push(lambda);
        let yy = dot(y_c, y_c) / n;
        let path = self.gram.path(&xty, yy, alpha, &lambdas, &opts.solver)?;
        Ok(path.into_iter().last().expect("non-empty"))
    }
}

/// Standardized coefficients at (α, λ), reached by a warm-started path over
/// the α grid down to λ.
pub fn fit_elastic_net<F: Scalar>(
    data: &CenteredData<F>,
    alpha: F,
    lambda: F,
    opts: &ElasticNetOptions<F>,
) -> Result<Vec<F>> {
    EnetProblem::new(data.clone()).fit_centered(&data.y, alpha, lambda, opts)
}

pub fn elastic_net_cv<F: Scalar>(
    x: &ColMatrix<F>,
    y: &[F],
    alphas: &[F],
    folds: usize,
    seed: u64,
) -> Result<ElasticNetFit<F>> {
    elastic_net_cv_with(x, y, alphas, folds, seed, &ElasticNetOptions::default())
}

/// Picks (α, λ) by K-fold cross-validation, then refits on all data.
///
/// Predictors are centered and scaled once on the full data; each training
/// fold is re-centered so the held-out predictions carry the fold intercept.
pub fn elastic_net_cv_with<F: Scalar>(
    x: &ColMatrix<F>,
    y: &[F],
    alphas: &[F],
    folds: usize,
    seed: u64,
    opts: &ElasticNetOptions<F>,
) -> Result<ElasticNetFit<F>> {
    let n = x.nrows();
    if folds < 2 {
        return Err(Error::InvalidConfig("cross-validation needs at least 2 folds".into()));
    }
    if n < 6 || n < 2 * folds {
        return Err(Error::InvalidInput(format!(
            "{n} observations leave an empty or singleton fold with {folds} folds"
        )));
    }
    if alphas.is_empty() || alphas.iter().any(|&a| a <= F::zero() || a > F::one()) {
        return Err(Error::InvalidConfig("alphas must lie in (0, 1]".into()));
    }
    let data = center_and_scale(x, y)?;
    let max_corr = data.max_abs_correlation();
    let grids: Vec<Vec<F>> = alphas
        .iter()
        .map(|&a| elastic_net_lambda_grid(max_corr, n, a, opts.n_lambdas, opts.lambda_min_ratio))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }

    let mut sse: Vec<Vec<F>> = grids.iter().map(|g| vec![F::zero(); g.len()]).collect();
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        if test.is_empty() || train.is_empty() {
            return Err(Error::InvalidInput(format!("fold {f} is empty")));
        }
        let mut xt = data.x.select_rows(&train);
        let ntr = F::of_usize(train.len());
        let means: Vec<F> = (0..xt.ncols())
            .map(|j| xt.col(j).iter().copied().sum::<F>() / ntr)
            .collect();
        for (j, &m) in means.iter().enumerate() {
            for v in xt.col_mut(j) {
                *v -= m;
            }
        }
        let ytr: Vec<F> = train.iter().map(|&i| data.y[i]).collect();
        let (ytr, ybar) = center_vec(&ytr);
        let gram = Gram::new(&xt);
        let xty: Vec<F> = xt.tr_mul(&ytr).into_iter().map(|v| v / ntr).collect();
        let yy = dot(&ytr, &ytr) / ntr;
        for (ai, &alpha) in alphas.iter().enumerate() {
            let path = gram.path(&xty, yy, alpha, &grids[ai], &opts.solver)?;
            for (li, beta) in path.iter().enumerate() {
                let nz: Vec<(usize, F)> = beta
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b != F::zero())
                    .map(|(j, &b)| (j, b))
                    .collect();
                for &i in &test {
                    let pred = ybar
                        + nz
                            .iter()
                            .fold(F::zero(), |acc, &(j, b)| acc + (data.x.get(i, j) - means[j]) * b);
                    let e = data.y[i] - pred;
                    sse[ai][li] += e * e;
                }
            }
        }
    }

    let nf = F::of_usize(n);
    let mut cv_curve = Vec::new();
    let mut best: Option<(usize, usize, F)> = None;
    for (ai, &alpha) in alphas.iter().enumerate() {
        for (li, &lambda) in grids[ai].iter().enumerate() {
            let error = sse[ai][li] / nf;
            cv_curve.push(CvPoint { alpha, lambda, error });
            if best.is_none_or(|(_, _, e)| error < e) {
                best = Some((ai, li, error));
            }
        }
    }
    let (ai, li, cv_error) = best.expect("non-empty grid");
    let problem = EnetProblem::new(data);
    let nf_full = F::of_usize(n);
    let xty: Vec<F> = problem.data.x.tr_mul(&problem.data.y).into_iter().map(|v| v / nf_full).collect();
    let yy = dot(&problem.data.y, &problem.data.y) / nf_full;
    let path = problem.gram.path(&xty, yy, alphas[ai], &grids[ai][..=li], &opts.solver)?;
    let standardized = path.into_iter().last().expect("non-empty");
    let data = problem.data;
    let coefficients = data.to_original(&standardized);
    let intercept = data.intercept(&coefficients);
    Ok(ElasticNetFit {
        alpha: alphas[ai],
        lambda: grids[ai][li],
        lambda_index: li,
        standardized,
        coefficients,
        intercept,
        cv_error,
        cv_curve,
        data,
    })
}
