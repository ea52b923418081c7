use crate::error::{Error, Result};
use crate::matrix::ColMatrix;
use crate::scalar::Scalar;

/// RSS floor used inside the BIC logarithm.
pub const RSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RefitModel<F> {
    pub support: Vec<usize>,
    pub intercept: F,
    /// One coefficient per support entry, same order.
    pub coefficients: Vec<F>,
    pub rss: F,
    pub bic: F,
}

/// `n ln(max(rss, 1e−12)/n) + (p + 1) ln n`, intercept counted.
pub fn bic<F: Scalar>(n: usize, rss: F, p: usize) -> F {
    let nf = F::of_usize(n);
    nf * (rss.max(F::of(RSS_FLOOR)) / nf).ln() + F::of_usize(p + 1) * nf.ln()
}

/// Least squares of `y` on an intercept plus the `support` columns of `x`
/// (Householder QR, no pivoting).
pub fn ols_refit_bic<F: Scalar>(x: &ColMatrix<F>, y: &[F], support: &[usize]) -> Result<RefitModel<F>> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{} responses for {n} rows", y.len())));
    }
    if n < 2 || support.len() > n - 2 {
        return Err(Error::SupportTooLarge {
            size: support.len(),
            limit: n.saturating_sub(2),
        });
    }
    if let Some(&j) = support.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::InvalidInput(format!("support index {j} out of range")));
    }
    let p = support.len() + 1;
    let mut a: Vec<Vec<F>> = Vec::with_capacity(p);
    a.push(vec![F::one(); n]);
    for &j in support {
        a.push(x.col(j).to_vec());
    }
    let norms: Vec<F> = a.iter().map(|c| c.iter().map(|&v| v * v).sum::<F>().sqrt()).collect();
    let mut b = y.to_vec();
    let mut diag = vec![F::zero(); p];
    let tol = F::epsilon() * F::of_usize(n.max(p)) * F::of(10.0);

    for j in 0..p {
        let (head, tail) = a.split_at_mut(j + 1);
        let col = &mut head[j];
        let alpha_sq: F = col[j..].iter().map(|&v| v * v).sum();
        let alpha = alpha_sq.sqrt();
        if alpha <= tol * norms[j] || alpha == F::zero() {
            return Err(Error::RankDeficient(support.to_vec()));
        }
        let r_jj = if col[j] > F::zero() { -alpha } else { alpha };
        // v = col[j..] − r_jj e_1, stored in place
        let head0 = col[j];
        col[j] -= r_jj;
        let vtv = alpha_sq - head0 * head0 + col[j] * col[j];
        let two = F::of(2.0);
        for other in tail.iter_mut() {
            let s: F = col[j..].iter().zip(&other[j..]).map(|(&v, &o)| v * o).sum();
            let f = two * s / vtv;
            for (o, &v) in other[j..].iter_mut().zip(&col[j..]) {
                *o -= f * v;
            }
        }
        let s: F = col[j..].iter().zip(&b[j..]).map(|(&v, &o)| v * o).sum();
        let f = two * s / vtv;
        for (o, &v) in b[j..].iter_mut().zip(&col[j..]) {
            *o -= f * v;
        }
        diag[j] = r_jj;
    }
    // back substitution on R (upper triangle lives in a[c][r] for r < c)
    let mut coef = vec![F::zero(); p];
    for r in (0..p).rev() {
        let mut acc = b[r];
        for c in r + 1..p {
            acc -= a[c][r] * coef[c];
        }
        coef[r] = acc / diag[r];
    }
    let rss: F = b[p..].iter().map(|&v| v * v).sum();
    Ok(RefitModel {
        support: support.to_vec(),
        intercept: coef[0],
        coefficients: coef[1..].to_vec(),
        rss,
        bic: bic(n, rss, support.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pm1(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ColMatrix<f64> {
        ColMatrix::from_fn(n, k, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
    }

    /// Normal equations solved by Gaussian elimination with partial pivoting.
    fn normal_equations(x: &ColMatrix<f64>, y: &[f64], support: &[usize]) -> Vec<f64> {
        let n = x.nrows();
        let cols: Vec<Vec<f64>> = std::iter::once(vec![1.0; n])
            .chain(support.iter().map(|&j| x.col(j).to_vec()))
            .collect();
        let p = cols.len();
        let mut m: Vec<Vec<f64>> = (0..p)
            .map(|r| {
                let mut row: Vec<f64> = (0..p)
                    .map(|c| (0..n).map(|i| cols[r][i] * cols[c][i]).sum())
                    .collect();
                row.push((0..n).map(|i| cols[r][i] * y[i]).sum());
                row
            })
            .collect();
        for c in 0..p {
            let piv = (c..p).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
            m.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for cc in c..=p {
                        m[r][cc] -= f * m[c][cc];
                    }
                }
            }
        }
        (0..p).map(|r| m[r][p] / m[r][r]).collect()
    }

    #[test]
    fn null_model() {
        let x = ColMatrix::from_columns(&[vec![1.0, -1.0, 1.0, -1.0]]).unwrap();
        let y = [1.0, 2.0, 4.0, 5.0];
        let m = ols_refit_bic(&x, &y, &[]).unwrap();
        let ybar = 3.0;
        let rss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        assert!((m.intercept - ybar).abs() < 1e-12);
        assert!((m.rss - rss).abs() < 1e-12);
        let want = 4.0 * (rss / 4.0).ln() + 4f64.ln();
        assert!((m.bic - want).abs() < 1e-12);
    }

    #[test]
    fn perfect_fit_hits_floor_and_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = pm1(&mut rng, 10, 4);
        let y: Vec<f64> = x.col(2).iter().map(|v| 2.0 * v + 1.0).collect();
        let fits: Vec<_> = (0..4).filter_map(|j| ols_refit_bic(&x, &y, &[j]).ok()).collect();
        let best = fits
            .iter()
            .min_by(|a, b| a.bic.total_cmp(&b.bic))
            .unwrap();
        assert_eq!(best.support, vec![2]);
        assert!(best.bic.is_finite());
        assert!(best.rss < 1e-20);
    }

    #[test]
    fn matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = pm1(&mut rng, 12, 6);
        let y: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
        let m = ols_refit_bic(&x, &y, &[1, 4]).unwrap();
        let want = normal_equations(&x, &y, &[1, 4]);
        assert!((m.intercept - want[0]).abs() < 1e-9);
        assert!((m.coefficients[0] - want[1]).abs() < 1e-9);
        assert!((m.coefficients[1] - want[2]).abs() < 1e-9);
    }

    #[test]
    fn duplicated_columns_are_rank_deficient() {
        let c = vec![1.0, -1.0, 1.0, 1.0, -1.0];
        let x = ColMatrix::from_columns(&[c.clone(), c]).unwrap();
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(ols_refit_bic(&x, &y, &[0, 1]), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn oversized_support() {
        let x = ColMatrix::<f64>::zeros(4, 5);
        let y = [0.0; 4];
        assert!(matches!(
            ols_refit_bic(&x, &y, &[0, 1, 2]),
            Err(Error::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn adding_a_column_never_raises_rss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = pm1(&mut rng, 15, 6);
        let y: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let small = ols_refit_bic(&x, &y, &[0, 3]).unwrap();
        let big = ols_refit_bic(&x, &y, &[0, 3, 5]).unwrap();
        assert!(big.rss <= small.rss + 1e-12);
    }
}
