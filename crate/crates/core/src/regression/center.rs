use crate::error::{Error, Result};
use crate::matrix::ColMatrix;
use crate::scalar::Scalar;

/// Predictors centered and scaled to common length `√n`, response centered.
#[derive(Debug, Clone)]
pub struct CenteredData<F> {
    pub x: ColMatrix<F>,
    pub y: Vec<F>,
    /// Population standard deviation of each raw column; `x_cs = (x − mean)/scale`.
    pub column_scales: Vec<F>,
    pub column_means: Vec<F>,
    pub y_mean: F,
}

impl<F: Scalar> CenteredData<F> {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// `max_j |x_jᵀ y|` on the centered, scaled data.
    pub fn max_abs_correlation(&self) -> F {
        self.x
            .tr_mul(&self.y)
            .into_iter()
            .fold(F::zero(), |m, v| m.max(v.abs()))
    }

    /// Standardized coefficients → raw predictor scale.
    pub fn to_original(&self, standardized: &[F]) -> Vec<F> {
        standardized
            .iter()
            .zip(&self.column_scales)
            .map(|(&b, &s)| b / s)
            .collect()
    }

    /// Intercept on the raw scale for raw-scale coefficients.
    pub fn intercept(&self, original: &[F]) -> F {
        self.y_mean
            - original
                .iter()
                .zip(&self.column_means)
                .fold(F::zero(), |acc, (&b, &m)| acc + b * m)
    }

    /// Same predictors with a different response (e.g. a permutation).
    pub fn with_response(&self, y: &[F]) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "response has {} values, expected {}",
                y.len(),
                self.n()
            )));
        }
        let (y_c, y_mean) = center_vec(y);
        Ok(Self {
            x: self.x.clone(),
            y: y_c,
            column_scales: self.column_scales.clone(),
            column_means: self.column_means.clone(),
            y_mean,
        })
    }
}

pub(crate) fn center_vec<F: Scalar>(y: &[F]) -> (Vec<F>, F) {
    let n = F::of_usize(y.len().max(1));
    let mean = y.iter().copied().sum::<F>() / n;
    (y.iter().map(|&v| v - mean).collect(), mean)
}

/// Centers every column of `x` and rescales it to Euclidean length `√n`;
/// centers `y`.
pub fn center_and_scale<F: Scalar>(x: &ColMatrix<F>, y: &[F]) -> Result<CenteredData<F>> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} rows",
            y.len(),
            n
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least two observations".into()));
    }
    let nf = F::of_usize(n);
    let mut out = ColMatrix::zeros(n, x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    let mut means = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.col(j);
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::ConstantColumn(j.to_string()));
        }
        let mean = col.iter().copied().sum::<F>() / nf;
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / nf;
        let sd = var.sqrt();
        if sd <= F::epsilon() * (F::one() + mean.abs()) {
            return Err(Error::ConstantColumn(j.to_string()));
        }
        for (o, &v) in out.col_mut(j).iter_mut().zip(col) {
            *o = (v - mean) / sd;
        }
        scales.push(sd);
        means.push(mean);
    }
    let (y_c, y_mean) = center_vec(y);
    Ok(CenteredData {
        x: out,
        y: y_c,
        column_scales: scales,
        column_means: means,
        y_mean,
    })
}
