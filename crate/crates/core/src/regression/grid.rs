use super::CenteredData;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor of the log-λ grid.
pub const LOG_LAMBDA_FLOOR: f64 = -5.0;
pub const LOG_LAMBDA_STEP: f64 = 0.25;

/// Descending log-λ values.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid<F> {
    log_values: Vec<F>,
}

impl<F: Scalar> LambdaGrid<F> {
    /// `log max|X_csᵀ y_c|` down to −5 in steps of 0.25; −5 is appended when
    /// the stepping does not land on it. A top below the floor collapses to
    /// the single value −5.
    pub fn for_data(data: &CenteredData<F>) -> Self {
        Self::from_top(data.max_abs_correlation())
    }

    pub fn from_top(max_corr: F) -> Self {
        let floor = F::of(LOG_LAMBDA_FLOOR);
        let step = F::of(LOG_LAMBDA_STEP);
        let top = if max_corr > F::zero() {
            max_corr.ln().max(floor)
        } else {
            floor
        };
        let mut log_values = vec![top];
        let mut i = 1usize;
        loop {
            let v = top - step * F::of_usize(i);
            if v < floor {
                break;
            }
            log_values.push(v);
            i += 1;
        }
        let last = *log_values.last().expect("non-empty");
        // stepping by 0.25 may stop a hair above the floor
        if last - floor > F::of(1e-9) {
            log_values.push(floor);
        }
        Self { log_values }
    }

    pub fn from_log_values(log_values: Vec<F>) -> Result<Self> {
        if log_values.is_empty() {
            return Err(Error::InvalidInput("empty lambda grid".into()));
        }
        if log_values.windows(2).any(|w| w[1] >= w[0]) || log_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "lambda grid must be finite and strictly decreasing".into(),
            ));
        }
        Ok(Self { log_values })
    }

    pub fn log_values(&self) -> &[F] {
        &self.log_values
    }

    pub fn lambdas(&self) -> Vec<F> {
        self.log_values.iter().map(|v| v.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }
}
