//! Pooling designs: construction and evaluation.
//!
//! A design is an `n × k` binary membership matrix `U` (wells × compounds).
//! The `±1` coding `X = 2U − J` is what the analysis code works with.

mod criteria;
mod crows;
mod maps;
mod random;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ColMatrix;
use crate::scalar::Scalar;

pub use criteria::{
    evaluate_maps_m, evaluate_ue_s2, maps_m_of_rows, ue_s2_of_rows, validate_design, CoOccurrence,
    CriterionReport,
};
pub use crows::{construct_crows, construct_crows_with, CrowsOptions, CrowsOutcome};
pub use maps::{construct_maps, construct_maps_with, GaOptions, MapsOutcome};
pub use random::construct_random_balanced;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignMethod {
    Crows,
    Maps,
    Random,
}

impl std::str::FromStr for DesignMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "crows" => Ok(Self::Crows),
            "maps" => Ok(Self::Maps),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidSpec(format!("unknown design method {other:?}"))),
        }
    }
}

/// Optimizer effort. Only `Iterations` gives seed-deterministic results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    /// Exchange proposals (CRowS) or generations (MAPS).
    Iterations(u64),
    Seconds(f64),
}

impl Default for Budget {
    fn default() -> Self {
        Budget::Iterations(100_000)
    }
}

impl Budget {
    pub fn is_zero(&self) -> bool {
        match *self {
            Budget::Iterations(n) => n == 0,
            Budget::Seconds(s) => s <= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    /// Wells (rows).
    pub n: usize,
    /// Compounds (columns).
    pub k: usize,
    /// Largest allowed pool size.
    pub c_max: usize,
    pub method: DesignMethod,
    /// Minimum replication per compound; MAPS only.
    #[serde(default)]
    pub a_min: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
}

impl DesignSpec {
    pub fn new(n: usize, k: usize, c_max: usize, method: DesignMethod) -> Self {
        Self {
            n,
            k,
            c_max,
            method,
            a_min: None,
            seed: 0,
            budget: Budget::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_a_min(mut self, a_min: usize) -> Self {
        self.a_min = Some(a_min);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 wells, got {}", self.n)));
        }
        if self.k < 1 {
            return Err(Error::InvalidSpec("need at least 1 compound".into()));
        }
        if self.c_max < 1 || self.c_max > self.k {
            return Err(Error::InvalidSpec(format!(
                "pool size {} outside 1..={}",
                self.c_max, self.k
            )));
        }
        if self.method == DesignMethod::Random && (self.n * self.c_max) % self.k != 0 {
            return Err(Error::InvalidSpec(format!(
                "balanced random pools need n*c = k*a with integral a, but {}*{} = {} is not a multiple of k = {} (nc = ka violated)",
                self.n,
                self.c_max,
                self.n * self.c_max,
                self.k
            )));
        }
        Ok(())
    }
}

/// Dispatch on `spec.method` with default optimizer settings.
pub fn construct(spec: &DesignSpec) -> Result<Design> {
    match spec.method {
        DesignMethod::Crows => construct_crows(spec),
        DesignMethod::Maps => construct_maps(spec),
        DesignMethod::Random => construct_random_balanced(spec),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    n: usize,
    k: usize,
    /// Row-major `n × k`, entries 0/1.
    membership: Vec<u8>,
    compound_ids: Vec<String>,
    well_ids: Vec<String>,
    spec: Option<DesignSpec>,
}

pub fn default_well_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(3);
    (1..=n).map(|i| format!("W{i:0width$}")).collect()
}

pub fn default_compound_ids(k: usize) -> Vec<String> {
    let width = k.to_string().len().max(4);
    (1..=k).map(|j| format!("C{j:0width$}")).collect()
}

impl Design {
    /// Builds a design from 0/1 rows with default labels.
    pub fn from_rows(rows: &[Vec<u8>], spec: Option<DesignSpec>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        Self::with_ids(
            rows,
            default_well_ids(n),
            default_compound_ids(k),
            spec,
        )
    }

    pub fn with_ids(
        rows: &[Vec<u8>],
        well_ids: Vec<String>,
        compound_ids: Vec<String>,
        spec: Option<DesignSpec>,
    ) -> Result<Self> {
        let n = rows.len();
        let k = compound_ids.len();
        if well_ids.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} well ids for {} rows",
                well_ids.len(),
                n
            )));
        }
        let mut membership = Vec::with_capacity(n * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {}",
                    well_ids[i],
                    row.len(),
                    k
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::NonBinary {
                        row: well_ids[i].clone(),
                        column: compound_ids[j].clone(),
                        value: v.to_string(),
                    });
                }
            }
            membership.extend_from_slice(row);
        }
        check_unique(&well_ids, "well")?;
        check_unique(&compound_ids, "compound")?;
        Ok(Self {
            n,
            k,
            membership,
            compound_ids,
            well_ids,
            spec,
        })
    }

    pub(crate) fn from_flat(n: usize, k: usize, membership: Vec<u8>, spec: DesignSpec) -> Self {
        debug_assert_eq!(membership.len(), n * k);
        Self {
            n,
            k,
            membership,
            compound_ids: default_compound_ids(k),
            well_ids: default_well_ids(n),
            spec: Some(spec),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn compound_ids(&self) -> &[String] {
        &self.compound_ids
    }

    pub fn well_ids(&self) -> &[String] {
        &self.well_ids
    }

    pub fn spec(&self) -> Option<&DesignSpec> {
        self.spec.as_ref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.membership[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.membership[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Compounds present in well `i`.
    pub fn pool(&self, i: usize) -> Vec<usize> {
        (0..self.k).filter(|&j| self.get(i, j) == 1).collect()
    }

    /// Wells containing compound `j`.
    pub fn wells_of(&self, j: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i, j) == 1).collect()
    }

    pub fn pool_sizes(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|&v| v as usize).sum())
            .collect()
    }

    pub fn replications(&self) -> Vec<usize> {
        let mut a = vec![0usize; self.k];
        for i in 0..self.n {
            for (aj, &v) in a.iter_mut().zip(self.row(i)) {
                *aj += v as usize;
            }
        }
        a
    }

    pub fn compound_index(&self, id: &str) -> Option<usize> {
        self.compound_ids.iter().position(|c| c == id)
    }

    /// `±1` coding `X = 2U − J`.
    pub fn to_pm1<F: Scalar>(&self) -> ColMatrix<F> {
        ColMatrix::from_fn(self.n, self.k, |i, j| {
            if self.get(i, j) == 1 {
                F::one()
            } else {
                -F::one()
            }
        })
    }

    pub fn with_spec(mut self, spec: DesignSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn relabel(mut self, well_ids: Vec<String>, compound_ids: Vec<String>) -> Result<Self> {
        if well_ids.len() != self.n || compound_ids.len() != self.k {
            return Err(Error::DimensionMismatch("label counts do not match design".into()));
        }
        check_unique(&well_ids, "well")?;
        check_unique(&compound_ids, "compound")?;
        self.well_ids = well_ids;
        self.compound_ids = compound_ids;
        Ok(self)
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(())
}

/// Per-restart / per-worker seed derivation (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_rejects_non_integral_replication_for_random() {
        let spec = DesignSpec::new(320, 960, 8, DesignMethod::Random);
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("nc = ka"), "{err}");
        DesignSpec::new(320, 640, 8, DesignMethod::Random)
            .validate()
            .unwrap();
    }

    #[test]
    fn spec_bounds() {
        assert!(DesignSpec::new(1, 3, 1, DesignMethod::Crows).validate().is_err());
        assert!(DesignSpec::new(4, 3, 0, DesignMethod::Crows).validate().is_err());
        assert!(DesignSpec::new(4, 3, 4, DesignMethod::Crows).validate().is_err());
        assert!(DesignSpec::new(4, 3, 3, DesignMethod::Crows).validate().is_ok());
    }

    #[test]
    fn rejects_non_binary_and_duplicates() {
        let err = Design::from_rows(&[vec![0, 2], vec![1, 0]], None).unwrap_err();
        assert!(matches!(err, Error::NonBinary { .. }));
        let err = Design::with_ids(
            &[vec![0, 1], vec![1, 0]],
            vec!["a".into(), "a".into()],
            vec!["x".into(), "y".into()],
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate well"));
    }

    #[test]
    fn pm1_coding() {
        let d = Design::from_rows(&[vec![1, 0], vec![0, 1]], None).unwrap();
        let x = d.to_pm1::<f64>();
        assert_eq!(x.col(0), &[1.0, -1.0]);
        assert_eq!(x.col(1), &[-1.0, 1.0]);
    }
}
