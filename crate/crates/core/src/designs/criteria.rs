use serde::{Deserialize, Serialize};

use super::{Design, DesignMethod, DesignSpec};
use crate::error::{Error, Result};

/// Replication counts and pairwise co-occurrence counts of a binary design.
///
/// Only pairs that co-occur at least once are stored.
#[derive(Debug, Clone)]
pub struct CoOccurrence {
    pub n: usize,
    pub k: usize,
    pub replication: Vec<i64>,
    pub pool_sizes: Vec<i64>,
    /// `(p, q, o_pq)` with `p < q` and `o_pq > 0`, sorted.
    pub pairs: Vec<(u32, u32, i64)>,
}

impl CoOccurrence {
    pub fn from_pools<'a>(n: usize, k: usize, pools: impl Iterator<Item = &'a [usize]>) -> Self {
        let mut replication = vec![0i64; k];
        let mut pool_sizes = Vec::with_capacity(n);
        let mut codes: Vec<u64> = Vec::new();
        for pool in pools {
            pool_sizes.push(pool.len() as i64);
            for (x, &p) in pool.iter().enumerate() {
                replication[p] += 1;
                for &q in &pool[x + 1..] {
                    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
                    codes.push(((lo as u64) << 32) | hi as u64);
                }
            }
        }
        codes.sort_unstable();
        let mut pairs = Vec::new();
        let mut it = codes.into_iter().peekable();
        while let Some(c) = it.next() {
            let mut count = 1i64;
            while it.peek() == Some(&c) {
                it.next();
                count += 1;
            }
            pairs.push(((c >> 32) as u32, (c & 0xFFFF_FFFF) as u32, count));
        }
        Self {
            n,
            k,
            replication,
            pool_sizes,
            pairs,
        }
    }

    pub fn of_design(design: &Design) -> Self {
        let pools: Vec<Vec<usize>> = (0..design.n()).map(|i| design.pool(i)).collect();
        Self::from_pools(design.n(), design.k(), pools.iter().map(Vec::as_slice))
    }

    /// `Σ_{i<j} s_ij²` over all column pairs of `L = [1, X]`, exactly.
    pub fn ue_numerator(&self) -> i128 {
        let n = self.n as i128;
        let a: Vec<i128> = self.replication.iter().map(|&v| v as i128).collect();
        // intercept against each column: s_0j = 2a_j − n
        let mut total: i128 = a.iter().map(|&aj| (2 * aj - n).pow(2)).sum();
        // all compound pairs as if disjoint: s_pq = n − 2a_p − 2a_q
        // Σ_{p<q} (b_p + b_q)² with b = n/2 − 2a is awkward with odd n; use
        // c_p = n − 4a_p:  (n − 2a_p − 2a_q) = (c_p + c_q)/2, so
        // Σ_{p<q}(c_p+c_q)² = (k−2)Σc² + (Σc)², then divide by 4.
        let c: Vec<i128> = a.iter().map(|&aj| n - 4 * aj).collect();
        let k = a.len() as i128;
        let sum_c: i128 = c.iter().sum();
        let sum_c2: i128 = c.iter().map(|v| v * v).sum();
        let disjoint4 = (k - 2) * sum_c2 + sum_c * sum_c;
        debug_assert_eq!(disjoint4 % 4, 0);
        total += disjoint4 / 4;
        // correction for co-occurring pairs: s_pq gains 4·o_pq
        for &(p, q, o) in &self.pairs {
            let base = n - 2 * a[p as usize] - 2 * a[q as usize];
            let o = o as i128;
            total += (base + 4 * o).pow(2) - base.pow(2);
        }
        total
    }

    pub fn ue_s2(&self) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        let pairs = (self.k as f64) * (self.k as f64 + 1.0) / 2.0;
        self.ue_numerator() as f64 / pairs
    }

    pub fn maps_m(&self) -> f64 {
        let off: i128 = self.pairs.iter().map(|&(_, _, o)| 2 * (o as i128).pow(2)).sum();
        let k = self.k as f64;
        let total: i64 = self.replication.iter().sum();
        let mean = total as f64 / k;
        let dev: f64 = self
            .replication
            .iter()
            .map(|&aj| (aj as f64 - mean).powi(2))
            .sum();
        off as f64 + dev
    }
}

/// Mean squared off-diagonal entry of `S = LᵀL`, `L = [1, X]`, over all
/// `k(k+1)/2` column pairs.
pub fn evaluate_ue_s2(design: &Design) -> f64 {
    CoOccurrence::of_design(design).ue_s2()
}

/// `‖UᵀU − diag(UᵀU)‖_F² + Σ_j (a_j − ā)²`.
pub fn evaluate_maps_m(design: &Design) -> f64 {
    CoOccurrence::of_design(design).maps_m()
}

fn pools_of_rows(rows: &[Vec<u8>]) -> Result<(usize, usize, Vec<Vec<usize>>)> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    let mut pools = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {k}",
                row.len()
            )));
        }
        let mut pool = Vec::new();
        for (j, &v) in row.iter().enumerate() {
            match v {
                0 => {}
                1 => pool.push(j),
                _ => {
                    return Err(Error::NonBinary {
                        row: i.to_string(),
                        column: j.to_string(),
                        value: v.to_string(),
                    })
                }
            }
        }
        pools.push(pool);
    }
    Ok((n, k, pools))
}

/// UE(s²) straight from 0/1 rows, validating shape and entries.
pub fn ue_s2_of_rows(rows: &[Vec<u8>]) -> Result<f64> {
    let (n, k, pools) = pools_of_rows(rows)?;
    Ok(CoOccurrence::from_pools(n, k, pools.iter().map(Vec::as_slice)).ue_s2())
}

pub fn maps_m_of_rows(rows: &[Vec<u8>]) -> Result<f64> {
    let (n, k, pools) = pools_of_rows(rows)?;
    Ok(CoOccurrence::from_pools(n, k, pools.iter().map(Vec::as_slice)).maps_m())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub sqrt_ue_s2: f64,
    pub sqrt_m: f64,
    pub c_min: usize,
    pub c_max: usize,
    pub a_min: usize,
    pub a_max: usize,
    /// Spec conformance problems; empty when the design satisfies its spec.
    #[serde(default)]
    pub violations: Vec<String>,
}

/// Recomputes bounds and criteria and lists any violations of `spec`.
pub fn validate_design(design: &Design, spec: Option<&DesignSpec>) -> CriterionReport {
    let co = CoOccurrence::of_design(design);
    let c = &co.pool_sizes;
    let a = &co.replication;
    let mut violations = Vec::new();
    if let Some(spec) = spec {
        if spec.n != design.n() || spec.k != design.k() {
            violations.push(format!(
                "design is {}x{} but spec asks for {}x{}",
                design.n(),
                design.k(),
                spec.n,
                spec.k
            ));
        }
        if matches!(spec.method, DesignMethod::Crows | DesignMethod::Random) {
            for (i, &ci) in c.iter().enumerate() {
                if ci as usize > spec.c_max {
                    violations.push(format!(
                        "pool {} has {} compounds, above c_max {}",
                        design.well_ids()[i],
                        ci,
                        spec.c_max
                    ));
                }
            }
        }
        if let (DesignMethod::Maps, Some(a_min)) = (spec.method, spec.a_min) {
            for (j, &aj) in a.iter().enumerate() {
                if (aj as usize) < a_min {
                    violations.push(format!(
                        "compound {} appears {} times, below a_min {}",
                        design.compound_ids()[j],
                        aj,
                        a_min
                    ));
                }
            }
        }
    }
    for (j, &aj) in a.iter().enumerate() {
        if aj == 0 {
            violations.push(format!("compound {} is in no pool", design.compound_ids()[j]));
        }
    }
    let bounds = |v: &[i64]| {
        (
            v.iter().copied().min().unwrap_or(0) as usize,
            v.iter().copied().max().unwrap_or(0) as usize,
        )
    };
    let (c_min, c_max) = bounds(c);
    let (a_min, a_max) = bounds(a);
    CriterionReport {
        sqrt_ue_s2: co.ue_s2().sqrt(),
        sqrt_m: co.maps_m().sqrt(),
        c_min,
        c_max,
        a_min,
        a_max,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Builds L = [1, X] and sums s_ij² over every column pair directly.
    fn brute_ue(rows: &[Vec<u8>]) -> f64 {
        let n = rows.len();
        let k = rows[0].len();
        let l = |i: usize, c: usize| -> f64 {
            if c == 0 || rows[i][c - 1] == 1 {
                1.0
            } else {
                -1.0
            }
        };
        let mut sum = 0.0;
        for p in 0..=k {
            for q in p + 1..=k {
                let s: f64 = (0..n).map(|i| l(i, p) * l(i, q)).sum();
                sum += s * s;
            }
        }
        sum / (k as f64 * (k as f64 + 1.0) / 2.0)
    }

    fn brute_m(rows: &[Vec<u8>]) -> f64 {
        let n = rows.len();
        let k = rows[0].len();
        let mut m = 0.0;
        for p in 0..k {
            for q in 0..k {
                if p != q {
                    let o: f64 = (0..n).map(|i| (rows[i][p] * rows[i][q]) as f64).sum();
                    m += o * o;
                }
            }
        }
        let sums: Vec<f64> = (0..k)
            .map(|j| (0..n).map(|i| rows[i][j] as f64).sum())
            .collect();
        let mean = sums.iter().sum::<f64>() / k as f64;
        m + sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
    }

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<u8>> {
        (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(0..2u8)).collect())
            .collect()
    }

    #[test]
    fn single_balanced_column_is_zero() {
        assert_eq!(ue_s2_of_rows(&[vec![1], vec![0]]).unwrap(), 0.0);
    }

    #[test]
    fn identity_has_zero_m() {
        assert_eq!(maps_m_of_rows(&[vec![1, 0], vec![0, 1]]).unwrap(), 0.0);
    }

    #[test]
    fn seeded_4x6_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let rows = random_rows(&mut rng, 4, 6);
        let got = ue_s2_of_rows(&rows).unwrap();
        assert!((got - brute_ue(&rows)).abs() <= 1e-12 * brute_ue(&rows).max(1.0));
    }

    #[test]
    fn seeded_4x3_m_matches_elementwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let rows = random_rows(&mut rng, 4, 3);
        let got = maps_m_of_rows(&rows).unwrap();
        assert!((got - brute_m(&rows)).abs() <= 1e-12);
    }

    #[test]
    fn hundred_random_designs_match_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..100 {
            let n = rng.random_range(2..=20);
            let k = rng.random_range(1..=30);
            let rows = random_rows(&mut rng, n, k);
            let ue = ue_s2_of_rows(&rows).unwrap();
            let want = brute_ue(&rows);
            assert!((ue - want).abs() <= 1e-10 * want.max(1e-300), "{ue} vs {want}");
            let m = maps_m_of_rows(&rows).unwrap();
            let want = brute_m(&rows);
            assert!((m - want).abs() <= 1e-10 * want.max(1.0), "{m} vs {want}");
        }
    }

    #[test]
    fn errors_on_bad_rows() {
        assert!(matches!(
            ue_s2_of_rows(&[vec![0, 1], vec![1]]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            ue_s2_of_rows(&[vec![0, 3]]),
            Err(Error::NonBinary { .. })
        ));
    }

    #[test]
    fn report_bounds_match_counting_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(69);
        let rows = random_rows(&mut rng, 6, 9);
        let d = Design::from_rows(&rows, None).unwrap();
        let r = validate_design(&d, None);
        let cs: Vec<usize> = rows.iter().map(|r| r.iter().map(|&v| v as usize).sum()).collect();
        let as_: Vec<usize> = (0..9)
            .map(|j| rows.iter().map(|r| r[j] as usize).sum())
            .collect();
        assert_eq!(r.c_min, *cs.iter().min().unwrap());
        assert_eq!(r.c_max, *cs.iter().max().unwrap());
        assert_eq!(r.a_min, *as_.iter().min().unwrap());
        assert_eq!(r.a_max, *as_.iter().max().unwrap());
    }

    #[test]
    fn identity_report() {
        let d = Design::from_rows(&[vec![1, 0], vec![0, 1]], None).unwrap();
        let r = validate_design(&d, None);
        assert_eq!((r.c_min, r.c_max, r.a_min, r.a_max), (1, 1, 1, 1));
        assert_eq!(r.sqrt_m, 0.0);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn violations_are_listed_not_raised() {
        let d = Design::from_rows(&[vec![1, 1, 0], vec![1, 0, 0]], None).unwrap();
        let spec = DesignSpec::new(2, 3, 1, DesignMethod::Crows);
        let r = validate_design(&d, Some(&spec));
        assert_eq!(r.violations.len(), 2, "{:?}", r.violations);
    }
}
