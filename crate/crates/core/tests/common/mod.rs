#![allow(dead_code)]

use poolscreen::regression::CenteredData;
use poolscreen::{ColMatrix, Design};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Balanced 4-uniform design on `Z_4 × Z_m` whose pools are the lines
/// `{(i, b + s·i)}` for slopes `s < c`: any two compounds share at most one pool.
pub fn transversal_design(m: usize, c: usize) -> Design {
    let n = 4 * m;
    let k = c * m;
    let mut rows = vec![vec![0u8; k]; n];
    for s in 0..c {
        for b in 0..m {
            let col = s * m + b;
            for i in 0..4 {
                rows[i * m + (b + s * i) % m][col] = 1;
            }
        }
    }
    Design::from_rows(&rows, None).unwrap()
}

/// Circulant graph on `n` wells with edges `{i, i+d}`, `d = 1..=half`; every
/// compound (edge) is in two wells and no two compounds share both.
pub fn circulant_design(n: usize, half: usize) -> Design {
    let k = n * half;
    let mut rows = vec![vec![0u8; k]; n];
    for d in 1..=half {
        for i in 0..n {
            let col = (d - 1) * n + i;
            rows[i][col] = 1;
            rows[(i + d) % n][col] = 1;
        }
    }
    Design::from_rows(&rows, None).unwrap()
}

/// `Σ_{i<j} s_ij² / (k(k+1)/2)` from the explicit `L = [1, X]`.
pub fn brute_ue_s2(design: &Design) -> f64 {
    let (n, k) = (design.n(), design.k());
    let mut cols: Vec<Vec<i64>> = vec![vec![1; n]];
    for j in 0..k {
        cols.push((0..n).map(|i| 2 * design.get(i, j) as i64 - 1).collect());
    }
    let mut total: i128 = 0;
    for a in 0..=k {
        for b in a + 1..=k {
            let s: i64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
            total += (s as i128) * (s as i128);
        }
    }
    total as f64 / (k as f64 * (k as f64 + 1.0) / 2.0)
}

/// Overlap-counting closed form for designs with constant replication `a`.
pub fn closed_form_ue_s2(design: &Design) -> f64 {
    let (n, k) = (design.n() as f64, design.k());
    let reps = design.replications();
    let a = reps[0] as f64;
    assert!(reps.iter().all(|&r| r as f64 == a));
    let pools: Vec<Vec<usize>> = (0..k).map(|j| design.wells_of(j)).collect();
    let mut sum = k as f64 * (2.0 * a - n).powi(2);
    for p in 0..k {
        for q in p + 1..k {
            let o = pools[p].iter().filter(|i| pools[q].contains(i)).count() as f64;
            sum += (n - 4.0 * a + 4.0 * o).powi(2);
        }
    }
    sum / (k as f64 * (k as f64 + 1.0) / 2.0)
}

pub fn gaussian_instance(seed: u64, n: usize, k: usize) -> (ColMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = ColMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    let beta: Vec<f64> = (0..k).map(|j| if j % 4 == 0 { 1.5 } else { 0.0 }).collect();
    let mut y = x.mul(&beta);
    for v in &mut y {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += 0.5 * e;
    }
    (x, y)
}

/// `x_jᵀ(y − Xβ)/n` on centered data.
pub fn gradient(data: &CenteredData<f64>, beta: &[f64]) -> Vec<f64> {
    let fit = data.x.mul(beta);
    let r: Vec<f64> = data.y.iter().zip(&fit).map(|(y, f)| y - f).collect();
    let n = data.n() as f64;
    data.x.tr_mul(&r).into_iter().map(|g| g / n).collect()
}

/// Largest violation of the lasso optimality conditions.
pub fn kkt_violation(data: &CenteredData<f64>, beta: &[f64], lambda: f64, nonneg: bool) -> f64 {
    gradient(data, beta)
        .iter()
        .zip(beta)
        .map(|(&g, &b)| {
            if b > 0.0 {
                (g - lambda).abs()
            } else if b < 0.0 {
                (g + lambda).abs()
            } else if nonneg {
                (g - lambda).max(0.0)
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Accelerated proximal gradient with adaptive restart, run to a fixed point.
pub fn fista(data: &CenteredData<f64>, lambda: f64, nonneg: bool, tol: f64) -> Vec<f64> {
    let n = data.n() as f64;
    let k = data.k();
    // Gershgorin bound on the largest eigenvalue of XᵀX/n
    let lip = (0..k)
        .map(|i| (0..k).map(|j| data.x.col(i).iter().zip(data.x.col(j)).map(|(a, b)| a * b).sum::<f64>().abs()).sum::<f64>() / n)
        .fold(0.0, f64::max);
    let step = 1.0 / (lip * 1.01);
    let prox = |z: f64| {
        let s = if z > step * lambda {
            z - step * lambda
        } else if z < -step * lambda {
            z + step * lambda
        } else {
            0.0
        };
        if nonneg {
            s.max(0.0)
        } else {
            s
        }
    };
    let mut x = vec![0.0; k];
    let mut yk = x.clone();
    let mut t = 1.0f64;
    for _ in 0..2_000_000 {
        let g = gradient(data, &yk);
        let next: Vec<f64> = yk.iter().zip(&g).map(|(&a, &b)| prox(a + step * b)).collect();
        let change = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let restart = next
            .iter()
            .zip(&x)
            .zip(yk.iter())
            .map(|((&nx, &ox), &y)| (y - nx) * (nx - ox))
            .sum::<f64>()
            > 0.0;
        if restart {
            yk = next.clone();
            t = 1.0;
        } else {
            yk = next
                .iter()
                .zip(&x)
                .map(|(&nx, &ox)| nx + (t - 1.0) / t_next * (nx - ox))
                .collect();
            t = t_next;
        }
        x = next;
        if change < tol {
            break;
        }
    }
    x
}
