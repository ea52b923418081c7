//! Constrained-row exchange search on UE(s²).
//!
//! The state keeps `L = [1, X]` row-major and the full `S = LᵀL` so that any
//! single-column or within-row move is scored in `O(k)`.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{derive_seed, Budget, Design, DesignMethod, DesignSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CrowsOptions {
    /// Independent restarts; the proposal budget is split evenly between them.
    pub restarts: usize,
    /// Keep the incumbent objective after every accepted move.
    pub record_trace: bool,
}

impl Default for CrowsOptions {
    fn default() -> Self {
        Self {
            restarts: 4,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CrowsOutcome {
    pub design: Design,
    pub ue_s2: f64,
    /// Index of the winning restart.
    pub restart: usize,
    pub proposals: u64,
    pub accepted: u64,
    /// Objective `Σ_{i<j} s_ij²` after each accepted move of the winning restart.
    pub trace: Vec<i128>,
}

pub fn construct_crows(spec: &DesignSpec) -> Result<Design> {
    construct_crows_with(spec, &CrowsOptions::default()).map(|o| o.design)
}

pub fn construct_crows_with(spec: &DesignSpec, opts: &CrowsOptions) -> Result<CrowsOutcome> {
    if spec.method != DesignMethod::Crows {
        return Err(Error::InvalidSpec("construct_crows needs method = crows".into()));
    }
    spec.validate()?;
    if spec.k > spec.n * spec.c_max {
        return Err(Error::Infeasible(format!(
            "{} compounds cannot each appear once in {} pools of at most {}",
            spec.k, spec.n, spec.c_max
        )));
    }
    if spec.budget.is_zero() {
        return Err(Error::InvalidSpec("optimizer budget is zero".into()));
    }
    let restarts = opts.restarts.max(1);
    let runs: Vec<RunResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, r as u64));
            let state = ExchangeState::random_start(spec, &mut rng);
            let limit = match spec.budget {
                Budget::Iterations(total) => Limit::Proposals(split_budget(total, restarts, r)),
                Budget::Seconds(s) => Limit::Deadline(
                    Instant::now() + Duration::from_secs_f64(s / restarts as f64),
                ),
            };
            state.search(&mut rng, limit, opts.record_trace)
        })
        .collect();
    let (best_idx, best) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.objective.cmp(&b.objective).then(ia.cmp(ib)))
        .expect("at least one restart");
    let design = Design::from_flat(spec.n, spec.k, best.membership, spec.clone());
    let ue_s2 = best.objective as f64 / (spec.k as f64 * (spec.k as f64 + 1.0) / 2.0);
    Ok(CrowsOutcome {
        design,
        ue_s2,
        restart: best_idx,
        proposals: best.proposals,
        accepted: best.accepted,
        trace: best.trace,
    })
}

fn split_budget(total: u64, parts: usize, idx: usize) -> u64 {
    let parts = parts as u64;
    total / parts + u64::from((idx as u64) < total % parts)
}

enum Limit {
    Proposals(u64),
    Deadline(Instant),
}

struct RunResult {
    membership: Vec<u8>,
    objective: i128,
    proposals: u64,
    accepted: u64,
    trace: Vec<i128>,
}

struct ExchangeState {
    n: usize,
    k: usize,
    c_max: usize,
    /// Row-major `n × (k+1)`; column 0 is the intercept.
    l: Vec<i8>,
    /// `(k+1) × (k+1)` symmetric.
    s: Vec<i64>,
    pools: Vec<Vec<u32>>,
    replication: Vec<usize>,
    objective: i128,
}

impl ExchangeState {
    fn random_start(spec: &DesignSpec, rng: &mut ChaCha8Rng) -> Self {
        let (n, k, c) = (spec.n, spec.k, spec.c_max);
        let mut all: Vec<u32> = (0..k as u32).collect();
        let mut pools: Vec<Vec<u32>> = (0..n)
            .map(|_| {
                let (chosen, _) = all.partial_shuffle(rng, c);
                chosen.to_vec()
            })
            .collect();
        let mut replication = vec![0usize; k];
        for pool in &pools {
            for &j in pool {
                replication[j as usize] += 1;
            }
        }
        // every compound at least once: swap each missing one in for a
        // member that is replicated elsewhere
        for j in 0..k {
            while replication[j] == 0 {
                let i = rng.random_range(0..n);
                let pos = rng.random_range(0..pools[i].len());
                let out = pools[i][pos] as usize;
                if replication[out] >= 2 {
                    pools[i][pos] = j as u32;
                    replication[out] -= 1;
                    replication[j] += 1;
                }
            }
        }
        let width = k + 1;
        let mut l = vec![-1i8; n * width];
        for (i, pool) in pools.iter().enumerate() {
            l[i * width] = 1;
            for &j in pool {
                l[i * width + j as usize + 1] = 1;
            }
        }
        let mut s = vec![0i64; width * width];
        for p in 0..width {
            for q in p..width {
                let v: i64 = (0..n)
                    .map(|i| (l[i * width + p] * l[i * width + q]) as i64)
                    .sum();
                s[p * width + q] = v;
                s[q * width + p] = v;
            }
        }
        let mut objective: i128 = 0;
        for p in 0..width {
            for q in p + 1..width {
                objective += (s[p * width + q] as i128).pow(2);
            }
        }
        Self {
            n,
            k,
            c_max: c,
            l,
            s,
            pools,
            replication,
            objective,
        }
    }

    #[inline]
    fn width(&self) -> usize {
        self.k + 1
    }

    #[inline]
    fn x(&self, i: usize, col: usize) -> i8 {
        self.l[i * self.width() + col]
    }

    /// Objective change for moving compound `p` (L column `p+1`) out of and
    /// `q` into well `i`. `s_pq` itself is unchanged by such a swap.
    fn delta_row_swap(&self, i: usize, p: usize, q: usize) -> i64 {
        let w = self.width();
        let (cp, cq) = (p + 1, q + 1);
        let row = &self.l[i * w..(i + 1) * w];
        let sp = &self.s[cp * w..(cp + 1) * w];
        let sq = &self.s[cq * w..(cq + 1) * w];
        let mut acc: i64 = 0;
        for l in 0..w {
            acc += row[l] as i64 * (sq[l] - sp[l]);
        }
        // drop the l ∈ {p, q} terms
        acc -= row[cp] as i64 * (sq[cp] - sp[cp]);
        acc -= row[cq] as i64 * (sq[cq] - sp[cq]);
        4 * acc + 8 * (self.k as i64 - 1)
    }

    fn apply_row_swap(&mut self, i: usize, p: usize, q: usize) {
        self.apply_column_change(p + 1, &[(i, -2)]);
        self.apply_column_change(q + 1, &[(i, 2)]);
        let pool = &mut self.pools[i];
        let pos = pool.iter().position(|&j| j as usize == p).expect("member");
        pool[pos] = q as u32;
        self.replication[p] -= 1;
        self.replication[q] += 1;
    }

    /// Objective change when L column `col` changes by `d` at the given rows.
    fn delta_column(&self, col: usize, changes: &[(usize, i64)]) -> i64 {
        let w = self.width();
        let srow = &self.s[col * w..(col + 1) * w];
        let mut acc: i64 = 0;
        match changes {
            [(i, d)] => {
                let row = &self.l[i * w..(i + 1) * w];
                let mut dot: i64 = 0;
                for l in 0..w {
                    dot += row[l] as i64 * srow[l];
                }
                dot -= row[col] as i64 * srow[col];
                acc += 2 * d * dot + d * d * self.k as i64;
            }
            _ => {
                for l in 0..w {
                    if l == col {
                        continue;
                    }
                    let delta: i64 = changes
                        .iter()
                        .map(|&(i, d)| d * self.x(i, l) as i64)
                        .sum();
                    acc += 2 * delta * srow[l] + delta * delta;
                }
            }
        }
        acc
    }

    fn apply_column_change(&mut self, col: usize, changes: &[(usize, i64)]) {
        let w = self.width();
        for l in 0..w {
            if l == col {
                continue;
            }
            let delta: i64 = changes
                .iter()
                .map(|&(i, d)| d * self.x(i, l) as i64)
                .sum();
            if delta != 0 {
                let old = self.s[col * w + l];
                let new = old + delta;
                self.objective += (new as i128).pow(2) - (old as i128).pow(2);
                self.s[col * w + l] = new;
                self.s[l * w + col] = new;
            }
        }
        for &(i, d) in changes {
            let cell = &mut self.l[i * w + col];
            *cell = (*cell as i64 + d) as i8;
        }
    }

    fn search(mut self, rng: &mut ChaCha8Rng, limit: Limit, record: bool) -> RunResult {
        let mut proposals: u64 = 0;
        let mut accepted: u64 = 0;
        let mut trace = Vec::new();
        if record {
            trace.push(self.objective);
        }
        loop {
            match limit {
                Limit::Proposals(max) if proposals >= max => break,
                Limit::Deadline(t) if proposals % 256 == 0 && Instant::now() >= t => break,
                _ => {}
            }
            proposals += 1;
            let before = self.objective;
            if self.propose(rng) {
                accepted += 1;
                debug_assert!(self.objective <= before);
                if record {
                    trace.push(self.objective);
                }
            }
        }
        let w = self.width();
        let mut membership = vec![0u8; self.n * self.k];
        for i in 0..self.n {
            for j in 0..self.k {
                membership[i * self.k + j] = u8::from(self.l[i * w + j + 1] == 1);
            }
        }
        RunResult {
            membership,
            objective: self.objective,
            proposals,
            accepted,
            trace,
        }
    }

    /// Draws one move and applies it iff the objective does not increase.
    fn propose(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let roll: f64 = rng.random();
        if roll < 0.45 {
            self.propose_row_swap(rng, false)
        } else if roll < 0.75 {
            self.propose_row_swap(rng, true)
        } else if roll < 0.92 {
            self.propose_column_move(rng)
        } else {
            self.propose_flip(rng)
        }
    }

    fn propose_row_swap(&mut self, rng: &mut ChaCha8Rng, targeted: bool) -> bool {
        let (i, p, q) = if targeted {
            // least replicated compound enters a pool, replacing that pool's
            // most replicated member
            let q = argext(&self.replication, rng, |a, b| a < b);
            let i = rng.random_range(0..self.n);
            if self.x(i, q + 1) == 1 || self.pools[i].is_empty() {
                return false;
            }
            let members: Vec<usize> = self.pools[i].iter().map(|&j| j as usize).collect();
            let reps: Vec<usize> = members.iter().map(|&j| self.replication[j]).collect();
            let p = members[argext(&reps, rng, |a, b| a > b)];
            (i, p, q)
        } else {
            let i = rng.random_range(0..self.n);
            if self.pools[i].is_empty() || self.pools[i].len() == self.k {
                return false;
            }
            let p = self.pools[i][rng.random_range(0..self.pools[i].len())] as usize;
            let q = rng.random_range(0..self.k);
            if self.x(i, q + 1) == 1 {
                return false;
            }
            (i, p, q)
        };
        if self.replication[p] < 2 {
            return false;
        }
        if self.delta_row_swap(i, p, q) <= 0 {
            self.apply_row_swap(i, p, q);
            true
        } else {
            false
        }
    }

    fn propose_column_move(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let p = rng.random_range(0..self.k);
        let from = rng.random_range(0..self.n);
        let to = rng.random_range(0..self.n);
        if from == to
            || self.x(from, p + 1) != 1
            || self.x(to, p + 1) != -1
            || self.pools[to].len() >= self.c_max
        {
            return false;
        }
        let changes = [(from, -2i64), (to, 2i64)];
        if self.delta_column(p + 1, &changes) <= 0 {
            self.apply_column_change(p + 1, &changes);
            let pos = self.pools[from].iter().position(|&j| j as usize == p).expect("member");
            self.pools[from].swap_remove(pos);
            self.pools[to].push(p as u32);
            true
        } else {
            false
        }
    }

    fn propose_flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let i = rng.random_range(0..self.n);
        let p = rng.random_range(0..self.k);
        let present = self.x(i, p + 1) == 1;
        if present && self.replication[p] < 2 {
            return false;
        }
        if !present && self.pools[i].len() >= self.c_max {
            return false;
        }
        let d: i64 = if present { -2 } else { 2 };
        if self.delta_column(p + 1, &[(i, d)]) <= 0 {
            self.apply_column_change(p + 1, &[(i, d)]);
            if present {
                let pos = self.pools[i].iter().position(|&j| j as usize == p).expect("member");
                self.pools[i].swap_remove(pos);
                self.replication[p] -= 1;
            } else {
                self.pools[i].push(p as u32);
                self.replication[p] += 1;
            }
            true
        } else {
            false
        }
    }
}

/// Index of an extreme element under `better`, ties broken uniformly.
fn argext(v: &[usize], rng: &mut ChaCha8Rng, better: impl Fn(usize, usize) -> bool) -> usize {
    let mut best = 0;
    let mut ties = 1u32;
    for (idx, &x) in v.iter().enumerate().skip(1) {
        if better(x, v[best]) {
            best = idx;
            ties = 1;
        } else if x == v[best] {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = idx;
            }
        }
    }
    best
}
