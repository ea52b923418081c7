//! Genetic algorithm on the MAPS objective `M`.
//!
//! Individuals are stored column-wise (sorted well lists per compound), which
//! makes column crossover a cheap clone and keeps `a_min` easy to enforce.

use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::{Budget, Design, DesignMethod, DesignSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaOptions {
    pub population: usize,
    /// Per-bit flip probability; `None` means `1/(n k)`.
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
    pub tournament: usize,
}

impl Default for GaOptions {
    fn default() -> Self {
        Self {
            population: 50,
            mutation_rate: None,
            elitism: 2,
            tournament: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapsOutcome {
    pub design: Design,
    pub m: f64,
    pub generations: u64,
    /// Best `M` after each generation.
    pub history: Vec<f64>,
}

pub fn construct_maps(spec: &DesignSpec) -> Result<Design> {
    construct_maps_with(spec, &GaOptions::default()).map(|o| o.design)
}

type Columns = Vec<Vec<u16>>;

pub fn construct_maps_with(spec: &DesignSpec, opts: &GaOptions) -> Result<MapsOutcome> {
    if spec.method != DesignMethod::Maps {
        return Err(Error::InvalidSpec("construct_maps needs method = maps".into()));
    }
    spec.validate()?;
    let a_min = spec
        .a_min
        .ok_or_else(|| Error::InvalidSpec("MAPS needs a_min".into()))?;
    let (n, k) = (spec.n, spec.k);
    if a_min < 1 {
        return Err(Error::InvalidSpec("a_min must be at least 1".into()));
    }
    if a_min > n {
        return Err(Error::Infeasible(format!(
            "a_min = {a_min} exceeds the number of wells {n}"
        )));
    }
    if n > u16::MAX as usize {
        return Err(Error::InvalidSpec("too many wells for the GA encoding".into()));
    }
    if spec.budget.is_zero() {
        return Err(Error::InvalidSpec("optimizer budget is zero".into()));
    }
    if opts.population < 2 || opts.elitism >= opts.population || opts.tournament < 1 {
        return Err(Error::InvalidConfig(
            "GA needs population >= 2, elitism < population and tournament >= 1".into(),
        ));
    }
    let rate = opts.mutation_rate.unwrap_or(1.0 / (n * k) as f64);
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!("mutation rate {rate} outside [0, 1]")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut scorer = Scorer::new(n, k);
    let mut population: Vec<(f64, Columns)> = (0..opts.population)
        .map(|_| {
            let ind = random_individual(n, k, a_min, &mut rng);
            (scorer.m(&ind), ind)
        })
        .collect();
    sort_population(&mut population);

    let flips = Binomial::new((n * k) as u64, rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let deadline = match spec.budget {
        Budget::Seconds(s) => Some(Instant::now() + Duration::from_secs_f64(s)),
        Budget::Iterations(_) => None,
    };
    let max_generations = match spec.budget {
        Budget::Iterations(g) => g,
        Budget::Seconds(_) => u64::MAX,
    };

    let mut history = Vec::new();
    let mut generations = 0;
    while generations < max_generations {
        if deadline.is_some_and(|t| Instant::now() >= t) {
            break;
        }
        let mut next: Vec<(f64, Columns)> = population[..opts.elitism].to_vec();
        while next.len() < opts.population {
            let pa = tournament(&population, opts.tournament, &mut rng);
            let pb = tournament(&population, opts.tournament, &mut rng);
            let mut child: Columns = (0..k)
                .map(|j| {
                    if rng.random_bool(0.5) {
                        population[pa].1[j].clone()
                    } else {
                        population[pb].1[j].clone()
                    }
                })
                .collect();
            mutate(&mut child, n, a_min, flips.sample(&mut rng), &mut rng);
            next.push((scorer.m(&child), child));
        }
        sort_population(&mut next);
        population = next;
        history.push(population[0].0);
        generations += 1;
    }

    let (m, best) = population.swap_remove(0);
    let mut membership = vec![0u8; n * k];
    for (j, col) in best.iter().enumerate() {
        for &i in col {
            membership[i as usize * k + j] = 1;
        }
    }
    Ok(MapsOutcome {
        design: Design::from_flat(n, k, membership, spec.clone()),
        m,
        generations,
        history,
    })
}

/// Each column gets exactly `a_min` wells.
pub(crate) fn random_individual(n: usize, k: usize, a_min: usize, rng: &mut impl Rng) -> Columns {
    (0..k)
        .map(|_| {
            let mut col: Vec<u16> = sample(rng, n, a_min).into_iter().map(|i| i as u16).collect();
            col.sort_unstable();
            col
        })
        .collect()
}

fn sort_population(pop: &mut [(f64, Columns)]) {
    // stable, so equal scores keep their (seeded) order
    pop.sort_by(|a, b| a.0.total_cmp(&b.0));
}

fn tournament(pop: &[(f64, Columns)], size: usize, rng: &mut impl Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size {
        let c = rng.random_range(0..pop.len());
        if pop[c].0 < pop[best].0 {
            best = c;
        }
    }
    best
}

/// Bit flips; a 1→0 flip that would break `a_min` becomes a move to a
/// random empty well of the same column.
fn mutate(ind: &mut Columns, n: usize, a_min: usize, count: u64, rng: &mut impl Rng) {
    let k = ind.len();
    for _ in 0..count {
        let j = rng.random_range(0..k);
        let i = rng.random_range(0..n) as u16;
        let col = &mut ind[j];
        match col.binary_search(&i) {
            Ok(pos) => {
                col.remove(pos);
                if col.len() < a_min {
                    if col.len() + 1 >= n {
                        // nowhere else to go
                        col.insert(pos, i);
                        continue;
                    }
                    loop {
                        let t = rng.random_range(0..n) as u16;
                        if t != i {
                            if let Err(at) = col.binary_search(&t) {
                                col.insert(at, t);
                                break;
                            }
                        }
                    }
                }
            }
            Err(pos) => col.insert(pos, i),
        }
    }
}

/// Reusable scratch space for evaluating `M`.
pub(crate) struct Scorer {
    n: usize,
    k: usize,
    counts: Vec<u16>,
    pools: Vec<Vec<u32>>,
}

impl Scorer {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            counts: vec![0; k * k],
            pools: vec![Vec::new(); n],
        }
    }

    pub(crate) fn m(&mut self, ind: &Columns) -> f64 {
        for p in &mut self.pools {
            p.clear();
        }
        let mut total = 0usize;
        for (j, col) in ind.iter().enumerate() {
            total += col.len();
            for &i in col {
                self.pools[i as usize].push(j as u32);
            }
        }
        // Σ_{p<q} o_pq², accumulated as o goes v → v+1 (adds 2v+1)
        let mut sq: u64 = 0;
        for pool in &self.pools {
            for (x, &p) in pool.iter().enumerate() {
                let base = p as usize * self.k;
                for &q in &pool[x + 1..] {
                    let c = &mut self.counts[base + q as usize];
                    sq += 2 * *c as u64 + 1;
                    *c += 1;
                }
            }
        }
        for pool in &self.pools {
            for (x, &p) in pool.iter().enumerate() {
                let base = p as usize * self.k;
                for &q in &pool[x + 1..] {
                    self.counts[base + q as usize] = 0;
                }
            }
        }
        let mean = total as f64 / self.k as f64;
        let dev: f64 = ind.iter().map(|c| (c.len() as f64 - mean).powi(2)).sum();
        debug_assert!(self.n > 0);
        2.0 * sq as f64 + dev
    }
}
