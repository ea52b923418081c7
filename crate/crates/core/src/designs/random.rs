use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Design, DesignMethod, DesignSpec};
use crate::error::{Error, Result};

/// Random pools with every pool of size `c` and every compound in exactly
/// `a = n c / k` pools. Built by dealing `a` copies of each compound into the
/// `n c` slots, then repairing repeated compounds with cross-pool swaps.
pub fn construct_random_balanced(spec: &DesignSpec) -> Result<Design> {
    if spec.method != DesignMethod::Random {
        return Err(Error::InvalidSpec("construct_random_balanced needs method = random".into()));
    }
    spec.validate()?;
    let (n, k, c) = (spec.n, spec.k, spec.c_max);
    let a = n * c / k;
    if a == 0 {
        return Err(Error::InvalidSpec(format!(
            "n*c = {} is smaller than k = {k}; nc = ka has no positive integral a",
            n * c
        )));
    }
    if a > n {
        return Err(Error::Infeasible(format!("replication {a} exceeds {n} wells")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut slots: Vec<usize> = (0..k).flat_map(|j| std::iter::repeat_n(j, a)).collect();
    slots.shuffle(&mut rng);
    let mut pools: Vec<Vec<usize>> = slots.chunks(c).map(<[usize]>::to_vec).collect();

    let mut guard = 0usize;
    while let Some((i, pos)) = find_repeat(&pools) {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::Infeasible("could not repair repeated compounds".into()));
        }
        let j = pools[i][pos];
        let other = rng.random_range(0..n);
        if other == i || pools[other].contains(&j) {
            continue;
        }
        let opos = rng.random_range(0..c);
        let candidate = pools[other][opos];
        if pools[i].contains(&candidate) {
            continue;
        }
        pools[other][opos] = j;
        pools[i][pos] = candidate;
    }

    let mut membership = vec![0u8; n * k];
    for (i, pool) in pools.iter().enumerate() {
        for &j in pool {
            membership[i * k + j] = 1;
        }
    }
    Ok(Design::from_flat(n, k, membership, spec.clone()))
}

fn find_repeat(pools: &[Vec<usize>]) -> Option<(usize, usize)> {
    for (i, pool) in pools.iter().enumerate() {
        for x in 1..pool.len() {
            if pool[..x].contains(&pool[x]) {
                return Some((i, x));
            }
        }
    }
    None
}
