//! Seeded random models for audits.
//!
//! μ is uniform on the simplex (normalized `Exp(1)` draws). Channel rows are
//! drawn from a pool of `r` independent uniform-simplex rows, `r` uniform in
//! `1..=|X_N|`, and each input picks a pool row uniformly. With `r < |X_N|`
//! inputs share rows, so channel partitions and traces are nontrivial. When
//! `|Z| = 3`, γ merges two output labels with probability 1/4.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::channel::{Channel, InputDistribution, Model};
use crate::error::{Error, Result};
use crate::partition::{FiniteSet, Partition, ProductSpace, MAX_INPUTS};

/// Shape limits for generated models.
#[derive(Debug, Clone, Copy)]
pub struct RandomShape {
    pub max_alphabet: usize,
    pub max_output: usize,
}

impl Default for RandomShape {
    fn default() -> Self {
        RandomShape {
            max_alphabet: 3,
            max_output: 3,
        }
    }
}

fn simplex<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len)
        .map(|_| rng.sample::<f64, _>(Exp1) + f64::MIN_POSITIVE)
        .collect();
    let z: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|v| v / z).collect();
    // Push the rounding remainder into the largest entry.
    let rest: f64 = 1.0 - p.iter().sum::<f64>();
    let imax = (0..len).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
    p[imax] += rest;
    p
}

/// One random model with `n` inputs.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, shape: RandomShape) -> Result<Model> {
    if n == 0 || n > MAX_INPUTS {
        return Err(Error::InvalidParameter(format!(
            "random model needs 1..={MAX_INPUTS} inputs, got {n}"
        )));
    }
    if shape.max_alphabet < 2 || shape.max_output < 2 {
        return Err(Error::InvalidParameter(
            "alphabet and output sizes must allow at least 2 states".into(),
        ));
    }
    let sizes: Vec<usize> = (0..n)
        .map(|_| rng.random_range(2..=shape.max_alphabet))
        .collect();
    let z = rng.random_range(2..=shape.max_output);
    let space = ProductSpace::from_sizes(&sizes)?;
    let size = space.size(space.full());
    let mu = InputDistribution::new(space.clone(), simplex(rng, size))?;
    let pool_size = rng.random_range(1..=size);
    let pool: Vec<Vec<f64>> = (0..pool_size).map(|_| simplex(rng, z)).collect();
    let rows = (0..size)
        .map(|_| pool[rng.random_range(0..pool_size)].clone())
        .collect();
    let nu = Channel::new(space, FiniteSet::indexed(z)?, rows)?;
    let model = Model::new(mu, nu)?;
    if z == 3 && rng.random_bool(0.25) {
        let keep = rng.random_range(0..3);
        let ids: Vec<usize> = (0..3).map(|c| usize::from(c == keep)).collect();
        return model.with_gamma(Partition::from_keys(ids)?);
    }
    Ok(model)
}

/// Seed of the `index`-th model of a corpus.
pub fn corpus_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// `count` models. With `n = None` the input count alternates 2, 3, 2, ...
pub fn random_corpus(
    seed: u64,
    count: usize,
    n: Option<usize>,
    shape: RandomShape,
) -> Result<Vec<Model>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(corpus_seed(seed, i));
            random_model(&mut rng, n.unwrap_or(2 + i % 2), shape)
        })
        .collect()
}
