//! Differential evolution, DE/rand/1/bin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DEConfig {
    /// Defaults to ten members per search dimension.
    pub population_size: Option<usize>,
    pub generations_max: usize,
    /// Differential weight.
    pub f: f64,
    /// Crossover rate.
    pub cr: f64,
    /// Search interval applied to every dimension.
    pub bounds: (f64, f64),
    /// Best-value improvement below this counts as a stagnant generation.
    pub bic_tol: f64,
    pub stagnation_patience: usize,
    pub seed: u64,
    /// Start inner fits from the best solution so far rather than the
    /// unpenalized estimate.
    pub warm_start: bool,
}

impl Default for DEConfig {
    fn default() -> Self {
        DEConfig {
            population_size: None,
            generations_max: 60,
            f: 0.8,
            cr: 0.9,
            bounds: (0.0, 1.0),
            bic_tol: 1e-4,
            stagnation_patience: 10,
            seed: 1,
            warm_start: false,
        }
    }
}

impl DEConfig {
    pub fn population_for(&self, dim: usize) -> usize {
        self.population_size.unwrap_or(10 * dim.max(1))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !(self.cr > 0.0 && self.cr <= 1.0) {
            return Err(Error::InvalidConfig(format!("crossover rate must lie in (0, 1], got {}", self.cr)));
        }
        if !(self.f > 0.0 && self.f < 2.0) {
            return Err(Error::InvalidConfig(format!("differential weight must lie in (0, 2), got {}", self.f)));
        }
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("bounds must satisfy 0 <= lo < hi < inf, got [{lo}, {hi}]")));
        }
        if self.population_for(dim) < 4 {
            return Err(Error::InvalidConfig("population size must be at least 4".into()));
        }
        if self.generations_max == 0 || self.stagnation_patience == 0 {
            return Err(Error::InvalidConfig("generation limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DEOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best value after initialization and after every generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub generations: usize,
}

/// Minimizes `objective` over the box `config.bounds^dim`.
///
/// The objective receives the candidate and its generation index (0 for the
/// initial population). Candidates within a generation are evaluated in
/// parallel; all random draws happen serially beforehand, so the result is
/// identical for any thread count.
pub fn de_minimize<F>(objective: F, dim: usize, config: &DEConfig) -> Result<DEOutcome>
where
    F: Fn(&[f64], usize) -> f64 + Sync,
{
    config.validate(dim)?;
    if dim == 0 {
        return Err(Error::InvalidConfig("search dimension must be positive".into()));
    }
    let np = config.population_for(dim);
    let (lo, hi) = config.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut population: Vec<Vec<f64>> =
        (0..np).map(|_| (0..dim).map(|_| rng.random_range(lo..=hi)).collect()).collect();
    let eval = |pop: &[Vec<f64>], generation: usize| -> Vec<f64> {
        pop.par_iter()
            .map(|x| {
                let v = objective(x, generation);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            })
            .collect()
    };
    let mut values = eval(&population, 0);
    let mut evaluations = np;

    let best_of = |vals: &[f64]| -> usize {
        let mut b = 0;
        for (i, v) in vals.iter().enumerate() {
            if *v < vals[b] {
                b = i;
            }
        }
        b
    };
    let mut best_idx = best_of(&values);
    let mut trace = vec![values[best_idx]];
    let mut stagnant = 0;
    let mut generations = 0;

    for generation in 1..=config.generations_max {
        generations = generation;
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.random_range(0..np);
                    if r != i {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let r3 = loop {
                    let r = pick();
                    if r != r1 && r != r2 {
                        break r;
                    }
                };
                let forced = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        let cross: f64 = rng.random();
                        if j == forced || cross < config.cr {
                            let m = population[r1][j] + config.f * (population[r2][j] - population[r3][j]);
                            if (lo..=hi).contains(&m) {
                                m
                            } else {
                                // Out-of-bounds coordinates are redrawn uniformly
                                // rather than clipped, so members cannot pile up on
                                // a bound and lose all spread.
                                rng.random_range(lo..=hi)
                            }
                        } else {
                            population[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_values = eval(&trials, generation);
        evaluations += np;
        for (i, (trial, value)) in trials.into_iter().zip(trial_values).enumerate() {
            if value <= values[i] {
                population[i] = trial;
                values[i] = value;
            }
        }
        let previous = values[best_idx];
        best_idx = best_of(&values);
        let current = values[best_idx];
        trace.push(current);
        let improvement = previous - current;
        if improvement.is_nan() || improvement < config.bic_tol {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        if stagnant >= config.stagnation_patience {
            break;
        }
    }

    Ok(DEOutcome { best: population[best_idx].clone(), best_value: values[best_idx], trace, evaluations, generations })
}
