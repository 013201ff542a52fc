//! Wrapper feature selection with a generational GA: tournament selection of
//! size 2, two-point crossover, per-bit mutation and elitism of one. Fitness
//! is the k-fold CV accuracy of the SVM restricted to the candidate mask.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::cross_val_accuracy;
use super::SvmError;
use crate::calibration::{FeatureVector, Label};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub folds: usize,
    pub c_reg: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 200,
            generations: 20,
            mutation_rate: 1.0 / 116.0,
            folds: 3,
            c_reg: 8.0,
            gamma: 1.0 / 116.0,
            seed: 0,
        }
    }
}

type Mask = Vec<bool>;

struct Evaluator<'a> {
    data: &'a [FeatureVector],
    cfg: &'a GaConfig,
    cache: HashMap<Mask, f64>,
}

impl Evaluator<'_> {
    fn fitness(&mut self, pop: &[Mask]) -> Result<Vec<f64>, SvmError> {
        let mut todo: Vec<&Mask> = pop.iter().filter(|m| !self.cache.contains_key(*m)).collect();
        todo.sort();
        todo.dedup();
        let fresh = todo
            .par_iter()
            .map(|m| {
                if m.iter().any(|&b| b) {
                    cross_val_accuracy(self.data, m, self.cfg.c_reg, self.cfg.gamma, self.cfg.folds, self.cfg.seed)
                } else {
                    Ok(0.0)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (m, f) in todo.into_iter().zip(fresh) {
            self.cache.insert(m.clone(), f);
        }
        Ok(pop.iter().map(|m| self.cache[m]).collect())
    }
}

fn best_index(fitness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fitness.iter().enumerate() {
        if f > fitness[best] {
            best = i;
        }
    }
    best
}

fn tournament<'a>(pop: &'a [Mask], fitness: &[f64], rng: &mut ChaCha8Rng) -> &'a Mask {
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    if fitness[b] > fitness[a] {
        &pop[b]
    } else {
        &pop[a]
    }
}

fn two_point(a: &Mask, b: &Mask, rng: &mut ChaCha8Rng) -> (Mask, Mask) {
    let n = a.len();
    let mut p = rng.gen_range(0..=n);
    let mut q = rng.gen_range(0..=n);
    if p > q {
        std::mem::swap(&mut p, &mut q);
    }
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    c1[p..q].copy_from_slice(&b[p..q]);
    c2[p..q].copy_from_slice(&a[p..q]);
    (c1, c2)
}

fn mutate(m: &mut Mask, rate: f64, rng: &mut ChaCha8Rng) {
    for bit in m.iter_mut() {
        if rng.gen::<f64>() < rate {
            *bit = !*bit;
        }
    }
}

/// Returns the best mask found after `cfg.generations` generations.
pub fn ga_select(data: &[FeatureVector], cfg: &GaConfig) -> Result<Mask, SvmError> {
    if cfg.population < 2 || !cfg.population.is_multiple_of(2) {
        return Err(SvmError::BadConfig(format!("population {} must be even and ≥ 2", cfg.population)));
    }
    if !(0.0..=1.0).contains(&cfg.mutation_rate) {
        return Err(SvmError::BadConfig(format!("mutation rate {}", cfg.mutation_rate)));
    }
    let has = |l| data.iter().any(|d| d.label == l);
    if !(has(Label::Cover) && has(Label::Stego)) {
        return Err(SvmError::SingleClass);
    }
    let dim = data[0].values.len();
    let mut rng = seed::rng(seed::derive(cfg.seed, seed::stream::GA, 0));
    let mut eval = Evaluator {
        data,
        cfg,
        cache: HashMap::new(),
    };
    let mut pop: Vec<Mask> = (0..cfg.population)
        .map(|_| (0..dim).map(|_| rng.gen::<bool>()).collect())
        .collect();
    let mut fitness = eval.fitness(&pop)?;
    for generation in 0..cfg.generations {
        let elite = pop[best_index(&fitness)].clone();
        let mut next = vec![elite];
        while next.len() < cfg.population {
            let a = tournament(&pop, &fitness, &mut rng);
            let b = tournament(&pop, &fitness, &mut rng);
            let (mut c1, mut c2) = two_point(a, b, &mut rng);
            mutate(&mut c1, cfg.mutation_rate, &mut rng);
            mutate(&mut c2, cfg.mutation_rate, &mut rng);
            next.push(c1);
            if next.len() < cfg.population {
                next.push(c2);
            }
        }
        pop = next;
        fitness = eval.fitness(&pop)?;
        log::debug!("ga generation {generation}: best fitness {:.4}", fitness[best_index(&fitness)]);
    }
    Ok(pop.swap_remove(best_index(&fitness)))
}
