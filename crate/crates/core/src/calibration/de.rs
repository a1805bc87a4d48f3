//! Differential Evolution, DE/rand/1/bin.
//!
//! Each generation draws every trial vector from the seeded generator first,
//! evaluates the trials (optionally on the rayon pool), then runs greedy
//! selection in index order. The trajectory therefore depends only on the
//! seed, never on thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_slice, Execution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeError {
    #[error("invalid DE configuration: {0}")]
    Config(String),
}

/// Search box, one `(low, high)` pair per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(pub Vec<(f64, f64)>);

impl Bounds {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.0).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    fn validate(&self) -> Result<(), DeError> {
        if self.0.is_empty() {
            return Err(DeError::Config("bounds are empty".into()));
        }
        for (i, (lo, hi)) in self.0.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(DeError::Config(format!("bound {i} is not finite")));
            }
            if lo >= hi {
                return Err(DeError::Config(format!("bound {i}: low {lo} >= high {hi}")));
            }
        }
        Ok(())
    }
}

/// Folds `v` back into `[lo, hi]` by mirror reflection at the walls.
pub fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    if (lo..=hi).contains(&v) {
        return v;
    }
    let width = hi - lo;
    let y = (v - lo).rem_euclid(2.0 * width);
    let folded = if y > width { 2.0 * width - y } else { y };
    (lo + folded).clamp(lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// `None` means ten individuals per dimension.
    pub population_size: Option<usize>,
    /// Differential weight F.
    pub weight_f: f64,
    /// Crossover probability CR.
    pub crossover_cr: f64,
    pub max_generations: usize,
    /// Minimum improvement of the best value over `stall_generations`.
    pub tolerance: f64,
    pub stall_generations: usize,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population_size: None,
            weight_f: 0.8,
            crossover_cr: 0.9,
            max_generations: 1500,
            tolerance: 1e-10,
            stall_generations: 200,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl DeConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn population_for(&self, dim: usize) -> usize {
        self.population_size.unwrap_or(10 * dim)
    }

    pub fn validate(&self, bounds: &Bounds) -> Result<(), DeError> {
        bounds.validate()?;
        let np = self.population_for(bounds.dim());
        if np < 4 {
            return Err(DeError::Config(format!("population {np} is below 4")));
        }
        if !(self.weight_f > 0.0 && self.weight_f <= 2.0) {
            return Err(DeError::Config(format!("F = {} outside (0, 2]", self.weight_f)));
        }
        if !(0.0..=1.0).contains(&self.crossover_cr) {
            return Err(DeError::Config(format!("CR = {} outside [0, 1]", self.crossover_cr)));
        }
        if self.max_generations == 0 {
            return Err(DeError::Config("max_generations must be positive".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(DeError::Config("tolerance must be non-negative".into()));
        }
        if self.stall_generations == 0 {
            return Err(DeError::Config("stall_generations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    /// Generations run after initialization.
    pub generations: usize,
    /// Stopped on the stall criterion rather than the generation cap.
    pub converged: bool,
    pub evaluations: usize,
    /// Objective values that were NaN or infinite (ranked as +inf).
    pub non_finite_evaluations: usize,
    /// Best value after initialization and after each generation.
    pub trace: Vec<f64>,
}

fn rank(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` over `bounds`.
pub fn de_minimize<F>(f: F, bounds: &Bounds, cfg: &DeConfig) -> Result<DeOutcome, DeError>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    de_minimize_observed(f, bounds, cfg, |_, _| {})
}

/// [`de_minimize`] with a hook receiving `(generation, population)` after
/// initialization (generation 0) and after every selection step.
pub fn de_minimize_observed<F, O>(f: F, bounds: &Bounds, cfg: &DeConfig, mut observe: O) -> Result<DeOutcome, DeError>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
    O: FnMut(usize, &[Vec<f64>]),
{
    cfg.validate(bounds)?;
    let dim = bounds.dim();
    let np = cfg.population_for(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut non_finite = 0usize;

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.0.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect();
    let mut fit: Vec<f64> = map_slice(cfg.execution, &pop, |x| f(x));
    non_finite += fit.iter().filter(|v| !v.is_finite()).count();
    fit.iter_mut().for_each(|v| *v = rank(*v));
    let mut evaluations = np;
    observe(0, &pop);

    let mut best_idx = argmin(&fit);
    let mut trace = vec![fit[best_idx]];
    let mut converged = false;
    let mut generations = 0;

    while generations < cfg.max_generations {
        let trials: Vec<Vec<f64>> = (0..np).map(|i| trial_vector(&pop, i, bounds, cfg, &mut rng)).collect();
        let trial_fit: Vec<f64> = map_slice(cfg.execution, &trials, |x| f(x));
        evaluations += np;

        for (i, (trial, tf)) in trials.into_iter().zip(trial_fit).enumerate() {
            if !tf.is_finite() {
                non_finite += 1;
            }
            let tf = rank(tf);
            if tf <= fit[i] {
                pop[i] = trial;
                fit[i] = tf;
            }
        }
        generations += 1;
        best_idx = argmin(&fit);
        trace.push(fit[best_idx]);
        observe(generations, &pop);

        if generations >= cfg.stall_generations {
            let then = trace[generations - cfg.stall_generations];
            let now = trace[generations];
            if then - now < cfg.tolerance {
                converged = true;
                break;
            }
        }
    }

    Ok(DeOutcome {
        best: pop[best_idx].clone(),
        value: fit[best_idx],
        generations,
        converged,
        evaluations,
        non_finite_evaluations: non_finite,
        trace,
    })
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

fn trial_vector(pop: &[Vec<f64>], i: usize, bounds: &Bounds, cfg: &DeConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let np = pop.len();
    let pick = |rng: &mut ChaCha8Rng, taken: &[usize]| loop {
        let r = rng.random_range(0..np);
        if !taken.contains(&r) {
            break r;
        }
    };
    let r1 = pick(rng, &[i]);
    let r2 = pick(rng, &[i, r1]);
    let r3 = pick(rng, &[i, r1, r2]);

    let dim = bounds.dim();
    let forced = rng.random_range(0..dim);
    let target = &pop[i];
    (0..dim)
        .map(|j| {
            let cross = rng.random::<f64>() < cfg.crossover_cr;
            if j == forced || cross {
                let (lo, hi) = bounds.0[j];
                let v = pop[r1][j] + cfg.weight_f * (pop[r2][j] - pop[r3][j]);
                reflect(v, lo, hi)
            } else {
                target[j]
            }
        })
        .collect()
}
