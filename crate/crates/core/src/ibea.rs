//! IBEA with the binary additive epsilon indicator.
//!
//! Fitness is `F(x) = -sum_{y != x} exp(-I(y, x) / kappa)`. Objectives are
//! min-max normalized per population before the indicator is taken, which
//! bounds `|I|` by 1 but still leaves terms up to `exp(1 / kappa)`; with the
//! usual `kappa = 0.001` that is far outside `f64`. Fitness is therefore kept
//! as its log-magnitude `L(x) = ln(sum exp(-I(y, x) / kappa))`, so
//! `F(x) = -exp(L(x))` and a lower fitness is a larger `L`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::engine::{Individual, RunRng, Selection};
use crate::rng::Draws;

/// Additive epsilon indicator under maximization: the smallest `e` such
/// that `a + e` weakly dominates `b`.
pub fn eps_indicator(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| y - x)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Rescales every objective to `[0, 1]` over `points`. Objectives with zero
/// range map to 0 for every point.
pub fn normalize<V: AsRef<[f64]>>(points: &[V]) -> Vec<Vec<f64>> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let m = first.as_ref().len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for p in points {
        for (i, &v) in p.as_ref().iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    points
        .iter()
        .map(|p| {
            p.as_ref()
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let range = hi[i] - lo[i];
                    if range > 0.0 {
                        (v - lo[i]) / range
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Fitness values of a population in log-magnitude form.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorFitness {
    log_magnitude: Vec<f64>,
}

impl IndicatorFitness {
    pub fn len(&self) -> usize {
        self.log_magnitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_magnitude.is_empty()
    }

    /// `ln(-F(x))`; `-inf` for an empty sum.
    pub fn log_magnitude(&self, i: usize) -> f64 {
        self.log_magnitude[i]
    }

    /// `F(x)` itself. Underflows to `-0.0` or overflows to `-inf` when the
    /// log-magnitude leaves the `f64` exponent range.
    pub fn value(&self, i: usize) -> f64 {
        -self.log_magnitude[i].exp()
    }

    /// `Greater` when `i` is fitter than `j`.
    pub fn compare(&self, i: usize, j: usize) -> Ordering {
        self.log_magnitude[j].total_cmp(&self.log_magnitude[i])
    }
}

const PARALLEL_THRESHOLD: usize = 1024;

/// `ln(sum_{y in others} exp(-I(y, x) / kappa))` over normalized points.
fn log_fitness_of(x: usize, points: &[Vec<f64>], others: impl Iterator<Item = usize> + Clone, kappa: f64) -> f64 {
    let exponent = |y: usize| -eps_indicator(&points[y], &points[x]) / kappa;
    let peak = others
        .clone()
        .filter(|&y| y != x)
        .map(exponent)
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    let sum: f64 = others
        .filter(|&y| y != x)
        .map(|y| (exponent(y) - peak).exp())
        .sum();
    peak + sum.ln()
}

/// Fitness of every point of an already normalized population.
pub fn fitness_normalized(points: &[Vec<f64>], kappa: f64) -> IndicatorFitness {
    let n = points.len();
    let one = |x: usize| log_fitness_of(x, points, 0..n, kappa);
    let log_magnitude = if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(one).collect()
    } else {
        (0..n).map(one).collect()
    };
    IndicatorFitness { log_magnitude }
}

/// Fitness of every member of `population`, normalized over the population.
pub fn ibea_fitness<V: AsRef<[f64]>>(population: &[V], kappa: f64) -> IndicatorFitness {
    assert!(kappa > 0.0, "kappa must be positive");
    fitness_normalized(&normalize(population), kappa)
}

/// Below this remaining share of the old sum, an incremental update is
/// replaced by a from-scratch sum to bound cancellation error.
const CANCELLATION_GUARD: f64 = 1e-5;

/// Iterative worst-deletion over a normalized population, updating the
/// fitness of the remaining points after each removal.
pub struct EnvironmentalSelection {
    points: Vec<Vec<f64>>,
    kappa: f64,
    log_magnitude: Vec<f64>,
    alive: Vec<bool>,
    alive_count: usize,
}

impl EnvironmentalSelection {
    pub fn new<V: AsRef<[f64]>>(union: &[V], kappa: f64) -> Self {
        assert!(kappa > 0.0, "kappa must be positive");
        let points = normalize(union);
        let fitness = fitness_normalized(&points, kappa);
        EnvironmentalSelection {
            alive: vec![true; points.len()],
            alive_count: points.len(),
            points,
            kappa,
            log_magnitude: fitness.log_magnitude,
        }
    }

    pub fn normalized(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn alive(&self) -> impl Iterator<Item = usize> + Clone + '_ {
        (0..self.points.len()).filter(|&i| self.alive[i])
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    pub fn log_magnitude(&self, i: usize) -> f64 {
        self.log_magnitude[i]
    }

    /// The living point with the lowest fitness; the earliest index on ties.
    pub fn worst(&self) -> Option<usize> {
        let mut worst: Option<usize> = None;
        for i in self.alive() {
            if worst.is_none_or(|w| self.log_magnitude[i] > self.log_magnitude[w]) {
                worst = Some(i);
            }
        }
        worst
    }

    /// Deletes `r` and removes its term from every remaining fitness.
    pub fn remove(&mut self, r: usize) {
        assert!(self.alive[r], "point {r} already removed");
        self.alive[r] = false;
        self.alive_count -= 1;
        let alive: Vec<usize> = self.alive().collect();
        let update = |x: usize, old: f64| -> f64 {
            let term = -eps_indicator(&self.points[r], &self.points[x]) / self.kappa;
            let ratio = (term - old).exp();
            if ratio <= 1.0 - CANCELLATION_GUARD {
                old + (-ratio).ln_1p()
            } else {
                log_fitness_of(x, &self.points, alive.iter().copied(), self.kappa)
            }
        };
        let updated: Vec<f64> = if alive.len() >= PARALLEL_THRESHOLD {
            alive
                .par_iter()
                .map(|&x| update(x, self.log_magnitude[x]))
                .collect()
        } else {
            alive.iter().map(|&x| update(x, self.log_magnitude[x])).collect()
        };
        for (&x, l) in alive.iter().zip(updated) {
            self.log_magnitude[x] = l;
        }
    }

    /// Removes worst points until `size` remain.
    pub fn reduce_to(&mut self, size: usize) {
        while self.alive_count > size {
            let w = self.worst().expect("non-empty");
            self.remove(w);
        }
    }

    /// Surviving indices in ascending order with their fitness.
    pub fn into_survivors(self) -> (Vec<usize>, IndicatorFitness) {
        let keep: Vec<usize> = self.alive().collect();
        let log_magnitude = keep.iter().map(|&i| self.log_magnitude[i]).collect();
        (keep, IndicatorFitness { log_magnitude })
    }
}

/// Indices (ascending) of the `size` survivors of IBEA environmental
/// selection on `union`.
pub fn ibea_survival<V: AsRef<[f64]>>(union: &[V], size: usize, kappa: f64) -> Vec<usize> {
    let mut env = EnvironmentalSelection::new(union, kappa);
    env.reduce_to(size);
    env.into_survivors().0
}

/// Binary tournament on fitness; ties broken by a coin flip.
pub fn ibea_parent_select<R: Draws + ?Sized>(fitness: &IndicatorFitness, rng: &mut R) -> usize {
    let a = rng.below(fitness.len());
    let b = rng.below(fitness.len());
    match fitness.compare(a, b) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if rng.coin() {
                a
            } else {
                b
            }
        }
    }
}

pub struct IbeaSelection {
    kappa: f64,
    fitness: IndicatorFitness,
}

impl IbeaSelection {
    pub fn new(kappa: f64) -> Self {
        IbeaSelection {
            kappa,
            fitness: IndicatorFitness {
                log_magnitude: Vec::new(),
            },
        }
    }
}

impl Selection for IbeaSelection {
    fn prepare_mating(&mut self, population: &[Individual], _rng: &mut RunRng) {
        self.fitness = ibea_fitness(population, self.kappa);
    }

    fn select_pair(&mut self, _population: &[Individual], rng: &mut RunRng) -> (usize, usize) {
        let a = ibea_parent_select(&self.fitness, rng);
        let b = ibea_parent_select(&self.fitness, rng);
        (a, b)
    }

    fn survive(&mut self, union: Vec<Individual>, size: usize, _rng: &mut RunRng) -> Vec<Individual> {
        let keep = ibea_survival(&union, size, self.kappa);
        let mut keep = keep.into_iter().peekable();
        union
            .into_iter()
            .enumerate()
            .filter_map(|(i, ind)| {
                if keep.peek() == Some(&i) {
                    keep.next();
                    Some(ind)
                } else {
                    None
                }
            })
            .collect()
    }
}
