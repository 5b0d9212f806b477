//! Adaptive epsilon-sampling and epsilon-hood (AeSeH).
//!
//! Survival truncates a large first front by epsilon-sampling; parent
//! selection clusters the survivors into epsilon-hoods and visits them
//! round-robin. Both epsilons are adapted every generation so that sampling
//! extracts about `|P|` solutions and hood creation forms about
//! `|P| / h_ref` hoods.

use serde::{Deserialize, Serialize};

use crate::engine::{Individual, RunRng, Selection};
use crate::error::{Error, Result};
use crate::pareto::nondominated_sort;
use crate::rng::Draws;

/// Additive epsilon-dominance: `a + eps` weakly dominates `b` and the two
/// are different genotypes.
pub fn eps_dominates(a: &Individual, b: &Individual, eps: f64) -> bool {
    a.genotype != b.genotype
        && a.objectives
            .iter()
            .zip(b.objectives.iter())
            .all(|(x, y)| x + eps >= *y)
}

/// Whether `a` absorbs `b` during sampling or hood creation: `b` is a copy
/// of `a`'s genotype or is epsilon-dominated by it.
fn absorbs(a: &Individual, b: &Individual, eps: f64) -> bool {
    a.genotype == b.genotype || eps_dominates(a, b, eps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AesehParams {
    /// Reference hood size.
    pub h_ref: usize,
    pub eps_s_init: f64,
    pub eps_h_init: f64,
    pub step_init: f64,
    pub step_floor: f64,
    pub step_cap: f64,
}

impl Default for AesehParams {
    fn default() -> Self {
        AesehParams {
            h_ref: 20,
            eps_s_init: 0.0,
            eps_h_init: 0.0,
            step_init: 0.005,
            step_floor: 1e-6,
            step_cap: 0.5,
        }
    }
}

impl AesehParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.h_ref >= 1
            && self.eps_s_init >= 0.0
            && self.eps_h_init >= 0.0
            && self.step_floor > 0.0
            && self.step_floor <= self.step_cap
            && (self.step_floor..=self.step_cap).contains(&self.step_init);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid AeSeH parameters {self:?}")))
        }
    }

    pub fn initial_state(&self) -> EpsilonState {
        let eps = |value| AdaptiveEpsilon {
            value,
            step: self.step_init,
            floor: self.step_floor,
            cap: self.step_cap,
            last_direction: Direction::None,
        };
        EpsilonState {
            sampling: eps(self.eps_s_init),
            hood: eps(self.eps_h_init),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    None,
    Up,
    Down,
}

/// One epsilon with its step-size controller.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveEpsilon {
    value: f64,
    step: f64,
    floor: f64,
    cap: f64,
    last_direction: Direction,
}

impl AdaptiveEpsilon {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Moves epsilon up when `observed > target` and down (not below zero)
    /// when `observed < target`. The step doubles when the direction
    /// repeats and halves when it reverses, before it is applied.
    pub fn adapt(&mut self, observed: usize, target: usize) {
        assert!(target > 0, "adaptation target must be positive");
        let direction = match observed.cmp(&target) {
            std::cmp::Ordering::Equal => return,
            std::cmp::Ordering::Greater => Direction::Up,
            std::cmp::Ordering::Less => Direction::Down,
        };
        if self.last_direction == direction {
            self.step *= 2.0;
        } else if self.last_direction != Direction::None {
            self.step *= 0.5;
        }
        self.step = self.step.clamp(self.floor, self.cap);
        self.value = match direction {
            Direction::Up => self.value + self.step,
            _ => (self.value - self.step).max(0.0),
        };
        self.last_direction = direction;
    }
}

/// The sampling and hood epsilons of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonState {
    pub sampling: AdaptiveEpsilon,
    pub hood: AdaptiveEpsilon,
}

/// What one epsilon-sampling pass did, as indices into the front it got.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SamplingTrace {
    /// Samples in the order drawn.
    pub samples: Vec<usize>,
    /// Solutions discarded as epsilon-dominated, in the order discarded.
    pub discarded: Vec<usize>,
    /// The final selection of exactly `size` solutions.
    pub selected: Vec<usize>,
}

/// Epsilon-sampling of `front` down to `size` members.
///
/// Repeatedly removes a uniform random member of the remaining list
/// (order preserved), keeps it, and moves every remaining member it
/// epsilon-dominates, or that copies its genotype, to the discard pool.
/// Surplus samples are then removed one uniform pick at a time; a shortfall
/// is refilled one uniform pick at a time from the discard pool.
pub fn eps_sample<R: Draws + ?Sized>(front: &[Individual], size: usize, eps: f64, rng: &mut R) -> SamplingTrace {
    let mut remaining: Vec<usize> = (0..front.len()).collect();
    let mut trace = SamplingTrace::default();
    while !remaining.is_empty() {
        let sample = remaining.remove(rng.below(remaining.len()));
        trace.samples.push(sample);
        remaining.retain(|&i| {
            if absorbs(&front[sample], &front[i], eps) {
                trace.discarded.push(i);
                false
            } else {
                true
            }
        });
    }
    let mut selected = trace.samples.clone();
    while selected.len() > size {
        selected.remove(rng.below(selected.len()));
    }
    let mut pool = trace.discarded.clone();
    while selected.len() < size && !pool.is_empty() {
        selected.push(pool.remove(rng.below(pool.len())));
    }
    trace.selected = selected;
    trace
}

/// Survival selection: whole fronts with random truncation when the first
/// front fits, epsilon-sampling of the first front otherwise. Adapts the
/// sampling epsilon toward `size` samples in the second case.
pub fn eps_sampling_survival<R: Draws + ?Sized>(
    union: Vec<Individual>,
    size: usize,
    state: &mut EpsilonState,
    rng: &mut R,
) -> Vec<Individual> {
    let fronts = nondominated_sort(&union);
    let chosen: Vec<usize> = if fronts[0].len() <= size {
        let mut chosen = Vec::with_capacity(size);
        for mut front in fronts {
            let room = size - chosen.len();
            if room == 0 {
                break;
            }
            if front.len() > room {
                rng.shuffle(&mut front);
                front.truncate(room);
            }
            chosen.extend(front);
        }
        chosen
    } else {
        let first = &fronts[0];
        let members: Vec<Individual> = first.iter().map(|&i| union[i].clone()).collect();
        let trace = eps_sample(&members, size, state.sampling.value(), rng);
        state.sampling.adapt(trace.samples.len(), size);
        trace.selected.iter().map(|&pos| first[pos]).collect()
    };
    let mut slots: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|i| slots[i].take().expect("survivor selected twice"))
        .collect()
}

/// Disjoint epsilon-hoods covering a population, with a round-robin cursor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoodPartition {
    /// Each hood lists population indices, its head first.
    hoods: Vec<Vec<usize>>,
    cursor: usize,
}

impl HoodPartition {
    pub fn new(hoods: Vec<Vec<usize>>) -> Self {
        assert!(!hoods.is_empty() && hoods.iter().all(|h| !h.is_empty()));
        HoodPartition { hoods, cursor: 0 }
    }

    pub fn hoods(&self) -> &[Vec<usize>] {
        &self.hoods
    }

    pub fn len(&self) -> usize {
        self.hoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hoods.is_empty()
    }

    /// Hood the next pair will come from.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Two parents drawn from the current hood, which is then advanced.
    /// Distinct members when the hood has two or more; a singleton hood
    /// gives its member twice without consuming draws.
    pub fn next_pair<R: Draws + ?Sized>(&mut self, rng: &mut R) -> (usize, usize) {
        let hood = &self.hoods[self.cursor];
        self.cursor = (self.cursor + 1) % self.hoods.len();
        if hood.len() == 1 {
            return (hood[0], hood[0]);
        }
        let a = rng.below(hood.len());
        let mut b = rng.below(hood.len() - 1);
        if b >= a {
            b += 1;
        }
        (hood[a], hood[b])
    }
}

/// Epsilon-hood creation: a uniform random head is removed from the
/// unassigned list (order preserved) and joined by every unassigned member
/// it epsilon-dominates or that copies its genotype, until nothing is
/// unassigned.
pub fn create_hoods<R: Draws + ?Sized>(population: &[Individual], eps: f64, rng: &mut R) -> HoodPartition {
    let mut unassigned: Vec<usize> = (0..population.len()).collect();
    let mut hoods = Vec::new();
    while !unassigned.is_empty() {
        let head = unassigned.remove(rng.below(unassigned.len()));
        let mut hood = vec![head];
        unassigned.retain(|&i| {
            if absorbs(&population[head], &population[i], eps) {
                hood.push(i);
                false
            } else {
                true
            }
        });
        hoods.push(hood);
    }
    HoodPartition::new(hoods)
}

/// Hood creation followed by adaptation of the hood epsilon toward
/// `max(1, |P| / h_ref)` hoods.
pub fn eps_hood_creation<R: Draws + ?Sized>(
    population: &[Individual],
    state: &mut EpsilonState,
    h_ref: usize,
    rng: &mut R,
) -> HoodPartition {
    let partition = create_hoods(population, state.hood.value(), rng);
    let target = (population.len() / h_ref).max(1);
    state.hood.adapt(partition.len(), target);
    partition
}

pub struct AesehSelection {
    params: AesehParams,
    state: EpsilonState,
    hoods: Option<HoodPartition>,
}

impl AesehSelection {
    pub fn new(params: AesehParams) -> Self {
        AesehSelection {
            state: params.initial_state(),
            params,
            hoods: None,
        }
    }

    pub fn state(&self) -> &EpsilonState {
        &self.state
    }
}

impl Selection for AesehSelection {
    fn prepare_mating(&mut self, population: &[Individual], rng: &mut RunRng) {
        self.hoods = Some(eps_hood_creation(population, &mut self.state, self.params.h_ref, rng));
    }

    fn select_pair(&mut self, _population: &[Individual], rng: &mut RunRng) -> (usize, usize) {
        self.hoods
            .as_mut()
            .expect("prepare_mating runs before selection")
            .next_pair(rng)
    }

    fn survive(&mut self, union: Vec<Individual>, size: usize, rng: &mut RunRng) -> Vec<Individual> {
        eps_sampling_survival(union, size, &mut self.state, rng)
    }
}
