//! The elitist (mu + mu) generational loop shared by all algorithms,
//! together with two-point crossover and bit-flip mutation.
//!
//! Per run there is one random stream, seeded from [`RunConfig::seed`]. It is
//! consumed in this order: the `|P|` initial genotypes; then per generation
//! the algorithm's mating preparation, and per offspring pair the parent
//! selection draws, the crossover draws and the mutation draws of the first
//! and second child; finally the survival selection draws.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aeseh::{AesehParams, AesehSelection};
use crate::error::{Error, Result};
use crate::ibea::IbeaSelection;
use crate::landscape::{Genotype, MnkLandscape, ObjectiveVector};
use crate::nsga2::Nsga2Selection;
use crate::pareto::first_front;
use crate::rng::{self, Draws, Xoshiro256StarStar};

pub type RunRng = Xoshiro256StarStar;

/// A genotype with its objective vector cached at creation.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genotype: Genotype,
    pub objectives: ObjectiveVector,
}

impl Individual {
    pub fn evaluated(landscape: &MnkLandscape, genotype: Genotype) -> Self {
        Individual {
            genotype,
            objectives: landscape.evaluate(genotype),
        }
    }

    /// An individual whose objectives are given rather than evaluated.
    pub fn from_parts(genotype: Genotype, objectives: impl Into<ObjectiveVector>) -> Self {
        Individual {
            genotype,
            objectives: objectives.into(),
        }
    }
}

impl AsRef<[f64]> for Individual {
    fn as_ref(&self) -> &[f64] {
        &self.objectives
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Nsga2,
    Ibea,
    Aeseh,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 3] = [AlgorithmKind::Aeseh, AlgorithmKind::Nsga2, AlgorithmKind::Ibea];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Nsga2 => "nsga2",
            AlgorithmKind::Ibea => "ibea",
            AlgorithmKind::Aeseh => "aeseh",
        }
    }

    /// One-letter label used in figures: A, N or I.
    pub fn label(self) -> char {
        match self {
            AlgorithmKind::Nsga2 => 'N',
            AlgorithmKind::Ibea => 'I',
            AlgorithmKind::Aeseh => 'A',
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nsga2" | "nsgaii" | "n" => Ok(AlgorithmKind::Nsga2),
            "ibea" | "i" => Ok(AlgorithmKind::Ibea),
            "aeseh" | "a" => Ok(AlgorithmKind::Aeseh),
            _ => Err(Error::InvalidParameter(format!("unknown algorithm {s:?}"))),
        }
    }
}

pub const DEFAULT_KAPPA: f64 = 0.001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: AlgorithmKind,
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// `None` means `1 / n`.
    pub mutation_rate: Option<f64>,
    pub kappa: f64,
    pub aeseh: AesehParams,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(algorithm: AlgorithmKind, population_size: usize, generations: usize, seed: u64) -> Self {
        RunConfig {
            algorithm,
            population_size,
            generations,
            crossover_rate: 1.0,
            mutation_rate: None,
            kappa: DEFAULT_KAPPA,
            aeseh: AesehParams::default(),
            seed,
        }
    }

    pub fn mutation_rate_for(&self, n: usize) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return bad(format!(
                "population size {} must be even and at least 2",
                self.population_size
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!("crossover rate {} outside [0, 1]", self.crossover_rate));
        }
        if let Some(pm) = self.mutation_rate {
            if !(0.0..=1.0).contains(&pm) {
                return bad(format!("mutation rate {pm} outside [0, 1]"));
            }
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa {} must be positive", self.kappa));
        }
        self.aeseh.validate()
    }
}

/// Swaps the bit segment `[c1, c2)` between two genotypes.
pub fn exchange_segment(p1: Genotype, p2: Genotype, c1: usize, c2: usize) -> (Genotype, Genotype) {
    let n = p1.n_bits();
    assert_eq!(n, p2.n_bits(), "parents of different width");
    assert!(c1 <= c2 && c2 <= n);
    let mask = Genotype::mask(c2) & !Genotype::mask(c1);
    let diff = (p1.bits() ^ p2.bits()) & mask;
    (
        Genotype::from_raw(p1.bits() ^ diff, n),
        Genotype::from_raw(p2.bits() ^ diff, n),
    )
}

/// Two-point crossover: two cut points drawn uniformly from `[0, n]`,
/// ordered, and the segment between them exchanged.
pub fn two_point_crossover<R: Draws + ?Sized>(p1: Genotype, p2: Genotype, rng: &mut R) -> (Genotype, Genotype) {
    let n = p1.n_bits();
    let a = rng.below(n + 1);
    let b = rng.below(n + 1);
    exchange_segment(p1, p2, a.min(b), a.max(b))
}

/// Crossover applied with probability `pc` (one draw), clones otherwise.
pub fn crossover_with_rate<R: Draws + ?Sized>(
    p1: Genotype,
    p2: Genotype,
    pc: f64,
    rng: &mut R,
) -> (Genotype, Genotype) {
    if rng.chance(pc) {
        two_point_crossover(p1, p2, rng)
    } else {
        (p1, p2)
    }
}

/// Flips each bit independently with probability `pm`. Rates of 0 and 1
/// consume no draws.
pub fn bitflip_mutation<R: Draws + ?Sized>(g: Genotype, pm: f64, rng: &mut R) -> Genotype {
    let n = g.n_bits();
    if pm <= 0.0 {
        return g;
    }
    if pm >= 1.0 {
        return Genotype::from_raw(!g.bits() & Genotype::mask(n), n);
    }
    let mut flips = 0u64;
    for i in 0..n {
        if rng.chance(pm) {
            flips |= 1 << i;
        }
    }
    Genotype::from_raw(g.bits() ^ flips, n)
}

/// Algorithm-specific parent and survival selection.
pub trait Selection {
    /// Computes whatever parent selection needs on the current population.
    fn prepare_mating(&mut self, population: &[Individual], rng: &mut RunRng);

    /// Indices of the next two parents.
    fn select_pair(&mut self, population: &[Individual], rng: &mut RunRng) -> (usize, usize);

    /// Reduces `P_t + Q_t` to `size` survivors.
    fn survive(&mut self, union: Vec<Individual>, size: usize, rng: &mut RunRng) -> Vec<Individual>;
}

pub fn make_selection(config: &RunConfig) -> Box<dyn Selection + Send> {
    match config.algorithm {
        AlgorithmKind::Nsga2 => Box::new(Nsga2Selection::default()),
        AlgorithmKind::Ibea => Box::new(IbeaSelection::new(config.kappa)),
        AlgorithmKind::Aeseh => Box::new(AesehSelection::new(config.aeseh.clone())),
    }
}

/// Receives the population after initialization (`t = 0`) and after every
/// survival selection, with the indices of its non-dominated front.
pub trait Observer {
    fn observe(&mut self, t: usize, population: &[Individual], front: &[usize]);
}

impl<F: FnMut(usize, &[Individual], &[usize])> Observer for F {
    fn observe(&mut self, t: usize, population: &[Individual], front: &[usize]) {
        self(t, population, front)
    }
}

/// Runs one seeded execution and returns the final population.
pub fn run(config: &RunConfig, landscape: &MnkLandscape, observer: &mut dyn Observer) -> Result<Vec<Individual>> {
    config.validate()?;
    let size = config.population_size;
    let n = landscape.n();
    let pc = config.crossover_rate;
    let pm = config.mutation_rate_for(n);
    let mut rng = rng::stream(config.seed);
    let mut selection = make_selection(config);

    let mut population: Vec<Individual> = (0..size)
        .map(|_| Individual::evaluated(landscape, Genotype::random(n, &mut rng)))
        .collect();
    observer.observe(0, &population, &first_front(&population));

    for t in 1..=config.generations {
        selection.prepare_mating(&population, &mut rng);
        let mut offspring = Vec::with_capacity(size);
        while offspring.len() < size {
            let (a, b) = selection.select_pair(&population, &mut rng);
            let (c1, c2) = crossover_with_rate(population[a].genotype, population[b].genotype, pc, &mut rng);
            let c1 = bitflip_mutation(c1, pm, &mut rng);
            let c2 = bitflip_mutation(c2, pm, &mut rng);
            offspring.push(Individual::evaluated(landscape, c1));
            offspring.push(Individual::evaluated(landscape, c2));
        }
        let mut union = population;
        union.extend(offspring);
        population = selection.survive(union, size, &mut rng);
        debug_assert_eq!(population.len(), size);
        observer.observe(t, &population, &first_front(&population));
    }
    Ok(population)
}
