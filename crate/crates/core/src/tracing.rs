//! Resolution measurements of a run against the exact Pareto optimal set.
//!
//! Every generation the non-dominated front `F1(t)` of the surviving
//! population is compared with the POS, with `F1(t-1)`, and with all earlier
//! fronts. Membership is decided by genotype, so a front is treated as a set
//! of distinct genotypes. The accumulated archive `A(t)` is the
//! non-dominated subset of all fronts so far.

use std::collections::HashSet;

use crate::engine::{Individual, Observer};
use crate::error::{Error, Result};
use crate::landscape::{Genotype, MnkLandscape, ObjectiveVector};
use crate::pareto::{dominates, ParetoOptimalSet};

/// Accumulated non-dominated solutions, unique by genotype.
#[derive(Clone, Debug, Default)]
pub struct ParetoArchive {
    members: Vec<(Genotype, ObjectiveVector)>,
    genotypes: HashSet<Genotype>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &[(Genotype, ObjectiveVector)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, g: Genotype) -> bool {
        self.genotypes.contains(&g)
    }

    /// Inserts one solution unless its genotype is present or a member
    /// strictly dominates it; evicts the members it strictly dominates.
    pub fn insert(&mut self, g: Genotype, v: &ObjectiveVector) -> bool {
        if self.genotypes.contains(&g) || self.members.iter().any(|(_, w)| dominates(w, v)) {
            return false;
        }
        let genotypes = &mut self.genotypes;
        self.members.retain(|(h, w)| {
            let keep = !dominates(v, w);
            if !keep {
                genotypes.remove(h);
            }
            keep
        });
        self.genotypes.insert(g);
        self.members.push((g, v.clone()));
        true
    }

    /// `A(t)` from `A(t-1)` and `F1(t)`: union by genotype, then removal of
    /// every strictly dominated solution.
    pub fn update<'a, I>(&mut self, front: I)
    where
        I: IntoIterator<Item = (&'a Genotype, &'a ObjectiveVector)>,
    {
        for (g, v) in front {
            self.insert(*g, v);
        }
    }

    /// Number of members that are Pareto optimal.
    pub fn count_in(&self, pos: &ParetoOptimalSet) -> usize {
        self.members.iter().filter(|(g, _)| pos.contains(*g)).count()
    }
}

/// Raw counts behind one generation's indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IndexCounts {
    /// Distinct genotypes in `F1(t)`.
    pub front: usize,
    /// Pareto optimal members of `F1(t)`.
    pub po: usize,
    /// ... that were also in `F1(t-1)`.
    pub old: usize,
    /// ... that were not in `F1(t-1)`.
    pub possibly_new: usize,
    /// ... that were in no earlier front.
    pub absolutely_new: usize,
    /// Pareto optimal members of `F1(t-1)` missing from `F1(t)`.
    pub dropped: usize,
    /// Members of `F1(t)` that are not Pareto optimal.
    pub non_po: usize,
    /// Pareto optimal members of the archive `A(t)`.
    pub archive_po: usize,
}

/// The generational indices of one generation. Index fractions are counts
/// divided by `|P|`; `alpha` divides the archive's Pareto optimal count by
/// `|POS|` and `beta` divides it by `|P|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexRecord {
    pub t: usize,
    pub counts: IndexCounts,
    pub pop_size: usize,
    pub pos_size: usize,
    pub tau: f64,
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub tau_star: f64,
    pub delta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl IndexRecord {
    pub fn f1_size(&self) -> usize {
        self.counts.front
    }

    fn from_counts(t: usize, counts: IndexCounts, pop_size: usize, pos_size: usize) -> Self {
        let p = pop_size as f64;
        IndexRecord {
            t,
            counts,
            pop_size,
            pos_size,
            tau: counts.po as f64 / p,
            tau_minus: counts.old as f64 / p,
            tau_plus: counts.possibly_new as f64 / p,
            tau_star: counts.absolutely_new as f64 / p,
            delta: counts.dropped as f64 / p,
            gamma: counts.non_po as f64 / p,
            alpha: if pos_size == 0 {
                0.0
            } else {
                counts.archive_po as f64 / pos_size as f64
            },
            beta: counts.archive_po as f64 / p,
        }
    }
}

/// Indices of generation `t`. `prev` is `F1(t-1)` (`None` at `t = 0`) and
/// `history` holds every genotype of `F1(0), ..., F1(t-1)`.
pub fn compute_indices(
    t: usize,
    front: &HashSet<Genotype>,
    prev: Option<&HashSet<Genotype>>,
    history: &HashSet<Genotype>,
    pos: &ParetoOptimalSet,
    pop_size: usize,
    archive: &ParetoArchive,
) -> IndexRecord {
    let mut counts = IndexCounts {
        front: front.len(),
        archive_po: archive.count_in(pos),
        ..IndexCounts::default()
    };
    for &g in front {
        if !pos.contains(g) {
            counts.non_po += 1;
            continue;
        }
        counts.po += 1;
        if prev.is_some_and(|p| p.contains(&g)) {
            counts.old += 1;
        } else {
            counts.possibly_new += 1;
        }
        if !history.contains(&g) {
            counts.absolutely_new += 1;
        }
    }
    if let Some(prev) = prev {
        counts.dropped = prev
            .iter()
            .filter(|&&g| pos.contains(g) && !front.contains(&g))
            .count();
    }
    IndexRecord::from_counts(t, counts, pop_size, pos.len())
}

/// Means of the six indices over `t = 0..=T` and the final resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub generations: usize,
    pub mean_tau: f64,
    pub mean_tau_minus: f64,
    pub mean_tau_plus: f64,
    pub mean_tau_star: f64,
    pub mean_delta: f64,
    pub mean_gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub archive_po: usize,
}

pub fn summarize_run(records: &[IndexRecord]) -> Result<RunSummary> {
    let last = records
        .last()
        .ok_or_else(|| Error::InvalidParameter("cannot summarize an empty trace".into()))?;
    let count = records.len() as f64;
    let mean = |f: fn(&IndexRecord) -> f64| records.iter().map(f).sum::<f64>() / count;
    Ok(RunSummary {
        generations: records.len() - 1,
        mean_tau: mean(|r| r.tau),
        mean_tau_minus: mean(|r| r.tau_minus),
        mean_tau_plus: mean(|r| r.tau_plus),
        mean_tau_star: mean(|r| r.tau_star),
        mean_delta: mean(|r| r.delta),
        mean_gamma: mean(|r| r.gamma),
        alpha: last.alpha,
        beta: last.beta,
        archive_po: last.counts.archive_po,
    })
}

/// Observer that maintains the archive and records indices per generation.
pub struct Tracer<'a> {
    pos: &'a ParetoOptimalSet,
    pop_size: usize,
    archive: ParetoArchive,
    prev: Option<HashSet<Genotype>>,
    history: HashSet<Genotype>,
    records: Vec<IndexRecord>,
}

impl<'a> Tracer<'a> {
    /// Fails when `pos` was not computed for `landscape`.
    pub fn new(pos: &'a ParetoOptimalSet, landscape: &MnkLandscape, pop_size: usize) -> Result<Self> {
        pos.check_landscape(landscape)?;
        Ok(Tracer {
            pos,
            pop_size,
            archive: ParetoArchive::new(),
            prev: None,
            history: HashSet::new(),
            records: Vec::new(),
        })
    }

    pub fn records(&self) -> &[IndexRecord] {
        &self.records
    }

    pub fn archive(&self) -> &ParetoArchive {
        &self.archive
    }

    pub fn into_records(self) -> Vec<IndexRecord> {
        self.records
    }
}

impl Observer for Tracer<'_> {
    fn observe(&mut self, t: usize, population: &[Individual], front: &[usize]) {
        let members: Vec<&Individual> = front.iter().map(|&i| &population[i]).collect();
        self.archive
            .update(members.iter().map(|ind| (&ind.genotype, &ind.objectives)));
        let genotypes: HashSet<Genotype> = members.iter().map(|ind| ind.genotype).collect();
        let record = compute_indices(
            t,
            &genotypes,
            self.prev.as_ref(),
            &self.history,
            self.pos,
            self.pop_size,
            &self.archive,
        );
        self.records.push(record);
        self.history.extend(genotypes.iter().copied());
        self.prev = Some(genotypes);
    }
}
