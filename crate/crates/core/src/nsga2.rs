//! NSGA-II: front rank and crowding distance as fitness, rank-then-crowding
//! survival truncation and crowded binary tournaments.

use std::cmp::Ordering;

use crate::engine::{Individual, RunRng, Selection};
use crate::pareto::nondominated_sort;
use crate::rng::Draws;

/// Crowding distance of every member of one front.
///
/// Fronts of one or two points are all boundary points. Otherwise, per
/// objective with a non-zero range, one point at each end of the sorted
/// order gets `+inf` and every other point adds `(next - prev) / range`
/// from its sorted neighbors, or nothing when it ties with a neighbor.
/// Among points tied at an end, the boundary point is the one with the
/// lexicographically smallest (at the minimum) or largest (at the maximum)
/// objective vector, then the lowest index. Distances therefore depend on
/// input order only through the labelling of identical vectors.
pub fn crowding_distance<V: AsRef<[f64]>>(front: &[V]) -> Vec<f64> {
    let len = front.len();
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    let m = front[0].as_ref().len();
    let lex = |a: usize, b: usize| -> Ordering {
        let (ra, rb) = (front[a].as_ref(), front[b].as_ref());
        ra.iter()
            .zip(rb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    let mut distance = vec![0.0; len];
    let mut order: Vec<usize> = (0..len).collect();
    for obj in 0..m {
        let value = |i: usize| front[i].as_ref()[obj];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let lo = value(order[0]);
        let hi = value(order[len - 1]);
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        let low_end = (0..len)
            .filter(|&i| value(i) == lo)
            .min_by(|&a, &b| lex(a, b).then(a.cmp(&b)))
            .expect("minimum is attained");
        let high_end = (0..len)
            .filter(|&i| value(i) == hi)
            .max_by(|&a, &b| lex(a, b).then(b.cmp(&a)))
            .expect("maximum is attained");
        distance[low_end] = f64::INFINITY;
        distance[high_end] = f64::INFINITY;
        for pos in 0..len {
            let i = order[pos];
            if i == low_end || i == high_end {
                continue;
            }
            let v = value(i);
            let prev = (pos > 0).then(|| value(order[pos - 1]));
            let next = (pos + 1 < len).then(|| value(order[pos + 1]));
            match (prev, next) {
                (Some(p), Some(n)) if p != v && n != v => distance[i] += (n - p) / range,
                _ => {}
            }
        }
    }
    distance
}

/// Indices of the `size` survivors of `union`: whole fronts in rank order,
/// the overflowing front truncated by descending crowding distance with
/// ties broken uniformly at random.
pub fn nsga2_survival<V: AsRef<[f64]> + Sync, R: Draws + ?Sized>(
    union: &[V],
    size: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut survivors = Vec::with_capacity(size);
    for front in nondominated_sort(union) {
        let room = size - survivors.len();
        if room == 0 {
            break;
        }
        if front.len() <= room {
            survivors.extend(front);
            continue;
        }
        let points: Vec<&[f64]> = front.iter().map(|&i| union[i].as_ref()).collect();
        let distance = crowding_distance(&points);
        let mut order: Vec<usize> = (0..front.len()).collect();
        rng.shuffle(&mut order);
        order.sort_by(|&a, &b| distance[b].total_cmp(&distance[a]));
        survivors.extend(order[..room].iter().map(|&pos| front[pos]));
        break;
    }
    survivors
}

/// Front rank (1-based) and crowding distance of one individual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrowdedRank {
    pub rank: usize,
    pub distance: f64,
}

impl CrowdedRank {
    /// `Greater` means `self` wins a tournament against `other`.
    pub fn compare(&self, other: &CrowdedRank) -> Ordering {
        other
            .rank
            .cmp(&self.rank)
            .then_with(|| self.distance.total_cmp(&other.distance))
    }
}

/// Rank and crowding distance of every member of `population`, computed on
/// the population itself.
pub fn crowded_ranks<V: AsRef<[f64]> + Sync>(population: &[V]) -> Vec<CrowdedRank> {
    let mut ranks = vec![
        CrowdedRank {
            rank: 0,
            distance: 0.0
        };
        population.len()
    ];
    for (r, front) in nondominated_sort(population).into_iter().enumerate() {
        let points: Vec<&[f64]> = front.iter().map(|&i| population[i].as_ref()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&points)) {
            ranks[i] = CrowdedRank {
                rank: r + 1,
                distance: d,
            };
        }
    }
    ranks
}

/// Crowded binary tournament: two uniform picks, lower rank wins, then
/// larger distance, then a coin flip.
pub fn nsga2_parent_select<R: Draws + ?Sized>(ranks: &[CrowdedRank], rng: &mut R) -> usize {
    let a = rng.below(ranks.len());
    let b = rng.below(ranks.len());
    match ranks[a].compare(&ranks[b]) {
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

#[derive(Default)]
pub struct Nsga2Selection {
    ranks: Vec<CrowdedRank>,
}

impl Selection for Nsga2Selection {
    fn prepare_mating(&mut self, population: &[Individual], _rng: &mut RunRng) {
        self.ranks = crowded_ranks(population);
    }

    fn select_pair(&mut self, _population: &[Individual], rng: &mut RunRng) -> (usize, usize) {
        let a = nsga2_parent_select(&self.ranks, rng);
        let b = nsga2_parent_select(&self.ranks, rng);
        (a, b)
    }

    fn survive(&mut self, union: Vec<Individual>, size: usize, rng: &mut RunRng) -> Vec<Individual> {
        let keep = nsga2_survival(&union, size, rng);
        let mut slots: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
        keep.into_iter()
            .map(|i| slots[i].take().expect("survivor selected twice"))
            .collect()
    }
}
