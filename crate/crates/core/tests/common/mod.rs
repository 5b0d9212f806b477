//! Independent reference implementations used as test oracles. They favour
//! obviousness over speed: all-pairs scans, peeling, from-scratch sums.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mnklab::rng::{self, Draws};
use mnklab::MnkLandscape;

/// Objective `j` as a plain sum of table lookups, building each lookup key
/// as a bit string: the bit itself, then its neighbors in listed order.
pub fn oracle_evaluate(l: &MnkLandscape, bits: u64) -> Vec<f64> {
    let bit = |i: usize| if bits >> i & 1 == 1 { '1' } else { '0' };
    (0..l.m())
        .map(|j| {
            let mut total = 0.0;
            for i in 0..l.n() {
                let mut key = String::new();
                key.push(bit(i));
                for &nb in l.neighbors(j, i) {
                    key.push(bit(nb as usize));
                }
                let idx = usize::from_str_radix(&key, 2).unwrap();
                total += l.table(j, i)[idx];
            }
            total / l.n() as f64
        })
        .collect()
}

/// `a` strictly dominates `b` under maximization.
pub fn oracle_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

/// All-pairs maxima of the whole genotype space, by genotype.
pub fn brute_force_pos(l: &MnkLandscape) -> BTreeSet<u64> {
    let space: Vec<Vec<f64>> = (0..1u64 << l.n()).map(|g| oracle_evaluate(l, g)).collect();
    (0..space.len())
        .filter(|&i| !space.iter().any(|other| oracle_dominates(other, &space[i])))
        .map(|i| i as u64)
        .collect()
}

/// Fronts by repeated peeling of the all-pairs maxima.
pub fn peel_fronts(points: &[Vec<f64>]) -> Vec<BTreeSet<usize>> {
    let mut left: BTreeSet<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: BTreeSet<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| oracle_dominates(&points[j], &points[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Crowding distance by definition, per point. Per objective, the boundary
/// points are the argmin and argmax by (value, whole vector), with the
/// lowest index among identical vectors; they are infinite. Any other point
/// whose value is shared adds nothing, the rest add the gap between the
/// nearest strictly smaller and larger values.
pub fn oracle_crowding(front: &[Vec<f64>]) -> Vec<f64> {
    let len = front.len();
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    let m = front[0].len();
    let lex = |a: usize, b: usize| {
        (0..m)
            .map(|k| front[a][k].total_cmp(&front[b][k]))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    let mut d = vec![0.0; len];
    for obj in 0..m {
        let values: Vec<f64> = front.iter().map(|p| p[obj]).collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            continue;
        }
        let mut low_end = None;
        let mut high_end = None;
        for i in 0..len {
            if values[i] == lo && low_end.is_none_or(|b| lex(i, b).is_lt()) {
                low_end = Some(i);
            }
            if values[i] == hi && high_end.is_none_or(|b| lex(i, b).is_gt()) {
                high_end = Some(i);
            }
        }
        for i in 0..len {
            if Some(i) == low_end || Some(i) == high_end {
                d[i] = f64::INFINITY;
                continue;
            }
            let v = values[i];
            if (0..len).any(|j| j != i && values[j] == v) {
                continue;
            }
            let below = values.iter().copied().filter(|&w| w < v).fold(f64::NEG_INFINITY, f64::max);
            let above = values.iter().copied().filter(|&w| w > v).fold(f64::INFINITY, f64::min);
            d[i] += (above - below) / (hi - lo);
        }
    }
    d
}

/// What NSGA-II survival must return: `sure` is kept outright, and exactly
/// `pick` members of the tie group `ties` fill the rest.
pub struct Nsga2Outcome {
    pub sure: BTreeSet<usize>,
    pub ties: BTreeSet<usize>,
    pub pick: usize,
}

impl Nsga2Outcome {
    pub fn admits(&self, survivors: &[usize]) -> bool {
        let got: BTreeSet<usize> = survivors.iter().copied().collect();
        got.len() == survivors.len()
            && self.sure.is_subset(&got)
            && got.difference(&self.sure).all(|i| self.ties.contains(i))
            && got.len() - self.sure.len() == self.pick
    }
}

pub fn oracle_nsga2_survival(points: &[Vec<f64>], size: usize) -> Nsga2Outcome {
    let mut sure = BTreeSet::new();
    for front in peel_fronts(points) {
        let room = size - sure.len();
        if room == 0 {
            break;
        }
        if front.len() <= room {
            sure.extend(front);
            continue;
        }
        let ids: Vec<usize> = front.into_iter().collect();
        let members: Vec<Vec<f64>> = ids.iter().map(|&i| points[i].clone()).collect();
        let d = oracle_crowding(&members);
        let mut sorted = d.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let cut = sorted[room - 1];
        let above: Vec<usize> = (0..ids.len()).filter(|&p| d[p] > cut).collect();
        let ties: BTreeSet<usize> = (0..ids.len()).filter(|&p| d[p] == cut).map(|p| ids[p]).collect();
        sure.extend(above.iter().map(|&p| ids[p]));
        let pick = size - sure.len();
        return Nsga2Outcome { sure, ties, pick };
    }
    Nsga2Outcome {
        sure,
        ties: BTreeSet::new(),
        pick: 0,
    }
}

/// Min-max normalization over the given points.
pub fn oracle_normalize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = points[0].len();
    let col = |k: usize| points.iter().map(move |p| p[k]);
    let lo: Vec<f64> = (0..m).map(|k| col(k).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..m).map(|k| col(k).fold(f64::NEG_INFINITY, f64::max)).collect();
    points
        .iter()
        .map(|p| {
            (0..m)
                .map(|k| if hi[k] > lo[k] { (p[k] - lo[k]) / (hi[k] - lo[k]) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// `ln(sum_{y != x} exp(-I(y, x) / kappa))` over the members of `alive`,
/// summed from the largest term down.
pub fn oracle_log_fitness(normalized: &[Vec<f64>], alive: &[usize], x: usize, kappa: f64) -> f64 {
    let mut exps: Vec<f64> = alive
        .iter()
        .filter(|&&y| y != x)
        .map(|&y| {
            let ind = normalized[y]
                .iter()
                .zip(&normalized[x])
                .map(|(a, b)| b - a)
                .fold(f64::NEG_INFINITY, f64::max);
            -ind / kappa
        })
        .collect();
    if exps.is_empty() {
        return f64::NEG_INFINITY;
    }
    exps.sort_by(|a, b| b.total_cmp(a));
    let top = exps[0];
    top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln()
}

/// IBEA survival recomputing every fitness from scratch after each removal.
pub fn oracle_ibea_survival(points: &[Vec<f64>], size: usize, kappa: f64) -> BTreeSet<usize> {
    let normalized = oracle_normalize(points);
    let mut alive: Vec<usize> = (0..points.len()).collect();
    while alive.len() > size {
        let fit: Vec<f64> = alive
            .iter()
            .map(|&x| oracle_log_fitness(&normalized, &alive, x, kappa))
            .collect();
        let mut worst = 0;
        for p in 1..alive.len() {
            if fit[p] > fit[worst] {
                worst = p;
            }
        }
        alive.remove(worst);
    }
    alive.into_iter().collect()
}

/// Non-dominated subset of a genotype-deduplicated stream, by all pairs.
pub fn oracle_archive(stream: &[(u64, Vec<f64>)]) -> BTreeSet<u64> {
    let mut seen = BTreeSet::new();
    let mut unique = Vec::new();
    for (g, v) in stream {
        if seen.insert(*g) {
            unique.push((*g, v.clone()));
        }
    }
    unique
        .iter()
        .filter(|(_, v)| !unique.iter().any(|(_, w)| oracle_dominates(w, v)))
        .map(|(g, _)| *g)
        .collect()
}

/// `count` points of dimension `m` uniform on `[0, 1)`.
pub fn random_points(seed: u64, count: usize, m: usize) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed);
    (0..count).map(|_| (0..m).map(|_| rng.unit()).collect()).collect()
}

/// Points on a coarse grid, so that ties and duplicates are common.
pub fn grid_points(seed: u64, count: usize, m: usize, levels: usize) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed);
    (0..count)
        .map(|_| (0..m).map(|_| rng.below(levels) as f64 / levels as f64).collect())
        .collect()
}
