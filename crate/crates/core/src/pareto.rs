//! Pareto dominance under maximization, non-dominated sorting, and exact
//! Pareto optimal set enumeration over a whole genotype space.
//!
//! Sorting and skyline filtering visit points in descending order of their
//! objective sum, ties broken by descending lexicographic order. Floating
//! point addition is monotone, so whenever `a` strictly dominates `b` the
//! point `a` is visited first; a point therefore only needs to be compared
//! against points already placed.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{Genotype, MnkLandscape, ObjectiveVector};

/// Strict Pareto dominance for maximization: `a >= b` everywhere and
/// `a > b` somewhere.
#[inline]
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len(), "objective vectors of different length");
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Row access shared by slices of vectors and flat row-major buffers.
pub(crate) trait Rows: Sync {
    fn len(&self) -> usize;
    fn row(&self, i: usize) -> &[f64];
}

impl<V: AsRef<[f64]> + Sync> Rows for [V] {
    fn len(&self) -> usize {
        <[V]>::len(self)
    }

    fn row(&self, i: usize) -> &[f64] {
        self[i].as_ref()
    }
}

pub(crate) struct Flat<'a> {
    pub data: &'a [f64],
    pub m: usize,
}

impl Rows for Flat<'_> {
    fn len(&self) -> usize {
        self.data.len() / self.m
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }
}

fn visit_order<R: Rows + ?Sized>(points: &R, ids: &mut [usize]) {
    let sums: Vec<f64> = (0..points.len())
        .map(|i| points.row(i).iter().sum())
        .collect();
    ids.sort_by(|&a, &b| {
        sums[b].total_cmp(&sums[a]).then_with(|| {
            let (ra, rb) = (points.row(a), points.row(b));
            for (x, y) in ra.iter().zip(rb) {
                match y.total_cmp(x) {
                    Ordering::Equal => continue,
                    other => return other,
                }
            }
            Ordering::Equal
        })
    });
}

/// A front stored contiguously for cache-friendly dominance scans.
struct FrontBuf {
    ids: Vec<usize>,
    values: Vec<f64>,
}

impl FrontBuf {
    fn new() -> Self {
        FrontBuf {
            ids: Vec::new(),
            values: Vec::new(),
        }
    }

    fn push(&mut self, id: usize, row: &[f64]) {
        self.ids.push(id);
        self.values.extend_from_slice(row);
    }

    fn has_dominator(&self, row: &[f64]) -> bool {
        self.find_dominator(row).is_some()
    }

    fn find_dominator(&self, row: &[f64]) -> Option<usize> {
        self.values
            .chunks_exact(row.len())
            .position(|member| dominates(member, row))
    }

    /// Moves member `i` halfway to the front so frequent dominators are
    /// found sooner.
    fn promote(&mut self, i: usize, m: usize) {
        let j = i / 2;
        if i != j {
            self.ids.swap(i, j);
            let (head, tail) = self.values.split_at_mut(i * m);
            head[j * m..(j + 1) * m].swap_with_slice(&mut tail[..m]);
        }
    }
}

/// Splits the points into ranked fronts (binary search over fronts, as in
/// efficient non-dominated sorting). Indices inside each front ascend.
fn sort_fronts<R: Rows + ?Sized>(points: &R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    visit_order(points, &mut order);
    let mut fronts: Vec<FrontBuf> = Vec::new();
    for &p in &order {
        let row = points.row(p);
        let (mut lo, mut hi) = (0, fronts.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if fronts[mid].has_dominator(row) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == fronts.len() {
            fronts.push(FrontBuf::new());
        }
        fronts[lo].push(p, row);
    }
    fronts
        .into_iter()
        .map(|f| {
            let mut ids = f.ids;
            ids.sort_unstable();
            ids
        })
        .collect()
}

/// Indices of the points not strictly dominated by any other, ascending.
pub(crate) fn skyline_of<R: Rows + ?Sized>(points: &R, ids: &mut [usize]) -> Vec<usize> {
    visit_order(points, ids);
    let mut front = FrontBuf::new();
    for &p in ids.iter() {
        let row = points.row(p);
        match front.find_dominator(row) {
            Some(i) => front.promote(i, row.len()),
            None => front.push(p, row),
        }
    }
    let mut out = front.ids;
    out.sort_unstable();
    out
}

/// The fronts F1, F2, ... of `points`; each front lists indices into
/// `points` in ascending order.
pub fn nondominated_sort<V: AsRef<[f64]> + Sync>(points: &[V]) -> Vec<Vec<usize>> {
    sort_fronts(points)
}

/// Indices of the first front of `points`, ascending.
pub fn first_front<V: AsRef<[f64]> + Sync>(points: &[V]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..points.len()).collect();
    skyline_of(points, &mut ids)
}

/// Number of genotypes evaluated per parallel enumeration chunk.
const CHUNK_BITS: usize = 14;

fn evaluate_range(landscape: &MnkLandscape, start: u64, len: usize) -> Vec<f64> {
    let m = landscape.m();
    let n = landscape.n();
    let mut values = vec![0.0; len * m];
    for (offset, row) in values.chunks_exact_mut(m).enumerate() {
        landscape.evaluate_into(Genotype::from_raw(start + offset as u64, n), row);
    }
    values
}

struct Skyline {
    genotypes: Vec<u64>,
    values: Vec<f64>,
}

impl Skyline {
    fn filter(self, m: usize) -> Skyline {
        let flat = Flat {
            data: &self.values,
            m,
        };
        let mut ids: Vec<usize> = (0..self.genotypes.len()).collect();
        let keep = skyline_of(&flat, &mut ids);
        let mut values = Vec::with_capacity(keep.len() * m);
        for &i in &keep {
            values.extend_from_slice(flat.row(i));
        }
        Skyline {
            genotypes: keep.iter().map(|&i| self.genotypes[i]).collect(),
            values,
        }
    }
}

/// The exact Pareto optimal set of `landscape` by exhaustive enumeration.
///
/// The genotype space is cut into chunks whose local skylines are computed
/// in parallel; one final filter over their union gives the global skyline,
/// which does not depend on the chunking. Members are ordered by genotype.
pub fn enumerate_pos(landscape: &MnkLandscape) -> ParetoOptimalSet {
    let m = landscape.m();
    let n = landscape.n();
    assert!(n <= 40, "enumerating 2^{n} genotypes is not feasible");
    let total = 1u64 << n;
    let chunk = 1u64 << CHUNK_BITS.min(n);
    let chunks = total / chunk;
    let locals: Vec<Skyline> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let values = evaluate_range(landscape, start, chunk as usize);
            Skyline {
                genotypes: (start..start + chunk).collect(),
                values,
            }
            .filter(m)
        })
        .collect();
    let mut sky = Skyline {
        genotypes: Vec::new(),
        values: Vec::new(),
    };
    for local in locals {
        sky.genotypes.extend(local.genotypes);
        sky.values.extend(local.values);
    }
    let sky = sky.filter(m);
    let mut members: Vec<(Genotype, ObjectiveVector)> = sky
        .genotypes
        .iter()
        .zip(sky.values.chunks_exact(m))
        .map(|(&g, v)| (Genotype::from_raw(g, n), ObjectiveVector::new(v.to_vec())))
        .collect();
    members.sort_by_key(|(g, _)| g.bits());
    ParetoOptimalSet {
        header: PosHeader {
            m,
            n,
            k: landscape.k(),
            instance_seed: landscape.seed(),
            pos_size: members.len(),
            fronts: None,
        },
        members,
    }
}

/// Number of non-dominated fronts of the whole genotype space. Peels all
/// `2^n` points; expensive for `n = 20`.
pub fn count_fronts(landscape: &MnkLandscape) -> usize {
    let n = landscape.n();
    assert!(n <= 32, "front counting over 2^{n} genotypes is not feasible");
    let values = evaluate_range(landscape, 0, 1usize << n);
    let flat = Flat {
        data: &values,
        m: landscape.m(),
    };
    sort_fronts(&flat).len()
}

/// Header record of a POS file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosHeader {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub instance_seed: u64,
    pub pos_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fronts: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct PosRecord {
    genotype_hex: String,
    objectives: Vec<f64>,
}

/// The Pareto optimal set of one landscape, tagged with the landscape's
/// parameters. Members are unique by genotype and ordered by genotype.
#[derive(Clone, Debug, PartialEq)]
pub struct ParetoOptimalSet {
    header: PosHeader,
    members: Vec<(Genotype, ObjectiveVector)>,
}

impl ParetoOptimalSet {
    pub fn header(&self) -> &PosHeader {
        &self.header
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

    pub fn fronts(&self) -> Option<usize> {
        self.header.fronts
    }

    pub fn set_fronts(&mut self, fronts: usize) {
        self.header.fronts = Some(fronts);
    }

    pub fn contains(&self, g: Genotype) -> bool {
        self.members
            .binary_search_by_key(&g.bits(), |(h, _)| h.bits())
            .is_ok()
    }

    /// Fails unless the set was computed for exactly this landscape.
    pub fn check_landscape(&self, landscape: &MnkLandscape) -> Result<()> {
        let h = &self.header;
        if (h.m, h.n, h.k, h.instance_seed)
            != (landscape.m(), landscape.n(), landscape.k(), landscape.seed())
        {
            return Err(Error::PosMismatch(format!(
                "set is for (m={}, n={}, k={}, seed={}), landscape is (m={}, n={}, k={}, seed={})",
                h.m,
                h.n,
                h.k,
                h.instance_seed,
                landscape.m(),
                landscape.n(),
                landscape.k(),
                landscape.seed()
            )));
        }
        Ok(())
    }

    /// Like [`check_landscape`](Self::check_landscape), and additionally
    /// re-evaluates every member.
    pub fn verify(&self, landscape: &MnkLandscape) -> Result<()> {
        self.check_landscape(landscape)?;
        for (g, v) in &self.members {
            if landscape.evaluate(*g) != *v {
                return Err(Error::PosMismatch(format!(
                    "objectives of member {} differ from the landscape",
                    g.to_hex()
                )));
            }
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<pos output>", e);
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n").map_err(io)?;
        for (g, v) in &self.members {
            let record = PosRecord {
                genotype_hex: g.to_hex(),
                objectives: v.values().to_vec(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let bad = |msg: String| Error::InvalidPosFile(msg);
        let mut lines = input.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .map_err(|e| Error::io("<pos input>", e))?;
        let header: PosHeader =
            serde_json::from_str(&header_line).map_err(|e| bad(format!("header: {e}")))?;
        let mut members = Vec::with_capacity(header.pos_size);
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("<pos input>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: PosRecord = serde_json::from_str(&line)
                .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
            let g = Genotype::from_hex(&record.genotype_hex, header.n)
                .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
            if record.objectives.len() != header.m {
                return Err(bad(format!(
                    "line {}: expected {} objectives",
                    lineno + 2,
                    header.m
                )));
            }
            members.push((g, ObjectiveVector::new(record.objectives)));
        }
        if members.len() != header.pos_size {
            return Err(bad(format!(
                "header announces {} members, found {}",
                header.pos_size,
                members.len()
            )));
        }
        members.sort_by_key(|(g, _)| g.bits());
        if members.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(bad("duplicate genotype".into()));
        }
        Ok(ParetoOptimalSet { header, members })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}
