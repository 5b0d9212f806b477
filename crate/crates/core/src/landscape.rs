//! MNK-landscapes: `m` independent NK fitness functions over one `n`-bit
//! genotype, each bit's contribution depending on itself and `k` randomly
//! chosen epistatic neighbors. All objectives are maximized.

use std::fmt;
use std::fs;
use std::ops::Deref;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rng::{self, Draws};

pub const MAX_BITS: usize = 64;
pub const MAX_OBJECTIVES: usize = 16;
/// Upper bound on `m * n * 2^(k+1)` contribution values held in memory.
pub const MAX_TABLE_ENTRIES: usize = 1 << 28;

/// A fixed-width bit string of at most 64 bits. Bit `i` is `(bits >> i) & 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype {
    bits: u64,
    n_bits: u8,
}

impl Genotype {
    pub fn new(bits: u64, n_bits: usize) -> Result<Self> {
        if n_bits == 0 || n_bits > MAX_BITS {
            return Err(Error::InvalidParameter(format!(
                "genotype width {n_bits} outside 1..={MAX_BITS}"
            )));
        }
        if bits & !Self::mask(n_bits) != 0 {
            return Err(Error::InvalidParameter(format!(
                "genotype {bits:#x} has bits set beyond width {n_bits}"
            )));
        }
        Ok(Genotype {
            bits,
            n_bits: n_bits as u8,
        })
    }

    /// Caller guarantees `bits` fits in `n_bits`.
    pub(crate) fn from_raw(bits: u64, n_bits: usize) -> Self {
        debug_assert!((1..=MAX_BITS).contains(&n_bits));
        debug_assert_eq!(bits & !Self::mask(n_bits), 0);
        Genotype {
            bits,
            n_bits: n_bits as u8,
        }
    }

    pub fn random<R: Draws + ?Sized>(n_bits: usize, rng: &mut R) -> Self {
        Self::from_raw(rng.next_u64() & Self::mask(n_bits), n_bits)
    }

    /// All-ones word covering the low `n_bits` bits.
    pub fn mask(n_bits: usize) -> u64 {
        if n_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << n_bits) - 1
        }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn n_bits(self) -> usize {
        self.n_bits as usize
    }

    pub fn bit(self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn with_flipped(self, i: usize) -> Self {
        debug_assert!(i < self.n_bits());
        Genotype {
            bits: self.bits ^ (1u64 << i),
            ..self
        }
    }

    /// Lower-case hex, zero padded to `ceil(n/4)` digits.
    pub fn to_hex(self) -> String {
        let width = self.n_bits().div_ceil(4);
        format!("{:0width$x}", self.bits, width = width)
    }

    pub fn from_hex(text: &str, n_bits: usize) -> Result<Self> {
        let bits = u64::from_str_radix(text, 16)
            .map_err(|e| Error::InvalidParameter(format!("bad genotype hex {text:?}: {e}")))?;
        Self::new(bits, n_bits)
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Most significant bit first.
        for i in (0..self.n_bits()).rev() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One fitness value per objective, each in `[0, 1)`.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Self {
        ObjectiveVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ObjectiveVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(values: Vec<f64>) -> Self {
        ObjectiveVector(values)
    }
}

/// The evaluation function of an MNK instance.
///
/// For objective `j` and bit `i` the contribution table is indexed by
/// `x_i * 2^k + sum_t x_{nb[t]} * 2^(k-1-t)`, i.e. the bit itself is the most
/// significant digit followed by its neighbors in declared order.
#[derive(Clone, PartialEq)]
pub struct MnkLandscape {
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    /// `m * n * k` entries, row `(j, i)` at `(j * n + i) * k`.
    neighbors: Vec<u8>,
    /// `m * n * 2^(k+1)` entries, row `(j, i)` at `(j * n + i) << (k + 1)`.
    tables: Vec<f64>,
}

impl fmt::Debug for MnkLandscape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MnkLandscape")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

fn check_parameters(m: usize, n: usize, k: usize) -> Result<()> {
    if !(1..=MAX_OBJECTIVES).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "objective count m={m} outside 1..={MAX_OBJECTIVES}"
        )));
    }
    if !(1..=MAX_BITS).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "bit count n={n} outside 1..={MAX_BITS}"
        )));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!(
            "epistasis k={k} must be smaller than n={n}"
        )));
    }
    let entries = (m * n) as u128 * (1u128 << (k + 1).min(100));
    if entries > MAX_TABLE_ENTRIES as u128 {
        return Err(Error::InvalidParameter(format!(
            "m*n*2^(k+1) = {entries} contribution values exceeds {MAX_TABLE_ENTRIES}"
        )));
    }
    Ok(())
}

impl MnkLandscape {
    /// Builds the instance determined by `(m, n, k, seed)`.
    ///
    /// Row `(j, i)` draws from its own stream `child_seed(seed, j * n + i)`:
    /// first `k` neighbors by a partial Fisher-Yates over the ascending
    /// candidates `[0, n) \ {i}`, then `2^(k+1)` table values with `unit()`.
    pub fn generate(m: usize, n: usize, k: usize, seed: u64) -> Result<Self> {
        check_parameters(m, n, k)?;
        let width = 1usize << (k + 1);
        let mut neighbors = Vec::with_capacity(m * n * k);
        let mut tables = Vec::with_capacity(m * n * width);
        let mut candidates = Vec::with_capacity(n);
        for j in 0..m {
            for i in 0..n {
                let mut rng = rng::stream(rng::child_seed(seed, (j * n + i) as u64));
                candidates.clear();
                candidates.extend((0..n as u8).filter(|&c| c as usize != i));
                for t in 0..k {
                    let r = t + rng.below(candidates.len() - t);
                    candidates.swap(t, r);
                }
                neighbors.extend_from_slice(&candidates[..k]);
                tables.extend((0..width).map(|_| rng.unit()));
            }
        }
        Ok(MnkLandscape {
            m,
            n,
            k,
            seed,
            neighbors,
            tables,
        })
    }

    /// Builds a landscape from explicit data, checking every invariant.
    /// The instance seed is recorded but not used to verify the data.
    pub fn from_parts(
        m: usize,
        n: usize,
        k: usize,
        seed: u64,
        neighbors: Vec<Vec<Vec<usize>>>,
        tables: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        check_parameters(m, n, k).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        let bad = |msg: String| Error::InvalidInstance(msg);
        if neighbors.len() != m || tables.len() != m {
            return Err(bad(format!("expected {m} objectives of neighbors and tables")));
        }
        let width = 1usize << (k + 1);
        let mut flat_neighbors = Vec::with_capacity(m * n * k);
        let mut flat_tables = Vec::with_capacity(m * n * width);
        for j in 0..m {
            if neighbors[j].len() != n || tables[j].len() != n {
                return Err(bad(format!("objective {j}: expected {n} bits")));
            }
            for i in 0..n {
                let nb = &neighbors[j][i];
                if nb.len() != k {
                    return Err(bad(format!("neighbors[{j}][{i}] must have {k} entries")));
                }
                for (t, &v) in nb.iter().enumerate() {
                    if v >= n || v == i || nb[..t].contains(&v) {
                        return Err(bad(format!("neighbors[{j}][{i}] = {nb:?} is not a valid set")));
                    }
                    flat_neighbors.push(v as u8);
                }
                let table = &tables[j][i];
                if table.len() != width {
                    return Err(bad(format!("tables[{j}][{i}] must have {width} entries")));
                }
                if let Some(v) = table.iter().find(|v| !(0.0..1.0).contains(*v)) {
                    return Err(bad(format!("tables[{j}][{i}] value {v} outside [0, 1)")));
                }
                flat_tables.extend_from_slice(table);
            }
        }
        Ok(MnkLandscape {
            m,
            n,
            k,
            seed,
            neighbors: flat_neighbors,
            tables: flat_tables,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Size of the genotype space, `2^n`.
    pub fn space_size(&self) -> u128 {
        1u128 << self.n
    }

    pub fn neighbors(&self, objective: usize, bit: usize) -> &[u8] {
        let start = (objective * self.n + bit) * self.k;
        &self.neighbors[start..start + self.k]
    }

    pub fn table(&self, objective: usize, bit: usize) -> &[f64] {
        let width = 1usize << (self.k + 1);
        let start = (objective * self.n + bit) * width;
        &self.tables[start..start + width]
    }

    pub fn evaluate(&self, g: Genotype) -> ObjectiveVector {
        let mut out = vec![0.0; self.m];
        self.evaluate_into(g, &mut out);
        ObjectiveVector(out)
    }

    /// Writes the `m` objective values of `g` into `out`.
    pub fn evaluate_into(&self, g: Genotype, out: &mut [f64]) {
        assert_eq!(g.n_bits(), self.n, "genotype width does not match landscape");
        assert_eq!(out.len(), self.m);
        let x = g.bits();
        let k = self.k;
        let width = 1usize << (k + 1);
        for (j, value) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            for i in 0..self.n {
                let row = j * self.n + i;
                let mut index = ((x >> i) & 1) as usize;
                for &nb in &self.neighbors[row * k..row * k + k] {
                    index = (index << 1) | ((x >> nb) & 1) as usize;
                }
                sum += self.tables[row * width + index];
            }
            *value = sum / self.n as f64;
        }
    }

    /// Instance file text: pretty JSON, tables with 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"m\": {},\n", self.m));
        out.push_str(&format!("  \"n\": {},\n", self.n));
        out.push_str(&format!("  \"k\": {},\n", self.k));
        out.push_str(&format!("  \"instance_seed\": {},\n", self.seed));
        out.push_str("  \"neighbor_model\": \"random\",\n");
        out.push_str("  \"neighbors\": [\n");
        for j in 0..self.m {
            let rows: Vec<String> = (0..self.n)
                .map(|i| {
                    let nb: Vec<String> =
                        self.neighbors(j, i).iter().map(|v| v.to_string()).collect();
                    format!("[{}]", nb.join(", "))
                })
                .collect();
            let sep = if j + 1 < self.m { "," } else { "" };
            out.push_str(&format!("    [{}]{sep}\n", rows.join(", ")));
        }
        out.push_str("  ],\n");
        out.push_str("  \"tables\": [\n");
        for j in 0..self.m {
            out.push_str("    [\n");
            for i in 0..self.n {
                let values: Vec<String> =
                    self.table(j, i).iter().map(|v| format!("{v:.16e}")).collect();
                let sep = if i + 1 < self.n { "," } else { "" };
                out.push_str(&format!("      [{}]{sep}\n", values.join(", ")));
            }
            let sep = if j + 1 < self.m { "," } else { "" };
            out.push_str(&format!("    ]{sep}\n"));
        }
        out.push_str("  ]\n}\n");
        out
    }

    /// Parses an instance file. When neighbors and tables are present they
    /// must satisfy the invariants and equal the regeneration from the seed.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct InstanceFile {
            m: usize,
            n: usize,
            k: usize,
            instance_seed: u64,
            #[serde(default)]
            neighbor_model: Option<String>,
            #[serde(default)]
            neighbors: Option<Vec<Vec<Vec<usize>>>>,
            #[serde(default)]
            tables: Option<Vec<Vec<Vec<f64>>>>,
        }

        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        if let Some(model) = &file.neighbor_model {
            if model != "random" {
                return Err(Error::InvalidInstance(format!(
                    "unsupported neighbor model {model:?}"
                )));
            }
        }
        let regenerated = Self::generate(file.m, file.n, file.k, file.instance_seed)
            .map_err(|e| Error::InvalidInstance(e.to_string()))?;
        match (file.neighbors, file.tables) {
            (None, None) => Ok(regenerated),
            (Some(neighbors), Some(tables)) => {
                let loaded = Self::from_parts(
                    file.m,
                    file.n,
                    file.k,
                    file.instance_seed,
                    neighbors,
                    tables,
                )?;
                if loaded != regenerated {
                    return Err(Error::InvalidInstance(
                        "materialized neighbors/tables differ from regeneration by seed".into(),
                    ));
                }
                Ok(loaded)
            }
            _ => Err(Error::InvalidInstance(
                "neighbors and tables must be given together".into(),
            )),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
