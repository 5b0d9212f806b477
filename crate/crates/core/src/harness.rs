//! Experiment orchestration: traced single runs and batteries of runs over
//! an (algorithm, population size) grid, with CSV outputs.
//!
//! Battery layout under `<out_dir>/<name>/`:
//!
//! ```text
//! instance.json              the landscape
//! pos.jsonl                  its Pareto optimal set
//! <algorithm>_p<size>/run<k>.csv   per-generation trace of run k
//! aggregate.csv              one row per run, in config order
//! cells.csv                  one row per (algorithm, size) cell
//! ```
//!
//! Run `k` of every cell uses seed `base_seed + k`, so algorithms are
//! compared on paired seeds.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aeseh::AesehParams;
use crate::engine::{self, AlgorithmKind, RunConfig, DEFAULT_KAPPA};
use crate::error::{Error, Result};
use crate::landscape::MnkLandscape;
use crate::pareto::{enumerate_pos, ParetoOptimalSet};
use crate::tracing::{summarize_run, IndexRecord, RunSummary, Tracer};

pub const TRACE_HEADER: [&str; 14] = [
    "run_id", "algorithm", "m", "pop_size", "t", "f1_size", "tau", "tau_minus", "tau_plus",
    "tau_star", "delta", "gamma", "alpha", "beta",
];

/// The outcome of one traced run.
#[derive(Clone, Debug)]
pub struct TracedRun {
    pub records: Vec<IndexRecord>,
    pub summary: RunSummary,
}

/// Runs `config` on `landscape`, tracing every generation against `pos`.
pub fn run_traced(landscape: &MnkLandscape, pos: &ParetoOptimalSet, config: &RunConfig) -> Result<TracedRun> {
    let mut tracer = Tracer::new(pos, landscape, config.population_size)?;
    engine::run(config, landscape, &mut tracer)?;
    let records = tracer.into_records();
    let summary = summarize_run(&records)?;
    Ok(TracedRun { records, summary })
}

#[derive(Serialize)]
struct TraceRow<'a> {
    run_id: &'a str,
    algorithm: &'a str,
    m: usize,
    pop_size: usize,
    t: usize,
    f1_size: usize,
    tau: f64,
    tau_minus: f64,
    tau_plus: f64,
    tau_star: f64,
    delta: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
}

pub fn write_trace_csv(
    path: &Path,
    run_id: &str,
    algorithm: AlgorithmKind,
    m: usize,
    records: &[IndexRecord],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(TraceRow {
            run_id,
            algorithm: algorithm.name(),
            m,
            pop_size: r.pop_size,
            t: r.t,
            f1_size: r.f1_size(),
            tau: r.tau,
            tau_minus: r.tau_minus,
            tau_plus: r.tau_plus,
            tau_star: r.tau_star,
            delta: r.delta,
            gamma: r.gamma,
            alpha: r.alpha,
            beta: r.beta,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One run's row in `aggregate.csv` (also used for single-run summaries).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub run_id: String,
    pub algorithm: AlgorithmKind,
    pub m: usize,
    pub pop_size: usize,
    pub run: usize,
    pub seed: u64,
    pub pos_size: usize,
    /// `100 * |P| / |POS|`.
    pub pop_pos_pct: f64,
    pub status: String,
    pub mean_tau: Option<f64>,
    pub mean_tau_minus: Option<f64>,
    pub mean_tau_plus: Option<f64>,
    pub mean_tau_star: Option<f64>,
    pub mean_delta: Option<f64>,
    pub mean_gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub archive_po: Option<usize>,
}

impl AggregateRow {
    fn new(job: &Job, m: usize, pos_size: usize, outcome: std::result::Result<&RunSummary, String>) -> Self {
        let s = outcome.as_ref().ok();
        AggregateRow {
            run_id: job.run_id(),
            algorithm: job.algorithm,
            m,
            pop_size: job.pop_size,
            run: job.run,
            seed: job.seed,
            pos_size,
            pop_pos_pct: pop_pos_pct(job.pop_size, pos_size),
            status: match &outcome {
                Ok(_) => "ok".to_string(),
                Err(e) => format!("error: {e}"),
            },
            mean_tau: s.map(|s| s.mean_tau),
            mean_tau_minus: s.map(|s| s.mean_tau_minus),
            mean_tau_plus: s.map(|s| s.mean_tau_plus),
            mean_tau_star: s.map(|s| s.mean_tau_star),
            mean_delta: s.map(|s| s.mean_delta),
            mean_gamma: s.map(|s| s.mean_gamma),
            alpha: s.map(|s| s.alpha),
            beta: s.map(|s| s.beta),
            archive_po: s.map(|s| s.archive_po),
        }
    }

    pub fn from_summary(job: &Job, m: usize, pos_size: usize, summary: &RunSummary) -> Self {
        Self::new(job, m, pos_size, Ok(summary))
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn pop_pos_pct(pop_size: usize, pos_size: usize) -> f64 {
    if pos_size == 0 {
        f64::INFINITY
    } else {
        100.0 * pop_size as f64 / pos_size as f64
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

/// A battery config file (TOML or JSON). Defaults follow the usual
/// protocol: `pc = 1`, `pm = 1/n`, `kappa = 0.001`, `h_ref = 20`,
/// `T = 100`, 30 runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    pub name: String,
    pub landscape: LandscapeSpec,
    /// Existing instance file to use instead of generating; must match
    /// `landscape`. Relative paths resolve against the config file.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    /// Existing POS file to use instead of enumerating.
    #[serde(default)]
    pub pos: Option<PathBuf>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<AlgorithmKind>,
    pub population_sizes: Vec<usize>,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_crossover_rate")]
    pub crossover_rate: f64,
    #[serde(default)]
    pub mutation_rate: Option<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub aeseh: AesehParams,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_algorithms() -> Vec<AlgorithmKind> {
    AlgorithmKind::ALL.to_vec()
}

fn default_generations() -> usize {
    100
}

fn default_runs() -> usize {
    30
}

fn default_crossover_rate() -> f64 {
    1.0
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl BatteryConfig {
    /// A config with protocol defaults for the given grid.
    pub fn new(name: &str, landscape: LandscapeSpec, population_sizes: Vec<usize>) -> Self {
        BatteryConfig {
            name: name.to_string(),
            landscape,
            instance: None,
            pos: None,
            algorithms: default_algorithms(),
            population_sizes,
            generations: default_generations(),
            runs: default_runs(),
            base_seed: 0,
            crossover_rate: default_crossover_rate(),
            mutation_rate: None,
            kappa: default_kappa(),
            aeseh: AesehParams::default(),
            workers: None,
        }
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        parse_config(text)
    }

    /// Reads a config file, resolving relative instance/POS paths against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.instance, &mut config.pos].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn run_config(&self, algorithm: AlgorithmKind, pop_size: usize, seed: u64) -> RunConfig {
        RunConfig {
            algorithm,
            population_size: pop_size,
            generations: self.generations,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            kappa: self.kappa,
            aeseh: self.aeseh.clone(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name == ".." {
            return bad(format!("battery name {:?} is not a plain directory name", self.name));
        }
        if self.algorithms.is_empty() || self.population_sizes.is_empty() {
            return bad("algorithms and population_sizes must be non-empty".into());
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        for &p in &self.population_sizes {
            self.run_config(self.algorithms[0], p, 0)
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// The jobs of the battery in config order: algorithm, then population
    /// size, then run.
    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for &algorithm in &self.algorithms {
            for &pop_size in &self.population_sizes {
                for run in 0..self.runs {
                    jobs.push(Job {
                        algorithm,
                        pop_size,
                        run,
                        seed: self.base_seed.wrapping_add(run as u64),
                    });
                }
            }
        }
        jobs
    }
}

/// Settings of a single run read from a config file. Missing fields fall
/// back to defaults or to command-line values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub algorithm: Option<AlgorithmKind>,
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub kappa: Option<f64>,
    pub aeseh: Option<AesehParams>,
    pub seed: Option<u64>,
}

impl RunSettings {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        parse_config(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Later settings win field by field.
    pub fn overridden_by(self, other: RunSettings) -> RunSettings {
        RunSettings {
            algorithm: other.algorithm.or(self.algorithm),
            population_size: other.population_size.or(self.population_size),
            generations: other.generations.or(self.generations),
            crossover_rate: other.crossover_rate.or(self.crossover_rate),
            mutation_rate: other.mutation_rate.or(self.mutation_rate),
            kappa: other.kappa.or(self.kappa),
            aeseh: other.aeseh.or(self.aeseh),
            seed: other.seed.or(self.seed),
        }
    }

    /// A full config; algorithm and population size are required.
    pub fn resolve(self) -> Result<RunConfig> {
        let algorithm = self
            .algorithm
            .ok_or_else(|| Error::Config("no algorithm given".into()))?;
        let population_size = self
            .population_size
            .ok_or_else(|| Error::Config("no population size given".into()))?;
        let config = RunConfig {
            algorithm,
            population_size,
            generations: self.generations.unwrap_or_else(default_generations),
            crossover_rate: self.crossover_rate.unwrap_or_else(default_crossover_rate),
            mutation_rate: self.mutation_rate,
            kappa: self.kappa.unwrap_or(DEFAULT_KAPPA),
            aeseh: self.aeseh.unwrap_or_default(),
            seed: self.seed.unwrap_or(0),
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_config<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Job {
    pub algorithm: AlgorithmKind,
    pub pop_size: usize,
    pub run: usize,
    pub seed: u64,
}

impl Job {
    pub fn cell_dir(&self) -> String {
        format!("{}_p{}", self.algorithm.name(), self.pop_size)
    }

    pub fn run_id(&self) -> String {
        format!("{}_p{}_r{}", self.algorithm.name(), self.pop_size, self.run)
    }
}

#[derive(Serialize)]
struct CellRow {
    algorithm: AlgorithmKind,
    pop_size: usize,
    pos_size: usize,
    pop_pos_pct: f64,
    runs: usize,
    failed: usize,
}

/// What a battery produced.
#[derive(Clone, Debug)]
pub struct BatteryReport {
    pub dir: PathBuf,
    pub pos_size: usize,
    pub rows: Vec<AggregateRow>,
}

impl BatteryReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }
}

/// Loads or builds the battery's landscape and Pareto optimal set.
pub fn prepare_instance(config: &BatteryConfig) -> Result<(MnkLandscape, ParetoOptimalSet)> {
    let spec = &config.landscape;
    let landscape = match &config.instance {
        Some(path) => MnkLandscape::load(path)?,
        None => MnkLandscape::generate(spec.m, spec.n, spec.k, spec.seed)?,
    };
    if (landscape.m(), landscape.n(), landscape.k(), landscape.seed()) != (spec.m, spec.n, spec.k, spec.seed) {
        return Err(Error::Config(format!(
            "instance file does not match landscape spec {spec:?}"
        )));
    }
    let pos = match &config.pos {
        Some(path) => {
            let pos = ParetoOptimalSet::load(path)?;
            pos.verify(&landscape)?;
            pos
        }
        None => enumerate_pos(&landscape),
    };
    Ok((landscape, pos))
}

/// Runs every job of the battery with `workers` threads (the config's value
/// when `None`) and writes all outputs. Output bytes do not depend on the
/// worker count. A run that fails is recorded in its row and the battery
/// continues.
pub fn run_battery(config: &BatteryConfig, out_dir: &Path, workers: Option<usize>) -> Result<BatteryReport> {
    config.validate()?;
    let (landscape, pos) = prepare_instance(config)?;
    let dir = out_dir.join(&config.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    landscape.save(&dir.join("instance.json"))?;
    pos.save(&dir.join("pos.jsonl"))?;

    let jobs = config.jobs();
    for job in &jobs {
        let cell = dir.join(job.cell_dir());
        fs::create_dir_all(&cell).map_err(|e| Error::io(&cell, e))?;
    }

    let m = landscape.m();
    let execute = |job: &Job| -> AggregateRow {
        let run_config = config.run_config(job.algorithm, job.pop_size, job.seed);
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| -> Result<RunSummary> {
            let traced = run_traced(&landscape, &pos, &run_config)?;
            let path = dir.join(job.cell_dir()).join(format!("run{}.csv", job.run));
            write_trace_csv(&path, &job.run_id(), job.algorithm, m, &traced.records)?;
            Ok(traced.summary)
        }));
        let outcome = match outcome {
            Ok(Ok(summary)) => Ok(summary),
            Ok(Err(e)) => Err(e.to_string()),
            Err(payload) => Err(panic_message(payload)),
        };
        AggregateRow::new(job, m, pos.len(), outcome.as_ref().map_err(|e| e.clone()))
    };

    let threads = workers.or(config.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<AggregateRow> = pool.install(|| jobs.par_iter().map(execute).collect());

    write_rows(&dir.join("aggregate.csv"), &rows)?;
    let mut cells = Vec::new();
    for &algorithm in &config.algorithms {
        for &pop_size in &config.population_sizes {
            let in_cell = rows
                .iter()
                .filter(|r| r.algorithm == algorithm && r.pop_size == pop_size);
            cells.push(CellRow {
                algorithm,
                pop_size,
                pos_size: pos.len(),
                pop_pos_pct: pop_pos_pct(pop_size, pos.len()),
                runs: in_cell.clone().count(),
                failed: in_cell.filter(|r| !r.is_ok()).count(),
            });
        }
    }
    write_rows(&dir.join("cells.csv"), &cells)?;
    Ok(BatteryReport {
        dir,
        pos_size: pos.len(),
        rows,
    })
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let text = r#"
            name = "grid"
            population_sizes = [50, 100]
            [landscape]
            m = 3
            n = 10
            k = 1
            seed = 7
        "#;
        let c = BatteryConfig::parse(text).unwrap();
        assert_eq!(c.generations, 100);
        assert_eq!(c.runs, 30);
        assert_eq!(c.kappa, 0.001);
        assert_eq!(c.crossover_rate, 1.0);
        assert_eq!(c.aeseh.h_ref, 20);
        assert_eq!(c.algorithms.len(), 3);
        assert_eq!(c.jobs().len(), 180);

        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(BatteryConfig::parse(&json).unwrap(), c);

        assert!(BatteryConfig::parse("name = 1").is_err());
        let mut bad = c.clone();
        bad.population_sizes = vec![51];
        assert!(bad.validate().is_err());
        let mut bad = c;
        bad.name = "../x".into();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn paired_seeds_across_cells() {
        let mut c = BatteryConfig::new("p", LandscapeSpec { m: 2, n: 6, k: 1, seed: 0 }, vec![4, 8]);
        c.runs = 3;
        c.base_seed = 100;
        let jobs = c.jobs();
        for cell in jobs.chunks(3) {
            let seeds: Vec<u64> = cell.iter().map(|j| j.seed).collect();
            assert_eq!(seeds, vec![100, 101, 102]);
        }
        assert_eq!(jobs[0].run_id(), "aeseh_p4_r0");
    }

    #[test]
    fn run_settings_merge() {
        let file = RunSettings::parse("algorithm = \"ibea\"\npopulation_size = 20\nkappa = 0.05").unwrap();
        let flags = RunSettings {
            population_size: Some(40),
            ..Default::default()
        };
        let c = file.overridden_by(flags).resolve().unwrap();
        assert_eq!(c.algorithm, AlgorithmKind::Ibea);
        assert_eq!(c.population_size, 40);
        assert_eq!(c.kappa, 0.05);
        assert_eq!(c.generations, 100);
        assert!(RunSettings::default().resolve().is_err());
        assert!(RunSettings::parse("{\"bogus\": 1}").is_err());
    }

    #[test]
    fn median_of_small_samples() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }
}
