//! A laboratory for many-objective evolutionary search on MNK-landscapes.
//!
//! The crate generates MNK-landscape instances, enumerates their exact Pareto
//! optimal sets, runs NSGA-II, IBEA (additive epsilon indicator) and AeSeH
//! (adaptive epsilon-sampling and epsilon-hood) under a shared elitist loop,
//! and traces how well each run accumulates Pareto optimal solutions.

pub mod aeseh;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ibea;
pub mod landscape;
pub mod nsga2;
pub mod pareto;
pub mod rng;
pub mod tracing;

pub use engine::{run, AlgorithmKind, Individual, Observer, RunConfig};
pub use error::{Error, Result};
pub use harness::{run_battery, run_traced, BatteryConfig, BatteryReport, LandscapeSpec, RunSettings};
pub use landscape::{Genotype, MnkLandscape, ObjectiveVector};
pub use pareto::{count_fronts, dominates, enumerate_pos, nondominated_sort, ParetoOptimalSet};
pub use tracing::{IndexRecord, ParetoArchive, RunSummary, Tracer};
