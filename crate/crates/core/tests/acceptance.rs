//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails. Thresholds are fixed below.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use mnklab::harness::{median, run_battery, AggregateRow, BatteryConfig, LandscapeSpec};
use mnklab::ibea::{ibea_fitness, ibea_survival};
use mnklab::nsga2::nsga2_survival;
use mnklab::rng::{self, Draws};
use mnklab::tracing::IndexRecord;
use mnklab::{
    enumerate_pos, nondominated_sort, run_traced, AlgorithmKind, Genotype, MnkLandscape, ObjectiveVector,
    ParetoArchive, RunConfig,
};

const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(10);
const IBEA_RELATIVE_TOLERANCE: f64 = 1e-9;
const MIN_ALGEBRA_RUNS: usize = 90;
const ARCHIVE_STREAMS: usize = 10;
const QUALITATIVE_RUNS: usize = 30;
const QUALITATIVE_TIME_LIMIT: Duration = Duration::from_secs(30 * 60);
const RATIO_RANGE: (f64, f64) = (1.3, 3.0);
const BETA_AESEH: (f64, f64) = (8.0, 16.0);
const BETA_IBEA: (f64, f64) = (4.0, 9.0);
const CROSSOVER_SEEDS: [u64; 3] = [11, 12, 13];
const CROSSOVER_MIN_FLIPS: usize = 2;
const POS_GROWTH_SEEDS: [u64; 5] = [21, 22, 23, 24, 25];
const POS_GROWTH_FACTOR: f64 = 10.0;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn enumeration_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng::stream(1001);
    let mut mismatches = Vec::new();
    for i in 0..10 {
        let n = [8, 10, 12][rng.below(3)];
        let m = [2, 3, 4][rng.below(3)];
        let k = rng.below(2);
        let l = MnkLandscape::generate(m, n, k, 500 + i).unwrap();
        let got: BTreeSet<u64> = enumerate_pos(&l).members().iter().map(|(g, _)| g.bits()).collect();
        if got != brute_force_pos(&l) {
            mismatches.push(format!("m={m} n={n} k={k}"));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches.is_empty() && elapsed < ORACLE_TIME_LIMIT,
        format!("10 instances, mismatches {mismatches:?}, {:.2?}", elapsed),
    )
}

fn selection_oracle() -> Outcome {
    let start = Instant::now();
    let (mut sort_bad, mut nsga_bad, mut ibea_fit_bad, mut ibea_bad) = (0, 0, 0, 0);
    let mut worst_rel: f64 = 0.0;
    let kappa = 0.001;
    for case in 0..50 {
        let points = random_points(7000 + case, 40, 4);
        let fronts: Vec<BTreeSet<usize>> = nondominated_sort(&points)
            .into_iter()
            .map(|f| f.into_iter().collect())
            .collect();
        sort_bad += usize::from(fronts != peel_fronts(&points));

        let survivors = nsga2_survival(&points, 20, &mut rng::stream(case));
        nsga_bad += usize::from(!oracle_nsga2_survival(&points, 20).admits(&survivors));

        let fit = ibea_fitness(&points, kappa);
        let normalized = oracle_normalize(&points);
        let all: Vec<usize> = (0..points.len()).collect();
        for x in 0..points.len() {
            let want = oracle_log_fitness(&normalized, &all, x, kappa);
            // F = -exp(L): the relative error of F is exp(|dL|) - 1.
            let rel = (fit.log_magnitude(x) - want).abs().exp_m1();
            worst_rel = worst_rel.max(rel);
            ibea_fit_bad += usize::from(rel.is_nan() || rel > IBEA_RELATIVE_TOLERANCE);
        }
        let got: BTreeSet<usize> = ibea_survival(&points, 20, kappa).into_iter().collect();
        ibea_bad += usize::from(got != oracle_ibea_survival(&points, 20, kappa));
    }
    let elapsed = start.elapsed();
    outcome(
        sort_bad + nsga_bad + ibea_fit_bad + ibea_bad == 0 && elapsed < ORACLE_TIME_LIMIT,
        format!(
            "50 inputs, mismatches sort {sort_bad} nsga2 {nsga_bad} ibea-fitness {ibea_fit_bad} ibea-survival {ibea_bad}, \
             worst fitness rel err {worst_rel:.1e}, {elapsed:.2?}"
        ),
    )
}

fn algebra_violations(records: &[IndexRecord]) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let c = &r.counts;
        let p = r.pop_size as f64;
        let mut check = |ok: bool, what: &str| {
            if !ok {
                bad.push(format!("t={} {what}", r.t));
            }
        };
        check(c.po == c.old + c.possibly_new, "tau = tau- + tau+");
        check(c.absolutely_new <= c.possibly_new, "tau* <= tau+");
        check(c.po + c.non_po == r.f1_size(), "(tau + gamma)|P| = |F1|");
        check(r.tau == c.po as f64 / p && r.gamma == c.non_po as f64 / p, "index fractions");
        check(r.beta == c.archive_po as f64 / p, "beta = alpha |POS| / |P|");
        check(r.alpha == c.archive_po as f64 / r.pos_size as f64, "alpha fraction");
        if i > 0 {
            let prev = &records[i - 1];
            check(prev.counts.po == c.old + c.dropped, "tau(t-1) = tau-(t) + delta(t)");
            check(r.alpha >= prev.alpha, "alpha non-decreasing");
        }
    }
    bad
}

fn index_algebra() -> Outcome {
    let l = MnkLandscape::generate(4, 16, 1, 3003).unwrap();
    let pos = enumerate_pos(&l);
    let mut runs = 0;
    let mut violations = Vec::new();
    for algorithm in AlgorithmKind::ALL {
        for seed in 0..30 {
            let traced = run_traced(&l, &pos, &RunConfig::new(algorithm, 50, 100, seed)).unwrap();
            runs += 1;
            for v in algebra_violations(&traced.records) {
                violations.push(format!("{algorithm} seed {seed}: {v}"));
            }
        }
    }
    violations.truncate(5);
    outcome(
        runs >= MIN_ALGEBRA_RUNS && violations.is_empty(),
        format!("{runs} runs of 101 generations, violations {violations:?}"),
    )
}

fn archive_consistency() -> Outcome {
    let mut bad = 0;
    for s in 0..ARCHIVE_STREAMS as u64 {
        let m = 2 + (s % 4) as usize;
        let l = MnkLandscape::generate(m, 14, 1, 4000 + s).unwrap();
        let mut rng = rng::stream(s);
        let stream: Vec<(u64, Vec<f64>)> = (0..3000)
            .map(|_| {
                let g = rng.below(1 << 14) as u64;
                (g, l.evaluate(Genotype::new(g, 14).unwrap()).to_vec())
            })
            .collect();
        let mut archive = ParetoArchive::new();
        for chunk in stream.chunks(100) {
            let front: Vec<(Genotype, ObjectiveVector)> = chunk
                .iter()
                .map(|(g, v)| (Genotype::new(*g, 14).unwrap(), v.clone().into()))
                .collect();
            archive.update(front.iter().map(|(g, v)| (g, v)));
        }
        let got: BTreeSet<u64> = archive.members().iter().map(|(g, _)| g.bits()).collect();
        bad += usize::from(got != oracle_archive(&stream));
    }
    outcome(bad == 0, format!("{ARCHIVE_STREAMS} streams of 3000, mismatches {bad}"))
}

fn determinism() -> Outcome {
    let mut config = BatteryConfig::new("det", LandscapeSpec { m: 4, n: 14, k: 1, seed: 5005 }, vec![20, 40]);
    config.runs = 4;
    config.generations = 30;
    config.base_seed = 77;
    let read = |workers: usize| -> Vec<u8> {
        let dir = tempfile::tempdir().unwrap();
        run_battery(&config, dir.path(), Some(workers)).unwrap();
        std::fs::read(dir.path().join("det").join("aggregate.csv")).unwrap()
    };
    let runs = [read(1), read(1), read(4), read(4)];
    let same = runs.iter().all(|r| r == &runs[0]);
    outcome(
        same,
        format!("two executions each with 1 and 4 workers, {} bytes, identical {same}", runs[0].len()),
    )
}

fn medians(rows: &[AggregateRow], algorithm: AlgorithmKind, pop: usize, f: fn(&AggregateRow) -> Option<f64>) -> f64 {
    let values: Vec<f64> = rows
        .iter()
        .filter(|r| r.algorithm == algorithm && r.pop_size == pop)
        .filter_map(f)
        .collect();
    median(&values).unwrap_or(f64::NAN)
}

fn battery(dir: &Path, name: &str, spec: LandscapeSpec, algorithms: Vec<AlgorithmKind>, pops: Vec<usize>) -> Vec<AggregateRow> {
    let mut config = BatteryConfig::new(name, spec, pops);
    config.algorithms = algorithms;
    config.runs = QUALITATIVE_RUNS;
    config.base_seed = 1;
    let report = run_battery(&config, dir, None).unwrap();
    assert_eq!(report.failed(), 0, "runs failed in battery {name}");
    report.rows
}

fn qualitative(dir: &Path) -> Outcome {
    use AlgorithmKind::{Aeseh, Ibea, Nsga2};
    let start = Instant::now();
    let rows = battery(
        dir,
        "m6",
        LandscapeSpec { m: 6, n: 20, k: 1, seed: 6006 },
        vec![Aeseh, Nsga2, Ibea],
        vec![200],
    );
    let elapsed = start.elapsed();
    let med = |a, f| medians(&rows, a, 200, f);
    let alpha = |a| med(a, |r| r.alpha);
    let tau = |a| med(a, |r| r.mean_tau);
    let tau_star = |a| med(a, |r| r.mean_tau_star);
    let beta = |a| med(a, |r| r.beta);
    let ratio = alpha(Aeseh) / alpha(Ibea);
    let a = alpha(Aeseh) > alpha(Ibea)
        && alpha(Aeseh) > alpha(Nsga2)
        && (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&ratio);
    let b = tau(Ibea) > tau(Aeseh) && tau(Aeseh) > tau(Nsga2);
    let c = tau_star(Aeseh) > tau_star(Ibea) && tau_star(Aeseh) > tau_star(Nsga2);
    let d = (BETA_AESEH.0..=BETA_AESEH.1).contains(&beta(Aeseh)) && (BETA_IBEA.0..=BETA_IBEA.1).contains(&beta(Ibea));
    outcome(
        a && b && c && d && elapsed < QUALITATIVE_TIME_LIMIT,
        format!(
            "alpha A/N/I {:.4}/{:.4}/{:.4} ratio {ratio:.2} [{}]; tau I/A/N {:.3}/{:.3}/{:.3} [{}]; \
             tau* A/N/I {:.4}/{:.4}/{:.4} [{}]; beta A {:.2} I {:.2} [{}]; {} runs in {elapsed:.1?}",
            alpha(Aeseh),
            alpha(Nsga2),
            alpha(Ibea),
            flag(a),
            tau(Ibea),
            tau(Aeseh),
            tau(Nsga2),
            flag(b),
            tau_star(Aeseh),
            tau_star(Nsga2),
            tau_star(Ibea),
            flag(c),
            beta(Aeseh),
            beta(Ibea),
            flag(d),
            rows.len(),
        ),
    )
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "no"
    }
}

fn crossover(dir: &Path) -> Outcome {
    use AlgorithmKind::{Ibea, Nsga2};
    let mut flips = 0;
    let mut notes = Vec::new();
    for seed in CROSSOVER_SEEDS {
        let rows = battery(
            dir,
            &format!("m4_s{seed}"),
            LandscapeSpec { m: 4, n: 20, k: 1, seed },
            vec![Nsga2, Ibea],
            vec![50, 200],
        );
        let diff = |pop| medians(&rows, Ibea, pop, |r| r.alpha) - medians(&rows, Nsga2, pop, |r| r.alpha);
        let (small, large) = (diff(50), diff(200));
        let flipped = small > 0.0 && large < 0.0;
        flips += usize::from(flipped);
        notes.push(format!("seed {seed}: I-N {small:+.4} -> {large:+.4}"));
    }
    outcome(
        flips >= CROSSOVER_MIN_FLIPS,
        format!("{flips}/{} flips; {}", CROSSOVER_SEEDS.len(), notes.join("; ")),
    )
}

fn pos_growth() -> Outcome {
    let mut med = Vec::new();
    for m in 2..=6 {
        let sizes: Vec<f64> = POS_GROWTH_SEEDS
            .iter()
            .map(|&seed| enumerate_pos(&MnkLandscape::generate(m, 20, 1, seed).unwrap()).len() as f64)
            .collect();
        med.push(median(&sizes).unwrap());
    }
    let monotone = med.windows(2).all(|w| w[1] >= w[0]);
    let factor = med[4] / med[1];
    outcome(
        monotone && factor >= POS_GROWTH_FACTOR,
        format!("median |POS| M=2..6 {med:?}, M6/M3 {factor:.1}"),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<Criterion> = vec![
        ("enumeration equals brute-force maxima", Box::new(enumeration_oracle)),
        ("sorting and survival equal reference implementations", Box::new(selection_oracle)),
        ("index algebra holds on every trace", Box::new(index_algebra)),
        ("incremental archive equals batch filter", Box::new(archive_consistency)),
        ("battery output is byte-identical", Box::new(determinism)),
        ("m=6 trends: resolution, tau, tau*, beta", Box::new(|| qualitative(dir.path()))),
        ("m=4 IBEA/NSGA-II crossover with population size", Box::new(|| crossover(dir.path()))),
        ("|POS| grows with the number of objectives", Box::new(pos_growth)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        failed += usize::from(!result.pass);
        println!(
            "{} [{}] {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
