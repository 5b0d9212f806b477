use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mnklab::aeseh::AesehParams;
use mnklab::harness::{self, AggregateRow, Job};
use mnklab::{count_fronts, enumerate_pos, AlgorithmKind, BatteryConfig, Error, MnkLandscape, ParetoOptimalSet, RunSettings};

/// Many-objective evolutionary search on MNK-landscapes.
#[derive(Parser)]
#[command(name = "mnklab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a landscape instance.
    Generate {
        #[arg(short, long)]
        m: usize,
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long, default_value_t = 0)]
        seed: u64,
        /// Instance file to write.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Enumerate the Pareto optimal set of an instance.
    Enumerate {
        #[arg(short, long)]
        instance: PathBuf,
        /// POS file to write.
        #[arg(short, long)]
        out: PathBuf,
        /// Also count the non-dominated fronts of the whole space.
        #[arg(long)]
        fronts: bool,
    },
    /// Run one algorithm once and trace it against the Pareto optimal set.
    Run(RunArgs),
    /// Run a battery of experiments from a config file.
    Battery(BatteryArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    instance: PathBuf,
    #[arg(short, long)]
    pos: PathBuf,
    /// TOML or JSON run config; flags override its fields.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    algorithm: Option<AlgorithmKind>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(short = 'T', long)]
    generations: Option<usize>,
    #[arg(short, long)]
    seed: Option<u64>,
    #[arg(long)]
    crossover_rate: Option<f64>,
    /// Per-bit mutation rate; defaults to 1/n.
    #[arg(long)]
    mutation_rate: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Reference hood size of AeSeH.
    #[arg(long)]
    h_ref: Option<usize>,
    #[arg(short, long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BatteryArgs {
    /// TOML or JSON battery config.
    config: PathBuf,
    #[arg(short, long)]
    out_dir: PathBuf,
    /// Worker threads; defaults to the config value, then to all cores.
    #[arg(short, long)]
    workers: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(short = 'T', long)]
    generations: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<AlgorithmKind>>,
    #[arg(long, value_delimiter = ',')]
    pop_sizes: Option<Vec<usize>>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

fn execute(command: Command) -> mnklab::Result<()> {
    match command {
        Command::Generate { m, n, k, seed, out } => {
            let landscape = MnkLandscape::generate(m, n, k, seed)?;
            landscape.save(&out)?;
            println!("genotype space: 2^{n} = {}", landscape.space_size());
            Ok(())
        }
        Command::Enumerate { instance, out, fronts } => {
            let landscape = MnkLandscape::load(&instance)?;
            if fronts && landscape.n() >= 20 {
                eprintln!(
                    "warning: counting fronts sorts all 2^{} genotypes; this takes a while",
                    landscape.n()
                );
            }
            let mut pos = enumerate_pos(&landscape);
            if fronts {
                pos.set_fronts(count_fronts(&landscape));
            }
            pos.save(&out)?;
            match pos.fronts() {
                Some(f) => println!("|POS| = {}, fronts = {f}", pos.len()),
                None => println!("|POS| = {}", pos.len()),
            }
            Ok(())
        }
        Command::Run(args) => run(args),
        Command::Battery(args) => battery(args),
    }
}

fn run(args: RunArgs) -> mnklab::Result<()> {
    let landscape = MnkLandscape::load(&args.instance)?;
    let pos = ParetoOptimalSet::load(&args.pos)?;
    pos.check_landscape(&landscape)?;

    let file = match &args.config {
        Some(path) => RunSettings::load(path)?,
        None => RunSettings::default(),
    };
    let aeseh = args.h_ref.map(|h_ref| AesehParams {
        h_ref,
        ..file.aeseh.clone().unwrap_or_default()
    });
    let flags = RunSettings {
        algorithm: args.algorithm,
        population_size: args.pop_size,
        generations: args.generations,
        crossover_rate: args.crossover_rate,
        mutation_rate: args.mutation_rate,
        kappa: args.kappa,
        aeseh,
        seed: args.seed,
    };
    let config = file.overridden_by(flags).resolve()?;

    let traced = harness::run_traced(&landscape, &pos, &config)?;
    create_dir(&args.out_dir)?;
    let job = Job {
        algorithm: config.algorithm,
        pop_size: config.population_size,
        run: 0,
        seed: config.seed,
    };
    let stem = format!("{}_p{}_s{}", config.algorithm.name(), config.population_size, config.seed);
    let trace_path = args.out_dir.join(format!("{stem}.csv"));
    harness::write_trace_csv(&trace_path, &stem, config.algorithm, landscape.m(), &traced.records)?;
    let mut row = AggregateRow::from_summary(&job, landscape.m(), pos.len(), &traced.summary);
    row.run_id = stem.clone();
    harness::write_rows(&args.out_dir.join(format!("{stem}_summary.csv")), &[row])?;

    let s = &traced.summary;
    println!(
        "{}: alpha = {:.4}, beta = {:.4}, mean tau = {:.4}, mean tau* = {:.4}",
        stem, s.alpha, s.beta, s.mean_tau, s.mean_tau_star
    );
    println!("trace: {}", trace_path.display());
    Ok(())
}

fn battery(args: BatteryArgs) -> mnklab::Result<()> {
    let mut config = BatteryConfig::load(&args.config)?;
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    if let Some(t) = args.generations {
        config.generations = t;
    }
    if let Some(seed) = args.base_seed {
        config.base_seed = seed;
    }
    if let Some(algorithms) = args.algorithms {
        config.algorithms = algorithms;
    }
    if let Some(sizes) = args.pop_sizes {
        config.population_sizes = sizes;
    }
    if args.workers == Some(0) {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let report = harness::run_battery(&config, &args.out_dir, args.workers)?;
    let failed = report.failed();
    println!(
        "{} runs, {failed} failed, |POS| = {}; results in {}",
        report.rows.len(),
        report.pos_size,
        report.dir.display()
    );
    if failed > 0 {
        return Err(Error::Runtime(format!("{failed} runs failed; see aggregate.csv")));
    }
    Ok(())
}

fn create_dir(path: &Path) -> mnklab::Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
