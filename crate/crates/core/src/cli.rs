//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{canonical_spec, generate_tagged_pool, run_al_experiment, ExperimentOptions, SyntheticPoolSpec};
use crate::cluster::{flat_clusters, upgma_linkage_owned, ClusterPartition, Dendrogram, NoveltyClass};
use crate::io::records::relabel;
use crate::io::{
    export_clusters, load_trajectories, read_id_list, write_manifest, write_trajectories, ManifestDocument,
    RecordFormat,
};
use crate::metric::{pairwise_distances, MetricWeights};
use crate::sampler::{default_grid, plan_experiment_grid, sampling_round_with, Budget, SamplingConfig, DEFAULT_TAU};
use crate::trajectory::TrajectoryPool;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Parser)]
#[command(name = "trajcurate", version, about = "Novelty-aware selection of trajectory data for annotation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster a pool and export assignments and the dendrogram.
    Cluster(ClusterArgs),
    /// Run one sampling round and write its manifest.
    Sample(SampleArgs),
    /// Run the surrogate active-learning sweep and write a results CSV.
    Simulate(SimulateArgs),
    /// Print the cluster size histogram and novelty census.
    Stats(StatsArgs),
    /// Write a synthetic trajectory pool.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for RecordFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => RecordFormat::Jsonl,
            FormatArg::Csv => RecordFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
struct PoolArgs {
    /// Trajectory file (.jsonl or .csv).
    #[arg(long)]
    input: PathBuf,
    /// Record format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// File of labeled ids, one per line; replaces the per-record flags.
    #[arg(long)]
    labeled: Option<PathBuf>,
    /// Flat-cluster threshold.
    #[arg(long, default_value_t = DEFAULT_TAU, value_parser = parse_tau)]
    tau: f64,
    /// State-term weights `ka,kv,kh`.
    #[arg(long, default_value = "0.05,0.025,1.0", value_parser = parse_weights)]
    weights: MetricWeights,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    pool: PoolArgs,
    /// Output directory for assignments.csv and dendrogram.txt.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write the condensed distance matrix in binary form.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    pool: PoolArgs,
    /// Fraction of the budget drawn from novel data, in [0, 1].
    #[arg(long, value_parser = parse_alpha)]
    alpha: f64,
    /// Fraction of a cluster one pass may take, in (0, 1].
    #[arg(long, value_parser = parse_beta)]
    beta: f64,
    /// Annotation budget: a count (`200`) or a fraction of the pool (`0.1`).
    #[arg(long, value_parser = parse_budget)]
    budget: Budget,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Round index, mixed into the random streams.
    #[arg(long, default_value_t = 0)]
    round: u32,
    /// Manifest path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// `default`, or `ALPHAS/BETAS/BUDGETS` with comma-separated values.
    #[arg(long, default_value = "default", value_parser = parse_grid)]
    grid: GridArg,
    /// Number of seeds; seeds 0..N are run.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Synthetic pool spec (JSON); the shipped fixture when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Predicted modes per query.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k_modes: u64,
    /// Results CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    pool: PoolArgs,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Synthetic pool spec (JSON); the shipped fixture when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the item count of the spec.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: Option<u64>,
    /// Override the seed of the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output trajectory file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone)]
enum GridArg {
    Default,
    Custom { alphas: Vec<f64>, betas: Vec<f64>, budgets: Vec<f64> },
}

fn parse_fraction(s: &str, lo_open: bool) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    let ok = if lo_open { x > 0.0 && x <= 1.0 } else { (0.0..=1.0).contains(&x) };
    if ok {
        Ok(x)
    } else if lo_open {
        Err(format!("{x} is outside (0, 1]"))
    } else {
        Err(format!("{x} is outside [0, 1]"))
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    parse_fraction(s, false)
}

fn parse_beta(s: &str) -> Result<f64, String> {
    parse_fraction(s, true)
}

fn parse_tau(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("{s:?} is not a finite non-negative number")),
    }
}

fn parse_budget(s: &str) -> Result<Budget, String> {
    let s = s.trim();
    if let Ok(n) = s.parse::<usize>() {
        return if n >= 1 { Ok(Budget::Count(n)) } else { Err("budget must be at least 1".into()) };
    }
    parse_beta(s).map(Budget::Fraction)
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number")))
        .collect()
}

fn parse_weights(s: &str) -> Result<MetricWeights, String> {
    match parse_list(s)?.as_slice() {
        &[k_a, k_v, k_h] => MetricWeights::new(k_a, k_v, k_h).map_err(|e| e.to_string()),
        _ => Err("expected three comma-separated weights ka,kv,kh".into()),
    }
}

fn parse_grid(s: &str) -> Result<GridArg, String> {
    if s == "default" {
        return Ok(GridArg::Default);
    }
    let parts: Vec<&str> = s.split('/').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err("expected `default` or ALPHAS/BETAS/BUDGETS".into());
    };
    let alphas = parse_list(a)?.into_iter().map(|x| parse_alpha(&x.to_string())).collect::<Result<_, _>>()?;
    let betas = parse_list(b)?.into_iter().map(|x| parse_beta(&x.to_string())).collect::<Result<_, _>>()?;
    let budgets = parse_list(c)?.into_iter().map(|x| parse_beta(&x.to_string())).collect::<Result<_, _>>()?;
    Ok(GridArg::Custom { alphas, betas, budgets })
}

/// Parses `argv` (program name first) and runs the command. Diagnostics go
/// to standard error.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Cluster(args) => run_cluster(args),
        Command::Sample(args) => run_sample(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Stats(args) => run_stats(args),
        Command::Generate(args) => run_generate(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

struct Loaded {
    pool: TrajectoryPool,
    digest: String,
}

fn load_pool(args: &PoolArgs) -> Result<Loaded, BoxError> {
    let loaded = load_trajectories(&args.input, args.format.map(Into::into))?;
    let pool = match &args.labeled {
        Some(path) => relabel(loaded.pool, &read_id_list(path)?)?,
        None => loaded.pool,
    };
    if pool.is_empty() {
        return Err(format!("{} holds no trajectories", args.input.display()).into());
    }
    Ok(Loaded {
        pool,
        digest: loaded.digest,
    })
}

fn cluster(args: &PoolArgs, pool: &TrajectoryPool, dump: Option<&Path>) -> Result<(Dendrogram, ClusterPartition), BoxError> {
    let matrix = pairwise_distances(pool.items(), &args.weights);
    if let Some(path) = dump {
        let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?);
        matrix.write_dump(&mut w)?;
        w.flush()?;
    }
    let dendrogram = upgma_linkage_owned(matrix);
    let partition = flat_clusters(&dendrogram, args.tau, pool.labeled())?;
    Ok((dendrogram, partition))
}

fn run_cluster(args: ClusterArgs) -> Result<(), BoxError> {
    let loaded = load_pool(&args.pool)?;
    let (dendrogram, partition) = cluster(&args.pool, &loaded.pool, args.dump_matrix.as_deref())?;
    export_clusters(&loaded.pool, &partition, &dendrogram, &args.out)?;
    Ok(())
}

fn run_sample(args: SampleArgs) -> Result<(), BoxError> {
    let loaded = load_pool(&args.pool)?;
    let cfg = SamplingConfig {
        alpha: args.alpha,
        beta: args.beta,
        budget: args.budget,
        tau: args.pool.tau,
        weights: args.pool.weights,
        seed: args.seed,
    };
    cfg.validate()?;
    let dendrogram = upgma_linkage_owned(pairwise_distances(loaded.pool.items(), &cfg.weights));
    let manifest = sampling_round_with(&loaded.pool, &dendrogram, &cfg, args.round)?;
    write_manifest(&ManifestDocument::new(manifest, loaded.digest), &args.out)?;
    Ok(())
}

fn load_spec(path: Option<&Path>) -> Result<SyntheticPoolSpec, BoxError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(serde_json::from_str(&text)?)
        }
        None => Ok(canonical_spec()),
    }
}

fn run_simulate(args: SimulateArgs) -> Result<(), BoxError> {
    let spec = load_spec(args.spec.as_deref())?;
    let pool = generate_tagged_pool(&spec)?;
    let grid = match args.grid {
        GridArg::Default => default_grid(),
        GridArg::Custom { alphas, betas, budgets } => plan_experiment_grid(&alphas, &betas, &budgets)?,
    };
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let opts = ExperimentOptions {
        k_modes: args.k_modes as usize,
        ..ExperimentOptions::default()
    };
    let result = run_al_experiment(&pool, &grid, &seeds, &opts)?;
    let mut w = std::io::BufWriter::new(fs::File::create(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?);
    result.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Cluster size histogram and novelty census as plain text.
pub fn stats_report(pool: &TrajectoryPool, p: &ClusterPartition) -> String {
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    let mut census: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    for c in 0..p.n_clusters() {
        *sizes.entry(p.members(c).len()).or_default() += 1;
        let e = census.entry(p.class_of(c).as_str()).or_default();
        e.0 += 1;
        e.1 += p.members(c).len();
    }
    let mut out = String::new();
    out.push_str(&format!("items {}\n", pool.len()));
    out.push_str(&format!("labeled {}\n", pool.labeled().len()));
    out.push_str(&format!("tau {}\n", crate::io::fmt::g17(p.tau())));
    out.push_str(&format!("clusters {}\n", p.n_clusters()));
    out.push_str("\nclass clusters items\n");
    for class in [
        NoveltyClass::Novel,
        NoveltyClass::Singleton,
        NoveltyClass::Familiar,
        NoveltyClass::LabeledSingleton,
    ] {
        let (c, n) = census.get(class.as_str()).copied().unwrap_or_default();
        out.push_str(&format!("{} {c} {n}\n", class.as_str()));
    }
    out.push_str("\nsize clusters\n");
    for (size, count) in sizes {
        out.push_str(&format!("{size} {count}\n"));
    }
    out
}

fn run_stats(args: StatsArgs) -> Result<(), BoxError> {
    let loaded = load_pool(&args.pool)?;
    let (_, partition) = cluster(&args.pool, &loaded.pool, None)?;
    let report = stats_report(&loaded.pool, &partition);
    match &args.out {
        Some(path) => fs::write(path, report).map_err(|e| format!("{}: {e}", path.display()))?,
        None => std::io::stdout().write_all(report.as_bytes())?,
    }
    Ok(())
}

fn run_generate(args: GenerateArgs) -> Result<(), BoxError> {
    let mut spec = load_spec(args.spec.as_deref())?;
    if let Some(n) = args.count {
        spec.total_count = n as usize;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let format: RecordFormat = match args.format {
        Some(f) => f.into(),
        None => RecordFormat::from_path(&args.out)
            .ok_or_else(|| format!("cannot tell the record format of {}", args.out.display()))?,
    };
    let pool = TrajectoryPool::new(generate_tagged_pool(&spec)?.items)?;
    let mut w = std::io::BufWriter::new(fs::File::create(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?);
    write_trajectories(&pool, format, &mut w)?;
    w.flush()?;
    Ok(())
}
