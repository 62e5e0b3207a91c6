use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;
use simfuse::bench::{
    planned_records, problem_order, read_records, run_experiment, single_modality_baseline, summarize,
    write_summary, ExperimentConfig, GroupKey, PartialMode,
};
use simfuse::cluster::{run_clusterer, Clusterer};
use simfuse::evalmetrics::{ami, ari};
use simfuse::integrate::{fuse_dataset, Method, PartialPolicy};
use simfuse::mmgen::io::{read_dataset, write_dataset, write_matrix};
use simfuse::mmgen::{build_problem, mask_cluster, mask_random, Problem};
use simfuse::netgraph::io::{read_edge_list, write_edge_list};
use simfuse::netgraph::{graph_stats, knn_graph};
use simfuse::{Dataset, Error};

#[derive(Parser)]
#[command(name = "simfuse", version, about = "Multi-modal similarity fusion benchmarks")]
struct Cli {
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset directory.
    Generate(GenerateArgs),
    /// Fuse a dataset and write the KNN network (and optionally the matrix).
    Fuse(FuseArgs),
    /// Network statistics of an edge list, as JSON.
    Stats(StatsArgs),
    /// Cluster an edge list and write one label per line.
    Cluster(ClusterArgs),
    /// Run an experiment grid from a config file.
    Run(RunArgs),
    /// Summarise a results CSV.
    Summarize(SummarizeArgs),
}

/// Options shared by commands that read an experiment config.
#[derive(Args)]
struct Common {
    /// TOML experiment config; flags override its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_entities: Option<usize>,
    #[arg(long)]
    n_features: Option<usize>,
    #[arg(long)]
    center_scale: Option<f64>,
    /// Neighbours per node, for both the kernel and the network.
    #[arg(long)]
    k: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Fail> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::desk(),
        };
        if let Some(n) = self.n_entities {
            cfg.shape.n_entities = n;
        }
        if let Some(d) = self.n_features {
            cfg.shape.n_features = d;
        }
        if let Some(s) = self.center_scale {
            cfg.generator.center_scale = s;
        }
        if let Some(k) = self.k {
            cfg.knn_k = k;
            cfg.fusion.kernel.k_neighbors = k;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Problem name, e.g. "Easy" or "Mixed Noisy 1Rand".
    #[arg(short, long)]
    problem: String,
    #[arg(short, long, default_value_t = 0)]
    seed: u64,
    /// Number of instances; more than one writes `instance_<i>` subdirectories.
    #[arg(long, default_value_t = 1)]
    instances: usize,
    /// Mask entities: none, random or cluster.
    #[arg(long, default_value = "none")]
    partial: String,
    #[arg(long, default_value_t = 0.0)]
    fraction: f64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct FuseArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset directory written by `generate`.
    #[arg(short, long)]
    dataset: PathBuf,
    #[arg(short, long, default_value = "mean")]
    method: String,
    #[arg(long, default_value = "none")]
    policy: String,
    /// Edge list destination.
    #[arg(short, long)]
    out: PathBuf,
    /// Also write the fused matrix here.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Edge list.
    #[arg(short, long)]
    graph: PathBuf,
    /// Partition for modularity and TPR: a dataset directory (truth labels)
    /// or a file with one label per line.
    #[arg(short, long)]
    labels: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short, long)]
    graph: PathBuf,
    #[arg(long, default_value = "leiden")]
    clusterer: String,
    #[arg(short, long)]
    seed: Option<u64>,
    /// Cluster count for spectral clustering.
    #[arg(long)]
    n_clusters: Option<usize>,
    /// Dataset directory whose truth labels are used for scoring.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Results CSV (overrides `output`).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Comma-separated problem names, "all" or "partial".
    #[arg(long)]
    problems: Option<String>,
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    clusterers: Option<String>,
    /// Also score every modality on its own.
    #[arg(long)]
    baselines: bool,
    /// Score single modalities only.
    #[arg(long)]
    baselines_only: bool,
    /// Print the record count and exit.
    #[arg(long)]
    dry_run: bool,
    /// Start from the full-scale preset instead of the desk preset.
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Results CSV written by `run`.
    #[arg(short, long)]
    input: PathBuf,
    /// Comma-separated group keys.
    #[arg(long, default_value = "problem,method,clusterer")]
    by: String,
    /// Print problems ranked by mean AMI instead (fused or baseline records).
    #[arg(long, value_name = "fused|baseline")]
    order: Option<String>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Exit status 1 for configuration problems, 2 for everything else.
enum Fail {
    Config(String),
    Runtime(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Fail::Config(m),
            other => Fail::Runtime(other),
        }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail::Runtime(e.into())
    }
}

fn parse<T: FromStr<Err = Error>>(s: &str) -> Result<T, Fail> {
    s.parse().map_err(|e: Error| Fail::Config(e.to_string()))
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Fail> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn generate(a: &GenerateArgs) -> Result<(), Fail> {
    let cfg = a.common.load()?;
    let problem: Problem = parse(&a.problem)?;
    let partial: PartialMode = parse(&a.partial)?;
    if a.instances == 0 || !(0.0..=1.0).contains(&a.fraction) {
        return Err(Fail::Config("need at least one instance and a fraction in [0, 1]".into()));
    }
    cfg.generator.validate().map_err(|e| Fail::Config(e.to_string()))?;
    for i in 0..a.instances {
        let seed = a.seed.wrapping_add(i as u64);
        let ds: Dataset = build_problem(problem, &cfg.shape, &cfg.generator, seed)?;
        let ds = match partial {
            PartialMode::None => ds,
            PartialMode::Random => mask_random(&ds, a.fraction, seed)?,
            PartialMode::Cluster => mask_cluster(&ds, a.fraction, seed)?,
        };
        let dir = if a.instances == 1 {
            a.out.clone()
        } else {
            a.out.join(format!("instance_{i}"))
        };
        write_dataset(&ds, &dir)?;
        info!("wrote {}", dir.display());
    }
    Ok(())
}

fn fuse(a: &FuseArgs) -> Result<(), Fail> {
    let cfg = a.common.load()?;
    let method: Method = parse(&a.method)?;
    let policy: PartialPolicy = parse(&a.policy)?;
    method.check_policy(policy).map_err(|e| Fail::Config(e.to_string()))?;
    cfg.fusion.validate().map_err(|e| Fail::Config(e.to_string()))?;
    let ds: Dataset = read_dataset(&a.dataset)?;
    let fused = fuse_dataset(&ds, method, policy, &cfg.fusion)?;
    for w in &fused.warnings {
        log::warn!("{w:?}");
    }
    if let Some(p) = &a.matrix {
        write_matrix(p, &fused.matrix.values().to_owned(), fused.matrix.present())?;
    }
    let g = knn_graph(&fused.matrix, cfg.knn_k)?;
    write_edge_list(&g, &a.out)?;
    info!("{} nodes, {} edges", g.n_nodes(), g.n_edges());
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<usize>, Fail> {
    if path.is_dir() {
        let ds: Dataset = read_dataset(path)?;
        return Ok(ds.truth.as_slice().to_vec());
    }
    fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<usize>()
                .map_err(|e| Fail::Runtime(Error::Format(format!("label {l:?}: {e}"))))
        })
        .collect()
}

fn stats(a: &StatsArgs) -> Result<(), Fail> {
    let g = read_edge_list(&a.graph)?;
    let labels = a.labels.as_deref().map(read_labels).transpose()?;
    let s = graph_stats(&g, labels.as_deref())?;
    let mut w = output(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &s).map_err(Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn cluster(a: &ClusterArgs) -> Result<(), Fail> {
    let cfg = a.common.load()?;
    let clusterer: Clusterer = parse(&a.clusterer)?;
    let mut params = cfg.clustering.clone();
    params.spectral_k = a.n_clusters.unwrap_or(cfg.shape.n_clusters);
    if let Some(s) = a.seed {
        params.seed = s;
    }
    params.validate().map_err(|e| Fail::Config(e.to_string()))?;
    let g = read_edge_list(&a.graph)?;
    let c = run_clusterer(&g, clusterer, &params)?;
    let mut w = output(a.out.as_deref())?;
    for l in c.labels.as_slice() {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    let mut report = format!("{} clusters", c.labels.n_clusters());
    if let Some(gamma) = c.gamma {
        report += &format!(", resolution {gamma:.4}");
    }
    if let Some(dir) = &a.truth {
        let truth = read_labels(dir)?;
        let pred = c.labels.as_slice();
        report += &format!(", AMI {:.4}, ARI {:.4}", ami(pred, &truth)?, ari(pred, &truth)?);
    }
    eprintln!("{report}");
    Ok(())
}

fn run(a: &RunArgs) -> Result<(), Fail> {
    let mut cfg = match (&a.common.config, a.full) {
        (None, true) => ExperimentConfig::full(),
        _ => a.common.load()?,
    };
    if a.full && a.common.config.is_some() {
        return Err(Fail::Config("--full cannot be combined with --config".into()));
    }
    if let Some(o) = &a.output {
        cfg.output = Some(o.clone());
    }
    cfg.resume |= a.resume;
    cfg.baselines |= a.baselines;
    if let Some(n) = a.instances {
        cfg.n_instances = n;
    }
    if let Some(s) = a.base_seed {
        cfg.base_seed = s;
    }
    if let Some(p) = &a.problems {
        cfg.problems = list(p);
    }
    if let Some(m) = &a.methods {
        cfg.methods = list(m);
    }
    if let Some(c) = &a.clusterers {
        cfg.clusterers = list(c);
    }
    let planned = planned_records(&cfg)?;
    if a.dry_run {
        println!("{planned} records");
        return Ok(());
    }
    let records = if a.baselines_only {
        single_modality_baseline(&cfg)?
    } else {
        run_experiment(&cfg)?
    };
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    eprintln!("{} records written, {failed} with errors", records.len());
    if cfg.output.is_none() {
        let keys = [GroupKey::Problem, GroupKey::Method, GroupKey::Clusterer];
        write_summary(&summarize(&records, &keys), &keys, io::stdout().lock())?;
    }
    Ok(())
}

fn summarize_cmd(a: &SummarizeArgs) -> Result<(), Fail> {
    let keys = list(&a.by)
        .iter()
        .map(|k| parse::<GroupKey>(k))
        .collect::<Result<Vec<_>, _>>()?;
    let records = read_records(&a.input)?;
    let mut w = output(a.out.as_deref())?;
    match a.order.as_deref() {
        None => write_summary(&summarize(&records, &keys), &keys, w)?,
        Some(which @ ("fused" | "baseline")) => {
            writeln!(w, "problem,mean_ami")?;
            for (p, m) in problem_order(&records, which == "baseline") {
                writeln!(w, "{p},{m:.4}")?;
            }
        }
        Some(other) => return Err(Fail::Config(format!("unknown order {other:?}"))),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log).init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Fuse(a) => fuse(a),
        Command::Stats(a) => stats(a),
        Command::Cluster(a) => cluster(a),
        Command::Run(a) => run(a),
        Command::Summarize(a) => summarize_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
