//! `snntopo`: mask generation, graph encoding, topometrics, Ramanujan
//! baselines, regression and ranking from the command line.

mod commands;
mod manifest;
mod pipeline;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use snn_topo::analysis::{RegressorKind, Scenario};
use snn_topo::archspec::ArchitectureSpec;
use snn_topo::encoder::Encoding;
use snn_topo::fixtures;
use snn_topo::maskgen::{Method, WeightInit};
use snn_topo::topometrics::Category;

#[derive(Debug, Parser)]
#[command(name = "snntopo", version, about = "Graph encodings and topometrics for sparse neural networks")]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Rebuild the architecture at a reduced input resolution.
    #[arg(long, global = true, num_args = 2, value_names = ["H", "W"])]
    input_size: Option<Vec<usize>>,
    /// Root for relative output paths.
    #[arg(long, global = true, env = "SNNTOPO_HOME")]
    home: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate or inspect sparse masks.
    Mask {
        #[command(subcommand)]
        cmd: MaskCmd,
    },
    /// Encode a masked network as a graph.
    Encode(EncodeArgs),
    /// Compute topometrics of a graph file.
    Metrics(MetricsArgs),
    /// Per-layer Ramanujan metrics and their correlation with layer density.
    Ramanujan(RamanujanArgs),
    /// Accuracy-drop regression.
    Analyze {
        #[command(subcommand)]
        cmd: AnalyzeCmd,
    },
    /// Rank pruning algorithms by topometric mixture, or evaluate rankings.
    Rank(RankArgs),
    /// Mask, encode and measure one network end to end.
    Pipeline(PipelineArgs),
    /// Install the bundled architectures and accuracy tables.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightChoice {
    /// Normal(0, sqrt(2 / fan_in)).
    Gaussian,
    Unit,
}

impl From<WeightChoice> for WeightInit {
    fn from(w: WeightChoice) -> Self {
        match w {
            WeightChoice::Gaussian => WeightInit::GaussianFanIn,
            WeightChoice::Unit => WeightInit::UnitMagnitude,
        }
    }
}

#[derive(Debug, Subcommand)]
enum MaskCmd {
    /// Draw a random mask with a layer-wise sparsity rule.
    Gen {
        #[arg(long, default_value = "erk")]
        method: Method,
        #[arg(long)]
        sparsity: f64,
        /// Bundled architecture name or JSON file.
        #[arg(long)]
        arch: String,
        /// Attach random weights to the surviving entries.
        #[arg(long, value_enum)]
        weights: Option<WeightChoice>,
        /// Layer indices kept dense.
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-layer density of a mask file.
    Info {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    arch: String,
    #[arg(long)]
    mask: PathBuf,
    /// Keep weight values on the edges.
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value = "unrolled")]
    encoding: Encoding,
    /// `.csr`/`.bin` for the binary dump, anything else for the edge list.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct MetricSetArgs {
    /// Connected subgraph size for the motif count.
    #[arg(long, default_value_t = 4)]
    motif_size: usize,
    /// Undirected edge count above which motifs are sampled.
    #[arg(long, default_value_t = 200_000)]
    motif_budget: usize,
    /// Metric categories to compute (default: all).
    #[arg(long, value_delimiter = ',')]
    categories: Vec<Category>,
    /// Drop padding nodes before measuring.
    #[arg(long)]
    no_padding: bool,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    graph: PathBuf,
    /// JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Also append a metrics row to this CSV table.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Row metadata; defaults to the graph file stem.
    #[arg(long)]
    architecture: Option<String>,
    #[arg(long, default_value = "*")]
    dataset: String,
    #[arg(long, default_value = "unknown")]
    algorithm: String,
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long, default_value_t = 0)]
    run: usize,
    #[command(flatten)]
    set: MetricSetArgs,
}

#[derive(Debug, Args)]
struct RamanujanArgs {
    #[arg(long)]
    arch: String,
    /// One or more mask files; each becomes a series in the report.
    #[arg(long, required = true)]
    mask: Vec<PathBuf>,
    #[arg(long, default_value = "rolled")]
    encoding: Encoding,
    #[arg(long)]
    out: PathBuf,
    /// Plot-ready per-layer series normalized by their sums.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value = "*")]
    dataset: String,
    /// Algorithm label; defaults to the generator recorded next to each mask.
    #[arg(long)]
    algorithm: Option<String>,
    /// Sparsity label; defaults to the generator setting or 1 - density.
    #[arg(long)]
    sparsity: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct RegressArgs {
    /// Accuracy CSVs (default: the bundled tables).
    #[arg(long)]
    records: Vec<PathBuf>,
    /// Metrics CSVs produced by `metrics --csv` or `pipeline`.
    #[arg(long, required = true)]
    topometrics: Vec<PathBuf>,
    #[arg(long, default_value = "all")]
    scenario: Scenario,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Regressors to fit (default: all).
    #[arg(long, value_delimiter = ',')]
    regressors: Vec<RegressorKind>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCmd {
    /// Cross-validated regression of accuracy drop on topometrics.
    Regress(RegressArgs),
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
struct RankArgs {
    #[command(subcommand)]
    cmd: Option<RankCmd>,
    /// Metrics CSVs to rank.
    #[arg(long)]
    topometrics: Vec<PathBuf>,
    /// Regression reports of architecture-fixed scenarios.
    #[arg(long)]
    importance_arch: Vec<PathBuf>,
    /// Regression reports of sparsity-fixed scenarios.
    #[arg(long)]
    importance_sparsity: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the scores as a strategy CSV for `rank eval`.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum RankCmd {
    /// RBO of each strategy's ranking against the accuracy ranking.
    Eval {
        /// Accuracy CSVs (default: the bundled tables).
        #[arg(long)]
        records: Vec<PathBuf>,
        /// Directory of strategy CSVs, one strategy per file.
        #[arg(long)]
        strategies: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Strategy CSVs from the network-level Ramanujan baselines.
    Baselines {
        /// Reports written by `ramanujan`.
        #[arg(long, required = true)]
        reports: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    arch: String,
    #[arg(long, default_value = "erk")]
    method: Method,
    #[arg(long, default_value_t = 0.9)]
    sparsity: f64,
    /// Use this mask instead of generating one.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, value_enum)]
    weights: Option<WeightChoice>,
    #[arg(long, default_value = "unrolled")]
    encoding: Encoding,
    /// Keep weights on the graph edges (implies Gaussian weights if the mask has none).
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value = "*")]
    dataset: String,
    /// Algorithm label; defaults to the method.
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long, default_value_t = 0)]
    run: usize,
    #[command(flatten)]
    set: MetricSetArgs,
    /// Also compute per-layer Ramanujan metrics on the rolled encoding.
    #[arg(long)]
    ramanujan: bool,
    /// Accuracy CSVs; enables the regression stage.
    #[arg(long)]
    records: Vec<PathBuf>,
    /// Further metrics tables joined with this run's row for regression.
    #[arg(long)]
    metrics_table: Vec<PathBuf>,
    #[arg(long, default_value = "all")]
    scenario: Scenario,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Output directory (default: `runs/<arch>-<method>-<sparsity>-<seed>` under the home).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FixturesArgs {
    /// Target directory (default: `fixtures` under the home).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Settings shared by every subcommand.
pub struct Ctx {
    pub seed: u64,
    pub input_size: Option<(usize, usize)>,
    pub home: Option<PathBuf>,
}

impl Ctx {
    /// Loads a bundled or on-disk architecture, resized if requested.
    pub fn arch(&self, name_or_path: &str) -> Result<ArchitectureSpec> {
        let spec = fixtures::load_architecture_or_file(name_or_path)
            .with_context(|| format!("cannot load architecture `{name_or_path}`"))?;
        match self.input_size {
            Some((h, w)) => spec
                .with_input_size(h, w)
                .with_context(|| format!("input size {h}x{w} does not fit `{}`", spec.name())),
            None => Ok(spec),
        }
    }

    /// Relative output paths are placed under the home directory when one is set.
    pub fn out(&self, p: &Path) -> PathBuf {
        match &self.home {
            Some(home) if p.is_relative() => home.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn config(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.seed,
            "input_size": self.input_size.map(|(h, w)| [h, w]),
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    let input_size = match cli.input_size.as_deref() {
        Some([h, w]) if *h > 0 && *w > 0 => Some((*h, *w)),
        Some(_) => bail!("--input-size takes two positive integers"),
        None => None,
    };
    let ctx = Ctx {
        seed: cli.seed,
        input_size,
        home: cli.home,
    };
    match cli.command {
        Command::Mask { cmd } => match cmd {
            MaskCmd::Gen {
                method,
                sparsity,
                arch,
                weights,
                exclude,
                out,
            } => commands::mask_gen(&ctx, method, sparsity, &arch, weights.map(Into::into), exclude, &out),
            MaskCmd::Info { mask, out } => commands::mask_info(&ctx, &mask, out.as_deref()),
        },
        Command::Encode(a) => commands::encode(&ctx, &a.arch, &a.mask, a.weighted, a.encoding, &a.out),
        Command::Metrics(a) => commands::metrics(&ctx, a),
        Command::Ramanujan(a) => commands::ramanujan(&ctx, a),
        Command::Analyze {
            cmd: AnalyzeCmd::Regress(a),
        } => commands::regress(&ctx, a),
        Command::Rank(a) => match a.cmd {
            Some(RankCmd::Eval {
                records,
                strategies,
                out,
            }) => commands::rank_eval(&ctx, &records, &strategies, &out),
            Some(RankCmd::Baselines { reports, out }) => commands::rank_baselines(&ctx, &reports, &out),
            None => commands::rank(&ctx, a),
        },
        Command::Pipeline(a) => pipeline::run(&ctx, a),
        Command::Fixtures(a) => commands::fixtures(&ctx, a.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
