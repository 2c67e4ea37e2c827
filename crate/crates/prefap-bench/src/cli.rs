//! Command-line surface: flag definitions, value parsers and resolution into
//! a [`RunSpec`].

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prefap::datasource::DistKind;
use prefap::model::{Ablation, Algorithm, Config, ThetaOp};
use prefap::{Error, Result};

use crate::report::OutputFormat;
use crate::runner::{RepeatMode, RunSpec, SourceSpec};

#[derive(Debug, Parser)]
#[command(
    name = "prefap-bench",
    version,
    about = "Windowed-stream theta-join benchmark harness",
    after_help = "Distribution specs: uniform:<lo>:<hi>, normal:<mu>:<sigma>, zipf:<alpha>[:<n_distinct>]\n\
                  The PREFAP_WORKERS environment variable overrides --workers."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm over windowed streams and report metrics
    Run(RunArgs),
    /// Run the pipeline and its ablated variants on identical inputs
    Ablation(CommonArgs),
    /// Check an algorithm's results against the brute-force oracle
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Join algorithm
    #[arg(long, value_enum)]
    pub algo: AlgoArg,

    /// Pipeline stages to disable (prefap only): comma list of
    /// prefilter, amalgamation, repartition
    #[arg(long, value_parser = parse_ablate)]
    pub ablate: Option<Ablation>,

    /// Also run prefap and ftj on identical inputs and t-test all four
    /// metrics
    #[arg(long)]
    pub significance: bool,

    /// Write satisfying tuples to this CSV file
    #[arg(long)]
    pub dump_results: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Join algorithm
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Theta operator chain, e.g. "gt" or "lt,le" for a 3-way join
    #[arg(long, default_value = "le", value_parser = parse_thetas)]
    pub theta: ThetaList,

    /// Number of partitions per stream
    #[arg(long, default_value_t = 10)]
    pub partitions: usize,

    /// Window size
    #[arg(long, default_value_t = 1000)]
    pub window: usize,

    /// Worker lanes for Cartesian evaluation
    #[arg(long, default_value_t = 4)]
    pub workers: usize,

    /// Base seed for data generation and random placement
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Repetitions
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,

    /// seeds: fresh seed per repetition; windows: one long stream cut into
    /// `repeat` windows
    #[arg(long, value_enum, default_value_t = RepeatModeArg::Seeds)]
    pub repeat_mode: RepeatModeArg,

    /// CSV input file, one per stream (repeat the flag); mutually exclusive
    /// with --dist-*
    #[arg(long)]
    pub input: Vec<PathBuf>,

    /// Column to read from CSV inputs
    #[arg(long, default_value = "value")]
    pub column: String,

    /// Distribution of stream R
    #[arg(long, value_parser = parse_dist)]
    pub dist_r: Option<DistKind>,

    /// Distribution of stream S
    #[arg(long, value_parser = parse_dist)]
    pub dist_s: Option<DistKind>,

    /// Distribution of stream T (makes the join 3-way)
    #[arg(long, value_parser = parse_dist)]
    pub dist_t: Option<DistKind>,

    /// Elements generated per stream (defaults to the window size)
    #[arg(long)]
    pub n: Option<usize>,

    /// Output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Rbm,
    Obt,
    Cfs,
    Ftj,
    Prefap,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Algorithm {
        match a {
            AlgoArg::Rbm => Algorithm::Rbm,
            AlgoArg::Obt => Algorithm::Obt,
            AlgoArg::Cfs => Algorithm::Cfs,
            AlgoArg::Ftj => Algorithm::Ftj,
            AlgoArg::Prefap => Algorithm::Prefap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepeatModeArg {
    Seeds,
    Windows,
}

impl From<RepeatModeArg> for RepeatMode {
    fn from(m: RepeatModeArg) -> RepeatMode {
        match m {
            RepeatModeArg::Seeds => RepeatMode::Seeds,
            RepeatModeArg::Windows => RepeatMode::Windows,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> OutputFormat {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaList(pub Vec<ThetaOp>);

fn parse_thetas(s: &str) -> std::result::Result<ThetaList, String> {
    let ops: std::result::Result<Vec<ThetaOp>, _> = s
        .split(',')
        .map(|part| ThetaOp::from_str(part.trim()).map_err(|e| e.to_string()))
        .collect();
    let ops = ops?;
    if ops.is_empty() {
        return Err("expected at least one theta operator".into());
    }
    Ok(ThetaList(ops))
}

fn parse_dist(s: &str) -> std::result::Result<DistKind, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |idx: usize, what: &str| -> std::result::Result<f64, String> {
        parts
            .get(idx)
            .ok_or_else(|| format!("missing {what} in '{s}'"))?
            .parse::<f64>()
            .map_err(|e| format!("bad {what} in '{s}': {e}"))
    };
    match parts[0].to_ascii_lowercase().as_str() {
        "uniform" => {
            if parts.len() != 3 {
                return Err(format!("expected uniform:<lo>:<hi>, got '{s}'"));
            }
            Ok(DistKind::Uniform {
                lo: num(1, "lo")?,
                hi: num(2, "hi")?,
            })
        }
        "normal" => {
            if parts.len() != 3 {
                return Err(format!("expected normal:<mu>:<sigma>, got '{s}'"));
            }
            Ok(DistKind::Normal {
                mu: num(1, "mu")?,
                sigma: num(2, "sigma")?,
            })
        }
        "zipf" => {
            if parts.len() < 2 || parts.len() > 3 {
                return Err(format!("expected zipf:<alpha>[:<n_distinct>], got '{s}'"));
            }
            let n_distinct = if parts.len() == 3 {
                parts[2]
                    .parse::<u64>()
                    .map_err(|e| format!("bad n_distinct in '{s}': {e}"))?
            } else {
                1000
            };
            Ok(DistKind::Zipf {
                alpha: num(1, "alpha")?,
                n_distinct,
            })
        }
        other => Err(format!(
            "unknown distribution '{other}' (expected uniform, normal or zipf)"
        )),
    }
}

fn parse_ablate(s: &str) -> std::result::Result<Ablation, String> {
    let mut ablation = Ablation::NONE;
    for part in s.split(',') {
        match part.trim().to_ascii_lowercase().as_str() {
            "prefilter" => ablation.disable_prefilter = true,
            "amalgamation" => ablation.disable_amalgamation = true,
            "repartition" => ablation.disable_repartition = true,
            other => {
                return Err(format!(
                    "unknown stage '{other}' (expected prefilter, amalgamation or repartition)"
                ))
            }
        }
    }
    Ok(ablation)
}

/// Resolves flags into a run spec; flag-level contradictions surface as
/// `InvalidConfig` and exit with the usage code.
pub fn to_run_spec(
    common: &CommonArgs,
    algorithm: Algorithm,
    ablation: Ablation,
) -> Result<RunSpec> {
    let workers = match std::env::var("PREFAP_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .map_err(|e| Error::InvalidConfig(format!("PREFAP_WORKERS: {e}")))?,
        Err(_) => common.workers,
    };

    let sources: Vec<SourceSpec> = if !common.input.is_empty() {
        if common.dist_r.is_some() || common.dist_s.is_some() || common.dist_t.is_some() {
            return Err(Error::InvalidConfig(
                "--input and --dist-* are mutually exclusive".into(),
            ));
        }
        if common.input.len() < 2 || common.input.len() > 3 {
            return Err(Error::InvalidConfig(format!(
                "expected 2 or 3 --input files, got {}",
                common.input.len()
            )));
        }
        common
            .input
            .iter()
            .map(|path| SourceSpec::Csv {
                path: path.clone(),
                column: common.column.clone(),
            })
            .collect()
    } else {
        let (Some(r), Some(s)) = (common.dist_r, common.dist_s) else {
            return Err(Error::InvalidConfig(
                "provide --dist-r and --dist-s (and optionally --dist-t), or --input files".into(),
            ));
        };
        let mut sources = vec![SourceSpec::Dist(r), SourceSpec::Dist(s)];
        if let Some(t) = common.dist_t {
            sources.push(SourceSpec::Dist(t));
        }
        sources
    };

    let thetas = common.theta.0.clone();
    if thetas.len() != sources.len() - 1 {
        return Err(Error::InvalidConfig(format!(
            "{} streams need {} theta operator(s), got {} (--theta)",
            sources.len(),
            sources.len() - 1,
            thetas.len()
        )));
    }
    if common.repeat < 1 {
        return Err(Error::InvalidConfig("--repeat must be >= 1".into()));
    }

    let cfg = Config {
        thetas,
        partitions: common.partitions,
        window: common.window,
        workers,
        seed: common.seed,
        algorithm,
        ablation,
    };
    cfg.validate()?;

    Ok(RunSpec {
        cfg,
        sources,
        count: common.n.unwrap_or(common.window),
        repeat: common.repeat,
        repeat_mode: common.repeat_mode.into(),
    })
}
