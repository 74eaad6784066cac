use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hoe::dataset::{generate_weighted_tree, sample_observations, tree_distances, LinkFunction};
use hoe::embed::{fit, FitConfig, LossFunction, Space};
use hoe::formats;
use hoe::gramian::{check_conditions, coordinate_decompose, reconstruct_points, DecomposedGramian, LorentzGram};
use hoe::hypgeo::BallRestriction;
use hoe::treeembed::{embed_with_margin, verify_margin};
use hoe_cli::config::{parse_config, ExperimentConfig, ExperimentKind};
use hoe_cli::experiments::{build_tree, run_bound_sweep, run_excess_risk, run_rademacher_check, run_tree_comparison};
use hoe_cli::report::{parse_rows, recheck_row, write_rows};
use hoe_cli::CliError;

/// Hyperbolic and Euclidean ordinal embedding: fitting, bounds and
/// verification experiments.
///
/// Experiment configs are plain text with one [section] per experiment
/// (excess_risk, bound_sweep, rademacher, tree_compare) and `key = value`
/// lines; see configs/ for every key with its default. Exit codes: 0 on
/// success, 2 on validation errors, 3 on numeric failures.
#[derive(Parser)]
#[command(name = "hoe", version)]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Append a wall_time_ms column to experiment CSVs (not reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random weighted tree (uniform attachment) in `u v weight` format.
    GenTree {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        weight_min: f64,
        #[arg(long, default_value_t = 2.0)]
        weight_max: f64,
    },
    /// Sample labelled triplets from a tree's path distances.
    Sample {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        m: usize,
        /// Step link margin in [0, 0.5].
        #[arg(long, conflicts_with = "logistic")]
        alpha: Option<f64>,
        /// Logistic link scale instead of a step link.
        #[arg(long)]
        logistic: Option<f64>,
    },
    /// Fit an embedding to observations; writes the embedding CSV.
    Fit(FitArgs),
    /// Evaluate every bound variant over a grid ([bound_sweep]).
    Bounds {
        /// Re-evaluate the bound columns of an existing results CSV instead.
        #[arg(long)]
        recheck: Option<PathBuf>,
    },
    /// Monte Carlo Rademacher check ([rademacher]).
    Rademacher,
    /// Margin certificate and HOE vs EOE expected risk on a tree ([tree_compare]).
    TreeCompare {
        /// Also write the margin embedding's coordinates here.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// Excess risk of the empirical minimiser against the bound ([excess_risk]).
    ExcessRisk,
    /// Lorentz Gramian tools.
    #[command(subcommand)]
    Gram(GramCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Hyperbolic,
    Euclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Hinge,
    Ramp,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    observations: PathBuf,
    /// Number of entities (largest id in the file when absent).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "hyperbolic")]
    space: SpaceArg,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    #[arg(long, value_enum, default_value = "hinge")]
    loss: LossArg,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    step_size: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Write the `epoch,empirical_risk` trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GramCommand {
    /// Split the Lorentz Gramian of an embedding into time and space parts.
    Decompose {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        minus: PathBuf,
        #[arg(long)]
        plus: PathBuf,
        /// Also write the full Lorentz Gramian `G+ - G-` here.
        #[arg(long)]
        lorentz: Option<PathBuf>,
    },
    /// Check the decomposition conditions; writes `condition,passed,slack`.
    Check {
        #[arg(long)]
        minus: PathBuf,
        #[arg(long)]
        plus: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        mean_radius: Option<f64>,
    },
    /// Recover points in dimension `d` from a Lorentz Gramian.
    Reconstruct {
        #[arg(long)]
        gram: PathBuf,
        #[arg(long)]
        d: usize,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display()))),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn experiment_config(cli: &Cli, kind: ExperimentKind) -> Result<ExperimentConfig, CliError> {
    match &cli.config {
        Some(path) => ExperimentConfig::from_raw(&parse_config(&read(path)?)?, kind),
        None => Ok(ExperimentConfig::defaults(kind)),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let mut buf = Vec::new();
    match &cli.command {
        Command::GenTree { n, weight_min, weight_max } => {
            let tree = generate_weighted_tree(*n, cli.seed, *weight_min, *weight_max)?;
            formats::write_tree(&tree, &mut buf)?;
        }
        Command::Sample { tree, m, alpha, logistic } => {
            let tree = formats::parse_tree(&read(tree)?)?;
            let link = match (alpha, logistic) {
                (_, Some(s)) => LinkFunction::logistic(*s)?,
                (Some(a), None) => LinkFunction::step(*a)?,
                (None, None) => return Err(CliError::Validation("give --alpha or --logistic".into())),
            };
            let obs = sample_observations(&tree_distances(&tree)?, &link, *m, cli.seed)?;
            formats::write_observations(&obs, &mut buf)?;
        }
        Command::Fit(args) => {
            let obs = formats::parse_observations(&read(&args.observations)?, args.n)?;
            let n = args.n.unwrap_or_else(|| {
                obs.iter().map(|o| o.triplet.i.max(o.triplet.j).max(o.triplet.k) + 1).max().unwrap_or(0)
            });
            let mut cfg = FitConfig::new(BallRestriction::radius_only(args.radius)?);
            cfg.epochs = args.epochs;
            cfg.step_size = args.step_size;
            cfg.batch_size = args.batch_size;
            cfg.seed = cli.seed;
            let space = match args.space {
                SpaceArg::Hyperbolic => Space::Hyperbolic,
                SpaceArg::Euclidean => Space::Euclidean,
            };
            let loss = match args.loss {
                LossArg::Hinge => LossFunction::Hinge,
                LossArg::Ramp => LossFunction::Ramp,
            };
            let res = fit(space, &obs, loss, n, args.d, &cfg)?;
            formats::write_embedding(&res.embedding, &mut buf)?;
            if let Some(path) = &args.trace {
                let mut t = Vec::new();
                formats::write_trace(&res.trace, &mut t)?;
                emit(&Some(path.clone()), &t)?;
            }
        }
        Command::Bounds { recheck: Some(path) } => {
            let rows = parse_rows(&read(path)?)?;
            let checked: Vec<bool> = rows.iter().filter_map(recheck_row).collect();
            let bad = checked.iter().filter(|ok| !**ok).count();
            writeln!(buf, "rows,checked,inconsistent")?;
            writeln!(buf, "{},{},{bad}", rows.len(), checked.len())?;
            emit(&cli.out, &buf)?;
            if bad > 0 {
                return Err(CliError::Numeric(format!("{bad} rows do not re-evaluate to their bound terms")));
            }
            return Ok(());
        }
        Command::Bounds { recheck: None } => {
            let rows = run_bound_sweep(&experiment_config(cli, ExperimentKind::BoundSweep)?)?;
            write_rows(&rows, &mut buf, cli.timing)?;
        }
        Command::Rademacher => {
            let rows = run_rademacher_check(&experiment_config(cli, ExperimentKind::Rademacher)?, cli.seed)?;
            write_rows(&rows, &mut buf, cli.timing)?;
        }
        Command::TreeCompare { embedding } => {
            let cfg = experiment_config(cli, ExperimentKind::TreeComparison)?;
            let rows = run_tree_comparison(&cfg, cli.seed)?;
            write_rows(&rows, &mut buf, cli.timing)?;
            let tree = build_tree(&cfg.tree, cfg.n[0], cli.seed)?;
            match embed_with_margin(&tree) {
                Ok(emb) => {
                    let check = verify_margin(&emb.layout, &tree_distances(&tree)?, 1.0);
                    eprintln!("{}", formats::tree_summary(emb.scale_tau, check.ok, check.worst_gap));
                    if let Some(path) = embedding {
                        let e = hoe::embed::Embedding::hyperbolic(emb.points()?)?;
                        let mut t = Vec::new();
                        formats::write_embedding(&e, &mut t)?;
                        emit(&Some(path.clone()), &t)?;
                    }
                }
                Err(e) => eprintln!("margin construction failed: {e}"),
            }
        }
        Command::ExcessRisk => {
            let cfg = experiment_config(cli, ExperimentKind::ExcessRisk)?;
            let rows = run_excess_risk(&cfg, cli.seed)?;
            let judged: Vec<bool> = rows.iter().filter_map(|r| r.pass).collect();
            eprintln!(
                "excess <= bound in {}/{} rows (reference risk is an upper estimate of the minimum)",
                judged.iter().filter(|p| **p).count(),
                judged.len()
            );
            write_rows(&rows, &mut buf, cli.timing)?;
        }
        Command::Gram(GramCommand::Decompose { embedding, minus, plus, lorentz }) => {
            let emb = formats::parse_embedding(&read(embedding)?)?;
            let dec = coordinate_decompose(&emb)?;
            let h = dec.lorentz();
            let mut outputs = vec![(minus, &dec.g_minus), (plus, &dec.g_plus)];
            if let Some(path) = lorentz {
                outputs.push((path, &h));
            }
            for (path, m) in outputs {
                let mut t = Vec::new();
                formats::write_matrix(m, &mut t)?;
                emit(&Some(path.clone()), &t)?;
            }
            return Ok(());
        }
        Command::Gram(GramCommand::Check { minus, plus, d, radius, mean_radius }) => {
            let dec = DecomposedGramian {
                g_minus: formats::parse_matrix(&read(minus)?)?,
                g_plus: formats::parse_matrix(&read(plus)?)?,
            };
            let report = check_conditions(&dec, *d, *radius, *mean_radius)?;
            writeln!(buf, "condition,passed,slack")?;
            for (name, c) in report.entries() {
                writeln!(buf, "{name},{},{}", c.passed, c.slack)?;
            }
        }
        Command::Gram(GramCommand::Reconstruct { gram, d }) => {
            let h = LorentzGram::from_matrix(formats::parse_matrix(&read(gram)?)?)?;
            formats::write_embedding(&reconstruct_points(&h, *d)?, &mut buf)?;
        }
    }
    emit(&cli.out, &buf)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
