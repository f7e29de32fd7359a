//! Command-line front end.
//!
//! Every command computes all of its outputs before touching the file system,
//! so a failed run leaves nothing behind.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use flowdiff_core::{
    delta_search, evaluate, solve, solve_traced, sweep_cut, synth::GeneratorSpec, EpochRecord,
    NodeSet, PipelineConfig, PipelineOutcome, SolverOptions, StepRule,
};
use serde::Serialize;

use crate::error::{exit, Error, Result};
use crate::experiment::{run_experiment, ExperimentConfig};
use crate::io::{self, LoadOptions, LoadedGraph};
use crate::metrics::{Format, MetricsRecord};

pub const OUT_DIR_ENV: &str = "FLOWDIFF_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "flowdiff", version, about = "Local graph clustering by p-norm flow diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic graph and its planted blocks.
    Gen(GenArgs),
    /// Solve a diffusion from seeds and round it with a sweep cut.
    Diffuse(DiffuseArgs),
    /// Sweep-cut a heights file.
    Sweep(SweepArgs),
    /// Score a cluster against ground truth.
    Eval(EvalArgs),
    /// Repeated trials from random seeds inside a planted block.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list, one `u v` pair per line.
    #[arg(long)]
    pub graph: PathBuf,
    /// Ids in the input start at 1.
    #[arg(long)]
    pub one_based: bool,
    /// Keep only the component containing the seeds if the graph is disconnected.
    #[arg(long)]
    pub seed_component: bool,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    Grid,
    Dumbbell,
    Planted,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub model: Model,
    #[arg(long, default_value_t = 7)]
    pub rows: usize,
    #[arg(long, default_value_t = 7)]
    pub cols: usize,
    /// Block sizes for the planted model.
    #[arg(long, value_delimiter = ',', default_value = "30,30")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.02)]
    pub p_out: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum StepArg {
    #[default]
    LineSearch,
    Fixed,
}

impl From<StepArg> for StepRule {
    fn from(s: StepArg) -> Self {
        match s {
            StepArg::LineSearch => StepRule::LineSearch,
            StepArg::Fixed => StepRule::Fixed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    /// Smoothing accuracy; sets `μ = (eps/|Δ|)^{1/q}` unless `--mu` is given.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Smoothing parameter override (p > 2 only).
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub term_tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Coordinate update budget.
    #[arg(long)]
    pub max_updates: Option<u64>,
    #[arg(long, value_enum, default_value_t = StepArg::LineSearch)]
    pub step: StepArg,
}

impl SolverArgs {
    fn pipeline(&self) -> Result<PipelineConfig> {
        if self.mu.is_some() && self.p <= 2.0 {
            return Err(Error::config("mu", "override only applies when p > 2"));
        }
        Ok(PipelineConfig {
            p: self.p,
            eps: self.eps,
            mu: self.mu,
            term_tol: self.term_tol,
            options: SolverOptions {
                step: self.step.into(),
                rng_seed: self.rng_seed,
                max_updates: self.max_updates,
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct DiffuseArgs {
    #[command(flatten)]
    pub input: GraphArgs,
    /// Seed file, one id per line.
    #[arg(long, conflicts_with = "seed")]
    pub seeds: Option<PathBuf>,
    /// Inline seed id (repeatable).
    #[arg(long)]
    pub seed: Vec<u64>,
    /// Source mass per unit seed degree.
    #[arg(long, conflicts_with_all = ["mass_mult", "delta_grid"])]
    pub delta: Option<f64>,
    /// Source mass as a multiple of `--target-vol`.
    #[arg(long, requires = "target_vol", conflicts_with = "delta_grid")]
    pub mass_mult: Option<f64>,
    #[arg(long)]
    pub target_vol: Option<f64>,
    /// Try every listed delta and keep the best cut.
    #[arg(long, value_delimiter = ',')]
    pub delta_grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Ground-truth cluster for scoring.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Write per-epoch records to trace.jsonl.
    #[arg(long, conflicts_with = "delta_grid")]
    pub trace: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: GraphArgs,
    /// Heights file (`id<TAB>height`).
    #[arg(long)]
    pub heights: PathBuf,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: GraphArgs,
    #[arg(long)]
    pub cluster: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub input: GraphArgs,
    /// Ground-truth blocks, one per line.
    #[arg(long)]
    pub blocks: PathBuf,
    /// Index of the target block.
    #[arg(long, default_value_t = 0)]
    pub block: usize,
    #[arg(long = "p", value_delimiter = ',', default_value = "2,4,8")]
    pub ps: Vec<f64>,
    /// Mass multipliers `t`, with `|Δ| = t·vol(block)`.
    #[arg(long = "mass-mult", value_delimiter = ',', default_value = "3")]
    pub mass_mults: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seeds_per_trial: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub term_tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long)]
    pub max_updates: Option<u64>,
    #[arg(long, value_enum, default_value_t = StepArg::LineSearch)]
    pub step: StepArg,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Files to write, as (name, contents).
type Artifacts = Vec<(String, String)>;

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::PARSE } else { exit::OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a),
        Command::Diffuse(a) => cmd_diffuse(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Experiment(a) => cmd_experiment(&a),
    }
}

fn write_all(dir: &Path, files: &Artifacts) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn load(input: &GraphArgs, seeds: Option<&[u64]>) -> Result<LoadedGraph> {
    let opts = LoadOptions {
        one_based: input.one_based,
        component_of: if input.seed_component { seeds.map(<[u64]>::to_vec) } else { None },
    };
    io::read_edge_list(&input.graph, &opts)
}

fn read_set(path: &Path, g: &LoadedGraph) -> Result<NodeSet> {
    io::parse_node_set(&io::read_text(path)?, &path.display().to_string(), g)
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let spec = match a.model {
        Model::Grid => GeneratorSpec::Grid { rows: a.rows, cols: a.cols },
        Model::Dumbbell => GeneratorSpec::Dumbbell { rows: a.rows, cols: a.cols },
        Model::Planted => GeneratorSpec::PlantedPartition {
            block_sizes: a.sizes.clone(),
            p_in: a.p_in,
            p_out: a.p_out,
            seed: a.seed,
        },
    };
    let gen = spec.generate()?;
    let blocks = gen.blocks;
    let g = LoadedGraph::identity(gen.graph);
    let mut files = vec![("graph.txt".to_string(), io::format_edge_list(&g))];
    if !blocks.is_empty() {
        files.push(("blocks.txt".to_string(), io::format_blocks(&blocks, &g)));
    }
    write_all(&a.out_dir, &files)
}

#[derive(Serialize)]
struct TraceLine {
    epoch: u64,
    active: usize,
    max_excess: f64,
    objective: f64,
}

impl From<&EpochRecord> for TraceLine {
    fn from(r: &EpochRecord) -> Self {
        Self { epoch: r.epoch, active: r.active, max_excess: r.max_excess, objective: r.objective }
    }
}

fn seed_labels(a: &DiffuseArgs) -> Result<Vec<u64>> {
    let labels = match &a.seeds {
        Some(path) => io::parse_id_list(&io::read_text(path)?, &path.display().to_string())?,
        None => a.seed.clone(),
    };
    if labels.is_empty() {
        return Err(Error::config("seeds", "give --seeds FILE or at least one --seed ID"));
    }
    Ok(labels)
}

fn cmd_diffuse(a: &DiffuseArgs) -> Result<()> {
    let labels = seed_labels(a)?;
    let cfg = a.solver.pipeline()?;
    let g = load(&a.input, Some(&labels))?;
    let seeds = g.node_set(&labels, "seeds")?;
    let truth = a.truth.as_deref().map(|p| read_set(p, &g)).transpose()?;

    let mut trace = String::new();
    let outcome = if let Some(grid) = &a.delta_grid {
        delta_search(&g.graph, &seeds, &cfg, grid)?.best
    } else {
        let delta = match (a.delta, a.mass_mult, a.target_vol) {
            (Some(d), _, _) => d,
            (None, Some(t), Some(vol)) => {
                if !(vol > 0.0 && vol.is_finite()) {
                    return Err(Error::config("target-vol", format!("must be positive, got {vol}")));
                }
                t * vol / seeds.volume() as f64
            }
            _ => return Err(Error::config("delta", "give --delta, --mass-mult with --target-vol, or --delta-grid")),
        };
        let prob = cfg.problem(&g.graph, &seeds, delta)?;
        let solution = if a.trace {
            solve_traced(&prob, |r| {
                let line = serde_json::to_string(&TraceLine::from(r)).expect("trace serializes");
                let _ = writeln!(trace, "{line}");
            })?
        } else {
            solve(&prob)?
        };
        let sweep = sweep_cut(&g.graph, &solution.x)?;
        PipelineOutcome { delta, solution, sweep }
    };

    let mut record = MetricsRecord::from_outcome(&outcome, cfg.p, cfg.eps);
    if let Some(truth) = &truth {
        record = record.with_truth(&evaluate(&g.graph, &outcome.sweep.best_cut, truth)?);
    }
    let fmt = a.out.format;
    let mut files = vec![
        ("heights.tsv".to_string(), io::format_heights(&outcome.solution.x, &g)),
        ("cluster.txt".to_string(), io::format_node_set(&outcome.sweep.best_cut, &g)),
        (format!("metrics.{}", fmt.extension()), fmt.render(&record)),
    ];
    if a.trace {
        files.push(("trace.jsonl".to_string(), trace));
    }
    write_all(&a.out.out_dir, &files)
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let g = load(&a.input, None)?;
    let name = a.heights.display().to_string();
    let x = io::parse_heights(&io::read_text(&a.heights)?, &name, &g)?;
    let truth = a.truth.as_deref().map(|p| read_set(p, &g)).transpose()?;
    let sweep = sweep_cut(&g.graph, &x)?;
    let mut record = MetricsRecord { conductance: Some(sweep.best_conductance), ..Default::default() };
    if let Some(truth) = &truth {
        record = record.with_truth(&evaluate(&g.graph, &sweep.best_cut, truth)?);
    }
    let fmt = a.out.format;
    let files = vec![
        ("cluster.txt".to_string(), io::format_node_set(&sweep.best_cut, &g)),
        (format!("metrics.{}", fmt.extension()), fmt.render(&record)),
    ];
    write_all(&a.out.out_dir, &files)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let g = load(&a.input, None)?;
    let found = read_set(&a.cluster, &g)?;
    let truth = read_set(&a.truth, &g)?;
    let record = MetricsRecord::default().with_truth(&evaluate(&g.graph, &found, &truth)?);
    let fmt = a.out.format;
    write_all(&a.out.out_dir, &vec![(format!("metrics.{}", fmt.extension()), fmt.render(&record))])
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<()> {
    if a.mu.is_some() && a.ps.iter().any(|&p| p <= 2.0) {
        return Err(Error::config("mu", "override only applies when every p > 2"));
    }
    let g = load(&a.input, None)?;
    let name = a.blocks.display().to_string();
    let blocks = io::parse_blocks(&io::read_text(&a.blocks)?, &name, &g)?;
    let truth = blocks.get(a.block).ok_or_else(|| {
        Error::config("block", format!("index {} out of range ({} blocks)", a.block, blocks.len()))
    })?;
    let cfg = ExperimentConfig {
        ps: a.ps.clone(),
        mass_mults: a.mass_mults.clone(),
        trials: a.trials,
        seeds_per_trial: a.seeds_per_trial,
        eps: a.eps,
        mu: a.mu,
        term_tol: a.term_tol,
        step: a.step.into(),
        max_updates: a.max_updates,
        rng_seed: a.rng_seed,
        threads: a.threads,
    };
    let mut report = run_experiment(&g.graph, truth, &cfg)?;
    for r in &mut report.trials {
        for s in &mut r.seeds {
            *s = g.label(*s) as usize;
        }
    }
    let body = match a.out.format {
        Format::Json => report.to_json(),
        Format::Tsv => report.to_tsv(),
    };
    write_all(&a.out.out_dir, &vec![(format!("experiment.{}", a.out.format.extension()), body)])
}
