//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 internal invariant
//! violation. Failures print one line `error[<kind>]: <message>` to stderr.

pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::approx::{solve_approx, DEFAULT_W0_CONSTANT};
use crate::exact::{reconstruct, solve_exact, DpTables};
use crate::generate::{random_tree, Shape, Weights};
use crate::greedy::solve_greedy;
use crate::input::{read_csv, read_json, write_csv, write_json};
use crate::tree::{canonicalize, CanonicalTree};

use output::{emit_dot, id_map, result_out, Float17, Report, ResultOut};

#[derive(Debug, Parser)]
#[command(
    name = "sumtree",
    about = "Maximum-entropy summary trees",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random tree.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq)]
enum Algorithm {
    Exact,
    Greedy,
    Approx,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Greedy => "greedy",
            Algorithm::Approx => "approx",
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Input tree file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Largest summary size; trees are produced for every k <= K.
    #[arg(short = 'K')]
    k_max: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    algorithm: Algorithm,
    /// Additive entropy loss allowed by the approximation.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Constant in the rescaling target W0.
    #[arg(long = "w0-constant", default_value_t = DEFAULT_W0_CONSTANT)]
    w0_constant: f64,
    /// Result JSON path (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write PREFIX.k.dot for every k.
    #[arg(long)]
    dot: Option<String>,
    /// Print run statistics as JSON to stdout.
    #[arg(long)]
    stats: bool,
    /// Accepted and ignored when solving; the generator takes `gen --seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenShape {
    Uniform,
    Degree,
    Bushy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenWeights {
    Unit,
    Int,
    Real,
    Pareto,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    shape: GenShape,
    /// Children per node for `degree`, width for `bushy`.
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long, value_enum, default_value = "unit")]
    weights: GenWeights,
    /// Largest weight for `int`.
    #[arg(long, default_value_t = 8)]
    max_weight: u32,
    /// Tail index for `pareto`.
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Input(_) => 1,
            Failure::Invariant(_) => 2,
        }
    }

    fn line(&self) -> String {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Input(m) => ("input", m),
            Failure::Invariant(m) => ("invariant", m),
        };
        format!("error[{kind}]: {}", msg.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

#[derive(Debug, Serialize)]
struct Stats {
    n: usize,
    #[serde(rename = "K")]
    k_max: usize,
    algorithm: &'static str,
    wall_time_s: f64,
    pair_cost: u64,
    pair_cost_ratio: f64,
    maxplus_ops: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    w0: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduced_nodes: Option<usize>,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_owned();
            let f = Failure::Usage(first);
            let _ = writeln!(stderr, "{}", f.line());
            return f.code();
        }
    };
    let result = match cli.command {
        Some(Command::Gen(g)) => run_gen(&g, stdout),
        None => run_solve(&cli.solve, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.line());
            f.code()
        }
    }
}

fn run_gen(g: &GenArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    if g.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let shape = match g.shape {
        GenShape::Uniform => Shape::Uniform,
        GenShape::Degree => Shape::FixedDegree(g.degree),
        GenShape::Bushy => Shape::Bushy(g.degree),
    };
    let weights = match g.weights {
        GenWeights::Unit => Weights::Unit,
        GenWeights::Int => Weights::Integer(g.max_weight),
        GenWeights::Real => Weights::Real,
        GenWeights::Pareto => Weights::Pareto(g.alpha),
    };
    let tree = random_tree(g.n, shape, weights, g.seed);
    let mut sink: Box<dyn Write + '_> = match &g.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(input_err)?)),
        None => Box::new(&mut *stdout),
    };
    match g.format {
        Format::Csv => write_csv(&tree, &mut sink).map_err(input_err)?,
        Format::Json => write_json(&tree, &mut sink).map_err(input_err)?,
    }
    sink.flush().map_err(input_err)
}

fn check_tables(tree: &CanonicalTree, tables: &DpTables, k: usize, entropy: f64) -> Result<(), Failure> {
    let expected = tables.root_entropy(k).map(|e| e.0).unwrap_or(f64::NAN);
    if expected.is_nan() || (expected - entropy).abs() > 1e-9 {
        return Err(Failure::Invariant(format!(
            "k={k}: reconstructed entropy {entropy} differs from table value {expected} (n={})",
            tree.len()
        )));
    }
    Ok(())
}

fn run_solve(a: &SolveArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let path = a.input.as_ref().ok_or_else(|| Failure::Usage("--input is required".into()))?;
    let k_max = a.k_max.ok_or_else(|| Failure::Usage("-K is required".into()))?;
    if k_max == 0 {
        return Err(Failure::Usage("-K must be at least 1".into()));
    }
    let epsilon = match (a.algorithm, a.epsilon) {
        (Algorithm::Approx, None) => return Err(Failure::Usage("--epsilon is required for approx".into())),
        (_, e) => e,
    };

    let file = File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let input = match a.format {
        Format::Csv => read_csv(BufReader::new(file)),
        Format::Json => read_json(BufReader::new(file)),
    }
    .map_err(input_err)?;
    let tree = canonicalize(&input);

    let start = Instant::now();
    let mut results: Vec<ResultOut> = Vec::new();
    let mut dots = Vec::new();
    let mut w0 = None;
    let mut reduced_nodes = None;
    let cost;
    match a.algorithm {
        Algorithm::Exact | Algorithm::Greedy => {
            let tables = if a.algorithm == Algorithm::Exact {
                solve_exact(&tree, k_max)
            } else {
                solve_greedy(&tree, k_max)
            }
            .map_err(|e| Failure::Usage(e.to_string()))?;
            cost = tables.cost();
            for k in 1..=tables.max_k() {
                let s = reconstruct(&tree, &tables, k).map_err(|e| Failure::Invariant(e.to_string()))?;
                s.validate(&tree, tree.weights())
                    .map_err(|e| Failure::Invariant(format!("k={k}: {e}")))?;
                check_tables(&tree, &tables, k, s.entropy().0)?;
                if a.dot.is_some() {
                    dots.push((k, emit_dot(&tree, &s)));
                }
                results.push(result_out(&tree, k, &s, None));
            }
        }
        Algorithm::Approx => {
            let eps = epsilon.expect("checked above");
            let sol = solve_approx(&tree, k_max, eps, a.w0_constant).map_err(|e| Failure::Usage(e.to_string()))?;
            cost = sol.tables.cost();
            w0 = Some(sol.w0);
            reduced_nodes = Some(sol.reduced.tree.len());
            for r in &sol.results {
                r.summary
                    .validate(&tree, tree.weights())
                    .map_err(|e| Failure::Invariant(format!("k={}: {e}", r.k)))?;
                if a.dot.is_some() {
                    dots.push((r.k, emit_dot(&tree, &r.summary)));
                }
                results.push(result_out(&tree, r.k, &r.summary, Some(r.rounded_entropy)));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();

    let report = Report {
        input_id_map: id_map(&tree),
        total_weight: Float17(tree.total_weight()),
        k_max,
        algorithm: a.algorithm.name().to_owned(),
        epsilon: epsilon.filter(|_| a.algorithm == Algorithm::Approx).map(Float17),
        w0,
        results,
    };
    let json = serde_json::to_string(&report).map_err(|e| Failure::Invariant(e.to_string()))?;
    match &a.output {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => writeln!(stdout, "{json}").map_err(input_err)?,
    }
    if let Some(prefix) = &a.dot {
        for (k, text) in dots {
            let p = format!("{prefix}.{k}.dot");
            std::fs::write(&p, text).map_err(|e| Failure::Input(format!("{p}: {e}")))?;
        }
    }
    if a.stats {
        let n = tree.len();
        let stats = Stats {
            n,
            k_max,
            algorithm: a.algorithm.name(),
            wall_time_s: elapsed,
            pair_cost: cost.pair_cost,
            pair_cost_ratio: cost.pair_cost as f64 / (2.0 * k_max as f64 * n as f64),
            maxplus_ops: cost.maxplus_ops,
            w0,
            reduced_nodes,
        };
        let line = serde_json::to_string(&stats).map_err(|e| Failure::Invariant(e.to_string()))?;
        writeln!(stdout, "{line}").map_err(input_err)?;
    }
    Ok(())
}
