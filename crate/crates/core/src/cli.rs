//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad input or unsolvable
//! input, 3 randomized failure after all retries.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::bench::{self, BenchSpec, Problem};
use crate::model::{parse_instance, validate, Assignment, Instance, Mode};
use crate::oracles::{self, OracleBudget, OracleError};
use crate::packing::{SolveError, SolverConfig};
use crate::{solver_bp_det, solver_vc, solver_vmkp, solver_vp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RANDOMIZED: i32 = 3;

pub const THREADS_ENV: &str = "RAINBOWPACK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rainbowpack", version, about = "Exact packing, covering and knapsack solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fewest containers holding every vector.
    Pack(SolveArgs),
    /// Most containers whose load reaches the demand.
    Cover(SolveArgs),
    /// Most profit packed into the given number of containers.
    Knapsack(SolveArgs),
    /// One-dimensional bin packing.
    Binpack(BinpackArgs),
    /// Timed runs from a benchmark spec, as CSV on stdout.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance JSON file.
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Each randomized decision errs with probability at most n^-c.
    #[arg(long, default_value_t = 2)]
    error_exponent: u32,
    /// Use the exhaustive reference solver.
    #[arg(long)]
    oracle: bool,
    /// Print the validation report and the accepting guess.
    #[arg(long)]
    emit_certificate: bool,
    /// Print the certificate as JSON too.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct BinpackArgs {
    #[command(flatten)]
    common: SolveArgs,
    /// Use the deterministic algorithm.
    #[arg(long, conflicts_with = "oracle")]
    deterministic: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Benchmark spec JSON: {"runs": [{"problem", "n", "k", "seed", "repetitions"}]}.
    spec: PathBuf,
    #[arg(long, default_value_t = 2)]
    error_exponent: u32,
}

/// Settings of one solve invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub problem: Problem,
    pub input: PathBuf,
    pub seed: u64,
    pub error_exponent: u32,
    pub deterministic: bool,
    pub oracle: bool,
    pub emit_certificate: bool,
    pub json: bool,
}

impl RunConfig {
    fn new(problem: Problem, a: SolveArgs, deterministic: bool) -> Self {
        RunConfig {
            problem,
            input: a.input,
            seed: a.seed,
            error_exponent: a.error_exponent,
            deterministic,
            oracle: a.oracle,
            emit_certificate: a.emit_certificate,
            json: a.json,
        }
    }

    fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        cfg.otr.engine.error_exponent = self.error_exponent;
        cfg
    }

    fn mode(&self) -> Mode {
        match self.problem {
            Problem::Pack | Problem::Binpack => Mode::Pack,
            Problem::Cover => Mode::Cover,
            Problem::Knapsack => Mode::Knapsack,
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match &e {
            SolveError::Oversized { .. } | SolveError::MissingKnapsackData | SolveError::NotOneDimensional(_) => {
                EXIT_INPUT
            }
            e if e.is_randomized_failure() => EXIT_RANDOMIZED,
            _ => EXIT_INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::TimedOut(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if v.parse::<usize>().map_or(true, |t| t == 0) {
            let _ = writeln!(err, "error: {THREADS_ENV} must be a positive integer, got {v:?}");
            return EXIT_INPUT;
        }
    }
    let result = match cli.command {
        Command::Pack(a) => solve_command(RunConfig::new(Problem::Pack, a, false), out),
        Command::Cover(a) => solve_command(RunConfig::new(Problem::Cover, a, false), out),
        Command::Knapsack(a) => solve_command(RunConfig::new(Problem::Knapsack, a, false), out),
        Command::Binpack(b) => solve_command(RunConfig::new(Problem::Binpack, b.common, b.deterministic), out),
        Command::Bench(b) => bench_command(b, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read_instance(path: &PathBuf) -> Result<Instance, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_instance(&bytes).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn solve_command(rc: RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let inst = read_instance(&rc.input)?;
    if rc.problem == Problem::Binpack && inst.dimension() != 1 {
        return Err(SolveError::NotOneDimensional(inst.dimension()).into());
    }
    let (assignment, trace) = solve_instance(&rc, &inst)?;
    let io = |e: std::io::Error| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    };
    writeln!(out, "{}", assignment.to_json()).map_err(io)?;
    if rc.emit_certificate {
        let report = validate(&inst, &assignment, rc.mode());
        if rc.json {
            let doc = json!({ "certificate": report, "trace": trace });
            writeln!(out, "{doc}").map_err(io)?;
        } else {
            writeln!(out, "certificate valid={} objective={}", report.valid, report.objective).map_err(io)?;
            for v in &report.violations {
                writeln!(out, "violation {}", serde_json::to_string(v).expect("violation serializes")).map_err(io)?;
            }
            if let Some(t) = &trace {
                writeln!(out, "trace {t}").map_err(io)?;
            }
        }
    }
    Ok(())
}

/// Solves per the run configuration; randomized runs also return the
/// accepting branch.
fn solve_instance(rc: &RunConfig, inst: &Instance) -> Result<(Assignment, Option<Value>), Failure> {
    if rc.oracle {
        let budget = OracleBudget::default();
        let a = match rc.problem {
            Problem::Pack | Problem::Binpack => oracles::brute_force_pack(inst, budget)?,
            Problem::Cover => oracles::brute_force_cover(inst, budget)?,
            Problem::Knapsack => oracles::brute_force_knapsack(inst, budget)?,
        };
        return Ok((a, None));
    }
    let cfg = rc.solver_config();
    match rc.problem {
        Problem::Binpack if rc.deterministic => Ok((solver_bp_det::solve(inst)?, None)),
        Problem::Pack | Problem::Binpack => {
            let o = solver_vp::solve_with(inst, rc.seed, &cfg)?;
            let trace = o.guess.map(|g| {
                json!({
                    "containers": g.containers,
                    "blocks": g.blocks,
                    "finalized": g.finalized,
                    "c0": g.c0,
                    "c1": g.c1,
                    "c2": g.c2,
                    "probes": o.probes,
                })
            });
            Ok((o.assignment, trace))
        }
        Problem::Cover => {
            let o = solver_vc::solve_with(inst, rc.seed, &cfg)?;
            let orig = |b: &Vec<usize>| b.iter().map(|&i| o.pre.kept[i]).collect::<Vec<_>>();
            let guess = o.guess.as_ref().map(|g| {
                json!({
                    "containers": g.containers,
                    "blocks": g.blocks.iter().map(orig).collect::<Vec<_>>(),
                    "full": g.full,
                    "triple": g.triple,
                    "c_prime": g.c_prime,
                    "colored": g.colored,
                    "c1": g.c1,
                    "c2": g.c2,
                    "c3": g.c3,
                })
            });
            let trace = json!({
                "singletons": o.pre.singles,
                "guess": guess,
                "probes": o.probes,
            });
            Ok((o.assignment, Some(trace)))
        }
        Problem::Knapsack => {
            let o = solver_vmkp::solve_with(inst, rc.seed, &cfg)?;
            let t = &o.trace;
            let trace = json!({
                "blocks": t.guess.blocks,
                "finalized": t.guess.finalized,
                "c0": t.guess.c0,
                "c_e": t.guess.c_e,
                "u": t.guess.u,
                "p_max": t.p_max,
                "weight": t.weight,
                "large_profit": t.large_profit,
            });
            Ok((o.assignment, Some(trace)))
        }
    }
}

fn bench_command(b: BenchArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read(&b.spec).map_err(|e| Failure::input(format!("{}: {e}", b.spec.display())))?;
    let spec: BenchSpec =
        serde_json::from_slice(&text).map_err(|e| Failure::input(format!("{}: {e}", b.spec.display())))?;
    let mut cfg = SolverConfig::default();
    cfg.otr.engine.error_exponent = b.error_exponent;
    bench::run_spec(&spec, &cfg, out).map_err(|e| match e {
        bench::BenchError::Solve(s) => s.into(),
        other => Failure {
            code: EXIT_INTERNAL,
            message: other.to_string(),
        },
    })?;
    Ok(())
}
