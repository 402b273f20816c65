//! Benchmark instances and timed runs.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Instance, Rational, Vector};
use crate::packing::{SolveError, SolverConfig};
use crate::smallness::{split_small_large, FitMode};
use crate::{solver_bp_det, solver_vc, solver_vmkp, solver_vp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Pack,
    Cover,
    Knapsack,
    Binpack,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Pack => "pack",
            Problem::Cover => "cover",
            Problem::Knapsack => "knapsack",
            Problem::Binpack => "binpack",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRun {
    pub problem: Problem,
    /// Number of large items.
    pub n: usize,
    /// Number of tiny items.
    pub k: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub runs: Vec<BenchRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub problem: &'static str,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub seed: u64,
    pub wall_time: f64,
    pub objective: u64,
}

/// One-dimensional instance with `n` large items that pair up exactly, plus
/// `k` tiny items. Sizes are multiples of 1/1000 and large ones lie strictly
/// between 1/3 and 2/3, so no three large items share a container.
pub fn generate(problem: Problem, n: usize, k: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let milli = |x: i64| Rational::new(x.into(), 1000.into());
    let mut sizes = Vec::with_capacity(n + k);
    while sizes.len() < n {
        let a = rng.gen_range(334..=500);
        sizes.push(a);
        if sizes.len() < n {
            sizes.push(1000 - a - rng.gen_range(0..=10).min(1000 - a - 334));
        }
    }
    for _ in 0..k {
        sizes.push(rng.gen_range(1..=3));
    }
    let vectors: Vec<Vector> = sizes.iter().map(|&s| Vector::new(vec![milli(s)])).collect();
    let (profits, containers) = match problem {
        Problem::Knapsack => (
            Some((0..vectors.len()).map(|_| rng.gen_range(1..=10)).collect()),
            Some(n.div_ceil(4).max(1)),
        ),
        _ => (None, None),
    };
    Instance::new(Vector::new(vec![milli(1000)]), vectors, profits, containers)
        .expect("generated instance is valid")
}

pub fn run_once(problem: Problem, instance: &Instance, seed: u64, cfg: &SolverConfig) -> Result<u64, SolveError> {
    let a = match problem {
        Problem::Pack => solver_vp::solve_with(instance, seed, cfg)?.assignment,
        Problem::Cover => solver_vc::solve_with(instance, seed, cfg)?.assignment,
        Problem::Knapsack => solver_vmkp::solve_with(instance, seed, cfg)?.assignment,
        Problem::Binpack => solver_bp_det::solve(instance)?,
    };
    Ok(a.objective)
}

pub fn run_spec(spec: &BenchSpec, cfg: &SolverConfig, out: impl Write) -> Result<Vec<BenchRow>, BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["problem", "n", "d", "k", "seed", "wall_time", "objective"])?;
    let mut rows = Vec::new();
    for run in &spec.runs {
        let inst = generate(run.problem, run.n, run.k, run.seed);
        let mode = if run.problem == Problem::Cover { FitMode::Cover } else { FitMode::Pack };
        let k = split_small_large(&inst, mode).k();
        for _ in 0..run.repetitions {
            let start = Instant::now();
            let objective = run_once(run.problem, &inst, run.seed, cfg)?;
            let row = BenchRow {
                problem: run.problem.name(),
                n: run.n,
                d: 1,
                k,
                seed: run.seed,
                wall_time: start.elapsed().as_secs_f64(),
                objective,
            };
            w.serialize(&row)?;
            w.flush()?;
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
