//! Benchmark harness for the trajopt solvers: seeded experiment batches,
//! summary statistics and CSV/JSON emission.

mod emit;
mod records;

pub use emit::{emit, read_csv_dir, read_json, Document, OutputFormat};
pub use records::{summarize, validate_trace, RunRecord, SummaryStats};

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use trajopt::config::{build_task, parse_task_config, TaskConfig};
use trajopt::task::TaskDefinition;

/// The four task configs shipped with the harness.
pub const BUILTIN_TASKS: [(&str, &str); 4] = [
    (
        "pointmass",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/pointmass.toml")),
    ),
    (
        "car",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/car.toml")),
    ),
    (
        "quadcopter",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/quadcopter.toml")),
    ),
    (
        "manipulator",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/manipulator.toml")),
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverId {
    Vanilla,
    Me,
    Mme,
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverId::Vanilla => "vanilla",
            SolverId::Me => "me",
            SolverId::Mme => "mme",
        })
    }
}

impl FromStr for SolverId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vanilla" => Ok(SolverId::Vanilla),
            "me" => Ok(SolverId::Me),
            "mme" => Ok(SolverId::Mme),
            other => Err(format!(
                "unknown solver `{other}` (expected vanilla, me or mme)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown task `{0}`; available tasks: pointmass, car, quadcopter, manipulator (or a path to a .toml config)")]
    UnknownTask(String),

    #[error(transparent)]
    Config(#[from] trajopt::ConfigError),

    #[error("no records to summarize")]
    NoRecords,

    #[error("no usable records for task `{task}` solver `{solver}`")]
    EmptyGroup { task: String, solver: SolverId },

    #[error("record for task `{task}` solver `{solver}` seed {seed} has an increasing trace at iteration {iter}")]
    NonMonotoneTrace {
        task: String,
        solver: SolverId,
        seed: u64,
        iter: usize,
    },

    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Malformed { path: String, message: String },
}

/// CLI-level overrides applied on top of a task config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub modes: Option<usize>,
    pub resample_every: Option<usize>,
    pub iterations: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut TaskConfig) {
        if let Some(alpha) = self.alpha {
            cfg.solver.alpha = alpha;
        }
        if let Some(modes) = self.modes {
            cfg.solver.modes = modes;
        }
        if let Some(m) = self.resample_every {
            cfg.solver.resample_every = m;
        }
        if let Some(iters) = self.iterations {
            cfg.solver.iterations = iters;
        }
    }
}

/// Resolves a builtin task id or a path to a TOML config.
pub fn resolve_task(task_ref: &str) -> Result<TaskConfig, BenchError> {
    for (id, text) in BUILTIN_TASKS {
        if id == task_ref {
            return Ok(parse_task_config(text)?);
        }
    }
    let path = Path::new(task_ref);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: task_ref.to_string(),
            source,
        })?;
        return Ok(parse_task_config(&text)?);
    }
    Err(BenchError::UnknownTask(task_ref.to_string()))
}

/// Runs one solver over one task for a batch of seeds, one [`RunRecord`]
/// per seed. Vanilla DDP ignores the seed values but still emits one record
/// per requested seed. Seeds run in parallel; per-seed solver failures are
/// recorded, not fatal.
pub fn run_experiment(
    task_ref: &str,
    solver: SolverId,
    seeds: &[u64],
    overrides: &Overrides,
) -> Result<Vec<RunRecord>, BenchError> {
    let mut cfg = resolve_task(task_ref)?;
    overrides.apply(&mut cfg);
    let base = build_task(&cfg)?;
    let records = seeds
        .par_iter()
        .map(|seed| run_one(&base, solver, *seed))
        .collect();
    Ok(records)
}

fn run_one(base: &TaskDefinition, solver: SolverId, seed: u64) -> RunRecord {
    let task = base.with_seed(seed);
    let started = Instant::now();
    let outcome = match solver {
        SolverId::Vanilla => trajopt::ddp::solve_vanilla(&task).map(|run| run.trace),
        SolverId::Me => trajopt::me::solve_me(&task).map(|run| run.min_trace),
        SolverId::Mme => trajopt::mme::solve_mme(&task).map(|run| run.min_trace),
    };
    let wall_time_s = started.elapsed().as_secs_f64();
    let (modes, alpha, resample_every) = match solver {
        SolverId::Vanilla => (1, 0.0, 0),
        SolverId::Me => (2, task.solver.alpha, task.solver.resample_every),
        SolverId::Mme => (
            task.solver.modes,
            task.solver.alpha,
            task.solver.resample_every,
        ),
    };

    let mut record = RunRecord {
        task: task.id.clone(),
        solver,
        seed,
        final_cost: None,
        trace: Vec::new(),
        wall_time_s,
        modes,
        alpha,
        resample_every,
        error: None,
    };
    match outcome {
        Ok(trace) => {
            if let Err(iter) = validate_trace(&trace) {
                record.error = Some(format!(
                    "solver produced an increasing trace at iteration {iter}"
                ));
            } else {
                record.final_cost = trace.last().copied();
                record.trace = trace;
            }
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tasks_parse_and_build() {
        for (id, text) in BUILTIN_TASKS {
            let cfg = parse_task_config(text).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert_eq!(cfg.id, id);
            build_task(&cfg).unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }

    #[test]
    fn unknown_task_lists_available_ids() {
        let err = resolve_task("nosuch").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("pointmass") && msg.contains("manipulator"));
    }

    #[test]
    fn empty_seed_list_yields_no_records() {
        let records =
            run_experiment("pointmass", SolverId::Vanilla, &[], &Overrides::default()).unwrap();
        assert!(records.is_empty());
    }
}
