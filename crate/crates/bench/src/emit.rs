//! Emission of run records and summaries to JSON or CSV, with readers that
//! round-trip the data. File writes are atomic (write-temp-then-rename).

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::records::{validate_trace, RunRecord, SummaryStats};
use crate::{BenchError, SolverId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Top-level JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: u32,
    /// Kind of standard deviation reported in the summary.
    pub std_kind: String,
    /// Wall-clock emission time (unix seconds); excluded from determinism
    /// comparisons.
    pub generated_at_unix: u64,
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryStats>,
}

/// One `traces.csv` row. Header: `task,solver,seed,iter,min_cost`.
#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    task: String,
    solver: SolverId,
    seed: u64,
    iter: usize,
    min_cost: f64,
}

/// One `runs.csv` row: per-record metadata.
#[derive(Debug, Serialize, Deserialize)]
struct RunRow {
    task: String,
    solver: SolverId,
    seed: u64,
    final_cost: Option<f64>,
    wall_time_s: f64,
    modes: usize,
    alpha: f64,
    resample_every: usize,
    error: Option<String>,
}

/// Writes records and summary under `out_dir` and returns the file paths.
///
/// JSON emits `results.json`; CSV emits `traces.csv`, `runs.csv` and
/// `summary.csv`. Any record with an increasing trace is rejected.
pub fn emit(
    records: &[RunRecord],
    stats: &[SummaryStats],
    format: OutputFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, BenchError> {
    for rec in records {
        if let Err(iter) = validate_trace(&rec.trace) {
            return Err(BenchError::NonMonotoneTrace {
                task: rec.task.clone(),
                solver: rec.solver,
                seed: rec.seed,
                iter,
            });
        }
    }
    fs::create_dir_all(out_dir).map_err(|source| BenchError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;

    match format {
        OutputFormat::Json => {
            let doc = Document {
                schema_version: SCHEMA_VERSION,
                std_kind: "population".to_string(),
                generated_at_unix: unix_now(),
                records: records.to_vec(),
                summary: stats.to_vec(),
            };
            let path = out_dir.join("results.json");
            let body = serde_json::to_vec_pretty(&doc).expect("document serializes");
            atomic_write(&path, &body)?;
            Ok(vec![path])
        }
        OutputFormat::Csv => {
            let traces_path = out_dir.join("traces.csv");
            let runs_path = out_dir.join("runs.csv");
            let summary_path = out_dir.join("summary.csv");

            // Headers are written up front so empty batches still produce
            // valid files.
            let mut traces = headerless_writer();
            traces
                .write_record(["task", "solver", "seed", "iter", "min_cost"])
                .expect("trace header");
            for rec in records {
                for (iter, min_cost) in rec.trace.iter().enumerate() {
                    traces
                        .serialize(TraceRow {
                            task: rec.task.clone(),
                            solver: rec.solver,
                            seed: rec.seed,
                            iter,
                            min_cost: *min_cost,
                        })
                        .expect("trace row serializes");
                }
            }
            atomic_write(&traces_path, &traces.into_inner().expect("csv flush"))?;

            let mut runs = headerless_writer();
            runs.write_record([
                "task",
                "solver",
                "seed",
                "final_cost",
                "wall_time_s",
                "modes",
                "alpha",
                "resample_every",
                "error",
            ])
            .expect("run header");
            for rec in records {
                runs.serialize(RunRow {
                    task: rec.task.clone(),
                    solver: rec.solver,
                    seed: rec.seed,
                    final_cost: rec.final_cost,
                    wall_time_s: rec.wall_time_s,
                    modes: rec.modes,
                    alpha: rec.alpha,
                    resample_every: rec.resample_every,
                    error: rec.error.clone(),
                })
                .expect("run row serializes");
            }
            atomic_write(&runs_path, &runs.into_inner().expect("csv flush"))?;

            let mut summary = headerless_writer();
            summary
                .write_record([
                    "task",
                    "solver",
                    "runs",
                    "mean",
                    "std",
                    "min",
                    "max",
                    "reduction_vs_vanilla_pct",
                    "reduction_vs_me_pct",
                ])
                .expect("summary header");
            for s in stats {
                summary.serialize(s).expect("summary row serializes");
            }
            atomic_write(&summary_path, &summary.into_inner().expect("csv flush"))?;

            Ok(vec![traces_path, runs_path, summary_path])
        }
    }
}

/// Reads a JSON document produced by [`emit`].
pub fn read_json(path: &Path) -> Result<Document, BenchError> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| BenchError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Reconstructs records and summary from a CSV output directory.
pub fn read_csv_dir(dir: &Path) -> Result<(Vec<RunRecord>, Vec<SummaryStats>), BenchError> {
    let runs_path = dir.join("runs.csv");
    let mut records: Vec<RunRecord> = Vec::new();
    for row in csv_reader(&runs_path)?.deserialize::<RunRow>() {
        let row = row.map_err(|e| malformed(&runs_path, e))?;
        records.push(RunRecord {
            task: row.task,
            solver: row.solver,
            seed: row.seed,
            final_cost: row.final_cost,
            trace: Vec::new(),
            wall_time_s: row.wall_time_s,
            modes: row.modes,
            alpha: row.alpha,
            resample_every: row.resample_every,
            error: row.error,
        });
    }

    let traces_path = dir.join("traces.csv");
    for row in csv_reader(&traces_path)?.deserialize::<TraceRow>() {
        let row = row.map_err(|e| malformed(&traces_path, e))?;
        let rec = records
            .iter_mut()
            .find(|r| r.task == row.task && r.solver == row.solver && r.seed == row.seed)
            .ok_or_else(|| BenchError::Malformed {
                path: traces_path.display().to_string(),
                message: format!(
                    "trace row for unknown run ({}, {}, {})",
                    row.task, row.solver, row.seed
                ),
            })?;
        if rec.trace.len() != row.iter {
            return Err(BenchError::Malformed {
                path: traces_path.display().to_string(),
                message: format!("trace rows out of order for seed {}", row.seed),
            });
        }
        rec.trace.push(row.min_cost);
    }

    let summary_path = dir.join("summary.csv");
    let mut stats = Vec::new();
    for row in csv_reader(&summary_path)?.deserialize::<SummaryStats>() {
        stats.push(row.map_err(|e| malformed(&summary_path, e))?);
    }
    Ok((records, stats))
}

fn headerless_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new())
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>, BenchError> {
    csv::Reader::from_path(path).map_err(|e| BenchError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn malformed(path: &Path, e: csv::Error) -> BenchError {
    BenchError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    let tmp = path.with_extension("tmp");
    let io_err = |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    };
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}
