//! Run records and summary statistics.

use serde::{Deserialize, Serialize};

use crate::{BenchError, SolverId};

/// One solver run on one task with one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub solver: SolverId,
    pub seed: u64,
    /// Final minimum cost; absent when the run failed.
    pub final_cost: Option<f64>,
    /// Per-iteration minimum cost, entry 0 being the initial rollout.
    /// Non-increasing (re-checked at ingestion and before emission).
    pub trace: Vec<f64>,
    pub wall_time_s: f64,
    pub modes: usize,
    pub alpha: f64,
    pub resample_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Final-cost statistics for one (task, solver) group. `std` is the
/// population standard deviation. Reduction percentages follow
/// `100 (baseline - mean) / baseline`, so positive values are improvements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub task: String,
    pub solver: SolverId,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub reduction_vs_vanilla_pct: Option<f64>,
    pub reduction_vs_me_pct: Option<f64>,
}

/// Checks that a trace is non-increasing; returns the first offending
/// iteration index otherwise.
pub fn validate_trace(trace: &[f64]) -> Result<(), usize> {
    for (i, w) in trace.windows(2).enumerate() {
        if w[1] > w[0] {
            return Err(i + 1);
        }
    }
    Ok(())
}

/// Groups records by (task, solver) and computes summary statistics. Every
/// group present in the input must contain at least one successful run.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryStats>, BenchError> {
    if records.is_empty() {
        return Err(BenchError::NoRecords);
    }

    let mut groups: Vec<(String, SolverId, Vec<f64>)> = Vec::new();
    for rec in records {
        let key = groups
            .iter()
            .position(|(task, solver, _)| *task == rec.task && *solver == rec.solver);
        let idx = match key {
            Some(i) => i,
            None => {
                groups.push((rec.task.clone(), rec.solver, Vec::new()));
                groups.len() - 1
            }
        };
        if rec.error.is_none() {
            if let Some(j) = rec.final_cost {
                groups[idx].2.push(j);
            }
        }
    }
    groups.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));

    let mut stats = Vec::with_capacity(groups.len());
    for (task, solver, finals) in &groups {
        if finals.is_empty() {
            return Err(BenchError::EmptyGroup {
                task: task.clone(),
                solver: *solver,
            });
        }
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let var = finals.iter().map(|j| (j - mean) * (j - mean)).sum::<f64>() / n;
        stats.push(SummaryStats {
            task: task.clone(),
            solver: *solver,
            runs: finals.len(),
            mean,
            std: var.sqrt(),
            min: finals.iter().cloned().fold(f64::INFINITY, f64::min),
            max: finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            reduction_vs_vanilla_pct: None,
            reduction_vs_me_pct: None,
        });
    }

    // Reduction columns against the vanilla and ME baselines of the same task.
    let baselines: Vec<(String, SolverId, f64)> = stats
        .iter()
        .filter(|s| s.solver != SolverId::Mme)
        .map(|s| (s.task.clone(), s.solver, s.mean))
        .collect();
    for s in stats.iter_mut() {
        for (task, solver, base_mean) in &baselines {
            if *task != s.task || *solver == s.solver {
                continue;
            }
            let reduction = 100.0 * (base_mean - s.mean) / base_mean;
            match solver {
                SolverId::Vanilla => s.reduction_vs_vanilla_pct = Some(reduction),
                SolverId::Me => s.reduction_vs_me_pct = Some(reduction),
                SolverId::Mme => {}
            }
        }
    }
    Ok(stats)
}
