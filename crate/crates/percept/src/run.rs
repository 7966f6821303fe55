//! Parallel evaluation and report assembly.

use percept_core::capacity::{empirical_report, CapacityError, CapacityReport};
use percept_core::eval::{assemble_report, evaluate_item, Components, EvalConfig, EvalError, RunReport};
use percept_core::McqItem;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A run report with its capacity section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    #[serde(flatten)]
    pub report: RunReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacityReport>,
}

/// Builds a worker pool; `None` uses one thread per logical CPU.
pub fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    builder.build()
}

/// Evaluates items on `pool`. Results equal the sequential evaluation: every
/// sample draws from its own seeded stream and records keep input order.
pub fn evaluate_parallel(
    pool: &rayon::ThreadPool,
    items: &[McqItem],
    config: &EvalConfig,
    components: &Components<'_>,
) -> Result<RunReport, EvalError> {
    let records = pool.install(|| {
        items.par_iter().map(|item| evaluate_item(item, config, components)).collect::<Result<Vec<_>, _>>()
    })?;
    Ok(assemble_report(config.mode, records))
}

/// Capacity section for a dialogue report. `declared_alphabet` is |Σ⊥| when
/// the sensor's alphabet is known; otherwise the observed alphabet is used.
pub fn capacity_section(report: &RunReport, max_rounds: usize, declared_alphabet: Option<usize>) -> Result<CapacityReport, CapacityError> {
    let episodes: Vec<_> = report.items.iter().flat_map(|r| r.episodes.iter().cloned()).collect();
    empirical_report(&episodes, max_rounds, declared_alphabet)
}
