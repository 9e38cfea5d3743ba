//! Parallel execution of experiment plans.

use std::collections::BTreeMap;
use std::sync::mpsc;

use rayon::prelude::*;
use rmfs_core::experiments::{run_job, ExperimentPlan, Job, RunRecord};

/// Runs every job of `plan` on `parallelism` threads. Records reach `sink`
/// as soon as all earlier jobs have finished, so the sink sees plan order no
/// matter how the threads interleave. Failed runs are records too.
pub fn run_plan(
    plan: &ExperimentPlan,
    parallelism: usize,
    sink: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>, rayon::ThreadPoolBuildError> {
    run_jobs(plan.jobs(), parallelism, sink)
}

pub fn run_jobs(
    jobs: Vec<Job>,
    parallelism: usize,
    mut sink: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build()?;
    let n = jobs.len();
    let (tx, rx) = mpsc::channel();
    let mut out = Vec::with_capacity(n);
    std::thread::scope(|s| {
        s.spawn(move || {
            pool.install(|| {
                jobs.par_iter().enumerate().for_each_with(tx, |tx, (i, job)| {
                    let _ = tx.send((i, run_job(job)));
                })
            })
        });
        let mut pending = BTreeMap::new();
        for (i, rec) in rx {
            pending.insert(i, rec);
            while let Some(rec) = pending.remove(&out.len()) {
                sink(&rec);
                out.push(rec);
            }
        }
    });
    debug_assert_eq!(out.len(), n);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rmfs_core::experiments::{benchmark_rcs, tiny_config};

    fn plan() -> ExperimentPlan {
        ExperimentPlan {
            phase: 1,
            template: tiny_config(600.0),
            rcs: benchmark_rcs().iter().take(2).map(|(_, rc)| *rc).collect(),
            scenarios: vec![tiny_config(0.0).scenario],
            repetitions: 2,
            seed: 5,
        }
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let p = plan();
        let mut seen = Vec::new();
        let a = run_plan(&p, 2, |r| seen.push(r.seed)).unwrap();
        let b = run_plan(&p, 4, |_| {}).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
        assert_eq!(seen, a.iter().map(|r| r.seed).collect::<Vec<_>>());
        assert!(a.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn failed_runs_become_rows() {
        let mut p = plan();
        p.template.layout.pods = p.template.layout.storage_locations + 5;
        let recs = run_plan(&p, 2, |_| {}).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(|r| r.metrics.is_none() && r.error.is_some()));
    }
}
