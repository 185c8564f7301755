//! Monte Carlo trial simulation and operating characteristics.

mod metrics;
mod trial;

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenarios::Scenario;

pub use metrics::{oc_metrics, MetricOptions, OCSummary, OverdoseRule};
pub use trial::{
    run_trial, InsertionEvent, PathStep, SuspensionMode, TiteConfig, TrialPlan, TrialRecord,
};

/// RNG for replicate `replicate` under `seed`: one ChaCha stream per
/// replicate, so results never depend on scheduling.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Called with (completed, total) as replicates finish.
    pub progress: Option<&'a (dyn Fn(usize, usize) + Sync)>,
    /// Metric settings; `eps2` and `insertion` are taken from the plan.
    pub metrics: MetricOptions,
}

pub struct SimulationOutput {
    pub summary: OCSummary,
    pub records: Vec<TrialRecord>,
}

/// Simulate `replicates` trials and aggregate their operating
/// characteristics. Output is identical for any thread count.
pub fn run_trials(
    plan: &TrialPlan,
    scenario: &Scenario,
    replicates: usize,
    seed: u64,
    options: &RunOptions<'_>,
) -> Result<SimulationOutput> {
    if replicates == 0 {
        return Err(Error::param("replicates", "must be at least 1"));
    }
    plan.validate()?;
    scenario.validate()?;
    scenario.true_mtd_dose()?;

    let done = AtomicUsize::new(0);
    let one = |i: usize| {
        let r = run_trial(plan, scenario, &mut replicate_rng(seed, i as u64));
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(cb) = options.progress {
            cb(k, replicates);
        }
        r
    };
    let results: Vec<Result<TrialRecord>> = match options.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::param("threads", e.to_string()))?;
            pool.install(|| (0..replicates).into_par_iter().map(one).collect())
        }
        None => (0..replicates).into_par_iter().map(one).collect(),
    };
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut summary = oc_metrics(
        &records,
        scenario,
        MetricOptions {
            eps2: plan.design.eps2,
            insertion: plan.insertion.is_some(),
            ..options.metrics
        },
    )?;
    summary.seed = seed;
    Ok(SimulationOutput { summary, records })
}
