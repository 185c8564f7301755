use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DoseGrid;
use crate::trial::data::{Evidence, TrialData};
use crate::trial::decide::{decide_with_evidence, Signal};
use crate::trial::design::DesignConfig;

/// Decision boundaries for one sample size at the current dose.
///
/// A boundary is `None` (rendered NA) when the action happens for no DLT
/// count, or for every count from 0 to `n` so that no threshold exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: u32,
    pub escalate_le: Option<u32>,
    pub deescalate_ge: Option<u32>,
    pub eliminate_ge: Option<u32>,
}

/// Boundaries at dose `current` for each `n` in `n_min..=n_max`, holding the
/// data at every other dose fixed at `context`.
pub fn decision_table(
    config: &DesignConfig,
    grid: &DoseGrid,
    context: &TrialData,
    current: usize,
    n_min: u32,
    n_max: u32,
) -> Result<Vec<TableRow>> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidRange(format!(
            "sample-size range {n_min}..={n_max} must be nonempty and start at 1 or more"
        )));
    }
    if context.len() != grid.len() {
        return Err(Error::ScenarioMismatch(format!(
            "grid has {} doses but context has {}",
            grid.len(),
            context.len()
        )));
    }
    if current >= grid.len() {
        return Err(Error::param("current", "dose level out of range"));
    }
    if context.n()[current] != 0 {
        return Err(Error::param(
            "context",
            "context must not record data at the tabulated dose",
        ));
    }
    config.validate()?;
    let keys = config.keys()?;

    let mut rows = Vec::with_capacity((n_max - n_min + 1) as usize);
    for n in n_min..=n_max {
        let mut signals = Vec::with_capacity(n as usize + 1);
        for y in 0..=n {
            let mut data = context.clone();
            data.set(current, n, y)?;
            let evidence = Evidence::from(&data);
            let d =
                decide_with_evidence(config, &keys, grid.std_doses(), &evidence, current, None)?;
            signals.push(d.signal);
        }
        let all = n + 1;
        let esc: Vec<u32> = (0..=n)
            .filter(|&y| signals[y as usize] == Signal::Escalate)
            .collect();
        let de: Vec<u32> = (0..=n)
            .filter(|&y| matches!(signals[y as usize], Signal::DeEscalate | Signal::Eliminate))
            .collect();
        let el: Vec<u32> = (0..=n)
            .filter(|&y| signals[y as usize] == Signal::Eliminate)
            .collect();
        let boundary = |region: &[u32], upper: bool| -> Option<u32> {
            if region.is_empty() || region.len() as u32 == all {
                None
            } else if upper {
                region.last().copied()
            } else {
                region.first().copied()
            }
        };
        rows.push(TableRow {
            n,
            escalate_le: boundary(&esc, true),
            deescalate_ge: boundary(&de, false),
            eliminate_ge: boundary(&el, false),
        });
    }
    Ok(rows)
}
