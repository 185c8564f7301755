use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::Scenario;
use crate::sim::trial::TrialRecord;

/// Operating characteristics over a set of simulated trials. Percentages
/// are on the 0-100 scale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OCSummary {
    pub scenario: String,
    pub design: String,
    pub phi: f64,
    pub replicates: usize,
    pub seed: u64,
    pub pcs: f64,
    pub pca: f64,
    pub above_mtd: f64,
    pub rod: f64,
    pub no_selection: f64,
    pub mean_n: f64,
    pub modification_rate: Option<f64>,
    pub inserted_mean: Option<f64>,
    pub inserted_sd: Option<f64>,
    pub inserted_selection: Option<f64>,
    pub inserted_allocation: Option<f64>,
    /// Selection share of each prespecified dose.
    pub per_dose_selection: Vec<f64>,
    /// Mean patient share of each prespecified dose.
    pub per_dose_allocation: Vec<f64>,
}

/// Which doses count as overdosing in the above-MTD and ROD metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverdoseRule {
    /// True toxicity above the upper edge of the target key, phi + eps2.
    #[default]
    AboveTargetKey,
    /// Dose above the true MTD.
    AboveMtd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    /// Above-MTD share at which a trial counts toward ROD.
    pub rod_threshold: f64,
    /// Count a share equal to the threshold.
    pub rod_inclusive: bool,
    pub overdose: OverdoseRule,
    pub eps2: f64,
    pub insertion: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            rod_threshold: 0.6,
            rod_inclusive: false,
            overdose: OverdoseRule::AboveTargetKey,
            eps2: 0.05,
            insertion: false,
        }
    }
}

fn same_dose(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Index of the true MTD on a trial's final working grid.
///
/// With an on-grid MTD this is that dose. With a continuous MTD it is the
/// working-grid dose whose true toxicity is closest to phi, lower on ties.
fn mtd_on_grid(
    record: &TrialRecord,
    scenario: &Scenario,
    truth: &dyn Fn(f64) -> f64,
) -> Result<usize> {
    if scenario.mtd_dose.is_none() {
        let j = scenario.mtd_index.ok_or(Error::UndefinedMtd)?;
        let target = scenario.doses[j];
        return record
            .doses
            .iter()
            .position(|&d| same_dose(d, target))
            .ok_or_else(|| {
                Error::ScenarioMismatch("true MTD missing from the working grid".into())
            });
    }
    let tox: Vec<f64> = record.doses.iter().map(|&d| truth(d)).collect();
    crate::scenarios::mtd_of(&tox, scenario.phi).ok_or(Error::UndefinedMtd)
}

pub fn oc_metrics(
    records: &[TrialRecord],
    scenario: &Scenario,
    options: MetricOptions,
) -> Result<OCSummary> {
    if records.is_empty() {
        return Err(Error::param(
            "replicates",
            "at least one trial record is required",
        ));
    }
    let mtd_dose = scenario.true_mtd_dose()?;
    let grid =
        crate::kernels::standardize_doses(&scenario.doses, crate::kernels::DoseScale::Linear)?;
    let truth_model = crate::sim::trial::Truth::new(scenario, &grid);
    let truth = |d: f64| truth_model.at(d);

    let r = records.len() as f64;
    let j = scenario.doses.len();
    let mut correct = 0usize;
    let mut none = 0usize;
    let mut pca = 0.0;
    let mut above = 0.0;
    let mut rod = 0usize;
    let mut total_n = 0.0;
    let mut per_sel = vec![0.0; j];
    let mut per_alloc = vec![0.0; j];
    let mut modified = 0usize;
    let mut inserted_doses = Vec::new();
    let mut ins_sel = 0usize;
    let mut ins_alloc = 0.0;

    for rec in records {
        let n = rec.realized_n as f64;
        total_n += n;
        let m = mtd_on_grid(rec, scenario, &truth)?;
        match rec.selected_mtd {
            Some(s) if s == m => correct += 1,
            None => none += 1,
            _ => {}
        }
        if let Some(s) = rec.selected_mtd {
            if let Some(k) = scenario
                .doses
                .iter()
                .position(|&d| same_dose(d, rec.doses[s]))
            {
                per_sel[k] += 1.0;
            }
        }
        if n > 0.0 {
            pca += rec.allocations[m] as f64 / n;
            let overdosed = |d: f64| match options.overdose {
                OverdoseRule::AboveTargetKey => truth(d) > scenario.phi + options.eps2 + 1e-9,
                OverdoseRule::AboveMtd => d > mtd_dose && !same_dose(d, mtd_dose),
            };
            let over: u32 = rec
                .doses
                .iter()
                .zip(&rec.allocations)
                .filter(|(&d, _)| overdosed(d))
                .map(|(_, &a)| a)
                .sum();
            let share = over as f64 / n;
            above += share;
            let hit = if options.rod_inclusive {
                share >= options.rod_threshold - 1e-12
            } else {
                share > options.rod_threshold + 1e-12
            };
            if hit {
                rod += 1;
            }
            for (d, &a) in rec.doses.iter().zip(&rec.allocations) {
                if let Some(k) = scenario.doses.iter().position(|&p| same_dose(p, *d)) {
                    per_alloc[k] += a as f64 / n;
                }
            }
            let at_inserted: u32 = rec
                .inserted
                .iter()
                .zip(&rec.allocations)
                .filter(|(&i, _)| i)
                .map(|(_, &a)| a)
                .sum();
            ins_alloc += at_inserted as f64 / n;
        }
        if let Some(d) = rec.first_inserted_dose() {
            modified += 1;
            inserted_doses.push(d);
        }
        if rec.selected_inserted() {
            ins_sel += 1;
        }
    }

    let pct = |x: f64| 100.0 * x / r;
    let (ins_mean, ins_sd) = if inserted_doses.is_empty() {
        (None, None)
    } else {
        let k = inserted_doses.len() as f64;
        let mean = inserted_doses.iter().sum::<f64>() / k;
        let sd = (inserted_doses.len() > 1).then(|| {
            (inserted_doses
                .iter()
                .map(|d| (d - mean).powi(2))
                .sum::<f64>()
                / (k - 1.0))
                .sqrt()
        });
        (Some(mean), sd)
    };
    let ins = options.insertion;
    Ok(OCSummary {
        scenario: scenario.name.clone().unwrap_or_default(),
        design: String::new(),
        phi: scenario.phi,
        replicates: records.len(),
        seed: 0,
        pcs: pct(correct as f64),
        pca: pct(pca),
        above_mtd: pct(above),
        rod: pct(rod as f64),
        no_selection: pct(none as f64),
        mean_n: total_n / r,
        modification_rate: ins.then(|| pct(modified as f64)),
        inserted_mean: if ins { ins_mean } else { None },
        inserted_sd: if ins { ins_sd } else { None },
        inserted_selection: ins.then(|| pct(ins_sel as f64)),
        inserted_allocation: ins.then(|| pct(ins_alloc)),
        per_dose_selection: per_sel.into_iter().map(pct).collect(),
        per_dose_allocation: per_alloc.into_iter().map(pct).collect(),
    })
}
