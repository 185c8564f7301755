use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::insertion::{
    boundary_dose, check_insertion, choose_interior_dose, BoundaryKind, InsertionConfig,
    InsertionTrigger,
};
use crate::kernels::{standardize_doses, DoseGrid, DoseScale};
use crate::scenarios::Scenario;
use crate::tite::{effective_evidence, suspension_check, PatientRecord};
use crate::trial::{decide_with_evidence, select_mtd, Action, DesignConfig, Evidence, TrialData};

/// What happens when escalation is blocked by the suspension rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuspensionMode {
    /// Hold accrual until enough outcomes are ascertained, then decide again.
    Wait,
    /// Keep accruing and treat the next cohort at the current dose.
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TiteConfig {
    /// DLT assessment window (months).
    pub tau: f64,
    /// Patients per month; arrivals are evenly spaced.
    pub accrual_rate: f64,
    pub suspension: SuspensionMode,
}

impl Default for TiteConfig {
    fn default() -> Self {
        TiteConfig {
            tau: 3.0,
            accrual_rate: 2.0,
            suspension: SuspensionMode::Wait,
        }
    }
}

impl TiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::param("tau", "must be positive"));
        }
        if !(self.accrual_rate > 0.0 && self.accrual_rate.is_finite()) {
            return Err(Error::param("accrual_rate", "must be positive"));
        }
        Ok(())
    }
}

/// Everything a simulated trial needs besides the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub design: DesignConfig,
    pub insertion: Option<InsertionConfig>,
    pub tite: Option<TiteConfig>,
    pub scale: DoseScale,
}

impl TrialPlan {
    pub fn new(design: DesignConfig) -> Self {
        TrialPlan {
            design,
            insertion: None,
            tite: None,
            scale: DoseScale::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        if let Some(ins) = &self.insertion {
            ins.validate()?;
        }
        if let Some(t) = &self.tite {
            t.validate()?;
        }
        if self.insertion.is_some() && self.tite.is_some() {
            return Err(Error::param(
                "insertion",
                "dose insertion cannot be combined with time-to-event follow-up",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub cohort: u32,
    /// 1-based level on the working grid at the time.
    pub level: usize,
    pub dose: f64,
    pub patients: u32,
    pub dlts: u32,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionEvent {
    pub cohort: u32,
    pub trigger: InsertionTrigger,
    pub raw_dose: f64,
    pub std_dose: f64,
}

/// One simulated trial. Per-dose vectors follow the final working grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub doses: Vec<f64>,
    pub inserted: Vec<bool>,
    pub allocations: Vec<u32>,
    pub dlts: Vec<u32>,
    #[serde(with = "crate::serde_util::one_based")]
    pub selected_mtd: Option<usize>,
    pub selected_dose: Option<f64>,
    pub path: Vec<PathStep>,
    pub insertions: Vec<InsertionEvent>,
    pub terminated_early: bool,
    pub realized_n: u32,
}

impl TrialRecord {
    pub fn first_inserted_dose(&self) -> Option<f64> {
        self.insertions.first().map(|e| e.raw_dose)
    }

    pub fn selected_inserted(&self) -> bool {
        self.selected_mtd.is_some_and(|j| self.inserted[j])
    }
}

/// True toxicity as a function of raw dose.
pub(crate) struct Truth<'a> {
    scenario: &'a Scenario,
    std: Vec<f64>,
    grid: &'a DoseGrid,
}

impl<'a> Truth<'a> {
    pub(crate) fn new(scenario: &'a Scenario, grid: &'a DoseGrid) -> Self {
        let std = scenario.doses.iter().map(|&d| grid.to_std(d)).collect();
        Truth {
            scenario,
            std,
            grid,
        }
    }

    /// Prespecified doses use the tabulated value; elsewhere the generating
    /// curve, or monotone linear interpolation on the standardized scale
    /// with flat extension beyond the ends.
    pub(crate) fn at(&self, raw: f64) -> f64 {
        let s = self.scenario;
        if let Some(j) = s
            .doses
            .iter()
            .position(|&d| (d - raw).abs() <= 1e-9 * d.max(1.0))
        {
            return s.tox[j];
        }
        if let Some(c) = &s.curve {
            return c.eval(raw);
        }
        let x = self.grid.to_std(raw);
        let last = self.std.len() - 1;
        if x <= self.std[0] {
            return s.tox[0];
        }
        if x >= self.std[last] {
            return s.tox[last];
        }
        let k = self.std.partition_point(|&v| v <= x) - 1;
        let t = (x - self.std[k]) / (self.std[k + 1] - self.std[k]);
        s.tox[k] + t * (s.tox[k + 1] - s.tox[k])
    }
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Simulate one trial starting at the lowest dose.
pub fn run_trial<R: Rng + ?Sized>(
    plan: &TrialPlan,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<TrialRecord> {
    let grid = standardize_doses(&scenario.doses, plan.scale)?;
    if plan.tite.is_some() {
        run_tite(plan, scenario, grid, rng)
    } else {
        run_complete(plan, scenario, grid, rng)
    }
}

fn run_complete<R: Rng + ?Sized>(
    plan: &TrialPlan,
    scenario: &Scenario,
    prespecified: DoseGrid,
    rng: &mut R,
) -> Result<TrialRecord> {
    let mut design = plan.design.clone();
    let cfg = &mut design;
    let keys = cfg.keys()?;
    let mut grid = prespecified.clone();
    let truth_grid = prespecified;
    let truth = Truth::new(scenario, &truth_grid);
    let mut tox: Vec<f64> = scenario.tox.clone();
    let mut data = TrialData::empty(grid.len());
    let mut current = 0usize;
    let mut eliminated_from: Option<usize> = None;
    let mut path = Vec::new();
    let mut insertions = Vec::new();
    let mut terminated = false;
    let mut cohort = 0u32;

    while data.total_n() < cfg.max_n {
        let size = cfg.cohort_size.min(cfg.max_n - data.total_n());
        let dlts = (0..size).filter(|_| bernoulli(rng, tox[current])).count() as u32;
        data.record(current, size, dlts);
        cohort += 1;
        let mut step = PathStep {
            cohort,
            level: current + 1,
            dose: grid.raw_doses()[current],
            patients: size,
            dlts,
            action: String::new(),
        };

        let evidence = Evidence::from(&data);
        let d = decide_with_evidence(
            cfg,
            &keys,
            grid.std_doses(),
            &evidence,
            current,
            eliminated_from,
        )?;
        let stop = d.action == Action::Terminate;
        if stop {
            eliminated_from = Some(0);
            if plan
                .insertion
                .as_ref()
                .is_none_or(|ins| ins.stop_overrides_insertion)
            {
                terminated = true;
                step.action = d.action.as_str().into();
                path.push(step);
                break;
            }
        }
        if d.action == Action::EliminateAndDeEscalate {
            eliminated_from = Some(eliminated_from.map_or(current, |e| e.min(current)));
        }

        if let Some(ins) = &plan.insertion {
            let (y, n) = data.as_f64();
            let check = check_insertion(
                &grid,
                &y,
                &n,
                current,
                eliminated_from,
                insertions.len(),
                ins,
                &keys,
            )?;
            let proposal = match check.trigger {
                InsertionTrigger::None => None,
                InsertionTrigger::LowerBoundary => boundary_dose(BoundaryKind::Lower, &grid).ok(),
                InsertionTrigger::UpperBoundary => boundary_dose(BoundaryKind::Upper, &grid).ok(),
                InsertionTrigger::Interior { interval_index } => {
                    // A collapsed interval cannot take another dose.
                    choose_interior_dose(interval_index, &grid, &y, &n, ins, &keys)
                        .ok()
                        .map(|c| c.raw_dose)
                }
            };
            if let Some(raw) = proposal {
                if let Ok((g, idx)) = grid.augment(raw) {
                    data.insert_level(idx);
                    tox.insert(idx, truth.at(raw));
                    if let Some(e) = eliminated_from.as_mut() {
                        if *e >= idx {
                            *e += 1;
                        }
                    }
                    insertions.push(InsertionEvent {
                        cohort,
                        trigger: check.trigger,
                        raw_dose: raw,
                        std_dose: g.std_doses()[idx],
                    });
                    grid = if ins.recalibrate { g.recalibrated() } else { g };
                    if ins.recalibrate {
                        cfg.kernel = cfg.kernel.rescaled(grid.sigma());
                    }
                    current = idx;
                    step.action = match check.trigger {
                        InsertionTrigger::LowerBoundary => "insert_lower_boundary",
                        InsertionTrigger::UpperBoundary => "insert_upper_boundary",
                        _ => "insert_interior",
                    }
                    .into();
                    path.push(step);
                    continue;
                }
            }
        }

        if stop {
            terminated = true;
            step.action = d.action.as_str().into();
            path.push(step);
            break;
        }
        current = match d.action {
            Action::Escalate => current + 1,
            Action::DeEscalate | Action::EliminateAndDeEscalate => current - 1,
            _ => current,
        };
        step.action = d.action.as_str().into();
        path.push(step);
    }

    finish(
        cfg,
        grid,
        data,
        eliminated_from,
        terminated,
        path,
        insertions,
    )
}

fn finish(
    cfg: &DesignConfig,
    grid: DoseGrid,
    data: TrialData,
    eliminated_from: Option<usize>,
    terminated: bool,
    path: Vec<PathStep>,
    insertions: Vec<InsertionEvent>,
) -> Result<TrialRecord> {
    let selected = if terminated {
        None
    } else {
        select_mtd(cfg, &grid, &data, eliminated_from)?
    };
    Ok(TrialRecord {
        selected_dose: selected.map(|j| grid.raw_doses()[j]),
        selected_mtd: selected,
        doses: grid.raw_doses().to_vec(),
        inserted: grid.inserted().to_vec(),
        realized_n: data.total_n(),
        allocations: data.n().to_vec(),
        dlts: data.y().to_vec(),
        path,
        insertions,
        terminated_early: terminated,
    })
}

fn run_tite<R: Rng + ?Sized>(
    plan: &TrialPlan,
    scenario: &Scenario,
    grid: DoseGrid,
    rng: &mut R,
) -> Result<TrialRecord> {
    let cfg = &plan.design;
    let tite = plan.tite.expect("tite plan");
    let keys = cfg.keys()?;
    let spacing = 1.0 / tite.accrual_rate;
    let mut patients: Vec<PatientRecord> = Vec::new();
    let mut current = 0usize;
    let mut eliminated_from: Option<usize> = None;
    let mut path = Vec::new();
    let mut terminated = false;
    let mut cohort = 0u32;
    let mut enrolled = 0u32;
    // Arrival time of the next patient.
    let mut clock = 0.0f64;

    while enrolled < cfg.max_n {
        if cohort > 0 {
            let (action, suspended) = loop {
                let seen: Vec<PatientRecord> = patients
                    .iter()
                    .map(|p| {
                        PatientRecord::at_time(
                            p.dose_index,
                            p.enroll_time,
                            p.dlt,
                            p.dlt_time,
                            clock,
                            tite.tau,
                        )
                    })
                    .collect();
                let evidence = effective_evidence(&seen, grid.len(), tite.tau)?;
                let d = decide_with_evidence(
                    cfg,
                    &keys,
                    grid.std_doses(),
                    &evidence,
                    current,
                    eliminated_from,
                )?;
                if d.action != Action::Escalate {
                    break (d.action, false);
                }
                let here: Vec<PatientRecord> = seen
                    .iter()
                    .filter(|p| p.dose_index == current)
                    .copied()
                    .collect();
                if suspension_check(&here, tite.tau) {
                    break (d.action, false);
                }
                if tite.suspension == SuspensionMode::Stay {
                    break (Action::Stay, true);
                }
                // Next time an outcome at the current dose becomes known.
                let next = patients
                    .iter()
                    .filter(|p| p.dose_index == current)
                    .map(|p| {
                        p.enroll_time
                            + if p.dlt {
                                p.dlt_time.min(tite.tau)
                            } else {
                                tite.tau
                            }
                    })
                    .filter(|&t| t > clock)
                    .fold(f64::INFINITY, f64::min);
                if !next.is_finite() {
                    break (Action::Stay, true);
                }
                clock = next;
            };
            let last: &mut PathStep = path.last_mut().expect("a cohort was enrolled");
            last.action = if suspended {
                "escalation_suspended".into()
            } else {
                action.as_str().into()
            };
            match action {
                Action::Terminate => {
                    eliminated_from = Some(0);
                    terminated = true;
                    break;
                }
                Action::EliminateAndDeEscalate => {
                    eliminated_from = Some(eliminated_from.map_or(current, |e| e.min(current)));
                    current -= 1;
                }
                Action::Escalate => current += 1,
                Action::DeEscalate => current -= 1,
                Action::Stay => {}
            }
        }

        let size = cfg.cohort_size.min(cfg.max_n - enrolled);
        let p = scenario.tox[current];
        let mut dlts = 0;
        for _ in 0..size {
            let dlt = bernoulli(rng, p);
            // Uniform on (0, tau].
            let t = tite.tau * (1.0 - rng.random::<f64>());
            dlts += dlt as u32;
            patients.push(PatientRecord {
                dose_index: current,
                enroll_time: clock,
                dlt,
                dlt_time: if dlt { t } else { f64::INFINITY },
                followup: 0.0,
            });
            enrolled += 1;
            clock += spacing;
        }
        cohort += 1;
        path.push(PathStep {
            cohort,
            level: current + 1,
            dose: grid.raw_doses()[current],
            patients: size,
            dlts,
            action: String::new(),
        });
    }

    // Final selection on complete follow-up.
    let mut data = TrialData::empty(grid.len());
    for p in &patients {
        data.record(p.dose_index, 1, p.dlt as u32);
    }
    if let Some(last) = path.last_mut() {
        if last.action.is_empty() {
            last.action = "complete".into();
        }
    }
    finish(
        cfg,
        grid,
        data,
        eliminated_from,
        terminated,
        path,
        Vec::new(),
    )
}
