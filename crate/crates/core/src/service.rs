//! Request handling shared by the command line and the HTTP service, so
//! both front ends produce identical numbers for identical inputs.

use serde::{Deserialize, Serialize};

use crate::config::{Config, NamedDesign, TableSection};
use crate::error::{Error, Result};
use crate::insertion::{
    boundary_dose, check_insertion, choose_interior_dose, BoundaryKind, InsertionConfig,
    InsertionTrigger,
};
use crate::kernels::{DoseGrid, PseudoCounts};
use crate::numerics::BetaParams;
use crate::scenarios::{
    fixed_scenario, fixed_scenarios, insertion_scenario, insertion_scenarios, Scenario,
};
use crate::sim::{run_trials, OCSummary, RunOptions, TrialRecord};
use crate::tite::{effective_evidence, suspension_check, PatientRecord};
use crate::trial::{
    decide_with_evidence, decision_table, Action, Evidence, Signal, TableRow, TrialData,
};

/// Points in the posterior density returned with each decision.
pub const DENSITY_POINTS: usize = 201;

/// Working grid with any inserted doses, and the named design fitted to it.
fn working_setup(
    config: &Config,
    design: Option<&str>,
    levels: usize,
    inserted: &[f64],
) -> Result<(DoseGrid, NamedDesign)> {
    if !inserted.is_empty() && config.doses.is_none() {
        return Err(Error::param(
            "inserted_doses",
            "inserting doses requires config doses",
        ));
    }
    let prespecified = levels
        .checked_sub(inserted.len())
        .ok_or_else(|| Error::ScenarioMismatch("more inserted doses than data levels".into()))?;
    let mut grid = config.grid(Some(prespecified))?;
    let mut named = config.design_named(&grid, design)?;
    let recalibrate = config.insertion.as_ref().is_none_or(|i| i.recalibrate);
    for &d in inserted {
        grid = grid.augment(d)?.0;
        if recalibrate {
            grid = grid.recalibrated();
        }
    }
    if recalibrate && !inserted.is_empty() {
        named.design.kernel = named.design.kernel.rescaled(grid.sigma());
    }
    named.design.validate()?;
    Ok((grid, named))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub config: Config,
    /// Design name; the first configured design when absent.
    #[serde(default)]
    pub design: Option<String>,
    #[serde(default)]
    pub n: Vec<u32>,
    #[serde(default)]
    pub y: Vec<u32>,
    #[serde(with = "crate::serde_util::one_based_required")]
    pub current: usize,
    #[serde(default, with = "crate::serde_util::one_based")]
    pub eliminated_from: Option<usize>,
    /// Raw doses added to the configured grid during the trial.
    #[serde(default)]
    pub inserted_doses: Vec<f64>,
    /// Per-patient follow-up; replaces `n` and `y` with effective counts.
    #[serde(default)]
    pub patients: Option<Vec<PatientRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub x: Vec<f64>,
    /// `null` where the density is unbounded.
    pub pdf: Vec<Option<f64>>,
}

impl Density {
    pub fn of(p: BetaParams) -> Density {
        let x: Vec<f64> = (0..DENSITY_POINTS)
            .map(|i| i as f64 / (DENSITY_POINTS - 1) as f64)
            .collect();
        let pdf = x
            .iter()
            .map(|&v| Some(p.pdf(v)).filter(|f| f.is_finite()))
            .collect();
        Density { x, pdf }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveData {
    pub y: Vec<f64>,
    pub n: Vec<f64>,
}

/// Key indices are 1-based like dose levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub design: String,
    pub action: Action,
    pub signal: Signal,
    #[serde(with = "crate::serde_util::one_based_required")]
    pub current: usize,
    #[serde(with = "crate::serde_util::one_based_required")]
    pub next_dose: usize,
    pub pseudo_counts: PseudoCounts,
    pub posterior: BetaParams,
    pub keys: Vec<(f64, f64)>,
    pub key_probabilities: Vec<f64>,
    #[serde(with = "crate::serde_util::one_based_required")]
    pub strongest_key: usize,
    #[serde(with = "crate::serde_util::one_based_required")]
    pub target_key: usize,
    pub prob_over_target: f64,
    /// Escalation was indicated but too few outcomes are ascertained.
    pub escalation_suspended: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveData>,
    pub density: Density,
}

pub fn decision(req: &DecisionRequest) -> Result<DecisionResponse> {
    req.config.validate()?;
    let levels = if !req.n.is_empty() {
        req.n.len()
    } else if let Some(d) = &req.config.doses {
        d.len() + req.inserted_doses.len()
    } else {
        return Err(Error::param(
            "n",
            "the number of dose levels comes from n or config doses",
        ));
    };
    let (grid, named) = working_setup(
        &req.config,
        req.design.as_deref(),
        levels,
        &req.inserted_doses,
    )?;
    let cfg = &named.design;
    let keys = cfg.keys()?;
    if req.current >= grid.len() {
        return Err(Error::param("current", "dose level out of range"));
    }
    if let Some(e) = req.eliminated_from {
        if e > 0 && req.current >= e {
            return Err(Error::param(
                "current",
                "current dose is at or above an eliminated dose",
            ));
        }
    }

    let tau = req.config.tite.unwrap_or_default().tau;
    let (evidence, effective) = match &req.patients {
        Some(ps) => {
            let ev = effective_evidence(ps, grid.len(), tau)?;
            let eff = EffectiveData {
                y: ev.y.clone(),
                n: ev.n.clone(),
            };
            (ev, Some(eff))
        }
        None => {
            let y = if req.y.is_empty() {
                vec![0; req.n.len()]
            } else {
                req.y.clone()
            };
            let data = TrialData::new(req.n.clone(), y)?;
            (Evidence::from(&data), None)
        }
    };
    let d = decide_with_evidence(
        cfg,
        &keys,
        grid.std_doses(),
        &evidence,
        req.current,
        req.eliminated_from,
    )?;

    let mut action = d.action;
    let mut suspended = false;
    if let (Some(ps), Action::Escalate) = (&req.patients, action) {
        let here: Vec<PatientRecord> = ps
            .iter()
            .filter(|p| p.dose_index == req.current)
            .copied()
            .collect();
        if !suspension_check(&here, tau) {
            action = Action::Stay;
            suspended = true;
        }
    }
    let next_dose = match action {
        Action::Escalate => req.current + 1,
        Action::DeEscalate | Action::EliminateAndDeEscalate => req.current.saturating_sub(1),
        _ => req.current,
    };
    Ok(DecisionResponse {
        design: named.name,
        action,
        signal: d.signal,
        current: req.current,
        next_dose,
        pseudo_counts: d.pseudo_counts,
        posterior: d.posterior,
        keys: (0..keys.len()).map(|k| keys.key(k)).collect(),
        key_probabilities: d.key_probabilities,
        strongest_key: d.strongest_key,
        target_key: d.target_key,
        prob_over_target: d.prob_over_target,
        escalation_suspended: suspended,
        effective,
        density: Density::of(d.posterior),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRequest {
    pub config: Config,
    #[serde(default)]
    pub design: Option<String>,
    /// Replaces the config's table section.
    #[serde(default)]
    pub table: Option<TableSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResponse {
    pub design: String,
    pub phi: f64,
    pub target_key: (f64, f64),
    #[serde(with = "crate::serde_util::one_based_required")]
    pub current: usize,
    pub context_n: Vec<u32>,
    pub context_y: Vec<u32>,
    pub rows: Vec<TableRow>,
}

pub fn table(req: &TableRequest) -> Result<TableResponse> {
    let mut config = req.config.clone();
    if let Some(t) = &req.table {
        config.table = t.clone();
    }
    config.validate()?;
    let (grid, context) = config.table_context()?;
    let named = config.design_named(&grid, req.design.as_deref())?;
    let t = &config.table;
    let rows = decision_table(&named.design, &grid, &context, t.current, t.n_min, t.n_max)?;
    Ok(TableResponse {
        phi: named.design.phi,
        target_key: named.design.keys()?.target(),
        design: named.name,
        current: t.current,
        context_n: context.n().to_vec(),
        context_y: context.y().to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionCheckRequest {
    pub config: Config,
    pub n: Vec<u32>,
    #[serde(default)]
    pub y: Vec<u32>,
    #[serde(with = "crate::serde_util::one_based_required")]
    pub current: usize,
    #[serde(default, with = "crate::serde_util::one_based")]
    pub eliminated_from: Option<usize>,
    #[serde(default)]
    pub inserted_doses: Vec<f64>,
    /// Insertions already made; defaults to the number of inserted doses.
    #[serde(default)]
    pub insertions_so_far: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QPoint {
    pub std_dose: f64,
    pub dose: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionCheckResponse {
    pub trigger: InsertionTrigger,
    pub prob_over: Vec<f64>,
    pub prob_under: Vec<f64>,
    pub reason: Option<String>,
    pub proposed_dose: Option<f64>,
    pub proposed_std_dose: Option<f64>,
    /// Target-key probability over the candidate doses (interior only).
    pub q_curve: Option<Vec<QPoint>>,
}

pub fn insertion_check(req: &InsertionCheckRequest) -> Result<InsertionCheckResponse> {
    req.config.validate()?;
    if req.config.doses.is_none() {
        return Err(Error::param(
            "doses",
            "dose insertion needs raw doses in the config",
        ));
    }
    let ins: InsertionConfig = req.config.insertion.clone().unwrap_or_default();
    ins.validate()?;
    let (grid, named) = working_setup(&req.config, None, req.n.len(), &req.inserted_doses)?;
    let y = if req.y.is_empty() {
        vec![0; req.n.len()]
    } else {
        req.y.clone()
    };
    let data = TrialData::new(req.n.clone(), y)?;
    if req.current >= grid.len() {
        return Err(Error::param("current", "dose level out of range"));
    }
    if data.total_n() == 0 {
        return Err(Error::EmptyObservedSet);
    }
    let none = |reason: &str| InsertionCheckResponse {
        trigger: InsertionTrigger::None,
        prob_over: vec![],
        prob_under: vec![],
        reason: Some(reason.into()),
        proposed_dose: None,
        proposed_std_dose: None,
        q_curve: None,
    };
    if req.eliminated_from == Some(0) {
        return Ok(none("terminated"));
    }
    let keys = named.design.keys()?;
    let (yf, nf) = data.as_f64();
    let so_far = req.insertions_so_far.unwrap_or(req.inserted_doses.len());
    let check = check_insertion(
        &grid,
        &yf,
        &nf,
        req.current,
        req.eliminated_from,
        so_far,
        &ins,
        &keys,
    )?;
    let mut out = InsertionCheckResponse {
        trigger: check.trigger,
        prob_over: check.prob_over,
        prob_under: check.prob_under,
        reason: check.reason,
        proposed_dose: None,
        proposed_std_dose: None,
        q_curve: None,
    };
    let boundary = |kind| match boundary_dose(kind, &grid) {
        Ok(d) => Ok(Some(d)),
        Err(Error::DuplicateDose(_)) => Ok(None),
        Err(e) => Err(e),
    };
    match check.trigger {
        InsertionTrigger::None => {}
        InsertionTrigger::Interior { interval_index } => {
            let c = choose_interior_dose(interval_index, &grid, &yf, &nf, &ins, &keys)?;
            out.proposed_dose = Some(c.raw_dose);
            out.proposed_std_dose = Some(c.std_dose);
            out.q_curve = Some(
                c.q_curve
                    .iter()
                    .map(|&(s, q)| QPoint {
                        std_dose: s,
                        dose: grid.to_raw(s),
                        q,
                    })
                    .collect(),
            );
        }
        InsertionTrigger::LowerBoundary | InsertionTrigger::UpperBoundary => {
            let kind = if check.trigger == InsertionTrigger::LowerBoundary {
                BoundaryKind::Lower
            } else {
                BoundaryKind::Upper
            };
            match boundary(kind)? {
                Some(d) => {
                    out.proposed_dose = Some(d);
                    out.proposed_std_dose = Some(grid.to_std(d));
                }
                None => {
                    out.trigger = InsertionTrigger::None;
                    out.reason = Some("duplicate_dose".into());
                }
            }
        }
    }
    Ok(out)
}

/// Scenarios by built-in name: `fixed`, `fixed-N`, `insertion`,
/// `insertion-N`.
pub fn builtin_scenarios(name: &str) -> Result<Vec<Scenario>> {
    let number = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::param("scenario", format!("unknown scenario {name}")))
    };
    match name {
        "fixed" => Ok(fixed_scenarios()),
        "insertion" => Ok(insertion_scenarios()),
        _ => {
            if let Some(k) = name.strip_prefix("fixed-") {
                Ok(vec![fixed_scenario(number(k)?)?])
            } else if let Some(k) = name.strip_prefix("insertion-") {
                Ok(vec![insertion_scenario(number(k)?)?])
            } else {
                Err(Error::param("scenario", format!("unknown scenario {name}")))
            }
        }
    }
}

/// Scenarios named inline or by built-in name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSelection {
    Builtin(String),
    One(Box<Scenario>),
    Many(Vec<Scenario>),
}

impl ScenarioSelection {
    pub fn resolve(&self) -> Result<Vec<Scenario>> {
        let list = match self {
            ScenarioSelection::Builtin(name) => builtin_scenarios(name)?,
            ScenarioSelection::One(s) => vec![(**s).clone()],
            ScenarioSelection::Many(v) => v.clone(),
        };
        if list.is_empty() {
            return Err(Error::param("scenarios", "no scenarios given"));
        }
        for s in &list {
            s.validate()?;
        }
        Ok(list)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationRequest {
    pub config: Config,
    pub scenarios: ScenarioSelection,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_replicates() -> usize {
    1000
}

/// Every scenario is valid and, when the config fixes its doses, runs on
/// exactly those doses.
pub fn check_scenarios(config: &Config, scenarios: &[Scenario]) -> Result<()> {
    for (i, s) in scenarios.iter().enumerate() {
        s.validate()?;
        if let Some(d) = &config.doses {
            if d.len() != s.doses.len() || d.iter().zip(&s.doses).any(|(a, b)| (a - b).abs() > 1e-9)
            {
                return Err(Error::ScenarioMismatch(format!(
                    "scenario {} doses differ from the configured doses",
                    s.name.clone().unwrap_or_else(|| (i + 1).to_string())
                )));
            }
        }
    }
    Ok(())
}

/// Operating characteristics for every scenario × design pair, in that
/// order. Each scenario's target rate replaces the config's; all designs
/// share the seed, so they see the same random numbers.
pub fn simulate(
    config: &Config,
    scenarios: &[Scenario],
    replicates: usize,
    seed: u64,
    threads: Option<usize>,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<Vec<OCSummary>> {
    let runs = simulate_detailed(
        config, scenarios, replicates, seed, threads, progress, false,
    )?;
    Ok(runs.into_iter().map(|(s, _)| s).collect())
}

/// As [`simulate`], also returning the trial records of each pair when
/// `keep_records` is set.
pub fn simulate_detailed(
    config: &Config,
    scenarios: &[Scenario],
    replicates: usize,
    seed: u64,
    threads: Option<usize>,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
    keep_records: bool,
) -> Result<Vec<(OCSummary, Vec<TrialRecord>)>> {
    config.validate()?;
    if replicates == 0 {
        return Err(Error::param("replicates", "must be at least 1"));
    }
    check_scenarios(config, scenarios)?;
    let total = scenarios.len() * config.designs.len() * replicates;
    let mut out = Vec::new();
    let mut before = 0usize;
    for (i, s) in scenarios.iter().enumerate() {
        let grid = crate::kernels::standardize_doses(&s.doses, config.dose_scale)?;
        for named in config.build_designs(&grid, Some(s.phi))? {
            let offset = before;
            let report = |k: usize, _t: usize| {
                if let Some(cb) = progress {
                    cb(offset + k, total);
                }
            };
            let options = RunOptions {
                threads,
                progress: Some(&report),
                metrics: config.metric_options(),
            };
            let plan = config.plan(named.design);
            let run = run_trials(&plan, s, replicates, seed, &options)?;
            let mut summary = run.summary;
            summary.design = named.name;
            if summary.scenario.is_empty() {
                summary.scenario = format!("scenario-{}", i + 1);
            }
            out.push((
                summary,
                if keep_records {
                    run.records
                } else {
                    Vec::new()
                },
            ));
            before += replicates;
        }
    }
    Ok(out)
}
