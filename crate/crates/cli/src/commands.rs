use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use skbd_core::config::Config;
use skbd_core::report::{
    format_number, oc_csv, table_csv, table_text, to_json_pretty, to_json_value,
};
use skbd_core::scenarios::{random_scenario, RandomConstraints, Scenario};
use skbd_core::service::{
    builtin_scenarios, decision, insertion_check, simulate_detailed, table as table_response,
    DecisionRequest, DecisionResponse, InsertionCheckRequest, InsertionCheckResponse,
    ScenarioSelection, TableRequest,
};
use skbd_core::sim::replicate_rng;
use skbd_core::tite::PatientRecord;
use skbd_core::Error;

use crate::manifest::RunManifest;
use crate::{DecideArgs, ExportArgs, Format, SimulateArgs, TableArgs};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_INVALID: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn parse(what: &Path, e: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_PARSE,
            message: format!("{}: {e}", what.display()),
        }
    }

    fn io(e: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ScenarioMismatch(_) => EXIT_MISMATCH,
            Error::RejectionBudgetExhausted(_) => EXIT_FAILURE,
            _ => EXIT_INVALID,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::parse(path, e))
}

fn load_config(path: &Path) -> CliResult<(Config, String)> {
    let text = read(path)?;
    let config = Config::from_json(&text).map_err(|e| CliError::parse(path, e))?;
    config.validate()?;
    Ok((config, text))
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn commented(manifest: &RunManifest) -> String {
    manifest
        .lines()
        .iter()
        .map(|l| format!("# {l}\n"))
        .collect()
}

fn json_with_manifest(
    manifest: &RunManifest,
    key: &str,
    value: serde_json::Value,
) -> CliResult<String> {
    let doc = json!({ "manifest": manifest, key: value });
    let mut s = to_json_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn table(a: TableArgs) -> CliResult<()> {
    let (config, text) = load_config(&a.config)?;
    let manifest = RunManifest::new(&a.config, &text, None, a.out.as_deref());
    let t = table_response(&TableRequest {
        config,
        design: a.design,
        table: None,
    })?;
    let body = match a.format {
        Format::Text => format!("{}{}", commented(&manifest), table_text(&t)),
        Format::Csv => format!("{}{}", commented(&manifest), table_csv(&t)?),
        Format::Json => json_with_manifest(&manifest, "table", to_json_value(&t)?)?,
    };
    emit(a.out.as_ref(), &body)
}

fn level(name: &str, v: usize) -> CliResult<usize> {
    v.checked_sub(1).ok_or_else(|| CliError {
        code: EXIT_INVALID,
        message: format!("invalid parameter `{name}`: dose levels are 1-based"),
    })
}

pub fn decide(a: DecideArgs) -> CliResult<()> {
    let (config, text) = load_config(&a.config)?;
    let manifest = RunManifest::new(&a.config, &text, None, a.out.as_deref());
    let patients = match &a.patients {
        Some(p) => Some(
            serde_json::from_str::<Vec<PatientRecord>>(&read(p)?)
                .map_err(|e| CliError::parse(p, e))?,
        ),
        None => None,
    };
    let current = level("current", a.current)?;
    let eliminated_from = a
        .eliminated_from
        .map(|e| level("eliminated_from", e))
        .transpose()?;
    let req = DecisionRequest {
        config: config.clone(),
        design: a.design,
        n: a.n.clone(),
        y: a.y.clone(),
        current,
        eliminated_from,
        inserted_doses: a.inserted.clone(),
        patients,
    };
    let d = decision(&req)?;
    let insertion = if a.check_insertion {
        Some(insertion_check(&InsertionCheckRequest {
            config,
            n: a.n,
            y: a.y,
            current,
            eliminated_from,
            inserted_doses: a.inserted,
            insertions_so_far: None,
        })?)
    } else {
        None
    };
    let body = match a.format {
        Format::Json => {
            let mut v = json!({ "decision": to_json_value(&d)? });
            if let Some(i) = &insertion {
                v["insertion"] = to_json_value(i)?;
            }
            v["manifest"] = serde_json::to_value(&manifest).map_err(CliError::io)?;
            let mut s = to_json_pretty(&v)?;
            s.push('\n');
            s
        }
        Format::Text | Format::Csv => format!(
            "{}{}",
            commented(&manifest),
            decision_text(&d, insertion.as_ref())
        ),
    };
    emit(a.out.as_ref(), &body)
}

fn decision_text(d: &DecisionResponse, insertion: Option<&InsertionCheckResponse>) -> String {
    let f = format_number;
    let key = |k: usize| {
        let (lo, hi) = d.keys[k];
        format!("{} ({}, {})", k + 1, f(lo), f(hi))
    };
    let mut s = String::new();
    let _ = writeln!(s, "Design: {}", d.design);
    let _ = writeln!(s, "Current dose: {}", d.current + 1);
    if let Some(e) = &d.effective {
        let ys: Vec<String> = e.y.iter().map(|&v| f(v)).collect();
        let ns: Vec<String> = e.n.iter().map(|&v| f(v)).collect();
        let _ = writeln!(s, "Effective y: {}", ys.join(", "));
        let _ = writeln!(s, "Effective n: {}", ns.join(", "));
    }
    let _ = writeln!(
        s,
        "Pseudo-counts (y', n'): ({}, {})",
        f(d.pseudo_counts.y_prime),
        f(d.pseudo_counts.n_prime)
    );
    let _ = writeln!(
        s,
        "Posterior: Beta({}, {})",
        f(d.posterior.alpha),
        f(d.posterior.beta)
    );
    let _ = writeln!(s, "Strongest key: {}", key(d.strongest_key));
    let _ = writeln!(s, "Target key: {}", key(d.target_key));
    let _ = writeln!(s, "Pr(toxicity > target): {}", f(d.prob_over_target));
    if d.escalation_suspended {
        let _ = writeln!(
            s,
            "Escalation suspended: outcomes pending at the current dose"
        );
    }
    let _ = writeln!(s, "Action: {}", d.action.as_str());
    let _ = writeln!(s, "Next dose: {}", d.next_dose + 1);
    if let Some(i) = insertion {
        let trigger = serde_json::to_value(i.trigger).map_or_else(
            |_| String::new(),
            |v| match &v["kind"] {
                serde_json::Value::String(k) => match v.get("interval_index") {
                    Some(j) => format!(
                        "{k} (between levels {j} and {})",
                        j.as_u64().unwrap_or(0) + 1
                    ),
                    None => k.clone(),
                },
                _ => v.to_string(),
            },
        );
        let _ = writeln!(s, "Insertion trigger: {trigger}");
        if let Some(r) = &i.reason {
            let _ = writeln!(s, "Insertion note: {r}");
        }
        if let Some(p) = i.proposed_dose {
            let _ = writeln!(s, "Proposed dose: {}", f(p));
        }
    }
    s
}

fn resolve_scenarios(specs: &[String]) -> CliResult<Vec<Scenario>> {
    let mut all = Vec::new();
    for spec in specs {
        let path = Path::new(spec);
        let list = if path.is_file() {
            let sel: ScenarioSelection =
                serde_json::from_str(&read(path)?).map_err(|e| CliError::parse(path, e))?;
            sel.resolve()?
        } else {
            builtin_scenarios(spec)?
        };
        all.extend(list);
    }
    Ok(all)
}

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let (config, text) = load_config(&a.config)?;
    let scenarios = resolve_scenarios(&a.scenario)?;
    let manifest = RunManifest::new(&a.config, &text, Some(a.seed), a.out.as_deref());
    let runs = simulate_detailed(
        &config,
        &scenarios,
        a.replicates,
        a.seed,
        a.threads,
        None,
        a.paths.is_some(),
    )?;
    let summaries: Vec<_> = runs.iter().map(|(s, _)| s.clone()).collect();
    let body = match a.format {
        Format::Json => json_with_manifest(&manifest, "results", to_json_value(&summaries)?)?,
        Format::Csv | Format::Text => oc_csv(&summaries, &manifest.lines())?,
    };
    emit(a.out.as_ref(), &body)?;
    if let Some(p) = &a.paths {
        let mut lines = String::new();
        for (s, records) in &runs {
            for (i, r) in records.iter().enumerate() {
                let v = json!({ "scenario": s.scenario, "design": s.design, "replicate": i + 1, "trial": r });
                let v = to_json_value(&v)?;
                lines.push_str(&v.to_string());
                lines.push('\n');
            }
        }
        emit(Some(p), &lines)?;
    }
    Ok(())
}

pub fn export(a: ExportArgs) -> CliResult<()> {
    let scenarios = match a.random {
        Some(count) => (0..count)
            .map(|i| {
                let mut s = random_scenario(
                    a.levels,
                    a.phi,
                    &RandomConstraints::default(),
                    &mut replicate_rng(a.seed, i as u64),
                )?;
                s.name = Some(format!("random-{}", i + 1));
                Ok(s)
            })
            .collect::<Result<Vec<_>, Error>>()?,
        None => builtin_scenarios(&a.set)?,
    };
    // Full precision, so exported scenarios simulate exactly like the built-ins.
    let mut s = serde_json::to_string_pretty(&scenarios).map_err(CliError::io)?;
    s.push('\n');
    emit(a.out.as_ref(), &s)
}
