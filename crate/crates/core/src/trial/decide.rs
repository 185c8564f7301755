use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{pseudo_counts_from, PseudoCounts};
use crate::numerics::{reg_inc_beta, BetaParams};
use crate::trial::data::{Evidence, TrialState};
use crate::trial::design::DesignConfig;
use crate::trial::keys::{strongest_of, KeyPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Escalate,
    Stay,
    DeEscalate,
    EliminateAndDeEscalate,
    Terminate,
}

impl Action {
    pub fn as_str(&self) -> &'static str {
        match self {
            Action::Escalate => "escalate",
            Action::Stay => "stay",
            Action::DeEscalate => "de_escalate",
            Action::EliminateAndDeEscalate => "eliminate_and_de_escalate",
            Action::Terminate => "terminate",
        }
    }
}

/// What the key rule says before grid boundaries are taken into account.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Escalate,
    Stay,
    DeEscalate,
    Eliminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    pub signal: Signal,
    pub pseudo_counts: PseudoCounts,
    pub posterior: BetaParams,
    pub key_probabilities: Vec<f64>,
    pub strongest_key: usize,
    pub target_key: usize,
    /// Posterior probability that toxicity at the current dose exceeds phi.
    pub prob_over_target: f64,
}

/// Dose-transition decision at `state.current`.
pub fn decide(config: &DesignConfig, state: &TrialState) -> Result<Decision> {
    state.validate()?;
    let evidence = Evidence::from(&state.data);
    decide_with_evidence(
        config,
        &config.keys()?,
        state.grid.std_doses(),
        &evidence,
        state.current,
        state.eliminated_from,
    )
}

/// Decision from arbitrary (possibly fractional) dose-level evidence.
pub fn decide_with_evidence(
    config: &DesignConfig,
    keys: &KeyPartition,
    std_doses: &[f64],
    evidence: &Evidence,
    current: usize,
    eliminated_from: Option<usize>,
) -> Result<Decision> {
    if current >= std_doses.len() {
        return Err(Error::param("current", "dose level out of range"));
    }
    if evidence.enrolled[current] == 0 {
        return Err(Error::NoDataAtCurrent(current + 1));
    }
    let pseudo = if evidence.n.iter().any(|&n| n > 0.0) {
        pseudo_counts_from(
            &config.kernel,
            std_doses,
            &evidence.y,
            &evidence.n,
            std_doses[current],
        )?
    } else {
        PseudoCounts {
            y_prime: 0.0,
            n_prime: 0.0,
        }
    };
    let posterior = config
        .prior
        .updated(pseudo.y_prime, pseudo.n_prime - pseudo.y_prime);
    let key_probabilities = keys.probabilities(posterior)?;
    let strongest = strongest_of(&key_probabilities);
    let prob_over_target = 1.0 - reg_inc_beta(config.phi, posterior)?;

    let eliminate = prob_over_target > config.elimination_cutoff
        && evidence.enrolled[current] >= config.elimination_min_n;
    let signal = if eliminate {
        Signal::Eliminate
    } else if strongest < keys.target_index {
        Signal::Escalate
    } else if strongest == keys.target_index {
        Signal::Stay
    } else {
        Signal::DeEscalate
    };

    let ceiling = eliminated_from
        .unwrap_or(std_doses.len())
        .min(std_doses.len());
    let action = match signal {
        Signal::Eliminate if current == 0 => Action::Terminate,
        Signal::Eliminate => Action::EliminateAndDeEscalate,
        Signal::Escalate if current + 1 < ceiling => Action::Escalate,
        Signal::Escalate | Signal::Stay => Action::Stay,
        Signal::DeEscalate if current == 0 => Action::Stay,
        Signal::DeEscalate => Action::DeEscalate,
    };

    Ok(Decision {
        action,
        signal,
        pseudo_counts: pseudo,
        posterior,
        key_probabilities,
        strongest_key: strongest,
        target_key: keys.target_index,
        prob_over_target,
    })
}
