//! Time-to-event handling: follow-up weights, effective counts and the
//! escalation-suspension rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial::Evidence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    /// 1-based in JSON.
    #[serde(with = "crate::serde_util::one_based_required")]
    pub dose_index: usize,
    pub enroll_time: f64,
    /// Latent DLT outcome.
    pub dlt: bool,
    /// Months from enrollment to DLT; infinite when no DLT occurs.
    #[serde(default = "infinite", with = "inf_as_null")]
    pub dlt_time: f64,
    /// Observed follow-up, at most tau.
    pub followup: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl PatientRecord {
    /// Record as seen at calendar time `now`, with follow-up capped at tau.
    pub fn at_time(
        dose_index: usize,
        enroll_time: f64,
        dlt: bool,
        dlt_time: f64,
        now: f64,
        tau: f64,
    ) -> Self {
        PatientRecord {
            dose_index,
            enroll_time,
            dlt,
            dlt_time: if dlt { dlt_time } else { f64::INFINITY },
            followup: (now - enroll_time).clamp(0.0, tau),
        }
    }

    pub fn dlt_observed(&self) -> bool {
        self.dlt && self.dlt_time <= self.followup
    }

    /// DLT already seen, or full follow-up completed without one.
    pub fn ascertained(&self, tau: f64) -> bool {
        self.dlt_observed() || self.followup >= tau
    }

    fn validate(&self, tau: f64) -> Result<()> {
        if !(tau > 0.0) {
            return Err(Error::param("tau", "must be positive"));
        }
        if !(self.followup >= 0.0) || self.followup > tau + 1e-12 {
            return Err(Error::param("followup", "must lie in [0, tau]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCounts {
    pub y_eff: f64,
    pub n_eff: f64,
}

pub fn follow_up_weight(p: &PatientRecord, tau: f64) -> Result<f64> {
    p.validate(tau)?;
    Ok(if p.ascertained(tau) {
        1.0
    } else {
        p.followup / tau
    })
}

/// Effective counts over the given patients (normally those at one dose).
pub fn effective_counts(patients: &[PatientRecord], tau: f64) -> Result<EffectiveCounts> {
    let mut y = 0.0;
    let mut n = 0.0;
    for p in patients {
        let w = follow_up_weight(p, tau)?;
        if p.dlt_observed() {
            y += 1.0;
        }
        n += w;
    }
    Ok(EffectiveCounts { y_eff: y, n_eff: n })
}

/// Effective dose-level evidence for a grid of `levels` doses.
pub fn effective_evidence(patients: &[PatientRecord], levels: usize, tau: f64) -> Result<Evidence> {
    let mut ev = Evidence {
        y: vec![0.0; levels],
        n: vec![0.0; levels],
        enrolled: vec![0; levels],
    };
    for p in patients {
        if p.dose_index >= levels {
            return Err(Error::param("dose_index", "dose level out of range"));
        }
        let w = follow_up_weight(p, tau)?;
        if p.dlt_observed() {
            ev.y[p.dose_index] += 1.0;
        }
        ev.n[p.dose_index] += w;
        ev.enrolled[p.dose_index] += 1;
    }
    Ok(ev)
}

/// Whether escalation is permitted: at least two patients at the current
/// dose must have ascertained outcomes.
pub fn suspension_check(current_patients: &[PatientRecord], tau: f64) -> bool {
    current_patients
        .iter()
        .filter(|p| p.ascertained(tau))
        .count()
        >= 2
}
