//! Adaptive dose insertion: trigger evaluation, interior dose choice and
//! boundary dose formulas.
//!
//! Insertion evidence at any location `d` comes from a Beta posterior built
//! on symmetric-kernel pseudo-counts with a Jeffreys-type Beta(0.5, 0.5)
//! prior. The kernel scale follows the grid's sigma, so it tightens when a
//! trial recalibrates after an insertion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{normalized_weights, DoseGrid, KernelSpec};
use crate::numerics::{
    beta_interval_prob, pava, reg_inc_beta, BetaParams, Direction, WeightedSequence,
};
use crate::trial::KeyPartition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InsertionConfig {
    pub c1: f64,
    pub c2: f64,
    pub prior: BetaParams,
    pub candidate_points: usize,
    /// Nearest-neighbour value of the insertion kernel.
    pub symmetric_kernel_value: f64,
    /// Cap on insertions per trial; `None` allows any number.
    pub max_insertions: Option<usize>,
    /// Recalibrate kernel scales to the working grid after each insertion
    /// instead of keeping the prespecified-grid calibration.
    pub recalibrate: bool,
    /// Stop for safety at an overly toxic lowest dose even when a lower
    /// insertion would be triggered.
    pub stop_overrides_insertion: bool,
}

impl Default for InsertionConfig {
    fn default() -> Self {
        InsertionConfig {
            c1: 0.6,
            c2: 0.6,
            prior: BetaParams {
                alpha: 0.5,
                beta: 0.5,
            },
            candidate_points: 199,
            symmetric_kernel_value: 0.05,
            max_insertions: None,
            recalibrate: true,
            stop_overrides_insertion: true,
        }
    }
}

impl InsertionConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, c) in [("c1", self.c1), ("c2", self.c2)] {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::param(field, "must lie in (0, 1)"));
            }
        }
        self.prior
            .validate()
            .map_err(|e| Error::param("prior", e.to_string()))?;
        if self.candidate_points == 0 {
            return Err(Error::param("candidate_points", "must be at least 1"));
        }
        if !(self.symmetric_kernel_value > 0.0 && self.symmetric_kernel_value < 1.0) {
            return Err(Error::param("symmetric_kernel_value", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn kernel(&self, grid: &DoseGrid) -> Result<KernelSpec> {
        KernelSpec::symmetric_with_value(grid.sigma(), self.symmetric_kernel_value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InsertionTrigger {
    None,
    LowerBoundary,
    /// Between working-grid doses `interval_index` and `interval_index + 1`
    /// (1-based in JSON, naming the lower dose).
    Interior {
        #[serde(with = "crate::serde_util::one_based_required")]
        interval_index: usize,
    },
    UpperBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Lower,
    Upper,
}

/// Posterior of toxicity at standardized location `d` used for insertion.
pub fn insertion_posterior(
    d: f64,
    grid: &DoseGrid,
    y: &[f64],
    n: &[f64],
    cfg: &InsertionConfig,
) -> Result<BetaParams> {
    let kernel = cfg.kernel(grid)?;
    posterior_with(&kernel, d, grid, y, n, cfg.prior)
}

fn posterior_with(
    kernel: &KernelSpec,
    d: f64,
    grid: &DoseGrid,
    y: &[f64],
    n: &[f64],
    prior: BetaParams,
) -> Result<BetaParams> {
    // Zero kernel mass (underflow far from all data) leaves the prior.
    let Some(w) = normalized_weights(kernel, grid.std_doses(), n, d)? else {
        return Ok(prior);
    };
    let events: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let non_events: f64 = w
        .iter()
        .zip(y.iter().zip(n))
        .map(|(w, (y, n))| w * (n - y))
        .sum();
    Ok(prior.updated(events, non_events))
}

/// Result of an insertion check, with the isotonic-adjusted probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionCheck {
    pub trigger: InsertionTrigger,
    /// Adjusted Pr(toxicity > phi + eps2) per working-grid dose.
    pub prob_over: Vec<f64>,
    /// Adjusted Pr(toxicity < phi - eps1) per working-grid dose.
    pub prob_under: Vec<f64>,
    pub reason: Option<String>,
}

#[allow(clippy::too_many_arguments)]
pub fn check_insertion(
    grid: &DoseGrid,
    y: &[f64],
    n: &[f64],
    current: usize,
    eliminated_from: Option<usize>,
    insertions_so_far: usize,
    cfg: &InsertionConfig,
    keys: &KeyPartition,
) -> Result<InsertionCheck> {
    if cfg.max_insertions.is_some_and(|m| insertions_so_far >= m) {
        return Ok(InsertionCheck {
            trigger: InsertionTrigger::None,
            prob_over: vec![],
            prob_under: vec![],
            reason: Some("budget".into()),
        });
    }
    let (lo, hi) = keys.target();
    let kernel = cfg.kernel(grid)?;
    let m = grid.len();
    let mut over = Vec::with_capacity(m);
    let mut under = Vec::with_capacity(m);
    for &d in grid.std_doses() {
        let post = posterior_with(&kernel, d, grid, y, n, cfg.prior)?;
        over.push(1.0 - reg_inc_beta(hi, post)?);
        under.push(reg_inc_beta(lo, post)?);
    }
    let over = pava(
        &WeightedSequence::unweighted(over)?,
        Direction::Nondecreasing,
    );
    let under = pava(
        &WeightedSequence::unweighted(under)?,
        Direction::Nonincreasing,
    );

    // Nothing may be inserted at or above an eliminated dose.
    let ceiling = eliminated_from.unwrap_or(m).min(m);
    let trigger = if current == 0 && over[0] > cfg.c2 {
        InsertionTrigger::LowerBoundary
    } else if let Some(r) =
        (0..m.saturating_sub(1)).find(|&r| r < ceiling && under[r] > cfg.c1 && over[r + 1] > cfg.c2)
    {
        InsertionTrigger::Interior { interval_index: r }
    } else if current + 1 == m && eliminated_from.is_none() && under[m - 1] > cfg.c1 {
        InsertionTrigger::UpperBoundary
    } else {
        InsertionTrigger::None
    };
    Ok(InsertionCheck {
        trigger,
        prob_over: over,
        prob_under: under,
        reason: None,
    })
}

/// Chosen interior dose with the target-key probability curve it maximizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorChoice {
    pub std_dose: f64,
    pub raw_dose: f64,
    /// `(standardized dose, q)` at each candidate point.
    pub q_curve: Vec<(f64, f64)>,
}

/// Maximize the target-key probability over equally spaced interior points
/// of the interval between working-grid doses `r` and `r + 1`.
pub fn choose_interior_dose(
    r: usize,
    grid: &DoseGrid,
    y: &[f64],
    n: &[f64],
    cfg: &InsertionConfig,
    keys: &KeyPartition,
) -> Result<InteriorChoice> {
    if r + 1 >= grid.len() {
        return Err(Error::param("interval_index", "no such interval"));
    }
    let left = grid.std_doses()[r];
    let right = grid.std_doses()[r + 1];
    let width = right - left;
    if width < 1e-9 {
        return Err(Error::InvalidGrid("degenerate insertion interval".into()));
    }
    let (lo, hi) = keys.target();
    let kernel = cfg.kernel(grid)?;
    let k = cfg.candidate_points;
    let mid = 0.5 * (left + right);
    let mut q_curve = Vec::with_capacity(k);
    let mut best: Option<(f64, f64)> = None;
    for i in 1..=k {
        let d = left + width * i as f64 / (k + 1) as f64;
        let q = beta_interval_prob(posterior_with(&kernel, d, grid, y, n, cfg.prior)?, lo, hi)?;
        q_curve.push((d, q));
        best = match best {
            None => Some((d, q)),
            Some((bd, bq)) => {
                let better = q > bq + 1e-12
                    || ((q - bq).abs() <= 1e-12 && (d - mid).abs() < (bd - mid).abs() - 1e-12);
                if better {
                    Some((d, q))
                } else {
                    Some((bd, bq))
                }
            }
        };
    }
    let (std_dose, _) = best.expect("at least one candidate point");
    Ok(InteriorChoice {
        std_dose,
        raw_dose: grid.to_raw(std_dose),
        q_curve,
    })
}

/// Raw dose proposed by a boundary trigger: half the current minimum, or
/// 1.5 times the highest prespecified dose.
pub fn boundary_dose(kind: BoundaryKind, grid: &DoseGrid) -> Result<f64> {
    let dose = match kind {
        BoundaryKind::Lower => grid.raw_doses()[0] / 2.0,
        BoundaryKind::Upper => 1.5 * grid.prespecified_max_raw(),
    };
    if grid.contains_raw(dose) {
        return Err(Error::DuplicateDose(dose));
    }
    Ok(dose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{standardize_doses, DoseScale};
    use crate::trial::build_keys;

    fn grid() -> DoseGrid {
        standardize_doses(&[10.0, 20.0, 30.0, 40.0, 50.0], DoseScale::Linear).unwrap()
    }

    fn keys() -> KeyPartition {
        build_keys(0.3, 0.05, 0.05).unwrap()
    }

    fn f(v: &[u32]) -> Vec<f64> {
        v.iter().map(|&x| x as f64).collect()
    }

    #[test]
    fn posterior_single_dose() {
        let cfg = InsertionConfig::default();
        let p = insertion_posterior(
            0.0,
            &grid(),
            &f(&[3, 0, 0, 0, 0]),
            &f(&[3, 0, 0, 0, 0]),
            &cfg,
        )
        .unwrap();
        assert!((p.alpha - 3.5).abs() < 1e-12 && (p.beta - 0.5).abs() < 1e-12);
        assert!(insertion_posterior(0.0, &grid(), &f(&[0; 5]), &f(&[0; 5]), &cfg).is_err());
    }

    #[test]
    fn posterior_without_dlts() {
        let cfg = InsertionConfig {
            symmetric_kernel_value: 0.2,
            ..Default::default()
        };
        let n = f(&[3, 6, 3, 0, 0]);
        let p = insertion_posterior(0.5, &grid(), &f(&[0; 5]), &n, &cfg).unwrap();
        assert!((p.alpha - 0.5).abs() < 1e-12);
        // Symmetric weights at 0.5: 0.2^4, 0.2, 1 over observed doses 0, 0.25, 0.5.
        let k = [0.0016, 0.2, 1.0];
        let n_prime = (k[0] * 3.0 + k[1] * 6.0 + k[2] * 3.0) / (k[0] + k[1] + k[2]);
        assert!((p.beta - 0.5 - n_prime).abs() < 1e-10);
    }

    #[test]
    fn lower_boundary_trigger() {
        let cfg = InsertionConfig::default();
        let c = check_insertion(
            &grid(),
            &f(&[3, 0, 0, 0, 0]),
            &f(&[3, 0, 0, 0, 0]),
            0,
            None,
            0,
            &cfg,
            &keys(),
        )
        .unwrap();
        assert_eq!(c.trigger, InsertionTrigger::LowerBoundary);
    }

    #[test]
    fn upper_boundary_trigger() {
        let cfg = InsertionConfig::default();
        let c =
            check_insertion(&grid(), &f(&[0; 5]), &f(&[3; 5]), 4, None, 0, &cfg, &keys()).unwrap();
        assert_eq!(c.trigger, InsertionTrigger::UpperBoundary);
        // Not at the top: nothing fires.
        let c =
            check_insertion(&grid(), &f(&[0; 5]), &f(&[3; 5]), 3, None, 0, &cfg, &keys()).unwrap();
        assert_eq!(c.trigger, InsertionTrigger::None);
    }

    #[test]
    fn benign_start_does_not_trigger() {
        let cfg = InsertionConfig::default();
        let c = check_insertion(
            &grid(),
            &f(&[0; 5]),
            &f(&[3, 0, 0, 0, 0]),
            0,
            None,
            0,
            &cfg,
            &keys(),
        )
        .unwrap();
        assert_eq!(c.trigger, InsertionTrigger::None);
    }

    #[test]
    fn budget_exhausted() {
        let y = f(&[3, 0, 0, 0, 0]);
        let unlimited = InsertionConfig::default();
        let c = check_insertion(&grid(), &y, &y, 0, None, 50, &unlimited, &keys()).unwrap();
        assert_eq!(c.trigger, InsertionTrigger::LowerBoundary);
        let cfg = InsertionConfig {
            max_insertions: Some(3),
            ..Default::default()
        };
        let c = check_insertion(&grid(), &y, &y, 0, None, 3, &cfg, &keys()).unwrap();
        assert_eq!(c.trigger, InsertionTrigger::None);
        assert_eq!(c.reason.as_deref(), Some("budget"));
    }

    #[test]
    fn interior_trigger_and_choice() {
        let cfg = InsertionConfig::default();
        let y = f(&[0, 4, 0, 0, 0]);
        let n = f(&[6, 6, 0, 0, 0]);
        let c = check_insertion(&grid(), &y, &n, 1, None, 0, &cfg, &keys()).unwrap();
        assert_eq!(c.trigger, InsertionTrigger::Interior { interval_index: 0 });
        let choice = choose_interior_dose(0, &grid(), &y, &n, &cfg, &keys()).unwrap();
        assert!(choice.std_dose > 0.0 && choice.std_dose < 0.25);
        assert!(choice.raw_dose > 10.0 && choice.raw_dose < 20.0);
        assert_eq!(choice.q_curve.len(), 199);
    }

    #[test]
    fn single_candidate_is_the_midpoint() {
        let cfg = InsertionConfig {
            candidate_points: 1,
            ..Default::default()
        };
        let y = f(&[0, 4, 0, 0, 0]);
        let n = f(&[6, 6, 0, 0, 0]);
        let choice = choose_interior_dose(0, &grid(), &y, &n, &cfg, &keys()).unwrap();
        assert!((choice.std_dose - 0.125).abs() < 1e-12);
        assert!((choice.raw_dose - 15.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_formulas() {
        assert_eq!(boundary_dose(BoundaryKind::Lower, &grid()).unwrap(), 5.0);
        let g = standardize_doses(&[5.0, 10.0, 20.0, 35.0, 50.0], DoseScale::Linear).unwrap();
        assert_eq!(boundary_dose(BoundaryKind::Upper, &g).unwrap(), 75.0);
        let (g2, _) = g.augment(75.0).unwrap();
        assert_eq!(
            boundary_dose(BoundaryKind::Upper, &g2),
            Err(Error::DuplicateDose(75.0))
        );
        let (g3, _) = grid().augment(5.0).unwrap();
        assert_eq!(boundary_dose(BoundaryKind::Lower, &g3).unwrap(), 2.5);
    }
}
