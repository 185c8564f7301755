//! Dose standardization, kernel calibration and kernel-weighted pseudo-counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial::TrialData;

/// Tolerance used when comparing standardized dose locations.
pub const DOSE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoseScale {
    #[default]
    Linear,
    Log,
}

impl DoseScale {
    fn forward(self, raw: f64) -> f64 {
        match self {
            DoseScale::Linear => raw,
            DoseScale::Log => raw.ln(),
        }
    }

    fn inverse(self, t: f64) -> f64 {
        match self {
            DoseScale::Linear => t,
            DoseScale::Log => t.exp(),
        }
    }
}

/// The working dose grid: raw doses, their standardized locations and
/// which of them were inserted mid-trial.
///
/// The affine map to the standardized scale is anchored at the first and
/// last prespecified doses and never changes afterwards, so inserted
/// boundary doses may fall outside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseGrid {
    raw_doses: Vec<f64>,
    std_doses: Vec<f64>,
    scale: DoseScale,
    inserted: Vec<bool>,
    prespecified_max_raw: f64,
    anchor_lo: f64,
    anchor_hi: f64,
    sigma: f64,
}

/// Map prespecified raw doses onto `[0, 1]`.
pub fn standardize_doses(raw: &[f64], scale: DoseScale) -> Result<DoseGrid> {
    if raw.len() < 2 {
        return Err(Error::InvalidGrid(format!(
            "at least 2 doses are required, got {}",
            raw.len()
        )));
    }
    if raw.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidGrid("doses must be finite".into()));
    }
    if scale == DoseScale::Log && raw.iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidGrid(
            "log scale requires positive doses".into(),
        ));
    }
    if raw.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "doses must be strictly increasing".into(),
        ));
    }
    let anchor_lo = scale.forward(raw[0]);
    let anchor_hi = scale.forward(raw[raw.len() - 1]);
    let std_doses: Vec<f64> = raw
        .iter()
        .map(|&d| (scale.forward(d) - anchor_lo) / (anchor_hi - anchor_lo))
        .collect();
    let sigma = std_doses
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if !(sigma > 0.0) {
        return Err(Error::InvalidGrid("degenerate dose grid".into()));
    }
    Ok(DoseGrid {
        raw_doses: raw.to_vec(),
        std_doses,
        scale,
        inserted: vec![false; raw.len()],
        prespecified_max_raw: raw[raw.len() - 1],
        anchor_lo,
        anchor_hi,
        sigma,
    })
}

impl DoseGrid {
    /// Grid of dose levels `1..=levels`, used when only ranks are known.
    pub fn levels(levels: usize) -> Result<DoseGrid> {
        let raw: Vec<f64> = (1..=levels).map(|j| j as f64).collect();
        standardize_doses(&raw, DoseScale::Linear)
    }

    pub fn len(&self) -> usize {
        self.raw_doses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_doses.is_empty()
    }

    pub fn raw_doses(&self) -> &[f64] {
        &self.raw_doses
    }

    pub fn std_doses(&self) -> &[f64] {
        &self.std_doses
    }

    pub fn inserted(&self) -> &[bool] {
        &self.inserted
    }

    pub fn scale(&self) -> DoseScale {
        self.scale
    }

    pub fn prespecified_max_raw(&self) -> f64 {
        self.prespecified_max_raw
    }

    /// Smallest neighbour gap of the prespecified standardized doses.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn to_std(&self, raw: f64) -> f64 {
        (self.scale.forward(raw) - self.anchor_lo) / (self.anchor_hi - self.anchor_lo)
    }

    pub fn to_raw(&self, std: f64) -> f64 {
        self.scale
            .inverse(self.anchor_lo + std * (self.anchor_hi - self.anchor_lo))
    }

    pub fn contains_raw(&self, raw: f64) -> bool {
        let s = self.to_std(raw);
        self.std_doses.iter().any(|&d| (d - s).abs() < 1e-9)
    }

    /// Smallest neighbour gap of the current working grid.
    pub fn min_gap(&self) -> f64 {
        self.std_doses
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// The same grid with sigma reset to its current smallest gap.
    pub fn recalibrated(&self) -> DoseGrid {
        DoseGrid {
            sigma: self.min_gap(),
            ..self.clone()
        }
    }

    /// Insert `new_raw`, returning the augmented grid and the new dose's index.
    pub fn augment(&self, new_raw: f64) -> Result<(DoseGrid, usize)> {
        if !(new_raw > 0.0 && new_raw.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "inserted dose must be positive, got {new_raw}"
            )));
        }
        if self.contains_raw(new_raw) {
            return Err(Error::DuplicateDose(new_raw));
        }
        let idx = self.raw_doses.partition_point(|&d| d < new_raw);
        let mut grid = self.clone();
        grid.raw_doses.insert(idx, new_raw);
        grid.std_doses.insert(idx, self.to_std(new_raw));
        grid.inserted.insert(idx, true);
        Ok((grid, idx))
    }
}

/// Re-sorted working grid with the new dose flagged as inserted.
pub fn augment_grid(grid: &DoseGrid, new_raw: f64) -> Result<DoseGrid> {
    grid.augment(new_raw).map(|(g, _)| g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    AsymmetricGaussian,
    SymmetricGaussian,
    Kronecker,
}

/// A two-sided Gaussian kernel. `theta1` governs decay toward lower doses
/// (data below the query), `theta2` toward higher doses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub theta1: f64,
    pub theta2: f64,
    pub sigma: f64,
}

impl KernelSpec {
    pub fn kronecker() -> KernelSpec {
        KernelSpec {
            kind: KernelKind::Kronecker,
            theta1: 1.0,
            theta2: 1.0,
            sigma: 1.0,
        }
    }

    /// Symmetric kernel whose value at distance `sigma` is `value`;
    /// a value of zero means no borrowing at all.
    pub fn symmetric_with_value(sigma: f64, value: f64) -> Result<KernelSpec> {
        if value == 0.0 {
            return Ok(KernelSpec::kronecker());
        }
        calibrate(sigma, value, value)
    }

    /// The kernel with its nearest-neighbour values moved to distance
    /// `sigma`.
    pub fn rescaled(&self, sigma: f64) -> KernelSpec {
        if self.kind == KernelKind::Kronecker {
            return *self;
        }
        let f = (self.sigma / sigma).powi(2);
        KernelSpec {
            theta1: self.theta1 * f,
            theta2: self.theta2 * f,
            sigma,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == KernelKind::Kronecker {
            return Ok(());
        }
        if !(self.theta1 > 0.0 && self.theta1.is_finite()) {
            return Err(Error::param("theta1", "must be positive"));
        }
        if !(self.theta2 > 0.0 && self.theta2.is_finite()) {
            return Err(Error::param("theta2", "must be positive"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::param("sigma", "must be positive"));
        }
        if self.kind == KernelKind::SymmetricGaussian && self.theta1 != self.theta2 {
            return Err(Error::param(
                "theta2",
                "symmetric kernel requires theta1 = theta2",
            ));
        }
        Ok(())
    }
}

/// Calibrate the kernel so that the nearest lower neighbour (at distance
/// `sigma`) receives weight `k_lower` and the nearest higher one `k_upper`.
pub fn calibrate_kernel(grid: &DoseGrid, k_lower: f64, k_upper: f64) -> Result<KernelSpec> {
    calibrate(grid.sigma(), k_lower, k_upper)
}

pub(crate) fn calibrate(sigma: f64, k_lower: f64, k_upper: f64) -> Result<KernelSpec> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidGrid(
            "degenerate grid: sigma must be positive".into(),
        ));
    }
    for (field, k) in [("k_lower", k_lower), ("k_upper", k_upper)] {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::param(field, format!("must lie in (0, 1), got {k}")));
        }
    }
    let s2 = sigma * sigma;
    let kind = if k_lower == k_upper {
        KernelKind::SymmetricGaussian
    } else {
        KernelKind::AsymmetricGaussian
    };
    Ok(KernelSpec {
        kind,
        theta1: -k_lower.ln() / s2,
        theta2: -k_upper.ln() / s2,
        sigma,
    })
}

/// Kernel weight of data at `d_prime` for inference at `d`.
pub fn kernel_eval(spec: &KernelSpec, d: f64, d_prime: f64) -> f64 {
    let diff = d - d_prime;
    match spec.kind {
        KernelKind::Kronecker => {
            if diff.abs() < DOSE_EPS {
                1.0
            } else {
                0.0
            }
        }
        _ => {
            let theta = if d_prime <= d {
                spec.theta1
            } else {
                spec.theta2
            };
            (-theta * diff * diff).exp()
        }
    }
}

/// Kernel-weighted DLT count and sample size at one query dose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoCounts {
    pub y_prime: f64,
    pub n_prime: f64,
}

/// Normalized weights over the observed doses (`n_s > 0`); zero elsewhere.
///
/// Returns `None` when no observed dose receives positive kernel mass
/// (only possible for the Kronecker kernel at an untried dose).
pub fn normalized_weights(
    spec: &KernelSpec,
    std_doses: &[f64],
    n: &[f64],
    query: f64,
) -> Result<Option<Vec<f64>>> {
    if !n.iter().any(|&v| v > 0.0) {
        return Err(Error::EmptyObservedSet);
    }
    let mut weights: Vec<f64> = std_doses
        .iter()
        .zip(n)
        .map(|(&d, &ns)| {
            if ns > 0.0 {
                kernel_eval(spec, query, d)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Ok(None);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Some(weights))
}

/// Pseudo-counts from real-valued per-dose statistics (effective counts
/// under time-to-event follow-up, plain counts otherwise).
pub fn pseudo_counts_from(
    spec: &KernelSpec,
    std_doses: &[f64],
    y: &[f64],
    n: &[f64],
    query: f64,
) -> Result<PseudoCounts> {
    if std_doses.len() != y.len() || y.len() != n.len() {
        return Err(Error::InvalidGrid(format!(
            "grid has {} doses but data has {} / {} entries",
            std_doses.len(),
            y.len(),
            n.len()
        )));
    }
    let Some(w) = normalized_weights(spec, std_doses, n, query)? else {
        return Ok(PseudoCounts {
            y_prime: 0.0,
            n_prime: 0.0,
        });
    };
    let y_prime = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let n_prime = w.iter().zip(n).map(|(w, n)| w * n).sum();
    Ok(PseudoCounts { y_prime, n_prime })
}

pub fn pseudo_counts(
    spec: &KernelSpec,
    grid: &DoseGrid,
    data: &TrialData,
    query: f64,
) -> Result<PseudoCounts> {
    let (y, n) = data.as_f64();
    pseudo_counts_from(spec, grid.std_doses(), &y, &n, query)
}
