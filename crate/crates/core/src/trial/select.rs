use crate::error::Result;
use crate::kernels::{pseudo_counts_from, DoseGrid, KernelSpec};
use crate::numerics::{pava, Direction, WeightedSequence};
use crate::trial::data::TrialData;
use crate::trial::design::DesignConfig;

const POOL_OFFSET: f64 = 1e-10;

/// Isotonic-adjusted posterior mean toxicity at every tried dose
/// (`None` for untried doses).
pub fn selection_estimates(
    config: &DesignConfig,
    grid: &DoseGrid,
    data: &TrialData,
) -> Result<Vec<Option<f64>>> {
    let tried: Vec<usize> = (0..data.len()).filter(|&j| data.n()[j] > 0).collect();
    if tried.is_empty() {
        return Ok(vec![None; data.len()]);
    }
    let kernel = KernelSpec::symmetric_with_value(grid.sigma(), config.selection_kernel_value)?;
    let (y, n) = data.as_f64();
    let prior = config.selection_prior;
    let mut means = Vec::with_capacity(tried.len());
    let mut weights = Vec::with_capacity(tried.len());
    for &j in &tried {
        let pc = pseudo_counts_from(&kernel, grid.std_doses(), &y, &n, grid.std_doses()[j])?;
        let mass = prior.alpha + prior.beta + pc.n_prime;
        means.push((prior.alpha + pc.y_prime) / mass);
        weights.push(mass);
    }
    let adjusted = pava(
        &WeightedSequence::new(means, weights)?,
        Direction::Nondecreasing,
    );
    let mut out = vec![None; data.len()];
    // A tiny increasing offset splits pooled blocks: below phi the highest
    // member is then closest, above phi the lowest.
    for (k, (&j, v)) in tried.iter().zip(adjusted).enumerate() {
        out[j] = Some(v + (k + 1) as f64 * POOL_OFFSET);
    }
    Ok(out)
}

/// Final MTD: the tried, non-eliminated dose whose adjusted toxicity
/// estimate is closest to phi, lowest dose on ties. `None` when the lowest
/// dose was eliminated or nothing was tried.
pub fn select_mtd(
    config: &DesignConfig,
    grid: &DoseGrid,
    data: &TrialData,
    eliminated_from: Option<usize>,
) -> Result<Option<usize>> {
    if eliminated_from == Some(0) {
        return Ok(None);
    }
    let estimates = selection_estimates(config, grid, data)?;
    let ceiling = eliminated_from.unwrap_or(data.len());
    let mut best: Option<(usize, f64)> = None;
    for (j, est) in estimates.iter().enumerate().take(ceiling) {
        let Some(p) = est else { continue };
        let dist = (p - config.phi).abs();
        match best {
            Some((_, d)) if dist >= d - 1e-12 => {}
            _ => best = Some((j, dist)),
        }
    }
    Ok(best.map(|(j, _)| j))
}
