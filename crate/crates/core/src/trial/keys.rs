use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{beta_interval_prob, BetaParams};

const EDGE_EPS: f64 = 1e-9;

/// Partition of `(0, 1)` into equal-width toxicity intervals around the
/// target key `(phi - eps1, phi + eps2)`; the outermost keys are truncated
/// at 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyPartition {
    pub phi: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub boundaries: Vec<f64>,
    pub target_index: usize,
}

impl KeyPartition {
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn key(&self, index: usize) -> (f64, f64) {
        (self.boundaries[index], self.boundaries[index + 1])
    }

    pub fn target(&self) -> (f64, f64) {
        self.key(self.target_index)
    }

    /// Posterior probability of each key.
    pub fn probabilities(&self, posterior: BetaParams) -> Result<Vec<f64>> {
        self.boundaries
            .windows(2)
            .map(|w| beta_interval_prob(posterior, w[0], w[1]))
            .collect()
    }
}

pub fn build_keys(phi: f64, eps1: f64, eps2: f64) -> Result<KeyPartition> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::param(
            "phi",
            format!("must lie in (0, 1), got {phi}"),
        ));
    }
    if !(eps1 > 0.0) {
        return Err(Error::param(
            "eps1",
            format!("must be positive, got {eps1}"),
        ));
    }
    if !(eps2 > 0.0) {
        return Err(Error::param(
            "eps2",
            format!("must be positive, got {eps2}"),
        ));
    }
    let lo = phi - eps1;
    let hi = phi + eps2;
    if lo <= 0.0 {
        return Err(Error::param("eps1", "target key must start above 0"));
    }
    if hi >= 1.0 {
        return Err(Error::param("eps2", "target key must end below 1"));
    }
    let width = eps1 + eps2;

    let mut below = Vec::new();
    let mut k = 1.0;
    loop {
        let b = lo - k * width;
        if b <= EDGE_EPS {
            break;
        }
        below.push(b);
        k += 1.0;
    }
    let mut above = Vec::new();
    let mut k = 1.0;
    loop {
        let b = hi + k * width;
        if b >= 1.0 - EDGE_EPS {
            break;
        }
        above.push(b);
        k += 1.0;
    }

    let mut boundaries = vec![0.0];
    boundaries.extend(below.iter().rev());
    let target_index = boundaries.len();
    boundaries.push(lo);
    boundaries.push(hi);
    boundaries.extend(above);
    boundaries.push(1.0);
    Ok(KeyPartition {
        phi,
        eps1,
        eps2,
        boundaries,
        target_index,
    })
}

/// Index of the key with the largest posterior probability; ties within
/// `1e-12` go to the higher (more toxic) key.
pub fn strongest_key(posterior: BetaParams, keys: &KeyPartition) -> Result<usize> {
    let probs = keys.probabilities(posterior)?;
    Ok(strongest_of(&probs))
}

pub(crate) fn strongest_of(probs: &[f64]) -> usize {
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    probs
        .iter()
        .rposition(|&p| p >= max - 1e-12)
        .expect("key partition is never empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn keys_for_phi_030() {
        let k = build_keys(0.3, 0.05, 0.05).unwrap();
        assert!(close(
            &k.boundaries,
            &[0.0, 0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95, 1.0]
        ));
        assert_eq!(k.target(), (k.boundaries[3], k.boundaries[4]));
        assert!((k.target().0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn keys_for_phi_020() {
        let k = build_keys(0.2, 0.05, 0.05).unwrap();
        // Brute enumeration: a key edge every 0.1 offset from 0.15, inside (0, 1).
        let mut edges = vec![0.0];
        for i in -10..=10 {
            let e = 0.15 + 0.1 * i as f64;
            if e > 1e-9 && e < 1.0 - 1e-9 {
                edges.push(e);
            }
        }
        edges.push(1.0);
        assert!(close(&k.boundaries, &edges));
        assert!((k.target().0 - 0.15).abs() < 1e-12 && (k.target().1 - 0.25).abs() < 1e-12);
        assert!((k.key(0).1 - 0.05).abs() < 1e-12);
    }

    #[test]
    fn keys_for_phi_050_are_symmetric() {
        let k = build_keys(0.5, 0.05, 0.05).unwrap();
        let n = k.boundaries.len();
        for i in 0..n {
            assert!((k.boundaries[i] + k.boundaries[n - 1 - i] - 1.0).abs() < 1e-12);
        }
        assert!((k.key(0).1 - 0.05).abs() < 1e-12);
        assert!((k.key(k.len() - 1).0 - 0.95).abs() < 1e-12);
    }

    #[test]
    fn invalid_targets() {
        assert!(build_keys(0.03, 0.05, 0.05).is_err());
        assert!(build_keys(0.97, 0.05, 0.05).is_err());
        assert!(build_keys(1.2, 0.05, 0.05).is_err());
        assert!(build_keys(0.3, 0.0, 0.05).is_err());
    }

    #[test]
    fn strongest_key_examples() {
        let keys = build_keys(0.3, 0.05, 0.05).unwrap();
        let s = strongest_key(BetaParams::new(2.9, 5.4).unwrap(), &keys).unwrap();
        assert_eq!(s, keys.target_index);
        let s = strongest_key(BetaParams::new(3.0, 8.0).unwrap(), &keys).unwrap();
        assert!(s < keys.target_index);
        let s = strongest_key(BetaParams::new(1.0, 1.0).unwrap(), &keys).unwrap();
        assert_eq!(keys.key(s), (keys.boundaries[9], keys.boundaries[10]));
        assert!((keys.key(s).0 - 0.85).abs() < 1e-12);
    }
}
