//! Beta-distribution probabilities and isotonic regression.
//!
//! Every posterior probability in the engine (key probabilities, the
//! over-toxicity probability behind elimination, insertion triggers) reduces
//! to the regularized incomplete beta function `I_x(a, b)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CF_TOLERANCE: f64 = 1e-14;
const CF_MAX_ITER: usize = 500;
const CF_TINY: f64 = 1e-300;

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = BetaParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Conjugate update with (possibly fractional) successes and failures.
    pub fn updated(&self, events: f64, non_events: f64) -> BetaParams {
        BetaParams {
            alpha: self.alpha + events,
            beta: self.beta + non_events,
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        reg_inc_beta(x, *self)
    }

    /// Density at `x`; infinite at an endpoint when the matching shape is below one.
    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let (a, b) = (self.alpha, self.beta);
        if x == 0.0 {
            return match a.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => (-ln_beta(a, b)).exp(),
                _ => 0.0,
            };
        }
        if x == 1.0 {
            return match b.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => (-ln_beta(a, b)).exp(),
                _ => 0.0,
            };
        }
        ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
    }
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Regularized incomplete beta function `I_x(alpha, beta)`.
///
/// Continued fraction evaluated with the modified Lentz method; the
/// symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)` is used when
/// `x > (a + 1) / (a + b + 2)` so the fraction converges quickly.
pub fn reg_inc_beta(x: f64, p: BetaParams) -> Result<f64> {
    p.validate()?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let (a, b) = (p.alpha, p.beta);
    let value = if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - inc_beta_cf(b, a, 1.0 - x)
    } else {
        inc_beta_cf(a, b, x)
    };
    Ok(value.clamp(0.0, 1.0))
}

fn inc_beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let front = ln_front.exp() / a;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_TOLERANCE {
            break;
        }
    }
    front * h
}

/// Probability that a Beta variate falls in `(lo, hi]`.
pub fn beta_interval_prob(p: BetaParams, lo: f64, hi: f64) -> Result<f64> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::Domain(format!(
            "interval ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1"
        )));
    }
    let upper = reg_inc_beta(hi, p)?;
    let lower = reg_inc_beta(lo, p)?;
    Ok((upper - lower).max(0.0))
}

/// Values with strictly positive weights, the input to [`pava`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSequence {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSequence {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::Domain(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!("weights must be positive, got {w}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("values must be finite".into()));
        }
        Ok(WeightedSequence { values, weights })
    }

    pub fn unweighted(values: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; values.len()];
        Self::new(values, weights)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
}

/// Weighted least-squares monotone fit by pooling adjacent violators.
pub fn pava(seq: &WeightedSequence, direction: Direction) -> Vec<f64> {
    let sign = match direction {
        Direction::Nondecreasing => 1.0,
        Direction::Nonincreasing => -1.0,
    };
    // Stack of pooled blocks: (weighted mean, total weight, member count).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(seq.len());
    for (&v, &w) in seq.values.iter().zip(&seq.weights) {
        let mut block = (sign * v, w, 1usize);
        while let Some(&(prev_mean, prev_w, prev_len)) = blocks.last() {
            if prev_mean <= block.0 {
                break;
            }
            blocks.pop();
            let total = prev_w + block.1;
            block = (
                (prev_mean * prev_w + block.0 * block.1) / total,
                total,
                prev_len + block.2,
            );
        }
        blocks.push(block);
    }
    blocks
        .into_iter()
        .flat_map(|(mean, _, len)| std::iter::repeat_n(sign * mean, len))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn uniform_cdf_is_identity() {
        assert!((reg_inc_beta(0.5, beta(1.0, 1.0)).unwrap() - 0.5).abs() < 1e-14);
        assert!((reg_inc_beta(0.3, beta(1.0, 1.0)).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn power_cdf() {
        assert!((reg_inc_beta(0.3, beta(4.0, 1.0)).unwrap() - 0.0081).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(reg_inc_beta(-0.1, beta(1.0, 1.0)).is_err());
        assert!(reg_inc_beta(1.1, beta(1.0, 1.0)).is_err());
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, -2.0).is_err());
        assert!(reg_inc_beta(
            0.5,
            BetaParams {
                alpha: -1.0,
                beta: 1.0
            }
        )
        .is_err());
    }

    #[test]
    fn interval_probabilities() {
        let p = beta_interval_prob(beta(1.0, 1.0), 0.25, 0.35).unwrap();
        assert!((p - 0.10).abs() < 1e-12);
        let p = beta_interval_prob(beta(4.0, 1.0), 0.3, 1.0).unwrap();
        assert!((p - 0.9919).abs() < 1e-12);
        assert!(beta_interval_prob(beta(1.0, 1.0), 0.4, 0.3).is_err());
        assert!(beta_interval_prob(beta(1.0, 1.0), -0.1, 0.3).is_err());
        assert!(beta_interval_prob(beta(1.0, 1.0), 0.1, 1.2).is_err());
    }

    #[test]
    fn pava_examples() {
        let seq = WeightedSequence::new(vec![0.1, 0.2, 0.3], vec![3.0, 1.0, 7.0]).unwrap();
        assert_eq!(pava(&seq, Direction::Nondecreasing), vec![0.1, 0.2, 0.3]);

        let seq = WeightedSequence::unweighted(vec![0.3, 0.1]).unwrap();
        let fit = pava(&seq, Direction::Nondecreasing);
        assert!((fit[0] - 0.2).abs() < 1e-15 && (fit[1] - 0.2).abs() < 1e-15);

        let seq = WeightedSequence::unweighted(vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let fit = pava(&seq, Direction::Nondecreasing);
        let expected = [0.1, 0.25, 0.25, 0.4];
        for (f, e) in fit.iter().zip(expected) {
            assert!((f - e).abs() < 1e-12);
        }
    }

    #[test]
    fn pava_nonincreasing() {
        let seq = WeightedSequence::unweighted(vec![0.1, 0.3, 0.2]).unwrap();
        let fit = pava(&seq, Direction::Nonincreasing);
        assert!((fit[0] - 0.2).abs() < 1e-12);
        assert!((fit[1] - 0.2).abs() < 1e-12);
        assert!((fit[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn weighted_sequence_validation() {
        assert!(WeightedSequence::new(vec![0.1], vec![]).is_err());
        assert!(WeightedSequence::new(vec![0.1], vec![0.0]).is_err());
        assert!(WeightedSequence::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn pdf_integrates_to_cdf_difference() {
        let p = beta(3.0, 8.0);
        let n = 2000;
        let (lo, hi) = (0.25, 0.35);
        let h = (hi - lo) / n as f64;
        let mut s = p.pdf(lo) + p.pdf(hi);
        for i in 1..n {
            let x = lo + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * p.pdf(x);
        }
        let simpson = s * h / 3.0;
        let direct = beta_interval_prob(p, lo, hi).unwrap();
        assert!((simpson - direct).abs() < 1e-10);
    }
}
