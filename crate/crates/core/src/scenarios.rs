//! Dose-toxicity scenarios: the fixed catalog, Emax insertion scenarios and
//! the pseudo-uniform random generator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmaxParams {
    #[serde(default)]
    pub e0: f64,
    #[serde(default = "one")]
    pub emax: f64,
    pub ec50: f64,
    pub gamma: f64,
}

fn one() -> f64 {
    1.0
}

impl EmaxParams {
    pub fn new(ec50: f64, gamma: f64) -> Result<Self> {
        let p = EmaxParams {
            e0: 0.0,
            emax: 1.0,
            ec50,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ec50 > 0.0 && self.ec50.is_finite()) {
            return Err(Error::param("ec50", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", "must be positive"));
        }
        if !(self.e0 >= 0.0 && self.emax > 0.0 && self.e0 + self.emax <= 1.0 + 1e-12) {
            return Err(Error::param("emax", "e0 and e0 + emax must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn eval(&self, dose: f64) -> f64 {
        if dose <= 0.0 {
            return self.e0;
        }
        // d^g / (ec^g + d^g) written as a logistic in log dose for stability.
        let z = self.gamma * (dose.ln() - self.ec50.ln());
        self.e0 + self.emax / (1.0 + (-z).exp())
    }

    /// Dose with toxicity `p`, if the curve reaches it.
    pub fn inverse(&self, p: f64) -> Option<f64> {
        let u = (p - self.e0) / self.emax;
        if !(u > 0.0 && u < 1.0) {
            return None;
        }
        Some(self.ec50 * (u / (1.0 - u)).powf(1.0 / self.gamma))
    }
}

pub fn emax_curve(p: &EmaxParams, doses: &[f64]) -> Vec<f64> {
    doses.iter().map(|&d| p.eval(d)).collect()
}

/// Emax curve through `(mtd, phi)` whose slope best fits `tox` at `doses`
/// in least squares. EC50 is tied to the slope by the anchor.
pub fn fit_anchored_emax(doses: &[f64], tox: &[f64], mtd: f64, phi: f64) -> Result<EmaxParams> {
    if doses.len() != tox.len() || doses.is_empty() {
        return Err(Error::param("tox", "must have one value per dose"));
    }
    let logit_phi = (phi / (1.0 - phi)).ln();
    let curve = |g: f64| EmaxParams {
        e0: 0.0,
        emax: 1.0,
        ec50: (mtd.ln() - logit_phi / g).exp(),
        gamma: g,
    };
    let sse = |g: f64| {
        let c = curve(g);
        doses
            .iter()
            .zip(tox)
            .map(|(&d, &t)| (c.eval(d) - t).powi(2))
            .sum::<f64>()
    };
    // Golden-section search on the slope.
    let (mut a, mut b) = (0.05_f64, 10.0_f64);
    let r = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = sse(d);
        }
    }
    let p = curve(0.5 * (a + b));
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub doses: Vec<f64>,
    pub tox: Vec<f64>,
    pub phi: f64,
    /// 1-based in JSON; `None` when the MTD lies off the grid.
    #[serde(
        default,
        with = "crate::serde_util::one_based",
        skip_serializing_if = "Option::is_none"
    )]
    pub mtd_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mtd_dose: Option<f64>,
    /// Generating curve used for toxicity at doses off the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<EmaxParams>,
}

/// Index minimizing |tox - phi|, lowest on ties.
pub fn mtd_of(tox: &[f64], phi: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &t) in tox.iter().enumerate() {
        let dist = (t - phi).abs();
        match best {
            Some((_, b)) if dist >= b - 1e-12 => {}
            _ => best = Some((j, dist)),
        }
    }
    best.map(|(j, _)| j)
}

impl Scenario {
    /// Scenario on the given grid with the MTD index derived from `tox`.
    pub fn on_grid(
        name: impl Into<String>,
        doses: Vec<f64>,
        tox: Vec<f64>,
        phi: f64,
    ) -> Result<Self> {
        let mtd_index = mtd_of(&tox, phi);
        let s = Scenario {
            name: Some(name.into()),
            doses,
            tox,
            phi,
            mtd_index,
            mtd_dose: None,
            curve: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.doses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doses.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.doses.len() < 2 {
            return Err(Error::param("doses", "at least 2 doses are required"));
        }
        if self.tox.len() != self.doses.len() {
            return Err(Error::param("tox", "must have one value per dose"));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::param("phi", "must lie in (0, 1)"));
        }
        if self.doses.iter().any(|d| !(*d > 0.0 && d.is_finite()))
            || self.doses.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::param(
                "doses",
                "must be positive and strictly increasing",
            ));
        }
        if self.tox.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::param("tox", "values must lie in [0, 1]"));
        }
        if self.tox.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("tox", "must be nondecreasing"));
        }
        if let Some(j) = self.mtd_index {
            if j >= self.doses.len() {
                return Err(Error::param("mtd_index", "dose level out of range"));
            }
        }
        if let Some(m) = self.mtd_dose {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::param("mtd_dose", "must be positive"));
            }
        }
        if let Some(c) = &self.curve {
            c.validate()?;
        }
        Ok(())
    }

    /// The true MTD as a raw dose: the continuous MTD when given, else the
    /// dose at the on-grid MTD index.
    pub fn true_mtd_dose(&self) -> Result<f64> {
        match (self.mtd_dose, self.mtd_index) {
            (Some(m), _) => Ok(m),
            (None, Some(j)) => Ok(self.doses[j]),
            (None, None) => Err(Error::UndefinedMtd),
        }
    }
}

const FIXED_PHI02: [[f64; 5]; 10] = [
    [0.20, 0.26, 0.40, 0.45, 0.46],
    [0.20, 0.29, 0.35, 0.50, 0.58],
    [0.10, 0.20, 0.25, 0.35, 0.40],
    [0.08, 0.20, 0.30, 0.45, 0.65],
    [0.04, 0.06, 0.20, 0.32, 0.50],
    [0.01, 0.10, 0.20, 0.26, 0.35],
    [0.05, 0.06, 0.07, 0.20, 0.31],
    [0.02, 0.04, 0.10, 0.20, 0.25],
    [0.01, 0.02, 0.07, 0.08, 0.20],
    [0.01, 0.02, 0.03, 0.04, 0.20],
];

const FIXED_PHI03: [[f64; 5]; 10] = [
    [0.30, 0.36, 0.42, 0.45, 0.46],
    [0.30, 0.40, 0.55, 0.60, 0.70],
    [0.08, 0.30, 0.38, 0.42, 0.52],
    [0.13, 0.30, 0.42, 0.50, 0.80],
    [0.04, 0.07, 0.30, 0.35, 0.42],
    [0.01, 0.12, 0.30, 0.41, 0.55],
    [0.06, 0.07, 0.12, 0.30, 0.40],
    [0.02, 0.05, 0.16, 0.30, 0.36],
    [0.01, 0.02, 0.04, 0.06, 0.30],
    [0.06, 0.07, 0.08, 0.12, 0.30],
];

/// The twenty fixed five-level scenarios (1-10 at phi 0.2, 11-20 at phi
/// 0.3). Doses are the level numbers 1..5.
pub fn fixed_scenarios() -> Vec<Scenario> {
    let levels: Vec<f64> = (1..=5).map(f64::from).collect();
    FIXED_PHI02
        .iter()
        .map(|t| (0.2, t))
        .chain(FIXED_PHI03.iter().map(|t| (0.3, t)))
        .enumerate()
        .map(|(i, (phi, tox))| {
            Scenario::on_grid(
                format!("fixed-{}", i + 1),
                levels.clone(),
                tox.to_vec(),
                phi,
            )
            .expect("catalog scenarios are valid")
        })
        .collect()
}

/// Fixed scenario by 1-based number.
pub fn fixed_scenario(number: usize) -> Result<Scenario> {
    if !(1..=20).contains(&number) {
        return Err(Error::param(
            "scenario",
            "fixed scenarios are numbered 1 to 20",
        ));
    }
    Ok(fixed_scenarios().swap_remove(number - 1))
}

struct InsertionRow {
    doses: [f64; 5],
    tox: [f64; 5],
    mtd: f64,
}

const INSERTION_ROWS: [InsertionRow; 6] = [
    InsertionRow {
        doses: [5.0, 15.0, 25.0, 35.0, 45.0],
        tox: [0.14, 0.45, 0.63, 0.74, 0.80],
        mtd: 9.6,
    },
    InsertionRow {
        doses: [5.0, 10.0, 20.0, 35.0, 60.0],
        tox: [0.03, 0.14, 0.45, 0.75, 0.91],
        mtd: 15.1,
    },
    InsertionRow {
        doses: [5.0, 7.5, 15.0, 30.0, 60.0],
        tox: [0.03, 0.06, 0.20, 0.50, 0.80],
        mtd: 19.6,
    },
    InsertionRow {
        doses: [1.0, 1.5, 3.0, 5.0, 10.0],
        tox: [0.02, 0.03, 0.09, 0.20, 0.45],
        mtd: 6.8,
    },
    InsertionRow {
        doses: [10.0, 20.0, 30.0, 40.0, 50.0],
        tox: [0.45, 0.55, 0.61, 0.65, 0.68],
        mtd: 3.2,
    },
    InsertionRow {
        doses: [5.0, 10.0, 20.0, 35.0, 50.0],
        tox: [0.03, 0.05, 0.09, 0.15, 0.20],
        mtd: 86.8,
    },
];

/// The six dose-insertion scenarios at phi = 0.3. Toxicities are the
/// published rounded values; `curve` carries the recovered Emax truth used
/// at inserted doses.
pub fn insertion_scenarios() -> Vec<Scenario> {
    let phi = 0.3;
    INSERTION_ROWS
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let curve =
                fit_anchored_emax(&row.doses, &row.tox, row.mtd, phi).expect("catalog curves fit");
            Scenario {
                name: Some(format!("insertion-{}", i + 1)),
                doses: row.doses.to_vec(),
                tox: row.tox.to_vec(),
                phi,
                mtd_index: None,
                mtd_dose: Some(row.mtd),
                curve: Some(curve),
            }
        })
        .collect()
}

pub fn insertion_scenario(number: usize) -> Result<Scenario> {
    if !(1..=6).contains(&number) {
        return Err(Error::param(
            "scenario",
            "insertion scenarios are numbered 1 to 6",
        ));
    }
    Ok(insertion_scenarios().swap_remove(number - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomConstraints {
    /// Maximum |tox[MTD] - phi|.
    pub mtd_window: f64,
    /// Minimum increment from the dose below the MTD.
    pub min_gap_below: f64,
    /// Minimum increment to the dose above the MTD.
    pub min_gap_above: f64,
    pub max_gap: f64,
    /// Draws of the toxicity vector per sampled upper bound.
    pub draws_per_bound: usize,
    pub max_attempts: usize,
}

impl Default for RandomConstraints {
    fn default() -> Self {
        RandomConstraints {
            mtd_window: 0.05,
            min_gap_below: 0.05,
            min_gap_above: 0.05,
            max_gap: 0.3,
            draws_per_bound: 1000,
            max_attempts: 100_000,
        }
    }
}

impl RandomConstraints {
    /// Whether `tox` is admissible with its MTD at `j`.
    pub fn admits(&self, tox: &[f64], phi: f64, j: usize) -> bool {
        if tox.windows(2).any(|w| w[1] < w[0]) {
            return false;
        }
        if (tox[j] - phi).abs() > self.mtd_window + 1e-12 {
            return false;
        }
        let dist = (tox[j] - phi).abs();
        if tox
            .iter()
            .enumerate()
            .any(|(k, t)| k != j && (t - phi).abs() <= dist + 1e-12)
        {
            return false;
        }
        if j > 0 {
            let gap = tox[j] - tox[j - 1];
            if gap < self.min_gap_below - 1e-12 || gap > self.max_gap + 1e-12 {
                return false;
            }
        }
        if j + 1 < tox.len() {
            let gap = tox[j + 1] - tox[j];
            if gap < self.min_gap_above - 1e-12 || gap > self.max_gap + 1e-12 {
                return false;
            }
        }
        true
    }
}

/// Draw a random scenario on `levels` doses: a uniform MTD location, an
/// upper bound `B = phi + (1 - phi) M` with `M ~ Beta(max(J - j, 0.5), 1)`,
/// and sorted uniforms on `[0, B]` kept only when admissible.
pub fn random_scenario<R: Rng + ?Sized>(
    levels: usize,
    phi: f64,
    constraints: &RandomConstraints,
    rng: &mut R,
) -> Result<Scenario> {
    if levels < 2 {
        return Err(Error::param(
            "levels",
            "at least 2 dose levels are required",
        ));
    }
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::param("phi", "must lie in (0, 1)"));
    }
    let j = rng.random_range(0..levels);
    let shape = ((levels - (j + 1)) as f64).max(0.5);
    let per_bound = constraints.draws_per_bound.max(1);
    let mut tox = vec![0.0; levels];
    let mut attempts = 0;
    while attempts < constraints.max_attempts {
        // Beta(a, 1) by inversion.
        let m = rng.random::<f64>().powf(1.0 / shape);
        let bound = phi + (1.0 - phi) * m;
        for _ in 0..per_bound {
            if attempts >= constraints.max_attempts {
                break;
            }
            attempts += 1;
            for t in tox.iter_mut() {
                *t = bound * rng.random::<f64>();
            }
            tox.sort_by(f64::total_cmp);
            if constraints.admits(&tox, phi, j) {
                let doses = (1..=levels).map(|k| k as f64).collect();
                let mut s = Scenario::on_grid("random", doses, tox, phi)?;
                s.mtd_index = Some(j);
                return Ok(s);
            }
        }
    }
    Err(Error::RejectionBudgetExhausted(constraints.max_attempts))
}
