//! JSON run configuration shared by the command line and the HTTP service.
//!
//! ```json
//! {
//!   "design": { "phi": 0.3 },
//!   "designs": ["skbd", "keyboard"],
//!   "doses": [5, 15, 25, 35, 45],
//!   "insertion": {},
//!   "metrics": { "rod_threshold": 0.6 }
//! }
//! ```
//!
//! Every section except `design.phi` has defaults; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::insertion::InsertionConfig;
use crate::kernels::{calibrate_kernel, standardize_doses, DoseGrid, DoseScale, KernelSpec};
use crate::numerics::BetaParams;
use crate::sim::{MetricOptions, OverdoseRule, TiteConfig, TrialPlan};
use crate::trial::{DesignConfig, TrialData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub phi: f64,
    #[serde(default = "d_eps")]
    pub eps1: f64,
    #[serde(default = "d_eps")]
    pub eps2: f64,
    #[serde(default = "d_prior")]
    pub prior: BetaParams,
    #[serde(default = "d_cutoff")]
    pub elimination_cutoff: f64,
    #[serde(default = "d_min_n")]
    pub elimination_min_n: u32,
    #[serde(default = "d_cohort")]
    pub cohort_size: u32,
    #[serde(default = "d_max_n")]
    pub max_n: u32,
    #[serde(default = "d_sel_prior")]
    pub selection_prior: BetaParams,
}

fn d_eps() -> f64 {
    0.05
}
fn d_prior() -> BetaParams {
    BetaParams {
        alpha: 1.0,
        beta: 1.0,
    }
}
fn d_cutoff() -> f64 {
    0.95
}
fn d_min_n() -> u32 {
    3
}
fn d_cohort() -> u32 {
    3
}
fn d_max_n() -> u32 {
    30
}
fn d_sel_prior() -> BetaParams {
    BetaParams {
        alpha: 0.01,
        beta: 0.01,
    }
}

impl DesignSection {
    pub fn new(phi: f64) -> Self {
        DesignSection {
            phi,
            eps1: d_eps(),
            eps2: d_eps(),
            prior: d_prior(),
            elimination_cutoff: d_cutoff(),
            elimination_min_n: d_min_n(),
            cohort_size: d_cohort(),
            max_n: d_max_n(),
            selection_prior: d_sel_prior(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Skbd,
    Keyboard,
}

/// A design variant: a preset name or explicit kernel values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignChoice {
    Preset(Preset),
    Custom(CustomDesign),
}

/// Kernel values are nearest-neighbour weights; omitting both gives the
/// Kronecker (no borrowing) decision kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomDesign {
    pub name: String,
    #[serde(default)]
    pub k_lower: Option<f64>,
    #[serde(default)]
    pub k_upper: Option<f64>,
    #[serde(default)]
    pub selection_kernel_value: f64,
}

impl DesignChoice {
    pub fn name(&self) -> String {
        match self {
            DesignChoice::Preset(Preset::Skbd) => "SKBD".into(),
            DesignChoice::Preset(Preset::Keyboard) => "Keyboard".into(),
            DesignChoice::Custom(c) => c.name.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub rod_threshold: f64,
    pub rod_inclusive: bool,
    pub overdose_rule: OverdoseRule,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let m = MetricOptions::default();
        MetricsSection {
            rod_threshold: m.rod_threshold,
            rod_inclusive: m.rod_inclusive,
            overdose_rule: m.overdose,
        }
    }
}

/// Interim data for conditional decision tables. Dose levels are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    #[serde(default)]
    pub n: Option<Vec<u32>>,
    #[serde(default)]
    pub y: Option<Vec<u32>>,
    #[serde(
        default = "first_level",
        with = "crate::serde_util::one_based_required"
    )]
    pub current: usize,
    #[serde(default = "one_u32")]
    pub n_min: u32,
    #[serde(default = "eighteen")]
    pub n_max: u32,
}

fn first_level() -> usize {
    0
}
fn one_u32() -> u32 {
    1
}
fn eighteen() -> u32 {
    18
}

impl Default for TableSection {
    fn default() -> Self {
        TableSection {
            n: None,
            y: None,
            current: 0,
            n_min: 1,
            n_max: 18,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub design: DesignSection,
    #[serde(default = "d_designs")]
    pub designs: Vec<DesignChoice>,
    #[serde(default)]
    pub doses: Option<Vec<f64>>,
    #[serde(default = "d_scale")]
    pub dose_scale: DoseScale,
    #[serde(default)]
    pub insertion: Option<InsertionConfig>,
    #[serde(default)]
    pub tite: Option<TiteConfig>,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub table: TableSection,
}

fn d_designs() -> Vec<DesignChoice> {
    vec![DesignChoice::Preset(Preset::Skbd)]
}
fn d_scale() -> DoseScale {
    DoseScale::Linear
}

/// A design ready to run, with its display name.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedDesign {
    pub name: String,
    pub design: DesignConfig,
}

impl Config {
    pub fn new(phi: f64) -> Self {
        Config {
            design: DesignSection::new(phi),
            designs: d_designs(),
            doses: None,
            dose_scale: d_scale(),
            insertion: None,
            tite: None,
            metrics: MetricsSection::default(),
            table: TableSection::default(),
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Check every section that does not depend on a dose grid.
    pub fn validate(&self) -> Result<()> {
        if self.designs.is_empty() {
            return Err(Error::param("designs", "at least one design is required"));
        }
        let grid = self.grid(None)?;
        for d in self.build_designs(&grid, None)? {
            d.design.validate()?;
        }
        if let Some(i) = &self.insertion {
            i.validate()?;
        }
        if let Some(t) = &self.tite {
            t.validate()?;
        }
        if self.insertion.is_some() && self.tite.is_some() {
            return Err(Error::param(
                "insertion",
                "dose insertion cannot be combined with time-to-event follow-up",
            ));
        }
        let m = &self.metrics;
        if !(m.rod_threshold > 0.0 && m.rod_threshold <= 1.0) {
            return Err(Error::param("rod_threshold", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Dose grid from the configured doses, or `levels` equally spaced
    /// levels (5 when unspecified) if the config gives none.
    pub fn grid(&self, levels: Option<usize>) -> Result<DoseGrid> {
        match &self.doses {
            Some(d) => {
                if let Some(l) = levels {
                    if l != d.len() {
                        return Err(Error::ScenarioMismatch(format!(
                            "config lists {} doses but the data has {l} levels",
                            d.len()
                        )));
                    }
                }
                standardize_doses(d, self.dose_scale)
            }
            None => DoseGrid::levels(levels.unwrap_or(5)),
        }
    }

    /// The configured designs on `grid`, with `phi` replacing the config
    /// target when given.
    pub fn build_designs(&self, grid: &DoseGrid, phi: Option<f64>) -> Result<Vec<NamedDesign>> {
        let s = &self.design;
        let base = DesignConfig {
            phi: phi.unwrap_or(s.phi),
            eps1: s.eps1,
            eps2: s.eps2,
            prior: s.prior,
            kernel: KernelSpec::kronecker(),
            elimination_cutoff: s.elimination_cutoff,
            elimination_min_n: s.elimination_min_n,
            cohort_size: s.cohort_size,
            max_n: s.max_n,
            selection_prior: s.selection_prior,
            selection_kernel_value: 0.0,
        };
        let mut names = std::collections::HashSet::new();
        self.designs
            .iter()
            .map(|choice| {
                let name = choice.name();
                if !names.insert(name.clone()) {
                    return Err(Error::param(
                        "designs",
                        format!("duplicate design name {name}"),
                    ));
                }
                let design = match choice {
                    DesignChoice::Preset(Preset::Keyboard) => base.clone(),
                    DesignChoice::Preset(Preset::Skbd) => DesignConfig {
                        kernel: calibrate_kernel(grid, 0.2, 0.8)?,
                        selection_kernel_value: 0.2,
                        ..base.clone()
                    },
                    DesignChoice::Custom(c) => {
                        let kernel = match (c.k_lower, c.k_upper) {
                            (None, None) => KernelSpec::kronecker(),
                            (Some(l), Some(u)) => calibrate_kernel(grid, l, u)?,
                            _ => {
                                return Err(Error::param(
                                    "k_upper",
                                    "give both k_lower and k_upper, or neither",
                                ))
                            }
                        };
                        if !(0.0..1.0).contains(&c.selection_kernel_value) {
                            return Err(Error::param(
                                "selection_kernel_value",
                                "must lie in [0, 1)",
                            ));
                        }
                        DesignConfig {
                            kernel,
                            selection_kernel_value: c.selection_kernel_value,
                            ..base.clone()
                        }
                    }
                };
                Ok(NamedDesign { name, design })
            })
            .collect()
    }

    /// Design by name, or the first configured design.
    pub fn design_named(&self, grid: &DoseGrid, name: Option<&str>) -> Result<NamedDesign> {
        let all = self.build_designs(grid, None)?;
        match name {
            None => Ok(all.into_iter().next().expect("validated nonempty")),
            Some(n) => all
                .into_iter()
                .find(|d| d.name.eq_ignore_ascii_case(n))
                .ok_or_else(|| Error::param("design", format!("no design named {n}"))),
        }
    }

    pub fn plan(&self, design: DesignConfig) -> TrialPlan {
        TrialPlan {
            design,
            insertion: self.insertion.clone(),
            tite: self.tite,
            scale: self.dose_scale,
        }
    }

    pub fn metric_options(&self) -> MetricOptions {
        MetricOptions {
            rod_threshold: self.metrics.rod_threshold,
            rod_inclusive: self.metrics.rod_inclusive,
            overdose: self.metrics.overdose_rule,
            ..MetricOptions::default()
        }
    }

    /// Context data for the decision table (empty when not configured).
    pub fn table_context(&self) -> Result<(DoseGrid, TrialData)> {
        let t = &self.table;
        let levels =
            t.n.as_ref()
                .map(Vec::len)
                .or(self.doses.as_ref().map(Vec::len));
        let grid = self.grid(levels)?;
        let data = match (&t.n, &t.y) {
            (Some(n), Some(y)) => TrialData::new(n.clone(), y.clone())?,
            (Some(n), None) => TrialData::new(n.clone(), vec![0; n.len()])?,
            (None, Some(_)) => {
                return Err(Error::param("table.n", "required when table.y is given"))
            }
            (None, None) => TrialData::empty(grid.len()),
        };
        Ok((grid, data))
    }
}
