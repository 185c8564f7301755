use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DoseGrid;

/// Per-dose patient and DLT counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialData {
    n: Vec<u32>,
    y: Vec<u32>,
}

impl TrialData {
    pub fn new(n: Vec<u32>, y: Vec<u32>) -> Result<Self> {
        if n.len() != y.len() {
            return Err(Error::param(
                "y",
                format!("{} entries for n but {} for y", n.len(), y.len()),
            ));
        }
        if let Some(j) = n.iter().zip(&y).position(|(n, y)| y > n) {
            return Err(Error::param(
                "y",
                format!("dose level {} has more DLTs than patients", j + 1),
            ));
        }
        Ok(TrialData { n, y })
    }

    pub fn empty(levels: usize) -> Self {
        TrialData {
            n: vec![0; levels],
            y: vec![0; levels],
        }
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    pub fn n(&self) -> &[u32] {
        &self.n
    }

    pub fn y(&self) -> &[u32] {
        &self.y
    }

    pub fn total_n(&self) -> u32 {
        self.n.iter().sum()
    }

    pub fn record(&mut self, dose: usize, patients: u32, dlts: u32) {
        self.n[dose] += patients;
        self.y[dose] += dlts;
    }

    pub fn set(&mut self, dose: usize, n: u32, y: u32) -> Result<()> {
        if y > n {
            return Err(Error::param("y", "more DLTs than patients"));
        }
        self.n[dose] = n;
        self.y[dose] = y;
        Ok(())
    }

    /// Open an empty slot at `index` (after a dose insertion).
    pub fn insert_level(&mut self, index: usize) {
        self.n.insert(index, 0);
        self.y.insert(index, 0);
    }

    pub fn as_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.y.iter().map(|&v| v as f64).collect(),
            self.n.iter().map(|&v| v as f64).collect(),
        )
    }
}

/// Dose-level statistics a decision is computed from. Under complete
/// follow-up these are the raw counts; under time-to-event follow-up they
/// are effective counts, while `enrolled` always counts actual patients.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub y: Vec<f64>,
    pub n: Vec<f64>,
    pub enrolled: Vec<u32>,
}

impl From<&TrialData> for Evidence {
    fn from(data: &TrialData) -> Self {
        let (y, n) = data.as_f64();
        Evidence {
            y,
            n,
            enrolled: data.n.clone(),
        }
    }
}

/// Snapshot of a trial in progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    pub grid: DoseGrid,
    pub data: TrialData,
    pub current: usize,
    /// That dose and every higher one are off-limits.
    pub eliminated_from: Option<usize>,
}

impl TrialState {
    pub fn new(grid: DoseGrid) -> Self {
        let data = TrialData::empty(grid.len());
        TrialState {
            grid,
            data,
            current: 0,
            eliminated_from: None,
        }
    }

    pub fn enrolled(&self) -> u32 {
        self.data.total_n()
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.grid.len() {
            return Err(Error::ScenarioMismatch(format!(
                "grid has {} doses but data has {}",
                self.grid.len(),
                self.data.len()
            )));
        }
        if self.current >= self.grid.len() {
            return Err(Error::param("current", "dose level out of range"));
        }
        if let Some(e) = self.eliminated_from {
            if e > self.grid.len() {
                return Err(Error::param("eliminated_from", "dose level out of range"));
            }
            if self.current >= e && e > 0 {
                return Err(Error::param(
                    "current",
                    "current dose is at or above an eliminated dose",
                ));
            }
        }
        Ok(())
    }
}
