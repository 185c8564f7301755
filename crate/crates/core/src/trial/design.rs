use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{calibrate_kernel, DoseGrid, KernelSpec};
use crate::numerics::BetaParams;
use crate::trial::keys::{build_keys, KeyPartition};

/// Parameters of a Keyboard-family design. The Keyboard design itself is
/// the special case with a Kronecker decision kernel and no borrowing at
/// final selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub phi: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub prior: BetaParams,
    pub kernel: KernelSpec,
    pub elimination_cutoff: f64,
    pub elimination_min_n: u32,
    pub cohort_size: u32,
    pub max_n: u32,
    pub selection_prior: BetaParams,
    /// Nearest-neighbour value of the symmetric kernel used at final
    /// selection; zero disables borrowing.
    pub selection_kernel_value: f64,
}

impl DesignConfig {
    /// Shared Keyboard design with the default asymmetric kernel
    /// (nearest lower neighbour 0.2, nearest higher neighbour 0.8).
    pub fn skbd(phi: f64, grid: &DoseGrid) -> Result<Self> {
        let kernel = calibrate_kernel(grid, 0.2, 0.8)?;
        Ok(DesignConfig {
            kernel,
            ..Self::keyboard(phi)
        }
        .with_selection_kernel_value(0.2))
    }

    /// The classical Keyboard design.
    pub fn keyboard(phi: f64) -> Self {
        DesignConfig {
            phi,
            eps1: 0.05,
            eps2: 0.05,
            prior: BetaParams {
                alpha: 1.0,
                beta: 1.0,
            },
            kernel: KernelSpec::kronecker(),
            elimination_cutoff: 0.95,
            elimination_min_n: 3,
            cohort_size: 3,
            max_n: 30,
            selection_prior: BetaParams {
                alpha: 0.01,
                beta: 0.01,
            },
            selection_kernel_value: 0.0,
        }
    }

    pub fn with_selection_kernel_value(mut self, value: f64) -> Self {
        self.selection_kernel_value = value;
        self
    }

    pub fn keys(&self) -> Result<KeyPartition> {
        build_keys(self.phi, self.eps1, self.eps2)
    }

    pub fn validate(&self) -> Result<()> {
        self.keys()?;
        self.prior
            .validate()
            .map_err(|e| Error::param("prior", e.to_string()))?;
        self.selection_prior
            .validate()
            .map_err(|e| Error::param("selection_prior", e.to_string()))?;
        self.kernel.validate()?;
        if !(self.elimination_cutoff > 0.0 && self.elimination_cutoff < 1.0) {
            return Err(Error::param("elimination_cutoff", "must lie in (0, 1)"));
        }
        if self.cohort_size == 0 {
            return Err(Error::param("cohort_size", "must be positive"));
        }
        if self.max_n == 0 {
            return Err(Error::param("max_n", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.selection_kernel_value) {
            return Err(Error::param("selection_kernel_value", "must lie in [0, 1)"));
        }
        Ok(())
    }
}
