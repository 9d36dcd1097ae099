//! Run parameters shared by the analysis pipeline, the probe, and the CLI.

use crate::error::{Error, Result};

/// Knobs for a full analysis run. The defaults resolve every matrix in the
/// bundled corpus in well under a second each.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Number of angle grid nodes around the circle.
    pub grid_count: usize,
    /// Relative tolerance for eigenvalue clustering and collision detection.
    pub tol: f64,
    /// Highest Taylor order the split fit resolves.
    pub max_split_order: usize,
    /// Stencil spacing of the split fit, in radians.
    pub fit_delta: f64,
    /// Neighbourhood radius for the openness probe.
    pub epsilon: f64,
    /// Sample budget for the probe and the convexity check.
    pub samples: usize,
    /// Seed for every randomized step; fixed seed, fixed output.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid_count: 2048,
            tol: 1e-9,
            max_split_order: 7,
            fit_delta: 1e-2,
            epsilon: 0.05,
            samples: 20_000,
            seed: 7,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_count < 360 {
            return Err(Error::Config(format!(
                "grid_count must be at least 360, got {}",
                self.grid_count
            )));
        }
        if self.max_split_order < 3 {
            return Err(Error::Config(format!(
                "max_split_order must be at least 3, got {}",
                self.max_split_order
            )));
        }
        if !(self.fit_delta > 0.0 && self.fit_delta <= 0.1) {
            return Err(Error::Config(format!(
                "fit_delta must lie in (0, 0.1], got {}",
                self.fit_delta
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 0.5], got {}",
                self.epsilon
            )));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let mut c = RunConfig::default();
        c.grid_count = 100;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.max_split_order = 2;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.fit_delta = 0.2;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
    }
}
