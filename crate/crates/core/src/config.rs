//! Run-wide settings shared by the analysis and verification entry points.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rank_one::DEFAULT_GRID_N;

/// Settings for a run. A fixed seed makes every output reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Resolution per axis of the brute-force angle grids.
    pub grid_n: usize,
    /// Relative symmetry tolerance for eigenvalue inputs.
    pub sym_tol: f64,
    /// Bound on `σ_min/σ_max` below which a matrix counts as singular.
    pub sing_tol: f64,
    /// Tolerance on finite-difference checks of the quadratic coefficient.
    pub fd_tol: f64,
    /// Seed for every random sample.
    pub seed: u64,
    /// Number of random directions in the conjecture probe.
    pub probe_trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_n: DEFAULT_GRID_N,
            sym_tol: 1e-12,
            sing_tol: 1e-12,
            fd_tol: 1e-5,
            seed: 0x5eed,
            probe_trials: 10_000,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sym_tol", self.sym_tol),
            ("sing_tol", self.sing_tol),
            ("fd_tol", self.fd_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("tolerance {name} must be positive (got {v})")));
            }
        }
        if self.grid_n < 64 {
            return Err(domain(format!("grid_n must be at least 64 (got {})", self.grid_n)));
        }
        if self.probe_trials < 1000 {
            return Err(domain(format!(
                "probe_trials must be at least 1000 (got {})",
                self.probe_trials
            )));
        }
        Ok(())
    }

    /// Tolerance on the grid minimum of the reduced form, scaled with the
    /// square of the grid spacing from `2e-4` at 512 points per axis.
    pub fn grid_tolerance(&self) -> f64 {
        2e-4 * (DEFAULT_GRID_N as f64 / self.grid_n as f64).powi(2).max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        RunConfig::default().validate().unwrap();
        assert_eq!(RunConfig::default().grid_tolerance(), 2e-4);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = RunConfig {
            fd_tol: -1.0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let coarse = RunConfig {
            grid_n: 32,
            ..RunConfig::default()
        };
        assert!(coarse.validate().is_err());
        let small = RunConfig {
            grid_n: 64,
            ..RunConfig::default()
        };
        assert!((small.grid_tolerance() - 2e-4 * 64.0).abs() < 1e-15);
    }
}
