use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pseudo-time stepping of a displacement-controlled run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationControl {
    /// Final prescribed displacement (mm).
    pub u_max: f64,
    /// Displacement increment (mm).
    pub du: f64,
    /// Relative residual tolerance of the equilibrium iterations.
    pub newton_tol: f64,
    pub newton_max: usize,
}

impl Default for SimulationControl {
    fn default() -> Self {
        SimulationControl {
            u_max: 0.2,
            du: 0.0025,
            newton_tol: 1e-8,
            newton_max: 25,
        }
    }
}

/// Maximum number of step halvings before a run is abandoned.
pub const MAX_HALVINGS: u32 = 6;

impl SimulationControl {
    pub fn with_u_max(self, u_max: f64) -> Self {
        SimulationControl { u_max, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.du > 0.0 && self.du <= self.u_max && self.u_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < du <= u_max, got du = {}, u_max = {}",
                self.du, self.u_max
            )));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol <= 1e-3) {
            return Err(Error::Config(format!("newton_tol {} outside (0, 1e-3]", self.newton_tol)));
        }
        if self.newton_max == 0 {
            return Err(Error::Config("newton_max must be positive".into()));
        }
        Ok(())
    }

    /// Recorded load levels: multiples of `du` up to `u_max`, plus `u_max`
    /// itself when it is not such a multiple. Runs with different `u_max`
    /// share their common prefix exactly.
    pub fn targets(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 1u64;
        loop {
            let u = k as f64 * self.du;
            if u > self.u_max * (1.0 + 1e-12) {
                break;
            }
            out.push(u);
            k += 1;
        }
        if out.last().map_or(true, |&u| u < self.u_max * (1.0 - 1e-12)) {
            out.push(self.u_max);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_share_prefixes() {
        let a = SimulationControl::default().with_u_max(0.01).targets();
        let b = SimulationControl::default().with_u_max(0.15).targets();
        assert_eq!(a.len(), 4);
        assert_eq!(&b[..4], &a[..]);
        assert_eq!(b.len(), 60);
        let c = SimulationControl::default().with_u_max(0.011).targets();
        assert_eq!(c.len(), 5);
        assert_eq!(*c.last().unwrap(), 0.011);
    }

    #[test]
    fn invalid_controls_are_rejected() {
        let mut c = SimulationControl::default();
        c.newton_tol = 1e-2;
        assert!(c.validate().is_err());
        let c = SimulationControl {
            du: 1.0,
            u_max: 0.5,
            ..SimulationControl::default()
        };
        assert!(c.validate().is_err());
    }
}
