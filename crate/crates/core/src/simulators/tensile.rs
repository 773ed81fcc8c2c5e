//! Uniaxial bar in series with one cohesive section.

use serde::{Deserialize, Serialize};

use super::beam::PENALTY_PER_E;
use super::control::SimulationControl;
use super::curve::{CurvePoint, ResponseCurve};
use crate::constitutive::{bulk_update, discrete_update, BulkState, Compliance, DiscreteState, MaterialParams, StressMode, Voigt};
use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarGeometry {
    /// Gauge length (mm).
    pub length: f64,
    /// Cross-section (mm^2).
    pub area: f64,
    /// Width used for the lateral contraction record (mm).
    pub width: f64,
}

impl Default for BarGeometry {
    fn default() -> Self {
        BarGeometry {
            length: 200.0,
            area: 1e4,
            width: 100.0,
        }
    }
}

impl BarGeometry {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.length, self.area, self.width].iter().all(|x| x.is_finite() && *x > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Mesh(format!("invalid bar geometry {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct BarState {
    bulk: BulkState,
    section: DiscreteState,
}

struct Trial {
    stress: f64,
    bulk: BulkState,
    section: DiscreteState,
    /// d(bulk stress - traction)/d(jump)
    slope: f64,
    residual: f64,
}

fn trial(s: &BarState, u: f64, w: f64, geom: &BarGeometry, p: &MaterialParams, k: f64) -> Result<Trial> {
    let eps = (u - w) / geom.length;
    let b = bulk_update(&s.bulk, Voigt::Uniaxial(eps), p)?;
    let (Voigt::Uniaxial(sig), Compliance::Uniaxial(et)) = (b.stress, b.tangent) else {
        unreachable!("uniaxial state");
    };
    let d = discrete_update(&s.section, [w, 0.0], p, k)?;
    Ok(Trial {
        stress: sig,
        bulk: b.state,
        section: d.state,
        slope: -et / geom.length - d.tangent[0][0],
        residual: sig - d.traction[0],
    })
}

/// Solves `sigma_bulk((u - w)/L) = t(w)` for the jump `w` in `[0, u]`.
fn solve(s: &BarState, u: f64, geom: &BarGeometry, p: &MaterialParams, control: &SimulationControl) -> Result<Trial> {
    let k = PENALTY_PER_E * p.e;
    if !s.section.active {
        // Rigid section until the bar stress reaches the limit traction.
        let b = bulk_update(&s.bulk, Voigt::Uniaxial(u / geom.length), p)?;
        let Voigt::Uniaxial(sig) = b.stress else { unreachable!() };
        if sig <= p.sigf_bbar {
            return Ok(Trial {
                stress: sig,
                bulk: b.state,
                section: s.section,
                slope: f64::NEG_INFINITY,
                residual: 0.0,
            });
        }
    }
    let (mut lo, mut hi) = (0.0, u.max(0.0));
    let mut w = s.section.openings(p).0.clamp(lo, hi);
    for _ in 0..MAX_ITER {
        let t = trial(s, u, w, geom, p, k)?;
        if t.residual.abs() * geom.area <= control.newton_tol * (t.stress.abs() * geom.area + 1.0) {
            return Ok(t);
        }
        // Residual decreases in w on the bracket ends.
        if t.residual > 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let newton = w - t.residual / t.slope;
        w = if t.slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * u.abs().max(1e-300) {
            return trial(s, u, w, geom, p, k);
        }
    }
    Err(Error::Simulation {
        last_u: u,
        reason: "bar equilibrium did not converge".into(),
    })
}

/// Elongation-controlled tensile test. `delta_l` holds the lateral
/// contraction and `crack_open` the cohesive jump.
pub fn run_tensile(params: &MaterialParams, geom: &BarGeometry, control: &SimulationControl) -> Result<ResponseCurve> {
    params.validate()?;
    geom.validate()?;
    control.validate()?;
    let mut state = BarState {
        bulk: BulkState::virgin(params, StressMode::Uniaxial),
        section: DiscreteState::default(),
    };
    let mut curve = ResponseCurve::new();
    let mut last = 0.0;
    for u in control.targets() {
        let t = solve(&state, u, geom, params, control).map_err(|e| match e {
            Error::Simulation { reason, .. } => Error::Simulation { last_u: last, reason },
            other => other,
        })?;
        state = BarState {
            bulk: t.bulk,
            section: t.section,
        };
        let w = state.section.openings(params).0.max(0.0);
        let w = if state.section.active { w } else { 0.0 };
        curve.push(CurvePoint {
            u,
            load: t.stress * geom.area,
            delta_l: -params.nu * t.stress / params.e * geom.width,
            crack_open: w,
        });
        last = u;
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_run(u_max: f64, du: f64) -> ResponseCurve {
        let c = SimulationControl {
            u_max,
            du,
            ..SimulationControl::default()
        };
        run_tensile(&MaterialParams::REFERENCE, &BarGeometry::default(), &c).unwrap()
    }

    #[test]
    fn initial_slope() {
        let c = reference_run(0.001, 0.001);
        let p = c.points[1];
        // E A / L0 = 38000 * 1e4 / 200
        assert_relative_eq!(p.load, 1900.0, max_relative = 1e-9);
        assert_relative_eq!(p.delta_l, -0.1 * 0.19 / 38000.0 * 100.0, max_relative = 1e-9);
    }

    #[test]
    fn peak_is_limit_traction() {
        let c = reference_run(0.2, 0.0005);
        let peak = c.peak_load() / 1e4;
        assert!((peak - 2.35).abs() < 2.35 * 0.01, "peak {peak}");
        assert!(peak <= 2.35 * (1.0 + 1e-6));
    }

    #[test]
    fn softening_tail() {
        let p = MaterialParams::REFERENCE;
        let c = reference_run(1.0, 0.005);
        let peak = c.peak_load();
        let target = 5.0 * p.sigf_bbar / p.beta_bbar;
        let after = c.points.iter().find(|q| q.crack_open >= target).expect("tail reached");
        assert!(after.load < 0.01 * peak);
        // Monotone decrease after the peak.
        let i = c.points.iter().position(|q| q.load == peak).unwrap();
        for w in c.points[i..].windows(2) {
            assert!(w[1].load <= w[0].load + 1e-9);
        }
    }

    #[test]
    fn elongation_splits_into_bulk_and_jump() {
        let p = MaterialParams::REFERENCE;
        let c = reference_run(0.3, 0.005);
        let last = c.points.last().unwrap();
        assert!(last.crack_open > 0.0);
        // The bulk carries the rest of the elongation.
        assert!(last.crack_open < last.u);
        assert!(last.load / 1e4 < p.sigf_bbar);
    }
}
