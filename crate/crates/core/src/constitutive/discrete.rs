//! Traction-jump damage model of the displacement discontinuity.
//!
//! Before activation the interface is rigid; numerically it is a stiff
//! penalty spring `t = k [[u]]`. The two damage surfaces
//! `phi1 = t.n - (sigf - q)` and `phi2 = |t.m| - (sigs - (sigs/sigf) q)` share
//! the softening variable `xi`, which grows by `dgamma1 + (sigs/sigf) dgamma2`.
//! Damage loading opens the cohesive part of the jump by `dgamma` along the
//! active direction; unloading follows the secant `Q` back to the origin.
//! Pure mode-I loading therefore traces the envelope
//! `t_n = sigf exp(-beta [[u]]_n / sigf)`.

use serde::{Deserialize, Serialize};

use super::params::{MaterialParams, SHEAR_TO_NORMAL_LIMIT};
use crate::error::{Error, Result};

/// Normal jumps below `-CONTACT_TOL` are interpenetration.
pub const CONTACT_TOL: f64 = 1e-9;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// Softening law `q = sigf [1 - exp(-beta xi / sigf)]`.
pub fn evaluate_softening(xi_bbar: f64, params: &MaterialParams) -> Result<f64> {
    if !(xi_bbar >= 0.0) {
        return Err(Error::Domain(format!("negative softening variable {xi_bbar}")));
    }
    Ok(softening(xi_bbar, params))
}

fn softening(xi: f64, p: &MaterialParams) -> f64 {
    -p.sigf_bbar * (-p.beta_bbar / p.sigf_bbar * xi).exp_m1()
}

/// Remaining normal strength `sigf - q(xi)`.
fn strength(xi: f64, p: &MaterialParams) -> f64 {
    p.sigf_bbar * (-p.beta_bbar / p.sigf_bbar * xi).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscreteState {
    /// Cohesive compliance, normal and tangential (mm/MPa).
    pub q_n: f64,
    pub q_m: f64,
    /// Softening variable (mm).
    pub xi: f64,
    /// Stress-like softening variable (MPa).
    pub q: f64,
    pub active: bool,
    /// Accumulated surface dissipation (mJ/mm^2).
    pub dissipated: f64,
}

impl DiscreteState {
    /// Largest cohesive openings reached so far, `(normal, |tangential|)`.
    pub fn openings(&self, p: &MaterialParams) -> (f64, f64) {
        let s = strength(self.xi, p);
        (self.q_n * s, self.q_m * SHEAR_TO_NORMAL_LIMIT * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteUpdate {
    /// `(t_n, t_m)` in MPa.
    pub traction: [f64; 2],
    /// `d t / d [[u]]`, row-major.
    pub tangent: [[f64; 2]; 2],
    pub state: DiscreteState,
    pub loading: bool,
}

/// Updates the interface for the total jump `(normal, tangential)`.
///
/// `stiffness` is the penalty regularizing the rigid pre-activation phase
/// (MPa/mm). The caller is responsible for compressive contact; normal jumps
/// below `-CONTACT_TOL` are rejected.
pub fn discrete_update(
    state: &DiscreteState,
    jump: [f64; 2],
    params: &MaterialParams,
    stiffness: f64,
) -> Result<DiscreteUpdate> {
    if !(jump[0].is_finite() && jump[1].is_finite()) {
        return Err(Error::Domain("non-finite jump".into()));
    }
    if jump[0] < -CONTACT_TOL {
        return Err(Error::Contact { jump: jump[0] });
    }
    let u = [jump[0].max(0.0), jump[1]];
    let r = SHEAR_TO_NORMAL_LIMIT;
    let weight = [1.0, r];
    let k_inv = 1.0 / stiffness;

    let s0 = strength(state.xi, params);
    let limit0 = [s0, r * s0];
    let (kn, km) = state.openings(params);
    let kappa0 = [kn, km];

    let secant = |kappa: [f64; 2], s: f64| -> [f64; 2] {
        let lim = [s, r * s];
        [
            1.0 / (k_inv + kappa[0] / lim[0]),
            1.0 / (k_inv + kappa[1] / lim[1]),
        ]
    };

    let stiff0 = secant(kappa0, s0);
    let trial = [stiff0[0] * u[0], stiff0[1] * u[1]];
    let elastic = DiscreteUpdate {
        traction: trial,
        tangent: [[stiff0[0], 0.0], [0.0, stiff0[1]]],
        state: *state,
        loading: false,
    };
    let mut active = [trial[0] > limit0[0], trial[1].abs() > limit0[1]];
    if !active[0] && !active[1] {
        return Ok(elastic);
    }

    let mag = [u[0], u[1].abs()];
    let sign = [1.0, if u[1] < 0.0 { -1.0 } else { 1.0 }];
    let decay = params.beta_bbar / params.sigf_bbar;

    // Active set iterations: at most one change per surface.
    for _ in 0..4 {
        // g(xi) = xi - xi0 - sum_i w_i (|u_i| - lim_i(xi)/k - kappa0_i), increasing in xi.
        let g = |xi: f64| -> (f64, f64) {
            let s = strength(xi, params);
            let lim = [s, r * s];
            let mut val = xi - state.xi;
            let mut der = 1.0;
            for i in 0..2 {
                if active[i] {
                    val -= weight[i] * (mag[i] - lim[i] * k_inv - kappa0[i]);
                    der -= weight[i] * decay * lim[i] * k_inv;
                }
            }
            (val, der)
        };
        let mut xi = state.xi;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (val, der) = g(xi);
            if val.abs() <= NEWTON_TOL * (1.0 + xi.abs()) {
                converged = true;
                break;
            }
            xi = (xi - val / der).max(state.xi);
        }
        if !converged {
            return Err(Error::Solver { residual: g(xi).0 });
        }
        let s = strength(xi, params);
        let lim = [s, r * s];
        let mut dgamma = [0.0; 2];
        let mut kappa = kappa0;
        for i in 0..2 {
            if active[i] {
                dgamma[i] = mag[i] - lim[i] * k_inv - kappa0[i];
                kappa[i] = kappa0[i] + dgamma[i];
            }
        }
        if let Some(i) = (0..2).find(|&i| active[i] && dgamma[i] < 0.0) {
            active[i] = false;
            if !active[0] && !active[1] {
                // The trial only grazed the surface.
                return Ok(elastic);
            }
            continue;
        }
        let stiff = secant(kappa, s);
        let mut t = [0.0; 2];
        for i in 0..2 {
            t[i] = if active[i] { sign[i] * lim[i] } else { stiff[i] * u[i] };
        }
        if let Some(i) = (0..2).find(|&i| !active[i] && t[i].abs() > lim[i] * (1.0 + 1e-12)) {
            active[i] = true;
            continue;
        }

        // Tangent. dxi/du_j = w_j sign_j / g'(xi) for active j.
        let (_, gp) = g(xi);
        let ds = [-decay * lim[0], -decay * lim[1]];
        let mut dxi_du = [0.0; 2];
        for j in 0..2 {
            if active[j] {
                dxi_du[j] = weight[j] * sign[j] / gp;
            }
        }
        let mut tangent = [[0.0; 2]; 2];
        for i in 0..2 {
            if active[i] {
                for j in 0..2 {
                    tangent[i][j] = sign[i] * ds[i] * dxi_du[j];
                }
            } else {
                // t_i = u_i / (1/k + kappa_i / lim_i(xi)).
                let denom = k_inv + kappa[i] / lim[i];
                let dt_dxi = u[i] * kappa[i] * ds[i] / (lim[i] * lim[i] * denom * denom);
                for j in 0..2 {
                    tangent[i][j] = dt_dxi * dxi_du[j];
                }
                tangent[i][i] += 1.0 / denom;
            }
        }

        let mut next = DiscreteState {
            q_n: kappa[0] / lim[0],
            q_m: kappa[1] / lim[1],
            xi,
            q: params.sigf_bbar - s,
            active: true,
            dissipated: state.dissipated,
        };
        next.dissipated += discrete_dissipation_increment(state, &next, params);
        return Ok(DiscreteUpdate {
            traction: t,
            tangent,
            state: next,
            loading: true,
        });
    }
    Err(Error::State("active-set iteration of the interface did not settle".into()))
}

/// Surface dissipation of one step of the secant cohesive model,
/// `0.5 (s0 kappa1 - s1 kappa0)` summed over both directions, where `s` is the
/// strength and `kappa` the largest cohesive opening. Non-negative because
/// strength never grows and openings never shrink.
pub fn discrete_dissipation_increment(
    before: &DiscreteState,
    after: &DiscreteState,
    params: &MaterialParams,
) -> f64 {
    let r = SHEAR_TO_NORMAL_LIMIT;
    let s0 = strength(before.xi, params);
    let s1 = strength(after.xi, params);
    let (n0, m0) = before.openings(params);
    let (n1, m1) = after.openings(params);
    0.5 * (s0 * n1 - s1 * n0) + 0.5 * r * (s0 * m1 - s1 * m0)
}
