//! Continuum damage model with an evolving compliance.
//!
//! Damage function `phi = ||sigma||_De - (sigf_bar - q) / sqrt(E)` with the
//! quadratic hardening potential `Xi(xi) = K xi^2 / 2`, hence `q = -K xi`.
//! Damage loading adds the rank-one term
//! `dgamma (De sigma)(De sigma)^T / ||sigma||^3` to the compliance, and the
//! hardening variable grows by `dgamma / sqrt(E)`.
//!
//! With `mu = dgamma / ||sigma||` the converged stress satisfies
//! `(D_old + mu De) sigma = eps`, so the backward-Euler update reduces to a
//! scalar equation in `dgamma`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::params::MaterialParams;
use crate::error::{Error, Result};

/// Relative tolerance of the scalar consistency solve.
pub const RETURN_TOL: f64 = 1e-10;
/// Iteration cap of the scalar consistency solve.
pub const RETURN_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StressMode {
    Uniaxial,
    PlaneStress,
}

/// Strain (or stress) in engineering Voigt notation `[xx, yy, 2xy]`, or the
/// single axial component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Voigt {
    Uniaxial(f64),
    PlaneStress(Vector3<f64>),
}

impl Voigt {
    pub fn mode(&self) -> StressMode {
        match self {
            Voigt::Uniaxial(_) => StressMode::Uniaxial,
            Voigt::PlaneStress(_) => StressMode::PlaneStress,
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Voigt::Uniaxial(x) => x.is_finite(),
            Voigt::PlaneStress(v) => v.iter().all(|x| x.is_finite()),
        }
    }
}

/// Damaged compliance in the chosen stress mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Compliance {
    Uniaxial(f64),
    PlaneStress(Matrix3<f64>),
}

/// Elastic plane-stress compliance.
pub fn plane_stress_compliance(e: f64, nu: f64) -> Matrix3<f64> {
    Matrix3::new(
        1.0, -nu, 0.0, //
        -nu, 1.0, 0.0, //
        0.0, 0.0, 2.0 * (1.0 + nu),
    ) / e
}

/// Elastic plane-stress stiffness, the inverse of [`plane_stress_compliance`].
pub fn plane_stress_stiffness(e: f64, nu: f64) -> Matrix3<f64> {
    let f = e / (1.0 - nu * nu);
    Matrix3::new(
        f, f * nu, 0.0, //
        f * nu, f, 0.0, //
        0.0, 0.0, 0.5 * f * (1.0 - nu),
    )
}

/// Internal state of one bulk material point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkState {
    pub compliance: Compliance,
    /// Cached inverse of the compliance.
    stiffness: Compliance,
    /// Hardening variable.
    pub xi: f64,
    /// Accumulated dissipation.
    pub dissipated: f64,
}

impl BulkState {
    pub fn virgin(params: &MaterialParams, mode: StressMode) -> Self {
        let (compliance, stiffness) = match mode {
            StressMode::Uniaxial => (
                Compliance::Uniaxial(1.0 / params.e),
                Compliance::Uniaxial(params.e),
            ),
            StressMode::PlaneStress => (
                Compliance::PlaneStress(plane_stress_compliance(params.e, params.nu)),
                Compliance::PlaneStress(plane_stress_stiffness(params.e, params.nu)),
            ),
        };
        BulkState {
            compliance,
            stiffness,
            xi: 0.0,
            dissipated: 0.0,
        }
    }

    pub fn mode(&self) -> StressMode {
        match self.compliance {
            Compliance::Uniaxial(_) => StressMode::Uniaxial,
            Compliance::PlaneStress(_) => StressMode::PlaneStress,
        }
    }

    /// Stress-like hardening variable `q = -K xi`.
    pub fn q(&self, params: &MaterialParams) -> f64 {
        -params.k_bar * self.xi
    }

    pub fn is_virgin(&self) -> bool {
        self.xi == 0.0
    }

    /// Secant stiffness `D^-1`.
    pub fn stiffness(&self) -> Compliance {
        self.stiffness
    }
}

/// Result of a bulk update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkUpdate {
    pub stress: Voigt,
    /// Algorithmic tangent `d sigma / d eps`.
    pub tangent: Compliance,
    pub state: BulkState,
    /// True when the step produced damage loading.
    pub loading: bool,
}

/// Current damage threshold `||sigma||_De` at hardening variable `xi`.
fn threshold(params: &MaterialParams, xi: f64) -> f64 {
    (params.sigf_bar + params.k_bar * xi) / params.e.sqrt()
}

/// Backward-Euler update of a bulk point driven by the total strain.
pub fn bulk_update(state: &BulkState, strain: Voigt, params: &MaterialParams) -> Result<BulkUpdate> {
    if !strain.is_finite() {
        return Err(Error::Domain("non-finite strain".into()));
    }
    match (state.compliance, state.stiffness, strain) {
        (Compliance::Uniaxial(d), Compliance::Uniaxial(c), Voigt::Uniaxial(eps)) => {
            uniaxial_update(state, d, c, eps, params)
        }
        (Compliance::PlaneStress(d), Compliance::PlaneStress(c), Voigt::PlaneStress(eps)) => {
            plane_stress_update(state, &d, &c, &eps, params)
        }
        _ => Err(Error::Domain(format!(
            "strain mode {:?} does not match state mode {:?}",
            strain.mode(),
            state.mode()
        ))),
    }
}

/// Solves `norm(dgamma) = threshold(dgamma)` for the multiplier increment.
///
/// `residual` returns `(g, dg/d dgamma)` with `g` decreasing in `dgamma` and
/// `g(0) > 0`. Newton steps falling outside the current bracket are replaced by
/// bisection; the upper end of the bracket is found by doubling.
fn solve_multiplier<F>(scale: f64, mut residual: F) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut x = 0.0;
    let mut last = f64::NAN;
    for _ in 0..RETURN_MAX_ITER {
        let (g, dg) = residual(x);
        last = g;
        if !g.is_finite() {
            return Err(Error::Solver { residual: g });
        }
        if g.abs() <= RETURN_TOL * scale {
            return Ok(x);
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if dg < 0.0 { x - g / dg } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * lo.max(scale * 1e-6)
        };
    }
    Err(Error::Solver { residual: last })
}

fn uniaxial_update(
    state: &BulkState,
    d: f64,
    c: f64,
    eps: f64,
    params: &MaterialParams,
) -> Result<BulkUpdate> {
    let sqrt_e = params.e.sqrt();
    let sigma_trial = c * eps;
    let s0 = threshold(params, state.xi);
    if sigma_trial.abs() / sqrt_e <= s0 {
        return Ok(BulkUpdate {
            stress: Voigt::Uniaxial(sigma_trial),
            tangent: Compliance::Uniaxial(c),
            state: *state,
            loading: false,
        });
    }
    let ds = params.k_bar / params.e;
    let de = 1.0 / params.e;
    // ||sigma|| = |eps| / (sqrt(E) (d + mu / E)), mu = dgamma / s.
    let dgamma = solve_multiplier(s0, |dg| {
        let s = s0 + ds * dg;
        let mu = dg / s;
        let a = d + mu * de;
        let norm = eps.abs() / (sqrt_e * a);
        let dmu = (s - dg * ds) / (s * s);
        let dnorm = -norm / a * de * dmu;
        (norm - s, dnorm - ds)
    })?;
    let s = s0 + ds * dgamma;
    let mu = dgamma / s;
    let a = d + mu * de;
    let sigma = eps / a;
    let xi = state.xi + dgamma / sqrt_e;
    let d_new = d + dgamma * de * de * sigma * sigma / s.powi(3);
    if !(d_new > 0.0) {
        return Err(Error::State(format!("non-positive compliance {d_new}")));
    }
    // Tangent compliance a + c_n n^2 with n = 1/sqrt(E).
    let dmu = (s - dgamma * ds) / (s * s);
    let tangent = 1.0 / (a + dmu * s / ds / params.e);
    let mut next = BulkState {
        compliance: Compliance::Uniaxial(d_new),
        stiffness: Compliance::Uniaxial(1.0 / d_new),
        xi,
        dissipated: state.dissipated,
    };
    next.dissipated += bulk_dissipation_increment(state, &next, params);
    Ok(BulkUpdate {
        stress: Voigt::Uniaxial(sigma),
        tangent: Compliance::Uniaxial(tangent),
        state: next,
        loading: true,
    })
}

fn plane_stress_update(
    state: &BulkState,
    d: &Matrix3<f64>,
    c: &Matrix3<f64>,
    eps: &Vector3<f64>,
    params: &MaterialParams,
) -> Result<BulkUpdate> {
    let sqrt_e = params.e.sqrt();
    let de = plane_stress_compliance(params.e, params.nu);
    let sigma_trial = c * eps;
    let s0 = threshold(params, state.xi);
    let norm_trial = sigma_trial.dot(&(de * sigma_trial)).max(0.0).sqrt();
    if norm_trial <= s0 {
        return Ok(BulkUpdate {
            stress: Voigt::PlaneStress(sigma_trial),
            tangent: Compliance::PlaneStress(*c),
            state: *state,
            loading: false,
        });
    }
    let ds = params.k_bar / params.e;
    let stress_at = |mu: f64| -> Result<(Matrix3<f64>, Vector3<f64>)> {
        let a_inv = (d + de * mu)
            .try_inverse()
            .ok_or_else(|| Error::State("singular compliance in return mapping".into()))?;
        let sigma = a_inv * eps;
        Ok((a_inv, sigma))
    };
    let mut failure = None;
    let dgamma = solve_multiplier(s0, |dg| {
        let s = s0 + ds * dg;
        let mu = dg / s;
        match stress_at(mu) {
            Ok((a_inv, sigma)) => {
                let de_sigma = de * sigma;
                let norm = sigma.dot(&de_sigma).max(0.0).sqrt();
                // d sigma / d mu = -A^-1 De sigma.
                let dsigma = -(a_inv * de_sigma);
                let dnorm_dmu = de_sigma.dot(&dsigma) / norm;
                let dmu = (s - dg * ds) / (s * s);
                (norm - s, dnorm_dmu * dmu - ds)
            }
            Err(e) => {
                failure = Some(e);
                (f64::NAN, f64::NAN)
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let dgamma = dgamma?;
    let s = s0 + ds * dgamma;
    let mu = dgamma / s;
    let (_, sigma) = stress_at(mu)?;
    let a = d + de * mu;
    let de_sigma = de * sigma;
    let d_new = d + de_sigma * de_sigma.transpose() * (dgamma / s.powi(3));
    let d_new = 0.5 * (d_new + d_new.transpose());
    if d_new.cholesky().is_none() {
        return Err(Error::State("damaged compliance lost positive definiteness".into()));
    }
    let c_new = d_new
        .try_inverse()
        .ok_or_else(|| Error::State("singular damaged compliance".into()))?;
    let c_new = 0.5 * (c_new + c_new.transpose());
    let n = de_sigma / s;
    let dmu = (s - dgamma * ds) / (s * s);
    let tangent_compliance = a + n * n.transpose() * (dmu * s / ds);
    let tangent = tangent_compliance
        .try_inverse()
        .ok_or_else(|| Error::State("singular algorithmic tangent".into()))?;
    let tangent = 0.5 * (tangent + tangent.transpose());
    let mut next = BulkState {
        compliance: Compliance::PlaneStress(d_new),
        stiffness: Compliance::PlaneStress(c_new),
        xi: state.xi + dgamma / sqrt_e,
        dissipated: state.dissipated,
    };
    next.dissipated += bulk_dissipation_increment(state, &next, params);
    Ok(BulkUpdate {
        stress: Voigt::PlaneStress(sigma),
        tangent: Compliance::PlaneStress(tangent),
        state: next,
        loading: true,
    })
}

/// `0.5 * dxi * (sigf_bar - K xi)` evaluated at the converged state.
pub fn bulk_dissipation_increment(before: &BulkState, after: &BulkState, params: &MaterialParams) -> f64 {
    let dxi = after.xi - before.xi;
    if dxi == 0.0 {
        return 0.0;
    }
    0.5 * dxi * (params.sigf_bar - params.k_bar * after.xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const P: MaterialParams = MaterialParams::REFERENCE;

    fn stress1(u: &BulkUpdate) -> f64 {
        match u.stress {
            Voigt::Uniaxial(s) => s,
            _ => unreachable!(),
        }
    }

    #[test]
    fn elastic_range_leaves_state_untouched() {
        let st = BulkState::virgin(&P, StressMode::Uniaxial);
        let eps = P.sigf_bar / (2.0 * P.e);
        let up = bulk_update(&st, Voigt::Uniaxial(eps), &P).unwrap();
        assert_eq!(stress1(&up), P.e * eps);
        assert_eq!(up.state, st);
        assert!(!up.loading);
    }

    #[test]
    fn hardening_tangent_at_onset() {
        // Fine-increment integration from just below the onset strain.
        let mut st = BulkState::virgin(&P, StressMode::Uniaxial);
        let eps0 = P.sigf_bar / P.e;
        let de = 1e-7;
        let mut eps = eps0;
        let mut sig = Vec::new();
        for _ in 0..20 {
            eps += de;
            let up = bulk_update(&st, Voigt::Uniaxial(eps), &P).unwrap();
            sig.push(stress1(&up));
            st = up.state;
        }
        let tangent = (sig[19] - sig[9]) / (10.0 * de);
        let expected = P.e * P.k_bar / (P.e + P.k_bar);
        assert_relative_eq!(tangent, expected, max_relative = 1e-3);
        assert_relative_eq!(expected, 974.358_974, max_relative = 1e-6);
    }

    #[test]
    fn unloading_is_secant() {
        let mut st = BulkState::virgin(&P, StressMode::Uniaxial);
        for i in 1..=50 {
            st = bulk_update(&st, Voigt::Uniaxial(i as f64 * 2e-6), &P).unwrap().state;
        }
        assert!(st.xi > 0.0);
        let up = bulk_update(&st, Voigt::Uniaxial(0.0), &P).unwrap();
        assert_eq!(stress1(&up), 0.0);
        assert_eq!(up.state, st);
    }

    #[test]
    fn converged_state_is_consistent() {
        let mut st = BulkState::virgin(&P, StressMode::PlaneStress);
        let de = plane_stress_compliance(P.e, P.nu);
        let dir = Vector3::new(1.0, -0.3, 0.4);
        for i in 1..=30 {
            let eps = dir * (i as f64 * 1e-5);
            let up = bulk_update(&st, Voigt::PlaneStress(eps), &P).unwrap();
            let Voigt::PlaneStress(sigma) = up.stress else { unreachable!() };
            if up.loading {
                let norm = sigma.dot(&(de * sigma)).sqrt();
                let phi = norm - threshold(&P, up.state.xi);
                assert!(phi.abs() <= 1e-9 * norm, "phi = {phi}");
                // sigma = D^-1 eps with the updated compliance.
                let Compliance::PlaneStress(d) = up.state.compliance else { unreachable!() };
                assert_relative_eq!(d * sigma, eps, max_relative = 1e-9, epsilon = 1e-15);
            }
            st = up.state;
        }
        assert!(st.xi > 0.0);
    }

    #[test]
    fn plane_stress_tangent_matches_finite_differences() {
        let mut st = BulkState::virgin(&P, StressMode::PlaneStress);
        let dir = Vector3::new(1.0, 0.2, -0.5);
        for i in 1..=8 {
            st = bulk_update(&st, Voigt::PlaneStress(dir * (i as f64 * 1e-5)), &P).unwrap().state;
        }
        let eps = dir * 9e-5;
        let up = bulk_update(&st, Voigt::PlaneStress(eps), &P).unwrap();
        assert!(up.loading);
        let Compliance::PlaneStress(tangent) = up.tangent else { unreachable!() };
        let h = 1e-10;
        for j in 0..3 {
            let mut ep = eps;
            ep[j] += h;
            let mut em = eps;
            em[j] -= h;
            let Voigt::PlaneStress(sp) = bulk_update(&st, Voigt::PlaneStress(ep), &P).unwrap().stress else {
                unreachable!()
            };
            let Voigt::PlaneStress(sm) = bulk_update(&st, Voigt::PlaneStress(em), &P).unwrap().stress else {
                unreachable!()
            };
            let fd = (sp - sm) / (2.0 * h);
            for i in 0..3 {
                assert_relative_eq!(tangent[(i, j)], fd[i], max_relative = 1e-4, epsilon = 1e-2);
            }
        }
    }

    #[test]
    fn mismatched_mode_is_rejected() {
        let st = BulkState::virgin(&P, StressMode::Uniaxial);
        assert!(bulk_update(&st, Voigt::PlaneStress(Vector3::zeros()), &P).is_err());
        assert!(bulk_update(&st, Voigt::Uniaxial(f64::NAN), &P).is_err());
    }
}
