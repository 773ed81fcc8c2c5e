//! Features extracted from response curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulators::{CurvePoint, ResponseCurve};

/// Thresholds and probe points of the feature detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSettings {
    /// Relative drop of the secant stiffness marking the end of the linear part.
    pub stiffness_deviation: f64,
    /// Crack-opening signal marking crack onset (mm).
    pub crack_threshold: f64,
    /// Deflection probed by the elastic objective (mm).
    pub elastic_probe: f64,
    /// Deflection probed by the softening objective (mm).
    pub softening_probe: f64,
    /// Offsets after the limit displacement used by the secant (mm).
    pub secant_near: f64,
    pub secant_far: f64,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            stiffness_deviation: 0.01,
            crack_threshold: 1e-4,
            elastic_probe: 0.01,
            softening_probe: 0.15,
            secant_near: 0.005,
            secant_far: 0.01,
        }
    }
}

impl FeatureSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.stiffness_deviation > 0.0
            && self.stiffness_deviation < 1.0
            && self.crack_threshold > 0.0
            && self.elastic_probe > 0.0
            && self.softening_probe > 0.0
            && self.secant_near > 0.0
            && self.secant_far > self.secant_near;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid feature settings {self:?}")))
        }
    }
}

/// Piecewise-linear interpolation of every recorded channel at deflection `u`.
pub fn interpolate_at(curve: &ResponseCurve, u: f64) -> Result<CurvePoint> {
    let pts = &curve.points;
    let last = curve.last_u();
    if !(u >= 0.0) || u > last || pts.is_empty() {
        return Err(Error::Range { u, max: last });
    }
    // First index with pts[i].u >= u.
    let i = pts.partition_point(|p| p.u < u);
    if pts[i].u == u || i == 0 {
        return Ok(pts[i]);
    }
    let (a, b) = (pts[i - 1], pts[i]);
    let t = (u - a.u) / (b.u - a.u);
    let lerp = |x: f64, y: f64| x + t * (y - x);
    Ok(CurvePoint {
        u,
        load: lerp(a.load, b.load),
        delta_l: lerp(a.delta_l, b.delta_l),
        crack_open: lerp(a.crack_open, b.crack_open),
    })
}

/// Deflection where a non-negative signal first exceeds `threshold`, with
/// linear interpolation between the bracketing records.
fn first_crossing(u: impl Iterator<Item = (f64, f64)>, threshold: f64) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for (x, s) in u {
        if s > threshold {
            return Some(match prev {
                Some((x0, s0)) if s0 <= threshold => x0 + (threshold - s0) / (s - s0) * (x - x0),
                _ => x,
            });
        }
        prev = Some((x, s));
    }
    None
}

/// End of the linear part: where the secant stiffness `L/u` has dropped by
/// `deviation` relative to the initial stiffness fitted on the first three
/// records. `None` if the curve stays linear or is too short.
pub fn detect_limit_displacement(curve: &ResponseCurve, deviation: f64) -> Option<f64> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return None;
    }
    // Least-squares slope through the origin.
    let (num, den) = pts[..3]
        .iter()
        .fold((0.0, 0.0), |(n, d), p| (n + p.u * p.load, d + p.u * p.u));
    if !(den > 0.0) {
        return None;
    }
    let k0 = num / den;
    let signal = pts[1..].iter().map(|p| (p.u, 1.0 - p.load / (p.u * k0)));
    first_crossing(std::iter::once((0.0, 0.0)).chain(signal), deviation)
}

/// Secant slope of the load between `u_f + near` and `u_f + far`.
pub fn secant_slope(curve: &ResponseCurve, u_f: f64, near: f64, far: f64) -> Result<f64> {
    let a = interpolate_at(curve, u_f + near)?;
    let b = interpolate_at(curve, u_f + far)?;
    Ok((b.load - a.load) / (far - near))
}

/// Crack onset: where the crack opening exceeds `threshold`.
///
/// With a `baseline` (the same specimen without a crack) the signal is the
/// difference of the two openings, which removes the elastic opening of the
/// notch faces; both curves must share their abscissae.
pub fn detect_crack_onset(curve: &ResponseCurve, baseline: Option<&ResponseCurve>, threshold: f64) -> Option<f64> {
    match baseline {
        None => first_crossing(curve.points.iter().map(|p| (p.u, p.crack_open)), threshold),
        Some(b) => first_crossing(
            curve
                .points
                .iter()
                .zip(&b.points)
                .map(|(p, q)| {
                    debug_assert_eq!(p.u, q.u);
                    (p.u, p.crack_open - q.crack_open)
                }),
            threshold,
        ),
    }
}
