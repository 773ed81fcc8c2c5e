//! Target data generated by a reference simulation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{detect_crack_onset, detect_limit_displacement, interpolate_at, secant_slope, FeatureSettings};
use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::simulators::{BeamGeometry, BeamModel, Ligament, ResponseCurve, SimulationControl};

/// Steps simulated beyond the softening probe.
const MARGIN_STEPS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    pub params: MaterialParams,
    pub geometry: BeamGeometry,
    /// Step and solver settings shared by every stage simulation.
    pub control: SimulationControl,
    pub settings: FeatureSettings,
    pub curve: ResponseCurve,
    /// The same specimen with a rigid ligament.
    pub baseline: ResponseCurve,
    pub u_f: f64,
    pub secant: f64,
    pub u_ff: f64,
    pub load_elastic: f64,
    pub delta_l_elastic: f64,
    pub load_softening: f64,
}

/// Scalars derived from a reference curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScalars {
    pub u_f: f64,
    pub secant: f64,
    pub u_ff: f64,
    pub load_elastic: f64,
    pub delta_l_elastic: f64,
    pub load_softening: f64,
}

impl ReferenceData {
    /// Simulates the reference specimen and extracts its features.
    pub fn generate(
        params: &MaterialParams,
        geometry: &BeamGeometry,
        control: &SimulationControl,
        settings: &FeatureSettings,
    ) -> Result<Self> {
        settings.validate()?;
        let u_max = settings.softening_probe + MARGIN_STEPS * control.du;
        let control = SimulationControl { u_max, ..*control };
        let curve = BeamModel::new(params, geometry, Ligament::Cohesive)?.run(&control)?.curve;
        let baseline = BeamModel::new(params, geometry, Ligament::Rigid)?.run(&control)?.curve;
        let scalars = derive(&curve, &baseline, settings)?;
        Ok(ReferenceData {
            params: *params,
            geometry: *geometry,
            control,
            settings: *settings,
            curve,
            baseline,
            u_f: scalars.u_f,
            secant: scalars.secant,
            u_ff: scalars.u_ff,
            load_elastic: scalars.load_elastic,
            delta_l_elastic: scalars.delta_l_elastic,
            load_softening: scalars.load_softening,
        })
    }

    pub fn scalars(&self) -> DerivedScalars {
        DerivedScalars {
            u_f: self.u_f,
            secant: self.secant,
            u_ff: self.u_ff,
            load_elastic: self.load_elastic,
            delta_l_elastic: self.delta_l_elastic,
            load_softening: self.load_softening,
        }
    }

    /// Recomputes the scalars from the stored curves.
    pub fn rederive(&self) -> Result<DerivedScalars> {
        derive(&self.curve, &self.baseline, &self.settings)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: ReferenceData = serde_json::from_str(text)?;
        data.curve.validate()?;
        data.baseline.validate()?;
        Ok(data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn derive(curve: &ResponseCurve, baseline: &ResponseCurve, s: &FeatureSettings) -> Result<DerivedScalars> {
    let u_f = detect_limit_displacement(curve, s.stiffness_deviation)
        .ok_or_else(|| Error::Reference("no end of the linear part".into()))?;
    let secant = secant_slope(curve, u_f, s.secant_near, s.secant_far)?;
    let u_ff = detect_crack_onset(curve, Some(baseline), s.crack_threshold)
        .ok_or_else(|| Error::Reference("no crack onset".into()))?;
    if u_ff > s.softening_probe {
        return Err(Error::Reference(format!(
            "crack onset at {u_ff} mm lies beyond the softening probe"
        )));
    }
    let elastic = interpolate_at(curve, s.elastic_probe)?;
    let softening = interpolate_at(curve, s.softening_probe)?;
    Ok(DerivedScalars {
        u_f,
        secant,
        u_ff,
        load_elastic: elastic.load,
        delta_l_elastic: elastic.delta_l,
        load_softening: softening.load,
    })
}
