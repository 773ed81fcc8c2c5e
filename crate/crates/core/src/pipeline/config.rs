//! Flat key-value run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constitutive::{Interval, MaterialParams, ParamBounds};
use crate::error::{Error, Result};
use crate::objectives::{FeatureSettings, Stage};
use crate::optimizer::{GradeConfig, SurrogateConfig, EVAL_CAP};
use crate::simulators::{BeamGeometry, InterfaceRule, SimulationControl};

/// Every tunable of a run. Unset keys take the defaults below.
///
/// | key | default |
/// |---|---|
/// | `e`, `nu`, `sigf_bar`, `k_bar`, `sigf_bbar`, `beta_bbar` | 38000, 0.1, 2.2, 1000, 2.35, 23.5 |
/// | `span`, `height`, `thickness` | 400, 100, 100 mm |
/// | `notch_depth`, `notch_width` | 20, 4 mm |
/// | `nx`, `ny` | 48, 12 |
/// | `load_plate`, `support_pad` | 20, 10 mm |
/// | `interface_rule` | `"nodal"` |
/// | `du`, `newton_tol`, `newton_max` | 0.0025 mm, 1e-8, 25 |
/// | `e_min`..`k_bar_max` | 25000..50000, 0.1..0.4, 1..5, 10..10000 |
/// | `sigf_bbar_offset`, `sigf_bbar_factor` | 0.1, 2 |
/// | `beta_min_ratio`, `beta_max_ratio` | 0.1, 10 |
/// | `stiffness_deviation`, `crack_threshold` | 0.01, 1e-4 mm |
/// | `precision_elastic`, `precision_hardening`, `precision_softening` | 1e-3, 1e-3, 3e-3 |
/// | `accuracy_precision_elastic` | 1e-5 |
/// | `eval_cap`, `initial_design`, `surrogate_generations` | 155, 10, 200 |
/// | `calibration_samples` | 30 |
/// | `seed`, `runs`, `workers` | 1, 100, 1 |
/// | `out_dir` | `"out"` |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub e: f64,
    pub nu: f64,
    pub sigf_bar: f64,
    pub k_bar: f64,
    pub sigf_bbar: f64,
    pub beta_bbar: f64,

    pub span: f64,
    pub height: f64,
    pub thickness: f64,
    pub notch_depth: f64,
    pub notch_width: f64,
    pub nx: usize,
    pub ny: usize,
    pub load_plate: f64,
    pub support_pad: f64,
    pub interface_rule: InterfaceRule,

    pub du: f64,
    pub newton_tol: f64,
    pub newton_max: usize,

    pub e_min: f64,
    pub e_max: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub sigf_bar_min: f64,
    pub sigf_bar_max: f64,
    pub k_bar_min: f64,
    pub k_bar_max: f64,
    pub sigf_bbar_offset: f64,
    pub sigf_bbar_factor: f64,
    pub beta_min_ratio: f64,
    pub beta_max_ratio: f64,

    pub stiffness_deviation: f64,
    pub crack_threshold: f64,

    pub precision_elastic: f64,
    pub precision_hardening: f64,
    pub precision_softening: f64,
    pub accuracy_precision_elastic: f64,
    pub eval_cap: usize,
    pub initial_design: usize,
    pub surrogate_generations: usize,
    pub calibration_samples: usize,

    pub seed: u64,
    pub runs: usize,
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = MaterialParams::REFERENCE;
        let g = BeamGeometry::default();
        let c = SimulationControl::default();
        let b = ParamBounds::default();
        let s = FeatureSettings::default();
        RunConfig {
            e: p.e,
            nu: p.nu,
            sigf_bar: p.sigf_bar,
            k_bar: p.k_bar,
            sigf_bbar: p.sigf_bbar,
            beta_bbar: p.beta_bbar,
            span: g.span,
            height: g.height,
            thickness: g.thickness,
            notch_depth: g.notch_depth,
            notch_width: g.notch_width,
            nx: g.nx,
            ny: g.ny,
            load_plate: g.load_plate,
            support_pad: g.support_pad,
            interface_rule: g.interface_rule,
            du: c.du,
            newton_tol: c.newton_tol,
            newton_max: c.newton_max,
            e_min: b.e.lo,
            e_max: b.e.hi,
            nu_min: b.nu.lo,
            nu_max: b.nu.hi,
            sigf_bar_min: b.sigf_bar.lo,
            sigf_bar_max: b.sigf_bar.hi,
            k_bar_min: b.k_bar.lo,
            k_bar_max: b.k_bar.hi,
            sigf_bbar_offset: b.sigf_bbar_offset,
            sigf_bbar_factor: b.sigf_bbar_factor,
            beta_min_ratio: b.beta_lo_ratio,
            beta_max_ratio: b.beta_hi_ratio,
            stiffness_deviation: s.stiffness_deviation,
            crack_threshold: s.crack_threshold,
            precision_elastic: 1e-3,
            precision_hardening: 1e-3,
            precision_softening: 3e-3,
            accuracy_precision_elastic: 1e-5,
            eval_cap: EVAL_CAP,
            initial_design: 10,
            surrogate_generations: 200,
            calibration_samples: 30,
            seed: 1,
            runs: 100,
            workers: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.reference_params().validate()?;
        self.geometry().validate()?;
        self.control().validate()?;
        self.settings().validate()?;
        let bounds = self.bounds();
        for iv in [bounds.e, bounds.nu, bounds.sigf_bar, bounds.k_bar] {
            if !(iv.lo < iv.hi) {
                return Err(Error::Config(format!("empty bound [{}, {}]", iv.lo, iv.hi)));
            }
        }
        bounds.check(&self.reference_params())?;
        for (name, p) in [
            ("precision_elastic", self.precision_elastic),
            ("precision_hardening", self.precision_hardening),
            ("precision_softening", self.precision_softening),
            ("accuracy_precision_elastic", self.accuracy_precision_elastic),
        ] {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {p}")));
            }
        }
        if self.eval_cap < self.initial_design || self.initial_design == 0 {
            return Err(Error::Config("need 0 < initial_design <= eval_cap".into()));
        }
        if self.calibration_samples == 0 || self.runs == 0 || self.workers == 0 {
            return Err(Error::Config("calibration_samples, runs and workers must be positive".into()));
        }
        Ok(())
    }

    /// Parameters the reference data is generated from.
    pub fn reference_params(&self) -> MaterialParams {
        MaterialParams {
            e: self.e,
            nu: self.nu,
            sigf_bar: self.sigf_bar,
            k_bar: self.k_bar,
            sigf_bbar: self.sigf_bbar,
            beta_bbar: self.beta_bbar,
        }
    }

    pub fn geometry(&self) -> BeamGeometry {
        BeamGeometry {
            span: self.span,
            height: self.height,
            thickness: self.thickness,
            notch_depth: self.notch_depth,
            notch_width: self.notch_width,
            nx: self.nx,
            ny: self.ny,
            load_plate: self.load_plate,
            support_pad: self.support_pad,
            interface_rule: self.interface_rule,
        }
    }

    pub fn control(&self) -> SimulationControl {
        SimulationControl {
            du: self.du,
            newton_tol: self.newton_tol,
            newton_max: self.newton_max,
            ..SimulationControl::default()
        }
    }

    pub fn bounds(&self) -> ParamBounds {
        ParamBounds {
            e: Interval::new(self.e_min, self.e_max),
            nu: Interval::new(self.nu_min, self.nu_max),
            sigf_bar: Interval::new(self.sigf_bar_min, self.sigf_bar_max),
            k_bar: Interval::new(self.k_bar_min, self.k_bar_max),
            sigf_bbar_offset: self.sigf_bbar_offset,
            sigf_bbar_factor: self.sigf_bbar_factor,
            beta_lo_ratio: self.beta_min_ratio,
            beta_hi_ratio: self.beta_max_ratio,
        }
    }

    pub fn settings(&self) -> FeatureSettings {
        FeatureSettings {
            stiffness_deviation: self.stiffness_deviation,
            crack_threshold: self.crack_threshold,
            ..FeatureSettings::default()
        }
    }

    pub fn precision(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Elastic => self.precision_elastic,
            Stage::Hardening => self.precision_hardening,
            Stage::Softening => self.precision_softening,
        }
    }

    pub fn surrogate(&self, seed: u64) -> SurrogateConfig {
        SurrogateConfig {
            initial: self.initial_design,
            cap: self.eval_cap,
            grade: GradeConfig {
                generations: self.surrogate_generations,
                ..GradeConfig::default()
            },
            seed,
            ..SurrogateConfig::default()
        }
    }

    /// SHA-256 over the canonical serialization, excluding the seed (stamped
    /// separately on every artifact), where results are written and how many
    /// workers produce them.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out_dir = PathBuf::new();
        canon.workers = 1;
        canon.seed = 0;
        let json = serde_json::to_string(&canon).expect("flat config always serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn partial_document_keeps_defaults() {
        let cfg = RunConfig::from_toml("seed = 7\nnx = 24\nout_dir = \"elsewhere\"\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.geometry().nx, 24);
        assert_eq!(cfg.eval_cap, 155);
        assert_eq!(cfg.geometry().ny, 12);
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = RunConfig::default();
        let b = RunConfig {
            out_dir: "x".into(),
            workers: 4,
            seed: 9,
            ..a.clone()
        };
        let c = RunConfig { nx: 24, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(RunConfig::from_toml("no_such_key = 1").is_err());
        assert!(RunConfig::from_toml("precision_hardening = 0.0").is_err());
        assert!(RunConfig::from_toml("du = -1.0").is_err());
        assert!(RunConfig::from_toml("[section]\nseed = 1").is_err());
        assert!(RunConfig::from_toml("e = 60000.0").is_err());
    }
}
