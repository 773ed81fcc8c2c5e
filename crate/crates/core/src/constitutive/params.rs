use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio between the limit tangential and the limit normal traction.
pub const SHEAR_TO_NORMAL_LIMIT: f64 = 0.1;

/// The six independent constants of the continuum-discrete damage model.
///
/// Units: `e`, `sigf_bar`, `k_bar`, `sigf_bbar` in MPa, `nu` dimensionless,
/// `beta_bbar` in MPa/mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub e: f64,
    pub nu: f64,
    /// Bulk limit stress.
    pub sigf_bar: f64,
    /// Bulk hardening modulus.
    pub k_bar: f64,
    /// Limit normal traction of the discontinuity.
    pub sigf_bbar: f64,
    /// Softening parameter of the discontinuity.
    pub beta_bbar: f64,
}

impl MaterialParams {
    /// Values used to generate the synthetic target data.
    pub const REFERENCE: MaterialParams = MaterialParams {
        e: 38_000.0,
        nu: 0.1,
        sigf_bar: 2.2,
        k_bar: 1000.0,
        sigf_bbar: 2.35,
        beta_bbar: 23.5,
    };

    /// Limit tangential traction, tied to the normal one.
    pub fn sigs_bbar(&self) -> f64 {
        SHEAR_TO_NORMAL_LIMIT * self.sigf_bbar
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::E => self.e,
            ParamId::Nu => self.nu,
            ParamId::SigfBar => self.sigf_bar,
            ParamId::KBar => self.k_bar,
            ParamId::SigfBbar => self.sigf_bbar,
            ParamId::BetaBbar => self.beta_bbar,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        match id {
            ParamId::E => self.e = value,
            ParamId::Nu => self.nu = value,
            ParamId::SigfBar => self.sigf_bar = value,
            ParamId::KBar => self.k_bar = value,
            ParamId::SigfBbar => self.sigf_bbar = value,
            ParamId::BetaBbar => self.beta_bbar = value,
        }
    }

    pub fn with(mut self, id: ParamId, value: f64) -> Self {
        self.set(id, value);
        self
    }

    /// Physical sanity checks required by the constitutive updates. Bound
    /// membership is checked separately by [`ParamBounds::check`].
    pub fn validate(&self) -> Result<()> {
        let finite = ParamId::ALL.iter().all(|&id| self.get(id).is_finite());
        if !finite {
            return Err(Error::InvalidParams(format!("non-finite value in {self:?}")));
        }
        if self.e <= 0.0 || self.sigf_bar <= 0.0 || self.k_bar <= 0.0 {
            return Err(Error::InvalidParams(
                "E, limit stress and hardening modulus must be positive".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(Error::InvalidParams(format!("Poisson ratio {} outside [0, 0.5)", self.nu)));
        }
        if self.sigf_bbar <= 0.0 || self.beta_bbar <= 0.0 {
            return Err(Error::InvalidParams(
                "limit traction and softening parameter must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamId {
    E,
    Nu,
    SigfBar,
    KBar,
    SigfBbar,
    BetaBbar,
}

impl ParamId {
    pub const ALL: [ParamId; 6] = [
        ParamId::E,
        ParamId::Nu,
        ParamId::SigfBar,
        ParamId::KBar,
        ParamId::SigfBbar,
        ParamId::BetaBbar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::E => "E",
            ParamId::Nu => "nu",
            ParamId::SigfBar => "sigf_bar",
            ParamId::KBar => "K_bar",
            ParamId::SigfBbar => "sigf_bbar",
            ParamId::BetaBbar => "beta_bbar",
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Maps `t` in `[0, 1]` onto the interval.
    pub fn lerp(&self, t: f64) -> f64 {
        self.lo + t * (self.hi - self.lo)
    }
}

/// Search limits for the model parameters.
///
/// `sigf_bbar` and `beta_bbar` have coupled limits:
/// `sigf_bbar in [sigf_bar + sigf_bbar_offset, sigf_bbar_factor * sigf_bar]` and
/// `beta_bbar in [beta_lo_ratio * sigf_bbar, beta_hi_ratio * sigf_bbar]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub e: Interval,
    pub nu: Interval,
    pub sigf_bar: Interval,
    pub k_bar: Interval,
    pub sigf_bbar_offset: f64,
    pub sigf_bbar_factor: f64,
    pub beta_lo_ratio: f64,
    pub beta_hi_ratio: f64,
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            e: Interval::new(25_000.0, 50_000.0),
            nu: Interval::new(0.1, 0.4),
            sigf_bar: Interval::new(1.0, 5.0),
            k_bar: Interval::new(10.0, 10_000.0),
            sigf_bbar_offset: 0.1,
            sigf_bbar_factor: 2.0,
            beta_lo_ratio: 0.1,
            beta_hi_ratio: 10.0,
        }
    }
}

impl ParamBounds {
    /// Interval of `id`, resolving the coupling against `given`.
    pub fn interval(&self, id: ParamId, given: &MaterialParams) -> Interval {
        match id {
            ParamId::E => self.e,
            ParamId::Nu => self.nu,
            ParamId::SigfBar => self.sigf_bar,
            ParamId::KBar => self.k_bar,
            ParamId::SigfBbar => Interval::new(
                given.sigf_bar + self.sigf_bbar_offset,
                self.sigf_bbar_factor * given.sigf_bar,
            ),
            ParamId::BetaBbar => Interval::new(
                self.beta_lo_ratio * given.sigf_bbar,
                self.beta_hi_ratio * given.sigf_bbar,
            ),
        }
    }

    pub fn check(&self, p: &MaterialParams) -> Result<()> {
        for id in ParamId::ALL {
            let iv = self.interval(id, p);
            if iv.lo >= iv.hi {
                return Err(Error::InvalidParams(format!(
                    "empty interval for {}: [{}, {}]",
                    id.name(),
                    iv.lo,
                    iv.hi
                )));
            }
            let v = p.get(id);
            // Relative slack for values produced by scaling at the bounds.
            let slack = 1e-12 * iv.width().max(v.abs());
            if v < iv.lo - slack || v > iv.hi + slack {
                return Err(Error::InvalidParams(format!(
                    "{} = {} outside [{}, {}]",
                    id.name(),
                    v,
                    iv.lo,
                    iv.hi
                )));
            }
        }
        Ok(())
    }
}
