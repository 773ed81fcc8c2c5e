//! The three staged objectives and their weights.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{detect_crack_onset, detect_limit_displacement, interpolate_at, secant_slope};
use super::reference::ReferenceData;
use crate::constitutive::{Interval, MaterialParams, ParamBounds, ParamId};
use crate::error::{Error, Result};
use crate::simulators::{BeamModel, Ligament, ResponseCurve, SimulationControl};

/// Free parameters per stage.
pub const STAGE_DIM: usize = 2;
/// Value assigned to candidates that never reach the measured regime.
pub const PENALTY: f64 = 10.0 * STAGE_DIM as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Elastic,
    Hardening,
    Softening,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Elastic, Stage::Hardening, Stage::Softening];

    /// 1, 2 or 3.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Stage::Elastic),
            2 => Ok(Stage::Hardening),
            3 => Ok(Stage::Softening),
            _ => Err(Error::Config(format!("no stage {n}"))),
        }
    }

    pub fn params(self) -> [ParamId; 2] {
        match self {
            Stage::Elastic => [ParamId::E, ParamId::Nu],
            Stage::Hardening => [ParamId::SigfBar, ParamId::KBar],
            Stage::Softening => [ParamId::SigfBbar, ParamId::BetaBbar],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Elastic => "elastic",
            Stage::Hardening => "hardening",
            Stage::Softening => "softening",
        }
    }
}

/// Map between the unit square searched by the optimizer and a stage's
/// parameter pair. The softening stage uses `(sigf_bbar, beta_bbar / sigf_bbar)`
/// so that the coupled bounds become a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageDomain {
    pub stage: Stage,
    pub axes: [Interval; 2],
}

impl StageDomain {
    pub fn new(stage: Stage, bounds: &ParamBounds, fixed: &MaterialParams) -> Self {
        let [a, b] = stage.params();
        let axes = match stage {
            Stage::Softening => [
                bounds.interval(a, fixed),
                Interval::new(bounds.beta_lo_ratio, bounds.beta_hi_ratio),
            ],
            _ => [bounds.interval(a, fixed), bounds.interval(b, fixed)],
        };
        StageDomain { stage, axes }
    }

    /// Physical pair at unit coordinates `t`.
    pub fn pair(&self, t: [f64; 2]) -> [f64; 2] {
        let x0 = self.axes[0].lerp(t[0]);
        let x1 = self.axes[1].lerp(t[1]);
        match self.stage {
            Stage::Softening => [x0, x1 * x0],
            _ => [x0, x1],
        }
    }

    /// Unit coordinates of a physical pair.
    pub fn unit(&self, pair: [f64; 2]) -> [f64; 2] {
        let second = match self.stage {
            Stage::Softening => pair[1] / pair[0],
            _ => pair[1],
        };
        [
            (pair[0] - self.axes[0].lo) / self.axes[0].width(),
            (second - self.axes[1].lo) / self.axes[1].width(),
        ]
    }

    pub fn apply(&self, base: &MaterialParams, t: [f64; 2]) -> MaterialParams {
        let [a, b] = self.stage.params();
        let [x0, x1] = self.pair(t);
        base.with(a, x0).with(b, x1)
    }
}

/// Normalizing weights `w1..w6` of the six residual terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub w: [f64; 6],
}

impl WeightSet {
    pub fn pair(&self, stage: Stage) -> [f64; 2] {
        let i = 2 * (stage.number() - 1);
        [self.w[i], self.w[i + 1]]
    }

    pub fn set_pair(&mut self, stage: Stage, w: [f64; 2]) {
        let i = 2 * (stage.number() - 1);
        self.w[i] = w[0];
        self.w[i + 1] = w[1];
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.iter().all(|w| w.is_finite() && *w > 0.0) {
            Ok(())
        } else {
            Err(Error::Calibration(format!("weights must be positive and finite: {:?}", self.w)))
        }
    }
}

/// Outcome of one true objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub penalized: bool,
    /// Unweighted squared residuals; `None` when penalized.
    pub terms: Option<[f64; 2]>,
    /// The penalty came from a failed simulation rather than from the
    /// measured regime being missed.
    pub solver_failure: bool,
}

impl Evaluation {
    fn penalty(solver_failure: bool) -> Self {
        Evaluation {
            value: PENALTY,
            penalized: true,
            terms: None,
            solver_failure,
        }
    }
}

/// Everything a stage objective needs besides the free pair.
#[derive(Debug)]
pub struct StageContext {
    pub stage: Stage,
    /// Current values of all six parameters; the free pair is overwritten.
    pub params: MaterialParams,
    pub reference: Arc<ReferenceData>,
    pub weights: [f64; 2],
    pub domain: StageDomain,
    baseline: OnceLock<Option<ResponseCurve>>,
}

impl StageContext {
    pub fn new(
        stage: Stage,
        params: &MaterialParams,
        reference: Arc<ReferenceData>,
        weights: [f64; 2],
        bounds: &ParamBounds,
    ) -> Self {
        StageContext {
            stage,
            params: *params,
            domain: StageDomain::new(stage, bounds, params),
            reference,
            weights,
            baseline: OnceLock::new(),
        }
    }

    /// Simulated deflection range of the stage.
    pub fn window(&self) -> f64 {
        let r = &self.reference;
        let s = &r.settings;
        match self.stage {
            Stage::Elastic => s.elastic_probe,
            Stage::Hardening => {
                let du = r.control.du;
                ((1.5 * r.u_f + s.secant_far) / du - 1e-9).ceil() * du
            }
            Stage::Softening => s.softening_probe,
        }
    }

    fn control(&self) -> SimulationControl {
        self.reference.control.with_u_max(self.window())
    }

    /// Uncracked response with the context parameters; independent of the
    /// softening pair, so computed once.
    fn baseline(&self) -> Option<&ResponseCurve> {
        self.baseline
            .get_or_init(|| {
                BeamModel::new(&self.params, &self.reference.geometry, Ligament::Rigid)
                    .and_then(|m| m.run(&self.control()))
                    .ok()
                    .map(|r| r.curve)
            })
            .as_ref()
    }

    /// Unweighted residual terms, `None` for penalized candidates.
    pub fn terms(&self, p: &MaterialParams) -> Option<[f64; 2]> {
        self.try_terms(p).ok().flatten()
    }

    /// As [`StageContext::terms`], with simulation failures kept apart.
    pub fn try_terms(&self, p: &MaterialParams) -> Result<Option<[f64; 2]>> {
        let r = &*self.reference;
        let s = &r.settings;
        let geom = &r.geometry;
        let control = self.control();
        let model = BeamModel::new(p, geom, Ligament::Cohesive)?;
        Ok(match self.stage {
            Stage::Elastic => {
                let curve = model.run(&control)?.curve;
                interpolate_at(&curve, s.elastic_probe)
                    .ok()
                    .map(|at| [(r.load_elastic - at.load).powi(2), (r.delta_l_elastic - at.delta_l).powi(2)])
            }
            Stage::Hardening => {
                let pair = model.run_with_baseline(&control)?;
                let curve = &pair.run.curve;
                (|| {
                    let u_f = detect_limit_displacement(curve, s.stiffness_deviation)?;
                    let end = u_f + s.secant_far;
                    if end > curve.last_u() {
                        return None;
                    }
                    if let Some(onset) = detect_crack_onset(curve, Some(&pair.baseline), s.crack_threshold) {
                        if onset < end {
                            return None;
                        }
                    }
                    let slope = secant_slope(curve, u_f, s.secant_near, s.secant_far).ok()?;
                    Some([(r.u_f - u_f).powi(2), (r.secant - slope).powi(2)])
                })()
            }
            Stage::Softening => {
                let baseline = self
                    .baseline()
                    .ok_or_else(|| Error::Simulation { last_u: 0.0, reason: "uncracked baseline run failed".into() })?;
                let curve = model.run(&control)?.curve;
                detect_crack_onset(&curve, Some(baseline), s.crack_threshold).and_then(|onset| {
                    let at = interpolate_at(&curve, s.softening_probe).ok()?;
                    Some([(r.u_ff - onset).powi(2), (r.load_softening - at.load).powi(2)])
                })
            }
        })
    }

    pub fn evaluate_params(&self, p: &MaterialParams) -> Evaluation {
        match self.try_terms(p) {
            Err(_) => Evaluation::penalty(true),
            Ok(None) => Evaluation::penalty(false),
            Ok(Some(t)) => Evaluation {
                value: self.weights[0] * t[0] + self.weights[1] * t[1],
                penalized: false,
                terms: Some(t),
                solver_failure: false,
            },
        }
    }

    /// Objective at unit coordinates of the stage domain.
    pub fn evaluate_unit(&self, t: [f64; 2]) -> Evaluation {
        self.evaluate_params(&self.domain.apply(&self.params, t))
    }

    /// Objective at a physical pair.
    pub fn evaluate_pair(&self, pair: [f64; 2]) -> Evaluation {
        let [a, b] = self.stage.params();
        self.evaluate_params(&self.params.with(a, pair[0]).with(b, pair[1]))
    }
}

fn expect_stage(ctx: &StageContext, stage: Stage) {
    assert_eq!(ctx.stage, stage, "context built for another stage");
}

pub fn eval_f1(e: f64, nu: f64, ctx: &StageContext) -> Evaluation {
    expect_stage(ctx, Stage::Elastic);
    ctx.evaluate_pair([e, nu])
}

pub fn eval_f2(sigf_bar: f64, k_bar: f64, ctx: &StageContext) -> Evaluation {
    expect_stage(ctx, Stage::Hardening);
    ctx.evaluate_pair([sigf_bar, k_bar])
}

pub fn eval_f3(sigf_bbar: f64, beta_bbar: f64, ctx: &StageContext) -> Evaluation {
    expect_stage(ctx, Stage::Softening);
    ctx.evaluate_pair([sigf_bbar, beta_bbar])
}

/// Latin-hypercube sample of `n` points in the unit square.
pub fn latin_hypercube(n: usize, rng: &mut impl Rng) -> Vec<[f64; 2]> {
    let mut cols = [(0..n).collect::<Vec<_>>(), (0..n).collect::<Vec<_>>()];
    for c in &mut cols {
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            c.swap(i, j);
        }
    }
    (0..n)
        .map(|i| {
            let mut x = [0.0; 2];
            for d in 0..2 {
                x[d] = (cols[d][i] as f64 + rng.gen::<f64>()) / n as f64;
            }
            x
        })
        .collect()
}

/// `1 / mean` of each term over the non-penalized samples.
pub fn weights_from_terms(terms: &[[f64; 2]]) -> Result<[f64; 2]> {
    if terms.is_empty() {
        return Err(Error::Calibration("every calibration sample was penalized".into()));
    }
    let mut w = [0.0; 2];
    for d in 0..2 {
        let mean = terms.iter().map(|t| t[d]).sum::<f64>() / terms.len() as f64;
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::Calibration(format!("term {} has mean {mean}", d + 1)));
        }
        w[d] = 1.0 / mean;
    }
    Ok(w)
}

/// Calibration record of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCalibration {
    pub stage: Stage,
    pub samples: Vec<[f64; 2]>,
    /// Unweighted terms of each sample, `None` when penalized.
    pub terms: Vec<Option<[f64; 2]>>,
    pub weights: [f64; 2],
}

/// Calibrates the weights of `ctx.stage` from `n` Latin-hypercube samples of
/// its domain. The context's own weights are ignored.
pub fn calibrate_stage(ctx: &StageContext, n: usize, seed: u64) -> Result<StageCalibration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ctx.stage.number() as u64);
    let samples = latin_hypercube(n, &mut rng);
    let terms: Vec<_> = samples
        .iter()
        .map(|t| ctx.terms(&ctx.domain.apply(&ctx.params, *t)))
        .collect();
    let valid: Vec<[f64; 2]> = terms.iter().flatten().copied().collect();
    let weights = weights_from_terms(&valid)?;
    Ok(StageCalibration {
        stage: ctx.stage,
        samples: samples.iter().map(|t| ctx.domain.pair(*t)).collect(),
        terms,
        weights,
    })
}

/// Weights of all three stages, each calibrated with the other parameters
/// held at `params`.
pub fn calibrate_weights(
    reference: Arc<ReferenceData>,
    params: &MaterialParams,
    bounds: &ParamBounds,
    n: usize,
    seed: u64,
) -> Result<(WeightSet, Vec<StageCalibration>)> {
    let mut set = WeightSet { w: [1.0; 6] };
    let mut records = Vec::new();
    for stage in Stage::ALL {
        let ctx = StageContext::new(stage, params, reference.clone(), [1.0, 1.0], bounds);
        let cal = calibrate_stage(&ctx, n, seed)?;
        set.set_pair(stage, cal.weights);
        records.push(cal);
    }
    Ok((set, records))
}
