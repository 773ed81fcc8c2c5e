//! Reference generation, weight calibration and the staged identification.

use std::cell::Cell;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::objectives::{calibrate_weights, ReferenceData, Stage, StageCalibration, StageContext, WeightSet};
use crate::optimizer::{surrogate_optimize, SearchBox, TraceRecord, Trial};
use crate::simulators::{BeamModel, Ligament, ResponseCurve};

/// A persisted result tagged with what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub seed: u64,
    pub data: T,
}

impl<T: Serialize + DeserializeOwned> Stamped<T> {
    pub fn new(config: &RunConfig, seed: u64, data: T) -> Self {
        Stamped {
            config_hash: config.hash(),
            seed,
            data,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Loads `path`, rejecting files written under another configuration.
    pub fn load_for(path: &Path, config: &RunConfig) -> Result<Self> {
        let s = Self::load(path)?;
        if s.config_hash != config.hash() {
            return Err(Error::Config(format!(
                "{} was produced by configuration {}, current is {}",
                path.display(),
                s.config_hash,
                config.hash()
            )));
        }
        Ok(s)
    }
}

pub fn generate_reference(config: &RunConfig) -> Result<ReferenceData> {
    config.validate()?;
    ReferenceData::generate(
        &config.reference_params(),
        &config.geometry(),
        &config.control(),
        &config.settings(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub weights: WeightSet,
    pub stages: Vec<StageCalibration>,
}

/// Weights of all stages, sampled around the configured reference parameters.
pub fn calibrate(config: &RunConfig, reference: Arc<ReferenceData>) -> Result<Calibration> {
    let (weights, stages) = calibrate_weights(
        reference,
        &config.reference_params(),
        &config.bounds(),
        config.calibration_samples,
        config.seed,
    )?;
    Ok(Calibration { weights, stages })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: Stage,
    pub seed: u64,
    pub precision: f64,
    /// Identified free pair in physical units.
    pub pair: [f64; 2],
    pub value: f64,
    pub evaluations: usize,
    pub success: bool,
    /// Evaluations penalized because the simulation itself failed.
    pub solver_failures: usize,
    /// All six parameters after this stage.
    pub params: MaterialParams,
    pub wall_time: f64,
}

impl StageResult {
    /// Equality up to wall time.
    pub fn same_outcome(&self, other: &StageResult) -> bool {
        StageResult {
            wall_time: 0.0,
            ..self.clone()
        } == StageResult {
            wall_time: 0.0,
            ..other.clone()
        }
    }
}

/// Runs the surrogate optimizer on one stage objective with the parameters
/// outside the stage held at `fixed`.
pub fn run_stage(
    stage: Stage,
    config: &RunConfig,
    reference: Arc<ReferenceData>,
    weights: &WeightSet,
    fixed: &MaterialParams,
    seed: u64,
    precision: f64,
) -> Result<(StageResult, Vec<TraceRecord>)> {
    let start = Instant::now();
    let ctx = StageContext::new(stage, fixed, reference, weights.pair(stage), &config.bounds());
    let failures = Cell::new(0usize);
    let objective = |x: &[f64]| {
        let e = ctx.evaluate_unit([x[0], x[1]]);
        if e.solver_failure {
            failures.set(failures.get() + 1);
        }
        Trial {
            f: e.value,
            penalized: e.penalized,
        }
    };
    let out = surrogate_optimize(objective, &SearchBox::unit(2), &config.surrogate(seed), precision)?;
    let t = [out.best.x[0], out.best.x[1]];
    let pair = ctx.domain.pair(t);
    let result = StageResult {
        stage,
        seed,
        precision,
        pair,
        value: out.best.f,
        evaluations: out.evaluations,
        success: out.success,
        solver_failures: failures.get(),
        params: ctx.domain.apply(fixed, t),
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((result, out.trace))
}

/// Parameters to hold fixed while identifying `stage`: the configured
/// reference values overwritten by every earlier stage's result. Errors when
/// an earlier stage is missing.
pub fn fixed_params(stage: Stage, config: &RunConfig, earlier: &[StageResult]) -> Result<MaterialParams> {
    let mut p = config.reference_params();
    for prior in Stage::ALL.iter().filter(|s| s.number() < stage.number()) {
        let r = earlier
            .iter()
            .find(|r| r.stage == *prior)
            .ok_or_else(|| Error::Stage(format!("{} stage must run before {}", prior.name(), stage.name())))?;
        let [a, b] = prior.params();
        p = p.with(a, r.pair[0]).with(b, r.pair[1]);
    }
    Ok(p)
}

/// One row of the identified-versus-reference comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub u: f64,
    pub load_ref: f64,
    pub load: f64,
    pub delta_l_ref: f64,
    pub delta_l: f64,
    pub crack_open_ref: f64,
    pub crack_open: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub stages: Vec<StageResult>,
    pub params: MaterialParams,
    pub overlay: Vec<OverlayRow>,
    /// Largest load difference relative to the reference peak load.
    pub max_load_deviation: f64,
}

/// Response of `params` on the reference discretization next to the
/// reference curve.
pub fn overlay(reference: &ReferenceData, params: &MaterialParams) -> Result<Vec<OverlayRow>> {
    let control = reference.control.with_u_max(reference.curve.last_u());
    let curve: ResponseCurve = BeamModel::new(params, &reference.geometry, Ligament::Cohesive)?
        .run(&control)?
        .curve;
    Ok(reference
        .curve
        .points
        .iter()
        .zip(&curve.points)
        .map(|(r, c)| OverlayRow {
            u: r.u,
            load_ref: r.load,
            load: c.load,
            delta_l_ref: r.delta_l,
            delta_l: c.delta_l,
            crack_open_ref: r.crack_open,
            crack_open: c.crack_open,
        })
        .collect())
}

pub fn overlay_csv(rows: &[OverlayRow]) -> String {
    let mut s = String::from("u,L_ref,L,delta_l_ref,delta_l,crack_open_ref,crack_open\n");
    for r in rows {
        s.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.u, r.load_ref, r.load, r.delta_l_ref, r.delta_l, r.crack_open_ref, r.crack_open
        ));
    }
    s
}

/// The three stages in order, each starting from the previous results. A
/// failed stage passes on its best point.
pub fn identify_all(
    config: &RunConfig,
    reference: Arc<ReferenceData>,
    weights: &WeightSet,
    seed: u64,
) -> Result<Identification> {
    let mut stages: Vec<StageResult> = Vec::new();
    for stage in Stage::ALL {
        let fixed = fixed_params(stage, config, &stages)?;
        let (r, _) = run_stage(stage, config, reference.clone(), weights, &fixed, seed, config.precision(stage))?;
        stages.push(r);
    }
    let params = stages[2].params;
    let rows = overlay(&reference, &params)?;
    let peak = reference.curve.peak_load();
    let max_load_deviation = rows.iter().map(|r| (r.load - r.load_ref).abs()).fold(0.0, f64::max) / peak;
    Ok(Identification {
        stages,
        params,
        overlay: rows,
        max_load_deviation,
    })
}
