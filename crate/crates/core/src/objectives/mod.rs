//! Curve features and the staged objective functions.

mod features;
mod reference;
mod stage;

pub use features::{
    detect_crack_onset, detect_limit_displacement, interpolate_at, secant_slope, FeatureSettings,
};
pub use reference::{DerivedScalars, ReferenceData};
pub use stage::{
    calibrate_stage, calibrate_weights, eval_f1, eval_f2, eval_f3, latin_hypercube, weights_from_terms,
    Evaluation, Stage, StageCalibration, StageContext, StageDomain, WeightSet, PENALTY, STAGE_DIM,
};
