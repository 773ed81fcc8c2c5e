use std::sync::{Arc, OnceLock};

use damage_ident::constitutive::{MaterialParams, ParamBounds, ParamId};
use damage_ident::objectives::*;
use damage_ident::simulators::{BeamGeometry, BeamModel, Ligament, SimulationControl};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: MaterialParams = MaterialParams::REFERENCE;

fn reference() -> Arc<ReferenceData> {
    static R: OnceLock<Arc<ReferenceData>> = OnceLock::new();
    R.get_or_init(|| {
        Arc::new(ReferenceData::generate(&P, &BeamGeometry::default(), &SimulationControl::default(), &FeatureSettings::default()).unwrap())
    })
    .clone()
}

fn calibration() -> &'static (WeightSet, Vec<StageCalibration>) {
    static W: OnceLock<(WeightSet, Vec<StageCalibration>)> = OnceLock::new();
    W.get_or_init(|| calibrate_weights(reference(), &P, &ParamBounds::default(), 30, 1).unwrap())
}

fn context(stage: Stage) -> StageContext {
    StageContext::new(stage, &P, reference(), calibration().0.pair(stage), &ParamBounds::default())
}

#[test]
fn scalars_reproducible_from_stored_curves() {
    let r = reference();
    let again = r.rederive().unwrap();
    assert_eq!(again, r.scalars());
    let back = ReferenceData::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back.rederive().unwrap(), r.scalars());
}

#[test]
fn generation_is_bitwise_repeatable() {
    let again = ReferenceData::generate(&P, &BeamGeometry::default(), &SimulationControl::default(), &FeatureSettings::default()).unwrap();
    assert_eq!(again.to_json().unwrap(), reference().to_json().unwrap());
}

#[test]
fn staging_order_of_reference_features() {
    let r = reference();
    assert!(r.u_f < r.u_ff, "{} {}", r.u_f, r.u_ff);
    assert!(r.u_ff < 0.15);
}

#[test]
fn reference_shows_linear_hardening_and_softening_regimes() {
    let r = reference();
    let c = &r.curve;
    let initial = c.points[1].load / c.points[1].u;
    let secant = r.secant;
    assert!(secant > 0.0 && secant < 0.9 * initial, "initial {initial} secant {secant}");
    let peak = c.peak_load();
    let last = c.points.last().unwrap();
    assert!(last.load < 0.99 * peak, "final {} peak {peak}", last.load);
    let tail = &c.points[c.len() - 5..];
    assert!(tail.windows(2).all(|w| w[1].load < w[0].load));
    let at_probe = interpolate_at(c, 0.15).unwrap().load;
    assert!(at_probe < peak);
}

#[test]
fn features_stable_under_step_halving() {
    let r = reference();
    let du = r.control.du;
    let fine = ReferenceData::generate(
        &P,
        &BeamGeometry::default(),
        &SimulationControl {
            du: du / 2.0,
            ..SimulationControl::default()
        },
        &FeatureSettings::default(),
    )
    .unwrap();
    assert!((fine.u_f - r.u_f).abs() <= du, "{} vs {}", fine.u_f, r.u_f);
    assert!((fine.secant - r.secant).abs() <= 0.01 * r.secant, "{} vs {}", fine.secant, r.secant);
}

/// Onset from the local opening signal against onset read off the load
/// deviation from a specimen whose crack activates much later.
#[test]
fn onset_methods_agree_within_two_steps() {
    let r = reference();
    let late = P.with(ParamId::SigfBbar, 2.0 * P.sigf_bar);
    let other = BeamModel::new(&late, &r.geometry, Ligament::Cohesive)
        .unwrap()
        .run(&r.control)
        .unwrap()
        .curve;
    let dev: Vec<(f64, f64)> = r
        .curve
        .points
        .iter()
        .zip(&other.points)
        .skip(1)
        .map(|(a, b)| (a.u, (a.load - b.load).abs() / b.load.abs()))
        .collect();
    let threshold = 1e-3;
    let i = dev.iter().position(|d| d.1 > threshold).expect("curves never deviate");
    let (u0, d0) = dev[i - 1];
    let (u1, d1) = dev[i];
    let global = u0 + (threshold - d0) / (d1 - d0) * (u1 - u0);
    assert!((global - r.u_ff).abs() <= 2.0 * r.control.du, "load deviation {global} local {}", r.u_ff);
}

#[test]
fn all_objectives_vanish_at_the_reference() {
    let w = &calibration().0;
    let b = ParamBounds::default();
    let f1 = eval_f1(P.e, P.nu, &StageContext::new(Stage::Elastic, &P, reference(), w.pair(Stage::Elastic), &b));
    let f2 = eval_f2(P.sigf_bar, P.k_bar, &StageContext::new(Stage::Hardening, &P, reference(), w.pair(Stage::Hardening), &b));
    let f3 = eval_f3(P.sigf_bbar, P.beta_bbar, &StageContext::new(Stage::Softening, &P, reference(), w.pair(Stage::Softening), &b));
    for f in [f1, f2, f3] {
        assert_eq!(f.value, 0.0);
        assert!(!f.penalized);
    }
}

#[test]
fn objectives_are_non_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for stage in Stage::ALL {
        let ctx = context(stage);
        for _ in 0..4 {
            let e = ctx.evaluate_unit([rng.gen(), rng.gen()]);
            assert!(e.value >= 0.0);
            assert!(!e.penalized || e.value == PENALTY);
        }
    }
}

#[test]
fn elastic_objective_grows_with_stiffness_error() {
    let ctx = context(Stage::Elastic);
    let e = eval_f1(1.1 * P.e, P.nu, &ctx);
    assert!(!e.penalized && e.value > eval_f1(P.e, P.nu, &ctx).value);
}

#[test]
fn hardening_penalized_while_elastic_through_the_window() {
    let e = eval_f2(5.0, P.k_bar, &context(Stage::Hardening));
    assert!(e.penalized);
    assert_eq!(e.value, 20.0);
}

/// +20% lands in the penalty region (crack onset before the secant window
/// closes); +10% is the largest tested step that stays admissible.
#[test]
fn hardening_modulus_error_shows_in_the_secant_term() {
    let ctx = context(Stage::Hardening);
    let e = eval_f2(P.sigf_bar, 1.1 * P.k_bar, &ctx);
    let t = e.terms.expect("admissible candidate");
    assert!(e.value > 0.0);
    assert!(ctx.weights[1] * t[1] > ctx.weights[0] * t[0], "{t:?}");
}

#[test]
fn penalty_plateau_is_a_jump() {
    let ctx = context(Stage::Hardening);
    // Walk the limit stress up from the reference until the penalty starts.
    let mut prev = eval_f2(P.sigf_bar, P.k_bar, &ctx);
    let mut s = P.sigf_bar;
    let mut found = false;
    for _ in 0..40 {
        s += 0.0125;
        let e = eval_f2(s, P.k_bar, &ctx);
        if e.penalized {
            assert_eq!(e.value, PENALTY);
            assert!(prev.value < 0.5 * PENALTY, "left of the edge {}", prev.value);
            found = true;
            break;
        }
        prev = e;
    }
    assert!(found);
    // Below the reference the objective is admissible and finite.
    let below = eval_f2(0.95 * P.sigf_bar, P.k_bar, &ctx);
    assert!(!below.penalized && below.value < PENALTY);
}

#[test]
fn softening_error_shows_in_the_load_term() {
    let ctx = context(Stage::Softening);
    let e = eval_f3(P.sigf_bbar, 0.8 * P.beta_bbar, &ctx);
    let t = e.terms.expect("admissible candidate");
    assert!(e.value > 0.0);
    assert!(ctx.weights[1] * t[1] > ctx.weights[0] * t[0], "{t:?}");
}

/// Within the admissible bounds the crack always opens before the probe, so
/// the no-onset branch is exercised with a limit traction far above them.
#[test]
fn softening_penalized_without_crack_onset() {
    let ctx = context(Stage::Softening);
    let e = ctx.evaluate_params(&P.with(ParamId::SigfBbar, 50.0));
    assert!(e.penalized && !e.solver_failure);
    assert_eq!(e.value, 20.0);
}

fn inactive_settings(rng: &mut impl Rng, sigf_bar_lo: f64) -> MaterialParams {
    let b = ParamBounds::default();
    let mut p = P.with(ParamId::SigfBar, rng.gen_range(sigf_bar_lo..=b.sigf_bar.hi));
    p = p.with(ParamId::KBar, b.k_bar.lerp(rng.gen()));
    p = p.with(ParamId::SigfBbar, b.interval(ParamId::SigfBbar, &p).lerp(rng.gen()));
    p.with(ParamId::BetaBbar, b.interval(ParamId::BetaBbar, &p).lerp(rng.gen()))
}

/// F1 at inactive parameters `base` against 10 random settings with the limit
/// stress at least `sigf_bar_lo`.
fn f1_invariance(base: MaterialParams, sigf_bar_lo: f64) {
    let ctx = context(Stage::Elastic);
    let base = ctx.evaluate_params(&base.with(ParamId::E, 39_000.0).with(ParamId::Nu, 0.2)).value;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let p = inactive_settings(&mut rng, sigf_bar_lo).with(ParamId::E, 39_000.0).with(ParamId::Nu, 0.2);
        let v = ctx.evaluate_params(&p).value;
        assert_eq!(v.to_bits(), base.to_bits(), "{p:?}");
    }
}

#[test]
#[ignore = "bulk damage starts near u = 0.007 mm for limit stresses below about 3.2 MPa"]
fn elastic_objective_blind_to_inactive_parameters() {
    f1_invariance(P, ParamBounds::default().sigf_bar.lo);
}

#[test]
fn elastic_objective_blind_to_inactive_parameters_above_the_window_stress() {
    f1_invariance(P.with(ParamId::SigfBar, 5.0).with(ParamId::SigfBbar, 6.0), 3.5);
}

#[test]
fn calibration_normalizes_each_term() {
    let (w, stages) = calibration();
    w.validate().unwrap();
    assert!(w.w.iter().all(|v| *v > 0.0 && v.is_finite()));
    for cal in stages {
        let valid: Vec<[f64; 2]> = cal.terms.iter().flatten().copied().collect();
        assert!(!valid.is_empty());
        for d in 0..2 {
            let mean = valid.iter().map(|t| cal.weights[d] * t[d]).sum::<f64>() / valid.len() as f64;
            assert!((mean - 1.0).abs() < 1e-12, "{:?} term {d}: {mean}", cal.stage);
        }
    }
}

#[test]
fn calibration_arithmetic_and_degeneracy() {
    let w = weights_from_terms(&[[4.0, 2.0]; 30]).unwrap();
    assert_eq!(w, [0.25, 0.5]);
    assert!(weights_from_terms(&[[0.0, 1.0]; 30]).is_err());
    assert!(weights_from_terms(&[]).is_err());
}

#[test]
fn calibration_is_deterministic() {
    let ctx = context(Stage::Elastic);
    let a = calibrate_stage(&ctx, 6, 3).unwrap();
    let b = calibrate_stage(&ctx, 6, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.samples.len(), 6);
}
