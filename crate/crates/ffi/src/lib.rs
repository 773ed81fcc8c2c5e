//! C ABI over the forward solvers and the stage objectives.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free`. Every fallible call returns a `DiStatus`; the text
//! of the last failure on the calling thread is available from
//! `di_last_error`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use damage_ident::constitutive::{MaterialParams, ParamBounds};
use damage_ident::objectives::{
    calibrate_weights, FeatureSettings, ReferenceData, Stage, StageContext,
};
use damage_ident::simulators::{
    run_bending, run_tensile, BarGeometry, BeamGeometry, CurvePoint, ResponseCurve, SimulationControl,
};
use damage_ident::pipeline::Stamped;
use damage_ident::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Simulation = 3,
    Io = 4,
    Calibration = 5,
    Internal = 6,
}

/// The six material parameters, in MPa and 1/mm where dimensional.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiParams {
    pub e: f64,
    pub nu: f64,
    pub sigf_bar: f64,
    pub k_bar: f64,
    pub sigf_bbar: f64,
    pub beta_bbar: f64,
}

impl From<DiParams> for MaterialParams {
    fn from(p: DiParams) -> Self {
        MaterialParams {
            e: p.e,
            nu: p.nu,
            sigf_bar: p.sigf_bar,
            k_bar: p.k_bar,
            sigf_bbar: p.sigf_bbar,
            beta_bbar: p.beta_bbar,
        }
    }
}

impl From<MaterialParams> for DiParams {
    fn from(p: MaterialParams) -> Self {
        DiParams {
            e: p.e,
            nu: p.nu,
            sigf_bar: p.sigf_bar,
            k_bar: p.k_bar,
            sigf_bbar: p.sigf_bbar,
            beta_bbar: p.beta_bbar,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiCurvePoint {
    pub u: f64,
    pub load: f64,
    pub delta_l: f64,
    pub crack_open: f64,
}

impl From<CurvePoint> for DiCurvePoint {
    fn from(p: CurvePoint) -> Self {
        DiCurvePoint {
            u: p.u,
            load: p.load,
            delta_l: p.delta_l,
            crack_open: p.crack_open,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiEvaluation {
    pub value: f64,
    /// Nonzero when the constant penalty was assigned.
    pub penalized: i32,
    /// Nonzero when the penalty came from a failed simulation.
    pub solver_failure: i32,
}

pub struct DiReference(Arc<ReferenceData>);
pub struct DiCurve(ResponseCurve);
pub struct DiContext(StageContext);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DiStatus {
    match e {
        Error::Domain(_) | Error::InvalidParams(_) | Error::Config(_) | Error::Range { .. } | Error::Mesh(_) | Error::Stage(_) => {
            DiStatus::InvalidArgument
        }
        Error::Solver { .. } | Error::Simulation { .. } | Error::Contact { .. } | Error::State(_) | Error::Reference(_) => {
            DiStatus::Simulation
        }
        Error::Io(_) => DiStatus::Io,
        Error::Calibration(_) | Error::Fit(_) => DiStatus::Calibration,
    }
}

/// Runs `f`, turning errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), (DiStatus, String)>) -> DiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DiStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DiStatus::Internal
        }
    }
}

fn lib<T>(r: damage_ident::Result<T>) -> Result<T, (DiStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DiStatus, String) {
    (DiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read<'a, T>(p: *const T, what: &str) -> Result<&'a T, (DiStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), (DiStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn di_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Writes the default reference parameters to `out`.
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn di_params_reference(out: *mut DiParams) -> DiStatus {
    guard(|| put(out, MaterialParams::REFERENCE.into()))
}

/// Simulates the reference specimen with the default geometry, step and
/// feature settings.
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn di_reference_generate(params: *const DiParams, out: *mut *mut DiReference) -> DiStatus {
    guard(|| {
        let p: MaterialParams = (*read(params, "params")?).into();
        let r = lib(ReferenceData::generate(
            &p,
            &BeamGeometry::default(),
            &SimulationControl::default(),
            &FeatureSettings::default(),
        ))?;
        put(out, Box::into_raw(Box::new(DiReference(Arc::new(r)))))
    })
}

/// Loads reference data, either bare or as written by the command-line tool.
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn di_reference_load(path: *const c_char, out: *mut *mut DiReference) -> DiStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (DiStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let path = Path::new(path);
        let r = match Stamped::<ReferenceData>::load(path) {
            Ok(s) => s.data,
            Err(_) => lib(ReferenceData::load(path))?,
        };
        put(out, Box::into_raw(Box::new(DiReference(Arc::new(r)))))
    })
}

/// Copy of the reference load-deflection curve.
/// `reference` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn di_reference_curve(reference: *const DiReference, out: *mut *mut DiCurve) -> DiStatus {
    guard(|| {
        let r = read(reference, "reference")?;
        put(out, Box::into_raw(Box::new(DiCurve(r.0.curve.clone()))))
    })
}

/// `reference` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn di_reference_free(reference: *mut DiReference) {
    if !reference.is_null() {
        drop(Box::from_raw(reference));
    }
}

unsafe fn simulate(
    params: *const DiParams,
    u_max: f64,
    out: *mut *mut DiCurve,
    run: impl FnOnce(&MaterialParams, &SimulationControl) -> damage_ident::Result<ResponseCurve>,
) -> DiStatus {
    guard(|| {
        let p: MaterialParams = (*read(params, "params")?).into();
        let control = SimulationControl::default().with_u_max(u_max);
        lib(control.validate())?;
        let curve = lib(run(&p, &control))?;
        put(out, Box::into_raw(Box::new(DiCurve(curve))))
    })
}

/// Notched three-point bending up to `u_max` mm.
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn di_simulate_bending(params: *const DiParams, u_max: f64, out: *mut *mut DiCurve) -> DiStatus {
    simulate(params, u_max, out, |p, c| run_bending(p, &BeamGeometry::default(), c))
}

/// Uniaxial bar with one cohesive section up to `u_max` mm.
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn di_simulate_tensile(params: *const DiParams, u_max: f64, out: *mut *mut DiCurve) -> DiStatus {
    simulate(params, u_max, out, |p, c| run_tensile(p, &BarGeometry::default(), c))
}

/// Number of points of `curve`, 0 for a null handle.
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn di_curve_len(curve: *const DiCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.len())
}

/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn di_curve_point(curve: *const DiCurve, index: usize, out: *mut DiCurvePoint) -> DiStatus {
    guard(|| {
        let c = read(curve, "curve")?;
        let p = c
            .0
            .points
            .get(index)
            .ok_or_else(|| (DiStatus::InvalidArgument, format!("index {index} past {} points", c.0.len())))?;
        put(out, (*p).into())
    })
}

/// `curve` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn di_curve_free(curve: *mut DiCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

fn stage_of(stage: u32) -> Result<Stage, (DiStatus, String)> {
    lib(Stage::from_number(stage as usize))
}

/// Objective of `stage` (1, 2 or 3) with the parameters outside the stage
/// held at `fixed`, under the default bounds.
/// `reference` must be a live handle, `fixed` and `weights` (two values)
/// readable, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn di_context_new(
    reference: *const DiReference,
    stage: u32,
    fixed: *const DiParams,
    weights: *const f64,
    out: *mut *mut DiContext,
) -> DiStatus {
    guard(|| {
        let r = read(reference, "reference")?;
        let stage = stage_of(stage)?;
        let p: MaterialParams = (*read(fixed, "fixed")?).into();
        lib(p.validate())?;
        if weights.is_null() {
            return Err(null("weights"));
        }
        let w = [*weights, *weights.add(1)];
        if !w.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err((DiStatus::InvalidArgument, format!("weights must be positive, got {w:?}")));
        }
        let ctx = StageContext::new(stage, &p, r.0.clone(), w, &ParamBounds::default());
        put(out, Box::into_raw(Box::new(DiContext(ctx))))
    })
}

/// Objective value at the free pair `(a, b)` in physical units.
/// `ctx` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn di_context_evaluate(ctx: *const DiContext, a: f64, b: f64, out: *mut DiEvaluation) -> DiStatus {
    guard(|| {
        let c = read(ctx, "context")?;
        if !(a.is_finite() && b.is_finite()) {
            return Err((DiStatus::InvalidArgument, "non-finite pair".into()));
        }
        let e = c.0.evaluate_pair([a, b]);
        put(
            out,
            DiEvaluation {
                value: e.value,
                penalized: e.penalized as i32,
                solver_failure: e.solver_failure as i32,
            },
        )
    })
}

/// `ctx` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn di_context_free(ctx: *mut DiContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Calibrates the weights of all three stages around the reference
/// parameters from `samples` Latin-hypercube points each. Writes six values:
/// the pairs of stages 1, 2 and 3.
/// `reference` must be a live handle and `out` writable for six values.
#[no_mangle]
pub unsafe extern "C" fn di_calibrate_weights(
    reference: *const DiReference,
    samples: usize,
    seed: u64,
    out: *mut f64,
) -> DiStatus {
    guard(|| {
        let r = read(reference, "reference")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        if samples == 0 {
            return Err((DiStatus::InvalidArgument, "need at least one sample".into()));
        }
        let (set, _) = lib(calibrate_weights(r.0.clone(), &r.0.params, &ParamBounds::default(), samples, seed))?;
        std::ptr::copy_nonoverlapping(set.w.as_ptr(), out, 6);
        Ok(())
    })
}
