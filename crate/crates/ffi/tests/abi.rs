use std::ffi::CString;
use std::process::Command;
use std::ptr;

use damage_ident_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { di_last_error(buf.as_mut_ptr() as *mut _, buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

fn reference_params() -> DiParams {
    let mut p = DiParams {
        e: 0.0,
        nu: 0.0,
        sigf_bar: 0.0,
        k_bar: 0.0,
        sigf_bbar: 0.0,
        beta_bbar: 0.0,
    };
    assert_eq!(unsafe { di_params_reference(&mut p) }, DiStatus::Ok);
    p
}

#[test]
fn reference_parameters() {
    let p = reference_params();
    assert_eq!((p.e, p.nu, p.sigf_bar, p.k_bar, p.sigf_bbar, p.beta_bbar), (38000.0, 0.1, 2.2, 1000.0, 2.35, 23.5));
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(di_params_reference(ptr::null_mut()), DiStatus::NullPointer);
        assert!(last_error().contains("null"));
        let mut curve = ptr::null_mut();
        assert_eq!(di_simulate_bending(ptr::null(), 0.01, &mut curve), DiStatus::NullPointer);
        assert!(curve.is_null());
        assert_eq!(di_curve_len(ptr::null()), 0);
        di_curve_free(ptr::null_mut());
        di_reference_free(ptr::null_mut());
        di_context_free(ptr::null_mut());
        assert_eq!(di_last_error(ptr::null_mut(), 0), "params is null".len());
    }
}

#[test]
fn invalid_arguments_are_reported() {
    let mut p = reference_params();
    p.nu = 0.7;
    let mut curve = ptr::null_mut();
    unsafe {
        assert_eq!(di_simulate_tensile(&p, 0.05, &mut curve), DiStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        let p = reference_params();
        assert_eq!(di_simulate_tensile(&p, -1.0, &mut curve), DiStatus::InvalidArgument);
        let missing = CString::new("/nonexistent/reference.json").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(di_reference_load(missing.as_ptr(), &mut r), DiStatus::Io);
    }
}

#[test]
fn elastic_bending_curve() {
    let p = reference_params();
    let mut curve = ptr::null_mut();
    unsafe {
        assert_eq!(di_simulate_bending(&p, 0.005, &mut curve), DiStatus::Ok);
        assert_eq!(last_error(), "");
        let n = di_curve_len(curve);
        assert_eq!(n, 3);
        let mut pt = DiCurvePoint {
            u: -1.0,
            load: 0.0,
            delta_l: 0.0,
            crack_open: 0.0,
        };
        assert_eq!(di_curve_point(curve, n - 1, &mut pt), DiStatus::Ok);
        assert!((pt.u - 0.005).abs() < 1e-15 && pt.load > 0.0);
        assert_eq!(di_curve_point(curve, n, &mut pt), DiStatus::InvalidArgument);
        di_curve_free(curve);
    }
}

#[test]
fn stage_objective_vanishes_at_the_reference() {
    let p = reference_params();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(di_reference_generate(&p, &mut r), DiStatus::Ok);
        let mut curve = ptr::null_mut();
        assert_eq!(di_reference_curve(r, &mut curve), DiStatus::Ok);
        assert!(di_curve_len(curve) > 10);
        di_curve_free(curve);

        let w = [1.0, 1.0];
        let mut ctx = ptr::null_mut();
        assert_eq!(di_context_new(r, 4, &p, w.as_ptr(), &mut ctx), DiStatus::InvalidArgument);
        assert_eq!(di_context_new(r, 1, &p, w.as_ptr(), &mut ctx), DiStatus::Ok);
        let mut ev = DiEvaluation {
            value: -1.0,
            penalized: 1,
            solver_failure: 1,
        };
        assert_eq!(di_context_evaluate(ctx, p.e, p.nu, &mut ev), DiStatus::Ok);
        assert_eq!((ev.value, ev.penalized, ev.solver_failure), (0.0, 0, 0));
        assert_eq!(di_context_evaluate(ctx, 40000.0, 0.2, &mut ev), DiStatus::Ok);
        assert!(ev.value > 0.0);
        di_context_free(ctx);
        di_reference_free(r);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/damage_ident.h");
    let src = format!("#include \"{header}\"\nint main(void) {{ DiParams p; return di_params_reference(&p) == DI_STATUS_OK ? 0 : 1; }}\n");
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("probe.c");
    std::fs::write(&file, src).unwrap();
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&file).output() else {
        eprintln!("no C compiler; header check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
