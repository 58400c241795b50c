//! Exercises the C ABI the way a foreign binding would: through the extern
//! functions, raw pointers, and status codes.

use std::ffi::{CStr, CString};
use std::ptr;

use smartfill_ffi::*;

fn cstr(text: &str) -> CString {
    CString::new(text).unwrap()
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(sf_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

const INSTANCE_JSON: &str = r#"{
    "bandwidth": 10.0,
    "jobs": [
        {"size": 5.0, "weight": 0.2},
        {"size": 3.0, "weight": 0.4},
        {"size": 1.0, "weight": 1.0}
    ],
    "speedup": {"family": "log", "a": 1.0, "p": 1.0}
}"#;

#[test]
fn speedup_lifecycle_and_math() {
    unsafe {
        let json = cstr(r#"{"family": "power", "a": 1.0, "p": 0.5}"#);
        let mut handle: *mut SfSpeedup = ptr::null_mut();
        assert_eq!(
            sf_speedup_from_json(json.as_ptr(), 10.0, &mut handle),
            SfStatus::Ok
        );
        assert!(!handle.is_null());

        let mut value = 0.0;
        assert_eq!(sf_speedup_evaluate(handle, 4.0, &mut value), SfStatus::Ok);
        assert!((value - 2.0).abs() < 1e-12);

        assert_eq!(sf_speedup_derivative(handle, 0.0, &mut value), SfStatus::Ok);
        assert!(value.is_infinite());

        assert_eq!(
            sf_speedup_derivative_inverse(handle, 0.25, &mut value),
            SfStatus::Ok
        );
        assert!((value - 4.0).abs() < 1e-9);

        assert_eq!(
            sf_speedup_evaluate(handle, -1.0, &mut value),
            SfStatus::OutOfRange
        );
        assert!(!last_error().is_empty());

        let mut a = 0.0;
        let mut p = 0.0;
        assert_eq!(sf_fit_power(handle, &mut a, &mut p), SfStatus::Ok);
        assert!((a - 1.0).abs() < 1e-6 && (p - 0.5).abs() < 1e-6);

        sf_speedup_free(handle);
    }
}

#[test]
fn solve_and_read_back_schedule() {
    unsafe {
        let json = cstr(INSTANCE_JSON);
        let mut instance: *mut SfInstance = ptr::null_mut();
        assert_eq!(
            sf_instance_from_json(json.as_ptr(), &mut instance),
            SfStatus::Ok
        );
        assert_eq!(sf_instance_job_count(instance), 3);

        let mut schedule: *mut SfSchedule = ptr::null_mut();
        assert_eq!(
            sf_solve(instance, SfPolicy::Smartfill, &mut schedule),
            SfStatus::Ok
        );
        let m = sf_schedule_job_count(schedule);
        assert_eq!(m, 3);

        let mut objective = 0.0;
        assert_eq!(
            sf_schedule_objective(schedule, &mut objective),
            SfStatus::Ok
        );
        assert!(objective > 0.0);

        let mut times = vec![0.0; m];
        assert_eq!(
            sf_schedule_completion_times(schedule, times.as_mut_ptr(), m),
            SfStatus::Ok
        );
        assert!(times[0] > times[1] && times[1] > times[2]);

        let mut durations = vec![0.0; m];
        assert_eq!(
            sf_schedule_durations(schedule, durations.as_mut_ptr(), m),
            SfStatus::Ok
        );
        assert!((durations.iter().sum::<f64>() - times[0]).abs() < 1e-9);

        // Objective equals the weighted completion times read back out.
        let weights = [0.2, 0.4, 1.0];
        let recomputed: f64 = weights.iter().zip(&times).map(|(w, t)| w * t).sum();
        assert!((objective - recomputed).abs() < 1e-9);

        let mut rate = 0.0;
        assert_eq!(
            sf_schedule_allocation(schedule, 0, 0, &mut rate),
            SfStatus::Ok
        );
        assert!((rate - 10.0).abs() < 1e-12);
        assert_eq!(
            sf_schedule_allocation(schedule, 2, 0, &mut rate),
            SfStatus::Ok
        );
        assert_eq!(rate, 0.0);
        assert_eq!(
            sf_schedule_allocation(schedule, 3, 0, &mut rate),
            SfStatus::OutOfRange
        );

        let mut coefficients = vec![0.0; m];
        assert_eq!(
            sf_schedule_coefficients(schedule, coefficients.as_mut_ptr(), m),
            SfStatus::Ok
        );
        assert!(coefficients[0] < coefficients[1] && coefficients[1] < coefficients[2]);

        let mut constants = vec![0.0; m];
        assert_eq!(
            sf_schedule_cdr_constants(schedule, constants.as_mut_ptr(), m),
            SfStatus::Ok
        );
        assert_eq!(constants[0], 1.0);

        sf_schedule_free(schedule);
        sf_instance_free(instance);
    }
}

#[test]
fn policies_differ_and_baselines_lack_coefficients() {
    unsafe {
        let json = cstr(INSTANCE_JSON);
        let mut instance: *mut SfInstance = ptr::null_mut();
        assert_eq!(
            sf_instance_from_json(json.as_ptr(), &mut instance),
            SfStatus::Ok
        );

        let mut optimal: *mut SfSchedule = ptr::null_mut();
        let mut equal: *mut SfSchedule = ptr::null_mut();
        assert_eq!(
            sf_solve(instance, SfPolicy::Smartfill, &mut optimal),
            SfStatus::Ok
        );
        assert_eq!(
            sf_solve(instance, SfPolicy::EqualSplit, &mut equal),
            SfStatus::Ok
        );

        let mut j_opt = 0.0;
        let mut j_eq = 0.0;
        sf_schedule_objective(optimal, &mut j_opt);
        sf_schedule_objective(equal, &mut j_eq);
        assert!(j_opt <= j_eq);

        let mut buf = vec![0.0; 3];
        assert_eq!(
            sf_schedule_coefficients(equal, buf.as_mut_ptr(), 3),
            SfStatus::Unavailable
        );

        sf_schedule_free(optimal);
        sf_schedule_free(equal);
        sf_instance_free(instance);
    }
}

#[test]
fn instance_from_arrays() {
    unsafe {
        let sizes = [4.0, 2.0];
        let weights = [1.0, 1.0];
        let speedup = cstr(r#"{"family": "power", "a": 1.0, "p": 0.5}"#);
        let mut instance: *mut SfInstance = ptr::null_mut();
        assert_eq!(
            sf_instance_new(
                4.0,
                sizes.as_ptr(),
                weights.as_ptr(),
                2,
                speedup.as_ptr(),
                &mut instance
            ),
            SfStatus::Ok
        );
        let mut schedule: *mut SfSchedule = ptr::null_mut();
        assert_eq!(
            sf_solve(instance, SfPolicy::Hesrpt, &mut schedule),
            SfStatus::Ok
        );
        let mut objective = 0.0;
        sf_schedule_objective(schedule, &mut objective);
        // Analytic optimum for this instance.
        assert!((objective - (2.0 + 3.0f64.sqrt())).abs() < 1e-8);
        sf_schedule_free(schedule);
        sf_instance_free(instance);
    }
}

#[test]
fn error_paths_set_messages() {
    unsafe {
        let mut handle: *mut SfSpeedup = ptr::null_mut();
        assert_eq!(
            sf_speedup_from_json(ptr::null(), 10.0, &mut handle),
            SfStatus::NullPointer
        );

        let bad_json = cstr("{not json");
        assert_eq!(
            sf_speedup_from_json(bad_json.as_ptr(), 10.0, &mut handle),
            SfStatus::ParseError
        );
        assert!(!last_error().is_empty());

        let convex = cstr(r#"{"family": "power", "a": 1.0, "p": 1.5}"#);
        assert_eq!(
            sf_speedup_from_json(convex.as_ptr(), 10.0, &mut handle),
            SfStatus::InvalidInput
        );

        let mut instance: *mut SfInstance = ptr::null_mut();
        let malformed = cstr("[1, 2");
        assert_eq!(
            sf_instance_from_json(malformed.as_ptr(), &mut instance),
            SfStatus::ParseError
        );

        let invalid = cstr(
            r#"{"bandwidth": -1.0, "jobs": [{"size": 1.0, "weight": 1.0}],
                               "speedup": {"family": "log", "a": 1.0, "p": 1.0}}"#,
        );
        assert_eq!(
            sf_instance_from_json(invalid.as_ptr(), &mut instance),
            SfStatus::InvalidInput
        );

        // Non-monotone parabola rejected by axiom sampling at array level.
        let sizes = [1.0];
        let weights = [1.0];
        let parabola = cstr(r#"{"family": "inverted_shift", "a": 1.0, "z": 1.0, "p": 2.0}"#);
        assert_eq!(
            sf_instance_new(
                2.0,
                sizes.as_ptr(),
                weights.as_ptr(),
                1,
                parabola.as_ptr(),
                &mut instance
            ),
            SfStatus::InvalidInput
        );

        assert!(sf_instance_job_count(ptr::null()) == 0);
        assert!(!sf_version().is_null());
    }
}
