//! The C interface exercised from Rust, plus a C program compiled against
//! the generated header.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use travelwave_ffi::*;

const CONFIG: &str = r#"
[model]
kind = "nls"
mu = 6.3

[grid]
half_length = 16.0
points = 256

[solver]
stepper = "petviashvili"

[stopping]
tol = 1e-12
max_iters = 500
timing = false
"#;

fn experiment(text: &str) -> *mut TwExperiment {
    let c = CString::new(text).unwrap();
    let mut exp = ptr::null_mut();
    let status = unsafe { tw_experiment_from_toml(c.as_ptr(), &mut exp) };
    assert_eq!(status, TwStatus::Ok, "{}", last_error());
    exp
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(tw_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn solve_and_inspect() {
    let exp = experiment(CONFIG);
    let mut dim = 0;
    assert_eq!(unsafe { tw_experiment_dim(exp, &mut dim) }, TwStatus::Ok);
    assert_eq!(dim, 256);

    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { tw_experiment_solve(exp, &mut sol) }, TwStatus::Ok);
    let mut summary = TwSummary {
        iterations: 0,
        final_res: 0.0,
        reason: TwTermination::Diverged,
        ill_conditioned: 1,
    };
    assert_eq!(unsafe { tw_solution_summary(sol, &mut summary) }, TwStatus::Ok);
    assert_eq!(summary.reason, TwTermination::Converged);
    assert_eq!(summary.ill_conditioned, 0);
    assert!(summary.final_res < 1e-12);

    let mut rows = 0;
    assert_eq!(unsafe { tw_solution_row_count(sol, &mut rows) }, TwStatus::Ok);
    assert_eq!(rows, summary.iterations + 1);
    let mut row = TwTraceRow {
        iter: 0,
        res: 0.0,
        diff: 0.0,
        sfe: 0.0,
        seconds: 0.0,
    };
    assert_eq!(unsafe { tw_solution_row(sol, rows - 1, &mut row) }, TwStatus::Ok);
    assert_eq!(row.iter, summary.iterations);
    assert_eq!(row.res, summary.final_res);
    assert_eq!(
        unsafe { tw_solution_row(sol, rows, &mut row) },
        TwStatus::IndexOutOfRange
    );
    assert!(last_error().contains("row"));

    let mut state = vec![0.0; dim];
    assert_eq!(unsafe { tw_solution_state(sol, state.as_mut_ptr(), dim) }, TwStatus::Ok);
    let mut res = 0.0;
    assert_eq!(
        unsafe { tw_experiment_residual(exp, state.as_ptr(), dim, &mut res) },
        TwStatus::Ok
    );
    assert!((res - summary.final_res).abs() < 1e-15);

    let (mut re, mut im) = ([0.0; 2], [0.0; 2]);
    let status = unsafe {
        tw_experiment_spectrum(
            exp,
            state.as_ptr(),
            dim,
            TwOperator::Classical,
            2,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
        )
    };
    assert_eq!(status, TwStatus::Ok, "{}", last_error());
    assert!((re[0] - 3.0).abs() < 1e-6 && im[0] == 0.0);
    let status = unsafe {
        tw_experiment_spectrum(
            exp,
            state.as_ptr(),
            dim,
            TwOperator::Stabilized,
            2,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
        )
    };
    assert_eq!(status, TwStatus::Ok);
    assert!((re[0] - 0.6099).abs() < 1e-3);

    // Restarting from the solution converges at once.
    let mut again = ptr::null_mut();
    assert_eq!(
        unsafe { tw_experiment_solve_from(exp, state.as_ptr(), dim, &mut again) },
        TwStatus::Ok
    );
    assert_eq!(unsafe { tw_solution_summary(again, &mut summary) }, TwStatus::Ok);
    assert_eq!(summary.iterations, 0);

    let mut guess = vec![0.0; dim];
    assert_eq!(
        unsafe { tw_experiment_initial_guess(exp, guess.as_mut_ptr(), dim) },
        TwStatus::Ok
    );
    assert!((guess[dim / 2] - 1.0).abs() < 1e-12);

    unsafe {
        tw_solution_free(again);
        tw_solution_free(sol);
        tw_experiment_free(exp);
    }
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("[model]\nkind = \"nls\"\n").unwrap();
    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { tw_experiment_from_toml(bad.as_ptr(), &mut exp) },
        TwStatus::Config
    );
    assert!(exp.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(
        unsafe { tw_experiment_from_toml(ptr::null(), &mut exp) },
        TwStatus::NullPointer
    );
    let grid = CONFIG.replace("points = 256", "points = 100");
    let c = CString::new(grid).unwrap();
    assert_eq!(
        unsafe { tw_experiment_from_toml(c.as_ptr(), &mut exp) },
        TwStatus::Config
    );

    let exp = experiment(CONFIG);
    let short = [0.0; 3];
    let mut res = 0.0;
    assert_eq!(
        unsafe { tw_experiment_residual(exp, short.as_ptr(), short.len(), &mut res) },
        TwStatus::LengthMismatch
    );
    assert_eq!(
        unsafe { tw_experiment_dim(exp, ptr::null_mut()) },
        TwStatus::NullPointer
    );
    assert_eq!(unsafe { tw_experiment_dim(ptr::null(), &mut 0) }, TwStatus::NullPointer);
    unsafe {
        tw_experiment_free(exp);
        tw_experiment_free(ptr::null_mut());
        tw_solution_free(ptr::null_mut());
    }
    let version = unsafe { CStr::from_ptr(tw_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

/// Directory holding the built shared library (`target/<profile>`).
fn library_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = library_dir();
    if !lib_dir.join("libtravelwave_ffi.so").exists() && !lib_dir.join("libtravelwave_ffi.dylib").exists() {
        panic!("shared library not found in {}", lib_dir.display());
    }
    let out = tempfile_path("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-ltravelwave_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&out)
        .status()
        .expect("C compiler runs");
    assert!(status.success(), "compiling the C smoke test failed");
    let run = Command::new(&out)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .env("DYLD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("iterations"));
    let _ = std::fs::remove_file(out);
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("travelwave-{stem}-{}", std::process::id()))
}
