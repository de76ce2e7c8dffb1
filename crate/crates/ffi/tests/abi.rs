use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use crackdyn_ffi::*;

const CONFIG: &str = "[domain]\nh = 0.25\ndirichlet = bottom, top\n[crack]\npath = (0, 0.5), (1, 0.5)\nschedule = linear(0.25, 0.5)\n[material]\nv_lambda = 0.2\nv_mu = 0.3\n[data]\nu1_x = sin(pi*y)*x\n[time]\nT = 0.5\ndt = 0.025\n";

fn last_error() -> String {
    let p = cd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario(text: &str) -> (CdStatus, *mut CdScenario) {
    let c = CString::new(text).unwrap();
    let mut sc = ptr::null_mut();
    let st = unsafe { cd_scenario_from_config(c.as_ptr(), &mut sc) };
    (st, sc)
}

#[test]
fn solve_roundtrip() {
    let (st, sc) = scenario(CONFIG);
    assert_eq!(st, CdStatus::Ok);
    assert!(cd_last_error().is_null());
    unsafe {
        let (mut dt, mut t_end) = (0.0, 0.0);
        assert_eq!(cd_scenario_time(sc, &mut dt, &mut t_end), CdStatus::Ok);
        assert_eq!((dt, t_end), (0.025, 0.5));
        let (mut a0, mut k) = (0.0, 0.0);
        assert_eq!(cd_scenario_constants(sc, &mut a0, &mut k), CdStatus::Ok);
        assert!((a0 - 0.6).abs() < 1e-12 && k > 1.0);

        let mut mono = ptr::null_mut();
        let mut fp = ptr::null_mut();
        let mut iters = 0usize;
        assert_eq!(cd_solve_monolithic(sc, 0.0, &mut mono), CdStatus::Ok);
        assert_eq!(cd_solve_fixedpoint(sc, 0.0, 0.0, &mut fp, &mut iters), CdStatus::Ok);
        assert_eq!(cd_trajectory_len(mono), 21);
        assert!(iters >= 2);
        let mut d = -1.0;
        assert_eq!(cd_trajectory_distance(mono, fp, &mut d), CdStatus::Ok);
        assert!(d < 1e-8, "{d}");
        let mut node = [0.0; 4];
        assert_eq!(cd_trajectory_node(mono, 20, node.as_mut_ptr()), CdStatus::Ok);
        assert_eq!(node[0], 0.5);
        assert!(node[1] > 0.0 && node[3] > 0.0);
        cd_trajectory_free(fp);
        cd_trajectory_free(mono);
        cd_scenario_free(sc);
    }
}

#[test]
fn errors_are_reported() {
    let (st, sc) = scenario("[domain]\nh = 0.25\nbogus = 1\n");
    assert_eq!(st, CdStatus::Config);
    assert!(sc.is_null());
    let msg = last_error();
    assert!(msg.contains("bogus") && msg.contains("[crack]"), "{msg}");

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cd_scenario_from_config(ptr::null(), &mut out) }, CdStatus::NullPointer);
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { cd_solve_monolithic(ptr::null(), 0.1, &mut tr) }, CdStatus::NullPointer);

    let (_, sc) = scenario(CONFIG);
    unsafe {
        let mut tr = ptr::null_mut();
        assert_eq!(cd_solve_monolithic(sc, 0.03, &mut tr), CdStatus::Config);
        assert!(last_error().contains("divide"));
        assert_eq!(cd_solve_monolithic(sc, 0.0, &mut tr), CdStatus::Ok);
        let mut node = [0.0; 4];
        assert_eq!(cd_trajectory_node(tr, 21, node.as_mut_ptr()), CdStatus::Argument);
        assert_eq!(cd_trajectory_node(tr, 0, ptr::null_mut()), CdStatus::NullPointer);
        assert_eq!(cd_trajectory_len(ptr::null()), 0);
        cd_trajectory_free(tr);
        cd_scenario_free(sc);
        cd_scenario_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_is_rejected() {
    let bytes = CString::new(vec![0xffu8, 0xfe]).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { cd_scenario_from_config(bytes.as_ptr(), &mut sc) }, CdStatus::InvalidUtf8);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(cd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/crackdyn.h")).unwrap();
    for name in [
        "cd_version",
        "cd_last_error",
        "cd_scenario_from_config",
        "cd_scenario_free",
        "cd_scenario_time",
        "cd_scenario_constants",
        "cd_solve_monolithic",
        "cd_solve_fixedpoint",
        "cd_trajectory_free",
        "cd_trajectory_len",
        "cd_trajectory_node",
        "cd_trajectory_distance",
        "typedef struct CdScenario CdScenario",
        "CD_STATUS_PANIC = 7",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs the C smoke program against the static library when a
/// C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let Some(lib) = exe
        .ancestors()
        .map(|d| d.join("libcrackdyn_ffi.a"))
        .find(|p| p.exists())
    else {
        eprintln!("static library not found next to {}; skipping", exe.display());
        return;
    };
    let out = tempfile_path("crackdyn_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&out)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "C compilation failed"),
        Err(e) => {
            eprintln!("no C compiler ({e}); skipping");
            return;
        }
    }
    let run = Command::new(&out).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("expected error: node 1000 out of range"), "{stdout}");
    let _ = std::fs::remove_file(out);
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
