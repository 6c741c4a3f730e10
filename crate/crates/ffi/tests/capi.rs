use std::ffi::{CStr, CString};
use std::ptr;

use cfi_forge_ffi::*;

const TRIANGLE: [usize; 6] = [0, 1, 1, 2, 0, 2];

fn last_error() -> String {
    let p = cfi_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cfi_triangle(twisted: &[usize]) -> *mut CfiGraph {
    let mut g = ptr::null_mut();
    let st = unsafe { cfi_build_cfi(3, TRIANGLE.as_ptr(), 3, twisted.as_ptr(), twisted.len() / 2, &mut g) };
    assert_eq!(st, CfiStatus::Ok);
    g
}

#[test]
fn cfi_pair_values() {
    let g = cfi_triangle(&[]);
    let h = cfi_triangle(&[0, 1]);
    unsafe {
        assert_eq!(cfi_graph_order(g), 6);
        assert_eq!(cfi_graph_size(g), 6);
        let mut iso = true;
        assert_eq!(cfi_isomorphic(g, h, &mut iso), CfiStatus::Ok);
        assert!(!iso);
        let mut v = 0i64;
        assert_eq!(cfi_solve(CfiGame::Pebble, g, h, 2, &mut v), CfiStatus::Ok);
        assert_eq!(v, CFI_VALUE_INFINITE);
        assert_eq!(cfi_solve(CfiGame::Pebble, g, h, 3, &mut v), CfiStatus::Ok);
        assert!(v > 0);
        let mut x = ptr::null_mut();
        assert_eq!(cfi_twinned(g, &mut x), CfiStatus::Ok);
        assert_eq!(cfi_graph_order(x), 12);
        cfi_graph_free(x);
        cfi_graph_free(g);
        cfi_graph_free(h);
    }
    assert!(cfi_last_error().is_null());
}

#[test]
fn json_round_trip_and_dimacs() {
    let g = cfi_triangle(&[]);
    unsafe {
        let mut text = ptr::null_mut();
        assert_eq!(cfi_graph_to_json(g, &mut text), CfiStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(cfi_graph_from_json(text, &mut back), CfiStatus::Ok);
        let mut iso = false;
        assert_eq!(cfi_isomorphic(g, back, &mut iso), CfiStatus::Ok);
        assert!(iso);
        let mut cnf = ptr::null_mut();
        assert_eq!(cfi_iso_dimacs(g, back, &mut cnf), CfiStatus::Ok);
        let cnf_text = CStr::from_ptr(cnf).to_str().unwrap();
        assert!(cnf_text.lines().any(|l| l.starts_with("p cnf 36 ")));
        cfi_string_free(cnf);
        cfi_string_free(text);
        cfi_graph_free(back);
        cfi_graph_free(g);
    }
}

#[test]
fn errors_are_reported() {
    let mut g = ptr::null_mut();
    let edges = [0usize, 1, 1, 5];
    let st = unsafe { cfi_graph_new(2, ptr::null(), edges.as_ptr(), 2, &mut g) };
    assert_eq!(st, CfiStatus::InvalidArgument);
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let bad = CString::new("{not json").unwrap();
    assert_eq!(unsafe { cfi_graph_from_json(bad.as_ptr(), &mut g) }, CfiStatus::Malformed);

    let mut v = 0i64;
    assert_eq!(unsafe { cfi_solve(CfiGame::Pebble, ptr::null(), ptr::null(), 2, &mut v) }, CfiStatus::NullPointer);
    assert!(last_error().contains("null"));

    let dir = CString::new("unused").unwrap();
    assert_eq!(unsafe { cfi_generate(2, 1, 0, 3, 0, true, false, dir.as_ptr()) }, CfiStatus::InvalidArgument);
    assert_eq!(unsafe { cfi_generate(3, 1, 11, 0, 0, true, false, dir.as_ptr()) }, CfiStatus::ResourceCap);
}

#[test]
fn generate_writes_a_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = CString::new(tmp.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { cfi_generate(3, 1, 0, 3, 0, true, false, dir.as_ptr()) }, CfiStatus::Ok);
    assert!(tmp.path().join("manifest.json").exists());
    assert!(tmp.path().join("iso.cnf").exists());
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(cfi_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// The generated header compiles as C and as C++ when a compiler is present.
#[test]
fn header_compiles() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let include = root.join("include");
    let src = root.join("tests/c/smoke.c");
    for (cc, extra) in [("cc", &["-std=c99"][..]), ("c++", &["-x", "c++"][..])] {
        let out = std::process::Command::new(cc)
            .args(extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(&include)
            .arg(&src)
            .output();
        match out {
            Ok(o) => assert!(o.status.success(), "{cc}: {}", String::from_utf8_lossy(&o.stderr)),
            Err(_) => eprintln!("{cc} not found; skipped"),
        }
    }
}
