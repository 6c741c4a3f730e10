use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn forge(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cfi-forge"));
    cmd.args(args).env_remove("CFI_FORGE_CONFIG");
    if let Some(c) = config {
        cmd.env("CFI_FORGE_CONFIG", c);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = vec![];
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generate_verify_and_tamper() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = forge(&["generate", "--format", "dimacs", "--out", a.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("base grid 108 vertices"));
    let o = forge(&["generate", "--format", "dimacs", "--jobs", "4", "--out", b.to_str().unwrap()], None);
    assert_eq!(code(&o), 0);
    assert_eq!(read_tree(&a), read_tree(&b));

    let o = forge(&["verify", a.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let cnf = a.join("iso.cnf");
    let mut text = fs::read_to_string(&cnf).unwrap();
    text.push_str("1 0\n");
    fs::write(&cnf, text).unwrap();
    let o = forge(&["verify", a.to_str().unwrap()], None);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL hash"));
}

#[test]
fn play_then_verify_transcript() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("play");
    let o = forge(&["play", "--mode", "blocking", "--rounds", "3", "--out", dir.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let tr = dir.join("transcript.json");
    assert_eq!(code(&forge(&["verify", tr.to_str().unwrap()], None)), 0);
    let text = fs::read_to_string(&tr).unwrap().replacen("\"blocking\": true", "\"blocking\": false", 1);
    fs::write(&tr, text).unwrap();
    assert_eq!(code(&forge(&["verify", tr.to_str().unwrap()], None)), 1);
}

#[test]
fn solve_reports_json() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g.json");
    let h = tmp.path().join("h.json");
    // two triangles against a hexagon
    fs::write(&g, r#"{"vertices":[{"id":0,"color":0},{"id":1,"color":0},{"id":2,"color":0},{"id":3,"color":0},{"id":4,"color":0},{"id":5,"color":0}],"edges":[[0,1],[1,2],[0,2],[3,4],[4,5],[3,5]]}"#).unwrap();
    fs::write(&h, r#"{"vertices":[{"id":0,"color":0},{"id":1,"color":0},{"id":2,"color":0},{"id":3,"color":0},{"id":4,"color":0},{"id":5,"color":0}],"edges":[[0,1],[1,2],[2,3],[3,4],[4,5],[0,5]]}"#).unwrap();
    let (gs, hs) = (g.to_str().unwrap(), h.to_str().unwrap());
    let o = forge(&["solve", "--game", "pebble", "--g", gs, "--h", hs, "--k", "2"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["value"], "inf");
    let o = forge(&["solve", "--game", "pebble-search", "--g", gs, "--h", hs, "--k", "3"], None);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["value"].is_u64());
}

#[test]
fn exit_codes_for_bad_input_and_size_guard() {
    assert_eq!(code(&forge(&["generate", "--k", "2"], None)), 2);
    assert_eq!(code(&forge(&["generate", "--w", "4"], None)), 2);
    assert_eq!(code(&forge(&["generate", "--w", "11"], None)), 3);
    assert_eq!(code(&forge(&["solve", "--game", "pebble", "--g", "/nonexistent", "--h", "/nonexistent", "--k", "1"], None)), 2);
    assert_eq!(code(&forge(&["frobnicate"], None)), 2);
}

#[test]
fn config_file_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    let out = tmp.path().join("out");
    fs::write(&cfg, format!("desk_q = 4\nformat = \"json\"\nout = {:?}\n", out.to_str().unwrap())).unwrap();
    let o = forge(&["generate"], Some(&cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("base grid 144 vertices"));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["desk_q"], 4);
    assert_eq!(manifest["parameters"]["format"], "json");

    fs::write(&cfg, "colour = 3\n").unwrap();
    assert_eq!(code(&forge(&["generate"], Some(&cfg))), 2);
}
