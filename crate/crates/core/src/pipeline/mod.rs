//! Orchestration behind the `cfi-forge` binary: parameter resolution, run
//! manifests, atomic artifact bundles, worker pool and exit codes.

pub mod commands;
pub mod criteria;
pub mod generate;
pub mod suite;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{find_coprimes, CylindricalGrid};

pub const TOOL: &str = "cfi-forge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CONFIG_ENV: &str = "CFI_FORGE_CONFIG";

/// Defaults shipped with the tool.
pub const DESK_CONFIG: &str = include_str!("../../config/desk.toml");

/// Base-grid vertex count above which `--huge` is required.
pub const HUGE_VERTICES: u128 = 20_000;

/// Process exit status used by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exit {
    Pass = 0,
    Violation = 1,
    InputError = 2,
    ResourceCap = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of_error(e: &Error) -> Exit {
        match e {
            Error::StateSpaceTooLarge { .. } | Error::TooLarge { .. } => Exit::ResourceCap,
            Error::Strategy(_) | Error::SatisfiableFormula => Exit::Violation,
            _ => Exit::InputError,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Dimacs,
}

/// Key/value configuration mirroring the command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub k: Option<usize>,
    pub t: Option<usize>,
    pub w: Option<u64>,
    pub desk_q: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub huge: Option<bool>,
    pub timings: Option<bool>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Malformed(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::parse(&fs::read_to_string(path)?)
    }

    /// Shipped defaults, overlaid by the file named in `CFI_FORGE_CONFIG` if set.
    pub fn from_env() -> Result<Config> {
        let base = Config::parse(DESK_CONFIG)?;
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Ok(base.overlay(Config::load(Path::new(&p))?)),
            _ => Ok(base),
        }
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: Config) -> Config {
        Config {
            k: top.k.or(self.k),
            t: top.t.or(self.t),
            w: top.w.or(self.w),
            desk_q: top.desk_q.or(self.desk_q),
            seed: top.seed.or(self.seed),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
            jobs: top.jobs.or(self.jobs),
            huge: top.huge.or(self.huge),
            timings: top.timings.or(self.timings),
        }
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1).max(1)
    }

    pub fn params(&self) -> Result<Params> {
        let k = self.k.ok_or_else(|| Error::Parameter("k is required".into()))?;
        let t = self.t.ok_or_else(|| Error::Parameter("t is required".into()))?;
        Params::new(k, t, self.w, self.desk_q, self.seed.unwrap_or(0))
    }
}

/// Resolved instance parameters. `w` is always filled in: when not given it is
/// the smallest value admitting `k` pairwise coprimes in `[⌈w/2⌉, w]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub k: usize,
    pub t: usize,
    pub w: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub desk_q: Option<u64>,
    pub seed: u64,
    #[serde(skip)]
    pub coprimes: Vec<u64>,
}

impl Params {
    pub fn new(k: usize, t: usize, w: Option<u64>, desk_q: Option<u64>, seed: u64) -> Result<Params> {
        if k < 3 {
            return Err(Error::Parameter(format!("k must be at least 3 (got {k})")));
        }
        if t < 1 || t >= k {
            return Err(Error::Parameter(format!("t must lie in [1, {}] (got {t})", k - 1)));
        }
        let (w, coprimes) = match w {
            Some(w) => (w, find_coprimes(w, k)?),
            None => {
                let w = (2..).find(|&w| find_coprimes(w, k).is_ok()).expect("coprimes exist for large w");
                (w, find_coprimes(w, k)?)
            }
        };
        Ok(Params { k, t, w, desk_q, seed, coprimes })
    }

    /// Warnings for parameters outside the hypotheses of the lower bound.
    pub fn warnings(&self) -> Vec<String> {
        let bound = 2.0 * self.k as f64 / 5.0 - 1.0;
        let mut out = Vec::new();
        if self.t as f64 > bound {
            out.push(format!("t={} exceeds 2k/5-1={bound:.1}; the robber's guarantees do not apply", self.t));
        }
        out
    }

    /// Number of base-grid vertices `k·J`.
    pub fn grid_vertices(&self) -> u128 {
        let cols = match self.desk_q {
            Some(q) => 4 * self.k as u128 * q as u128,
            None => 4 * self.k as u128 * self.coprimes.iter().map(|&p| p as u128).product::<u128>(),
        };
        cols * self.k as u128
    }

    pub fn estimate(&self) -> SizeEstimate {
        let base = self.grid_vertices();
        SizeEstimate { base_vertices: base, cfi_vertices: 8 * base, huge: base > HUGE_VERTICES }
    }

    pub fn grid(&self) -> Result<CylindricalGrid> {
        match self.desk_q {
            Some(q) => CylindricalGrid::desk(self.k, &self.coprimes, q),
            None => CylindricalGrid::new(self.k, &self.coprimes),
        }
    }
}

/// Upper estimates printed before building a full-size instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SizeEstimate {
    pub base_vertices: u128,
    pub cfi_vertices: u128,
    pub huge: bool,
}

impl std::fmt::Display for SizeEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "base grid {} vertices, CFI graph up to {} vertices", self.base_vertices, self.cfi_vertices)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance record written next to every artifact set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    /// Wall-clock milliseconds per phase; only recorded on request since it
    /// breaks byte-identical reruns.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings_ms: Option<BTreeMap<String, u64>>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            parameters,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            warnings: Vec::new(),
            timings_ms: None,
        }
    }

    pub fn input(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.insert(name.into(), sha256_hex(bytes));
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Artifacts collected in memory and written atomically, each file via a
/// temporary sibling and a rename, the manifest last.
#[derive(Debug, Default)]
pub struct Bundle {
    files: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), bytes.into());
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    /// Moves every file of `other` under `prefix/`.
    pub fn nest(&mut self, prefix: &str, other: Bundle) {
        for (name, bytes) in other.files {
            self.files.insert(format!("{prefix}/{name}"), bytes);
        }
    }

    /// Fills the manifest's output hashes and adds it to the bundle.
    pub fn seal(&mut self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.outputs = self.files.iter().map(|(n, b)| (n.clone(), sha256_hex(b))).collect();
        self.add_json(MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut names: Vec<&String> = self.files.keys().filter(|n| n.as_str() != MANIFEST_FILE).collect();
        if self.files.contains_key(MANIFEST_FILE) {
            names.push(self.files.keys().find(|n| n.as_str() == MANIFEST_FILE).expect("present"));
        }
        for name in names {
            write_atomic(&dir.join(name), &self.files[name])?;
        }
        Ok(())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let file = path.file_name().ok_or_else(|| Error::Parameter(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", file.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Maps `f` over `items` on up to `jobs` threads; results keep input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_resolves() {
        let p = Config::parse(DESK_CONFIG).unwrap().params().unwrap();
        assert_eq!((p.k, p.t, p.w, p.desk_q), (3, 1, 5, Some(3)));
        assert_eq!(p.coprimes, vec![3, 4, 5]);
        assert!(!p.estimate().huge);
        assert_eq!(p.warnings().len(), 1);
    }

    #[test]
    fn overlay_prefers_top() {
        let base = Config::parse("k = 3\nt = 1\nseed = 4").unwrap();
        let top = Config { t: Some(2), ..Config::default() };
        let c = base.overlay(top);
        assert_eq!((c.k, c.t, c.seed), (Some(3), Some(2), Some(4)));
        assert!(Config::parse("bogus = 1").is_err());
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(Params::new(2, 1, None, Some(3), 0), Err(Error::Parameter(_))));
        assert!(matches!(Params::new(3, 3, None, Some(3), 0), Err(Error::Parameter(_))));
        let e = Params::new(3, 1, Some(4), Some(3), 0).unwrap_err();
        assert!(matches!(e, Error::NoCoprimeSet { .. }));
        assert_eq!(Exit::of_error(&e), Exit::InputError);
        assert!(Params::new(3, 1, Some(40), None, 0).unwrap().estimate().huge);
    }

    #[test]
    fn par_map_keeps_order() {
        let xs: Vec<u64> = (0..50).collect();
        assert_eq!(par_map(&xs, 4, |x| x * x), xs.iter().map(|x| x * x).collect::<Vec<_>>());
    }

    #[test]
    fn bundle_writes_manifest_with_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = Bundle::new();
        b.add("a.txt", "hello");
        let m = b.seal(RunManifest::new("test", serde_json::json!({}))).unwrap();
        b.write(dir.path()).unwrap();
        assert_eq!(m.outputs["a.txt"], sha256_hex(b"hello"));
        let back: RunManifest = serde_json::from_slice(&fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
