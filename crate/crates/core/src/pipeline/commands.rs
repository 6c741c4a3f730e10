//! `solve`, `play` and `verify`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::generate::{cmd_generate, Check};
use super::{sha256_hex, Bundle, Format, Params, RunManifest, MANIFEST_FILE};
use crate::cops::{play_blocking, play_compressed, scripted_robber, verify_transcript, Arena, GreedyCops, Transcript};
use crate::error::{Error, Result};
use crate::games::blocking::{BlockingPosition, BlockingSolver};
use crate::games::pebble::{pebble_value_search, PebblePosition, PebbleSolver};
use crate::games::prover_delayer::{min_refutation_size, prover_delayer_value, PdConfig};
use crate::games::{SolverConfig, Value, DEFAULT_POSITION_CAP};
use crate::graph::{ColoredGraph, GraphDocument};
use crate::grid::build_equiv_t;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Game {
    /// k-pebble game, fixed-point solver.
    Pebble,
    /// k-pebble game, memoized game-tree search.
    PebbleSearch,
    /// Pebble game with blocking.
    Blocking,
    /// k-narrow Prover-Delayer game on ISO(G, H).
    ProverDelayer,
    /// Smallest tree-like refutation of ISO(G, H) of width at most k.
    Refutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceId {
    pub g_sha256: String,
    pub h_sha256: String,
    pub n_g: usize,
    pub n_h: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub instance: InstanceId,
    pub game: Game,
    pub k: usize,
    /// Rounds (or Delayer points) for game solvers; refutation size for `Refutation`.
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<serde_json::Value>,
    pub variant: String,
    pub nodes: usize,
    /// Present when a round bound was asked for: does Spoiler win within it?
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub within: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<u64>,
}

/// Largest strategy tree embedded in a report.
pub const CERTIFICATE_NODES: usize = 20_000;

pub fn read_graph(path: &Path) -> Result<(ColoredGraph, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let doc: GraphDocument = serde_json::from_slice(&bytes)?;
    Ok((doc.to_graph()?, bytes))
}

pub fn cmd_solve(
    game: Game,
    g: &ColoredGraph,
    h: &ColoredGraph,
    k: usize,
    r: Option<u32>,
    timings: bool,
) -> Result<SolverReport> {
    let clock = Instant::now();
    let doc_hash = |x: &ColoredGraph| sha256_hex(&serde_json::to_vec(&GraphDocument::from_graph(x)).expect("json"));
    let instance = InstanceId { g_sha256: doc_hash(g), h_sha256: doc_hash(h), n_g: g.order(), n_h: h.order() };
    let cfg = SolverConfig::default();
    let (value, nodes, certificate, variant) = match game {
        Game::Pebble => {
            let start = PebblePosition::empty(k);
            let s = PebbleSolver::solve(g, h, k, &start, cfg)?;
            let cert = s.certificate(&start, CERTIFICATE_NODES)?.map(serde_json::to_value).transpose()?;
            (s.value(), s.nodes(), cert, "fixed-point")
        }
        Game::PebbleSearch => {
            let out = pebble_value_search(g, h, k, &PebblePosition::empty(k), DEFAULT_POSITION_CAP)?;
            (out.value, out.nodes, None, "game-tree")
        }
        Game::Blocking => {
            let s = BlockingSolver::solve(g, h, k, &BlockingPosition::empty(k), cfg)?;
            (s.value(), s.nodes(), None, "round-indexed fixed-point")
        }
        Game::ProverDelayer => {
            let out = prover_delayer_value(g, h, k, &BTreeMap::new(), PdConfig::default())?;
            (out.value, out.states, None, "value iteration, same-color queries")
        }
        Game::Refutation => {
            let out = min_refutation_size(g, h, k, PdConfig::default())?;
            let v = out.size.map_or(Value::Infinite, |s| Value::Finite(s.min(u32::MAX as u64) as u32));
            (v, out.states, None, "exhaustive tree-like, width k")
        }
    };
    let within = r.map(|r| value <= Value::Finite(r));
    let wall_ms = timings.then(|| clock.elapsed().as_millis() as u64);
    Ok(SolverReport { instance, game, k, value, certificate, variant: variant.into(), nodes, within, wall_ms })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlayMode {
    Compressed,
    Blocking,
}

/// A match between the scripted robber and greedy cops on the grid of `params`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSpec {
    pub mode: PlayMode,
    /// Pieces (cops plus roadblocks) available to the cops.
    pub pieces: usize,
    pub rounds: u32,
}

pub fn cmd_play(params: &Params, spec: &MatchSpec) -> Result<(Transcript, Bundle)> {
    let grid = params.grid()?;
    let rc = build_equiv_t(&grid, params.t)?;
    let arena = Arena::new(grid.base(), &rc.eq)?;
    let robber = scripted_robber(&grid, &rc, params.t)?;
    let tr = match spec.mode {
        PlayMode::Compressed => play_compressed(&arena, spec.pieces, &mut GreedyCops::new(spec.pieces, false), &robber, spec.rounds)?,
        PlayMode::Blocking => play_blocking(&arena, spec.pieces, &mut GreedyCops::new(spec.pieces, true), &robber, spec.rounds)?,
    };
    let mut bundle = Bundle::new();
    bundle.add("transcript.json", tr.to_json()? + "\n");
    let mut parameters = serde_json::to_value(params)?;
    parameters["match"] = serde_json::to_value(spec)?;
    let mut manifest = RunManifest::new("play", parameters);
    manifest.warnings = params.warnings();
    bundle.seal(manifest)?;
    Ok((tr, bundle))
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub target: PathBuf,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

/// Verifies a transcript file, or every manifest and transcript under a
/// bundle directory. Generate manifests are additionally rerun and compared.
pub fn cmd_verify(target: &Path) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if target.is_dir() {
        let mut manifests = Vec::new();
        let mut transcripts = Vec::new();
        walk(target, &mut |p| match p.file_name().and_then(|n| n.to_str()) {
            Some(MANIFEST_FILE) => manifests.push(p.to_path_buf()),
            Some(n) if n.starts_with("transcript") && n.ends_with(".json") => transcripts.push(p.to_path_buf()),
            _ => {}
        })?;
        if manifests.is_empty() {
            return Err(Error::Malformed(format!("no {MANIFEST_FILE} under {}", target.display())));
        }
        for m in &manifests {
            checks.extend(verify_manifest(m)?);
        }
        for t in &transcripts {
            checks.push(verify_transcript_file(t)?);
        }
    } else {
        checks.push(verify_transcript_file(target)?);
    }
    Ok(VerifyReport { target: target.to_path_buf(), checks })
}

fn walk(dir: &Path, f: &mut dyn FnMut(&Path)) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            walk(&p, f)?;
        } else {
            f(&p);
        }
    }
    Ok(())
}

fn verify_transcript_file(path: &Path) -> Result<Check> {
    let text = fs::read_to_string(path)?;
    let name = format!("transcript {}", path.display());
    Ok(match Transcript::from_json(&text).and_then(|t| verify_transcript(&t)) {
        Ok(()) => Check::new(&name, true, "replayed"),
        Err(e) => Check::new(&name, false, e.to_string()),
    })
}

fn verify_manifest(path: &Path) -> Result<Vec<Check>> {
    let manifest: RunManifest = serde_json::from_slice(&fs::read(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut checks = Vec::new();
    for (name, hash) in &manifest.outputs {
        let check_name = format!("hash {}", dir.join(name).display());
        checks.push(match fs::read(dir.join(name)) {
            Ok(bytes) if &sha256_hex(&bytes) == hash => Check::new(&check_name, true, ""),
            Ok(_) => Check::new(&check_name, false, "content differs from the manifest"),
            Err(e) => Check::new(&check_name, false, e.to_string()),
        });
    }
    if manifest.command == "generate" {
        checks.push(rerun_generate(&manifest, dir)?);
    }
    Ok(checks)
}

fn rerun_generate(manifest: &RunManifest, dir: &Path) -> Result<Check> {
    #[derive(Deserialize)]
    struct P {
        k: usize,
        t: usize,
        w: u64,
        desk_q: Option<u64>,
        seed: u64,
        format: Format,
        #[serde(default)]
        huge: bool,
    }
    let p: P = serde_json::from_value(manifest.parameters.clone())?;
    let params = Params::new(p.k, p.t, Some(p.w), p.desk_q, p.seed)?;
    let again = cmd_generate(&params, p.format, p.huge)?;
    let name = format!("rerun generate {}", dir.display());
    Ok(if again.manifest.outputs == manifest.outputs {
        Check::new(&name, true, "byte-identical")
    } else {
        let differ: Vec<_> =
            again.manifest.outputs.iter().filter(|(n, h)| manifest.outputs.get(*n) != Some(h)).map(|(n, _)| n).collect();
        Check::new(&name, false, json!({ "differs": differ }).to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfi::{build_cfi, EdgeLabeling, OrderedBaseGraph};

    fn triangle_pair() -> (ColoredGraph, ColoredGraph) {
        let base = OrderedBaseGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let g = build_cfi(&base, &EdgeLabeling::zero(&base)).unwrap().graph;
        let h = build_cfi(&base, &EdgeLabeling::with_ones(&base, &[(0, 1)]).unwrap()).unwrap().graph;
        (g, h)
    }

    #[test]
    fn solve_variants_agree() {
        let (g, h) = triangle_pair();
        let a = cmd_solve(Game::Pebble, &g, &h, 3, Some(3), false).unwrap();
        let b = cmd_solve(Game::PebbleSearch, &g, &h, 3, None, false).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.within, Some(true));
        assert!(a.certificate.is_some());
        assert!(a.wall_ms.is_none());
        let c = cmd_solve(Game::Blocking, &g, &h, 3, Some(1), false).unwrap();
        assert_eq!(c.within, Some(false));
    }

    #[test]
    fn play_then_verify() {
        let dir = tempfile::tempdir().unwrap();
        let params = Params::new(3, 1, None, Some(3), 0).unwrap();
        let spec = MatchSpec { mode: PlayMode::Blocking, pieces: 4, rounds: 3 };
        let (tr, bundle) = cmd_play(&params, &spec).unwrap();
        assert!(!tr.outcome.caught);
        bundle.write(dir.path()).unwrap();
        let rep = cmd_verify(dir.path()).unwrap();
        assert!(rep.pass(), "{:?}", rep.checks);
        let path = dir.path().join("transcript.json");
        let text = fs::read_to_string(&path).unwrap().replacen("\"caught\": false", "\"caught\": true", 1);
        fs::write(&path, text).unwrap();
        let rep = cmd_verify(dir.path()).unwrap();
        assert!(!rep.pass());
    }
}
