//! `suite`: every criterion, the desk `generate` bundle and two recorded
//! matches, in one deterministic bundle.

use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::json;

use super::commands::{cmd_play, MatchSpec, PlayMode};
use super::criteria::{self, CriterionReport, Level, TITLES};
use super::generate::cmd_generate;
use super::{par_map, Bundle, Format, Params, RunManifest};
use crate::error::Result;

pub struct SuiteRun {
    pub bundle: Bundle,
    pub manifest: RunManifest,
    pub reports: Vec<CriterionReport>,
}

impl SuiteRun {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

fn desk_params() -> Result<Params> {
    Params::new(3, 1, None, Some(3), 0)
}

/// The artifacts every suite run shares: the desk bundle and both matches.
fn artifacts(level: Level) -> Result<Bundle> {
    let params = desk_params()?;
    let mut bundle = Bundle::new();
    bundle.nest("generate", cmd_generate(&params, Format::Dimacs, false)?.bundle);
    let rounds = match level {
        Level::Smoke => 4,
        Level::Full => 10,
    };
    for mode in [PlayMode::Compressed, PlayMode::Blocking] {
        let (_, b) = cmd_play(&params, &MatchSpec { mode, pieces: 4, rounds })?;
        let dir = match mode {
            PlayMode::Compressed => "play/compressed",
            PlayMode::Blocking => "play/blocking",
        };
        bundle.nest(dir, b);
    }
    Ok(bundle)
}

/// Bytes of a reduced suite (artifacts plus the cheap parallel criteria).
fn determinism_probe(jobs: usize) -> Result<Vec<(String, Vec<u8>)>> {
    let mut b = artifacts(Level::Smoke)?;
    for id in [1u8, 5, 8] {
        b.add_json(format!("criteria/c{id:02}.json"), &criteria::run(id, Level::Smoke, jobs))?;
    }
    Ok(b.names().map(|n| (n.to_string(), b.get(n).expect("listed").to_vec())).collect())
}

fn determinism(jobs: usize) -> CriterionReport {
    let jobs = jobs.max(2);
    let runs = par_map(&[jobs, 1], 2, |&j| determinism_probe(j));
    let mut failures = Vec::new();
    let mut cases = 0;
    match (&runs[0], &runs[1]) {
        (Ok(a), Ok(b)) => {
            cases = a.len().max(b.len());
            let names_a: Vec<_> = a.iter().map(|x| &x.0).collect();
            let names_b: Vec<_> = b.iter().map(|x| &x.0).collect();
            if names_a != names_b {
                failures.push(format!("file lists differ: {names_a:?} vs {names_b:?}"));
            }
            for ((n, x), (_, y)) in a.iter().zip(b) {
                if x != y {
                    failures.push(format!("{n} differs between {jobs} jobs and 1 job"));
                }
            }
        }
        (Err(e), _) | (_, Err(e)) => failures.push(format!("aborted: {e}")),
    }
    CriterionReport {
        id: 12,
        title: TITLES[11].into(),
        pass: failures.is_empty() && cases > 0,
        cases,
        failures,
        notes: vec![],
        measured: json!({ "files": cases, "jobs": [jobs, 1] }),
    }
}

/// Runs the suite; `timings` adds wall-clock milliseconds to the manifest,
/// which then no longer repeats byte for byte.
pub fn cmd_suite(level: Level, jobs: usize, timings: bool) -> Result<SuiteRun> {
    let mut bundle = artifacts(level)?;
    let mut reports = Vec::new();
    let mut clock = BTreeMap::new();
    for id in 1..=12u8 {
        let t0 = Instant::now();
        let r = if id == 12 { determinism(jobs) } else { criteria::run(id, level, jobs) };
        clock.insert(format!("c{id:02}"), t0.elapsed().as_millis() as u64);
        bundle.add_json(format!("criteria/c{id:02}.json"), &r)?;
        reports.push(r);
    }
    let lines: Vec<String> = reports.iter().map(CriterionReport::line).collect();
    bundle.add("criteria/summary.txt", lines.join("\n") + "\n");
    let mut manifest = RunManifest::new("suite", json!({ "level": level, "seed": criteria::SEED }));
    manifest.warnings = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("criterion {} failed: {}", r.id, r.failures.first().cloned().unwrap_or_default()))
        .collect();
    if timings {
        manifest.timings_ms = Some(clock);
    }
    let manifest = bundle.seal(manifest)?;
    Ok(SuiteRun { bundle, manifest, reports })
}
