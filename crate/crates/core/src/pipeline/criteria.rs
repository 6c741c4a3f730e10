//! The twelve acceptance criteria as runnable checks. `Smoke` shrinks every
//! instance family so the whole set runs in seconds; `Full` uses the shipped
//! toy parameters.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::par_map;
use crate::cfi::{
    build_cfi, compress, gadget_size, precompress, twist_distance, validate_compressible_labeling,
    validate_compressible_twisting, validate_compression, Compression, EdgeLabeling, OrderedBaseGraph,
};
use crate::cops::{
    minimax_cops, play_blocking, play_compressed, scripted_robber, verify_transcript, Arena, ExhaustiveMoves,
    GreedyCops, OracleRobber,
};
use crate::error::Result;
use crate::games::adapters::{delayer_from_duplicator_blocking, spoiler_transfer_twinned, TransferVerdict};
use crate::games::blocking::{blocking_value, BlockingPosition, BlockingSolver};
use crate::games::pebble::{pebble_value_search, PebblePosition, PebbleSolver};
use crate::games::prover_delayer::{min_refutation_size, prover_delayer_value, PdConfig};
use crate::games::robber::{duplicator_from_robber, robber_duplicator_survival};
use crate::games::{SolverConfig, Value, DEFAULT_POSITION_CAP};
use crate::graph::{brute_force_isomorphism, find_twins, is_isomorphism, twinned, ColoredGraph};
use crate::grid::{
    build_equiv_t, end_to_end_twisting_search, is_end_to_end, roadblock_avoided, row_class_counts, CylindricalGrid,
    Roadblock,
};
use crate::iso_cnf::{build_iso, mini_sat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Smoke,
    Full,
}

pub const SEED: u64 = 0x00c0_ffee;
const MAX_FAILURES: usize = 20;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub cases: usize,
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub measured: serde_json::Value,
}

impl CriterionReport {
    /// One summary line, `PASS`/`FAIL` first.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let first = self.failures.first().map(|f| format!(" first failure: {f}")).unwrap_or_default();
        format!("{verdict} {:>2} {} ({} cases){first}", self.id, self.title, self.cases)
    }
}

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: Vec<String>,
    failed: usize,
    notes: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(what());
            }
        }
    }

    fn error(&mut self, what: String) {
        self.check(false, || what);
    }

    fn report(self, id: u8, title: &str, measured: serde_json::Value) -> CriterionReport {
        let mut failures = self.failures;
        if self.failed > failures.len() {
            failures.push(format!("... {} failures in total", self.failed));
        }
        CriterionReport {
            id,
            title: title.into(),
            pass: self.failed == 0 && self.cases > 0,
            cases: self.cases,
            failures,
            notes: self.notes,
            measured,
        }
    }
}

pub const TITLES: [&str; 12] = [
    "CFI parity law",
    "gadget sizes",
    "row class counts",
    "twinned structure",
    "pebble solver cross-validation",
    "twinned Spoiler transfer",
    "compressed vs precompressed blocking value",
    "ISO oracle agreement",
    "Prover-Delayer chain",
    "roadblock futility",
    "robber to Duplicator transfer",
    "suite determinism",
];

/// Runs criterion `id` (1 to 11; 12 lives in the suite runner).
pub fn run(id: u8, level: Level, jobs: usize) -> CriterionReport {
    let title = TITLES[(id - 1) as usize];
    let out = match id {
        1 => parity_law(level, jobs),
        2 => gadget_sizes(),
        3 => class_counts(level),
        4 => twinned_structure(level),
        5 => solver_agreement(level, jobs),
        6 => twinned_transfer(level, jobs),
        7 => compressed_vs_precompressed(level, jobs),
        8 => iso_agreement(level, jobs),
        9 => prover_delayer_chain(level),
        10 => roadblock_futility(level),
        11 => strategy_transfer(level),
        _ => Ok((Tally { notes: vec![format!("criterion {id} is run by the suite")], ..Tally::default() }, json!(null))),
    };
    match out {
        Ok((tally, measured)) => tally.report(id, title, measured),
        Err(e) => {
            let mut t = Tally::default();
            t.error(format!("aborted: {e}"));
            t.report(id, title, json!(null))
        }
    }
}

type Outcome = Result<(Tally, serde_json::Value)>;

// ---------------------------------------------------------------------------
// small graph families
// ---------------------------------------------------------------------------

/// Connected graphs on `n` vertices with maximum degree at most `max_deg`,
/// one per isomorphism class, as edge lists.
pub fn connected_graphs(n: usize, max_deg: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> = (0..pairs.len()).filter(|&i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
        let mut deg = vec![0; n];
        edges.iter().for_each(|&(u, v)| {
            deg[u] += 1;
            deg[v] += 1;
        });
        if deg.iter().any(|&d| d > max_deg) || !is_connected(n, &edges) {
            continue;
        }
        let canon = perms
            .iter()
            .map(|p| {
                let mut e: Vec<(usize, usize)> =
                    edges.iter().map(|&(u, v)| (p[u].min(p[v]), p[u].max(p[v]))).collect();
                e.sort_unstable();
                e
            })
            .min()
            .expect("at least one permutation");
        if seen.insert(canon) {
            out.push(edges);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(i: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == p.len() {
            out.push(p.clone());
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            rec(i + 1, p, out);
            p.swap(i, j);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|v| find(&mut parent, v) == root)
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, colors: u32, p: f64) -> ColoredGraph {
    let cols: Vec<u32> = (0..n).map(|_| rng.gen_range(0..colors)).collect();
    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|_| rng.gen_bool(p)).collect();
    ColoredGraph::from_edges(cols, &edges).expect("simple graph")
}

fn permuted(rng: &mut ChaCha8Rng, g: &ColoredGraph) -> ColoredGraph {
    let mut p: Vec<usize> = (0..g.order()).collect();
    p.shuffle(rng);
    let mut colors = vec![0; g.order()];
    (0..g.order()).for_each(|v| colors[p[v]] = g.color(v));
    let edges: Vec<_> = g.edges().map(|(u, v)| (p[u], p[v])).collect();
    ColoredGraph::from_edges(colors, &edges).expect("simple graph")
}

/// `g` with one edge moved to a non-edge, when possible.
fn moved_edge(rng: &mut ChaCha8Rng, g: &ColoredGraph) -> ColoredGraph {
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    let n = g.order();
    let non: Vec<(usize, usize)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|&(u, v)| !g.has_edge(u, v)).collect();
    if !edges.is_empty() && !non.is_empty() {
        let i = rng.gen_range(0..edges.len());
        edges[i] = non[rng.gen_range(0..non.len())];
    }
    ColoredGraph::from_edges(g.colors().to_vec(), &edges).expect("simple graph")
}

#[derive(Clone, Debug)]
pub struct SuitePair {
    pub name: String,
    pub g: ColoredGraph,
    pub h: ColoredGraph,
}

fn cfi_pair(edges: &[(usize, usize)], twists: &[(usize, usize)]) -> (ColoredGraph, ColoredGraph) {
    let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(1);
    let base = OrderedBaseGraph::new(n, edges).expect("connected toy base");
    let g = build_cfi(&base, &EdgeLabeling::zero(&base)).expect("cfi").graph;
    let h = build_cfi(&base, &EdgeLabeling::with_ones(&base, twists).expect("edges")).expect("cfi").graph;
    (g, h)
}

/// Small instance pairs shared by criteria 5, 6 and 8: CFI pairs over toy
/// bases (odd and even twists) and seeded random pairs with at most 8 vertices.
pub fn small_suite(level: Level) -> Vec<SuitePair> {
    let bases: [(&str, Vec<(usize, usize)>); 5] = [
        ("edge", vec![(0, 1)]),
        ("P3", vec![(0, 1), (1, 2)]),
        ("triangle", vec![(0, 1), (1, 2), (0, 2)]),
        ("C4", vec![(0, 1), (1, 2), (2, 3), (0, 3)]),
        ("star3", vec![(0, 1), (0, 2), (0, 3)]),
    ];
    let mut out = Vec::new();
    for (name, edges) in &bases {
        let (g, h) = cfi_pair(edges, &edges[..1]);
        out.push(SuitePair { name: format!("cfi-{name}-odd"), g, h });
        if edges.len() >= 2 {
            let (g, h) = cfi_pair(edges, &edges[..2]);
            out.push(SuitePair { name: format!("cfi-{name}-even"), g, h });
        }
    }
    let randoms = match level {
        Level::Smoke => 24,
        Level::Full => 120,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 0..randoms {
        let n = rng.gen_range(3..=8);
        let colors = rng.gen_range(1..=2);
        let p = rng.gen_range(0.25..0.6);
        let g = random_graph(&mut rng, n, colors, p);
        let (kind, h) = match i % 3 {
            0 => ("iso", permuted(&mut rng, &g)),
            1 => ("moved", moved_edge(&mut rng, &g)),
            _ => ("random", random_graph(&mut rng, n, colors, p)),
        };
        out.push(SuitePair { name: format!("random-{i}-{kind}-n{n}"), g, h });
    }
    out
}

// ---------------------------------------------------------------------------
// 1. parity law
// ---------------------------------------------------------------------------

fn parity_law(level: Level, jobs: usize) -> Outcome {
    let max_n = match level {
        Level::Smoke => 4,
        Level::Full => 5,
    };
    let graphs: Vec<(usize, Vec<(usize, usize)>)> =
        (2..=max_n).flat_map(|n| connected_graphs(n, 3).into_iter().map(move |e| (n, e))).collect();
    let per_graph = par_map(&graphs, jobs, |(n, edges)| -> Result<(usize, Vec<String>)> {
        let base = OrderedBaseGraph::new(*n, edges)?;
        let m = edges.len();
        let insts: Vec<_> = (0..1u32 << m)
            .map(|mask| build_cfi(&base, &EdgeLabeling::from_bits((0..m).map(|i| mask >> i & 1 == 1).collect())))
            .collect::<Result<_>>()?;
        let mut bad = Vec::new();
        let mut cases = 0;
        for a in &insts {
            for b in &insts {
                cases += 1;
                let odd = twist_distance(&a.labeling, &b.labeling)? % 2 == 1;
                let iso = brute_force_isomorphism(&a.graph, &b.graph).is_some();
                if iso == odd {
                    bad.push(format!("{edges:?} f={:?} g={:?} iso={iso}", a.labeling.bits(), b.labeling.bits()));
                }
            }
        }
        Ok((cases, bad))
    });
    let mut t = Tally::default();
    for r in per_graph {
        let (cases, bad) = r?;
        t.cases += cases - bad.len();
        for b in bad {
            t.error(b);
        }
    }
    Ok((t, json!({ "base_graphs": graphs.len(), "max_vertices": max_n })))
}

// ---------------------------------------------------------------------------
// 2. gadget sizes
// ---------------------------------------------------------------------------

fn gadget_sizes() -> Outcome {
    let mut t = Tally::default();
    let mut sizes = BTreeMap::new();
    for d in 1..=4usize {
        let edges: Vec<(usize, usize)> = (1..=d).map(|i| (0, i)).collect();
        let base = OrderedBaseGraph::new(d + 1, &edges)?;
        let inst = build_cfi(&base, &EdgeLabeling::zero(&base))?;
        let built = inst.origins().iter().filter(|&&u| u == 0).count();
        let even = (0..1u32 << d).filter(|a| a.count_ones() % 2 == 0).count();
        let expected = 1usize << (d - 1);
        t.check(built == expected && even == expected && gadget_size(d) == expected, || {
            format!("d={d}: built {built}, even tuples {even}, gadget_size {}", gadget_size(d))
        });
        sizes.insert(d, built);
    }
    Ok((t, json!({ "sizes": sizes })))
}

// ---------------------------------------------------------------------------
// 3. class counts
// ---------------------------------------------------------------------------

fn class_counts(level: Level) -> Outcome {
    let ws: Vec<u64> = match level {
        Level::Smoke => vec![5, 6],
        Level::Full => (4..=8).collect(),
    };
    let k = 3;
    let mut t = Tally::default();
    let mut rows = Vec::new();
    for &w in &ws {
        let coprimes = match crate::grid::find_coprimes(w, k) {
            Ok(c) => c,
            Err(e) => {
                t.notes.push(format!("w={w}: {e}; no grid exists, nothing to count"));
                continue;
            }
        };
        for tt in 1..=2usize {
            // With t + 1 = k the period equals J and the interior is shorter than
            // one period, so t = 2 uses a desk grid two full periods long.
            let prod: u64 = coprimes.iter().product();
            let (grid, kind) = if tt + 1 < k {
                (CylindricalGrid::new(k, &coprimes)?, "full".to_string())
            } else {
                (CylindricalGrid::desk(k, &coprimes, 2 * prod)?, format!("desk q={}", 2 * prod))
            };
            let rc = build_equiv_t(&grid, tt)?;
            let f = 4 * k as u64;
            let got = row_class_counts(&grid, &rc);
            for (i, &c) in got.iter().enumerate() {
                let window: u64 = (0..=tt).map(|s| coprimes[(i + s) % k]).product();
                let want = f * window + 2 * f;
                t.check(c as u64 == want, || format!("w={w} t={tt} row {i} ({kind}): {c} classes, formula {want}"));
            }
            rows.push(json!({ "w": w, "t": tt, "grid": kind, "coprimes": coprimes, "counts": got }));
        }
    }
    Ok((t, json!(rows)))
}

// ---------------------------------------------------------------------------
// 4. twinned structure
// ---------------------------------------------------------------------------

fn twinned_structure(level: Level) -> Outcome {
    let want = match level {
        Level::Smoke => 40,
        Level::Full => 200,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let mut t = Tally::default();
    let mut tried = 0;
    let mut made = 0;
    while made < want {
        tried += 1;
        let n = rng.gen_range(1..=10);
        let (colors, p) = (rng.gen_range(1..=3), rng.gen_range(0.2..0.7));
        let g = random_graph(&mut rng, n, colors, p);
        if !find_twins(&g).is_empty() {
            continue;
        }
        made += 1;
        let x = twinned(&g);
        let connected = find_twins(&x.graph).iter().filter(|p| p.connected).count();
        let pairs_ok = (0..n).all(|u| {
            let [a, b] = x.forward(u);
            x.graph.has_edge(a, b) && x.partner(a) == b && x.inverse(a) == u && x.inverse(b) == u
        });
        let (pg, px) = (g.color_class_profile(), x.graph.color_class_profile());
        let doubled = pg.sizes.len() == px.sizes.len() && pg.sizes.iter().all(|(c, &s)| px.sizes.get(c) == Some(&(2 * s)));
        t.check(connected == n && pairs_ok && doubled && x.graph.order() == 2 * n, || {
            format!("graph {made}: n={n}, {connected} connected twin pairs, doubled={doubled}")
        });
    }
    Ok((t, json!({ "graphs": made, "sampled": tried })))
}

// ---------------------------------------------------------------------------
// 5, 6, 8. small suite
// ---------------------------------------------------------------------------

fn solver_agreement(level: Level, jobs: usize) -> Outcome {
    let suite = small_suite(level);
    let cases: Vec<(usize, usize)> = (0..suite.len()).flat_map(|i| (1..=3).map(move |k| (i, k))).collect();
    let results = par_map(&cases, jobs, |&(i, k)| -> Result<(Value, Value)> {
        let p = &suite[i];
        let start = PebblePosition::empty(k);
        let a = PebbleSolver::solve(&p.g, &p.h, k, &start, SolverConfig::default())?.value();
        let b = pebble_value_search(&p.g, &p.h, k, &start, DEFAULT_POSITION_CAP)?.value;
        Ok((a, b))
    });
    let mut t = Tally::default();
    let mut finite = 0;
    for (&(i, k), r) in cases.iter().zip(results) {
        match r {
            Ok((a, b)) => {
                finite += a.finite().is_some() as usize;
                t.check(a == b, || format!("{} k={k}: fixed point {a}, search {b}", suite[i].name))
            }
            Err(e) => t.error(format!("{} k={k}: {e}", suite[i].name)),
        }
    }
    Ok((t, json!({ "pairs": suite.len(), "solves": cases.len(), "finite": finite })))
}

fn twinned_transfer(level: Level, jobs: usize) -> Outcome {
    // twinned random graphs on 8 vertices take tens of seconds each at k = 3
    let max_order = match level {
        Level::Smoke => 6,
        Level::Full => 7,
    };
    let suite: Vec<SuitePair> = small_suite(level)
        .into_iter()
        .filter(|p| p.name.starts_with("cfi-") || p.g.order().max(p.h.order()) <= max_order)
        .collect();
    let k = 3;
    let results = par_map(&suite, jobs, |p| {
        let twins = find_twins(&p.g).iter().chain(find_twins(&p.h).iter()).any(|t| t.connected);
        if twins {
            return Ok(None);
        }
        spoiler_transfer_twinned(&p.g, &p.h, k).map(Some)
    });
    let mut t = Tally::default();
    let (mut holds, mut vacuous, mut skipped) = (0, 0, 0);
    for (p, r) in suite.iter().zip(results) {
        match r {
            Ok(None) => skipped += 1,
            Ok(Some(rep)) => match rep.verdict {
                TransferVerdict::Vacuous => vacuous += 1,
                v => {
                    holds += (v == TransferVerdict::Holds) as usize;
                    t.check(v == TransferVerdict::Holds, || {
                        format!("{}: value {} but twinned {}", p.name, rep.original, rep.twinned)
                    })
                }
            },
            Err(e) => t.error(format!("{}: {e}", p.name)),
        }
    }
    if skipped > 0 {
        t.notes.push(format!("{skipped} pairs have connected twins already; the transfer lemma assumes none"));
    }
    t.notes.push(format!("random pairs limited to {max_order} vertices"));
    Ok((t, json!({ "holds": holds, "infinite_value": vacuous, "with_connected_twins": skipped })))
}

fn iso_agreement(level: Level, jobs: usize) -> Outcome {
    let suite = small_suite(level);
    let results = par_map(&suite, jobs, |p| -> Result<Vec<(bool, String)>> {
        let f = build_iso(&p.g, &p.h);
        let brute = brute_force_isomorphism(&p.g, &p.h);
        let model = mini_sat(&f)?;
        let width = p.g.color_class_profile().max.max(p.h.color_class_profile().max);
        let decoded = model.as_ref().is_none_or(|m| {
            let map: Option<Vec<usize>> = f.decode(m).into_iter().collect();
            map.is_some_and(|map| is_isomorphism(&p.g, &p.h, &map))
        });
        Ok(vec![
            (model.is_some() == brute.is_some(), format!("sat={} iso={}", model.is_some(), brute.is_some())),
            (f.width == width, format!("width {} vs {width}", f.width)),
            (f.num_vars() == p.g.order() * p.h.order(), format!("{} variables", f.num_vars())),
            (decoded, "model does not decode to an isomorphism".into()),
        ])
    });
    let mut t = Tally::default();
    let mut sat = 0;
    for (p, r) in suite.iter().zip(results) {
        match r {
            Ok(checks) => {
                sat += checks[0].1.starts_with("sat=true") as usize;
                for (ok, what) in checks {
                    t.check(ok, || format!("{}: {what}", p.name));
                }
            }
            Err(e) => t.error(format!("{}: {e}", p.name)),
        }
    }
    Ok((t, json!({ "pairs": suite.len(), "satisfiable": sat })))
}

// ---------------------------------------------------------------------------
// 7. compressed vs precompressed
// ---------------------------------------------------------------------------

struct ToyCompression {
    name: String,
    base: OrderedBaseGraph,
    eq: Compression,
}

fn cycle(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

fn toy_compressions(level: Level) -> Result<Vec<ToyCompression>> {
    let mut out = Vec::new();
    let sizes: &[usize] = match level {
        Level::Smoke => &[4, 6],
        Level::Full => &[4, 6, 8],
    };
    for &n in sizes {
        let base = OrderedBaseGraph::new(n, &cycle(n))?;
        let half = n / 2;
        let eq = Compression::new(n, &(0..half).map(|i| vec![i, i + half]).collect::<Vec<_>>())?;
        out.push(ToyCompression { name: format!("C{n}/antipodal"), base, eq });
    }
    Ok(out)
}

fn compressed_vs_precompressed(level: Level, jobs: usize) -> Outcome {
    let mut t = Tally::default();
    let mut jobs_list = Vec::new();
    for toy in toy_compressions(level)? {
        if !validate_compression(&toy.base, &toy.eq) {
            t.notes.push(format!("{}: compression rejected by the validator", toy.name));
            continue;
        }
        let m = toy.base.edges().len();
        let f = EdgeLabeling::zero(&toy.base);
        let mut labelings: Vec<EdgeLabeling> = (1..1u32 << m)
            .map(|mask| EdgeLabeling::from_bits((0..m).map(|i| mask >> i & 1 == 1).collect()))
            .filter(|g| validate_compressible_labeling(&toy.base, &toy.eq, g))
            .collect();
        let total = labelings.len();
        labelings.truncate(match level {
            Level::Smoke => 2,
            Level::Full => 6,
        });
        if labelings.len() < total {
            t.notes.push(format!("{}: first {} of {total} compressible labelings", toy.name, labelings.len()));
        }
        for g in labelings {
            for k in 2..=3usize {
                jobs_list.push((toy.name.clone(), toy.base.clone(), toy.eq.clone(), f.clone(), g.clone(), k));
            }
        }
    }
    let results = par_map(&jobs_list, jobs, |(_, base, eq, f, g, k)| -> Result<(Value, Value)> {
        let (fi, gi) = (build_cfi(base, f)?, build_cfi(base, g)?);
        let (fc, gc) = (compress(&fi, eq)?, compress(&gi, eq)?);
        let (fp, gp) = (precompress(&fi, eq)?, precompress(&gi, eq)?);
        let a = blocking_value(&fc.graph, &gc.graph, *k, &BlockingPosition::empty(*k))?;
        let b = blocking_value(&fp, &gp, *k, &BlockingPosition::empty(*k))?;
        Ok((a, b))
    });
    let mut values = Vec::new();
    for ((name, _, _, _, g, k), r) in jobs_list.iter().zip(results) {
        match r {
            Ok((a, b)) => {
                let close = match (a, b) {
                    (Value::Finite(x), Value::Finite(y)) => x.abs_diff(y) <= 2,
                    (x, y) => x == y,
                };
                values.push(json!({ "instance": name, "k": k, "compressed": a, "precompressed": b }));
                t.check(close, || format!("{name} g={:?} k={k}: compressed {a}, precompressed {b}", g.bits()))
            }
            Err(e) => t.error(format!("{name} k={k}: {e}")),
        }
    }
    Ok((t, json!(values)))
}

// ---------------------------------------------------------------------------
// 9. Prover-Delayer chain
// ---------------------------------------------------------------------------

fn prover_delayer_chain(level: Level) -> Outcome {
    // (name, base edges, refutation widths)
    type Toy = (&'static str, Vec<(usize, usize)>, Vec<usize>);
    let bases: Vec<Toy> = match level {
        Level::Smoke => vec![("edge", vec![(0, 1)], vec![2, 3]), ("P3", vec![(0, 1), (1, 2)], vec![2])],
        Level::Full => vec![
            ("edge", vec![(0, 1)], vec![2, 3]),
            ("P3", vec![(0, 1), (1, 2)], vec![2, 3]),
            ("triangle", vec![(0, 1), (1, 2), (0, 2)], vec![2, 3]),
        ],
    };
    let mut t = Tally::default();
    let mut rows = Vec::new();
    for (name, edges, widths) in &bases {
        let (g, h) = cfi_pair(edges, &edges[..1]);
        let (xg, xh) = (twinned(&g).graph, twinned(&h).graph);
        let mut delayer = BTreeMap::new();
        let mut pd = |records: usize| -> Result<Value> {
            if let Some(&v) = delayer.get(&records) {
                return Ok(v);
            }
            let v = prover_delayer_value(&xg, &xh, records, &BTreeMap::new(), PdConfig::default())?.value;
            delayer.insert(records, v);
            Ok(v)
        };
        for &k in widths {
            // a width-k clause plus the queried variable: Prover needs k + 1 records
            let p = pd(k + 1)?;
            let size = min_refutation_size(&xg, &xh, k, PdConfig::default())?.size;
            let ok = match (p, size) {
                (_, None) => true,
                (Value::Infinite, Some(_)) => false,
                (Value::Finite(p), Some(s)) => p >= 64 || s >= 1u64 << p,
            };
            t.check(ok, || format!("{name} width {k}: Delayer value {p} with {} records, smallest refutation {size:?}", k + 1));
            rows.push(json!({ "instance": name, "width": k, "delayer_records": k + 1, "delayer": p, "min_size": size }));
        }
        // adapter and the k+1 Delayer value against the blocking value
        let k = 3;
        let solver = BlockingSolver::solve(&g, &h, k, &BlockingPosition::empty(k), SolverConfig::default())?;
        let r = solver.value();
        let adapter = delayer_from_duplicator_blocking(&g, &h, k, &solver)?;
        let check = adapter.guaranteed_points(1 << 22, edges.len() == 1)?;
        t.check(check.points >= r, || format!("{name}: adapter scores {} < blocking value {r}", check.points));
        let pd = pd(k + 1)?;
        t.check(pd >= r, || format!("{name}: Delayer value {pd} with {} < blocking value {r}", k + 1));
        rows.push(json!({ "instance": name, "k": k, "blocking": r, "adapter": check.points, "delayer_k_plus_1": pd }));
    }
    Ok((t, json!(rows)))
}

// ---------------------------------------------------------------------------
// 10. roadblock futility
// ---------------------------------------------------------------------------

/// Toy grid for criterion 10: k = 5 so that one row may hold cops.
pub fn futility_grid() -> Result<(CylindricalGrid, crate::grid::RowCompression)> {
    let coprimes = crate::grid::find_coprimes(13, 5)?;
    let grid = CylindricalGrid::desk(5, &coprimes, 3)?;
    let rc = build_equiv_t(&grid, 1)?;
    Ok((grid, rc))
}

fn roadblock_futility(level: Level) -> Outcome {
    let configs = match level {
        Level::Smoke => 100,
        Level::Full => 1000,
    };
    let (grid, rc) = futility_grid()?;
    let k = grid.k();
    let rows_allowed = (2 * k / 5).saturating_sub(1);
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); k];
    for c in 0..rc.eq.num_classes() {
        by_row[grid.row(rc.eq.class(c)[0])].push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let mut t = Tally::default();
    let (mut max_cops, mut max_blocks) = (0, 0);
    for i in 0..configs {
        let mut rows: Vec<usize> = (0..k).collect();
        rows.shuffle(&mut rng);
        rows.truncate(rng.gen_range(1..=rows_allowed.max(1)).min(rows_allowed));
        let pool: Vec<usize> = rows.iter().flat_map(|&r| by_row[r].iter().copied()).collect();
        let n_cops = if pool.is_empty() { 0 } else { rng.gen_range(0..=k.min(pool.len())) };
        let mut cops: Vec<usize> = pool.choose_multiple(&mut rng, n_cops).copied().collect();
        cops.sort_unstable();
        let n_blocks = rng.gen_range(0..=k - n_cops);
        let mut roadblocks = Vec::new();
        for _ in 0..n_blocks {
            let class = rng.gen_range(0..rc.eq.num_classes());
            let d = grid.base().degree(rc.eq.class(class)[0]);
            let masks: Vec<u32> = (1..1u32 << d).filter(|m| m.count_ones() % 2 == 0).collect();
            roadblocks.push(Roadblock::new(grid.base(), &rc.eq, class, *masks.choose(&mut rng).expect("degree >= 2"))?);
        }
        max_cops = max_cops.max(n_cops);
        max_blocks = max_blocks.max(n_blocks);
        let found = end_to_end_twisting_search(&grid, &rc, &cops, &roadblocks);
        let valid = found.as_ref().is_some_and(|tw| {
            validate_compressible_twisting(grid.base(), &rc.eq, tw)
                && is_end_to_end(&grid, tw)
                && cops.iter().all(|&c| rc.eq.class(c).iter().all(|&v| tw.fixes(v)))
                && roadblocks.iter().all(|rb| roadblock_avoided(grid.base(), &rc.eq, tw, rb))
        });
        t.check(valid, || {
            let what = if found.is_some() { "invalid twisting" } else { "no twisting" };
            format!("config {i}: {what}; rows {rows:?}, cops {cops:?}, roadblocks {roadblocks:?}")
        });
    }
    let measured = json!({
        "grid": grid.descriptor(rc.t, Some(13)),
        "cop_rows": rows_allowed,
        "configurations": configs,
        "max_cops": max_cops,
        "max_roadblocks": max_blocks,
    });
    Ok((t, measured))
}

// ---------------------------------------------------------------------------
// 11. strategy transfer
// ---------------------------------------------------------------------------

/// Regression constants measured once on the shipped toy instances.
pub mod frozen {
    /// Triangle base, singleton compression, blocking game, round cap 8:
    /// `(pieces, minimax robber survival, Duplicator rounds searched, Duplicator survival)`.
    pub const TRIANGLE: [(usize, u32, u32, u32); 2] = [(2, 8, 3, 3), (3, 1, 3, 1)];
    /// Scripted robber on the k=3, t=1 desk grid against greedy cops with 4 pieces:
    /// rounds survived in the compressed and in the blocking game (both capped).
    pub const SCRIPTED_COMPRESSED: u32 = 10;
    pub const SCRIPTED_BLOCKING: u32 = 6;
}

fn strategy_transfer(level: Level) -> Outcome {
    let mut t = Tally::default();
    let base = OrderedBaseGraph::new(3, &[(0, 1), (1, 2), (0, 2)])?;
    let eq = Compression::singletons(3);
    let arena = Arena::new(&base, &eq)?;
    let moves = ExhaustiveMoves::new(&arena)?;
    let f = EdgeLabeling::zero(&base);
    let g = EdgeLabeling::with_ones(&base, &[(0, 1)])?;
    let mut triangle = Vec::new();
    for &(k, robber_frozen, rounds, dup_frozen) in &frozen::TRIANGLE {
        let (out, table) = minimax_cops(&arena, k, true, 8, &moves, &[(0, 1)], 100_000)?;
        let robber = OracleRobber { table: &table, moves: &moves, start: (0, 1) };
        let r_star = out.robber_survival();
        let dup = duplicator_from_robber(&base, &eq, &f, &g, &robber)?;
        let rep = robber_duplicator_survival(&dup, k, rounds, 1_000_000)?;
        t.check(rep.survived >= r_star.min(rounds), || {
            format!("k={k}: Duplicator survives {} < robber {r_star}", rep.survived)
        });
        t.check(r_star == robber_frozen, || format!("k={k}: robber survival {r_star}, frozen {robber_frozen}"));
        t.check(rep.survived == dup_frozen, || {
            format!("k={k}: Duplicator survival {}, frozen {dup_frozen}", rep.survived)
        });
        triangle.push(json!({
            "k": k,
            "robber_survival": r_star,
            "minimax_fixpoint": out.fixpoint,
            "rounds_searched": rounds,
            "duplicator_survival": rep.survived,
            "spoiler_nodes": rep.nodes,
        }));
    }

    let (sc, sb) = match level {
        Level::Smoke => (4, 3),
        Level::Full => (frozen::SCRIPTED_COMPRESSED, frozen::SCRIPTED_BLOCKING),
    };
    let grid = CylindricalGrid::desk(3, &[3, 4, 5], 3)?;
    let rc = build_equiv_t(&grid, 1)?;
    let arena = Arena::new(grid.base(), &rc.eq)?;
    let scripted = scripted_robber(&grid, &rc, 1)?;
    let tc = play_compressed(&arena, 4, &mut GreedyCops::new(4, false), &scripted, sc)?;
    let tb = play_blocking(&arena, 4, &mut GreedyCops::new(4, true), &scripted, sb)?;
    for (name, tr, want) in [("compressed", &tc, sc), ("blocking", &tb, sb)] {
        t.check(verify_transcript(tr).is_ok(), || format!("{name} transcript fails replay"));
        t.check(tr.survived() == want, || format!("scripted robber survives {} {name} rounds, frozen {want}", tr.survived()));
    }
    t.notes.push("exhaustive Spoiler and minimax cops are run on the triangle; the desk grid is too large for both".into());
    let measured = json!({
        "triangle": triangle,
        "desk_grid": {
            "descriptor": grid.descriptor(1, None),
            "pieces": 4,
            "compressed_survival": tc.survived(),
            "blocking_survival": tb.survived(),
        },
    });
    Ok((t, measured))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_census() {
        // connected graphs with max degree 3: 1, 2, 6 on 2, 3, 4 vertices
        let counts: Vec<usize> = (2..=4).map(|n| connected_graphs(n, 3).len()).collect();
        assert_eq!(counts, vec![1, 2, 6]);
        assert_eq!(connected_graphs(4, 2).len(), 2);
    }

    #[test]
    fn suite_is_deterministic() {
        let a = small_suite(Level::Smoke);
        let b = small_suite(Level::Smoke);
        assert_eq!(a.len(), b.len());
        assert!(a.iter().zip(&b).all(|(x, y)| x.name == y.name && x.g == y.g && x.h == y.h));
    }
}
