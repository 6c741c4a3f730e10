//! Strategy transfers: Spoiler strategies onto twinned graphs, and Delayer
//! strategies on twinned graphs simulated from blocking-game Duplicators.

use std::collections::{BTreeMap, VecDeque};

use rustc_hash::FxHashMap;
use serde::Serialize;

use super::blocking::{BlockingPosition, BlockingSolver, Pebble};
use super::pebble::{pebble_value, PebblePosition};
use super::{Mark, Side, Value};
use crate::error::{Error, Result};
use crate::graph::{find_twins, twinned, ColoredGraph, Vertex};
use crate::iso_cnf::{build_iso, IsoFormula, Lit};

// ---------------------------------------------------------------------------
// Spoiler on twinned graphs
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferVerdict {
    /// The original pair is not distinguished, nothing to check.
    Vacuous,
    Holds,
    Violated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TransferReport {
    pub k: usize,
    pub original: Value,
    pub twinned: Value,
    pub verdict: TransferVerdict,
}

/// Compares pebble values on `(g, h)` and `(X(g), X(h))`: a Spoiler win in r
/// rounds must become a win in at most r + 1 rounds.
pub fn spoiler_transfer_twinned(g: &ColoredGraph, h: &ColoredGraph, k: usize) -> Result<TransferReport> {
    if k < 3 {
        return Err(Error::Contract("twinned transfer needs k >= 3".into()));
    }
    for (name, x) in [("G", g), ("H", h)] {
        if let Some(t) = find_twins(x).into_iter().find(|t| t.connected) {
            return Err(Error::Contract(format!("{name} has connected twins {} and {}", t.u, t.v)));
        }
    }
    let original = pebble_value(g, h, k, &PebblePosition::empty(k))?;
    let (xg, xh) = (twinned(g).graph, twinned(h).graph);
    let tw = pebble_value(&xg, &xh, k, &PebblePosition::empty(k))?;
    let verdict = match original {
        Value::Infinite => TransferVerdict::Vacuous,
        Value::Finite(r) if tw <= Value::Finite(r + 1) => TransferVerdict::Holds,
        Value::Finite(_) => TransferVerdict::Violated,
    };
    Ok(TransferReport { k, original, twinned: tw, verdict })
}

// ---------------------------------------------------------------------------
// Delayer from a blocking Duplicator
// ---------------------------------------------------------------------------

/// A positional Duplicator for the pebble game with blocking. Slots index the
/// pebble being moved in `pos`.
pub trait BlockingDuplicator {
    fn respond(&self, pos: &BlockingPosition, slot: usize, side: Side, x: Vertex) -> Result<Vertex>;
    fn mark(&self, pos: &BlockingPosition, slot: usize, u: Vertex, v: Vertex) -> Result<Mark>;
}

impl BlockingDuplicator for BlockingSolver<'_> {
    fn respond(&self, pos: &BlockingPosition, slot: usize, side: Side, x: Vertex) -> Result<Vertex> {
        Ok(self.best_regular_response(pos, slot, side, x)?.0)
    }

    fn mark(&self, pos: &BlockingPosition, slot: usize, u: Vertex, v: Vertex) -> Result<Mark> {
        Ok(self.best_mark(pos, slot, u, v)?.0)
    }
}

/// Simulated pebble pair on `(u, v)`: regular with twin offset `s`
/// (`x_{u_i, v_j} = 1` iff `i ^ j == s`), or blocking (all four variables 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    Regular(u8),
    Blocking,
}

/// Delayer state: the current assignment and the simulated pebble pairs,
/// each supported by at least one assigned variable on its pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DelayerState {
    pub sigma: BTreeMap<Lit, bool>,
    pub entries: BTreeMap<(Vertex, Vertex), Entry>,
}

/// Delayer's answer to a resolution move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResolutionAnswer {
    Commit(bool),
    /// Point response; Prover's value fixes the twin offset.
    Point,
}

/// Delayer's answer to a narrow move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NarrowAnswer {
    Commit(Lit),
    Point(Lit, Lit),
}

/// Delayer on `X(G), X(H)` that simulates a blocking-game Duplicator on `G, H`.
///
/// Invariant: a base pair `(u, v)` carries an entry exactly when some variable
/// `x_{u_i, v_j}` is assigned. Fresh pairs become regular pebbles (with a point
/// when Prover gets to fix the twin offset) or blocking pebbles (answer 0),
/// as the simulated Duplicator marks them.
pub struct DelayerAdapter<'a, D> {
    k: usize,
    dup: &'a D,
    formula: IsoFormula,
    /// Clause ids by variable.
    occ: Vec<Vec<usize>>,
    /// Distinct color clauses.
    color: Vec<Vec<Lit>>,
    /// Variables pairing vertices of equal color.
    same_color: Vec<Lit>,
}

pub fn delayer_from_duplicator_blocking<'a, D: BlockingDuplicator>(
    g: &'a ColoredGraph,
    h: &'a ColoredGraph,
    k: usize,
    dup: &'a D,
) -> Result<DelayerAdapter<'a, D>> {
    if k < 2 {
        return Err(Error::Contract("the narrow game needs k >= 2".into()));
    }
    let (xg, xh) = (twinned(g).graph, twinned(h).graph);
    let formula = build_iso(&xg, &xh);
    let mut occ = vec![Vec::new(); formula.num_vars() + 1];
    for (ci, c) in formula.clauses.iter().enumerate() {
        for l in c {
            occ[l.unsigned_abs() as usize].push(ci);
        }
    }
    let mut color: Vec<Vec<Lit>> = formula.color_clauses().map(|ci| formula.clauses[ci].clone()).collect();
    color.sort();
    color.dedup();
    let same_color = (0..xg.order())
        .flat_map(|a| (0..xh.order()).map(move |b| (a, b)))
        .filter(|&(a, b)| xg.color(a) == xh.color(b))
        .map(|(a, b)| formula.var(a, b))
        .collect();
    Ok(DelayerAdapter { k, dup, formula, occ, color, same_color })
}

impl<'a, D: BlockingDuplicator> DelayerAdapter<'a, D> {
    pub fn formula(&self) -> &IsoFormula {
        &self.formula
    }

    /// Base pair and twin parity `i ^ j` of a variable `x_{u_i, v_j}`.
    fn split(&self, x: Lit) -> ((Vertex, Vertex), u8) {
        let (a, b) = self.formula.pair(x);
        ((a / 2, b / 2), ((a ^ b) & 1) as u8)
    }

    fn var(&self, u: Vertex, i: usize, v: Vertex, j: usize) -> Lit {
        self.formula.var(2 * u + i, 2 * v + j)
    }

    fn position(&self, st: &DelayerState) -> BlockingPosition {
        let mut pos = BlockingPosition::empty(self.k);
        for (slot, (&(u, v), e)) in st.entries.iter().enumerate() {
            let mark = match e {
                Entry::Regular(_) => Mark::Regular,
                Entry::Blocking => Mark::Blocking,
            };
            pos.slots[slot] = Some(Pebble { u, v, mark });
        }
        pos
    }

    /// Prover keeps `keep ⊆ σ`; entries without a supporting variable are lifted.
    pub fn restrict(&self, st: &DelayerState, keep: &BTreeMap<Lit, bool>) -> Result<DelayerState> {
        if keep.len() >= self.k || keep.iter().any(|(x, b)| st.sigma.get(x) != Some(b)) {
            return Err(Error::Contract("restriction must be a subset with at most k-1 variables".into()));
        }
        let support: std::collections::BTreeSet<_> = keep.keys().map(|&x| self.split(x).0).collect();
        let entries = st.entries.iter().filter(|(p, _)| support.contains(p)).map(|(&p, &e)| (p, e)).collect();
        Ok(DelayerState { sigma: keep.clone(), entries })
    }

    fn regular_elsewhere(&self, st: &DelayerState, (u, v): (Vertex, Vertex)) -> bool {
        st.entries
            .iter()
            .any(|(&(a, b), e)| matches!(e, Entry::Regular(_)) && (a == u) != (b == v))
    }

    /// Whether `sigma`, which just received `x`, violates a clause.
    fn violated_at(&self, sigma: &BTreeMap<Lit, bool>, x: Lit) -> bool {
        self.occ[x.unsigned_abs() as usize].iter().any(|&ci| {
            self.formula.clauses[ci].iter().all(|l| sigma.get(&l.abs()).is_some_and(|&b| b != (*l > 0)))
        })
    }

    /// Answer to a resolution query on `x` (not assigned in `st`).
    pub fn resolution(&self, st: &DelayerState, x: Lit) -> Result<ResolutionAnswer> {
        let (pair, par) = self.split(x);
        match st.entries.get(&pair) {
            Some(Entry::Regular(s)) => return Ok(ResolutionAnswer::Commit(par == *s)),
            Some(Entry::Blocking) => return Ok(ResolutionAnswer::Commit(false)),
            None => {}
        }
        let (u, v) = pair;
        let pos = self.position(st);
        let slot = st.entries.len();
        let mut zero = st.sigma.clone();
        zero.insert(x, false);
        if self.violated_at(&zero, x) {
            // a 0 here empties a color clause: play the forced regular move instead
            let (a, _) = self.formula.pair(x);
            let g_side = self.occ[x as usize].iter().any(|&ci| {
                let c = &self.formula.clauses[ci];
                c.iter().all(|&l| l > 0 && self.formula.pair(l).0 == a)
                    && c.iter().all(|l| zero.get(l) == Some(&false))
            });
            let hit = if g_side {
                self.dup.respond(&pos, slot, Side::G, u)? == v
            } else {
                self.dup.respond(&pos, slot, Side::H, v)? == u
            };
            return Ok(ResolutionAnswer::Commit(hit));
        }
        Ok(match self.dup.mark(&pos, slot, u, v)? {
            Mark::Blocking => ResolutionAnswer::Commit(false),
            Mark::Regular => ResolutionAnswer::Point,
        })
    }

    /// Applies `x ↦ value` after a resolution answer, updating the entries.
    pub fn apply_resolution(&self, st: &DelayerState, x: Lit, answer: &ResolutionAnswer, value: bool) -> Result<DelayerState> {
        if let ResolutionAnswer::Commit(b) = answer {
            if *b != value {
                return Err(Error::Strategy("committal value overridden".into()));
            }
        }
        let (pair, par) = self.split(x);
        let mut next = st.clone();
        next.sigma.insert(x, value);
        if !st.entries.contains_key(&pair) {
            let entry = match answer {
                ResolutionAnswer::Point => Entry::Regular(par ^ !value as u8),
                ResolutionAnswer::Commit(true) => Entry::Regular(par),
                ResolutionAnswer::Commit(false) => Entry::Blocking,
            };
            next.entries.insert(pair, entry);
        }
        Ok(next)
    }

    /// Answer to a narrow move on the color clause `clause`.
    pub fn narrow(&self, st: &DelayerState, clause: &[Lit]) -> Result<NarrowAnswer> {
        let avail: Vec<Lit> = clause.iter().copied().filter(|x| st.sigma.get(x) != Some(&false)).collect();
        let Some(&first) = avail.first() else {
            return Err(Error::Contract("color clause already falsified".into()));
        };
        let (a0, b0) = self.formula.pair(first);
        let g_side = clause.iter().all(|&l| self.formula.pair(l).0 == a0);
        let pos = self.position(st);
        let slot = st.entries.len();
        let regular = |e: &Entry| matches!(e, Entry::Regular(_));
        let candidates = if g_side {
            let (u, i) = (a0 / 2, a0 & 1);
            if let Some((&(_, v), &Entry::Regular(s))) = st.entries.iter().find(|(&(x, _), e)| x == u && regular(e)) {
                return Ok(NarrowAnswer::Commit(self.var(u, i, v, i ^ s as usize)));
            }
            let v = self.dup.respond(&pos, slot, Side::G, u)?;
            [self.var(u, i, v, 0), self.var(u, i, v, 1)]
        } else {
            let (v, j) = (b0 / 2, b0 & 1);
            if let Some((&(u, _), &Entry::Regular(s))) = st.entries.iter().find(|(&(_, y), e)| y == v && regular(e)) {
                return Ok(NarrowAnswer::Commit(self.var(u, j ^ s as usize, v, j)));
            }
            let u = self.dup.respond(&pos, slot, Side::H, v)?;
            [self.var(u, 0, v, j), self.var(u, 1, v, j)]
        };
        let pair = self.split(candidates[0]).0;
        if clause.contains(&candidates[0]) && !st.entries.contains_key(&pair) {
            return Ok(NarrowAnswer::Point(candidates[0], candidates[1]));
        }
        // the simulated Duplicator is lost; still take a point on a fresh pair if one is left
        Ok(match self.fresh_twins(st, &avail) {
            Some((x, y)) => NarrowAnswer::Point(x, y),
            None => NarrowAnswer::Commit(first),
        })
    }

    /// Two available literals on the same fresh base pair, preferring pairs
    /// that do not clash with a regular pebble.
    fn fresh_twins(&self, st: &DelayerState, avail: &[Lit]) -> Option<(Lit, Lit)> {
        let mut fallback = None;
        for (i, &x) in avail.iter().enumerate() {
            let (pair, _) = self.split(x);
            if st.entries.contains_key(&pair) {
                continue;
            }
            if let Some(y) = avail[i + 1..].iter().copied().find(|&y| self.split(y).0 == pair) {
                if !self.regular_elsewhere(st, pair) {
                    return Some((x, y));
                }
                fallback = fallback.or(Some((x, y)));
            }
        }
        fallback
    }

    /// Applies `z ↦ 1` after a narrow answer.
    pub fn apply_narrow(&self, st: &DelayerState, z: Lit) -> DelayerState {
        let (pair, par) = self.split(z);
        let mut next = st.clone();
        next.sigma.insert(z, true);
        if !matches!(st.entries.get(&pair), Some(Entry::Regular(_))) {
            next.entries.insert(pair, Entry::Regular(par));
        }
        next
    }

    /// Points this Delayer is guaranteed against an exhaustive Prover: a 0-1
    /// shortest path to a violated clause where point responses cost 1.
    /// With `cross_color`, Prover may also query variables pairing vertices of
    /// different colors.
    pub fn guaranteed_points(&self, cap: usize, cross_color: bool) -> Result<AdapterCheck> {
        type Key = (Vec<(Lit, bool)>, Vec<((Vertex, Vertex), Entry)>);
        let key = |s: &DelayerState| -> Key {
            (s.sigma.iter().map(|(&x, &b)| (x, b)).collect(), s.entries.iter().map(|(&p, &e)| (p, e)).collect())
        };
        let vars: Vec<Lit> =
            if cross_color { (1..=self.formula.num_vars() as Lit).collect() } else { self.same_color.clone() };

        // (cost, state, violated)
        let mut dist: FxHashMap<Key, u32> = FxHashMap::default();
        let mut parent: FxHashMap<Key, (Key, String)> = FxHashMap::default();
        let mut done: rustc_hash::FxHashSet<Key> = Default::default();
        let mut queue = VecDeque::new();
        let root = DelayerState::default();
        dist.insert(key(&root), 0);
        queue.push_back((0u32, root, false));
        let mut max_entries = 0;
        while let Some((d, st, violated)) = queue.pop_front() {
            let here = key(&st);
            if dist.get(&here).is_some_and(|&x| x < d) || !done.insert(here.clone()) {
                continue;
            }
            if done.len() > cap {
                return Err(Error::StateSpaceTooLarge { measured: done.len() as u128, cap: cap as u128 });
            }
            if violated {
                let mut line = Vec::new();
                let mut cur = here;
                while let Some((p, m)) = parent.get(&cur) {
                    line.push(m.clone());
                    cur = p.clone();
                }
                line.reverse();
                return Ok(AdapterCheck { points: Value::Finite(d), states: done.len(), max_entries, line });
            }
            max_entries = max_entries.max(st.entries.len());
            let assigned: Vec<(Lit, bool)> = st.sigma.iter().map(|(&x, &b)| (x, b)).collect();
            let mut succ: Vec<(u32, DelayerState, Lit, String)> = Vec::new();
            for mask in 0u32..(1 << assigned.len()) {
                if mask.count_ones() as usize >= self.k {
                    continue;
                }
                let keep: BTreeMap<Lit, bool> =
                    (0..assigned.len()).filter(|&i| mask >> i & 1 == 1).map(|i| assigned[i]).collect();
                let r = self.restrict(&st, &keep)?;
                for &x in &vars {
                    if r.sigma.contains_key(&x) {
                        continue;
                    }
                    let ans = self.resolution(&r, x)?;
                    match ans {
                        ResolutionAnswer::Commit(b) => {
                            let m = format!("keep {keep:?}, query {x}: commit {b}");
                            succ.push((0, self.apply_resolution(&r, x, &ans, b)?, x, m));
                        }
                        ResolutionAnswer::Point => {
                            for b in [false, true] {
                                let m = format!("keep {keep:?}, query {x}: point, set {b}");
                                succ.push((1, self.apply_resolution(&r, x, &ans, b)?, x, m));
                            }
                        }
                    }
                }
                for c in &self.color {
                    match self.narrow(&r, c)? {
                        NarrowAnswer::Commit(z) => {
                            let m = format!("keep {keep:?}, clause {c:?}: commit {z}");
                            succ.push((0, self.apply_narrow(&r, z), z, m));
                        }
                        NarrowAnswer::Point(y, z) => {
                            for w in [y, z] {
                                let m = format!("keep {keep:?}, clause {c:?}: point, set {w}");
                                succ.push((1, self.apply_narrow(&r, w), w, m));
                            }
                        }
                    }
                }
            }
            for (w, s, x, m) in succ {
                let nd = d + w;
                let ks = key(&s);
                if dist.get(&ks).is_none_or(|&old| nd < old) {
                    let bad = self.violated_at(&s.sigma, x);
                    parent.insert(ks.clone(), (here.clone(), m));
                    dist.insert(ks, nd);
                    if w == 0 {
                        queue.push_front((nd, s, bad));
                    } else {
                        queue.push_back((nd, s, bad));
                    }
                }
            }
        }
        Ok(AdapterCheck { points: Value::Infinite, states: done.len(), max_entries, line: Vec::new() })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdapterCheck {
    /// Fewest Delayer points with which Prover forces a violated clause.
    pub points: Value,
    pub states: usize,
    /// Most simulated pebble pairs held at once.
    pub max_entries: usize,
    /// An optimal Prover line, one entry per round.
    pub line: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfi::{build_cfi, EdgeLabeling, OrderedBaseGraph};
    use crate::games::blocking::BlockingSolver;
    use crate::games::SolverConfig;

    fn cfi_pair(n: usize, edges: &[(usize, usize)]) -> (ColoredGraph, ColoredGraph) {
        let base = OrderedBaseGraph::new(n, edges).unwrap();
        let f = EdgeLabeling::zero(&base);
        let g = EdgeLabeling::with_ones(&base, &edges[..1]).unwrap();
        (build_cfi(&base, &f).unwrap().graph, build_cfi(&base, &g).unwrap().graph)
    }

    #[test]
    fn transfer_rejects_connected_twins() {
        let g = ColoredGraph::from_edges(vec![0; 2], &[(0, 1)]).unwrap();
        assert!(spoiler_transfer_twinned(&g, &g, 3).is_err());
    }

    #[test]
    fn transfer_on_cycles() {
        let cycle = |n: usize, off: usize| (0..n).map(move |i| (off + i, off + (i + 1) % n));
        let c8 = ColoredGraph::from_edges(vec![0; 8], &cycle(8, 0).collect::<Vec<_>>()).unwrap();
        let two_c4 = ColoredGraph::from_edges(vec![0; 8], &cycle(4, 0).chain(cycle(4, 4)).collect::<Vec<_>>()).unwrap();
        let rep = spoiler_transfer_twinned(&c8, &two_c4, 3).unwrap();
        assert_eq!(rep.verdict, TransferVerdict::Holds, "{rep:?}");
        assert!(rep.twinned >= Value::Finite(1));
        let same = spoiler_transfer_twinned(&c8, &c8, 3).unwrap();
        assert_eq!(same.verdict, TransferVerdict::Vacuous);
    }

    #[test]
    fn adapter_scores_blocking_rounds() {
        for (n, edges) in [(2, vec![(0, 1)]), (3, vec![(0, 1), (1, 2)])] {
            let (g, h) = cfi_pair(n, &edges);
            let k = 3;
            let solver = BlockingSolver::solve(&g, &h, k, &BlockingPosition::empty(k), SolverConfig::default()).unwrap();
            let r = solver.value();
            let adapter = delayer_from_duplicator_blocking(&g, &h, k, &solver).unwrap();
            let check = adapter.guaranteed_points(1 << 22, n == 2).unwrap();
            assert!(check.points >= r, "{:?} < {r}: {:#?}", check.points, check.line);
            assert!(check.max_entries <= k);
        }
    }
}
