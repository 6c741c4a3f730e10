//! The r-round k-pebble game: a fixed-point solver over the reachable
//! position space, an independent memoized game-tree search, and Spoiler
//! strategy certificates.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{Interner, Rules, Side, SolverConfig, Value, INF};
use crate::error::{Error, Result};
use crate::graph::{pairs_consistent, ColoredGraph, Vertex};

/// Pebble `i` lies on `alpha[i]` in G and `beta[i]` in H.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PebblePosition {
    pub alpha: Vec<Option<Vertex>>,
    pub beta: Vec<Option<Vertex>>,
}

impl PebblePosition {
    pub fn empty(k: usize) -> Self {
        PebblePosition { alpha: vec![None; k], beta: vec![None; k] }
    }

    pub fn from_pairs(k: usize, pairs: &[(Vertex, Vertex)]) -> Result<Self> {
        if pairs.len() > k {
            return Err(Error::Contract(format!("{} pairs for {k} pebbles", pairs.len())));
        }
        let mut p = Self::empty(k);
        for (i, &(a, b)) in pairs.iter().enumerate() {
            p.alpha[i] = Some(a);
            p.beta[i] = Some(b);
        }
        Ok(p)
    }

    pub fn pairs(&self) -> Vec<(Vertex, Vertex)> {
        self.alpha.iter().zip(&self.beta).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect()
    }

    fn check(&self, g: &ColoredGraph, h: &ColoredGraph, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::Contract("k must be at least 1".into()));
        }
        if self.alpha.len() != k || self.beta.len() != k {
            return Err(Error::Contract(format!("position has {} slots, expected {k}", self.alpha.len())));
        }
        for (a, b) in self.alpha.iter().zip(&self.beta) {
            match (a, b) {
                (Some(a), Some(b)) if *a >= g.order() || *b >= h.order() => {
                    return Err(Error::Contract("pebble on a nonexistent vertex".into()))
                }
                (Some(_), None) | (None, Some(_)) => {
                    return Err(Error::Contract("pebble maps have different domains".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

const SIDES: [Side; 2] = [Side::G, Side::H];

/// Fixed-point solution of the pebble game from one start position.
pub struct PebbleSolver<'a> {
    rules: Rules<'a>,
    table: Interner,
    val: Vec<u32>,
    start: Option<u32>,
}

/// Solves the game with default settings and returns the value only.
pub fn pebble_value(g: &ColoredGraph, h: &ColoredGraph, k: usize, start: &PebblePosition) -> Result<Value> {
    Ok(PebbleSolver::solve(g, h, k, start, SolverConfig::default())?.value())
}

impl<'a> PebbleSolver<'a> {
    /// Enumerates every position reachable from `start` and assigns values by
    /// least fixed point: a position has value r if some Spoiler move leaves
    /// Duplicator only responses that are invalid or of value below r.
    pub fn solve(
        g: &'a ColoredGraph,
        h: &'a ColoredGraph,
        k: usize,
        start: &PebblePosition,
        cfg: SolverConfig,
    ) -> Result<Self> {
        start.check(g, h, k)?;
        let rules = Rules { g, h, k, symmetry: cfg.symmetry };
        let slots: Vec<_> =
            start.pairs_by_slot().into_iter().map(|p| p.map(|(a, b)| (a, b, super::Mark::Regular))).collect();
        let mut table = Interner::default();
        let Some(key) = rules.key_from_slots(&slots)? else {
            return Ok(PebbleSolver { rules, table, val: Vec::new(), start: None });
        };
        table.intern(key, cfg.position_cap)?;
        let mut buf = Vec::new();
        let mut next = 0;
        while next < table.len() {
            let key = table.keys[next].clone();
            next += 1;
            for choice in rules.choices(&key) {
                for side in SIDES {
                    for x in 0..rules.side_order(side) {
                        for y in 0..rules.side_order(other(side)) {
                            if rules.place_into(&key, choice, rules.regular_code(side, x, y), &mut buf)
                                && table.get(&buf).is_none()
                            {
                                table.intern(buf.clone().into_boxed_slice(), cfg.position_cap)?;
                            }
                        }
                    }
                }
            }
        }

        let n = table.len();
        let mut val = vec![INF; n];
        let mut r = 1;
        loop {
            let fresh: Vec<usize> = (0..n)
                .filter(|&p| val[p] == INF && best_move(&rules, &table, &val, &table.keys[p], r, &mut buf).is_some())
                .collect();
            if fresh.is_empty() {
                break;
            }
            for p in fresh {
                val[p] = r;
            }
            r += 1;
        }
        Ok(PebbleSolver { rules, table, val, start: Some(0) })
    }

    pub fn value(&self) -> Value {
        match self.start {
            None => Value::Finite(0),
            Some(s) => Value::from_raw(self.val[s as usize]),
        }
    }

    /// Number of positions enumerated.
    pub fn nodes(&self) -> usize {
        self.table.len()
    }

    fn literal_value(&self, lit: &[u32]) -> Option<u32> {
        let key = self.rules.canonical(lit);
        self.table.get(&key).map(|id| self.val[id as usize])
    }

    /// Spoiler strategy tree realizing the value from the start position, over
    /// literal pebble positions. `None` if the value is infinite, zero, or the
    /// tree would exceed `max_nodes`.
    pub fn certificate(&self, start: &PebblePosition, max_nodes: usize) -> Result<Option<StrategyNode>> {
        start.check(self.rules.g, self.rules.h, self.rules.k)?;
        let lit: Vec<u32> = start
            .pairs_by_slot()
            .into_iter()
            .map(|p| p.map_or(0, |(a, b)| self.rules.code(a, b, super::Mark::Regular)))
            .collect();
        match self.literal_value(&lit) {
            Some(v) if v != INF && v > 0 => {}
            _ => return Ok(None),
        }
        let mut budget = max_nodes;
        self.build(&lit, &mut budget)
    }

    fn build(&self, lit: &[u32], budget: &mut usize) -> Result<Option<StrategyNode>> {
        if *budget == 0 {
            return Ok(None);
        }
        *budget -= 1;
        let r = self.literal_value(lit).ok_or_else(|| Error::Strategy("position missing from table".into()))?;
        let rules = Rules { symmetry: false, ..self.rules };
        let mut buf = Vec::new();
        for slot in 0..rules.k {
            for side in SIDES {
                'x: for x in 0..rules.side_order(side) {
                    let mut next = Vec::new();
                    for y in 0..rules.side_order(other(side)) {
                        if rules.place_into(lit, Some(slot), rules.regular_code(side, x, y), &mut buf) {
                            match self.literal_value(&buf) {
                                Some(v) if v < r => next.push((y, Some(buf.clone()))),
                                _ => continue 'x,
                            }
                        } else {
                            next.push((y, None));
                        }
                    }
                    let mut responses = Vec::with_capacity(next.len());
                    for (y, succ) in next {
                        let sub = match succ {
                            None => None,
                            Some(s) => match self.build(&s, budget)? {
                                Some(t) => Some(Box::new(t)),
                                None => return Ok(None),
                            },
                        };
                        responses.push(ResponseBranch { vertex: y, next: sub });
                    }
                    return Ok(Some(StrategyNode { side, pebble: slot, vertex: x, responses }));
                }
            }
        }
        Err(Error::Strategy(format!("no move realizes value {r}")))
    }
}

impl PebblePosition {
    fn pairs_by_slot(&self) -> Vec<Option<(Vertex, Vertex)>> {
        self.alpha.iter().zip(&self.beta).map(|(a, b)| Some(((*a)?, (*b)?))).collect()
    }
}

fn other(side: Side) -> Side {
    match side {
        Side::G => Side::H,
        Side::H => Side::G,
    }
}

/// First Spoiler move from `key` all of whose valid responses have value below `r`.
fn best_move(
    rules: &Rules,
    table: &Interner,
    val: &[u32],
    key: &[u32],
    r: u32,
    buf: &mut Vec<u32>,
) -> Option<(super::Choice, Side, Vertex)> {
    for choice in rules.choices(key) {
        for side in SIDES {
            'x: for x in 0..rules.side_order(side) {
                for y in 0..rules.side_order(other(side)) {
                    if rules.place_into(key, choice, rules.regular_code(side, x, y), buf) {
                        let id = table.get(buf).expect("successor enumerated");
                        if val[id as usize] >= r {
                            continue 'x;
                        }
                    }
                }
                return Some((choice, side, x));
            }
        }
    }
    None
}

/// A Spoiler move in a strategy tree: put `pebble` on `vertex` of `side`, then
/// branch on every Duplicator answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyNode {
    pub side: Side,
    pub pebble: usize,
    pub vertex: Vertex,
    pub responses: Vec<ResponseBranch>,
}

/// Duplicator answers `vertex`; `next` is absent when the answer already loses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseBranch {
    pub vertex: Vertex,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<Box<StrategyNode>>,
}

impl StrategyNode {
    pub fn depth(&self) -> u32 {
        1 + self.responses.iter().filter_map(|r| r.next.as_ref()).map(|n| n.depth()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.responses.iter().filter_map(|r| r.next.as_ref()).map(|n| n.size()).sum::<usize>()
    }
}

/// Replays a strategy tree against every Duplicator answer and returns its depth.
pub fn verify_certificate(
    g: &ColoredGraph,
    h: &ColoredGraph,
    k: usize,
    start: &PebblePosition,
    tree: &StrategyNode,
) -> Result<u32> {
    start.check(g, h, k)?;
    let pos = start.pairs_by_slot();
    if !pairs_consistent(g, h, &start.pairs()) {
        return Err(Error::Strategy("start position is not a partial isomorphism".into()));
    }
    verify_node(g, h, &pos, tree)
}

fn verify_node(g: &ColoredGraph, h: &ColoredGraph, pos: &[Option<(Vertex, Vertex)>], node: &StrategyNode) -> Result<u32> {
    let (own, opp) = match node.side {
        Side::G => (g.order(), h.order()),
        Side::H => (h.order(), g.order()),
    };
    if node.pebble >= pos.len() || node.vertex >= own {
        return Err(Error::Strategy(format!("illegal move {:?}", (node.side, node.pebble, node.vertex))));
    }
    let answered: Vec<Vertex> = node.responses.iter().map(|r| r.vertex).collect();
    if answered != (0..opp).collect::<Vec<_>>() {
        return Err(Error::Strategy("responses do not cover every answer exactly once".into()));
    }
    let mut depth = 1;
    for r in &node.responses {
        let mut next = pos.to_vec();
        next[node.pebble] = Some(match node.side {
            Side::G => (node.vertex, r.vertex),
            Side::H => (r.vertex, node.vertex),
        });
        let pairs: Vec<_> = next.iter().flatten().copied().collect();
        let valid = pairs_consistent(g, h, &pairs);
        match (&r.next, valid) {
            (None, false) => {}
            (Some(sub), true) => depth = depth.max(1 + verify_node(g, h, &next, sub)?),
            (None, true) => return Err(Error::Strategy(format!("answer {} survives but has no continuation", r.vertex))),
            (Some(_), false) => return Err(Error::Strategy(format!("answer {} already lost", r.vertex))),
        }
    }
    Ok(depth)
}

/// Result of [`pebble_value_search`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub value: Value,
    pub nodes: usize,
}

/// Independent solver: greatest-fixed-point Duplicator safe set for infinite
/// values, otherwise iterative deepening of a memoized game tree. Positions are
/// literal slot arrays, validity is checked with [`pairs_consistent`].
pub fn pebble_value_search(
    g: &ColoredGraph,
    h: &ColoredGraph,
    k: usize,
    start: &PebblePosition,
    cap: usize,
) -> Result<SearchOutcome> {
    start.check(g, h, k)?;
    if !pairs_consistent(g, h, &start.pairs()) {
        return Ok(SearchOutcome { value: Value::Finite(0), nodes: 0 });
    }
    let s = Search { g, h, k };
    let root: Vec<u32> = start.pairs_by_slot().into_iter().map(|p| p.map_or(0, |(a, b)| s.enc(a, b))).collect();
    let mut index: FxHashMap<Vec<u32>, usize> = FxHashMap::default();
    let mut keys = vec![root.clone()];
    index.insert(root, 0);
    let mut i = 0;
    while i < keys.len() {
        let key = keys[i].clone();
        i += 1;
        s.for_each_move(&key, |_, succs| {
            for succ in succs.iter().flatten() {
                if !index.contains_key(succ) {
                    if keys.len() >= cap {
                        return Err(Error::StateSpaceTooLarge { measured: keys.len() as u128 + 1, cap: cap as u128 });
                    }
                    index.insert(succ.clone(), keys.len());
                    keys.push(succ.clone());
                }
            }
            Ok(false)
        })?;
    }

    let n = keys.len();
    let mut safe = vec![true; n];
    loop {
        let mut changed = false;
        for p in 0..n {
            if safe[p] {
                let refuted = s.for_each_move(&keys[p], |_, succs| {
                    Ok(succs.iter().all(|o| o.as_ref().is_none_or(|q| !safe[index[q]])))
                })?;
                if refuted {
                    safe[p] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if safe[0] {
        return Ok(SearchOutcome { value: Value::Infinite, nodes: n });
    }
    let mut memo = Memo { lose_upto: vec![0; n], win_at: vec![INF; n] };
    for r in 1..=n as u32 {
        if s.wins(&keys[0], 0, r, &index, &mut memo)? {
            return Ok(SearchOutcome { value: Value::Finite(r), nodes: n });
        }
    }
    Err(Error::Strategy("unsafe start position without a finite win".into()))
}

struct Search<'a> {
    g: &'a ColoredGraph,
    h: &'a ColoredGraph,
    k: usize,
}

struct Memo {
    lose_upto: Vec<u32>,
    win_at: Vec<u32>,
}

impl Search<'_> {
    fn enc(&self, a: Vertex, b: Vertex) -> u32 {
        (a * self.h.order() + b) as u32 + 1
    }

    fn dec(&self, c: u32) -> (Vertex, Vertex) {
        let c = c as usize - 1;
        (c / self.h.order(), c % self.h.order())
    }

    /// Calls `f` with the successors of each Spoiler move (`None` for answers
    /// that break partial isomorphism); stops early once `f` returns true.
    fn for_each_move(
        &self,
        key: &[u32],
        mut f: impl FnMut((usize, Side, Vertex), &[Option<Vec<u32>>]) -> Result<bool>,
    ) -> Result<bool> {
        let mut succs = Vec::new();
        for slot in 0..self.k {
            for side in SIDES {
                let (own, opp) = match side {
                    Side::G => (self.g.order(), self.h.order()),
                    Side::H => (self.h.order(), self.g.order()),
                };
                for x in 0..own {
                    succs.clear();
                    for y in 0..opp {
                        let mut next = key.to_vec();
                        next[slot] = match side {
                            Side::G => self.enc(x, y),
                            Side::H => self.enc(y, x),
                        };
                        let pairs: Vec<_> = next.iter().filter(|&&c| c != 0).map(|&c| self.dec(c)).collect();
                        succs.push(pairs_consistent(self.g, self.h, &pairs).then_some(next));
                    }
                    if f((slot, side, x), &succs)? {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    fn wins(&self, key: &[u32], id: usize, r: u32, index: &FxHashMap<Vec<u32>, usize>, memo: &mut Memo) -> Result<bool> {
        if memo.win_at[id] <= r {
            return Ok(true);
        }
        if memo.lose_upto[id] >= r {
            return Ok(false);
        }
        let won = self.for_each_move(key, |_, succs| {
            for q in succs.iter().flatten() {
                if !self.wins(q, index[q], r - 1, index, memo)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })?;
        if won {
            memo.win_at[id] = r;
        } else {
            memo.lose_upto[id] = r;
        }
        Ok(won)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfi::{build_cfi, EdgeLabeling, OrderedBaseGraph};

    fn cycle(n: usize, color: u32) -> ColoredGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        ColoredGraph::from_edges(vec![color; n], &edges).unwrap()
    }

    fn cfi_triangle_pair() -> (ColoredGraph, ColoredGraph) {
        let base = OrderedBaseGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let f = EdgeLabeling::zero(&base);
        let g = EdgeLabeling::with_ones(&base, &[(0, 1)]).unwrap();
        (build_cfi(&base, &f).unwrap().graph, build_cfi(&base, &g).unwrap().graph)
    }

    #[test]
    fn identical_graphs_are_never_distinguished() {
        let g = cycle(5, 0);
        for k in 1..=3 {
            assert_eq!(pebble_value(&g, &g, k, &PebblePosition::empty(k)).unwrap(), Value::Infinite);
        }
    }

    #[test]
    fn differently_colored_cliques_fall_in_one_round() {
        let g = ColoredGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let h = ColoredGraph::from_edges(vec![1; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(pebble_value(&g, &h, 1, &PebblePosition::empty(1)).unwrap(), Value::Finite(1));
    }

    #[test]
    fn invalid_start_is_value_zero() {
        let g = cycle(4, 0);
        let start = PebblePosition::from_pairs(2, &[(0, 0), (1, 2)]).unwrap();
        assert_eq!(pebble_value(&g, &g, 2, &start).unwrap(), Value::Finite(0));
    }

    #[test]
    fn cfi_triangle_needs_three_pebbles() {
        let (g, h) = cfi_triangle_pair();
        let v3 = pebble_value(&g, &h, 3, &PebblePosition::empty(3)).unwrap();
        assert!(v3.finite().is_some());
        assert_eq!(pebble_value(&g, &h, 2, &PebblePosition::empty(2)).unwrap(), Value::Infinite);
        let b = pebble_value_search(&g, &h, 3, &PebblePosition::empty(3), 1 << 22).unwrap();
        assert_eq!(b.value, v3);
    }

    #[test]
    fn c6_vs_two_triangles() {
        let g = cycle(6, 0);
        let h = ColoredGraph::from_edges(vec![0; 6], &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let start = PebblePosition::empty(3);
        let a = pebble_value(&g, &h, 3, &start).unwrap();
        let lit = PebbleSolver::solve(&g, &h, 3, &start, SolverConfig::literal()).unwrap().value();
        let b = pebble_value_search(&g, &h, 3, &start, 1 << 22).unwrap().value;
        assert_eq!(a, lit);
        assert_eq!(a, b);
        assert!(a.finite().is_some());
        assert_eq!(pebble_value(&g, &h, 2, &PebblePosition::empty(2)).unwrap(), Value::Infinite);
    }

    #[test]
    fn certificate_depth_matches_value() {
        let (g, h) = cfi_triangle_pair();
        let start = PebblePosition::empty(3);
        for cfg in [SolverConfig::default(), SolverConfig::literal()] {
            let s = PebbleSolver::solve(&g, &h, 3, &start, cfg).unwrap();
            let tree = s.certificate(&start, 1 << 20).unwrap().expect("finite value");
            assert_eq!(Value::Finite(verify_certificate(&g, &h, 3, &start, &tree).unwrap()), s.value());
        }
    }

    #[test]
    fn verifier_rejects_tampered_tree() {
        let g = cycle(6, 0);
        let h = ColoredGraph::from_edges(vec![0; 6], &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let start = PebblePosition::empty(3);
        let s = PebbleSolver::solve(&g, &h, 3, &start, SolverConfig::default()).unwrap();
        let mut tree = s.certificate(&start, 1 << 20).unwrap().unwrap();
        tree.responses.pop();
        assert!(verify_certificate(&g, &h, 3, &start, &tree).is_err());
    }

    #[test]
    fn position_cap_is_enforced() {
        let g = cycle(6, 0);
        let cfg = SolverConfig { symmetry: true, position_cap: 5 };
        let err = PebbleSolver::solve(&g, &g, 2, &PebblePosition::empty(2), cfg).err().unwrap();
        assert!(matches!(err, Error::StateSpaceTooLarge { .. }));
    }
}
