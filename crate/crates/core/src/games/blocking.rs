//! The k-pebble game with blocking.
//!
//! Spoiler positions are solved round by round: `W_r` (Spoiler wins within r
//! more completed rounds) is the least fixed point of
//!
//! * a regular move whose every answer is invalid or lands in `W_{r-1}`, or
//! * a blocking move on `(u, v)` whose regular marking is invalid or in
//!   `W_{r-1}` and whose blocking marking is invalid or in `W_r` itself.
//!
//! Play that cycles inside a round without completing it is a Duplicator win.

use serde::{Deserialize, Serialize};

use super::{Choice, Interner, Mark, Rules, Side, SolverConfig, Value, INF};
use crate::error::{Error, Result};
use crate::graph::{ColoredGraph, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pebble {
    pub u: Vertex,
    pub v: Vertex,
    pub mark: Mark,
}

/// Pebble maps with marks; slot `i` is `None` when pebble `i` is off the board.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockingPosition {
    pub slots: Vec<Option<Pebble>>,
}

impl BlockingPosition {
    pub fn empty(k: usize) -> Self {
        BlockingPosition { slots: vec![None; k] }
    }

    pub fn regular_pairs(&self) -> Vec<(Vertex, Vertex)> {
        self.slots.iter().flatten().filter(|p| p.mark == Mark::Regular).map(|p| (p.u, p.v)).collect()
    }

    pub fn blocking_pairs(&self) -> Vec<(Vertex, Vertex)> {
        self.slots.iter().flatten().filter(|p| p.mark == Mark::Blocking).map(|p| (p.u, p.v)).collect()
    }
}

/// Whether a position induces a partial isomorphism with blocking.
pub fn is_partial_isomorphism_with_blocking(g: &ColoredGraph, h: &ColoredGraph, pos: &BlockingPosition) -> bool {
    let regular = pos.regular_pairs();
    crate::graph::pairs_consistent(g, h, &regular)
        && pos.blocking_pairs().iter().all(|b| !regular.contains(b))
}

const SIDES: [Side; 2] = [Side::G, Side::H];

fn other(side: Side) -> Side {
    match side {
        Side::G => Side::H,
        Side::H => Side::G,
    }
}

/// Round-indexed solution of the blocking game over all positions reachable
/// from a start position.
pub struct BlockingSolver<'a> {
    rules: Rules<'a>,
    table: Interner,
    val: Vec<u32>,
    start: Option<u32>,
}

pub fn blocking_value(g: &ColoredGraph, h: &ColoredGraph, k: usize, start: &BlockingPosition) -> Result<Value> {
    Ok(BlockingSolver::solve(g, h, k, start, SolverConfig::default())?.value())
}

impl<'a> BlockingSolver<'a> {
    pub fn solve(
        g: &'a ColoredGraph,
        h: &'a ColoredGraph,
        k: usize,
        start: &BlockingPosition,
        cfg: SolverConfig,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Contract("k must be at least 1".into()));
        }
        if start.slots.len() != k {
            return Err(Error::Contract(format!("position has {} slots, expected {k}", start.slots.len())));
        }
        let rules = Rules { g, h, k, symmetry: cfg.symmetry };
        let mut table = Interner::default();
        let Some(key) = rules.key_from_slots(&slots_of(start))? else {
            return Ok(BlockingSolver { rules, table, val: Vec::new(), start: None });
        };
        table.intern(key, cfg.position_cap)?;
        let mut buf = Vec::new();
        let mut next = 0;
        while next < table.len() {
            let key = table.keys[next].clone();
            next += 1;
            let visit = |buf: &Vec<u32>, table: &mut Interner| -> Result<()> {
                if table.get(buf).is_none() {
                    table.intern(buf.clone().into_boxed_slice(), cfg.position_cap)?;
                }
                Ok(())
            };
            for choice in rules.choices(&key) {
                for side in SIDES {
                    for x in 0..rules.side_order(side) {
                        for y in 0..rules.side_order(other(side)) {
                            if rules.place_into(&key, choice, rules.regular_code(side, x, y), &mut buf) {
                                visit(&buf, &mut table)?;
                            }
                        }
                    }
                }
                for u in 0..g.order() {
                    for v in 0..h.order() {
                        if rules.place_into(&key, choice, rules.code(u, v, Mark::Blocking), &mut buf) {
                            visit(&buf, &mut table)?;
                        }
                    }
                }
            }
        }

        let n = table.len();
        let mut val = vec![INF; n];
        let mut r = 1;
        loop {
            let mut grew = false;
            loop {
                let mut changed = false;
                for p in 0..n {
                    if val[p] == INF && spoiler_move(&rules, &table, &val, &table.keys[p], r, &mut buf).is_some() {
                        val[p] = r;
                        changed = true;
                        grew = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if !grew {
                break;
            }
            r += 1;
        }
        Ok(BlockingSolver { rules, table, val, start: Some(0) })
    }

    pub fn value(&self) -> Value {
        match self.start {
            None => Value::Finite(0),
            Some(s) => Value::from_raw(self.val[s as usize]),
        }
    }

    pub fn nodes(&self) -> usize {
        self.table.len()
    }

    fn lookup(&self, pos: &BlockingPosition) -> Result<Option<u32>> {
        let Some(key) = self.rules.key_from_slots(&slots_of(pos))? else { return Ok(None) };
        self.table
            .get(&key)
            .map(|id| Some(self.val[id as usize]))
            .ok_or_else(|| Error::Contract("position not reachable from the solved start".into()))
    }

    /// Value of an arbitrary position reachable from the start; `Finite(0)` if
    /// it does not induce a partial isomorphism with blocking.
    pub fn value_of(&self, pos: &BlockingPosition) -> Result<Value> {
        Ok(self.lookup(pos)?.map_or(Value::Finite(0), Value::from_raw))
    }

    /// Rounds Duplicator can still guarantee after answering a regular move on
    /// `x` in `side` with `y`, counting the current round.
    fn regular_score(&self, pos: &BlockingPosition, slot: usize, side: Side, x: Vertex, y: Vertex) -> Result<Value> {
        let (u, v) = match side {
            Side::G => (x, y),
            Side::H => (y, x),
        };
        let mut next = pos.clone();
        next.slots[slot] = Some(Pebble { u, v, mark: Mark::Regular });
        Ok(match self.lookup(&next)? {
            None => Value::Finite(1),
            Some(r) => Value::from_raw(r.saturating_add(1)),
        })
    }

    /// Duplicator's best answer to a regular move: the vertex maximizing the
    /// remaining value (smallest index on ties).
    pub fn best_regular_response(&self, pos: &BlockingPosition, slot: usize, side: Side, x: Vertex) -> Result<(Vertex, Value)> {
        let n = self.rules.side_order(other(side));
        let mut best = (0, Value::Finite(0));
        for y in 0..n {
            let s = self.regular_score(pos, slot, side, x, y)?;
            if y == 0 || s > best.1 {
                best = (y, s);
            }
        }
        Ok(best)
    }

    /// Duplicator's best marking of a blocking move on `(u, v)` and the value
    /// it secures, counting the current round. Regular wins ties.
    pub fn best_mark(&self, pos: &BlockingPosition, slot: usize, u: Vertex, v: Vertex) -> Result<(Mark, Value)> {
        let mut next = pos.clone();
        next.slots[slot] = Some(Pebble { u, v, mark: Mark::Regular });
        let reg = match self.lookup(&next)? {
            None => Value::Finite(1),
            Some(r) => Value::from_raw(r.saturating_add(1)),
        };
        next.slots[slot] = Some(Pebble { u, v, mark: Mark::Blocking });
        let blk = match self.lookup(&next)? {
            None => Value::Finite(1),
            Some(r) => Value::from_raw(r).max(Value::Finite(1)),
        };
        Ok(if blk > reg { (Mark::Blocking, blk) } else { (Mark::Regular, reg) })
    }
}

fn slots_of(pos: &BlockingPosition) -> Vec<Option<(Vertex, Vertex, Mark)>> {
    pos.slots.iter().map(|p| p.map(|p| (p.u, p.v, p.mark))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Move {
    Regular(Choice, Side, Vertex),
    Blocking(Choice, Vertex, Vertex),
}

/// A Spoiler move witnessing membership in `W_r`, given values settled so far.
fn spoiler_move(rules: &Rules, table: &Interner, val: &[u32], key: &[u32], r: u32, buf: &mut Vec<u32>) -> Option<Move> {
    let settled = |buf: &[u32], bound: u32| val[table.get(buf).expect("successor enumerated") as usize] <= bound;
    for choice in rules.choices(key) {
        for side in SIDES {
            'x: for x in 0..rules.side_order(side) {
                for y in 0..rules.side_order(other(side)) {
                    if rules.place_into(key, choice, rules.regular_code(side, x, y), buf) && !settled(buf, r - 1) {
                        continue 'x;
                    }
                }
                return Some(Move::Regular(choice, side, x));
            }
        }
        for u in 0..rules.g.order() {
            for v in 0..rules.h.order() {
                let reg_ok = !rules.place_into(key, choice, rules.code(u, v, Mark::Regular), buf) || settled(buf, r - 1);
                if reg_ok
                    && (!rules.place_into(key, choice, rules.code(u, v, Mark::Blocking), buf) || settled(buf, r))
                {
                    return Some(Move::Blocking(choice, u, v));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::pebble::{pebble_value, PebblePosition};
    use std::collections::HashMap;

    fn graphs() -> Vec<ColoredGraph> {
        vec![
            ColoredGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2)]).unwrap(),
            ColoredGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap(),
            ColoredGraph::from_edges(vec![0; 3], &[(0, 1)]).unwrap(),
            ColoredGraph::from_edges(vec![0, 0, 1], &[(0, 1), (1, 2)]).unwrap(),
            ColoredGraph::from_edges(vec![0; 4], &[(0, 1), (2, 3)]).unwrap(),
            ColoredGraph::from_edges(vec![0; 4], &[(0, 1), (1, 2), (2, 3)]).unwrap(),
        ]
    }

    type Memo = HashMap<(BlockingPosition, u32, u32), bool>;

    /// Spoiler wins within `r` rounds using at most `b` blocking moves in the
    /// current round and at most `budget` in each later one.
    fn oracle(g: &ColoredGraph, h: &ColoredGraph, pos: &BlockingPosition, r: u32, b: u32, budget: u32, memo: &mut Memo) -> bool {
        if !is_partial_isomorphism_with_blocking(g, h, pos) {
            return true;
        }
        if r == 0 {
            return false;
        }
        if let Some(&w) = memo.get(&(pos.clone(), r, b)) {
            return w;
        }
        let k = pos.slots.len();
        let put = |slot: usize, u, v, mark| {
            let mut next = pos.clone();
            next.slots[slot] = Some(Pebble { u, v, mark });
            next
        };
        let mut won = false;
        'search: for slot in 0..k {
            for x in 0..g.order() {
                if (0..h.order()).all(|y| oracle(g, h, &put(slot, x, y, Mark::Regular), r - 1, budget, budget, memo)) {
                    won = true;
                    break 'search;
                }
            }
            for y in 0..h.order() {
                if (0..g.order()).all(|x| oracle(g, h, &put(slot, x, y, Mark::Regular), r - 1, budget, budget, memo)) {
                    won = true;
                    break 'search;
                }
            }
            if b > 0 {
                for u in 0..g.order() {
                    for v in 0..h.order() {
                        if oracle(g, h, &put(slot, u, v, Mark::Regular), r - 1, budget, budget, memo)
                            && oracle(g, h, &put(slot, u, v, Mark::Blocking), r, b - 1, budget, memo)
                        {
                            won = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        memo.insert((pos.clone(), r, b), won);
        won
    }

    #[test]
    fn agrees_with_bounded_oracle() {
        let gs = graphs();
        for g in &gs {
            for h in &gs {
                if g.order() != h.order() || g.order() > 3 {
                    continue;
                }
                for k in 1..=2 {
                    let start = BlockingPosition::empty(k);
                    let v = blocking_value(g, h, k, &start).unwrap();
                    let lit = BlockingSolver::solve(g, h, k, &start, SolverConfig::literal()).unwrap().value();
                    assert_eq!(v, lit);
                    let budget = 2 * k as u32;
                    let mut memo = Memo::new();
                    let expect = (1..=4).find(|&r| oracle(g, h, &start, r, budget, budget, &mut memo));
                    assert_eq!(expect, v.finite().filter(|&r| r <= 4), "{k}");
                }
            }
        }
    }

    #[test]
    fn never_exceeds_pebble_value() {
        let gs = graphs();
        for g in &gs {
            for h in &gs {
                for k in 1..=3 {
                    let b = blocking_value(g, h, k, &BlockingPosition::empty(k)).unwrap();
                    let p = pebble_value(g, h, k, &PebblePosition::empty(k)).unwrap();
                    assert!(b <= p, "{b} > {p}");
                }
            }
        }
    }

    #[test]
    fn blocked_regular_pair_is_already_lost() {
        let g = &graphs()[0];
        let mut pos = BlockingPosition::empty(2);
        pos.slots[0] = Some(Pebble { u: 1, v: 1, mark: Mark::Blocking });
        pos.slots[1] = Some(Pebble { u: 1, v: 1, mark: Mark::Regular });
        assert_eq!(blocking_value(g, g, 2, &pos).unwrap(), Value::Finite(0));
    }

    #[test]
    fn best_responses_realize_the_value() {
        let gs = graphs();
        let (g, h) = (&gs[0], &gs[1]);
        let s = BlockingSolver::solve(g, h, 2, &BlockingPosition::empty(2), SolverConfig::default()).unwrap();
        let root = BlockingPosition::empty(2);
        let v = s.value();
        for x in 0..3 {
            let (_, score) = s.best_regular_response(&root, 0, Side::G, x).unwrap();
            assert!(score >= v);
        }
        for u in 0..3 {
            for w in 0..3 {
                let (_, score) = s.best_mark(&root, 0, u, w).unwrap();
                assert!(score >= v);
            }
        }
    }
}
