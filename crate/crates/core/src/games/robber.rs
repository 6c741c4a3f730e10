//! Duplicator for the blocking pebble game on precompressed CFI graphs, driven
//! by a robber strategy of the compressed and blocking Cops and Robber game.
//!
//! The Duplicator keeps the cumulative twisting `χ` of all robber moves and
//! answers through `ψ_χ : (u, a) ↦ (u, a + χ(u))`, an isomorphism
//! `CFI(G,f) → CFI(G,g)` away from the robber's edge. Regular pebbles become
//! cops on the class of their origin; a blocking pebble on `((u,a), (u,b))`
//! becomes a roadblock `a + b + χ(u)` on the class of `u`, recomputed for the
//! current `χ`, so that no robber move ever maps `(u,a)` to `(u,b)`.

use rustc_hash::FxHashMap;

use super::blocking::{is_partial_isomorphism_with_blocking, BlockingPosition, Pebble};
use super::{Mark, Side};
use crate::cfi::{build_cfi, precompress, twist_distance, CfiInstance, Compression, EdgeLabeling, OrderedBaseGraph};
use crate::cops::{check_move, move_target, Arena, Edge, Piece, RobberStrategy, RobberView};
use crate::error::{Error, Result};
use crate::graph::{ColoredGraph, Vertex};
use crate::grid::Roadblock;

/// Duplicator state: cumulative twisting as per-vertex outgoing masks, and the robber edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RobberDupState {
    pub chi: Vec<u32>,
    pub edge: Edge,
}

pub struct RobberDuplicator<'a, R> {
    arena: Arena<'a>,
    robber: &'a R,
    g: CfiInstance,
    h: CfiInstance,
    gp: ColoredGraph,
    hp: ColoredGraph,
    start: Edge,
}

/// `f` and `g` must twist exactly the robber's start edge.
pub fn duplicator_from_robber<'a, R: RobberStrategy>(
    base: &'a OrderedBaseGraph,
    eq: &'a Compression,
    f: &EdgeLabeling,
    g: &EdgeLabeling,
    robber: &'a R,
) -> Result<RobberDuplicator<'a, R>> {
    let arena = Arena::new(base, eq)?;
    let start = robber.start(&arena)?;
    let start = arena.edge(start.0, start.1)?;
    if twist_distance(f, g)? != 1 || f.value(base, start.0, start.1) == g.value(base, start.0, start.1) {
        return Err(Error::Contract("labelings must differ exactly on the robber's start edge".into()));
    }
    let gi = build_cfi(base, f)?;
    let hi = build_cfi(base, g)?;
    let gp = precompress(&gi, eq)?;
    let hp = precompress(&hi, eq)?;
    Ok(RobberDuplicator { arena, robber, g: gi, h: hi, gp, hp, start })
}

impl<'a, R: RobberStrategy> RobberDuplicator<'a, R> {
    pub fn graphs(&self) -> (&ColoredGraph, &ColoredGraph) {
        (&self.gp, &self.hp)
    }

    pub fn initial(&self) -> RobberDupState {
        RobberDupState { chi: vec![0; self.arena.base.order()], edge: self.start }
    }

    /// `ψ_χ` on a G vertex, or its inverse on an H vertex.
    pub fn image(&self, st: &RobberDupState, side: Side, x: Vertex) -> Vertex {
        match side {
            Side::G => {
                let u = self.g.origin(x);
                self.h.vertex(u, self.g.tuple(x) ^ st.chi[u])
            }
            Side::H => {
                let u = self.h.origin(x);
                self.g.vertex(u, self.h.tuple(x) ^ st.chi[u])
            }
        }
    }

    /// Cops and (recomputed) roadblocks for the pebbles outside `skip`.
    fn board(&self, st: &RobberDupState, pos: &BlockingPosition, skip: usize) -> (Vec<usize>, Vec<Roadblock>) {
        let eq = self.arena.eq;
        let mut cops = vec![];
        let mut roadblocks = vec![];
        for (i, p) in pos.slots.iter().enumerate() {
            let Some(p) = p else { continue };
            if i == skip {
                continue;
            }
            let (u, w) = (self.g.origin(p.u), self.h.origin(p.v));
            match p.mark {
                Mark::Regular => cops.push(eq.class_of(u)),
                Mark::Blocking if u == w => {
                    let mask = self.g.tuple(p.u) ^ self.h.tuple(p.v) ^ st.chi[u];
                    roadblocks.push(Roadblock { class: eq.class_of(u), mask });
                }
                Mark::Blocking => {}
            }
        }
        cops.sort_unstable();
        cops.dedup();
        roadblocks.sort_unstable();
        roadblocks.dedup();
        (cops, roadblocks)
    }

    /// Regular move: Spoiler puts pebble `slot` on `x` in `side`. The robber
    /// answers the announced cop; the Duplicator answers through the new `ψ`.
    pub fn respond(
        &self,
        st: &RobberDupState,
        pos: &BlockingPosition,
        slot: usize,
        side: Side,
        x: Vertex,
    ) -> Result<(RobberDupState, Vertex)> {
        let origin = match side {
            Side::G => self.g.origin(x),
            Side::H => self.h.origin(x),
        };
        let (cops, roadblocks) = self.board(st, pos, slot);
        let view = RobberView {
            edge: st.edge,
            cops: &cops,
            roadblocks: &roadblocks,
            announced: Piece::Cop(self.arena.eq.class_of(origin)),
        };
        let mut next = st.clone();
        if let Some(t) = self.robber.respond(&self.arena, &view)? {
            let checks = check_move(&self.arena, st.edge, &t, &cops, &roadblocks);
            if let Some(bad) = checks.first_failure() {
                return Err(Error::Strategy(format!("robber move fails: {bad}")));
            }
            next.edge = move_target(st.edge, &t).expect("checked");
            for (u, m) in next.chi.iter_mut().enumerate() {
                *m ^= t.incidence(self.arena.base, u);
            }
        }
        let y = self.image(&next, side, x);
        Ok((next, y))
    }

    /// Blocking move on `(a, b)`. A pair off the current map is marked
    /// blocking. A pair on it is treated as an announced cop: the robber moves,
    /// and the pair is marked regular exactly when it stays on the new map.
    pub fn mark(
        &self,
        st: &RobberDupState,
        pos: &BlockingPosition,
        slot: usize,
        a: Vertex,
        b: Vertex,
    ) -> Result<(Mark, RobberDupState)> {
        if self.image(st, Side::G, a) != b {
            return Ok((Mark::Blocking, st.clone()));
        }
        let (next, y) = self.respond(st, pos, slot, Side::G, a)?;
        Ok((if y == b { Mark::Regular } else { Mark::Blocking }, next))
    }
}

/// Result of the exhaustive Spoiler search against a robber-driven Duplicator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurvivalReport {
    /// Rounds the Duplicator survives, at most `max_rounds`.
    pub survived: u32,
    pub max_rounds: u32,
    pub nodes: usize,
}

type Key = (Vec<(Vertex, Vertex, Mark)>, RobberDupState, u32);

struct Search<'s, 'a, R> {
    dup: &'s RobberDuplicator<'a, R>,
    k: usize,
    memo: FxHashMap<Key, bool>,
    cap: usize,
}

fn canonical(pos: &BlockingPosition) -> Vec<(Vertex, Vertex, Mark)> {
    let mut v: Vec<_> = pos.slots.iter().flatten().map(|p| (p.u, p.v, p.mark)).collect();
    v.sort_unstable();
    v
}

fn from_canonical(k: usize, pebbles: &[(Vertex, Vertex, Mark)]) -> BlockingPosition {
    let mut pos = BlockingPosition::empty(k);
    for (i, &(u, v, mark)) in pebbles.iter().enumerate() {
        pos.slots[i] = Some(Pebble { u, v, mark });
    }
    pos
}

impl<R: RobberStrategy> Search<'_, '_, R> {
    fn valid(&self, pos: &BlockingPosition) -> bool {
        is_partial_isomorphism_with_blocking(&self.dup.gp, &self.dup.hp, pos)
    }

    /// Slots Spoiler may use: every occupied one, plus one empty slot.
    fn slots(pos: &BlockingPosition) -> Vec<usize> {
        let mut out: Vec<usize> = (0..pos.slots.len()).filter(|&i| pos.slots[i].is_some()).collect();
        if let Some(i) = pos.slots.iter().position(|s| s.is_none()) {
            out.push(i);
        }
        out
    }

    fn with(pos: &BlockingPosition, slot: usize, p: Option<Pebble>) -> BlockingPosition {
        let mut next = pos.clone();
        next.slots[slot] = p;
        next
    }

    /// Spoiler reaches an invalid position within `r` completed rounds.
    fn wins(&mut self, pos: &BlockingPosition, st: &RobberDupState, r: u32) -> Result<bool> {
        let key = (canonical(pos), st.clone(), r);
        if let Some(&w) = self.memo.get(&key) {
            return Ok(w);
        }
        if self.memo.len() >= self.cap {
            return Err(Error::StateSpaceTooLarge { measured: self.memo.len() as u128 + 1, cap: self.cap as u128 });
        }
        let (nh, ng) = (self.dup.hp.order(), self.dup.gp.order());
        // positions Spoiler reaches inside this round: blocking pebbles the
        // Duplicator marks blocking, and pebbles lifted off the board
        let mut seen = vec![(canonical(pos), st.clone())];
        let mut queue = vec![(pos.clone(), st.clone())];
        let mut win = false;
        'round: while let Some((p, st)) = queue.pop() {
            let st = &st;
            for slot in Self::slots(&p) {
                let mut inner = vec![];
                if p.slots[slot].is_some() {
                    inner.push((Self::with(&p, slot, None), st.clone()));
                }
                for side in [Side::G, Side::H] {
                    let n = if side == Side::G { ng } else { nh };
                    for x in 0..n {
                        let (st2, y) = self.dup.respond(st, &p, slot, side, x)?;
                        let (u, v) = if side == Side::G { (x, y) } else { (y, x) };
                        let next = Self::with(&p, slot, Some(Pebble { u, v, mark: Mark::Regular }));
                        if !self.valid(&next) || (r > 1 && self.wins(&next, &st2, r - 1)?) {
                            win = true;
                            break 'round;
                        }
                    }
                }
                for a in 0..ng {
                    for b in 0..nh {
                        // pairs across colors never meet a regular pebble: same as lifting
                        if self.dup.gp.color(a) != self.dup.hp.color(b) {
                            continue;
                        }
                        match self.dup.mark(st, &p, slot, a, b)? {
                            (Mark::Regular, st2) => {
                                let next = Self::with(&p, slot, Some(Pebble { u: a, v: b, mark: Mark::Regular }));
                                if !self.valid(&next) || (r > 1 && self.wins(&next, &st2, r - 1)?) {
                                    win = true;
                                    break 'round;
                                }
                            }
                            (Mark::Blocking, st2) => {
                                inner.push((Self::with(&p, slot, Some(Pebble { u: a, v: b, mark: Mark::Blocking })), st2))
                            }
                        }
                    }
                }
                for (next, st2) in inner {
                    if !self.valid(&next) {
                        win = true;
                        break 'round;
                    }
                    let c = (canonical(&next), st2);
                    if !seen.contains(&c) {
                        queue.push((from_canonical(self.k, &c.0), c.1.clone()));
                        seen.push(c);
                    }
                }
            }
        }
        self.memo.insert(key, win);
        Ok(win)
    }
}

/// Rounds the robber-driven Duplicator survives against every Spoiler with
/// `k` pebbles, searched up to `max_rounds`.
pub fn robber_duplicator_survival<R: RobberStrategy>(
    dup: &RobberDuplicator<'_, R>,
    k: usize,
    max_rounds: u32,
    cap: usize,
) -> Result<SurvivalReport> {
    let mut search = Search { dup, k, memo: FxHashMap::default(), cap };
    let empty = BlockingPosition::empty(k);
    let st = dup.initial();
    let mut survived = max_rounds;
    for r in 1..=max_rounds {
        if search.wins(&empty, &st, r)? {
            survived = r - 1;
            break;
        }
    }
    Ok(SurvivalReport { survived, max_rounds, nodes: search.memo.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cops::{minimax_cops, ExhaustiveMoves, OracleRobber};
    use crate::games::blocking::blocking_value;
    use crate::games::Value;

    fn triangle() -> (OrderedBaseGraph, Compression) {
        (OrderedBaseGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(), Compression::singletons(3))
    }

    #[test]
    fn round_zero_is_valid() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let moves = ExhaustiveMoves::new(&arena).unwrap();
        let (_, table) = minimax_cops(&arena, 3, true, 6, &moves, &[(0, 1)], 100_000).unwrap();
        let robber = OracleRobber { table: &table, moves: &moves, start: (0, 1) };
        let f = EdgeLabeling::zero(&b);
        let g = EdgeLabeling::with_ones(&b, &[(0, 1)]).unwrap();
        let dup = duplicator_from_robber(&b, &eq, &f, &g, &robber).unwrap();
        let (gp, hp) = dup.graphs();
        assert!(is_partial_isomorphism_with_blocking(gp, hp, &BlockingPosition::empty(3)));
        // wrong start edge
        let g2 = EdgeLabeling::with_ones(&b, &[(1, 2)]).unwrap();
        assert!(duplicator_from_robber(&b, &eq, &f, &g2, &robber).is_err());
    }

    #[test]
    fn survives_as_long_as_the_robber() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let moves = ExhaustiveMoves::new(&arena).unwrap();
        for k in [2usize, 3] {
            let (out, table) = minimax_cops(&arena, k, true, 6, &moves, &[(0, 1)], 100_000).unwrap();
            let robber = OracleRobber { table: &table, moves: &moves, start: (0, 1) };
            let f = EdgeLabeling::zero(&b);
            let g = EdgeLabeling::with_ones(&b, &[(0, 1)]).unwrap();
            let dup = duplicator_from_robber(&b, &eq, &f, &g, &robber).unwrap();
            let rep = robber_duplicator_survival(&dup, k, 4, 1_000_000).unwrap();
            assert!(rep.survived >= out.robber_survival().min(4), "k={k}: {rep:?} vs {out:?}");
            // no Duplicator beats the optimal one
            let (gp, hp) = dup.graphs();
            let best = blocking_value(gp, hp, k, &BlockingPosition::empty(k)).unwrap();
            if let Value::Finite(v) = best {
                assert!(rep.survived < v);
            }
        }
    }
}
