//! The end-switching robber on cylindrical grids, its move generator and a
//! greedy sparring partner for the cops.

use std::collections::{BTreeSet, VecDeque};

use super::minimax::MoveSource;
use super::{check_move, Announcement, Arena, CopStrategy, CopsState, Edge, Piece, RobberStrategy, RobberView};
use crate::cfi::Twisting;
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::grid::{
    end_to_end_twisting_search, is_t_critical, minimal_semi_separators, CylindricalGrid, Roadblock, RowCompression,
};

/// Search budget for semi-separator enumeration inside the robber.
const SEPARATOR_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum End {
    Left,
    Right,
}

/// Grid-level move helpers shared by the robber and [`GridMoves`].
struct Board<'g> {
    grid: &'g CylindricalGrid,
    rc: &'g RowCompression,
}

impl<'g> Board<'g> {
    fn end_of_vertex(&self, v: Vertex) -> Option<End> {
        if self.grid.in_left_end(v) {
            Some(End::Left)
        } else if self.grid.in_right_end(v) {
            Some(End::Right)
        } else {
            None
        }
    }

    fn end_of(&self, e: Edge) -> Option<End> {
        let a = self.end_of_vertex(e.0)?;
        (self.end_of_vertex(e.1) == Some(a)).then_some(a)
    }

    /// Base edges inside one end, by distance from `near`.
    fn end_edges(&self, end: End, near: Edge) -> Vec<Edge> {
        let base = self.grid.base();
        let n = base.order();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::from([near.0, near.1]);
        dist[near.0] = 0;
        dist[near.1] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in base.neighbors(u) {
                if dist[v] == usize::MAX && self.end_of_vertex(v) == Some(end) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut edges: Vec<Edge> =
            base.edges().iter().copied().filter(|&e| self.end_of(e) == Some(end) && dist[e.0] != usize::MAX).collect();
        edges.sort_by_key(|&(a, b)| (dist[a].min(dist[b]), a, b));
        edges
    }

    /// Twisting moving a twist from `from` to `to` along a path inside the end
    /// holding both, avoiding `blocked` inner vertices.
    fn link(&self, from: Edge, to: Edge, blocked: &dyn Fn(Vertex) -> bool) -> Vec<Twisting> {
        if from == to {
            return vec![Twisting::empty()];
        }
        let Some(end) = self.end_of(from) else { return vec![] };
        if self.end_of(to) != Some(end) {
            return vec![];
        }
        let base = self.grid.base();
        let mut out = vec![];
        for (x_out, x_in) in [(from.0, from.1), (from.1, from.0)] {
            for (y_in, y_out) in [(to.0, to.1), (to.1, to.0)] {
                if x_out == y_out || blocked(x_in) || blocked(y_in) {
                    continue;
                }
                let usable = |v: Vertex| v != x_out && v != y_out && !blocked(v) && self.end_of_vertex(v) == Some(end);
                let mut prev = vec![usize::MAX; base.order()];
                prev[x_in] = x_in;
                let mut queue = VecDeque::from([x_in]);
                while let Some(u) = queue.pop_front() {
                    if u == y_in {
                        break;
                    }
                    for &v in base.neighbors(u) {
                        if prev[v] == usize::MAX && usable(v) {
                            prev[v] = u;
                            queue.push_back(v);
                        }
                    }
                }
                if prev[y_in] == usize::MAX {
                    continue;
                }
                let mut inner = vec![y_in];
                while *inner.last().expect("nonempty") != x_in {
                    let u = *inner.last().expect("nonempty");
                    inner.push(prev[u]);
                }
                inner.reverse();
                let mut path = vec![x_out];
                path.extend(inner);
                path.push(y_out);
                out.push(Twisting::from_path(&path));
            }
        }
        out
    }

    fn cop_vertices(&self, cops: &[usize]) -> Vec<bool> {
        let mut fixed = vec![false; self.grid.base().order()];
        for &c in cops {
            for &v in self.rc.eq.class(c) {
                fixed[v] = true;
            }
        }
        fixed
    }

    /// Twistings moving the robber from `from` to the anchor edges of an
    /// end-to-end twisting in the other end.
    fn switches(&self, from: Edge, cops: &[usize], roadblocks: &[Roadblock]) -> Vec<(Edge, Twisting)> {
        let Some(end) = self.end_of(from) else { return vec![] };
        let Some(e2e) = end_to_end_twisting_search(self.grid, self.rc, cops, roadblocks) else { return vec![] };
        let tw: Vec<Edge> = e2e.twisted_edges().into_iter().collect();
        let (here, there): (Vec<Edge>, Vec<Edge>) = tw.into_iter().partition(|&e| self.end_of(e) == Some(end));
        let (Some(&a), Some(&b)) = (here.first(), there.first()) else { return vec![] };
        let fixed = self.cop_vertices(cops);
        self.link(from, a, &|v| fixed[v])
            .into_iter()
            .map(|l| (b, l.symmetric_difference(&e2e)))
            .collect()
    }
}

/// Moves of the end-switching robber: local moves within an end and switches
/// along end-to-end twistings.
pub struct GridMoves<'g> {
    board: Board<'g>,
}

impl<'g> GridMoves<'g> {
    pub fn new(grid: &'g CylindricalGrid, rc: &'g RowCompression) -> Self {
        GridMoves { board: Board { grid, rc } }
    }
}

impl MoveSource for GridMoves<'_> {
    fn moves(&self, arena: &Arena, from: Edge, cops: &[usize], roadblocks: &[Roadblock]) -> Vec<(Edge, Twisting)> {
        let b = &self.board;
        let Some(end) = b.end_of(from) else { return vec![] };
        let fixed = b.cop_vertices(cops);
        let mut out = vec![];
        for e in b.end_edges(end, from) {
            if e == from {
                continue;
            }
            if let Some(t) = b
                .link(from, e, &|v| fixed[v])
                .into_iter()
                .find(|t| check_move(arena, from, t, cops, roadblocks).ok())
            {
                out.push((e, t));
            }
        }
        for (e, t) in b.switches(from, cops, roadblocks) {
            if check_move(arena, from, &t, cops, roadblocks).ok() {
                out.push((e, t));
                break;
            }
        }
        out
    }
}

/// Robber that stays in an end of the grid and switches ends when the
/// announced position becomes critical, treating roadblocks as cops.
pub struct ScriptedRobber<'g> {
    board: Board<'g>,
    t: usize,
    start: Edge,
}

/// `1 ≤ t < k`; the robber starts on the first edge of the top row in the left end.
pub fn scripted_robber<'g>(grid: &'g CylindricalGrid, rc: &'g RowCompression, t: usize) -> Result<ScriptedRobber<'g>> {
    if t == 0 || t >= grid.k() || rc.t != t {
        return Err(Error::Parameter(format!("t = {t} does not match the compression (t = {})", rc.t)));
    }
    let start = (grid.id(0, 0), grid.id(0, 1));
    Ok(ScriptedRobber { board: Board { grid, rc }, t, start })
}

impl<'g> ScriptedRobber<'g> {
    pub fn t(&self) -> usize {
        self.t
    }

    /// Rows containing a cop.
    pub fn cop_rows(&self, cops: &[usize]) -> usize {
        let rows: BTreeSet<usize> =
            cops.iter().flat_map(|&c| self.board.rc.eq.class(c).iter().map(|&v| self.board.grid.row(v))).collect();
        rows.len()
    }

    /// Rows of cops below which roadblocks cannot stop an end switch: `⌊2k/5⌋ − 1`.
    pub fn free_row_bound(&self) -> isize {
        (2 * self.board.grid.k() / 5) as isize - 1
    }

    fn critical(&self, w: &[usize]) -> bool {
        is_t_critical(self.board.grid, self.board.rc, w, SEPARATOR_CAP).unwrap_or(false)
    }

    /// Potential: per end, the smallest column distance of a minimal
    /// semi-separator for `w` to that end.
    pub fn separator_distance(&self, w: &[usize]) -> Option<(usize, usize)> {
        let g = self.board.grid;
        let seps = minimal_semi_separators(g, self.board.rc, w, SEPARATOR_CAP).ok()?;
        let left = seps.iter().map(|s| s.iter().map(|&v| g.col(v)).min().unwrap_or(0)).min()?;
        let right = seps.iter().map(|s| g.cols() - 1 - s.iter().map(|&v| g.col(v)).max().unwrap_or(0)).min()?;
        Some((left, right))
    }

    fn target_end(&self, here: End, view: &RobberView) -> End {
        let mut now: Vec<usize> = view.cops.to_vec();
        now.extend(view.roadblocks.iter().map(|rb| rb.class));
        now.sort_unstable();
        now.dedup();
        let mut next = now.clone();
        if !next.contains(&view.announced.class()) {
            next.push(view.announced.class());
            next.sort_unstable();
        }
        if !self.critical(&next) {
            return here;
        }
        if self.critical(&now) && self.cop_rows(view.cops) as isize > self.free_row_bound() {
            return here;
        }
        match self.separator_distance(&next) {
            Some((l, r)) if l > r => End::Left,
            Some((l, r)) if r > l => End::Right,
            _ => here,
        }
    }
}

impl RobberStrategy for ScriptedRobber<'_> {
    fn start(&self, _: &Arena) -> Result<Edge> {
        Ok(self.start)
    }

    fn respond(&self, arena: &Arena, view: &RobberView) -> Result<Option<Twisting>> {
        let b = &self.board;
        let Some(here) = b.end_of(view.edge) else { return Ok(None) };
        let target = self.target_end(here, view);
        let ok = |t: &Twisting| check_move(arena, view.edge, t, view.cops, view.roadblocks).ok();
        // (edge after the move, twisting so far)
        let mut plan: (Edge, Option<Twisting>) = (view.edge, None);
        if target != here {
            if let Some((e, t)) = b.switches(view.edge, view.cops, view.roadblocks).into_iter().find(|(_, t)| ok(t)) {
                plan = (e, Some(t));
            }
        }
        // keep clear of the classes that will be occupied
        let mut threat: Vec<usize> = view.cops.to_vec();
        threat.extend(view.roadblocks.iter().map(|rb| rb.class));
        threat.push(view.announced.class());
        let eq = &b.rc.eq;
        let exposed = |e: Edge| threat.contains(&eq.class_of(e.0)) || threat.contains(&eq.class_of(e.1));
        if exposed(plan.0) {
            let fixed = b.cop_vertices(view.cops);
            let end = b.end_of(plan.0).unwrap_or(here);
            'search: for e in b.end_edges(end, plan.0) {
                if exposed(e) {
                    continue;
                }
                for l in b.link(plan.0, e, &|v| fixed[v]) {
                    let total = match &plan.1 {
                        Some(t) => t.symmetric_difference(&l),
                        None => l,
                    };
                    if ok(&total) {
                        plan = (e, Some(total));
                        break 'search;
                    }
                }
            }
        }
        Ok(plan.1.filter(|t| !t.is_empty()))
    }
}

/// Cops that chase the robber: place cops on the robber's endpoint classes,
/// picking up the piece farthest from the robber once all `k` are in use.
/// With roadblocks enabled, every other step is a blocking move next to the robber.
pub struct GreedyCops {
    k: usize,
    use_roadblocks: bool,
    toggle: bool,
}

impl GreedyCops {
    pub fn new(k: usize, use_roadblocks: bool) -> Self {
        GreedyCops { k, use_roadblocks, toggle: false }
    }
}

impl CopStrategy for GreedyCops {
    fn announce(&mut self, arena: &Arena, state: &CopsState, robber: Edge, blocking: bool) -> Result<Announcement> {
        let eq = arena.eq;
        let cops = state.cops();
        let ends = [eq.class_of(robber.0), eq.class_of(robber.1)];
        let place = if self.use_roadblocks && blocking && self.toggle {
            let u = robber.0;
            let mask = if arena.base.degree(u) >= 2 { 0b11 } else { 0 };
            Piece::Block(Roadblock { class: eq.class_of(u), mask })
        } else {
            Piece::Cop(*ends.iter().find(|c| !cops.contains(c)).unwrap_or(&ends[0]))
        };
        self.toggle = !self.toggle;
        let pick = if state.pieces.len() < self.k {
            None
        } else {
            let dist = |p: &Piece| (eq.class(p.class())[0] as isize - robber.0 as isize).unsigned_abs();
            state
                .pieces
                .iter()
                .copied()
                .filter(|p| !ends.contains(&p.class()))
                .max_by_key(|p| (dist(p), *p))
                .or_else(|| state.pieces.first().copied())
        };
        Ok(Announcement { pick, place })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cops::{play_blocking, play_compressed, verify_transcript, EventKind};
    use crate::grid::{build_equiv_t, is_end_to_end};

    fn toy() -> (CylindricalGrid, RowCompression) {
        let g = CylindricalGrid::desk(3, &[3, 4, 5], 3).unwrap();
        let rc = build_equiv_t(&g, 1).unwrap();
        (g, rc)
    }

    #[test]
    fn empty_board_stays_put() {
        let (g, rc) = toy();
        let arena = Arena::new(g.base(), &rc.eq).unwrap();
        let robber = scripted_robber(&g, &rc, 1).unwrap();
        let start = robber.start(&arena).unwrap();
        let far = rc.eq.class_of(g.id(1, g.cols() - 1));
        let view = RobberView { edge: start, cops: &[], roadblocks: &[], announced: Piece::Cop(far) };
        assert_eq!(robber.respond(&arena, &view).unwrap(), None);
    }

    #[test]
    fn switches_are_end_to_end() {
        let (g, rc) = toy();
        let b = Board { grid: &g, rc: &rc };
        let start = (g.id(1, 0), g.id(1, 1));
        let sw = b.switches(start, &[], &[]);
        assert!(!sw.is_empty());
        let arena = Arena::new(g.base(), &rc.eq).unwrap();
        for (e, t) in sw {
            assert!(is_end_to_end(&g, &t));
            assert!(check_move(&arena, start, &t, &[], &[]).ok());
            assert_eq!(b.end_of(e), Some(End::Right));
        }
    }

    #[test]
    fn survives_greedy_cops() {
        let (g, rc) = toy();
        let arena = Arena::new(g.base(), &rc.eq).unwrap();
        let robber = scripted_robber(&g, &rc, 1).unwrap();
        let tr = play_compressed(&arena, 4, &mut GreedyCops::new(4, false), &robber, 10).unwrap();
        assert!(!tr.outcome.caught);
        verify_transcript(&tr).unwrap();
        let tr = play_blocking(&arena, 4, &mut GreedyCops::new(4, true), &robber, 6).unwrap();
        assert!(!tr.outcome.caught);
        assert!(tr.events.iter().any(|e| e.kind == EventKind::Move));
        verify_transcript(&tr).unwrap();
    }

    #[test]
    fn grid_moves_are_valid() {
        let (g, rc) = toy();
        let arena = Arena::new(g.base(), &rc.eq).unwrap();
        let moves = GridMoves::new(&g, &rc);
        let from = (g.id(0, 0), g.id(0, 1));
        let cops = [rc.eq.class_of(g.id(1, 1))];
        let all = moves.moves(&arena, from, &cops, &[]);
        assert!(all.len() > 10);
        for (e, t) in &all {
            assert!(check_move(&arena, from, t, &cops, &[]).ok());
            assert_eq!(crate::cops::move_target(from, t), Some(*e));
        }
    }
}
