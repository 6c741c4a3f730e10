//! Exact cop oracle for toy arenas.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{check_move, move_target, Announcement, Arena, Edge, Piece, RobberStrategy, RobberView};
use crate::cfi::Twisting;
use crate::error::{Error, Result};
use crate::grid::Roadblock;

/// Robber moves available from an edge against a board.
pub trait MoveSource {
    fn moves(&self, arena: &Arena, from: Edge, cops: &[usize], roadblocks: &[Roadblock]) -> Vec<(Edge, Twisting)>;
}

/// Every compressible twisting that twists exactly two edges, enumerated once.
pub struct ExhaustiveMoves {
    by_edge: FxHashMap<Edge, Vec<(Edge, Twisting)>>,
}

/// Bound on the number of twistings [`ExhaustiveMoves`] enumerates.
pub const EXHAUSTIVE_TWISTING_CAP: u64 = 1 << 22;

impl ExhaustiveMoves {
    pub fn new(arena: &Arena) -> Result<Self> {
        let base = arena.base;
        let n = base.order();
        let total = (0..n).try_fold(1u64, |acc, u| acc.checked_mul(1u64 << base.degree(u).saturating_sub(1)));
        match total {
            Some(t) if t <= EXHAUSTIVE_TWISTING_CAP => {}
            _ => {
                return Err(Error::StateSpaceTooLarge {
                    measured: total.map_or(u128::MAX, |t| t as u128),
                    cap: EXHAUSTIVE_TWISTING_CAP as u128,
                })
            }
        }
        let even: Vec<Vec<u32>> = (0..n).map(|u| crate::cfi::even_tuples(base.degree(u)).collect()).collect();
        let mut digits = vec![0usize; n];
        let mut by_edge: FxHashMap<Edge, Vec<(Edge, Twisting)>> = FxHashMap::default();
        loop {
            let t = Twisting::from_arcs((0..n).flat_map(|u| {
                let mask = even[u][digits[u]];
                base.neighbors(u)
                    .iter()
                    .enumerate()
                    .filter(move |&(i, _)| mask >> i & 1 == 1)
                    .map(move |(_, &v)| (u, v))
            }));
            let tw: Vec<Edge> = t.twisted_edges().into_iter().collect();
            if tw.len() == 2 && crate::cfi::validate_compressible_twisting(base, arena.eq, &t) {
                by_edge.entry(tw[0]).or_default().push((tw[1], t.clone()));
                by_edge.entry(tw[1]).or_default().push((tw[0], t));
            }
            // mixed-radix increment
            let mut i = 0;
            while i < n {
                digits[i] += 1;
                if digits[i] < even[i].len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        Ok(ExhaustiveMoves { by_edge })
    }
}

impl MoveSource for ExhaustiveMoves {
    fn moves(&self, arena: &Arena, from: Edge, cops: &[usize], roadblocks: &[Roadblock]) -> Vec<(Edge, Twisting)> {
        self.by_edge
            .get(&from)
            .into_iter()
            .flatten()
            .filter(|(_, t)| check_move(arena, from, t, cops, roadblocks).ok())
            .cloned()
            .collect()
    }
}

/// A board as a sorted set of pieces.
type Board = Vec<Piece>;

const CAUGHT: u32 = u32::MAX;
const UNSOLVED: u32 = u32::MAX;

/// One announcement from a state and the robber options it leaves.
struct Branch {
    ann: Announcement,
    regular: bool,
    /// Successor state per robber option, [`CAUGHT`] on capture.
    next: Vec<u32>,
}

/// Solved state space of the cops game.
pub struct MinimaxTable {
    k: usize,
    blocking: bool,
    states: Vec<(Board, Edge)>,
    index: FxHashMap<(Board, Edge), u32>,
    /// Rounds the cops need from each state, [`UNSOLVED`] if not within the cap.
    val: Vec<u32>,
    order: Vec<u32>,
    witness: Vec<u32>,
    fixpoint: bool,
}

impl MinimaxTable {
    /// Rounds to capture from `board` with the robber on `edge`, `None` if the
    /// cops cannot force it within the solved horizon.
    pub fn value(&self, board: &[Piece], edge: Edge) -> Option<u32> {
        let key = (canonical(board), edge);
        self.index.get(&key).and_then(|&s| (self.val[s as usize] != UNSOLVED).then_some(self.val[s as usize]))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocking(&self) -> bool {
        self.blocking
    }

    /// Whether values not found are genuinely infinite (`true`) or only beyond the cap.
    pub fn fixpoint(&self) -> bool {
        self.fixpoint
    }

    pub fn states(&self) -> usize {
        self.states.len()
    }
}

fn canonical(board: &[Piece]) -> Board {
    let mut b = board.to_vec();
    b.sort_unstable();
    b.dedup();
    b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineStep {
    pub announcement: Announcement,
    pub robber: Edge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopsOutcome {
    /// Rounds the cops need against the robber's best start; `None` if the
    /// robber survives the cap (or forever, see `fixpoint`).
    pub capture_rounds: Option<u32>,
    /// The robber survives every round count (values were iterated to a fixed point).
    pub fixpoint: bool,
    pub round_cap: u32,
    pub best_start: Edge,
    pub states: usize,
    /// Optimal cop line against best robber replies, ending at capture.
    pub line: Vec<LineStep>,
}

impl CopsOutcome {
    /// Rounds the robber survives against optimal cops (`round_cap` if never caught within it).
    pub fn robber_survival(&self) -> u32 {
        self.capture_rounds.map_or(self.round_cap, |r| r - 1)
    }
}

/// All pieces a cop player may announce.
fn piece_kinds(arena: &Arena, blocking: bool) -> Vec<Piece> {
    let mut out: Vec<Piece> = (0..arena.eq.num_classes()).map(Piece::Cop).collect();
    if blocking {
        for c in 0..arena.eq.num_classes() {
            let d = arena.base.degree(arena.eq.class(c)[0]);
            out.extend(crate::cfi::even_tuples(d).map(|mask| Piece::Block(Roadblock { class: c, mask })));
        }
    }
    out
}

/// Exact minimum number of rounds the cops need to catch the robber from its
/// best start among `starts`, up to `round_cap`. The robber moves are those of
/// `moves` (plus staying). Boards are sets of pieces; placing a piece twice
/// never helps the cops.
pub fn minimax_cops(
    arena: &Arena,
    k: usize,
    blocking: bool,
    round_cap: u32,
    moves: &dyn MoveSource,
    starts: &[Edge],
    state_cap: usize,
) -> Result<(CopsOutcome, MinimaxTable)> {
    if starts.is_empty() {
        return Err(Error::Contract("no start edge".into()));
    }
    let kinds = piece_kinds(arena, blocking);
    let mut states: Vec<(Board, Edge)> = vec![];
    let mut index: FxHashMap<(Board, Edge), u32> = FxHashMap::default();
    let mut intern = |key: (Board, Edge), states: &mut Vec<(Board, Edge)>| -> Result<u32> {
        if let Some(&i) = index.get(&key) {
            return Ok(i);
        }
        if states.len() >= state_cap {
            return Err(Error::StateSpaceTooLarge { measured: states.len() as u128 + 1, cap: state_cap as u128 });
        }
        let i = states.len() as u32;
        states.push(key.clone());
        index.insert(key, i);
        Ok(i)
    };
    for &e in starts {
        let e = arena.edge(e.0, e.1)?;
        intern((vec![], e), &mut states)?;
    }
    let mut branches: Vec<Vec<Branch>> = vec![];
    let mut cursor = 0;
    while cursor < states.len() {
        let (board, edge) = states[cursor].clone();
        let mut out = vec![];
        let picks: Vec<Option<Piece>> = board
            .iter()
            .copied()
            .map(Some)
            .chain((board.len() < k).then_some(None))
            .collect();
        for pick in picks {
            let during: Board = board.iter().copied().filter(|p| Some(*p) != pick).collect();
            let cops: Vec<usize> = during.iter().filter_map(|p| if let Piece::Cop(c) = p { Some(*c) } else { None }).collect();
            let roadblocks: Vec<Roadblock> =
                during.iter().filter_map(|p| if let Piece::Block(rb) = p { Some(*rb) } else { None }).collect();
            let mut targets: Vec<Edge> = vec![edge];
            targets.extend(moves.moves(arena, edge, &cops, &roadblocks).into_iter().map(|(e, _)| e));
            targets.sort_unstable();
            targets.dedup();
            for &place in &kinds {
                let after = canonical(&[during.as_slice(), &[place]].concat());
                let regular = matches!(place, Piece::Cop(_));
                let mut next = Vec::with_capacity(targets.len());
                for &e in &targets {
                    let after_cops: Vec<usize> =
                        after.iter().filter_map(|p| if let Piece::Cop(c) = p { Some(*c) } else { None }).collect();
                    if regular && arena.caught(e, &after_cops) {
                        next.push(CAUGHT);
                    } else {
                        next.push(intern((after.clone(), e), &mut states)?);
                    }
                }
                out.push(Branch { ann: Announcement { pick, place }, regular, next });
            }
        }
        branches.push(out);
        cursor += 1;
    }

    let n = states.len();
    let mut val = vec![UNSOLVED; n];
    let mut order = vec![0u32; n];
    let mut witness = vec![0u32; n];
    let mut counter = 0u32;
    let mut fixpoint = false;
    for r in 1..=round_cap {
        let mut added_this_round = false;
        loop {
            let mut changed = false;
            for s in 0..n {
                if val[s] != UNSOLVED {
                    continue;
                }
                let win = branches[s].iter().position(|b| {
                    b.next.iter().all(|&t| {
                        if t == CAUGHT {
                            return true;
                        }
                        let v = val[t as usize];
                        if b.regular {
                            v < r
                        } else {
                            v <= r
                        }
                    })
                });
                if let Some(w) = win {
                    val[s] = r;
                    counter += 1;
                    order[s] = counter;
                    witness[s] = w as u32;
                    changed = true;
                    added_this_round = true;
                }
            }
            if !changed {
                break;
            }
        }
        if !added_this_round {
            fixpoint = true;
            break;
        }
    }

    let table = MinimaxTable { k, blocking, states, index, val, order, witness, fixpoint };
    let start_states: Vec<u32> =
        starts.iter().map(|e| table.index[&(vec![], (e.0.min(e.1), e.0.max(e.1)))]).collect();
    let best = *start_states
        .iter()
        .max_by_key(|&&s| (table.val[s as usize] == UNSOLVED, table.val[s as usize]))
        .expect("nonempty");
    let capture_rounds = (table.val[best as usize] != UNSOLVED).then_some(table.val[best as usize]);
    let mut line = vec![];
    let mut cur = best;
    if capture_rounds.is_some() {
        loop {
            let b = &branches[cur as usize][table.witness[cur as usize] as usize];
            // best robber reply: capture last, then the slowest successor
            let reply = b
                .next
                .iter()
                .copied()
                .max_by_key(|&t| if t == CAUGHT { (0, 0) } else { (table.val[t as usize], table.order[t as usize]) })
                .expect("robber may stay");
            let robber = if reply == CAUGHT {
                // every option is a capture; any target edge will do
                let (_, e) = &table.states[cur as usize];
                *e
            } else {
                table.states[reply as usize].1
            };
            line.push(LineStep { announcement: b.ann, robber });
            if reply == CAUGHT || line.len() > 4 * (round_cap as usize + 1) * (k + 1) {
                break;
            }
            cur = reply;
        }
    }
    let outcome = CopsOutcome {
        capture_rounds,
        fixpoint: capture_rounds.is_none() && fixpoint,
        round_cap,
        best_start: table.states[best as usize].1,
        states: table.states.len(),
        line,
    };
    Ok((outcome, table))
}

/// Robber that always moves to the option with the largest remaining capture
/// time according to a solved table.
pub struct OracleRobber<'t, M> {
    pub table: &'t MinimaxTable,
    pub moves: &'t M,
    pub start: Edge,
}

impl<M: MoveSource> RobberStrategy for OracleRobber<'_, M> {
    fn start(&self, _: &Arena) -> Result<Edge> {
        Ok(self.start)
    }

    fn respond(&self, arena: &Arena, view: &RobberView) -> Result<Option<Twisting>> {
        let mut after: Board = view.cops.iter().map(|&c| Piece::Cop(c)).collect();
        after.extend(view.roadblocks.iter().map(|&rb| Piece::Block(rb)));
        after.push(view.announced);
        let after = canonical(&after);
        let after_cops: Vec<usize> =
            after.iter().filter_map(|p| if let Piece::Cop(c) = p { Some(*c) } else { None }).collect();
        let regular = matches!(view.announced, Piece::Cop(_));
        let score = |e: Edge| -> (u32, u32) {
            if regular && arena.caught(e, &after_cops) {
                return (0, 0);
            }
            match self.table.value(&after, e) {
                None => (u32::MAX, 0),
                Some(v) => {
                    let s = self.table.index[&(after.clone(), e)];
                    (v, self.table.order[s as usize])
                }
            }
        };
        let mut best: (u32, u32) = score(view.edge);
        let mut choice = None;
        for (e, t) in self.moves.moves(arena, view.edge, view.cops, view.roadblocks) {
            let s = score(e);
            if s > best {
                best = s;
                choice = Some(t);
            }
        }
        debug_assert!(choice.as_ref().is_none_or(|t| move_target(view.edge, t).is_some()));
        Ok(choice)
    }
}
