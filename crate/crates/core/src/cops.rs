//! Compressed Cops and Robber game, with and without roadblocks.
//!
//! Cops and roadblocks sit on classes of a compression. The robber sits on a
//! base edge and moves by compressible twistings that twist exactly its old and
//! its new edge. Engines validate every robber move and record a replayable
//! transcript.

use std::cell::Cell;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cfi::{validate_compressible_twisting, Compression, OrderedBaseGraph, Twisting};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::grid::{roadblock_avoided, Roadblock};

mod minimax;
mod scripted;

pub use minimax::{minimax_cops, CopsOutcome, ExhaustiveMoves, LineStep, MinimaxTable, MoveSource, OracleRobber};
pub use scripted::{scripted_robber, GreedyCops, GridMoves, ScriptedRobber};

/// A base edge as `(min, max)`.
pub type Edge = (Vertex, Vertex);

/// Base graph plus compression the game is played on.
#[derive(Clone, Copy)]
pub struct Arena<'a> {
    pub base: &'a OrderedBaseGraph,
    pub eq: &'a Compression,
}

impl<'a> Arena<'a> {
    pub fn new(base: &'a OrderedBaseGraph, eq: &'a Compression) -> Result<Self> {
        if !crate::cfi::validate_compression(base, eq) {
            return Err(Error::InvalidCompression("not a compression of the base graph".into()));
        }
        Ok(Arena { base, eq })
    }

    pub fn edge(&self, u: Vertex, v: Vertex) -> Result<Edge> {
        if u.max(v) >= self.base.order() || !self.base.is_edge(u, v) {
            return Err(Error::Contract(format!("{{{u}, {v}}} is not a base edge")));
        }
        Ok((u.min(v), u.max(v)))
    }

    /// Both endpoints lie in cop-occupied classes.
    pub fn caught(&self, e: Edge, cops: &[usize]) -> bool {
        cops.contains(&self.eq.class_of(e.0)) && cops.contains(&self.eq.class_of(e.1))
    }

    pub fn check_piece(&self, p: &Piece) -> Result<()> {
        match *p {
            Piece::Cop(c) if c < self.eq.num_classes() => Ok(()),
            Piece::Cop(c) => Err(Error::Strategy(format!("class {c} out of range"))),
            Piece::Block(rb) => Roadblock::new(self.base, self.eq, rb.class, rb.mask)
                .map(|_| ())
                .map_err(|e| Error::Strategy(e.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Piece {
    Cop(usize),
    Block(Roadblock),
}

impl Piece {
    pub fn class(&self) -> usize {
        match self {
            Piece::Cop(c) => *c,
            Piece::Block(rb) => rb.class,
        }
    }
}

/// Step 1 of a round: the piece picked up (if any) and the one announced.
/// Announcing a cop is a regular move, announcing a roadblock a blocking move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Announcement {
    pub pick: Option<Piece>,
    pub place: Piece,
}

/// Pieces on the board, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CopsState {
    pub pieces: Vec<Piece>,
}

impl CopsState {
    pub fn cops(&self) -> Vec<usize> {
        let set: BTreeSet<usize> =
            self.pieces.iter().filter_map(|p| if let Piece::Cop(c) = p { Some(*c) } else { None }).collect();
        set.into_iter().collect()
    }

    pub fn roadblocks(&self) -> Vec<Roadblock> {
        self.pieces.iter().filter_map(|p| if let Piece::Block(rb) = p { Some(*rb) } else { None }).collect()
    }

    pub fn remove(&mut self, p: &Piece) -> Result<()> {
        let i = self
            .pieces
            .iter()
            .position(|q| q == p)
            .ok_or_else(|| Error::Strategy(format!("picked up {p:?}, which is not on the board")))?;
        self.pieces.remove(i);
        Ok(())
    }

    pub fn add(&mut self, p: Piece) {
        let i = self.pieces.partition_point(|q| q < &p);
        self.pieces.insert(i, p);
    }
}

/// What the robber sees in step 2.
#[derive(Clone, Copy, Debug)]
pub struct RobberView<'v> {
    pub edge: Edge,
    /// Classes holding a cop that stays on the board during the move.
    pub cops: &'v [usize],
    pub roadblocks: &'v [Roadblock],
    pub announced: Piece,
}

pub trait RobberStrategy {
    fn start(&self, arena: &Arena) -> Result<Edge>;
    /// `None` stays on the current edge.
    fn respond(&self, arena: &Arena, view: &RobberView) -> Result<Option<Twisting>>;
}

pub trait CopStrategy {
    fn announce(&mut self, arena: &Arena, state: &CopsState, robber: Edge, blocking: bool) -> Result<Announcement>;
}

/// Per-move validation results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveChecks {
    /// Twists exactly the old and one new edge.
    pub two_edges: bool,
    pub even: bool,
    pub compressible: bool,
    pub fixes_cops: bool,
    pub avoids_roadblocks: bool,
}

impl MoveChecks {
    pub fn ok(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<&'static str> {
        [
            (self.two_edges, "twists exactly the old and the new edge"),
            (self.even, "even vertex parity"),
            (self.compressible, "compressible"),
            (self.fixes_cops, "fixes all cop vertices"),
            (self.avoids_roadblocks, "avoids all roadblocks"),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, name)| name)
    }
}

/// The edge a twisting moves the robber to: the twisted edge other than `from`.
pub fn move_target(from: Edge, t: &Twisting) -> Option<Edge> {
    let tw = t.twisted_edges();
    if tw.len() != 2 || !tw.contains(&from) {
        return None;
    }
    tw.into_iter().find(|&e| e != from)
}

pub fn check_move(arena: &Arena, from: Edge, t: &Twisting, cops: &[usize], roadblocks: &[Roadblock]) -> MoveChecks {
    let even = t.is_twisting(arena.base);
    MoveChecks {
        two_edges: move_target(from, t).is_some(),
        even,
        compressible: even && validate_compressible_twisting(arena.base, arena.eq, t),
        fixes_cops: cops.iter().all(|&c| arena.eq.class(c).iter().all(|&u| t.fixes(u))),
        avoids_roadblocks: even && roadblocks.iter().all(|rb| roadblock_avoided(arena.base, arena.eq, t, rb)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Cops,
    Robber,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Start,
    Regular,
    Blocking,
    Stay,
    Move,
    Place,
    Caught,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub round: u32,
    pub actor: Actor,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picked: Option<Piece>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placed: Option<Piece>,
    /// Robber edge after the event.
    pub edge: Edge,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub twisting: Vec<(Vertex, Vertex)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<MoveChecks>,
    /// Board after the event.
    pub cops: Vec<usize>,
    pub roadblocks: Vec<Roadblock>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub classes: Vec<Vec<Vertex>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    /// Completed rounds, i.e. regular placements.
    pub rounds: u32,
    pub caught: bool,
}

pub const TRANSCRIPT_FORMAT: &str = "cfi-forge/cops-transcript/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub format: String,
    pub k: usize,
    pub blocking: bool,
    pub max_rounds: u32,
    pub instance: InstanceDoc,
    /// sha256 over format, k, blocking, max_rounds and instance.
    pub digest: String,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Transcript {
    /// Robber survival in completed rounds.
    pub fn survived(&self) -> u32 {
        if self.outcome.caught {
            self.outcome.rounds - 1
        } else {
            self.outcome.rounds
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn digest(k: usize, blocking: bool, max_rounds: u32, inst: &InstanceDoc) -> Result<String> {
    let header = serde_json::to_vec(&(TRANSCRIPT_FORMAT, k, blocking, max_rounds, inst))?;
    Ok(hex::encode(Sha256::digest(header)))
}

/// Bound on consecutive blocking moves within one round.
pub fn blocking_limit(k: usize) -> usize {
    8 * k + 8
}

/// Compressed game: cops may only make regular moves.
pub fn play_compressed(
    arena: &Arena,
    k: usize,
    cops: &mut dyn CopStrategy,
    robber: &dyn RobberStrategy,
    max_rounds: u32,
) -> Result<Transcript> {
    play(arena, k, cops, robber, max_rounds, false)
}

/// Compressed and blocking game.
pub fn play_blocking(
    arena: &Arena,
    k: usize,
    cops: &mut dyn CopStrategy,
    robber: &dyn RobberStrategy,
    max_rounds: u32,
) -> Result<Transcript> {
    play(arena, k, cops, robber, max_rounds, true)
}

fn play(
    arena: &Arena,
    k: usize,
    cop_strategy: &mut dyn CopStrategy,
    robber: &dyn RobberStrategy,
    max_rounds: u32,
    blocking: bool,
) -> Result<Transcript> {
    let instance = InstanceDoc {
        n: arena.base.order(),
        edges: arena.base.edges().to_vec(),
        classes: arena.eq.classes().to_vec(),
    };
    let start = robber.start(arena)?;
    let mut edge = arena.edge(start.0, start.1)?;
    let mut board = CopsState::default();
    let mut events = vec![Event {
        round: 0,
        actor: Actor::Robber,
        kind: EventKind::Start,
        picked: None,
        placed: None,
        edge,
        twisting: vec![],
        checks: None,
        cops: vec![],
        roadblocks: vec![],
    }];
    let mut round = 1u32;
    let mut blocks = 0usize;
    let mut caught = false;
    if k == 0 {
        // no pieces: nothing is ever announced and the robber survives
        round = max_rounds + 1;
    }
    while round <= max_rounds && !caught {
        let ann = cop_strategy.announce(arena, &board, edge, blocking)?;
        arena.check_piece(&ann.place)?;
        if !blocking && matches!(ann.place, Piece::Block(_)) {
            return Err(Error::Strategy("blocking move in the game without roadblocks".into()));
        }
        if let Some(p) = &ann.pick {
            board.remove(p)?;
        }
        if board.pieces.len() + 1 > k {
            return Err(Error::Strategy(format!("budget overflow: more than {k} cops and roadblocks")));
        }
        let kind = match ann.place {
            Piece::Cop(_) => EventKind::Regular,
            Piece::Block(_) => EventKind::Blocking,
        };
        let (cops, roadblocks) = (board.cops(), board.roadblocks());
        events.push(Event {
            round,
            actor: Actor::Cops,
            kind,
            picked: ann.pick,
            placed: Some(ann.place),
            edge,
            twisting: vec![],
            checks: None,
            cops: cops.clone(),
            roadblocks: roadblocks.clone(),
        });
        let view = RobberView { edge, cops: &cops, roadblocks: &roadblocks, announced: ann.place };
        let mv = robber.respond(arena, &view)?;
        let (kind, twisting, checks) = match mv {
            None => (EventKind::Stay, vec![], None),
            Some(t) => {
                let checks = check_move(arena, edge, &t, &cops, &roadblocks);
                if let Some(bad) = checks.first_failure() {
                    return Err(Error::Strategy(format!("robber move in round {round} fails: {bad}")));
                }
                edge = move_target(edge, &t).expect("checked");
                (EventKind::Move, t.arcs.into_iter().collect(), Some(checks))
            }
        };
        events.push(Event {
            round,
            actor: Actor::Robber,
            kind,
            picked: None,
            placed: None,
            edge,
            twisting,
            checks,
            cops: cops.clone(),
            roadblocks: roadblocks.clone(),
        });
        board.add(ann.place);
        let after = board.cops();
        caught = arena.caught(edge, &after);
        events.push(Event {
            round,
            actor: Actor::Cops,
            kind: if caught { EventKind::Caught } else { EventKind::Place },
            picked: None,
            placed: Some(ann.place),
            edge,
            twisting: vec![],
            checks: None,
            cops: after,
            roadblocks: board.roadblocks(),
        });
        match ann.place {
            Piece::Cop(_) => {
                round += 1;
                blocks = 0;
            }
            Piece::Block(_) => {
                blocks += 1;
                if blocks > blocking_limit(k) {
                    return Err(Error::Strategy(format!("more than {} blocking moves in one round", blocking_limit(k))));
                }
            }
        }
    }
    let rounds = round - 1;
    let digest = digest(k, blocking, max_rounds, &instance)?;
    Ok(Transcript {
        format: TRANSCRIPT_FORMAT.into(),
        k,
        blocking,
        max_rounds,
        instance,
        digest,
        events,
        outcome: Outcome { rounds, caught },
    })
}

struct ReplayCops {
    anns: Vec<Announcement>,
    next: usize,
}

impl CopStrategy for ReplayCops {
    fn announce(&mut self, _: &Arena, _: &CopsState, _: Edge, _: bool) -> Result<Announcement> {
        let a = self.anns.get(self.next).copied().ok_or_else(|| Error::Malformed("transcript ends early".into()))?;
        self.next += 1;
        Ok(a)
    }
}

struct ReplayRobber {
    start: Edge,
    moves: Vec<Option<Twisting>>,
    next: Cell<usize>,
}

impl RobberStrategy for ReplayRobber {
    fn start(&self, _: &Arena) -> Result<Edge> {
        Ok(self.start)
    }

    fn respond(&self, _: &Arena, _: &RobberView) -> Result<Option<Twisting>> {
        let i = self.next.get();
        self.next.set(i + 1);
        self.moves.get(i).cloned().ok_or_else(|| Error::Malformed("transcript ends early".into()))
    }
}

/// Replays a transcript through the engine and checks that every recorded
/// field matches the replay.
pub fn verify_transcript(doc: &Transcript) -> Result<()> {
    if doc.format != TRANSCRIPT_FORMAT {
        return Err(Error::Malformed(format!("unknown format {:?}", doc.format)));
    }
    if digest(doc.k, doc.blocking, doc.max_rounds, &doc.instance)? != doc.digest {
        return Err(Error::Malformed("digest does not match the header".into()));
    }
    let base = OrderedBaseGraph::new(doc.instance.n, &doc.instance.edges)?;
    if base.edges() != doc.instance.edges.as_slice() {
        return Err(Error::Malformed("edge list is not in canonical order".into()));
    }
    let eq = Compression::new(doc.instance.n, &doc.instance.classes)?;
    let arena = Arena::new(&base, &eq)?;
    let start = doc
        .events
        .first()
        .filter(|e| e.kind == EventKind::Start)
        .ok_or_else(|| Error::Malformed("missing start event".into()))?
        .edge;
    let mut anns = vec![];
    let mut moves = vec![];
    for e in &doc.events {
        match (e.actor, e.kind) {
            (Actor::Cops, EventKind::Regular | EventKind::Blocking) => {
                let place = e.placed.ok_or_else(|| Error::Malformed("announcement without a piece".into()))?;
                anns.push(Announcement { pick: e.picked, place });
            }
            (Actor::Robber, EventKind::Stay) => moves.push(None),
            (Actor::Robber, EventKind::Move) => moves.push(Some(Twisting::from_arcs(e.twisting.iter().copied()))),
            _ => {}
        }
    }
    let mut cops = ReplayCops { anns, next: 0 };
    let robber = ReplayRobber { start, moves, next: Cell::new(0) };
    let replay = play(&arena, doc.k, &mut cops, &robber, doc.max_rounds, doc.blocking)
        .map_err(|e| Error::Malformed(format!("replay rejected: {e}")))?;
    if replay.events.len() != doc.events.len() {
        return Err(Error::Malformed(format!(
            "replay has {} events, transcript {}",
            replay.events.len(),
            doc.events.len()
        )));
    }
    if let Some(i) = (0..doc.events.len()).find(|&i| replay.events[i] != doc.events[i]) {
        return Err(Error::Malformed(format!("event {i} differs from the replay")));
    }
    if replay.outcome != doc.outcome {
        return Err(Error::Malformed("outcome differs from the replay".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> (OrderedBaseGraph, Compression) {
        (OrderedBaseGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(), Compression::singletons(3))
    }

    struct Stay(Edge);

    impl RobberStrategy for Stay {
        fn start(&self, _: &Arena) -> Result<Edge> {
            Ok(self.0)
        }
        fn respond(&self, _: &Arena, _: &RobberView) -> Result<Option<Twisting>> {
            Ok(None)
        }
    }

    struct Script(Vec<Announcement>, usize);

    impl CopStrategy for Script {
        fn announce(&mut self, _: &Arena, _: &CopsState, _: Edge, _: bool) -> Result<Announcement> {
            self.1 += 1;
            Ok(self.0[(self.1 - 1) % self.0.len()])
        }
    }

    fn cop(c: usize) -> Announcement {
        Announcement { pick: None, place: Piece::Cop(c) }
    }

    #[test]
    fn no_cops_means_survival() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let tr = play_compressed(&arena, 0, &mut Script(vec![cop(0)], 0), &Stay((0, 1)), 7).unwrap();
        assert_eq!(tr.outcome, Outcome { rounds: 7, caught: false });
        assert_eq!(tr.survived(), 7);
        verify_transcript(&tr).unwrap();
    }

    #[test]
    fn pinned_robber_is_caught() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let tr = play_compressed(&arena, 2, &mut Script(vec![cop(0), cop(1)], 0), &Stay((0, 1)), 5).unwrap();
        assert_eq!(tr.outcome, Outcome { rounds: 2, caught: true });
        assert_eq!(tr.survived(), 1);
        assert_eq!(tr.events.last().unwrap().kind, EventKind::Caught);
    }

    #[test]
    fn budget_and_rule_faults() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let err = play_compressed(&arena, 1, &mut Script(vec![cop(0), cop(1)], 0), &Stay((0, 1)), 5).unwrap_err();
        assert!(err.to_string().contains("budget overflow"));
        let block = Announcement { pick: None, place: Piece::Block(Roadblock { class: 2, mask: 0b11 }) };
        let err = play_compressed(&arena, 2, &mut Script(vec![block], 0), &Stay((0, 1)), 5).unwrap_err();
        assert!(err.to_string().contains("blocking move"));
    }

    struct Fixed(Edge, Twisting);

    impl RobberStrategy for Fixed {
        fn start(&self, _: &Arena) -> Result<Edge> {
            Ok(self.0)
        }
        fn respond(&self, _: &Arena, _: &RobberView) -> Result<Option<Twisting>> {
            Ok(Some(self.1.clone()))
        }
    }

    #[test]
    fn roadblock_matching_the_move_rejects_it() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        // path 0-1-2 moves the twist from {0,1} to {1,2}, outgoing arcs at 1 are both neighbors
        let t = Twisting::from_path(&[0, 1, 2]);
        let mask = t.incidence(&b, 1);
        let rb = Roadblock::new(&b, &eq, 1, mask).unwrap();
        assert!(!roadblock_avoided(&b, &eq, &t, &rb));
        let checks = check_move(&arena, (0, 1), &t, &[], &[rb]);
        assert_eq!(checks.first_failure(), Some("avoids all roadblocks"));
        let mut cops = Script(
            vec![
                Announcement { pick: None, place: Piece::Block(rb) },
                Announcement { pick: None, place: Piece::Cop(2) },
            ],
            0,
        );
        let err = play_blocking(&arena, 3, &mut cops, &Fixed((0, 1), t.clone()), 3).unwrap_err();
        assert!(err.to_string().contains("avoids all roadblocks"), "{err}");
        // a cop on the inner vertex also rejects it
        assert_eq!(check_move(&arena, (0, 1), &t, &[1], &[]).first_failure(), Some("fixes all cop vertices"));
        // zero or one twisted edge is not a move
        assert!(!check_move(&arena, (0, 1), &Twisting::empty(), &[], &[]).two_edges);
    }

    #[test]
    fn never_blocking_matches_compressed_game() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let plain = play_compressed(&arena, 2, &mut GreedyCops::new(2, false), &Stay((0, 2)), 4).unwrap();
        let block = play_blocking(&arena, 2, &mut GreedyCops::new(2, false), &Stay((0, 2)), 4).unwrap();
        assert_eq!(plain.events, block.events);
        assert_eq!(plain.outcome, block.outcome);
    }

    #[test]
    fn mutated_transcripts_are_rejected() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let moves = ExhaustiveMoves::new(&arena).unwrap();
        let (_, table) = minimax_cops(&arena, 3, true, 6, &moves, &[(0, 1)], 100_000).unwrap();
        let robber = OracleRobber { table: &table, moves: &moves, start: (0, 1) };
        let tr = play_blocking(&arena, 3, &mut GreedyCops::new(3, true), &robber, 6).unwrap();
        verify_transcript(&tr).unwrap();
        let json = tr.to_json().unwrap();
        verify_transcript(&Transcript::from_json(&json).unwrap()).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let mut mutated = 0;
        for path in leaf_paths(&value, String::new()) {
            let mut v = value.clone();
            mutate(v.pointer_mut(&path).unwrap());
            if let Ok(doc) = serde_json::from_value::<Transcript>(v) {
                assert!(verify_transcript(&doc).is_err(), "mutation at {path} accepted");
                mutated += 1;
            }
        }
        assert!(mutated > 50);
    }

    fn leaf_paths(v: &serde_json::Value, at: String) -> Vec<String> {
        match v {
            serde_json::Value::Object(m) => m.iter().flat_map(|(k, x)| leaf_paths(x, format!("{at}/{k}"))).collect(),
            serde_json::Value::Array(a) => {
                a.iter().enumerate().flat_map(|(i, x)| leaf_paths(x, format!("{at}/{i}"))).collect()
            }
            _ => vec![at],
        }
    }

    fn mutate(v: &mut serde_json::Value) {
        *v = match v.take() {
            serde_json::Value::Bool(b) => serde_json::Value::Bool(!b),
            serde_json::Value::Number(n) => serde_json::json!(n.as_u64().map_or(1, |x| if x == 0 { 1 } else { x - 1 })),
            serde_json::Value::String(s) => serde_json::Value::String(format!("{s}x")),
            _ => serde_json::Value::Bool(true),
        }
    }

    /// Plain recursive minimax without tables.
    fn cops_win(arena: &Arena, k: usize, board: &[Piece], e: Edge, r: u32, moves: &ExhaustiveMoves) -> bool {
        if r == 0 {
            return false;
        }
        let picks: Vec<Option<Piece>> =
            board.iter().copied().map(Some).chain((board.len() < k).then_some(None)).collect();
        picks.iter().any(|&pick| {
            let during: Vec<Piece> = board.iter().copied().filter(|p| Some(*p) != pick).collect();
            let st = CopsState { pieces: during.clone() };
            let mut opts = vec![e];
            opts.extend(moves.moves(arena, e, &st.cops(), &st.roadblocks()).into_iter().map(|(x, _)| x));
            (0..arena.eq.num_classes()).any(|c| {
                let mut after = during.clone();
                if !after.contains(&Piece::Cop(c)) {
                    after.push(Piece::Cop(c));
                    after.sort();
                }
                let cops = CopsState { pieces: after.clone() }.cops();
                opts.iter().all(|&x| arena.caught(x, &cops) || cops_win(arena, k, &after, x, r - 1, moves))
            })
        })
    }

    #[test]
    fn minimax_on_the_triangle() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let moves = ExhaustiveMoves::new(&arena).unwrap();
        let starts = [(0, 1), (1, 2), (0, 2)];
        for k in 1..=3 {
            let (out, table) = minimax_cops(&arena, k, false, 6, &moves, &starts, 100_000).unwrap();
            for &s in &starts {
                let direct = (1..=5).find(|&r| cops_win(&arena, k, &[], s, r, &moves));
                assert_eq!(table.value(&[], s), direct, "k={k} start={s:?}");
            }
            match k {
                1 | 2 => assert!(out.capture_rounds.is_none() && out.fixpoint),
                _ => assert_eq!(out.capture_rounds, Some(3)),
            }
        }
        // roadblocks never hurt the cops
        let (plain, _) = minimax_cops(&arena, 3, false, 6, &moves, &starts, 100_000).unwrap();
        let (blk, _) = minimax_cops(&arena, 3, true, 6, &moves, &starts, 100_000).unwrap();
        assert!(blk.capture_rounds <= plain.capture_rounds);
        assert!(blk.line.last().map(|s| s.announcement.place).is_some());
    }

    #[test]
    fn oracle_robber_matches_table() {
        let (b, eq) = triangle();
        let arena = Arena::new(&b, &eq).unwrap();
        let moves = ExhaustiveMoves::new(&arena).unwrap();
        let (out, table) = minimax_cops(&arena, 3, false, 6, &moves, &[(0, 1)], 100_000).unwrap();
        let robber = OracleRobber { table: &table, moves: &moves, start: (0, 1) };
        let anns: Vec<Announcement> = out.line.iter().map(|s| s.announcement).collect();
        let tr = play_compressed(&arena, 3, &mut Script(anns, 0), &robber, 6).unwrap();
        assert!(tr.outcome.caught);
        assert_eq!(tr.outcome.rounds, out.capture_rounds.unwrap());
    }
}
