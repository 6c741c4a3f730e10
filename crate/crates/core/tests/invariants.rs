use proptest::prelude::*;

use cfi_forge::cfi::{build_cfi, compress, validate_compressible_labeling, Compression, EdgeLabeling, OrderedBaseGraph};
use cfi_forge::cops::{
    play_blocking, scripted_robber, Actor, Announcement, Arena, CopStrategy, CopsState, Edge, EventKind, GreedyCops,
    Piece, Transcript,
};
use cfi_forge::error::{Error, Result};
use cfi_forge::games::blocking::{blocking_value, BlockingPosition};
use cfi_forge::games::pebble::{PebblePosition, PebbleSolver};
use cfi_forge::games::{SolverConfig, Value};
use cfi_forge::graph::{brute_force_isomorphism, is_isomorphism, is_partial_isomorphism, ColoredGraph};
use cfi_forge::grid::{build_equiv_t, CylindricalGrid};

/// Replays a fixed announcement line with every roadblock turned into a cop on its class.
struct AsCops {
    line: Vec<Announcement>,
    next: usize,
}

fn as_cop(p: Piece) -> Piece {
    match p {
        Piece::Block(rb) => Piece::Cop(rb.class),
        cop => cop,
    }
}

impl CopStrategy for AsCops {
    fn announce(&mut self, _: &Arena, _: &CopsState, _: Edge, _: bool) -> Result<Announcement> {
        let a = self.line.get(self.next).ok_or_else(|| Error::Strategy("line exhausted".into()))?;
        self.next += 1;
        Ok(Announcement { pick: a.pick.map(as_cop), place: as_cop(a.place) })
    }
}

fn announcements(tr: &Transcript) -> Vec<Announcement> {
    tr.events
        .iter()
        .filter(|e| e.actor == Actor::Cops && matches!(e.kind, EventKind::Regular | EventKind::Blocking))
        .map(|e| Announcement { pick: e.picked, place: e.placed.expect("announced piece") })
        .collect()
}

/// Announcements the robber outlasts before capture (all of them if never caught).
fn outlasted(tr: &Transcript) -> usize {
    let mut n = 0;
    for e in &tr.events {
        match (e.actor, e.kind) {
            (Actor::Cops, EventKind::Regular | EventKind::Blocking) => n += 1,
            (_, EventKind::Caught) => return n - 1,
            _ => {}
        }
    }
    n
}

#[test]
fn roadblocks_as_cops_only_shorten_survival() {
    for (k, coprimes, pieces) in [(3usize, vec![3u64, 4, 5], 4usize), (3, vec![3, 4, 5], 3), (5, vec![7, 9, 10, 11, 13], 5)] {
        let grid = CylindricalGrid::desk(k, &coprimes, 3).unwrap();
        let rc = build_equiv_t(&grid, 1).unwrap();
        let arena = Arena::new(grid.base(), &rc.eq).unwrap();
        let robber = scripted_robber(&grid, &rc, 1).unwrap();
        let original = play_blocking(&arena, pieces, &mut GreedyCops::new(pieces, true), &robber, 12).unwrap();
        let line = announcements(&original);
        assert!(line.iter().any(|a| matches!(a.place, Piece::Block(_))), "k={k}: no roadblock was placed");
        let converted = match play_blocking(&arena, pieces, &mut AsCops { line: line.clone(), next: 0 }, &robber, 1000) {
            Ok(tr) => outlasted(&tr),
            // the line ran out before a capture
            Err(Error::Strategy(_)) => line.len(),
            Err(e) => panic!("k={k}: {e}"),
        };
        assert!(converted <= outlasted(&original), "k={k}: {converted} > {}", outlasted(&original));
    }
}

fn small_graph(max_n: usize, colors: u32) -> impl Strategy<Value = ColoredGraph> {
    (1..=max_n)
        .prop_flat_map(move |n| {
            (proptest::collection::vec(0..colors, n), proptest::collection::vec(any::<bool>(), n * (n - 1) / 2))
        })
        .prop_map(|(cols, bits)| {
            let n = cols.len();
            let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
            let edges: Vec<_> = pairs.zip(bits).filter(|(_, b)| *b).map(|(e, _)| e).collect();
            ColoredGraph::from_edges(cols, &edges).unwrap()
        })
}

fn relabeled(g: &ColoredGraph, perm: &[usize]) -> ColoredGraph {
    let mut colors = vec![0; g.order()];
    (0..g.order()).for_each(|v| colors[perm[v]] = g.color(v));
    let edges: Vec<_> = g.edges().map(|(u, v)| (perm[u], perm[v])).collect();
    ColoredGraph::from_edges(colors, &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isomorphism_is_symmetric(g in small_graph(6, 2), h in small_graph(6, 2)) {
        prop_assert_eq!(brute_force_isomorphism(&g, &h).is_some(), brute_force_isomorphism(&h, &g).is_some());
    }

    #[test]
    fn full_domain_partial_isomorphism_is_isomorphism(g in small_graph(6, 2), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..g.order()).collect();
        perm.shuffle(&mut rng);
        let h = relabeled(&g, &perm);
        // try both the true relabeling and a random bijection
        let mut other = perm.clone();
        other.shuffle(&mut rng);
        for map in [perm, other] {
            let alpha: Vec<_> = (0..g.order()).map(Some).collect();
            let beta: Vec<_> = map.iter().copied().map(Some).collect();
            prop_assert_eq!(is_partial_isomorphism(&g, &h, &alpha, &beta).unwrap(), is_isomorphism(&g, &h, &map));
        }
    }

    #[test]
    fn more_pebbles_never_slow_spoiler(g in small_graph(5, 2), h in small_graph(5, 2)) {
        let values: Vec<Value> = (1..=3)
            .map(|k| PebbleSolver::solve(&g, &h, k, &PebblePosition::empty(k), SolverConfig::default()).unwrap().value())
            .collect();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0], "{values:?}");
        }
        let b = blocking_value(&g, &h, 2, &BlockingPosition::empty(2)).unwrap();
        prop_assert!(b <= values[1]);
    }

    #[test]
    fn compressed_graphs_are_loop_free(half in 2usize..=5) {
        let n = 2 * half;
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let base = OrderedBaseGraph::new(n, &edges).unwrap();
        let eq = Compression::new(n, &(0..half).map(|i| vec![i, i + half]).collect::<Vec<_>>()).unwrap();
        let labelings = (0..1u32 << n)
            .map(|m| EdgeLabeling::from_bits((0..n).map(|i| m >> i & 1 == 1).collect()))
            .filter(|f| validate_compressible_labeling(&base, &eq, f));
        for f in labelings {
            let c = compress(&build_cfi(&base, &f).unwrap(), &eq).unwrap();
            prop_assert!((0..c.graph.order()).all(|v| !c.graph.has_edge(v, v)));
        }
    }
}
