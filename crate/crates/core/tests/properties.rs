use proptest::prelude::*;

use cfi_forge::cfi::{build_cfi, compress, twist_distance, validate_compression, Compression, EdgeLabeling, OrderedBaseGraph};
use cfi_forge::games::pebble::{pebble_value_search, PebblePosition, PebbleSolver};
use cfi_forge::games::{SolverConfig, DEFAULT_POSITION_CAP};
use cfi_forge::graph::{brute_force_isomorphism, find_twins, is_isomorphism, twinned, ColoredGraph};
use cfi_forge::iso_cnf::{build_iso, build_iso_restricted, dimacs_string, mini_sat, read_dimacs, DimacsMeta};
use cfi_forge::pipeline::{par_map, Config};

/// A connected graph: a random spanning tree plus extra edges.
fn connected_base(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
            (Just(n), parents, proptest::collection::vec(any::<bool>(), n * (n - 1) / 2))
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            let mut idx = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if extra[idx] && !edges.contains(&(u, v)) {
                        edges.push((u, v));
                    }
                    idx += 1;
                }
            }
            (n, edges)
        })
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

fn labeling(m: usize, bits: &[bool]) -> EdgeLabeling {
    EdgeLabeling::from_bits(bits[..m].to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isomorphic_iff_even_twists((n, edges) in connected_base(4), a in proptest::collection::vec(any::<bool>(), 6), b in proptest::collection::vec(any::<bool>(), 6)) {
        let base = OrderedBaseGraph::new(n, &edges).unwrap();
        let m = base.edges().len();
        let (f, g) = (labeling(m, &a), labeling(m, &b));
        let (fi, gi) = (build_cfi(&base, &f).unwrap(), build_cfi(&base, &g).unwrap());
        let even = twist_distance(&f, &g).unwrap().is_multiple_of(2);
        prop_assert_eq!(brute_force_isomorphism(&fi.graph, &gi.graph).is_some(), even);
    }

    #[test]
    fn gadget_vertices_round_trip((n, edges) in connected_base(5), a in proptest::collection::vec(any::<bool>(), 10)) {
        let base = OrderedBaseGraph::new(n, &edges).unwrap();
        let inst = build_cfi(&base, &labeling(base.edges().len(), &a)).unwrap();
        for x in 0..inst.graph.order() {
            let u = inst.origin(x);
            prop_assert!(inst.gadget(u).contains(&x));
            prop_assert_eq!(inst.vertex(u, inst.tuple(x)), x);
        }
    }

    #[test]
    fn twinned_doubles_and_pairs(g in small_graph(8, 3)) {
        let x = twinned(&g);
        prop_assert_eq!(x.graph.order(), 2 * g.order());
        prop_assert_eq!(x.graph.size(), 4 * g.size() + g.order());
        if find_twins(&g).is_empty() {
            let connected = find_twins(&x.graph).iter().filter(|p| p.connected).count();
            prop_assert_eq!(connected, g.order());
        }
    }

    #[test]
    fn iso_formula_decides_isomorphism(g in small_graph(5, 2), h in small_graph(5, 2)) {
        let full = build_iso(&g, &h);
        let restricted = build_iso_restricted(&g, &h);
        let iso = brute_force_isomorphism(&g, &h);
        let model = mini_sat(&full).unwrap();
        prop_assert_eq!(model.is_some(), iso.is_some());
        prop_assert_eq!(mini_sat(&restricted).unwrap().is_some(), iso.is_some());
        if let Some(m) = model {
            let map: Vec<usize> = full.decode(&m).into_iter().map(Option::unwrap).collect();
            prop_assert!(is_isomorphism(&g, &h, &map));
        }
    }

    #[test]
    fn dimacs_round_trip(g in small_graph(4, 2), h in small_graph(4, 2)) {
        let f = build_iso_restricted(&g, &h);
        let text = dimacs_string(&f, &DimacsMeta::default());
        let back = read_dimacs(text.as_bytes()).unwrap();
        prop_assert_eq!(back.0.clauses, f.clauses);
    }

    #[test]
    fn pebble_solvers_agree(g in small_graph(5, 2), h in small_graph(5, 2), k in 1usize..=2) {
        let start = PebblePosition::empty(k);
        let a = PebbleSolver::solve(&g, &h, k, &start, SolverConfig::default()).unwrap().value();
        let b = pebble_value_search(&g, &h, k, &start, DEFAULT_POSITION_CAP).unwrap().value;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn antipodal_cycle_compression(half in 2usize..=6) {
        let n = 2 * half;
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let base = OrderedBaseGraph::new(n, &edges).unwrap();
        let eq = Compression::new(n, &(0..half).map(|i| vec![i, i + half]).collect::<Vec<_>>()).unwrap();
        prop_assert!(validate_compression(&base, &eq));
        let inst = build_cfi(&base, &EdgeLabeling::zero(&base)).unwrap();
        let c = compress(&inst, &eq).unwrap();
        prop_assert_eq!(c.graph.order(), inst.graph.order() / 2);
    }

    #[test]
    fn par_map_keeps_order(items in proptest::collection::vec(any::<u32>(), 0..200), jobs in 1usize..8) {
        let out = par_map(&items, jobs, |x| x.wrapping_mul(3));
        prop_assert_eq!(out, items.iter().map(|x| x.wrapping_mul(3)).collect::<Vec<_>>());
    }

    #[test]
    fn config_overlay_prefers_top(k in proptest::option::of(3usize..9), seed in proptest::option::of(any::<u64>())) {
        let base = Config::parse("k = 3\nt = 1\nseed = 7\n").unwrap();
        let top = Config { k, seed, ..Config::default() };
        let merged = base.clone().overlay(top);
        prop_assert_eq!(merged.k, k.or(base.k));
        prop_assert_eq!(merged.seed, seed.or(base.seed));
        prop_assert_eq!(merged.t, Some(1));
    }
}
