//! CFI graphs over ordered base graphs, compressions and twistings.
//!
//! Gadget tuples are bit vectors in neighbor-index order: bit `i` holds the
//! coordinate belonging to the `i`-th neighbor (0-based) of the base vertex.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_isomorphism, ColoredGraph, GraphDocument, Vertex};

/// Connected base graph. The vertex order is the id order and every vertex
/// carries its own id as color.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedBaseGraph {
    graph: ColoredGraph,
    edges: Vec<(Vertex, Vertex)>,
    edge_index: HashMap<(Vertex, Vertex), usize>,
}

impl OrderedBaseGraph {
    pub fn new(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let colors = (0..n as u32).collect();
        let graph = ColoredGraph::from_edges(colors, edges)?;
        if n == 0 {
            return Err(Error::InvalidGraph("base graph is empty".into()));
        }
        // connectivity
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in graph.neighbors(u) {
                if !std::mem::replace(&mut seen[v], true) {
                    stack.push(v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidGraph("base graph is not connected".into()));
        }
        let edges: Vec<_> = graph.edges().collect();
        let edge_index = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Ok(OrderedBaseGraph { graph, edges, edge_index })
    }

    pub fn graph(&self) -> &ColoredGraph {
        &self.graph
    }

    pub fn order(&self) -> usize {
        self.graph.order()
    }

    pub fn degree(&self, u: Vertex) -> usize {
        self.graph.degree(u)
    }

    /// Neighbors of `u` in the base order; position = neighbor index.
    pub fn neighbors(&self, u: Vertex) -> &[Vertex] {
        self.graph.neighbors(u)
    }

    pub fn neighbor_index(&self, u: Vertex, v: Vertex) -> Option<usize> {
        self.graph.neighbors(u).binary_search(&v).ok()
    }

    pub fn is_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.graph.has_edge(u, v)
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<usize> {
        self.edge_index.get(&(u.min(v), u.max(v))).copied()
    }
}

/// Total map from base edges (by edge id) to F2.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeLabeling {
    bits: Vec<bool>,
}

impl EdgeLabeling {
    pub fn zero(base: &OrderedBaseGraph) -> Self {
        EdgeLabeling { bits: vec![false; base.edges().len()] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        EdgeLabeling { bits }
    }

    /// Labeling with value 1 exactly on the listed edges.
    pub fn with_ones(base: &OrderedBaseGraph, ones: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut f = Self::zero(base);
        for &(u, v) in ones {
            let id = base
                .edge_id(u, v)
                .ok_or_else(|| Error::LabelingMismatch(format!("({u},{v}) is not a base edge")))?;
            f.bits[id] = true;
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, edge_id: usize) -> bool {
        self.bits[edge_id]
    }

    pub fn value(&self, base: &OrderedBaseGraph, u: Vertex, v: Vertex) -> bool {
        self.bits[base.edge_id(u, v).expect("base edge")]
    }

    pub fn flip(&mut self, edge_id: usize) {
        self.bits[edge_id] ^= true;
    }

    fn check(&self, base: &OrderedBaseGraph) -> Result<()> {
        if self.bits.len() != base.edges().len() {
            return Err(Error::LabelingMismatch(format!(
                "labeling has {} entries, base graph has {} edges",
                self.bits.len(),
                base.edges().len()
            )));
        }
        Ok(())
    }
}

/// Number of edges on which two labelings of the same base graph disagree.
pub fn twist_distance(f: &EdgeLabeling, g: &EdgeLabeling) -> Result<usize> {
    if f.len() != g.len() {
        return Err(Error::LabelingMismatch("labelings over different bases".into()));
    }
    Ok(f.bits.iter().zip(&g.bits).filter(|(a, b)| a != b).count())
}

/// Number of gadget vertices for a base vertex of degree `d`.
pub fn gadget_size(d: usize) -> usize {
    if d == 0 {
        1
    } else {
        1 << (d - 1)
    }
}

/// Even-weight tuples of length `d` in increasing numeric order.
pub fn even_tuples(d: usize) -> impl Iterator<Item = u32> {
    (0..1u32 << d).filter(|a| a.count_ones() % 2 == 0)
}

/// Position of the even tuple `a` in increasing order: each pair `2j, 2j+1`
/// holds exactly one even tuple.
fn tuple_rank(_d: usize, a: u32) -> usize {
    (a >> 1) as usize
}

fn tuple_string(d: usize, a: u32) -> String {
    (0..d).map(|i| if a >> i & 1 == 1 { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug)]
pub struct CfiInstance {
    pub base: OrderedBaseGraph,
    pub labeling: EdgeLabeling,
    pub graph: ColoredGraph,
    origin: Vec<Vertex>,
    tuples: Vec<u32>,
    offsets: Vec<usize>,
}

impl CfiInstance {
    pub fn origin(&self, x: Vertex) -> Vertex {
        self.origin[x]
    }

    pub fn origins(&self) -> &[Vertex] {
        &self.origin
    }

    pub fn tuple(&self, x: Vertex) -> u32 {
        self.tuples[x]
    }

    /// The gadget vertex `(u, a)`.
    pub fn vertex(&self, u: Vertex, a: u32) -> Vertex {
        debug_assert_eq!(a.count_ones() % 2, 0);
        self.offsets[u] + tuple_rank(self.base.degree(u), a)
    }

    pub fn gadget(&self, u: Vertex) -> std::ops::Range<Vertex> {
        self.offsets[u]..self.offsets[u] + gadget_size(self.base.degree(u))
    }
}

/// Builds CFI(G, f): `(u,a) ~ (v,b)` iff `a_i + b_j = f({u,v})` where `v` is the
/// `i`-th neighbor of `u` and `u` the `j`-th neighbor of `v`.
pub fn build_cfi(base: &OrderedBaseGraph, f: &EdgeLabeling) -> Result<CfiInstance> {
    f.check(base)?;
    let n = base.order();
    let mut offsets = Vec::with_capacity(n);
    let mut origin = Vec::new();
    let mut tuples = Vec::new();
    let mut labels = Vec::new();
    for u in 0..n {
        offsets.push(origin.len());
        let d = base.degree(u);
        for a in even_tuples(d) {
            origin.push(u);
            tuples.push(a);
            labels.push(format!("{u}:{}", tuple_string(d, a)));
        }
    }
    let mut graph = ColoredGraph::new(origin.iter().map(|&u| base.graph().color(u)).collect());
    graph.set_labels(labels);
    let inst_offsets = offsets.clone();
    for (eid, &(u, v)) in base.edges().iter().enumerate() {
        let i = base.neighbor_index(u, v).expect("edge");
        let j = base.neighbor_index(v, u).expect("edge");
        let fv = f.get(eid) as u32;
        let (du, dv) = (base.degree(u), base.degree(v));
        for a in even_tuples(du) {
            for b in even_tuples(dv) {
                if ((a >> i) & 1) ^ ((b >> j) & 1) == fv {
                    graph.add_edge(offsets[u] + tuple_rank(du, a), offsets[v] + tuple_rank(dv, b))?;
                }
            }
        }
    }
    Ok(CfiInstance {
        base: base.clone(),
        labeling: f.clone(),
        graph,
        origin,
        tuples,
        offsets: inst_offsets,
    })
}

/// Partition of the base vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Compression {
    classes: Vec<Vec<Vertex>>,
    class_of: Vec<usize>,
}

impl Compression {
    /// Builds a partition; vertices missing from `classes` become singletons.
    /// Classes are normalized (sorted, ordered by minimum member).
    pub fn new(n: usize, classes: &[Vec<Vertex>]) -> Result<Self> {
        let mut owner = vec![usize::MAX; n];
        for (ci, class) in classes.iter().enumerate() {
            for &v in class {
                if v >= n || owner[v] != usize::MAX {
                    return Err(Error::InvalidCompression(format!("vertex {v} repeated or out of range")));
                }
                owner[v] = ci;
            }
        }
        let mut groups: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        let mut by_class: HashMap<usize, Vec<Vertex>> = HashMap::new();
        for (v, &o) in owner.iter().enumerate() {
            if o == usize::MAX {
                groups.insert(v, vec![v]);
            } else {
                by_class.entry(o).or_default().push(v);
            }
        }
        for (_, members) in by_class {
            groups.insert(members[0], members);
        }
        let classes: Vec<Vec<Vertex>> = groups.into_values().collect();
        let mut class_of = vec![0; n];
        for (ci, c) in classes.iter().enumerate() {
            for &v in c {
                class_of[v] = ci;
            }
        }
        Ok(Compression { classes, class_of })
    }

    pub fn singletons(n: usize) -> Self {
        Compression { classes: (0..n).map(|v| vec![v]).collect(), class_of: (0..n).collect() }
    }

    /// Builds a partition from a class key per vertex; keys order the classes
    /// by first occurrence.
    pub fn from_keys<K: Eq + std::hash::Hash>(keys: impl IntoIterator<Item = K>) -> Self {
        let mut index: HashMap<K, usize> = HashMap::new();
        let mut classes: Vec<Vec<Vertex>> = Vec::new();
        let mut class_of = Vec::new();
        for (v, k) in keys.into_iter().enumerate() {
            let next = classes.len();
            let ci = *index.entry(k).or_insert(next);
            if ci == next {
                classes.push(Vec::new());
            }
            classes[ci].push(v);
            class_of.push(ci);
        }
        Compression { classes, class_of }
    }

    pub fn classes(&self) -> &[Vec<Vertex>] {
        &self.classes
    }

    pub fn class_of(&self, v: Vertex) -> usize {
        self.class_of[v]
    }

    pub fn class(&self, c: usize) -> &[Vertex] {
        &self.classes[c]
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn equivalent(&self, u: Vertex, v: Vertex) -> bool {
        self.class_of[u] == self.class_of[v]
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }
}

/// Every class must consist of pairwise non-adjacent vertices of equal degree.
pub fn validate_compression(base: &OrderedBaseGraph, eq: &Compression) -> bool {
    eq.len() == base.order()
        && eq.classes().iter().all(|c| {
            c.iter().all(|&u| {
                c.iter().all(|&v| base.degree(u) == base.degree(v) && !base.is_edge(u, v))
            })
        })
}

/// `f({u,v}) = f({u',v'})` whenever `u ≡ u'`, `v ≡ v'` and both pairs are edges.
pub fn validate_compressible_labeling(base: &OrderedBaseGraph, eq: &Compression, f: &EdgeLabeling) -> bool {
    if f.len() != base.edges().len() {
        return false;
    }
    let mut seen: HashMap<(usize, usize), bool> = HashMap::new();
    for (eid, &(u, v)) in base.edges().iter().enumerate() {
        let val = f.get(eid);
        for key in [(eq.class_of(u), eq.class_of(v)), (eq.class_of(v), eq.class_of(u))] {
            if *seen.entry(key).or_insert(val) != val {
                return false;
            }
        }
    }
    true
}

fn check_compression(inst: &CfiInstance, eq: &Compression) -> Result<()> {
    if !validate_compression(&inst.base, eq) {
        return Err(Error::InvalidCompression("classes must be independent and degree-uniform".into()));
    }
    if !validate_compressible_labeling(&inst.base, eq, &inst.labeling) {
        return Err(Error::IncompressibleLabeling);
    }
    Ok(())
}

/// Lifted classes `{(u,a) : u ∈ C}` for each base class `C` and tuple `a`.
fn lifted_classes(inst: &CfiInstance, eq: &Compression) -> Vec<Vec<Vertex>> {
    let mut out = Vec::new();
    for class in eq.classes() {
        let d = inst.base.degree(class[0]);
        for a in even_tuples(d) {
            out.push(class.iter().map(|&u| inst.vertex(u, a)).collect());
        }
    }
    out
}

/// CFI(G,f) extended with the lifted equivalence `(u,a) ≡ (v,b)` iff `u ≡ v`, `a = b`.
pub fn precompress(inst: &CfiInstance, eq: &Compression) -> Result<ColoredGraph> {
    check_compression(inst, eq)?;
    let mut g = inst.graph.clone();
    g.set_equivalence(&lifted_classes(inst, eq))?;
    Ok(g)
}

/// Quotient of CFI(G,f) by the lifted equivalence.
#[derive(Clone, Debug)]
pub struct CompressedCfi {
    pub graph: ColoredGraph,
    /// CFI vertices contracted into each quotient vertex.
    pub members: Vec<Vec<Vertex>>,
}

pub fn compress(inst: &CfiInstance, eq: &Compression) -> Result<CompressedCfi> {
    check_compression(inst, eq)?;
    let mut members = lifted_classes(inst, eq);
    members.iter_mut().for_each(|c| c.sort_unstable());
    members.sort();
    let mut quotient = vec![0; inst.graph.order()];
    for (q, c) in members.iter().enumerate() {
        for &x in c {
            quotient[x] = q;
        }
    }
    let colors = members
        .iter()
        .map(|c| c.iter().map(|&x| inst.graph.color(x)).min().expect("nonempty class"))
        .collect();
    let mut graph = ColoredGraph::new(colors);
    graph.set_labels(
        members
            .iter()
            .map(|c| c.iter().map(|&x| inst.graph.label(x)).collect::<Vec<_>>().join("|"))
            .collect(),
    );
    for (x, y) in inst.graph.edges() {
        let (a, b) = (quotient[x], quotient[y]);
        if a == b {
            return Err(Error::InvalidCompression("contraction produced a loop".into()));
        }
        graph.add_edge(a, b)?;
    }
    Ok(CompressedCfi { graph, members })
}

/// A set of directed base edges.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Twisting {
    pub arcs: BTreeSet<(Vertex, Vertex)>,
}

impl Twisting {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_arcs(arcs: impl IntoIterator<Item = (Vertex, Vertex)>) -> Self {
        Twisting { arcs: arcs.into_iter().collect() }
    }

    /// Twisting induced by a path `(u_1..u_m)`: both arcs out of every inner vertex.
    pub fn from_path(path: &[Vertex]) -> Self {
        let mut arcs = BTreeSet::new();
        for w in 1..path.len().saturating_sub(1) {
            arcs.insert((path[w], path[w - 1]));
            arcs.insert((path[w], path[w + 1]));
        }
        Twisting { arcs }
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Arcs are base edges and every vertex has an even number of outgoing arcs.
    pub fn is_twisting(&self, base: &OrderedBaseGraph) -> bool {
        let mut out = vec![0usize; base.order()];
        for &(u, v) in &self.arcs {
            if u >= base.order() || v >= base.order() || !base.is_edge(u, v) {
                return false;
            }
            out[u] += 1;
        }
        out.iter().all(|c| c % 2 == 0)
    }

    pub fn fixes(&self, u: Vertex) -> bool {
        self.arcs.range((u, 0)..=(u, usize::MAX)).next().is_none()
    }

    /// Outgoing arcs at `u` as a neighbor-index bit mask.
    pub fn incidence(&self, base: &OrderedBaseGraph, u: Vertex) -> u32 {
        self.arcs
            .range((u, 0)..=(u, usize::MAX))
            .map(|&(_, v)| 1u32 << base.neighbor_index(u, v).expect("arc is a base edge"))
            .fold(0, |m, b| m | b)
    }

    /// Edges (as sorted pairs) with exactly one direction present.
    pub fn twisted_edges(&self) -> BTreeSet<(Vertex, Vertex)> {
        self.arcs
            .iter()
            .filter(|&&(u, v)| !self.arcs.contains(&(v, u)))
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect()
    }

    pub fn symmetric_difference(&self, other: &Twisting) -> Twisting {
        Twisting { arcs: self.arcs.symmetric_difference(&other.arcs).copied().collect() }
    }
}

/// Parity, exact twisted-edge set and fixed vertices.
pub fn validate_twisting(
    base: &OrderedBaseGraph,
    t: &Twisting,
    fixed_vertices: &[Vertex],
    twisted_edges: &[(Vertex, Vertex)],
) -> bool {
    let expected: BTreeSet<_> = twisted_edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    t.is_twisting(base) && t.twisted_edges() == expected && fixed_vertices.iter().all(|&u| t.fixes(u))
}

/// Parity plus: equivalent vertices carry the same outgoing neighbor indices.
pub fn validate_compressible_twisting(base: &OrderedBaseGraph, eq: &Compression, t: &Twisting) -> bool {
    if !t.is_twisting(base) || eq.len() != base.order() {
        return false;
    }
    eq.classes().iter().all(|c| {
        let m = t.incidence(base, c[0]);
        c[1..].iter().all(|&u| t.incidence(base, u) == m)
    })
}

/// Labeling obtained by flipping every edge twisted by `t`.
pub fn retwist_labeling(base: &OrderedBaseGraph, f: &EdgeLabeling, t: &Twisting) -> Result<EdgeLabeling> {
    f.check(base)?;
    if !t.is_twisting(base) {
        return Err(Error::InvalidTwisting("odd vertex parity or non-edge arc".into()));
    }
    let mut g = f.clone();
    for (u, v) in t.twisted_edges() {
        g.flip(base.edge_id(u, v).expect("edge"));
    }
    Ok(g)
}

#[derive(Clone, Debug)]
pub struct Retwist {
    pub target: CfiInstance,
    /// Vertex map CFI(G,f) -> CFI(G,g), `(u,a) ↦ (u, a + χ_T(u))`.
    pub map: Vec<Vertex>,
}

/// Moves the twists of `inst` along `t` and returns the gadget-level isomorphism,
/// which is checked edge by edge before being returned.
pub fn retwist(inst: &CfiInstance, t: &Twisting) -> Result<Retwist> {
    let g = retwist_labeling(&inst.base, &inst.labeling, t)?;
    let target = build_cfi(&inst.base, &g)?;
    let map: Vec<Vertex> = (0..inst.graph.order())
        .map(|x| {
            let u = inst.origin(x);
            target.vertex(u, inst.tuple(x) ^ t.incidence(&inst.base, u))
        })
        .collect();
    if !is_isomorphism(&inst.graph, &target.graph, &map) {
        return Err(Error::InvalidTwisting("gadget map failed the edge check".into()));
    }
    Ok(Retwist { target, map })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LabelEntry {
    pub edge: [Vertex; 2],
    pub value: u8,
}

/// Graph document extended with origin and labeling tables.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CfiDocument {
    #[serde(flatten)]
    pub graph: GraphDocument,
    pub origin: Vec<Vertex>,
    pub labeling: Vec<LabelEntry>,
}

impl CfiDocument {
    pub fn new(inst: &CfiInstance, graph: &ColoredGraph) -> Self {
        CfiDocument {
            graph: GraphDocument::from_graph(graph),
            origin: inst.origins().to_vec(),
            labeling: inst
                .base
                .edges()
                .iter()
                .enumerate()
                .map(|(i, &(u, v))| LabelEntry { edge: [u, v], value: inst.labeling.get(i) as u8 })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::brute_force_isomorphism;

    fn triangle() -> OrderedBaseGraph {
        OrderedBaseGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn vertex_and_tuple_round_trip() {
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let star = [(0, 1), (0, 2), (0, 3), (0, 4)];
        for base in [OrderedBaseGraph::new(4, &k4).unwrap(), OrderedBaseGraph::new(5, &star).unwrap()] {
            let inst = build_cfi(&base, &EdgeLabeling::zero(&base)).unwrap();
            for x in 0..inst.graph.order() {
                assert_eq!(inst.vertex(inst.origin(x), inst.tuple(x)), x);
            }
        }
    }

    #[test]
    fn base_graph_must_be_connected() {
        assert!(OrderedBaseGraph::new(3, &[(0, 1)]).is_err());
    }

    #[test]
    fn single_edge_gadgets() {
        let base = OrderedBaseGraph::new(2, &[(0, 1)]).unwrap();
        let f0 = build_cfi(&base, &EdgeLabeling::zero(&base)).unwrap();
        assert_eq!(f0.graph.order(), 2);
        assert!(f0.graph.has_edge(0, 1));
        let f1 = build_cfi(&base, &EdgeLabeling::with_ones(&base, &[(0, 1)]).unwrap()).unwrap();
        assert_eq!(f1.graph.size(), 0);
    }

    #[test]
    fn labeling_domain_mismatch() {
        let base = triangle();
        assert!(build_cfi(&base, &EdgeLabeling::from_bits(vec![false; 2])).is_err());
    }

    #[test]
    fn triangle_cfi_matches_edge_rule() {
        let base = triangle();
        let f = EdgeLabeling::zero(&base);
        let inst = build_cfi(&base, &f).unwrap();
        assert_eq!(inst.graph.order(), 6);
        // exhaustive check of the adjacency rule
        for x in 0..6 {
            for y in 0..6 {
                let (u, v) = (inst.origin(x), inst.origin(y));
                let expected = u != v && {
                    let i = base.neighbor_index(u, v).unwrap();
                    let j = base.neighbor_index(v, u).unwrap();
                    ((inst.tuple(x) >> i) ^ (inst.tuple(y) >> j)) & 1 == 0
                };
                assert_eq!(inst.graph.has_edge(x, y), expected, "{x} {y}");
            }
        }
    }

    #[test]
    fn odd_twist_on_triangle_is_not_isomorphic() {
        let base = triangle();
        let f = build_cfi(&base, &EdgeLabeling::zero(&base)).unwrap();
        let g1 = build_cfi(&base, &EdgeLabeling::with_ones(&base, &[(0, 1)]).unwrap()).unwrap();
        let g2 = build_cfi(&base, &EdgeLabeling::with_ones(&base, &[(0, 1), (1, 2)]).unwrap()).unwrap();
        assert!(brute_force_isomorphism(&f.graph, &g1.graph).is_none());
        assert!(brute_force_isomorphism(&f.graph, &g2.graph).is_some());
    }

    #[test]
    fn twist_distance_counts() {
        let base = triangle();
        let f = EdgeLabeling::zero(&base);
        assert_eq!(twist_distance(&f, &f).unwrap(), 0);
        let g = EdgeLabeling::with_ones(&base, &[(1, 2)]).unwrap();
        assert_eq!(twist_distance(&f, &g).unwrap(), 1);
        assert!(twist_distance(&f, &EdgeLabeling::from_bits(vec![])).is_err());
    }

    #[test]
    fn compression_validity() {
        let c4 = OrderedBaseGraph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert!(validate_compression(&c4, &Compression::singletons(4)));
        assert!(validate_compression(&c4, &Compression::new(4, &[vec![0, 2]]).unwrap()));
        assert!(!validate_compression(&c4, &Compression::new(4, &[vec![0, 1]]).unwrap()));
        assert!(Compression::new(4, &[vec![0, 0]]).is_err());
    }

    #[test]
    fn compressible_labelings() {
        let c4 = OrderedBaseGraph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let eq = Compression::new(4, &[vec![0, 2]]).unwrap();
        assert!(validate_compressible_labeling(&c4, &eq, &EdgeLabeling::zero(&c4)));
        let bad = EdgeLabeling::with_ones(&c4, &[(0, 1)]).unwrap();
        assert!(!validate_compressible_labeling(&c4, &eq, &bad));
        assert!(validate_compressible_labeling(&c4, &Compression::singletons(4), &bad));
        let good = EdgeLabeling::with_ones(&c4, &[(0, 1), (1, 2)]).unwrap();
        assert!(validate_compressible_labeling(&c4, &eq, &good));
    }

    #[test]
    fn singleton_compression_is_trivial() {
        let base = triangle();
        let inst = build_cfi(&base, &EdgeLabeling::zero(&base)).unwrap();
        let eq = Compression::singletons(3);
        let pre = precompress(&inst, &eq).unwrap();
        assert!(pre.equivalence_classes().is_empty());
        let comp = compress(&inst, &eq).unwrap();
        assert!(brute_force_isomorphism(&comp.graph, &inst.graph).is_some());
    }

    #[test]
    fn compress_rejects_invalid_input() {
        let c4 = OrderedBaseGraph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let inst = build_cfi(&c4, &EdgeLabeling::with_ones(&c4, &[(0, 1)]).unwrap()).unwrap();
        let eq = Compression::new(4, &[vec![0, 2]]).unwrap();
        assert!(matches!(compress(&inst, &eq), Err(Error::IncompressibleLabeling)));
        let adj = Compression::new(4, &[vec![0, 1]]).unwrap();
        assert!(matches!(precompress(&inst, &adj), Err(Error::InvalidCompression(_))));
    }

    #[test]
    fn twisting_predicates() {
        let base = triangle();
        let empty = Twisting::empty();
        assert!(validate_twisting(&base, &empty, &[0, 1, 2], &[]));
        let cycle = Twisting::from_arcs([(0, 1), (1, 0), (1, 2), (2, 1), (2, 0), (0, 2)]);
        assert!(validate_twisting(&base, &cycle, &[], &[]));
        let odd = Twisting::from_arcs([(0, 1)]);
        assert!(!odd.is_twisting(&base));
        let path = Twisting::from_path(&[0, 1, 2]);
        assert!(validate_twisting(&base, &path, &[0, 2], &[(0, 1), (1, 2)]));
        assert!(!validate_twisting(&base, &path, &[1], &[(0, 1), (1, 2)]));
    }

    #[test]
    fn retwist_identity_and_two_edges() {
        let base = triangle();
        let inst = build_cfi(&base, &EdgeLabeling::zero(&base)).unwrap();
        let r = retwist(&inst, &Twisting::empty()).unwrap();
        assert_eq!(r.map, (0..6).collect::<Vec<_>>());
        let r = retwist(&inst, &Twisting::from_path(&[0, 1, 2])).unwrap();
        assert_eq!(twist_distance(&inst.labeling, &r.target.labeling).unwrap(), 2);
        assert!(retwist(&inst, &Twisting::from_arcs([(0, 1)])).is_err());
    }
}
