//! Colored graphs, the brute-force isomorphism oracle, twins and twinned graphs.
//!
//! Vertices are dense indices `0..n`. A graph may additionally carry an
//! equivalence relation on its vertices (a second, symmetric "edge color");
//! precompressed CFI graphs use it. Partial isomorphisms and isomorphisms
//! must preserve colors, edges and, when present, the equivalence relation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;
pub type Color = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredGraph {
    colors: Vec<Color>,
    labels: Vec<String>,
    adj: Vec<Vec<Vertex>>,
    /// Class representative (minimum member) per vertex, if the graph carries
    /// an equivalence relation.
    equiv: Option<Vec<Vertex>>,
}

impl ColoredGraph {
    /// Edgeless graph with the given coloring; labels default to the vertex id.
    pub fn new(colors: Vec<Color>) -> Self {
        let n = colors.len();
        ColoredGraph {
            colors,
            labels: (0..n).map(|v| v.to_string()).collect(),
            adj: vec![Vec::new(); n],
            equiv: None,
        }
    }

    pub fn from_edges(colors: Vec<Color>, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut g = ColoredGraph::new(colors);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Adds `{u, v}`; adding an existing edge is a no-op.
    pub fn add_edge(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        let n = self.order();
        if u >= n || v >= n {
            return Err(Error::InvalidGraph(format!("edge ({u},{v}) outside 0..{n}")));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at {u}")));
        }
        if let Err(pos) = self.adj[u].binary_search(&v) {
            self.adj[u].insert(pos, v);
            let pos = self.adj[v].binary_search(&u).unwrap_err();
            self.adj[v].insert(pos, u);
        }
        Ok(())
    }

    pub fn set_labels(&mut self, labels: Vec<String>) {
        assert_eq!(labels.len(), self.order());
        self.labels = labels;
    }

    /// Attaches an equivalence relation given as a partition. Vertices not
    /// listed form singleton classes.
    pub fn set_equivalence(&mut self, classes: &[Vec<Vertex>]) -> Result<()> {
        let n = self.order();
        let mut rep: Vec<Vertex> = (0..n).collect();
        let mut seen = vec![false; n];
        for class in classes {
            let Some(&min) = class.iter().min() else { continue };
            for &v in class {
                if v >= n || seen[v] {
                    return Err(Error::InvalidGraph(format!(
                        "equivalence class member {v} out of range or repeated"
                    )));
                }
                seen[v] = true;
                rep[v] = min;
            }
        }
        self.equiv = Some(rep);
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.colors.len()
    }

    pub fn size(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn color(&self, v: Vertex) -> Color {
        self.colors[v]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn label(&self, v: Vertex) -> &str {
        &self.labels[v]
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as sorted pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn has_equivalence(&self) -> bool {
        self.equiv.is_some()
    }

    /// Whether `u` and `v` are related by the attached equivalence (identity if none).
    pub fn equivalent(&self, u: Vertex, v: Vertex) -> bool {
        match &self.equiv {
            Some(rep) => rep[u] == rep[v],
            None => u == v,
        }
    }

    /// Non-singleton equivalence classes, sorted.
    pub fn equivalence_classes(&self) -> Vec<Vec<Vertex>> {
        let Some(rep) = &self.equiv else { return Vec::new() };
        let mut classes: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        for (v, &r) in rep.iter().enumerate() {
            classes.entry(r).or_default().push(v);
        }
        classes.into_values().filter(|c| c.len() > 1).collect()
    }

    /// Drops the equivalence relation, keeping vertices, colors and edges.
    pub fn without_equivalence(&self) -> ColoredGraph {
        ColoredGraph { equiv: None, ..self.clone() }
    }

    pub fn color_class_profile(&self) -> ColorProfile {
        let mut sizes = BTreeMap::new();
        for &c in &self.colors {
            *sizes.entry(c).or_insert(0) += 1;
        }
        let max = sizes.values().copied().max().unwrap_or(0);
        ColorProfile { sizes, max }
    }

    /// Dense adjacency matrix, for solvers on small graphs.
    pub fn adjacency_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.order();
        let mut m = vec![vec![false; n]; n];
        for (u, v) in self.edges() {
            m[u][v] = true;
            m[v][u] = true;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColorProfile {
    pub sizes: BTreeMap<Color, usize>,
    pub max: usize,
}

/// Whether the pebble maps `alpha`/`beta` induce a partial isomorphism.
///
/// `alpha[i]` and `beta[i]` give the vertices carrying pebble `i`; both maps
/// must have the same domain.
pub fn is_partial_isomorphism(
    g: &ColoredGraph,
    h: &ColoredGraph,
    alpha: &[Option<Vertex>],
    beta: &[Option<Vertex>],
) -> Result<bool> {
    if alpha.len() != beta.len()
        || alpha.iter().zip(beta).any(|(a, b)| a.is_some() != b.is_some())
    {
        return Err(Error::Contract("pebble maps have different domains".into()));
    }
    let pairs: Vec<(Vertex, Vertex)> = alpha
        .iter()
        .zip(beta)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    Ok(pairs_consistent(g, h, &pairs))
}

/// Partial-isomorphism check on a list of pebbled pairs.
pub fn pairs_consistent(g: &ColoredGraph, h: &ColoredGraph, pairs: &[(Vertex, Vertex)]) -> bool {
    for (i, &(a, b)) in pairs.iter().enumerate() {
        if g.color(a) != h.color(b) {
            return false;
        }
        for &(c, d) in &pairs[..i] {
            if (a == c) != (b == d) {
                return false;
            }
            if g.has_edge(a, c) != h.has_edge(b, d) {
                return false;
            }
            if g.equivalent(a, c) != h.equivalent(b, d) {
                return false;
            }
        }
    }
    true
}

/// Checks that `map` (indexed by vertices of `g`) is an isomorphism onto `h`.
pub fn is_isomorphism(g: &ColoredGraph, h: &ColoredGraph, map: &[Vertex]) -> bool {
    if g.order() != h.order() || map.len() != g.order() || g.size() != h.size() {
        return false;
    }
    let mut hit = vec![false; h.order()];
    for &v in map {
        if v >= h.order() || std::mem::replace(&mut hit[v], true) {
            return false;
        }
    }
    (0..g.order()).all(|u| g.color(u) == h.color(map[u]))
        && g.edges().all(|(u, v)| h.has_edge(map[u], map[v]))
        && (0..g.order()).all(|u| {
            (0..u).all(|v| g.equivalent(u, v) == h.equivalent(map[u], map[v]))
        })
}

/// Exhaustive isomorphism search: candidates are pruned by color and degree,
/// then extended in vertex-id order with backtracking.
pub fn brute_force_isomorphism(g: &ColoredGraph, h: &ColoredGraph) -> Option<Vec<Vertex>> {
    let n = g.order();
    if n != h.order() || g.size() != h.size() || g.color_class_profile() != h.color_class_profile() {
        return None;
    }
    let mut deg_g: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut deg_h: Vec<usize> = (0..n).map(|v| h.degree(v)).collect();
    deg_g.sort_unstable();
    deg_h.sort_unstable();
    if deg_g != deg_h {
        return None;
    }
    let candidates: Vec<Vec<Vertex>> = (0..n)
        .map(|u| {
            (0..n)
                .filter(|&v| g.color(u) == h.color(v) && g.degree(u) == h.degree(v))
                .collect()
        })
        .collect();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(
        u: Vertex,
        g: &ColoredGraph,
        h: &ColoredGraph,
        cand: &[Vec<Vertex>],
        map: &mut [Vertex],
        used: &mut [bool],
    ) -> bool {
        if u == map.len() {
            return true;
        }
        for &v in &cand[u] {
            if used[v] {
                continue;
            }
            let ok = (0..u).all(|w| {
                g.has_edge(u, w) == h.has_edge(v, map[w])
                    && g.equivalent(u, w) == h.equivalent(v, map[w])
            });
            if !ok {
                continue;
            }
            map[u] = v;
            used[v] = true;
            if extend(u + 1, g, h, cand, map, used) {
                return true;
            }
            used[v] = false;
        }
        false
    }
    extend(0, g, h, &candidates, &mut map, &mut used).then_some(map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TwinPair {
    pub u: Vertex,
    pub v: Vertex,
    pub connected: bool,
}

/// All unordered pairs whose neighborhoods agree outside the pair itself.
pub fn find_twins(g: &ColoredGraph) -> Vec<TwinPair> {
    let n = g.order();
    let adj = g.adjacency_matrix();
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if (0..n).all(|w| w == u || w == v || adj[u][w] == adj[v][w]) {
                out.push(TwinPair { u, v, connected: adj[u][v] });
            }
        }
    }
    out
}

/// The twinned graph: every vertex `u` becomes an adjacent pair `u_0 = 2u`,
/// `u_1 = 2u + 1`, and base edges become complete bipartite joins.
#[derive(Clone, Debug)]
pub struct TwinnedGraph {
    pub base: ColoredGraph,
    pub graph: ColoredGraph,
}

impl TwinnedGraph {
    pub fn forward(&self, u: Vertex) -> [Vertex; 2] {
        [2 * u, 2 * u + 1]
    }

    pub fn inverse(&self, x: Vertex) -> Vertex {
        x / 2
    }

    /// The other copy of the same base vertex.
    pub fn partner(&self, x: Vertex) -> Vertex {
        x ^ 1
    }
}

pub fn twinned(g: &ColoredGraph) -> TwinnedGraph {
    let n = g.order();
    let colors = (0..2 * n).map(|x| g.color(x / 2)).collect();
    let mut x = ColoredGraph::new(colors);
    x.set_labels((0..2 * n).map(|v| format!("{}_{}", g.label(v / 2), v % 2)).collect());
    for u in 0..n {
        x.add_edge(2 * u, 2 * u + 1).expect("twin edge");
    }
    for (u, v) in g.edges() {
        for i in 0..2 {
            for j in 0..2 {
                x.add_edge(2 * u + i, 2 * v + j).expect("lifted edge");
            }
        }
    }
    TwinnedGraph { base: g.clone(), graph: x }
}

// ---------------------------------------------------------------------------
// Graph document
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexEntry {
    pub id: Vertex,
    pub color: Color,
    #[serde(default)]
    pub label: String,
}

/// Serialized graph. Vertices are ordered by id and edges lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<[Vertex; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<Vec<Vec<Vertex>>>,
}

impl GraphDocument {
    pub fn from_graph(g: &ColoredGraph) -> Self {
        GraphDocument {
            vertices: (0..g.order())
                .map(|v| VertexEntry { id: v, color: g.color(v), label: g.label(v).to_owned() })
                .collect(),
            edges: g.edges().map(|(u, v)| [u, v]).collect(),
            equivalence: g.has_equivalence().then(|| g.equivalence_classes()),
        }
    }

    pub fn to_graph(&self) -> Result<ColoredGraph> {
        for (i, entry) in self.vertices.iter().enumerate() {
            if entry.id != i {
                return Err(Error::Malformed(format!("vertex ids must be 0..n in order, got {} at {i}", entry.id)));
            }
        }
        let mut g = ColoredGraph::new(self.vertices.iter().map(|e| e.color).collect());
        g.set_labels(self.vertices.iter().map(|e| e.label.clone()).collect());
        for &[u, v] in &self.edges {
            g.add_edge(u, v)?;
        }
        if let Some(classes) = &self.equivalence {
            g.set_equivalence(classes)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> ColoredGraph {
        ColoredGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        let mut g = ColoredGraph::new(vec![0; 2]);
        assert!(g.add_edge(1, 1).is_err());
        assert!(g.add_edge(0, 2).is_err());
    }

    #[test]
    fn single_vertex_profile() {
        let g = ColoredGraph::new(vec![7]);
        let p = g.color_class_profile();
        assert_eq!(p.sizes.get(&7), Some(&1));
        assert_eq!(p.max, 1);
    }

    #[test]
    fn partial_isomorphism_basics() {
        let g = ColoredGraph::from_edges(vec![0, 0], &[(0, 1)]).unwrap();
        let h = ColoredGraph::new(vec![0, 0]);
        assert!(is_partial_isomorphism(&g, &h, &[], &[]).unwrap());
        assert!(is_partial_isomorphism(&g, &h, &[Some(0)], &[Some(1)]).unwrap());
        assert!(!is_partial_isomorphism(&g, &h, &[Some(0), Some(1)], &[Some(0), Some(1)]).unwrap());
        // non-injective on one side only
        assert!(!is_partial_isomorphism(&h, &h, &[Some(0), Some(0)], &[Some(0), Some(1)]).unwrap());
        assert!(is_partial_isomorphism(&g, &h, &[Some(0)], &[None]).is_err());
    }

    #[test]
    fn twins_of_path_and_triangle() {
        assert_eq!(find_twins(&path3()), vec![TwinPair { u: 0, v: 2, connected: false }]);
        let tri = ColoredGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let twins = find_twins(&tri);
        assert_eq!(twins.len(), 3);
        assert!(twins.iter().all(|t| t.connected));
    }

    #[test]
    fn twinned_small_cases() {
        let x = twinned(&ColoredGraph::new(vec![4]));
        assert_eq!(x.graph.order(), 2);
        assert!(x.graph.has_edge(0, 1));
        assert_eq!(x.graph.colors(), &[4, 4]);

        let e = ColoredGraph::from_edges(vec![0, 1], &[(0, 1)]).unwrap();
        let x = twinned(&e);
        assert_eq!(x.graph.size(), 6);
        for a in 0..2 {
            for b in 2..4 {
                assert!(x.graph.has_edge(a, b));
            }
        }
        assert_eq!(x.partner(3), 2);
        assert_eq!(x.inverse(3), 1);
        assert_eq!(x.forward(1), [2, 3]);
    }

    #[test]
    fn identity_isomorphism() {
        let g = path3();
        let m = brute_force_isomorphism(&g, &g).unwrap();
        assert!(is_isomorphism(&g, &g, &m));
        assert_eq!(m, vec![0, 1, 2]);
    }

    #[test]
    fn equivalence_must_be_preserved() {
        let mut g = ColoredGraph::new(vec![0; 3]);
        let mut h = ColoredGraph::new(vec![0; 3]);
        g.set_equivalence(&[vec![0, 1]]).unwrap();
        h.set_equivalence(&[vec![1, 2]]).unwrap();
        assert!(brute_force_isomorphism(&g, &h).is_some());
        assert!(!is_partial_isomorphism(&g, &h, &[Some(0), Some(1)], &[Some(0), Some(1)]).unwrap());
        let plain = ColoredGraph::new(vec![0; 3]);
        assert!(brute_force_isomorphism(&g, &plain).is_none());
    }

    #[test]
    fn document_round_trip() {
        let mut g = path3();
        g.set_equivalence(&[vec![0, 2]]).unwrap();
        let doc = GraphDocument::from_graph(&g);
        assert_eq!(doc.edges, vec![[0, 1], [1, 2]]);
        assert_eq!(doc.to_graph().unwrap(), g);
    }
}
