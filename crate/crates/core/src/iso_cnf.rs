//! The CNF formula ISO(G, H), DIMACS I/O and a small DPLL oracle.
//!
//! Variable `x_{u,v}` has the 1-based index `u * |V(H)| + v + 1`. Color
//! clauses are emitted once per vertex of G and once per vertex of H, even
//! when two of them coincide; bijection and edge clauses are deduplicated
//! within their family.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{ColoredGraph, Vertex};

pub type Lit = i32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Color,
    Bijection,
    Edge,
    /// Unit clause `¬x_{u,v}` for a pair of differently colored vertices.
    Domain,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoFormula {
    pub n_g: usize,
    pub n_h: usize,
    pub clauses: Vec<Vec<Lit>>,
    pub families: Vec<Family>,
    pub width: usize,
}

/// Default cap on the number of variables accepted by [`mini_sat`].
pub const MINI_SAT_VAR_CAP: usize = 1 << 16;

impl IsoFormula {
    pub fn var(&self, u: Vertex, v: Vertex) -> Lit {
        (u * self.n_h + v + 1) as Lit
    }

    /// Inverse of [`IsoFormula::var`].
    pub fn pair(&self, var: Lit) -> (Vertex, Vertex) {
        let i = var.unsigned_abs() as usize - 1;
        (i / self.n_h, i % self.n_h)
    }

    pub fn num_vars(&self) -> usize {
        self.n_g * self.n_h
    }

    pub fn family_count(&self, f: Family) -> usize {
        self.families.iter().filter(|&&x| x == f).count()
    }

    /// Indices of the color clauses.
    pub fn color_clauses(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.clauses.len()).filter(|&i| self.families[i] == Family::Color)
    }

    /// Smallest-id clause falsified by `sigma`.
    pub fn violated_clause(&self, sigma: &BTreeMap<Lit, bool>) -> Option<usize> {
        self.clauses.iter().position(|c| {
            c.iter().all(|&l| sigma.get(&l.abs()).is_some_and(|&b| b != (l > 0)))
        })
    }

    /// Decodes a model into the vertex map `u ↦ v` (first true variable per `u`).
    pub fn decode(&self, model: &[bool]) -> Vec<Option<Vertex>> {
        (0..self.n_g)
            .map(|u| (0..self.n_h).find(|&v| model[self.var(u, v) as usize - 1]))
            .collect()
    }
}

pub fn build_iso(g: &ColoredGraph, h: &ColoredGraph) -> IsoFormula {
    let (n_g, n_h) = (g.order(), h.order());
    let var = |u: Vertex, v: Vertex| (u * n_h + v + 1) as Lit;
    let mut clauses = Vec::new();
    let mut families = Vec::new();
    for u in 0..n_g {
        clauses.push((0..n_h).filter(|&v| h.color(v) == g.color(u)).map(|v| var(u, v)).collect());
        families.push(Family::Color);
    }
    for v in 0..n_h {
        clauses.push((0..n_g).filter(|&u| g.color(u) == h.color(v)).map(|u| var(u, v)).collect());
        families.push(Family::Color);
    }
    let mut seen: HashSet<(Lit, Lit)> = HashSet::new();
    let push2 = |a: Lit, b: Lit, fam: Family, clauses: &mut Vec<Vec<Lit>>, families: &mut Vec<Family>, seen: &mut HashSet<(Lit, Lit)>| {
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            clauses.push(vec![-key.0, -key.1]);
            families.push(fam);
        }
    };
    for w in 0..n_h {
        for u in 0..n_g {
            for v in u + 1..n_g {
                push2(var(u, w), var(v, w), Family::Bijection, &mut clauses, &mut families, &mut seen);
            }
        }
    }
    for u in 0..n_g {
        for v in 0..n_h {
            for w in v + 1..n_h {
                push2(var(u, v), var(u, w), Family::Bijection, &mut clauses, &mut families, &mut seen);
            }
        }
    }
    seen.clear();
    for u in 0..n_g {
        for u2 in 0..n_g {
            if u == u2 {
                continue;
            }
            for v in 0..n_h {
                for v2 in 0..n_h {
                    let hv = v != v2 && h.has_edge(v, v2);
                    if g.has_edge(u, u2) != hv && var(u, v) < var(u2, v2) {
                        push2(var(u, v), var(u2, v2), Family::Edge, &mut clauses, &mut families, &mut seen);
                    }
                }
            }
        }
    }
    let width = g.color_class_profile().max.max(h.color_class_profile().max);
    IsoFormula { n_g, n_h, clauses, families, width }
}

/// Same models as [`build_iso`] at a fraction of the size: clauses of the full
/// formula that mention a variable pairing differently colored vertices are
/// dropped, and each such variable gets a unit clause `¬x_{u,v}` instead
/// (color and bijection clauses already force it to 0).
pub fn build_iso_restricted(g: &ColoredGraph, h: &ColoredGraph) -> IsoFormula {
    let (n_g, n_h) = (g.order(), h.order());
    let var = |u: Vertex, v: Vertex| (u * n_h + v + 1) as Lit;
    let mut by_color_g: BTreeMap<u32, Vec<Vertex>> = BTreeMap::new();
    let mut by_color_h: BTreeMap<u32, Vec<Vertex>> = BTreeMap::new();
    (0..n_g).for_each(|u| by_color_g.entry(g.color(u)).or_default().push(u));
    (0..n_h).for_each(|v| by_color_h.entry(h.color(v)).or_default().push(v));
    let none = Vec::new();
    let in_h = |c: u32| by_color_h.get(&c).unwrap_or(&none);
    let in_g = |c: u32| by_color_g.get(&c).unwrap_or(&none);
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut families = Vec::new();
    for u in 0..n_g {
        clauses.push(in_h(g.color(u)).iter().map(|&v| var(u, v)).collect());
        families.push(Family::Color);
    }
    for v in 0..n_h {
        clauses.push(in_g(h.color(v)).iter().map(|&u| var(u, v)).collect());
        families.push(Family::Color);
    }
    let mut bij: BTreeSet<(Lit, Lit)> = BTreeSet::new();
    for (c, us) in &by_color_g {
        let vs = in_h(*c);
        for &w in vs {
            for (i, &u) in us.iter().enumerate() {
                for &v in &us[i + 1..] {
                    bij.insert(ordered(var(u, w), var(v, w)));
                }
            }
        }
        for &u in us {
            for (i, &v) in vs.iter().enumerate() {
                for &w in &vs[i + 1..] {
                    bij.insert(ordered(var(u, v), var(u, w)));
                }
            }
        }
    }
    let mut edge: BTreeSet<(Lit, Lit)> = BTreeSet::new();
    for (u, u2) in g.edges() {
        for (a, b) in [(u, u2), (u2, u)] {
            for &v in in_h(g.color(a)) {
                for &v2 in in_h(g.color(b)) {
                    if !(v != v2 && h.has_edge(v, v2)) {
                        edge.insert(ordered(var(a, v), var(b, v2)));
                    }
                }
            }
        }
    }
    for (v, v2) in h.edges() {
        for (a, b) in [(v, v2), (v2, v)] {
            for &u in in_g(h.color(a)) {
                for &u2 in in_g(h.color(b)) {
                    if u != u2 && !g.has_edge(u, u2) {
                        edge.insert(ordered(var(u, a), var(u2, b)));
                    }
                }
            }
        }
    }
    for (fam, set) in [(Family::Bijection, bij), (Family::Edge, edge)] {
        for (a, b) in set {
            clauses.push(vec![-a, -b]);
            families.push(fam);
        }
    }
    for u in 0..n_g {
        for v in 0..n_h {
            if g.color(u) != h.color(v) {
                clauses.push(vec![-var(u, v)]);
                families.push(Family::Domain);
            }
        }
    }
    let width = g.color_class_profile().max.max(h.color_class_profile().max);
    IsoFormula { n_g, n_h, clauses, families, width }
}

fn ordered(a: Lit, b: Lit) -> (Lit, Lit) {
    (a.min(b), a.max(b))
}

/// DPLL with unit propagation and chronological backtracking; returns a model
/// (indexed by variable − 1) if satisfiable.
pub fn mini_sat(formula: &IsoFormula) -> Result<Option<Vec<bool>>> {
    solve_cnf(formula.num_vars(), &formula.clauses, MINI_SAT_VAR_CAP)
}

pub fn solve_cnf(num_vars: usize, clauses: &[Vec<Lit>], cap: usize) -> Result<Option<Vec<bool>>> {
    if num_vars > cap {
        return Err(Error::TooLarge { vars: num_vars, cap });
    }
    if clauses.iter().any(|c| c.is_empty()) {
        return Ok(None);
    }
    let mut occ: Vec<Vec<usize>> = vec![Vec::new(); 2 * num_vars + 2];
    let idx = |l: Lit| if l > 0 { 2 * l as usize } else { 2 * (-l) as usize + 1 };
    for (ci, c) in clauses.iter().enumerate() {
        for &l in c {
            occ[idx(l)].push(ci);
        }
    }
    let mut s = Dpll { clauses, occ, assign: vec![0; num_vars + 1], trail: Vec::new() };
    let units: Vec<Lit> = clauses.iter().filter(|c| c.len() == 1).map(|c| c[0]).collect();
    for l in units {
        if !s.set_and_propagate(l) {
            return Ok(None);
        }
    }
    if s.search() {
        Ok(Some(s.assign[1..].iter().map(|&a| a > 0).collect()))
    } else {
        Ok(None)
    }
}

struct Dpll<'a> {
    clauses: &'a [Vec<Lit>],
    occ: Vec<Vec<usize>>,
    assign: Vec<i8>,
    trail: Vec<Lit>,
}

impl Dpll<'_> {
    fn value(&self, l: Lit) -> i8 {
        let a = self.assign[l.unsigned_abs() as usize];
        if l > 0 {
            a
        } else {
            -a
        }
    }

    /// Assigns `l` and propagates; on conflict the caller undoes the trail.
    fn set_and_propagate(&mut self, l: Lit) -> bool {
        match self.value(l) {
            1 => return true,
            -1 => return false,
            _ => {}
        }
        let mut queue = vec![l];
        while let Some(l) = queue.pop() {
            match self.value(l) {
                1 => continue,
                -1 => return false,
                _ => {}
            }
            self.assign[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
            self.trail.push(l);
            let neg = if l > 0 { 2 * l as usize + 1 } else { 2 * (-l) as usize };
            for &ci in &self.occ[neg] {
                let c = &self.clauses[ci];
                let mut open = None;
                let mut n_open = 0;
                let mut sat = false;
                for &x in c {
                    match self.value(x) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            n_open += 1;
                            open = Some(x);
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match n_open {
                    0 => return false,
                    1 => queue.push(open.expect("one open literal")),
                    _ => {}
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let l = self.trail.pop().expect("trail");
            self.assign[l.unsigned_abs() as usize] = 0;
        }
    }

    /// Branch variable: an open literal of an unsatisfied clause with fewest open literals.
    fn pick(&self) -> Option<Lit> {
        let mut best: Option<(usize, Lit)> = None;
        for c in self.clauses {
            if c.iter().any(|&x| self.value(x) == 1) {
                continue;
            }
            let open: Vec<Lit> = c.iter().copied().filter(|&x| self.value(x) == 0).collect();
            if let Some(&first) = open.first() {
                if best.is_none_or(|(n, _)| open.len() < n) {
                    best = Some((open.len(), first));
                }
            }
        }
        best.map(|(_, l)| l)
    }

    fn search(&mut self) -> bool {
        let Some(l) = self.pick() else { return true };
        for lit in [l, -l] {
            let mark = self.trail.len();
            if self.set_and_propagate(lit) && self.search() {
                return true;
            }
            self.undo(mark);
        }
        false
    }
}

/// Generator parameters recorded in the DIMACS manifest comment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DimacsMeta {
    pub params: Vec<(String, String)>,
}

fn body(formula: &IsoFormula) -> String {
    let mut s = format!("p cnf {} {}\n", formula.num_vars(), formula.clauses.len());
    for c in &formula.clauses {
        for l in c {
            s.push_str(&l.to_string());
            s.push(' ');
        }
        s.push_str("0\n");
    }
    s
}

/// SHA-256 of the `p cnf` line and clause lines.
pub fn formula_hash(formula: &IsoFormula) -> String {
    hex::encode(Sha256::digest(body(formula).as_bytes()))
}

pub fn write_dimacs<W: Write>(formula: &IsoFormula, meta: &DimacsMeta, mut sink: W) -> Result<()> {
    let mut line = String::from("c cfi-forge");
    for (k, v) in &meta.params {
        line.push_str(&format!(" {k}={v}"));
    }
    line.push_str(&format!(" sha={}", formula_hash(formula)));
    writeln!(sink, "{line}")?;
    writeln!(sink, "c vars x(u,v)=u*{}+v+1 nG={} nH={}", formula.n_h, formula.n_g, formula.n_h)?;
    let count = |f| formula.family_count(f);
    let (a, b, c) = (count(Family::Color), count(Family::Bijection), count(Family::Edge));
    match count(Family::Domain) {
        0 => writeln!(sink, "c families color={a} bijection={b} edge={c} width={}", formula.width)?,
        d => writeln!(sink, "c families color={a} bijection={b} edge={c} domain={d} width={}", formula.width)?,
    }
    sink.write_all(body(formula).as_bytes())?;
    Ok(())
}

pub fn dimacs_string(formula: &IsoFormula, meta: &DimacsMeta) -> String {
    let mut out = Vec::new();
    write_dimacs(formula, meta, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("ascii")
}

fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace().find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

/// Reads a DIMACS file written by [`write_dimacs`]; returns the formula and
/// the manifest parameters (without the hash).
pub fn read_dimacs<R: BufRead>(source: R) -> Result<(IsoFormula, DimacsMeta)> {
    let bad = |m: &str| Error::Malformed(m.to_string());
    let mut meta = DimacsMeta::default();
    let mut dims: Option<(usize, usize)> = None;
    let mut fams: Option<(usize, usize, usize, usize, usize)> = None;
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut cur: Vec<Lit> = Vec::new();
    let parse = |s: Option<&str>| -> Result<usize> {
        s.ok_or_else(|| bad("missing field"))?.parse().map_err(|_| bad("bad number"))
    };
    for line in source.lines() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("c cfi-forge") {
            for tok in rest.split_whitespace() {
                let (k, v) = tok.split_once('=').ok_or_else(|| bad("bad manifest token"))?;
                if k != "sha" {
                    meta.params.push((k.to_string(), v.to_string()));
                }
            }
        } else if t.starts_with("c vars") {
            dims = Some((parse(field(t, "nG"))?, parse(field(t, "nH"))?));
        } else if t.starts_with("c families") {
            fams = Some((
                parse(field(t, "color"))?,
                parse(field(t, "bijection"))?,
                parse(field(t, "edge"))?,
                field(t, "domain").map_or(Ok(0), |d| parse(Some(d)))?,
                parse(field(t, "width"))?,
            ));
        } else if t.starts_with('c') || t.is_empty() {
            continue;
        } else if let Some(rest) = t.strip_prefix("p cnf") {
            let nums: Vec<usize> = rest.split_whitespace().map(|x| x.parse().map_err(|_| bad("bad header"))).collect::<Result<_>>()?;
            if nums.len() != 2 {
                return Err(bad("bad header"));
            }
            header = Some((nums[0], nums[1]));
        } else {
            let (nv, _) = header.ok_or_else(|| bad("clause before header"))?;
            for tok in t.split_whitespace() {
                let l: Lit = tok.parse().map_err(|_| bad("bad literal"))?;
                if l == 0 {
                    clauses.push(std::mem::take(&mut cur));
                } else if l.unsigned_abs() as usize > nv {
                    return Err(bad("literal out of range"));
                } else {
                    cur.push(l);
                }
            }
        }
    }
    let (nv, nc) = header.ok_or_else(|| bad("missing header"))?;
    if !cur.is_empty() || clauses.len() != nc {
        return Err(bad("clause count does not match header"));
    }
    let (n_g, n_h) = dims.ok_or_else(|| bad("missing variable layout comment"))?;
    let (a, b, c, d, width) = fams.ok_or_else(|| bad("missing family comment"))?;
    if n_g * n_h != nv || a + b + c + d != nc {
        return Err(bad("layout comments disagree with header"));
    }
    let families = std::iter::repeat_n(Family::Color, a)
        .chain(std::iter::repeat_n(Family::Bijection, b))
        .chain(std::iter::repeat_n(Family::Edge, c))
        .chain(std::iter::repeat_n(Family::Domain, d))
        .collect();
    Ok((IsoFormula { n_g, n_h, clauses, families, width }, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::brute_force_isomorphism;

    #[test]
    fn single_vertex_formula() {
        let g = ColoredGraph::new(vec![0]);
        let f = build_iso(&g, &g);
        assert_eq!(f.clauses, vec![vec![1], vec![1]]);
        assert_eq!(f.width, 1);
        assert_eq!(mini_sat(&f).unwrap(), Some(vec![true]));
        let text = dimacs_string(&f, &DimacsMeta::default());
        assert!(text.lines().any(|l| l == "1 0"));
    }

    #[test]
    fn disjoint_palettes_give_empty_clause() {
        let g = ColoredGraph::new(vec![0]);
        let h = ColoredGraph::new(vec![1]);
        let f = build_iso(&g, &h);
        assert!(f.clauses.iter().any(|c| c.is_empty()));
        assert_eq!(mini_sat(&f).unwrap(), None);
    }

    #[test]
    fn empty_formula_is_sat() {
        assert!(solve_cnf(0, &[], 10).unwrap().is_some());
        assert!(matches!(solve_cnf(11, &[], 10), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn path_versus_triangle() {
        let p3 = ColoredGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2)]).unwrap();
        let k3 = ColoredGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(mini_sat(&build_iso(&p3, &k3)).unwrap(), None);
        let rev = ColoredGraph::from_edges(vec![0; 3], &[(0, 2), (1, 2)]).unwrap();
        let f = build_iso(&p3, &rev);
        let model = mini_sat(&f).unwrap().unwrap();
        let map: Vec<_> = f.decode(&model).into_iter().map(Option::unwrap).collect();
        assert!(crate::graph::is_isomorphism(&p3, &rev, &map));
        assert!(brute_force_isomorphism(&p3, &rev).is_some());
    }

    #[test]
    fn violated_clause_reports_bijection() {
        let g = ColoredGraph::new(vec![0, 0]);
        let f = build_iso(&g, &g);
        let sigma = BTreeMap::from([(f.var(0, 1), true), (f.var(1, 1), true)]);
        let id = f.violated_clause(&sigma).unwrap();
        assert_eq!(f.families[id], Family::Bijection);
        assert!(f.violated_clause(&BTreeMap::new()).is_none());
    }

    #[test]
    fn dimacs_round_trip() {
        let p3 = ColoredGraph::from_edges(vec![0, 1, 0], &[(0, 1), (1, 2)]).unwrap();
        let f = build_iso(&p3, &p3);
        let meta = DimacsMeta { params: vec![("k".into(), "3".into())] };
        let text = dimacs_string(&f, &meta);
        let (back, m) = read_dimacs(text.as_bytes()).unwrap();
        assert_eq!(back, f);
        assert_eq!(m, meta);
        assert!(read_dimacs("p cnf 1 1\n2 0\n".as_bytes()).is_err());
    }

    #[test]
    fn restricted_formula_keeps_same_color_clauses() {
        let g = ColoredGraph::from_edges(vec![0, 1, 0, 1], &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let h = ColoredGraph::from_edges(vec![0, 1, 1, 0], &[(0, 1), (1, 3), (3, 2)]).unwrap();
        let full = build_iso(&g, &h);
        let small = build_iso_restricted(&g, &h);
        assert_eq!(small.num_vars(), full.num_vars());
        assert_eq!(small.width, full.width);
        let norm = |c: &Vec<Lit>| {
            let mut c = c.clone();
            c.sort_unstable();
            c
        };
        let full_set: HashSet<Vec<Lit>> = full.clauses.iter().map(norm).collect();
        let cross = |l: Lit| {
            let (u, v) = full.pair(l);
            g.color(u) != h.color(v)
        };
        for (c, fam) in small.clauses.iter().zip(&small.families) {
            match fam {
                Family::Domain => assert!(c.len() == 1 && cross(c[0])),
                _ => assert!(full_set.contains(&norm(c)), "{c:?}"),
            }
        }
        let small_set: HashSet<Vec<Lit>> = small.clauses.iter().map(norm).collect();
        for c in &full.clauses {
            assert!(small_set.contains(&norm(c)) || c.iter().any(|&l| cross(l)));
        }
        assert_eq!(mini_sat(&small).unwrap().is_some(), mini_sat(&full).unwrap().is_some());
        let text = dimacs_string(&small, &DimacsMeta::default());
        assert_eq!(read_dimacs(text.as_bytes()).unwrap().0, small);
    }
}
