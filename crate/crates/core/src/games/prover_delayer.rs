//! The k-narrow Prover-Delayer game on ISO(G, H) and an exact oracle for the
//! minimum size of tree-like refutations whose clauses have width at most k.
//!
//! Both are solved by value iteration from infinity over partial assignments
//! with at most k variables. Only variables `x_{u,v}` with `u`, `v` of equal
//! color are used: any other variable occurs only negatively, so assigning it
//! can never help Prover (or shorten a refutation).

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use super::Value;
use crate::error::{Error, Result};
use crate::graph::ColoredGraph;
use crate::iso_cnf::{build_iso, mini_sat, IsoFormula, Lit};

pub const DEFAULT_STATE_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PdConfig {
    /// Also let Prover query variables pairing vertices of different colors.
    pub cross_color: bool,
    pub state_cap: usize,
}

impl Default for PdConfig {
    fn default() -> Self {
        PdConfig { cross_color: false, state_cap: DEFAULT_STATE_CAP }
    }
}

const VIOL: u32 = u32::MAX;
const INF: u64 = u64::MAX;

/// Assignments are sorted slices of `pos << 1 | value`, where `pos` indexes
/// the variable list of the space.
struct Space {
    formula: IsoFormula,
    k: usize,
    vars: Vec<Lit>,
    /// Variable position by formula variable, `u32::MAX` if unused.
    pos: Vec<u32>,
    /// Clause ids by variable position.
    occ: Vec<Vec<usize>>,
    /// Distinct color clauses as variable positions.
    narrow: Vec<Vec<u32>>,
    keys: Vec<Box<[u32]>>,
    index: FxHashMap<Box<[u32]>, u32>,
    /// Per state: ids of its subsets with at most k-1 entries.
    subs: Vec<Vec<u32>>,
    /// Per restricted state: successor ids for `x ↦ 0`, `x ↦ 1` (VIOL if the
    /// extension violates a clause, absent if `x` is assigned).
    res: FxHashMap<u32, Vec<[u32; 2]>>,
}

impl Space {
    fn new(g: &ColoredGraph, h: &ColoredGraph, k: usize, sigma0: &BTreeMap<Lit, bool>, cfg: PdConfig) -> Result<(Self, u32)> {
        if k == 0 {
            return Err(Error::Contract("k must be at least 1".into()));
        }
        let formula = build_iso(g, h);
        if mini_sat(&formula)?.is_some() {
            return Err(Error::SatisfiableFormula);
        }
        let mut vars = Vec::new();
        for u in 0..g.order() {
            for v in 0..h.order() {
                let x = formula.var(u, v);
                if cfg.cross_color || g.color(u) == h.color(v) || sigma0.contains_key(&x) {
                    vars.push(x);
                }
            }
        }
        let pos: FxHashMap<Lit, u32> = vars.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
        let mut occ = vec![Vec::new(); vars.len()];
        for (ci, c) in formula.clauses.iter().enumerate() {
            if c.iter().all(|l| pos.contains_key(&l.abs())) {
                for l in c {
                    occ[pos[&l.abs()] as usize].push(ci);
                }
            }
        }
        let mut narrow: Vec<Vec<u32>> = formula
            .color_clauses()
            .map(|ci| {
                let mut c: Vec<u32> = formula.clauses[ci].iter().filter_map(|l| pos.get(l).copied()).collect();
                c.sort_unstable();
                c
            })
            .collect();
        narrow.sort();
        narrow.dedup();
        if sigma0.len() > k {
            return Err(Error::Contract(format!("start assignment has {} > {k} variables", sigma0.len())));
        }
        let mut start: Vec<u32> = Vec::new();
        for (&x, &b) in sigma0 {
            let p = *pos.get(&x).ok_or_else(|| Error::Contract(format!("unknown variable {x}")))?;
            start.push(p << 1 | b as u32);
        }
        start.sort_unstable();
        let mut pos_vec = vec![u32::MAX; formula.num_vars() + 1];
        for (i, &x) in vars.iter().enumerate() {
            pos_vec[x as usize] = i as u32;
        }
        let mut space = Space {
            formula,
            k,
            vars,
            pos: pos_vec,
            occ,
            narrow,
            keys: Vec::new(),
            index: FxHashMap::default(),
            subs: Vec::new(),
            res: FxHashMap::default(),
        };
        if space.violates(&start) {
            return Ok((space, VIOL));
        }
        let root = space.intern(start.into_boxed_slice(), cfg.state_cap)?;
        space.explore(cfg.state_cap)?;
        Ok((space, root))
    }

    fn value_of(&self, sigma: &[u32], pos: u32) -> Option<bool> {
        sigma.iter().find(|&&c| c >> 1 == pos).map(|&c| c & 1 == 1)
    }

    fn violates(&self, sigma: &[u32]) -> bool {
        sigma.iter().any(|&c| {
            self.occ[(c >> 1) as usize].iter().any(|&ci| {
                let clause = &self.formula.clauses[ci];
                clause.len() <= sigma.len()
                    && clause
                        .iter()
                        .all(|&l| self.value_of(sigma, self.pos[l.unsigned_abs() as usize]).is_some_and(|b| b != (l > 0)))
            })
        })
    }

    fn intern(&mut self, key: Box<[u32]>, cap: usize) -> Result<u32> {
        if let Some(&id) = self.index.get(&key) {
            return Ok(id);
        }
        if self.keys.len() >= cap {
            return Err(Error::StateSpaceTooLarge { measured: self.keys.len() as u128 + 1, cap: cap as u128 });
        }
        let id = self.keys.len() as u32;
        self.keys.push(key.clone());
        self.index.insert(key, id);
        Ok(id)
    }

    fn extend(sigma: &[u32], code: u32) -> Vec<u32> {
        let mut out: Vec<u32> = sigma.iter().copied().filter(|&c| c >> 1 != code >> 1).collect();
        out.push(code);
        out.sort_unstable();
        out
    }

    fn explore(&mut self, cap: usize) -> Result<()> {
        let mut next = 0;
        while next < self.keys.len() {
            let id = next as u32;
            let key = self.keys[next].clone();
            next += 1;
            let mut subs = Vec::new();
            for mask in 0u32..(1 << key.len()) {
                if (mask.count_ones() as usize) < self.k {
                    let sub: Vec<u32> = (0..key.len()).filter(|&i| mask >> i & 1 == 1).map(|i| key[i]).collect();
                    subs.push(self.intern(sub.into_boxed_slice(), cap)?);
                }
            }
            self.subs.push(subs);
            if key.len() < self.k {
                let mut res = Vec::with_capacity(self.vars.len());
                for p in 0..self.vars.len() as u32 {
                    if self.value_of(&key, p).is_some() {
                        res.push([VIOL, VIOL]);
                        continue;
                    }
                    let mut pair = [VIOL; 2];
                    for b in 0..2 {
                        let ext = Self::extend(&key, p << 1 | b);
                        if !self.violates(&ext) {
                            pair[b as usize] = self.intern(ext.into_boxed_slice(), cap)?;
                        }
                    }
                    res.push(pair);
                }
                self.res.insert(id, res);
            }
        }
        Ok(())
    }

    /// Successor of restricted state `r` under `x ↦ 1`, for narrow moves.
    fn set_true(&self, r: u32, p: u32) -> Option<u32> {
        match self.value_of(&self.keys[r as usize], p) {
            Some(true) => Some(r),
            Some(false) => None,
            None => Some(self.res[&r][p as usize][1]),
        }
    }
}

fn sat_inc(v: u64) -> u64 {
    v.saturating_add(1)
}

/// Outcome of [`prover_delayer_value`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PdOutcome {
    /// Points Delayer can guarantee; `Infinite` if Prover cannot force a win.
    pub value: Value,
    pub states: usize,
}

/// Value iteration for the k-narrow Prover-Delayer game starting from `sigma0`.
pub fn prover_delayer_value(
    g: &ColoredGraph,
    h: &ColoredGraph,
    k: usize,
    sigma0: &BTreeMap<Lit, bool>,
    cfg: PdConfig,
) -> Result<PdOutcome> {
    let (space, root) = Space::new(g, h, k, sigma0, cfg)?;
    if root == VIOL {
        return Ok(PdOutcome { value: Value::Finite(0), states: 0 });
    }
    let f = pd_values(&space);
    Ok(PdOutcome { value: to_value(f[root as usize]), states: space.keys.len() })
}

fn to_value(v: u64) -> Value {
    if v == INF {
        Value::Infinite
    } else {
        Value::Finite(v as u32)
    }
}

/// Delayer's guaranteed points from every state.
fn pd_values(space: &Space) -> Vec<u64> {
    let n = space.keys.len();
    let mut f = vec![INF; n];
    let mut m: FxHashMap<u32, u64> = space.res.keys().map(|&r| (r, INF)).collect();
    let mut restricted: Vec<u32> = space.res.keys().copied().collect();
    restricted.sort_unstable();
    let get = |f: &[u64], id: u32| if id == VIOL { 0 } else { f[id as usize] };
    loop {
        let mut changed = false;
        for &r in &restricted {
            let key = &space.keys[r as usize];
            let mut best = INF;
            for (p, &[s0, s1]) in space.res[&r].iter().enumerate() {
                if space.value_of(key, p as u32).is_some() {
                    continue;
                }
                let (a0, a1) = (get(&f, s0), get(&f, s1));
                best = best.min(a0.max(a1).max(sat_inc(a0.min(a1))));
            }
            for c in &space.narrow {
                let mut b: Vec<u64> = c.iter().filter_map(|&p| space.set_true(r, p)).map(|s| get(&f, s)).collect();
                if b.is_empty() {
                    continue;
                }
                b.sort_unstable_by(|x, y| y.cmp(x));
                let point = if b.len() >= 2 { sat_inc(b[1]) } else { 0 };
                best = best.min(b[0].max(point));
            }
            let slot = m.get_mut(&r).unwrap();
            if best < *slot {
                *slot = best;
                changed = true;
            }
        }
        for (fs, subs) in f.iter_mut().zip(&space.subs) {
            let v = subs.iter().map(|r| m[r]).min().unwrap_or(INF);
            if v < *fs {
                *fs = v;
                changed = true;
            }
        }
        if !changed {
            return f;
        }
    }
}

/// Outcome of [`min_refutation_size`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefutationOutcome {
    /// Fewest clauses in a tree-like refutation of width at most k, if any.
    pub size: Option<u64>,
    pub states: usize,
}

/// Exhaustive minimum size of a tree-like refutation of ISO(G, H) in which
/// every clause has at most `k` literals.
///
/// A clause is identified with the assignment `ρ` falsifying it. It is a leaf
/// if `ρ` falsifies an axiom. Otherwise it is derived either by resolving on a
/// variable `x` from clauses `ρ_0 ∪ {x ↦ 0}` and `ρ_1 ∪ {x ↦ 1}`, or by a
/// narrow step on a color clause `C` from one clause `ρ_x ∪ {x ↦ 1}` per
/// literal `x` of `C` not set to 0 by `ρ`; every `ρ_i ⊆ ρ` has at most k-1
/// entries.
pub fn min_refutation_size(g: &ColoredGraph, h: &ColoredGraph, k: usize, cfg: PdConfig) -> Result<RefutationOutcome> {
    let (space, root) = Space::new(g, h, k, &BTreeMap::new(), cfg)?;
    if root == VIOL {
        return Ok(RefutationOutcome { size: Some(1), states: 0 });
    }
    let n = space.keys.len();
    let mut s = vec![INF; n];
    let child = |s: &[u64], id: u32| if id == VIOL { 1 } else { s[id as usize] };
    loop {
        let mut changed = false;
        for rho in 0..n {
            let key = &space.keys[rho];
            // cheapest child ρ_i ∪ {p ↦ b}
            let t = |s: &[u64], p: u32, b: usize| -> u64 {
                space.subs[rho]
                    .iter()
                    .filter(|&&a| space.value_of(&space.keys[a as usize], p).is_none())
                    .map(|&a| child(s, space.res[&a][p as usize][b]))
                    .min()
                    .unwrap_or(INF)
            };
            let mut best = INF;
            for p in 0..space.vars.len() as u32 {
                best = best.min(t(&s, p, 0).saturating_add(t(&s, p, 1)));
            }
            for c in &space.narrow {
                let mut total = 0u64;
                for &p in c {
                    if space.value_of(key, p) != Some(false) {
                        total = total.saturating_add(t(&s, p, 1));
                    }
                }
                best = best.min(total);
            }
            let v = sat_inc(best);
            if v < s[rho] {
                s[rho] = v;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let size = (s[root as usize] != INF).then_some(s[root as usize]);
    Ok(RefutationOutcome { size, states: n })
}

/// Whether `sigma` violates a clause of `formula` (the game's end condition).
pub fn ends_game(formula: &IsoFormula, sigma: &BTreeMap<Lit, bool>) -> bool {
    formula.violated_clause(sigma).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfi::{build_cfi, EdgeLabeling, OrderedBaseGraph};
    use crate::graph::twinned;

    fn cfi_pair(n: usize, edges: &[(usize, usize)]) -> (ColoredGraph, ColoredGraph) {
        let base = OrderedBaseGraph::new(n, edges).unwrap();
        let f = EdgeLabeling::zero(&base);
        let g = EdgeLabeling::with_ones(&base, &edges[..1]).unwrap();
        (build_cfi(&base, &f).unwrap().graph, build_cfi(&base, &g).unwrap().graph)
    }

    #[test]
    fn satisfiable_formula_is_rejected() {
        let g = ColoredGraph::from_edges(vec![0; 2], &[(0, 1)]).unwrap();
        let err = prover_delayer_value(&g, &g, 2, &BTreeMap::new(), PdConfig::default()).unwrap_err();
        assert!(matches!(err, Error::SatisfiableFormula));
    }

    #[test]
    fn unit_color_classes_give_no_points() {
        let g = ColoredGraph::from_edges(vec![0, 1], &[(0, 1)]).unwrap();
        let h = ColoredGraph::from_edges(vec![0, 1], &[]).unwrap();
        let v = prover_delayer_value(&g, &h, 2, &BTreeMap::new(), PdConfig::default()).unwrap();
        assert_eq!(v.value, Value::Finite(0));
    }

    #[test]
    fn cross_color_queries_do_not_change_values() {
        let (g, h) = cfi_pair(2, &[(0, 1)]);
        let (xg, xh) = (twinned(&g).graph, twinned(&h).graph);
        for k in 2..=3 {
            let a = prover_delayer_value(&xg, &xh, k, &BTreeMap::new(), PdConfig::default()).unwrap();
            let cfg = PdConfig { cross_color: true, ..PdConfig::default() };
            let b = prover_delayer_value(&xg, &xh, k, &BTreeMap::new(), cfg).unwrap();
            assert_eq!(a.value, b.value);
            assert_eq!(
                min_refutation_size(&xg, &xh, k, PdConfig::default()).unwrap().size,
                min_refutation_size(&xg, &xh, k, cfg).unwrap().size
            );
        }
    }

    #[test]
    fn delayer_scores_on_twins() {
        let (g, h) = cfi_pair(2, &[(0, 1)]);
        let (xg, xh) = (twinned(&g).graph, twinned(&h).graph);
        let p = prover_delayer_value(&xg, &xh, 3, &BTreeMap::new(), PdConfig::default()).unwrap();
        assert!(p.value >= Value::Finite(1), "{:?}", p.value);
        let s = min_refutation_size(&xg, &xh, 2, PdConfig::default()).unwrap();
        let size = s.size.expect("refutable");
        let p2 = prover_delayer_value(&xg, &xh, 3, &BTreeMap::new(), PdConfig::default()).unwrap().value;
        // Prover can follow a refutation, taking the smaller subtree on point responses.
        assert!(p2 <= Value::Finite(64 - size.leading_zeros()));
    }

    #[test]
    fn more_room_never_helps_delayer() {
        let (g, h) = cfi_pair(2, &[(0, 1)]);
        let (xg, xh) = (twinned(&g).graph, twinned(&h).graph);
        let v2 = prover_delayer_value(&xg, &xh, 2, &BTreeMap::new(), PdConfig::default()).unwrap().value;
        let v3 = prover_delayer_value(&xg, &xh, 3, &BTreeMap::new(), PdConfig::default()).unwrap().value;
        assert!(v3 <= v2);
        let s2 = min_refutation_size(&xg, &xh, 2, PdConfig::default()).unwrap().size;
        let s3 = min_refutation_size(&xg, &xh, 3, PdConfig::default()).unwrap().size;
        assert!(s3.unwrap() <= s2.unwrap_or(u64::MAX));
    }

    #[test]
    fn violating_start_is_zero() {
        let g = ColoredGraph::from_edges(vec![0, 0], &[(0, 1)]).unwrap();
        let h = ColoredGraph::from_edges(vec![0, 0], &[]).unwrap();
        let f = build_iso(&g, &h);
        let mut sigma = BTreeMap::new();
        sigma.insert(f.var(0, 0), true);
        sigma.insert(f.var(1, 1), true);
        assert!(ends_game(&f, &sigma));
        let v = prover_delayer_value(&g, &h, 2, &sigma, PdConfig::default()).unwrap();
        assert_eq!(v.value, Value::Finite(0));
    }
}
