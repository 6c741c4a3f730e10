//! Cylindrical grids, the row compressions `≡ᵗ`, periodic paths, separators
//! and the end-to-end twisting search.
//!
//! Rows and columns are 0-based here: vertex `(i, j)` has id `i * J + j`.
//! The left end is columns `0..f`, the right end columns `J-f..J`, with `f = 4k`.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cfi::{validate_compressible_twisting, Compression, OrderedBaseGraph, Twisting};
use crate::error::{Error, Result};
use crate::graph::Vertex;

/// Vertices above this bound are refused by the grid constructors.
pub const MAX_GRID_VERTICES: usize = 20_000_000;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Pairwise coprime numbers in `[⌈w/2⌉, w]`, found by a descending
/// backtracking search and returned in ascending order.
pub fn find_coprimes(w: u64, k: usize) -> Result<Vec<u64>> {
    if w < 2 || k < 1 {
        return Err(Error::Parameter(format!("find_coprimes needs w >= 2 and k >= 1 (got w={w}, k={k})")));
    }
    let lo = w.div_ceil(2);
    fn extend(cur: &mut Vec<u64>, next: u64, lo: u64, k: usize) -> bool {
        if cur.len() == k {
            return true;
        }
        let mut p = next;
        while p >= lo {
            if cur.iter().all(|&q| gcd(p, q) == 1) {
                cur.push(p);
                if extend(cur, p - 1, lo, k) {
                    return true;
                }
                cur.pop();
            }
            p -= 1;
        }
        false
    }
    let mut cur = Vec::with_capacity(k);
    if extend(&mut cur, w, lo, k) {
        cur.reverse();
        Ok(cur)
    } else {
        Err(Error::NoCoprimeSet { k, lo, hi: w })
    }
}

#[derive(Clone, Debug)]
pub struct CylindricalGrid {
    k: usize,
    cols: usize,
    coprimes: Vec<u64>,
    desk_q: Option<u64>,
    base: OrderedBaseGraph,
}

impl CylindricalGrid {
    /// The full `k × 4k·Πp` grid.
    pub fn new(k: usize, coprimes: &[u64]) -> Result<Self> {
        if coprimes.len() != k {
            return Err(Error::Parameter(format!("expected {k} coprimes, got {}", coprimes.len())));
        }
        let prod = coprimes.iter().try_fold(1u64, |a, &p| a.checked_mul(p));
        let cols = prod
            .and_then(|p| p.checked_mul(4 * k as u64))
            .filter(|&c| (c as u128) * (k as u128) <= MAX_GRID_VERTICES as u128)
            .ok_or_else(|| Error::Parameter("grid too large".into()))?;
        Self::build(k, cols as usize, coprimes, None)
    }

    /// Desk-scale grid with `J = 4k·q`; row periods are reduced to divide `J`.
    pub fn desk(k: usize, coprimes: &[u64], q: u64) -> Result<Self> {
        if coprimes.len() != k || q < 3 {
            return Err(Error::Parameter("desk grid needs k coprimes and q >= 3".into()));
        }
        let cols = 4 * k * q as usize;
        if cols * k > MAX_GRID_VERTICES {
            return Err(Error::Parameter("grid too large".into()));
        }
        Self::build(k, cols, coprimes, Some(q))
    }

    fn build(k: usize, cols: usize, coprimes: &[u64], desk_q: Option<u64>) -> Result<Self> {
        if k < 3 {
            return Err(Error::Parameter(format!("cylindrical grids need k >= 3 (got {k})")));
        }
        if coprimes.contains(&0) {
            return Err(Error::Parameter("coprimes must be positive".into()));
        }
        let id = |i: usize, j: usize| i * cols + j;
        let mut edges = Vec::with_capacity(2 * k * cols);
        for i in 0..k {
            for j in 0..cols {
                if j + 1 < cols {
                    edges.push((id(i, j), id(i, j + 1)));
                }
                edges.push((id(i, j), id((i + 1) % k, j)));
            }
        }
        let base = OrderedBaseGraph::new(k * cols, &edges)?;
        Ok(CylindricalGrid { k, cols, coprimes: coprimes.to_vec(), desk_q, base })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of columns `J`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn f(&self) -> usize {
        4 * self.k
    }

    pub fn coprimes(&self) -> &[u64] {
        &self.coprimes
    }

    pub fn desk_q(&self) -> Option<u64> {
        self.desk_q
    }

    pub fn base(&self) -> &OrderedBaseGraph {
        &self.base
    }

    pub fn id(&self, row: usize, col: usize) -> Vertex {
        row * self.cols + col
    }

    pub fn row(&self, v: Vertex) -> usize {
        v / self.cols
    }

    pub fn col(&self, v: Vertex) -> usize {
        v % self.cols
    }

    pub fn in_left_end(&self, v: Vertex) -> bool {
        self.col(v) < self.f()
    }

    pub fn in_right_end(&self, v: Vertex) -> bool {
        self.col(v) + self.f() >= self.cols
    }

    pub fn is_interior(&self, v: Vertex) -> bool {
        !self.in_left_end(v) && !self.in_right_end(v)
    }

    /// `f(k)·p_i·…·p_{i+t}` (row indices modulo k), reduced to divide `J` on desk grids.
    pub fn period(&self, row: usize, t: usize) -> u64 {
        let full = (0..=t).fold(self.f() as u64, |a, s| a * self.coprimes[(row + s) % self.k]);
        match self.desk_q {
            Some(_) => gcd(full, self.cols as u64),
            None => full,
        }
    }

    pub fn descriptor(&self, t: usize, w: Option<u64>) -> GridDescriptor {
        GridDescriptor {
            k: self.k,
            t,
            w,
            coprimes: self.coprimes.clone(),
            cols: self.cols,
            desk_scale_q: self.desk_q,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GridDescriptor {
    pub k: usize,
    pub t: usize,
    pub w: Option<u64>,
    pub coprimes: Vec<u64>,
    #[serde(rename = "J")]
    pub cols: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub desk_scale_q: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RowCompression {
    pub t: usize,
    pub periods: Vec<u64>,
    pub eq: Compression,
}

#[derive(Hash, PartialEq, Eq)]
enum ClassKey {
    End(Vertex),
    Interior(usize, u64),
}

pub fn build_equiv_t(grid: &CylindricalGrid, t: usize) -> Result<RowCompression> {
    if t < 1 || t >= grid.k() {
        return Err(Error::Parameter(format!("t must lie in [1, {}] (got {t})", grid.k() - 1)));
    }
    let periods: Vec<u64> = (0..grid.k()).map(|i| grid.period(i, t)).collect();
    let eq = Compression::from_keys((0..grid.k() * grid.cols()).map(|v| {
        if grid.is_interior(v) {
            ClassKey::Interior(grid.row(v), grid.col(v) as u64 % periods[grid.row(v)])
        } else {
            ClassKey::End(v)
        }
    }));
    Ok(RowCompression { t, periods, eq })
}

/// Number of `≡ᵗ` classes meeting each row.
pub fn row_class_counts(grid: &CylindricalGrid, rc: &RowCompression) -> Vec<usize> {
    (0..grid.k())
        .map(|i| (0..grid.cols()).map(|j| rc.eq.class_of(grid.id(i, j))).collect::<HashSet<_>>().len())
        .collect()
}

/// `f(k)p_i·…·p_{i+t} + 2f(k)` for each row.
pub fn expected_row_class_counts(grid: &CylindricalGrid, rc: &RowCompression) -> Vec<u64> {
    rc.periods.iter().map(|p| p + 2 * grid.f() as u64).collect()
}

fn is_grid_path(grid: &CylindricalGrid, path: &[Vertex]) -> bool {
    let n = grid.k() * grid.cols();
    let distinct: HashSet<_> = path.iter().collect();
    distinct.len() == path.len()
        && path.iter().all(|&v| v < n)
        && path.windows(2).all(|w| grid.base().is_edge(w[0], w[1]))
}

/// Checks the definition of an `ℓ`-periodic path literally.
pub fn is_periodic_path(grid: &CylindricalGrid, path: &[Vertex], ell: usize) -> bool {
    if path.len() < 2 || ell == 0 || !is_grid_path(grid, path) {
        return false;
    }
    let m = path.len();
    if !grid.in_left_end(path[0]) || !grid.in_right_end(path[m - 1]) {
        return false;
    }
    let pos: std::collections::HashMap<Vertex, usize> = path.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    for i in 0..m - 1 {
        let u = path[i];
        if !grid.is_interior(u) {
            continue;
        }
        let (r, c) = (grid.row(u), grid.col(u));
        let succ = path[i + 1];
        let mut j = c % ell;
        while j < grid.cols() {
            let v = grid.id(r, j);
            if grid.is_interior(v) {
                let ok = pos.get(&v).is_some_and(|&p| {
                    p < m - 1 && {
                        let s = path[p + 1];
                        grid.row(s) == grid.row(succ) && grid.col(s).abs_diff(grid.col(succ)).is_multiple_of(ell)
                    }
                });
                if !ok {
                    return false;
                }
            }
            j += ell;
        }
    }
    true
}

/// gcd of the `≡ᵗ` periods over `rows`.
pub fn rows_period(rc: &RowCompression, rows: &[usize]) -> u64 {
    rows.iter().fold(0, |g, &r| gcd(g, rc.periods[r]))
}

/// Twisting induced by a periodic path on the rows it uses.
pub fn induced_twisting(grid: &CylindricalGrid, rc: &RowCompression, path: &[Vertex], rows: &[usize]) -> Result<Twisting> {
    if rows.is_empty() || path.iter().any(|&v| !rows.contains(&grid.row(v))) {
        return Err(Error::InvalidTwisting("path leaves the given rows".into()));
    }
    let ell = rows_period(rc, rows) as usize;
    if !is_periodic_path(grid, path, ell) {
        return Err(Error::InvalidTwisting(format!("path is not {ell}-periodic")));
    }
    let t = Twisting::from_path(path);
    if !validate_compressible_twisting(grid.base(), &rc.eq, &t) {
        return Err(Error::InvalidTwisting("induced twisting is not compressible".into()));
    }
    Ok(t)
}

/// Roadblock for a `≡ᵗ` class: an even set of neighbor indices as a bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Roadblock {
    pub class: usize,
    pub mask: u32,
}

impl Roadblock {
    pub fn new(base: &OrderedBaseGraph, eq: &Compression, class: usize, mask: u32) -> Result<Self> {
        if class >= eq.num_classes() {
            return Err(Error::Parameter(format!("class {class} out of range")));
        }
        let d = base.degree(eq.class(class)[0]);
        if !mask.count_ones().is_multiple_of(2) || (d < 32 && mask >> d != 0) {
            return Err(Error::Parameter(format!("roadblock mask {mask:#b} invalid for degree {d}")));
        }
        Ok(Roadblock { class, mask })
    }
}

/// `T` avoids the roadblock iff at no vertex of the class its outgoing arcs are exactly `N`.
pub fn roadblock_avoided(base: &OrderedBaseGraph, eq: &Compression, t: &Twisting, rb: &Roadblock) -> bool {
    eq.class(rb.class).iter().all(|&u| t.incidence(base, u) != rb.mask)
}

/// Per-vertex restrictions on the outgoing arc pattern of a twisting.
#[derive(Clone, Debug)]
struct Limits {
    fixed: Vec<bool>,
    banned: Vec<Vec<u32>>,
}

impl Limits {
    fn new(n: usize) -> Self {
        Limits { fixed: vec![false; n], banned: vec![Vec::new(); n] }
    }

    fn ok(&self, v: usize, mask: u32) -> bool {
        if mask != 0 && self.fixed[v] {
            return false;
        }
        !self.banned[v].contains(&mask)
    }

    fn merge(&mut self, into: usize, other: &Limits, from: usize) {
        self.fixed[into] |= other.fixed[from];
        for &m in &other.banned[from] {
            if !self.banned[into].contains(&m) {
                self.banned[into].push(m);
            }
        }
    }
}

/// Searches column-monotone `q`-periodic paths on a contiguous block of rows:
/// every column holds one vertical segment of the path, and the interior is the
/// lift of a cycle on the `rows × Z_q` torus.
struct PathSearch<'a> {
    grid: &'a CylindricalGrid,
    in_rows: Vec<bool>,
    q: usize,
    limits: &'a Limits,
    torus: Limits,
    anchored: bool,
}

/// Per row: predecessor row and the step taken to reach it, if reachable.
type Layer = Vec<Option<(Option<usize>, Step)>>;

#[derive(Clone, Debug)]
struct Step {
    entry: Option<usize>,
    exit: Option<usize>,
    seg: Vec<usize>,
}

impl<'a> PathSearch<'a> {
    fn new(grid: &'a CylindricalGrid, rows: &[usize], q: usize, limits: &'a Limits, anchored: bool) -> Self {
        let mut in_rows = vec![false; grid.k()];
        rows.iter().for_each(|&r| in_rows[r] = true);
        let mut torus = Limits::new(grid.k() * q);
        for r in 0..grid.k() {
            for j in grid.f()..grid.cols() - grid.f() {
                torus.merge(r * q + j % q, limits, grid.id(r, j));
            }
        }
        PathSearch { grid, in_rows, q, limits, torus, anchored }
    }

    fn segments(&self, a: usize, b: usize) -> Vec<Vec<usize>> {
        let k = self.grid.k();
        if !self.in_rows[a] || !self.in_rows[b] {
            return vec![];
        }
        if a == b {
            return vec![vec![a]];
        }
        let mut out = vec![];
        for step in [1, k - 1] {
            let mut seg = vec![a];
            let mut r = a;
            loop {
                r = (r + step) % k;
                if !self.in_rows[r] || seg.len() >= k {
                    break;
                }
                seg.push(r);
                if r == b {
                    out.push(seg);
                    break;
                }
            }
        }
        out
    }

    fn mask(&self, v: Vertex, pred: Option<Vertex>, succ: Option<Vertex>) -> u32 {
        match (pred, succ) {
            (Some(p), Some(s)) => {
                let b = self.grid.base();
                (1 << b.neighbor_index(v, p).expect("adjacent")) | (1 << b.neighbor_index(v, s).expect("adjacent"))
            }
            _ => 0,
        }
    }

    /// Arc masks of all column vertices for a step placed at absolute column `col`.
    fn column_masks(&self, col: usize, step: &Step) -> Vec<u32> {
        let g = self.grid;
        let mut masks = vec![0; g.k()];
        let n = step.seg.len();
        for (p, &r) in step.seg.iter().enumerate() {
            let v = g.id(r, col);
            let pred = if p == 0 { step.entry.map(|_| g.id(r, col - 1)) } else { Some(g.id(step.seg[p - 1], col)) };
            let succ = if p + 1 == n { step.exit.map(|_| g.id(r, col + 1)) } else { Some(g.id(step.seg[p + 1], col)) };
            masks[r] = self.mask(v, pred, succ);
        }
        masks
    }

    fn column_ok(&self, col: usize, step: &Step) -> bool {
        let g = self.grid;
        let masks = self.column_masks(col, step);
        if g.is_interior(g.id(0, col)) {
            (0..g.k()).all(|r| self.torus.ok(r * self.q + col % self.q, masks[r]))
        } else {
            (0..g.k()).all(|r| self.limits.ok(g.id(r, col), masks[r]))
        }
    }

    fn untouched_ok(&self, col: usize) -> bool {
        (0..self.grid.k()).all(|r| self.limits.ok(self.grid.id(r, col), 0))
    }

    /// Candidate steps for a column; straight segments come first.
    fn steps(&self, col: usize, entry: Option<usize>, may_end: bool) -> Vec<Step> {
        let k = self.grid.k();
        let starts: Vec<usize> = match entry {
            Some(a) => vec![a],
            None => (0..k).collect(),
        };
        let mut out = vec![];
        for &a in &starts {
            for b in (0..k).map(|d| (a + d) % k) {
                for seg in self.segments(a, b) {
                    let last = *seg.last().expect("nonempty");
                    if col + 1 < self.grid.cols() {
                        out.push(Step { entry, exit: Some(last), seg: seg.clone() });
                    }
                    if may_end && (entry.is_some() || seg.len() > 1) {
                        out.push(Step { entry, exit: None, seg });
                    }
                }
            }
        }
        out.retain(|s| self.column_ok(col, s));
        out
    }

    /// Forward layer over the columns `cols`: entry rows after each column.
    /// `init[r]` says whether the path may enter the first column at row `r`;
    /// `fresh` allows starting inside the range.
    fn forward(&self, cols: std::ops::Range<usize>, init: &[bool], fresh: bool) -> Vec<Layer> {
        let k = self.grid.k();
        let mut layers: Vec<Layer> = Vec::new();
        let mut cur: Vec<bool> = init.to_vec();
        let mut untouched = fresh;
        let first = cols.start;
        for col in cols {
            let mut layer = vec![None; k];
            let mut sources: Vec<Option<usize>> = (0..k).filter(|&r| cur[r]).map(Some).collect();
            let may_start = fresh && untouched && (!self.anchored || col == first);
            if may_start {
                sources.push(None);
            }
            for src in sources {
                for step in self.steps(col, src, false) {
                    let b = step.exit.expect("continuing step");
                    if layer[b].is_none() {
                        layer[b] = Some((src, step));
                    }
                }
            }
            untouched = untouched && self.untouched_ok(col);
            cur = layer.iter().map(|s| s.is_some()).collect();
            layers.push(layer);
        }
        layers
    }

    /// Entry rows at column `start` from which the path can be finished within
    /// `start..J`, together with the steps to do so.
    fn finish(&self, start: usize) -> Vec<Option<Vec<Step>>> {
        let g = self.grid;
        let k = g.k();
        let cols = g.cols();
        // best[c][r]: completion from entering column c at row r
        let mut best: Vec<Vec<Option<Vec<Step>>>> = vec![vec![None; k]; cols + 1];
        let mut tail_ok = true;
        for col in (start..cols).rev() {
            for r in 0..k {
                let may_end = !self.anchored || col + 1 == cols;
                for step in self.steps(col, Some(r), may_end || col + 1 == cols) {
                    match step.exit {
                        None if may_end && tail_ok => {
                            best[col][r] = Some(vec![step]);
                            break;
                        }
                        Some(b) if col + 1 < cols => {
                            if let Some(rest) = &best[col + 1][b] {
                                let mut v = vec![step.clone()];
                                v.extend(rest.iter().cloned());
                                best[col][r] = Some(v);
                                break;
                            }
                        }
                        _ => {}
                    }
                }
            }
            tail_ok = tail_ok && self.untouched_ok(col);
        }
        best.swap_remove(start)
    }

    fn trace(layers: &[Layer], mut row: usize) -> Vec<Step> {
        let mut steps = vec![];
        for layer in layers.iter().rev() {
            let (src, step) = layer[row].clone().expect("reachable");
            steps.push(step);
            match src {
                Some(a) => row = a,
                None => break,
            }
        }
        steps.reverse();
        steps
    }

    fn run(&self) -> Option<Vec<Vertex>> {
        let g = self.grid;
        let (k, f, cols, q) = (g.k(), g.f(), g.cols(), self.q);
        let none = vec![false; k];
        let left = self.forward(0..f, &none, true);
        let left_exit: Vec<bool> = left[f - 1].iter().map(|s| s.is_some()).collect();
        let right = self.finish(cols - f);
        let width = cols - 2 * f;
        let mut interior_steps: Option<(usize, Vec<Step>)> = None;
        if width <= q {
            let mid = self.forward(f..cols - f, &left_exit, false);
            if let Some(x) = (0..k).find(|&x| mid[width - 1][x].is_some() && right[x].is_some()) {
                let steps = Self::trace(&mid, x);
                let e = steps[0].entry.expect("entered from the left end");
                interior_steps = Some((e, steps));
            }
        } else {
            let c0 = f % q;
            let delta = width % q;
            'outer: for e in (0..k).filter(|&e| left_exit[e]) {
                let mut init = vec![false; k];
                init[e] = true;
                // unroll one period starting at an absolute column congruent to c0
                let layers = self.forward(f..f + q, &init, false);
                if layers[q - 1][e].is_none() {
                    continue;
                }
                // walks e -> e over one period that pass the exit state at offset delta
                let cycle = Self::trace(&layers, e);
                if cycle[0].entry != Some(e) {
                    continue;
                }
                let x = if delta == 0 { e } else { cycle[delta].entry.expect("inside the cycle") };
                if right[x].is_some() {
                    let steps = (0..width).map(|o| cycle[o % q].clone()).collect();
                    interior_steps = Some((e, steps));
                    break 'outer;
                }
                // other cycles through a finishable exit row
                for x in (0..k).filter(|&x| right[x].is_some()) {
                    if let Some(cyc) = self.cycle_through(e, delta, x, c0) {
                        let steps = (0..width).map(|o| cyc[o % q].clone()).collect();
                        interior_steps = Some((e, steps));
                        break 'outer;
                    }
                }
            }
        }
        let (e, mid_steps) = interior_steps?;
        let exit_row = mid_steps.last().and_then(|s| s.exit).expect("interior continues");
        let mut all = Self::trace(&left, e);
        let start_col = f - all.len();
        all.extend(mid_steps);
        all.extend(right[exit_row].clone().expect("finishable"));
        let mut path = vec![];
        for (o, step) in all.iter().enumerate() {
            path.extend(step.seg.iter().map(|&r| g.id(r, start_col + o)));
        }
        Some(path)
    }

    /// A period walk entering offset 0 at row `e`, passing offset `delta` at row `x`.
    fn cycle_through(&self, e: usize, delta: usize, x: usize, _c0: usize) -> Option<Vec<Step>> {
        let g = self.grid;
        let (k, f, q) = (g.k(), g.f(), self.q);
        let mut init = vec![false; k];
        init[e] = true;
        let first = self.forward(f..f + delta, &init, false);
        first.last()?[x].as_ref()?;
        let mut init = vec![false; k];
        init[x] = true;
        let second = self.forward(f + delta..f + q, &init, false);
        second.last()?[e].as_ref()?;
        let mut steps = Self::trace(&first, x);
        steps.extend(Self::trace(&second, e));
        Some(steps)
    }
}

/// Contiguous row blocks by size, each block given in increasing row order.
fn row_blocks(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    for size in 1..k {
        for start in 0..k {
            let mut rows: Vec<usize> = (0..size).map(|s| (start + s) % k).collect();
            rows.sort_unstable();
            out.push(rows);
        }
    }
    out.push((0..k).collect());
    out
}

fn class_vertices<'a>(rc: &'a RowCompression, classes: &'a [usize]) -> impl Iterator<Item = Vertex> + 'a {
    classes.iter().flat_map(|&c| rc.eq.class(c).iter().copied())
}

/// `W` is `(I,t)`-separating: no `q`-periodic path on the rows `I` avoids the
/// `q`-periodic closure of `W`. The search covers column-monotone paths.
pub fn is_separating(grid: &CylindricalGrid, rc: &RowCompression, w: &[usize], rows: &[usize]) -> bool {
    if rows.is_empty() {
        return true;
    }
    let q = rows_period(rc, rows) as usize;
    let mut limits = Limits::new(grid.k() * grid.cols());
    for v in class_vertices(rc, w) {
        let (r, c) = (grid.row(v), grid.col(v));
        let mut j = c % q;
        while j < grid.cols() {
            limits.fixed[grid.id(r, j)] = true;
            j += q;
        }
    }
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    connected_row_groups(grid.k(), &sorted)
        .iter()
        .all(|group| PathSearch::new(grid, group, q, &limits, false).run().is_none())
}

/// Splits a row set into maximal blocks of cyclically consecutive rows.
fn connected_row_groups(k: usize, rows: &[usize]) -> Vec<Vec<usize>> {
    if rows.len() == k {
        return vec![rows.to_vec()];
    }
    let inside: Vec<bool> = (0..k).map(|r| rows.contains(&r)).collect();
    let start = (0..k).find(|&r| !inside[r]).expect("some row missing");
    let mut groups = vec![];
    let mut cur = vec![];
    for s in 1..=k {
        let r = (start + s) % k;
        if inside[r] {
            cur.push(r);
        } else if !cur.is_empty() {
            groups.push(std::mem::take(&mut cur));
        }
    }
    groups
}

/// Left end not connected to the right end after removing `s`.
pub fn is_vertical_separator(grid: &CylindricalGrid, s: &[Vertex]) -> bool {
    let n = grid.k() * grid.cols();
    let mut blocked = vec![false; n];
    s.iter().filter(|&&v| v < n).for_each(|&v| blocked[v] = true);
    let mut seen = blocked.clone();
    let mut queue: VecDeque<Vertex> = VecDeque::new();
    for r in 0..grid.k() {
        for c in 0..grid.f() {
            let v = grid.id(r, c);
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    while let Some(u) = queue.pop_front() {
        if grid.in_right_end(u) {
            return false;
        }
        for &v in grid.base().neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    true
}

/// Per-row class counts of `W` and, for single-class rows, that class.
fn row_profile(grid: &CylindricalGrid, rc: &RowCompression, w: &[usize]) -> Vec<BTreeSet<usize>> {
    let mut per_row = vec![BTreeSet::new(); grid.k()];
    for &c in w {
        for &v in rc.eq.class(c) {
            per_row[grid.row(v)].insert(c);
        }
    }
    per_row
}

pub fn is_t_semi_separator(grid: &CylindricalGrid, rc: &RowCompression, s: &[Vertex], w: &[usize]) -> bool {
    let per_row = row_profile(grid, rc, w);
    let mut counts = vec![0usize; grid.k()];
    for &v in s {
        let r = grid.row(v);
        counts[r] += 1;
        if per_row[r].len() == 1 && !per_row[r].contains(&rc.eq.class_of(v)) {
            return false;
        }
    }
    counts.iter().zip(&per_row).all(|(&n, cl)| n <= cl.len()) && is_vertical_separator(grid, s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiSeparatorReport {
    pub separator: Vec<Vertex>,
    pub classes: Vec<usize>,
    pub row_counts: Vec<usize>,
    pub vertical: bool,
    pub semi: bool,
    pub minimal: bool,
}

pub fn semi_separator_report(grid: &CylindricalGrid, rc: &RowCompression, s: &[Vertex], w: &[usize]) -> SemiSeparatorReport {
    let mut row_counts = vec![0; grid.k()];
    s.iter().for_each(|&v| row_counts[grid.row(v)] += 1);
    let vertical = is_vertical_separator(grid, s);
    let semi = is_t_semi_separator(grid, rc, s, w);
    let minimal = semi
        && (0..s.len()).all(|i| {
            let rest: Vec<_> = s.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
            !is_vertical_separator(grid, &rest)
        });
    SemiSeparatorReport { separator: s.to_vec(), classes: w.to_vec(), row_counts, vertical, semi, minimal }
}

/// All minimal `t`-semi-separators for `W`, enumerated as king-connected loops
/// of at most `k + t` vertices. `cap` bounds the number of explored partial loops.
pub fn minimal_semi_separators(
    grid: &CylindricalGrid,
    rc: &RowCompression,
    w: &[usize],
    cap: usize,
) -> Result<Vec<Vec<Vertex>>> {
    let k = grid.k();
    let per_row = row_profile(grid, rc, w);
    if per_row.iter().any(|c| c.is_empty()) {
        return Ok(vec![]);
    }
    let bound: Vec<usize> = per_row.iter().map(|c| c.len()).collect();
    let allowed = |v: Vertex| {
        let r = grid.row(v);
        per_row[r].len() > 1 || per_row[r].contains(&rc.eq.class_of(v))
    };
    let max_size = (grid.k() + rc.t).min(bound.iter().sum());
    let king = |v: Vertex| -> Vec<Vertex> {
        let (r, c) = (grid.row(v) as isize, grid.col(v) as isize);
        let mut out = vec![];
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                let nc = c + dc;
                if (dr, dc) == (0, 0) || nc < 0 || nc >= grid.cols() as isize {
                    continue;
                }
                out.push(grid.id((r + dr).rem_euclid(k as isize) as usize, nc as usize));
            }
        }
        out
    };
    let mut found: BTreeSet<Vec<Vertex>> = BTreeSet::new();
    let mut explored = 0usize;
    let mut stack: Vec<Vec<Vertex>> = (0..grid.cols()).map(|c| grid.id(0, c)).filter(|&v| allowed(v)).map(|v| vec![v]).collect();
    while let Some(path) = stack.pop() {
        explored += 1;
        if explored > cap {
            return Err(Error::StateSpaceTooLarge { measured: explored as u128, cap: cap as u128 });
        }
        let mut rows_hit = vec![0usize; k];
        path.iter().for_each(|&v| rows_hit[grid.row(v)] += 1);
        if rows_hit.iter().all(|&n| n > 0) {
            let mut s = path.clone();
            s.sort_unstable();
            if !found.contains(&s) && semi_separator_report(grid, rc, &s, w).minimal {
                found.insert(s);
                continue;
            }
        }
        if path.len() >= max_size {
            continue;
        }
        for v in king(*path.last().expect("nonempty")) {
            let r = grid.row(v);
            if allowed(v) && !path.contains(&v) && rows_hit[r] < bound[r] {
                let mut next = path.clone();
                next.push(v);
                stack.push(next);
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// A `t`-semi-separator exists and `W` is `(I,t)`-separating for all `|I| ≤ t+1`.
pub fn is_t_critical(grid: &CylindricalGrid, rc: &RowCompression, w: &[usize], cap: usize) -> Result<bool> {
    if minimal_semi_separators(grid, rc, w, cap)?.is_empty() {
        return Ok(false);
    }
    let k = grid.k();
    for mask in 1u32..(1 << k) {
        if mask.count_ones() as usize > rc.t + 1 {
            continue;
        }
        let rows: Vec<usize> = (0..k).filter(|&r| mask >> r & 1 == 1).collect();
        if !is_separating(grid, rc, w, &rows) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Breadth-first grid distance from any vertex of `from` to `to`.
pub fn grid_distance(grid: &CylindricalGrid, from: &[Vertex], to: Vertex) -> Option<usize> {
    let n = grid.k() * grid.cols();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &v in from {
        dist[v] = 0;
        queue.push_back(v);
    }
    while let Some(u) = queue.pop_front() {
        if u == to {
            return Some(dist[u]);
        }
        for &v in grid.base().neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    None
}

/// True iff `t` twists exactly two edges, one meeting column 0 and one meeting column `J-1`.
pub fn is_end_to_end(grid: &CylindricalGrid, t: &Twisting) -> bool {
    let tw = t.twisted_edges();
    let last = grid.cols() - 1;
    let touches = |(u, v): (Vertex, Vertex), c: usize| grid.col(u) == c || grid.col(v) == c;
    tw.len() == 2 && {
        let e: Vec<_> = tw.into_iter().collect();
        (touches(e[0], 0) && touches(e[1], last)) || (touches(e[1], 0) && touches(e[0], last))
    }
}

/// Compressible end-to-end twisting fixing every vertex of the classes `w` and
/// avoiding every roadblock, searched over row blocks of increasing size.
pub fn end_to_end_twisting_search(
    grid: &CylindricalGrid,
    rc: &RowCompression,
    w: &[usize],
    roadblocks: &[Roadblock],
) -> Option<Twisting> {
    end_to_end_search_on(grid, rc, w, roadblocks, &row_blocks(grid.k()))
}

/// Same search restricted to the given row blocks.
pub fn end_to_end_search_on(
    grid: &CylindricalGrid,
    rc: &RowCompression,
    w: &[usize],
    roadblocks: &[Roadblock],
    blocks: &[Vec<usize>],
) -> Option<Twisting> {
    let mut limits = Limits::new(grid.k() * grid.cols());
    for v in class_vertices(rc, w) {
        limits.fixed[v] = true;
    }
    for rb in roadblocks {
        for &v in rc.eq.class(rb.class) {
            if !limits.banned[v].contains(&rb.mask) {
                limits.banned[v].push(rb.mask);
            }
        }
    }
    for rows in blocks {
        for group in connected_row_groups(grid.k(), rows) {
            let q = rows_period(rc, rows) as usize;
            let Some(path) = PathSearch::new(grid, &group, q, &limits, true).run() else { continue };
            let t = Twisting::from_path(&path);
            let valid = validate_compressible_twisting(grid.base(), &rc.eq, &t)
                && is_end_to_end(grid, &t)
                && class_vertices(rc, w).all(|v| t.fixes(v))
                && roadblocks.iter().all(|rb| roadblock_avoided(grid.base(), &rc.eq, &t, rb));
            if valid {
                return Some(t);
            }
        }
    }
    None
}

/// The end-to-end path itself (first found), for callers that need the route.
pub fn end_to_end_path(grid: &CylindricalGrid, rc: &RowCompression, rows: &[usize], w: &[usize]) -> Option<Vec<Vertex>> {
    let mut limits = Limits::new(grid.k() * grid.cols());
    for v in class_vertices(rc, w) {
        limits.fixed[v] = true;
    }
    let q = rows_period(rc, rows) as usize;
    connected_row_groups(grid.k(), rows)
        .iter()
        .find_map(|g| PathSearch::new(grid, g, q, &limits, true).run())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (CylindricalGrid, RowCompression) {
        let g = CylindricalGrid::desk(3, &[3, 4, 5], 6).unwrap();
        let rc = build_equiv_t(&g, 1).unwrap();
        (g, rc)
    }

    #[test]
    fn coprime_examples() {
        assert_eq!(find_coprimes(4, 2).unwrap(), vec![3, 4]);
        assert_eq!(find_coprimes(5, 3).unwrap(), vec![3, 4, 5]);
        assert!(matches!(find_coprimes(2, 3), Err(Error::NoCoprimeSet { .. })));
        assert!(matches!(find_coprimes(4, 3), Err(Error::NoCoprimeSet { .. })));
        assert_eq!(find_coprimes(2, 2).unwrap(), vec![1, 2]);
        assert!(find_coprimes(1, 1).is_err());
    }

    #[test]
    fn full_grid_shape() {
        let g = CylindricalGrid::new(3, &[3, 4, 5]).unwrap();
        assert_eq!(g.cols(), 720);
        assert_eq!(g.base().order(), 2160);
        assert!(g.base().is_edge(g.id(2, 7), g.id(0, 7)));
        for v in 0..g.base().order() {
            let expected = if g.col(v) == 0 || g.col(v) == 719 { 3 } else { 4 };
            assert_eq!(g.base().degree(v), expected);
        }
    }

    #[test]
    fn class_counts_full_grid() {
        let g = CylindricalGrid::new(3, &[3, 4, 5]).unwrap();
        let rc = build_equiv_t(&g, 1).unwrap();
        assert!(crate::cfi::validate_compression(g.base(), &rc.eq));
        assert_eq!(rc.periods, vec![144, 240, 180]);
        let got: Vec<u64> = row_class_counts(&g, &rc).iter().map(|&c| c as u64).collect();
        assert_eq!(got, expected_row_class_counts(&g, &rc));
        assert!(build_equiv_t(&g, 3).is_err());
    }

    #[test]
    fn end_columns_are_singletons() {
        let (g, rc) = toy();
        for v in 0..g.base().order() {
            if !g.is_interior(v) {
                assert_eq!(rc.eq.class(rc.eq.class_of(v)).len(), 1);
            }
        }
    }

    #[test]
    fn straight_row_is_periodic() {
        let (g, rc) = toy();
        let path: Vec<_> = (0..g.cols()).map(|j| g.id(1, j)).collect();
        assert!(is_periodic_path(&g, &path, 24));
        let t = induced_twisting(&g, &rc, &path, &[1]).unwrap();
        assert!(is_end_to_end(&g, &t));
        let mut detour = path[..20].to_vec();
        detour.extend([g.id(2, 19)]);
        detour.extend((19..g.cols()).map(|j| g.id(2, j)).skip(1));
        assert!(!is_periodic_path(&g, &detour, 12));
    }

    #[test]
    fn separators() {
        let (g, _) = toy();
        let column: Vec<_> = (0..3).map(|r| g.id(r, 20)).collect();
        assert!(is_vertical_separator(&g, &column));
        assert!(!is_vertical_separator(&g, &[]));
        assert!(!is_vertical_separator(&g, &column[..2]));
    }

    #[test]
    fn empty_search_uses_first_row() {
        let (g, rc) = toy();
        let t = end_to_end_twisting_search(&g, &rc, &[], &[]).unwrap();
        let rows: BTreeSet<_> = t.arcs.iter().map(|&(u, _)| g.row(u)).collect();
        assert_eq!(rows, BTreeSet::from([0]));
    }

    #[test]
    fn roadblock_semantics() {
        let (g, rc) = toy();
        let class = rc.eq.class_of(g.id(0, 20));
        let t = Twisting::empty();
        let rb = Roadblock::new(g.base(), &rc.eq, class, 0b0110).unwrap();
        assert!(roadblock_avoided(g.base(), &rc.eq, &t, &rb));
        let path: Vec<_> = (0..g.cols()).map(|j| g.id(0, j)).collect();
        let straight = Twisting::from_path(&path);
        // row 0 interior neighbor order: left, right, down, up
        let horizontal = Roadblock::new(g.base(), &rc.eq, class, 0b0011).unwrap();
        assert!(!roadblock_avoided(g.base(), &rc.eq, &straight, &horizontal));
        assert!(Roadblock::new(g.base(), &rc.eq, class, 0b0001).is_err());
    }
}
