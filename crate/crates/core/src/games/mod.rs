//! Exact solvers for the pebble game, the pebble game with blocking and the
//! narrow Prover-Delayer game, plus strategy adapters between them.

pub mod adapters;
pub mod blocking;
pub mod pebble;
pub mod prover_delayer;
pub mod robber;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{ColoredGraph, Vertex};

/// Round count of a game, `Infinite` when Spoiler (or Prover) never wins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Finite(u32),
    Infinite,
}

impl Value {
    pub(crate) fn from_raw(v: u32) -> Value {
        if v == INF {
            Value::Infinite
        } else {
            Value::Finite(v)
        }
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Value::Finite(v) => Some(v),
            Value::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Value::Infinite
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Finite(v) => write!(f, "{v}"),
            Value::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Finite(v) => s.serialize_u32(*v),
            Value::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u32),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(Value::Finite(v)),
            Raw::S(s) if s == "inf" => Ok(Value::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad value {s:?}"))),
        }
    }
}

pub(crate) const INF: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    G,
    H,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Regular,
    Blocking,
}

/// Default bound on the number of positions a solver may enumerate.
pub const DEFAULT_POSITION_CAP: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Identify positions up to pebble renaming and duplicate pebbles.
    pub symmetry: bool,
    pub position_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { symmetry: true, position_cap: DEFAULT_POSITION_CAP }
    }
}

impl SolverConfig {
    pub fn literal() -> Self {
        SolverConfig { symmetry: false, ..Self::default() }
    }
}

/// Encoding of pebble positions as slot codes and the validity rules shared by
/// both pebble games. Code 0 is an empty slot; otherwise
/// `code = 1 + 2·(u·|V(H)| + v) + [blocking]`.
///
/// Literal keys have exactly `k` slots; canonical keys are the sorted set of
/// nonzero codes.
#[derive(Clone, Copy)]
pub(crate) struct Rules<'a> {
    pub g: &'a ColoredGraph,
    pub h: &'a ColoredGraph,
    pub k: usize,
    pub symmetry: bool,
}

/// A slot choice: `None` puts a fresh pebble (canonical keys only),
/// `Some(i)` replaces entry `i` of the key.
pub(crate) type Choice = Option<usize>;

impl<'a> Rules<'a> {
    pub fn code(&self, u: Vertex, v: Vertex, mark: Mark) -> u32 {
        1 + 2 * (u * self.h.order() + v) as u32 + (mark == Mark::Blocking) as u32
    }

    pub fn decode(&self, code: u32) -> (Vertex, Vertex, Mark) {
        let c = (code - 1) as usize;
        let pair = c / 2;
        let mark = if c % 2 == 1 { Mark::Blocking } else { Mark::Regular };
        (pair / self.h.order(), pair % self.h.order(), mark)
    }

    pub fn choices(&self, key: &[u32]) -> Vec<Choice> {
        if self.symmetry {
            let mut c: Vec<Choice> = (0..key.len()).map(Some).collect();
            if key.len() < self.k {
                c.push(None);
            }
            c
        } else {
            (0..self.k).map(Some).collect()
        }
    }

    /// Two regular pairs are compatible: equality, adjacency and equivalence agree.
    pub fn compatible(&self, (a, b): (Vertex, Vertex), (c, d): (Vertex, Vertex)) -> bool {
        (a == c) == (b == d)
            && (a == c || self.g.has_edge(a, c) == self.h.has_edge(b, d))
            && (a == c || self.g.equivalent(a, c) == self.h.equivalent(b, d))
    }

    /// Can `code` join the other entries without breaking partial isomorphism
    /// with blocking?
    pub fn fits(&self, code: u32, others: impl Iterator<Item = u32> + Clone) -> bool {
        let (u, v, mark) = self.decode(code);
        match mark {
            Mark::Regular => {
                self.g.color(u) == self.h.color(v)
                    && others.clone().filter(|&o| o != 0).all(|o| {
                        let (a, b, m) = self.decode(o);
                        match m {
                            Mark::Regular => self.compatible((u, v), (a, b)),
                            Mark::Blocking => (a, b) != (u, v),
                        }
                    })
            }
            Mark::Blocking => others.filter(|&o| o != 0).all(|o| {
                let (a, b, m) = self.decode(o);
                m == Mark::Blocking || (a, b) != (u, v)
            }),
        }
    }

    /// Places `code` according to `choice` into `buf`; false if the result is invalid.
    pub fn place_into(&self, key: &[u32], choice: Choice, code: u32, buf: &mut Vec<u32>) -> bool {
        let skip = choice.unwrap_or(usize::MAX);
        let others = key.iter().enumerate().filter(move |&(i, _)| i != skip).map(|(_, &c)| c);
        if !self.fits(code, others.clone()) {
            return false;
        }
        buf.clear();
        if self.symmetry {
            let (u, v, mark) = self.decode(code);
            let useless = mark == Mark::Blocking && self.g.color(u) != self.h.color(v);
            buf.extend(others);
            if !useless {
                buf.push(code);
            }
            buf.sort_unstable();
            buf.dedup();
        } else {
            buf.extend_from_slice(key);
            buf[choice.expect("literal choice")] = code;
        }
        true
    }

    /// Builds a key from explicit slots, checking validity of the whole position.
    pub fn key_from_slots(&self, slots: &[Option<(Vertex, Vertex, Mark)>]) -> Result<Option<Box<[u32]>>> {
        if slots.len() > self.k {
            return Err(Error::Contract(format!("{} slots for {} pebbles", slots.len(), self.k)));
        }
        let mut codes = vec![0u32; self.k];
        for (i, s) in slots.iter().enumerate() {
            if let Some((u, v, m)) = *s {
                if u >= self.g.order() || v >= self.h.order() {
                    return Err(Error::Contract("pebble on a nonexistent vertex".into()));
                }
                codes[i] = self.code(u, v, m);
            }
        }
        for i in 0..codes.len() {
            if codes[i] != 0 {
                let others = codes.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &c)| c);
                if !self.fits(codes[i], others) {
                    return Ok(None);
                }
            }
        }
        Ok(Some(self.canonical(&codes)))
    }

    pub fn canonical(&self, codes: &[u32]) -> Box<[u32]> {
        if self.symmetry {
            let mut out: Vec<u32> = codes
                .iter()
                .copied()
                .filter(|&c| {
                    c != 0 && {
                        let (u, v, m) = self.decode(c);
                        !(m == Mark::Blocking && self.g.color(u) != self.h.color(v))
                    }
                })
                .collect();
            out.sort_unstable();
            out.dedup();
            out.into_boxed_slice()
        } else {
            let mut out = codes.to_vec();
            out.resize(self.k, 0);
            out.into_boxed_slice()
        }
    }

    /// Spoiler's pebble placed on `x` in `side`, Duplicator answering `y`.
    pub fn regular_code(&self, side: Side, x: Vertex, y: Vertex) -> u32 {
        match side {
            Side::G => self.code(x, y, Mark::Regular),
            Side::H => self.code(y, x, Mark::Regular),
        }
    }

    pub fn side_order(&self, side: Side) -> usize {
        match side {
            Side::G => self.g.order(),
            Side::H => self.h.order(),
        }
    }
}

/// Interning table for position keys.
#[derive(Default)]
pub(crate) struct Interner {
    pub keys: Vec<Box<[u32]>>,
    pub index: FxHashMap<Box<[u32]>, u32>,
}

impl Interner {
    pub fn intern(&mut self, key: Box<[u32]>, cap: usize) -> Result<(u32, bool)> {
        if let Some(&id) = self.index.get(&key) {
            return Ok((id, false));
        }
        if self.keys.len() >= cap {
            return Err(Error::StateSpaceTooLarge { measured: self.keys.len() as u128 + 1, cap: cap as u128 });
        }
        let id = self.keys.len() as u32;
        self.keys.push(key.clone());
        self.index.insert(key, id);
        Ok((id, true))
    }

    pub fn get(&self, key: &[u32]) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }
}
