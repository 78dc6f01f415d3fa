//! Deterministic strategies: memoryless ([`StrategyMD`]) and finite-memory
//! transducers ([`StrategyFD`]).
//!
//! Internally a choice is an edge id, which stays meaningful on products with
//! parallel edges. The JSON form names successor states instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameGraph, Owner};

/// Memoryless deterministic strategy: one chosen edge per owned state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategyMD {
    pub owner: Owner,
    /// `choice[s]` is the edge taken at `s`; `None` for states of others.
    pub choice: Vec<Option<usize>>,
}

impl StrategyMD {
    /// The strategy choosing, at every owned state, the edge to the lowest
    /// successor id.
    pub fn lowest(g: &GameGraph, owner: Owner) -> Self {
        let choice = (0..g.num_states())
            .map(|s| {
                (g.owner(s) == owner)
                    .then(|| lowest_edge(g, g.out_edges(s).iter().copied()))
                    .flatten()
            })
            .collect();
        StrategyMD { owner, choice }
    }

    pub fn edge(&self, s: usize) -> Option<usize> {
        self.choice[s]
    }

    /// Successor chosen at `s`.
    pub fn successor(&self, g: &GameGraph, s: usize) -> Option<usize> {
        self.choice[s].map(|e| g.edge(e).to)
    }

    /// Checks that the strategy picks an outgoing edge at every owned state.
    pub fn check(&self, g: &GameGraph) -> Result<()> {
        if self.choice.len() != g.num_states() {
            return Err(Error::BadStrategy(format!(
                "strategy covers {} states, game has {}",
                self.choice.len(),
                g.num_states()
            )));
        }
        for s in 0..g.num_states() {
            match (g.owner(s) == self.owner, self.choice[s]) {
                (true, Some(e)) if e < g.num_edges() && g.edge(e).from == s => {}
                (true, _) => {
                    return Err(Error::BadStrategy(format!("no valid choice at state {s}")))
                }
                (false, None) => {}
                (false, Some(_)) => {
                    return Err(Error::BadStrategy(format!(
                        "choice at state {s}, which the strategy's owner does not control"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Builds a strategy from successor ids, as found in JSON files.
    pub fn from_successors(g: &GameGraph, owner: Owner, succ: &[(usize, usize)]) -> Result<Self> {
        let mut choice = vec![None; g.num_states()];
        for &(s, t) in succ {
            if s >= g.num_states() {
                return Err(Error::BadStrategy(format!("unknown state {s}")));
            }
            let e = g
                .edge_between(s, t)
                .ok_or_else(|| Error::BadStrategy(format!("no edge {s} -> {t}")))?;
            choice[s] = Some(e);
        }
        let st = StrategyMD { owner, choice };
        st.check(g)?;
        Ok(st)
    }
}

/// Among `edges`, the one whose target has the lowest id (first on ties).
pub fn lowest_edge(g: &GameGraph, edges: impl Iterator<Item = usize>) -> Option<usize> {
    edges.min_by_key(|&e| (g.edge(e).to, e))
}

/// JSON form of a memoryless strategy: `[[state, successor], ...]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyMDJson {
    pub owner: Owner,
    pub choice: Vec<(usize, usize)>,
}

impl StrategyMD {
    pub fn to_json(&self, g: &GameGraph) -> StrategyMDJson {
        StrategyMDJson {
            owner: self.owner,
            choice: (0..self.choice.len())
                .filter_map(|s| self.successor(g, s).map(|t| (s, t)))
                .collect(),
        }
    }
}

/// A game with one player's choices fixed by an MD strategy: the fixed
/// states become random states with their chosen edge at probability 1.
#[derive(Debug, Clone)]
pub struct FixedMD {
    pub game: GameGraph,
    /// `edge_map[e]` is the original id of product edge `e`.
    pub edge_map: Vec<usize>,
}

impl FixedMD {
    /// Translates a strategy of the remaining player back to original edges.
    pub fn lift(&self, st: &StrategyMD) -> StrategyMD {
        StrategyMD {
            owner: st.owner,
            choice: st.choice.iter().map(|c| c.map(|e| self.edge_map[e])).collect(),
        }
    }
}

pub fn fix_md(g: &GameGraph, st: &StrategyMD) -> FixedMD {
    let mut b = crate::game::GameBuilder::new();
    let mut edge_map = Vec::new();
    for s in 0..g.num_states() {
        let fixed = g.owner(s) == st.owner;
        b.add_state(if fixed { Owner::Random } else { g.owner(s) }, g.color(s));
    }
    for s in 0..g.num_states() {
        if g.owner(s) == st.owner {
            let e = st.choice[s].expect("strategy covers its owner's states");
            let ed = g.edge(e);
            b.add_edge(s, ed.to, ed.reward, Some(num_traits::One::one()));
            edge_map.push(e);
        } else {
            for &e in g.out_edges(s) {
                let ed = g.edge(e);
                b.add_edge(s, ed.to, ed.reward, ed.prob.clone());
                edge_map.push(e);
            }
        }
    }
    FixedMD {
        game: b.build(),
        edge_map,
    }
}

/// Deterministic finite-memory strategy: a transducer reading edges.
///
/// In mode `m` at an owned state `s` the strategy takes edge `nxt[m][s]`;
/// after any edge `e` is traversed the mode becomes `update[m][e]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyFD {
    pub owner: Owner,
    pub modes: usize,
    pub m0: usize,
    pub update: Vec<Vec<usize>>,
    pub nxt: Vec<Vec<Option<usize>>>,
}

impl StrategyFD {
    /// A memoryless strategy seen as a one-mode transducer.
    pub fn from_md(g: &GameGraph, st: &StrategyMD) -> Self {
        StrategyFD {
            owner: st.owner,
            modes: 1,
            m0: 0,
            update: vec![vec![0; g.num_edges()]],
            nxt: vec![st.choice.clone()],
        }
    }

    /// One-mode strategy moving to the lowest successor id everywhere.
    pub fn lowest(g: &GameGraph, owner: Owner) -> Self {
        Self::from_md(g, &StrategyMD::lowest(g, owner))
    }

    pub fn choose(&self, mode: usize, s: usize) -> Option<usize> {
        self.nxt[mode][s]
    }

    pub fn next_mode(&self, mode: usize, e: usize) -> usize {
        self.update[mode][e]
    }

    /// Checks totality of `update` and that every choice is an outgoing
    /// edge of an owned state.
    pub fn check(&self, g: &GameGraph) -> Result<()> {
        let bad = |m: String| Err(Error::BadStrategy(m));
        if self.modes == 0 || self.m0 >= self.modes {
            return bad(format!("initial mode {} out of {} modes", self.m0, self.modes));
        }
        if self.update.len() != self.modes || self.nxt.len() != self.modes {
            return bad("mode tables do not match the mode count".into());
        }
        for m in 0..self.modes {
            if self.update[m].len() != g.num_edges() || self.update[m].iter().any(|&x| x >= self.modes) {
                return bad(format!("update of mode {m} is not total"));
            }
            if self.nxt[m].len() != g.num_states() {
                return bad(format!("next-move table of mode {m} has the wrong size"));
            }
            for s in 0..g.num_states() {
                match (g.owner(s) == self.owner, self.nxt[m][s]) {
                    (true, Some(e)) if e < g.num_edges() && g.edge(e).from == s => {}
                    (true, _) => return bad(format!("no valid move at state {s} in mode {m}")),
                    (false, None) => {}
                    (false, Some(_)) => return bad(format!("move at foreign state {s} in mode {m}")),
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self, g: &GameGraph) -> StrategyJson {
        let mut update = Vec::new();
        let mut nxt = Vec::new();
        for m in 0..self.modes {
            for e in 0..g.num_edges() {
                update.push([m, e, self.update[m][e]]);
            }
            for s in 0..g.num_states() {
                if let Some(e) = self.nxt[m][s] {
                    nxt.push([m, s, g.edge(e).to]);
                }
            }
        }
        StrategyJson {
            owner: self.owner,
            modes: self.modes,
            m0: self.m0,
            update,
            nxt,
        }
    }

    pub fn from_json(g: &GameGraph, j: &StrategyJson) -> Result<Self> {
        let mut update = vec![vec![usize::MAX; g.num_edges()]; j.modes];
        let mut nxt = vec![vec![None; g.num_states()]; j.modes];
        for &[m, e, m2] in &j.update {
            if m >= j.modes || e >= g.num_edges() {
                return Err(Error::BadStrategy(format!("update entry [{m},{e},{m2}] out of range")));
            }
            update[m][e] = m2;
        }
        for &[m, s, t] in &j.nxt {
            if m >= j.modes || s >= g.num_states() {
                return Err(Error::BadStrategy(format!("nxt entry [{m},{s},{t}] out of range")));
            }
            nxt[m][s] = Some(
                g.edge_between(s, t)
                    .ok_or_else(|| Error::BadStrategy(format!("no edge {s} -> {t}")))?,
            );
        }
        let st = StrategyFD {
            owner: j.owner,
            modes: j.modes,
            m0: j.m0,
            update,
            nxt,
        };
        st.check(g)?;
        Ok(st)
    }
}

/// Canonical JSON form of a transducer; entries are sorted by mode, then
/// edge or state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyJson {
    pub owner: Owner,
    pub modes: usize,
    pub m0: usize,
    pub update: Vec<[usize; 3]>,
    pub nxt: Vec<[usize; 3]>,
}

/// Product of a game with an FD strategy, restricted to the pairs
/// (mode, state) reachable from the given starts. The strategy owner's
/// states become random states with their chosen edge at probability 1;
/// rewards are kept.
#[derive(Debug, Clone)]
pub struct FixedFD {
    pub game: GameGraph,
    /// `pairs[p] = (mode, state)` of product state `p`.
    pub pairs: Vec<(usize, usize)>,
    pub index: std::collections::HashMap<(usize, usize), usize>,
    /// Original edge of every product edge.
    pub edge_map: Vec<usize>,
}

impl FixedFD {
    pub fn state(&self, mode: usize, s: usize) -> Option<usize> {
        self.index.get(&(mode, s)).copied()
    }
}

pub fn fix_fd(g: &GameGraph, st: &StrategyFD, starts: &[(usize, usize)]) -> FixedFD {
    use std::collections::HashMap;
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for &p in starts {
        if !index.contains_key(&p) {
            index.insert(p, pairs.len());
            pairs.push(p);
            queue.push_back(p);
        }
    }
    // (from, original edge, to-pair)
    let mut raw: Vec<(usize, usize, usize)> = Vec::new();
    while let Some((m, s)) = queue.pop_front() {
        let from = index[&(m, s)];
        let edges: Vec<usize> = if g.owner(s) == st.owner {
            vec![st.nxt[m][s].expect("strategy covers its owner's states")]
        } else {
            g.out_edges(s).to_vec()
        };
        for e in edges {
            let next = (st.update[m][e], g.edge(e).to);
            let to = *index.entry(next).or_insert_with(|| {
                pairs.push(next);
                queue.push_back(next);
                pairs.len() - 1
            });
            raw.push((from, e, to));
        }
    }
    let mut b = crate::game::GameBuilder::new();
    for &(_, s) in &pairs {
        let owner = if g.owner(s) == st.owner { Owner::Random } else { g.owner(s) };
        b.add_state(owner, g.color(s));
    }
    let mut edge_map = Vec::new();
    for (from, e, to) in raw {
        let s = pairs[from].1;
        let prob = if g.owner(s) == st.owner {
            Some(num_traits::One::one())
        } else {
            g.edge(e).prob.clone()
        };
        let id = b.add_edge(from, to, g.edge(e).reward, prob);
        if id == edge_map.len() {
            edge_map.push(e);
        }
    }
    FixedFD {
        game: b.build(),
        pairs,
        index,
        edge_map,
    }
}
