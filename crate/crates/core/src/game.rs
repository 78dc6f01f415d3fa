//! The simple stochastic game model: states owned by Maximizer, Minimizer or
//! chance, colored states and integer-rewarded edges.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{in_unit_interval, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Owner {
    #[serde(rename = "max")]
    Max,
    #[serde(rename = "min")]
    Min,
    #[serde(rename = "rand")]
    Random,
}

impl Owner {
    pub fn opponent(self) -> Owner {
        match self {
            Owner::Max => Owner::Min,
            Owner::Min => Owner::Max,
            Owner::Random => Owner::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateInfo {
    pub owner: Owner,
    pub color: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub reward: i64,
    /// Present exactly on edges leaving random states.
    pub prob: Option<Rat>,
}

/// Validation limits for user-supplied games.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_color: u32,
    /// `None` means rewards are unbounded.
    pub max_abs_reward: Option<i64>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_color: 16,
            max_abs_reward: None,
        }
    }
}

/// A finite simple stochastic game. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameGraph {
    states: Vec<StateInfo>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    max_reward: i64,
}

impl GameGraph {
    /// Builds and validates a game against the default [`Limits`].
    pub fn new(states: Vec<StateInfo>, edges: Vec<Edge>) -> Result<Self> {
        Self::with_limits(states, edges, Limits::default())
    }

    pub fn with_limits(states: Vec<StateInfo>, edges: Vec<Edge>, limits: Limits) -> Result<Self> {
        for (i, e) in edges.iter().enumerate() {
            if e.from >= states.len() || e.to >= states.len() {
                return Err(Error::DanglingEdge {
                    edge: i,
                    from: e.from,
                    to: e.to,
                });
            }
        }
        let g = Self::from_parts(states, edges);
        g.validate(&limits)?;
        Ok(g)
    }

    /// Assembles a game without validation. Endpoints must be in range.
    pub(crate) fn from_parts(states: Vec<StateInfo>, edges: Vec<Edge>) -> Self {
        let mut out = vec![Vec::new(); states.len()];
        let mut max_reward = 0;
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
            max_reward = max_reward.max(e.reward.abs());
        }
        GameGraph {
            states,
            edges,
            out,
            max_reward,
        }
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self, limits: &Limits) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            if e.from >= self.states.len() || e.to >= self.states.len() {
                return Err(Error::DanglingEdge {
                    edge: i,
                    from: e.from,
                    to: e.to,
                });
            }
            if let Some(bound) = limits.max_abs_reward {
                if e.reward.abs() > bound {
                    return Err(Error::RewardOutOfRange {
                        edge: i,
                        reward: e.reward,
                        bound,
                    });
                }
            }
        }
        for (s, info) in self.states.iter().enumerate() {
            if info.color > limits.max_color {
                return Err(Error::ColorOutOfRange {
                    state: s,
                    color: info.color,
                    limit: limits.max_color,
                });
            }
            let out = &self.out[s];
            if out.is_empty() {
                return Err(Error::EmptySuccessorSet { state: s });
            }
            let mut seen = BTreeSet::new();
            for &e in out {
                if !seen.insert(self.edges[e].to) {
                    return Err(Error::DuplicateEdge {
                        from: s,
                        to: self.edges[e].to,
                    });
                }
            }
            if info.owner == Owner::Random {
                let mut sum = Rat::zero();
                for &e in out {
                    match &self.edges[e].prob {
                        Some(p) if p.is_positive() => sum += p,
                        Some(p) => {
                            return Err(Error::BadDistribution {
                                state: s,
                                reason: format!("nonpositive mass {p} on edge {e}"),
                            })
                        }
                        None => {
                            return Err(Error::BadDistribution {
                                state: s,
                                reason: format!("edge {e} has no probability"),
                            })
                        }
                    }
                }
                if !sum.is_one() {
                    return Err(Error::BadDistribution {
                        state: s,
                        reason: format!("probabilities sum to {sum}"),
                    });
                }
            } else {
                for &e in out {
                    if self.edges[e].prob.is_some() {
                        return Err(Error::BadDistribution {
                            state: s,
                            reason: format!("edge {e} leaves a player state but carries a probability"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn states(&self) -> &[StateInfo] {
        &self.states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn owner(&self, s: usize) -> Owner {
        self.states[s].owner
    }

    pub fn color(&self, s: usize) -> u32 {
        self.states[s].color
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn out_edges(&self, s: usize) -> &[usize] {
        &self.out[s]
    }

    /// Probability of edge `e`; edges of player states count as 1.
    pub fn prob(&self, e: usize) -> Rat {
        self.edges[e].prob.clone().unwrap_or_else(Rat::one)
    }

    /// R: the largest absolute edge reward.
    pub fn max_reward(&self) -> i64 {
        self.max_reward
    }

    pub fn max_color(&self) -> u32 {
        self.states.iter().map(|s| s.color).max().unwrap_or(0)
    }

    pub fn edge_between(&self, from: usize, to: usize) -> Option<usize> {
        self.out[from].iter().copied().find(|&e| self.edges[e].to == to)
    }

    pub fn owned_by(&self, owner: Owner) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(move |&s| self.states[s].owner == owner)
    }

    pub fn is_maximizing_mdp(&self) -> bool {
        self.states.iter().all(|s| s.owner != Owner::Min)
    }

    /// Same game with the roles of Maximizer and Minimizer swapped.
    pub fn dual(&self) -> GameGraph {
        let states = self
            .states
            .iter()
            .map(|s| StateInfo {
                owner: s.owner.opponent(),
                color: s.color,
            })
            .collect();
        Self::from_parts(states, self.edges.clone())
    }

    /// Adds one to every color, turning odd parity into even parity.
    pub fn shift_colors(&self) -> GameGraph {
        let states = self
            .states
            .iter()
            .map(|s| StateInfo {
                owner: s.owner,
                color: s.color + 1,
            })
            .collect();
        Self::from_parts(states, self.edges.clone())
    }

    pub fn with_colors(&self, colors: &[u32]) -> GameGraph {
        let states = self
            .states
            .iter()
            .zip(colors)
            .map(|(s, &color)| StateInfo {
                owner: s.owner,
                color,
            })
            .collect();
        Self::from_parts(states, self.edges.clone())
    }
}

/// Incremental construction of derived games (products, unfoldings).
#[derive(Debug, Default, Clone)]
pub struct GameBuilder {
    states: Vec<StateInfo>,
    edges: Vec<Edge>,
    index: HashMap<(usize, usize, i64), usize>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, owner: Owner, color: u32) -> usize {
        self.states.push(StateInfo { owner, color });
        self.states.len() - 1
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn set_owner(&mut self, s: usize, owner: Owner) {
        self.states[s].owner = owner;
    }

    /// Adds an edge; an existing edge with the same endpoints and reward
    /// absorbs the probability mass instead.
    pub fn add_edge(&mut self, from: usize, to: usize, reward: i64, prob: Option<Rat>) -> usize {
        if let Some(&i) = self.index.get(&(from, to, reward)) {
            if let (Some(p), Some(q)) = (&mut self.edges[i].prob, prob) {
                *p += q;
            }
            return i;
        }
        self.edges.push(Edge {
            from,
            to,
            reward,
            prob,
        });
        self.index.insert((from, to, reward), self.edges.len() - 1);
        self.edges.len() - 1
    }

    pub fn build(self) -> GameGraph {
        let g = GameGraph::from_parts(self.states, self.edges);
        debug_assert!(g.out.iter().all(|o| !o.is_empty()), "state without successor");
        g
    }
}

/// Exact value per state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueVector(#[serde(with = "crate::rational::serde_rat_vec")] pub Vec<Rat>);

impl ValueVector {
    pub fn new(values: Vec<Rat>) -> Self {
        debug_assert!(values.iter().all(in_unit_interval));
        ValueVector(values)
    }

    pub fn get(&self, s: usize) -> &Rat {
        &self.0[s]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rat> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for ValueVector {
    type Output = Rat;
    fn index(&self, s: usize) -> &Rat {
        &self.0[s]
    }
}

/// A control state together with the current energy level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub state: usize,
    pub energy: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn st(owner: Owner, color: u32) -> StateInfo {
        StateInfo { owner, color }
    }

    fn e(from: usize, to: usize, reward: i64, prob: Option<Rat>) -> Edge {
        Edge {
            from,
            to,
            reward,
            prob,
        }
    }

    #[test]
    fn minimal_game_is_valid() {
        let g = GameGraph::new(
            vec![st(Owner::Random, 0)],
            vec![e(0, 0, 0, Some(rat(1, 1)))],
        );
        assert!(g.is_ok());
    }

    #[test]
    fn bad_distribution_is_rejected() {
        let g = GameGraph::new(
            vec![st(Owner::Random, 0), st(Owner::Max, 0), st(Owner::Max, 0)],
            vec![
                e(0, 1, 0, Some(rat(1, 2))),
                e(0, 2, 0, Some(rat(1, 3))),
                e(1, 1, 0, None),
                e(2, 2, 0, None),
            ],
        );
        assert!(matches!(g, Err(Error::BadDistribution { state: 0, .. })));
    }

    #[test]
    fn empty_successors_are_rejected() {
        let g = GameGraph::new(
            vec![st(Owner::Max, 0), st(Owner::Max, 0)],
            vec![e(0, 1, 0, None)],
        );
        assert_eq!(g.unwrap_err(), Error::EmptySuccessorSet { state: 1 });
    }

    #[test]
    fn dangling_and_color_errors() {
        let g = GameGraph::new(vec![st(Owner::Max, 0)], vec![e(0, 3, 0, None)]);
        assert!(matches!(g, Err(Error::DanglingEdge { to: 3, .. })));
        let g = GameGraph::new(vec![st(Owner::Max, 17)], vec![e(0, 0, 0, None)]);
        assert!(matches!(g, Err(Error::ColorOutOfRange { state: 0, .. })));
    }

    #[test]
    fn probabilities_only_on_random_states() {
        let g = GameGraph::new(vec![st(Owner::Max, 0)], vec![e(0, 0, 0, Some(rat(1, 1)))]);
        assert!(matches!(g, Err(Error::BadDistribution { .. })));
    }

    #[test]
    fn dual_swaps_players_and_is_an_involution() {
        let g = GameGraph::new(vec![st(Owner::Max, 1)], vec![e(0, 0, 0, None)]).unwrap();
        let d = g.dual();
        assert_eq!(d.owner(0), Owner::Min);
        assert_eq!(d.dual(), g);
        let r = GameGraph::new(
            vec![st(Owner::Random, 0)],
            vec![e(0, 0, 1, Some(rat(1, 1)))],
        )
        .unwrap();
        assert_eq!(r.dual(), r);
    }

    #[test]
    fn shift_colors_increments() {
        let g = GameGraph::new(
            vec![st(Owner::Max, 0), st(Owner::Min, 1)],
            vec![e(0, 1, 0, None), e(1, 0, 0, None)],
        )
        .unwrap();
        let s = g.shift_colors();
        assert_eq!((s.color(0), s.color(1)), (1, 2));
    }
}
