//! Energy unfoldings: finite parity games that track the energy level.
//!
//! * [`saturating_unfold`] truncates the counter at a cap; it yields the
//!   certified lower/upper bounds used by the analyses and the oracles.
//! * [`build_unfolding`] is the cut-off game with jump gadgets above level
//!   `N`: with true values as jumps it is `G[N]`, with Gain values it is `G′`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gain::GainSolution;
use crate::game::{GameBuilder, GameGraph, Owner, ValueVector};
use crate::rational::{in_unit_interval, Rat};

/// What happens when the counter would exceed the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Overflow {
    /// Clamp at the cap: under-approximates the energy, hence the winning
    /// chances of the energy player.
    Saturate,
    /// Declare the play won.
    Win,
    /// Declare the play lost.
    Lose,
}

/// Energy levels `1..=cap` of every state plus a losing and a winning sink.
#[derive(Debug, Clone)]
pub struct Saturated {
    pub game: GameGraph,
    pub base_states: usize,
    pub cap: u64,
}

impl Saturated {
    /// Product state of `s` at `level` (1 ≤ level ≤ cap).
    pub fn id(&self, s: usize, level: u64) -> usize {
        debug_assert!(level >= 1 && level <= self.cap);
        (level as usize - 1) * self.base_states + s
    }

    /// Base state and level of a product state (`None` for the sinks).
    pub fn decode(&self, p: usize) -> Option<(usize, u64)> {
        (p < self.lose()).then(|| (p % self.base_states, (p / self.base_states) as u64 + 1))
    }

    pub fn lose(&self) -> usize {
        self.cap as usize * self.base_states
    }

    pub fn win(&self) -> usize {
        self.lose() + 1
    }

    /// Product state after taking a step with `reward` from `level`.
    pub fn step(&self, to: usize, level: u64, reward: i64, overflow: Overflow) -> usize {
        let next = level as i64 + reward;
        if next <= 0 {
            self.lose()
        } else if next as u64 > self.cap {
            match overflow {
                Overflow::Saturate => self.id(to, self.cap),
                Overflow::Win => self.win(),
                Overflow::Lose => self.lose(),
            }
        } else {
            self.id(to, next as u64)
        }
    }
}

/// Unfolds `g` over energy levels `1..=cap`. Dropping to level 0 or below
/// leads to the losing sink (color 1); the winning sink has color 0. All
/// product rewards are zero.
pub fn saturating_unfold(g: &GameGraph, cap: u64, overflow: Overflow) -> Saturated {
    assert!(cap >= 1, "cap must be positive");
    let n = g.num_states();
    let mut b = GameBuilder::new();
    for _level in 1..=cap {
        for s in 0..n {
            b.add_state(g.owner(s), g.color(s));
        }
    }
    let lose = b.add_state(Owner::Random, 1);
    let win = b.add_state(Owner::Random, 0);
    let shape = Saturated {
        game: GameGraph::from_parts(Vec::new(), Vec::new()),
        base_states: n,
        cap,
    };
    for level in 1..=cap {
        for s in 0..n {
            let from = shape.id(s, level);
            for &e in g.out_edges(s) {
                let ed = g.edge(e);
                let to = shape.step(ed.to, level, ed.reward, overflow);
                b.add_edge(from, to, 0, ed.prob.clone());
            }
        }
    }
    b.add_edge(lose, lose, 0, Some(Rat::one()));
    b.add_edge(win, win, 0, Some(Rat::one()));
    Saturated {
        game: b.build(),
        ..shape
    }
}

/// Jump probabilities of the gadgets above `N`, keyed by `(state, level)`
/// for levels `N+1..=N+R`.
pub type JumpTable = BTreeMap<(usize, u64), Rat>;

/// The game unfolded over energy levels `0..=N+R`: players control levels
/// `1..=N`; level 0 loses; a state at level `N+k` wins with its jump
/// probability and loses otherwise.
#[derive(Debug, Clone)]
pub struct EnergyUnfolding {
    pub n: u64,
    pub r: u64,
    pub base_states: usize,
    pub jump_values: JumpTable,
    pub product: GameGraph,
    /// Base edge of each product edge (`None` for gadget edges).
    pub edge_base: Vec<Option<usize>>,
}

impl EnergyUnfolding {
    /// Product state of `s` at `level` (0 ≤ level ≤ N+R).
    pub fn id(&self, s: usize, level: u64) -> usize {
        debug_assert!(level <= self.n + self.r);
        level as usize * self.base_states + s
    }

    /// Base state and level of a product state (`None` for the sinks).
    pub fn decode(&self, p: usize) -> Option<(usize, u64)> {
        (p < self.win()).then(|| (p % self.base_states, (p / self.base_states) as u64))
    }

    pub fn win(&self) -> usize {
        (self.n + self.r + 1) as usize * self.base_states
    }

    pub fn lose(&self) -> usize {
        self.win() + 1
    }
}

/// Builds the unfolding with the given jump table, which must have an
/// entry in `[0, 1]` for exactly every state and level `N+1..=N+R`.
pub fn build_unfolding(g: &GameGraph, n: u64, jump_values: &JumpTable) -> Result<EnergyUnfolding> {
    if n < 1 {
        return Err(Error::BadJumpTable("N must be at least 1".into()));
    }
    let r = g.max_reward() as u64;
    let states = g.num_states();
    for (&(s, level), v) in jump_values {
        if s >= states || level <= n || level > n + r {
            return Err(Error::BadJumpTable(format!("unexpected entry for state {s} at level {level}")));
        }
        if !in_unit_interval(v) {
            return Err(Error::BadJumpTable(format!("value {v} for state {s} at level {level} is not a probability")));
        }
    }
    if jump_values.len() != states * r as usize {
        let missing = (n + 1..=n + r)
            .flat_map(|l| (0..states).map(move |s| (s, l)))
            .find(|k| !jump_values.contains_key(k))
            .unwrap();
        return Err(Error::BadJumpTable(format!("missing entry for state {} at level {}", missing.0, missing.1)));
    }

    let top = n + r;
    let mut b = GameBuilder::new();
    for level in 0..=top {
        for s in 0..states {
            let owner = if (1..=n).contains(&level) { g.owner(s) } else { Owner::Random };
            b.add_state(owner, g.color(s));
        }
    }
    let win = b.add_state(Owner::Random, 0);
    let lose = b.add_state(Owner::Random, 1);
    let id = |s: usize, level: u64| level as usize * states + s;
    let mut edge_base = Vec::new();
    let one = Rat::one();
    for level in 0..=top {
        for s in 0..states {
            let from = id(s, level);
            if level == 0 {
                b.add_edge(from, lose, 0, Some(one.clone()));
                edge_base.push(None);
            } else if level > n {
                let v = &jump_values[&(s, level)];
                if !v.is_zero() {
                    b.add_edge(from, win, 0, Some(v.clone()));
                    edge_base.push(None);
                }
                if !v.is_one() {
                    b.add_edge(from, lose, 0, Some(&one - v));
                    edge_base.push(None);
                }
            } else {
                for &e in g.out_edges(s) {
                    let ed = g.edge(e);
                    let next = (level as i64 + ed.reward).max(0) as u64;
                    assert!(next <= top, "reward above the maximum");
                    b.add_edge(from, id(ed.to, next), ed.reward, ed.prob.clone());
                    edge_base.push(Some(e));
                }
            }
        }
    }
    b.add_edge(win, win, 0, Some(one.clone()));
    b.add_edge(lose, lose, 0, Some(one));
    edge_base.extend([None, None]);
    let product = b.build();
    debug_assert_eq!(product.num_edges(), edge_base.len());
    Ok(EnergyUnfolding {
        n,
        r,
        base_states: states,
        jump_values: jump_values.clone(),
        product,
        edge_base,
    })
}

/// Jump table assigning each state its value, at every gadget level.
pub fn jump_table(g: &GameGraph, n: u64, values: &ValueVector) -> JumpTable {
    let r = g.max_reward() as u64;
    (n + 1..=n + r)
        .flat_map(|l| (0..g.num_states()).map(move |s| ((s, l), values[s].clone())))
        .collect()
}

/// `G′`: the jump gadgets carry the Gain values.
pub fn build_g_prime(g: &GameGraph, n: u64, gain: &GainSolution) -> Result<EnergyUnfolding> {
    build_unfolding(g, n, &jump_table(g, n, &gain.values))
}

/// `G[N]`: the jump gadgets carry the true values `val(EN(N+k) ∩ EPAR)`,
/// supplied by an oracle. Only used to test the construction.
pub fn build_g_n_for_test(g: &GameGraph, n: u64, true_values: &JumpTable) -> Result<EnergyUnfolding> {
    build_unfolding(g, n, true_values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Edge, StateInfo};
    use crate::parity_game::{solve_parity_game, SolverMode};
    use crate::random::{random_game, RandomSpec};
    use crate::rational::int;

    fn self_loop(reward: i64, color: u32) -> GameGraph {
        GameGraph::new(
            vec![StateInfo { owner: Owner::Max, color }],
            vec![Edge { from: 0, to: 0, reward, prob: None }],
        )
        .unwrap()
    }

    fn constant(g: &GameGraph, n: u64, v: Rat) -> JumpTable {
        jump_table(g, n, &ValueVector::new(vec![v; g.num_states()]))
    }

    #[test]
    fn size_formula_and_layout() {
        let g = self_loop(0, 0);
        let mut jumps = constant(&g, 1, int(1));
        // R = 0: no gadget levels at all
        assert!(jumps.is_empty());
        let u = build_unfolding(&g, 1, &jumps).unwrap();
        assert_eq!(u.product.num_states(), 2 * 1 + 2);
        let g = self_loop(1, 0);
        jumps = constant(&g, 1, int(1));
        let u = build_unfolding(&g, 1, &jumps).unwrap();
        assert_eq!(u.product.num_states(), 3 * 1 + 2);
        for p in 0..u.win() {
            let (s, l) = u.decode(p).unwrap();
            assert_eq!(u.id(s, l), p);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        let g = self_loop(1, 0);
        assert!(matches!(build_unfolding(&g, 2, &JumpTable::new()), Err(Error::BadJumpTable(_))));
        let mut t = constant(&g, 2, int(1));
        t.insert((0, 3), int(2));
        assert!(matches!(build_unfolding(&g, 2, &t), Err(Error::BadJumpTable(_))));
        let mut t = constant(&g, 2, int(1));
        t.insert((0, 5), int(1));
        assert!(matches!(build_unfolding(&g, 2, &t), Err(Error::BadJumpTable(_))));
    }

    #[test]
    fn gadget_semantics() {
        let spec = RandomSpec::corpus();
        for seed in 0..20 {
            let g = random_game(&spec, seed);
            let n = 2;
            let u = build_unfolding(&g, n, &constant(&g, n, int(1))).unwrap();
            let sol = solve_parity_game(&u.product, SolverMode::Improve).unwrap();
            for s in 0..g.num_states() {
                assert!(sol.values[u.id(s, 0)].is_zero());
                for l in n + 1..=n + u.r {
                    assert!(sol.values[u.id(s, l)].is_one());
                }
            }
        }
    }

    /// With the saturated values as jumps, the cut-off game reproduces the
    /// saturated values below the cut: stopping at a level above `N` with
    /// the continuation value does not change a prefix-independent value.
    #[test]
    fn cut_off_reproduces_saturated_values() {
        let spec = RandomSpec::corpus().states(2, 4);
        for seed in 0..25 {
            let g = random_game(&spec, seed);
            let (n, cap) = (3, 6);
            for overflow in [Overflow::Saturate, Overflow::Win] {
                let sat = saturating_unfold(&g, cap, overflow);
                let sv = solve_parity_game(&sat.game, SolverMode::Improve).unwrap().values;
                let r = g.max_reward() as u64;
                let jumps: JumpTable = (n + 1..=n + r)
                    .flat_map(|l| (0..g.num_states()).map(move |s| (s, l)))
                    .map(|(s, l)| ((s, l), sv[sat.id(s, l)].clone()))
                    .collect();
                let u = build_g_n_for_test(&g, n, &jumps).unwrap();
                let uv = solve_parity_game(&u.product, SolverMode::Improve).unwrap().values;
                for s in 0..g.num_states() {
                    for l in 1..=n {
                        assert_eq!(uv[u.id(s, l)], sv[sat.id(s, l)], "seed {seed} state {s} level {l}");
                    }
                }
            }
        }
    }
}
