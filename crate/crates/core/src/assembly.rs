//! The ε-optimal strategies of both players, assembled from a solution of
//! `G′` (played while the energy is below `N`) and the Gain-optimal
//! strategies (played forever once the energy first reaches `N`).
//!
//! Mode layout of an assembled transducer with `K` post-switch modes:
//!
//! * mode `0`: the energy has dropped to 0 (the play is lost; moves are
//!   arbitrary, the lowest successor is taken);
//! * modes `1..N`: the current energy level `j < N`;
//! * modes `N..N+K`: switched; mode `N + m` is mode `m` of the post-switch
//!   strategy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Configuration, GameGraph, Owner};
use crate::gain::GainSolution;
use crate::parity_game::ParitySolution;
use crate::strategy::{lowest_edge, StrategyFD, StrategyMD};
use crate::unfold::EnergyUnfolding;

#[derive(Debug, Clone, Serialize)]
pub struct AssembledStrategy {
    #[serde(skip)]
    pub strategy: StrategyFD,
    pub n: u64,
    /// First post-switch mode (`N`).
    pub switch_offset: usize,
    /// Modes of the post-switch strategy.
    pub phase2_modes: usize,
    pub initial: Configuration,
}

impl AssembledStrategy {
    pub fn modes(&self) -> usize {
        self.strategy.modes
    }

    /// Declared bound `(N+1)(1 + K) + 1` on the number of modes.
    pub fn mode_bound(&self) -> usize {
        (self.n as usize + 1) * (1 + self.phase2_modes) + 1
    }

    pub fn switched(&self, mode: usize) -> bool {
        mode >= self.switch_offset
    }
}

/// `σ_ε`: `σ̂` of `G′` below `N`, then `σ*` from the state where the energy
/// first reaches `N`.
pub fn assemble_sigma_eps(
    g: &GameGraph,
    gprime: &EnergyUnfolding,
    gprime_solution: &ParitySolution,
    gain: &GainSolution,
    initial: &Configuration,
) -> Result<AssembledStrategy> {
    // σ* is uniform: delegating to σ*(s′) from any s′ means starting it in m0
    assemble(g, gprime, &gprime_solution.sigma, gain.sigma_star_for(initial.state), initial)
}

/// `π_ε`: `π̂` of `G′` below `N`, then the memoryless `π*` at any state.
pub fn assemble_pi_eps(
    g: &GameGraph,
    gprime: &EnergyUnfolding,
    gprime_solution: &ParitySolution,
    gain: &GainSolution,
    initial: &Configuration,
) -> Result<AssembledStrategy> {
    let pi_star = StrategyFD::from_md(g, &gain.pi_star);
    assemble(g, gprime, &gprime_solution.pi, &pi_star, initial)
}

fn assemble(
    g: &GameGraph,
    gprime: &EnergyUnfolding,
    below: &StrategyMD,
    after: &StrategyFD,
    initial: &Configuration,
) -> Result<AssembledStrategy> {
    let owner = after.owner;
    if below.owner != owner || owner == Owner::Random {
        return Err(Error::BadStrategy("phase strategies belong to different players".into()));
    }
    after.check(g)?;
    let n = gprime.n;
    if n == 0 || gprime.base_states != g.num_states() {
        return Err(Error::BadStrategy("unfolding does not match the game".into()));
    }
    let off = n as usize;
    let modes = off + after.modes;
    let switch = off + after.m0;
    let lowest = |s: usize| lowest_edge(g, g.out_edges(s).iter().copied());

    let mut update = vec![vec![0; g.num_edges()]; modes];
    let mut nxt = vec![vec![None; g.num_states()]; modes];
    for j in 1..off {
        for (e, edge) in g.edges().iter().enumerate() {
            let level = j as i64 + edge.reward;
            update[j][e] = if level <= 0 {
                0
            } else if level >= n as i64 {
                switch
            } else {
                level as usize
            };
        }
        for s in g.owned_by(owner) {
            let pe = below.choice[gprime.id(s, j as u64)]
                .ok_or_else(|| Error::EnergyTrackOverflow(format!("no G′ move at ({s}, {j})")))?;
            let e = gprime.edge_base[pe]
                .ok_or_else(|| Error::EnergyTrackOverflow(format!("gadget edge chosen at ({s}, {j})")))?;
            nxt[j][s] = Some(e);
        }
    }
    for s in g.owned_by(owner) {
        nxt[0][s] = lowest(s);
    }
    for m in 0..after.modes {
        for e in 0..g.num_edges() {
            update[off + m][e] = off + after.update[m][e];
        }
        for s in g.owned_by(owner) {
            nxt[off + m][s] = after.nxt[m][s].or_else(|| lowest(s));
        }
    }
    let m0 = if initial.energy >= n {
        switch
    } else {
        initial.energy as usize
    };
    let strategy = StrategyFD {
        owner,
        modes,
        m0,
        update,
        nxt,
    };
    strategy.check(g)?;
    let out = AssembledStrategy {
        strategy,
        n,
        switch_offset: off,
        phase2_modes: after.modes,
        initial: *initial,
    };
    if out.modes() > out.mode_bound() {
        return Err(Error::Internal(format!("{} modes exceed the bound {}", out.modes(), out.mode_bound())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gain::ssg_gain_value;
    use crate::game::{Edge, StateInfo};
    use crate::parity_game::{solve_parity_game, SolverMode};
    use crate::random::{random_game, RandomSpec};
    use crate::unfold::build_g_prime;

    fn parts(g: &GameGraph, n: u64) -> (EnergyUnfolding, ParitySolution, GainSolution) {
        let gain = ssg_gain_value(g, SolverMode::Improve).unwrap();
        let u = build_g_prime(g, n, &gain).unwrap();
        let sol = solve_parity_game(&u.product, SolverMode::Improve).unwrap();
        (u, sol, gain)
    }

    #[test]
    fn switch_rule() {
        let g = random_game(&RandomSpec::corpus(), 3);
        for n in 1..4 {
            let (u, sol, gain) = parts(&g, n);
            for energy in 0..=n {
                let cfg = Configuration { state: 0, energy };
                let a = assemble_sigma_eps(&g, &u, &sol, &gain, &cfg).unwrap();
                let b = assemble_pi_eps(&g, &u, &sol, &gain, &cfg).unwrap();
                assert!(a.modes() <= a.mode_bound());
                assert_eq!(b.modes(), n as usize + 1);
                assert_eq!(a.switched(a.strategy.m0), energy >= n);
                // stable numbering
                assert_eq!(a.strategy, assemble_sigma_eps(&g, &u, &sol, &gain, &cfg).unwrap().strategy);
            }
        }
    }

    #[test]
    fn zero_rewards_never_switch() {
        let st = |owner, color| StateInfo { owner, color };
        let g = GameGraph::new(
            vec![st(Owner::Max, 0), st(Owner::Min, 1), st(Owner::Max, 2)],
            vec![
                Edge { from: 0, to: 1, reward: 0, prob: None },
                Edge { from: 0, to: 2, reward: 0, prob: None },
                Edge { from: 1, to: 0, reward: 0, prob: None },
                Edge { from: 1, to: 2, reward: 0, prob: None },
                Edge { from: 2, to: 2, reward: 0, prob: None },
            ],
        )
        .unwrap();
        let (u, sol, gain) = parts(&g, 3);
        let cfg = Configuration { state: 0, energy: 1 };
        let a = assemble_sigma_eps(&g, &u, &sol, &gain, &cfg).unwrap();
        for e in 0..g.num_edges() {
            for j in 1..3 {
                assert_eq!(a.strategy.update[j][e], j);
            }
        }
        assert_eq!(a.strategy.nxt[1][0], sol.sigma.choice[u.id(0, 1)].and_then(|pe| u.edge_base[pe]));
    }
}
