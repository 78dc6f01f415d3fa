//! Quantitative stochastic parity games (even parity for the Maximizer).
//!
//! Values are certified by mutual best responses: a Minimizer strategy
//! `pi` whose Maximizer best response yields `v_hi`, and a Maximizer
//! strategy `sigma` whose Minimizer best response yields `v_lo`. When
//! `v_lo == v_hi` both strategies are optimal and the vector is the value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameGraph, Owner, ValueVector};
use crate::mdp::parity::mdp_parity_unchecked;
use crate::rational::Rat;
use crate::strategy::{fix_md, lowest_edge, StrategyMD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    Enumerate,
    #[default]
    Improve,
}

/// Default cap on the number of MD strategies an enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct ParitySolution {
    pub values: ValueVector,
    pub sigma: StrategyMD,
    pub pi: StrategyMD,
    /// Minimizer best response to `sigma` and Maximizer best response to
    /// `pi`; both equal `values`.
    pub certificate: (ValueVector, ValueVector),
    /// The mode that produced the answer (Improve may fall back).
    pub mode_used: SolverMode,
}

/// Value of the Maximizer's best response to a fixed Minimizer strategy,
/// or of the Minimizer's best response to a fixed Maximizer strategy, with
/// the responding strategy.
pub fn best_response_parity(
    g: &GameGraph,
    fixed: &StrategyMD,
    fixed_player: Owner,
) -> Result<(ValueVector, StrategyMD)> {
    if fixed.owner != fixed_player || fixed_player == Owner::Random {
        return Err(Error::BadStrategy("strategy owner does not match the fixed player".into()));
    }
    fixed.check(g)?;
    Ok(match fixed_player {
        Owner::Min => max_response(g, fixed),
        _ => min_response(g, fixed),
    })
}

/// Maximizer best response to `pi`.
fn max_response(g: &GameGraph, pi: &StrategyMD) -> (ValueVector, StrategyMD) {
    let f = fix_md(g, pi);
    let (v, st) = mdp_parity_unchecked(&f.game);
    (v, f.lift(&st))
}

/// Minimizer best response to `sigma`: one minus the Minimizer's optimal
/// probability of odd parity, computed as a maximizing MDP on the dual
/// with shifted colors.
fn min_response(g: &GameGraph, sigma: &StrategyMD) -> (ValueVector, StrategyMD) {
    let f = fix_md(g, sigma);
    let d = f.game.dual().shift_colors();
    let (v, st) = mdp_parity_unchecked(&d);
    let vals = v.iter().map(|x| Rat::from_integer(1.into()) - x).collect();
    let st = StrategyMD {
        owner: Owner::Min,
        choice: st.choice,
    };
    (ValueVector::new(vals), f.lift(&st))
}

pub fn solve_parity_game(g: &GameGraph, mode: SolverMode) -> Result<ParitySolution> {
    solve_parity_game_with(g, mode, DEFAULT_BUDGET)
}

pub fn solve_parity_game_with(g: &GameGraph, mode: SolverMode, budget: u64) -> Result<ParitySolution> {
    match mode {
        SolverMode::Enumerate => enumerate(g, budget),
        SolverMode::Improve => match improve(g) {
            Some(sol) => Ok(sol),
            None => {
                log::info!("strategy improvement not certified; enumerating");
                enumerate(g, budget)
            }
        },
    }
}

/// Minimizer strategy improvement against Maximizer best responses,
/// starting from `pi`. Switches only on strict improvement, to the
/// lowest-id successor among the best.
fn improve_min(g: &GameGraph, mut pi: StrategyMD) -> (ValueVector, StrategyMD, StrategyMD) {
    loop {
        let (v, sigma) = max_response(g, &pi);
        let mut changed = false;
        for s in g.owned_by(Owner::Min) {
            let cur = &v[g.edge(pi.choice[s].unwrap()).to];
            let best = g.out_edges(s).iter().map(|&e| &v[g.edge(e).to]).min().unwrap();
            if best < cur {
                let best = best.clone();
                pi.choice[s] = lowest_edge(g, g.out_edges(s).iter().copied().filter(|&e| v[g.edge(e).to] == best));
                changed = true;
            }
        }
        if !changed {
            return (v, pi, sigma);
        }
    }
}

/// Improvement for both players (the Maximizer's on the dual game) until
/// the two bounds meet; restarts once from the opponents' best responses.
fn improve(g: &GameGraph) -> Option<ParitySolution> {
    let dual = g.dual().shift_colors();
    let mut pi = StrategyMD::lowest(g, Owner::Min);
    let mut sigma_dual = StrategyMD::lowest(&dual, Owner::Min);
    for _round in 0..3 {
        let (v_hi, pi_opt, sigma_br) = improve_min(g, pi);
        let (w, sd, _) = improve_min(&dual, sigma_dual);
        let sigma = StrategyMD {
            owner: Owner::Max,
            choice: sd.choice.clone(),
        };
        let v_lo = ValueVector::new(w.iter().map(|x| Rat::from_integer(1.into()) - x).collect());
        if v_lo == v_hi {
            return Some(ParitySolution {
                values: v_hi.clone(),
                sigma,
                pi: pi_opt,
                certificate: (v_lo, v_hi),
                mode_used: SolverMode::Improve,
            });
        }
        // restart each side from the best response to the other's result
        let (_, pi_br) = min_response(g, &sigma);
        pi = pi_br;
        sigma_dual = StrategyMD {
            owner: Owner::Min,
            choice: sigma_br.choice,
        };
        let _ = pi_opt;
    }
    None
}

fn strategy_count(g: &GameGraph, owner: Owner) -> u64 {
    g.owned_by(owner)
        .try_fold(1u64, |acc, s| acc.checked_mul(g.out_edges(s).len() as u64))
        .unwrap_or(u64::MAX)
}

/// The `idx`-th MD strategy of `owner` in mixed-radix order.
pub(crate) fn nth_strategy(g: &GameGraph, owner: Owner, mut idx: u64) -> StrategyMD {
    let mut choice = vec![None; g.num_states()];
    for s in g.owned_by(owner) {
        let out = g.out_edges(s);
        let k = out.len() as u64;
        let mut sorted: Vec<usize> = out.to_vec();
        sorted.sort_by_key(|&e| (g.edge(e).to, e));
        choice[s] = Some(sorted[(idx % k) as usize]);
        idx /= k;
    }
    StrategyMD { owner, choice }
}

/// Exhaustive search over the Minimizer's MD strategies. The Maximizer's
/// certificate strategy is then searched the same way.
fn enumerate(g: &GameGraph, budget: u64) -> Result<ParitySolution> {
    let count = strategy_count(g, Owner::Min);
    if count > budget {
        return Err(Error::BudgetExceeded {
            what: "Minimizer strategy enumeration".into(),
            budget,
        });
    }
    let values: Vec<Rat> = (0..count)
        .into_par_iter()
        .map(|i| max_response(g, &nth_strategy(g, Owner::Min, i)).0 .0)
        .reduce_with(|a, b| a.into_iter().zip(b).map(|(x, y)| x.min(y)).collect())
        .expect("at least one strategy");
    let values = ValueVector::new(values);
    let pi_idx = (0..count)
        .into_par_iter()
        .find_first(|&i| max_response(g, &nth_strategy(g, Owner::Min, i)).0 == values)
        .ok_or(Error::UniformityViolated)?;
    let pi = nth_strategy(g, Owner::Min, pi_idx);
    let v_hi = max_response(g, &pi).0;

    // Maximizer certificate: try improvement on the dual first
    let dual = g.dual().shift_colors();
    let (_, sd, _) = improve_min(&dual, StrategyMD::lowest(&dual, Owner::Min));
    let mut sigma = StrategyMD {
        owner: Owner::Max,
        choice: sd.choice,
    };
    let mut v_lo = min_response(g, &sigma).0;
    if v_lo != values {
        let count_max = strategy_count(g, Owner::Max);
        if count_max > budget {
            return Err(Error::BudgetExceeded {
                what: "Maximizer strategy enumeration".into(),
                budget,
            });
        }
        let idx = (0..count_max)
            .into_par_iter()
            .find_first(|&i| min_response(g, &nth_strategy(g, Owner::Max, i)).0 == values)
            .ok_or_else(|| Error::Internal("no Maximizer strategy attains the game value".into()))?;
        sigma = nth_strategy(g, Owner::Max, idx);
        v_lo = min_response(g, &sigma).0;
    }
    Ok(ParitySolution {
        values,
        sigma,
        pi,
        certificate: (v_lo, v_hi),
        mode_used: SolverMode::Enumerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::mdp_parity_value;
    use crate::random::{random_game, RandomSpec};

    #[test]
    fn improve_matches_enumerate_on_random_games() {
        let spec = RandomSpec::corpus();
        for seed in 0..60 {
            let g = random_game(&spec, seed);
            let a = solve_parity_game(&g, SolverMode::Improve).unwrap();
            let b = solve_parity_game(&g, SolverMode::Enumerate).unwrap();
            assert_eq!(a.values, b.values, "seed {seed}");
            assert_eq!(a.certificate.0, a.values);
            assert_eq!(a.certificate.1, a.values);
        }
    }

    #[test]
    fn no_minimizer_states_is_mdp_parity() {
        let spec = RandomSpec::corpus().shape(crate::random::Shape::MaxMdp);
        for seed in 0..20 {
            let g = random_game(&spec, seed);
            let a = solve_parity_game(&g, SolverMode::Improve).unwrap();
            assert_eq!(a.values, mdp_parity_value(&g).unwrap().0);
        }
    }

    #[test]
    fn duality_sums_to_one() {
        let spec = RandomSpec::corpus();
        for seed in 100..140 {
            let g = random_game(&spec, seed);
            let a = solve_parity_game(&g, SolverMode::Improve).unwrap();
            let b = solve_parity_game(&g.dual().shift_colors(), SolverMode::Improve).unwrap();
            for s in 0..g.num_states() {
                assert_eq!(&a.values[s] + &b.values[s], Rat::from_integer(1.into()));
            }
        }
    }
}
