//! Gain values of stochastic games (`LimInf > −∞` and even parity), the
//! uniformly optimal Minimizer strategy `π*`, and a verified optimal
//! finite-memory Maximizer strategy `σ*`.
//!
//! `σ*` is uniform over start states. It reaches the value-1 region `W`
//! optimally; inside `W` it keeps an energy counter saturated at `K` and
//! plays an optimal strategy of the saturated unfolding, which maximizes
//! the chance of never dropping to 0. Each drop resets the counter to `K`;
//! since every reset has a positive chance of being the last one, almost
//! surely the play eventually stays above a bound and wins parity. The
//! construction is checked by a Minimizer best response on the product.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameBuilder, GameGraph, Owner, ValueVector};
use crate::mdp::gain::{mdp_gain_value, GainWitness};
use crate::mdp::mean_payoff::{mec_mean_payoff, MpMode};
use crate::mdp::mec::mec_decompose;
use crate::mdp::reach::max_reach_unchecked;
use crate::mdp::wsets::set_w0;
use crate::parity_game::{nth_strategy, solve_parity_game, SolverMode, DEFAULT_BUDGET};
use crate::rational::Rat;
use crate::strategy::{fix_fd, fix_md, lowest_edge, StrategyFD, StrategyMD};
use crate::unfold::{saturating_unfold, Overflow};

/// Largest counter bound tried when synthesizing `σ*`.
pub const MAX_COUNTER_CAP: u64 = 64;

/// Largest number of positional region strategies tried as a last resort.
pub const POSITIONAL_SEARCH_BUDGET: u64 = 1 << 12;

#[derive(Debug, Clone, Serialize)]
pub struct SigmaStarInfo {
    /// Counter bound of the saturated unfolding (0 for a positional `σ*`).
    pub k: u64,
    /// States of Gain value 1.
    pub value_one: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct GainSolution {
    pub values: ValueVector,
    pub pi_star: StrategyMD,
    /// Optimal from every start state (mode `m0`).
    pub sigma_star: StrategyFD,
    pub sigma_info: SigmaStarInfo,
    /// Analysis of the MDP obtained by fixing `π*`.
    pub witness: GainWitness,
    pub mode_used: SolverMode,
}

impl GainSolution {
    /// `σ*(s)`; the synthesized strategy is the same for every start.
    pub fn sigma_star_for(&self, _s: usize) -> &StrategyFD {
        &self.sigma_star
    }
}

/// Gain values of the maximizing MDP obtained by fixing a Minimizer strategy.
pub fn gain_against_md(g: &GameGraph, pi: &StrategyMD) -> Result<(ValueVector, GainWitness)> {
    let f = fix_md(g, pi);
    mdp_gain_value(&f.game)
}

/// Gain value guaranteed by an FD Maximizer strategy from each state
/// (started in its initial mode): one minus the Minimizer's optimal
/// probability of Loss in the product, which is the probability of
/// reaching its almost-sure Loss region.
pub fn gain_against_fd(g: &GameGraph, sigma: &StrategyFD) -> Result<ValueVector> {
    let starts: Vec<(usize, usize)> = (0..g.num_states()).map(|s| (sigma.m0, s)).collect();
    let f = fix_fd(g, sigma, &starts);
    let dual = f.game.dual();
    let w0 = set_w0(&dual)?;
    let (loss, _) = max_reach_unchecked(&dual, &w0);
    Ok(ValueVector::new(
        (0..g.num_states())
            .map(|s| Rat::one() - &loss[f.state(sigma.m0, s).unwrap()])
            .collect(),
    ))
}

pub fn ssg_gain_value(g: &GameGraph, mode: SolverMode) -> Result<GainSolution> {
    ssg_gain_value_with(g, mode, DEFAULT_BUDGET)
}

pub fn ssg_gain_value_with(g: &GameGraph, mode: SolverMode, budget: u64) -> Result<GainSolution> {
    let mut improved = None;
    if mode == SolverMode::Improve {
        let (values, pi) = improve_min(g)?;
        match synthesize(g, &values, &pi, false) {
            Ok((sigma, info)) => return finish(g, values, pi, sigma, info, SolverMode::Improve),
            Err(e) => log::info!("gain improvement not certified ({e}); enumerating"),
        }
        improved = Some((values, pi));
    }
    match enumerate_min(g, budget) {
        Ok((values, pi)) => {
            let (sigma, info) = synthesize_sigma_star(g, &values, &pi)?;
            finish(g, values, pi, sigma, info, SolverMode::Enumerate)
        }
        Err(Error::BudgetExceeded { .. }) if improved.is_some() => {
            let (values, pi) = improved.unwrap();
            let (sigma, info) = synthesize_sigma_star(g, &values, &pi)?;
            finish(g, values, pi, sigma, info, SolverMode::Improve)
        }
        Err(e) => Err(e),
    }
}

fn finish(
    g: &GameGraph,
    values: ValueVector,
    pi: StrategyMD,
    sigma: StrategyFD,
    info: SigmaStarInfo,
    mode_used: SolverMode,
) -> Result<GainSolution> {
    let (_, witness) = gain_against_md(g, &pi)?;
    Ok(GainSolution {
        values,
        pi_star: pi,
        sigma_star: sigma,
        sigma_info: info,
        witness,
        mode_used,
    })
}

/// Local improvement of the Minimizer: switch to strictly lower-valued
/// successors until stable. Only an upper bound until `σ*` verifies it.
fn improve_min(g: &GameGraph) -> Result<(ValueVector, StrategyMD)> {
    let mut pi = StrategyMD::lowest(g, Owner::Min);
    let mut rounds = 0;
    loop {
        let (v, _) = gain_against_md(g, &pi)?;
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
        rounds += 1;
        if !changed || rounds > 10_000 {
            return Ok((v, pi));
        }
    }
}

fn enumerate_min(g: &GameGraph, budget: u64) -> Result<(ValueVector, StrategyMD)> {
    let count = g
        .owned_by(Owner::Min)
        .try_fold(1u64, |acc, s| acc.checked_mul(g.out_edges(s).len() as u64))
        .unwrap_or(u64::MAX);
    if count > budget {
        return Err(Error::BudgetExceeded {
            what: "Minimizer strategy enumeration (gain)".into(),
            budget,
        });
    }
    let all: Vec<Vec<Rat>> = (0..count)
        .into_par_iter()
        .map(|i| gain_against_md(g, &nth_strategy(g, Owner::Min, i)).map(|(v, _)| v.0))
        .collect::<Result<_>>()?;
    let values: Vec<Rat> = (0..g.num_states())
        .map(|s| all.iter().map(|v| &v[s]).min().unwrap().clone())
        .collect();
    let idx = all.iter().position(|v| *v == values).ok_or(Error::UniformityViolated)?;
    Ok((ValueVector::new(values), nth_strategy(g, Owner::Min, idx as u64)))
}

/// The game restricted to the value-1 region, which is closed under
/// random and Minimizer moves.
struct Region {
    game: GameGraph,
    /// Local index of each base state (`usize::MAX` outside).
    local: Vec<usize>,
    members: Vec<usize>,
}

impl Region {
    fn build(g: &GameGraph, region: &[bool]) -> Region {
        let members: Vec<usize> = (0..g.num_states()).filter(|&s| region[s]).collect();
        let mut local = vec![usize::MAX; g.num_states()];
        for (i, &s) in members.iter().enumerate() {
            local[s] = i;
        }
        let mut b = GameBuilder::new();
        for &s in &members {
            b.add_state(g.owner(s), g.color(s));
        }
        for &s in &members {
            for &e in g.out_edges(s) {
                let ed = g.edge(e);
                if region[ed.to] {
                    b.add_edge(local[s], local[ed.to], ed.reward, ed.prob.clone());
                }
            }
        }
        Region {
            game: b.build(),
            local,
            members,
        }
    }
}

/// Inside-region choices as base edges, indexed `[level − 1][state]`.
type CounterPlan = Vec<Vec<Option<usize>>>;

/// Counter strategies inside the region at bound `k`: `σ_K` maximizes the
/// chance of never dropping to 0 while winning parity. Where that chance is
/// 0, the fallback plays almost-surely for "parity or drop", so that a
/// drop (and a counter reset) happens unless the play is won.
fn counter_plans(g: &GameGraph, reg: &Region, k: u64) -> Result<Option<[CounterPlan; 2]>> {
    let sat = saturating_unfold(&reg.game, k, Overflow::Saturate);
    let sol = solve_parity_game(&sat.game, SolverMode::Improve)?;
    if (0..reg.members.len()).any(|t| sol.values[sat.id(t, k)].is_zero()) {
        return Ok(None);
    }
    let lenient = sat.game.with_colors(&
        (0..sat.game.num_states())
            .map(|p| if p == sat.lose() { 0 } else { sat.game.color(p) })
            .collect::<Vec<u32>>(),
    );
    let fallback = solve_parity_game(&lenient, SolverMode::Improve)?;
    let base_edge = |p: usize, pe: usize| -> usize {
        let (t, level) = sat.decode(p).unwrap();
        let target = sat.game.edge(pe).to;
        let base = reg.members[t];
        *g.out_edges(base)
            .iter()
            .find(|&&e| {
                let ed = g.edge(e);
                reg.local[ed.to] != usize::MAX
                    && sat.step(reg.local[ed.to], level, ed.reward, Overflow::Saturate) == target
            })
            .expect("product edge has a base edge")
    };
    let mut combined = vec![vec![None; g.num_states()]; k as usize];
    let mut plain = combined.clone();
    for level in 1..=k {
        for (t, &s) in reg.members.iter().enumerate() {
            if g.owner(s) != Owner::Max {
                continue;
            }
            let p = sat.id(t, level);
            let pick = |st: &StrategyMD| st.choice[p].map(|pe| base_edge(p, pe));
            plain[level as usize - 1][s] = pick(&sol.sigma);
            combined[level as usize - 1][s] =
                if sol.values[p].is_zero() { pick(&fallback.sigma) } else { pick(&sol.sigma) };
        }
    }
    Ok(Some([combined, plain]))
}

/// Builds `σ*` from the Gain values and verifies it by a Minimizer best
/// response. Candidates, in order: the positional parity-optimal strategy;
/// alternation between mean-payoff-optimal play (against `pi`) and
/// parity-optimal play; on small regions every positional strategy of the
/// region, alone and in alternating pairs; and counter strategies for
/// doubling bounds up to [`MAX_COUNTER_CAP`]. The first candidate that attains
/// the values is returned; otherwise [`Error::SynthesisGapDetected`].
pub fn synthesize_sigma_star(
    g: &GameGraph,
    values: &ValueVector,
    pi: &StrategyMD,
) -> Result<(StrategyFD, SigmaStarInfo)> {
    synthesize(g, values, pi, true)
}

/// Without `thorough`, only the two cheap candidates are tried.
fn synthesize(
    g: &GameGraph,
    values: &ValueVector,
    pi: &StrategyMD,
    thorough: bool,
) -> Result<(StrategyFD, SigmaStarInfo)> {
    let n = g.num_states();
    let region: Vec<bool> = values.iter().map(|v| v.is_one()).collect();
    let reach = reach_region(g, &region)?;
    let mut last = None;
    let attempt = |sigma: StrategyFD, k: u64, last: &mut Option<Error>| -> Option<(StrategyFD, SigmaStarInfo)> {
        match verify(g, &sigma, values) {
            Ok(()) => Some((
                sigma,
                SigmaStarInfo {
                    k,
                    value_one: region.clone(),
                },
            )),
            Err(e) => {
                *last = Some(e);
                None
            }
        }
    };

    let parity = solve_parity_game(g, SolverMode::Improve)?;
    let positional: CounterPlan = vec![(0..n)
        .map(|s| parity.sigma.choice[s].filter(|&e| region[g.edge(e).to]))
        .collect()];
    if let Some(found) = attempt(assemble(g, &region, 1, &positional, &reach), 0, &mut last) {
        return Ok(found);
    }
    let period = 2 * n;
    let mp = mean_payoff_choices(g, pi)?;
    if let Some(found) = attempt(alternate(g, &region, &reach, &mp, &positional[0], period), 0, &mut last) {
        return Ok(found);
    }

    if thorough && region.iter().any(|&r| r) {
        let reg = Region::build(g, &region);
        let count = reg
            .game
            .owned_by(Owner::Max)
            .try_fold(1u64, |acc, t| acc.checked_mul(reg.game.out_edges(t).len() as u64))
            .unwrap_or(u64::MAX);
        let all: Vec<Vec<Option<usize>>> = if count <= POSITIONAL_SEARCH_BUDGET {
            (0..count)
                .map(|i| {
                    let st = nth_strategy(&reg.game, Owner::Max, i);
                    let mut choice = vec![None; n];
                    for (t, &s) in reg.members.iter().enumerate() {
                        if let Some(le) = st.choice[t] {
                            choice[s] = Some(base_edge_of(g, &reg, t, reg.game.edge(le)));
                        }
                    }
                    choice
                })
                .collect()
        } else {
            Vec::new()
        };
        for choice in &all {
            if let Some(found) = attempt(assemble(g, &region, 1, std::slice::from_ref(choice), &reach), 0, &mut last) {
                return Ok(found);
            }
        }
        let pairs = all.len() as u64 * all.len() as u64 <= POSITIONAL_SEARCH_BUDGET;
        let pars: &[Vec<Option<usize>>] = if pairs { &all } else { &positional };
        for par in pars {
            for mp in &all {
                if let Some(found) = attempt(alternate(g, &region, &reach, mp, par, period), 0, &mut last) {
                    return Ok(found);
                }
            }
        }
        let mut k = (n as u64 * g.max_reward() as u64).max(1);
        while k <= MAX_COUNTER_CAP {
            let plans = match counter_plans(g, &reg, k) {
                Ok(plans) => plans,
                Err(Error::BudgetExceeded { .. }) => break,
                Err(e) => return Err(e),
            };
            if let Some(plans) = plans {
                for plan in &plans {
                    if let Some(found) = attempt(assemble(g, &region, k, plan, &reach), k, &mut last) {
                        return Ok(found);
                    }
                }
            }
            k *= 2;
        }
    }
    Err(last.unwrap_or_else(|| Error::Internal("no σ* candidate".into())))
}

/// A base edge from member `t` matching a local edge of the region game.
fn base_edge_of(g: &GameGraph, reg: &Region, t: usize, le: &crate::game::Edge) -> usize {
    let s = reg.members[t];
    *g.out_edges(s)
        .iter()
        .find(|&&e| reg.local[g.edge(e).to] == le.to && g.edge(e).reward == le.reward)
        .expect("region edge has a base edge")
}

fn verify(g: &GameGraph, sigma: &StrategyFD, values: &ValueVector) -> Result<()> {
    let achieved = gain_against_fd(g, sigma)?;
    for s in 0..g.num_states() {
        if achieved[s] != values[s] {
            return Err(Error::SynthesisGapDetected {
                state: s,
                gap: &values[s] - &achieved[s],
            });
        }
    }
    Ok(())
}

/// Optimal strategy for reaching the region (as base edges per state).
fn reach_region(g: &GameGraph, region: &[bool]) -> Result<Vec<Option<usize>>> {
    let n = g.num_states();
    let reach_game = {
        let mut b = GameBuilder::new();
        for s in 0..n {
            if region[s] {
                b.add_state(Owner::Random, 0);
            } else {
                b.add_state(g.owner(s), 1);
            }
        }
        let mut map = Vec::new();
        for s in 0..n {
            if region[s] {
                b.add_edge(s, s, 0, Some(Rat::one()));
                map.push(usize::MAX);
            } else {
                for &e in g.out_edges(s) {
                    let ed = g.edge(e);
                    b.add_edge(s, ed.to, 0, ed.prob.clone());
                    map.push(e);
                }
            }
        }
        (b.build(), map)
    };
    let reach = solve_parity_game(&reach_game.0, SolverMode::Improve)?;
    Ok((0..n)
        .map(|s| {
            if region[s] || g.owner(s) != Owner::Max {
                None
            } else {
                reach.sigma.choice[s].map(|pe| reach_game.1[pe])
            }
        })
        .collect())
}

/// Counter modes encode levels `1..=k` (mode = level − 1, initial mode
/// `k − 1`). Moves inside the region update the counter saturating at `k`
/// and reset it to `k` on a drop to 0; other moves set it to `k`.
fn assemble(
    g: &GameGraph,
    region: &[bool],
    k: u64,
    plan: &[Vec<Option<usize>>],
    reach: &[Option<usize>],
) -> StrategyFD {
    let n = g.num_states();
    let modes = k as usize;
    let mut nxt = vec![vec![None; n]; modes];
    let mut update = vec![vec![modes - 1; g.num_edges()]; modes];
    for m in 0..modes {
        for s in g.owned_by(Owner::Max) {
            nxt[m][s] = if region[s] {
                plan[m][s].or_else(|| g.out_edges(s).iter().copied().find(|&e| region[g.edge(e).to]))
            } else {
                reach[s]
            };
        }
        for e in 0..g.num_edges() {
            let ed = g.edge(e);
            if region[ed.from] && region[ed.to] {
                let next = (m as i64 + 1 + ed.reward).min(k as i64);
                update[m][e] = if next <= 0 { modes - 1 } else { next as usize - 1 };
            }
        }
    }
    let sigma = StrategyFD {
        owner: Owner::Max,
        modes,
        m0: modes - 1,
        update,
        nxt,
    };
    debug_assert!(sigma.check(g).is_ok());
    sigma
}

/// Maximizer choices that maximize the mean payoff in every end component
/// of the MDP obtained by fixing `pi` (`None` elsewhere).
fn mean_payoff_choices(g: &GameGraph, pi: &StrategyMD) -> Result<Vec<Option<usize>>> {
    let f = fix_md(g, pi);
    let mut choice = vec![None; g.num_states()];
    for mec in mec_decompose(&f.game) {
        let sol = mec_mean_payoff(&f.game, &mec, MpMode::Max)?;
        for (i, &s) in mec.states.iter().enumerate() {
            if g.owner(s) == Owner::Max {
                choice[s] = sol.choice[i].map(|e| f.edge_map[e]);
            }
        }
    }
    Ok(choice)
}

/// Plays `mp` for `period` steps, then `par` for `|S|` steps, and repeats;
/// outside the region it plays `reach`. Missing choices fall back to `par`.
fn alternate(
    g: &GameGraph,
    region: &[bool],
    reach: &[Option<usize>],
    mp: &[Option<usize>],
    par: &[Option<usize>],
    period: usize,
) -> StrategyFD {
    let n = g.num_states();
    let modes = period + n;
    let plan: CounterPlan = (0..modes)
        .map(|m| (0..n).map(|s| if m < period { mp[s].or(par[s]) } else { par[s] }).collect())
        .collect();
    let mut sigma = assemble(g, region, modes as u64, &plan, reach);
    sigma.m0 = 0;
    for m in 0..modes {
        sigma.update[m] = vec![(m + 1) % modes; g.num_edges()];
    }
    sigma
}
