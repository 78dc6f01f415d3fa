//! Optimal reachability in maximizing MDPs: exact policy iteration and the
//! qualitative almost-sure fixpoint.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::game::{GameGraph, Owner, ValueVector};
use crate::graph::can_reach;
use crate::mdp::chain::Chain;
use crate::rational::{to_f64, Rat};
use crate::strategy::{lowest_edge, StrategyMD};

pub(crate) fn require_max_mdp(g: &GameGraph) -> Result<()> {
    match g.owned_by(Owner::Min).next() {
        Some(state) => Err(Error::NotMaximizingMdp { state }),
        None => Ok(()),
    }
}

pub(crate) fn predecessors(g: &GameGraph) -> Vec<Vec<usize>> {
    let mut pred = vec![Vec::new(); g.num_states()];
    for e in g.edges() {
        pred[e.to].push(e.from);
    }
    pred
}

/// Maximal probability of reaching `target`, with an optimal MD strategy.
pub fn max_reach_value(g: &GameGraph, target: &[bool]) -> Result<(ValueVector, StrategyMD)> {
    require_max_mdp(g)?;
    Ok(max_reach_unchecked(g, target))
}

/// Greedy initial policy from a floating-point value iteration. Only a
/// starting point: the exact iteration below certifies the result.
fn float_hint(g: &GameGraph, target: &[bool], zero: &[bool]) -> Vec<Option<usize>> {
    let n = g.num_states();
    let probs: Vec<f64> = (0..g.num_edges()).map(|e| to_f64(&g.prob(e))).collect();
    let mut v: Vec<f64> = (0..n).map(|s| if target[s] { 1.0 } else { 0.0 }).collect();
    for _ in 0..(4 * n).clamp(50, 2000) {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if target[s] || zero[s] {
                continue;
            }
            let out = g.out_edges(s);
            let nv = if g.owner(s) == Owner::Random {
                out.iter().map(|&e| probs[e] * v[g.edge(e).to]).sum()
            } else {
                out.iter().map(|&e| v[g.edge(e).to]).fold(0.0, f64::max)
            };
            delta = delta.max((nv - v[s]).abs());
            v[s] = nv;
        }
        if delta < 1e-13 {
            break;
        }
    }
    (0..n)
        .map(|s| {
            if g.owner(s) != Owner::Max {
                return None;
            }
            let best = g.out_edges(s).iter().map(|&e| v[g.edge(e).to]).fold(0.0, f64::max);
            lowest_edge(
                g,
                g.out_edges(s)
                    .iter()
                    .copied()
                    .filter(|&e| v[g.edge(e).to] >= best - 1e-12),
            )
        })
        .collect()
}

pub(crate) fn max_reach_unchecked(g: &GameGraph, target: &[bool]) -> (ValueVector, StrategyMD) {
    let n = g.num_states();
    let pred = predecessors(g);
    let reaches = can_reach(n, &vec![true; n], target, |v| pred[v].clone());
    let zero: Vec<bool> = reaches.iter().map(|r| !r).collect();
    let mut choice = float_hint(g, target, &zero);
    loop {
        let val = Chain::from_game(g, &choice).reach(target);
        let mut changed = false;
        for s in g.owned_by(Owner::Max) {
            if target[s] || zero[s] {
                continue;
            }
            let cur = &val[g.edge(choice[s].unwrap()).to];
            let best = g
                .out_edges(s)
                .iter()
                .map(|&e| &val[g.edge(e).to])
                .max()
                .unwrap();
            if best > cur {
                let best = best.clone();
                choice[s] = lowest_edge(
                    g,
                    g.out_edges(s).iter().copied().filter(|&e| val[g.edge(e).to] == best),
                );
                changed = true;
            }
        }
        if !changed {
            return (
                ValueVector::new(val),
                StrategyMD {
                    owner: Owner::Max,
                    choice,
                },
            );
        }
    }
}

/// States from which `target` is reached with probability one under some
/// strategy. Purely graph-theoretic; target states are absorbing.
pub fn as_reach(g: &GameGraph, target: &[bool]) -> Result<Vec<bool>> {
    require_max_mdp(g)?;
    Ok(as_reach_unchecked(g, target))
}

pub(crate) fn as_reach_unchecked(g: &GameGraph, target: &[bool]) -> Vec<bool> {
    let n = g.num_states();
    let pred = predecessors(g);
    let mut alive = vec![true; n];
    loop {
        // states that can still reach the target inside `alive`
        let reach = can_reach(n, &alive, target, |v| pred[v].clone());
        let mut next: Vec<bool> = (0..n).map(|s| alive[s] && reach[s]).collect();
        // drop states that cannot stay inside: random states with an escaping
        // edge, player states without any remaining edge
        let mut stable = false;
        while !stable {
            stable = true;
            for s in 0..n {
                if !next[s] || target[s] {
                    continue;
                }
                let out = g.out_edges(s);
                let keep = if g.owner(s) == Owner::Random {
                    out.iter().all(|&e| next[g.edge(e).to])
                } else {
                    out.iter().any(|&e| next[g.edge(e).to])
                };
                if !keep {
                    next[s] = false;
                    stable = false;
                }
            }
        }
        if next == alive {
            return alive;
        }
        alive = next;
    }
}

/// Convenience: the set `{s : v(s) = 0}` as a mask.
pub fn zero_mask(v: &[Rat]) -> Vec<bool> {
    v.iter().map(|x| x.is_zero()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Edge, StateInfo};
    use crate::rational::{int, rat};

    /// 0 (max) chooses between sink 1 (no) and coin 2; coin 2 goes to T=3 or 1.
    fn gadget() -> GameGraph {
        let st = |owner, color| StateInfo { owner, color };
        GameGraph::new(
            vec![
                st(Owner::Max, 0),
                st(Owner::Max, 0),
                st(Owner::Random, 0),
                st(Owner::Max, 0),
            ],
            vec![
                Edge { from: 0, to: 1, reward: 0, prob: None },
                Edge { from: 0, to: 2, reward: 0, prob: None },
                Edge { from: 1, to: 1, reward: 0, prob: None },
                Edge { from: 2, to: 3, reward: 0, prob: Some(rat(1, 2)) },
                Edge { from: 2, to: 1, reward: 0, prob: Some(rat(1, 2)) },
                Edge { from: 3, to: 3, reward: 0, prob: None },
            ],
        )
        .unwrap()
    }

    #[test]
    fn coin_gadget_value_one_half() {
        let g = gadget();
        let (v, st) = max_reach_value(&g, &[false, false, false, true]).unwrap();
        assert_eq!(v.0, vec![rat(1, 2), int(0), rat(1, 2), int(1)]);
        assert_eq!(st.successor(&g, 0), Some(2));
        assert_eq!(as_reach(&g, &[false, false, false, true]).unwrap(), vec![false, false, false, true]);
    }

    #[test]
    fn all_target_and_unreachable() {
        let g = gadget();
        let (v, _) = max_reach_value(&g, &[true; 4]).unwrap();
        assert!(v.iter().all(|x| *x == int(1)));
        let (v, _) = max_reach_value(&g, &[false; 4]).unwrap();
        assert!(v.iter().all(|x| *x == int(0)));
    }
}
