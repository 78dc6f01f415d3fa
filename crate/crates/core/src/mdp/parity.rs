//! Quantitative parity in maximizing MDPs: reach the union of end
//! components whose minimal color is even, then keep visiting that color.

use std::collections::VecDeque;

use crate::error::Result;
use crate::game::{GameGraph, Owner, ValueVector};
use crate::mdp::mec::{mec_decompose, sub_ecs_by_min_color, Mec};
use crate::mdp::reach::{max_reach_unchecked, require_max_mdp};
use crate::strategy::StrategyMD;

/// Good end components: for each MEC, its sub-ECs with even minimal color.
pub fn even_sub_ecs(g: &GameGraph) -> Vec<(u32, Mec)> {
    sub_ecs_of_parity(g, false)
}

/// Sub-ECs with odd minimal color.
pub fn odd_sub_ecs(g: &GameGraph) -> Vec<(u32, Mec)> {
    sub_ecs_of_parity(g, true)
}

fn sub_ecs_of_parity(g: &GameGraph, odd: bool) -> Vec<(u32, Mec)> {
    let mut all: Vec<(u32, Mec)> = mec_decompose(g)
        .iter()
        .flat_map(|m| sub_ecs_by_min_color(g, m, odd))
        .collect();
    all.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.states.cmp(&b.1.states)));
    all
}

pub(crate) fn union_mask(n: usize, ecs: &[(u32, Mec)]) -> Vec<bool> {
    let mut m = vec![false; n];
    for (_, ec) in ecs {
        for &s in &ec.states {
            m[s] = true;
        }
    }
    m
}

/// Inside an end component, an MD strategy that visits `goal` infinitely
/// often almost surely: every controlled state steps closer to `goal` along
/// component edges (the goal itself takes any component edge).
pub(crate) fn visit_strategy(g: &GameGraph, ec: &Mec, goal: usize, choice: &mut [Option<usize>], assigned: &mut [bool]) {
    let mut dist = vec![usize::MAX; g.num_states()];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); g.num_states()];
    for &e in &ec.edges {
        pred[g.edge(e).to].push(e);
    }
    dist[goal] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(v) = queue.pop_front() {
        for &e in &pred[v] {
            let u = g.edge(e).from;
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    for &s in &ec.states {
        if assigned[s] || g.owner(s) == Owner::Random {
            continue;
        }
        let inner = ec.edges.iter().copied().filter(|&e| g.edge(e).from == s);
        let pick = if s == goal {
            inner.min_by_key(|&e| (g.edge(e).to, e))
        } else {
            inner
                .filter(|&e| dist[g.edge(e).to] < dist[s])
                .min_by_key(|&e| (g.edge(e).to, e))
        };
        choice[s] = pick;
        assigned[s] = true;
    }
    for &s in &ec.states {
        assigned[s] = true;
    }
}

/// Optimal EPAR value of a maximizing MDP with an optimal MD strategy.
pub fn mdp_parity_value(g: &GameGraph) -> Result<(ValueVector, StrategyMD)> {
    require_max_mdp(g)?;
    Ok(mdp_parity_unchecked(g))
}

pub(crate) fn mdp_parity_unchecked(g: &GameGraph) -> (ValueVector, StrategyMD) {
    let n = g.num_states();
    let good = even_sub_ecs(g);
    let target = union_mask(n, &good);
    let (val, mut st) = max_reach_unchecked(g, &target);
    let mut assigned = vec![false; n];
    for (d, ec) in &good {
        let goal = ec
            .states
            .iter()
            .copied()
            .find(|&s| g.color(s) == *d)
            .expect("sub-EC contains its minimal color");
        visit_strategy(g, ec, goal, &mut st.choice, &mut assigned);
    }
    (val, st)
}
