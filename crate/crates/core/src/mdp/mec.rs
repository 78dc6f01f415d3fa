//! Maximal end components and the sub-end-components used by the parity and
//! energy analyses.

use serde::Serialize;

use crate::game::{GameGraph, Owner};
use crate::graph::sccs;

/// An end component: strongly connected, closed under random branching.
/// `edges` holds every edge that stays inside (all edges of random states).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mec {
    pub states: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Mec {
    pub fn contains(&self, s: usize) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &s in &self.states {
            m[s] = true;
        }
        m
    }
}

/// Maximal end components of the whole game (owned states of either player
/// count as controllable).
pub fn mec_decompose(g: &GameGraph) -> Vec<Mec> {
    mecs_within(g, &vec![true; g.num_states()], |_| true)
}

/// Maximal end components of the sub-MDP induced by `active` states and
/// the player edges accepted by `edge_ok`. A random state survives only if
/// its whole support does.
pub fn mecs_within(g: &GameGraph, active: &[bool], edge_ok: impl Fn(usize) -> bool) -> Vec<Mec> {
    let n = g.num_states();
    let mut alive = active.to_vec();
    let usable = |e: usize| g.owner(g.edge(e).from) == Owner::Random || edge_ok(e);
    for s in 0..n {
        if alive[s] && g.owner(s) == Owner::Random && !g.out_edges(s).iter().all(|&e| edge_ok(e)) {
            alive[s] = false;
        }
    }
    loop {
        let comps = sccs(n, &alive, |v| {
            g.out_edges(v)
                .iter()
                .filter(|&&e| usable(e))
                .map(|&e| g.edge(e).to)
                .collect::<Vec<_>>()
        });
        let mut comp_of = vec![usize::MAX; n];
        for (i, c) in comps.iter().enumerate() {
            for &v in c {
                comp_of[v] = i;
            }
        }
        let inside = |e: usize, comp_of: &[usize]| comp_of[g.edge(e).to] == comp_of[g.edge(e).from];
        let mut removed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            let out = g.out_edges(s);
            let ok = if g.owner(s) == Owner::Random {
                out.iter().all(|&e| inside(e, &comp_of))
            } else {
                out.iter().any(|&e| usable(e) && inside(e, &comp_of))
            };
            if !ok {
                alive[s] = false;
                removed = true;
            }
        }
        if !removed {
            return comps
                .into_iter()
                .map(|states| {
                    let edges = states
                        .iter()
                        .flat_map(|&s| g.out_edges(s).iter().copied())
                        .filter(|&e| usable(e) && inside(e, &comp_of))
                        .collect();
                    Mec { states, edges }
                })
                .collect();
        }
    }
}

/// Sub-end-components of `mec` with minimal color `d`, for every `d` of
/// the requested parity: end components of the colors-`≥ d` restriction
/// that contain a state of color `d`. Sorted by `d`.
pub fn sub_ecs_by_min_color(g: &GameGraph, mec: &Mec, odd: bool) -> Vec<(u32, Mec)> {
    let n = g.num_states();
    let mut colors: Vec<u32> = mec.states.iter().map(|&s| g.color(s)).collect();
    colors.sort_unstable();
    colors.dedup();
    let mut edge_in = vec![false; g.num_edges()];
    for &e in &mec.edges {
        edge_in[e] = true;
    }
    let mut out = Vec::new();
    for d in colors.into_iter().filter(|d| (d % 2 == 1) == odd) {
        let mut active = vec![false; n];
        for &s in &mec.states {
            active[s] = g.color(s) >= d;
        }
        for sub in mecs_within(g, &active, |e| edge_in[e]) {
            if sub.states.iter().any(|&s| g.color(s) == d) {
                out.push((d, sub));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Edge, StateInfo};
    use crate::rational::rat;

    #[test]
    fn transient_prefix_and_sink() {
        // 0 (max) -> 1 (random coin to 0 or 2), 2 absorbing
        let g = GameGraph::new(
            vec![
                StateInfo { owner: Owner::Max, color: 0 },
                StateInfo { owner: Owner::Random, color: 0 },
                StateInfo { owner: Owner::Max, color: 0 },
            ],
            vec![
                Edge { from: 0, to: 1, reward: 0, prob: None },
                Edge { from: 1, to: 0, reward: 0, prob: Some(rat(1, 2)) },
                Edge { from: 1, to: 2, reward: 0, prob: Some(rat(1, 2)) },
                Edge { from: 2, to: 2, reward: 0, prob: None },
            ],
        )
        .unwrap();
        let m = mec_decompose(&g);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].states, vec![2]);
    }

    #[test]
    fn closed_strongly_connected_is_one_mec() {
        let g = GameGraph::new(
            vec![
                StateInfo { owner: Owner::Max, color: 1 },
                StateInfo { owner: Owner::Random, color: 2 },
            ],
            vec![
                Edge { from: 0, to: 1, reward: 0, prob: None },
                Edge { from: 0, to: 0, reward: 0, prob: None },
                Edge { from: 1, to: 0, reward: 0, prob: Some(rat(1, 1)) },
            ],
        )
        .unwrap();
        let m = mec_decompose(&g);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].states, vec![0, 1]);
        assert_eq!(m[0].edges.len(), 3);
        let odd = sub_ecs_by_min_color(&g, &m[0], true);
        assert_eq!(odd.len(), 1);
        assert_eq!(odd[0].0, 1);
        let even = sub_ecs_by_min_color(&g, &m[0], false);
        assert!(even.is_empty());
    }
}
