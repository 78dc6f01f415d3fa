//! Finite Markov chains: the game obtained once every owned state has a
//! single fixed choice.

use num_traits::{One, Zero};

use crate::game::{GameGraph, Owner, ValueVector};
use crate::graph::{can_reach, sccs};
use crate::linalg;
use crate::rational::Rat;

/// Successor distributions, with the reward of the step attached.
#[derive(Debug, Clone)]
pub struct Chain {
    pub succ: Vec<Vec<(usize, Rat, i64)>>,
}

impl Chain {
    /// Fixes `choice[s]` (an edge id) at every non-random state. States
    /// without a choice must have exactly one outgoing edge.
    pub fn from_game(g: &GameGraph, choice: &[Option<usize>]) -> Chain {
        let succ = (0..g.num_states())
            .map(|s| {
                if g.owner(s) == Owner::Random {
                    g.out_edges(s)
                        .iter()
                        .map(|&e| (g.edge(e).to, g.prob(e), g.edge(e).reward))
                        .collect()
                } else {
                    let e = choice.get(s).copied().flatten().unwrap_or_else(|| {
                        debug_assert_eq!(g.out_edges(s).len(), 1, "state {s} needs a choice");
                        g.out_edges(s)[0]
                    });
                    vec![(g.edge(e).to, Rat::one(), g.edge(e).reward)]
                }
            })
            .collect();
        Chain { succ }
    }

    /// Chain of a game whose owned states all have one successor.
    pub fn of_game(g: &GameGraph) -> Chain {
        Chain::from_game(g, &[])
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    /// Bottom strongly connected components.
    pub fn bsccs(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let comps = sccs(n, &vec![true; n], |v| self.succ[v].iter().map(|x| x.0).collect::<Vec<_>>());
        let mut comp_of = vec![0usize; n];
        for (i, c) in comps.iter().enumerate() {
            for &v in c {
                comp_of[v] = i;
            }
        }
        comps
            .iter()
            .enumerate()
            .filter(|(i, c)| {
                c.iter()
                    .all(|&v| self.succ[v].iter().all(|x| comp_of[x.0] == *i))
            })
            .map(|(_, c)| c.clone())
            .collect()
    }

    fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.len()];
        for (v, out) in self.succ.iter().enumerate() {
            for x in out {
                pred[x.0].push(v);
            }
        }
        pred
    }

    /// Exact probability of eventually reaching `target`, component by
    /// component in reverse topological order.
    pub fn reach(&self, target: &[bool]) -> Vec<Rat> {
        let n = self.len();
        let pred = self.predecessors();
        let reaches = can_reach(n, &vec![true; n], target, |v| pred[v].clone());
        let mut val = vec![Rat::zero(); n];
        let mut unknown = vec![false; n];
        for s in 0..n {
            if target[s] {
                val[s] = Rat::one();
            } else if reaches[s] {
                unknown[s] = true;
            }
        }
        let comps = sccs(n, &unknown, |v| self.succ[v].iter().map(|x| x.0).collect::<Vec<_>>());
        let mut local = vec![usize::MAX; n];
        for comp in comps {
            for (i, &s) in comp.iter().enumerate() {
                local[s] = i;
            }
            let mut rows = Vec::with_capacity(comp.len());
            let mut b = Vec::with_capacity(comp.len());
            for &s in &comp {
                let mut row = vec![(local[s], Rat::one())];
                let mut rhs = Rat::zero();
                for (t, p, _) in &self.succ[s] {
                    if unknown[*t] && local[*t] != usize::MAX && comp.binary_search(t).is_ok() {
                        row.push((local[*t], -p.clone()));
                    } else {
                        rhs += p * &val[*t];
                    }
                }
                rows.push(row);
                b.push(rhs);
            }
            let x = linalg::solve(rows, b).expect("reachability system is nonsingular");
            for (i, &s) in comp.iter().enumerate() {
                val[s] = x[i].clone();
                local[s] = usize::MAX;
            }
        }
        val
    }

    /// Mean payoff of a bottom component together with a bias vector
    /// (`bias[k]` belongs to `comp[k]`, normalised so that `bias[0] = 0`).
    pub fn bscc_gain(&self, comp: &[usize]) -> (Rat, Vec<Rat>) {
        let m = comp.len();
        let idx = |t: usize| comp.binary_search(&t).expect("successor inside the component");
        // unknowns: g at 0, h(comp[k]) at k for k >= 1
        let mut rows = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for &s in comp {
            let mut row = vec![(0usize, Rat::one())];
            let k = idx(s);
            if k > 0 {
                row.push((k, Rat::one()));
            }
            let mut rhs = Rat::zero();
            for (t, p, r) in &self.succ[s] {
                rhs += p * Rat::from_integer((*r).into());
                let j = idx(*t);
                if j > 0 {
                    row.push((j, -p.clone()));
                }
            }
            rows.push(row);
            b.push(rhs);
        }
        let x = linalg::solve(rows, b).expect("gain/bias system of a bottom component is nonsingular");
        let mut bias = x.clone();
        bias[0] = Rat::zero();
        (x[0].clone(), bias)
    }

    /// Whether the accumulated reward inside a zero-gain bottom component is
    /// bounded, i.e. every cycle has weight zero.
    pub fn bscc_bounded(&self, comp: &[usize]) -> bool {
        // potential propagation: pot(t) = pot(s) + r along every edge
        let mut pot: Vec<Option<i64>> = vec![None; comp.len()];
        let idx = |t: usize| comp.binary_search(&t).expect("successor inside the component");
        pot[0] = Some(0);
        let mut stack = vec![0usize];
        while let Some(k) = stack.pop() {
            let p = pot[k].unwrap();
            for (t, _, r) in &self.succ[comp[k]] {
                let j = idx(*t);
                match pot[j] {
                    None => {
                        pot[j] = Some(p + r);
                        stack.push(j);
                    }
                    Some(q) if q != p + r => return false,
                    _ => {}
                }
            }
        }
        true
    }
}

/// Bottom strongly connected components of a chain-shaped game.
pub fn bscc_decompose(g: &GameGraph) -> Vec<Vec<usize>> {
    Chain::of_game(g).bsccs()
}

/// Probability of EPAR in a chain-shaped game: reach a bottom component
/// whose minimal color is even.
pub fn chain_parity_value(g: &GameGraph) -> ValueVector {
    chain_parity_with(g, &Chain::of_game(g))
}

/// Same as [`chain_parity_value`] for a game with a fixed choice per owned
/// state.
pub fn chain_parity_with(g: &GameGraph, chain: &Chain) -> ValueVector {
    let mut good = vec![false; g.num_states()];
    for comp in chain.bsccs() {
        let min = comp.iter().map(|&s| g.color(s)).min().unwrap();
        if min % 2 == 0 {
            for &s in &comp {
                good[s] = true;
            }
        }
    }
    ValueVector::new(chain.reach(&good))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Edge, StateInfo};
    use crate::rational::{int, rat};

    fn coin(c_good: u32, c_bad: u32) -> GameGraph {
        GameGraph::new(
            vec![
                StateInfo { owner: Owner::Random, color: 1 },
                StateInfo { owner: Owner::Random, color: c_good },
                StateInfo { owner: Owner::Random, color: c_bad },
            ],
            vec![
                Edge { from: 0, to: 1, reward: 0, prob: Some(rat(1, 2)) },
                Edge { from: 0, to: 2, reward: 0, prob: Some(rat(1, 2)) },
                Edge { from: 1, to: 1, reward: 1, prob: Some(int(1)) },
                Edge { from: 2, to: 2, reward: -1, prob: Some(int(1)) },
            ],
        )
        .unwrap()
    }

    #[test]
    fn two_sinks_two_bsccs_and_transient_start_excluded() {
        let b = bscc_decompose(&coin(0, 1));
        assert_eq!(b, vec![vec![1], vec![2]]);
    }

    #[test]
    fn fair_coin_into_good_and_bad_sinks() {
        let v = chain_parity_value(&coin(0, 1));
        assert_eq!(v.0, vec![rat(1, 2), int(1), int(0)]);
    }

    #[test]
    fn single_cycle_is_one_bscc() {
        let g = GameGraph::new(
            vec![
                StateInfo { owner: Owner::Max, color: 1 },
                StateInfo { owner: Owner::Max, color: 2 },
            ],
            vec![
                Edge { from: 0, to: 1, reward: 1, prob: None },
                Edge { from: 1, to: 0, reward: -1, prob: None },
            ],
        )
        .unwrap();
        let c = Chain::of_game(&g);
        assert_eq!(c.bsccs(), vec![vec![0, 1]]);
        let (gain, _) = c.bscc_gain(&[0, 1]);
        assert_eq!(gain, int(0));
        assert!(c.bscc_bounded(&[0, 1]));
        assert_eq!(chain_parity_value(&g).0, vec![int(0), int(0)]);
    }

    #[test]
    fn gain_of_coin_loop() {
        // state 0 random: 1/4 stay (+2), 3/4 to 1 (0); state 1 back to 0 (-1)
        let g = GameGraph::new(
            vec![
                StateInfo { owner: Owner::Random, color: 0 },
                StateInfo { owner: Owner::Max, color: 0 },
            ],
            vec![
                Edge { from: 0, to: 0, reward: 2, prob: Some(rat(1, 4)) },
                Edge { from: 0, to: 1, reward: 0, prob: Some(rat(3, 4)) },
                Edge { from: 1, to: 0, reward: -1, prob: None },
            ],
        )
        .unwrap();
        let c = Chain::of_game(&g);
        // stationary: mu0 = 4/7, mu1 = 3/7; gain = 4/7 * 1/2 - 3/7 = -1/7
        let (gain, _) = c.bscc_gain(&[0, 1]);
        assert_eq!(gain, rat(-1, 7));
        assert!(!c.bscc_bounded(&[0, 1]));
    }
}
