//! Extremal mean payoff inside an end component, by unichain policy
//! iteration on gain/bias equations. MD enumeration serves as a fallback and
//! as the test oracle.

use std::collections::{HashSet, VecDeque};

use num_traits::One;

use crate::error::{Error, Result};
use crate::game::{GameGraph, Owner};
use crate::linalg;
use crate::mdp::chain::Chain;
use crate::mdp::mec::Mec;
use crate::rational::Rat;

/// Whether the controller maximizes or minimizes the mean payoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpMode {
    Max,
    Min,
}

/// Optimal gain of an end component with a bias vector witnessing it:
/// for every state `s` of the component (indexed as in `mec.states`)
/// `gain + bias[s]` equals the expected `reward + bias[next]` under
/// `choice`, and no controlled edge of the component does better (worse in
/// `Min` mode).
#[derive(Debug, Clone)]
pub struct MpSolution {
    pub gain: Rat,
    pub bias: Vec<Rat>,
    /// Chosen edge per state of `mec.states` (`None` on random states).
    pub choice: Vec<Option<usize>>,
}

impl MpSolution {
    /// `r + h(to) − h(from) − g` for an edge of the component.
    pub fn slack(&self, g: &GameGraph, mec: &Mec, e: usize) -> Rat {
        let ed = g.edge(e);
        let i = mec.states.binary_search(&ed.from).expect("edge inside component");
        let j = mec.states.binary_search(&ed.to).expect("edge inside component");
        Rat::from_integer(ed.reward.into()) + &self.bias[j] - &self.bias[i] - &self.gain
    }
}

/// Budget on the number of MD strategies the enumeration fallback may try.
pub const ENUM_BUDGET: u64 = 1 << 20;

pub fn mec_extremal_mean_payoff(g: &GameGraph, mec: &Mec, mode: MpMode) -> Result<Rat> {
    Ok(mec_mean_payoff(g, mec, mode)?.gain)
}

struct Local<'a> {
    g: &'a GameGraph,
    mec: &'a Mec,
    sign: i64,
    /// local edges per local state: (edge id, local target)
    out: Vec<Vec<(usize, usize)>>,
}

impl<'a> Local<'a> {
    fn new(g: &'a GameGraph, mec: &'a Mec, mode: MpMode) -> Self {
        let mut out = vec![Vec::new(); mec.states.len()];
        for &e in &mec.edges {
            let ed = g.edge(e);
            let i = mec.states.binary_search(&ed.from).unwrap();
            let j = mec.states.binary_search(&ed.to).unwrap();
            out[i].push((e, j));
        }
        for o in &mut out {
            o.sort_by_key(|&(e, j)| (j, e));
        }
        let sign = if mode == MpMode::Max { 1 } else { -1 };
        Local { g, mec, sign, out }
    }

    fn controlled(&self, i: usize) -> bool {
        self.g.owner(self.mec.states[i]) != Owner::Random
    }

    fn reward(&self, e: usize) -> i64 {
        self.sign * self.g.edge(e).reward
    }

    fn chain(&self, choice: &[Option<usize>]) -> Chain {
        let succ = (0..self.out.len())
            .map(|i| {
                if self.controlled(i) {
                    let e = choice[i].unwrap();
                    let j = self.mec.states.binary_search(&self.g.edge(e).to).unwrap();
                    vec![(j, Rat::one(), self.reward(e))]
                } else {
                    self.out[i]
                        .iter()
                        .map(|&(e, j)| (j, self.g.prob(e), self.reward(e)))
                        .collect()
                }
            })
            .collect();
        Chain { succ }
    }

    /// Best bottom component of the policy and its gain.
    fn best_bscc(&self, chain: &Chain) -> (Vec<usize>, Rat) {
        chain
            .bsccs()
            .into_iter()
            .map(|c| {
                let (gain, _) = chain.bscc_gain(&c);
                (c, gain)
            })
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0[0].cmp(&a.0[0])))
            .expect("a finite chain has a bottom component")
    }

    /// Redirects every state that does not surely end in `bottom` along an
    /// attractor toward the states that do.
    fn reattach(&self, chain: &Chain, bottom: &[usize], choice: &mut [Option<usize>]) {
        let m = self.out.len();
        // states whose chain-successors can only lead into `bottom`
        let mut pred = vec![Vec::new(); m];
        for (v, out) in chain.succ.iter().enumerate() {
            for x in out {
                pred[x.0].push(v);
            }
        }
        let mut bad = vec![false; m];
        let mut in_bottom = vec![false; m];
        for &b in bottom {
            in_bottom[b] = true;
        }
        // states reaching some other bottom component are bad
        let others: Vec<bool> = {
            let mut o = vec![false; m];
            for c in chain.bsccs() {
                if c[0] != bottom[0] {
                    for &v in &c {
                        o[v] = true;
                    }
                }
            }
            o
        };
        let mut queue: VecDeque<usize> = (0..m).filter(|&v| others[v]).collect();
        for &v in &queue {
            bad[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &u in &pred[v] {
                if !bad[u] {
                    bad[u] = true;
                    queue.push_back(u);
                }
            }
        }
        // attractor over component edges toward the good states
        let mut done: Vec<bool> = bad.iter().map(|b| !b).collect();
        let mut lpred = vec![Vec::new(); m];
        for (i, out) in self.out.iter().enumerate() {
            for &(e, j) in out {
                lpred[j].push((i, e));
            }
        }
        let mut queue: VecDeque<usize> = (0..m).filter(|&v| done[v]).collect();
        while let Some(v) = queue.pop_front() {
            for &(u, e) in &lpred[v] {
                if done[u] {
                    continue;
                }
                if self.controlled(u) {
                    // keep the lowest successor among edges into the attractor
                    choice[u] = Some(e);
                }
                done[u] = true;
                queue.push_back(u);
            }
        }
        debug_assert!(done.iter().all(|&d| d), "end component is strongly connected");
    }

    /// Solves gain and bias for a unichain policy, bias fixed to 0 at `anchor`.
    fn evaluate(&self, chain: &Chain, anchor: usize) -> (Rat, Vec<Rat>) {
        let m = self.out.len();
        // unknown 0 is the gain; unknown k (k != anchor, k >= 1 after shift)
        let col = |k: usize| -> Option<usize> {
            if k == anchor {
                None
            } else if k < anchor {
                Some(k + 1)
            } else {
                Some(k)
            }
        };
        let mut rows = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = vec![(0usize, Rat::one())];
            if let Some(c) = col(i) {
                row.push((c, Rat::one()));
            }
            let mut rhs = Rat::from_integer(0.into());
            for (j, p, r) in &chain.succ[i] {
                rhs += p * Rat::from_integer((*r).into());
                if let Some(c) = col(*j) {
                    row.push((c, -p.clone()));
                }
            }
            rows.push(row);
            b.push(rhs);
        }
        let x = linalg::solve(rows, b).expect("unichain gain/bias system is nonsingular");
        let bias = (0..m)
            .map(|k| col(k).map(|c| x[c].clone()).unwrap_or_else(|| Rat::from_integer(0.into())))
            .collect();
        (x[0].clone(), bias)
    }
}

/// Optimal gain of the end component for the controller, with bias
/// witness. Falls back to enumeration if the iteration revisits a policy.
pub fn mec_mean_payoff(g: &GameGraph, mec: &Mec, mode: MpMode) -> Result<MpSolution> {
    let loc = Local::new(g, mec, mode);
    let m = mec.states.len();
    let mut choice: Vec<Option<usize>> = (0..m)
        .map(|i| loc.controlled(i).then(|| loc.out[i][0].0))
        .collect();
    let mut seen: HashSet<Vec<Option<usize>>> = HashSet::new();
    loop {
        let chain = loc.chain(&choice);
        let (bottom, _) = loc.best_bscc(&chain);
        loc.reattach(&chain, &bottom, &mut choice);
        if !seen.insert(choice.clone()) {
            break;
        }
        let chain = loc.chain(&choice);
        let (gain, bias) = loc.evaluate(&chain, bottom[0]);
        let mut changed = false;
        for i in 0..m {
            if !loc.controlled(i) {
                continue;
            }
            let q = |e: usize, j: usize| Rat::from_integer(loc.reward(e).into()) + &bias[j];
            let cur_e = choice[i].unwrap();
            let cur_j = mec.states.binary_search(&g.edge(cur_e).to).unwrap();
            let cur = q(cur_e, cur_j);
            let mut best: Option<(Rat, usize)> = None;
            for &(e, j) in &loc.out[i] {
                let v = q(e, j);
                if best.as_ref().map_or(true, |(b, _)| v > *b) {
                    best = Some((v, e));
                }
            }
            let (bv, be) = best.unwrap();
            if bv > cur {
                choice[i] = Some(be);
                changed = true;
            }
        }
        if !changed {
            let s = Rat::from_integer(loc.sign.into());
            return Ok(MpSolution {
                gain: gain * &s,
                bias: bias.into_iter().map(|h| h * &s).collect(),
                choice,
            });
        }
    }
    log::warn!("mean-payoff iteration cycled; enumerating MD strategies");
    let (gain, choice) = enumerate_best(&loc)?;
    // recompute a witness for the enumerated optimum
    let chain = loc.chain(&choice);
    let (bottom, _) = loc.best_bscc(&chain);
    let mut choice = choice;
    loc.reattach(&chain, &bottom, &mut choice);
    let (g2, bias) = loc.evaluate(&loc.chain(&choice), bottom[0]);
    if g2 != gain {
        return Err(Error::Internal("mean-payoff fallback lost its optimum".into()));
    }
    let s = Rat::from_integer(loc.sign.into());
    Ok(MpSolution {
        gain: gain * &s,
        bias: bias.into_iter().map(|h| h * &s).collect(),
        choice,
    })
}

fn enumerate_best(loc: &Local) -> Result<(Rat, Vec<Option<usize>>)> {
    let m = loc.out.len();
    let ctrl: Vec<usize> = (0..m).filter(|&i| loc.controlled(i)).collect();
    let total = ctrl
        .iter()
        .try_fold(1u64, |acc, &i| acc.checked_mul(loc.out[i].len() as u64))
        .unwrap_or(u64::MAX);
    if total > ENUM_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "mean-payoff strategy enumeration".into(),
            budget: ENUM_BUDGET,
        });
    }
    let mut digits = vec![0usize; ctrl.len()];
    let mut best: Option<(Rat, Vec<Option<usize>>)> = None;
    loop {
        let mut choice = vec![None; m];
        for (k, &i) in ctrl.iter().enumerate() {
            choice[i] = Some(loc.out[i][digits[k]].0);
        }
        let (_, gain) = loc.best_bscc(&loc.chain(&choice));
        if best.as_ref().map_or(true, |(b, _)| gain > *b) {
            best = Some((gain, choice));
        }
        let mut k = 0;
        loop {
            if k == ctrl.len() {
                return Ok(best.unwrap());
            }
            digits[k] += 1;
            if digits[k] < loc.out[ctrl[k]].len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Extremal gain by brute force over MD strategies (test oracle).
pub fn mec_mean_payoff_enumerate(g: &GameGraph, mec: &Mec, mode: MpMode) -> Result<Rat> {
    let loc = Local::new(g, mec, mode);
    let (gain, _) = enumerate_best(&loc)?;
    Ok(gain * Rat::from_integer(loc.sign.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Edge, StateInfo};
    use crate::mdp::mec::mec_decompose;
    use crate::rational::int;

    fn loops(rewards: &[i64]) -> GameGraph {
        // state 0 (max) with self loops realised through helper states
        let mut states = vec![StateInfo { owner: Owner::Max, color: 0 }];
        let mut edges = Vec::new();
        for (k, &r) in rewards.iter().enumerate() {
            states.push(StateInfo { owner: Owner::Max, color: 0 });
            edges.push(Edge { from: 0, to: k + 1, reward: r, prob: None });
            edges.push(Edge { from: k + 1, to: 0, reward: r, prob: None });
        }
        GameGraph::new(states, edges).unwrap()
    }

    #[test]
    fn single_loop_and_two_cycle() {
        let g = loops(&[1]);
        let m = &mec_decompose(&g)[0];
        assert_eq!(mec_extremal_mean_payoff(&g, m, MpMode::Max).unwrap(), int(1));
        let g = GameGraph::new(
            vec![
                StateInfo { owner: Owner::Max, color: 0 },
                StateInfo { owner: Owner::Max, color: 0 },
            ],
            vec![
                Edge { from: 0, to: 1, reward: 1, prob: None },
                Edge { from: 1, to: 0, reward: -1, prob: None },
            ],
        )
        .unwrap();
        let m = &mec_decompose(&g)[0];
        assert_eq!(mec_extremal_mean_payoff(&g, m, MpMode::Max).unwrap(), int(0));
    }

    #[test]
    fn choice_between_loops() {
        let g = loops(&[-1, 2]);
        let m = &mec_decompose(&g)[0];
        assert_eq!(mec_extremal_mean_payoff(&g, m, MpMode::Max).unwrap(), int(2));
        assert_eq!(mec_extremal_mean_payoff(&g, m, MpMode::Min).unwrap(), int(-1));
        assert_eq!(mec_mean_payoff_enumerate(&g, m, MpMode::Min).unwrap(), int(-1));
        let sol = mec_mean_payoff(&g, m, MpMode::Min).unwrap();
        for &e in &m.edges {
            assert!(sol.slack(&g, m, e) >= int(0));
        }
    }
}
