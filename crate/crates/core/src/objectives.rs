//! Objectives as executable predicates on finite play prefixes, and a
//! seeded play simulator used as a statistical smoke oracle.
//!
//! Energy and termination objectives are decided as soon as the credited
//! running sum drops to zero or below; parity, limit and mean-payoff
//! objectives are tail properties and stay `Undetermined` on every prefix.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::game::{Configuration, GameGraph, Owner};
use crate::random::rng;
use crate::rational::{to_f64, Rat};
use crate::strategy::StrategyFD;

/// Comparison used by limit objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

/// A rational bound or one of the two infinities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    NegInf,
    Finite(#[serde(with = "crate::rational::serde_rat")] Rat),
    PosInf,
}

/// Storage slack: a fixed `l`, or "some `l`".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slack {
    Fixed(u64),
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// The credited running sum `k + Σ c_i` stays strictly positive.
    EnergyEn { k: u64 },
    /// `EnergyEn(k)` and no infix drops by more than `l`.
    EnergyStorage { k: u64, l: Slack },
    /// The credited running sum drops to `≤ 0` at some point.
    Termination { k: u64 },
    EvenParity,
    OddParity,
    /// `liminf` of the running sum compared with a bound.
    LimInf { cmp: Cmp, bound: Bound },
    /// `limsup` of the running sum compared with a bound.
    LimSup { cmp: Cmp, bound: Bound },
    /// `liminf` of the average reward is positive.
    MeanPayoffGt0,
    And { parts: Vec<Objective> },
    Or { parts: Vec<Objective> },
}

impl Objective {
    /// `liminf > −∞` together with even parity.
    pub fn gain() -> Self {
        Objective::And {
            parts: vec![
                Objective::LimInf { cmp: Cmp::Gt, bound: Bound::NegInf },
                Objective::EvenParity,
            ],
        }
    }

    /// Complement of [`Objective::gain`].
    pub fn loss() -> Self {
        Objective::Or {
            parts: vec![
                Objective::LimInf { cmp: Cmp::Eq, bound: Bound::NegInf },
                Objective::OddParity,
            ],
        }
    }

    /// `EN(k) ∩ EPAR`.
    pub fn energy_parity(k: u64) -> Self {
        Objective::And {
            parts: vec![Objective::EnergyEn { k }, Objective::EvenParity],
        }
    }

    pub fn and(parts: Vec<Objective>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Parse { at: "objective".into(), msg: "empty conjunction".into() });
        }
        Ok(Objective::And { parts })
    }

    pub fn or(parts: Vec<Objective>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Parse { at: "objective".into(), msg: "empty disjunction".into() });
        }
        Ok(Objective::Or { parts })
    }
}

/// A finite path: `states[i] → states[i+1]` carries `rewards[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayPrefix {
    pub states: Vec<usize>,
    pub rewards: Vec<i64>,
    pub initial_energy: u64,
}

impl PlayPrefix {
    pub fn new(start: usize, initial_energy: u64) -> Self {
        PlayPrefix {
            states: vec![start],
            rewards: Vec::new(),
            initial_energy,
        }
    }

    /// Checks that consecutive states are joined by edges with the
    /// recorded rewards.
    pub fn check(&self, g: &GameGraph) -> Result<()> {
        let bad = |msg: String| Err(Error::Parse { at: "play".into(), msg });
        if self.states.len() != self.rewards.len() + 1 {
            return bad(format!("{} states but {} rewards", self.states.len(), self.rewards.len()));
        }
        for (i, w) in self.states.windows(2).enumerate() {
            match g.edge_between(w[0], w[1]) {
                Some(e) if g.edge(e).reward == self.rewards[i] => {}
                Some(_) => return bad(format!("step {i}: reward does not match edge {} -> {}", w[0], w[1])),
                None => return bad(format!("step {i}: no edge {} -> {}", w[0], w[1])),
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrefixVerdict {
    SatisfiedForever,
    ViolatedForever,
    Undetermined,
}

/// First step after which `k + Σ c_i ≤ 0`, if any.
fn termination_step(k: u64, rewards: &[i64]) -> Option<usize> {
    let mut level = k as i128;
    if level <= 0 {
        return Some(0);
    }
    rewards.iter().position(|&c| {
        level += c as i128;
        level <= 0
    })
    .map(|i| i + 1)
}

/// Largest drop `−Σ_{i=m}^{n−1} c_i` over all infixes (0 if none drops).
fn max_infix_drop(rewards: &[i64]) -> i128 {
    let (mut sum, mut peak, mut drop) = (0i128, 0i128, 0i128);
    for &c in rewards {
        sum += c as i128;
        peak = peak.max(sum);
        drop = drop.max(peak - sum);
    }
    drop
}

pub fn check_prefix(obj: &Objective, p: &PlayPrefix) -> PrefixVerdict {
    use PrefixVerdict::*;
    match obj {
        Objective::EnergyEn { k } => match termination_step(*k, &p.rewards) {
            Some(_) => ViolatedForever,
            None => Undetermined,
        },
        Objective::Termination { k } => match termination_step(*k, &p.rewards) {
            Some(_) => SatisfiedForever,
            None => Undetermined,
        },
        Objective::EnergyStorage { k, l } => match l {
            Slack::Fixed(l) => check_storage_prefix(*k, *l, p),
            Slack::Any => check_prefix(&Objective::EnergyEn { k: *k }, p),
        },
        Objective::And { parts } => {
            let vs: Vec<_> = parts.iter().map(|o| check_prefix(o, p)).collect();
            if vs.contains(&ViolatedForever) {
                ViolatedForever
            } else if vs.iter().all(|&v| v == SatisfiedForever) {
                SatisfiedForever
            } else {
                Undetermined
            }
        }
        Objective::Or { parts } => {
            let vs: Vec<_> = parts.iter().map(|o| check_prefix(o, p)).collect();
            if vs.contains(&SatisfiedForever) {
                SatisfiedForever
            } else if vs.iter().all(|&v| v == ViolatedForever) {
                ViolatedForever
            } else {
                Undetermined
            }
        }
        Objective::EvenParity
        | Objective::OddParity
        | Objective::LimInf { .. }
        | Objective::LimSup { .. }
        | Objective::MeanPayoffGt0 => Undetermined,
    }
}

/// `ES(k, l)`: violated once the energy condition fails or some infix of
/// the prefix drops by more than `l`.
pub fn check_storage_prefix(k: u64, l: u64, p: &PlayPrefix) -> PrefixVerdict {
    if termination_step(k, &p.rewards).is_some() || max_infix_drop(&p.rewards) > l as i128 {
        PrefixVerdict::ViolatedForever
    } else {
        PrefixVerdict::Undetermined
    }
}

/// What a simulated play looked like. Floats here are estimates only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaySummary {
    /// Least color seen in the window `[horizon/2, horizon]`.
    pub min_color_final_window: u32,
    pub min_energy: i64,
    pub max_energy: i64,
    pub final_energy: i64,
    /// Step at which the credited sum first dropped to `≤ 0`.
    pub terminated_at: Option<usize>,
    /// Average reward over the final window.
    pub final_window_mean_reward: f64,
}

impl PlaySummary {
    /// Heuristic verdict for `EN ∩ EPAR`: no termination and an even least
    /// color in the final window.
    pub fn energy_parity_hit(&self) -> bool {
        self.terminated_at.is_none() && self.min_color_final_window % 2 == 0
    }
}

/// Per-state sampler for the random successor.
enum Sampler {
    Exact(WeightedIndex<u64>),
    Float(WeightedIndex<f64>),
}

fn sampler(g: &GameGraph, s: usize) -> Sampler {
    let out = g.out_edges(s);
    let probs: Vec<Rat> = out.iter().map(|&e| g.prob(e)).collect();
    let lcm = probs.iter().fold(BigInt::one(), |a, p| a.lcm(p.denom()));
    let weights: Option<Vec<u64>> = probs.iter().map(|p| (p.numer() * (&lcm / p.denom())).to_u64()).collect();
    match weights.and_then(|w| WeightedIndex::new(w).ok()) {
        Some(w) => Sampler::Exact(w),
        None => Sampler::Float(WeightedIndex::new(probs.iter().map(to_f64)).expect("positive probabilities")),
    }
}

fn samplers(g: &GameGraph) -> Vec<Option<Sampler>> {
    (0..g.num_states())
        .map(|s| (g.owner(s) == Owner::Random).then(|| sampler(g, s)))
        .collect()
}

/// Simulates `horizon` steps from `cfg` under the two strategies.
///
/// The play continues past termination; termination is recorded in the
/// summary. Runs with the same inputs and seed are identical (ChaCha8).
pub fn sample_play(
    g: &GameGraph,
    smax: &StrategyFD,
    smin: &StrategyFD,
    cfg: &Configuration,
    horizon: usize,
    seed: u64,
) -> Result<(PlayPrefix, PlaySummary)> {
    check_players(g, smax, smin)?;
    Ok(simulate(g, &samplers(g), smax, smin, cfg, horizon, seed))
}

fn check_players(g: &GameGraph, smax: &StrategyFD, smin: &StrategyFD) -> Result<()> {
    if smax.owner != Owner::Max || smin.owner != Owner::Min {
        return Err(Error::BadStrategy("expected a Maximizer and a Minimizer strategy".into()));
    }
    smax.check(g)?;
    smin.check(g)
}

fn simulate(
    g: &GameGraph,
    samplers: &[Option<Sampler>],
    smax: &StrategyFD,
    smin: &StrategyFD,
    cfg: &Configuration,
    horizon: usize,
    seed: u64,
) -> (PlayPrefix, PlaySummary) {
    let mut rng = rng(seed);
    let mut play = PlayPrefix::new(cfg.state, cfg.energy);
    let (mut mx, mut mn) = (smax.m0, smin.m0);
    let mut s = cfg.state;
    let mut energy = cfg.energy as i64;
    let window = horizon / 2;
    let mut summary = PlaySummary {
        min_color_final_window: if window == 0 { g.color(s) } else { u32::MAX },
        min_energy: energy,
        max_energy: energy,
        final_energy: energy,
        terminated_at: (energy <= 0).then_some(0),
        final_window_mean_reward: 0.0,
    };
    let mut window_sum = 0i64;
    for step in 0..horizon {
        let e = match g.owner(s) {
            Owner::Max => smax.choose(mx, s).expect("checked strategy"),
            Owner::Min => smin.choose(mn, s).expect("checked strategy"),
            Owner::Random => {
                let i = match samplers[s].as_ref().expect("random state") {
                    Sampler::Exact(w) => w.sample(&mut rng),
                    Sampler::Float(w) => w.sample(&mut rng),
                };
                g.out_edges(s)[i]
            }
        };
        mx = smax.next_mode(mx, e);
        mn = smin.next_mode(mn, e);
        let edge = g.edge(e);
        s = edge.to;
        energy += edge.reward;
        play.states.push(s);
        play.rewards.push(edge.reward);
        summary.min_energy = summary.min_energy.min(energy);
        summary.max_energy = summary.max_energy.max(energy);
        if energy <= 0 && summary.terminated_at.is_none() {
            summary.terminated_at = Some(step + 1);
        }
        if step + 1 >= window {
            summary.min_color_final_window = summary.min_color_final_window.min(g.color(s));
            window_sum += edge.reward;
        }
    }
    summary.final_energy = energy;
    let len = horizon - window.saturating_sub(1).min(horizon);
    if len > 0 {
        summary.final_window_mean_reward = window_sum as f64 / len as f64;
    }
    (play, summary)
}

/// Monte-Carlo estimate of `P(EN(i) ∩ EPAR)` (heuristic, see
/// [`PlaySummary::energy_parity_hit`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub runs: usize,
    pub hits: usize,
    pub frequency: f64,
    /// Estimated standard error of `frequency`.
    pub std_error: f64,
}

/// Runs `runs` plays; run `i` uses seed `base_seed + i`, so the result does
/// not depend on the number of worker threads.
pub fn estimate_energy_parity(
    g: &GameGraph,
    smax: &StrategyFD,
    smin: &StrategyFD,
    cfg: &Configuration,
    horizon: usize,
    runs: usize,
    base_seed: u64,
) -> Result<Estimate> {
    check_players(g, smax, smin)?;
    let samplers = samplers(g);
    let hits = (0..runs)
        .into_par_iter()
        .filter(|&i| {
            simulate(g, &samplers, smax, smin, cfg, horizon, base_seed.wrapping_add(i as u64))
                .1
                .energy_parity_hit()
        })
        .count();
    let frequency = if runs == 0 { 0.0 } else { hits as f64 / runs as f64 };
    let std_error = if runs == 0 {
        0.0
    } else {
        (frequency * (1.0 - frequency) / runs as f64).sqrt()
    };
    Ok(Estimate {
        runs,
        hits,
        frequency,
        std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Edge, StateInfo};
    use crate::rational::rat;
    use proptest::prelude::*;

    fn prefix(rewards: &[i64], k: u64) -> PlayPrefix {
        PlayPrefix {
            states: vec![0; rewards.len() + 1],
            rewards: rewards.to_vec(),
            initial_energy: k,
        }
    }

    #[test]
    fn prefix_examples() {
        use PrefixVerdict::*;
        assert_eq!(check_prefix(&Objective::EnergyEn { k: 1 }, &prefix(&[-1], 1)), ViolatedForever);
        assert_eq!(check_prefix(&Objective::Termination { k: 2 }, &prefix(&[-1, -1], 2)), SatisfiedForever);
        assert_eq!(check_prefix(&Objective::energy_parity(3), &prefix(&[1, 0, -1], 3)), Undetermined);
        assert_eq!(check_prefix(&Objective::EvenParity, &prefix(&[-5], 1)), Undetermined);
        assert_eq!(check_storage_prefix(1, 1, &prefix(&[1, -1], 1)), Undetermined);
        assert_eq!(check_storage_prefix(5, 1, &prefix(&[-2], 5)), ViolatedForever);
        assert_eq!(check_storage_prefix(1, 0, &prefix(&[0; 50], 1)), Undetermined);
        assert_eq!(check_prefix(&Objective::loss(), &prefix(&[-1], 1)), Undetermined);
        assert!(Objective::and(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn verdicts_are_monotone_and_complementary(
            rewards in proptest::collection::vec(-2i64..=2, 0..30),
            k in 0u64..6,
            cut in 0usize..30,
        ) {
            let full = prefix(&rewards, k);
            let short = prefix(&rewards[..cut.min(rewards.len())], k);
            let en = Objective::EnergyEn { k };
            let term = Objective::Termination { k };
            if check_prefix(&en, &short) == PrefixVerdict::ViolatedForever {
                prop_assert_eq!(check_prefix(&en, &full), PrefixVerdict::ViolatedForever);
            }
            let a = check_prefix(&en, &full);
            let b = check_prefix(&term, &full);
            prop_assert_eq!(a == PrefixVerdict::ViolatedForever, b == PrefixVerdict::SatisfiedForever);
            // EN(i) ⊆ EN(j) for i ≤ j
            if check_prefix(&Objective::EnergyEn { k: k + 1 }, &full) == PrefixVerdict::ViolatedForever {
                prop_assert_eq!(a, PrefixVerdict::ViolatedForever);
            }
        }
    }

    fn coin() -> GameGraph {
        let r = StateInfo { owner: Owner::Random, color: 0 };
        let sink = |color| StateInfo { owner: Owner::Max, color };
        GameGraph::new(
            vec![r, sink(0), sink(1)],
            vec![
                Edge { from: 0, to: 1, reward: 0, prob: Some(rat(1, 2)) },
                Edge { from: 0, to: 2, reward: 0, prob: Some(rat(1, 2)) },
                Edge { from: 1, to: 1, reward: 0, prob: None },
                Edge { from: 2, to: 2, reward: 0, prob: None },
            ],
        )
        .unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_well_formed() {
        let g = coin();
        let smax = StrategyFD::lowest(&g, Owner::Max);
        let smin = StrategyFD::lowest(&g, Owner::Min);
        let cfg = Configuration { state: 0, energy: 1 };
        let a = sample_play(&g, &smax, &smin, &cfg, 20, 7).unwrap();
        let b = sample_play(&g, &smax, &smin, &cfg, 20, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.len(), 20);
        a.0.check(&g).unwrap();
    }

    #[test]
    fn one_state_loop_has_a_unique_play() {
        let g = GameGraph::new(
            vec![StateInfo { owner: Owner::Max, color: 2 }],
            vec![Edge { from: 0, to: 0, reward: 1, prob: None }],
        )
        .unwrap();
        let s = StrategyFD::lowest(&g, Owner::Max);
        let t = StrategyFD::lowest(&g, Owner::Min);
        let cfg = Configuration { state: 0, energy: 0 };
        let (p, sum) = sample_play(&g, &s, &t, &cfg, 5, 1).unwrap();
        assert_eq!(p.states, vec![0; 6]);
        assert_eq!((sum.terminated_at, sum.max_energy, sum.min_color_final_window), (Some(0), 5, 2));
    }

    #[test]
    fn fair_coin_frequency() {
        let g = coin();
        let smax = StrategyFD::lowest(&g, Owner::Max);
        let smin = StrategyFD::lowest(&g, Owner::Min);
        let cfg = Configuration { state: 0, energy: 1 };
        let est = estimate_energy_parity(&g, &smax, &smin, &cfg, 4, 10_000, 0).unwrap();
        let exact = crate::mdp::mdp_parity_value(&g).unwrap().0[0].clone();
        assert_eq!(exact, rat(1, 2));
        assert!((est.frequency - 0.5).abs() < 0.02, "{est:?}");
    }
}
