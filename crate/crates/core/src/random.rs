//! Seeded random games for the test corpus and property checks.
//!
//! The generator is `ChaCha8Rng::seed_from_u64`, so instances are
//! reproducible across platforms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{Edge, GameGraph, Owner, StateInfo};
use crate::rational::rat;

/// Which owners may appear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Maximizer, Minimizer and random states.
    Game,
    /// Maximizer and random states only.
    MaxMdp,
}

#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub min_states: usize,
    pub max_states: usize,
    pub max_out: usize,
    pub max_color: u32,
    pub max_reward: i64,
    /// Largest denominator of a random-state probability.
    pub max_denom: i64,
    pub shape: Shape,
}

impl RandomSpec {
    /// The corpus family: up to 5 states, rewards in {−1,0,1}, colors ≤ 2,
    /// probabilities with denominator ≤ 4.
    pub fn corpus() -> Self {
        RandomSpec {
            min_states: 2,
            max_states: 5,
            max_out: 3,
            max_color: 2,
            max_reward: 1,
            max_denom: 4,
            shape: Shape::Game,
        }
    }

    pub fn states(mut self, min: usize, max: usize) -> Self {
        self.min_states = min;
        self.max_states = max;
        self
    }

    pub fn shape(mut self, shape: Shape) -> Self {
        self.shape = shape;
        self
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random game of the given family, derived from `seed`.
pub fn random_game(spec: &RandomSpec, seed: u64) -> GameGraph {
    random_game_with(spec, &mut rng(seed))
}

pub fn random_game_with(spec: &RandomSpec, rng: &mut impl Rng) -> GameGraph {
    let n = rng.gen_range(spec.min_states..=spec.max_states);
    let owners: &[Owner] = match spec.shape {
        Shape::Game => &[Owner::Max, Owner::Min, Owner::Random],
        Shape::MaxMdp => &[Owner::Max, Owner::Random],
    };
    let states: Vec<StateInfo> = (0..n)
        .map(|_| StateInfo {
            owner: *owners.choose(rng).unwrap(),
            color: rng.gen_range(0..=spec.max_color),
        })
        .collect();
    let mut edges = Vec::new();
    let ids: Vec<usize> = (0..n).collect();
    for (s, info) in states.iter().enumerate() {
        let mut k = rng.gen_range(1..=spec.max_out.min(n));
        if info.owner == Owner::Random {
            k = k.min(spec.max_denom as usize);
        }
        let mut targets: Vec<usize> = ids.choose_multiple(rng, k).copied().collect();
        targets.sort_unstable();
        let probs = if info.owner == Owner::Random {
            let d = rng.gen_range(k as i64..=spec.max_denom.max(k as i64));
            Some(composition(rng, d, k))
        } else {
            None
        };
        for (i, &t) in targets.iter().enumerate() {
            edges.push(Edge {
                from: s,
                to: t,
                reward: rng.gen_range(-spec.max_reward..=spec.max_reward),
                prob: probs.as_ref().map(|p| rat(p[i], p.iter().sum())),
            });
        }
    }
    GameGraph::new(states, edges).expect("generator produces valid games")
}

/// Random split of `d` into `k` positive integers.
fn composition(rng: &mut impl Rng, d: i64, k: usize) -> Vec<i64> {
    let mut cuts: Vec<i64> = (1..d).collect::<Vec<_>>().choose_multiple(rng, k - 1).copied().collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(d)) {
        parts.push(c - prev);
        prev = c;
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_valid() {
        let spec = RandomSpec::corpus();
        for seed in 0..50 {
            let a = random_game(&spec, seed);
            assert_eq!(a, random_game(&spec, seed));
            assert!(a.num_states() <= 5);
            for e in a.edges() {
                if let Some(p) = &e.prob {
                    assert!(*p.denom() <= 4.into());
                }
            }
        }
    }
}
