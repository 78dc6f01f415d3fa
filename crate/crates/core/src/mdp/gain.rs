//! Gain (`LimInf > −∞` and even parity) in maximizing MDPs: the value is
//! the optimal probability of reaching `A ∪ B`, where `A` wins storage
//! parity almost surely and `B` wins `MP > 0` with even parity almost surely.

use serde::Serialize;

use crate::error::Result;
use crate::game::{GameGraph, ValueVector};
use crate::mdp::reach::{max_reach_unchecked, require_max_mdp};
use crate::mdp::wsets::{set_b, storage_parity_set};
use crate::strategy::StrategyMD;

/// Data behind an MDP Gain value.
#[derive(Debug, Clone, Serialize)]
pub struct GainWitness {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
    /// Credit at which `A` was computed (`max(1, |S|·R)` by default).
    pub k_default: u64,
    /// Credit at which the doubling sweep saw `A` stop growing.
    pub k_stable: u64,
    #[serde(skip)]
    pub reach: StrategyMD,
}

pub fn mdp_gain_value(g: &GameGraph) -> Result<(ValueVector, GainWitness)> {
    require_max_mdp(g)?;
    let storage = storage_parity_set(g)?;
    let b = set_b(g)?;
    let target: Vec<bool> = storage.states.iter().zip(&b).map(|(x, y)| *x || *y).collect();
    let (val, reach) = max_reach_unchecked(g, &target);
    Ok((
        val,
        GainWitness {
            a: storage.states,
            b,
            k_default: storage.k_default,
            k_stable: storage.k_stable,
            reach,
        },
    ))
}
