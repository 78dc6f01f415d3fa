//! Qualitative sets of a maximizing MDP:
//!
//! * `W1` — almost-sure `LimInf = −∞`,
//! * `W2` — almost-sure odd parity,
//! * `W0` — almost-sure Loss (`LimInf = −∞` or odd parity),
//! * `B`  — almost-sure `MP > 0` together with even parity,
//! * almost-sure storage-energy parity, via a saturating unfolding.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::GameGraph;
use crate::mdp::mean_payoff::{mec_mean_payoff, MpMode};
use crate::mdp::mec::{mec_decompose, mecs_within, sub_ecs_by_min_color, Mec};
use crate::mdp::parity::{even_sub_ecs, odd_sub_ecs, union_mask};
use crate::mdp::reach::{as_reach_unchecked, require_max_mdp};
use crate::game::Owner;
use crate::unfold::{saturating_unfold, Overflow};

/// Whether the controller can force `LimInf = −∞` almost surely inside
/// `mec`: either the minimal mean payoff is negative, or it is zero and
/// the zero-slack sub-MDP has an end component with a random edge of
/// nonzero slack (a zero-drift walk that is unbounded below).
pub fn mec_forces_neg_infinity(g: &GameGraph, mec: &Mec) -> Result<bool> {
    let sol = mec_mean_payoff(g, mec, MpMode::Min)?;
    if sol.gain.is_negative() {
        return Ok(true);
    }
    if sol.gain.is_positive() {
        return Ok(false);
    }
    let mut tight = vec![false; g.num_edges()];
    for &e in &mec.edges {
        tight[e] = g.owner(g.edge(e).from) == Owner::Random || sol.slack(g, mec, e).is_zero();
    }
    let subs = mecs_within(g, &mec.mask(g.num_states()), |e| tight[e]);
    Ok(subs.iter().any(|sub| {
        sub.edges.iter().any(|&e| {
            g.owner(g.edge(e).from) == Owner::Random && !sol.slack(g, mec, e).is_zero()
        })
    }))
}

fn mask_of_mecs<'a>(n: usize, mecs: impl Iterator<Item = &'a Mec>) -> Vec<bool> {
    let mut m = vec![false; n];
    for mec in mecs {
        for &s in &mec.states {
            m[s] = true;
        }
    }
    m
}

fn w1_target(g: &GameGraph) -> Result<Vec<bool>> {
    let mecs = mec_decompose(g);
    let mut good = Vec::new();
    for mec in &mecs {
        if mec_forces_neg_infinity(g, mec)? {
            good.push(mec);
        }
    }
    Ok(mask_of_mecs(g.num_states(), good.into_iter()))
}

/// `W1`: almost-sure `LimInf = −∞`.
pub fn set_w1(g: &GameGraph) -> Result<Vec<bool>> {
    require_max_mdp(g)?;
    Ok(as_reach_unchecked(g, &w1_target(g)?))
}

/// `W2`: almost-sure odd parity.
pub fn set_w2(g: &GameGraph) -> Result<Vec<bool>> {
    require_max_mdp(g)?;
    let target = union_mask(g.num_states(), &odd_sub_ecs(g));
    Ok(as_reach_unchecked(g, &target))
}

/// `W0`: almost-sure Loss.
pub fn set_w0(g: &GameGraph) -> Result<Vec<bool>> {
    require_max_mdp(g)?;
    let mut target = w1_target(g)?;
    for (s, t) in union_mask(g.num_states(), &odd_sub_ecs(g)).into_iter().enumerate() {
        target[s] |= t;
    }
    Ok(as_reach_unchecked(g, &target))
}

/// Sub-ECs with even minimal color and positive maximal mean payoff.
pub fn positive_even_sub_ecs(g: &GameGraph) -> Result<Vec<(u32, Mec)>> {
    let mut out = Vec::new();
    for mec in mec_decompose(g) {
        for (d, sub) in sub_ecs_by_min_color(g, &mec, false) {
            if mec_mean_payoff(g, &sub, MpMode::Max)?.gain.is_positive() {
                out.push((d, sub));
            }
        }
    }
    Ok(out)
}

/// `B`: almost-sure `MP > 0` and even parity.
pub fn set_b(g: &GameGraph) -> Result<Vec<bool>> {
    require_max_mdp(g)?;
    let target = union_mask(g.num_states(), &positive_even_sub_ecs(g)?);
    Ok(as_reach_unchecked(g, &target))
}

/// Almost-sure winning states of EPAR in the saturating unfolding at `cap`,
/// read at level `k`.
pub fn as_esp_at_cap(g: &GameGraph, k: u64, cap: u64) -> Vec<bool> {
    let u = saturating_unfold(g, cap, Overflow::Saturate);
    let target = union_mask(u.game.num_states(), &even_sub_ecs(&u.game));
    let win = as_reach_unchecked(&u.game, &target);
    (0..g.num_states()).map(|s| win[u.id(s, k)]).collect()
}

/// Default saturation cap for storage parity at initial credit `k`.
pub fn esp_cap(g: &GameGraph, k: u64) -> u64 {
    (k + g.num_states() as u64 * g.max_reward() as u64).max(1)
}

/// Almost-sure `ES(k) ∩ EPAR`, checked against a doubled cap.
pub fn as_energy_storage_parity(g: &GameGraph, k: u64) -> Result<Vec<bool>> {
    require_max_mdp(g)?;
    if k == 0 {
        return Ok(vec![false; g.num_states()]);
    }
    let cap = esp_cap(g, k);
    let a = as_esp_at_cap(g, k, cap);
    let b = as_esp_at_cap(g, k, 2 * cap);
    if a != b {
        return Err(Error::CapTooSmallSuspected { cap, doubled: 2 * cap });
    }
    Ok(a)
}

/// The set `A` of states almost-surely winning storage parity for some
/// initial credit, with the credit at which it stabilised.
#[derive(Debug, Clone, Serialize)]
pub struct StorageSet {
    pub states: Vec<bool>,
    pub k_default: u64,
    pub k_stable: u64,
}

/// `A = AS(ES(k) ∩ EPAR)` at `k = max(1, |S|·R)`, with a doubling sweep
/// until the set stops growing.
pub fn storage_parity_set(g: &GameGraph) -> Result<StorageSet> {
    require_max_mdp(g)?;
    let k_default = (g.num_states() as u64 * g.max_reward() as u64).max(1);
    let mut k = k_default;
    let mut cur = as_energy_storage_parity(g, k)?;
    for _ in 0..8 {
        let next = as_energy_storage_parity(g, 2 * k)?;
        if next == cur {
            break;
        }
        log::warn!("storage-parity set grew between k = {k} and k = {}", 2 * k);
        k *= 2;
        cur = next;
    }
    Ok(StorageSet {
        states: cur,
        k_default,
        k_stable: k,
    })
}
