//! Exact analysis of Markov chains and maximizing MDPs.

pub mod chain;
pub mod gain;
pub mod mean_payoff;
pub mod mec;
pub mod parity;
pub mod reach;
pub mod wsets;

pub use chain::{bscc_decompose, chain_parity_value, Chain};
pub use gain::{mdp_gain_value, GainWitness};
pub use mean_payoff::{mec_extremal_mean_payoff, mec_mean_payoff, MpMode, MpSolution};
pub use mec::{mec_decompose, Mec};
pub use parity::mdp_parity_value;
pub use reach::{as_reach, max_reach_value};
pub use wsets::{as_energy_storage_parity, set_b, set_w0, set_w1, set_w2};
