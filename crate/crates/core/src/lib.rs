//! Approximate values and ε-optimal strategies for energy-parity objectives
//! in simple stochastic games, with exact rational arithmetic throughout.

pub mod assembly;
pub mod bound;
pub mod error;
pub mod evaluate;
pub mod gain;
pub mod game;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod mdp;
pub mod objectives;
pub mod oracle;
pub mod parity_game;
pub mod pipeline;
pub mod random;
pub mod rational;
pub mod selftest;
pub mod strategy;
pub mod unfold;

pub use error::{Error, Result};
pub use game::{Configuration, GameGraph, Owner, ValueVector};
pub use rational::Rat;
