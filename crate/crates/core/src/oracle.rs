//! Brute-force reference values of `val(EN(l) ∩ EPAR)(s)` for all levels
//! up to a cap, certified from both sides by finite parity games:
//!
//! * `lo`: the better of the saturating unfolding (energy clamped at the
//!   cap) and the unfolding whose gadgets above the cap jump to a win with
//!   probability `Gain(s) − u(s, l)`, `u` a certified termination bound
//!   against `σ*`;
//! * `hi`: the unfolding whose gadgets jump with the Gain value (`G′` at
//!   the cap).
//!
//! Each game is solved exactly; the solver's mutual-best-response
//! certificate is checked.

use num_traits::Zero;
use rayon::prelude::*;

use crate::bound::TerminationBound;
use crate::error::{Error, Result};
use crate::gain::GainSolution;
use crate::game::{GameGraph, ValueVector};
use crate::parity_game::{solve_parity_game, SolverMode};
use crate::rational::{pow2_neg, Rat};
use crate::unfold::{build_g_prime, build_unfolding, saturating_unfold, JumpTable, Overflow};

/// Cap of the reference unfoldings.
pub const ORACLE_CAP: u64 = 64;

/// Largest accepted `hi − lo` of a reference value.
pub fn oracle_gap() -> Rat {
    pow2_neg(10)
}

#[derive(Debug, Clone)]
pub struct OracleTable {
    pub cap: u64,
    /// `lo[l][s]` for levels `0..=cap`.
    pub lo: Vec<Vec<Rat>>,
    pub hi: Vec<Vec<Rat>>,
}

impl OracleTable {
    pub fn interval(&self, s: usize, level: u64) -> (&Rat, &Rat) {
        let l = level as usize;
        (&self.lo[l][s], &self.hi[l][s])
    }

    pub fn gap(&self, s: usize, level: u64) -> Rat {
        let (lo, hi) = self.interval(s, level);
        hi - lo
    }

    /// Whether every level up to `max_level` is pinned down within `tol`.
    pub fn closed_up_to(&self, max_level: u64, tol: &Rat) -> bool {
        (0..=max_level.min(self.cap)).all(|l| (0..self.lo[0].len()).all(|s| self.gap(s, l) <= *tol))
    }

    /// Whether `v′` is consistent with `0 ≤ v′ − val ≤ ε` for the bracketed
    /// `val` at `(s, level)`: always `lo ≤ v′ ≤ hi + ε`, and when the
    /// bracket is closed also `v′ ≥ hi − gap` and `v′ ≤ lo + ε + gap`.
    pub fn consistent(&self, s: usize, level: u64, v_prime: &Rat, eps: &Rat) -> bool {
        let (lo, hi) = self.interval(s, level);
        let loose = v_prime >= lo && v_prime - hi <= *eps;
        let gap = oracle_gap();
        let closed = self.gap(s, level) <= gap;
        loose && (!closed || (*v_prime >= hi - &gap && v_prime - lo <= eps + &gap))
    }

    /// Lower and upper jump tables at levels `n+1..=n+r`, bracketing the
    /// true jump values of `G[N]`.
    pub fn jump_tables(&self, n: u64, r: u64) -> Result<(JumpTable, JumpTable)> {
        if n + r > self.cap {
            return Err(Error::BadJumpTable(format!("levels up to {} exceed the cap {}", n + r, self.cap)));
        }
        let states = self.lo[0].len();
        let table = |rows: &Vec<Vec<Rat>>| -> JumpTable {
            (n + 1..=n + r)
                .flat_map(|l| (0..states).map(move |s| (s, l)))
                .map(|(s, l)| ((s, l), rows[l as usize][s].clone()))
                .collect()
        };
        Ok((table(&self.lo), table(&self.hi)))
    }
}

fn certified_values(g: &GameGraph) -> Result<ValueVector> {
    let sol = solve_parity_game(g, SolverMode::Improve)?;
    if sol.certificate.0 != sol.values || sol.certificate.1 != sol.values {
        return Err(Error::Internal("parity solution without a matching certificate".into()));
    }
    Ok(sol.values)
}

/// Reference values at all levels `0..=cap` and all states.
pub fn energy_parity_oracle(g: &GameGraph, gain: &GainSolution, cap: u64) -> Result<OracleTable> {
    let n = g.num_states();
    let r = g.max_reward() as u64;
    let term = TerminationBound::new(g, gain)?;
    let lower: JumpTable = (cap + 1..=cap + r)
        .flat_map(|l| (0..n).map(move |s| (s, l)))
        .map(|(s, l)| ((s, l), (&gain.values[s] - term.bound(s, l)).max(Rat::zero())))
        .collect();
    let sat = saturating_unfold(g, cap, Overflow::Saturate);
    let jump = build_unfolding(g, cap, &lower)?;
    let upper = build_g_prime(g, cap, gain)?;
    let games = [&sat.game, &jump.product, &upper.product];
    let values: Vec<ValueVector> = games.par_iter().map(|u| certified_values(u)).collect::<Result<_>>()?;

    let mut lo = vec![vec![Rat::zero(); n]; cap as usize + 1];
    let mut hi = lo.clone();
    for l in 1..=cap {
        for s in 0..n {
            let a = &values[0][sat.id(s, l)];
            let b = &values[1][jump.id(s, l)];
            lo[l as usize][s] = a.max(b).clone();
            hi[l as usize][s] = values[2][upper.id(s, l)].clone();
        }
    }
    Ok(OracleTable { cap, lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gain::ssg_gain_value;
    use crate::random::{random_game, RandomSpec};

    #[test]
    fn brackets_are_ordered_and_monotone() {
        for seed in 0..10 {
            let g = random_game(&RandomSpec::corpus(), seed);
            let gain = ssg_gain_value(&g, SolverMode::Improve).unwrap();
            let t = energy_parity_oracle(&g, &gain, 16).unwrap();
            for s in 0..g.num_states() {
                for l in 1..=16 {
                    let (lo, hi) = t.interval(s, l);
                    assert!(lo <= hi, "seed {seed}");
                    assert!(*hi <= gain.values[s]);
                    if l > 1 {
                        assert!(t.interval(s, l - 1).0 <= hi);
                    }
                }
            }
        }
    }
}
