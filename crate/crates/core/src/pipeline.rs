//! End-to-end approximation of `val(EN(i) ∩ EPAR)(s)` with ε-optimal
//! strategies for both players.
//!
//! Stages: Gain values and strategies → cutoff `N` → `G′` → parity solve of
//! `G′` → strategy assembly → (optional) verification by best responses.
//! Above `N` the answer is the Gain value and the strategies are `σ*`/`π*`.

use num_traits::Zero;
use serde::Serialize;

use crate::assembly::{assemble_pi_eps, assemble_sigma_eps};
use crate::bound::{compute_n_game, BoundReport};
use crate::error::{Error, Result, Stage};
use crate::evaluate::{best_response_energy_parity, CapSchedule, ValueInterval, DEFAULT_CAP_LIMIT};
use crate::gain::ssg_gain_value_with;
use crate::game::{Configuration, GameGraph};
use crate::parity_game::{solve_parity_game_with, SolverMode, DEFAULT_BUDGET};
use crate::rational::{serde_rat, Rat};
use crate::strategy::{StrategyFD, StrategyJson};
use crate::unfold::build_g_prime;

#[derive(Debug, Clone)]
pub struct ApproxOptions {
    pub mode: SolverMode,
    /// Strategy-enumeration budget.
    pub budget: u64,
    /// Largest cap of the verification sandwich.
    pub cap_limit: u64,
    /// Evaluate both strategies against best responses.
    pub verify: bool,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            mode: SolverMode::Improve,
            budget: DEFAULT_BUDGET,
            cap_limit: DEFAULT_CAP_LIMIT,
            verify: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `i > N`: `v′` is the Gain value.
    AboveN,
    /// `i ≤ N`: `v′` is the `G′` value at `(s, i)`.
    BelowN,
}

/// Best-response intervals of the two strategies, with tolerance `ε/4`.
#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    #[serde(with = "serde_rat")]
    pub tol: Rat,
    /// Value of the Minimizer's best response to `σ_ε`.
    pub sigma: ValueInterval,
    /// Value of the Maximizer's best response to `π_ε`.
    pub pi: ValueInterval,
    /// `sigma.lo ≥ v′ − ε − tol` and `pi.hi ≤ v′ + tol`.
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategyReport {
    pub modes: usize,
    /// First post-switch mode (absent for the direct strategies above `N`).
    pub switch_offset: Option<usize>,
    pub transducer: StrategyJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxResult {
    #[serde(with = "serde_rat")]
    pub v_prime: Rat,
    #[serde(with = "serde_rat")]
    pub epsilon: Rat,
    pub state: usize,
    pub energy: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub branch: Branch,
    #[serde(with = "serde_rat")]
    pub gain_value: Rat,
    pub bound: BoundReport,
    pub sigma_eps: StrategyReport,
    pub pi_eps: StrategyReport,
    pub verification: Option<Verification>,
    #[serde(skip)]
    pub sigma: StrategyFD,
    #[serde(skip)]
    pub pi: StrategyFD,
}

fn report(g: &GameGraph, st: &StrategyFD, switch_offset: Option<usize>) -> StrategyReport {
    StrategyReport {
        modes: st.modes,
        switch_offset,
        transducer: st.to_json(g),
    }
}

/// `v′` with `0 ≤ v′ − val(EN(i) ∩ EPAR)(s) ≤ ε`, plus `σ_ε` and `π_ε`.
pub fn approximate(g: &GameGraph, cfg: &Configuration, eps: &Rat, opts: &ApproxOptions) -> Result<ApproxResult> {
    if *eps <= Rat::zero() {
        return Err(Error::Parse { at: "epsilon".into(), msg: "must be positive".into() });
    }
    if cfg.state >= g.num_states() {
        return Err(Error::Parse { at: "state".into(), msg: format!("no state {}", cfg.state) });
    }
    let gain = ssg_gain_value_with(g, opts.mode, opts.budget).stage("gain")?;
    let bound = compute_n_game(g, &gain, eps).stage("bound-n")?;
    let n = bound.n;
    log::info!("gain value {} at state {}, N = {n}", gain.values[cfg.state], cfg.state);

    let (v_prime, branch, sigma, pi, offset) = if cfg.energy > n {
        (
            gain.values[cfg.state].clone(),
            Branch::AboveN,
            gain.sigma_star_for(cfg.state).clone(),
            StrategyFD::from_md(g, &gain.pi_star),
            None,
        )
    } else {
        let u = build_g_prime(g, n, &gain).stage("unfold")?;
        log::info!("G′ has {} states", u.product.num_states());
        let sol = solve_parity_game_with(&u.product, opts.mode, opts.budget).stage("solve-parity")?;
        let s_eps = assemble_sigma_eps(g, &u, &sol, &gain, cfg).stage("assemble")?;
        let p_eps = assemble_pi_eps(g, &u, &sol, &gain, cfg).stage("assemble")?;
        (
            sol.values[u.id(cfg.state, cfg.energy)].clone(),
            Branch::BelowN,
            s_eps.strategy,
            p_eps.strategy,
            Some(s_eps.switch_offset),
        )
    };

    let verification = if opts.verify {
        Some(verify(g, cfg, eps, n, &v_prime, &sigma, &pi, opts.cap_limit).stage("verify")?)
    } else {
        None
    };
    Ok(ApproxResult {
        v_prime,
        epsilon: eps.clone(),
        state: cfg.state,
        energy: cfg.energy,
        n,
        branch,
        gain_value: gain.values[cfg.state].clone(),
        bound,
        sigma_eps: report(g, &sigma, offset),
        pi_eps: report(g, &pi, offset),
        verification,
        sigma,
        pi,
    })
}

#[allow(clippy::too_many_arguments)]
fn verify(
    g: &GameGraph,
    cfg: &Configuration,
    eps: &Rat,
    n: u64,
    v_prime: &Rat,
    sigma: &StrategyFD,
    pi: &StrategyFD,
    cap_limit: u64,
) -> Result<Verification> {
    let tol = eps / Rat::from_integer(4.into());
    let sched = CapSchedule::new(n, cfg.energy, tol.clone(), cap_limit);
    let s_sched = sched.clone().until_lo_at_least(v_prime - eps - &tol);
    let p_sched = sched.until_hi_at_most(v_prime + &tol);
    let (s_iv, p_iv) = rayon::join(
        || best_response_energy_parity(g, sigma, cfg, &s_sched),
        || best_response_energy_parity(g, pi, cfg, &p_sched),
    );
    let (s_iv, p_iv) = (s_iv?, p_iv?);
    let sigma_ok = s_iv.lo >= v_prime - eps - &tol;
    let pi_ok = p_iv.hi <= v_prime + &tol;
    // both intervals are certified, so lying wholly on the wrong side
    // refutes the guarantee
    if s_iv.hi < v_prime - eps || p_iv.lo > *v_prime {
        return Err(Error::Internal(format!(
            "strategy guarantee refuted: v′ = {v_prime}, σ_ε in [{}, {}], π_ε in [{}, {}]",
            s_iv.lo, s_iv.hi, p_iv.lo, p_iv.hi
        )));
    }
    Ok(Verification {
        tol,
        sigma: s_iv,
        pi: p_iv,
        certified: sigma_ok && pi_ok,
    })
}
