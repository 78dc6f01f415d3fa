//! Certified intervals for `EN(i) ∩ EPAR` under fixed strategies.
//!
//! The counter is unbounded, so values are bracketed by finite games over
//! energy levels `1..=cap`:
//!
//! * `hi` jumps from above the cap to a win with the Gain probability,
//!   which bounds every energy-parity value from above;
//! * `lo` is the better of two under-approximations: saturating the counter
//!   at the cap, and (when the adversary is the controller) jumping above
//!   the cap to a win with probability `Gain − u`, where `u` is a certified
//!   supermartingale bound on later termination.
//!
//! The cap doubles until `hi − lo ≤ tol` or the cap limit is reached (or,
//! for one-sided checks, until the requested side is certified).

use num_traits::{One, Zero};
use serde::Serialize;

use crate::bound::{avoid_w1, supermartingales};
use crate::error::Result;
use crate::game::{Configuration, GameGraph, Owner};
use crate::mdp::gain::mdp_gain_value;
use crate::mdp::parity::mdp_parity_unchecked;
use crate::mdp::reach::max_reach_unchecked;
use crate::mdp::wsets::set_w0;
use crate::rational::{serde_rat, to_f64, Rat};
use crate::strategy::{fix_fd, FixedFD, StrategyFD};
use crate::unfold::{build_unfolding, saturating_unfold, JumpTable, Overflow};

/// Default largest cap tried by the sandwich.
pub const DEFAULT_CAP_LIMIT: u64 = 1 << 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValueInterval {
    #[serde(with = "serde_rat")]
    pub lo: Rat,
    #[serde(with = "serde_rat")]
    pub hi: Rat,
    pub cap_used: u64,
    /// Whether `hi − lo ≤ tol` was reached within the cap limit.
    pub closed: bool,
}

impl ValueInterval {
    pub fn exact(v: Rat) -> Self {
        ValueInterval {
            lo: v.clone(),
            hi: v,
            cap_used: 0,
            closed: true,
        }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rat) -> bool {
        self.lo <= *v && *v <= self.hi
    }
}

/// Sandwich parameters.
#[derive(Debug, Clone)]
pub struct CapSchedule {
    pub start: u64,
    pub limit: u64,
    pub tol: Rat,
    /// Also stop once `lo` reaches this value.
    pub lo_goal: Option<Rat>,
    /// Also stop once `hi` drops to this value.
    pub hi_goal: Option<Rat>,
}

impl CapSchedule {
    /// Caps from `max(2N, 2i, 4)` up to `limit`.
    pub fn new(n: u64, level: u64, tol: Rat, limit: u64) -> Self {
        CapSchedule {
            start: (2 * n).max(2 * level).max(4),
            limit,
            tol,
            lo_goal: None,
            hi_goal: None,
        }
    }

    /// Stops as soon as `lo ≥ goal` (a one-sided check needs no more).
    pub fn until_lo_at_least(mut self, goal: Rat) -> Self {
        self.lo_goal = Some(goal);
        self
    }

    /// Stops as soon as `hi ≤ goal`.
    pub fn until_hi_at_most(mut self, goal: Rat) -> Self {
        self.hi_goal = Some(goal);
        self
    }

    fn goal_met(&self, iv: &ValueInterval) -> bool {
        self.lo_goal.as_ref().is_some_and(|g| iv.lo >= *g) || self.hi_goal.as_ref().is_some_and(|g| iv.hi <= *g)
    }
}

/// Which side controls the product MDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Controller {
    /// The controller (owner `Max` in the product) maximizes Loss, i.e.
    /// the value is `inf P(EN ∩ EPAR)`. Chains fall under this case.
    Adversary,
    /// The controller maximizes `EN ∩ EPAR`.
    Player,
}

/// Controller-optimal value of `EN(level) ∩ EPAR` from `start`.
fn sandwich(m: &GameGraph, who: Controller, start: usize, level: u64, sched: &CapSchedule) -> Result<ValueInterval> {
    if level == 0 {
        return Ok(ValueInterval::exact(Rat::zero()));
    }
    let t = std::time::Instant::now();
    let jumps = JumpBounds::new(m, who)?;
    log::debug!("{who:?} jump bounds in {:.2?}", t.elapsed());
    let mut cap = sched.start.max(level);
    let mut best: Option<ValueInterval> = None;
    loop {
        let t = std::time::Instant::now();
        let iv = bracket(m, who, start, level, cap, &jumps)?;
        log::debug!(
            "{who:?} cap {cap} ({} states): [{:.6}, {:.6}] in {:.2?}",
            m.num_states(),
            to_f64(&iv.lo),
            to_f64(&iv.hi),
            t.elapsed()
        );
        let iv = match best {
            // keep the tightest certified bounds seen so far
            Some(b) => ValueInterval {
                lo: b.lo.max(iv.lo),
                hi: b.hi.min(iv.hi),
                cap_used: cap,
                closed: false,
            },
            None => iv,
        };
        let closed = iv.width() <= sched.tol;
        if closed || sched.goal_met(&iv) || cap * 2 > sched.limit {
            return Ok(ValueInterval { closed, ..iv });
        }
        best = Some(iv);
        cap *= 2;
    }
}

/// Value of the player (`EN ∩ EPAR`) in a finite unfolding whose states
/// keep the product's owners.
fn player_value(u: &GameGraph, who: Controller, p: usize) -> Rat {
    match who {
        Controller::Player => mdp_parity_unchecked(u).0[p].clone(),
        Controller::Adversary => Rat::one() - &mdp_parity_unchecked(&u.shift_colors()).0[p],
    }
}

fn bracket(
    m: &GameGraph,
    who: Controller,
    start: usize,
    level: u64,
    cap: u64,
    jumps: &JumpBounds,
) -> Result<ValueInterval> {
    let r = m.max_reward() as u64;
    let gadget = |value: &dyn Fn(usize, u64) -> Rat| -> Result<Rat> {
        let table: JumpTable = (cap + 1..=cap + r)
            .flat_map(|l| (0..m.num_states()).map(move |s| (s, l)))
            .map(|(s, l)| ((s, l), value(s, l)))
            .collect();
        let u = build_unfolding(m, cap, &table)?;
        Ok(player_value(&u.product, who, u.id(start, level)))
    };
    let hi = gadget(&|s, _| jumps.gain[s].clone())?;
    let sat = saturating_unfold(m, cap, Overflow::Saturate);
    let mut lo = player_value(&sat.game, who, sat.id(start, level));
    if !jumps.marts.is_empty() {
        lo = lo.max(gadget(&|s, l| jumps.lower(s, l))?);
    }
    Ok(ValueInterval {
        lo,
        hi,
        cap_used: cap,
        closed: false,
    })
}

/// Bounds on the value at high levels `l`: at most the Gain value, and
/// (against an adversary) at least Gain minus a certified bound on later
/// termination.
struct JumpBounds {
    gain: Vec<Rat>,
    marts: Vec<crate::bound::Supermartingale>,
}

impl JumpBounds {
    fn new(m: &GameGraph, who: Controller) -> Result<Self> {
        Ok(match who {
            Controller::Adversary => {
                let w0 = set_w0(m)?;
                let (loss, _) = max_reach_unchecked(m, &w0);
                JumpBounds {
                    gain: loss.iter().map(|l| Rat::one() - l).collect(),
                    marts: supermartingales(&avoid_w1(m)?),
                }
            }
            Controller::Player => JumpBounds {
                gain: mdp_gain_value(m)?.0 .0,
                marts: Vec::new(),
            },
        })
    }

    fn lower(&self, s: usize, level: u64) -> Rat {
        let u = self.marts.iter().map(|m| m.bound(s, level)).min().unwrap_or_else(Rat::one);
        (&self.gain[s] - u).max(Rat::zero())
    }
}

/// A strategy of the product's remaining player, translated from one of
/// the base game.
fn lift_fd(f: &FixedFD, st: &StrategyFD) -> StrategyFD {
    let n = f.game.num_states();
    let nxt = (0..st.modes)
        .map(|m| {
            (0..n)
                .map(|p| {
                    let s = f.pairs[p].1;
                    if f.game.owner(p) != st.owner {
                        return None;
                    }
                    let want = st.nxt[m][s]?;
                    f.game.out_edges(p).iter().copied().find(|&pe| f.edge_map[pe] == want)
                })
                .collect()
        })
        .collect();
    let update = (0..st.modes)
        .map(|m| (0..f.game.num_edges()).map(|pe| st.update[m][f.edge_map[pe]]).collect())
        .collect();
    StrategyFD {
        owner: st.owner,
        modes: st.modes,
        m0: st.m0,
        update,
        nxt,
    }
}

/// Interval for `P(EN(i) ∩ EPAR)` of the Markov chain induced by two FD
/// strategies from `cfg`.
pub fn evaluate_pair(
    g: &GameGraph,
    sigma: &StrategyFD,
    pi: &StrategyFD,
    cfg: &Configuration,
    sched: &CapSchedule,
) -> Result<ValueInterval> {
    sigma.check(g)?;
    pi.check(g)?;
    let f1 = fix_fd(g, sigma, &[(sigma.m0, cfg.state)]);
    let pi1 = lift_fd(&f1, pi);
    let f2 = fix_fd(&f1.game, &pi1, &[(pi.m0, 0)]);
    sandwich(&f2.game, Controller::Adversary, 0, cfg.energy, sched)
}

/// Interval for the opponent-optimal value of `EN(i) ∩ EPAR` against a
/// fixed FD strategy: `inf` over Minimizer responses when the Maximizer's
/// strategy is fixed, `sup` over Maximizer responses otherwise.
pub fn best_response_energy_parity(
    g: &GameGraph,
    fixed: &StrategyFD,
    cfg: &Configuration,
    sched: &CapSchedule,
) -> Result<ValueInterval> {
    fixed.check(g)?;
    let f = fix_fd(g, fixed, &[(fixed.m0, cfg.state)]);
    match fixed.owner {
        Owner::Max => sandwich(&f.game.dual(), Controller::Adversary, 0, cfg.energy, sched),
        _ => sandwich(&f.game, Controller::Player, 0, cfg.energy, sched),
    }
}
