//! The cut-off `N` above which playing for Gain loses at most `ε`.
//!
//! The quantity to bound is the chance that the energy of a start level `j`
//! ever drops to 0 before the opponent reaches its almost-sure
//! `LimInf = −∞` region (`W1`). Two certificates are combined, both checked
//! in exact arithmetic:
//!
//! * a saturating unfolding at cap `4j` (saturation only lowers the
//!   counter), solved exactly — tight for small `j`, but a recurrent random
//!   walk always drops eventually once the counter is finite;
//! * an exponential supermartingale `z^energy · w(state)` with `z < 1`,
//!   giving `P(Term(j)) ≤ z^j · w(s)`; `z` and `w` are guessed in floating
//!   point and then verified exactly.
//!
//! `N(s)` is the least `j` certified by either, found by doubling and then
//! bisection.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gain::GainSolution;
use crate::game::{GameBuilder, GameGraph, Owner};
use crate::mdp::reach::{max_reach_unchecked, require_max_mdp};
use crate::mdp::wsets::set_w1;
use crate::rational::{serde_rat, to_f64, Rat};
use crate::strategy::fix_fd;
use crate::unfold::{saturating_unfold, Overflow};

/// Start levels beyond this make the search give up.
pub const SEARCH_LIMIT: u64 = 1 << 30;

/// Supermartingale levels above this are not worth computing exactly.
const EXACT_POWER_LIMIT: f64 = (1u64 << 20) as f64;

/// Default ratio between the saturation cap and the start level.
pub const CAP_FACTOR: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum BoundMethod {
    /// `max(h, ⌈log_c(ε(1−c))⌉)` from externally supplied constants.
    ClosedForm {
        #[serde(with = "serde_rat")]
        c: Rat,
        h: u64,
    },
    /// Certified search; `cap_used` is the largest saturation cap solved.
    SaturatingCap { cap_used: u64 },
    /// Exponential supermartingale with base `z`.
    Supermartingale {
        #[serde(with = "serde_rat")]
        z: Rat,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    #[serde(rename = "N")]
    pub n: u64,
    /// `N(s)` per start state; `n` is their maximum.
    pub per_state: Vec<u64>,
    pub method: BoundMethod,
    #[serde(with = "serde_rat")]
    pub epsilon: Rat,
}

/// `max(h, n)` for the least `n` with `cⁿ ≤ ε(1−c)`, by exact comparisons
/// (repeated squaring, then bisection).
pub fn n_from_constants(c: &Rat, h: u64, eps: &Rat) -> u64 {
    assert!(*c > Rat::zero() && *c < Rat::one(), "c must lie strictly between 0 and 1");
    assert!(*eps > Rat::zero(), "epsilon must be positive");
    let threshold = eps * (Rat::one() - c);
    if threshold >= Rat::one() {
        return h;
    }
    // c^hi ≤ threshold < c^lo
    let (mut lo, mut hi) = (0u64, 1u64);
    while num_traits::pow(c.clone(), hi as usize) > threshold {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if num_traits::pow(c.clone(), mid as usize) <= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    h.max(hi)
}

/// The MDP with `W1` states turned into reward-0 self-loops, so that
/// termination can only happen before reaching `W1`.
pub(crate) fn avoid_w1(g: &GameGraph) -> Result<GameGraph> {
    let w1 = set_w1(g)?;
    let mut b = GameBuilder::new();
    for s in 0..g.num_states() {
        b.add_state(if w1[s] { Owner::Random } else { g.owner(s) }, g.color(s));
    }
    for s in 0..g.num_states() {
        if w1[s] {
            b.add_edge(s, s, 0, Some(Rat::one()));
        } else {
            for &e in g.out_edges(s) {
                let ed = g.edge(e);
                b.add_edge(s, ed.to, ed.reward, ed.prob.clone());
            }
        }
    }
    Ok(b.build())
}

/// Upper bound on `sup_σ P(Term(j) ∩ ¬F W1)` from each of `starts`, by
/// saturating the counter at `cap` (saturation only lowers the counter).
fn term_bounds(avoiding: &GameGraph, j: u64, cap: u64, starts: &[usize]) -> Vec<Rat> {
    assert!(j >= 1 && cap >= j, "need 1 ≤ j ≤ cap");
    let sat = saturating_unfold(avoiding, cap, Overflow::Saturate);
    let mut target = vec![false; sat.game.num_states()];
    target[sat.lose()] = true;
    let (v, _) = max_reach_unchecked(&sat.game, &target);
    starts.iter().map(|&s| v[sat.id(s, j)].clone()).collect()
}

/// Certified upper bound on `sup_σ P(Term(j) ∩ ¬F W1)`, maximized over
/// start states: the smaller of the saturating bound at `cap` and the
/// supermartingale bound. Start level 0 has terminated already.
pub fn term_avoid_w1_bound(mdp: &GameGraph, j: u64, cap: u64) -> Result<Rat> {
    require_max_mdp(mdp)?;
    if j == 0 {
        return Ok(if set_w1(mdp)?.iter().all(|&w| w) { Rat::zero() } else { Rat::one() });
    }
    let avoiding = avoid_w1(mdp)?;
    let starts: Vec<usize> = (0..mdp.num_states()).collect();
    let sat = term_bounds(&avoiding, j, cap, &starts);
    let marts = supermartingales(&avoiding);
    Ok(starts
        .iter()
        .map(|&s| {
            marts
                .iter()
                .map(|m| m.bound(s, j))
                .fold(sat[s].clone(), |a, b| a.min(b))
        })
        .max()
        .unwrap_or_else(Rat::zero))
}

/// Largest start level at which the saturating bound is tried.
const SATURATING_LIMIT: u64 = 8;

/// Per start: the least certified `j` and the certificate that gave it.
fn search_n(mdp: &GameGraph, eps: &Rat, starts: &[usize]) -> Result<Vec<(u64, BoundMethod)>> {
    let avoiding = avoid_w1(mdp)?;
    let marts = supermartingales(&avoiding);
    let sat_ok = |j: u64, s: usize| term_bounds(&avoiding, j, CAP_FACTOR * j, &[s])[0] <= *eps;
    starts
        .par_iter()
        .map(|&s| {
            let mut best: Option<(u64, BoundMethod)> = None;
            for m in &marts {
                if let Some(j) = m.least_level(s, eps) {
                    if best.as_ref().is_none_or(|b| j < b.0) {
                        best = Some((j, BoundMethod::Supermartingale { z: m.z.clone() }));
                    }
                }
            }
            // the saturating bound, by doubling then bisection
            let limit = best.as_ref().map_or(SATURATING_LIMIT, |b| b.0.saturating_sub(1).min(SATURATING_LIMIT));
            let (mut lo, mut hi) = (0u64, 1u64);
            while hi <= limit && !sat_ok(hi, s) {
                lo = hi;
                hi *= 2;
            }
            if hi <= limit {
                let cap = CAP_FACTOR * hi;
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if sat_ok(mid, s) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                best = Some((hi, BoundMethod::SaturatingCap { cap_used: cap }));
            }
            best.ok_or(Error::Divergence { limit: SEARCH_LIMIT })
        })
        .collect()
}

/// `N` for a maximizing MDP: the largest per-state result of the search.
pub fn compute_n_mdp(mdp: &GameGraph, eps: &Rat) -> Result<u64> {
    require_max_mdp(mdp)?;
    let starts: Vec<usize> = (0..mdp.num_states()).collect();
    Ok(search_n(mdp, eps, &starts)?.into_iter().map(|r| r.0).max().unwrap_or(1))
}

/// `N` for a game: fix `σ*`, view the Minimizer's product MDP as a
/// maximizing MDP, and search from each start state's product state.
pub fn compute_n_game(g: &GameGraph, gain: &GainSolution, eps: &Rat) -> Result<BoundReport> {
    let sigma = &gain.sigma_star;
    let starts: Vec<(usize, usize)> = (0..g.num_states()).map(|s| (sigma.m0, s)).collect();
    let f = fix_fd(g, sigma, &starts);
    let dual = f.game.dual();
    let product_starts: Vec<usize> = starts.iter().map(|&(m, s)| f.state(m, s).unwrap()).collect();
    let results = search_n(&dual, eps, &product_starts)?;
    let (n, method) = results
        .iter()
        .max_by_key(|r| r.0)
        .cloned()
        .unwrap_or((1, BoundMethod::SaturatingCap { cap_used: CAP_FACTOR }));
    Ok(BoundReport {
        n,
        per_state: results.into_iter().map(|r| r.0).collect(),
        method,
        epsilon: eps.clone(),
    })
}

/// Certified bounds `u(s, j) ≥ sup_π P(Term(j) ∩ ¬F W1)` against `σ*`
/// started fresh at `s`, where `W1` is where the Minimizer can force
/// `liminf = −∞`. Then `val(EN(j) ∩ EPAR)(s) ≥ Gain(s) − u(s, j)`.
#[derive(Debug, Clone)]
pub struct TerminationBound {
    marts: Vec<Supermartingale>,
    /// Product state of `(σ*.m0, s)` for every base state `s`.
    starts: Vec<usize>,
}

impl TerminationBound {
    pub fn new(g: &GameGraph, gain: &GainSolution) -> Result<Self> {
        let sigma = &gain.sigma_star;
        let pairs: Vec<(usize, usize)> = (0..g.num_states()).map(|s| (sigma.m0, s)).collect();
        let f = fix_fd(g, sigma, &pairs);
        let starts = pairs.iter().map(|&(m, s)| f.state(m, s).unwrap()).collect();
        Ok(TerminationBound {
            marts: supermartingales(&avoid_w1(&f.game.dual())?),
            starts,
        })
    }

    /// `1` when no certificate was found.
    pub fn bound(&self, s: usize, j: u64) -> Rat {
        self.marts
            .iter()
            .map(|m| m.bound(self.starts[s], j))
            .min()
            .unwrap_or_else(Rat::one)
    }
}

/// Certified `(z, w)`: `w ≥ 1` and, at every controlled state and edge,
/// `z^r · w(to) ≤ w(from)`, at random states the expectation of the same.
/// Then `z^energy · w(state)` is a supermartingale and
/// `P(Term(j)) ≤ z^j · w(s)` from state `s`.
#[derive(Debug, Clone)]
pub struct Supermartingale {
    pub z: Rat,
    pub w: Vec<Rat>,
}

impl Supermartingale {
    pub fn bound(&self, s: usize, j: u64) -> Rat {
        (num_traits::pow(self.z.clone(), j as usize) * &self.w[s]).min(Rat::one())
    }

    /// Least `j ≥ 1` with `z^j · w(s) ≤ eps`.
    pub fn least_level(&self, s: usize, eps: &Rat) -> Option<u64> {
        if self.z.is_zero() {
            return Some(1);
        }
        // z^j ≤ eps / w(s)  ⇔  z^j ≤ t·(1 − z) with t = eps / (w(s)(1 − z))
        let t = eps / (&self.w[s] * (Rat::one() - &self.z));
        let estimate = (to_f64(eps) / to_f64(&self.w[s])).ln() / to_f64(&self.z).ln();
        if !(estimate <= EXACT_POWER_LIMIT) {
            return None;
        }
        Some(n_from_constants(&self.z, 1, &t))
    }

    /// Exact check of the supermartingale inequalities.
    pub fn verify(&self, g: &GameGraph) -> bool {
        let powers = Powers::new(&self.z, g.max_reward());
        self.w.iter().all(|w| *w >= Rat::one())
            && (0..g.num_states()).all(|s| {
                let out = g.out_edges(s);
                if g.owner(s) == Owner::Random {
                    let sum: Rat = out
                        .iter()
                        .map(|&e| {
                            let ed = g.edge(e);
                            g.prob(e) * powers.get(ed.reward) * &self.w[ed.to]
                        })
                        .sum();
                    sum <= self.w[s]
                } else {
                    out.iter().all(|&e| {
                        let ed = g.edge(e);
                        powers.get(ed.reward) * &self.w[ed.to] <= self.w[s]
                    })
                }
            })
    }
}

/// `z^r` for `|r| ≤ R`.
struct Powers {
    r: i64,
    table: Vec<Rat>,
}

impl Powers {
    fn new(z: &Rat, r: i64) -> Powers {
        let table = (-r..=r)
            .map(|k| {
                if k >= 0 {
                    num_traits::pow(z.clone(), k as usize)
                } else {
                    num_traits::pow(z.recip(), (-k) as usize)
                }
            })
            .collect();
        Powers { r, table }
    }

    fn get(&self, k: i64) -> &Rat {
        &self.table[(k + self.r) as usize]
    }
}

/// Least solution `w ≥ 1` of the inequalities in floating point, if the
/// iteration settles.
fn float_weights(g: &GameGraph, z: f64) -> Option<Vec<f64>> {
    let n = g.num_states();
    let probs: Vec<f64> = (0..g.num_edges()).map(|e| to_f64(&g.prob(e))).collect();
    let factor: Vec<f64> = (0..g.num_edges()).map(|e| z.powi(g.edge(e).reward as i32)).collect();
    let mut w = vec![1.0f64; n];
    for _ in 0..20_000 {
        let mut change: f64 = 0.0;
        for s in 0..n {
            let out = g.out_edges(s);
            let v = if g.owner(s) == Owner::Random {
                out.iter().map(|&e| probs[e] * factor[e] * w[g.edge(e).to]).sum::<f64>()
            } else {
                out.iter().map(|&e| factor[e] * w[g.edge(e).to]).fold(0.0, f64::max)
            };
            let v = v.max(1.0);
            if v > w[s] {
                change = change.max((v - w[s]) / w[s]);
                w[s] = v;
            }
        }
        if !w.iter().all(|x| x.is_finite() && *x < 1e12) {
            return None;
        }
        if change < 1e-12 {
            return Some(w);
        }
    }
    None
}

/// Rounds up to a multiple of `2^-bits`.
fn ceil_dyadic(x: f64, bits: u32) -> Rat {
    let scale = (1u64 << bits) as f64;
    Rat::new(BigInt::from((x * scale).ceil() as i128), BigInt::from(1u64 << bits))
}

/// Least multiple of `2^-bits` that is `≥ x`.
fn ceil_dyadic_rat(x: &Rat, bits: u32) -> Rat {
    let scale = BigInt::from(1u64) << bits;
    Rat::new((x * Rat::from_integer(scale.clone())).ceil().to_integer(), scale)
}

fn certify(g: &GameGraph, z: &Rat) -> Option<Supermartingale> {
    let w = float_weights(g, to_f64(z))?;
    let powers = Powers::new(z, g.max_reward());
    for slack in [1e-9, 1e-6, 1e-3] {
        let w: Vec<Rat> = w.iter().map(|x| ceil_dyadic(x * (1.0 + slack), 24)).collect();
        let m = Supermartingale { z: z.clone(), w: w.clone() };
        if m.verify(g) {
            return Some(m);
        }
        // rounding breaks constraints that hold with equality (zero-slack
        // chains through controlled states); raising restores them
        if let Some(w) = repair(g, &powers, w) {
            let m = Supermartingale { z: z.clone(), w };
            if m.verify(g) {
                return Some(m);
            }
        }
    }
    None
}

/// Raises each weight to the right-hand side of its inequality until
/// nothing changes (at most a few sweeps). Controlled states are raised
/// exactly; random states, which usually have slack, are rounded up to a
/// dyadic to keep the numbers short.
fn repair(g: &GameGraph, powers: &Powers, mut w: Vec<Rat>) -> Option<Vec<Rat>> {
    for _sweep in 0..4 * g.num_states() + 4 {
        let mut changed = false;
        for s in 0..g.num_states() {
            let step = |e: usize| {
                let ed = g.edge(e);
                powers.get(ed.reward) * &w[ed.to]
            };
            let out = g.out_edges(s);
            let rhs = if g.owner(s) == Owner::Random {
                ceil_dyadic_rat(&out.iter().map(|&e| g.prob(e) * step(e)).sum(), 32)
            } else {
                out.iter().map(|&e| step(e)).max().expect("successor")
            };
            if rhs > w[s] {
                w[s] = rhs;
                changed = true;
            }
        }
        if !changed {
            return Some(w);
        }
    }
    None
}

/// Certified supermartingales for a few bases between the smallest base
/// the floating-point iteration accepts and 1.
pub fn supermartingales(g: &GameGraph) -> Vec<Supermartingale> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if float_weights(g, 1.0 - 1e-9).is_none() {
        return Vec::new();
    }
    for _ in 0..30 {
        let mid = (lo + hi) / 2.0;
        if float_weights(g, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut out: Vec<Supermartingale> = Vec::new();
    for f in [0.0, 0.01, 0.1, 0.3, 0.6] {
        let z = ceil_dyadic(hi + (1.0 - hi) * f, 16);
        if z >= Rat::one() || out.iter().any(|m| m.z == z) {
            continue;
        }
        if let Some(m) = certify(g, &z) {
            out.push(m);
        }
    }
    out
}

/// Report for externally supplied constants `(c, h)`.
pub fn closed_form_report(g: &GameGraph, c: &Rat, h: u64, eps: &Rat) -> BoundReport {
    let n = n_from_constants(c, h, eps).max(1);
    BoundReport {
        n,
        per_state: vec![n; g.num_states()],
        method: BoundMethod::ClosedForm { c: c.clone(), h },
        epsilon: eps.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Edge, StateInfo};
    use crate::random::{random_game, RandomSpec, Shape};
    use crate::rational::{int, pow2_neg, rat};

    #[test]
    fn closed_form_examples() {
        assert_eq!(n_from_constants(&rat(1, 2), 0, &rat(1, 2)), 2);
        assert_eq!(n_from_constants(&rat(1, 2), 100, &rat(1, 2)), 100);
        for (c, eps) in [(rat(1, 2), rat(1, 3)), (rat(2, 3), rat(1, 100)), (rat(9, 10), rat(1, 7))] {
            let n = n_from_constants(&c, 0, &eps);
            let threshold = &eps * (int(1) - &c);
            let naive = (0..).find(|&k| num_traits::pow(c.clone(), k) <= threshold).unwrap() as u64;
            assert_eq!(n, naive);
            assert!(n_from_constants(&c, 0, &(&eps / int(2))) >= n);
        }
    }

    /// ±1 walk: state 0 steps up or down, states 1 and 2 return to it.
    fn walk(up: Rat) -> GameGraph {
        let down = int(1) - &up;
        let rand = StateInfo { owner: Owner::Random, color: 0 };
        GameGraph::new(
            vec![rand.clone(), rand.clone(), rand],
            vec![
                Edge { from: 0, to: 1, reward: 1, prob: Some(up) },
                Edge { from: 0, to: 2, reward: -1, prob: Some(down) },
                Edge { from: 1, to: 0, reward: 0, prob: Some(int(1)) },
                Edge { from: 2, to: 0, reward: 0, prob: Some(int(1)) },
            ],
        )
        .unwrap()
    }

    fn term_bound_from(g: &GameGraph, s: usize, j: u64) -> Rat {
        let avoiding = avoid_w1(g).unwrap();
        supermartingales(&avoiding).iter().map(|m| m.bound(s, j)).min().unwrap()
    }

    #[test]
    fn gamblers_ruin() {
        // ruin probability from j is (1/3)^j
        let g = walk(rat(3, 4));
        for j in 1..6 {
            let b = term_avoid_w1_bound(&g, j, 4 * j).unwrap();
            let b = b.min(term_bound_from(&g, 0, j));
            let exact = num_traits::pow(rat(1, 3), j as usize);
            assert!(b >= exact);
            assert!(b <= &exact * rat(11, 10), "j = {j}: {b}");
        }
        let n = search_n(&g, &pow2_neg(10), &[0]).unwrap()[0].0;
        assert_eq!(n, 7);
    }

    #[test]
    fn trivial_bounds() {
        let spec = RandomSpec::corpus().shape(Shape::MaxMdp);
        for seed in 0..30 {
            let g = random_game(&spec, seed);
            let nonneg = GameGraph::new(
                (0..g.num_states()).map(|s| StateInfo { owner: g.owner(s), color: g.color(s) }).collect(),
                g.edges().iter().map(|e| Edge { reward: e.reward.abs(), ..e.clone() }).collect(),
            )
            .unwrap();
            assert!(term_avoid_w1_bound(&nonneg, 1, 4).unwrap().is_zero());
            assert_eq!(compute_n_mdp(&nonneg, &rat(1, 16)).unwrap(), 1);
            assert_eq!(compute_n_mdp(&g, &int(1)).unwrap(), 1);
        }
        // everything in W1: a fair walk
        let g = walk(rat(1, 2));
        assert!(term_avoid_w1_bound(&g, 3, 12).unwrap().is_zero());
    }

    #[test]
    fn monotone_in_cap_and_level() {
        let spec = RandomSpec::corpus().shape(Shape::MaxMdp);
        for seed in 0..30 {
            let g = random_game(&spec, seed);
            for j in 1..4 {
                let a = term_avoid_w1_bound(&g, j, 2 * j).unwrap();
                let b = term_avoid_w1_bound(&g, j, 4 * j).unwrap();
                let c = term_avoid_w1_bound(&g, j + 1, 4 * j + 4).unwrap();
                assert!(a >= b && b >= c, "seed {seed} j {j}");
            }
        }
    }
}
