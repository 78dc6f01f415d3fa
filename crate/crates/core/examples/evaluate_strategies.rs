//! Certified intervals for fixed strategies: gambler's ruin.
//!
//! A walk moving up with probability `p` survives from credit `i` with
//! probability `1 − ((1−p)/p)^i` (and with probability 0 when `p ≤ 1/2`).
//! `evaluate_pair` brackets this exactly with two finite unfoldings.
//!
//! ```bash
//! cargo run -p enpar --example evaluate_strategies
//! ```

use enpar::evaluate::{evaluate_pair, CapSchedule};
use enpar::game::GameBuilder;
use enpar::rational::{int, pow2_neg, rat, Rat};
use enpar::strategy::StrategyFD;
use enpar::{Configuration, GameGraph, Owner};

fn walk(up: Rat) -> GameGraph {
    let mut b = GameBuilder::new();
    let s = b.add_state(Owner::Random, 0);
    b.add_edge(s, s, 1, Some(up.clone()));
    let down = b.add_state(Owner::Random, 0);
    b.add_edge(s, down, -1, Some(int(1) - up));
    b.add_edge(down, s, 0, Some(int(1)));
    b.build()
}

fn main() -> enpar::Result<()> {
    for (p, q) in [(1, 2), (3, 5), (3, 4)] {
        let g = walk(rat(p, q));
        let (sigma, pi) = (StrategyFD::lowest(&g, Owner::Max), StrategyFD::lowest(&g, Owner::Min));
        println!("up-probability {p}/{q}");
        for i in [1, 2, 4, 8] {
            let cfg = Configuration { state: 0, energy: i };
            let sched = CapSchedule::new(1, i, pow2_neg(10), 1 << 12);
            let iv = evaluate_pair(&g, &sigma, &pi, &cfg, &sched)?;
            let exact = if 2 * p <= q { int(0) } else { int(1) - num_traits::pow(rat(q - p, p), i as usize) };
            assert!(iv.contains(&exact));
            println!(
                "  i = {i}: [{:.6}, {:.6}] at cap {} contains {exact}",
                enpar::rational::to_f64(&iv.lo),
                enpar::rational::to_f64(&iv.hi),
                iv.cap_used
            );
        }
    }
    Ok(())
}
