//! Brute-force reference values from cap-64 unfoldings.
//!
//! For a seeded random game, brackets `val(EN(l) ∩ EPAR)(s)` from both sides
//! and checks the pipeline's `v′` against the bracket.
//!
//! ```bash
//! cargo run -p enpar --example oracle_bracket -- 5
//! ```

use enpar::gain::ssg_gain_value;
use enpar::oracle::{energy_parity_oracle, oracle_gap, ORACLE_CAP};
use enpar::parity_game::SolverMode;
use enpar::pipeline::{approximate, ApproxOptions};
use enpar::random::{random_game, RandomSpec};
use enpar::rational::{rat, to_f64};
use enpar::Configuration;

fn main() -> enpar::Result<()> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let g = random_game(&RandomSpec::corpus(), seed);
    let gain = ssg_gain_value(&g, SolverMode::Improve)?;
    let oracle = energy_parity_oracle(&g, &gain, ORACLE_CAP)?;
    println!("seed {seed}: {} states, bracket closed up to level 4: {}", g.num_states(), oracle.closed_up_to(4, &oracle_gap()));

    let eps = rat(1, 16);
    for s in 0..g.num_states() {
        for l in 0..=4 {
            let (lo, hi) = oracle.interval(s, l);
            let r = approximate(&g, &Configuration { state: s, energy: l }, &eps, &ApproxOptions::default())?;
            let ok = oracle.consistent(s, l, &r.v_prime, &eps);
            println!(
                "s={s} l={l}: oracle [{:.5}, {:.5}]  v′ = {:.5}  {}",
                to_f64(lo),
                to_f64(hi),
                to_f64(&r.v_prime),
                if ok { "ok" } else { "MISMATCH" }
            );
        }
    }
    Ok(())
}
