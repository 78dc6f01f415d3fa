//! Finite parity games that encode the energy counter.
//!
//! `G′` tracks levels `1..=N` and jumps to a win with the Gain value above
//! `N`; the saturating unfolding clamps the counter at a cap instead. Both
//! are ordinary parity games, solved exactly.
//!
//! ```bash
//! cargo run -p enpar --example energy_unfolding
//! ```

use std::path::Path;

use enpar::gain::ssg_gain_value;
use enpar::game::Limits;
use enpar::io::load_game;
use enpar::parity_game::{solve_parity_game, SolverMode};
use enpar::unfold::{build_g_prime, saturating_unfold, Overflow};

fn main() -> enpar::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/hand/h22_retry_mdp.json");
    let g = load_game(&path, &Limits::default())?;
    let gain = ssg_gain_value(&g, SolverMode::Improve)?;
    let n = 4;

    let gp = build_g_prime(&g, n, &gain)?;
    let gp_values = solve_parity_game(&gp.product, SolverMode::Improve)?.values;
    let sat = saturating_unfold(&g, n, Overflow::Saturate);
    let sat_values = solve_parity_game(&sat.game, SolverMode::Improve)?.values;

    println!("G′ has {} states, the saturating unfolding {}", gp.product.num_states(), sat.game.num_states());
    println!("level   G′(0, l)   saturated(0, l)   exact 1 − 2^-l");
    for l in 1..=n {
        let exact = enpar::rational::one() - enpar::rational::pow2_neg(l as u32);
        println!("{l:>5}   {:>8}   {:>15}   {exact:>14}", gp_values[gp.id(0, l)], sat_values[sat.id(0, l)]);
    }
    Ok(())
}
