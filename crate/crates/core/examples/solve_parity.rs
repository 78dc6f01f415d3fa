//! Exact parity values of a stochastic game.
//!
//! Solves a bundled game with strategy improvement and with exhaustive
//! enumeration, prints the values and optimal positional strategies, and
//! checks determinacy through the dual game.
//!
//! ```bash
//! cargo run -p enpar --example solve_parity
//! ```

use std::path::Path;

use enpar::game::Limits;
use enpar::io::load_game;
use enpar::parity_game::{solve_parity_game, SolverMode};

fn main() -> enpar::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/hand/h16_max_vs_min.json");
    let g = load_game(&path, &Limits::default())?;

    let improve = solve_parity_game(&g, SolverMode::Improve)?;
    let enumerate = solve_parity_game(&g, SolverMode::Enumerate)?;
    assert_eq!(improve.values, enumerate.values);

    for (s, v) in improve.values.iter().enumerate() {
        let sigma = improve.sigma.successor(&g, s).map_or("-".into(), |t| t.to_string());
        let pi = improve.pi.successor(&g, s).map_or("-".into(), |t| t.to_string());
        println!("state {s} ({:?}, color {}): value {v}   σ → {sigma}   π → {pi}", g.owner(s), g.color(s));
    }

    // Odd parity for the Minimizer is even parity after shifting colors.
    let dual = solve_parity_game(&g.dual().shift_colors(), SolverMode::Improve)?;
    for (a, b) in improve.values.iter().zip(dual.values.iter()) {
        assert_eq!(a + b, enpar::rational::one());
    }
    println!("values of the game and of its dual sum to 1 at every state");
    Ok(())
}
