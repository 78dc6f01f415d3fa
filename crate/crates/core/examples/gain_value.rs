//! Gain values: `LimInf > −∞` together with even parity.
//!
//! The Gain value is the limit of the energy-parity values as the initial
//! credit grows. The example computes it for a Minimizer choosing between
//! two biased random walks, and shows the memory of the synthesized `σ*`.
//!
//! ```bash
//! cargo run -p enpar --example gain_value
//! ```

use std::path::Path;

use enpar::gain::ssg_gain_value;
use enpar::game::Limits;
use enpar::io::{load_game, to_json};
use enpar::parity_game::SolverMode;

fn main() -> enpar::Result<()> {
    for name in ["h21_min_walks", "h12_coin_loops", "h19_fair_walk"] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("corpus/hand/{name}.json"));
        let g = load_game(&path, &Limits::default())?;
        let gain = ssg_gain_value(&g, SolverMode::Improve)?;
        let values: Vec<String> = gain.values.iter().map(|v| v.to_string()).collect();
        println!("{name}: Gain = [{}]", values.join(", "));
        println!(
            "  σ* uses {} mode(s), counter bound {}; solved by {:?}",
            gain.sigma_star.modes, gain.sigma_info.k, gain.mode_used
        );
    }

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/hand/h21_min_walks.json");
    let g = load_game(&path, &Limits::default())?;
    let gain = ssg_gain_value(&g, SolverMode::Improve)?;
    print!("π* of h21_min_walks:\n{}", to_json(&gain.pi_star.to_json(&g)));
    Ok(())
}
