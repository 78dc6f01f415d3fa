//! Monte-Carlo plays under the ε-optimal strategies.
//!
//! Simulation is a smoke check only: parity is judged on the final half of
//! each play. The estimate is compared with the exact value.
//!
//! ```bash
//! cargo run -p enpar --example simulate_plays
//! ```

use std::path::Path;

use enpar::game::Limits;
use enpar::io::load_game;
use enpar::objectives::{check_prefix, estimate_energy_parity, sample_play, Objective};
use enpar::pipeline::{approximate, ApproxOptions};
use enpar::rational::rat;
use enpar::Configuration;

fn main() -> enpar::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/hand/h20_biased_walk.json");
    let g = load_game(&path, &Limits::default())?;
    let cfg = Configuration { state: 0, energy: 2 };
    let r = approximate(&g, &cfg, &rat(1, 32), &ApproxOptions::default())?;

    let (prefix, summary) = sample_play(&g, &r.sigma, &r.pi, &cfg, 200, 7)?;
    println!("one play: {summary:?}");
    println!("EN(2) on its prefix: {:?}", check_prefix(&Objective::EnergyEn { k: 2 }, &prefix));

    let est = estimate_energy_parity(&g, &r.sigma, &r.pi, &cfg, 2_000, 4_000, 0)?;
    println!(
        "estimate {:.4} ± {:.4} over {} runs; exact 8/9 ≈ {:.4}; v′ = {}",
        est.frequency,
        est.std_error,
        est.runs,
        8.0 / 9.0,
        r.v_prime
    );
    Ok(())
}
