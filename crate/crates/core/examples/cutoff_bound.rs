//! The cutoff `N`: above it the energy-parity value is within ε of Gain.
//!
//! `N` is certified by an exponential supermartingale; the example shows
//! how it grows as ε shrinks, and compares it with the exact gambler's-ruin
//! values of a biased walk.
//!
//! ```bash
//! cargo run -p enpar --example cutoff_bound
//! ```

use std::path::Path;

use enpar::bound::compute_n_game;
use enpar::gain::ssg_gain_value;
use enpar::game::Limits;
use enpar::io::load_game;
use enpar::parity_game::SolverMode;
use enpar::rational::{pow2_neg, rat};

fn main() -> enpar::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/hand/h20_biased_walk.json");
    let g = load_game(&path, &Limits::default())?;
    let gain = ssg_gain_value(&g, SolverMode::Improve)?;
    for k in [2, 4, 8, 16] {
        let eps = pow2_neg(k);
        let report = compute_n_game(&g, &gain, &eps)?;
        // survival from credit N is 1 − (1/3)^N
        let gap = num_traits::pow(rat(1, 3), report.n as usize);
        assert!(gap <= eps);
        println!(
            "ε = {eps:<8} N = {:<3} true gap at N = {gap:<10} method {}",
            report.n,
            serde_json::to_string(&report.method).expect("reports serialize")
        );
    }
    Ok(())
}
