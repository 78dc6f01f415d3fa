//! End to end: `v′` within ε of `val(EN(i) ∩ EPAR)(s)` with ε-optimal
//! strategies for both players, verified against best responses.
//!
//! ```bash
//! cargo run -p enpar --example approximate
//! ```

use std::path::Path;

use enpar::game::Limits;
use enpar::io::load_game;
use enpar::pipeline::{approximate, ApproxOptions};
use enpar::rational::rat;
use enpar::Configuration;

fn main() -> enpar::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/hand/h21_min_walks.json");
    let g = load_game(&path, &Limits::default())?;
    let eps = rat(1, 16);
    let opts = ApproxOptions { verify: true, ..Default::default() };
    println!("energy   v′        exact       N   σ_ε modes   verified");
    for energy in 1..=4 {
        let cfg = Configuration { state: 0, energy };
        let r = approximate(&g, &cfg, &eps, &opts)?;
        // the Minimizer picks the walk with up-probability 2/3: 1 − 2^-i
        let exact = enpar::rational::one() - enpar::rational::pow2_neg(energy as u32);
        assert!(exact <= r.v_prime && &r.v_prime - &exact <= eps);
        let v = r.verification.as_ref().expect("verification requested");
        println!(
            "{energy:>6}   {:<8}  {exact:<10}  {:<3} {:<11} {}",
            r.v_prime.to_string(),
            r.n,
            r.sigma_eps.modes,
            v.certified
        );
    }
    Ok(())
}
