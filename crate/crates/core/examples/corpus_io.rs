//! Reading and writing games, strategies and values.
//!
//! Loads every bundled hand-written instance, checks the round trip, prints
//! the parity values as CSV, and shows a validation error.
//!
//! ```bash
//! cargo run -p enpar --example corpus_io
//! ```

use std::path::Path;

use enpar::game::Limits;
use enpar::io::{game_to_string, load_game, parse_game, parse_strategy, to_json, values_csv};
use enpar::parity_game::{solve_parity_game, SolverMode};
use enpar::strategy::StrategyFD;

fn main() -> enpar::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/hand");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for path in &paths {
        let g = load_game(path, &Limits::default())?;
        assert_eq!(parse_game(&game_to_string(&g, None), &Limits::default())?, g);
        let sol = solve_parity_game(&g, SolverMode::Improve)?;
        let sigma = StrategyFD::from_md(&g, &sol.sigma);
        assert_eq!(parse_strategy(&to_json(&sigma.to_json(&g)), &g)?, sigma);
        println!("{}: {} states, {} edges", path.file_stem().unwrap().to_string_lossy(), g.num_states(), g.num_edges());
    }

    let g = load_game(&dir.join("h07_reach_gadget.json"), &Limits::default())?;
    print!("{}", values_csv(&solve_parity_game(&g, SolverMode::Improve)?.values));

    let bad = r#"{"states": [{"id": 0, "owner": "rand", "color": 0}],
                  "edges": [{"from": 0, "to": 0, "reward": 0, "prob": "1/2"}]}"#;
    let err = parse_game(bad, &Limits::default()).unwrap_err();
    println!("rejected: {} ({err})", err.kind());
    Ok(())
}
