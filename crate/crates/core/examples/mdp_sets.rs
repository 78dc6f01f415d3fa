//! Almost-sure sets of a maximizing MDP.
//!
//! States from which the controller can force, almost surely, `LimInf =
//! −∞` (`W1`), odd parity (`W2`), Loss (`W0`), or positive mean payoff with
//! even parity (`B`); plus exact parity, Gain and reachability values.
//! `W1 ∪ W2 ⊆ W0` always holds.
//!
//! ```bash
//! cargo run -p enpar --example mdp_sets
//! ```

use enpar::game::GameBuilder;
use enpar::mdp::{max_reach_value, mdp_gain_value, mdp_parity_value, set_b, set_w0, set_w1, set_w2};
use enpar::rational::rat;
use enpar::Owner;

fn show(mask: &[bool]) -> String {
    let s: Vec<String> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| s.to_string()).collect();
    format!("{{{}}}", s.join(", "))
}

fn main() -> enpar::Result<()> {
    // 0: choose a draining loop (1), an odd sink (2) or a coin (3)
    // 3: coin between the gaining even loop (4) and back to 0
    let mut b = GameBuilder::new();
    let s0 = b.add_state(Owner::Max, 2);
    let drain = b.add_state(Owner::Max, 0);
    let odd = b.add_state(Owner::Max, 1);
    let coin = b.add_state(Owner::Random, 2);
    let good = b.add_state(Owner::Max, 0);
    b.add_edge(s0, drain, 0, None);
    b.add_edge(s0, odd, 0, None);
    b.add_edge(s0, coin, -1, None);
    b.add_edge(drain, drain, -1, None);
    b.add_edge(odd, odd, 1, None);
    b.add_edge(coin, good, 0, Some(rat(1, 3)));
    b.add_edge(coin, s0, 0, Some(rat(2, 3)));
    b.add_edge(good, good, 1, None);
    let g = b.build();

    let (w0, w1, w2) = (set_w0(&g)?, set_w1(&g)?, set_w2(&g)?);
    println!("W1 = {}  W2 = {}  W0 = {}  B = {}", show(&w1), show(&w2), show(&w0), show(&set_b(&g)?));
    assert!((0..g.num_states()).all(|s| !(w1[s] || w2[s]) || w0[s]));

    let (parity, _) = mdp_parity_value(&g)?;
    let (gain, _) = mdp_gain_value(&g)?;
    let target: Vec<bool> = (0..g.num_states()).map(|s| s == good).collect();
    let (reach, _) = max_reach_value(&g, &target)?;
    for s in 0..g.num_states() {
        println!("state {s}: parity {}  gain {}  reach(good) {}", parity[s], gain[s], reach[s]);
    }
    Ok(())
}
