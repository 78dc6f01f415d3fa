//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every check compares against an independent brute-force oracle: cap-64
//! unfoldings bracketed from both sides, exhaustive enumeration of
//! positional strategies, or closed forms.
//!
//! ```bash
//! cargo test -p enpar --test acceptance -- --nocapture
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;

use num_traits::{One, Zero};
use rayon::prelude::*;

use enpar::bound::compute_n_game;
use enpar::evaluate::{best_response_energy_parity, evaluate_pair, CapSchedule, DEFAULT_CAP_LIMIT};
use enpar::gain::{ssg_gain_value, GainSolution};
use enpar::game::{GameBuilder, Limits};
use enpar::io::load_game;
use enpar::mdp::{chain_parity_value, max_reach_value, mdp_gain_value, mdp_parity_value, set_w0, set_w1, set_w2};
use enpar::oracle::{energy_parity_oracle, oracle_gap, OracleTable, ORACLE_CAP};
use enpar::parity_game::{solve_parity_game, SolverMode};
use enpar::pipeline::{approximate, ApproxOptions, ApproxResult};
use enpar::random::{random_game, RandomSpec, Shape};
use enpar::rational::{int, pow2_neg, rat, Rat};
use enpar::selftest::{default_corpus, epsilons, LEVELS};
use enpar::strategy::{fix_md, StrategyFD, StrategyMD};
use enpar::unfold::{build_g_prime, build_unfolding};
use enpar::{Configuration, GameGraph, Owner};

type Outcome = Result<String, String>;

struct Instance {
    name: String,
    g: GameGraph,
    gain: GainSolution,
    oracle: OracleTable,
    /// The bracket is within the oracle gap at levels `0..=4`.
    closed: bool,
}

/// `(instance, state, energy, ε index)` → pipeline result.
type Results = HashMap<(usize, usize, u64, usize), ApproxResult>;

fn load_dir(dir: &str) -> Vec<(String, GameGraph)> {
    let mut paths: Vec<_> = std::fs::read_dir(default_corpus().join(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, load_game(&p, &Limits::default()).unwrap())
        })
        .collect()
}

fn instances() -> Vec<Instance> {
    load_dir("random")
        .into_par_iter()
        .map(|(name, g)| {
            let gain = ssg_gain_value(&g, SolverMode::Improve).unwrap();
            let oracle = energy_parity_oracle(&g, &gain, ORACLE_CAP).unwrap();
            let closed = oracle.closed_up_to(*LEVELS.end(), &oracle_gap());
            Instance { name, g, gain, oracle, closed }
        })
        .collect()
}

fn approximations(corpus: &[Instance]) -> Results {
    let keys: Vec<(usize, usize, u64, usize)> = corpus
        .iter()
        .enumerate()
        .flat_map(|(k, inst)| {
            (0..inst.g.num_states())
                .flat_map(move |s| LEVELS.flat_map(move |i| (0..epsilons().len()).map(move |e| (k, s, i, e))))
        })
        .collect();
    keys.into_par_iter()
        .map(|(k, s, i, e)| {
            let cfg = Configuration { state: s, energy: i };
            let r = approximate(&corpus[k].g, &cfg, &epsilons()[e], &ApproxOptions::default()).unwrap();
            ((k, s, i, e), r)
        })
        .collect()
}

/// Theorem 1: `0 ≤ v′ − val ≤ ε` against the oracle bracket.
fn criterion_1(corpus: &[Instance], results: &Results) -> Outcome {
    let excluded = corpus.iter().filter(|i| !i.closed).count();
    let mut checked = 0;
    for (&(k, s, i, e), r) in results {
        let inst = &corpus[k];
        if !inst.closed {
            continue;
        }
        checked += 1;
        if !inst.oracle.consistent(s, i, &r.v_prime, &epsilons()[e]) {
            let (lo, hi) = inst.oracle.interval(s, i);
            return Err(format!("{} s={s} i={i} ε={}: v′={} oracle [{lo}, {hi}]", inst.name, epsilons()[e], r.v_prime));
        }
    }
    if excluded * 10 >= corpus.len() {
        return Err(format!("{excluded} of {} brackets open", corpus.len()));
    }
    Ok(format!("{checked} queries on {} instances, {excluded} excluded", corpus.len() - excluded))
}

/// Lemma 7: `G[N]` with bracketed true jump values reproduces the oracle,
/// and `G′` exceeds it by at most ε.
fn criterion_2(corpus: &[Instance]) -> Outcome {
    let gap = oracle_gap();
    let mut tested = 0;
    let mut skipped = 0;
    for inst in corpus {
        let g = &inst.g;
        let r = g.max_reward() as u64;
        for eps in epsilons() {
            let n = compute_n_game(g, &inst.gain, &eps).map_err(|e| e.to_string())?.n;
            if n > 6 {
                continue;
            }
            if !inst.oracle.closed_up_to(n + r, &gap) {
                skipped += 1;
                continue;
            }
            let (lo_t, hi_t) = inst.oracle.jump_tables(n, r).map_err(|e| e.to_string())?;
            let solve = |u: &GameGraph| solve_parity_game(u, SolverMode::Improve).unwrap().values;
            let lo_u = build_unfolding(g, n, &lo_t).map_err(|e| e.to_string())?;
            let hi_u = build_unfolding(g, n, &hi_t).map_err(|e| e.to_string())?;
            let gp = build_g_prime(g, n, &inst.gain).map_err(|e| e.to_string())?;
            let (a, b, v) = (solve(&lo_u.product), solve(&hi_u.product), solve(&gp.product));
            for s in 0..g.num_states() {
                for l in 1..=n {
                    let (a, b) = (&a[lo_u.id(s, l)], &b[hi_u.id(s, l)]);
                    let v = &v[gp.id(s, l)];
                    let (lo, hi) = inst.oracle.interval(s, l);
                    let agree = a.max(lo) <= b.min(hi) && b - a <= gap;
                    let within = v >= a && v - b <= eps;
                    if !(agree && within) {
                        return Err(format!(
                            "{} N={n} s={s} l={l}: G[N] in [{a}, {b}], oracle [{lo}, {hi}], G′ {v}",
                            inst.name
                        ));
                    }
                }
            }
            tested += 1;
        }
    }
    if tested == 0 {
        return Err("no instance with N ≤ 6".into());
    }
    Ok(format!("{tested} (instance, ε) pairs with N ≤ 6, {skipped} skipped (open bracket)"))
}

/// Lemma 6: Gain dominates, values are nondecreasing in the credit, and the
/// gap at `N` is at most ε.
fn criterion_3(corpus: &[Instance]) -> Outcome {
    let mut tested = 0;
    for inst in corpus.iter().filter(|i| i.closed) {
        let o = &inst.oracle;
        for eps in epsilons() {
            let n = compute_n_game(&inst.g, &inst.gain, &eps).map_err(|e| e.to_string())?.n;
            if n > o.cap {
                return Err(format!("{}: N = {n} above the oracle cap", inst.name));
            }
            for s in 0..inst.g.num_states() {
                let gain = &inst.gain.values[s];
                for i in 0..=n.max(*LEVELS.end()) {
                    let (lo, hi) = o.interval(s, i);
                    if lo > gain || (i > 0 && o.interval(s, i - 1).0 > hi) {
                        return Err(format!("{} s={s} i={i}: [{lo}, {hi}] vs Gain {gain}", inst.name));
                    }
                }
                let (lo, _) = o.interval(s, n);
                if gain - lo > &eps + o.gap(s, n) {
                    return Err(format!("{} s={s}: Gain {gain} − val(N={n}) ≥ {lo} exceeds ε", inst.name));
                }
            }
            tested += 1;
        }
    }
    Ok(format!("{tested} (instance, ε) pairs"))
}

fn duality(g: &GameGraph) -> bool {
    let v = solve_parity_game(g, SolverMode::Improve).unwrap().values;
    let d = solve_parity_game(&g.dual().shift_colors(), SolverMode::Improve).unwrap().values;
    v.iter().zip(d.iter()).all(|(a, b)| (a + b).is_one())
}

fn criterion_4(corpus: &[Instance]) -> Outcome {
    let hand = load_dir("hand");
    for (name, g) in corpus.iter().map(|i| (&i.name, &i.g)).chain(hand.iter().map(|(n, g)| (n, g))) {
        if !duality(g) {
            return Err(format!("{name}: values do not sum to 1"));
        }
    }
    Ok(format!("{} games", corpus.len() + hand.len()))
}

/// ε-optimal strategies against best responses with tolerance 2⁻⁸.
fn criterion_5(corpus: &[Instance], results: &Results) -> Outcome {
    let tol = pow2_neg(8);
    let keys: Vec<_> = results.keys().filter(|&&(_, s, _, _)| s == 0).copied().collect();
    let fails: Vec<String> = keys
        .par_iter()
        .filter_map(|&(k, s, i, e)| {
            let (g, r, eps) = (&corpus[k].g, &results[&(k, s, i, e)], &epsilons()[e]);
            let cfg = Configuration { state: s, energy: i };
            let sched = CapSchedule::new(r.n, i, tol.clone(), DEFAULT_CAP_LIMIT);
            let floor = &r.v_prime - eps - &tol;
            let ceil = &r.v_prime + &tol;
            let a = best_response_energy_parity(g, &r.sigma, &cfg, &sched.clone().until_lo_at_least(floor.clone()));
            let b = best_response_energy_parity(g, &r.pi, &cfg, &sched.until_hi_at_most(ceil.clone()));
            match (a, b) {
                (Ok(a), Ok(b)) if a.lo >= floor && b.hi <= ceil => None,
                (a, b) => Some(format!("{} i={i} ε={eps}: v′={} σ_ε {a:?} π_ε {b:?}", corpus[k].name, r.v_prime)),
            }
        })
        .collect();
    match fails.first() {
        Some(f) => Err(format!("{} failures, first: {f}", fails.len())),
        None => Ok(format!("{} strategy pairs from state 0", keys.len())),
    }
}

/// All MD strategies of `owner`.
fn all_md(g: &GameGraph, owner: Owner) -> Vec<StrategyMD> {
    let mut out = vec![vec![None; g.num_states()]];
    for s in g.owned_by(owner) {
        out = out
            .into_iter()
            .flat_map(|c| {
                g.out_edges(s).iter().map(move |&e| {
                    let mut c = c.clone();
                    c[s] = Some(e);
                    c
                })
            })
            .collect();
    }
    out.into_iter().map(|choice| StrategyMD { owner, choice }).collect()
}

fn statewise_max(vs: impl Iterator<Item = Vec<Rat>>) -> Vec<Rat> {
    vs.reduce(|a, b| a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect()).unwrap()
}

/// The chain with the states in `absorb` turned into even sinks.
fn absorb_even(g: &GameGraph, absorb: &[bool]) -> GameGraph {
    let mut b = GameBuilder::new();
    for s in 0..g.num_states() {
        b.add_state(g.owner(s), if absorb[s] { 0 } else { g.color(s) });
    }
    for s in 0..g.num_states() {
        if absorb[s] {
            b.add_edge(s, s, 0, Some(int(1)));
        } else {
            for &e in g.out_edges(s) {
                let ed = g.edge(e);
                b.add_edge(s, ed.to, ed.reward, ed.prob.clone());
            }
        }
    }
    b.build()
}

/// Lemma 4 on random maximizing MDPs.
fn criterion_6() -> Outcome {
    let spec = RandomSpec::corpus().shape(Shape::MaxMdp);
    let small = spec.states(2, 4);
    let fails: Vec<String> = (0..500u64)
        .into_par_iter()
        .filter_map(|seed| {
            let g = random_game(&spec, 10_000 + seed);
            let (w0, w1, w2) = (set_w0(&g).unwrap(), set_w1(&g).unwrap(), set_w2(&g).unwrap());
            if (0..g.num_states()).any(|s| (w1[s] || w2[s]) && !w0[s]) {
                return Some(format!("seed {seed}: W1 ∪ W2 ⊄ W0"));
            }
            let g = random_game(&small, 20_000 + seed);
            let (w0, w2) = (set_w0(&g).unwrap(), set_w2(&g).unwrap());
            let chains: Vec<GameGraph> = all_md(&g, Owner::Max).iter().map(|st| fix_md(&g, st).game).collect();
            // odd parity without ever reaching W2 has probability 0
            for c in &chains {
                if chain_parity_value(&absorb_even(c, &w2)).iter().any(|v| !v.is_one()) {
                    return Some(format!("seed {seed}: OPAR ∩ ¬F W2 has positive probability"));
                }
            }
            let loss = statewise_max(chains.iter().map(|c| {
                let (gain, _) = mdp_gain_value(c).unwrap();
                gain.iter().map(|v| int(1) - v).collect()
            }));
            let (reach, _) = max_reach_value(&g, &w0).unwrap();
            (0..g.num_states()).find(|&s| reach[s] > loss[s]).map(|s| {
                format!("seed {seed} s={s}: reach(W0) {} above enumerated Loss {}", reach[s], loss[s])
            })
        })
        .collect();
    match fails.first() {
        Some(f) => Err(f.clone()),
        None => Ok("500 MDPs (inclusion), 500 MDPs with ≤ 4 states (enumeration)".into()),
    }
}

fn walk(up: Rat) -> GameGraph {
    let mut b = GameBuilder::new();
    let s = b.add_state(Owner::Random, 0);
    let down = b.add_state(Owner::Random, 0);
    b.add_edge(s, s, 1, Some(up.clone()));
    b.add_edge(s, down, -1, Some(int(1) - up));
    b.add_edge(down, s, 0, Some(int(1)));
    b.build()
}

/// Engine cross-checks against enumeration and closed forms.
fn criterion_7() -> Outcome {
    let five = RandomSpec::corpus().states(5, 5);
    let improve_fail = (0..200u64).into_par_iter().find_map_first(|seed| {
        let g = random_game(&five, 30_000 + seed);
        let a = solve_parity_game(&g, SolverMode::Improve).unwrap().values;
        let b = solve_parity_game(&g, SolverMode::Enumerate).unwrap().values;
        (a != b).then(|| format!("seed {seed}: Improve differs from Enumerate"))
    });
    if let Some(f) = improve_fail {
        return Err(f);
    }
    let mdp = RandomSpec::corpus().states(4, 4).shape(Shape::MaxMdp);
    let mdp_fail = (0..200u64).into_par_iter().find_map_first(|seed| {
        let g = random_game(&mdp, 40_000 + seed);
        let (v, _) = mdp_parity_value(&g).unwrap();
        let best = statewise_max(all_md(&g, Owner::Max).iter().map(|st| chain_parity_value(&fix_md(&g, st).game).0));
        (v.0 != best).then(|| format!("seed {seed}: MDP parity differs from enumeration"))
    });
    if let Some(f) = mdp_fail {
        return Err(f);
    }
    for (p, q) in [(1, 2), (2, 3), (3, 4)] {
        let g = walk(rat(p, q));
        let (smax, smin) = (StrategyFD::lowest(&g, Owner::Max), StrategyFD::lowest(&g, Owner::Min));
        for i in 1..=8u64 {
            let cfg = Configuration { state: 0, energy: i };
            let sched = CapSchedule::new(1, i, pow2_neg(10), 1 << 12);
            let iv = evaluate_pair(&g, &smax, &smin, &cfg, &sched).map_err(|e| e.to_string())?;
            let exact = if 2 * p <= q { Rat::zero() } else { int(1) - num_traits::pow(rat(q - p, p), i as usize) };
            if !iv.contains(&exact) {
                return Err(format!("walk {p}/{q} i={i}: {exact} outside [{}, {}]", iv.lo, iv.hi));
            }
        }
    }
    Ok("200 games, 200 MDPs, gambler's ruin for i = 1..8".into())
}

fn run_approx(game: &Path, extra: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_enpar"))
        .args(["approx", "--game"])
        .arg(game)
        .args(["--state", "0", "--energy", "2", "--epsilon", "1/16", "--verify"])
        .args(extra)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

/// Byte-identical `approx` output across runs and thread counts.
fn criterion_8() -> Outcome {
    let games = ["random/r003.json", "random/r042.json", "hand/h21_min_walks.json", "hand/h16_max_vs_min.json"];
    for name in games {
        let path = default_corpus().join(name);
        let first = run_approx(&path, &["--dump-analysis"]);
        for extra in [&["--dump-analysis"][..], &["--dump-analysis", "--jobs", "1"], &["--dump-analysis", "--jobs", "3"]] {
            if run_approx(&path, extra) != first {
                return Err(format!("{name}: output differs with {extra:?}"));
            }
        }
    }
    Ok(format!("{} games × 4 runs", games.len()))
}

#[test]
fn acceptance() {
    let corpus = instances();
    let results = approximations(&corpus);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("Theorem 1: 0 ≤ v′ − val ≤ ε against the oracle", Box::new(|| criterion_1(&corpus, &results))),
        ("Lemma 7: G[N] is exact, G′ within ε", Box::new(|| criterion_2(&corpus))),
        ("Lemma 6: Gain dominates, monotone, gap ≤ ε at N", Box::new(|| criterion_3(&corpus))),
        ("duality of G and its dual", Box::new(|| criterion_4(&corpus))),
        ("ε-optimal strategies against best responses", Box::new(|| criterion_5(&corpus, &results))),
        ("Lemma 4: almost-sure sets", Box::new(criterion_6)),
        ("engine cross-checks", Box::new(criterion_7)),
        ("deterministic approx output", Box::new(criterion_8)),
    ];
    let mut failed = Vec::new();
    for (k, (title, check)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        match check() {
            Ok(msg) => println!("PASS criterion {} ({title}): {msg} [{:.1?}]", k + 1, t.elapsed()),
            Err(msg) => {
                println!("FAIL criterion {} ({title}): {msg}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
