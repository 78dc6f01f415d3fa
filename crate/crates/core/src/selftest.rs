//! The bundled brute-force oracle suite.
//!
//! The corpus directory holds three kinds of instances:
//!
//! * `hand/*.json`: small games with known answers in their `expect` block;
//! * `invalid/*.json`: malformed games that validation must reject with the
//!   expected error kind;
//! * `random/rNNN.json`: seeded random games of the corpus family,
//!   regenerated byte-for-byte by [`regen_random`].
//!
//! Every instance is checked for round-trip identity and duality, the
//! strategy-improvement solver against enumeration, and the pipeline's `v′`
//! against the cap-64 oracle bracket.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gain::{ssg_gain_value, GainSolution};
use crate::game::{Configuration, GameGraph, Limits, ValueVector};
use crate::io::{parse_game_json, to_json, GameJson};
use crate::oracle::{energy_parity_oracle, oracle_gap, OracleTable, ORACLE_CAP};
use crate::parity_game::{solve_parity_game, SolverMode};
use crate::pipeline::{approximate, ApproxOptions};
use crate::random::{random_game, RandomSpec};
use crate::rational::{parse_rat, rat, Rat};

/// Number of random instances in the corpus.
pub const RANDOM_INSTANCES: u64 = 100;

/// Energy levels checked against the oracle.
pub const LEVELS: std::ops::RangeInclusive<u64> = 0..=4;

/// Bundled corpus of this crate.
pub fn default_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn epsilons() -> [Rat; 2] {
    [rat(1, 4), rat(1, 16)]
}

fn random_name(seed: u64) -> String {
    format!("r{seed:03}")
}

fn random_json(seed: u64) -> String {
    let g = random_game(&RandomSpec::corpus(), seed);
    let mut j = GameJson::from_game(&g, Some(random_name(seed)));
    j.description = Some(format!("seeded random instance {seed} of the corpus family"));
    to_json(&j)
}

/// Rewrites `random/r000.json ..` from their seeds. Returns the count.
pub fn regen_random(corpus: &Path) -> Result<usize> {
    let dir = corpus.join("random");
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    for seed in 0..RANDOM_INSTANCES {
        let path = dir.join(format!("{}.json", random_name(seed)));
        std::fs::write(&path, random_json(seed)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(RANDOM_INSTANCES as usize)
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub instance: String,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckCount {
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SelftestReport {
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub checks: BTreeMap<String, CheckCount>,
    /// Random instances whose oracle bracket did not close (excluded from
    /// the closed-bracket comparisons).
    pub open_brackets: Vec<String>,
    pub failures: Vec<Failure>,
}

impl SelftestReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    fn merge(&mut self, other: InstanceLog) {
        self.instances += 1;
        for (check, ok, detail) in other.results {
            let c = self.checks.entry(check.clone()).or_default();
            if ok {
                c.passed += 1;
                self.passed += 1;
            } else {
                c.failed += 1;
                self.failed += 1;
                self.failures.push(Failure {
                    instance: other.name.clone(),
                    check,
                    detail,
                });
            }
        }
        if other.open_bracket {
            self.open_brackets.push(other.name);
        }
    }
}

struct InstanceLog {
    name: String,
    results: Vec<(String, bool, String)>,
    open_bracket: bool,
}

impl InstanceLog {
    fn new(name: &str) -> Self {
        InstanceLog {
            name: name.into(),
            results: Vec::new(),
            open_bracket: false,
        }
    }

    fn check(&mut self, check: &str, ok: bool, detail: impl FnOnce() -> String) {
        let detail = if ok { String::new() } else { detail() };
        self.results.push((check.into(), ok, detail));
    }

    /// Records an error as a failed check; returns the value on success.
    fn attempt<T>(&mut self, check: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(check, false, || format!("{}: {e}", e.kind()));
                None
            }
        }
    }
}

fn parse_values(v: &[String]) -> Result<Vec<Rat>> {
    v.iter()
        .map(|x| parse_rat(x).map_err(|e| Error::Parse { at: "expect".into(), msg: e.to_string() }))
        .collect()
}

fn show(v: &ValueVector) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// `val(EPAR) + val_{G^d}(EPAR of shifted colors) = 1` statewise.
pub fn duality_holds(g: &GameGraph, values: &ValueVector) -> Result<bool> {
    let d = solve_parity_game(&g.dual().shift_colors(), SolverMode::Improve)?;
    Ok(values.iter().zip(d.values.iter()).all(|(a, b)| (a + b).is_one()))
}

/// Checks shared by every valid instance: round trip, duality, Improve vs
/// Enumerate. Returns the Improve solution's values.
fn structural_checks(log: &mut InstanceLog, text: &str, j: &GameJson, g: &GameGraph) -> Option<ValueVector> {
    let back = parse_game_json(&to_json(j)).ok();
    log.check("round_trip", back.as_ref() == Some(j) && to_json(j) == text, || {
        "serialized form differs from the file".into()
    });
    let again = GameJson::from_game(g, j.name.clone());
    log.check("round_trip", again.states == j.states && again.edges == j.edges, || {
        "game does not reproduce its JSON".into()
    });
    let improve = log.attempt("improve_vs_enumerate", solve_parity_game(g, SolverMode::Improve))?;
    if let Some(en) = log.attempt("improve_vs_enumerate", solve_parity_game(g, SolverMode::Enumerate)) {
        log.check("improve_vs_enumerate", en.values == improve.values, || {
            format!("improve [{}] vs enumerate [{}]", show(&improve.values), show(&en.values))
        });
    }
    if let Some(ok) = log.attempt("duality", duality_holds(g, &improve.values)) {
        log.check("duality", ok, || "values of G and its dual do not sum to 1".into());
    }
    Some(improve.values)
}

/// Pipeline `v′` against the oracle for every state, level and ε.
fn oracle_checks(log: &mut InstanceLog, g: &GameGraph, gain: &GainSolution, oracle: &OracleTable) {
    for eps in epsilons() {
        for s in 0..g.num_states() {
            for i in LEVELS {
                let cfg = Configuration { state: s, energy: i };
                let Some(r) = log.attempt("theorem1", approximate(g, &cfg, &eps, &ApproxOptions::default())) else {
                    continue;
                };
                log.check("theorem1", oracle.consistent(s, i, &r.v_prime, &eps), || {
                    let (lo, hi) = oracle.interval(s, i);
                    format!("s={s} i={i} ε={eps}: v′={} oracle [{lo}, {hi}]", r.v_prime)
                });
                log.check("gain_dominates", r.v_prime <= gain.values[s], || {
                    format!("s={s} i={i}: v′={} above Gain {}", r.v_prime, gain.values[s])
                });
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn check_hand(path: &Path) -> InstanceLog {
    let name = instance_name(path);
    let mut log = InstanceLog::new(&name);
    let Some(text) = log.attempt("load", read(path)) else { return log };
    let Some(j) = log.attempt("load", parse_game_json(&text)) else { return log };
    let Some(g) = log.attempt("load", j.to_game(&Limits::default())) else { return log };
    let Some(values) = structural_checks(&mut log, &text, &j, &g) else { return log };
    let expect = j.expect.clone().unwrap_or_default();
    if let Some(want) = &expect.parity {
        if let Some(want) = log.attempt("expected_parity", parse_values(want)) {
            log.check("expected_parity", values.0 == want, || format!("got [{}]", show(&values)));
        }
    }
    let Some(gain) = log.attempt("expected_gain", ssg_gain_value(&g, SolverMode::Improve)) else { return log };
    if let Some(want) = &expect.gain {
        if let Some(want) = log.attempt("expected_gain", parse_values(want)) {
            log.check("expected_gain", gain.values.0 == want, || format!("got [{}]", show(&gain.values)));
        }
    }
    if expect.energy_parity.is_empty() {
        return log;
    }
    let Some(oracle) = log.attempt("expected_energy_parity", energy_parity_oracle(&g, &gain, ORACLE_CAP)) else {
        return log;
    };
    let eps = rat(1, 16);
    for e in &expect.energy_parity {
        let Some(want) = log.attempt("expected_energy_parity", parse_values(std::slice::from_ref(&e.value))) else {
            continue;
        };
        let want = &want[0];
        let (lo, hi) = oracle.interval(e.state, e.energy);
        log.check("expected_energy_parity", lo <= want && want <= hi, || {
            format!("s={} i={}: {want} outside oracle [{lo}, {hi}]", e.state, e.energy)
        });
        let cfg = Configuration { state: e.state, energy: e.energy };
        let opts = ApproxOptions { verify: true, ..Default::default() };
        if let Some(r) = log.attempt("expected_energy_parity", approximate(&g, &cfg, &eps, &opts)) {
            log.check("expected_energy_parity", *want <= r.v_prime && &r.v_prime - want <= eps, || {
                format!("s={} i={}: v′={} vs {want}", e.state, e.energy, r.v_prime)
            });
            let certified = r.verification.as_ref().is_some_and(|v| v.certified);
            log.check("strategies_verified", certified, || format!("s={} i={}", e.state, e.energy));
        }
    }
    log
}

fn check_invalid(path: &Path) -> InstanceLog {
    let name = instance_name(path);
    let mut log = InstanceLog::new(&name);
    let Some(text) = log.attempt("load", read(path)) else { return log };
    let Some(j) = log.attempt("load", parse_game_json(&text)) else { return log };
    let want = j.expect.as_ref().and_then(|e| e.error.clone()).unwrap_or_default();
    match j.to_game(&Limits::default()) {
        Ok(_) => log.check("rejected", false, || format!("accepted; expected {want}")),
        Err(e) => log.check("rejected", e.kind() == want, || format!("{} instead of {want}", e.kind())),
    }
    log
}

fn check_random(path: &Path) -> InstanceLog {
    let name = instance_name(path);
    let mut log = InstanceLog::new(&name);
    let Some(text) = log.attempt("load", read(path)) else { return log };
    let Some(j) = log.attempt("load", parse_game_json(&text)) else { return log };
    let Some(g) = log.attempt("load", j.to_game(&Limits::default())) else { return log };
    if let Some(seed) = name.strip_prefix('r').and_then(|s| s.parse::<u64>().ok()) {
        log.check("regenerates", random_json(seed) == text, || format!("seed {seed} yields a different game"));
    }
    if structural_checks(&mut log, &text, &j, &g).is_none() {
        return log;
    }
    let Some(gain) = log.attempt("theorem1", ssg_gain_value(&g, SolverMode::Improve)) else { return log };
    let Some(oracle) = log.attempt("theorem1", energy_parity_oracle(&g, &gain, ORACLE_CAP)) else { return log };
    log.open_bracket = !oracle.closed_up_to(*LEVELS.end(), &oracle_gap());
    oracle_checks(&mut log, &g, &gain, &oracle);
    log
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

/// Runs every check on the corpus at `corpus`. Instances run in parallel on
/// the current rayon pool; the report lists them in file order.
pub fn run_selftest(corpus: &Path) -> Result<SelftestReport> {
    let mut jobs: Vec<(PathBuf, fn(&Path) -> InstanceLog)> = Vec::new();
    for p in json_files(&corpus.join("hand"))? {
        jobs.push((p, check_hand));
    }
    for p in json_files(&corpus.join("invalid"))? {
        jobs.push((p, check_invalid));
    }
    for p in json_files(&corpus.join("random"))? {
        jobs.push((p, check_random));
    }
    if jobs.is_empty() {
        return Err(Error::Io(format!("{}: no corpus instances", corpus.display())));
    }
    let logs: Vec<InstanceLog> = jobs.par_iter().map(|(p, f)| f(p)).collect();
    let mut report = SelftestReport::default();
    for log in logs {
        report.merge(log);
    }
    let open = report.open_brackets.len();
    let random = report.checks.get("regenerates").map_or(0, |c| c.passed + c.failed);
    if random > 0 && open * 10 >= random {
        report.failed += 1;
        report.failures.push(Failure {
            instance: "corpus".into(),
            check: "open_brackets".into(),
            detail: format!("{open} of {random} oracle brackets open"),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpus_is_current() {
        for seed in [0, 7, 99] {
            let path = default_corpus().join("random").join(format!("{}.json", random_name(seed)));
            assert_eq!(read(&path).unwrap(), random_json(seed));
        }
    }

    #[test]
    fn hand_and_invalid_instances() {
        for dir in ["hand", "invalid"] {
            for p in json_files(&default_corpus().join(dir)).unwrap() {
                let log = if dir == "hand" { check_hand(&p) } else { check_invalid(&p) };
                for (check, ok, detail) in &log.results {
                    assert!(ok, "{}: {check}: {detail}", log.name);
                }
            }
        }
    }
}
