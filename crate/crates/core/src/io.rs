//! File formats and run configuration.
//!
//! Games are JSON documents:
//!
//! ```json
//! {
//!   "name": "coin",
//!   "states": [ {"id": 0, "owner": "rand", "color": 0},
//!               {"id": 1, "owner": "max", "color": 0} ],
//!   "edges": [ {"from": 0, "to": 1, "reward": 1, "prob": "1/2"},
//!              {"from": 0, "to": 0, "reward": -1, "prob": "1/2"},
//!              {"from": 1, "to": 1, "reward": 0} ]
//! }
//! ```
//!
//! Probabilities (and every other rational) are strings `"p/q"` in lowest
//! terms; `prob` is present exactly on edges leaving `rand` states.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Edge, GameGraph, Limits, Owner, StateInfo, ValueVector};
use crate::parity_game::SolverMode;
use crate::rational::{fmt_rat, parse_rat, pow2_neg, Rat};
use crate::strategy::{StrategyFD, StrategyJson};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateJson {
    pub id: usize,
    pub owner: Owner,
    pub color: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: usize,
    pub to: usize,
    pub reward: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<String>,
}

/// Known answers attached to a bundled instance (checked by `selftest`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Validation must fail with this error kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// `EPAR` values per state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<Vec<String>>,
    /// Gain values per state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<Vec<String>>,
    /// Exact `val(EN(energy) ∩ EPAR)(state)` values.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub energy_parity: Vec<EnergyParityExpect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParityExpect {
    pub state: usize,
    pub energy: u64,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub states: Vec<StateJson>,
    pub edges: Vec<EdgeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

impl GameJson {
    pub fn from_game(g: &GameGraph, name: Option<String>) -> Self {
        GameJson {
            name,
            description: None,
            expect: None,
            states: g
                .states()
                .iter()
                .enumerate()
                .map(|(id, s)| StateJson {
                    id,
                    owner: s.owner,
                    color: s.color,
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeJson {
                    from: e.from,
                    to: e.to,
                    reward: e.reward,
                    prob: e.prob.as_ref().map(fmt_rat),
                })
                .collect(),
        }
    }

    pub fn to_game(&self, limits: &Limits) -> Result<GameGraph> {
        for (i, s) in self.states.iter().enumerate() {
            if s.id != i {
                return Err(Error::NonDenseIds { expected: i, found: s.id });
            }
        }
        let states = self.states.iter().map(|s| StateInfo { owner: s.owner, color: s.color }).collect();
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let prob = match &e.prob {
                    Some(p) => Some(parse_rat(p).map_err(|err| Error::Parse {
                        at: format!("edges[{i}].prob"),
                        msg: err.to_string(),
                    })?),
                    None => None,
                };
                Ok(Edge {
                    from: e.from,
                    to: e.to,
                    reward: e.reward,
                    prob,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GameGraph::with_limits(states, edges, *limits)
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        at: format!("line {} column {}", e.line(), e.column()),
        msg: e.to_string(),
    }
}

pub fn parse_game_json(text: &str) -> Result<GameJson> {
    serde_json::from_str::<GameJson>(text).map_err(json_error)
}

pub fn parse_game(text: &str, limits: &Limits) -> Result<GameGraph> {
    parse_game_json(text)?.to_game(limits)
}

pub fn game_to_string(g: &GameGraph, name: Option<String>) -> String {
    serde_json::to_string_pretty(&GameJson::from_game(g, name)).expect("games serialize")
}

pub fn load_game(path: &Path, limits: &Limits) -> Result<GameGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_game(&text, limits).map_err(|e| match e {
        Error::Parse { at, msg } => Error::Parse {
            at: format!("{}: {at}", path.display()),
            msg,
        },
        e => e,
    })
}

pub fn save_game(path: &Path, g: &GameGraph, name: Option<String>) -> Result<()> {
    write(path, &(game_to_string(g, name) + "\n"))
}

pub fn parse_strategy(text: &str, g: &GameGraph) -> Result<StrategyFD> {
    StrategyFD::from_json(g, &serde_json::from_str::<StrategyJson>(text).map_err(json_error)?)
}

pub fn load_strategy(path: &Path, g: &GameGraph) -> Result<StrategyFD> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_strategy(&text, g)
}

pub fn save_strategy(path: &Path, st: &StrategyFD, g: &GameGraph) -> Result<()> {
    save_report(path, &st.to_json(g))
}

/// One row per state: `state,value` with exact `p/q` values.
pub fn values_csv(values: &ValueVector) -> String {
    let mut out = String::from("state,value\n");
    for (s, v) in values.iter().enumerate() {
        out.push_str(&format!("{s},{}\n", fmt_rat(v)));
    }
    out
}

pub fn save_values(path: &Path, values: &ValueVector, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => write(path, &values_csv(values)),
        OutputFormat::Json => save_report(path, values),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

pub fn save_report<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &to_json(value))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Everything that determines the output of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(with = "crate::rational::serde_rat")]
    pub epsilon: Rat,
    pub state: usize,
    pub energy: u64,
    pub solver_mode: SolverMode,
    /// Largest number of MD strategies an enumeration may visit.
    pub strategy_budget: u64,
    /// Largest cap of the evaluation sandwich.
    pub cap_limit: u64,
    /// Steps per simulated play.
    pub horizon: usize,
    pub seed: u64,
    pub output: OutputFormat,
    pub dump_analysis: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            epsilon: pow2_neg(3),
            state: 0,
            energy: 1,
            solver_mode: SolverMode::Improve,
            strategy_budget: crate::parity_game::DEFAULT_BUDGET,
            cap_limit: crate::evaluate::DEFAULT_CAP_LIMIT,
            horizon: 10_000,
            seed: 0,
            output: OutputFormat::Json,
            dump_analysis: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |at: &str, msg: &str| Err(Error::Parse { at: at.into(), msg: msg.into() });
        if self.epsilon <= Rat::from_integer(0.into()) {
            return bad("epsilon", "must be positive");
        }
        if self.strategy_budget == 0 || self.cap_limit == 0 || self.horizon == 0 {
            return bad("budgets", "must be positive");
        }
        Ok(())
    }
}

/// Logging to stderr, filtered by the `ENPAR_LOG` variable (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("ENPAR_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_game, RandomSpec};

    #[test]
    fn round_trip() {
        for seed in 0..30 {
            let g = random_game(&RandomSpec::corpus(), seed);
            let text = game_to_string(&g, Some(format!("r{seed}")));
            let h = parse_game(&text, &Limits::default()).unwrap();
            assert_eq!(g, h);
            assert_eq!(text, game_to_string(&h, Some(format!("r{seed}"))));
            let st = StrategyFD::lowest(&g, Owner::Max);
            let back = parse_strategy(&to_json(&st.to_json(&g)), &g).unwrap();
            assert_eq!(st, back);
        }
    }

    #[test]
    fn rejections() {
        let l = Limits::default();
        let negative = r#"{"states":[{"id":0,"owner":"rand","color":0}],
            "edges":[{"from":0,"to":0,"reward":0,"prob":"-1"}]}"#;
        assert_eq!(parse_game(negative, &l).unwrap_err().kind(), "BadDistribution");
        let gap = r#"{"states":[{"id":1,"owner":"max","color":0}],"edges":[]}"#;
        assert_eq!(parse_game(gap, &l).unwrap_err().kind(), "NonDenseIds");
        let junk = "{\n  \"states\": [\n    {\"id\": 0, \"owner\": \"maxx\", \"color\": 0}]}";
        match parse_game(junk, &l).unwrap_err() {
            Error::Parse { at, .. } => assert!(at.starts_with("line 3"), "{at}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn csv_rows() {
        let v = ValueVector::new(vec![crate::rational::rat(2, 4), crate::rational::int(1)]);
        assert_eq!(values_csv(&v), "state,value\n0,1/2\n1,1/1\n");
    }
}
