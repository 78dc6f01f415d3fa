//! `enpar`: batch command-line front end.
//!
//! Results go to stdout (JSON, or CSV where a value vector is the result);
//! errors go to stderr as `{"error": kind, "message": ..., "exit_code": n}`.
//! Exit codes: 0 ok, 1 input error, 2 budget or limit reached, 3 internal
//! invariant violated.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use enpar::bound::compute_n_game;
use enpar::evaluate::{best_response_energy_parity, evaluate_pair, CapSchedule};
use enpar::gain::ssg_gain_value_with;
use enpar::game::{Configuration, GameGraph, Limits, Owner, ValueVector};
use enpar::io::{self, OutputFormat, RunConfig};
use enpar::objectives::{estimate_energy_parity, sample_play};
use enpar::parity_game::{solve_parity_game_with, SolverMode};
use enpar::pipeline::{approximate, ApproxOptions};
use enpar::rational::{parse_rat, Rat};
use enpar::selftest::{default_corpus, regen_random, run_selftest};
use enpar::strategy::StrategyFD;
use enpar::unfold::{build_g_prime, saturating_unfold, Overflow};
use enpar::Error;

#[derive(Parser)]
#[command(name = "enpar", version, about = "Energy-parity values and ε-optimal strategies for stochastic games")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output format for value vectors.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    output: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Improve,
    Enumerate,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnfoldKind {
    /// `G′`: gadgets above `N` jump with the Gain value.
    GPrime,
    /// Energy clamped at the cap.
    Saturate,
    /// Energy above the cap counts as a win.
    Win,
}

#[derive(Args)]
struct GameArg {
    /// Game file (JSON).
    #[arg(long)]
    game: PathBuf,
    /// Largest accepted color.
    #[arg(long, default_value_t = Limits::default().max_color)]
    max_color: u32,
    /// Largest accepted |reward| (default: unbounded).
    #[arg(long)]
    max_reward: Option<i64>,
}

impl GameArg {
    fn load(&self) -> enpar::Result<GameGraph> {
        let limits = Limits {
            max_color: self.max_color,
            max_abs_reward: self.max_reward,
        };
        io::load_game(&self.game, &limits)
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Mode::Improve)]
    mode: Mode,
    /// Largest number of MD strategies an enumeration may visit.
    #[arg(long, default_value_t = enpar::parity_game::DEFAULT_BUDGET)]
    budget: u64,
}

impl SolverArgs {
    fn mode(&self) -> SolverMode {
        match self.mode {
            Mode::Improve => SolverMode::Improve,
            Mode::Enumerate => SolverMode::Enumerate,
        }
    }
}

#[derive(Args)]
struct StartArgs {
    #[arg(long, default_value_t = 0)]
    state: usize,
    /// Initial energy credit.
    #[arg(long, default_value_t = 1)]
    energy: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Check a game file against the model's invariants.
    Validate {
        #[command(flatten)]
        game: GameArg,
    },
    /// Exact values of the parity objective and optimal MD strategies.
    SolveParity {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Gain values (LimInf > −∞ and even parity) with σ* and π*.
    Gain {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Certified cutoff N for a precision ε.
    BoundN {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "1/8")]
        epsilon: String,
    },
    /// Unfold the game over energy levels and print (or save) the result.
    Unfold {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = UnfoldKind::GPrime)]
        kind: UnfoldKind,
        /// Cutoff N (G′) or cap (saturating kinds).
        #[arg(long)]
        n: u64,
        /// Write the unfolded game here instead of printing a report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Approximate val(EN(i) ∩ EPAR)(s) within ε, with ε-optimal strategies.
    Approx {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        start: StartArgs,
        #[arg(long, default_value = "1/8")]
        epsilon: String,
        /// Check both strategies against best responses.
        #[arg(long)]
        verify: bool,
        /// Largest cap of the verification sandwich.
        #[arg(long, default_value_t = enpar::evaluate::DEFAULT_CAP_LIMIT)]
        cap_limit: u64,
        /// Save sigma.json and pi.json into this directory.
        #[arg(long)]
        strategy_out: Option<PathBuf>,
        /// Include the run configuration and all Gain values in the report.
        #[arg(long)]
        dump_analysis: bool,
    },
    /// Certified interval for val(EN(i) ∩ EPAR) under fixed strategies.
    Evaluate {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        start: StartArgs,
        /// Maximizer strategy (JSON transducer).
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Minimizer strategy (JSON transducer).
        #[arg(long)]
        pi: Option<PathBuf>,
        /// Target width of the interval.
        #[arg(long, default_value = "1/256")]
        tol: String,
        #[arg(long, default_value_t = enpar::evaluate::DEFAULT_CAP_LIMIT)]
        cap_limit: u64,
    },
    /// Monte-Carlo estimate of EN(i) ∩ EPAR (heuristic; not a proof).
    Simulate {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        start: StartArgs,
        /// Maximizer strategy (default: lowest successor).
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Minimizer strategy (default: lowest successor).
        #[arg(long)]
        pi: Option<PathBuf>,
        #[arg(long, default_value_t = RunConfig::default().horizon)]
        horizon: usize,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the brute-force oracle suite on the bundled corpus.
    Selftest {
        /// Corpus directory (default: the bundled one).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Regenerate the random instances from their seeds first.
        #[arg(long)]
        regen: bool,
    },
}

fn rational(at: &str, text: &str) -> enpar::Result<Rat> {
    parse_rat(text).map_err(|e| Error::Parse { at: at.into(), msg: e.to_string() })
}

fn format(f: Format) -> OutputFormat {
    match f {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
    }
}

fn print_json<T: Serialize>(value: &T) {
    print!("{}", io::to_json(value));
}

fn print_values(values: &ValueVector, fmt: OutputFormat, report: impl Serialize) {
    match fmt {
        OutputFormat::Csv => print!("{}", io::values_csv(values)),
        OutputFormat::Json => print_json(&report),
    }
}

fn load_fd(path: &Option<PathBuf>, g: &GameGraph, owner: Owner) -> enpar::Result<StrategyFD> {
    let st = match path {
        Some(p) => io::load_strategy(p, g)?,
        None => StrategyFD::lowest(g, owner),
    };
    if st.owner != owner {
        return Err(Error::BadStrategy(format!("expected a {owner:?} strategy, found {:?}", st.owner)));
    }
    Ok(st)
}

fn check_state(g: &GameGraph, s: usize) -> enpar::Result<()> {
    if s >= g.num_states() {
        return Err(Error::Parse { at: "state".into(), msg: format!("no state {s}") });
    }
    Ok(())
}

#[derive(Serialize)]
struct ValuesReport<'a, T: Serialize> {
    values: &'a ValueVector,
    #[serde(flatten)]
    extra: T,
}

#[derive(Serialize)]
struct UnfoldReport {
    n: u64,
    /// `state@level`, `win` or `lose` for every product state.
    labels: Vec<String>,
    game: io::GameJson,
}

#[derive(Serialize)]
struct Analysis<'a> {
    config: &'a RunConfig,
    gain_values: &'a ValueVector,
}

#[derive(Serialize)]
struct AnalysisReport<'a, T: Serialize> {
    #[serde(flatten)]
    result: &'a T,
    analysis: Analysis<'a>,
}

fn run(cli: Cli) -> enpar::Result<i32> {
    let fmt = format(cli.output);
    match cli.command {
        Command::Validate { game } => {
            let g = game.load()?;
            print_json(&json!({
                "valid": true,
                "states": g.num_states(),
                "edges": g.num_edges(),
                "max_color": g.max_color(),
                "max_abs_reward": g.max_reward(),
            }));
        }
        Command::SolveParity { game, solver } => {
            let g = game.load()?;
            let sol = solve_parity_game_with(&g, solver.mode(), solver.budget)?;
            let extra = json!({
                "mode_used": sol.mode_used,
                "sigma": sol.sigma.to_json(&g),
                "pi": sol.pi.to_json(&g),
            });
            print_values(&sol.values, fmt, ValuesReport { values: &sol.values, extra });
        }
        Command::Gain { game, solver } => {
            let g = game.load()?;
            let gain = ssg_gain_value_with(&g, solver.mode(), solver.budget)?;
            let extra = json!({
                "mode_used": gain.mode_used,
                "pi_star": gain.pi_star.to_json(&g),
                "sigma_star": gain.sigma_star.to_json(&g),
                "sigma_star_counter_bound": gain.sigma_info.k,
            });
            print_values(&gain.values, fmt, ValuesReport { values: &gain.values, extra });
        }
        Command::BoundN { game, solver, epsilon } => {
            let g = game.load()?;
            let eps = rational("epsilon", &epsilon)?;
            if eps <= Rat::from_integer(0.into()) {
                return Err(Error::Parse { at: "epsilon".into(), msg: "must be positive".into() });
            }
            let gain = ssg_gain_value_with(&g, solver.mode(), solver.budget)?;
            print_json(&compute_n_game(&g, &gain, &eps)?);
        }
        Command::Unfold { game, solver, kind, n, out } => {
            let g = game.load()?;
            let (product, labels): (GameGraph, Vec<String>) = match kind {
                UnfoldKind::GPrime => {
                    let gain = ssg_gain_value_with(&g, solver.mode(), solver.budget)?;
                    let u = build_g_prime(&g, n, &gain)?;
                    let labels = (0..u.product.num_states())
                        .map(|p| match u.decode(p) {
                            Some((s, l)) => format!("{s}@{l}"),
                            None if p == u.win() => "win".into(),
                            None => "lose".into(),
                        })
                        .collect();
                    (u.product, labels)
                }
                UnfoldKind::Saturate | UnfoldKind::Win => {
                    let overflow = match kind {
                        UnfoldKind::Saturate => Overflow::Saturate,
                        _ => Overflow::Win,
                    };
                    let u = saturating_unfold(&g, n, overflow);
                    let labels = (0..u.game.num_states())
                        .map(|p| match u.decode(p) {
                            Some((s, l)) => format!("{s}@{l}"),
                            None if p == u.win() => "win".into(),
                            None => "lose".into(),
                        })
                        .collect();
                    (u.game, labels)
                }
            };
            match out {
                Some(path) => {
                    io::save_game(&path, &product, Some(format!("unfolding n={n}")))?;
                    print_json(&json!({"states": product.num_states(), "edges": product.num_edges(), "out": path}));
                }
                None => print_json(&UnfoldReport {
                    n,
                    labels,
                    game: io::GameJson::from_game(&product, Some(format!("unfolding n={n}"))),
                }),
            }
        }
        Command::Approx { game, solver, start, epsilon, verify, cap_limit, strategy_out, dump_analysis } => {
            let cfg = RunConfig {
                epsilon: rational("epsilon", &epsilon)?,
                state: start.state,
                energy: start.energy,
                solver_mode: solver.mode(),
                strategy_budget: solver.budget,
                cap_limit,
                output: fmt,
                dump_analysis,
                ..RunConfig::default()
            };
            cfg.validate()?;
            let g = game.load()?;
            let opts = ApproxOptions {
                mode: cfg.solver_mode,
                budget: cfg.strategy_budget,
                cap_limit: cfg.cap_limit,
                verify,
            };
            let start = Configuration { state: cfg.state, energy: cfg.energy };
            let r = approximate(&g, &start, &cfg.epsilon, &opts)?;
            if let Some(dir) = strategy_out {
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
                io::save_strategy(&dir.join("sigma.json"), &r.sigma, &g)?;
                io::save_strategy(&dir.join("pi.json"), &r.pi, &g)?;
            }
            match fmt {
                OutputFormat::Csv => {
                    println!("state,energy,epsilon,v_prime,N");
                    println!("{},{},{},{},{}", r.state, r.energy, r.epsilon, r.v_prime, r.n);
                }
                OutputFormat::Json if dump_analysis => {
                    let gain = ssg_gain_value_with(&g, cfg.solver_mode, cfg.strategy_budget)?;
                    print_json(&AnalysisReport {
                        result: &r,
                        analysis: Analysis { config: &cfg, gain_values: &gain.values },
                    });
                }
                OutputFormat::Json => print_json(&r),
            }
        }
        Command::Evaluate { game, start, sigma, pi, tol, cap_limit } => {
            let g = game.load()?;
            check_state(&g, start.state)?;
            let tol = rational("tol", &tol)?;
            let cfg = Configuration { state: start.state, energy: start.energy };
            let sched = CapSchedule::new(0, cfg.energy, tol, cap_limit);
            let iv = match (&sigma, &pi) {
                (Some(_), Some(_)) => {
                    evaluate_pair(&g, &load_fd(&sigma, &g, Owner::Max)?, &load_fd(&pi, &g, Owner::Min)?, &cfg, &sched)?
                }
                (Some(_), None) => best_response_energy_parity(&g, &load_fd(&sigma, &g, Owner::Max)?, &cfg, &sched)?,
                (None, Some(_)) => best_response_energy_parity(&g, &load_fd(&pi, &g, Owner::Min)?, &cfg, &sched)?,
                (None, None) => {
                    return Err(Error::Parse { at: "evaluate".into(), msg: "give --sigma, --pi or both".into() })
                }
            };
            print_json(&iv);
            if !iv.closed {
                return Err(Error::CapLimit { limit: cap_limit, gap: iv.width() });
            }
        }
        Command::Simulate { game, start, sigma, pi, horizon, runs, seed } => {
            let g = game.load()?;
            check_state(&g, start.state)?;
            if horizon == 0 || runs == 0 {
                return Err(Error::Parse { at: "budgets".into(), msg: "must be positive".into() });
            }
            let cfg = Configuration { state: start.state, energy: start.energy };
            let smax = load_fd(&sigma, &g, Owner::Max)?;
            let smin = load_fd(&pi, &g, Owner::Min)?;
            let est = estimate_energy_parity(&g, &smax, &smin, &cfg, horizon, runs, seed)?;
            let (_, first) = sample_play(&g, &smax, &smin, &cfg, horizon, seed)?;
            print_json(&json!({
                "note": "Monte-Carlo estimate; parity is judged on the final half of each play",
                "estimate": est,
                "first_play": first,
            }));
        }
        Command::Selftest { corpus, regen } => {
            let corpus = corpus.unwrap_or_else(default_corpus);
            if regen {
                let n = regen_random(&corpus)?;
                log::info!("regenerated {n} random instances");
            }
            let report = run_selftest(&corpus)?;
            print_json(&report);
            if !report.ok() {
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn report_error(e: &Error) -> ExitCode {
    let code = e.exit_code();
    eprintln!(
        "{}",
        json!({"error": e.kind(), "message": e.to_string(), "exit_code": code})
    );
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    io::init_logging();
    std::panic::set_hook(Box::new(|info| {
        eprintln!("{}", json!({"error": "Internal", "message": info.to_string(), "exit_code": 3}));
        std::process::exit(3);
    }));
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return report_error(&Error::Parse { at: "arguments".into(), msg: e.to_string().trim().to_string() });
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return report_error(&Error::Parse { at: "--jobs".into(), msg: "must be positive".into() });
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            return report_error(&Error::Internal(e.to_string()));
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => report_error(&e),
    }
}
