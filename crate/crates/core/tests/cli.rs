//! The command-line contract: outputs, JSON errors and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use enpar::selftest::{default_corpus, regen_random};

fn enpar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enpar")).args(args).output().unwrap()
}

fn game(name: &str) -> String {
    default_corpus().join(name).to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_of(out: &Output) -> (i32, String) {
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["exit_code"], out.status.code().unwrap());
    (out.status.code().unwrap(), err["error"].as_str().unwrap().to_string())
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn validate_accepts_and_rejects() {
    let ok = stdout_json(&enpar(&["validate", "--game", &game("hand/h04_coin_sinks.json")]));
    assert_eq!(ok["valid"], true);
    assert_eq!(ok["states"], 3);
    let out = enpar(&["validate", "--game", &game("invalid/i01_bad_sum.json")]);
    assert_eq!(error_of(&out), (1, "BadDistribution".into()));
    let out = enpar(&["validate", "--game", "/nonexistent/game.json"]);
    assert_eq!(error_of(&out), (1, "Io".into()));
    let out = enpar(&["validate", "--game", &game("hand/h08_plus_loop.json"), "--max-reward", "0"]);
    assert_eq!(error_of(&out), (1, "RewardOutOfRange".into()));
}

#[test]
fn approx_reports_the_contract_fields() {
    let dir = scratch("approx");
    let strat = dir.to_string_lossy().into_owned();
    let args = ["approx", "--game", &game("hand/h20_biased_walk.json"), "--state", "0", "--energy", "2"];
    let r = stdout_json(&enpar(&[&args[..], &["--epsilon", "1/8", "--verify", "--strategy-out", &strat]].concat()));
    for key in ["v_prime", "N", "branch", "sigma_eps", "pi_eps", "gain_value", "bound", "verification"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["verification"]["certified"], true);
    // exact answer 8/9 lies in [v′ − ε, v′]
    let v = enpar::rational::parse_rat(r["v_prime"].as_str().unwrap()).unwrap();
    let exact = enpar::rational::rat(8, 9);
    assert!(exact <= v && &v - &exact <= enpar::rational::rat(1, 8));

    // the saved strategies are accepted by evaluate
    let sigma = dir.join("sigma.json").to_string_lossy().into_owned();
    let iv = stdout_json(&enpar(&["evaluate", "--game", &game("hand/h20_biased_walk.json"), "--energy", "2", "--sigma", &sigma]));
    let lo = enpar::rational::parse_rat(iv["lo"].as_str().unwrap()).unwrap();
    assert!(lo >= &v - enpar::rational::rat(1, 8) - enpar::rational::rat(1, 256));

    let out = enpar(&[&args[..], &["--epsilon", "0"]].concat());
    assert_eq!(error_of(&out), (1, "Parse".into()));
    let out = enpar(&["approx", "--game", &game("hand/h20_biased_walk.json"), "--state", "9"]);
    assert_eq!(error_of(&out), (1, "Parse".into()));
}

#[test]
fn values_as_csv() {
    let out = enpar(&["solve-parity", "--game", &game("hand/h07_reach_gadget.json"), "--output", "csv"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "state,value\n0,1/2\n1,0/1\n2,1/2\n3,1/1\n");
    let out = enpar(&["gain", "--game", &game("hand/h12_coin_loops.json"), "--output", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "state,value\n0,1/2\n1,0/1\n2,1/1\n");
}

#[test]
fn limits_exit_with_code_2() {
    let out = enpar(&["solve-parity", "--game", &game("hand/h16_max_vs_min.json"), "--mode", "enumerate", "--budget", "1"]);
    assert_eq!(error_of(&out), (2, "BudgetExceeded".into()));
    let out = enpar(&[
        "evaluate",
        "--game",
        &game("hand/h20_biased_walk.json"),
        "--energy",
        "3",
        "--sigma",
        &write_lowest_max(),
        "--tol",
        "1/1000000000",
        "--cap-limit",
        "8",
    ]);
    assert_eq!(error_of(&out), (2, "CapLimit".into()));
}

fn write_lowest_max() -> String {
    let dir = scratch("lowest");
    let g = enpar::io::load_game(Path::new(&game("hand/h20_biased_walk.json")), &Default::default()).unwrap();
    let path = dir.join("sigma.json");
    enpar::io::save_strategy(&path, &enpar::strategy::StrategyFD::lowest(&g, enpar::Owner::Max), &g).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn usage_errors_are_input_errors() {
    let out = enpar(&["approx", "--no-such-flag"]);
    assert_eq!(error_of(&out), (1, "Parse".into()));
    let out = enpar(&["--jobs", "0", "validate", "--game", &game("hand/h01_zero_loop.json")]);
    assert_eq!(error_of(&out), (1, "Parse".into()));
    assert!(enpar(&["--help"]).status.success());
}

#[test]
fn unfold_and_bound() {
    let u = stdout_json(&enpar(&["unfold", "--game", &game("hand/h09_plus_minus_cycle.json"), "--n", "2"]));
    assert_eq!(u["labels"].as_array().unwrap().len(), u["game"]["states"].as_array().unwrap().len());
    let dir = scratch("unfold");
    let path = dir.join("u.json").to_string_lossy().into_owned();
    let kind = ["--kind", "saturate", "--out", &path];
    stdout_json(&enpar(&[&["unfold", "--game", &game("hand/h12_coin_loops.json"), "--n", "3"][..], &kind].concat()));
    stdout_json(&enpar(&["validate", "--game", &path]));
    let b = stdout_json(&enpar(&["bound-n", "--game", &game("hand/h20_biased_walk.json"), "--epsilon", "1/16"]));
    assert_eq!(b["N"], 3);
}

#[test]
fn simulate_is_seeded() {
    let args = ["simulate", "--game", &game("hand/h20_biased_walk.json"), "--energy", "2", "--runs", "200", "--horizon", "400"];
    let a = enpar(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, enpar(&args).stdout);
    let est = stdout_json(&a);
    let f = est["estimate"]["frequency"].as_f64().unwrap();
    assert!((f - 8.0 / 9.0).abs() < 0.1, "{f}");
}

#[test]
fn selftest_on_a_small_corpus() {
    let dir = scratch("corpus");
    for sub in ["hand", "invalid"] {
        std::fs::create_dir_all(dir.join(sub)).unwrap();
        for e in std::fs::read_dir(default_corpus().join(sub)).unwrap() {
            let p = e.unwrap().path();
            std::fs::copy(&p, dir.join(sub).join(p.file_name().unwrap())).unwrap();
        }
    }
    let report = stdout_json(&enpar(&["selftest", "--corpus", &dir.to_string_lossy()]));
    assert_eq!(report["failed"], 0);
    assert_eq!(report["instances"], 34);

    // a wrong expectation makes the selftest fail with exit code 3
    let bad = dir.join("hand/h04_coin_sinks.json");
    let text = std::fs::read_to_string(&bad).unwrap().replacen("\"parity\": [\n      \"1/2\"", "\"parity\": [\n      \"1/3\"", 1);
    std::fs::write(&bad, text).unwrap();
    let out = enpar(&["selftest", "--corpus", &dir.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn regen_reproduces_the_bundled_instances() {
    let dir = scratch("regen");
    assert_eq!(regen_random(&dir).unwrap(), 100);
    for seed in 0..100 {
        let name = format!("random/r{seed:03}.json");
        assert_eq!(
            std::fs::read(dir.join(&name)).unwrap(),
            std::fs::read(default_corpus().join(&name)).unwrap(),
            "{name}"
        );
    }
}
