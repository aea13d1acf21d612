use std::process::{Command, Output};

use serde_json::Value;

fn heun(args: &[&str]) -> Output {
    heun_env(args, &[])
}

fn heun_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_heun"));
    cmd.args(args);
    for var in ["HEUN_DIGITS", "HEUN_FORMAT", "HEUN_FULL_PRECISION", "HEUN_JOBS"] {
        cmd.env_remove(var);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn truncate_first_family() {
    let o = heun(&["truncate", "--n", "1", "--l", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("W = 4.000000000"));
    assert!(s.contains("-1.414213562"));
    assert!(s.contains(" 1.414213562"));
}

#[test]
fn truncate_cubic_has_zero_root() {
    let o = heun(&["truncate", "--n", "2", "--l", "0", "--csv"]);
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("n,l,W,root_index,alpha,nodes"));
    let alphas: Vec<&str> = lines.map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(alphas, ["-3.464101615", "0", "3.464101615"]);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(heun(&["truncate", "--n", "0", "--l", "0"]).status.code(), Some(2));
    assert_eq!(heun(&["table", "--which", "3"]).status.code(), Some(2));
    assert_eq!(heun(&["ritz", "--alpha", "1", "--alpha-exact", "sqrt2"]).status.code(), Some(2));
    assert_eq!(heun(&["ritz", "--alpha-exact", "sqrtx"]).status.code(), Some(2));
    assert_eq!(heun(&["--digits", "5", "truncate", "--n", "1"]).status.code(), Some(2));
    assert_eq!(heun(&[]).status.code(), Some(2));
}

#[test]
fn ritz_table_one_from_decimal_alpha() {
    let o = heun(&["ritz", "--l", "0", "--alpha", "-1.4142135623730951", "--nmax", "10", "--count", "4", "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "N,W0,W1,W2,W3");
    assert_eq!(lines[1], "2,4.000000000,10.49997602,,");
    assert_eq!(lines[2], "3,4.000000000,7.751061995,19.88102859,");
    assert_eq!(lines[9], "10,4.000000000,7.693978891,11.50604238,15.37592718");
}

#[test]
fn ritz_exact_alpha_in_text_values() {
    let o = heun(&["ritz", "--l", "1", "--alpha-exact", "-sqrt6", "--nmax", "16", "--count", "3", "--csv"]);
    let s = stdout(&o);
    assert_eq!(s.lines().last().unwrap(), "16,6.000000000,9.805784090,13.66928892");
}

#[test]
fn ritz_oscillator_ladder() {
    let o = heun(&["ritz", "--l", "0", "--alpha", "0", "--nmin", "8", "--nmax", "8", "--csv"]);
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "8,2.000000000,6.000000000,10.00000000,14.00000000");
}

#[test]
fn precision_exhaustion_exit_3() {
    let o = heun(&["ritz", "--alpha", "1", "--nmax", "30", "--digits", "20"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("--digits"), "{err}");
}

#[test]
fn table_command() {
    let o = heun(&["table", "--which", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS with 0 cell diffs"));
    let v = json(&heun(&["table", "--which", "2", "--json"]));
    assert_eq!(v["results"]["mismatches"], 0);
    assert_eq!(v["results"]["rows"][0]["cells"].as_array().unwrap().len(), 2);
}

#[test]
fn hf_command() {
    let o = heun(&["hf", "--l", "0", "--alpha", "1", "--level", "0", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!(v["results"]["abs_diff"].as_f64().unwrap() < 1e-6);
    assert!(v["results"]["lhs"].as_f64().unwrap() < 0.0);
    // an unreachable tolerance is a check failure
    assert_eq!(heun(&["hf", "--alpha", "1", "--tolerance", "1e-15"]).status.code(), Some(1));
}

#[test]
fn oracle_command() {
    let o = heun(&["oracle", "--alpha-exact", "sqrt2", "--npoints", "4000", "--compare", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["results"]["pass"], true);
    assert_eq!(v["results"]["levels"].as_array().unwrap().len(), 4);
    let strict = heun(&["oracle", "--alpha", "1", "--npoints", "1000", "--compare", "--tolerance", "1e-12"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn potential_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("potential.csv");
    let o = heun(&[
        "potential",
        "--alphas=-sqrt2,1,sqrt2",
        "--xi-max",
        "4",
        "--step",
        "0.01",
        "--csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha_token,alpha,xi,V");
    assert_eq!(lines.len(), 1 + 3 * 400);
    // alpha = 1 at xi = 1: -1 + 1
    assert!(lines.contains(&"1,1.000000000,1,0"));
}

#[test]
fn sweep_csv_columns() {
    let o = heun(&["sweep", "--alpha-min", "0", "--alpha-max", "0.1", "--levels", "2", "--basis-n", "10", "--csv"]);
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "l,level,alpha,W,basis_N");
    assert_eq!(lines[1], "0,0,0,2.000000000,10");
    assert_eq!(lines.len(), 1 + 3 * 2);
}

#[test]
fn json_is_deterministic_across_job_counts() {
    let args = ["sweep", "--alpha-min", "-0.5", "--alpha-max", "0.5", "--levels", "3", "--basis-n", "12", "--json"];
    let a = heun(&args);
    let mut with_jobs = args.to_vec();
    with_jobs.extend(["--jobs", "3"]);
    let b = heun(&with_jobs);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 5);
    let text = stdout(&a);
    let order = ["\"schema_version\"", "\"command\"", "\"inputs\"", "\"results\"", "\"precision_digits\""];
    let pos: Vec<usize> = order.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn replay_reproduces_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["ritz", "--alpha-exact", "sqrt2", "--nmax", "6", "--full-precision", "--json"],
        vec!["truncate", "--n", "3", "--l", "-1", "--digits", "30", "--json"],
        vec!["overlay", "--n-max", "1", "--basis-n", "8", "--json"],
    ] {
        let first = heun(&args);
        assert_eq!(first.status.code(), Some(0));
        let path = dir.path().join("record.json");
        std::fs::write(&path, &first.stdout).unwrap();
        let again = heun(&["--replay", path.to_str().unwrap()]);
        assert_eq!(again.status.code(), Some(0));
        assert_eq!(first.stdout, again.stdout, "{args:?}");
    }
    assert_eq!(heun(&["--replay", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn environment_precedence() {
    let v = json(&heun_env(&["truncate", "--n", "1", "--json"], &[("HEUN_DIGITS", "30")]));
    assert_eq!(v["precision_digits"], 30);
    let v = json(&heun_env(&["truncate", "--n", "1", "--json", "--digits", "40"], &[("HEUN_DIGITS", "30")]));
    assert_eq!(v["precision_digits"], 40);
    let o = heun_env(&["truncate", "--n", "1"], &[("HEUN_FORMAT", "csv")]);
    assert!(stdout(&o).starts_with("n,l,W,"));
    let o = heun_env(&["truncate", "--n", "1", "--json"], &[("HEUN_FORMAT", "csv")]);
    assert!(stdout(&o).starts_with('{'));
    let o = heun_env(&["truncate", "--n", "1"], &[("HEUN_FULL_PRECISION", "1")]);
    assert!(stdout(&o).contains("1.4142135623730950488016887242096980785696718753769"));
}

#[test]
fn default_output_uses_ten_digits() {
    let o = heun(&["truncate", "--n", "1", "--digits", "12"]);
    assert!(stdout(&o).contains("1.414213562 "));
    let o = heun(&["truncate", "--n", "1", "--digits", "12", "--full-precision"]);
    assert!(stdout(&o).contains("1.41421356237 "));
}

#[test]
fn overlay_and_onset() {
    let v = json(&heun(&["overlay", "--n-max", "2", "--basis-n", "12", "--json"]));
    let points = v["results"]["points"].as_array().unwrap();
    let levels: Vec<u64> = points.iter().map(|p| p["level"].as_u64().unwrap()).collect();
    assert_eq!(levels, [0, 1, 0, 1, 2]);
    assert_eq!(v["results"]["isolated"], true);
    let v = json(&heun(&["sweep", "--alpha-min", "0", "--alpha-max", "1.5", "--levels", "1", "--basis-n", "16", "--json"]));
    let onset = &v["results"]["negative_onset"];
    assert_eq!(onset["found"], true);
    assert!(onset["alpha_hi"].as_f64().unwrap() <= 1.0);
}

#[test]
fn scale_and_classify() {
    let v = json(&heun(&["scale", "--m", "1", "--omega", "4", "--q", "0.5", "--e0", "2", "--w", "4", "--json"]));
    assert_eq!(v["results"]["alpha"].as_f64(), Some(1.0));
    assert_eq!(v["results"]["energies"][0]["E"].as_f64(), Some(8.0));
    assert_eq!(heun(&["classify", "--zeta2", "-4"]).status.code(), Some(0));
    assert_eq!(heun(&["classify", "--zeta2", "0"]).status.code(), Some(2));
}
