use std::path::PathBuf;
use std::process::{Command, Output};

fn fragkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fragkit")).args(args).output().unwrap()
}

fn law_file(name: &str, body: &str) -> String {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn malthus_of_stick_breaking() {
    let law = law_file("stickbreak.json", r#"{"kind": "stick_breaking_lossy"}"#);
    let o = fragkit(&["malthus", "--law", &law]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.6180339887");
}

#[test]
fn rho_moments_csv() {
    let law = law_file("filippov_2_1.json", r#"{"kind": "filippov_power", "params": {"lambda": 2, "theta": 1}}"#);
    let o = fragkit(&["rho-moments", "--law", &law, "--alpha", "1", "--kmax", "3"]);
    assert_eq!(stdout(&o), "k,moment\n1,2\n2,6\n3,24\n");
}

#[test]
fn mseries_at_time_zero_is_one() {
    let law = law_file("sb_m0.json", r#"{"kind": "stick_breaking_lossy"}"#);
    let o = fragkit(&["mseries", "--law", &law, "--alpha", "1", "--t", "0", "--beta", "1.3"]);
    let v = json(&o);
    assert_eq!(v["value"], 1.0);
    assert!(v["precision_bits"].as_u64().unwrap() >= 128);
    assert!(v["digits_lost"].is_number());
    assert_eq!(v["build"].as_str().unwrap(), stdout(&fragkit(&["--version"])).trim().trim_start_matches("fragkit "));
}

#[test]
fn gamma_and_coefficient_reports() {
    let law = law_file("f21_gamma.json", r#"{"kind": "filippov_power", "params": {"lambda": 2, "theta": 1}}"#);
    let g = json(&fragkit(&["gamma", "--law", &law, "--alpha", "1", "--z", "1", "--beta", "3"]));
    // γ(1, β) = ψ(β) = (β-1)/(β+1)
    assert!((g["value"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    let c = json(&fragkit(&["asym-coeff", "--law", &law, "--alpha", "1", "--beta", "2"]));
    assert!((c["value"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert!((c["beta_star"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn inspect_reports_flags() {
    let law = law_file("bu_inspect.json", r#"{"kind": "binary_uniform_conservative"}"#);
    let v = json(&fragkit(&["law", "inspect", &law]));
    assert!((v["beta_star"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["conservative"], true);
    assert_eq!(v["sampler"], true);
    assert_eq!(v["phi"].as_array().unwrap().len(), 6);
    let none = law_file("ls_inspect.json", r#"{"kind": "log_squared_power", "params": {"c": 0.5}}"#);
    let v = json(&fragkit(&["law", "inspect", &none]));
    assert!(v["beta_star"].is_null());
    assert!(v["malthus_error"].as_str().unwrap().contains("no Malthusian exponent"));
}

#[test]
fn usage_errors_exit_with_one() {
    let bad = law_file("bad.json", r#"{"kind": "filippov_power", "params": {"lambda": 2, "theta": 1}, "colour": 1}"#);
    let o = fragkit(&["malthus", "--law", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Unknown fields are rejected"));
    assert_eq!(fragkit(&["malthus"]).status.code(), Some(1));
    assert_eq!(fragkit(&["frobnicate"]).status.code(), Some(1));
    let sb = law_file("sb_usage.json", r#"{"kind": "stick_breaking_lossy"}"#);
    assert_eq!(fragkit(&["validate", "--law", &sb, "--alpha", "1", "--seed", "1", "--suite", "nope"]).status.code(), Some(1));
    assert!(fragkit(&["--version"]).status.success());
}

#[test]
fn simulate_is_thread_independent() {
    let law = law_file("sb_sim.json", r#"{"kind": "stick_breaking_lossy"}"#);
    let args = |threads: &'static str| {
        vec!["simulate", "--law", &law, "--alpha", "1", "--tmax", "5", "--snapshots", "1,5", "--replicates", "300", "--seed", "3", "--threads", threads]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let run = |t| {
        let a = args(t);
        fragkit(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let (a, b) = (run("1"), run("3"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("replicate,t,n_particles,M_beta_star,frozen_bound"));
    assert_eq!(lines.count(), 600);
}

#[test]
fn tagged_and_y_csv() {
    let law = law_file("f21_tag.json", r#"{"kind": "filippov_power", "params": {"lambda": 2, "theta": 1}}"#);
    let t = stdout(&fragkit(&["tagged", "--law", &law, "--alpha", "1", "--times", "0,1,10", "--paths", "5", "--seed", "1"]));
    assert!(t.starts_with("path,t,size\n0,0,1\n"));
    assert_eq!(t.lines().count(), 16);
    let y = stdout(&fragkit(&["sample-y", "--law", &law, "--alpha", "1", "--n", "10", "--seed", "1"]));
    assert!(y.starts_with("index,y,tail_bound\n"));
    assert_eq!(y.lines().count(), 11);
}

#[test]
fn rho_histogram() {
    let law = law_file("f21_hist.json", r#"{"kind": "filippov_power", "params": {"lambda": 2, "theta": 1}}"#);
    let hist = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("hist.csv");
    let o = fragkit(&[
        "rho-empirical", "--law", &law, "--alpha", "1", "--t", "20", "--replicates", "500", "--seed", "2", "--bins", "10",
        "--hist", hist.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v = json(&o);
    let csv = std::fs::read_to_string(&hist).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bin_left,bin_right,mass"));
    let mass: f64 = lines.map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    let total = v["total_weight"]["estimate"].as_f64().unwrap();
    // bins span the weighted 0.1% to 99.9% quantiles
    assert!(mass <= total && mass > 0.99 * total, "{mass} vs {total}");
    assert!(v["kolmogorov_to_rho"].as_f64().unwrap() < 0.1);
}

#[test]
fn validate_exit_codes() {
    let bu = law_file("bu_validate.json", r#"{"kind": "binary_uniform_conservative"}"#);
    let ok = fragkit(&["validate", "--law", &bu, "--alpha", "1", "--suite", "martingale", "--replicates", "200", "--seed", "4", "--depth", "6"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let report = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("report.json");
    // weighted moments at t = 30 still carry a finite-t bias of many standard errors
    let fail = fragkit(&[
        "validate", "--law", &bu, "--alpha", "1", "--suite", "moments", "--replicates", "10000", "--seed", "4",
        "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(fail.status.code(), Some(2));
    assert!(stdout(&fail).contains("FAIL"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(doc["all_pass"], false);
    assert!(doc["build"].is_string());
}
