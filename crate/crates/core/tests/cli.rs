use std::collections::HashMap;
use std::process::{Command, Output};

fn roundnet(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_roundnet"));
    cmd.args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("ROUNDNET_")) {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

/// Output split into `# key: value` header lines and CSV records.
struct Parsed {
    header: HashMap<String, String>,
    columns: Vec<String>,
    rows: Vec<HashMap<String, String>>,
}

fn parse(text: &str) -> Parsed {
    let mut header = HashMap::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ") {
            Some(h) => {
                let (k, v) = h.split_once(": ").expect("header line is `# key: value`");
                header.insert(k.to_string(), v.to_string());
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let columns: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(r.len(), columns.len());
            columns.iter().cloned().zip(r.iter().map(String::from)).collect()
        })
        .collect();
    Parsed { header, columns, rows }
}

fn run_ok(args: &[&str]) -> Parsed {
    let out = roundnet(args, &[]);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    parse(&String::from_utf8(out.stdout).unwrap())
}

fn summary(p: &Parsed) -> HashMap<String, String> {
    p.header["summary"]
        .split(';')
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

#[test]
fn net_stats_rows() {
    let p = run_ok(&["net-stats", "--n", "1", "--rho", "0.25"]);
    assert_eq!(p.rows.len(), 6);
    assert_eq!(p.columns, ["coeff_1", "norm"]);
    assert!(p.header["config"].starts_with("subcommand=net-stats;"));
    assert_eq!(run_ok(&["net-stats", "--n", "2", "--rho", "0.4"]).rows.len(), 68);
}

#[test]
fn bkappa_worked_example() {
    let p = run_ok(&["bkappa", "--norms", "4,1", "--kappa", "1.4142135623730951"]);
    let v: f64 = p.rows[0]["value"].parse().unwrap();
    assert!((v - 2.0).abs() < 1e-9);
    // The eight-digit literal truncates kappa, which moves the value by 1.3e-8.
    let p = run_ok(&["bkappa", "--norms", "4,1", "--kappa", "1.41421356"]);
    let v: f64 = p.rows[0]["value"].parse().unwrap();
    assert!((v - 2.0).abs() < 1e-7);
}

#[test]
fn schemas_of_every_subcommand() {
    let cases: &[(&[&str], &[&str])] = &[
        (
            &["rounding-tails", "--n", "8", "--rho", "0.3", "--trials", "2000"],
            &["pair", "n", "rho", "beta", "empirical_prob", "hoeffding_bound", "std_error", "within_3se"],
        ),
        (
            &["lemma32", "--n", "8", "--rho", "0.25"],
            &["n", "r", "t", "eta_norm", "sphere_mean", "bound", "ln_mean", "ln_bound", "c_needed"],
        ),
        (
            &["key-bound", "--n", "3", "--N", "40", "--r", "4", "--trials", "2", "--restarts", "3"],
            &["frame", "seed", "method", "value", "t", "slack", "key_rhs", "xi_1", "xi_2", "xi_3"],
        ),
        (
            &["slicing", "--n", "3", "--desk-N", "10", "--trials", "500", "--directions", "50"],
            &["n", "seed", "m", "N", "R", "max_section", "mass_4K", "vol_nth_root", "realized_C", "mass_se", "vol_nth_root_se", "section_se"],
        ),
        (
            &["strips", "--n", "3", "--N", "60", "--alpha", "0.05", "--trials", "1", "--budget", "200"],
            &["n", "N", "alpha", "seed", "worst_count", "bound_value", "fitted_C", "kind"],
        ),
        (&["hs-net", "--n", "3", "--rho", "0.3", "--trials", "100"], &["trial", "Aeta_sq", "Axi_sq", "hs_sq"]),
        (
            &["bkappa", "--n", "4", "--kappa", "10", "--trials", "200"],
            &["n", "N", "kappa", "sampler", "trials", "frequency", "std_error", "hs_mean", "mean_b"],
        ),
    ];
    for (args, cols) in cases {
        let p = run_ok(args);
        assert_eq!(p.columns, *cols, "{args:?}");
        assert!(!p.rows.is_empty());
        assert!(p.header["config"].contains("seed="));
    }
}

#[test]
fn lemma32_summary_is_small() {
    let p = run_ok(&["lemma32", "--n", "16", "--rho", "0.25"]);
    let c: f64 = summary(&p)["fitted_c"].parse().unwrap();
    assert!(c > 0.0 && c <= 10.0);
    let rows_c = p.rows.iter().map(|r| r["c_needed"].parse::<f64>().unwrap()).fold(f64::MIN, f64::max);
    assert_eq!(c, rows_c);
}

#[test]
fn key_bound_net_dominates_search() {
    let p = run_ok(&["key-bound", "--n", "2", "--N", "30", "--r", "3", "--rho", "0.3", "--trials", "3", "--restarts", "4"]);
    for f in 0..3 {
        let rows: Vec<_> = p.rows.iter().filter(|r| r["frame"] == f.to_string()).collect();
        let get = |m: &str| rows.iter().find(|r| r["method"] == m).unwrap();
        let search: f64 = get("search")["value"].parse().unwrap();
        let net = get("net");
        let upper = net["value"].parse::<f64>().unwrap() + net["slack"].parse::<f64>().unwrap();
        assert!(upper >= search);
    }
}

#[test]
fn out_file_and_seed_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let args = ["hs-net", "--n", "4", "--rho", "0.3", "--trials", "300", "--seed", "5"];
    let mut with_out = args.to_vec();
    with_out.extend(["--workers", "4", "--out", path.to_str().unwrap()]);
    assert!(roundnet(&with_out, &[]).status.success());
    let file = std::fs::read_to_string(&path).unwrap();
    let stdout = String::from_utf8(roundnet(&args, &[]).stdout).unwrap();
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&file), body(&stdout));
    let other = String::from_utf8(roundnet(&["hs-net", "--n", "4", "--rho", "0.3", "--trials", "300", "--seed", "6"], &[]).stdout).unwrap();
    assert_ne!(body(&other), body(&stdout));
}

#[test]
fn precedence_flag_env_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(&cfg, "# experiment\nn = 2\nrho = 0.3\n").unwrap();
    let c = cfg.to_str().unwrap();
    let rows = |args: &[&str], env: &[(&str, &str)]| {
        let out = roundnet(args, env);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        parse(&String::from_utf8(out.stdout).unwrap())
    };
    let from_file = rows(&["net-stats", "--config", c], &[]);
    assert!(from_file.header["config"].contains("rho=0.3"));
    let from_env = rows(&["net-stats", "--config", c], &[("ROUNDNET_RHO", "0.4")]);
    assert_eq!(from_env.rows.len(), 68);
    let from_flag = rows(&["net-stats", "--config", c, "--rho", "0.25", "--n", "1"], &[("ROUNDNET_RHO", "0.4")]);
    assert_eq!(from_flag.rows.len(), 6);
}

#[test]
fn validation_errors_exit_two() {
    let bad: &[&[&str]] = &[
        &["net-stats", "--n", "2", "--rho", "0.9"],
        &["net-stats", "--n", "two", "--rho", "0.3"],
        &["net-stats", "--n", "2", "--rho", "0.3", "--kappa", "3"],
        &["net-stats", "--n", "2", "--rho", "0.3", "--workers", "0"],
        &["net-stats", "--n", "2", "--bogus", "1"],
        &["hs-net", "--n", "3", "--rho", "0.3", "--sampler", "cauchy"],
    ];
    for args in bad {
        let out = roundnet(args, &[]);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = roundnet(&["net-stats", "--n", "2", "--rho", "0.3", "--kappa", "3"], &[]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "n = 2\nrhoo = 0.3\n").unwrap();
    let out = roundnet(&["net-stats", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rhoo"));
}

#[test]
fn ledger_file_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.txt");
    std::fs::write(&path, "c_expectation = 2\n").unwrap();
    let p = run_ok(&["lemma32", "--n", "8", "--rho", "0.25", "--ledger", path.to_str().unwrap()]);
    assert!(p.header["ledger"].contains("c_expectation=2"));
    let base = run_ok(&["lemma32", "--n", "8", "--rho", "0.25"]);
    let b0: f64 = base.rows[0]["ln_bound"].parse().unwrap();
    let b1: f64 = p.rows[0]["ln_bound"].parse().unwrap();
    assert!(b1 > b0);
}
