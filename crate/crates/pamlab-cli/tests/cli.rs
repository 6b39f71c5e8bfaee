use pamlab_cli::report::{from_json, to_json};
use pamlab_cli::{run, write_report, CliError, ExperimentConfig, ExperimentReport, Format};
use std::path::PathBuf;
use std::process::Command;

fn cfg(experiment: &str, kv: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig { experiment: experiment.into(), seed: Some(11), ..Default::default() };
    for (k, v) in kv {
        c.set(k, v).unwrap();
    }
    c
}

fn tmp(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pamlab")).args(args).output().unwrap()
}

fn without_time(mut r: ExperimentReport) -> ExperimentReport {
    r.wall_time_s = 0.0;
    r
}

#[test]
fn constants_report() {
    let r = run(&cfg("constants", &[])).unwrap();
    let v = |l: &str| r.result(l).unwrap_or_else(|| panic!("missing {l}")).value;
    assert!((v("a1") - 3.54491).abs() < 1e-5);
    assert!((v("a2") - 1.63055).abs() < 1e-5);
    assert!((v("q1") - std::f64::consts::PI).abs() < 1e-9);
    assert!((v("l1") - std::f64::consts::PI).abs() < 1e-9);
    assert!(r.passed(), "{:?}", r.assertions);
}

#[test]
fn config_validation() {
    let mut c = cfg("verify-h", &[]);
    c.t.clear();
    assert!(matches!(run(&c), Err(CliError::Config(m)) if m.contains("t:")));
    let mut c = cfg("constants", &[]);
    c.seed = None;
    assert!(matches!(run(&c), Err(CliError::Config(m)) if m.contains("seed")));
    assert!(run(&cfg("constants", &[("p", "-1")])).is_err());
    assert!(run(&cfg("nope", &[])).is_err());
    assert!(run(&cfg("ids", &[("bc", "periodic")])).is_err());
    assert!(cfg("constants", &[]).set("colour", "red").is_err());
    assert!(cfg("constants", &[]).set("n_paths", "1.5").is_err());
}

#[test]
fn config_file_syntax() {
    let text = "# header\nexperiment = campbell\nseed = 5  # trailing\n\nlog-t = 10, 15\nn_paths = 1e4\nbox = 12.5\n";
    let c = ExperimentConfig::parse_str(text).unwrap();
    assert_eq!(c.seed, Some(5));
    assert_eq!(c.log_t, vec![10.0, 15.0]);
    assert_eq!(c.n_paths, 10_000);
    assert_eq!(c.box_half_width, 12.5);
    assert!(ExperimentConfig::parse_str("seed 5").is_err());
    assert!(ExperimentConfig::parse_str("sed = 5").is_err());
    // the echo parses back to the same config
    let echo: String = c.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    assert_eq!(ExperimentConfig::parse_str(&echo).unwrap(), c);
}

#[test]
fn hash_ignores_width_and_output() {
    let a = cfg("campbell", &[]);
    let b = cfg("campbell", &[("width", "4"), ("output", "elsewhere")]);
    let c = cfg("campbell", &[("n_paths", "2e4")]);
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn deterministic_and_width_independent() {
    let kv = [("rho", "1e4"), ("n_paths", "4000")];
    let one = run(&cfg("tilt-clt", &kv)).unwrap();
    let again = run(&cfg("tilt-clt", &kv)).unwrap();
    let mut wide = cfg("tilt-clt", &kv);
    wide.width = 8;
    let wide = run(&wide).unwrap();
    assert_eq!(to_json(&without_time(one.clone())).unwrap(), to_json(&without_time(again)).unwrap());
    assert_eq!(one.results, wide.results);
    assert_eq!(one.curves, wide.curves);
    assert_eq!(one.config_hash, wide.config_hash);
}

#[test]
fn json_round_trip_and_files() {
    let r = run(&cfg("verify-h", &[("t", "5,10")])).unwrap();
    let s = to_json(&r).unwrap();
    assert_eq!(from_json(&s).unwrap(), r);
    assert_eq!(to_json(&from_json(&s).unwrap()).unwrap(), s);
    assert!(s.contains(&format!("{:.16e}", r.results[0].value)));

    let dir = tmp("files");
    let json = write_report(&r, Format::Json, &dir).unwrap();
    let csv = write_report(&r, Format::Csv, &dir).unwrap();
    assert_eq!(json[0].file_name().unwrap().to_str().unwrap(), format!("verify-h-{}.json", &r.config_hash[..16]));
    assert_eq!(csv.len(), r.curves.len());
    assert_eq!(csv[0].file_name().unwrap().to_str().unwrap(), format!("verify-h-{}-h.csv", &r.config_hash[..16]));
    let text = std::fs::read_to_string(&csv[0]).unwrap();
    assert_eq!(text.lines().next().unwrap(), r.curves["h"].header.join(","));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn ids_csv_header() {
    let r = run(&cfg("ids", &[("r", "20,40"), ("n_env", "4"), ("buffer", "20"), ("lambda", "0.5,1,2")])).unwrap();
    assert_eq!(r.curves["ids-R40-dirichlet"].header, ["lambda", "mean_N", "stderr", "R", "n_env"]);
}

#[test]
fn resource_guard_names_parameter() {
    match run(&cfg("ids", &[("r", "1e6")])) {
        Err(e @ CliError::Resource { .. }) => {
            assert!(e.to_string().contains("`r`"), "{e}");
            assert_eq!(e.exit_code(), 2);
        }
        other => panic!("expected a resource error, got {other:?}"),
    }
}

#[test]
fn binary_exit_codes() {
    let out = tmp("bin");
    let o = out.to_str().unwrap();

    let ok = bin(&["constants", "--seed", "1", "--output", o]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS ")));
    let hash = stdout.lines().find_map(|l| l.strip_prefix("config hash ")).unwrap();
    assert!(out.join(format!("constants-{}.json", &hash[..16])).exists());

    // J_t has not converged at t = 1e4
    let fail = bin(&["verify-j", "--seed=1", "--t", "1e4", "--output", o]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL "));

    let empty = bin(&["verify-h", "--seed", "1", "--t", "", "--output", o]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("empty"));

    assert_eq!(bin(&["constants", "--output", o]).status.code(), Some(2));
    assert_eq!(bin(&["constants", "--seed", "1", "--bogus", "3"]).status.code(), Some(2));
    let guard = bin(&["ids", "--seed", "1", "--r", "1e6", "--output", o]);
    assert_eq!(guard.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&guard.stderr).contains("`r`"));
}

#[test]
fn binary_reads_config_file() {
    let dir = tmp("conf");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.conf");
    std::fs::write(&path, format!("# verify-h sweep\nseed = 9\nt = 5, 10\noutput = {}\n", dir.display())).unwrap();
    let a = bin(&["verify-h", "--config", path.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    // an override changes the hash
    let b = bin(&["verify-h", "--config", path.to_str().unwrap(), "--log-t", "12"]);
    assert_eq!(b.status.code(), Some(0));
    let hash = |o: &std::process::Output| {
        String::from_utf8_lossy(&o.stdout).lines().find_map(|l| l.strip_prefix("config hash ").map(str::to_string)).unwrap()
    };
    assert_ne!(hash(&a), hash(&b));
}
