use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pathbounds::formats::BandsFile;
use pathbounds::path_model::ModelUniverse;
use pathbounds::simlab::{build_cov, CovSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pathbounds"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_estimate(dir: &Path, h: usize, sigma2: f64, rho: f64) -> String {
    let v = build_cov(&CovSpec { sigma2, rho, horizon: h }).unwrap();
    let beta: Vec<String> = (0..h).map(|i| format!("{}", -0.4 + 0.01 * (i as f64).sin())).collect();
    let cov: Vec<String> = (0..h)
        .map(|i| {
            let row: Vec<String> = (0..h).map(|j| format!("{:e}", v.matrix()[(i, j)])).collect();
            format!("[{}]", row.join(","))
        })
        .collect();
    let path = dir.join(format!("est_{h}.json"));
    fs::write(&path, format!("{{\"beta_hat\":[{}],\"cov\":[{}]}}", beta.join(","), cov.join(","))).unwrap();
    path.display().to_string()
}

#[test]
fn bands_happy_path_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_estimate(dir.path(), 36, 0.014, 0.0);
    let out1 = dir.path().join("a.json");
    let out2 = dir.path().join("b.json");
    let plots = dir.path().join("plots");
    for out in [&out1, &out2] {
        let o = run(&[
            "bands",
            &input,
            "--draws",
            "2000",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
            "--plot-data",
            plots.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read_to_string(&out1).unwrap();
    assert_eq!(a, fs::read_to_string(&out2).unwrap());
    let doc = BandsFile::from_json(&a).unwrap();
    assert_eq!(doc.bands.len(), 4);
    assert_eq!(doc.seed, 11);
    assert_eq!(doc.n_draws, 2000);
    assert_eq!(doc.to_json(), a, "round trip must be byte-identical");
    for name in ["pointwise", "supt", "cumulative", "restricted_posi"] {
        let s = fs::read_to_string(plots.join(format!("{name}.csv"))).unwrap();
        assert!(s.starts_with("h,center,lower,upper\n"));
        assert_eq!(s.lines().count(), 37);
    }
}

#[test]
fn delimited_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("est.csv");
    let mut text = String::from("0.1,0.2,0.15,0.3,0.25,0.2\n");
    for i in 0..6 {
        let row: Vec<&str> = (0..6).map(|j| if i == j { "0.01" } else { "0" }).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&p, text).unwrap();
    let o = run(&["bands", p.to_str().unwrap(), "--draws", "1000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(BandsFile::from_json(&stdout(&o)).is_ok());
}

#[test]
fn validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("indefinite", r#"{"beta_hat":[0,0],"cov":[[1,2],[2,1]]}"#, 2, "positive definite"),
        ("nonsquare", r#"{"beta_hat":[0,0],"cov":[[1,0],[0]]}"#, 2, "square"),
        ("length", r#"{"beta_hat":[0,0,0],"cov":[[1,0],[0,1]]}"#, 2, "dimension"),
        ("nan", "nan,0\n1,0\n0,1\n", 2, "non-finite"),
        ("garbage", "{\"beta_hat\": [1,", 1, "parse"),
        ("words", "a,b\n", 1, "parse"),
    ];
    for (name, body, code, needle) in cases {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        let o = run(&["bands", p.to_str().unwrap(), "--draws", "1000"]);
        assert_eq!(o.status.code(), Some(code), "{name}");
        let err = String::from_utf8_lossy(&o.stderr).to_lowercase();
        assert!(err.contains(needle), "{name}: {err}");
    }
    let missing = run(&["bands", "/nonexistent/file.json"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["simulate", "--reps", "0"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--dgp", "bogus", "--reps", "100"]).status.code(), Some(1));
    assert_eq!(run(&["volume", "--H", "0"]).status.code(), Some(1));
    assert_eq!(run(&["volume", "--alpha", "1.5"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let bad_env = bin().env("PATHBOUNDS_THREADS", "many").args(["volume", "--H", "1"]).output().unwrap();
    assert_eq!(bad_env.status.code(), Some(1));
}

fn volume(args: &[&str]) -> f64 {
    let o = run(args);
    assert!(o.status.success());
    stdout(&o).trim().parse().unwrap()
}

#[test]
fn volume_examples() {
    assert!((volume(&["volume", "--H", "1"]) - 1.0).abs() < 0.01);
    assert!(volume(&["volume", "--H", "12", "--rho", "0"]) < 0.10);
    assert!(volume(&["volume", "--H", "24", "--rho", "0.95"]) <= 1e-5);
    let o = bin().env("PATHBOUNDS_THREADS", "1").args(["volume", "--sweep", "--draws", "2000"]).output().unwrap();
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("rho,H,ratio\n"));
    assert_eq!(s.lines().count(), 49);
}

#[test]
fn simulate_small_table() {
    let o = run(&[
        "--threads", "1", "simulate", "--dgp", "constant,hump", "--rho", "0", "--sigma2-grid", "0.02,0.005", "--H", "8",
        "--reps", "100", "--draws", "1000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let mut lines = s.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..5], &["dgp", "rho", "sigma2", "log_sigma2", "mse_ratio"]);
    assert!(header.contains(&"cover_restricted_surrogate"));
    assert_eq!(lines.count(), 4);

    let fig = run(&[
        "simulate", "--dgp", "constant", "--rho", "0", "--sigma2-grid", "0.02", "--H", "8", "--reps", "100", "--draws",
        "1000", "--figure", "widths",
    ]);
    assert_eq!(stdout(&fig).lines().next().unwrap(), "dgp,rho,sigma2,log_sigma2,width_supt_rel,width_restricted_rel");

    let fan = run(&["simulate", "--dgp", "hump", "--rho", "0", "--sigma2-grid", "0.02", "--H", "8", "--reps", "3", "--figure", "surrogates"]);
    assert!(fan.status.success());
    assert_eq!(stdout(&fan).lines().count(), 1 + 3 * 8);
}

#[test]
fn simulate_constant_supt_coverage() {
    let o = run(&[
        "simulate", "--dgp", "constant", "--rho", "0", "--sigma2-grid", "0.014", "--reps", "200", "--draws", "20000",
        "--seed", "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let mut lines = s.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "cover_supt").unwrap();
    let cover: f64 = row[col].parse().unwrap();
    assert!((cover - 0.95).abs() <= 0.04, "cover_supt = {cover}");
}

fn posi_table(input: &str, draws: &str) -> Vec<(String, String)> {
    let o = run(&["posi", input, "--draws", draws, "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
        .lines()
        .map(|l| {
            let (k, v) = l.split_once(' ').unwrap();
            (k.to_string(), v.trim().to_string())
        })
        .collect()
}

fn lookup(t: &[(String, String)], key: &str) -> String {
    t.iter().find(|(k, _)| k == key).unwrap().1.clone()
}

#[test]
fn posi_summary() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_estimate(dir.path(), 10, 0.01, 0.5);
    let t = posi_table(&input, "100000");
    let big: f64 = lookup(&t, "posi_critical").parse().unwrap();
    let small: f64 = lookup(&t, "supt_critical").parse().unwrap();
    assert!(big >= small);
    let universe = ModelUniverse::build(&build_cov(&CovSpec { sigma2: 0.01, rho: 0.5, horizon: 10 }).unwrap(), 20).unwrap();
    assert_eq!(lookup(&t, "universe_size"), universe.len().to_string());
    let t2 = posi_table(&input, "200000");
    let big2: f64 = lookup(&t2, "posi_critical").parse().unwrap();
    assert!((big - big2).abs() < 0.02, "{big} vs {big2}");
}
