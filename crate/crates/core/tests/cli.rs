//! End-to-end checks of the `pitwise` binary: exit codes, file formats,
//! output artifacts, and the deterministic simulate path.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pitwise"))
}

fn write(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn test_subcommand_matches_library_composition() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "mid.txt", "0.5\n0.5\n0.5\n");
    let out = run(&["test", input.to_str().unwrap(), "--method", "potc"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = stdout_json(&out);
    let report = &json["reports"][0];

    let sample = pitwise::pointwise::PitSample::continuous(vec![0.5, 0.5, 0.5]).unwrap();
    let pw = pitwise::pointwise::potc_pointwise(&sample).unwrap();
    let expected = pitwise::combined_test(&pw, pitwise::combine::Combiner::Cct, 0.05).unwrap();
    // binary and test harness build at different opt levels; allow ulp noise
    let got = report["global_p"].as_f64().unwrap();
    assert!(
        (got - expected.global_p).abs() <= 1e-12,
        "{got} vs {}",
        expected.global_p
    );
    assert_eq!(report["reject"].as_bool().unwrap(), expected.reject);
}

#[test]
fn rejection_exit_code_and_artifact() {
    let tmp = TempDir::new().unwrap();
    // extreme pile-up near 0 forces rejection at alpha = 0.05
    let lines: String = (0..50).map(|_| "0.001\n").collect();
    let input = write(tmp.path(), "bad.txt", &lines);
    let outdir = tmp.path().join("out");
    let out = run(&[
        "test",
        input.to_str().unwrap(),
        "--method",
        "potc",
        "--method",
        "ks",
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let saved = std::fs::read_to_string(outdir.join("bad.reports.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&saved).unwrap();
    assert_eq!(json["reports"].as_array().unwrap().len(), 2);
    assert!(json["reports"][0]["reject"].as_bool().unwrap());
}

#[test]
fn empty_and_out_of_range_inputs_error() {
    let tmp = TempDir::new().unwrap();
    let empty = write(tmp.path(), "empty.txt", "");
    let out = run(&["test", empty.to_str().unwrap(), "--method", "potc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let bad = write(tmp.path(), "range.txt", "0.2\n1.2\n0.4\n");
    let out = run(&["test", bad.to_str().unwrap(), "--method", "potc"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("1.2"), "stderr: {err}");

    let garbled = write(tmp.path(), "garbled.txt", "0.2\nnope\n");
    let out = run(&["test", garbled.to_str().unwrap(), "--method", "potc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn csv_and_json_inputs() {
    let tmp = TempDir::new().unwrap();
    let csv = write(tmp.path(), "pits.csv", "id,pit\n1,0.3\n2,0.6\n3,0.9\n");
    let out = run(&[
        "test",
        csv.to_str().unwrap(),
        "--method",
        "ks",
        "--column",
        "pit",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(stdout_json(&out)["reports"][0]["n"].as_u64(), Some(3));

    let json_in = write(tmp.path(), "pits.json", "[0.3, 0.6, 0.9]");
    let out2 = run(&["test", json_in.to_str().unwrap(), "--method", "ks"]);
    assert_eq!(out2.status.code(), Some(0));
    assert_eq!(
        stdout_json(&out2)["reports"][0]["global_p"],
        stdout_json(&out)["reports"][0]["global_p"]
    );
}

#[test]
fn csv_output_format() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "u.txt", "0.21\n0.47\n0.68\n0.83\n0.35\n");
    let out = run(&[
        "test",
        input.to_str().unwrap(),
        "--method",
        "potc",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("method,combiner,statistic,global_p,alpha,reject,n"));
    assert_eq!(text.trim().lines().count(), 2);
}

#[test]
fn plot_svg_markers_match_influential_set() {
    let tmp = TempDir::new().unwrap();
    let lines: String = (1..=40)
        .map(|i| format!("{:.6}\n", (i as f64 / 41.0).powf(2.0)))
        .collect();
    let input = write(tmp.path(), "skew.txt", &lines);
    let outdir = tmp.path().join("plots");
    let out = run(&[
        "plot",
        input.to_str().unwrap(),
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("skew.plot.json")).unwrap())
            .unwrap();
    let points = json["influence"]["ecdf_points"].as_array().unwrap();
    assert_eq!(points.len(), 40);
    let highlighted = points
        .iter()
        .filter(|p| p["highlighted"].as_bool().unwrap())
        .count();
    let influential = json["influence"]["influential"].as_array().unwrap().len();
    assert_eq!(highlighted, influential);

    let svg = std::fs::read_to_string(outdir.join("skew.svg")).unwrap();
    assert_eq!(svg.matches("point highlight").count(), highlighted);
    assert_eq!(svg.matches("<circle").count(), 40);
}

#[test]
fn plot_gamma_zero_highlights_positive_influence_only() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "u.txt", "0.11\n0.32\n0.55\n0.71\n0.93\n0.48\n");
    let out = run(&["plot", input.to_str().unwrap(), "--gamma", "0"]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    let json = stdout_json(&out);
    let phi: Vec<f64> = json["influence"]["phi"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let expected: Vec<u64> = (0..phi.len())
        .filter(|&i| phi[i] > 0.0)
        .map(|i| i as u64)
        .collect();
    let got: Vec<u64> = json["influence"]["influential"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn simulate_writes_outcome_and_honors_seed_override() {
    let tmp = TempDir::new().unwrap();
    let spec = write(
        tmp.path(),
        "tiny.toml",
        r#"
model = "conjugate"
groups = 10
per_group = 4
sigma = 1.0
tau = 1.0
mu0 = 0.0
dgp = "normal"
pit = "loo"
methods = ["potc", "ks"]
combiner = "cct"
replicates = 20
alphas = [0.05]
seed = 7
"#,
    );
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let run_sim = |dir: &Path, seed: &str| {
        run(&[
            "simulate",
            spec.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            dir.to_str().unwrap(),
        ])
    };
    assert_eq!(run_sim(&out_a, "99").status.code(), Some(0));
    assert_eq!(run_sim(&out_b, "99").status.code(), Some(0));
    let a = std::fs::read(out_a.join("tiny.outcome.json")).unwrap();
    let b = std::fs::read(out_b.join("tiny.outcome.json")).unwrap();
    assert_eq!(a, b);

    let json: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(json["outcome"]["seed"].as_u64(), Some(99));
    assert_eq!(json["outcome"]["completed"].as_u64(), Some(20));
    let rates = std::fs::read_to_string(out_a.join("tiny.rates.csv")).unwrap();
    assert!(rates.starts_with("method,alpha,rate"));
    assert_eq!(rates.trim().lines().count(), 3);
}

#[test]
fn simulate_rejects_malformed_spec() {
    let tmp = TempDir::new().unwrap();
    let spec = write(
        tmp.path(),
        "bad.toml",
        "model = \"conjugate\"\nbogus_key = 1\n",
    );
    let out = run(&["simulate", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}
