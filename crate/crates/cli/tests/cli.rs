use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn quasieq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasieq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn run_example_4_1(dir: &Path, c: f64) -> (serde_json::Value, String) {
    let trace = dir.join(format!("trace_{c}.csv"));
    let summary = dir.join(format!("summary_{c}.json"));
    let cfg = write_config(
        dir,
        &format!("ex41_{c}.json"),
        &format!(r#"{{"problem":{{"kind":"example_4_1"}},"solver":{{"sigma":{{"kind":"harmonic","c":{c}}}}}}}"#),
    );
    let out = quasieq(&["run", "--config", s(&cfg), "--trace", s(&trace), "--summary", s(&summary)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    (json, std::fs::read_to_string(&trace).unwrap())
}

#[test]
fn example_4_1_iteration_counts() {
    let dir = TempDir::new().unwrap();
    let (one, _) = run_example_4_1(dir.path(), 1.0);
    let (two, _) = run_example_4_1(dir.path(), 2.0);
    assert_eq!(one["iterations"], 84);
    assert_eq!(two["iterations"], 8);
    assert_eq!(one["status"], "fixed_point");
}

#[test]
fn trace_header_is_frozen() {
    let dir = TempDir::new().unwrap();
    let (_, trace) = run_example_4_1(dir.path(), 1.0);
    assert_eq!(trace.lines().next().unwrap(), "k,x_0,err_xy,err_step,sigma,rho,m,prox_flag");
    let first = trace.lines().nth(1).unwrap();
    assert_eq!(
        first,
        "0,4.0000000000000000e0,5.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0,1,0"
    );
}

#[test]
fn summary_final_matches_last_trace_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.json", r#"{"problem":{"kind":"example_4_2_small"},"solver":{"max_iters":40}}"#);
    let (trace, summary) = (dir.path().join("t.csv"), dir.path().join("s.json"));
    let out = quasieq(&["run", "--config", s(&cfg), "--trace", s(&trace), "--summary", s(&summary)]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    let text = std::fs::read_to_string(&trace).unwrap();
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    let final_point: Vec<f64> = json["final"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let row: Vec<f64> = last[1..3].iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(final_point, row);
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let (trace, summary) = (dir.path().join("t.csv"), dir.path().join("s.json"));
    for (i, body) in [
        "{not json",
        r#"{"problem":{"kind":"example_4_1"},"bogus":true}"#,
        r#"{"problem":{"kind":"example_4_1"},"solver":{"theta":2}}"#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), body);
        let out = quasieq(&["run", "--config", s(&cfg), "--trace", s(&trace), "--summary", s(&summary)]);
        assert_eq!(out.status.code(), Some(1), "{body}");
        assert!(!out.stderr.is_empty());
        assert!(!trace.exists() && !summary.exists());
    }
    let out = quasieq(&["run", "--config", s(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(quasieq(&["run"]).status.code(), Some(1));
}

#[test]
fn verify_reports() {
    let dir = TempDir::new().unwrap();
    let cubic = write_config(dir.path(), "cubic.json", r#"{"problem":{"kind":"counterexample_cubic"}}"#);
    let out = quasieq(&["verify", "--config", s(&cubic), "--point", "0", "--rho", "0.4"]);
    assert_eq!(out.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(rep["quasi_residual"]["value"].as_f64().unwrap() >= 0.0);
    assert_eq!(rep["gap"]["value"].as_f64().unwrap(), -1.0);

    let ex41 = write_config(dir.path(), "ex41.json", r#"{"problem":{"kind":"example_4_1"}}"#);
    let report = dir.path().join("rep.json");
    let out = quasieq(&["verify", "--config", s(&ex41), "--point", "0", "--out", s(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(rep["gap"]["value"].as_f64().unwrap() >= 0.0);

    let ten = write_config(dir.path(), "ten.json", r#"{"problem":{"kind":"example_4_2_ten"}}"#);
    let out = quasieq(&["verify", "--config", s(&ten), "--point", "1,1,1,1,1,1,1,1,1,1"]);
    assert_eq!(out.status.code(), Some(3));

    let out = quasieq(&["verify", "--config", s(&ex41), "--point", "abc"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_is_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let read_errors = |path: &Path| -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                let mut cols: Vec<&str> = l.split(',').collect();
                cols.remove(4);
                cols.join(",")
            })
            .collect()
    };
    let mut runs = Vec::new();
    for tag in ["a", "b"] {
        let out_path = dir.path().join(format!("{tag}.csv"));
        let out = quasieq(&[
            "bench", "--n", "3", "--count", "4", "--seed", "11", "--max-iters", "60", "--out", s(&out_path),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let agg = std::fs::read_to_string(&out_path).unwrap();
        assert_eq!(agg.lines().next().unwrap(), "n,count,failures,mean_wall_time_s,mean_error,median_error");
        assert!(agg.lines().nth(1).unwrap().starts_with("3,4,0,"));
        runs.push(read_errors(&dir.path().join(format!("{tag}_instances.csv"))));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0][0], "index,seed,status,iterations,error");
    let seeds: Vec<&str> = runs[0][1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(seeds, ["11", "12", "13", "14"]);
}

#[test]
fn plot_outputs() {
    let dir = TempDir::new().unwrap();
    let (_, trace) = run_example_4_1(dir.path(), 2.0);
    let trace_path = dir.path().join("trace_2.csv");
    let (svg, data) = (dir.path().join("p.svg"), dir.path().join("p.csv"));
    let out = quasieq(&["plot", "--trace", s(&trace_path), "--out", s(&svg), "--data", s(&data)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<svg") && text.matches("<polyline").count() == 2);
    assert_eq!(std::fs::read_to_string(&data).unwrap().lines().count(), trace.lines().count());

    let single = dir.path().join("single.csv");
    let two_lines: Vec<&str> = trace.lines().take(2).collect();
    std::fs::write(&single, two_lines.join("\n")).unwrap();
    let out = quasieq(&["plot", "--trace", s(&single), "--out", s(&svg)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<circle").count(), 2);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, trace.lines().next().unwrap()).unwrap();
    let missing_svg = dir.path().join("none.svg");
    let out = quasieq(&["plot", "--trace", s(&empty), "--out", s(&missing_svg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!missing_svg.exists());
    let out = quasieq(&["plot", "--trace", s(&dir.path().join("nope.csv")), "--out", s(&missing_svg)]);
    assert_eq!(out.status.code(), Some(1));
}
