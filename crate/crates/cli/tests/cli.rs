use std::fs;
use std::process::{Command, Output};

fn pumpkin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pumpkin"))
        .args(args)
        .output()
        .expect("spawn pumpkin")
}

fn last_line(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .last()
        .unwrap_or_default()
        .to_string()
}

fn json(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_artifacts_and_reports_ok() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pumpkin(&["run", "--bench", "vecadd", "-N", "256", "-V", "4", "--multipump", "2", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(last_line(&o), "status=ok");
    for f in [
        "graph.json",
        "graph_original.json",
        "sim_original.json",
        "sim_pumped.json",
        "diff.json",
        "summary_original.json",
        "summary_pumped.json",
        "report.txt",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
}

#[test]
fn narrow_vecadd_halves_dsp() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pumpkin(&[
        "run", "--bench", "vecadd", "-N", "256", "-V", "4", "--multipump", "2", "--mode", "narrow", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let before = json(&dir.path().join("summary_original.json"));
    let after = json(&dir.path().join("summary_pumped.json"));
    let dsp = |v: &serde_json::Value| v["resources"]["dsp"].as_u64().unwrap();
    assert_eq!(dsp(&after) * 2, dsp(&before));
}

#[test]
fn illegal_narrowing_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pumpkin(&[
        "run", "--bench", "floyd_warshall", "-N", "8", "--multipump", "2", "--mode", "narrow", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(last_line(&o), "status=rejected");
    assert!(String::from_utf8_lossy(&o.stdout).contains("not divisible by M"));
}

#[test]
fn bad_arguments_exit_one() {
    let o = pumpkin(&["run", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(last_line(&o), "status=error");

    let o = pumpkin(&["run", "--bench", "vecadd", "-N", "10", "-V", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(last_line(&o), "status=error");
}

#[test]
fn help_exits_zero() {
    let o = pumpkin(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "status=ok");
}

#[test]
fn generate_is_deterministic() {
    let a = pumpkin(&["generate", "--bench", "gemm_systolic", "-N", "8", "--pes", "2", "-V", "2"]);
    let b = pumpkin(&["generate", "--bench", "gemm_systolic", "-N", "8", "--pes", "2", "-V", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn run_is_deterministic_and_graph_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("in.json");
    let o = pumpkin(&["generate", "--bench", "jacobi3d", "-N", "4", "--stages", "2", "-V", "2", "--out", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        let o = pumpkin(&["run", "--graph", g.to_str().unwrap(), "--multipump", "2", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read_to_string(out.join("graph.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn report_compares_saved_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pumpkin(&["run", "--bench", "vecadd", "-N", "64", "-V", "2", "--multipump", "2", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let a = dir.path().join("summary_original.json");
    let b = dir.path().join("summary_pumped.json");
    let o = pumpkin(&["report", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("MOp/s per DSP"));
    assert_eq!(last_line(&o), "status=ok");
}
