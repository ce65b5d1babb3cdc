use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cognav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cognav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cognav(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn generate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["generate", "--seed", "4", "--episodes", "3", "--out", s(&a)]);
    ok(&["generate", "--seed", "4", "--episodes", "3", "--out", s(&b)]);
    let files = tree(&a);
    assert_eq!(files.len(), 3);
    assert_eq!(files[0].0, "ep_0000.jsonl");
    assert_eq!(files, tree(&b));
}

#[test]
fn run_then_evaluate_prints_the_metrics_table() {
    let tmp = tempfile::tempdir().unwrap();
    let eps = tmp.path().join("eps");
    let run = tmp.path().join("run");
    ok(&["generate", "--seed", "1", "--episodes", "3", "--out", s(&eps)]);
    let table = ok(&["run", "--backend", "scripted", "--episodes", s(&eps), "--out", s(&run)]);
    let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["Method", "Episodes", "NE", "TL", "SR", "OSR", "SPL"]);
    assert!(table.lines().nth(1).unwrap().starts_with("full"));
    assert_eq!(ok(&["evaluate", "--run", s(&run)]), table);
    for name in ["config.toml", "results.json", "results.txt"] {
        assert!(run.join(name).is_file(), "{name}");
    }
    let log = fs::read_to_string(
        fs::read_dir(run.join("traces"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.extension().unwrap() == "log")
            .unwrap(),
    )
    .unwrap();
    assert!(log.starts_with("Step: 1 Action: go "), "{log}");
}

#[test]
fn ablation_flags_label_the_results() {
    let tmp = tempfile::tempdir().unwrap();
    let eps = tmp.path().join("eps");
    let run = tmp.path().join("run");
    ok(&["generate", "--seed", "2", "--episodes", "2", "--out", s(&eps)]);
    let table = ok(&[
        "run",
        "--no-cognitive-map",
        "--no-reflection",
        "--episodes",
        s(&eps),
        "--out",
        s(&run),
    ]);
    assert!(table.contains("no_reflection+no_cognitive_map"), "{table}");
    let cfg = fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(cfg.contains("no_cognitive_map = true"));
}

#[test]
fn record_then_replay_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let eps = tmp.path().join("eps");
    let (run, again, replayed) = (
        tmp.path().join("run"),
        tmp.path().join("again"),
        tmp.path().join("replayed"),
    );
    ok(&["generate", "--seed", "3", "--episodes", "3", "--out", s(&eps)]);
    let base = ["run", "--backend", "noisy", "--seed", "5", "--episodes", s(&eps)];
    ok(&[&base[..], &["--record", "--out", s(&run)]].concat());
    ok(&[&base[..], &["--out", s(&again)]].concat());
    ok(&["replay", "--run", s(&run), "--out", s(&replayed)]);

    let recorded: Vec<_> = tree(&run).into_iter().filter(|(n, _)| n != "cassette.jsonl").collect();
    assert_eq!(recorded, tree(&replayed));
    assert_eq!(recorded, tree(&again));
}

#[test]
fn bad_input_exits_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing");
    let out = s(tmp.path());
    for args in [
        vec!["frobnicate"],
        vec!["run", "--out", out],
        vec!["run", "--episodes", s(&missing), "--out", out],
        vec!["run", "--episodes", out, "--out", out, "--parallel"],
        vec!["run", "--episodes", out, "--out", out, "--config", s(&missing)],
        vec!["evaluate", "--run", s(&missing)],
        vec!["replay", "--run", out, "--out", out],
    ] {
        let res = cognav(&args);
        assert_eq!(
            res.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert!(!res.stderr.is_empty());
    }
}

#[test]
fn invalid_config_values_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let eps = tmp.path().join("eps");
    ok(&["generate", "--seed", "0", "--episodes", "1", "--out", s(&eps)]);
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "k = 0\n").unwrap();
    let res = cognav(&[
        "run",
        "--episodes",
        s(&eps),
        "--out",
        s(&tmp.path().join("r")),
        "--config",
        s(&cfg),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("k must be"));
}
