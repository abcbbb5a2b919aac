use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fgl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgl")).args(args).env_remove("FGL_THREADS").output().expect("spawn fgl")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn csv_lines(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn planted_tree_solve_is_checked() {
    let out = fgl(&["solve", "--pipeline", "lemma1-tree", "--gen", "n=512,plant=conv", "--seed", "7", "--check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = stdout_json(&out);
    assert_eq!(json["verdict"], "found");
    assert_eq!(json["check"]["agree"], true);
    assert_eq!(json["witness"]["kind"], "conv");
}

#[test]
fn decision_on_unsolvable_instance_says_none() {
    let out = fgl(&["solve", "--pipeline", "histogram-decide", "--gen", "n=64", "--ell", "3", "--seed", "1", "--check"]);
    assert_eq!(out.status.code(), Some(0));
    let json = stdout_json(&out);
    assert_eq!(json["verdict"], "none");
    assert_eq!(json["check"]["oracle_verdict"], "none");
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["solve", "--pipeline", "histogram-report", "--gen", "n=32"][..],
        &["solve", "--pipeline", "histogram-decide", "--gen", "n=32"],
        &["solve", "--pipeline", "lemma1-tree"],
        &["solve", "--pipeline", "lemma1-tree", "--gen", "n=32", "--ell", "3"],
        &["solve", "--pipeline", "lemma1-tree", "--gen", "n=32", "--R", "6"],
        &["solve", "--pipeline", "matmul-tree", "--gen", "n=32", "--variant", "ones-split-binary"],
        &["solve", "--pipeline", "nope", "--gen", "n=32"],
        &["solve", "--pipeline", "lemma1-tree", "--in", "/nonexistent/instance.json"],
        &["gen", "--gen", "n=3,universe=1,plant=conv"],
        &["gen", "--gen", "size=3"],
        &["tradeoff", "--reps", "0"],
        &["fp-measure", "--mode", "lemma1", "--ell", "3", "--samples", "1"],
        &["frobnicate"],
    ] {
        let out = fgl(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
    assert_eq!(fgl(&["--help"]).status.code(), Some(0));
}

#[test]
fn exhausted_rehash_under_check_exits_two() {
    let base = ["solve", "--pipeline", "lemma1-tree", "--gen", "n=256", "--fp-budget", "1e-9", "--max-rehash", "1"];
    let out = fgl(&base);
    assert_eq!(out.status.code(), Some(0));
    let json = stdout_json(&out);
    assert_eq!(json["verdict"], "rehash-exhausted");
    assert_eq!(json["report"]["rehashes"], 1);
    let mut args = base.to_vec();
    args.push("--check");
    let out = fgl(&args);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["check"]["agree"], false);
}

#[test]
fn bad_thread_cap_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_fgl"))
        .args(["selftest", "--instances", "1"])
        .env("FGL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_fgl"))
        .args(["selftest", "--instances", "2"])
        .env("FGL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn generated_files_feed_solve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let p = path.to_str().unwrap();
    let out = fgl(&["gen", "--gen", "n=48,plant=conv-diff", "--seed", "3", "--out", p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file["kind"], "conv");
    assert_eq!(file["arrays"][0].as_array().unwrap().len(), 48);
    assert_eq!(file["meta"]["seed"], 3);
    assert_eq!(file["meta"]["plant"], "conv-diff");

    // Same seed, same bytes.
    let again = fgl(&["gen", "--gen", "n=48,plant=conv-diff", "--seed", "3"]);
    assert_eq!(again.stdout, std::fs::read(&path).unwrap());

    let fp = dir.path().join("fp.csv");
    for pipeline in ["lemma1-tree", "matmul-tree", "histogram-report", "histogram-decide"] {
        let mut args = vec!["solve", "--pipeline", pipeline, "--in", p, "--check", "--X", "16"];
        if pipeline.starts_with("histogram") {
            args.extend(["--ell", "3"]);
        }
        if pipeline == "histogram-report" {
            args.extend(["--fp-out", fp.to_str().unwrap()]);
        }
        let out = fgl(&args);
        assert_eq!(out.status.code(), Some(0), "{pipeline}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout_json(&out)["verdict"], "found", "{pipeline}");
    }
    let rows = std::fs::read_to_string(&fp).unwrap();
    let mut lines = rows.lines();
    assert_eq!(lines.next(), Some("k,queries,matches,candidates,false_candidates,encoding_errors"));
    assert_eq!(lines.count(), 47);
}

#[test]
fn split_routed_reporting_matches_plain() {
    let base = ["solve", "--pipeline", "histogram-report", "--gen", "n=40,plant=conv-diff", "--ell", "3", "--seed", "5"];
    let plain = stdout_json(&fgl(&base));
    let mut args = base.to_vec();
    args.extend(["--alpha", "0.5"]);
    let split = stdout_json(&fgl(&args));
    assert_eq!(plain["witness"], split["witness"]);
    assert_eq!(plain["report"]["totals"], split["report"]["totals"]);
}

#[test]
fn three_sum_files_are_rejected_by_solve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = fgl(&["gen", "--gen", "n=8,plant=3sum", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = fgl(&["solve", "--pipeline", "lemma1-tree", "--in", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fp_measure_csv_shape() {
    let out = fgl(&["fp-measure", "--mode", "lemma3", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_lines(&out), vec!["n,R,ell,samples,measured_mean,predicted_bound,ratio"]);

    let args = ["fp-measure", "--mode", "lemma1", "--n", "128", "--R", "4,8", "--samples", "3", "--seed", "2"];
    let out = fgl(&args);
    let lines = csv_lines(&out);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("128,4,,3,"));
    assert!(lines[2].starts_with("128,8,,3,"));
    assert_eq!(fgl(&args).stdout, out.stdout);
}

#[test]
fn tradeoff_rows_follow_the_sweep() {
    let out = fgl(&["tradeoff", "--n", "256", "--X", "32", "--reps", "1"]);
    let lines = csv_lines(&out);
    assert_eq!(lines[0], "variant,n,R,X,build_ms,query_ms,witnesses");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("ones-split-binary,256,8,32,"));

    let args = ["tradeoff", "--n", "256", "--X", "16,64", "--variant", "ones-split-binary,length-split-quad", "--reps", "2"];
    let witnesses = |out: &Output| -> Vec<String> {
        csv_lines(out)[1..].iter().map(|l| format!("{}:{}", l.split(',').next().unwrap(), l.rsplit(',').next().unwrap())).collect()
    };
    let first = witnesses(&fgl(&args));
    assert_eq!(first.len(), 4);
    assert_eq!(first, witnesses(&fgl(&args)));
    let counts: Vec<&str> = first.iter().map(|s| s.split(':').nth(1).unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn selftest_passes_and_writes_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("self.txt");
    let out = fgl(&["selftest", "--instances", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(Path::new(&path)).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
