//! End-to-end tests of the hero binary: exit codes, output determinism, and
//! the textual contracts of each subcommand.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hero(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hero"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn assert_ok(out: &Output) {
    assert_eq!(
        code(out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn generate(dir: &Path, name: &str, queries: &str, seed: &str, rate: &str) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let out = hero(&[
        "generate",
        "--dataset-path",
        &path,
        "--queries",
        queries,
        "--seed",
        seed,
        "--collision-rate",
        rate,
    ]);
    assert_ok(&out);
    path
}

#[test]
fn validate_reports_workload_shape() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "8", "7", "0.5");
    let out = hero(&["validate", "--dataset-path", &ds]);
    assert_ok(&out);
    assert!(
        stdout(&out).contains("8 queries, 384 states/query"),
        "{}",
        stdout(&out)
    );
    assert!(stdout(&out).contains("unique plans"));
}

#[test]
fn generate_is_seed_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let a = generate(t.path(), "a.json", "6", "9", "0.4");
    let b = generate(t.path(), "b.json", "6", "9", "0.4");
    let c = generate(t.path(), "c.json", "6", "10", "0.4");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn validate_rejects_broken_inputs() {
    let t = tempfile::tempdir().unwrap();
    let missing = t.path().join("missing.json").to_string_lossy().into_owned();
    assert_eq!(code(&hero(&["validate", "--dataset-path", &missing])), 1);

    let ds = generate(t.path(), "ds.json", "4", "1", "0.0");
    let truncated = t.path().join("trunc.json");
    let bytes = fs::read(&ds).unwrap();
    fs::write(&truncated, &bytes[..40]).unwrap();
    assert_eq!(
        code(&hero(&[
            "validate",
            "--dataset-path",
            truncated.to_str().unwrap()
        ])),
        1
    );

    let empty = t.path().join("empty.json");
    fs::write(
        &empty,
        r#"{"version":1,"dop_values":[64,16,1],"operators":["NestedLoopJoin","HashJoin","MergeJoin","BitmapScan","IndexOnlyScan","IndexScan","SeqScan"],"queries":[]}"#,
    )
    .unwrap();
    assert_eq!(
        code(&hero(&[
            "validate",
            "--dataset-path",
            empty.to_str().unwrap()
        ])),
        1
    );
}

#[test]
fn explore_outputs_are_pool_size_independent() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "6", "5", "0.5");
    let s1 = t.path().join("s1.json").to_string_lossy().into_owned();
    let s2 = t.path().join("s2.json").to_string_lossy().into_owned();
    let r1 = t.path().join("r.json").to_string_lossy().into_owned();
    let r2 = t.path().join("r2.json").to_string_lossy().into_owned();
    assert_ok(&hero(&[
        "explore",
        "--dataset-path",
        &ds,
        "--storage-path",
        &s1,
        "--report-path",
        &r1,
        "--workers",
        "1",
    ]));
    assert_ok(&hero(&[
        "explore",
        "--dataset-path",
        &ds,
        "--storage-path",
        &s2,
        "--report-path",
        &r2,
        "--workers",
        "4",
    ]));
    assert_eq!(fs::read(&s1).unwrap(), fs::read(&s2).unwrap());
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
}

#[test]
fn explore_exhaustive_visits_every_state() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "4", "2", "0.0");
    let st = t.path().join("st.json").to_string_lossy().into_owned();
    let report = t.path().join("report.json");
    assert_ok(&hero(&[
        "explore",
        "--dataset-path",
        &ds,
        "--storage-path",
        &st,
        "--strategy",
        "exhaustive",
        "--report-path",
        report.to_str().unwrap(),
    ]));
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let queries = parsed["queries"].as_array().unwrap();
    assert_eq!(queries.len(), 4);
    for q in queries {
        assert_eq!(q["states_explored"], 384);
    }
}

#[test]
fn explore_dop_only_single_iteration_is_cheap() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "5", "3", "0.0");
    let st = t.path().join("st.json").to_string_lossy().into_owned();
    let report = t.path().join("report.json");
    assert_ok(&hero(&[
        "explore",
        "--dataset-path",
        &ds,
        "--storage-path",
        &st,
        "--params",
        "dop",
        "--iters",
        "1",
        "--report-path",
        report.to_str().unwrap(),
    ]));
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for q in parsed["queries"].as_array().unwrap() {
        assert!(q["states_explored"].as_u64().unwrap() <= 3);
    }
}

#[test]
fn infer_on_untrained_storage_falls_back() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "4", "6", "0.0");
    let st = t.path().join("empty.json");
    fs::write(&st, "{\"vertices\":[],\"edges\":[]}\n").unwrap();
    let out = hero(&[
        "infer",
        "--dataset-path",
        &ds,
        "--storage-path",
        st.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    for line in lines {
        assert!(line.contains("fallback: default"), "{line}");
    }
}

#[test]
fn disabling_an_anchor_forces_fallback() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "6", "3", "0.0");
    let st = t.path().join("st.json").to_string_lossy().into_owned();
    assert_ok(&hero(&[
        "explore",
        "--dataset-path",
        &ds,
        "--storage-path",
        &st,
        "--strategy",
        "exhaustive",
    ]));
    let infer = |query: &str| {
        let out = hero(&[
            "infer",
            "--dataset-path",
            &ds,
            "--storage-path",
            &st,
            "--query",
            query,
            "--tau",
            "0",
            "--min-boost",
            "1",
            "--top-k",
            "400",
        ]);
        assert_ok(&out);
        stdout(&out)
    };
    // Find a query whose inference picks a model, and that model's anchor id.
    let all = hero(&[
        "infer",
        "--dataset-path",
        &ds,
        "--storage-path",
        &st,
        "--tau",
        "0",
        "--min-boost",
        "1",
        "--top-k",
        "400",
    ]);
    assert_ok(&all);
    let text = stdout(&all);
    let line = text
        .lines()
        .find(|l| l.contains("(chosen, anchor="))
        .expect("some query improves on its default");
    let query = line.split(':').next().unwrap().to_string();
    let anchor = line
        .split("anchor=")
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .to_string();

    assert_ok(&hero(&[
        "storage",
        "disable",
        "--dataset-path",
        &ds,
        "--storage-path",
        &st,
        "--id",
        &anchor,
    ]));
    assert!(infer(&query).contains("fallback: default"));
    assert_ok(&hero(&[
        "storage",
        "enable",
        "--dataset-path",
        &ds,
        "--storage-path",
        &st,
        "--id",
        &anchor,
    ]));
    assert!(infer(&query).contains("(chosen, anchor="));
}

#[test]
fn eval_oracle_policy_scores_100_of_opt() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "6", "4", "0.3");
    let out = hero(&["eval", "--dataset-path", &ds, "--policy", "oracle"]);
    assert_ok(&out);
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["e2e_boost_pct_of_opt"], 100.0);
    assert_eq!(parsed["ex_boost_pct_of_opt"], 100.0);
    assert_eq!(parsed["degradations_pct"], 0.0);
}

#[test]
fn sweep_writes_deterministic_csv() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "5", "8", "0.4");
    let c1 = t.path().join("a.csv").to_string_lossy().into_owned();
    let c2 = t.path().join("b.csv").to_string_lossy().into_owned();
    assert_ok(&hero(&[
        "sweep",
        "--dataset-path",
        &ds,
        "--csv-path",
        &c1,
        "--workers",
        "2",
    ]));
    assert_ok(&hero(&[
        "sweep",
        "--dataset-path",
        &ds,
        "--csv-path",
        &c2,
        "--workers",
        "7",
    ]));
    let a = fs::read_to_string(&c1).unwrap();
    assert_eq!(a, fs::read_to_string(&c2).unwrap());
    let header = a.lines().next().unwrap();
    assert!(header.starts_with("strategy,states_explored,states_all,plans_explored,plans_all,"));
    assert!(header.ends_with("f_beta_0.1,f_beta_1,f_beta_10"));
    assert_eq!(a.lines().count(), 1 + 7);
}

#[test]
fn config_file_supplies_defaults_and_rejects_unknown_keys() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "4", "1", "0.0");
    let cfg = t.path().join("cfg.json");
    fs::write(&cfg, format!("{{\"dataset_path\": {:?}}}\n", ds)).unwrap();
    let out = hero(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_ok(&out);
    assert!(stdout(&out).contains("4 queries, 384 states/query"));

    let bad = t.path().join("bad.json");
    fs::write(&bad, "{\"dataset_paht\": \"x\"}\n").unwrap();
    assert_eq!(
        code(&hero(&["validate", "--config", bad.to_str().unwrap()])),
        1
    );
}

#[test]
fn runtime_write_failures_exit_2() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "4", "1", "0.0");
    let out = hero(&[
        "eval",
        "--dataset-path",
        &ds,
        "--policy",
        "oracle",
        "--out-dir",
        "/proc/1/hero-denied",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_flags_and_subcommand_misuse_exit_1() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "ds.json", "4", "1", "0.0");
    assert_eq!(code(&hero(&["validate", "--nope"])), 1);
    assert_eq!(code(&hero(&["explore", "--dataset-path", &ds])), 1); // storage path missing
    assert_eq!(
        code(&hero(&[
            "eval",
            "--dataset-path",
            &ds,
            "--policy",
            "nonsense"
        ])),
        1
    );
    assert_eq!(
        code(&hero(&[
            "explore",
            "--dataset-path",
            &ds,
            "--storage-path",
            "s.json",
            "--strategy",
            "greedy",
            "--iters",
            "2",
        ])),
        1
    );
}
