use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str], state: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ego-ranker"))
        .args(args)
        .env("EGO_RANKER_STATE", state)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn rank_fixture_puts_bob_first() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let input = fixture("sample.csv");
    let res = run(
        &["rank", "--input", input.to_str().unwrap(), "--ego", "alice", "--out", out.to_str().unwrap()],
        &dir.path().join("state"),
    );
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let ratings: serde_json::Value = serde_json::from_str(&read(&out.join("alice.ratings.json"))).unwrap();
    assert_eq!(ratings["ratings"][0]["friend"], "bob");
    assert_eq!(ratings["ratings"][1]["friend"], "carol");
    assert!(read(&out.join("alice.ratings.json")).contains("\"rating\": 0.666667"));
    let circles: serde_json::Value = serde_json::from_str(&read(&out.join("alice.circles.json"))).unwrap();
    assert_eq!(circles["circles"][0], serde_json::json!(["bob", "carol"]));
    // only the requested ego
    assert!(!out.join("bob.ratings.json").exists());
}

#[test]
fn rank_all_writes_every_user() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let input = fixture("sample.csv");
    let res = run(
        &["rank", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &dir.path().join("state"),
    );
    assert_eq!(code(&res), 0);
    for user in ["alice", "bob", "carol"] {
        assert!(out.join(format!("{user}.ratings.json")).exists());
        assert!(out.join(format!("{user}.circles.json")).exists());
    }
}

#[test]
fn jsonl_input_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("sample.jsonl");
    let lines: String = read(&fixture("sample.csv"))
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let size = f.get(4).map_or(String::new(), |s| format!(",\"size\":{s}"));
            format!("{{\"a\":\"{}\",\"b\":\"{}\",\"ts\":{},\"type\":\"{}\"{size}}}\n", f[0], f[1], f[2], f[3])
        })
        .collect();
    fs::write(&jsonl, lines).unwrap();
    let (csv_out, json_out) = (dir.path().join("c"), dir.path().join("j"));
    let state = dir.path().join("state");
    let csv = fixture("sample.csv");
    assert_eq!(code(&run(&["rank", "--input", csv.to_str().unwrap(), "--out", csv_out.to_str().unwrap()], &state)), 0);
    assert_eq!(code(&run(&["rank", "--input", jsonl.to_str().unwrap(), "--out", json_out.to_str().unwrap()], &state)), 0);
    for f in ["alice.ratings.json", "carol.circles.json"] {
        assert_eq!(read(&csv_out.join(f)), read(&json_out.join(f)));
    }
}

#[test]
fn unknown_ego_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("sample.csv");
    let res = run(
        &["rank", "--input", input.to_str().unwrap(), "--ego", "zed", "--out", dir.path().to_str().unwrap()],
        &dir.path().join("state"),
    );
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("zed"));
}

#[test]
fn malformed_input_exits_1_unless_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "alice,bob,100,call\nalice,bob,notanumber,call\nalice,alice,5,call\nalice,carol,200,fax\n").unwrap();
    let out = dir.path().join("out");
    let state = dir.path().join("state");
    let res = run(&["rank", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()], &state);
    assert_eq!(code(&res), 1);
    let err = stderr(&res);
    assert!(err.contains("line 2") && err.contains("line 3") && err.contains("line 4"), "{err}");
    let res = run(
        &["rank", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap(), "--lenient"],
        &state,
    );
    assert_eq!(code(&res), 0);
    assert!(stderr(&res).contains("skipped 3"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(&config, "{\"weights\": {\"alpha\": -1.0}}").unwrap();
    let input = fixture("sample.csv");
    let res = run(
        &[
            "rank", "--input", input.to_str().unwrap(), "--config", config.to_str().unwrap(),
            "--out", dir.path().to_str().unwrap(),
        ],
        &dir.path().join("state"),
    );
    assert_eq!(code(&res), 2, "{}", stderr(&res));
}

fn ingest(input: &Path, state: &Path) -> Output {
    run(&["ingest", "--input", input.to_str().unwrap()], state)
}

#[test]
fn ingest_in_two_batches_matches_rank() {
    let dir = tempfile::tempdir().unwrap();
    let text = read(&fixture("sample.csv"));
    let lines: Vec<&str> = text.lines().skip(1).collect();
    let (b1, b2) = (dir.path().join("b1.csv"), dir.path().join("b2.csv"));
    // cut inside the first window so it has to stay open across batches
    fs::write(&b1, lines[..2].join("\n")).unwrap();
    fs::write(&b2, lines[2..].join("\n")).unwrap();
    let state = dir.path().join("state");
    assert_eq!(code(&ingest(&b1, &state)), 0);
    assert_eq!(code(&ingest(&b2, &state)), 0);

    let (whole, split) = (dir.path().join("whole"), dir.path().join("split"));
    let input = fixture("sample.csv");
    assert_eq!(code(&run(&["rank", "--input", input.to_str().unwrap(), "--out", whole.to_str().unwrap()], &state)), 0);
    let res = run(&["rank", "--out", split.to_str().unwrap()], &state);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    for user in ["alice", "bob", "carol"] {
        for kind in ["ratings", "circles"] {
            let f = format!("{user}.{kind}.json");
            assert_eq!(read(&whole.join(&f)), read(&split.join(&f)), "{f}");
        }
    }
}

#[test]
fn repeated_batch_warns() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    // a batch inside a single window stays acceptable because that window is still open
    let input = dir.path().join("batch.csv");
    fs::write(&input, "alice,bob,100,call\nalice,carol,200,call\n").unwrap();
    let first = ingest(&input, &state);
    assert_eq!(code(&first), 0);
    assert!(stderr(&first).contains("0 warning(s)"));
    let again = ingest(&input, &state);
    let err = stderr(&again);
    assert_eq!(code(&again), 0);
    assert!(err.contains("ingested before") && err.contains("1 warning(s)"), "{err}");
}

#[test]
fn out_of_order_batch_rejected_without_changes() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    let late = dir.path().join("late.csv");
    let early = dir.path().join("early.csv");
    fs::write(&late, "alice,bob,700000,call\n").unwrap();
    fs::write(&early, "alice,bob,800000,call\n").unwrap();
    assert_eq!(code(&ingest(&late, &state)), 0);
    assert_eq!(code(&ingest(&early, &state)), 0);
    let snapshot = read(&state.join("egos/alice.json"));
    let stale = dir.path().join("stale.csv");
    fs::write(&stale, "alice,carol,900000,call\nalice,bob,100,call\n").unwrap();
    let res = ingest(&stale, &state);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("out-of-order"), "{}", stderr(&res));
    assert_eq!(read(&state.join("egos/alice.json")), snapshot);
}

#[test]
fn rank_without_state_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["rank", "--out", dir.path().to_str().unwrap()], &dir.path().join("empty"));
    assert_eq!(code(&res), 2);
}

#[test]
fn corrupt_snapshot_detected() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    assert_eq!(code(&ingest(&fixture("sample.csv"), &state)), 0);
    let path = state.join("egos/alice.json");
    let tampered = read(&path).replacen("\"bob\"", "\"bo\"", 1);
    fs::write(&path, tampered).unwrap();
    let res = run(&["rank", "--ego", "alice", "--out", dir.path().join("o").to_str().unwrap()], &state);
    assert_eq!(code(&res), 1, "{}", stderr(&res));
}

fn scenario_file(dir: &Path, seeds: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    fs::write(
        &path,
        format!(r#"{{"tier_sizes":[3,4],"tier_strengths":[8.0,1.0],"windows":20,"seeds":{seeds}}}"#),
    )
    .unwrap();
    path
}

#[test]
fn simulate_writes_reports_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let seeds: Vec<String> = (1..=20).map(|s| s.to_string()).collect();
    let scenario = scenario_file(dir.path(), &format!("[{}]", seeds.join(",")));
    let out = dir.path().join("sim");
    let res = run(&["simulate", "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    for s in 1..=20 {
        let report: serde_json::Value = serde_json::from_str(&read(&out.join(format!("report_seed_{s}.json")))).unwrap();
        assert!(report["kendall_tau"].as_f64().unwrap() <= 1.0);
        assert_eq!(report["per_tier_accuracy"].as_array().unwrap().len(), 2);
    }
    let aggregate: serde_json::Value = serde_json::from_str(&read(&out.join("aggregate.json"))).unwrap();
    assert_eq!(aggregate["runs"], 20);

    let again = dir.path().join("sim2");
    run(&["simulate", "--scenario", scenario.to_str().unwrap(), "--out", again.to_str().unwrap()], dir.path());
    assert_eq!(read(&out.join("aggregate.json")), read(&again.join("aggregate.json")));
}

#[test]
fn simulate_rejects_empty_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_file(dir.path(), "[]");
    let res = run(&["simulate", "--scenario", scenario.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(code(&res), 2);
    assert!(!dir.path().join("aggregate.json").exists());
}

#[test]
fn default_scenario_golden() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.json");
    let res = run(&["simulate", "--scenario", scenario.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert_eq!(read(&dir.path().join("aggregate.json")), read(&fixture("default_aggregate.json")));
}

#[test]
fn export_dot_labels_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("e.csv");
    // b beats c in the only window
    fs::write(&events, "ego,b,10,call\nego,b,20,call\nego,c,30,call\n").unwrap();
    let out = dir.path().join("out");
    let res = run(&["rank", "--input", events.to_str().unwrap(), "--ego", "ego", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(code(&res), 0);
    let (ratings, circles) = (out.join("ego.ratings.json"), out.join("ego.circles.json"));
    let args = [
        "export-dot",
        "--ratings",
        ratings.to_str().unwrap(),
        "--circles",
        circles.to_str().unwrap(),
    ];
    let first = run(&args, dir.path());
    assert_eq!(code(&first), 0);
    let dot = String::from_utf8(first.stdout).unwrap();
    assert!(dot.contains("\"ego\" -- \"b\" [label=\"0.625000\"]"), "{dot}");
    assert!(dot.contains("\"ego\" -- \"c\" [label=\"0.375000\"]"), "{dot}");
    assert_eq!(run(&args, dir.path()).stdout, dot.into_bytes());

    let res = run(&["export-dot", "--ratings", "/nonexistent.json", "--circles", "/nonexistent.json"], dir.path());
    assert_eq!(code(&res), 1);
}
