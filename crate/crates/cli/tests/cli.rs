use std::path::Path;
use std::process::{Command, Output};

use stagewatch_core::eval::{format_seconds, EfficiencyReport};
use stagewatch_core::sim::{generate_scenario, Action, Cohort, PaceProfile, ScenarioEvent};
use stagewatch_core::workspace::{reference_plan, AssemblyPlan};

fn stagewatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stagewatch")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_byte_identical_across_invocations() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = stagewatch(&["simulate", "--runs", "3", "--lag-ms", "300", "--lag-jitter", "100", "--miss-rate", "0.1", "--fp-rate", "0.1", "--seed", "7", "--out", s(d.path())]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("simulated 6 runs"));
    }
    for f in ["truth.csv", "pred.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let truth = std::fs::read_to_string(a.path().join("truth.csv")).unwrap();
    // 6 runs x (12 starts + completion) + header.
    assert_eq!(truth.lines().count(), 6 * 13 + 1);
    assert!(truth.contains("\nfast-000,fast,0,0.000\n"));
    assert!(truth.contains("\nslow-003,slow,12,"));
}

#[test]
fn zero_runs_write_empty_outputs() {
    let d = tempfile::tempdir().unwrap();
    let out = stagewatch(&["simulate", "--runs", "0", "--out", s(d.path())]);
    assert_eq!(code(&out), 0);
    for f in ["truth.csv", "pred.csv"] {
        assert_eq!(std::fs::read_to_string(d.path().join(f)).unwrap(), "run_id,cohort,stage_index,start_s\n");
    }
}

#[test]
fn invalid_inputs_exit_with_validation_status() {
    let d = tempfile::tempdir().unwrap();
    let mut plan = reference_plan();
    plan.zones.retain(|z| z.id != "tray_right");
    let plan_path = d.path().join("plan.json");
    std::fs::write(&plan_path, plan.to_json_pretty()).unwrap();
    let out = stagewatch(&["simulate", "--plan", s(&plan_path), "--out", s(d.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("tray_right"));
    assert!(!d.path().join("truth.csv").exists());

    std::fs::write(&plan_path, "{\"plan_id\": \"x\", \"colour\": 1}").unwrap();
    assert_eq!(code(&stagewatch(&["simulate", "--plan", s(&plan_path), "--out", s(d.path())])), 2);
    assert_eq!(code(&stagewatch(&["simulate", "--miss-rate", "1.5", "--out", s(d.path())])), 2);
    assert_eq!(code(&stagewatch(&["simulate", "--fps", "0", "--out", s(d.path())])), 2);
    assert_eq!(code(&stagewatch(&["simulate", "--pace", "medium"])), 2);
}

#[test]
fn missing_files_exit_with_io_status() {
    let d = tempfile::tempdir().unwrap();
    let nope = d.path().join("nope.csv");
    assert_eq!(code(&stagewatch(&["evaluate", "--truth", s(&nope), "--pred", s(&nope)])), 3);
    assert_eq!(code(&stagewatch(&["report", "--report", s(&nope)])), 3);
    assert_eq!(code(&stagewatch(&["simulate", "--plan", s(&nope)])), 3);
    assert_eq!(code(&stagewatch(&["run", "--scenario", s(&nope)])), 3);
}

fn write_run(out: &mut String, run: &str, bounds: &[u64]) {
    for (i, b) in bounds.iter().enumerate() {
        out.push_str(&format!("{run},slow,{i},{}\n", format_seconds(*b)));
    }
}

#[test]
fn constant_lag_on_ten_second_stages() {
    let d = tempfile::tempdir().unwrap();
    let (mut truth, mut pred) = (String::from("run_id,cohort,stage_index,start_s\n"), String::new());
    pred.push_str("run_id,cohort,stage_index,start_s\n");
    let t: Vec<u64> = (0..=12).map(|i| i * 10_000).collect();
    let p: Vec<u64> = t.iter().map(|&x| if x == 0 { 0 } else { x + 1000 }).collect();
    write_run(&mut truth, "r1", &t);
    write_run(&mut pred, "r1", &p);
    std::fs::write(d.path().join("t.csv"), truth).unwrap();
    std::fs::write(d.path().join("p.csv"), pred).unwrap();
    let report_path = d.path().join("r.json");
    let out = stagewatch(&["evaluate", "--truth", s(&d.path().join("t.csv")), "--pred", s(&d.path().join("p.csv")), "--out", s(&report_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let report = EfficiencyReport::from_json(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    // Stage 0 is only stretched by the lag; every later stage is shifted.
    assert!((report.per_stage[0].mean - 10.0 / 11.0).abs() < 1e-12);
    for st in &report.per_stage[1..] {
        assert!((st.mean - 9.0 / 11.0).abs() < 1e-12, "{}", st.mean);
    }
}

#[test]
fn evaluate_names_unmatched_runs() {
    let d = tempfile::tempdir().unwrap();
    let bounds: Vec<u64> = (0..=12).map(|i| i * 1000).collect();
    let mut truth = String::from("run_id,cohort,stage_index,start_s\n");
    write_run(&mut truth, "a", &bounds);
    write_run(&mut truth, "b", &bounds);
    let mut pred = String::from("run_id,cohort,stage_index,start_s\n");
    write_run(&mut pred, "a", &bounds);
    std::fs::write(d.path().join("t.csv"), &truth).unwrap();
    std::fs::write(d.path().join("p.csv"), &pred).unwrap();
    let out = stagewatch(&["evaluate", "--truth", s(&d.path().join("t.csv")), "--pred", s(&d.path().join("p.csv")), "--out", s(&d.path().join("r.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("'b'"));

    let mut short = String::from("run_id,cohort,stage_index,start_s\n");
    write_run(&mut short, "a", &bounds[..12]);
    write_run(&mut short, "b", &bounds);
    std::fs::write(d.path().join("p.csv"), &short).unwrap();
    let out = stagewatch(&["evaluate", "--truth", s(&d.path().join("t.csv")), "--pred", s(&d.path().join("p.csv")), "--out", s(&d.path().join("r.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("11 stages"));
}

fn scenario_file(dir: &Path, name: &str, events: &[ScenarioEvent]) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(events).unwrap()).unwrap();
    p.to_str().unwrap().to_owned()
}

fn log_lines(dir: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(dir.join("log.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn run_replays_scenarios() {
    let d = tempfile::tempdir().unwrap();
    let plan = reference_plan();
    let events = generate_scenario(&plan, &PaceProfile::fixed(2000, Cohort::Fast), 1).unwrap().events;

    let full = scenario_file(d.path(), "full.json", &events);
    let out = stagewatch(&["run", "--scenario", &full, "--out", s(d.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let log = log_lines(d.path());
    assert_eq!(log.last().unwrap()["payload"]["completed"], true);
    assert_eq!(log.iter().filter(|l| l["type"] == "stage_transition").count(), 12);
    let pred = std::fs::read_to_string(d.path().join("pred.csv")).unwrap();
    assert_eq!(pred.lines().count(), 14);
    assert!(pred.lines().nth(1).unwrap().starts_with("full,replay,0,"));

    // Without the final connection the run stalls in the last stage.
    let partial = scenario_file(d.path(), "partial.json", &events[..events.len() - 1]);
    assert_eq!(code(&stagewatch(&["run", "--scenario", &partial, "--out", s(d.path())])), 0);
    let log = log_lines(d.path());
    assert_eq!(log.last().unwrap()["payload"]["completed"], false);
    assert_eq!(log.last().unwrap()["payload"]["stages_entered"], 12);
    let pred = std::fs::read_to_string(d.path().join("pred.csv")).unwrap();
    assert_eq!(pred.lines().count(), 14);

    let mut wrong = events.clone();
    let first_show = wrong.iter_mut().find(|e| matches!(e.action, Action::ShowConnection { .. })).unwrap();
    if let Action::ShowConnection { connection, .. } = &mut first_show.action {
        *connection = "gear_to_coupling".into();
    }
    let wrong = scenario_file(d.path(), "wrong.json", &wrong);
    assert_eq!(code(&stagewatch(&["run", "--scenario", &wrong, "--out", s(d.path())])), 0);
    let log = log_lines(d.path());
    let err = log.iter().find(|l| l["type"] == "wrong_connection").expect("wrong connection logged");
    assert_eq!(err["payload"]["expected"], "bracket_to_base");
    assert_eq!(log.last().unwrap()["payload"]["completed"], false);

    std::fs::write(d.path().join("junk.json"), "[{\"at_ms\": -1}]").unwrap();
    assert_eq!(code(&stagewatch(&["run", "--scenario", s(&d.path().join("junk.json")), "--out", s(d.path())])), 2);
}

#[test]
fn report_rejects_inconsistent_reports() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&stagewatch(&["simulate", "--runs", "2", "--out", s(d.path())])), 0);
    let r = d.path().join("r.json");
    let out = stagewatch(&["evaluate", "--truth", s(&d.path().join("truth.csv")), "--pred", s(&d.path().join("pred.csv")), "--out", s(&r), "--hist-bins", "5"]);
    assert_eq!(code(&out), 0);
    let mut report = EfficiencyReport::from_json(&std::fs::read_to_string(&r).unwrap()).unwrap();
    assert_eq!(report.histogram.counts.len(), 5);
    report.samples += 1;
    std::fs::write(&r, report.to_json_pretty()).unwrap();
    assert_eq!(code(&stagewatch(&["report", "--report", s(&r), "--out", s(d.path())])), 2);
    std::fs::write(&r, "{}").unwrap();
    assert_eq!(code(&stagewatch(&["report", "--report", s(&r), "--out", s(d.path())])), 2);
}

#[test]
fn shipped_reference_plan_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans/reference.json");
    let shipped = AssemblyPlan::load(&path).unwrap();
    assert_eq!(shipped, reference_plan());
}
