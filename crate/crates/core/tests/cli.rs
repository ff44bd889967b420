use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frontspeed"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn speed_of_fisher() {
    let (code, out) = run(&["speed", "--reaction", "fisher"]);
    assert_eq!(code, 0);
    let c: f64 = out.lines().next().unwrap().strip_prefix("c0 = ").unwrap().parse().unwrap();
    assert!((c - 2.0).abs() < 1e-3);
    assert!(out.contains("branch = shallow"));
}

#[test]
fn bound_golden_value_and_unknown_reaction() {
    let (code, out) = run(&["bound", "--reaction", "fisher", "--principle", "VP2", "--trial", "g=1-u"]);
    assert_eq!(code, 0);
    assert!(out.contains("value = 1.06666666667"), "{out}");
    assert_eq!(run(&["speed", "--reaction", "nosuch"]).0, 2);
    assert_eq!(run(&["bound", "--reaction", "fisher"]).0, 2);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["bound", "--reaction", "hadeler_rothe(4)", "--principle", "VP4", "--trial", "g=optimal", "--json"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let v: serde_json::Value = serde_json::from_str(&a.1).unwrap();
    assert!((v["result"]["value"].as_f64().unwrap() - 2.12132034356).abs() < 1e-9);
}

#[test]
fn config_file_and_csv_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let up = dir.path().join("p.csv");
    let prof = dir.path().join("profile.csv");
    std::fs::write(
        &cfg,
        r#"{"command": "speed", "reaction": {"kind": "builtin", "name": "bistable_cubic", "params": {"a": 0.3}},
           "tolerances": {"c_tol": 1e-6, "quad_rel_tol": 1e-10}}"#,
    )
    .unwrap();
    let (code, out) = run(&[
        "speed",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        up.to_str().unwrap(),
        "--profile-output",
        prof.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("c0 = 0.28284271"), "{out}");
    assert!(std::fs::read_to_string(&up).unwrap().starts_with("u,p\n"));
    assert!(std::fs::read_to_string(&prof).unwrap().starts_with("z,u,uz\n"));
    // The config names another subcommand.
    assert_eq!(run(&["verify", "--config", cfg.to_str().unwrap()]).0, 2);
    std::fs::write(&cfg, "{not json").unwrap();
    assert_eq!(run(&["speed", "--config", cfg.to_str().unwrap()]).0, 2);
}

#[test]
fn verify_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let (code, out) = run(&["verify", "--reaction", "hadeler_rothe(4)", "--c-tol", "1e-6", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["checks"].as_array().unwrap().len() > 10);
}

#[test]
fn evolve_writes_track() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("track.csv");
    let (code, out) = run(&[
        "evolve", "--reaction", "bistable_cubic(0.3)", "--length", "60", "--t-end", "40", "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    let speed: f64 = out.lines().next().unwrap().strip_prefix("speed = ").unwrap().parse().unwrap();
    assert!((speed - 0.2828).abs() < 0.02, "{speed}");
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("t,x_level\n"));
    assert_eq!(csv.lines().count(), 42);
    assert_eq!(run(&["evolve", "--reaction", "fisher", "--dx", "0.5"]).0, 2);
    assert_eq!(run(&["evolve", "--reaction", "fisher", "--ic", "blob"]).0, 2);
}

#[test]
fn optimize_family_and_gap() {
    let (code, out) = run(&["optimize", "--reaction", "hadeler_rothe(4)", "--family", "power_g", "--principle", "VP4", "--budget", "80"]);
    assert_eq!(code, 0, "{out}");
    let v: f64 = out.lines().find_map(|l| l.strip_prefix("value = ")).unwrap().parse().unwrap();
    assert!((2.12..=2.1213204).contains(&v), "{v}");
    let (code, out) = run(&["optimize", "--reaction", "fisher", "--budget", "80", "--jobs", "2", "--json"]);
    assert_eq!(code, 0, "{out}");
    let j: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(j["result"]["gap"].as_f64().unwrap() <= 0.05);
    assert_eq!(run(&["optimize", "--reaction", "fisher", "--budget", "10"]).0, 2);
}
