use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fcavpp::generator::canonical_line_instance;

fn fcavpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcavpp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write_canonical(dir: &Path, name: &str, fuel: f64) -> String {
    let path = dir.join(name);
    canonical_line_instance(fuel).save(&path).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    for (path, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let out = fcavpp(&[
            "gen",
            "--targets",
            "6",
            "--vehicles",
            "2",
            "--fuel-mult",
            "2.5",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn gen_rejects_zero_targets() {
    let dir = tempfile::tempdir().unwrap();
    let out = fcavpp(&[
        "gen",
        "--targets",
        "0",
        "--vehicles",
        "1",
        "--fuel-mult",
        "2.5",
        "--out",
        dir.path().join("x.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn solve_writes_a_checkable_solution() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_canonical(dir.path(), "line.json", 8.0);
    let sol = dir.path().join("sol.json");
    let events = dir.path().join("events.jsonl");
    let out = fcavpp(&[
        "solve",
        &inst,
        "--formulation",
        "f2",
        "--out",
        sol.to_str().unwrap(),
        "--events",
        events.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["incumbent"], 12.0);
    let log = fs::read_to_string(&events).unwrap();
    assert!(log
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(log.contains("incumbent_updated"));
    let check = fcavpp(&["check", &inst, sol.to_str().unwrap()]);
    assert_eq!(code(&check), 0);
    assert_eq!(json(&check)["pass"], true);
}

#[test]
fn check_reports_fuel_violation() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_canonical(dir.path(), "line.json", 8.0);
    let sol = dir.path().join("bad.json");
    fs::write(&sol, r#"{"routes": [[0, 2, 3, 0]], "total_cost": 12.0}"#).unwrap();
    let out = fcavpp(&["check", &inst, sol.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["pass"], false);
    assert!(v["violations"].to_string().contains("fuel_exceeded"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unreachable = write_canonical(dir.path(), "far.json", 3.0);
    assert_eq!(code(&fcavpp(&["solve", &unreachable])), 1);
    assert_eq!(code(&fcavpp(&["oracle", &unreachable])), 1);

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(code(&fcavpp(&["solve", garbage.to_str().unwrap()])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&fcavpp(&["solve", missing.to_str().unwrap()])), 2);

    let line = write_canonical(dir.path(), "line.json", 8.0);
    assert_eq!(code(&fcavpp(&["solve", &line, "--time-limit", "0"])), 3);
    assert_eq!(code(&fcavpp(&["solve", &line, "--time-limit", "-1"])), 2);
}

#[test]
fn oracle_agrees_with_solve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let out = fcavpp(&[
        "gen",
        "--targets",
        "5",
        "--vehicles",
        "2",
        "--fuel-mult",
        "2.25",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let oracle = json(&fcavpp(&["oracle", path.to_str().unwrap()]));
    for f in ["f1", "f2", "f3", "f4"] {
        let solved = json(&fcavpp(&[
            "solve",
            path.to_str().unwrap(),
            "--formulation",
            f,
        ]));
        assert_eq!(solved["incumbent"], oracle["cost"], "{f}");
    }
}

#[test]
fn lp_compare_and_bench_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let out = fcavpp(&["gen-suite", "--out", suite.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_dir(&suite).unwrap().count(), 421);

    let one = suite.join("n10_l0_m3_mu250.json");
    let lp_csv = dir.path().join("lp.csv");
    let out = fcavpp(&[
        "lp-compare",
        one.to_str().unwrap(),
        "--out",
        lp_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&lp_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "id,variant,n,m,mu,lp_f1,lp_f2,lp_f3,lp_f4,incumbent,bound,gap,wall_time,nodes,cuts,status,error"
    );
    assert!(lines
        .next()
        .unwrap()
        .starts_with("n10_l0_m3_mu250,lp,10,3,"));

    // A small suite directory with its own manifest.
    let small = dir.path().join("small");
    fs::create_dir(&small).unwrap();
    let manifest = fs::read_to_string(suite.join("manifest.csv")).unwrap();
    let keep: Vec<&str> = manifest.lines().take(3).collect();
    for row in &keep[1..] {
        let file = row.split(',').nth(1).unwrap();
        fs::copy(suite.join(file), small.join(file)).unwrap();
    }
    fs::write(small.join("manifest.csv"), keep.join("\n") + "\n").unwrap();
    let bench_csv = dir.path().join("bench.csv");
    let out = fcavpp(&[
        "bench",
        small.to_str().unwrap(),
        "--formulations",
        "f4",
        "--time-limit",
        "0.5",
        "--jobs",
        "2",
        "--out",
        bench_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(&bench_csv).unwrap();
    assert_eq!(rows.lines().count(), 3);
    assert!(dir.path().join("bench_summary.csv").exists());
    assert_eq!(
        code(&fcavpp(&[
            "bench",
            dir.path().to_str().unwrap(),
            "--out",
            "x.csv"
        ])),
        2
    );
}
