//! End-to-end runs of the `smb-csp` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smb_core::{named, Instance, InstanceBuilder};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smb-csp")).args(args).env_remove("SMB_CSP_CAPS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `x⊕y = 1`, `y⊕z = 1`, `x⊕z = c` over M2.
fn xor_system(c: usize) -> Instance {
    let rel = |c: usize| vec![vec![0, c], vec![1, 1 - c]];
    InstanceBuilder::new()
        .algebra(named::m2())
        .var("z", "M2")
        .var("y", "M2")
        .var("x", "M2")
        .constraint(&[2, 1], rel(1))
        .constraint(&[1, 0], rel(1))
        .constraint(&[2, 0], rel(c))
        .build()
        .unwrap()
}

#[test]
fn unsat_triangle_exits_one() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "tri.json", &xor_system(1).to_json_string());
    let o = run(&["solve", arg(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("UNSAT"));
}

#[test]
fn witness_is_verified_and_sorted_by_variable() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "xor.json", &xor_system(0).to_json_string());
    let o = run(&["solve", arg(&p), "--extract"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().skip(2).take(3).map(str::trim).collect();
    assert_eq!(lines, ["x = 0", "y = 1", "z = 0"]);

    let o = run(&["solve", arg(&p), "--extract", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["witness"], serde_json::json!({ "x": 0, "y": 1, "z": 0 }));
    assert_eq!(v["satisfiable"], true);
}

#[test]
fn methods_agree_on_files() {
    let dir = TempDir::new().unwrap();
    for seed in 0..12 {
        let p = dir.path().join(format!("i{seed}.json"));
        let shape = ["malcev", "linear", "flat", "tree", "general"][seed % 5];
        let s = seed.to_string();
        let o = run(&["gen", "instance", "--shape", shape, "--seed", &s, "--variables", "4", "-o", arg(&p)]);
        assert!(o.status.success());
        let brute = run(&["solve", arg(&p), "--method", "bruteforce"]).status.code();
        let general = run(&["solve", arg(&p), "--method", "general"]).status.code();
        assert_eq!(brute, general, "seed {seed}");
        assert!(matches!(brute, Some(0 | 1)));
    }
}

#[test]
fn check_algebra_reports_l4_structure() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "l4.json", &serde_json::to_string(&named::l4().to_json(None)).unwrap());
    let o = run(&["check-algebra", arg(&p)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("blocks: {0,1} {2}"), "{text}");
    assert!(text.contains("shape: linear"));
    assert!(text.contains("unit: none"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn check_algebra_rejects_broken_table() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "broken.json", &serde_json::to_string(&named::broken3().to_json(None)).unwrap());
    let o = run(&["check-algebra", arg(&p)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not an SMB algebra"));
}

#[test]
fn generation_is_reproducible_and_checks_clean() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(&["gen", "algebra", "--shape", "linear", "--blocks", "2", "--seed", "1", "-o", arg(p)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = run(&["check-algebra", arg(&a)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("declared blocks match: yes"));
}

#[test]
fn planted_instance_is_sat() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("p.json");
    assert!(run(&["gen", "instance", "--planted", "--seed", "7", "-o", arg(&p)]).status.success());
    assert_eq!(run(&["solve", arg(&p), "--method", "bruteforce"]).status.code(), Some(0));
}

#[test]
fn minimized_instance_round_trips() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "xor.json", &xor_system(0).to_json_string());
    let out = dir.path().join("min.json");
    assert_eq!(run(&["minimize", arg(&p), "--k", "2", "--l", "3", "-o", arg(&out)]).status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let inst = Instance::parse(&text).unwrap();
    assert_eq!(inst.to_json_string() + "\n", text);
    assert_eq!(run(&["minimize", arg(&p), "--k", "3", "--l", "4"]).status.code(), Some(2));
}

#[test]
fn analyze_reports_cycle_consistency_and_graphs() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "xor.json", &xor_system(0).to_json_string());
    let o = run(&["analyze", arg(&p)]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cycle_consistency"]["consistent"], true);
    let edges = v["scope_graph"]["edges"].as_array().unwrap();
    assert_eq!(edges.iter().filter(|e| e["scope"].as_array().unwrap().len() == 2).count(), 3);
    let dot = stdout(&run(&["analyze", arg(&p), "--format", "dot"]));
    assert!(dot.starts_with("graph \"scope\""));
    assert!(dot.contains("graph \"microstructure\""));
}

#[test]
fn analyze_lists_strands_of_flat_instance() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("f.json");
    assert!(run(&["gen", "instance", "--shape", "flat", "--seed", "2", "--planted", "-o", arg(&p)]).status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["analyze", arg(&p), "--strands"]))).unwrap();
    assert!(v["strands"]["strands"].is_array(), "{v}");
    assert!(v["strands"]["hasse"].is_array());
}

#[test]
fn compare_finds_no_disagreement() {
    let o = run(&["compare", "--generate", "40", "--threads", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["problems"].as_array().unwrap().len(), 0);
    assert_eq!(v["methods"]["general"]["agree"], 40);
}

#[test]
fn caps_come_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "xor.json", &xor_system(0).to_json_string());
    let bin = env!("CARGO_BIN_EXE_smb-csp");
    let with = |caps: &str| {
        Command::new(bin).args(["solve", arg(&p), "--method", "bruteforce"]).env("SMB_CSP_CAPS", caps).output().unwrap()
    };
    assert_eq!(with("oracle=4").status.code(), Some(2));
    assert_eq!(with("oracle=8").status.code(), Some(0));
    assert_eq!(with("bogus=1").status.code(), Some(2));
}

#[test]
fn parse_errors_carry_a_position() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.json", "{\n  \"variables\": [1]\n}");
    let o = run(&["solve", arg(&p)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
