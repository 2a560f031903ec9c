//! End-to-end tests of the binary: exit codes, output determinism, and
//! data-file ingestion.

use std::process::{Command, Output};

fn coclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coclass"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn skeleton_table_is_deterministic() {
    let a = coclass(&["skeleton", "--family", "dihedral2", "--x", "1"]);
    let b = coclass(&["skeleton", "--family", "dihedral2", "--x", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "table output must be byte identical");
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("objects: 10"));
    assert!(text.contains("<a> -> <at>xO | b, bt^2"));
}

#[test]
fn skeleton_json_and_dot_are_deterministic() {
    for format in ["json", "dot"] {
        let a = coclass(&["skeleton", "--family", "semidihedral2", "--x", "0", "--format", format]);
        let b = coclass(&["skeleton", "--family", "semidihedral2", "--x", "0", "--format", format]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{format} output must be byte identical");
    }
    let dot = coclass(&["skeleton", "--family", "dihedral2", "--x", "0", "--format", "dot"]);
    let text = String::from_utf8(dot.stdout).unwrap();
    assert_eq!(text.matches("n0").count() >= 1, true);
    assert_eq!(text.lines().filter(|l| l.contains("label=") && !l.contains("->")).count(), 10);
}

#[test]
fn pro_p_skeleton_without_x() {
    let out = coclass(&["skeleton", "--family", "quaternion2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("objects: 5"));
}

#[test]
fn oracle_exit_codes() {
    let ok = coclass(&["oracle", "--family", "dihedral2", "--x", "0"]);
    assert!(ok.status.success());
    // cap too small for the realization is a data/usage error
    let err = coclass(&["oracle", "--family", "dihedral2", "--x", "0", "--cap", "4"]);
    assert_eq!(err.status.code(), Some(2));
}

#[test]
fn equivalence_below_x0_is_refused() {
    let out = coclass(&["equivalence", "--family", "dihedral2", "--x", "0", "--y", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("x0 = 2"), "refusal must report the bound, got: {msg}");
}

#[test]
fn equivalence_runs_above_x0() {
    let out = coclass(&["equivalence", "--family", "quaternion2", "--x", "2", "--y", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("x0 = 2"));
    assert!(text.contains("dense = true, full = true, faithful = true"));
}

#[test]
fn data_file_roundtrip_matches_builtin() {
    let data = coclass::family::fixtures::semidihedral2();
    let text = coclass::io::write_propdata(&data);
    let path = std::env::temp_dir().join("coclass-cli-test-semidihedral2.family");
    std::fs::write(&path, text).unwrap();
    let from_file = coclass(&["skeleton", "--data", path.to_str().unwrap(), "--x", "1"]);
    let builtin = coclass(&["skeleton", "--family", "semidihedral2", "--x", "1"]);
    assert!(from_file.status.success());
    let a = String::from_utf8(from_file.stdout).unwrap();
    let b = String::from_utf8(builtin.stdout).unwrap();
    // identical apart from the header naming the source
    let tail = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(tail(&a), tail(&b));
    std::fs::remove_file(&path).ok();
}

#[test]
fn x0_command_reports_bound() {
    let out = coclass(&["x0", "--family", "semidihedral2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("x0 = 2"));
}

#[test]
fn cohomology_command_verifies_splitting() {
    let out = coclass(&["cohomology", "--family", "dihedral2", "--n", "1", "--r", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("split ok: true"));
    assert!(!text.contains("split ok: false"));
}
