use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gadgetsmith"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(' '))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn enumerates_settings() {
    let o = run(&["--machine", "settings", "enumerate", "--count"]);
    assert_eq!(code(&o), 0);
    assert_eq!(value(&stdout(&o), "count"), Some("144"));
    let o = run(&["--machine", "settings", "enumerate", "--rank", "4", "--count"]);
    assert_eq!(value(&stdout(&o), "count"), Some("4352"));
    let o = run(&["settings", "enumerate", "--rank", "9"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn searches_verifies_and_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("prop.gadget");
    let o = run(&[
        "--machine",
        "gadget",
        "search",
        "--family",
        "+-+-,-+-+",
        "--spec",
        "prop:++",
        "--n-max",
        "5",
        "--out",
        path(&file),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(value(&stdout(&o), "result"), Some("found"));

    let o = run(&["--machine", "gadget", "verify", path(&file)]);
    assert_eq!(code(&o), 0);
    assert_eq!(value(&stdout(&o), "result"), Some("verified"));

    // Flip every preset sign.
    let text = std::fs::read_to_string(&file).unwrap();
    let flipped: Vec<String> = text
        .lines()
        .map(|l| match l.strip_prefix("entry ") {
            Some(rest) if rest.ends_with('+') => format!("entry {}-", &rest[..rest.len() - 1]),
            Some(rest) => format!("entry {}+", &rest[..rest.len() - 1]),
            None => l.to_string(),
        })
        .collect();
    std::fs::write(&file, flipped.join("\n")).unwrap();
    let o = run(&["--machine", "gadget", "verify", path(&file)]);
    assert_ne!(code(&o), 0);

    // Nothing is avoidable without constraints to avoid.
    let o = run(&[
        "gadget", "search", "--family", "empty", "--rank", "3", "--spec", "prop:++", "--n-max", "5",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn compiles_and_decides() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    let inst = dir.path().join("f.inst");
    let witness = dir.path().join("w.inst");
    std::fs::write(&cnf, "p cnf 3 1\n1 -2 3 0\n").unwrap();
    let o = run(&[
        "--machine",
        "compile",
        "--cnf",
        path(&cnf),
        "--family",
        "+-+-,-+-+",
        "--out",
        path(&inst),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&stdout(&o), "elements"), Some("14"));

    let o = run(&["--machine", "decide", path(&inst), "--witness", path(&witness)]);
    assert_eq!(code(&o), 0);
    assert_eq!(value(&stdout(&o), "result"), Some("completable"));
    let o = run(&["--machine", "render", path(&witness)]);
    assert!(!value(&stdout(&o), "word").unwrap().contains('?'));

    // x and not x.
    std::fs::write(&cnf, "p cnf 1 2\n1 0\n-1 0\n").unwrap();
    run(&[
        "compile",
        "--cnf",
        path(&cnf),
        "--family",
        "+-+-,-+-+",
        "--out",
        path(&inst),
    ]);
    let o = run(&["--machine", "decide", path(&inst), "--mode", "full"]);
    assert_eq!(code(&o), 1);
    assert_eq!(value(&stdout(&o), "result"), Some("not completable"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    std::fs::write(&cnf, "p cnf 1 1\n1 0\n").unwrap();
    // No library for this family.
    assert_eq!(code(&run(&["compile", "--cnf", path(&cnf), "--family", "+-+-"])), 4);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["render", path(&dir.path().join("missing.inst"))])), 5);
    std::fs::write(&cnf, "p cnf 1 1\n1 2 3 -1 0\n").unwrap();
    assert_eq!(
        code(&run(&["compile", "--cnf", path(&cnf), "--family", "+-+-,-+-+"])),
        2
    );
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# counts only\nrank 4\ncount\nmachine\n").unwrap();
    let o = run(&["--config", path(&conf), "settings", "enumerate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "count 4352");
    // The command line wins.
    let o = run(&["--config", path(&conf), "settings", "enumerate", "--rank", "3"]);
    assert_eq!(stdout(&o).trim(), "count 144");
}
