use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supercocycle")).args(args).current_dir(env!("CARGO_MANIFEST_DIR")).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&bin(&["verify", "group-laws"])), 0);
    assert_eq!(code(&bin(&["verify", "no-such-suite"])), 2);
    assert_eq!(code(&bin(&["euler", "tests/data/euler_torus.json"])), 1);
    assert_eq!(code(&bin(&["reduce", "tests/data/cocycle_broken.json"])), 1);
    assert_eq!(code(&bin(&["reduce", "tests/data/bad_expr.json"])), 2);
    assert_eq!(code(&bin(&["chern", "tests/data/missing.json"])), 2);
    assert_eq!(code(&bin(&["modular", "--tau", "0.3+1.1i", "--weight", "2hol"])), 1);
    assert_eq!(code(&bin(&["modular", "--tau", "0.3+1.1i", "--weight", "6", "--q-terms", "60"])), 0);
    assert_eq!(code(&bin(&["modular", "--tau", "nonsense", "--weight", "4"])), 2);
}

#[test]
fn json_values_for_each_verb() {
    let o = bin(&["--format", "json", "reduce", "tests/data/cocycle_exact.json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["values"]["class"], "3");
    let o = bin(&["chern", "tests/data/chern_rank11.json", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["values"]["Z"].is_string() && v["values"]["L"].is_string());
    let o = bin(&["euler", "tests/data/euler_chart6.json", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["values"]["Eu"].as_str().unwrap().contains("E2hol"));
}

#[test]
fn timings_only_on_request() {
    let plain = String::from_utf8(bin(&["verify", "modular", "--format", "json"]).stdout).unwrap();
    assert!(!plain.contains("elapsed_ms"));
    let timed = String::from_utf8(bin(&["verify", "modular", "--format", "json", "--timings"]).stdout).unwrap();
    assert!(timed.contains("elapsed_ms"));
}

#[test]
fn thread_cap_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_supercocycle"))
            .args(["verify", "invariance-21", "--count", "10", "--format", "json"])
            .env("SUPERCOCYCLE_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn output_file() {
    let dir = std::env::temp_dir().join(format!("supercocycle-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("r.json");
    let o = bin(&["verify", "modular", "--format", "json", "--output", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(supercocycle_cli::report::Report::from_json(&text).unwrap().passed());
    std::fs::remove_dir_all(&dir).unwrap();
}
