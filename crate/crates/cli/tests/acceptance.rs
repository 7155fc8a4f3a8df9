//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//! Exits nonzero when any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};
use supercocycle_cli::report::{Report, Status};
use supercocycle_cli::verify::{group_of, run_verify, Params};

const SEED: u64 = 42;
const COUNT: u64 = 100;

/// All checks in `groups` passed, and there was at least one.
fn group_ok(r: &Report, groups: &[&str]) -> (bool, String) {
    let sel: Vec<_> = r.checks.iter().filter(|c| groups.contains(&group_of(&c.id))).collect();
    let failed: Vec<_> = sel.iter().filter(|c| c.status == Status::Fail).map(|c| c.id.as_str()).collect();
    let ok = !sel.is_empty() && failed.is_empty();
    let detail = if sel.is_empty() {
        "no checks ran".to_string()
    } else if ok {
        format!("{} checks", sel.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    (ok, detail)
}

fn timed(suite: &str) -> (Report, Duration) {
    let t = Instant::now();
    let r = run_verify(suite, Params { seed: SEED, count: COUNT }).expect("known suite");
    (r, t.elapsed())
}

fn run_binary() -> Option<(Vec<u8>, Duration)> {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_supercocycle"))
        .args(["verify", "all", "--seed", "42", "--format", "json"])
        .output()
        .ok()?;
    out.status.success().then(|| (out.stdout, t.elapsed()))
}

fn main() {
    let mut results: Vec<(u32, bool, String)> = Vec::new();

    let (groups_r, t1) = timed("group-laws");
    let (ok, d) = group_ok(&groups_r, &["group-laws"]);
    results.push((1, ok && t1 < Duration::from_secs(5), format!("group laws, {d}, {:.2} s", t1.as_secs_f64())));

    let (inv11, t11) = timed("invariance-11");
    let (inv21, t21) = timed("invariance-21");
    let mut inv = inv11.clone();
    inv.checks.extend(inv21.checks);
    for (n, g, what) in [(2, "brackets", "brackets"), (3, "descent", "descent on 1000 points"), (4, "generator", "generators")] {
        let (ok, d) = group_ok(&inv, &[g]);
        results.push((n, ok, format!("{what}, {d}")));
    }
    let t5 = t11 + t21;
    let (ok, d) = group_ok(&inv, &["proposition"]);
    results.push((5, ok && t5 < Duration::from_secs(60), format!("proposition, {d}, {:.2} s", t5.as_secs_f64())));

    for (n, suite, g) in [(6, "chern", "chern"), (7, "cocycles", "cohomology"), (8, "euler", "euler"), (9, "modular", "modular")] {
        let (r, _) = timed(suite);
        let (ok, d) = group_ok(&r, &[g]);
        results.push((n, ok, format!("{g}, {d}")));
    }

    let limit = Duration::from_secs(300);
    let (ok, d) = match (run_binary(), run_binary()) {
        (Some((a, ta)), Some((b, tb))) if a == b => {
            let parsed = Report::from_json(&String::from_utf8_lossy(&a)).map(|r| r.passed()).unwrap_or(false);
            let fast = ta < limit && tb < limit;
            (parsed && fast, format!("{} identical bytes, runs {:.2} s and {:.2} s", a.len(), ta.as_secs_f64(), tb.as_secs_f64()))
        }
        (Some(_), Some(_)) => (false, "outputs differ".into()),
        _ => (false, "binary failed".into()),
    };
    results.push((10, ok, format!("determinism, {d}")));

    let mut all = true;
    for (n, ok, d) in &results {
        all &= ok;
        println!("criterion {n:>2}: {}  ({d})", if *ok { "PASS" } else { "FAIL" });
    }
    if !all {
        std::process::exit(1);
    }
}
