//! One line per acceptance criterion, with the pinned tolerances of
//! `mems_core::verify`. Criterion 12 runs the `mems verify-all` binary.

use std::process::{Command, ExitCode};

use mems_core::verify::{run_criterion, Context, CRITERIA};

fn main() -> ExitCode {
    let mut ctx = Context::new().expect("reference problem builds");
    let mut failed = Vec::new();
    for id in 1..=CRITERIA.len() as u8 {
        let c = run_criterion(id, &mut ctx);
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {:<22} {verdict}  {}",
            c.id, c.name, c.detail
        );
        if !c.passed {
            failed.push(c.id);
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mems"))
        .args(["verify-all", "--seedless", "--out"])
        .arg(dir.path())
        .output()
        .expect("binary runs");
    let table = String::from_utf8_lossy(&out.stdout);
    let rows = table
        .lines()
        .filter(|l| l.contains("PASS") || l.contains("FAIL"))
        .count();
    let ok = out.status.code() == Some(0) && rows == CRITERIA.len() + 1;
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!(
        "criterion 12 {:<22} {verdict}  exit {:?}, {rows} table rows",
        "verify-all",
        out.status.code()
    );
    if !ok {
        failed.push(12);
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len() + 1);
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
