//! One line per criterion. Set `DELTASCAT_ONLY=3,7` to run a subset and
//! `DELTASCAT_STRICT=1` to turn any failed criterion into a nonzero exit.

use std::process::ExitCode;

use deltascat::verify::{determinism, Suite, SuiteConfig};

fn main() -> ExitCode {
    let ids: Vec<u8> = match std::env::var("DELTASCAT_ONLY") {
        Ok(s) => s.split(',').filter_map(|t| t.trim().parse().ok()).collect(),
        Err(_) => (1..=12).collect(),
    };
    let first = tempfile::tempdir().expect("temp dir");
    let second = tempfile::tempdir().expect("temp dir");
    let cfg = SuiteConfig::default();
    let numeric: Vec<u8> = ids.iter().copied().filter(|&i| i <= 11).collect();
    let suite = Suite::new(cfg.clone());
    let mut reports = suite
        .run_all(&numeric, Some(first.path()), |r| println!("{}", r.line()))
        .expect("output directory");
    if ids.contains(&12) {
        let r = determinism(&cfg, &numeric, first.path(), second.path());
        println!("{}", r.line());
        reports.push(r);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", reports.len() - failed);
    let strict = std::env::var("DELTASCAT_STRICT").is_ok_and(|v| v == "1");
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
