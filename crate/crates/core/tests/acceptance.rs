use gptsteer_core::acceptance::{run_all_default_guards, AcceptanceOptions};
use std::io::Write;

#[test]
fn acceptance_criteria() {
    let reports = run_all_default_guards(&AcceptanceOptions::default());
    // Written to the raw handle so the lines show up without --nocapture.
    let mut err = std::io::stderr().lock();
    for r in &reports {
        writeln!(err, "{}", r.line()).unwrap();
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
