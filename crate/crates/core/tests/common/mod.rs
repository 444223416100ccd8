use std::io::Write;

/// Print one report line and fail the test when the criterion is not met.
/// The line goes straight to stderr so it shows up without `--nocapture`.
pub fn report(name: &str, pass: bool, detail: &str) {
    let line = format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    let _ = writeln!(std::io::stderr(), "\n{line}");
    assert!(pass, "{line}");
}
