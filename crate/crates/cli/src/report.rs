//! Report assembly: a command-specific CSV table, scalar facts, verdicts.

use std::fmt::Write as _;
use std::path::Path;

/// Shortest round-trip rendering, shared by both output files.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

impl Bound {
    fn symbol(&self) -> &'static str {
        match self {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub measured: f64,
    pub bound: Bound,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn at_most(check: &str, measured: f64, tolerance: f64) -> Self {
        Self { check: check.into(), measured, bound: Bound::AtMost, tolerance, pass: measured <= tolerance }
    }

    pub fn at_least(check: &str, measured: f64, tolerance: f64) -> Self {
        Self { check: check.into(), measured, bound: Bound::AtLeast, tolerance, pass: measured >= tolerance }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub header: String,
    pub rows: Vec<String>,
    facts: Vec<(String, String)>,
    verdicts: Vec<Verdict>,
    suppressed: Vec<(String, String)>,
}

impl Report {
    pub fn new(header: impl Into<String>) -> Self {
        Self { header: header.into(), ..Default::default() }
    }

    pub fn row(&mut self, row: impl Into<String>) {
        self.rows.push(row.into());
    }

    pub fn fact(&mut self, key: &str, value: impl ToString) {
        self.facts.push((key.into(), value.to_string()));
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.fact(key, num(v));
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    /// A check that does not apply; kept in the summary with its reason.
    pub fn suppress(&mut self, check: &str, reason: &str) {
        self.suppressed.push((check.into(), reason.into()));
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Sections separated by blank lines: the command table, `key,value`
    /// facts, then `check,measured,relation,tolerance,pass`.
    pub fn csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out.push_str("\nkey,value\n");
        for (k, v) in &self.facts {
            let _ = writeln!(out, "{k},{v}");
        }
        out.push_str("\ncheck,measured,relation,tolerance,pass\n");
        for v in &self.verdicts {
            let _ = writeln!(out, "{},{},{},{},{}", v.check, num(v.measured), v.bound.symbol(), num(v.tolerance), v.pass);
        }
        out
    }

    pub fn summary(&self, command: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {command}");
        for (k, v) in &self.facts {
            let _ = writeln!(out, "{k}: {v}");
        }
        out.push('\n');
        for v in &self.verdicts {
            let _ = writeln!(
                out,
                "[{}] {}: {} {} {}",
                if v.pass { "PASS" } else { "FAIL" },
                v.check,
                num(v.measured),
                v.bound.symbol(),
                num(v.tolerance)
            );
        }
        for (c, why) in &self.suppressed {
            let _ = writeln!(out, "[SKIP] {c}: {why}");
        }
        let _ = writeln!(out, "\nverdict: {}", if self.passed() { "pass" } else { "fail" });
        out
    }

    pub fn write(&self, dir: &Path, command: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.csv())?;
        std::fs::write(dir.join("summary.txt"), self.summary(command))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_bounds() {
        assert!(Verdict::at_most("a", 1.0, 1.0).pass);
        assert!(!Verdict::at_most("a", 1.0 + 1e-15, 1.0).pass);
        assert!(Verdict::at_least("b", -1.0, -2.0).pass);
        assert!(!Verdict::at_least("b", f64::NAN, 0.0).pass);
    }

    #[test]
    fn summary_numbers_are_in_csv() {
        let mut r = Report::new("value");
        r.row("2.5");
        r.value("ratio", 1.0 / 3.0);
        r.fact("valid", false);
        r.verdict(Verdict::at_most("gap", 1e-7, 2e-7));
        r.suppress("sign", "not applicable");
        let csv = r.csv();
        let summary = r.summary("energy");
        for token in summary.split_whitespace() {
            let token = token.trim_end_matches(':');
            if token.parse::<f64>().is_ok() {
                assert!(csv.contains(token), "{token} missing");
            }
        }
        assert!(summary.contains("[SKIP] sign"));
        assert!(summary.ends_with("verdict: pass\n"));
    }
}
