//! Structured check records shared by the verification suites and the
//! command-line front end. Records never carry wall-clock data, so a seeded
//! run serializes to identical bytes every time.

use serde::Serialize;

/// Direction of the pass comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cmp {
    /// Pass when `value <= tolerance` (residuals, z-scores).
    #[serde(rename = "le")]
    Le,
    /// Pass when `value >= tolerance` (negative controls, p-values).
    #[serde(rename = "ge")]
    Ge,
}

/// One named check with its measured value and threshold.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub suite: String,
    pub check: String,
    pub params: String,
    pub value: f64,
    pub tolerance: f64,
    pub op: Cmp,
    pub pass: bool,
}

impl CheckRecord {
    pub fn le(suite: &str, check: &str, params: &str, value: f64, tolerance: f64) -> Self {
        CheckRecord {
            suite: suite.into(),
            check: check.into(),
            params: params.into(),
            value,
            tolerance,
            op: Cmp::Le,
            pass: value <= tolerance,
        }
    }

    pub fn ge(suite: &str, check: &str, params: &str, value: f64, tolerance: f64) -> Self {
        CheckRecord {
            suite: suite.into(),
            check: check.into(),
            params: params.into(),
            value,
            tolerance,
            op: Cmp::Ge,
            pass: value >= tolerance,
        }
    }
}

pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_directions() {
        assert!(CheckRecord::le("s", "c", "", 1e-12, 1e-10).pass);
        assert!(!CheckRecord::le("s", "c", "", 1e-8, 1e-10).pass);
        assert!(CheckRecord::ge("s", "c", "", 1e-3, 1e-6).pass);
        assert!(!CheckRecord::ge("s", "c", "", 1e-9, 1e-6).pass);
    }
}
