use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::mc::McEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Limit not certifiable numerically; only the trend is reported.
    TrendOnly,
    NoTarget,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::TrendOnly => "trend-only",
            Verdict::NoTarget => "no-target",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticEntry {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub replicates: usize,
    pub target: Option<f64>,
    pub target_provenance: Option<String>,
    /// Allowance added to `3·se` when judging the target.
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DiagnosticEntry {
    pub fn new(name: impl Into<String>, estimate: f64, se: f64, replicates: usize) -> Self {
        DiagnosticEntry {
            name: name.into(),
            estimate,
            se: se.max(0.0),
            replicates,
            target: None,
            target_provenance: None,
            tolerance: 0.0,
            verdict: Verdict::NoTarget,
            warnings: Vec::new(),
        }
    }

    pub fn from_estimate(name: impl Into<String>, e: McEstimate) -> Self {
        Self::new(name, e.mean, e.se, e.replicates)
    }

    /// Sets the target; the verdict is `|estimate - target| ≤ 3·se + tolerance`.
    pub fn with_target(mut self, target: f64, provenance: impl Into<String>, tolerance: f64) -> Self {
        self.target = Some(target);
        self.target_provenance = Some(provenance.into());
        self.tolerance = tolerance;
        self.verdict = if (self.estimate - target).abs() <= 3.0 * self.se + tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn trend_only(mut self) -> Self {
        self.verdict = Verdict::TrendOnly;
        self
    }

    pub fn with_warning(mut self, w: impl Into<String>) -> Self {
        self.warnings.push(w.into());
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Entries keyed and serialized in name order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub entries: BTreeMap<String, DiagnosticEntry>,
}

impl DiagnosticReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: DiagnosticEntry) {
        self.entries.insert(entry.name.clone(), entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = DiagnosticEntry>) {
        for e in entries {
            self.push(e);
        }
    }

    pub fn get(&self, name: &str) -> Option<&DiagnosticEntry> {
        self.entries.get(name)
    }

    pub fn all_passed(&self) -> bool {
        self.entries
            .values()
            .all(|e| matches!(e.verdict, Verdict::Pass | Verdict::NoTarget | Verdict::TrendOnly))
    }

    pub fn to_json(&self) -> String {
        let list: Vec<&DiagnosticEntry> = self.entries.values().collect();
        serde_json::to_string_pretty(&list).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,estimate,se,replicates,target,target_provenance,verdict\n");
        for e in self.entries.values() {
            let target = e.target.map(|t| format!("{t:e}")).unwrap_or_default();
            let prov = e.target_provenance.as_deref().unwrap_or("").replace(',', ";");
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{},{},{}",
                e.name,
                e.estimate,
                e.se,
                e.replicates,
                target,
                prov,
                e.verdict.as_str()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_and_ordering() {
        let mut r = DiagnosticReport::new();
        r.push(DiagnosticEntry::new("b", 1.05, 0.02, 10).with_target(1.0, "closed form", 0.0));
        r.push(DiagnosticEntry::new("a", 1.1, 0.01, 10).with_target(1.0, "closed form", 0.0));
        assert!(r.get("b").unwrap().passed());
        assert!(!r.get("a").unwrap().passed());
        assert!(!r.all_passed());
        let csv = r.to_csv();
        let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(names, vec!["a", "b"]);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json[0]["name"], "a");
        assert_eq!(json[0]["verdict"], "fail");
    }
}
