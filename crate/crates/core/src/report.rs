use std::fmt;

/// One violated invariant with a witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub witness: String,
}

/// Outcome of a structural check. Empty `violations` means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// True when only a random sample of the objects was checked.
    pub sampled: bool,
    /// Number of objects (t-subsets, labels, active sets) examined.
    pub checked: u64,
}

/// Cap on recorded witnesses per rule.
pub(crate) const MAX_WITNESSES: usize = 16;

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn push(&mut self, rule: &'static str, witness: impl Into<String>) {
        if self.violations.iter().filter(|v| v.rule == rule).count() < MAX_WITNESSES {
            self.violations.push(Violation { rule, witness: witness.into() });
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid ({} checked{})", self.checked, if self.sampled { ", sampled" } else { "" })
        } else {
            let parts: Vec<String> = self.violations.iter().map(|v| format!("{}: {}", v.rule, v.witness)).collect();
            write!(f, "{}", parts.join("; "))
        }
    }
}

pub(crate) fn fmt_set(s: &[usize]) -> String {
    let inner: Vec<String> = s.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", inner.join(","))
}
