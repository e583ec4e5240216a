use serde::{Deserialize, Serialize};

use super::Assignment;

/// Matched (α), missing (β) and spurious (γ) minutiae for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConsistencyCounts {
    pub alpha: u64,
    pub beta: u64,
    pub gamma: u64,
}

impl ConsistencyCounts {
    pub fn new(alpha: u64, beta: u64, gamma: u64) -> Self {
        ConsistencyCounts { alpha, beta, gamma }
    }
}

/// Removal and addition error for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorRates {
    /// β / (α + β)
    pub removal: f64,
    /// γ / (α + γ)
    pub addition: f64,
    /// Set when either denominator was zero and the rate was defined as 0.
    #[serde(default)]
    pub degenerate: bool,
}

pub fn classify(assignment: &Assignment) -> ConsistencyCounts {
    ConsistencyCounts {
        alpha: assignment.pairs.len() as u64,
        beta: assignment.unmatched_expected.len() as u64,
        gamma: assignment.unmatched_generated.len() as u64,
    }
}

pub fn error_rates(counts: ConsistencyCounts) -> ErrorRates {
    let ConsistencyCounts { alpha, beta, gamma } = counts;
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let removal = ratio(beta, alpha + beta);
    let addition = ratio(gamma, alpha + gamma);
    ErrorRates {
        removal: removal.unwrap_or(0.0),
        addition: addition.unwrap_or(0.0),
        degenerate: removal.is_none() || addition.is_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::MatchedPair;

    #[test]
    fn formula_arithmetic() {
        let r = error_rates(ConsistencyCounts::new(7, 3, 1));
        assert_eq!(r.removal, 0.3);
        assert_eq!(r.addition, 0.125);
        assert!(!r.degenerate);
    }

    #[test]
    fn empty_is_degenerate_zero() {
        let r = error_rates(ConsistencyCounts::default());
        assert_eq!((r.removal, r.addition, r.degenerate), (0.0, 0.0, true));
    }

    #[test]
    fn classify_counts_lists() {
        let pair = |e: &str, g: &str| MatchedPair {
            expected_id: e.into(),
            generated_id: g.into(),
            dx: 0.0,
            dy: 0.0,
        };
        let a = Assignment {
            pairs: (0..9).map(|i| pair(&format!("e{i}"), &format!("g{i}"))).collect(),
            unmatched_expected: vec!["e9".into(), "e10".into()],
            unmatched_generated: vec!["g9".into(), "g10".into(), "g11".into()],
        };
        assert_eq!(classify(&a), ConsistencyCounts::new(9, 2, 3));
        let empty = Assignment {
            unmatched_expected: vec!["a".into(), "b".into()],
            ..Default::default()
        };
        assert_eq!(classify(&empty), ConsistencyCounts::new(0, 2, 0));
    }
}
