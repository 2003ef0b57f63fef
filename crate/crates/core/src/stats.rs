//! Exact binomial confidence intervals.

use statrs::function::beta::inv_beta_reg;

/// Two-sided Clopper-Pearson interval for `successes` out of `trials` at
/// confidence `confidence`.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(successes <= trials, "more successes than trials");
    assert!(confidence > 0.0 && confidence < 1.0, "confidence outside (0, 1)");
    if trials == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - confidence;
    let (x, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 { 0.0 } else { inv_beta_reg(x, n - x + 1.0, alpha / 2.0) };
    let upper = if successes == trials { 1.0 } else { inv_beta_reg(x + 1.0, n - x, 1.0 - alpha / 2.0) };
    (lower, upper)
}

/// Per-interval confidence that keeps the family-wise level at `confidence`
/// across `family` simultaneous intervals.
pub fn union_bound_confidence(confidence: f64, family: usize) -> f64 {
    1.0 - (1.0 - confidence) / family.max(1) as f64
}

/// Point estimate with its interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub hat: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64, confidence: f64) -> Self {
        let (lower, upper) = clopper_pearson(successes, trials, confidence);
        let hat = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        Self { successes, trials, hat, lower, upper }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // all-success and all-failure endpoints have closed forms
        let (lo, hi) = clopper_pearson(10, 10, 0.95);
        assert!((lo - 0.025f64.powf(0.1)).abs() < 1e-9);
        assert_eq!(hi, 1.0);
        let (lo, hi) = clopper_pearson(0, 20, 0.9);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.05f64.powf(1.0 / 20.0))).abs() < 1e-9);
    }

    #[test]
    fn interval_contains_estimate_and_narrows() {
        let (a, b) = clopper_pearson(30, 100, 0.95);
        assert!(a < 0.3 && 0.3 < b);
        let (c, d) = clopper_pearson(300, 1000, 0.95);
        assert!(c > a && d < b);
        assert!((union_bound_confidence(0.95, 10) - 0.995).abs() < 1e-12);
    }
}
