use statrs::distribution::{Binomial, ContinuousCDF, Discrete, Normal};

use crate::adversary::AttackReport;
use crate::error::{arg, Result};

fn z95() -> f64 {
    Normal::standard().inverse_cdf(0.975)
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> Result<(f64, f64)> {
    if n == 0 || successes > n {
        return arg(format!(
            "Wilson interval needs 0 ≤ k ≤ n and n > 0, got k = {successes}, n = {n}"
        ));
    }
    let z = z95();
    let (k, n) = (successes as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}

/// Half-width of the 95% normal confidence interval of the sample mean.
pub fn normal_half_width(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return arg("confidence interval needs at least one value");
    }
    let n = values.len() as f64;
    if values.len() == 1 {
        return Ok(0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(z95() * (var / n).sqrt())
}

/// Two-sided exact binomial test: the probability, under Binomial(n, p), of
/// an outcome no more likely than `k`.
pub fn binomial_two_sided_p(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return arg(format!("binomial test needs k ≤ n, got k = {k}, n = {n}"));
    }
    let dist = Binomial::new(p, n).map_err(|e| crate::error::Error::Argument(e.to_string()))?;
    let observed = dist.pmf(k);
    let total: f64 = (0..=n)
        .map(|i| dist.pmf(i))
        .filter(|&q| q <= observed * (1.0 + 1e-7))
        .sum();
    Ok(total.min(1.0))
}

/// Aggregate of a batch of attack trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSummary {
    pub trials: usize,
    pub mean_error_rate: f64,
    /// 95% normal half-width of `mean_error_rate`.
    pub error_rate_half_width: f64,
    pub detection_frequency: f64,
    /// 95% Wilson interval of `detection_frequency`.
    pub detection_ci: (f64, f64),
}

pub fn aggregate_detection(trials: &[AttackReport]) -> Result<DetectionSummary> {
    if trials.is_empty() {
        return arg("aggregate_detection needs at least one trial");
    }
    let rates: Vec<f64> = trials.iter().map(|t| t.leg_error_rate).collect();
    let detected = trials.iter().filter(|t| t.detected).count();
    Ok(DetectionSummary {
        trials: trials.len(),
        mean_error_rate: rates.iter().sum::<f64>() / rates.len() as f64,
        error_rate_half_width: normal_half_width(&rates)?,
        detection_frequency: detected as f64 / trials.len() as f64,
        detection_ci: wilson_interval(detected, trials.len())?,
    })
}
