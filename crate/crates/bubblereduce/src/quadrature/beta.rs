//! Log-gamma based Beta primitives and the sphere measure.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// ln B(a, b) for a, b > 0.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

/// Measure of the unit sphere S^{d-1} in R^d, 2π^{d/2}/Γ(d/2). ω₁ = 2.
pub fn sphere_measure(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * (h * std::f64::consts::PI.ln() - ln_gamma(h)).exp()
}

/// ∫₀^∞ s^m/(1+s)^n ds = B(m+1, n−m−1).
pub fn beta_integral_s(m: f64, n: f64) -> Result<f64> {
    if !(m + 1.0 > 0.0) {
        return Err(Error::Domain(format!("s-integral diverges at 0: need m + 1 > 0, got m = {m}")));
    }
    if !(n - m - 1.0 > 0.0) {
        return Err(Error::Domain(format!(
            "s-integral diverges at infinity: need n > m + 1, got m = {m}, n = {n}"
        )));
    }
    Ok(beta(m + 1.0, n - m - 1.0))
}

/// ∫₀^∞ t^{a−1}/(1+t²)^n dt = ½B(a/2, n − a/2).
pub fn beta_integral_t(a: f64, n: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("t-integral diverges at 0: need a > 0, got a = {a}")));
    }
    if !(a < 2.0 * n) {
        return Err(Error::Domain(format!(
            "t-integral diverges at infinity: need a < 2n, got a = {a}, n = {n}"
        )));
    }
    Ok(0.5 * beta(a / 2.0, n - a / 2.0))
}

/// Both sides of the three integration-by-parts recurrences; `None` where a side diverges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceReport {
    /// ∫s^m/(1+s)^{n+1} = (n−m−1)/n · ∫s^m/(1+s)^n, for 0 < m < n − 1.
    pub first: Option<(f64, f64)>,
    /// ∫s^{m+1}/(1+s)^{n+1} = (m+1)/(n−m−1) · ∫s^m/(1+s)^{n+1}, for 0 < m < n − 1.
    pub second: Option<(f64, f64)>,
    /// ∫t^{m−2}/(1+t²)^n = (2n−m−1)/(2(n−1)) · ∫t^{m−2}/(1+t²)^{n−1}, for 1 < m < 2n − 1.
    pub third: Option<(f64, f64)>,
    pub max_rel: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Evaluates both sides of each recurrence with the Beta primitives.
pub fn check_recurrences(m: f64, n: f64) -> Result<RecurrenceReport> {
    let s_ok = m > 0.0 && m < n - 1.0;
    let t_ok = m > 1.0 && m < 2.0 * n - 1.0 && n > 1.0;
    if !s_ok && !t_ok {
        return Err(Error::Domain(format!(
            "recurrences need 0 < m < n - 1 or 1 < m < 2n - 1, got m = {m}, n = {n}"
        )));
    }
    let (first, second) = if s_ok {
        let f = (beta_integral_s(m, n + 1.0)?, (n - m - 1.0) / n * beta_integral_s(m, n)?);
        let g = (
            beta_integral_s(m + 1.0, n + 1.0)?,
            (m + 1.0) / (n - m - 1.0) * beta_integral_s(m, n + 1.0)?,
        );
        (Some(f), Some(g))
    } else {
        (None, None)
    };
    let third = if t_ok {
        Some((
            beta_integral_t(m - 1.0, n)?,
            (2.0 * n - m - 1.0) / (2.0 * (n - 1.0)) * beta_integral_t(m - 1.0, n - 1.0)?,
        ))
    } else {
        None
    };
    let max_rel = [first, second, third]
        .iter()
        .flatten()
        .map(|&(a, b)| rel(a, b))
        .fold(0.0, f64::max);
    Ok(RecurrenceReport { first, second, third, max_rel })
}
