//! Order estimation on geometric ladders.

use crate::error::{Error, Result};

/// Least-squares line through `(ln x, ln |y|)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub max_residual: f64,
}

impl LogLogFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::param("ladder", "x and y lengths differ"));
    }
    if xs.len() < 2 {
        return Err(Error::param("ladder", "need at least two points"));
    }
    if xs.iter().any(|&x| !(x > 0.0)) || ys.iter().any(|&y| !(y != 0.0) || !y.is_finite()) {
        return Err(Error::Domain("log-log fit needs positive x and nonzero finite y".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("ladder has a single abscissa".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(LogLogFit { slope, intercept, max_residual })
}

/// The ladder `base·2^i`, i = 0..len.
pub fn doubling_ladder(base: f64, len: usize) -> Vec<f64> {
    (0..len).map(|i| base * 2f64.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power() {
        let xs = doubling_ladder(10.0, 4);
        assert_eq!(xs, vec![10.0, 20.0, 40.0, 80.0]);
        let ys: Vec<f64> = xs.iter().map(|x| -3.0 * x.powf(-2.5)).collect();
        let f = loglog_fit(&xs, &ys).unwrap();
        assert!((f.slope + 2.5).abs() < 1e-12);
        assert!(f.max_residual < 1e-12);
        assert!((f.predict(15.0) - 3.0 * 15f64.powf(-2.5)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(loglog_fit(&[1.0], &[1.0]).is_err());
        assert!(loglog_fit(&[1.0, 2.0], &[1.0, 0.0]).is_err());
        assert!(loglog_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_slope(a in 0.1f64..10.0, p in -4.0f64..4.0) {
            let xs = doubling_ladder(3.0, 5);
            let ys: Vec<f64> = xs.iter().map(|x| a * x.powf(p)).collect();
            let f = loglog_fit(&xs, &ys).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-10);
        }
    }
}
