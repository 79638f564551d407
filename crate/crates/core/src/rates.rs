//! Least-squares slopes of error sequences in log-log scale.

use crate::error::{Error, Result};

/// Slope of the least-squares line through `(log h_i, log e_i)`.
pub fn loglog_slope(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() {
        return Err(Error::Fit(format!("{} mesh sizes but {} errors", h.len(), e.len())));
    }
    if let Some(v) = h.iter().chain(e).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("log-log fit needs positive finite values, got {v}")));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let mut distinct = x.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if distinct.len() < 2 || sxx <= 0.0 {
        return Err(Error::Fit("need at least two distinct mesh sizes".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Slope over a refinement sequence; the coarsest level is dropped unless
/// `include_coarsest` is set.
pub fn fitted_rate(h: &[f64], e: &[f64], include_coarsest: bool) -> Result<f64> {
    let skip = usize::from(!include_coarsest && h.len() > 2);
    loglog_slope(&h[skip..], &e[skip.min(e.len())..])
}

/// Pass/fail check of a measured slope against an expected value.
#[derive(Clone, Debug, PartialEq)]
pub struct RateCheck {
    pub name: String,
    pub slope: f64,
    pub expected: f64,
    /// `None` asserts only `slope >= expected - tol_lo`.
    pub tol_hi: Option<f64>,
    pub tol_lo: f64,
}

impl RateCheck {
    pub fn within(name: &str, slope: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            slope,
            expected,
            tol_hi: Some(tol),
            tol_lo: tol,
        }
    }

    pub fn at_least(name: &str, slope: f64, min: f64) -> Self {
        Self {
            name: name.to_string(),
            slope,
            expected: min,
            tol_hi: None,
            tol_lo: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        let lo = self.slope >= self.expected - self.tol_lo;
        let hi = self.tol_hi.is_none_or(|t| self.slope <= self.expected + t);
        lo && hi && self.slope.is_finite()
    }

    pub fn describe(&self) -> String {
        let target = match self.tol_hi {
            Some(t) => format!("{:.2} +/- {:.2}", self.expected, t),
            None => format!(">= {:.2}", self.expected),
        };
        format!(
            "{:<28} slope {:>7.4}  expected {}",
            self.name, self.slope, target
        )
    }
}
