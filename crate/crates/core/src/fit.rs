use serde::Serialize;

use crate::error::{Error, Result};

/// Power-law fit `norm ≈ C (1 + t)^slope` over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares slope of `ln(norm)` against `ln(1 + t)` over `window` (inclusive).
pub fn fit_decay(times: &[f64], norms: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != norms.len() {
        return Err(Error::InvalidArgument(format!(
            "{} times vs {} norms",
            times.len(),
            norms.len()
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&t, &v) in times.iter().zip(norms) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveNorm { t, value: v });
        }
        x.push((1.0 + t).ln());
        y.push(v.ln());
    }
    if x.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(DecayFit {
        window,
        slope,
        intercept,
        r2,
        samples: x.len(),
    })
}
