//! Small statistical helpers: log-log fits and Monte Carlo error bars.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of `log y` from the fitted line.
    pub residual: f64,
}

impl PowerFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_powerlaw(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 3 {
        return Err(Error::param(format!(
            "a power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points
        .iter()
        .find(|(x, y)| !(x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0))
    {
        return Err(Error::param(format!(
            "power-law data must be positive, got ({x}, {y})"
        )));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("power-law fit needs distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(PowerFit {
        slope,
        intercept,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Sample mean and its standard error, summed in input order.
pub fn mean_stderr(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate {
            mean: f64::NAN,
            stderr: f64::NAN,
            samples: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Estimate {
        mean,
        stderr,
        samples: n,
    }
}

/// Mean of `ys` corrected by the control variate `cs`, whose expectation
/// `c_mean` is known: `mean(y) - beta (mean(c) - c_mean)` with the
/// regression coefficient `beta` fitted from the same samples.
pub fn control_variate(ys: &[f64], cs: &[f64], c_mean: f64) -> Estimate {
    let n = ys.len();
    if n < 3 || cs.len() != n {
        return mean_stderr(ys);
    }
    let nf = n as f64;
    let my = ys.iter().sum::<f64>() / nf;
    let mc = cs.iter().sum::<f64>() / nf;
    let scc: f64 = cs.iter().map(|c| (c - mc) * (c - mc)).sum();
    if scc == 0.0 {
        return mean_stderr(ys);
    }
    let scy: f64 = cs.iter().zip(ys).map(|(c, y)| (c - mc) * (y - my)).sum();
    let beta = scy / scc;
    let rss: f64 = cs
        .iter()
        .zip(ys)
        .map(|(c, y)| {
            let r = y - my - beta * (c - mc);
            r * r
        })
        .sum();
    Estimate {
        mean: my - beta * (mc - c_mean),
        stderr: (rss / (nf - 2.0) / nf).sqrt(),
        samples: n,
    }
}
