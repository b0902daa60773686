//! Moment inequality for sums of independent centred variables:
//! `E|S_M|^p / (M^{p/2} E|X|^p)` stays bounded in `M`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gauss::integrate;
use super::{Builder, CheckKind, CheckResult, Expected, Sweep};
use crate::error::{Error, Result};
use crate::fourier::{cis_turns, lambda0_hat_1d};
use crate::rng::Substream;
use crate::stats::{fit_powerlaw, mean_stderr};

/// Draws per parallel chunk; every chunk owns a substream.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MzDistribution {
    /// `+1` or `-1` with equal probability; moments computed exactly.
    Bernoulli,
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// `e^{-2 pi i beta x} - E e^{-2 pi i beta x}` with `beta` uniform on
    /// `[0, 1 - rho]`, at a fixed frequency `x`.
    Complex { frequency: f64, rho: f64 },
    /// `+-U^{-1/alpha}`; its `p`-th moment is finite only for `alpha > p`.
    SymmetricPareto { alpha: f64 },
}

impl MzDistribution {
    fn label(&self) -> &'static str {
        match self {
            MzDistribution::Bernoulli => "bernoulli",
            MzDistribution::Uniform => "uniform",
            MzDistribution::Complex { .. } => "complex",
            MzDistribution::SymmetricPareto { .. } => "pareto",
        }
    }

    /// `E|X|^p`, or an error when it is infinite.
    fn moment(&self, p: f64) -> Result<f64> {
        match *self {
            MzDistribution::Bernoulli => Ok(1.0),
            MzDistribution::Uniform => Ok(1.0 / (p + 1.0)),
            MzDistribution::Complex { frequency, rho } => {
                crate::fourier::check_rho(rho)?;
                let mean = lambda0_hat_1d((1.0 - rho) * frequency);
                let span = 1.0 - rho;
                let panels = (4.0 * frequency.abs() * span).ceil() as usize + 4;
                Ok(integrate(
                    |b| (cis_turns(b * frequency) - mean).norm().powf(p),
                    0.0,
                    span,
                    panels,
                    16,
                ) / span)
            }
            MzDistribution::SymmetricPareto { alpha } => {
                if alpha > p {
                    Ok(alpha / (alpha - p))
                } else {
                    Err(Error::param(format!(
                        "symmetric Pareto with alpha = {alpha} has no finite moment of order {p}"
                    )))
                }
            }
        }
    }

    fn sample_sum(&self, m: usize, rng: &mut impl Rng) -> Complex64 {
        match *self {
            MzDistribution::Bernoulli => {
                let s: f64 = (0..m)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .sum();
                Complex64::new(s, 0.0)
            }
            MzDistribution::Uniform => {
                Complex64::new((0..m).map(|_| rng.gen_range(-1.0..1.0)).sum(), 0.0)
            }
            MzDistribution::Complex { frequency, rho } => {
                let mean = lambda0_hat_1d((1.0 - rho) * frequency);
                (0..m)
                    .map(|_| cis_turns(rng.gen::<f64>() * (1.0 - rho) * frequency) - mean)
                    .sum()
            }
            MzDistribution::SymmetricPareto { alpha } => {
                let s: f64 = (0..m)
                    .map(|_| {
                        let u = 1.0 - rng.gen::<f64>();
                        let x = u.powf(-1.0 / alpha);
                        if rng.gen::<bool>() {
                            x
                        } else {
                            -x
                        }
                    })
                    .sum();
                Complex64::new(s, 0.0)
            }
        }
    }
}

/// `E|sum of M Rademacher signs|^p`, summed over the binomial law.
pub fn bernoulli_moment(m: usize, p: f64) -> f64 {
    let mf = m as f64;
    let mut log_pmf = -mf * std::f64::consts::LN_2;
    let mut total = 0.0;
    for k in 0..=m {
        total += log_pmf.exp() * (2.0 * k as f64 - mf).abs().powf(p);
        log_pmf += ((m - k) as f64).ln() - ((k + 1) as f64).ln();
    }
    total
}

/// `E|Z|^p` for a standard normal `Z`, the large-`M` limit of the
/// Rademacher ratio.
fn gaussian_moment(p: f64) -> f64 {
    2f64.powf(p / 2.0) * libm::tgamma((p + 1.0) / 2.0) / PI.sqrt()
}

/// Monte Carlo `E|S_M|^p` with its standard error.
fn sampled_moment(
    dist: &MzDistribution,
    m: usize,
    p: f64,
    replicas: usize,
    stream: Substream,
) -> crate::stats::Estimate {
    let chunks = replicas.div_ceil(CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream.child(c as u64).rng();
            let n = CHUNK.min(replicas - c * CHUNK);
            (0..n)
                .map(|_| dist.sample_sum(m, &mut rng).norm().powf(p))
                .collect::<Vec<_>>()
        })
        .collect();
    mean_stderr(&values)
}

/// Ratios `E|S_M|^p / (M^{p/2} E|X|^p)` over `m_grid` for each distribution:
/// bounded, with zero log-slope in `M`; for signs the ratio also tends to the
/// normal moment (3 when `p = 4`).
#[allow(clippy::too_many_arguments)]
pub fn check_mz(
    dists: &[MzDistribution],
    p: f64,
    m_grid: &[usize],
    replicas: usize,
    limit_tol: f64,
    slope_tol: f64,
    max_rel_stderr: f64,
    stream: Substream,
) -> Result<CheckResult> {
    if !(p >= 2.0) {
        return Err(Error::param(format!(
            "the moment check needs p >= 2, got {p}"
        )));
    }
    if m_grid.len() < 3 || m_grid.contains(&0) {
        return Err(Error::param("the M grid needs at least 3 positive sizes"));
    }
    let mut b = Builder::new("check_mz", CheckKind::Statistical);
    for dist in dists {
        let label = dist.label();
        let moment = dist.moment(p)?;
        let mut sweep = Sweep::new(
            format!("mz_{label}"),
            &["M", "moment", "stderr", "ratio", "ratio_stderr"],
        );
        let mut points = Vec::new();
        for &m in m_grid {
            let mf = m as f64;
            let (value, err) = match dist {
                MzDistribution::Bernoulli => (bernoulli_moment(m, p), 0.0),
                _ => {
                    let e =
                        sampled_moment(dist, m, p, replicas, stream.named(label).child(m as u64));
                    (e.mean, e.stderr)
                }
            };
            let scale = mf.powf(p / 2.0) * moment;
            let ratio = value / scale;
            if err / value > max_rel_stderr {
                b.inconclusive(format!(
                    "{label}: relative standard error {:.3} at M = {m}",
                    err / value
                ));
            }
            if m == 1 {
                b.measure(
                    format!("{label}_ratio_at_1"),
                    ratio,
                    Expected::target(1.0, 1e-12_f64.max(3.0 * err / scale)),
                );
            }
            if *dist == MzDistribution::Bernoulli && p == 4.0 {
                let exact = 3.0 * mf * mf - 2.0 * mf;
                b.measure(
                    format!("bernoulli_fourth_moment_error_{m}"),
                    (value - exact).abs() / exact,
                    Expected::AtMost { value: 1e-12 },
                );
            }
            sweep.push(vec![mf, value, err, ratio, err / scale]);
            points.push((mf, ratio));
        }
        let fit = fit_powerlaw(&points)?;
        b.measure(
            format!("{label}_slope"),
            fit.slope,
            Expected::target(0.0, slope_tol),
        );
        b.info(
            format!("{label}_constant"),
            points.iter().map(|x| x.1).fold(0.0, f64::max),
        );
        if *dist == MzDistribution::Bernoulli {
            let last = points.last().map_or(f64::NAN, |x| x.1);
            b.measure(
                "bernoulli_ratio_limit",
                last,
                Expected::target(gaussian_moment(p), limit_tol),
            );
        }
        b.sweep(sweep.with_plot("M", "ratio", Some("ratio_stderr"), Some(fit)));
    }
    Ok(b.finish())
}
