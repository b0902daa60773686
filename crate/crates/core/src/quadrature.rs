//! `L_p` power integrals over `R^d` with certified truncation.
//!
//! The box `[-X, X]^d` is integrated with the tensor midpoint rule and the
//! complement is bounded by the closed-form integral of an envelope. For a
//! transform of a measure supported in `[0,1]^d` and an even integer `p`,
//! `|f|^p` is band-limited to `[-p/2, p/2]^d`, so the midpoint rule with
//! spacing below `2/p` has no discretization error at all on `R^d`; the
//! refinement comparison then only measures rounding. For other exponents it
//! measures the discretization error proper.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{AtomSpectrum, ExpectedSpectrum, Spectrum, SpectrumSum};
use crate::measure::sample_shifts;
use crate::rng::Substream;
use crate::stats::{control_variate, mean_stderr, Estimate};

/// Points per row segment; recurrences inside a spectrum restart at every
/// segment.
const SEGMENT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    EnvelopeAnalytic,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Fixed box half-width; `None` picks it adaptively from the envelope.
    pub half_width: Option<f64>,
    /// Minimum number of base-level cells per axis.
    pub points_per_axis: usize,
    /// Base-level cells per unit frequency.
    pub cells_per_unit: f64,
    /// Number of resolution doublings after the base level.
    pub refinement_levels: usize,
    pub tail_mode: TailMode,
    /// Adaptive boxes grow until `tail <= tail_rel_tol * box`.
    pub tail_rel_tol: f64,
    /// Largest tolerated relative change across the last refinement.
    pub convergence_rel_tol: f64,
    pub max_doublings: usize,
    /// Largest grid (points over all axes) evaluated at one level.
    pub max_points: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            half_width: None,
            points_per_axis: 64,
            cells_per_unit: 4.0,
            refinement_levels: 1,
            tail_mode: TailMode::EnvelopeAnalytic,
            tail_rel_tol: 1e-3,
            convergence_rel_tol: 1e-3,
            max_doublings: 40,
            max_points: 1 << 27,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 8 {
            return Err(Error::param("points_per_axis must be at least 8"));
        }
        if !(self.cells_per_unit > 0.0) {
            return Err(Error::param("cells_per_unit must be positive"));
        }
        if let Some(x) = self.half_width {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::param("half_width must be positive"));
            }
        }
        if !(self.tail_rel_tol > 0.0 && self.convergence_rel_tol > 0.0) {
            return Err(Error::param("tolerances must be positive"));
        }
        Ok(())
    }

    pub fn with_half_width(mut self, x: f64) -> Self {
        self.half_width = Some(x);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub p: f64,
    /// The `L_p^p` integral over the box at the finest level.
    pub value: f64,
    pub box_part: f64,
    /// Certified upper bound for the integral outside the box (0 when no
    /// tail bound was requested).
    pub tail_bound: f64,
    /// `|finest - previous level|`.
    pub convergence_estimate: f64,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl NormReport {
    /// `(value)^{1/p}`, the norm itself.
    pub fn norm(&self) -> f64 {
        self.value.powf(1.0 / self.p)
    }
}

fn abs_pow(z: Complex64, p: f64) -> f64 {
    let n2 = z.norm_sqr();
    let half = 0.5 * p;
    if half == half.trunc() && half <= 16.0 {
        n2.powi(half as i32)
    } else {
        n2.powf(half)
    }
}

/// `h^d sum |f(node)|^p` over the midpoint grid with `n` cells per axis on
/// `[-x, x]^d`, one sum per exponent. Work is split into fixed segments and
/// combined in order, so the result does not depend on the thread count.
fn grid_power_sums(f: &dyn Spectrum, x: f64, n: usize, exponents: &[f64]) -> Vec<f64> {
    let d = f.dim();
    let h = 2.0 * x / n as f64;
    let node = |i: usize| -x + (i as f64 + 0.5) * h;
    let rows = n.pow(d as u32 - 1);
    let segments = n.div_ceil(SEGMENT);

    let partial: Vec<Vec<f64>> = (0..rows * segments)
        .into_par_iter()
        .map(|item| {
            let (row, seg) = (item / segments, item % segments);
            let mut prefix = Vec::with_capacity(d - 1);
            let mut r = row;
            for _ in 0..d - 1 {
                prefix.push(node(r % n));
                r /= n;
            }
            prefix.reverse();
            let start = seg * SEGMENT;
            let len = SEGMENT.min(n - start);
            let mut buf = vec![Complex64::new(0.0, 0.0); len];
            f.eval_row(&prefix, node(start), h, &mut buf);
            exponents
                .iter()
                .map(|&p| buf.iter().map(|&z| abs_pow(z, p)).sum::<f64>())
                .collect()
        })
        .collect();

    let cell = h.powi(d as i32);
    (0..exponents.len())
        .map(|e| partial.iter().map(|v| v[e]).sum::<f64>() * cell)
        .collect()
}

fn cells_for(spec: &QuadratureSpec, x: f64) -> usize {
    let n = (2.0 * x * spec.cells_per_unit).ceil() as usize;
    n.max(spec.points_per_axis)
}

fn check_budget(spec: &QuadratureSpec, n: usize, d: usize) -> Result<()> {
    let total = (n as f64).powi(d as i32);
    if total > spec.max_points as f64 {
        return Err(Error::NonConvergence(format!(
            "grid of {n}^{d} points exceeds the budget of {} points",
            spec.max_points
        )));
    }
    Ok(())
}

/// `int_{R^d} |f|^p` for every exponent in `exponents`, sharing one set of
/// function evaluations.
pub fn lp_power_integrals(
    f: &dyn Spectrum,
    exponents: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<NormReport>> {
    spec.validate()?;
    if let Some(p) = exponents.iter().find(|&&p| !(p > 1.0)) {
        return Err(Error::param(format!("exponent must exceed 1, got {p}")));
    }
    let d = f.dim();
    let envelope = match spec.tail_mode {
        TailMode::EnvelopeAnalytic => f.envelope(),
        TailMode::None => None,
    };
    if spec.tail_mode == TailMode::EnvelopeAnalytic && envelope.is_none() {
        return Err(Error::param(
            "envelope-analytic tails need a known envelope",
        ));
    }
    let tails = |x: f64| -> Vec<f64> {
        match &envelope {
            Some(env) => exponents.iter().map(|&p| env.tail_bound(p, x)).collect(),
            None => vec![0.0; exponents.len()],
        }
    };

    let (mut x, adaptive) = match spec.half_width {
        Some(x) => (x, false),
        None => {
            let rate = envelope
                .as_ref()
                .or(f.envelope().as_ref())
                .and_then(|e| e.slowest_rate())
                .ok_or_else(|| Error::param("adaptive box needs an envelope or a half_width"))?;
            // 2 / (largest cube side).
            (2.0 * std::f64::consts::PI / rate, envelope.is_some())
        }
    };

    let mut n = cells_for(spec, x);
    check_budget(spec, n, d)?;
    let mut coarse = grid_power_sums(f, x, n, exponents);
    let mut tail = tails(x);
    if adaptive {
        let mut doublings = 0;
        while coarse
            .iter()
            .zip(&tail)
            .any(|(b, t)| *t > spec.tail_rel_tol * b.abs())
        {
            if doublings == spec.max_doublings {
                return Err(Error::NonConvergence(format!(
                    "tail bound {:?} still above {} of the box part {:?} at half-width {x}",
                    tail, spec.tail_rel_tol, coarse
                )));
            }
            doublings += 1;
            x *= 2.0;
            n = cells_for(spec, x);
            check_budget(spec, n, d)?;
            coarse = grid_power_sums(f, x, n, exponents);
            tail = tails(x);
        }
    }

    let mut fine = coarse.clone();
    let mut previous = coarse;
    for _ in 0..spec.refinement_levels {
        n *= 2;
        check_budget(spec, n, d)?;
        previous = fine;
        fine = grid_power_sums(f, x, n, exponents);
    }

    exponents
        .iter()
        .enumerate()
        .map(|(e, &p)| {
            let change = (fine[e] - previous[e]).abs();
            if change > spec.convergence_rel_tol * fine[e].abs() && change > 1e-300 {
                return Err(Error::NonConvergence(format!(
                    "L_{p} box integral changed by {change} (from {} to {}) on refinement",
                    previous[e], fine[e]
                )));
            }
            Ok(NormReport {
                p,
                value: fine[e],
                box_part: fine[e],
                tail_bound: tail[e],
                convergence_estimate: change,
                half_width: x,
                points_per_axis: n,
            })
        })
        .collect()
}

pub fn lp_power_integral(f: &dyn Spectrum, p: f64, spec: &QuadratureSpec) -> Result<NormReport> {
    Ok(lp_power_integrals(f, &[p], spec)?.remove(0))
}

/// Norms of `nu_hat - E mu_hat_{M,rho}` for the realization given by
/// `shifts` (relative corners of side-`rho` cubes in `[0,1]^d`).
pub fn deviation_norms(
    shifts: &[Vec<f64>],
    rho: f64,
    dim: usize,
    exponents: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<NormReport>> {
    let mass = 1.0 / shifts.len() as f64;
    let nu = AtomSpectrum::new(dim, shifts.iter().map(|s| (s.as_slice(), rho, mass)));
    let mean = ExpectedSpectrum::new(dim, rho)?;
    lp_power_integrals(&SpectrumSum::difference(&nu, &mean), exponents, spec)
}

/// `int_0^t f_rho`, the distribution function of one axis of the mean
/// measure.
fn ramp_cdf(rho: f64, t: f64) -> f64 {
    let c = 1.0 / (rho * (1.0 - rho));
    if t <= 0.0 {
        0.0
    } else if t <= rho {
        0.5 * c * t * t
    } else if t <= 1.0 - rho {
        0.5 * rho / (1.0 - rho) + (t - rho) / (1.0 - rho)
    } else if t < 1.0 {
        1.0 - 0.5 * c * (1.0 - t) * (1.0 - t)
    } else {
        1.0
    }
}

/// `int_{R^d} |nu_hat - E mu_hat_{M,rho}|^2`, computed exactly in direct
/// space by Plancherel as `||nu - F_rho||_2^2`.
pub fn l2_deviation(shifts: &[Vec<f64>], rho: f64) -> f64 {
    let m = shifts.len() as f64;
    let dim = shifts.first().map_or(0, |s| s.len());
    let mut self_overlap = 0.0;
    for (j, a) in shifts.iter().enumerate() {
        self_overlap += 1.0;
        for b in &shifts[j + 1..] {
            let o: f64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| (1.0 - (x - y).abs() / rho).max(0.0))
                .product();
            self_overlap += 2.0 * o;
        }
    }
    let nu_sq = self_overlap / (m * m * rho.powi(dim as i32));
    let cross = shifts
        .iter()
        .map(|s| {
            s.iter()
                .map(|&t| (ramp_cdf(rho, t + rho) - ramp_cdf(rho, t)) / rho)
                .product::<f64>()
        })
        .sum::<f64>()
        / m;
    (nu_sq - 2.0 * cross + mean_density_l2(rho, dim)).max(0.0)
}

/// `||F_rho||_2^2` for the mean density on `[0,1]^d`.
fn mean_density_l2(rho: f64, dim: usize) -> f64 {
    ((1.0 - 4.0 * rho / 3.0) / ((1.0 - rho) * (1.0 - rho))).powi(dim as i32)
}

/// `E ||nu - F_rho||_2^2 = (rho^{-d} - ||F_rho||_2^2) / M`.
pub fn expected_l2_deviation(m: usize, rho: f64, dim: usize) -> f64 {
    (rho.powi(-(dim as i32)) - mean_density_l2(rho, dim)) / m as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationEstimate {
    /// Control-variate estimate, using the exactly known mean of the
    /// `L_2` deviation.
    pub estimate: Estimate,
    /// Plain sample mean.
    pub plain: Estimate,
    pub reports: Vec<NormReport>,
    pub l2: Vec<f64>,
}

/// Monte Carlo estimate of `int E |mu_hat_{M,rho} - E mu_hat_{M,rho}|^p`
/// from `replicas` independent realizations; replica `i` draws from
/// `stream.child(i)`.
pub fn deviation_expectation(
    m: usize,
    rho: f64,
    dim: usize,
    p: f64,
    replicas: usize,
    spec: &QuadratureSpec,
    stream: Substream,
) -> Result<DeviationEstimate> {
    if replicas < 16 {
        return Err(Error::param(format!(
            "at least 16 replicas are required, got {replicas}"
        )));
    }
    if m == 0 {
        return Err(Error::param("M must be positive"));
    }
    let draws = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let shifts = sample_shifts(m, rho, dim, stream.child(i as u64))?;
            let report = deviation_norms(&shifts, rho, dim, &[p], spec)?.remove(0);
            Ok((report, l2_deviation(&shifts, rho)))
        })
        .collect::<Result<Vec<(NormReport, f64)>>>()?;
    let (reports, l2): (Vec<NormReport>, Vec<f64>) = draws.into_iter().unzip();
    let values: Vec<f64> = reports.iter().map(|r| r.value).collect();
    Ok(DeviationEstimate {
        estimate: control_variate(&values, &l2, expected_l2_deviation(m, rho, dim)),
        plain: mean_stderr(&values),
        reports,
        l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{AxisDecay, Envelope};
    use crate::fourier::{lambda0_hat, FnSpectrum};
    use crate::measure::{Atom, CubeMeasure};
    use std::f64::consts::PI;

    fn unit_envelope(d: usize) -> Envelope {
        Envelope::single(1.0, vec![AxisDecay::new(vec![PI]); d])
    }

    #[test]
    fn zero_function() {
        let f = FnSpectrum::new(1, |_: &[f64]| Complex64::new(0.0, 0.0))
            .with_envelope(Envelope::single(0.0, vec![AxisDecay::new(vec![PI])]));
        let r = lp_power_integral(&f, 4.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.tail_bound, 0.0);
    }

    #[test]
    fn lambda0_l2_is_one() {
        // Plancherel: int |lambda0_hat|^2 = 1; with p = 2 the integrand is
        // band-limited, so only the tail is missing.
        let f = FnSpectrum::new(1, lambda0_hat).with_envelope(unit_envelope(1));
        let spec = QuadratureSpec::default().with_half_width(500.0);
        let r = lp_power_integral(&f, 2.0, &spec).unwrap();
        assert!(r.value <= 1.0);
        assert!(1.0 - r.value <= r.tail_bound);
        assert!(1.0 - r.value > 0.1 * r.tail_bound);
    }

    #[test]
    fn lambda0_l4_known_value() {
        // int sinc^4 = 2/3.
        let f = FnSpectrum::new(1, lambda0_hat).with_envelope(unit_envelope(1));
        let r = lp_power_integral(&f, 4.0, &QuadratureSpec::default()).unwrap();
        assert!(r.value <= 2.0 / 3.0);
        assert!(2.0 / 3.0 - r.value <= r.tail_bound);
        assert!(r.tail_bound <= 1e-3 * r.value);
        assert!(r.convergence_estimate < 1e-6 * r.value);
    }

    #[test]
    fn tail_shrinks_as_box_grows() {
        let f = FnSpectrum::new(1, lambda0_hat).with_envelope(unit_envelope(1));
        let mut last = f64::INFINITY;
        for x in [4.0, 8.0, 16.0, 64.0] {
            let r =
                lp_power_integral(&f, 4.0, &QuadratureSpec::default().with_half_width(x)).unwrap();
            assert!(r.tail_bound < last);
            last = r.tail_bound;
        }
    }

    #[test]
    fn deterministic_mc() {
        let spec = QuadratureSpec::default();
        let a = deviation_expectation(8, 0.2, 1, 4.0, 16, &spec, Substream::root(3)).unwrap();
        let b = deviation_expectation(8, 0.2, 1, 4.0, 16, &spec, Substream::root(3)).unwrap();
        assert_eq!(a, b);
        assert!(deviation_expectation(8, 0.2, 1, 4.0, 15, &spec, Substream::root(3)).is_err());
    }

    #[test]
    fn l2_deviation_matches_frequency_side() {
        let shifts = vec![vec![0.1], vec![0.35], vec![0.5], vec![0.52]];
        let rho = 0.2;
        let spec = QuadratureSpec {
            tail_mode: TailMode::None,
            ..QuadratureSpec::default()
        }
        .with_half_width(4000.0);
        let r = deviation_norms(&shifts, rho, 1, &[2.0], &spec)
            .unwrap()
            .remove(0);
        let exact = l2_deviation(&shifts, rho);
        // The truncated tail of |D|^2 is about 2 / (pi^2 rho^2 X) here.
        assert!(
            (r.value - exact).abs() < 2e-3 * exact,
            "{} vs {exact}",
            r.value
        );
        assert!(r.value < exact);
    }

    #[test]
    fn l2_deviation_mean() {
        let (m, rho) = (5, 0.15);
        let n = 20_000;
        let mean = (0..n)
            .map(|i| {
                l2_deviation(
                    &sample_shifts(m, rho, 2, Substream::root(8).child(i)).unwrap(),
                    rho,
                )
            })
            .sum::<f64>()
            / n as f64;
        let expect = expected_l2_deviation(m, rho, 2);
        assert!((mean - expect).abs() < 0.03 * expect, "{mean} vs {expect}");
    }

    #[test]
    fn self_deviation_is_zero() {
        let e = ExpectedSpectrum::new(1, 0.1).unwrap();
        let z = SpectrumSum::difference(&e, &e);
        let r =
            lp_power_integral(&z, 4.0, &QuadratureSpec::default().with_half_width(50.0)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn two_dimensional_smoke() {
        let mu = CubeMeasure::new(
            2,
            vec![
                Atom::new(vec![0.1, 0.2], 0.5, 0.5),
                Atom::new(vec![0.4, 0.3], 0.5, 0.5),
            ],
        )
        .unwrap();
        let spec = QuadratureSpec {
            tail_rel_tol: 0.05,
            ..QuadratureSpec::default()
        };
        let r = lp_power_integral(&mu.spectrum(), 4.0, &spec).unwrap();
        // Bounded by the single-atom value (2/3 / 0.5)^2 by convexity.
        assert!(r.value > 0.0 && r.value <= (2.0 / 3.0 / 0.5f64).powi(2));
        assert!(r.tail_bound <= 0.05 * r.value);
    }

    #[test]
    fn rejects_bad_specs() {
        let f = FnSpectrum::new(1, lambda0_hat);
        assert!(lp_power_integral(&f, 4.0, &QuadratureSpec::default()).is_err());
        let spec = QuadratureSpec {
            points_per_axis: 4,
            ..QuadratureSpec::default()
        };
        assert!(lp_power_integral(&f, 4.0, &spec).is_err());
        let spec = QuadratureSpec::default().with_half_width(10.0);
        assert!(lp_power_integral(&f, 1.0, &spec).is_err());
    }
}
