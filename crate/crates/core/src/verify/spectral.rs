//! Deterministic checks on transforms: the closed forms against direct
//! quadrature, the uniform bound on the mean transform, and the rate at
//! which the mean transform approaches that of the unit cube.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::gauss::integrate_complex;
use super::{Builder, CheckKind, CheckResult, Expected, Sweep};
use crate::envelope::{AxisDecay, Envelope};
use crate::error::{Error, Result};
use crate::fourier::{
    cis_turns, expected_mu_hat, lambda0_hat, lambda0_hat_1d, mu_hat, ExpectedSpectrum, FnSpectrum,
    Spectrum, SpectrumSum,
};
use crate::measure::{expected_density, Atom, CubeMeasure};
use crate::quadrature::{lp_power_integral, QuadratureSpec};
use crate::rng::Substream;
use crate::stats::fit_powerlaw;

const GL_ORDER: usize = 16;

fn panels_for(freq: f64, len: f64) -> usize {
    (2.0 * freq.abs() * len).ceil() as usize + 2
}

/// `int_a^b e^{-2 pi i t xi} g(t) dt` for smooth `g`.
fn oscillatory(g: impl Fn(f64) -> f64, a: f64, b: f64, xi: f64) -> Complex64 {
    integrate_complex(
        |t| cis_turns(t * xi) * g(t),
        a,
        b,
        panels_for(xi, b - a),
        GL_ORDER,
    )
}

fn random_frequency(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let mag = 10f64.powf(rng.gen_range(lo.log10()..hi.log10()));
            if rng.gen::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

fn rel_err(a: Complex64, reference: Complex64) -> f64 {
    (a - reference).norm() / reference.norm().max(f64::MIN_POSITIVE)
}

/// Closed-form transforms of random cube measures with at most `max_atoms`
/// atoms against quadrature of `int e^{-2 pi i <x, xi>} dmu(x)`.
pub fn check_fourier_oracle(
    dim: usize,
    measures: usize,
    max_atoms: usize,
    frequencies: usize,
    tol: f64,
    stream: Substream,
) -> Result<CheckResult> {
    if dim == 0 || measures == 0 || max_atoms == 0 {
        return Err(Error::param(
            "dimension, measure count and atom count must be positive",
        ));
    }
    let mut rng = stream.rng();
    let mut b = Builder::new("check_fourier_oracle", CheckKind::Bound);
    let mut sweep = Sweep::new("fourier_oracle", &["measure", "atoms", "max_rel_err"]);
    let (mut worst, mut worst_row, mut violations) = (0.0f64, 0.0f64, 0usize);
    for m in 0..measures {
        let n = rng.gen_range(1..=max_atoms);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let atoms: Vec<Atom> = weights
            .iter()
            .map(|w| {
                let side = rng.gen_range(0.01..0.5);
                let corner = (0..dim).map(|_| rng.gen_range(0.0..1.0 - side)).collect();
                Atom::new(corner, side, w / total)
            })
            .collect();
        let mu = CubeMeasure::new(dim, atoms)?;
        let spectrum = mu.spectrum();
        let env = spectrum.envelope();
        let mut measure_worst = 0.0f64;
        for _ in 0..frequencies.div_ceil(measures) {
            let xi = random_frequency(&mut rng, dim, 1e-3, 100.0);
            let reference: Complex64 = mu
                .atoms()
                .iter()
                .map(|a| {
                    let axes: Complex64 = a
                        .corner
                        .iter()
                        .zip(&xi)
                        .map(|(&c, &t)| oscillatory(|_| 1.0 / a.side, c, c + a.side, t))
                        .product();
                    axes * a.mass
                })
                .sum();
            let closed = mu_hat(&mu, &xi);
            measure_worst = measure_worst
                .max(rel_err(closed, reference))
                .max(rel_err(spectrum.eval(&xi), reference));
            // One row through the recurrence, started at this frequency.
            let mut row = [Complex64::new(0.0, 0.0); 3];
            spectrum.eval_row(&xi[..dim - 1], xi[dim - 1], 0.0, &mut row);
            worst_row = worst_row.max(rel_err(row[2], reference));
            if let Some(e) = &env {
                if closed.norm() > e.eval(&xi) * (1.0 + 1e-12) {
                    violations += 1;
                }
            }
        }
        worst = worst.max(measure_worst);
        sweep.push(vec![m as f64, n as f64, measure_worst]);
    }
    b.measure("max_rel_err", worst, Expected::AtMost { value: tol });
    b.measure(
        "max_rel_err_row",
        worst_row,
        Expected::AtMost { value: tol },
    );
    b.measure(
        "envelope_violations",
        violations as f64,
        Expected::target(0.0, 0.0),
    );
    b.sweep(sweep);
    Ok(b.finish())
}

/// One axis of the transform of `F_rho`, integrated piece by piece.
fn density_transform_1d(rho: f64, t: f64) -> Complex64 {
    let f = |x: f64| expected_density(rho, &[x]).unwrap_or(0.0);
    oscillatory(f, 0.0, rho, t)
        + oscillatory(f, rho, 1.0 - rho, t)
        + oscillatory(f, 1.0 - rho, 1.0, t)
}

/// The closed-form mean transform against the transform of the density
/// `F_rho` and against the average of `lambda_hat` over the shift
/// distribution, both by quadrature.
pub fn check_expectation_identity(
    dim: usize,
    rhos: &[f64],
    frequencies: usize,
    max_frequency: f64,
    tol: f64,
    stream: Substream,
) -> Result<CheckResult> {
    if rhos.is_empty() || frequencies == 0 {
        return Err(Error::param("need at least one rho and one frequency"));
    }
    let mut rng = stream.rng();
    let mut b = Builder::new("check_expectation_identity", CheckKind::Bound);
    let mut sweep = Sweep::new(
        "expectation_identity",
        &["rho", "xi_norm", "rel_err_density", "rel_err_shift"],
    );
    let (mut worst_density, mut worst_shift) = (0.0f64, 0.0f64);
    for i in 0..frequencies {
        let rho = rhos[i % rhos.len()];
        let xi: Vec<f64> = (0..dim)
            .map(|_| rng.gen_range(-max_frequency..max_frequency))
            .collect();
        let closed = expected_mu_hat(rho, &xi)?;
        let density: Complex64 = xi.iter().map(|&t| density_transform_1d(rho, t)).product();
        let shift: Complex64 = xi
            .iter()
            .map(|&t| {
                let avg = oscillatory(|_| 1.0 / (1.0 - rho), 0.0, 1.0 - rho, t);
                avg * lambda0_hat_1d(rho * t)
            })
            .product();
        let (e1, e2) = (rel_err(closed, density), rel_err(closed, shift));
        worst_density = worst_density.max(e1);
        worst_shift = worst_shift.max(e2);
        let norm = xi.iter().map(|t| t * t).sum::<f64>().sqrt();
        sweep.push(vec![rho, norm, e1, e2]);
    }
    b.measure(
        "max_rel_err_density",
        worst_density,
        Expected::AtMost { value: tol },
    );
    b.measure(
        "max_rel_err_shift_average",
        worst_shift,
        Expected::AtMost { value: tol },
    );
    let origin = rhos
        .iter()
        .map(|&r| expected_mu_hat(r, &vec![0.0; dim]).map(|z| (z - 1.0).norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    b.measure(
        "max_deviation_at_origin",
        origin,
        Expected::target(0.0, 1e-15),
    );
    b.note("the mean transform has no M argument: the mean of an average of M iid atoms is the mean of one atom");
    b.sweep(sweep);
    Ok(b.finish())
}

/// `int |E mu_hat_{M,rho}|^p` over a grid of `rho`, the pointwise envelope
/// domination on random frequencies, and the value at the origin.
pub fn check_ep_bound(
    dim: usize,
    p: f64,
    rho_grid: &[f64],
    samples: usize,
    slope_floor: f64,
    spec: &QuadratureSpec,
    stream: Substream,
) -> Result<CheckResult> {
    if !(p > 1.0) {
        return Err(Error::param(format!("p must exceed 1, got {p}")));
    }
    if rho_grid.len() < 3 {
        return Err(Error::param("the rho grid needs at least 3 points"));
    }
    let mut b = Builder::new("check_ep_bound", CheckKind::Bound);
    let mut sweep = Sweep::new(
        "ep_bound",
        &[
            "rho",
            "value",
            "tail_bound",
            "upper",
            "convergence_estimate",
            "half_width",
        ],
    );
    let mut points = Vec::new();
    let mut constant = 0.0f64;
    for &rho in rho_grid {
        let r = lp_power_integral(&ExpectedSpectrum::new(dim, rho)?, p, spec)?;
        let upper = r.value + r.tail_bound;
        constant = constant.max(upper);
        points.push((rho, r.value));
        sweep.push(vec![
            rho,
            r.value,
            r.tail_bound,
            upper,
            r.convergence_estimate,
            r.half_width,
        ]);
    }
    let fit = fit_powerlaw(&points)?;
    b.measure("constant", constant, Expected::AtMost { value: f64::MAX });
    b.measure(
        "slope_in_rho",
        fit.slope,
        Expected::AtLeast { value: slope_floor },
    );
    // The rho -> 0 limit is int |lambda0_hat|^p.
    let limit = lp_power_integral(
        &FnSpectrum::new(dim, lambda0_hat)
            .with_envelope(Envelope::single(1.0, vec![AxisDecay::new(vec![PI]); dim])),
        p,
        spec,
    )?;
    b.info("small_rho_limit", limit.value);
    b.sweep(sweep.with_plot("rho", "value", None, Some(fit)));

    let mut rng = stream.rng();
    let (mut spec_violations, mut own_violations) = (0usize, 0usize);
    for i in 0..samples {
        let rho = rho_grid[i % rho_grid.len()];
        let xi = random_frequency(&mut rng, dim, 1e-3, 1e4);
        let value = expected_mu_hat(rho, &xi)?.norm();
        let single: f64 = xi
            .iter()
            .map(|&t| (1.0 / (PI * (1.0 - rho) * t.abs())).min(1.0))
            .product();
        let own = ExpectedSpectrum::new(dim, rho)?
            .envelope()
            .map_or(f64::INFINITY, |e| e.eval(&xi));
        spec_violations += usize::from(value > single * (1.0 + 1e-12));
        own_violations += usize::from(value > own * (1.0 + 1e-12));
    }
    b.measure(
        "envelope_violations",
        spec_violations as f64,
        Expected::target(0.0, 0.0),
    );
    b.measure(
        "product_envelope_violations",
        own_violations as f64,
        Expected::target(0.0, 0.0),
    );
    let origin = rho_grid
        .iter()
        .map(|&r| expected_mu_hat(r, &vec![0.0; dim]).map(|z| (z.norm().powf(p) - 1.0).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    b.measure("origin_deviation", origin, Expected::target(0.0, 1e-15));
    Ok(b.finish())
}

/// `||lambda_{[0,1]} - F_rho||_{L_q}` on the line, in closed form: the
/// difference is linear on `[0, rho]` and `[1 - rho, 1]` and constant in
/// between.
pub fn direct_ooo_norm(rho: f64, q: f64) -> Result<f64> {
    crate::fourier::check_rho(rho)?;
    // Antiderivative of |u|^q.
    let g = |u: f64| u * u.abs().powf(q) / (q + 1.0);
    let slope = -1.0 / (rho * (1.0 - rho));
    let ramp = (g(1.0 + slope * rho) - g(1.0)) / slope;
    let middle = (1.0 - 2.0 * rho) * (rho / (1.0 - rho)).powf(q);
    Ok((2.0 * ramp + middle).powf(1.0 / q))
}

/// Rate of `||lambda0_hat - E mu_hat_{M,rho}||_{L_p}` as `rho -> 0`, with the
/// direct-space rate of `||lambda_0 - F_rho||_{L_p'}` alongside in one
/// dimension.
pub fn check_ooo_scaling(
    dim: usize,
    p: f64,
    rho_grid: &[f64],
    tol: f64,
    spec: &QuadratureSpec,
) -> Result<CheckResult> {
    if !(p > 1.0) {
        return Err(Error::param(format!("p must exceed 1, got {p}")));
    }
    let mut grid = rho_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let q = p / (p - 1.0);
    let expected_slope = 1.0 / q;
    let lambda = FnSpectrum::new(dim, lambda0_hat)
        .with_envelope(Envelope::single(1.0, vec![AxisDecay::new(vec![PI]); dim]));

    let mut b = Builder::new("check_ooo_scaling", CheckKind::Slope);
    let mut sweep = Sweep::new(
        "ooo_scaling",
        &[
            "rho",
            "power_integral",
            "tail_bound",
            "norm",
            "norm_upper",
            "direct_norm",
        ],
    );
    let mut points = Vec::new();
    let mut direct_points = Vec::new();
    for &rho in &grid {
        let mean = ExpectedSpectrum::new(dim, rho)?;
        let diff = SpectrumSum::difference(&lambda, &mean);
        let r = lp_power_integral(&diff, p, spec)?;
        let norm = r.value.powf(1.0 / p);
        let direct = if dim == 1 {
            direct_ooo_norm(rho, q)?
        } else {
            f64::NAN
        };
        points.push((rho, norm));
        direct_points.push((rho, direct));
        sweep.push(vec![
            rho,
            r.value,
            r.tail_bound,
            norm,
            (r.value + r.tail_bound).powf(1.0 / p),
            direct,
        ]);
    }
    let fit = fit_powerlaw(&points)?;
    b.measure("slope", fit.slope, Expected::target(expected_slope, tol));
    let monotone = points.windows(2).all(|w| w[0].1 < w[1].1);
    b.measure(
        "monotone",
        f64::from(u8::from(monotone)),
        Expected::target(1.0, 0.0),
    );
    if dim == 1 {
        let direct_fit = fit_powerlaw(&direct_points)?;
        b.measure(
            "direct_slope",
            direct_fit.slope,
            Expected::target(expected_slope, tol),
        );
    } else {
        b.note("the direct-space rate is computed in closed form only for d = 1");
    }
    b.sweep(sweep.with_plot("rho", "norm", None, Some(fit)));
    Ok(b.finish())
}
