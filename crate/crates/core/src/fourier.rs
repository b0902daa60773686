//! Closed-form Fourier transforms of cube measures.
//!
//! Convention: `f_hat(xi) = int e^{-2 pi i <x, xi>} df(x)`. The transform of
//! the uniform probability measure on `[0,1]^d` is
//! `prod_j (1 - e^{-2 pi i xi_j}) / (2 pi i xi_j) = prod_j e^{-i pi xi_j} sinc(xi_j)`
//! with the normalized `sinc(t) = sin(pi t) / (pi t)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::envelope::{AxisDecay, Envelope};
use crate::error::{Error, Result};
use crate::measure::CubeMeasure;

/// Below this `|2 pi t|` the sinc factor switches to its Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// `sin(pi t)` with exact argument reduction modulo 2.
pub fn sin_pi(t: f64) -> f64 {
    let r = t - 2.0 * (t * 0.5).round();
    (PI * r).sin()
}

/// `cos(pi t)` with exact argument reduction modulo 2.
pub fn cos_pi(t: f64) -> f64 {
    let r = t - 2.0 * (t * 0.5).round();
    (PI * r).cos()
}

/// Normalized sinc, `sin(pi t) / (pi t)`, equal to 1 at 0.
pub fn sinc(t: f64) -> f64 {
    let x = PI * t;
    if 2.0 * x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        sin_pi(t) / x
    }
}

/// `e^{-2 pi i s}`, reduced modulo one full turn.
pub fn cis_turns(s: f64) -> Complex64 {
    let r = s - s.round();
    let (sn, cs) = (2.0 * PI * r).sin_cos();
    Complex64::new(cs, -sn)
}

/// One-dimensional transform of the uniform measure on `[0,1]`.
pub fn lambda0_hat_1d(t: f64) -> Complex64 {
    Complex64::new(cos_pi(t), -sin_pi(t)) * sinc(t)
}

/// Transform of the Lebesgue measure on `[0,1]^d`.
pub fn lambda0_hat(xi: &[f64]) -> Complex64 {
    xi.iter().map(|&t| lambda0_hat_1d(t)).product()
}

/// Transform of a cube measure, summed atom by atom.
pub fn mu_hat(mu: &CubeMeasure, xi: &[f64]) -> Complex64 {
    mu.atoms()
        .iter()
        .map(|a| {
            let phase: f64 = a.corner.iter().zip(xi).map(|(c, t)| c * t).sum();
            let shape: Complex64 = xi.iter().map(|&t| lambda0_hat_1d(a.side * t)).product();
            cis_turns(phase) * shape * a.mass
        })
        .sum()
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 0.5 {
        Ok(())
    } else {
        Err(Error::param(format!("rho must lie in (0, 1/2), got {rho}")))
    }
}

/// Mean transform of the random measure `mu_{M,rho}`:
/// `lambda0_hat(rho xi) * lambda0_hat((1 - rho) xi)`. It does not depend on M.
pub fn expected_mu_hat(rho: f64, xi: &[f64]) -> Result<Complex64> {
    check_rho(rho)?;
    Ok(expected_unchecked(rho, xi))
}

fn expected_unchecked(rho: f64, xi: &[f64]) -> Complex64 {
    xi.iter()
        .map(|&t| Complex64::new(cos_pi(t), -sin_pi(t)) * (sinc(rho * t) * sinc((1.0 - rho) * t)))
        .product()
}

fn decay(side: f64, t: f64) -> f64 {
    let at = PI * side * t.abs();
    if at > 1.0 {
        1.0 / at
    } else {
        1.0
    }
}

/// `sum_atoms mass * prod_j min(1, 1/(pi side |xi_j|))`, which dominates
/// `|mu_hat(mu, xi)|`.
pub fn envelope(mu: &CubeMeasure, xi: &[f64]) -> f64 {
    mu.atoms()
        .iter()
        .map(|a| a.mass * xi.iter().map(|&t| decay(a.side, t)).product::<f64>())
        .sum()
}

/// A complex function on frequency space that the quadrature can sample.
pub trait Spectrum: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, xi: &[f64]) -> Complex64;

    /// Writes `f(prefix, t0 + i step)` into `out[i]`. Implementations may use
    /// recurrences, so callers keep rows short.
    fn eval_row(&self, prefix: &[f64], t0: f64, step: f64, out: &mut [Complex64]) {
        let mut xi = prefix.to_vec();
        xi.push(0.0);
        let last = xi.len() - 1;
        for (i, o) in out.iter_mut().enumerate() {
            xi[last] = t0 + i as f64 * step;
            *o = self.eval(&xi);
        }
    }

    /// A pointwise dominator of `|f|`, when one is known in closed form.
    fn envelope(&self) -> Option<Envelope> {
        None
    }
}

#[derive(Debug, Clone)]
struct SideGroup {
    side: f64,
    centers: Vec<Vec<f64>>,
    coefs: Vec<f64>,
}

/// `sum_a c_a e^{-2 pi i <corner_a, xi>} lambda0_hat(side_a xi)` for real,
/// possibly negative, coefficients. Atoms of equal side share their sinc
/// factor.
#[derive(Debug, Clone)]
pub struct AtomSpectrum {
    dim: usize,
    groups: Vec<SideGroup>,
}

impl AtomSpectrum {
    pub fn new<'a>(dim: usize, atoms: impl IntoIterator<Item = (&'a [f64], f64, f64)>) -> Self {
        let mut groups: Vec<SideGroup> = Vec::new();
        for (corner, side, coef) in atoms {
            debug_assert_eq!(corner.len(), dim);
            let center = corner.iter().map(|c| c + 0.5 * side).collect();
            match groups.iter_mut().find(|g| g.side == side) {
                Some(g) => {
                    g.centers.push(center);
                    g.coefs.push(coef);
                }
                None => groups.push(SideGroup {
                    side,
                    centers: vec![center],
                    coefs: vec![coef],
                }),
            }
        }
        AtomSpectrum { dim, groups }
    }

    pub fn of_measure(mu: &CubeMeasure) -> Self {
        AtomSpectrum::new(
            mu.dim(),
            mu.atoms()
                .iter()
                .map(|a| (a.corner.as_slice(), a.side, a.mass)),
        )
    }

    pub fn atom_count(&self) -> usize {
        self.groups.iter().map(|g| g.coefs.len()).sum()
    }
}

impl Spectrum for AtomSpectrum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        self.groups
            .iter()
            .map(|g| {
                let shape: f64 = xi.iter().map(|&t| sinc(g.side * t)).product();
                let sum: Complex64 = g
                    .centers
                    .iter()
                    .zip(&g.coefs)
                    .map(|(c, &w)| {
                        let phase: f64 = c.iter().zip(xi).map(|(c, t)| c * t).sum();
                        cis_turns(phase) * w
                    })
                    .sum();
                sum * shape
            })
            .sum()
    }

    fn eval_row(&self, prefix: &[f64], t0: f64, step: f64, out: &mut [Complex64]) {
        let last = self.dim - 1;
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        let mut zr = Vec::new();
        let mut zi = Vec::new();
        let mut wr = Vec::new();
        let mut wi = Vec::new();
        for g in &self.groups {
            let prefix_shape: f64 = prefix.iter().map(|&t| sinc(g.side * t)).product();
            if prefix_shape == 0.0 {
                continue;
            }
            zr.clear();
            zi.clear();
            wr.clear();
            wi.clear();
            for (c, &w) in g.centers.iter().zip(&g.coefs) {
                let phase: f64 = c[..last]
                    .iter()
                    .zip(prefix)
                    .map(|(c, t)| c * t)
                    .sum::<f64>()
                    + c[last] * t0;
                let z = cis_turns(phase) * (w * prefix_shape);
                let inc = cis_turns(c[last] * step);
                zr.push(z.re);
                zi.push(z.im);
                wr.push(inc.re);
                wi.push(inc.im);
            }
            for (i, o) in out.iter_mut().enumerate() {
                let mut sr = 0.0;
                let mut si = 0.0;
                for a in 0..zr.len() {
                    sr += zr[a];
                    si += zi[a];
                    let r = zr[a] * wr[a] - zi[a] * wi[a];
                    let m = zr[a] * wi[a] + zi[a] * wr[a];
                    zr[a] = r;
                    zi[a] = m;
                }
                let s = sinc(g.side * (t0 + i as f64 * step));
                o.re += s * sr;
                o.im += s * si;
            }
        }
    }

    fn envelope(&self) -> Option<Envelope> {
        let mut env = Envelope::default();
        for g in &self.groups {
            let weight: f64 = g.coefs.iter().map(|c| c.abs()).sum();
            if weight == 0.0 {
                continue;
            }
            env = env.plus(Envelope::single(
                weight,
                vec![AxisDecay::new(vec![PI * g.side]); self.dim],
            ));
        }
        Some(env)
    }
}

/// `coef * E mu_hat_{M,rho}` as a sampled function.
#[derive(Debug, Clone, Copy)]
pub struct ExpectedSpectrum {
    dim: usize,
    rho: f64,
}

impl ExpectedSpectrum {
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(ExpectedSpectrum { dim, rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl Spectrum for ExpectedSpectrum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        expected_unchecked(self.rho, xi)
    }

    fn envelope(&self) -> Option<Envelope> {
        Some(Envelope::single(
            1.0,
            vec![AxisDecay::new(vec![PI * self.rho, PI * (1.0 - self.rho)]); self.dim],
        ))
    }
}

/// Wraps a closure, optionally with a known envelope.
pub struct FnSpectrum<F> {
    dim: usize,
    f: F,
    envelope: Option<Envelope>,
}

impl<F: Fn(&[f64]) -> Complex64 + Sync> FnSpectrum<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnSpectrum {
            dim,
            f,
            envelope: None,
        }
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = Some(envelope);
        self
    }
}

impl<F: Fn(&[f64]) -> Complex64 + Sync> Spectrum for FnSpectrum<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        (self.f)(xi)
    }

    fn envelope(&self) -> Option<Envelope> {
        self.envelope.clone()
    }
}

/// Real linear combination of spectra.
pub struct SpectrumSum<'a> {
    dim: usize,
    parts: Vec<(f64, &'a dyn Spectrum)>,
}

impl<'a> SpectrumSum<'a> {
    pub fn new(dim: usize) -> Self {
        SpectrumSum {
            dim,
            parts: Vec::new(),
        }
    }

    pub fn with(mut self, coef: f64, part: &'a dyn Spectrum) -> Self {
        debug_assert_eq!(part.dim(), self.dim);
        self.parts.push((coef, part));
        self
    }

    /// `a - b`.
    pub fn difference(a: &'a dyn Spectrum, b: &'a dyn Spectrum) -> Self {
        SpectrumSum::new(a.dim()).with(1.0, a).with(-1.0, b)
    }
}

impl Spectrum for SpectrumSum<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        self.parts.iter().map(|(c, s)| s.eval(xi) * *c).sum()
    }

    fn eval_row(&self, prefix: &[f64], t0: f64, step: f64, out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        let mut scratch = vec![Complex64::new(0.0, 0.0); out.len()];
        for (c, s) in &self.parts {
            s.eval_row(prefix, t0, step, &mut scratch);
            for (o, v) in out.iter_mut().zip(&scratch) {
                *o += v * *c;
            }
        }
    }

    fn envelope(&self) -> Option<Envelope> {
        let mut env = Envelope::default();
        for (c, s) in &self.parts {
            env = env.plus(s.envelope()?.scaled(*c));
        }
        Some(env)
    }
}
