//! Choosing a good realization of the shifts.
//!
//! A pilot run estimates the mean `L_p^p` and `L_{p1}^{p1}` deviation
//! integrals; a draw is accepted once both fall below `factor` times those
//! means. By Markov's inequality each norm exceeds three times its mean with
//! probability below 1/3, so with the default factor at least a third of the
//! draws qualify.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{sample_shifts, trial_stream};
use crate::quadrature::{deviation_norms, QuadratureSpec};
use crate::rng::Substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub p: f64,
    pub p1: f64,
    pub pilot: usize,
    pub trials: usize,
    pub factor: f64,
    pub quadrature: QuadratureSpec,
}

impl SelectionConfig {
    pub fn new(p: f64, p1: f64) -> Self {
        SelectionConfig {
            p,
            p1,
            pilot: 32,
            trials: 100,
            factor: 3.0,
            quadrature: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub shifts: Vec<Vec<f64>>,
    /// Index of the accepted (or, on failure, the best) trial.
    pub trial: usize,
    /// Trials evaluated and rejected.
    pub rejections: usize,
    pub norm_p: f64,
    pub norm_p1: f64,
    pub tau_p: f64,
    pub tau_p1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub mean_p: f64,
    pub mean_p1: f64,
    pub tau_p: f64,
    pub tau_p1: f64,
}

fn draw_norms(
    m: usize,
    rho: f64,
    dim: usize,
    cfg: &SelectionConfig,
    stream: Substream,
) -> Result<(Vec<Vec<f64>>, f64, f64)> {
    let shifts = sample_shifts(m, rho, dim, stream)?;
    let r = deviation_norms(&shifts, rho, dim, &[cfg.p, cfg.p1], &cfg.quadrature)?;
    Ok((shifts, r[0].value, r[1].value))
}

/// Pilot means of both deviation integrals and the derived thresholds.
pub fn pilot_thresholds(
    m: usize,
    rho: f64,
    dim: usize,
    cfg: &SelectionConfig,
    stream: Substream,
) -> Result<Thresholds> {
    if cfg.pilot == 0 {
        return Err(Error::param("pilot size must be positive"));
    }
    let pilot = stream.named("pilot");
    let draws = (0..cfg.pilot)
        .into_par_iter()
        .map(|i| draw_norms(m, rho, dim, cfg, pilot.child(i as u64)).map(|(_, a, b)| (a, b)))
        .collect::<Result<Vec<_>>>()?;
    let n = draws.len() as f64;
    let mean_p = draws.iter().map(|x| x.0).sum::<f64>() / n;
    let mean_p1 = draws.iter().map(|x| x.1).sum::<f64>() / n;
    Ok(Thresholds {
        mean_p,
        mean_p1,
        tau_p: cfg.factor * mean_p,
        tau_p1: cfg.factor * mean_p1,
    })
}

/// Draws trials in order and returns the first one whose deviation
/// integrals both lie below the pilot thresholds.
pub fn select_omega(
    m: usize,
    rho: f64,
    dim: usize,
    cfg: &SelectionConfig,
    stream: Substream,
) -> Result<Selection> {
    let th = pilot_thresholds(m, rho, dim, cfg, stream)?;
    select_with(&th, m, rho, dim, cfg, stream)
}

/// The trial loop of [`select_omega`] against precomputed thresholds.
pub fn select_with(
    th: &Thresholds,
    m: usize,
    rho: f64,
    dim: usize,
    cfg: &SelectionConfig,
    stream: Substream,
) -> Result<Selection> {
    let mut best: Option<Selection> = None;
    for t in 0..cfg.trials {
        let (shifts, norm_p, norm_p1) = draw_norms(m, rho, dim, cfg, trial_stream(stream, t))?;
        let candidate = Selection {
            shifts,
            trial: t,
            rejections: t,
            norm_p,
            norm_p1,
            tau_p: th.tau_p,
            tau_p1: th.tau_p1,
        };
        if norm_p < th.tau_p && norm_p1 < th.tau_p1 {
            return Ok(candidate);
        }
        let score = |s: &Selection| (s.norm_p / s.tau_p).max(s.norm_p1 / s.tau_p1);
        if best.as_ref().is_none_or(|b| score(&candidate) < score(b)) {
            best = Some(candidate);
        }
    }
    let mut best = best.ok_or_else(|| Error::param("at least one trial is required"))?;
    best.rejections = cfg.trials;
    Err(Error::SelectionExhausted(Box::new(best)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceSweep {
    pub thresholds: Thresholds,
    pub accepted: usize,
    pub trials: usize,
    pub norms: Vec<(f64, f64)>,
}

impl AcceptanceSweep {
    pub fn rate(&self) -> f64 {
        self.accepted as f64 / self.trials as f64
    }
}

/// Evaluates every one of `cfg.trials` draws against the pilot thresholds.
pub fn acceptance_sweep(
    m: usize,
    rho: f64,
    dim: usize,
    cfg: &SelectionConfig,
    stream: Substream,
) -> Result<AcceptanceSweep> {
    let thresholds = pilot_thresholds(m, rho, dim, cfg, stream)?;
    let norms = (0..cfg.trials)
        .into_par_iter()
        .map(|t| draw_norms(m, rho, dim, cfg, trial_stream(stream, t)).map(|(_, a, b)| (a, b)))
        .collect::<Result<Vec<_>>>()?;
    let accepted = norms
        .iter()
        .filter(|(a, b)| *a < thresholds.tau_p && *b < thresholds.tau_p1)
        .count();
    Ok(AcceptanceSweep {
        thresholds,
        accepted,
        trials: cfg.trials,
        norms,
    })
}
