//! Checks on the random construction: the deviation scaling in `M` and
//! `rho`, the size of one increment, and the rejection sampler.

use super::suite::{NpParams, PreSelectionParams, RasParams};
use super::{Builder, CheckKind, CheckResult, Expected, Sweep};
use crate::error::{Error, Result};
use crate::fourier::AtomSpectrum;
use crate::measure::{construct, place_children, OmegaChoice};
use crate::quadrature::{
    deviation_expectation, lp_power_integrals, DeviationEstimate, QuadratureSpec,
};
use crate::rng::Substream;
use crate::selection::{acceptance_sweep, pilot_thresholds, select_with, SelectionConfig};
use crate::stats::{fit_powerlaw, mean_stderr};
use crate::tree::{build_tree, BranchingSequence};

const DEVIATION_COLUMNS: [&str; 10] = [
    "M",
    "rho",
    "p",
    "value",
    "stderr",
    "plain_mean",
    "plain_stderr",
    "tail_bound",
    "convergence_estimate",
    "replicas",
];

fn deviation_row(m: usize, rho: f64, p: f64, e: &DeviationEstimate) -> Vec<f64> {
    let tail = e.reports.iter().map(|r| r.tail_bound).fold(0.0, f64::max);
    let conv = e
        .reports
        .iter()
        .map(|r| r.convergence_estimate)
        .fold(0.0, f64::max);
    vec![
        m as f64,
        rho,
        p,
        e.estimate.mean,
        e.estimate.stderr,
        e.plain.mean,
        e.plain.stderr,
        tail,
        conv,
        e.estimate.samples as f64,
    ]
}

/// Slope of the mean deviation against `x`, and whether the error bar of
/// the smallest point is too wide to trust it.
fn sweep_slope(
    b: &mut Builder,
    label: &str,
    points: &[(f64, DeviationEstimate)],
    expected: f64,
    tol: f64,
    max_rel_stderr: f64,
) -> Option<crate::stats::PowerFit> {
    let smallest = points
        .iter()
        .map(|(_, e)| e.estimate)
        .min_by(|a, c| a.mean.total_cmp(&c.mean))?;
    let rel = smallest.stderr / smallest.mean.abs();
    b.info(format!("{label}_smallest_rel_stderr"), rel);
    if !(smallest.mean > 0.0) || rel > max_rel_stderr {
        b.inconclusive(format!(
            "{label} sweep: standard error {:.3e} of the smallest point {:.3e} exceeds {max_rel_stderr} of it",
            smallest.stderr, smallest.mean
        ));
    }
    let data: Vec<(f64, f64)> = points.iter().map(|(x, e)| (*x, e.estimate.mean)).collect();
    match fit_powerlaw(&data) {
        Ok(fit) => {
            b.measure(
                format!("{label}_slope"),
                fit.slope,
                Expected::target(expected, tol),
            );
            Some(fit)
        }
        Err(e) => {
            b.inconclusive(format!("{label} sweep: no fit ({e})"));
            None
        }
    }
}

/// `int E |mu_hat_{M,rho} - E mu_hat_{M,rho}|^p` against `M` at fixed `rho`
/// (slope `-p/2`) and against `rho` at fixed `M` (slope `-d`).
pub fn check_np_scaling(
    dim: usize,
    p: f64,
    params: &NpParams,
    spec: &QuadratureSpec,
    stream: Substream,
) -> Result<CheckResult> {
    let mut b = Builder::new("check_np_scaling", CheckKind::Statistical);

    let mut m_sweep = Sweep::new("np_scaling_m", &DEVIATION_COLUMNS);
    let mut m_points = Vec::new();
    for &m in &params.m_grid {
        let e = deviation_expectation(
            m,
            params.rho,
            dim,
            p,
            params.replicas,
            spec,
            stream.named("m").child(m as u64),
        )?;
        m_sweep.push(deviation_row(m, params.rho, p, &e));
        m_points.push((m as f64, e));
    }
    let fit = sweep_slope(
        &mut b,
        "m",
        &m_points,
        -p / 2.0,
        params.m_slope_tol,
        params.max_rel_stderr,
    );
    b.sweep(m_sweep.with_plot("M", "value", Some("stderr"), fit));

    let mut rho_sweep = Sweep::new("np_scaling_rho", &DEVIATION_COLUMNS);
    let mut rho_points = Vec::new();
    for (i, &rho) in params.rho_grid.iter().enumerate() {
        let e = deviation_expectation(
            params.rho_m,
            rho,
            dim,
            p,
            params.replicas,
            spec,
            stream.named("rho").child(i as u64),
        )?;
        rho_sweep.push(deviation_row(params.rho_m, rho, p, &e));
        rho_points.push((rho, e));
    }
    let fit = sweep_slope(
        &mut b,
        "rho",
        &rho_points,
        -(dim as f64),
        params.rho_slope_tol,
        params.max_rel_stderr,
    );
    b.sweep(rho_sweep.with_plot("rho", "value", Some("stderr"), fit));
    b.note("means use the exactly known L_2 deviation as a control variate; plain means are in the sweep tables");
    Ok(b.finish())
}

/// Growth of `M_k` at a fixed vertex `k`: the normalized `L_p^p` size of
/// `mu_hat_k - mu_hat_{k-1}` stays bounded while its `L_{p1}` size decays.
/// Every point averages several independently selected realizations of the
/// shifts at `Q_k`; the shifts of the vertices before `k` are first draws.
pub fn check_ras_increment(
    seq: &BranchingSequence,
    seed: u64,
    params: &RasParams,
    spec: &QuadratureSpec,
    stream: Substream,
) -> Result<CheckResult> {
    let k = params.k;
    if seq.branching.len() < k {
        return Err(Error::TruncationTooDeep {
            k,
            available: seq.branching.len(),
        });
    }
    if params.realizations == 0 {
        return Err(Error::param(
            "at least one realization per point is required",
        ));
    }
    let (d, p, p1) = (seq.d, seq.p, seq.p1);
    let prefix = &seq.branching[..k];
    let q_conj = p / (p - 1.0);
    let cfg = SelectionConfig {
        pilot: params.pilot,
        trials: params.trials,
        factor: params.factor,
        quadrature: spec.clone(),
        ..SelectionConfig::new(p, p1)
    };

    let mut b = Builder::new("check_ras_increment", CheckKind::Statistical);
    let mut sweep = Sweep::new(
        "ras_increment",
        &[
            "M",
            "rho",
            "ratio",
            "ratio_stderr",
            "lp_power",
            "lp1_power",
            "lp1_stderr",
            "second_term",
            "tail_bound_p",
            "tail_bound_p1",
        ],
    );
    let mut ratio_points = Vec::new();
    let mut p1_points = Vec::new();
    let mut second_terms = Vec::new();
    for &mk in &params.m_grid {
        let mut branching = prefix.to_vec();
        branching.push(mk);
        let full = BranchingSequence::new(d, p, p1, branching.clone(), k + 1);
        let tree = match build_tree(&full) {
            Ok(t) => t,
            Err(e @ Error::RatioTooLarge { .. }) => {
                b.note(format!("M_{k} = {mk} excluded from the fit: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let node = tree.node(k)?.clone();
        let rho = tree.rho(k)?;
        let r_abs = tree.child_side(k)?;
        let parent = construct(
            &BranchingSequence::new(d, p, p1, branching, k),
            seed,
            &OmegaChoice::FirstDraw,
        )?
        .cubes
        .get(k)
        .cloned()
        .ok_or(Error::NoSuchVertex(k))?;

        let point = stream.named("m").child(mk);
        let th = pilot_thresholds(mk as usize, rho, d, &cfg, point)?;
        let mut lp = Vec::new();
        let mut lp1 = Vec::new();
        let (mut tail_p, mut tail_p1) = (0.0f64, 0.0f64);
        for r in 0..params.realizations {
            let sel = select_with(
                &th,
                mk as usize,
                rho,
                d,
                &cfg,
                point.named("realization").child(r as u64),
            )?;
            let children = place_children(&parent, &sel.shifts, r_abs)?;
            let bk = node.weight;
            let m = mk as f64;
            let atoms = std::iter::once((parent.corner.as_slice(), parent.side, -bk)).chain(
                children
                    .iter()
                    .map(|c| (c.corner.as_slice(), c.side, bk / m)),
            );
            let inc = AtomSpectrum::new(d, atoms);
            let reports = lp_power_integrals(&inc, &[p, p1], spec)?;
            tail_p = tail_p.max(reports[0].tail_bound);
            tail_p1 = tail_p1.max(reports[1].tail_bound);
            lp.push(reports[0].value);
            lp1.push(reports[1].value);
        }
        let (ep, ep1) = (mean_stderr(&lp), mean_stderr(&lp1));
        let scale = node.weight.powf(p / 2.0) * ((node.layer + 1) as f64).powi(d as i32);
        let ratio = ep.mean / scale;
        let second =
            node.weight.powf(p) * node.side.powf(-(d as f64) - p / q_conj) * r_abs.powf(p / q_conj);
        sweep.push(vec![
            mk as f64,
            rho,
            ratio,
            ep.stderr / scale,
            ep.mean,
            ep1.mean,
            ep1.stderr,
            second,
            tail_p,
            tail_p1,
        ]);
        ratio_points.push((mk as f64, ratio));
        p1_points.push((mk as f64, ep1.mean));
        second_terms.push(second);
    }
    if ratio_points.len() < 3 {
        return Err(Error::param(format!(
            "need at least 3 admissible M_{k} values, got {}",
            ratio_points.len()
        )));
    }

    let ratio_fit = fit_powerlaw(&ratio_points)?;
    let max_ratio = ratio_points.iter().map(|x| x.1).fold(0.0, f64::max);
    b.info("ratio_max", max_ratio);
    b.measure(
        "ratio_slope",
        ratio_fit.slope,
        Expected::AtMost {
            value: params.growth_tol,
        },
    );
    let p1_fit = fit_powerlaw(&p1_points)?;
    let decreasing = p1_points.windows(2).all(|w| w[1].1 < w[0].1);
    b.measure(
        "lp1_strictly_decreasing",
        f64::from(u8::from(decreasing)),
        Expected::target(1.0, 0.0),
    );
    b.measure("lp1_slope", p1_fit.slope, Expected::AtMost { value: 0.0 });
    let second_decreasing = second_terms.windows(2).all(|w| w[1] < w[0]);
    b.measure(
        "second_term_decreasing",
        f64::from(u8::from(second_decreasing)),
        Expected::target(1.0, 0.0),
    );
    b.info(
        "second_term_last",
        *second_terms.last().unwrap_or(&f64::NAN),
    );
    b.sweep(sweep.with_plot("M", "ratio", Some("ratio_stderr"), Some(ratio_fit)));
    Ok(b.finish())
}

/// Acceptance rate of the rejection sampler against pilot-mean thresholds.
/// Markov's inequality gives each norm a chance below `1/factor` of
/// exceeding its threshold, hence a rate of at least `1 - 2/factor`.
pub fn check_pre_selection(
    dim: usize,
    p: f64,
    p1: f64,
    params: &PreSelectionParams,
    spec: &QuadratureSpec,
    stream: Substream,
) -> Result<CheckResult> {
    let cfg = SelectionConfig {
        pilot: params.pilot,
        trials: params.trials,
        factor: params.factor,
        quadrature: spec.clone(),
        ..SelectionConfig::new(p, p1)
    };
    let s = acceptance_sweep(params.m, params.rho, dim, &cfg, stream)?;
    let mut b = Builder::new("check_pre_selection", CheckKind::Statistical);
    b.measure(
        "acceptance_rate",
        s.rate(),
        Expected::AtLeast {
            value: params.min_rate,
        },
    );
    b.info("markov_rate", 1.0 - 2.0 / params.factor);
    b.info("tau_p", s.thresholds.tau_p);
    b.info("tau_p1", s.thresholds.tau_p1);
    let mut sweep = Sweep::new(
        "pre_selection",
        &["trial", "lp_power", "lp1_power", "accepted"],
    );
    for (t, &(a, c)) in s.norms.iter().enumerate() {
        let ok = a < s.thresholds.tau_p && c < s.thresholds.tau_p1;
        sweep.push(vec![t as f64, a, c, f64::from(u8::from(ok))]);
    }
    b.sweep(sweep);
    Ok(b.finish())
}
