//! Asymptotic additivity of `L_p^p` norms: if `||g_j||_p -> A` and
//! `||g_j||_{p1} -> 0` then `limsup ||f + g_j||_p^p <= ||f||_p^p + A^p`.
//! Everything here is a step function, so all norms are exact finite sums.

use serde::{Deserialize, Serialize};

use super::{Builder, CheckKind, CheckResult, Expected, Sweep};
use crate::error::{Error, Result};

/// One constant piece on the box `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub value: f64,
}

/// A finite sum of box indicators. Overlapping boxes add up.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepFunction {
    pub dim: usize,
    pub boxes: Vec<StepBox>,
}

impl StepFunction {
    pub fn zero(dim: usize) -> Self {
        StepFunction {
            dim,
            boxes: Vec::new(),
        }
    }

    pub fn cube(corner: &[f64], side: f64, value: f64) -> Self {
        StepFunction {
            dim: corner.len(),
            boxes: vec![StepBox {
                lo: corner.to_vec(),
                hi: corner.iter().map(|c| c + side).collect(),
                value,
            }],
        }
    }

    pub fn plus(&self, other: &StepFunction) -> StepFunction {
        let mut boxes = self.boxes.clone();
        boxes.extend(other.boxes.iter().cloned());
        StepFunction {
            dim: self.dim.max(other.dim),
            boxes,
        }
    }

    /// Upper corner of the bounding box, or `None` for the zero function.
    fn upper(&self) -> Option<Vec<f64>> {
        let first = self.boxes.first()?;
        let mut hi = first.hi.clone();
        for b in &self.boxes[1..] {
            for (h, x) in hi.iter_mut().zip(&b.hi) {
                *h = h.max(*x);
            }
        }
        Some(hi)
    }

    fn lower(&self) -> Option<Vec<f64>> {
        let first = self.boxes.first()?;
        let mut lo = first.lo.clone();
        for b in &self.boxes[1..] {
            for (l, x) in lo.iter_mut().zip(&b.lo) {
                *l = l.min(*x);
            }
        }
        Some(lo)
    }

    /// `int |f|^p`, summed over the cells cut out by all box faces.
    pub fn lp_power(&self, p: f64) -> f64 {
        if self.boxes.is_empty() {
            return 0.0;
        }
        let cuts: Vec<Vec<f64>> = (0..self.dim)
            .map(|a| {
                let mut c: Vec<f64> = self.boxes.iter().flat_map(|b| [b.lo[a], b.hi[a]]).collect();
                c.sort_by(f64::total_cmp);
                c.dedup();
                c
            })
            .collect();
        let mut idx = vec![0usize; self.dim];
        let mut total = 0.0;
        loop {
            let mut volume = 1.0;
            let mut mid = vec![0.0; self.dim];
            for a in 0..self.dim {
                let (l, h) = (cuts[a][idx[a]], cuts[a][idx[a] + 1]);
                volume *= h - l;
                mid[a] = 0.5 * (l + h);
            }
            let v: f64 = self
                .boxes
                .iter()
                .filter(|b| (0..self.dim).all(|a| b.lo[a] <= mid[a] && mid[a] < b.hi[a]))
                .map(|b| b.value)
                .sum();
            if v != 0.0 {
                total += v.abs().powf(p) * volume;
            }
            let mut a = 0;
            loop {
                if a == self.dim {
                    return total;
                }
                idx[a] += 1;
                if idx[a] + 1 < cuts[a].len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }
}

/// Families `g_j` of step functions with `||g_j||_p^p = A^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PplusFamily {
    /// Height `A j^{-d/p}` on a cube of side `j` beyond the support of `f`.
    Disjoint,
    /// The same spreading cube, starting at the lower corner of `f`.
    Overlapping,
    /// Height `A j^{d/p}` on a cube of side `1/j` inside the support of `f`.
    /// Its `L_{p1}` norm grows, so it violates the hypothesis.
    Spike,
    /// `g_j = 0`.
    Zero,
}

impl PplusFamily {
    pub fn member(&self, f: &StepFunction, a: f64, p: f64, j: f64) -> StepFunction {
        let d = f.dim;
        let df = d as f64;
        match self {
            PplusFamily::Zero => StepFunction::zero(d),
            PplusFamily::Disjoint => {
                let corner: Vec<f64> = f
                    .upper()
                    .unwrap_or_else(|| vec![0.0; d])
                    .iter()
                    .map(|x| x + 1.0)
                    .collect();
                StepFunction::cube(&corner, j, a * j.powf(-df / p))
            }
            PplusFamily::Overlapping => {
                let corner = f.lower().unwrap_or_else(|| vec![0.0; d]);
                StepFunction::cube(&corner, j, a * j.powf(-df / p))
            }
            PplusFamily::Spike => {
                let corner = f.lower().unwrap_or_else(|| vec![0.0; d]);
                StepFunction::cube(&corner, 1.0 / j, a * j.powf(df / p))
            }
        }
    }

    fn label(&self) -> &'static str {
        match self {
            PplusFamily::Disjoint => "disjoint",
            PplusFamily::Overlapping => "overlapping",
            PplusFamily::Spike => "spike",
            PplusFamily::Zero => "zero",
        }
    }
}

/// `||f + g_j||_p^p` against `||f||_p^p + A^p` over `j_grid`. The family is
/// measured first and rejected if `||g_j||_p^p` drifts from `A^p` or
/// `||g_j||_{p1}` fails to decrease.
pub fn check_pplus(
    f: &StepFunction,
    family: PplusFamily,
    a: f64,
    p: f64,
    p1: f64,
    j_grid: &[f64],
    tol: f64,
) -> Result<CheckResult> {
    if !(p1 > p && p >= 1.0) {
        return Err(Error::param(format!(
            "need 1 <= p < p1, got p = {p}, p1 = {p1}"
        )));
    }
    if j_grid.is_empty() || j_grid.iter().any(|&j| !(j >= 1.0 && j.is_finite())) {
        return Err(Error::param(
            "the j grid must be nonempty with finite entries >= 1",
        ));
    }
    let fp = f.lp_power(p);
    let ap = if family == PplusFamily::Zero {
        0.0
    } else {
        a.powf(p)
    };
    let bound = fp + ap;

    let mut sweep = Sweep::new(
        format!("pplus_{}", family.label()),
        &[
            "j",
            "sum_lp_power",
            "bound",
            "excess",
            "g_lp_power",
            "g_lp1_norm",
        ],
    );
    let mut excess = Vec::with_capacity(j_grid.len());
    let mut g_p1 = Vec::with_capacity(j_grid.len());
    for &j in j_grid {
        let g = family.member(f, a, p, j);
        let gp = g.lp_power(p);
        let gn = g.lp_power(p1).powf(1.0 / p1);
        if (gp - ap).abs() > 1e-9 * ap.max(1.0) {
            return Err(Error::param(format!(
                "{} family has ||g_j||_p^p = {gp} at j = {j}, expected {ap}",
                family.label()
            )));
        }
        let s = f.plus(&g).lp_power(p);
        sweep.push(vec![j, s, bound, s - bound, gp, gn]);
        excess.push(s - bound);
        g_p1.push(gn);
    }
    if g_p1.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::param(format!(
            "{} family has growing ||g_j||_{{p1}}: {:?}",
            family.label(),
            g_p1
        )));
    }

    let mut b = Builder::new("check_pplus", CheckKind::Bound);
    let last = *excess.last().unwrap_or(&f64::NAN);
    b.info("f_lp_power", fp);
    b.info("g_lp1_norm_last", *g_p1.last().unwrap_or(&f64::NAN));
    b.measure(
        "sum_lp_power_last",
        bound + last,
        Expected::AtMost { value: bound + tol },
    );
    let slack = 1e-12 * bound.max(1.0);
    let monotone = excess.windows(2).all(|w| w[1] <= w[0] + slack);
    b.info("excess_monotone", f64::from(u8::from(monotone)));
    b.note(format!(
        "family {}; j from {} to {}",
        family.label(),
        j_grid[0],
        j_grid[j_grid.len() - 1]
    ));
    b.sweep(sweep.with_plot("j", "sum_lp_power", None, None));
    Ok(b.finish())
}
