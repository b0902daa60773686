//! Product-of-min decay envelopes and their closed-form power integrals.
//!
//! A uniform cube measure of side `l` satisfies
//! `|lambda_hat(l xi)| <= prod_j min(1, 1/(pi l |xi_j|))`. Sums of such
//! products dominate the transforms handled here, and their `p`-th powers
//! integrate in closed form over any box complement, which is what certifies
//! the truncation of `L_p` integrals.

use serde::{Deserialize, Serialize};

/// One axis factor `t -> prod_k min(1, 1/(a_k |t|))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisDecay {
    rates: Vec<f64>,
}

impl AxisDecay {
    /// Rates must be positive and finite.
    pub fn new(mut rates: Vec<f64>) -> Self {
        debug_assert!(rates.iter().all(|a| a.is_finite() && *a > 0.0));
        // Descending rates give ascending breakpoints 1/a.
        rates.sort_by(|a, b| b.total_cmp(a));
        AxisDecay { rates }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        self.rates
            .iter()
            .map(|&a| {
                let at = a * t;
                if at > 1.0 {
                    1.0 / at
                } else {
                    1.0
                }
            })
            .product()
    }

    /// `int_lo^hi g(t)^p dt` for `0 <= lo <= hi <= inf`.
    fn half_integral(&self, p: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if self.rates.is_empty() {
            return hi - lo;
        }
        let mut total = 0.0;
        let mut u = lo;
        // Pieces between consecutive breakpoints; on each, g = C t^{-m}.
        for m in 0..=self.rates.len() {
            let piece_end = if m < self.rates.len() {
                1.0 / self.rates[m]
            } else {
                f64::INFINITY
            };
            if piece_end <= u {
                continue;
            }
            let v = piece_end.min(hi);
            if m == 0 {
                total += v - u;
            } else {
                // int_u^v C^p t^{-q} = g(u)^p u (1 - (u/v)^{q-1}) / (q-1)
                let q = m as f64 * p;
                let gu = self.eval(u).powf(p);
                let shrink = if v.is_infinite() {
                    0.0
                } else {
                    (u / v).powf(q - 1.0)
                };
                total += gu * u * (1.0 - shrink) / (q - 1.0);
            }
            u = v;
            if u >= hi {
                break;
            }
        }
        total
    }

    /// `int_R g^p`.
    pub fn power_integral(&self, p: f64) -> f64 {
        2.0 * self.half_integral(p, 0.0, f64::INFINITY)
    }

    /// `int_{|t| <= x} g^p`.
    pub fn power_integral_inside(&self, p: f64, x: f64) -> f64 {
        2.0 * self.half_integral(p, 0.0, x)
    }

    /// `int_{|t| > x} g^p`.
    pub fn power_integral_outside(&self, p: f64, x: f64) -> f64 {
        2.0 * self.half_integral(p, x, f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTerm {
    pub weight: f64,
    pub axes: Vec<AxisDecay>,
}

impl EnvelopeTerm {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.weight
            * self
                .axes
                .iter()
                .zip(xi)
                .map(|(ax, &t)| ax.eval(t))
                .product::<f64>()
    }

    /// `int` of `term^p` over the complement of `[-x, x]^d`.
    pub fn tail_power_integral(&self, p: f64, x: f64) -> f64 {
        // Telescoping sum over the first axis that leaves the box; every
        // summand is nonnegative, so nothing cancels.
        let mut total = 0.0;
        for j in 0..self.axes.len() {
            let inside: f64 = self.axes[..j]
                .iter()
                .map(|a| a.power_integral_inside(p, x))
                .product();
            let full: f64 = self.axes[j + 1..]
                .iter()
                .map(|a| a.power_integral(p))
                .product();
            total += inside * self.axes[j].power_integral_outside(p, x) * full;
        }
        self.weight.abs().powf(p) * total
    }
}

/// Pointwise dominator `sum_t w_t prod_j g_{t,j}(xi_j)` of a transform.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Envelope {
    pub terms: Vec<EnvelopeTerm>,
}

impl Envelope {
    pub fn single(weight: f64, axes: Vec<AxisDecay>) -> Self {
        Envelope {
            terms: vec![EnvelopeTerm { weight, axes }],
        }
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(xi)).sum()
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for t in &mut self.terms {
            t.weight *= c.abs();
        }
        self
    }

    pub fn plus(mut self, other: Envelope) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// Smallest decay rate over all factors; `pi / rate` is the largest
    /// length scale of the underlying cubes.
    pub fn slowest_rate(&self) -> Option<f64> {
        self.terms
            .iter()
            .flat_map(|t| t.axes.iter().flat_map(|a| a.rates().iter().copied()))
            .min_by(f64::total_cmp)
    }

    /// Upper bound for `int_{R^d \ [-x,x]^d} |f|^p` for any `f` dominated by
    /// this envelope, combining terms with Minkowski's inequality.
    pub fn tail_bound(&self, p: f64, x: f64) -> f64 {
        let root: f64 = self
            .terms
            .iter()
            .filter(|t| t.weight != 0.0)
            .map(|t| t.tail_power_integral(p, x).powf(1.0 / p))
            .sum();
        root.powf(p)
    }
}
