//! Identities of the tree that hold exactly: layer masses, covering sums and
//! the weighted series that controls the increments.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{Builder, CheckKind, CheckResult, Expected, Sweep};
use crate::error::{Error, Result};
use crate::tree::Tree;

const EXACT_TOL: f64 = 1e-12;

/// Compensated sum, so that 10^5 terms stay well inside the 1e-12 budget.
fn neumaier(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// `sum_{layer n} l(Q)^{2d/p}` against `n^{-2d/p}` for every requested
/// layer; layer 0 is reported without a target.
pub fn check_covering_sum(tree: &Tree, layers: &[usize]) -> CheckResult {
    let name = "check_covering_sum";
    let seq = tree.sequence();
    let e = seq.covering_exponent();
    let diam = (seq.d as f64).powf(seq.d as f64 / seq.p);
    let mut b = Builder::new(name, CheckKind::Exact);
    let mut sweep = Sweep::new(
        "covering",
        &["layer", "cubes", "sum", "expected", "diameter_sum"],
    );
    let mut checked = 0;
    for &n in layers {
        let layer = tree.layer_vertices(n);
        if !layer.complete || layer.indices.is_empty() {
            b.note(format!(
                "layer {n} is not complete at this truncation; skipped"
            ));
            continue;
        }
        let nodes = tree.nodes();
        let sum = neumaier(layer.indices.iter().map(|&i| nodes[i].side.powf(e)));
        if n == 0 {
            b.info("layer_0_sum", sum);
            b.note("layer 0 is the unit cube; the covering rate is undefined there");
            sweep.push(vec![0.0, 1.0, sum, f64::NAN, diam * sum]);
            continue;
        }
        let expected = (n as f64).powf(-e);
        b.measure(
            format!("layer_{n}_sum"),
            sum,
            Expected::target(expected, EXACT_TOL),
        );
        b.measure(
            format!("layer_{n}_diameter_sum"),
            diam * sum,
            Expected::target(diam * expected, EXACT_TOL * diam),
        );
        sweep.push(vec![
            n as f64,
            layer.indices.len() as f64,
            sum,
            expected,
            diam * sum,
        ]);
        checked += 1;
    }
    if checked == 0 && !layers.contains(&0) {
        return CheckResult::skipped(name, CheckKind::Exact, "no requested layer is complete");
    }
    b.sweep(sweep);
    b.finish()
}

/// `sum_{layer n} b(Q) = 1`, in exact rational arithmetic when the tree
/// carries exact weights and in floating point always.
pub fn check_layer_mass(tree: &Tree, layers: &[usize]) -> CheckResult {
    let name = "check_layer_mass";
    let mut b = Builder::new(name, CheckKind::Exact);
    let mut sweep = Sweep::new(
        "layer_mass",
        &["layer", "cubes", "float_sum", "exact_deviation"],
    );
    let nodes = tree.nodes();
    let mut checked = 0;
    for &n in layers {
        let layer = tree.layer_vertices(n);
        if !layer.complete || layer.indices.is_empty() {
            b.note(format!(
                "layer {n} is not complete at this truncation; skipped"
            ));
            continue;
        }
        let float = neumaier(layer.indices.iter().map(|&i| nodes[i].weight));
        b.measure(
            format!("layer_{n}_sum"),
            float,
            Expected::target(1.0, EXACT_TOL),
        );
        let mut dev = f64::NAN;
        if let Some(w) = tree.exact_weights() {
            let total = layer
                .indices
                .iter()
                .fold(BigRational::zero(), |s, &i| s + &w[i]);
            let diff = (total - BigRational::one())
                .to_f64()
                .unwrap_or(f64::NAN)
                .abs();
            b.measure(
                format!("layer_{n}_exact_deviation"),
                diff,
                Expected::target(0.0, 0.0),
            );
            dev = diff;
        } else {
            b.note(format!("layer {n}: tree carries no exact weights"));
        }
        sweep.push(vec![n as f64, layer.indices.len() as f64, float, dev]);
        checked += 1;
    }
    if checked == 0 {
        return CheckResult::skipped(name, CheckKind::Exact, "no requested layer is complete");
    }
    b.sweep(sweep);
    b.finish()
}

/// Eulerian numbers `A(d, 0..d)`.
fn eulerian(d: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for n in 1..=d {
        let mut next = vec![0.0; n];
        for (m, slot) in next.iter_mut().enumerate() {
            let left = if m >= 1 {
                (n - m) as f64 * row[m - 1]
            } else {
                0.0
            };
            let right = if m < row.len() {
                (m + 1) as f64 * row[m]
            } else {
                0.0
            };
            *slot = left + right;
        }
        row = next;
    }
    row
}

/// `sum_{n>=0} 2^{-n(p/2-1)} (n+1)^d`, via
/// `sum (n+1)^d x^n = A_d(x) / (1-x)^{d+1}` with the Eulerian polynomial
/// `A_d`.
pub fn series_limit(p: f64, d: usize) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::param(format!(
            "the layer series diverges for p <= 2 (got p = {p})"
        )));
    }
    let x = 2f64.powf(-(p / 2.0 - 1.0));
    let poly: f64 = eulerian(d)
        .iter()
        .enumerate()
        .map(|(k, a)| a * x.powi(k as i32))
        .sum();
    Ok(poly / (1.0 - x).powi(d as i32 + 1))
}

/// Partial sums of the layer series against their closed-form limit, and
/// layerwise domination of the tree's `sum b^{p/2} (n+1)^d`.
pub fn check_series_bound(tree: &Tree, terms: usize, layers: &[usize]) -> Result<CheckResult> {
    let seq = tree.sequence();
    let (p, d) = (seq.p, seq.d);
    let limit = series_limit(p, d)?;
    let term =
        |n: usize| 2f64.powf(-(n as f64) * (p / 2.0 - 1.0)) * ((n + 1) as f64).powi(d as i32);

    let mut b = Builder::new("check_series_bound", CheckKind::Bound);
    let mut partial = Sweep::new("series_partial_sums", &["N", "partial_sum", "limit"]);
    let mut s = 0.0;
    for n in 0..=terms {
        s += term(n);
        partial.push(vec![n as f64, s, limit]);
    }
    b.info("limit", limit);
    b.measure(
        format!("partial_sum_{terms}"),
        s,
        Expected::target(limit, 1e-10),
    );

    let nodes = tree.nodes();
    let mut layer_sweep = Sweep::new("series_layers", &["layer", "tree_sum", "series_term"]);
    let mut cumulative = 0.0;
    for &n in layers {
        let layer = tree.layer_vertices(n);
        if !layer.complete || layer.indices.is_empty() {
            b.note(format!(
                "layer {n} is not complete at this truncation; skipped"
            ));
            continue;
        }
        let sum = neumaier(
            layer
                .indices
                .iter()
                .map(|&i| nodes[i].weight.powf(p / 2.0) * ((n + 1) as f64).powi(d as i32)),
        );
        cumulative += sum;
        let bound = term(n);
        b.measure(
            format!("layer_{n}_sum"),
            sum,
            Expected::AtMost {
                value: bound * (1.0 + EXACT_TOL),
            },
        );
        layer_sweep.push(vec![n as f64, sum, bound]);
    }
    b.measure(
        "tree_partial_sum",
        cumulative,
        Expected::AtMost { value: limit },
    );
    b.sweep(partial);
    b.sweep(layer_sweep);
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_tree, build_tree_with, BranchingSequence};

    fn tree(m: &[u64], k: usize) -> Tree {
        build_tree(&BranchingSequence::new(1, 4.0, 6.0, m.to_vec(), k)).unwrap()
    }

    #[test]
    fn covering_sum_examples() {
        let t = tree(&[3, 4, 4, 4], 4);
        let r = check_covering_sum(&t, &[0, 1, 2]);
        assert!(r.pass, "{r:?}");
        assert!((r.value("layer_2_sum").unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.value("layer_0_sum"), Some(1.0));
        let r = check_covering_sum(&t, &[1]);
        assert!((r.value("layer_1_sum").unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn incomplete_layers_are_skipped() {
        let t = tree(&[3, 4, 4, 4], 2);
        let r = check_covering_sum(&t, &[2]);
        assert_eq!(r.status, super::super::Status::Skipped);
        let r = check_layer_mass(&t, &[1, 2]);
        assert!(r.pass);
        assert!(r.value("layer_2_sum").is_none());
    }

    #[test]
    fn layer_masses() {
        let t = tree(&[3, 4, 6], 3);
        let r = check_layer_mass(&t, &[0, 1]);
        assert!(r.pass);
        assert_eq!(r.value("layer_1_exact_deviation"), Some(0.0));
        let t = tree(&[3, 4, 4, 4], 4);
        assert!(check_layer_mass(&t, &[2]).pass);
    }

    #[test]
    fn float_only_tree() {
        let seq = BranchingSequence::new(1, 4.0, 6.0, vec![3, 4, 4, 4], 4);
        let t = build_tree_with(&seq, 0).unwrap();
        let r = check_layer_mass(&t, &[2]);
        assert!(r.pass);
        assert!(r.value("layer_2_exact_deviation").is_none());
    }

    #[test]
    fn series_limits() {
        assert!((series_limit(4.0, 1).unwrap() - 4.0).abs() < 1e-15);
        // sum (n+1)^2 x^n = (1+x)/(1-x)^3; at x = 1/2 this is 12.
        assert!((series_limit(4.0, 2).unwrap() - 12.0).abs() < 1e-12);
        // sum (n+1)^3 x^n = (1+4x+x^2)/(1-x)^4; at x = 1/2 this is 52.
        assert!((series_limit(4.0, 3).unwrap() - 52.0).abs() < 1e-12);
        assert!(series_limit(2.0, 1).is_err());
        let direct: f64 = (0..200)
            .map(|n| 2f64.powf(-1.5 * n as f64) * (n + 1) as f64)
            .sum();
        assert!((series_limit(5.0, 1).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn series_check_on_small_tree() {
        let t = tree(&[3, 4, 4, 4], 4);
        let r = check_series_bound(&t, 40, &[0, 1, 2]).unwrap();
        assert!(r.pass, "{r:?}");
        // Strict domination once every factor is at least 2.
        let q = r.quantity("layer_2_sum").unwrap();
        assert!(q.value < 0.25 * 3.0);
    }
}
