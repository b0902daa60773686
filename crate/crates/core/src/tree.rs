//! The branching tree: combinatorics, weights, layers and prescribed side
//! lengths.
//!
//! Vertices are numbered in creation order. Vertex `Q_k` is expanded at step
//! `k` and receives `M_k` children, appended after every vertex created so
//! far, so the children of `Q_k` occupy indices
//! `M_0 + ... + M_{k-1} + 1 ..= M_0 + ... + M_k`. Because expansion follows
//! index order the layers are contiguous index ranges.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trees with more vertices than this keep no exact rational weights.
pub const DEFAULT_EXACT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingSequence {
    pub d: usize,
    pub p: f64,
    pub p1: f64,
    #[serde(rename = "M")]
    pub branching: Vec<u64>,
    #[serde(rename = "K")]
    pub steps: usize,
}

impl BranchingSequence {
    pub fn new(d: usize, p: f64, p1: f64, branching: Vec<u64>, steps: usize) -> Self {
        BranchingSequence {
            d,
            p,
            p1,
            branching,
            steps,
        }
    }

    /// Exponent `p / (2d)` of the side-length rule.
    pub fn side_exponent(&self) -> f64 {
        self.p / (2.0 * self.d as f64)
    }

    /// Covering exponent `2d / p`.
    pub fn covering_exponent(&self) -> f64 {
        2.0 * self.d as f64 / self.p
    }

    /// Checks the scalar parameters. Geometric admissibility (`rho_k < 1/2`)
    /// needs weights and is checked by [`build_tree`].
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("dimension d must be at least 1"));
        }
        if !(self.p.is_finite() && self.p > 2.0) {
            return Err(Error::param(format!("p must exceed 2, got {}", self.p)));
        }
        if !(self.p1.is_finite() && self.p1 > self.p) {
            return Err(Error::param(format!(
                "p1 must exceed p = {}, got {}",
                self.p, self.p1
            )));
        }
        if self.steps > self.branching.len() {
            return Err(Error::TruncationTooDeep {
                k: self.steps,
                available: self.branching.len(),
            });
        }
        if let Some(k) = self.branching.iter().position(|&m| m == 0) {
            return Err(Error::param(format!("M_{k} must be a positive integer")));
        }
        Ok(())
    }

    /// The same sequence, extended by repeating its last branching factor,
    /// truncated so that every layer up to and including `layer` is complete.
    pub fn completing_layer(&self, layer: usize) -> Result<BranchingSequence> {
        let last = *self
            .branching
            .last()
            .ok_or_else(|| Error::param("empty branching sequence"))?;
        let factor = |k: usize| self.branching.get(k).copied().unwrap_or(last);

        // Layers are contiguous index ranges; walk them to count the
        // vertices that must be expanded.
        let mut layer_start = 0usize;
        let mut layer_len = 1usize;
        for _ in 0..layer {
            let mut next_len = 0usize;
            for k in layer_start..layer_start + layer_len {
                next_len += factor(k) as usize;
            }
            layer_start += layer_len;
            layer_len = next_len;
        }
        let steps = layer_start;
        let branching = (0..steps.max(self.branching.len())).map(factor).collect();
        Ok(BranchingSequence {
            branching,
            steps,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeNode {
    pub index: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub layer: usize,
    pub weight: f64,
    pub side: f64,
}

#[derive(Debug, Clone)]
pub struct Tree {
    seq: BranchingSequence,
    nodes: Vec<CubeNode>,
    exact_weights: Option<Vec<BigRational>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub indices: Vec<usize>,
    /// Every vertex of the previous layer has been expanded.
    pub complete: bool,
}

pub fn build_tree(seq: &BranchingSequence) -> Result<Tree> {
    build_tree_with(seq, DEFAULT_EXACT_LIMIT)
}

/// Builds the truncated tree, keeping exact rational weights when the tree
/// has at most `exact_limit` vertices.
pub fn build_tree_with(seq: &BranchingSequence, exact_limit: usize) -> Result<Tree> {
    seq.validate()?;
    let total = 1 + seq.branching[..seq.steps]
        .iter()
        .map(|&m| m as usize)
        .sum::<usize>();

    let mut nodes = Vec::with_capacity(total);
    nodes.push(CubeNode {
        index: 0,
        parent: None,
        children: Vec::new(),
        layer: 0,
        weight: 1.0,
        side: 1.0,
    });
    let mut exact = (total <= exact_limit).then(|| vec![BigRational::one()]);

    let e = seq.side_exponent();
    for k in 0..seq.steps {
        let m = seq.branching[k];
        let (weight, layer, side) = {
            let q = &nodes[k];
            (q.weight, q.layer, q.side)
        };
        let rho = side_ratio(m, weight, layer, side, e);
        if !(rho < 0.5) {
            return Err(Error::RatioTooLarge {
                k,
                rho,
                min_branching: min_admissible_branching(weight, layer, side, e),
            });
        }
        let r = child_side_formula(m, weight, layer, e);
        let child_weight = weight / m as f64;
        let first = nodes.len();
        for j in 0..m as usize {
            nodes.push(CubeNode {
                index: first + j,
                parent: Some(k),
                children: Vec::new(),
                layer: layer + 1,
                weight: child_weight,
                side: r,
            });
        }
        nodes[k].children = (first..first + m as usize).collect();
        if let Some(ex) = exact.as_mut() {
            let w = &ex[k] / BigRational::from_integer(BigInt::from(m));
            ex.extend(std::iter::repeat_n(w, m as usize));
        }
    }

    Ok(Tree {
        seq: seq.clone(),
        nodes,
        exact_weights: exact,
    })
}

fn child_side_formula(m: u64, weight: f64, layer: usize, e: f64) -> f64 {
    (m as f64).powf(-e) * weight.powf(e) / (layer as f64 + 1.0)
}

fn side_ratio(m: u64, weight: f64, layer: usize, side: f64, e: f64) -> f64 {
    child_side_formula(m, weight, layer, e) / side
}

fn min_admissible_branching(weight: f64, layer: usize, side: f64, e: f64) -> u64 {
    // rho(M) = M^{-e} c is decreasing in M; solve M > (2c)^{1/e} and then
    // correct for rounding against the exact ratio.
    let c = side_ratio(1, weight, layer, side, e);
    let mut m = ((2.0 * c).powf(1.0 / e).floor() as u64).max(1);
    while side_ratio(m, weight, layer, side, e) >= 0.5 {
        m += 1;
    }
    while m > 1 && side_ratio(m - 1, weight, layer, side, e) < 0.5 {
        m -= 1;
    }
    m
}

impl Tree {
    pub fn sequence(&self) -> &BranchingSequence {
        &self.seq
    }

    pub fn dim(&self) -> usize {
        self.seq.d
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[CubeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Result<&CubeNode> {
        self.nodes.get(i).ok_or(Error::NoSuchVertex(i))
    }

    /// Number of expanded vertices (`Q_0 .. Q_{K-1}`).
    pub fn expanded(&self) -> usize {
        self.seq.steps
    }

    pub fn is_expanded(&self, i: usize) -> bool {
        i < self.seq.steps
    }

    pub fn exact_weights(&self) -> Option<&[BigRational]> {
        self.exact_weights.as_deref()
    }

    /// Side length `r_k` shared by all children of the expanded vertex `Q_k`.
    pub fn child_side(&self, k: usize) -> Result<f64> {
        let q = self.node(k)?;
        if !self.is_expanded(k) {
            return Err(Error::NotExpanded(k));
        }
        Ok(child_side_formula(
            self.seq.branching[k],
            q.weight,
            q.layer,
            self.seq.side_exponent(),
        ))
    }

    /// Relative side ratio `rho_k = r_k / l(Q_k)`.
    pub fn rho(&self, k: usize) -> Result<f64> {
        Ok(self.child_side(k)? / self.node(k)?.side)
    }

    pub fn layer_vertices(&self, n: usize) -> Layer {
        let indices: Vec<usize> = self
            .nodes
            .iter()
            .filter(|q| q.layer == n)
            .map(|q| q.index)
            .collect();
        let complete = n == 0
            || self
                .nodes
                .iter()
                .filter(|q| q.layer == n - 1)
                .all(|q| self.is_expanded(q.index));
        Layer { indices, complete }
    }

    /// Deepest layer present in the tree.
    pub fn depth(&self) -> usize {
        self.nodes.last().map_or(0, |q| q.layer)
    }

    /// Current leaves (unexpanded vertices) in index order.
    pub fn leaves(&self) -> impl Iterator<Item = &CubeNode> {
        self.nodes.iter().filter(|q| !self.is_expanded(q.index))
    }

    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            d: self.seq.d,
            p: self.seq.p,
            p1: self.seq.p1,
            branching: self.seq.branching.clone(),
            steps: self.seq.steps,
            vertices: self
                .nodes
                .iter()
                .map(|q| VertexRecord {
                    index: q.index,
                    parent: q.parent,
                    layer: q.layer,
                    weight: q.weight,
                    side: q.side,
                })
                .collect(),
        }
    }
}

/// JSON form of a tree. Corners are absent: they belong to a realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub d: usize,
    pub p: f64,
    pub p1: f64,
    #[serde(rename = "M")]
    pub branching: Vec<u64>,
    #[serde(rename = "K")]
    pub steps: usize,
    pub vertices: Vec<VertexRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub index: usize,
    pub parent: Option<usize>,
    pub layer: usize,
    pub weight: f64,
    pub side: f64,
}
