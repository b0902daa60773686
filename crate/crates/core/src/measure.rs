//! Cube measures and the random construction.
//!
//! Every truncated measure `mu_k` is a finite combination of uniform
//! probability measures on cubes. Expanding `Q_k` removes its atom and puts
//! `M_k` atoms of mass `b(Q_k) / M_k` on child cubes of side `r_k`, placed at
//! uniformly random relative shifts inside `Q_k`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{check_rho, AtomSpectrum};
use crate::rng::Substream;
use crate::tree::{build_tree, BranchingSequence, Tree};

/// Exact masses are dropped once a measure grows past this many atoms.
pub const EXACT_ATOM_LIMIT: usize = 10_000;

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub corner: Vec<f64>,
    pub side: f64,
    pub mass: f64,
    /// Tree vertex carrying this atom, when the measure comes from a tree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
}

impl Atom {
    pub fn new(corner: Vec<f64>, side: f64, mass: f64) -> Self {
        Atom {
            corner,
            side,
            mass,
            vertex: None,
        }
    }
}

/// Axis-aligned cube `corner + [0, side]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub corner: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn unit(dim: usize) -> Self {
        Cube {
            corner: vec![0.0; dim],
            side: 1.0,
        }
    }

    fn contains(&self, other: &Cube, tol: f64) -> Option<usize> {
        self.corner
            .iter()
            .zip(&other.corner)
            .position(|(&a, &b)| b < a - tol || b + other.side > a + self.side + tol)
    }
}

#[derive(Debug, Clone)]
pub struct CubeMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    exact: Option<Vec<BigRational>>,
}

impl CubeMeasure {
    /// Validates the probability-measure invariants: positive masses summing
    /// to one and every atom inside `[0,1]^d`.
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        if atoms.is_empty() {
            return Err(Error::param(
                "a probability measure needs at least one atom",
            ));
        }
        let unit = Cube::unit(dim);
        for (index, a) in atoms.iter().enumerate() {
            let bad = |reason: String| Error::MalformedAtom { index, reason };
            if a.corner.len() != dim {
                return Err(bad(format!(
                    "corner has {} coordinates, expected {dim}",
                    a.corner.len()
                )));
            }
            if !(a.side.is_finite() && a.side > 0.0) {
                return Err(bad(format!("side must be positive, got {}", a.side)));
            }
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(bad(format!("mass must be positive, got {}", a.mass)));
            }
            if a.corner.iter().any(|c| !c.is_finite()) {
                return Err(bad("corner is not finite".into()));
            }
            let cube = Cube {
                corner: a.corner.clone(),
                side: a.side,
            };
            if let Some(axis) = unit.contains(&cube, MASS_TOL) {
                return Err(bad(format!("cube leaves [0,1]^d along axis {axis}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::param(format!("total mass {total} is not 1")));
        }
        Ok(CubeMeasure {
            dim,
            atoms,
            exact: None,
        })
    }

    /// `lambda_{[0,1]^d}`, the starting measure `mu_0`, carried by vertex 0.
    pub fn unit(dim: usize) -> Self {
        CubeMeasure {
            dim,
            atoms: vec![Atom {
                corner: vec![0.0; dim],
                side: 1.0,
                mass: 1.0,
                vertex: Some(0),
            }],
            exact: Some(vec![BigRational::one()]),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn exact_masses(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn exact_total(&self) -> Option<BigRational> {
        self.exact.as_ref().map(|v| {
            v.iter()
                .fold(BigRational::from_integer(0.into()), |s, m| s + m)
        })
    }

    pub fn min_side(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.side)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn spectrum(&self) -> AtomSpectrum {
        AtomSpectrum::of_measure(self)
    }

    pub fn to_document(&self) -> MeasureDocument {
        MeasureDocument {
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomRecord {
                    corner: a.corner.clone(),
                    side: a.side,
                    mass: a.mass,
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &MeasureDocument) -> Result<Self> {
        let dim = doc.atoms.first().map_or(0, |a| a.corner.len());
        CubeMeasure::new(
            dim,
            doc.atoms
                .iter()
                .map(|a| Atom::new(a.corner.clone(), a.side, a.mass))
                .collect(),
        )
    }
}

/// JSON form `{atoms: [{corner, side, mass}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDocument {
    pub atoms: Vec<AtomRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub corner: Vec<f64>,
    pub side: f64,
    pub mass: f64,
}

/// `m` independent shifts uniform on `[0, 1 - rho]^dim`.
pub fn sample_shifts(m: usize, rho: f64, dim: usize, stream: Substream) -> Result<Vec<Vec<f64>>> {
    check_rho(rho)?;
    let mut rng = stream.rng();
    let span = 1.0 - rho;
    Ok((0..m)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>() * span).collect())
        .collect())
}

/// Images of `corner + [0, r_abs]^d`-cubes at relative `shifts` under the
/// homothety taking `[0,1]^d` onto `parent`.
pub fn place_children(parent: &Cube, shifts: &[Vec<f64>], r_abs: f64) -> Result<Vec<Cube>> {
    let l = parent.side;
    let tol = 1e-12 * l;
    shifts
        .iter()
        .enumerate()
        .map(|(child, s)| {
            if s.len() != parent.corner.len() {
                return Err(Error::param(format!(
                    "shift {child} has {} coordinates, expected {}",
                    s.len(),
                    parent.corner.len()
                )));
            }
            let cube = Cube {
                corner: parent
                    .corner
                    .iter()
                    .zip(s)
                    .map(|(c, t)| c + l * t)
                    .collect(),
                side: r_abs,
            };
            match parent.contains(&cube, tol) {
                Some(axis) => Err(Error::Containment { child, axis }),
                None => Ok(cube),
            }
        })
        .collect()
}

/// One step of the measure recurrence: the atom of vertex `k` is replaced by
/// equal-mass atoms on `children`, which become vertices
/// `first_child, first_child + 1, ...`.
pub fn step_measure(
    mu_prev: &CubeMeasure,
    k: usize,
    children: &[Cube],
    first_child: usize,
) -> Result<CubeMeasure> {
    let pos = mu_prev
        .atoms
        .binary_search_by(|a| a.vertex.unwrap_or(usize::MAX).cmp(&k))
        .map_err(|_| Error::MissingAtom(k))?;
    if children.is_empty() {
        return Err(Error::param(format!("vertex {k} needs at least one child")));
    }
    let m = children.len();
    let child_mass = mu_prev.atoms[pos].mass / m as f64;

    let mut atoms = Vec::with_capacity(mu_prev.atoms.len() + m - 1);
    atoms.extend_from_slice(&mu_prev.atoms[..pos]);
    atoms.extend_from_slice(&mu_prev.atoms[pos + 1..]);
    if let Some(last) = atoms.last().and_then(|a| a.vertex) {
        if last >= first_child {
            return Err(Error::param(format!(
                "child index {first_child} does not follow existing vertex {last}"
            )));
        }
    }
    atoms.extend(children.iter().enumerate().map(|(j, c)| Atom {
        corner: c.corner.clone(),
        side: c.side,
        mass: child_mass,
        vertex: Some(first_child + j),
    }));

    let exact = match &mu_prev.exact {
        Some(ex) if atoms.len() <= EXACT_ATOM_LIMIT => {
            let child = &ex[pos] / BigRational::from_integer(BigInt::from(m));
            let mut v = Vec::with_capacity(atoms.len());
            v.extend_from_slice(&ex[..pos]);
            v.extend_from_slice(&ex[pos + 1..]);
            v.extend(std::iter::repeat_n(child, m));
            Some(v)
        }
        _ => None,
    };

    Ok(CubeMeasure {
        dim: mu_prev.dim,
        atoms,
        exact,
    })
}

fn ramp(rho: f64, t: f64) -> f64 {
    let norm = 1.0 / (rho * (1.0 - rho));
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else if t <= rho {
        t * norm
    } else if t <= 1.0 - rho {
        1.0 / (1.0 - rho)
    } else {
        (1.0 - t) * norm
    }
}

/// Density `prod_i f_rho(x_i)` of the mean measure `E mu_{M,rho}`, i.e. of
/// `lambda_{[0,rho]^d} * lambda_{[0,1-rho]^d}`.
pub fn expected_density(rho: f64, x: &[f64]) -> Result<f64> {
    check_rho(rho)?;
    Ok(x.iter().map(|&t| ramp(rho, t)).product())
}

/// Shifts drawn for every expanded vertex of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSample {
    pub seed: u64,
    pub shifts: BTreeMap<usize, Vec<Vec<f64>>>,
    /// Accepted trial per vertex when shifts were selected rather than taken
    /// from the first draw.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub trials: BTreeMap<usize, usize>,
}

/// Stream feeding the shifts of vertex `k`.
pub fn vertex_stream(seed: u64, k: usize) -> Substream {
    Substream::root(seed).named("shifts").child(k as u64)
}

/// Stream of trial `t` within a vertex (or any selection) stream.
pub fn trial_stream(stream: Substream, t: usize) -> Substream {
    stream.named("trial").child(t as u64)
}

/// How the shifts of each expanded vertex are chosen.
#[derive(Debug, Clone)]
pub enum OmegaChoice {
    /// Use the first draw.
    FirstDraw,
    /// Rejection-sample until both deviation norms fall below their
    /// thresholds.
    Select(crate::selection::SelectionConfig),
}

/// A tree together with one placement of its cubes and the resulting `mu_K`.
#[derive(Debug, Clone)]
pub struct Realization {
    pub tree: Tree,
    pub cubes: Vec<Cube>,
    pub shifts: ShiftSample,
    pub measure: CubeMeasure,
}

pub fn construct(seq: &BranchingSequence, seed: u64, choice: &OmegaChoice) -> Result<Realization> {
    let tree = build_tree(seq)?;
    let d = seq.d;
    let mut cubes = Vec::with_capacity(tree.len());
    cubes.push(Cube::unit(d));
    let mut measure = CubeMeasure::unit(d);
    let mut shifts = ShiftSample {
        seed,
        shifts: BTreeMap::new(),
        trials: BTreeMap::new(),
    };

    for k in 0..tree.expanded() {
        let node = tree.node(k)?;
        let rho = tree.rho(k)?;
        let r = tree.child_side(k)?;
        let m = node.children.len();
        let stream = vertex_stream(seed, k);
        let draw = match choice {
            OmegaChoice::FirstDraw => sample_shifts(m, rho, d, trial_stream(stream, 0))?,
            OmegaChoice::Select(cfg) => {
                let sel = crate::selection::select_omega(m, rho, d, cfg, stream)?;
                shifts.trials.insert(k, sel.trial);
                sel.shifts
            }
        };
        let children = place_children(&cubes[k], &draw, r)?;
        measure = step_measure(&measure, k, &children, node.children[0])?;
        cubes.extend(children);
        shifts.shifts.insert(k, draw);
    }

    Ok(Realization {
        tree,
        cubes,
        shifts,
        measure,
    })
}

impl Realization {
    /// `mu_hat_k - mu_hat_{k-1}` written as a signed atom sum:
    /// `b(Q_k)` times the children's average minus `b(Q_k) lambda_{Q_k}`.
    pub fn increment_spectrum(&self, k: usize) -> Result<AtomSpectrum> {
        let node = self.tree.node(k)?;
        if !self.tree.is_expanded(k) {
            return Err(Error::NotExpanded(k));
        }
        let b = node.weight;
        let m = node.children.len() as f64;
        let parent = &self.cubes[k];
        let atoms = std::iter::once((parent.corner.as_slice(), parent.side, -b)).chain(
            node.children
                .iter()
                .map(|&c| (self.cubes[c].corner.as_slice(), self.cubes[c].side, b / m)),
        );
        Ok(AtomSpectrum::new(self.tree.dim(), atoms))
    }
}
