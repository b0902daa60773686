//! Run configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::measure::OmegaChoice;
use crate::quadrature::QuadratureSpec;
use crate::selection::SelectionConfig;
use crate::tree::{build_tree, BranchingSequence};
use crate::verify::{CheckSpec, SuiteContext};

/// `M_k = round(base * ratio^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometric {
    pub base: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Branching {
    List(Vec<u64>),
    Rule { geometric: Geometric },
}

impl Branching {
    /// The first `len` factors (a list is returned whole).
    pub fn factors(&self, len: usize) -> Result<Vec<u64>> {
        match self {
            Branching::List(v) => Ok(v.clone()),
            Branching::Rule { geometric: g } => {
                if !(g.base >= 1.0 && g.ratio >= 1.0 && g.base.is_finite() && g.ratio.is_finite()) {
                    return Err(Error::Config(format!(
                        "geometric growth needs base >= 1 and ratio >= 1, got {} and {}",
                        g.base, g.ratio
                    )));
                }
                (0..len.max(1))
                    .map(|k| {
                        let m = (g.base * g.ratio.powi(k as i32)).round();
                        if m > u32::MAX as f64 {
                            Err(Error::Config(format!("M_{k} = {m} is too large")))
                        } else {
                            Ok(m as u64)
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OmegaMode {
    FirstDraw,
    Select {
        pilot: usize,
        trials: usize,
        factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub p: f64,
    pub p1: f64,
    #[serde(rename = "M")]
    pub branching: Branching,
    #[serde(rename = "K")]
    pub steps: usize,
    pub seed: u64,
    pub quadrature: QuadratureSpec,
    #[serde(deserialize_with = "suite_entries")]
    pub suite: Vec<CheckSpec>,
    pub output_dir: PathBuf,
    pub omega: OmegaMode,
}

fn suite_entries<'de, D: Deserializer<'de>>(
    de: D,
) -> std::result::Result<Vec<CheckSpec>, D::Error> {
    let raw = Vec::<serde_json::Value>::deserialize(de)?;
    raw.iter()
        .map(CheckSpec::from_value)
        .collect::<Result<_>>()
        .map_err(serde::de::Error::custom)
}

impl Default for RunConfig {
    /// The reference configuration with the full suite.
    fn default() -> Self {
        RunConfig {
            d: 1,
            p: 4.0,
            p1: 6.0,
            branching: Branching::List(vec![32, 64, 64, 64]),
            steps: 4,
            seed: 1,
            quadrature: QuadratureSpec::default(),
            suite: CheckSpec::all(),
            output_dir: PathBuf::from("out"),
            omega: OmegaMode::FirstDraw,
        }
    }
}

/// Scalar fields that command-line flags may override.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` if given, applies the overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(o) = &overrides.output_dir {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sequence(&self) -> Result<BranchingSequence> {
        Ok(BranchingSequence::new(
            self.d,
            self.p,
            self.p1,
            self.branching.factors(self.steps)?,
            self.steps,
        ))
    }

    /// Scalar constraints, tree geometry, quadrature settings and the
    /// inputs of every configured check. Failures are configuration errors.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        let seq = self.sequence()?;
        seq.validate().map_err(wrap)?;
        build_tree(&seq).map_err(wrap)?;
        self.quadrature.validate().map_err(wrap)?;
        if let OmegaMode::Select {
            pilot,
            trials,
            factor,
        } = self.omega
        {
            if pilot == 0 || trials == 0 || !(factor > 0.0) {
                return Err(Error::Config(
                    "selection needs positive pilot, trials and factor".into(),
                ));
            }
        }
        let ctx = self.context()?;
        for c in &self.suite {
            c.validate(&ctx).map_err(wrap)?;
        }
        Ok(())
    }

    pub fn context(&self) -> Result<SuiteContext> {
        Ok(SuiteContext {
            seq: self.sequence()?,
            seed: self.seed,
            quadrature: self.quadrature.clone(),
        })
    }

    pub fn omega_choice(&self) -> OmegaChoice {
        match self.omega {
            OmegaMode::FirstDraw => OmegaChoice::FirstDraw,
            OmegaMode::Select {
                pilot,
                trials,
                factor,
            } => OmegaChoice::Select(SelectionConfig {
                pilot,
                trials,
                factor,
                quadrature: self.quadrature.clone(),
                ..SelectionConfig::new(self.p, self.p1)
            }),
        }
    }

    /// The configuration as written into reports. The output directory is
    /// left out so that reports do not depend on where they are written.
    pub fn to_report_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("output_dir");
        }
        v
    }
}
