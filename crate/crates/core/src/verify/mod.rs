//! Executable checks of the finite-depth estimates behind the construction.
//!
//! Each check returns a [`CheckResult`] whose `pass` field is computed from
//! its measured quantities and their expected values alone. Checks that rely
//! on Monte Carlo may additionally be marked inconclusive when their error
//! bars are too wide to decide.

mod exact;
pub mod gauss;
mod moments;
mod pplus;
mod random;
mod spectral;
mod suite;

pub use exact::{check_covering_sum, check_layer_mass, check_series_bound, series_limit};
pub use moments::{bernoulli_moment, check_mz, MzDistribution};
pub use pplus::{check_pplus, PplusFamily, StepFunction};
pub use random::{check_np_scaling, check_pre_selection, check_ras_increment};
pub use spectral::{
    check_ep_bound, check_expectation_identity, check_fourier_oracle, check_ooo_scaling,
    direct_ooo_norm,
};
pub use suite::{
    run_check, run_suite, CheckSpec, EpParams, IdentityParams, LayerParams, MzParams, NpParams,
    OooParams, OracleParams, PplusParams, PreSelectionParams, RasParams, SeriesParams,
    SuiteContext, SuiteReport, SuiteRun, CHECK_NAMES,
};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::stats::PowerFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Exact,
    Bound,
    Slope,
    Statistical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Skipped,
    Error,
}

/// What a measured quantity is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Expected {
    Target {
        value: f64,
        tol: f64,
    },
    Interval {
        lo: f64,
        hi: f64,
    },
    AtMost {
        value: f64,
    },
    AtLeast {
        value: f64,
    },
    /// Reported only; does not enter the verdict.
    Info,
}

impl Expected {
    pub fn target(value: f64, tol: f64) -> Self {
        Expected::Target { value, tol }
    }

    /// `None` for informational quantities.
    pub fn admits(&self, x: f64) -> Option<bool> {
        let ok = match *self {
            Expected::Target { value, tol } => (x - value).abs() <= tol,
            Expected::Interval { lo, hi } => x >= lo && x <= hi,
            Expected::AtMost { value } => x <= value,
            Expected::AtLeast { value } => x >= value,
            Expected::Info => return None,
        };
        Some(ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub expected: Expected,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ok: Option<bool>,
}

/// How a sweep table is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<PowerFit>,
}

/// A table of numbers produced by a check, written out as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

impl Sweep {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Sweep {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn with_plot(mut self, x: &str, y: &str, err: Option<&str>, fit: Option<PowerFit>) -> Self {
        self.plot = Some(PlotSpec {
            x: x.into(),
            y: y.into(),
            err: err.map(Into::into),
            fit,
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub status: Status,
    pub pass: bool,
    pub measured: Vec<Quantity>,
    pub details: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<Sweep>,
    /// Set when the check stopped on a quadrature non-convergence.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub non_convergence: bool,
}

impl CheckResult {
    pub fn quantity(&self, name: &str) -> Option<&Quantity> {
        self.measured.iter().find(|q| q.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.quantity(name).map(|q| q.value)
    }

    pub fn sweep(&self, name: &str) -> Option<&Sweep> {
        self.sweeps.iter().find(|s| s.name == name)
    }

    /// Result of a check that stopped on an error.
    pub fn failed(name: &str, kind: CheckKind, err: &Error) -> Self {
        CheckResult {
            name: name.into(),
            kind,
            status: Status::Error,
            pass: false,
            measured: Vec::new(),
            details: vec![err.to_string()],
            sweeps: Vec::new(),
            non_convergence: err.is_numerical(),
        }
    }

    /// A check that does not apply, e.g. to an incomplete layer.
    pub fn skipped(name: &str, kind: CheckKind, reason: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            kind,
            status: Status::Skipped,
            pass: false,
            measured: Vec::new(),
            details: vec![reason.into()],
            sweeps: Vec::new(),
            non_convergence: false,
        }
    }
}

/// Accumulates quantities and derives the verdict.
pub(crate) struct Builder {
    name: String,
    kind: CheckKind,
    measured: Vec<Quantity>,
    details: Vec<String>,
    sweeps: Vec<Sweep>,
    inconclusive: bool,
}

impl Builder {
    pub(crate) fn new(name: &str, kind: CheckKind) -> Self {
        Builder {
            name: name.into(),
            kind,
            measured: Vec::new(),
            details: Vec::new(),
            sweeps: Vec::new(),
            inconclusive: false,
        }
    }

    pub(crate) fn measure(&mut self, name: impl Into<String>, value: f64, expected: Expected) {
        self.measured.push(Quantity {
            name: name.into(),
            value,
            ok: expected.admits(value),
            expected,
        });
    }

    pub(crate) fn info(&mut self, name: impl Into<String>, value: f64) {
        self.measure(name, value, Expected::Info);
    }

    pub(crate) fn note(&mut self, text: impl Into<String>) {
        self.details.push(text.into());
    }

    pub(crate) fn sweep(&mut self, sweep: Sweep) {
        self.sweeps.push(sweep);
    }

    pub(crate) fn inconclusive(&mut self, reason: impl Into<String>) {
        self.inconclusive = true;
        self.details.push(reason.into());
    }

    pub(crate) fn finish(self) -> CheckResult {
        // NaN never satisfies a comparison, so it fails the check.
        let pass = self.measured.iter().all(|q| q.ok != Some(false));
        let status = if self.inconclusive {
            Status::Inconclusive
        } else if pass {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckResult {
            name: self.name,
            kind: self.kind,
            status,
            pass,
            measured: self.measured,
            details: self.details,
            sweeps: self.sweeps,
            non_convergence: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_is_a_function_of_quantities() {
        let mut b = Builder::new("x", CheckKind::Bound);
        b.measure("a", 1.0, Expected::AtMost { value: 2.0 });
        b.info("b", f64::NAN);
        let r = b.finish();
        assert!(r.pass);
        assert_eq!(r.status, Status::Pass);

        let mut b = Builder::new("x", CheckKind::Slope);
        b.measure("slope", -1.7, Expected::target(-1.0, 0.3));
        let r = b.finish();
        assert!(!r.pass);
        assert_eq!(r.status, Status::Fail);

        let mut b = Builder::new("x", CheckKind::Exact);
        b.measure("v", f64::NAN, Expected::target(1.0, 1e-12));
        assert!(!b.finish().pass);
    }

    #[test]
    fn inconclusive_keeps_the_verdict_field() {
        let mut b = Builder::new("x", CheckKind::Statistical);
        b.measure("slope", -2.0, Expected::target(-2.0, 0.15));
        b.inconclusive("error bars too wide");
        let r = b.finish();
        assert!(r.pass);
        assert_eq!(r.status, Status::Inconclusive);
    }

    #[test]
    fn expected_serializes_tagged() {
        let s = serde_json::to_string(&Expected::target(3.0, 0.1)).unwrap();
        assert_eq!(s, r#"{"type":"target","value":3.0,"tol":0.1}"#);
    }
}
