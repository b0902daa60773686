//! Named checks with tunable parameters, and a runner for a list of them.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_covering_sum, check_ep_bound, check_expectation_identity, check_fourier_oracle,
    check_layer_mass, check_mz, check_np_scaling, check_ooo_scaling, check_pplus,
    check_pre_selection, check_ras_increment, check_series_bound, CheckKind, CheckResult,
    MzDistribution, PplusFamily, Status, StepFunction,
};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::rng::Substream;
use crate::tree::{build_tree_with, BranchingSequence, Tree};

pub const CHECK_NAMES: [&str; 12] = [
    "check_layer_mass",
    "check_covering_sum",
    "check_series_bound",
    "check_fourier_oracle",
    "check_expectation_identity",
    "check_ep_bound",
    "check_ooo_scaling",
    "check_np_scaling",
    "check_mz",
    "check_ras_increment",
    "check_pre_selection",
    "check_pplus",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerParams {
    pub layers: Vec<usize>,
}

impl Default for LayerParams {
    fn default() -> Self {
        LayerParams {
            layers: vec![0, 1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesParams {
    pub terms: usize,
    pub layers: Vec<usize>,
}

impl Default for SeriesParams {
    fn default() -> Self {
        SeriesParams {
            terms: 40,
            layers: vec![0, 1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub measures: usize,
    pub max_atoms: usize,
    pub frequencies: usize,
    pub tol: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            measures: 4,
            max_atoms: 8,
            frequencies: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityParams {
    pub rhos: Vec<f64>,
    pub frequencies: usize,
    pub max_frequency: f64,
    pub tol: f64,
}

impl Default for IdentityParams {
    fn default() -> Self {
        IdentityParams {
            rhos: vec![0.05, 0.1, 0.25, 0.4],
            frequencies: 50,
            max_frequency: 20.0,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpParams {
    pub rho_grid: Vec<f64>,
    pub samples: usize,
    pub slope_floor: f64,
}

impl Default for EpParams {
    fn default() -> Self {
        EpParams {
            rho_grid: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45],
            samples: 10_000,
            slope_floor: -0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OooParams {
    pub rho_grid: Vec<f64>,
    pub tol: f64,
}

impl Default for OooParams {
    fn default() -> Self {
        OooParams {
            rho_grid: vec![0.02, 0.04, 0.08, 0.16],
            tol: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NpParams {
    pub m_grid: Vec<usize>,
    pub rho: f64,
    /// `M` of the sweep in `rho`.
    pub rho_m: usize,
    pub rho_grid: Vec<f64>,
    pub replicas: usize,
    pub m_slope_tol: f64,
    pub rho_slope_tol: f64,
    pub max_rel_stderr: f64,
}

impl Default for NpParams {
    fn default() -> Self {
        NpParams {
            m_grid: vec![16, 32, 64, 128, 256],
            rho: 0.1,
            rho_m: 64,
            rho_grid: vec![0.0125, 0.025, 0.05, 0.1],
            replicas: 32,
            m_slope_tol: 0.15,
            rho_slope_tol: 0.3,
            max_rel_stderr: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MzParams {
    pub distributions: Vec<MzDistribution>,
    /// Defaults to the configured `p`.
    pub p: Option<f64>,
    pub m_grid: Vec<usize>,
    pub replicas: usize,
    pub limit_tol: f64,
    pub slope_tol: f64,
    pub max_rel_stderr: f64,
}

impl Default for MzParams {
    fn default() -> Self {
        MzParams {
            distributions: vec![
                MzDistribution::Bernoulli,
                MzDistribution::Uniform,
                MzDistribution::Complex {
                    frequency: 2.5,
                    rho: 0.1,
                },
            ],
            p: None,
            m_grid: vec![4, 8, 16, 32, 64, 128, 256],
            replicas: 40_000,
            limit_tol: 0.1,
            slope_tol: 0.1,
            max_rel_stderr: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasParams {
    pub k: usize,
    pub m_grid: Vec<u64>,
    pub realizations: usize,
    pub pilot: usize,
    pub trials: usize,
    pub factor: f64,
    pub growth_tol: f64,
}

impl Default for RasParams {
    fn default() -> Self {
        RasParams {
            k: 0,
            m_grid: vec![8, 16, 32, 64],
            realizations: 8,
            pilot: 32,
            trials: 100,
            factor: 3.0,
            growth_tol: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreSelectionParams {
    pub m: usize,
    pub rho: f64,
    pub pilot: usize,
    pub trials: usize,
    pub factor: f64,
    pub min_rate: f64,
}

impl Default for PreSelectionParams {
    fn default() -> Self {
        PreSelectionParams {
            m: 16,
            rho: 0.1,
            pilot: 32,
            trials: 100,
            factor: 3.0,
            min_rate: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PplusParams {
    pub family: PplusFamily,
    pub a: f64,
    /// `j` runs over `2^0, ..., 2^max_log2_j`.
    pub max_log2_j: u32,
    pub tol: f64,
}

impl Default for PplusParams {
    fn default() -> Self {
        PplusParams {
            family: PplusFamily::Disjoint,
            a: 1.0,
            max_log2_j: 10,
            tol: 1e-3,
        }
    }
}

/// A check and its parameters. In JSON: `{"name": "check_mz", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CheckSpec {
    CheckLayerMass(LayerParams),
    CheckCoveringSum(LayerParams),
    CheckSeriesBound(SeriesParams),
    CheckFourierOracle(OracleParams),
    CheckExpectationIdentity(IdentityParams),
    CheckEpBound(EpParams),
    CheckOooScaling(OooParams),
    CheckNpScaling(NpParams),
    CheckMz(MzParams),
    CheckRasIncrement(RasParams),
    CheckPreSelection(PreSelectionParams),
    CheckPplus(PplusParams),
}

impl CheckSpec {
    /// The check called `name` with default parameters.
    pub fn named(name: &str) -> Result<CheckSpec> {
        CheckSpec::from_value(&serde_json::json!({ "name": name }))
    }

    /// Either a bare name or an object with a `name` and overrides.
    pub fn from_value(v: &serde_json::Value) -> Result<CheckSpec> {
        let obj = match v {
            serde_json::Value::String(s) => serde_json::json!({ "name": s }),
            other => other.clone(),
        };
        let name = obj
            .get("name")
            .and_then(|n| n.as_str())
            .ok_or_else(|| Error::param("suite entry needs a check name"))?;
        if !CHECK_NAMES.contains(&name) {
            return Err(Error::param(format!(
                "unknown check {name:?}; known checks: {}",
                CHECK_NAMES.join(", ")
            )));
        }
        serde_json::from_value(obj.clone())
            .map_err(|e| Error::param(format!("suite entry {name}: {e}")))
    }

    /// Every check with default parameters, in the order of [`CHECK_NAMES`].
    pub fn all() -> Vec<CheckSpec> {
        CHECK_NAMES
            .iter()
            .map(|n| CheckSpec::named(n).expect("known name"))
            .collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::CheckLayerMass(_) => "check_layer_mass",
            CheckSpec::CheckCoveringSum(_) => "check_covering_sum",
            CheckSpec::CheckSeriesBound(_) => "check_series_bound",
            CheckSpec::CheckFourierOracle(_) => "check_fourier_oracle",
            CheckSpec::CheckExpectationIdentity(_) => "check_expectation_identity",
            CheckSpec::CheckEpBound(_) => "check_ep_bound",
            CheckSpec::CheckOooScaling(_) => "check_ooo_scaling",
            CheckSpec::CheckNpScaling(_) => "check_np_scaling",
            CheckSpec::CheckMz(_) => "check_mz",
            CheckSpec::CheckRasIncrement(_) => "check_ras_increment",
            CheckSpec::CheckPreSelection(_) => "check_pre_selection",
            CheckSpec::CheckPplus(_) => "check_pplus",
        }
    }

    pub fn kind(&self) -> CheckKind {
        match self {
            CheckSpec::CheckLayerMass(_)
            | CheckSpec::CheckCoveringSum(_)
            | CheckSpec::CheckFourierOracle(_)
            | CheckSpec::CheckExpectationIdentity(_) => CheckKind::Exact,
            CheckSpec::CheckSeriesBound(_)
            | CheckSpec::CheckEpBound(_)
            | CheckSpec::CheckPplus(_) => CheckKind::Bound,
            CheckSpec::CheckOooScaling(_) => CheckKind::Slope,
            _ => CheckKind::Statistical,
        }
    }

    /// Input errors that can be found without running anything.
    pub fn validate(&self, ctx: &SuiteContext) -> Result<()> {
        if let CheckSpec::CheckSeriesBound(_) = self {
            super::series_limit(ctx.seq.p, ctx.seq.d)?;
        }
        Ok(())
    }
}

/// What every check may draw on besides its own parameters.
#[derive(Debug, Clone)]
pub struct SuiteContext {
    pub seq: BranchingSequence,
    pub seed: u64,
    pub quadrature: QuadratureSpec,
}

impl SuiteContext {
    /// The configured tree, extended so that the given layers are complete,
    /// with exact weights.
    fn layer_tree(&self, layers: &[usize]) -> Result<Tree> {
        let top = layers.iter().copied().max().unwrap_or(0);
        let seq = if top == 0 {
            self.seq.clone()
        } else {
            self.seq.completing_layer(top)?
        };
        build_tree_with(&seq, usize::MAX)
    }
}

fn dispatch(spec: &CheckSpec, ctx: &SuiteContext, stream: Substream) -> Result<CheckResult> {
    let seq = &ctx.seq;
    let q = &ctx.quadrature;
    match spec {
        CheckSpec::CheckLayerMass(x) => {
            Ok(check_layer_mass(&ctx.layer_tree(&x.layers)?, &x.layers))
        }
        CheckSpec::CheckCoveringSum(x) => {
            Ok(check_covering_sum(&ctx.layer_tree(&x.layers)?, &x.layers))
        }
        CheckSpec::CheckSeriesBound(x) => {
            check_series_bound(&ctx.layer_tree(&x.layers)?, x.terms, &x.layers)
        }
        CheckSpec::CheckFourierOracle(x) => {
            check_fourier_oracle(seq.d, x.measures, x.max_atoms, x.frequencies, x.tol, stream)
        }
        CheckSpec::CheckExpectationIdentity(x) => check_expectation_identity(
            seq.d,
            &x.rhos,
            x.frequencies,
            x.max_frequency,
            x.tol,
            stream,
        ),
        CheckSpec::CheckEpBound(x) => check_ep_bound(
            seq.d,
            seq.p,
            &x.rho_grid,
            x.samples,
            x.slope_floor,
            q,
            stream,
        ),
        CheckSpec::CheckOooScaling(x) => check_ooo_scaling(seq.d, seq.p, &x.rho_grid, x.tol, q),
        CheckSpec::CheckNpScaling(x) => check_np_scaling(seq.d, seq.p, x, q, stream),
        CheckSpec::CheckMz(x) => check_mz(
            &x.distributions,
            x.p.unwrap_or(seq.p),
            &x.m_grid,
            x.replicas,
            x.limit_tol,
            x.slope_tol,
            x.max_rel_stderr,
            stream,
        ),
        CheckSpec::CheckRasIncrement(x) => check_ras_increment(seq, ctx.seed, x, q, stream),
        CheckSpec::CheckPreSelection(x) => check_pre_selection(seq.d, seq.p, seq.p1, x, q, stream),
        CheckSpec::CheckPplus(x) => {
            let f = StepFunction::cube(&vec![0.0; seq.d], 1.0, 1.0);
            let grid: Vec<f64> = (0..=x.max_log2_j).map(|k| 2f64.powi(k as i32)).collect();
            check_pplus(&f, x.family, x.a, seq.p, seq.p1, &grid, x.tol)
        }
    }
}

/// Runs one check on its own substream. Errors and panics become a result
/// with status `error`.
pub fn run_check(spec: &CheckSpec, ctx: &SuiteContext) -> CheckResult {
    let name = spec.name();
    let stream = Substream::root(ctx.seed).named(name);
    match catch_unwind(AssertUnwindSafe(|| dispatch(spec, ctx, stream))) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => CheckResult::failed(name, spec.kind(), &e),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            CheckResult::failed(
                name,
                spec.kind(),
                &Error::param(format!("check panicked: {msg}")),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
    pub config: serde_json::Value,
    pub seed: u64,
}

impl SuiteReport {
    /// 0 when every decided check passes, 3 when a failure came from a
    /// non-converged quadrature, 1 otherwise. Inconclusive and skipped
    /// checks do not count.
    pub fn exit_code(&self) -> i32 {
        let failing: Vec<&CheckResult> = self
            .checks
            .iter()
            .filter(|c| matches!(c.status, Status::Fail | Status::Error))
            .collect();
        if failing.is_empty() {
            0
        } else if failing.iter().any(|c| c.non_convergence) {
            3
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

/// The report, and wall-clock times kept apart from it so that the report
/// itself is a function of the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRun {
    pub report: SuiteReport,
    pub timings: Vec<Timing>,
}

/// Runs the checks in parallel on the current rayon pool; results keep the
/// order of `specs`.
pub fn run_suite(specs: &[CheckSpec], ctx: &SuiteContext, config: serde_json::Value) -> SuiteRun {
    let out: Vec<(CheckResult, Timing)> = specs
        .par_iter()
        .map(|s| {
            let t = Instant::now();
            let r = run_check(s, ctx);
            let timing = Timing {
                name: s.name().into(),
                seconds: t.elapsed().as_secs_f64(),
            };
            (r, timing)
        })
        .collect();
    let (checks, timings) = out.into_iter().unzip();
    SuiteRun {
        report: SuiteReport {
            checks,
            config,
            seed: ctx.seed,
        },
        timings,
    }
}
