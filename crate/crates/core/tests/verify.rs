//! Individual checks at small sizes, and two-dimensional smoke runs.

use cantor_lp::quadrature::QuadratureSpec;
use cantor_lp::rng::Substream;
use cantor_lp::tree::BranchingSequence;
use cantor_lp::verify::{
    check_mz, check_ooo_scaling, check_pplus, check_ras_increment, check_series_bound, run_check,
    CheckSpec, MzDistribution, PplusFamily, RasParams, Status, StepFunction, SuiteContext,
};

fn ctx(d: usize, m: Vec<u64>) -> SuiteContext {
    let k = m.len();
    SuiteContext {
        seq: BranchingSequence::new(d, 4.0, 6.0, m, k),
        seed: 3,
        quadrature: QuadratureSpec::default(),
    }
}

fn spec(v: serde_json::Value) -> CheckSpec {
    CheckSpec::from_value(&v).unwrap()
}

#[test]
fn single_summand_ratio() {
    let r = check_mz(
        &[MzDistribution::Bernoulli, MzDistribution::Uniform],
        4.0,
        &[1, 2, 4, 8],
        20_000,
        1.0,
        0.5,
        0.2,
        Substream::root(1),
    )
    .unwrap();
    assert_eq!(r.value("bernoulli_ratio_at_1"), Some(1.0));
    // A single uniform summand: ratio E|X|^4 / E|X|^4, estimated.
    assert!((r.value("uniform_ratio_at_1").unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn degenerate_branching_is_excluded() {
    let seq = BranchingSequence::new(1, 4.0, 6.0, vec![32], 1);
    let params = RasParams {
        m_grid: vec![1, 8, 16, 32],
        realizations: 2,
        pilot: 8,
        trials: 20,
        ..RasParams::default()
    };
    let r = check_ras_increment(
        &seq,
        1,
        &params,
        &QuadratureSpec::default(),
        Substream::root(2),
    )
    .unwrap();
    assert!(
        r.details.iter().any(|d| d.contains("M_0 = 1 excluded")),
        "{:?}",
        r.details
    );
    assert_eq!(r.sweep("ras_increment").unwrap().rows.len(), 3);
}

#[test]
fn series_rejects_p_two() {
    let seq = BranchingSequence::new(1, 2.0, 6.0, vec![], 0);
    let t = cantor_lp::tree::build_tree_with(&seq, 0);
    // The tree itself refuses p = 2, and so does the series.
    assert!(t.is_err());
    assert!(cantor_lp::verify::series_limit(2.0, 1).is_err());
    let ok = cantor_lp::tree::build_tree(&BranchingSequence::new(1, 4.0, 6.0, vec![3, 4, 4, 4], 4))
        .unwrap();
    let r = check_series_bound(&ok, 40, &[0, 1, 2]).unwrap();
    assert!(r.pass);
}

#[test]
fn direct_space_rate() {
    let r = check_ooo_scaling(
        1,
        4.0,
        &[0.02, 0.04, 0.08, 0.16],
        0.1,
        &QuadratureSpec::default(),
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
    assert!((r.value("direct_slope").unwrap() - 0.75).abs() < 0.1);
}

#[test]
fn pplus_families() {
    let f = StepFunction::cube(&[0.0], 1.0, 1.0);
    let grid: Vec<f64> = (0..=10).map(|k| 2f64.powi(k)).collect();
    let zero = check_pplus(&f, PplusFamily::Zero, 1.0, 4.0, 6.0, &grid, 0.0).unwrap();
    assert_eq!(zero.value("sum_lp_power_last"), Some(1.0));
    let long: Vec<f64> = (0..=60).map(|k| 2f64.powi(k)).collect();
    assert!(
        check_pplus(&f, PplusFamily::Overlapping, 1.0, 4.0, 6.0, &long, 1e-3)
            .unwrap()
            .pass
    );
    assert!(check_pplus(&f, PplusFamily::Spike, 1.0, 4.0, 6.0, &grid, 1e-3).is_err());
}

#[test]
fn two_dimensional_smoke() {
    let c = ctx(2, vec![8, 8, 8]);
    let specs = [
        spec(serde_json::json!({"name": "check_layer_mass", "layers": [0, 1, 2]})),
        spec(serde_json::json!({"name": "check_covering_sum", "layers": [1, 2]})),
        spec(serde_json::json!({"name": "check_series_bound", "terms": 60, "layers": [0, 1]})),
        spec(serde_json::json!({"name": "check_fourier_oracle", "measures": 2, "frequencies": 20})),
        spec(
            serde_json::json!({"name": "check_expectation_identity", "rhos": [0.1, 0.3], "frequencies": 10}),
        ),
        spec(serde_json::json!({"name": "check_pplus", "max_log2_j": 8})),
        spec(
            serde_json::json!({"name": "check_ep_bound", "rho_grid": [0.1, 0.2, 0.4], "samples": 500}),
        ),
    ];
    for s in &specs {
        let r = run_check(s, &c);
        assert_eq!(r.status, Status::Pass, "{}: {:?}", s.name(), r);
    }
}
