//! Trees, shifts, placed cubes and the measure recurrence.

use cantor_lp::measure::{
    construct, expected_density, place_children, sample_shifts, Cube, OmegaChoice,
};
use cantor_lp::rng::Substream;
use cantor_lp::tree::{build_tree, BranchingSequence};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

fn seq(m: &[u64], k: usize) -> BranchingSequence {
    BranchingSequence::new(1, 4.0, 6.0, m.to_vec(), k)
}

#[test]
fn three_step_tree() {
    let t = build_tree(&seq(&[3, 4, 6], 3)).unwrap();
    assert_eq!(t.layer_vertices(1).indices, vec![1, 2, 3]);
    assert!(t.layer_vertices(1).complete);
    assert_eq!(t.layer_vertices(0).indices, vec![0]);
    let partial = build_tree(&seq(&[3, 4, 6], 2)).unwrap();
    let l2 = partial.layer_vertices(2);
    assert_eq!((l2.indices, l2.complete), (vec![4, 5, 6, 7], false));
}

#[test]
fn first_steps_by_hand() {
    let t = build_tree(&seq(&[3, 4], 2)).unwrap();
    // r_0 = 3^{-2}, r_1 = 4^{-2} (1/3)^2 / 2.
    assert!((t.child_side(0).unwrap() - 1.0 / 9.0).abs() < 1e-16);
    assert!((t.child_side(1).unwrap() - 1.0 / 288.0).abs() < 1e-18);
    assert!((t.rho(1).unwrap() - 1.0 / 32.0).abs() < 1e-15);
}

#[test]
fn shift_support_and_mean() {
    let s = sample_shifts(100_000, 0.25, 1, Substream::root(4)).unwrap();
    assert!(s.iter().all(|v| v[0] >= 0.0 && v[0] <= 0.75));
    let tiny = sample_shifts(100_000, 1e-9, 2, Substream::root(5)).unwrap();
    for a in 0..2 {
        let mean = tiny.iter().map(|v| v[a]).sum::<f64>() / tiny.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }
    assert_eq!(
        sample_shifts(1, 0.3, 3, Substream::root(9)).unwrap(),
        sample_shifts(1, 0.3, 3, Substream::root(9)).unwrap()
    );
}

#[test]
fn placement_arithmetic() {
    let c = place_children(&Cube::unit(2), &[vec![0.0, 0.0]], 1.0 / 9.0).unwrap();
    assert_eq!(c[0].corner, vec![0.0, 0.0]);
    assert_eq!(c[0].side, 1.0 / 9.0);
    let parent = Cube {
        corner: vec![0.5],
        side: 1.0 / 9.0,
    };
    let rho = 1.0 / 32.0;
    let r = parent.side * rho;
    let c = place_children(&parent, &[vec![1.0 - rho]], r).unwrap();
    let want = 0.5 + (1.0 / 9.0) * (31.0 / 32.0);
    assert!((c[0].corner[0] - want).abs() < 1e-15);
    assert!((c[0].corner[0] + c[0].side - (0.5 + 1.0 / 9.0)).abs() < 1e-15);
}

#[test]
fn measure_after_expansion() {
    let r = construct(&seq(&[3, 4, 4, 4], 1), 1, &OmegaChoice::FirstDraw).unwrap();
    assert_eq!(r.measure.atoms().len(), 3);
    for a in r.measure.atoms() {
        assert!((a.mass - 1.0 / 3.0).abs() < 1e-16);
        assert!((a.side - 1.0 / 9.0).abs() < 1e-16);
    }
    let r = construct(&seq(&[3, 4, 4, 4], 4), 1, &OmegaChoice::FirstDraw).unwrap();
    assert_eq!(r.measure.atoms().len(), 12);
    assert!(r
        .measure
        .atoms()
        .iter()
        .all(|a| (a.mass - 1.0 / 12.0).abs() < 1e-16));
    assert_eq!(r.measure.exact_total().unwrap(), BigRational::one());
}

#[test]
fn density_branches() {
    assert!((expected_density(0.1, &[0.5]).unwrap() - 1.0 / 0.9).abs() < 1e-15);
    assert!((expected_density(0.1, &[0.05]).unwrap() - 5.0 / 9.0).abs() < 1e-15);
    assert_eq!(expected_density(0.1, &[1.2]).unwrap(), 0.0);
    assert_eq!(expected_density(0.1, &[0.5, -0.1]).unwrap(), 0.0);
    // Trapezoid rule is exact on each linear piece.
    let rho: f64 = 0.1;
    let n = 10_000;
    let h = 1.0 / n as f64;
    let total: f64 = (0..n)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            0.5 * h * (expected_density(rho, &[a]).unwrap() + expected_density(rho, &[b]).unwrap())
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn layer_masses_are_one(m in prop::collection::vec(8u64..40, 1..5)) {
        let k = m.len();
        let t = build_tree(&seq(&m, k)).unwrap();
        let w = t.exact_weights().unwrap();
        for n in 0..=t.depth() {
            let layer = t.layer_vertices(n);
            if layer.complete {
                let s = layer.indices.iter().fold(BigRational::new(BigInt::from(0), BigInt::from(1)), |s, &i| s + &w[i]);
                prop_assert_eq!(s, BigRational::one());
            }
        }
    }

    #[test]
    fn children_stay_inside(m in prop::collection::vec(8u64..20, 1..4), seed in 0u64..1000, d in 1usize..3) {
        let k = m.len();
        let s = BranchingSequence::new(d, 4.0, 6.0, m, k);
        let r = construct(&s, seed, &OmegaChoice::FirstDraw).unwrap();
        for node in r.tree.nodes() {
            if let Some(p) = node.parent {
                let (c, q) = (&r.cubes[node.index], &r.cubes[p]);
                for a in 0..d {
                    prop_assert!(c.corner[a] >= q.corner[a] - 1e-15);
                    prop_assert!(c.corner[a] + c.side <= q.corner[a] + q.side + 1e-15);
                }
            }
        }
        prop_assert!((r.measure.total_mass() - 1.0).abs() < 1e-12);
        prop_assert_eq!(r.measure.atoms().len(), r.tree.leaves().count());
    }
}
