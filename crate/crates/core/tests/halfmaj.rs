use std::f64::consts::PI;

use junta_adversary::halfmaj::{
    inner_identity_check, lambda_families, lambda_seed, majority_window, nonadaptive_overlap, odd_overlap_limit,
    verify_constraints, verify_constraints_exact, CertMode,
};
use junta_adversary::linalg::trace_norm;
use junta_adversary::theorem4::{maximize_bound, PGrid};
use junta_adversary::weights::WeightSet;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn overlap_is_a_probability(k in 1usize..30, extra in 0usize..30, s_frac in 0.0f64..=1.0) {
        let n = k + extra;
        let s = ((n as f64) * s_frac) as usize;
        let v = nonadaptive_overlap(n, k, s).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn window_contains_center(k in 1usize..300, d_frac in 0.0f64..=1.0) {
        let d = 1 + ((k - 1) as f64 * d_frac) as usize;
        let (lo, hi) = majority_window(k, d);
        let r = (d as f64).sqrt();
        prop_assert!(lo as f64 <= k as f64 / 2.0 - r + 1e-9 || lo == 0);
        prop_assert!(hi as f64 >= k as f64 / 2.0 + r - 1e-9 || hi == k);
        prop_assert!(lo as f64 > k as f64 / 2.0 - r - 1.0);
    }
}

#[test]
fn residuals_all_modes() {
    for mode in [CertMode::ExactHalf, CertMode::MajorityEven] {
        for f in lambda_families(mode, 40).unwrap() {
            let r = verify_constraints(&f, 1e-8).unwrap();
            assert!(r.feasible, "{mode} k={}: {}", f.k, r.max_residual);
        }
    }
    for f in lambda_families(CertMode::MajorityOddDiff, 41).unwrap() {
        assert!(verify_constraints(&f, 1e-8).unwrap().feasible, "odd k={}", f.k);
    }
}

#[test]
fn rational_residuals_vanish() {
    for mode in [CertMode::ExactHalf, CertMode::MajorityEven, CertMode::MajorityOddDiff] {
        for k in (1..=12).filter(|&k| mode.admits(k)) {
            let r = verify_constraints_exact(k, mode).unwrap();
            assert!(r.exact_zero, "{mode} k={k}: {:?}", r.nonzero);
            assert!(r.float_gap < 1e-10, "{mode} k={k}: gap {}", r.float_gap);
        }
    }
}

#[test]
fn inner_identities() {
    for k in 1..=40 {
        let r = inner_identity_check(k).unwrap();
        assert!(r.max_deviation <= 1e-10 && r.sum_deviation <= 1e-10, "k={k}: {r:?}");
    }
}

#[test]
fn seed_trace_norm_band() {
    for k in 8..=60 {
        let ratio = trace_norm(&lambda_seed(k, CertMode::ExactHalf).unwrap()) / (k as f64).powf(0.25);
        assert!((0.5..=2.0).contains(&ratio), "k={k}: {ratio}");
    }
}

#[test]
fn odd_overlap_trend() {
    let target = -1.0 / (2.0 * PI).sqrt();
    let values: Vec<f64> = (1..=201).step_by(2).map(|k| odd_overlap_limit(k).unwrap()).collect();
    assert!(values.iter().all(|&v| v < 0.0));
    assert!(values.windows(2).all(|w| w[1] > w[0] && w[1] < target + 1e-12));
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn weak_duality() {
    let grid = PGrid::chebyshev(33).unwrap();
    let fams = lambda_families(CertMode::ExactHalf, 7).unwrap();
    for k in 1..=7 {
        let bound = maximize_bound(&WeightSet::exact_half(k).unwrap(), &grid, 1e-8).unwrap();
        assert!(bound.objective <= fams[k - 1].objective + 1e-6, "k={k}");
    }
}
