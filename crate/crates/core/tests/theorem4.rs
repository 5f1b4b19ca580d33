use junta_adversary::adversary::DList;
use junta_adversary::simplex::CutLp;
use junta_adversary::theorem4::{feasible, m_block, m_matrix, maximize_bound, PGrid};
use junta_adversary::weights::WeightSet;
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigenvalues_are_d(d in proptest::collection::vec(-3.0f64..3.0, 2..=17), pi in 0usize..3) {
        let p = [0.2, 0.5, 0.8][pi];
        let k = d.len() - 1;
        let m = m_matrix(&DList::new(d.clone()).unwrap(), k, p).unwrap();
        let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        let mut want = d.clone();
        eig.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn block_norm_convex(
        d1 in proptest::collection::vec(-3.0f64..3.0, 6),
        d2 in proptest::collection::vec(-3.0f64..3.0, 6),
        lambda in 0.0f64..1.0,
        m in 1usize..=5,
        p in 0.05f64..0.95,
    ) {
        let k = 5;
        let weights = WeightSet::exact_half(k).unwrap();
        let t = (k - m) / 2;
        let norm = |d: &[f64]| m_block(&DList::new(d.to_vec()).unwrap(), m, p, t, &weights).unwrap().norm();
        let mid: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        prop_assert!(norm(&mid) <= lambda * norm(&d1) + (1.0 - lambda) * norm(&d2) + 1e-10);
    }

    #[test]
    fn simplex_matches_vertex_enumeration(
        cuts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.1f64..4.0), 0..8),
        c in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let bound = 5.0;
        let mut lp = CutLp::new(2, bound).unwrap();
        let mut rows: Vec<(f64, f64, f64)> = vec![(1.0, 0.0, bound), (-1.0, 0.0, bound), (0.0, 1.0, bound), (0.0, -1.0, bound)];
        for &(a, b, h) in &cuts {
            lp.add_cut(vec![a, b], h).unwrap();
            rows.push((a, b, h));
        }
        let sol = lp.maximize(&[c.0, c.1]).unwrap();
        for &(a, b, h) in &rows {
            prop_assert!(a * sol.x[0] + b * sol.x[1] <= h + 1e-8);
        }
        let mut best = f64::NEG_INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (a1, b1, h1) = rows[i];
                let (a2, b2, h2) = rows[j];
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (h1 * b2 - h2 * b1) / det;
                let y = (a1 * h2 - a2 * h1) / det;
                if rows.iter().all(|&(a, b, h)| a * x + b * y <= h + 1e-9) {
                    best = best.max(c.0 * x + c.1 * y);
                }
            }
        }
        prop_assert!((sol.value - best).abs() <= 1e-7 * (1.0 + best.abs()), "{} vs {}", sol.value, best);
    }
}

#[test]
fn refinement_is_monotone() {
    let weights = WeightSet::exact_half(4).unwrap();
    let values: Vec<f64> = [3usize, 9, 27, 81]
        .iter()
        .map(|&n| maximize_bound(&weights, &PGrid::chebyshev(n).unwrap().without_refinement(), 1e-9).unwrap().objective)
        .collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-8), "{values:?}");
}

#[test]
fn optimum_is_feasible() {
    let weights = WeightSet::majority(4).unwrap();
    let grid = PGrid::chebyshev(33).unwrap();
    let r = maximize_bound(&weights, &grid, 1e-8).unwrap();
    assert!(r.objective <= r.upper + 1e-12);
    let check = feasible(&DList::new(r.d.clone()).unwrap(), &weights, &grid, 1e-8).unwrap();
    assert!(check.feasible, "{check:?}");
}
