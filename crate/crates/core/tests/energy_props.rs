use proptest::prelude::*;
use quench_core::energy::{descent_gradient, evaluate};
use quench_core::{Grid, ProblemParams, ScalarField};

fn smooth_params() -> impl Strategy<Value = ProblemParams> {
    (2.0f64..4.0, 0.0f64..1.0, 0.1f64..3.0, 0.1f64..3.0, 0.05f64..0.5, 0.05f64..0.5).prop_map(
        |(p, gfrac, l1, l2, delta, eps)| {
            ProblemParams::new(p, gfrac * p / 2.0, l1, l2)
                .and_then(|pr| pr.with_regularization(delta, eps))
                .unwrap()
        },
    )
}

fn field(grid: Grid) -> impl Strategy<Value = ScalarField> {
    let n = grid.len();
    prop::collection::vec(-1.0f64..1.0, n).prop_map(move |v| ScalarField::new(grid.clone(), v).unwrap())
}

fn grids() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (4usize..12).prop_map(|n| Grid::interval(n, -1.0, 1.0).unwrap()),
        (3usize..7, 3usize..7).prop_map(|(a, b)| Grid::rectangle([a, b], [-1.0, 0.0], [1.0, 0.5]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences(
        pr in smooth_params(),
        u in grids().prop_flat_map(field),
    ) {
        let grad = descent_gradient(&u, &pr).unwrap();
        let g = u.grid().clone();
        let t = 1e-6;
        for k in 0..g.len() {
            if g.is_boundary(k) {
                prop_assert_eq!(grad.at(k), 0.0);
                continue;
            }
            let mut plus = u.values().to_vec();
            let mut minus = plus.clone();
            plus[k] += t;
            minus[k] -= t;
            let ep = evaluate(&ScalarField::new(g.clone(), plus).unwrap(), &pr).total;
            let em = evaluate(&ScalarField::new(g.clone(), minus).unwrap(), &pr).total;
            let fd = (ep - em) / (2.0 * t);
            prop_assert!(
                (fd - grad.at(k)).abs() <= 1e-5 * grad.at(k).abs().max(1.0),
                "node {}: fd {} vs analytic {}", k, fd, grad.at(k)
            );
        }
    }

    #[test]
    fn negation_swaps_the_phase_weights(
        pr in smooth_params(),
        u in grids().prop_flat_map(field),
    ) {
        let a = evaluate(&u, &pr);
        let b = evaluate(&u.scaled(-1.0), &pr.swapped_phases());
        prop_assert!((a.total - b.total).abs() <= 1e-12 * a.total.max(1.0));
        prop_assert!((a.potential_plus - b.potential_minus).abs() <= 1e-12 * a.total.max(1.0));
    }

    #[test]
    fn more_smoothing_never_raises_the_energy(
        pr in smooth_params(),
        u in grids().prop_flat_map(field),
        e1 in 0.0f64..0.3,
        e2 in 0.0f64..0.3,
    ) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let at = |eps: f64| {
            evaluate(&u, &pr.with_regularization(pr.grad_reg_delta, eps).unwrap()).total
        };
        prop_assert!(at(hi) <= at(lo) + 1e-14);
    }
}
