//! Closed forms against independent brute-force references: the dense
//! eigensolver oracle for spectral routines, grid oracles for prox and
//! conjugate, finite differences for derivatives.

use nalgebra::DMatrix;
use proptest::prelude::*;

use proxverify_core::functions::{make_abs_l1, make_huber, make_quadratic, make_zero, Caps};
use proxverify_core::moreau::{prox, ProxMethod, ProxOpts, ProxRequest};
use proxverify_core::oracles::{
    fd_gradient, fd_hessian, grid_argmin, grid_conjugate, GridSpec, Lcg64, SampleSpec,
    FD_GRADIENT_STEP, FD_HESSIAN_STEP,
};
use proxverify_core::vecspace::{
    extreme_eigenvalues, half_sq_norm, op_norm, sandwich_check, SymOperator, Vector,
    POWER_ITERATION_TOL,
};

fn random_symmetric(rng: &mut Lcg64, dim: usize, scale: f64) -> SymOperator {
    let mut rows = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let e = rng.next_coord(scale);
            rows[i][j] = e;
            rows[j][i] = e;
        }
    }
    SymOperator::new(rows).unwrap()
}

fn eigenvalues_oracle(a: &SymOperator) -> Vec<f64> {
    let d = a.dim();
    let m = DMatrix::from_fn(d, d, |i, j| a.entry(i, j));
    let eig = m.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

#[test]
fn op_norm_matches_eigensolver_on_random_4x4() {
    let mut rng = Lcg64::new(2024);
    for _ in 0..50 {
        let a = random_symmetric(&mut rng, 4, 2.0);
        let vals = eigenvalues_oracle(&a);
        let expected = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let got = op_norm(&a, POWER_ITERATION_TOL).unwrap();
        assert!(
            (got - expected).abs() <= 1e-8 * expected.max(1.0),
            "power iteration {got} vs eigensolver {expected}"
        );
    }
}

#[test]
fn extreme_eigenvalues_match_eigensolver() {
    let mut rng = Lcg64::new(7);
    for dim in [2, 3, 5, 8] {
        for _ in 0..20 {
            let a = random_symmetric(&mut rng, dim, 1.5);
            let vals = eigenvalues_oracle(&a);
            let (lo, hi) = extreme_eigenvalues(&a, POWER_ITERATION_TOL).unwrap();
            assert!((lo - vals[0]).abs() <= 1e-7 * vals[0].abs().max(1.0));
            assert!((hi - vals[dim - 1]).abs() <= 1e-7 * vals[dim - 1].abs().max(1.0));
        }
    }
}

#[test]
fn sandwich_agrees_with_op_norm_on_100_random_matrices() {
    let mut rng = Lcg64::new(99);
    let mut checked = 0;
    for _ in 0..100 {
        let a = random_symmetric(&mut rng, 3, 0.8);
        let norm = op_norm(&a, POWER_ITERATION_TOL).unwrap();
        // skip matrices within power-iteration resolution of the boundary
        if (norm - 1.0).abs() < 1e-9 {
            continue;
        }
        assert_eq!(
            sandwich_check(&a, 1e-9).unwrap(),
            norm <= 1.0,
            "norm {norm}"
        );
        checked += 1;
    }
    assert!(checked >= 90);
}

#[test]
fn psd_check_on_catalog_quadratic_hessian() {
    let a = SymOperator::diagonal(&[2.0, 1.0]).unwrap();
    let f = make_quadratic(a, Vector::zeros(2)).unwrap();
    let x = Vector::new(vec![0.3, -0.4]).unwrap();
    let hess = f.hessian_at(&x).unwrap();
    assert!(proxverify_core::psd_check(&hess, 1e-9).unwrap());
    let vals = eigenvalues_oracle(&hess);
    assert!(vals[0] >= -1e-12);
}

#[test]
fn l1_prox_matches_grid_argmin_spec_points() {
    // grid over [-5, 5] with step 1e-3
    let f = make_abs_l1(1).unwrap();
    let grid = GridSpec::new(5.0, 10_001, 1).unwrap();
    for (x, expected) in [(0.5, 0.0), (3.0, 2.0)] {
        let xv = Vector::new(vec![x]).unwrap();
        let scan = grid_argmin(
            |y: &Vector| f.value(y) + half_sq_norm(&xv.sub(y)),
            &grid,
        );
        assert!(
            (scan.point[0] - expected).abs() <= 2.0 * grid.step(),
            "grid argmin {} vs {expected}",
            scan.point[0]
        );
        let closed = f.prox_closed(1.0, &xv).unwrap();
        assert!((closed[0] - scan.point[0]).abs() <= 2.0 * grid.step());
    }
}

#[test]
fn closed_prox_matches_grid_for_dim2_members() {
    let opts = ProxOpts {
        grid_points: 301,
        ..ProxOpts::default()
    };
    let members = [
        make_abs_l1(2).unwrap(),
        make_quadratic(
            SymOperator::diagonal(&[2.0, 1.0]).unwrap(),
            Vector::new(vec![0.5, -0.2]).unwrap(),
        )
        .unwrap(),
        make_zero(2).unwrap(),
    ];
    for f in &members {
        let step = 2.0 * f.box_radius() / 300.0;
        for x in SampleSpec::new(5, 10, 0.8 * f.box_radius()).points(2) {
            for gamma in [0.5, 1.0] {
                let closed = f.prox_closed(gamma, &x).unwrap();
                let req = ProxRequest {
                    f,
                    gamma,
                    x: &x,
                    method: ProxMethod::Grid,
                };
                let grid = prox(&req, &opts).unwrap();
                // per-axis argmin resolution
                let worst = closed
                    .entries()
                    .iter()
                    .zip(grid.entries())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(
                    worst <= 2.0 * step,
                    "{}: prox mismatch {worst} at gamma {gamma}",
                    f.name()
                );
            }
        }
    }
}

#[test]
fn closed_conjugate_matches_grid_conjugate_quadratics() {
    let members = [
        make_quadratic(SymOperator::identity(1), Vector::zeros(1)).unwrap(),
        make_quadratic(
            SymOperator::diagonal(&[2.0, 1.0]).unwrap(),
            Vector::zeros(2),
        )
        .unwrap(),
        make_quadratic(SymOperator::diagonal(&[1.0]).unwrap(), Vector::new(vec![-2.0]).unwrap())
            .unwrap(),
    ];
    for f in &members {
        let grid = GridSpec::new(f.box_radius(), 2001, f.dim()).unwrap();
        // u small enough that the argmax stays interior
        for u in SampleSpec::new(31, 20, 0.7).points(f.dim()) {
            let scan = grid_conjugate(|x: &Vector| f.value(x), &u, &grid).unwrap();
            assert!(!scan.boundary, "{}: boundary at {:?}", f.name(), u.entries());
            let closed = f.conjugate_value(&u).unwrap();
            assert!(
                (scan.value - closed).abs() <= 1e-4,
                "{}: grid {} vs closed {closed}",
                f.name(),
                scan.value
            );
        }
    }
}

#[test]
fn q_conjugate_value_spec_point() {
    let grid = GridSpec::new(5.0, 2001, 1).unwrap();
    let scan = grid_conjugate(half_sq_norm, &Vector::new(vec![1.0]).unwrap(), &grid).unwrap();
    assert!((scan.value - 0.5).abs() < 1e-5);
    assert!(!scan.boundary);
}

#[test]
fn fd_gradient_matches_analytic_for_all_smooth_members() {
    let members = [
        make_quadratic(SymOperator::identity(2), Vector::zeros(2)).unwrap(),
        make_quadratic(
            SymOperator::diagonal(&[2.0, 1.0]).unwrap(),
            Vector::new(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap(),
        make_huber(1.0, 2).unwrap(),
        make_huber(0.5, 2).unwrap(),
        make_zero(2).unwrap(),
    ];
    for f in &members {
        assert!(f.has(Caps::GRAD));
        for x in SampleSpec::new(11, 100, f.box_radius()).points(2) {
            let analytic = f.gradient(&x).unwrap();
            let fd = fd_gradient(|y: &Vector| f.value(y), &x, FD_GRADIENT_STEP).unwrap();
            let tol = 1e-5f64.max(1e-4 * analytic.norm());
            let err = fd.sub(&analytic).norm();
            assert!(err <= tol, "{}: fd error {err} > {tol}", f.name());
        }
    }
}

#[test]
fn fd_gradient_spec_examples() {
    // quadratic diag(2,1) + b = (1,0) at (1,1) has gradient (3,1)
    let f = make_quadratic(
        SymOperator::diagonal(&[2.0, 1.0]).unwrap(),
        Vector::new(vec![1.0, 0.0]).unwrap(),
    )
    .unwrap();
    let g = fd_gradient(
        |y: &Vector| f.value(y),
        &Vector::new(vec![1.0, 1.0]).unwrap(),
        FD_GRADIENT_STEP,
    )
    .unwrap();
    assert!((g[0] - 3.0).abs() < 1e-5);
    assert!((g[1] - 1.0).abs() < 1e-5);
    // huber(1) linear branch
    let h = make_huber(1.0, 1).unwrap();
    let g = fd_gradient(
        |y: &Vector| h.value(y),
        &Vector::new(vec![3.0]).unwrap(),
        FD_GRADIENT_STEP,
    )
    .unwrap();
    assert!((g[0] - 1.0).abs() < 1e-6);
}

#[test]
fn fd_hessian_matches_analytic_within_1e3() {
    let members = [
        make_quadratic(
            SymOperator::diagonal(&[2.0, 1.0]).unwrap(),
            Vector::zeros(2),
        )
        .unwrap(),
        make_zero(2).unwrap(),
    ];
    for f in &members {
        for x in SampleSpec::new(17, 30, f.box_radius()).points(2) {
            let analytic = f.hessian_at(&x).unwrap();
            let fd = fd_hessian(|y: &Vector| f.value(y), &x, FD_HESSIAN_STEP).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!(
                        (fd.operator.entry(i, j) - analytic.entry(i, j)).abs() <= 1e-3,
                        "{}: H[{i}][{j}]",
                        f.name()
                    );
                }
            }
        }
    }
}

#[test]
fn fd_hessian_huber_branches() {
    let f = make_huber(1.0, 1).unwrap();
    let at_zero = fd_hessian(|y: &Vector| f.value(y), &Vector::zeros(1), FD_HESSIAN_STEP).unwrap();
    assert!((at_zero.operator.entry(0, 0) - 1.0).abs() <= 1e-3);
    let at_three = fd_hessian(
        |y: &Vector| f.value(y),
        &Vector::new(vec![3.0]).unwrap(),
        FD_HESSIAN_STEP,
    )
    .unwrap();
    assert!(at_three.operator.entry(0, 0).abs() <= 1e-3);
}

#[test]
fn sample_spec_is_deterministic_across_runs() {
    let spec = SampleSpec::new(123456789, 100, 4.0);
    let run_a: Vec<Vec<u8>> = spec
        .points(3)
        .iter()
        .map(|p| p.entries().iter().flat_map(|c| c.to_le_bytes()).collect())
        .collect();
    let run_b: Vec<Vec<u8>> = spec
        .points(3)
        .iter()
        .map(|p| p.entries().iter().flat_map(|c| c.to_le_bytes()).collect())
        .collect();
    assert_eq!(run_a, run_b, "same SampleSpec must be bit-identical");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_is_exactly_symmetric(
        xs in proptest::collection::vec(-1e3f64..1e3, 1..8),
    ) {
        let ys: Vec<f64> = xs.iter().rev().map(|v| v * 0.37 + 1.0).collect();
        let x = Vector::new(xs).unwrap();
        let y = Vector::new(ys).unwrap();
        prop_assert_eq!(
            proxverify_core::inner(&x, &y).unwrap(),
            proxverify_core::inner(&y, &x).unwrap()
        );
    }

    #[test]
    fn soft_threshold_matches_componentwise_formula(
        xs in proptest::collection::vec(-10.0f64..10.0, 1..5),
        gamma in 0.01f64..3.0,
    ) {
        let f = make_abs_l1(xs.len()).unwrap();
        let x = Vector::new(xs.clone()).unwrap();
        let p = f.prox_closed(gamma, &x).unwrap();
        for (xi, pi) in xs.iter().zip(p.entries()) {
            let want = xi.signum() * (xi.abs() - gamma).max(0.0);
            prop_assert!((pi - want).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_prox_is_firmly_nonexpansive(
        seed in 0u64..1000,
        gamma in 0.1f64..3.0,
    ) {
        let f = make_abs_l1(2).unwrap();
        let mut rng = Lcg64::new(seed);
        let x = rng.vector(2, 5.0);
        let y = rng.vector(2, 5.0);
        let px = f.prox_closed(gamma, &x).unwrap();
        let py = f.prox_closed(gamma, &y).unwrap();
        let diff = px.sub(&py);
        let lhs = proxverify_core::inner(&x.sub(&y), &diff).unwrap();
        let rhs = proxverify_core::inner(&diff, &diff).unwrap();
        prop_assert!(lhs >= rhs - 1e-9);
    }

    #[test]
    fn op_norm_scales_absolutely(
        c in prop::sample::select(vec![-2.0f64, 0.5, 3.0]),
        seed in 0u64..500,
    ) {
        let mut rng = Lcg64::new(seed);
        let a = random_symmetric(&mut rng, 3, 1.0);
        let base = op_norm(&a, POWER_ITERATION_TOL).unwrap();
        let scaled = op_norm(&a.scale(c), POWER_ITERATION_TOL).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-8 * (c.abs() * base).max(1.0));
    }
}
