//! Envelope, decomposition, and prox identities across the whole catalog:
//! members x step sizes x seeded points, with tolerances tiered by route
//! (closed forms at 1e-8, finite differences at the fd tier, grids at
//! the grid-step tier).

use proxverify_core::functions::{
    make_abs_l1, make_huber, make_quadratic, make_zero, CatalogFunction, Caps,
};
use proxverify_core::moreau::{
    build_conjugate_table, env_gradient_residual_with, moreau_decomposition_residual_with,
    moreau_env, prox, prox_auto, ProxMethod, ProxOpts, ProxRequest,
};
use proxverify_core::oracles::SampleSpec;
use proxverify_core::vecspace::{inner, SymOperator, Vector};

const GAMMAS: [f64; 3] = [0.5, 1.0, 2.0];

fn catalog() -> Vec<CatalogFunction> {
    vec![
        make_quadratic(SymOperator::identity(1), Vector::zeros(1)).unwrap(),
        make_quadratic(
            SymOperator::diagonal(&[2.0, 1.0]).unwrap(),
            Vector::new(vec![0.3, -0.5]).unwrap(),
        )
        .unwrap(),
        make_quadratic(
            SymOperator::diagonal(&[1.0]).unwrap(),
            Vector::new(vec![-2.0]).unwrap(),
        )
        .unwrap(),
        make_abs_l1(1).unwrap(),
        make_huber(1.0, 1).unwrap(),
        make_zero(2).unwrap(),
    ]
}

/// Prox through the most accurate route available for a member; tightened
/// descent so numeric prox error stays far below the inequality slacks.
fn accurate_prox(f: &CatalogFunction, gamma: f64, x: &Vector) -> Vector {
    let opts = ProxOpts {
        grad_tol: 1e-12,
        ..ProxOpts::default()
    };
    prox_auto(f, gamma, x, &opts).expect("catalog member has a prox route")
}

#[test]
fn decomposition_residual_across_catalog() {
    let opts = ProxOpts::default();
    for f in catalog() {
        let tol = if f.has(Caps::CONJ_CLOSED) { 1e-8 } else { 1e-4 };
        let table = build_conjugate_table(&f, &opts).unwrap();
        for &gamma in &GAMMAS {
            for x in SampleSpec::new(42, 50, f.box_radius()).points(f.dim()) {
                let r =
                    moreau_decomposition_residual_with(&f, gamma, &x, &opts, table.as_ref())
                        .unwrap();
                assert!(
                    r <= tol,
                    "{} gamma={gamma}: residual {r} > {tol} at {:?}",
                    f.name(),
                    x.entries()
                );
            }
        }
    }
}

#[test]
fn decomposition_spec_example_explicit() {
    // f = q at gamma = 1, x = 2: 1/4*4 + 1/4*4 - 1/2*4 = 0
    let f = make_quadratic(SymOperator::identity(1), Vector::zeros(1)).unwrap();
    let r = moreau_decomposition_residual_with(
        &f,
        1.0,
        &Vector::new(vec![2.0]).unwrap(),
        &ProxOpts::default(),
        None,
    )
    .unwrap();
    assert!(r < 1e-12);
}

#[test]
fn envelope_gradient_residuals_across_catalog() {
    let opts = ProxOpts::default();
    for f in catalog() {
        let closed_conj = f.has(Caps::CONJ_CLOSED);
        let table = build_conjugate_table(&f, &opts).unwrap();
        for &gamma in &GAMMAS {
            for x in SampleSpec::new(7, 20, 0.8 * f.box_radius()).points(f.dim()) {
                let (r1, r2) =
                    env_gradient_residual_with(&f, gamma, &x, &opts, table.as_ref()).unwrap();
                // fd route: absolute or relative fd tier against the map scale
                let scale = x.norm().max(1.0);
                let tol1 = (1e-5f64).max(1e-4 * scale);
                assert!(
                    r1 <= tol1,
                    "{} gamma={gamma}: fd residual {r1} > {tol1}",
                    f.name()
                );
                let tol2 = if closed_conj {
                    1e-8
                } else {
                    // tabulated conjugate-prox resolves points to one grid step
                    2.0 * gamma.max(1.0) * 1e-3
                };
                assert!(
                    r2 <= tol2,
                    "{} gamma={gamma}: conjugate-prox residual {r2} > {tol2}",
                    f.name()
                );
            }
        }
    }
}

#[test]
fn huber_is_envelope_of_l1_at_matching_index() {
    let opts = ProxOpts::default();
    let l1 = make_abs_l1(1).unwrap();
    for delta in [0.5, 1.0] {
        let huber = make_huber(delta, 1).unwrap();
        for x in SampleSpec::new(21, 50, 5.0).points(1) {
            let env = moreau_env(&l1, delta, &x, &opts).unwrap();
            assert!(
                (env - huber.value(&x)).abs() <= 1e-8,
                "delta={delta}: envelope {env} vs huber {}",
                huber.value(&x)
            );
        }
    }
}

#[test]
fn envelope_minorizes_across_catalog() {
    let opts = ProxOpts {
        grad_tol: 1e-12,
        ..ProxOpts::default()
    };
    for f in catalog() {
        for &gamma in &GAMMAS {
            for x in SampleSpec::new(3, 100, f.box_radius()).points(f.dim()) {
                let env = moreau_env(&f, gamma, &x, &opts).unwrap();
                assert!(
                    env <= f.value(&x) + 1e-12,
                    "{} gamma={gamma}: envelope {env} above value {}",
                    f.name(),
                    f.value(&x)
                );
            }
        }
    }
}

#[test]
fn prox_is_firmly_nonexpansive_across_catalog() {
    for f in catalog() {
        for &gamma in &GAMMAS {
            for (x, y) in SampleSpec::new(42, 200, f.box_radius()).pairs(f.dim()) {
                let px = accurate_prox(&f, gamma, &x);
                let py = accurate_prox(&f, gamma, &y);
                let diff = px.sub(&py);
                let lhs = inner(&x.sub(&y), &diff).unwrap();
                let rhs = inner(&diff, &diff).unwrap();
                assert!(
                    lhs >= rhs - 1e-9,
                    "{} gamma={gamma}: firm nonexpansiveness violated by {}",
                    f.name(),
                    rhs - lhs
                );
            }
        }
    }
}

#[test]
fn prox_routes_agree_pairwise() {
    let tight = ProxOpts {
        grad_tol: 1e-12,
        ..ProxOpts::default()
    };
    // closed vs inner descent on a quadratic
    let quad = make_quadratic(
        SymOperator::diagonal(&[2.0, 1.0]).unwrap(),
        Vector::new(vec![0.1, 0.2]).unwrap(),
    )
    .unwrap();
    for x in SampleSpec::new(5, 20, 3.0).points(2) {
        for &gamma in &GAMMAS {
            let closed = quad.prox_closed(gamma, &x).unwrap();
            let descent = prox(
                &ProxRequest {
                    f: &quad,
                    gamma,
                    x: &x,
                    method: ProxMethod::InnerDescent,
                },
                &tight,
            )
            .unwrap();
            assert!(closed.sub(&descent).norm() <= 1e-9);
        }
    }
    // closed vs grid on l1 (dim 1, step 5e-3)
    let l1 = make_abs_l1(1).unwrap();
    let step = 2.0 * l1.box_radius() / 2000.0;
    for x in SampleSpec::new(9, 20, 4.0).points(1) {
        for &gamma in &GAMMAS {
            let closed = l1.prox_closed(gamma, &x).unwrap();
            let grid = prox(
                &ProxRequest {
                    f: &l1,
                    gamma,
                    x: &x,
                    method: ProxMethod::Grid,
                },
                &ProxOpts::default(),
            )
            .unwrap();
            assert!(closed.sub(&grid).norm() <= 2.0 * step);
        }
    }
    // inner descent vs grid on huber (dim 1)
    let huber = make_huber(1.0, 1).unwrap();
    let step = 2.0 * huber.box_radius() / 2000.0;
    for x in SampleSpec::new(13, 20, 2.5).points(1) {
        for &gamma in &GAMMAS {
            let descent = prox(
                &ProxRequest {
                    f: &huber,
                    gamma,
                    x: &x,
                    method: ProxMethod::InnerDescent,
                },
                &tight,
            )
            .unwrap();
            let grid = prox(
                &ProxRequest {
                    f: &huber,
                    gamma,
                    x: &x,
                    method: ProxMethod::Grid,
                },
                &ProxOpts::default(),
            )
            .unwrap();
            assert!(descent.sub(&grid).norm() <= 2.0 * step);
        }
    }
}

#[test]
fn grid_prox_doubles_radius_when_boundary_hit() {
    // prox of zero is the identity; x outside the sampling box forces the
    // first scan onto the boundary and the doubled grid recovers x
    let f = make_zero(1).unwrap();
    let x = Vector::new(vec![4.0]).unwrap(); // box radius is 3
    let p = prox(
        &ProxRequest {
            f: &f,
            gamma: 1.0,
            x: &x,
            method: ProxMethod::Grid,
        },
        &ProxOpts::default(),
    )
    .unwrap();
    assert!((p[0] - 4.0).abs() <= 2.0 * (2.0 * 6.0 / 2000.0));
}
