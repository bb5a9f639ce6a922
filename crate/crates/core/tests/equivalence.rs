//! Suite-level behavior across the catalog and the beta sweep: verdict
//! coherence in both regimes, Bregman bounds, the second-order chain, and
//! the PSD operator inequality on random matrices.

use proxverify_core::functions::{make_huber, make_quadratic, CatalogFunction};
use proxverify_core::oracles::{Lcg64, SampleSpec};
use proxverify_core::vecspace::{SymOperator, Vector};
use proxverify_core::verify::{
    check_bregman_bounds, check_cocoercive, check_lipschitz, check_psd_cocoercivity,
    equivalence_suite, second_order_suite, CheckStatus, SuiteConfig,
};

fn smooth_members() -> Vec<CatalogFunction> {
    vec![
        make_quadratic(SymOperator::identity(2), Vector::zeros(2)).unwrap(),
        make_quadratic(
            SymOperator::diagonal(&[2.0, 1.0]).unwrap(),
            Vector::zeros(2),
        )
        .unwrap(),
        make_quadratic(
            SymOperator::diagonal(&[1.0]).unwrap(),
            Vector::new(vec![-2.0]).unwrap(),
        )
        .unwrap(),
        make_huber(1.0, 1).unwrap(),
    ]
}

const CORE_CONDITIONS: [&str; 4] = [
    "thm22.i.lipschitz",
    "thm22.ii.upper_convexity",
    "thm22.iii.conjugate_strong_convexity",
    "thm22.vi.cocoercivity",
];

#[test]
fn counterexample_neg_id() {
    let samples = SampleSpec::new(42, 200, 3.0);
    let neg_id = |x: &Vector| x.scale(-1.0);
    let (lip, empirical) = check_lipschitz(neg_id, 1.0, &samples, 2, "negid.lipschitz");
    assert!(lip.passed());
    assert!((empirical - 1.0).abs() < 1e-12);
    let coco = check_cocoercive(neg_id, 1.0, &samples, 2, "negid.cocoercive");
    assert_eq!(coco.status, CheckStatus::Fail);
    assert!(coco.witness.is_some());
}

#[test]
fn sweep_verdicts_are_coherent_in_both_regimes() {
    let cfg = SuiteConfig::default();
    for f in smooth_members() {
        let beta_star = f.lipschitz_beta().unwrap();
        for (factor, expect_pass) in [(0.75, false), (1.0, true), (1.5, true)] {
            let beta = factor * beta_star;
            let report = equivalence_suite(&f, beta, &cfg).unwrap();
            let verdicts: Vec<(&str, CheckStatus)> = CORE_CONDITIONS
                .iter()
                .map(|id| (*id, report.result(id).unwrap().status))
                .collect();
            for (id, status) in &verdicts {
                let want = if expect_pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                assert_eq!(
                    *status,
                    want,
                    "{} at beta = {factor} beta*: {id}",
                    f.name()
                );
                if !expect_pass {
                    assert!(
                        report.result(id).unwrap().witness.is_some(),
                        "{id} FAIL must carry a witness"
                    );
                }
            }
            assert!(
                report.result("thm22.coherence").unwrap().passed(),
                "{} at beta = {factor} beta*",
                f.name()
            );
        }
    }
}

#[test]
fn bregman_bounds_across_catalog() {
    for f in smooth_members() {
        let beta_star = f.lipschitz_beta().unwrap();
        let samples = SampleSpec::new(42, 500, f.box_radius());
        let (upper, lower) = check_bregman_bounds(&f, beta_star, &samples).unwrap();
        assert!(upper.passed(), "{} upper bound", f.name());
        match f.conjugate_domain_radius() {
            None => assert!(lower.passed(), "{} lower bound", f.name()),
            Some(_) => {
                assert_eq!(lower.status, CheckStatus::Skipped, "{}", f.name());
                assert!(lower.reason.is_some());
            }
        }
    }
}

#[test]
fn second_order_chain_agrees_with_first_order_across_sweep() {
    let cfg = SuiteConfig::default();
    for f in smooth_members() {
        let beta_star = f.lipschitz_beta().unwrap();
        for factor in [0.75, 1.0, 1.5] {
            let report = second_order_suite(&f, factor * beta_star, &cfg).unwrap();
            assert!(
                report.result("sec3.chain_consistency").unwrap().passed(),
                "{} at beta = {factor} beta*",
                f.name()
            );
            assert!(
                report
                    .result("sec3.cocoercivity_agreement")
                    .unwrap()
                    .passed(),
                "{} at beta = {factor} beta*",
                f.name()
            );
            // convexity of the member itself holds at every beta
            assert!(report.result("sec3.a.hessian_psd").unwrap().passed());
            let norm_check = report.result("sec3.b.norm_le_one").unwrap();
            if factor < 1.0 {
                assert_eq!(norm_check.status, CheckStatus::Fail, "{}", f.name());
            } else {
                assert!(norm_check.passed(), "{}", f.name());
            }
        }
    }
}

#[test]
fn psd_cocoercivity_on_random_matrices() {
    let mut rng = Lcg64::new(8080);
    for k in 0..20 {
        let dim = 1 + (k % 8);
        // PSD via B^T B
        let mut b = vec![vec![0.0; dim]; dim];
        for row in b.iter_mut() {
            for e in row.iter_mut() {
                *e = rng.next_coord(1.0);
            }
        }
        let mut a = vec![vec![0.0; dim]; dim];
        for (i, a_row) in a.iter_mut().enumerate() {
            for (j, e) in a_row.iter_mut().enumerate() {
                *e = (0..dim).map(|l| b[l][i] * b[l][j]).sum();
            }
        }
        let a = SymOperator::new(a).unwrap();
        let samples = SampleSpec::new(1000 + k as u64, 500, 2.0);
        let check = check_psd_cocoercivity(&a, &samples).unwrap();
        assert!(
            check.passed(),
            "matrix {k} (dim {dim}): residual {}",
            check.worst_residual
        );
    }
}
