//! Acceptance gate: ten end-to-end criteria over the verification stack.
//! Each test prints one summary line; all tolerances are pinned here.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqcurv::config::{Family, RunConfig};
use sqcurv::runner::{run_verify, run_verify_built, BuiltFamily};
use sqcurv_core::betaform::{check_closed_conformal, FormField};
use sqcurv_core::classify::{
    alt_representation_residuals, constant_curvature_family, deform, rigidity_bounds,
    classification_residuals, FamilyParams,
};
use sqcurv_core::finsler::SquareMetric;
use sqcurv_core::numkit::{fd_partial, Jet, JetSpace, Scalar};
use sqcurv_core::riemann::{sectional_constancy_residual, space_form, MetricField};

fn model_params() -> FamilyParams {
    FamilyParams::new(1.0, 0.3, vec![0.1, 0.2, 0.05])
}

fn model_config(samples: usize, seed: u64) -> RunConfig {
    RunConfig {
        family: Family::SquareScalar,
        mu: Some(1.0),
        k: Some(0.3),
        a: Some(vec![0.1, 0.2, 0.05]),
        samples,
        seed,
        ..RunConfig::default()
    }
}

/// Rejection-samples admissible `(x, y)` pairs inside the scaled chart ball.
fn sample_admissible(
    metric: &SquareMetric,
    seed: u64,
    count: usize,
    radius_fraction: f64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = metric.dim();
    let radius = radius_fraction * metric.alpha().chart_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ynorm: f64 = y.iter().map(|v| v * v).sum::<f64>();
        if ynorm < 1e-2 {
            continue;
        }
        if metric.admissible(&x, &y).is_ok() {
            out.push((x, y));
        }
    }
    out
}

fn built_in_pairs() -> Vec<(&'static str, MetricField, FormField)> {
    let params = model_params();
    let (model_alpha, model_beta) = params.model_family();
    let (cc_alpha, cc_beta) = constant_curvature_family(&[0.2, 0.0, 0.0], true).unwrap();
    vec![
        (
            "euclidean-parallel",
            MetricField::Euclidean { dim: 3 },
            FormField::Constant {
                coef: vec![0.3, 0.1, 0.2],
            },
        ),
        ("space-form", space_form(3, -1.0), FormField::Zero { dim: 3 }),
        ("square-scalar", model_alpha, model_beta),
        ("square-constant", cc_alpha, cc_beta),
    ]
}

#[test]
fn criterion_01_spray_routes_agree_on_every_builtin_family() {
    for (name, alpha, beta) in built_in_pairs() {
        let metric = SquareMetric::new(alpha, beta).unwrap();
        let mut worst: f64 = 0.0;
        for (x, y) in sample_admissible(&metric, 101, 64, 0.4) {
            worst = worst.max(metric.spray_agreement(&x, &y).unwrap());
        }
        assert!(worst <= 1e-8, "{name}: spray disagreement {worst}");
    }
    println!("criterion 01 (spray route agreement <= 1e-8, 64 samples x 4 families): PASS");
}

#[test]
fn criterion_02_space_forms_have_vanishing_weyl_and_exact_curvature() {
    for mu in [-1.0, 0.0, 1.0] {
        let metric =
            SquareMetric::new(space_form(3, mu), FormField::Zero { dim: 3 }).unwrap();
        for (x, y) in sample_admissible(&metric, 202, 16, 0.4) {
            let bundle = metric.curvature_bundle(&x, &y).unwrap();
            let wscale = bundle.riemann.max_abs().max(1.0);
            let weyl = bundle.weyl.as_ref().unwrap().max_abs() / wscale;
            assert!(weyl < 1e-8, "mu={mu}: weyl residual {weyl}");
            let dev = (bundle.flag.k_hat - mu).abs();
            assert!(dev <= 1e-8, "mu={mu}: K_hat off by {dev}");
        }
    }
    println!("criterion 02 (space forms: weyl < 1e-8, K_hat = mu +- 1e-8): PASS");
}

#[test]
fn criterion_03_model_family_satisfies_the_classification_rows() {
    let params = model_params();
    let (alpha, beta) = params.model_family();
    let metric = SquareMetric::new(alpha.clone(), beta.clone()).unwrap();
    for (x, y) in sample_admissible(&metric, 303, 16, 0.4) {
        let th = classification_residuals(&alpha, &beta, &x, &y).unwrap();
        assert!(th.residual_shape < 1e-6, "y1 {}", th.residual_shape);
        assert!(th.residual_curvature < 1e-6, "y2 {}", th.residual_curvature);
        assert!(th.residual_gradient < 1e-6, "y3 {}", th.residual_gradient);
        assert!(th.residual_coupling < 1e-6, "qq {}", th.residual_coupling);
    }
    println!("criterion 03 (model family rows y1, y2, y3, qq < 1e-6 at 16 points): PASS");
}

#[test]
fn criterion_04_model_family_curvature_routes_and_projective_invariants() {
    let params = model_params();
    let (alpha, beta) = params.model_family();
    let metric = SquareMetric::new(alpha.clone(), beta.clone()).unwrap();
    for (x, y) in sample_admissible(&metric, 404, 16, 0.4) {
        let bundle = metric.curvature_bundle(&x, &y).unwrap();
        let th = classification_residuals(&alpha, &beta, &x, &y).unwrap();
        let k_hat = bundle.flag.k_hat;
        let k_fitted = sqcurv_core::classify::flag_curvature_formula(
            th.lambda_hat,
            th.eta_hat,
            th.tau_hat,
            th.b2,
            bundle.data.alpha,
            bundle.data.beta,
            bundle.data.f,
        );
        let k_closed = params.curvature_formula(&x, bundle.data.s);
        assert!((k_fitted - k_hat).abs() <= 1e-6, "fitted vs extracted");
        assert!((k_closed - k_hat).abs() <= 1e-6, "closed form vs extracted");

        let wscale = bundle.riemann.max_abs().max(1.0);
        assert!(bundle.weyl.as_ref().unwrap().max_abs() / wscale < 1e-6, "weyl");
        let dscale = bundle.spray.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        assert!(bundle.douglas.max_abs() / dscale < 1e-6, "douglas");
        assert!(bundle.projective_residual < 1e-7, "projective flatness");
    }
    println!(
        "criterion 04 (three curvature routes within 1e-6; douglas/weyl < 1e-6, \
         projective < 1e-7): PASS"
    );
}

#[test]
fn criterion_05_deformation_recovers_the_constant_curvature_generator() {
    let params = model_params();
    let (alpha, beta) = params.model_family();
    let metric = SquareMetric::new(alpha.clone(), beta.clone()).unwrap();
    let points = sample_admissible(&metric, 505, 16, 0.4);
    let (h, omega) = deform(&alpha, &beta);

    let (mu_hat, fit_residual) = sectional_constancy_residual(&h, &points).unwrap();
    assert!((mu_hat - 1.0).abs() <= 1e-6, "mu_hat {mu_hat}");
    assert!(fit_residual < 1e-6, "constancy residual {fit_residual}");

    let xs: Vec<Vec<f64>> = points.iter().map(|(x, _)| x.clone()).collect();
    let report = check_closed_conformal(&omega, &h, &xs).unwrap();
    assert!(report.conformal_residual < 1e-8, "conformal");
    assert!(report.closedness_residual < 1e-8, "closedness");
    for (x, c_hat) in xs.iter().zip(&report.c_hat) {
        let dev = (c_hat - params.c_factor(x)).abs();
        assert!(dev < 1e-8, "conformal factor off by {dev}");
    }
    println!(
        "criterion 05 (deformed pair: mu_hat = mu +- 1e-6, conformal factor \
         matches closed form < 1e-8): PASS"
    );
}

#[test]
fn criterion_06_constant_curvature_family_is_flat_with_the_expected_gauge() {
    for a in [vec![0.2, 0.0, 0.0], vec![0.0, 0.0, 0.0]] {
        let (alpha, beta) = constant_curvature_family(&a, true).unwrap();
        let metric = SquareMetric::new(alpha.clone(), beta.clone()).unwrap();
        let points = sample_admissible(&metric, 606, 32, 0.4);
        for (x, y) in &points {
            let bundle = metric.curvature_bundle(x, y).unwrap();
            assert!(bundle.flag.k_hat.abs() < 1e-7, "K_hat {}", bundle.flag.k_hat);
            let th = classification_residuals(&alpha, &beta, x, y).unwrap();
            let expected = -(5.0 + 4.0 * th.b2) * th.tau_hat * th.tau_hat;
            assert!(
                (th.lambda_hat - expected).abs() <= 1e-6,
                "lambda {} vs -(5+4b^2)tau^2 {}",
                th.lambda_hat,
                expected
            );
        }
        let (h, _) = deform(&alpha, &beta);
        let (mu_hat, residual) = sectional_constancy_residual(&h, &points).unwrap();
        assert!(residual < 1e-6, "deformed constancy {residual}");
        let anorm2: f64 = a.iter().map(|v| v * v).sum();
        let gauge = mu_hat * (1.0 - anorm2) * (1.0 - anorm2);
        assert!(
            (gauge + 1.0).abs() <= 1e-6,
            "normalization: mu_hat (1-|a|^2)^2 = {gauge}"
        );
    }
    println!(
        "criterion 06 (flat family: |K_hat| < 1e-7 at 32 points, lambda identity \
         and deformation gauge within 1e-6): PASS"
    );
}

#[test]
fn criterion_07_rigidity_quantities_are_constant_and_bounding() {
    let params = model_params();
    let (alpha, beta) = params.model_family();
    let metric = SquareMetric::new(alpha.clone(), beta.clone()).unwrap();
    let points = sample_admissible(&metric, 707, 16, 0.4);
    let xs: Vec<Vec<f64>> = points.iter().map(|(x, _)| x.clone()).collect();

    let (h, omega) = deform(&alpha, &beta);
    let diag =
        sqcurv_core::betaform::conformal_scalar_diagnostics(&omega, &h, params.mu, &xs).unwrap();
    let deltas: Vec<f64> = diag.iter().map(|d| d.f.sqrt()).collect();
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let var =
        deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / deltas.len() as f64;
    assert!(
        var.sqrt() < 1e-7 * (1.0 + mean.abs()),
        "delta drifts: stddev {}",
        var.sqrt()
    );
    let closed = params.delta_squared().unwrap().sqrt();
    assert!((mean - closed).abs() < 1e-8, "delta {mean} vs closed form {closed}");

    let (lo, hi) = rigidity_bounds(params.mu, mean).unwrap();
    for (x, y) in &points {
        let bundle = metric.curvature_bundle(x, y).unwrap();
        let k = bundle.flag.k_hat;
        assert!(
            k >= lo - 1e-8 && k <= hi + 1e-8,
            "K_hat {k} outside [{lo}, {hi}]"
        );
        let alt = alt_representation_residuals(&params, x, y).unwrap();
        assert!(alt.alpha_residual <= 1e-9, "alt alpha {}", alt.alpha_residual);
        assert!(alt.beta_residual <= 1e-9, "alt beta {}", alt.beta_residual);
        assert!(
            alt.curvature_residual <= 1e-9,
            "alt curvature {}",
            alt.curvature_residual
        );
    }
    println!(
        "criterion 07 (delta constant to 1e-7, K_hat inside rigidity bounds, \
         alternate representation <= 1e-9): PASS"
    );
}

#[test]
fn criterion_08_perturbed_form_must_fail_loudly() {
    let params = model_params();
    let (alpha, beta) = params.model_family();
    let built = BuiltFamily {
        family: Family::SquareScalar,
        alpha,
        beta: FormField::Perturbed {
            base: Box::new(beta),
            component: 0,
            factor: 1.05,
        },
        params: Some(params),
    };
    let config = model_config(16, 808);
    let report = run_verify_built(&config, &built).unwrap();
    assert!(!report.summary.pass, "perturbed run must fail");
    for row in ["y1", "weyl", "scalar-flag"] {
        let value = report.summary.max_residuals[row];
        assert!(value > 1e-3, "{row} stayed at {value} under a 5% perturbation");
    }
    println!(
        "criterion 08 (5% form perturbation: y1/weyl/scalar-flag > 1e-3 and \
         the run fails): PASS"
    );
}

#[test]
fn criterion_09_exponent_verdict_is_resolved_and_seed_stable() {
    let mut verdicts = Vec::new();
    for seed in [7, 1234] {
        let report = run_verify(&model_config(16, seed)).unwrap();
        assert!(report.summary.pass, "failed rows: {:?}", report.summary.failed);
        let best = report.summary.max_residuals["tau-exponent"];
        assert!(best < 1e-7, "best-match residual {best}");
        verdicts.push(report.summary.tau_exponent.clone().unwrap());
    }
    assert_eq!(verdicts[0], verdicts[1], "verdict changed across seeds");
    assert_eq!(verdicts[0], "sigma3");
    println!("criterion 09 (coefficient exponent verdict sigma3, stable across seeds): PASS");
}

/// Random composite of exp, sqrt, and rational pieces with positive
/// denominators; smooth on the sampled box.
fn composite<S: Scalar>(x: &[S], p: &[f64]) -> S {
    let mut bowl = S::one();
    for (i, xi) in x.iter().enumerate() {
        bowl += xi.mul_ref(xi).scale(p[i % 4].abs() + 0.1);
    }
    let root = bowl.sqrt();
    let expo = x[0].scale(p[4]).exp();
    let mut lin = S::zero();
    for (i, xi) in x.iter().enumerate() {
        lin += xi.scale(p[5 + (i % 3)]);
    }
    let rational = lin.mul_ref(&bowl.recip());
    root.mul_ref(&expo).scale(p[8]) + rational + lin.mul_ref(&lin).scale(p[9])
}

#[test]
fn criterion_10_jets_match_finite_differences_on_200_random_composites() {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for case in 0..200 {
        let p: Vec<f64> = (0..10).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.7..0.7)).collect();
        let mut kappa = vec![0usize; n];
        let order = rng.gen_range(1..=3usize);
        for _ in 0..order {
            kappa[rng.gen_range(0..n)] += 1;
        }
        let space = JetSpace::new(n, order).unwrap();
        let xj: Vec<Jet<f64>> = (0..n).map(|i| space.var(i, x[i])).collect();
        let jet = composite(&xj, &p).partial(&kappa);
        let fd = fd_partial(|z: &[f64]| composite(z, &p), &x, &kappa, 1.0).unwrap();
        let scale = jet.abs().max(fd.abs()).max(1.0);
        let tol = if order <= 2 { 1e-5 } else { 1e-3 };
        assert!(
            (jet - fd).abs() / scale <= tol,
            "case {case} order {order}: jet {jet} vs fd {fd}"
        );
    }
    println!(
        "criterion 10 (jet vs finite differences on 200 composites: 1e-5 at \
         order <= 2, 1e-3 at order 3): PASS"
    );
}
