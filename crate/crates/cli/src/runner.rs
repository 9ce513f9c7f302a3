//! Verification runner: samples admissible points, evaluates every residual
//! row, and assembles the deterministic report.

use std::collections::BTreeMap;

use anyhow::{anyhow, Context, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqcurv_core::betaform::{check_closed_conformal, conformal_scalar_diagnostics, FormField};
use sqcurv_core::classify::{
    adjudicate_tau_exponent, deform, flag_curvature_formula, rigidity_bounds, classification_residuals,
    FamilyParams,
};
use sqcurv_core::finsler::SquareMetric;
use sqcurv_core::riemann::{sectional_constancy_residual, MetricField};

use crate::config::{row_order, Family, RunConfig};
use crate::report::{ConfigEcho, SampleRecord, Summary, VerificationReport, SCHEMA_VERSION};

const MAX_RETRIES: usize = 100;

/// A constructed `(alpha, beta)` pair ready for verification. Tests may build
/// one directly to inject perturbed or hand-rolled fields.
pub struct BuiltFamily {
    pub family: Family,
    pub alpha: MetricField,
    pub beta: FormField,
    pub params: Option<FamilyParams>,
}

pub fn build_family(config: &RunConfig) -> Result<BuiltFamily> {
    let (alpha, beta, params) = config.build_family()?;
    Ok(BuiltFamily {
        family: config.family,
        alpha,
        beta,
        params,
    })
}

fn sample_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm2: f64 = v.iter().map(|t| t * t).sum();
        if norm2 <= 1.0 {
            return v.iter().map(|t| t * radius).collect();
        }
    }
}

fn sample_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm2: f64 = v.iter().map(|t| t * t).sum();
        if norm2 > 1e-4 && norm2 <= 1.0 {
            let norm = norm2.sqrt();
            return v.iter().map(|t| t / norm).collect();
        }
    }
}

/// Draws admissible `(x, y)` pairs, counting retries spent on guard
/// violations.
fn sample_points(
    config: &RunConfig,
    metric: &SquareMetric,
    chart_radius: f64,
) -> Result<(Vec<(Vec<f64>, Vec<f64>)>, usize)> {
    let n = config.dim;
    let radius = config.radius * chart_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut points = Vec::with_capacity(config.samples);
    let mut resamples = 0usize;
    for _ in 0..config.samples {
        let mut accepted = None;
        for attempt in 0..MAX_RETRIES {
            let x = sample_ball(&mut rng, n, radius);
            let y = sample_sphere(&mut rng, n);
            if metric.admissible(&x, &y).is_ok() {
                accepted = Some((x, y));
                resamples += attempt;
                break;
            }
        }
        match accepted {
            Some(p) => points.push(p),
            None => {
                return Err(anyhow!(
                    "family inadmissible with these parameters: no admissible point \
                     after {MAX_RETRIES} retries"
                ))
            }
        }
    }
    Ok((points, resamples))
}

fn k_formula(built: &BuiltFamily, mu: Option<f64>, x: &[f64], s: f64) -> Option<f64> {
    match built.family {
        Family::EuclideanParallel | Family::SquareConstant => Some(0.0),
        Family::SpaceForm => mu,
        Family::SquareScalar => built.params.as_ref().map(|p| p.curvature_formula(x, s)),
        Family::Custom => None,
    }
}

/// Everything the point command prints: metric values, curvature by three
/// routes, and the per-sample residual rows.
pub struct PointEvaluation {
    pub f: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub b2: f64,
    pub k_hat: f64,
    pub k_fitted: f64,
    pub k_formula: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
}

/// Evaluates all per-sample rows at one `(x, y)`.
pub fn evaluate_point(
    built: &BuiltFamily,
    metric: &SquareMetric,
    mu: Option<f64>,
    x: &[f64],
    y: &[f64],
) -> Result<PointEvaluation> {
    let bundle = metric.curvature_bundle(x, y)?;
    let th = classification_residuals(&built.alpha, &built.beta, x, y)?;
    let spray_match = metric.spray_agreement(x, y)?;

    let k_hat = bundle.flag.k_hat;
    let k_fitted = flag_curvature_formula(
        th.lambda_hat,
        th.eta_hat,
        th.tau_hat,
        th.b2,
        bundle.data.alpha,
        bundle.data.beta,
        bundle.data.f,
    );
    let k_form = k_formula(built, mu, x, bundle.data.s);
    let k_scale = 1.0 + k_hat.abs();
    let mut k_consistency = (k_fitted - k_hat).abs() / k_scale;
    if let Some(kf) = k_form {
        k_consistency = k_consistency.max((kf - k_hat).abs() / k_scale);
    }

    let mut residuals = BTreeMap::new();
    residuals.insert("y1".to_string(), th.residual_shape);
    residuals.insert("y2".to_string(), th.residual_curvature);
    residuals.insert("y3".to_string(), th.residual_gradient);
    residuals.insert("qq".to_string(), th.residual_coupling);
    if let Some(w) = &bundle.weyl {
        let wscale = bundle.riemann.max_abs().max(1.0);
        residuals.insert("weyl".to_string(), w.max_abs() / wscale);
    }
    let dscale = bundle.spray.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    residuals.insert("douglas".to_string(), bundle.douglas.max_abs() / dscale);
    residuals.insert("scalar-flag".to_string(), bundle.flag.scalar_residual);
    residuals.insert("proj-flat".to_string(), bundle.projective_residual);
    residuals.insert("spray-match".to_string(), spray_match);
    residuals.insert("k-consistency".to_string(), k_consistency);

    Ok(PointEvaluation {
        f: bundle.data.f,
        alpha: bundle.data.alpha,
        beta: bundle.data.beta,
        s: bundle.data.s,
        b2: bundle.data.b2,
        k_hat,
        k_fitted,
        k_formula: k_form,
        residuals,
    })
}

pub fn run_verify(config: &RunConfig) -> Result<VerificationReport> {
    let built = build_family(config)?;
    run_verify_built(config, &built)
}

/// Runs the full residual stack for an already-built pair.
pub fn run_verify_built(config: &RunConfig, built: &BuiltFamily) -> Result<VerificationReport> {
    config.validate()?;
    let metric = SquareMetric::new(built.alpha.clone(), built.beta.clone())
        .context("constructing the square metric")?;
    let (points, resamples) = sample_points(config, &metric, built.alpha.chart_radius())?;
    let xs: Vec<Vec<f64>> = points.iter().map(|(x, _)| x.clone()).collect();

    let mut samples = Vec::with_capacity(points.len());
    let mut max_residuals: BTreeMap<String, f64> = BTreeMap::new();
    let mut k_hats = Vec::with_capacity(points.len());
    for (index, (x, y)) in points.iter().enumerate() {
        let eval = evaluate_point(built, &metric, config.mu, x, y)
            .with_context(|| format!("evaluating sample {index}"))?;
        for (name, value) in &eval.residuals {
            let slot = max_residuals.entry(name.clone()).or_insert(0.0);
            if *value > *slot {
                *slot = *value;
            }
        }
        k_hats.push(eval.k_hat);
        samples.push(SampleRecord {
            index,
            x: x.clone(),
            y: y.clone(),
            k_hat: eval.k_hat,
            k_formula: eval.k_formula,
            residuals: eval.residuals,
        });
    }

    // Deformation checks run once over the whole sample set.
    let (h, omega) = deform(&built.alpha, &built.beta);
    let mut mu_hat = None;
    if points.len() >= 8 {
        let (fit, residual) =
            sectional_constancy_residual(&h, &points).context("deformed curvature fit")?;
        mu_hat = Some(fit);
        max_residuals.insert("deform-constcurv".to_string(), residual);
    }
    let conf = check_closed_conformal(&omega, &h, &xs).context("deformed conformal check")?;
    let mut conformal_row = conf.conformal_residual.max(conf.closedness_residual);
    if let Some(params) = &built.params {
        for (x, c_hat) in xs.iter().zip(&conf.c_hat) {
            let c = params.c_factor(x);
            conformal_row = conformal_row.max((c_hat - c).abs() / (1.0 + c.abs()));
        }
    }
    max_residuals.insert("deform-conformal".to_string(), conformal_row);

    // Rigidity rows need the model family with mu > 0.
    let mut delta_mean = None;
    let mut delta_stddev = None;
    if let Some(params) = &built.params {
        if params.mu > 0.0 {
            let diag = conformal_scalar_diagnostics(&omega, &h, params.mu, &xs)
                .context("conformal scalar diagnostics")?;
            let deltas: Vec<f64> = diag.iter().map(|d| d.f.max(0.0).sqrt()).collect();
            let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
            let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
                / deltas.len() as f64;
            let stddev = var.sqrt();
            delta_mean = Some(mean);
            delta_stddev = Some(stddev);
            max_residuals.insert("delta-const".to_string(), stddev / (1.0 + mean.abs()));

            let (lo, hi) = rigidity_bounds(params.mu, mean).context("rigidity bounds")?;
            let mut outside = 0.0f64;
            for k in &k_hats {
                outside = outside.max(lo - k).max(k - hi);
            }
            max_residuals.insert("bounds".to_string(), outside.max(0.0));
        }
    }

    // Exponent adjudication for the closed-form coefficient of the model family.
    let mut tau_exponent = None;
    if let Some(params) = &built.params {
        let (verdict, best, _) =
            adjudicate_tau_exponent(params, &xs).context("exponent adjudication")?;
        tau_exponent = Some(verdict.as_str().to_string());
        max_residuals.insert("tau-exponent".to_string(), best);
    }

    let mut failed = Vec::new();
    for name in row_order() {
        if let Some(value) = max_residuals.get(name) {
            let tol = config
                .tolerances
                .get(name)
                .copied()
                .unwrap_or(f64::INFINITY);
            if *value > tol {
                failed.push(name.to_string());
            }
        }
    }
    let skipped: Vec<String> = row_order()
        .into_iter()
        .filter(|name| !max_residuals.contains_key(*name))
        .map(|name| name.to_string())
        .collect();
    let pass = failed.is_empty();

    let echo_a = match built.family {
        Family::EuclideanParallel => {
            if let FormField::Constant { coef } = &built.beta {
                Some(coef.clone())
            } else {
                config.a.clone()
            }
        }
        _ => config.a.clone(),
    };
    let report = VerificationReport {
        schema: SCHEMA_VERSION,
        config: ConfigEcho {
            family: built.family.as_str().to_string(),
            dim: config.dim,
            mu: config.mu,
            k: config.k,
            a: echo_a,
            sign: match built.family {
                Family::SquareConstant => {
                    Some(if config.sign_plus { "plus" } else { "minus" }.to_string())
                }
                _ => None,
            },
            samples: config.samples,
            seed: config.seed,
            radius: config.radius,
            tolerances: config.tolerances.clone(),
        },
        samples,
        summary: Summary {
            max_residuals,
            skipped,
            failed,
            mu_hat,
            delta_mean,
            delta_stddev,
            tau_exponent,
            resamples,
            pass,
        },
    };
    Ok(report)
}

/// Text rendering of a single-point evaluation.
pub fn format_point(eval: &PointEvaluation, x: &[f64], y: &[f64]) -> String {
    let csv = |v: &[f64]| {
        v.iter()
            .map(|t| format!("{t}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = String::new();
    out.push_str(&format!("point x=({}) direction y=({})\n", csv(x), csv(y)));
    out.push_str(&format!(
        "F = {:.12}  alpha = {:.12}  beta = {:.12}\n",
        eval.f, eval.alpha, eval.beta
    ));
    out.push_str(&format!("s = beta/alpha = {:.12}  b^2 = {:.12}\n", eval.s, eval.b2));
    out.push_str(&format!("K_hat     = {:.12}\n", eval.k_hat));
    out.push_str(&format!("K_fitted  = {:.12}\n", eval.k_fitted));
    match eval.k_formula {
        Some(k) => out.push_str(&format!("K_formula = {:.12}\n", k)),
        None => out.push_str("K_formula = (none for this family)\n"),
    }
    out.push_str("residuals:\n");
    for name in row_order() {
        if let Some(value) = eval.residuals.get(name) {
            out.push_str(&format!("  {name:<14} {value:.3e}\n"));
        }
    }
    out
}
