//! One-form fields paired with a Riemannian norm: covariant derivatives, the
//! symmetric/antisymmetric decomposition and conformal-factor diagnostics.

use crate::numkit::{antisymmetrize, symmetrize, Jet, JetSpace, Poly, Scalar, Tensor, Variance};
use crate::riemann::{self, MetricField};
use crate::{Error, Result};

/// One-form field `b_i(x)`, evaluable at any scalar type.
#[derive(Clone, Debug)]
pub enum FormField {
    /// Identically zero.
    Zero { dim: usize },
    /// Constant coefficients in the chart.
    Constant { coef: Vec<f64> },
    /// Polynomial coefficients `b_i(x)`.
    PolyForm { comps: Vec<Poly> },
    /// Closed conformal form `w_i = [(k - mu<a,x>) x_i + (1 + mu|x|^2) a_i] / (1 + mu|x|^2)^{3/2}`.
    Conformal { mu: f64, k: f64, a: Vec<f64> },
    /// Form part of the scalar-curvature model family:
    /// `b_i = (sigma/A) [a_i + ((k - mu<a,x>)/A) x_i]`.
    ModelBeta { mu: f64, k: f64, a: Vec<f64> },
    /// Form part of the canonical constant-curvature pair, with sign choice.
    ConstCurvBeta { a: Vec<f64>, plus: bool },
    /// `omega = sqrt(1 - b^2) beta` with `b^2` taken against `alpha`.
    Deformed { alpha: Box<MetricField>, beta: Box<FormField> },
    /// `beta = sqrt(1 + w^2) omega` with `w^2` taken against `h`.
    Undeformed { h: Box<MetricField>, omega: Box<FormField> },
    /// One component of `base` rescaled; breaks its structure on purpose.
    Perturbed { base: Box<FormField>, component: usize, factor: f64 },
}

impl FormField {
    /// Dimension of the underlying chart.
    pub fn dim(&self) -> usize {
        match self {
            FormField::Zero { dim } => *dim,
            FormField::Constant { coef } => coef.len(),
            FormField::PolyForm { comps } => comps.len(),
            FormField::Conformal { a, .. } => a.len(),
            FormField::ModelBeta { a, .. } => a.len(),
            FormField::ConstCurvBeta { a, .. } => a.len(),
            FormField::Deformed { beta, .. } => beta.dim(),
            FormField::Undeformed { omega, .. } => omega.dim(),
            FormField::Perturbed { base, .. } => base.dim(),
        }
    }

    /// Coefficients `b_i(x)` over any scalar.
    pub fn components<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.dim();
        assert_eq!(x.len(), n, "point dimension mismatch");
        match self {
            FormField::Zero { .. } => vec![S::zero(); n],
            FormField::Constant { coef } => coef.iter().map(|c| S::from_f64(*c)).collect(),
            FormField::PolyForm { comps } => comps.iter().map(|p| p.eval(x)).collect(),
            FormField::Conformal { mu, k, a } => {
                let big_a = riemann::one_plus_scaled_norm_sq(x, *mu);
                let p = S::from_f64(*k) - riemann::dot_const(a, x).scale(*mu);
                let scale = big_a.mul_ref(&big_a).mul_ref(&big_a).sqrt().recip();
                (0..n)
                    .map(|i| {
                        (p.mul_ref(&x[i]) + big_a.scale(a[i])).mul_ref(&scale)
                    })
                    .collect()
            }
            FormField::ModelBeta { mu, k, a } => {
                let big_a = riemann::one_plus_scaled_norm_sq(x, *mu);
                let p = S::from_f64(*k) - riemann::dot_const(a, x).scale(*mu);
                let sigma = riemann::model_sigma_sq(x, *mu, *k, a).sqrt();
                let inv_a = big_a.recip();
                let outer = sigma.mul_ref(&inv_a);
                let p_over_a = p.mul_ref(&inv_a);
                (0..n)
                    .map(|i| {
                        (S::from_f64(a[i]) + p_over_a.mul_ref(&x[i])).mul_ref(&outer)
                    })
                    .collect()
            }
            FormField::ConstCurvBeta { a, plus } => {
                let u = riemann::dot_const(a, x);
                let r = riemann::norm_sq(x);
                let one_plus_u = S::one() + u;
                let inv = (S::one() - r).recip();
                let inv2 = inv.mul_ref(&inv);
                let sign = if *plus { 1.0 } else { -1.0 };
                (0..n)
                    .map(|i| {
                        (one_plus_u.mul_ref(&inv).scale(a[i])
                            + one_plus_u.mul_ref(&one_plus_u).mul_ref(&inv2).mul_ref(&x[i]))
                        .scale(sign)
                    })
                    .collect()
            }
            FormField::Deformed { alpha, beta } => {
                let b2 = b_squared(alpha, beta, x);
                let f = (S::one() - b2).sqrt();
                beta.components(x).into_iter().map(|b| b.mul_ref(&f)).collect()
            }
            FormField::Undeformed { h, omega } => {
                let w2 = b_squared(h, omega, x);
                let f = (S::one() + w2).sqrt();
                omega.components(x).into_iter().map(|w| w.mul_ref(&f)).collect()
            }
            FormField::Perturbed { base, component, factor } => {
                let mut comps = base.components(x);
                comps[*component] = comps[*component].scale(*factor);
                comps
            }
        }
    }
}

/// Closed conformal form with the given parameters.
pub fn conformal_form(mu: f64, k: f64, a: Vec<f64>) -> FormField {
    FormField::Conformal { mu, k, a }
}

/// `b^2 = a^{ij} b_i b_j` at `x`, over any scalar.
pub fn b_squared<S: Scalar>(metric: &MetricField, form: &FormField, x: &[S]) -> S {
    let n = metric.dim();
    let inv = metric.inverse_components(x);
    let b = form.components(x);
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            acc += inv.at(&[i, j]).mul_ref(&b[i]).mul_ref(&b[j]);
        }
    }
    acc
}

/// Covariant derivative `b_{i|j} = d b_i / d x^j - G^k_{ij} b_k`, checked.
pub fn covariant_derivative(
    metric: &MetricField,
    form: &FormField,
    x: &[f64],
) -> Result<Tensor<f64>> {
    metric.admissible(x)?;
    if form.dim() != metric.dim() {
        return Err(Error::contract("form and metric dimension mismatch"));
    }
    Ok(covariant_derivative_at(metric, form, x))
}

/// Covariant derivative over any scalar; assumes admissibility.
pub fn covariant_derivative_at<S: Scalar>(
    metric: &MetricField,
    form: &FormField,
    x: &[S],
) -> Tensor<S> {
    let n = metric.dim();
    let space = JetSpace::new(n, 1).expect("dimension fits the jet engine");
    let xj: Vec<Jet<S>> = x
        .iter()
        .enumerate()
        .map(|(i, v)| space.var(i, v.clone()))
        .collect();
    let bj = form.components(&xj);
    let b0: Vec<S> = bj.iter().map(|j| j.value()).collect();
    let gamma = riemann::christoffel_at(metric, x);
    let grads: Vec<Vec<S>> = bj.iter().map(|j| j.gradient(n)).collect();
    Tensor::from_fn(n, &[Variance::Lower, Variance::Lower], |idx| {
        let (i, j) = (idx[0], idx[1]);
        let mut acc = grads[i][j].clone();
        for k in 0..n {
            acc -= gamma.at(&[k, i, j]).mul_ref(&b0[k]);
        }
        acc
    })
}

/// Full decomposition of a covariant derivative at one `(x, y)`.
#[derive(Clone, Debug)]
pub struct NablaBeta<S: Scalar = f64> {
    /// `b_{i|j}`.
    pub nabla_b: Tensor<S>,
    /// Symmetric part `r_ij`.
    pub r: Tensor<S>,
    /// Antisymmetric part `s_ij`.
    pub s: Tensor<S>,
    /// `r^i_j = a^{ik} r_kj`.
    pub r_up: Tensor<S>,
    /// `s^i_j = a^{ik} s_kj`.
    pub s_up: Tensor<S>,
    /// `q_ij = r_im s^m_j`.
    pub q: Tensor<S>,
    /// `t_ij = s_im s^m_j`.
    pub t: Tensor<S>,
    /// `b^i = a^{ij} b_j`.
    pub b_up: Vec<S>,
    /// `r_j = b^i r_ij`.
    pub r_vec: Vec<S>,
    /// `s_j = b^i s_ij`.
    pub s_vec: Vec<S>,
    /// `q_j = b^i q_ij`.
    pub q_vec: Vec<S>,
    /// `t_j = b^i t_ij`.
    pub t_vec: Vec<S>,
    /// `s^i_0 = s^i_j y^j`.
    pub s0_up: Vec<S>,
    /// `r_00 = r_ij y^i y^j`.
    pub r00: S,
    /// `r_0 = r_j y^j`.
    pub r0: S,
    /// `s_0 = s_j y^j`.
    pub s0: S,
    /// `b^2 = b^i b_i`.
    pub b2: S,
}

/// Decomposition with admissibility checked at the base point.
pub fn rs_decompose(
    metric: &MetricField,
    form: &FormField,
    x: &[f64],
    y: &[f64],
) -> Result<NablaBeta> {
    metric.admissible(x)?;
    if form.dim() != metric.dim() || y.len() != metric.dim() {
        return Err(Error::contract("dimension mismatch in decomposition"));
    }
    Ok(rs_decompose_at(metric, form, x, y))
}

/// Decomposition over any scalar; assumes admissibility.
pub fn rs_decompose_at<S: Scalar>(
    metric: &MetricField,
    form: &FormField,
    x: &[S],
    y: &[S],
) -> NablaBeta<S> {
    let n = metric.dim();
    let nabla_b = covariant_derivative_at(metric, form, x);
    let inv = metric.inverse_components(x);
    let b = form.components(x);
    let r = symmetrize(&nabla_b).expect("rank-2 by construction");
    let s = antisymmetrize(&nabla_b).expect("rank-2 by construction");
    let r_up = r.raise_index(0, &inv).expect("lower slot present");
    let s_up = s.raise_index(0, &inv).expect("lower slot present");
    let prod = |left: &Tensor<S>, up: &Tensor<S>| -> Tensor<S> {
        Tensor::from_fn(n, &[Variance::Lower, Variance::Lower], |idx| {
            let (i, j) = (idx[0], idx[1]);
            let mut acc = S::zero();
            for m in 0..n {
                acc += left.at(&[i, m]).mul_ref(up.at(&[m, j]));
            }
            acc
        })
    };
    let q = prod(&r, &s_up);
    let t = prod(&s, &s_up);
    let b_up: Vec<S> = (0..n)
        .map(|i| {
            let mut acc = S::zero();
            for j in 0..n {
                acc += inv.at(&[i, j]).mul_ref(&b[j]);
            }
            acc
        })
        .collect();
    let lower_with_b = |t: &Tensor<S>| -> Vec<S> {
        (0..n)
            .map(|j| {
                let mut acc = S::zero();
                for i in 0..n {
                    acc += b_up[i].mul_ref(t.at(&[i, j]));
                }
                acc
            })
            .collect()
    };
    let r_vec = lower_with_b(&r);
    let s_vec = lower_with_b(&s);
    let q_vec = lower_with_b(&q);
    let t_vec = lower_with_b(&t);
    let s0_up: Vec<S> = (0..n)
        .map(|i| {
            let mut acc = S::zero();
            for j in 0..n {
                acc += s_up.at(&[i, j]).mul_ref(&y[j]);
            }
            acc
        })
        .collect();
    let mut r00 = S::zero();
    for i in 0..n {
        for j in 0..n {
            r00 += r.at(&[i, j]).mul_ref(&y[i]).mul_ref(&y[j]);
        }
    }
    let dot = |v: &[S], w: &[S]| -> S {
        let mut acc = S::zero();
        for (a, b) in v.iter().zip(w) {
            acc += a.mul_ref(b);
        }
        acc
    };
    let r0 = dot(&r_vec, y);
    let s0 = dot(&s_vec, y);
    let b2 = dot(&b_up, &b);
    NablaBeta {
        nabla_b,
        r,
        s,
        r_up,
        s_up,
        q,
        t,
        b_up,
        r_vec,
        s_vec,
        q_vec,
        t_vec,
        s0_up,
        r00,
        r0,
        s0,
        b2,
    }
}

/// Aggregated diagnostics of how closely a form is closed and conformal.
#[derive(Clone, Debug)]
pub struct ClosedConformalReport {
    /// Fitted factor `c(x)` per sample point.
    pub c_hat: Vec<f64>,
    /// Worst relative deviation of `w_{i|j}` from `-2 c h_ij`.
    pub conformal_residual: f64,
    /// Worst relative antisymmetric part of `w_{i|j}`.
    pub closedness_residual: f64,
}

/// Fits `c(x)` from the trace of `w_{i|j}` and reports conformality and
/// closedness residuals across the sample points.
pub fn check_closed_conformal(
    omega: &FormField,
    h: &MetricField,
    xs: &[Vec<f64>],
) -> Result<ClosedConformalReport> {
    if xs.is_empty() {
        return Err(Error::contract("need at least one sample point"));
    }
    let n = h.dim();
    let mut c_hat = Vec::with_capacity(xs.len());
    let mut conformal_residual: f64 = 0.0;
    let mut closedness_residual: f64 = 0.0;
    for x in xs {
        let nabla = covariant_derivative(h, omega, x)?;
        let hc = h.components(x);
        let inv = h.inverse_components(x);
        let mut trace = 0.0;
        for i in 0..n {
            for j in 0..n {
                trace += inv.at(&[i, j]) * nabla.at(&[i, j]);
            }
        }
        let c = -trace / (2.0 * n as f64);
        c_hat.push(c);
        let model = hc.map(|e| -2.0 * c * e);
        let scale = nabla.max_abs().max(model.max_abs()).max(1.0);
        conformal_residual = conformal_residual.max(nabla.sub(&model).max_abs() / scale);
        let anti = antisymmetrize(&nabla).expect("rank-2 by construction");
        closedness_residual =
            closedness_residual.max(anti.max_abs() / nabla.max_abs().max(1.0));
    }
    Ok(ClosedConformalReport { c_hat, conformal_residual, closedness_residual })
}

/// The conformal factor `c(x) = -tr_h(w_{i|j}) / (2n)` as a scalar field.
pub fn conformal_factor_at<S: Scalar>(omega: &FormField, h: &MetricField, x: &[S]) -> S {
    let n = h.dim();
    let nabla = covariant_derivative_at(h, omega, x);
    let inv = h.inverse_components(x);
    let mut trace = S::zero();
    for i in 0..n {
        for j in 0..n {
            trace += inv.at(&[i, j]).mul_ref(nabla.at(&[i, j]));
        }
    }
    trace.scale(-0.5 / n as f64)
}

/// Pointwise diagnostics of the conformal factor of a closed conformal form.
#[derive(Clone, Debug)]
pub struct ConformalScalarsPoint {
    /// `c(x)`.
    pub c: f64,
    /// Gradient `c_i = dc/dx^i`.
    pub grad_c: Vec<f64>,
    /// `|grad c|_h^2 = h^{ij} c_i c_j`.
    pub grad_norm_sq: f64,
    /// `|grad c|_h^2 + mu c^2` (constant for the model family).
    pub f: f64,
    /// Relative size of `c_{i|j} + mu c h_ij`.
    pub hessian_residual: f64,
    /// Relative size of `(Laplacian c) + n mu c`.
    pub laplace_residual: f64,
}

/// Evaluates the conformal-factor diagnostics at each point.
pub fn conformal_scalar_diagnostics(
    omega: &FormField,
    h: &MetricField,
    mu: f64,
    xs: &[Vec<f64>],
) -> Result<Vec<ConformalScalarsPoint>> {
    let n = h.dim();
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        h.admissible(x)?;
        let space = JetSpace::new(n, 2)?;
        let xj: Vec<Jet<f64>> = (0..n).map(|i| space.var(i, x[i])).collect();
        let cj = conformal_factor_at(omega, h, &xj);
        let c = cj.value();
        let grad_c = cj.gradient(n);
        let gamma = riemann::christoffel_at(h, x);
        let hess = Tensor::from_fn(n, &[Variance::Lower, Variance::Lower], |idx| {
            let (i, j) = (idx[0], idx[1]);
            let mut kappa = vec![0usize; n];
            kappa[i] += 1;
            kappa[j] += 1;
            let mut acc = cj.partial(&kappa);
            for k in 0..n {
                acc -= gamma.at(&[k, i, j]) * grad_c[k];
            }
            acc
        });
        let hc = h.components(x);
        let inv = h.inverse_components(x);
        let mut grad_norm_sq = 0.0;
        let mut laplace = 0.0;
        for i in 0..n {
            for j in 0..n {
                grad_norm_sq += inv.at(&[i, j]) * grad_c[i] * grad_c[j];
                laplace += inv.at(&[i, j]) * hess.at(&[i, j]);
            }
        }
        let model = hc.map(|e| -mu * c * e);
        let scale = hess.max_abs().max(model.max_abs()).max(1.0);
        let hessian_residual = hess.sub(&model).max_abs() / scale;
        let laplace_residual =
            (laplace + n as f64 * mu * c).abs() / laplace.abs().max(1.0);
        out.push(ConformalScalarsPoint {
            c,
            grad_c,
            grad_norm_sq,
            f: grad_norm_sq + mu * c * c,
            hessian_residual,
            laplace_residual,
        });
    }
    Ok(out)
}
