//! The square metric `F = (alpha + beta)^2 / alpha`: fundamental tensor, two
//! independent spray routes, Riemann curvature and the projective invariants.

use crate::betaform::{self, FormField};
use crate::numkit::{self, linalg, Jet, JetSpace, Scalar, Tensor, Variance};
use crate::riemann::{self, MetricField, SprayCurvature, MAX_DIM};
use crate::{Error, Result};

/// Default guard on the `1 - s` and `1 + 2b^2 - 3s^2` denominators.
pub const DEFAULT_S_GUARD: f64 = 0.05;
/// Default guard on `1 + s`, which keeps `F` bounded away from zero.
pub const DEFAULT_F_GUARD: f64 = 0.05;

/// A square metric built from a Riemannian norm and a one-form.
#[derive(Clone, Debug)]
pub struct SquareMetric {
    alpha: MetricField,
    beta: FormField,
    eps_s: f64,
    eps_f: f64,
}

/// Pointwise scalars and the fundamental tensor at one `(x, y)`.
#[derive(Clone, Debug)]
pub struct FinslerData {
    /// `F(x, y)`.
    pub f: f64,
    /// `alpha(x, y)`.
    pub alpha: f64,
    /// `beta(x, y)`.
    pub beta: f64,
    /// `s = beta / alpha`.
    pub s: f64,
    /// `b^2 = a^{ij} b_i b_j`.
    pub b2: f64,
    /// Fundamental tensor `g_ij = (1/2) d^2 F^2 / dy^i dy^j`.
    pub g: Tensor<f64>,
}

/// Flag-curvature extraction from the Riemann curvature.
#[derive(Clone, Debug)]
pub struct FlagCurvature {
    /// `K = Ric / ((n - 1) F^2)`.
    pub k_hat: f64,
    /// Relative deviation of `R^i_k` from `K (F^2 d^i_k - y^i y_k)`.
    pub scalar_residual: f64,
}

/// Everything the verification pipeline needs at one `(x, y)`.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    /// Pointwise metric data.
    pub data: FinslerData,
    /// Spray coefficients `G^i` (closed-form route).
    pub spray: Vec<f64>,
    /// Riemann curvature `R^i_k`.
    pub riemann: Tensor<f64>,
    /// Ricci trace `R^m_m`.
    pub ricci: f64,
    /// Flag-curvature extraction.
    pub flag: FlagCurvature,
    /// Weyl projective invariant, absent for `n = 2` where it is trivial.
    pub weyl: Option<Tensor<f64>>,
    /// Douglas projective invariant.
    pub douglas: Tensor<f64>,
    /// Relative deviation of the spray from `G^i y^j = G^j y^i`.
    pub projective_residual: f64,
}

impl SquareMetric {
    /// Pairs a norm with a one-form; dimensions must agree and fit the engine.
    pub fn new(alpha: MetricField, beta: FormField) -> Result<Self> {
        let n = alpha.dim();
        if n != beta.dim() {
            return Err(Error::contract("norm and form dimension mismatch"));
        }
        if n < 2 || n > MAX_DIM {
            return Err(Error::contract(format!(
                "dimension {n} outside supported range 2..={MAX_DIM}"
            )));
        }
        Ok(SquareMetric {
            alpha,
            beta,
            eps_s: DEFAULT_S_GUARD,
            eps_f: DEFAULT_F_GUARD,
        })
    }

    /// Overrides the denominator guards.
    pub fn with_guards(mut self, eps_s: f64, eps_f: f64) -> Self {
        self.eps_s = eps_s;
        self.eps_f = eps_f;
        self
    }

    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    pub fn alpha(&self) -> &MetricField {
        &self.alpha
    }

    pub fn beta(&self) -> &FormField {
        &self.beta
    }

    /// `F^2 = (alpha + beta)^4 / alpha^2` over any scalar.
    pub fn f_squared_at<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let a2 = self.alpha.norm_sq(x, y);
        let al = a2.sqrt();
        let b = self.beta.components(x);
        let mut be = S::zero();
        for (bi, yi) in b.iter().zip(y) {
            be += bi.mul_ref(yi);
        }
        let q = al + be;
        let q2 = q.mul_ref(&q);
        q2.mul_ref(&q2).mul_ref(&a2.recip())
    }

    /// Chart membership, cone membership, denominator guards and positive
    /// definiteness of the fundamental tensor at `(x, y)`.
    pub fn admissible(&self, x: &[f64], y: &[f64]) -> Result<()> {
        let n = self.dim();
        self.alpha.admissible(x)?;
        if y.len() != n {
            return Err(Error::contract("direction dimension mismatch"));
        }
        if y.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
            return Err(Error::OutsideCone("zero direction".into()));
        }
        let b2: f64 = betaform::b_squared(&self.alpha, &self.beta, x);
        if b2 >= 1.0 - 1e-12 {
            return Err(Error::DeformationDomain(b2));
        }
        let a2 = self.alpha.norm_sq(x, y);
        let al = a2.sqrt();
        let b = self.beta.components(x);
        let be: f64 = b.iter().zip(y).map(|(bi, yi)| bi * yi).sum();
        let s = be / al;
        if 1.0 + s <= self.eps_f {
            return Err(Error::OutsideCone(format!(
                "1 + s = {:.3e} under the positivity guard",
                1.0 + s
            )));
        }
        if (1.0 - s).abs() <= self.eps_s || 1.0 + 2.0 * b2 - 3.0 * s * s <= self.eps_s {
            return Err(Error::OutsideCone(format!(
                "denominator guard hit at s = {s:.4}, b^2 = {b2:.4}"
            )));
        }
        let g = self.fundamental_tensor_at(x, y);
        for e in g.as_slice() {
            if !e.is_finite() {
                return Err(Error::DegenerateFundamentalTensor);
            }
        }
        if linalg::spd_cholesky(g.as_slice(), n).is_none() {
            return Err(Error::DegenerateFundamentalTensor);
        }
        Ok(())
    }

    /// Fundamental tensor over any scalar; assumes admissibility.
    pub fn fundamental_tensor_at<S: Scalar>(&self, x: &[S], y: &[S]) -> Tensor<S> {
        let n = self.dim();
        let space = JetSpace::new(n, 2).expect("dimension fits the jet engine");
        let xc: Vec<Jet<S>> = x.iter().map(|v| space.constant(v.clone())).collect();
        let yj: Vec<Jet<S>> = y
            .iter()
            .enumerate()
            .map(|(i, v)| space.var(i, v.clone()))
            .collect();
        let f2 = self.f_squared_at(&xc, &yj);
        Tensor::from_fn(n, &[Variance::Lower, Variance::Lower], |idx| {
            let mut kappa = vec![0usize; n];
            kappa[idx[0]] += 1;
            kappa[idx[1]] += 1;
            f2.partial(&kappa).scale(0.5)
        })
    }

    /// Fundamental tensor with checks.
    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
        self.admissible(x, y)?;
        Ok(self.fundamental_tensor_at(x, y))
    }

    /// Pointwise data with checks.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<FinslerData> {
        self.admissible(x, y)?;
        Ok(self.evaluate_unchecked(x, y))
    }

    fn evaluate_unchecked(&self, x: &[f64], y: &[f64]) -> FinslerData {
        let a2 = self.alpha.norm_sq(x, y);
        let al = a2.sqrt();
        let b = self.beta.components(x);
        let be: f64 = b.iter().zip(y).map(|(bi, yi)| bi * yi).sum();
        let s = be / al;
        let b2 = betaform::b_squared(&self.alpha, &self.beta, x);
        let f = (al + be) * (al + be) / al;
        let g = self.fundamental_tensor_at(x, y);
        FinslerData { f, alpha: al, beta: be, s, b2, g }
    }

    /// Definitional spray route, straight from the metric function:
    /// `G^i = (1/4) g^{il} { [F^2]_{x^k y^l} y^k - [F^2]_{x^l} }`.
    pub fn spray_generic_at<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let n = self.dim();
        // Pass A over (t, y'): phi = F^2(x + t y, y') carries the mixed
        // x-y derivatives contracted with y, plus the fundamental tensor.
        let sa = JetSpace::new(n + 1, 2).expect("dimension fits the jet engine");
        let t = sa.var(0, S::zero());
        let xa: Vec<Jet<S>> = (0..n)
            .map(|i| sa.constant(x[i].clone()) + t.clone() * sa.constant(y[i].clone()))
            .collect();
        let ya: Vec<Jet<S>> = (0..n).map(|l| sa.var(1 + l, y[l].clone())).collect();
        let phi = self.f_squared_at(&xa, &ya);
        let mut gmat = vec![S::zero(); n * n];
        for i in 0..n {
            for l in 0..n {
                let mut kappa = vec![0usize; n + 1];
                kappa[1 + i] += 1;
                kappa[1 + l] += 1;
                gmat[i * n + l] = phi.partial(&kappa).scale(0.5);
            }
        }
        // Pass B over x: plain first derivatives [F^2]_{x^l}.
        let sb = JetSpace::new(n, 1).expect("dimension fits the jet engine");
        let xb: Vec<Jet<S>> = x
            .iter()
            .enumerate()
            .map(|(i, v)| sb.var(i, v.clone()))
            .collect();
        let yb: Vec<Jet<S>> = y.iter().map(|v| sb.constant(v.clone())).collect();
        let f2b = self.f_squared_at(&xb, &yb);
        let grad_x = f2b.gradient(n);
        let rhs: Vec<S> = (0..n)
            .map(|l| {
                let mut kappa = vec![0usize; n + 1];
                kappa[0] += 1;
                kappa[1 + l] += 1;
                (phi.partial(&kappa) - grad_x[l].clone()).scale(0.25)
            })
            .collect();
        linalg::solve_spd(&gmat, n, &rhs)
    }

    /// Definitional spray with checks.
    pub fn spray_generic(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.admissible(x, y)?;
        numkit::clear_poison();
        let g = self.spray_generic_at(x, y);
        finish_spray(g)
    }

    /// Closed-form spray route:
    /// `G^i = G^i_a + Q alpha s^i_0
    ///      + [((1 - 2s) y^i / alpha + b^i) / (1 + 2b^2 - 3s^2)] (r_00 - 2 alpha Q s_0)`
    /// with `Q = 2 / (1 - s)`.
    pub fn spray_closed_form_at<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let n = self.dim();
        let g_alpha = riemann::spray_riemann_at(&self.alpha, x, y);
        let d = betaform::rs_decompose_at(&self.alpha, &self.beta, x, y);
        let a2 = self.alpha.norm_sq(x, y);
        let al = a2.sqrt();
        let inv_al = al.recip();
        let b = self.beta.components(x);
        let mut be = S::zero();
        for (bi, yi) in b.iter().zip(y) {
            be += bi.mul_ref(yi);
        }
        let s = be.mul_ref(&inv_al);
        let q = (S::one() - s.clone()).recip().scale(2.0);
        let denom = S::one() + d.b2.scale(2.0) - s.mul_ref(&s).scale(3.0);
        let bracket = d.r00.clone() - al.mul_ref(&q).mul_ref(&d.s0).scale(2.0);
        let bracket_over_denom = bracket.mul_ref(&denom.recip());
        let one_minus_2s_over_al = (S::one() - s.scale(2.0)).mul_ref(&inv_al);
        let q_al = q.mul_ref(&al);
        (0..n)
            .map(|i| {
                let coef = one_minus_2s_over_al.mul_ref(&y[i]) + d.b_up[i].clone();
                g_alpha[i].clone()
                    + q_al.mul_ref(&d.s0_up[i])
                    + coef.mul_ref(&bracket_over_denom)
            })
            .collect()
    }

    /// Closed-form spray with checks.
    pub fn spray_closed_form(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.admissible(x, y)?;
        numkit::clear_poison();
        let g = self.spray_closed_form_at(x, y);
        finish_spray(g)
    }

    /// Relative disagreement between the two spray routes at one `(x, y)`.
    pub fn spray_agreement(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let g1 = self.spray_generic(x, y)?;
        let g2 = self.spray_closed_form(x, y)?;
        let mut scale: f64 = 1.0;
        for v in g1.iter().chain(&g2) {
            scale = scale.max(v.abs());
        }
        let diff = g1
            .iter()
            .zip(&g2)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(diff / scale)
    }

    /// Riemann curvature `R^i_k` of the square metric via the shared assembly,
    /// fed by the closed-form spray.
    pub fn riemann_curvature(&self, x: &[f64], y: &[f64]) -> Result<SprayCurvature> {
        self.admissible(x, y)?;
        riemann::riemann_from_spray(
            self.dim(),
            x,
            y,
            |xj, yj| self.spray_closed_form_at(xj, yj),
            false,
        )
    }

    /// Weyl projective invariant `W^i_k`; requires `n >= 3`.
    pub fn weyl_curvature(&self, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
        self.admissible(x, y)?;
        let sc = riemann::riemann_from_spray(
            self.dim(),
            x,
            y,
            |xj, yj| self.spray_closed_form_at(xj, yj),
            true,
        )?;
        weyl_from_curvature(&sc, y)
    }

    /// Douglas projective invariant
    /// `D^i_{hjk} = d^3/dy^h dy^j dy^k [G^i - (1/(n+1)) (dG^m/dy^m) y^i]`.
    ///
    /// The spray's y-divergence is carried by a nested first-order jet so the
    /// outer differentiation stays within third order.
    pub fn douglas_curvature(&self, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
        self.admissible(x, y)?;
        numkit::clear_poison();
        let n = self.dim();
        let outer = JetSpace::new(n, 3)?;
        let inner = JetSpace::new(n, 1)?;
        let xc: Vec<Jet<Jet<f64>>> = x
            .iter()
            .map(|v| outer.constant(inner.constant(*v)))
            .collect();
        let yy: Vec<Jet<Jet<f64>>> = (0..n)
            .map(|j| outer.var(j, inner.var(j, y[j])))
            .collect();
        let gg = self.spray_closed_form_at(&xc, &yy);
        let mut gdiv: Jet<f64> = Jet::constant(0.0);
        for m in 0..n {
            gdiv += gg[m].map_coefficients(|c| c.gradient(n)[m].clone());
        }
        let scale = -1.0 / (n as f64 + 1.0);
        let youter: Vec<Jet<f64>> = (0..n).map(|i| outer.var(i, y[i])).collect();
        let proj: Vec<Jet<f64>> = (0..n)
            .map(|i| {
                gg[i].map_coefficients(|c| c.value())
                    + gdiv.mul_ref(&youter[i]).scale(scale)
            })
            .collect();
        let douglas = Tensor::from_fn(
            n,
            &[Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower],
            |idx| {
                let mut kappa = vec![0usize; n];
                kappa[idx[1]] += 1;
                kappa[idx[2]] += 1;
                kappa[idx[3]] += 1;
                proj[idx[0]].partial(&kappa)
            },
        );
        if let Some(site) = numkit::take_poison() {
            return Err(Error::SingularEvaluation(site));
        }
        for e in douglas.as_slice() {
            if !e.is_finite() {
                return Err(Error::StencilFailure);
            }
        }
        Ok(douglas)
    }

    /// Flag curvature and the scalar-model residual from assembled curvature.
    pub fn flag_curvature(
        &self,
        data: &FinslerData,
        sc: &SprayCurvature,
        y: &[f64],
    ) -> FlagCurvature {
        let n = self.dim();
        let f2 = data.f * data.f;
        let k_hat = sc.ricci() / ((n - 1) as f64 * f2);
        let ylow: Vec<f64> = (0..n)
            .map(|k| (0..n).map(|m| data.g.at(&[k, m]) * y[m]).sum())
            .collect();
        let model = Tensor::from_fn(n, &[Variance::Upper, Variance::Lower], |idx| {
            let (i, k) = (idx[0], idx[1]);
            k_hat * (if i == k { f2 } else { 0.0 } - y[i] * ylow[k])
        });
        let scale = sc.riemann.max_abs().max(model.max_abs()).max(1.0);
        FlagCurvature {
            k_hat,
            scalar_residual: sc.riemann.sub(&model).max_abs() / scale,
        }
    }

    /// Everything at one `(x, y)`: metric data, spray, curvature, flag
    /// extraction, Weyl (for `n >= 3`), Douglas, projective residual.
    pub fn curvature_bundle(&self, x: &[f64], y: &[f64]) -> Result<CurvatureBundle> {
        self.admissible(x, y)?;
        let n = self.dim();
        let data = self.evaluate_unchecked(x, y);
        let with_weyl = n >= 3;
        let sc = riemann::riemann_from_spray(
            n,
            x,
            y,
            |xj, yj| self.spray_closed_form_at(xj, yj),
            with_weyl,
        )?;
        let weyl = if with_weyl { Some(weyl_from_curvature(&sc, y)?) } else { None };
        let douglas = self.douglas_curvature(x, y)?;
        let flag = self.flag_curvature(&data, &sc, y);
        let projective_residual = projective_flatness_residual(&sc.spray, y);
        Ok(CurvatureBundle {
            data,
            ricci: sc.ricci(),
            spray: sc.spray,
            riemann: sc.riemann,
            flag,
            weyl,
            douglas,
            projective_residual,
        })
    }
}

fn finish_spray(g: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(site) = numkit::take_poison() {
        return Err(Error::SingularEvaluation(site));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::StencilFailure);
    }
    Ok(g)
}

/// Weyl invariant assembled from curvature with y-derivatives present.
fn weyl_from_curvature(sc: &SprayCurvature, y: &[f64]) -> Result<Tensor<f64>> {
    let n = sc.riemann.dim();
    if n < 3 {
        return Err(Error::contract("the Weyl invariant needs dimension >= 3"));
    }
    let ry = sc
        .riemann_y
        .as_ref()
        .ok_or_else(|| Error::contract("curvature was assembled without y-derivatives"))?;
    let inv_nm1 = 1.0 / (n - 1) as f64;
    let r_scalar = sc.ricci() * inv_nm1;
    let r_scalar_y: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|m| ry.at(&[m, m, k])).sum::<f64>() * inv_nm1)
        .collect();
    let inv_np1 = 1.0 / (n + 1) as f64;
    Ok(Tensor::from_fn(n, &[Variance::Upper, Variance::Lower], |idx| {
        let (i, k) = (idx[0], idx[1]);
        let a_ik = sc.riemann.at(&[i, k]) - if i == k { r_scalar } else { 0.0 };
        let div_a_k: f64 =
            (0..n).map(|m| ry.at(&[m, k, m])).sum::<f64>() - r_scalar_y[k];
        a_ik - inv_np1 * div_a_k * y[i]
    }))
}

/// Worst relative size of `G^i y^j - G^j y^i` over index pairs.
pub fn projective_flatness_residual(spray: &[f64], y: &[f64]) -> f64 {
    let n = spray.len();
    let gmax = spray.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = (gmax * ymax).max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((spray[i] * y[j] - spray[j] * y[i]).abs());
        }
    }
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Poly;
    use rand::{Rng, SeedableRng};

    fn model_metric() -> SquareMetric {
        let (mu, k) = (1.0, 0.3);
        let a = vec![0.1, 0.2, 0.05];
        SquareMetric::new(
            MetricField::ModelAlpha { dim: 3, mu, k, a: a.clone() },
            FormField::ModelBeta { mu, k, a },
        )
        .unwrap()
    }

    fn generic_metric() -> SquareMetric {
        let alpha = riemann::space_form(3, 0.5);
        let beta = FormField::PolyForm {
            comps: vec![
                Poly::zero(3).term(0.15, &[0, 0, 0]).term(0.1, &[0, 1, 0]),
                Poly::zero(3).term(-0.1, &[1, 0, 0]).term(0.05, &[0, 0, 1]),
                Poly::zero(3).term(0.08, &[0, 0, 2]),
            ],
        };
        SquareMetric::new(alpha, beta).unwrap()
    }

    #[test]
    fn value_matches_the_definition() {
        let m = SquareMetric::new(
            MetricField::Euclidean { dim: 2 },
            FormField::Constant { coef: vec![0.3, 0.0] },
        )
        .unwrap();
        let data = m.evaluate(&[0.2, -0.4], &[3.0, 4.0]).unwrap();
        // alpha = 5, beta = 0.9, F = 5.9^2 / 5.
        assert!((data.f - 5.9 * 5.9 / 5.0).abs() < 1e-12);
        assert!((data.alpha - 5.0).abs() < 1e-12);
        assert!((data.s - 0.18).abs() < 1e-12);
        assert!((data.b2 - 0.09).abs() < 1e-12);
    }

    #[test]
    fn fundamental_tensor_reproduces_f_squared() {
        // F^2 is 2-homogeneous in y, so g_ij y^i y^j = F^2.
        let m = generic_metric();
        let x = vec![0.2, -0.1, 0.15];
        let y = vec![0.7, 0.4, -0.3];
        let data = m.evaluate(&x, &y).unwrap();
        let mut quad = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                quad += data.g.at(&[i, j]) * y[i] * y[j];
            }
        }
        assert!((quad - data.f * data.f).abs() < 1e-10);
    }

    #[test]
    fn zero_form_reduces_to_the_riemannian_case() {
        let alpha = riemann::space_form(3, -0.5);
        let m = SquareMetric::new(alpha.clone(), FormField::Zero { dim: 3 }).unwrap();
        let x = vec![0.2, 0.1, -0.3];
        let y = vec![0.5, -0.6, 0.4];
        let data = m.evaluate(&x, &y).unwrap();
        let a2 = alpha.norm_sq(&x, &y);
        assert!((data.f - a2.sqrt()).abs() < 1e-12);
        // Fundamental tensor equals the metric tensor.
        let comp = alpha.components(&x);
        for i in 0..3 {
            for j in 0..3 {
                assert!((data.g.at(&[i, j]) - comp.at(&[i, j])).abs() < 1e-10);
            }
        }
        // Both spray routes match the quadratic geodesic spray.
        let gq = riemann::spray_riemann(&alpha, &x, &y).unwrap();
        let g1 = m.spray_generic(&x, &y).unwrap();
        let g2 = m.spray_closed_form(&x, &y).unwrap();
        for i in 0..3 {
            assert!((g1[i] - gq[i]).abs() < 1e-9, "generic {} vs {}", g1[i], gq[i]);
            assert!((g2[i] - gq[i]).abs() < 1e-12, "closed {} vs {}", g2[i], gq[i]);
        }
        // Curvature equals the Riemannian curvature.
        let sc = m.riemann_curvature(&x, &y).unwrap();
        let rbar = riemann::riemann_curvature_alpha(&alpha, &x, &y).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert!((sc.riemann.at(&[i, k]) - rbar.at(&[i, k])).abs() < 5e-10);
            }
        }
    }

    #[test]
    fn spray_routes_agree_on_generic_data() {
        let m = generic_metric();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let mut checked = 0;
        while checked < 12 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if m.admissible(&x, &y).is_err() {
                continue;
            }
            let r = m.spray_agreement(&x, &y).unwrap();
            assert!(r < 1e-9, "spray routes disagree by {r}");
            checked += 1;
        }
    }

    #[test]
    fn spray_is_positively_2_homogeneous() {
        let m = model_metric();
        let x = vec![0.1, -0.15, 0.2];
        let y = vec![0.6, 0.3, -0.5];
        let lam = 1.7;
        let y2: Vec<f64> = y.iter().map(|v| lam * v).collect();
        let g = m.spray_closed_form(&x, &y).unwrap();
        let gl = m.spray_closed_form(&x, &y2).unwrap();
        for i in 0..3 {
            assert!((gl[i] - lam * lam * g[i]).abs() < 1e-9 * (1.0 + g[i].abs()));
        }
        let g1 = m.spray_generic(&x, &y).unwrap();
        let g1l = m.spray_generic(&x, &y2).unwrap();
        for i in 0..3 {
            assert!((g1l[i] - lam * lam * g1[i]).abs() < 1e-8 * (1.0 + g1[i].abs()));
        }
    }

    #[test]
    fn parallel_form_on_flat_space_is_fully_flat() {
        let m = SquareMetric::new(
            MetricField::Euclidean { dim: 3 },
            FormField::Constant { coef: vec![0.4, 0.1, -0.2] },
        )
        .unwrap();
        let x = vec![0.3, -0.2, 0.5];
        let y = vec![0.8, 0.2, -0.4];
        let bundle = m.curvature_bundle(&x, &y).unwrap();
        assert!(bundle.spray.iter().all(|v| v.abs() < 1e-12));
        assert!(bundle.riemann.max_abs() < 1e-12);
        assert!(bundle.flag.k_hat.abs() < 1e-12);
        assert!(bundle.flag.scalar_residual < 1e-12);
        assert!(bundle.weyl.unwrap().max_abs() < 1e-12);
        assert!(bundle.douglas.max_abs() < 1e-12);
        assert!(bundle.projective_residual < 1e-12);
    }

    #[test]
    fn curvature_annihilates_the_pole_direction() {
        let m = model_metric();
        let x = vec![0.12, -0.08, 0.2];
        let y = vec![0.5, 0.45, -0.6];
        let sc = m.riemann_curvature(&x, &y).unwrap();
        for i in 0..3 {
            let pole: f64 = (0..3).map(|k| sc.riemann.at(&[i, k]) * y[k]).sum();
            let scale = sc.riemann.max_abs().max(1.0);
            assert!(pole.abs() / scale < 1e-9, "R^i_k y^k = {pole}");
        }
    }

    #[test]
    fn model_family_is_scalar_projectively_flat() {
        let m = model_metric();
        let x = vec![0.15, -0.1, 0.12];
        let y = vec![0.5, 0.4, -0.35];
        let bundle = m.curvature_bundle(&x, &y).unwrap();
        assert!(
            bundle.flag.scalar_residual < 1e-8,
            "scalar residual {}",
            bundle.flag.scalar_residual
        );
        let weyl = bundle.weyl.as_ref().unwrap();
        let wscale = bundle.riemann.max_abs().max(1.0);
        assert!(weyl.max_abs() / wscale < 1e-8, "weyl {}", weyl.max_abs());
        let dscale = bundle.spray.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        assert!(
            bundle.douglas.max_abs() / dscale < 1e-7,
            "douglas {}",
            bundle.douglas.max_abs()
        );
        assert!(
            bundle.projective_residual < 1e-9,
            "projective {}",
            bundle.projective_residual
        );
    }

    #[test]
    fn generic_pair_has_nonvanishing_douglas_tensor() {
        let m = generic_metric();
        let x = vec![0.25, -0.2, 0.15];
        let y = vec![0.6, 0.35, -0.4];
        let d = m.douglas_curvature(&x, &y).unwrap();
        assert!(d.max_abs() > 1e-3, "douglas unexpectedly small {}", d.max_abs());
    }

    #[test]
    fn douglas_matches_a_finite_difference_route() {
        // Independent check of the nested-divergence construction: third
        // y-derivatives of the projected spray by central differences.
        let m = generic_metric();
        let x = vec![0.2, -0.1, 0.1];
        let y = vec![0.7, 0.3, -0.45];
        let n = 3;
        let proj = |i: usize, yy: &[f64]| -> f64 {
            let sp = JetSpace::new(n, 1).unwrap();
            let xc: Vec<Jet<f64>> = x.iter().map(|v| sp.constant(*v)).collect();
            let yj: Vec<Jet<f64>> = (0..n).map(|j| sp.var(j, yy[j])).collect();
            let g = m.spray_closed_form_at(&xc, &yj);
            let div: f64 = (0..n).map(|mm| g[mm].gradient(n)[mm]).sum();
            g[i].value() - div * yy[i] / (n as f64 + 1.0)
        };
        let d = m.douglas_curvature(&x, &y).unwrap();
        for i in 0..n {
            for h in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut kappa = vec![0usize; n];
                        kappa[h] += 1;
                        kappa[j] += 1;
                        kappa[k] += 1;
                        let fd = crate::numkit::fd_partial(
                            |yy: &[f64]| proj(i, yy),
                            &y,
                            &kappa,
                            1.0,
                        )
                        .unwrap();
                        let scale = d.max_abs().max(1.0);
                        assert!(
                            (d.at(&[i, h, j, k]) - fd).abs() / scale < 2e-4,
                            "D^{i}_{h}{j}{k} = {} vs fd {fd}",
                            d.at(&[i, h, j, k])
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn admissibility_rejects_bad_directions() {
        let m = SquareMetric::new(
            MetricField::Euclidean { dim: 2 },
            FormField::Constant { coef: vec![0.98, 0.0] },
        )
        .unwrap();
        // y pointing against b drives s toward -1 and breaks the guards.
        assert!(matches!(
            m.admissible(&[0.0, 0.0], &[-1.0, 0.0]),
            Err(Error::OutsideCone(_))
        ));
        assert!(m.admissible(&[0.0, 0.0], &[0.2, 1.0]).is_ok());
        assert!(matches!(
            m.admissible(&[0.0, 0.0], &[0.0, 0.0]),
            Err(Error::OutsideCone(_))
        ));
    }

    #[test]
    fn oversized_form_is_rejected() {
        let m = SquareMetric::new(
            MetricField::Euclidean { dim: 2 },
            FormField::Constant { coef: vec![1.1, 0.0] },
        )
        .unwrap();
        assert!(matches!(
            m.admissible(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DeformationDomain(_))
        ));
    }
}
