//! Riemannian layer: metric fields, Christoffel symbols, quadratic sprays and
//! Riemann curvature assembled from an arbitrary spray.

use crate::betaform::{self, FormField};
use crate::numkit::{self, linalg, Jet, JetSpace, Poly, Scalar, Tensor, Variance};
use crate::{Error, Jet1, Result};

/// Largest dimension the curvature engine accepts (the jet engine seeds 2n variables).
pub const MAX_DIM: usize = 6;

/// Riemannian metric field `a_ij(x)`, evaluable at any scalar type.
#[derive(Clone, Debug)]
pub enum MetricField {
    /// Identity metric on R^n.
    Euclidean { dim: usize },
    /// Constant sectional curvature `mu` in the projective chart
    /// `h_ij = [(1 + mu|x|^2) d_ij - mu x_i x_j] / (1 + mu|x|^2)^2`.
    SpaceForm { dim: usize, mu: f64 },
    /// Conformally flat `a_ij = e^{2 phi(x)} d_ij` with polynomial `phi`.
    ConformalPoly { phi: Poly },
    /// Norm part of the scalar-curvature model family: `(sigma^2 / A) h_mu`
    /// as a norm, so the tensor is `(sigma^4 / A^2) h_ij`.
    ModelAlpha { dim: usize, mu: f64, k: f64, a: Vec<f64> },
    /// Norm part of the canonical constant-curvature pair on the unit ball.
    ConstCurvAlpha { dim: usize, a: Vec<f64> },
    /// `h = (1 - b^2) alpha` as a norm; the tensor picks up `(1 - b^2)^2`.
    Deformed { alpha: Box<MetricField>, beta: Box<FormField> },
    /// `alpha = (1 + w^2) h` as a norm; the tensor picks up `(1 + w^2)^2`.
    Undeformed { h: Box<MetricField>, omega: Box<FormField> },
}

/// Constant-curvature metric `h_mu` in its projective chart.
pub fn space_form(dim: usize, mu: f64) -> MetricField {
    MetricField::SpaceForm { dim, mu }
}

impl MetricField {
    /// Dimension of the underlying manifold chart.
    pub fn dim(&self) -> usize {
        match self {
            MetricField::Euclidean { dim } => *dim,
            MetricField::SpaceForm { dim, .. } => *dim,
            MetricField::ConformalPoly { phi } => phi.vars(),
            MetricField::ModelAlpha { dim, .. } => *dim,
            MetricField::ConstCurvAlpha { dim, .. } => *dim,
            MetricField::Deformed { alpha, .. } => alpha.dim(),
            MetricField::Undeformed { h, .. } => h.dim(),
        }
    }

    /// Metric components `a_ij(x)` as a rank-2 lower tensor over any scalar.
    pub fn components<S: Scalar>(&self, x: &[S]) -> Tensor<S> {
        let n = self.dim();
        assert_eq!(x.len(), n, "point dimension mismatch");
        let lower = [Variance::Lower, Variance::Lower];
        match self {
            MetricField::Euclidean { .. } => Tensor::from_fn(n, &lower, |idx| {
                if idx[0] == idx[1] { S::one() } else { S::zero() }
            }),
            MetricField::SpaceForm { mu, .. } => {
                let a = one_plus_scaled_norm_sq(x, *mu);
                let inv_a2 = a.mul_ref(&a).recip();
                Tensor::from_fn(n, &lower, |idx| {
                    let (i, j) = (idx[0], idx[1]);
                    let mut e = x[i].mul_ref(&x[j]).scale(-*mu);
                    if i == j {
                        e += a.clone();
                    }
                    e.mul_ref(&inv_a2)
                })
            }
            MetricField::ConformalPoly { phi } => {
                let factor = phi.eval(x).scale(2.0).exp();
                Tensor::from_fn(n, &lower, |idx| {
                    if idx[0] == idx[1] { factor.clone() } else { S::zero() }
                })
            }
            MetricField::ModelAlpha { mu, k, a, .. } => {
                let aa = one_plus_scaled_norm_sq(x, *mu);
                let sig2 = model_sigma_sq(x, *mu, *k, a);
                // sigma^4 (A d_ij - mu x_i x_j) / A^4
                let scale = sig2.mul_ref(&sig2).mul_ref(&aa.powi(4).recip());
                Tensor::from_fn(n, &lower, |idx| {
                    let (i, j) = (idx[0], idx[1]);
                    let mut e = x[i].mul_ref(&x[j]).scale(-*mu);
                    if i == j {
                        e += aa.clone();
                    }
                    e.mul_ref(&scale)
                })
            }
            MetricField::ConstCurvAlpha { a, .. } => {
                let u = dot_const(a, x);
                let r = norm_sq(x);
                let one_minus_r = S::one() - r;
                let one_plus_u = S::one() + u;
                let scale = one_plus_u.powi(4).mul_ref(&one_minus_r.powi(4).recip());
                Tensor::from_fn(n, &lower, |idx| {
                    let (i, j) = (idx[0], idx[1]);
                    let mut e = x[i].mul_ref(&x[j]);
                    if i == j {
                        e += one_minus_r.clone();
                    }
                    e.mul_ref(&scale)
                })
            }
            MetricField::Deformed { alpha, beta } => {
                let base = alpha.components(x);
                let b2 = betaform::b_squared(alpha, beta, x);
                let f = S::one() - b2;
                let f2 = f.mul_ref(&f);
                base.map(|e| e.mul_ref(&f2))
            }
            MetricField::Undeformed { h, omega } => {
                let base = h.components(x);
                let w2 = betaform::b_squared(h, omega, x);
                let f = S::one() + w2;
                let f2 = f.mul_ref(&f);
                base.map(|e| e.mul_ref(&f2))
            }
        }
    }

    /// Inverse components `a^{ij}(x)` as a rank-2 upper tensor.
    pub fn inverse_components<S: Scalar>(&self, x: &[S]) -> Tensor<S> {
        let n = self.dim();
        let comp = self.components(x);
        let inv = linalg::invert_spd(comp.as_slice(), n);
        Tensor::from_vec(n, &[Variance::Upper, Variance::Upper], inv)
    }

    /// Squared norm `a_ij y^i y^j` at `x`.
    pub fn norm_sq<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let comp = self.components(x);
        let n = self.dim();
        let mut acc = S::zero();
        for i in 0..n {
            for j in 0..n {
                acc += comp.at(&[i, j]).mul_ref(&y[i]).mul_ref(&y[j]);
            }
        }
        acc
    }

    /// Checks chart membership and positive definiteness at `x`.
    pub fn admissible(&self, x: &[f64]) -> Result<()> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::contract("point dimension mismatch"));
        }
        match self {
            MetricField::Euclidean { .. } | MetricField::ConformalPoly { .. } => {}
            MetricField::SpaceForm { mu, .. } => {
                let a = 1.0 + mu * norm_sq(x);
                if a <= 1e-12 {
                    return Err(Error::OutsideChart(format!(
                        "1 + mu|x|^2 = {a:.3e} is not positive"
                    )));
                }
            }
            MetricField::ModelAlpha { mu, k, a, .. } => {
                let big_a = 1.0 + mu * norm_sq(x);
                if big_a <= 1e-12 {
                    return Err(Error::OutsideChart(format!(
                        "1 + mu|x|^2 = {big_a:.3e} is not positive"
                    )));
                }
                let sig2 = model_sigma_sq(x, *mu, *k, a);
                if sig2 <= 1e-10 {
                    return Err(Error::OutsideChart(format!(
                        "sigma^2 = {sig2:.3e} is not positive"
                    )));
                }
            }
            MetricField::ConstCurvAlpha { a, .. } => {
                let r = norm_sq(x);
                if r >= 1.0 - 1e-12 {
                    return Err(Error::OutsideChart(format!("|x|^2 = {r:.6} >= 1")));
                }
                let u = dot_const(a, x);
                if 1.0 + u <= 1e-12 {
                    return Err(Error::OutsideChart(format!(
                        "1 + <a, x> = {:.3e} is not positive",
                        1.0 + u
                    )));
                }
            }
            MetricField::Deformed { alpha, beta } => {
                alpha.admissible(x)?;
                let b2: f64 = betaform::b_squared(alpha, beta, x);
                if b2 >= 1.0 - 1e-12 {
                    return Err(Error::DeformationDomain(b2));
                }
            }
            MetricField::Undeformed { h, .. } => h.admissible(x)?,
        }
        let comp = self.components(x);
        for e in comp.as_slice() {
            if !e.is_finite() {
                return Err(Error::DegenerateMetric);
            }
        }
        if linalg::spd_cholesky(comp.as_slice(), n).is_none() {
            return Err(Error::DegenerateMetric);
        }
        Ok(())
    }

    /// Radius of a ball around the origin that stays inside the chart.
    pub fn chart_radius(&self) -> f64 {
        match self {
            MetricField::Euclidean { .. } | MetricField::ConformalPoly { .. } => 1.0,
            MetricField::SpaceForm { mu, .. } | MetricField::ModelAlpha { mu, .. } => {
                if *mu < 0.0 { (-mu).sqrt().recip() } else { 1.0 }
            }
            MetricField::ConstCurvAlpha { .. } => 1.0,
            MetricField::Deformed { alpha, .. } => alpha.chart_radius(),
            MetricField::Undeformed { h, .. } => h.chart_radius(),
        }
    }
}

/// `1 + c |x|^2` over any scalar.
pub(crate) fn one_plus_scaled_norm_sq<S: Scalar>(x: &[S], c: f64) -> S {
    S::one() + norm_sq(x).scale(c)
}

/// Euclidean `|x|^2` over any scalar.
pub(crate) fn norm_sq<S: Scalar>(x: &[S]) -> S {
    let mut acc = S::zero();
    for e in x {
        acc += e.mul_ref(e);
    }
    acc
}

/// `<a, x>` with constant `a` over any scalar.
pub(crate) fn dot_const<S: Scalar>(a: &[f64], x: &[S]) -> S {
    let mut acc = S::zero();
    for (c, e) in a.iter().zip(x) {
        acc += e.scale(*c);
    }
    acc
}

/// `sigma^2 = [k^2 + (1 + |a|^2) mu] |x|^2 + (2k - mu <a,x>) <a,x> + |a|^2 + 1`.
pub(crate) fn model_sigma_sq<S: Scalar>(x: &[S], mu: f64, k: f64, a: &[f64]) -> S {
    let a2: f64 = a.iter().map(|c| c * c).sum();
    let u = dot_const(a, x);
    let r = norm_sq(x);
    r.scale(k * k + (1.0 + a2) * mu) + (u.scale(2.0 * k) - u.mul_ref(&u).scale(mu))
        + S::from_f64(a2 + 1.0)
}

/// Christoffel symbols `G^i_jk` of `g` at `x`, with admissibility checked.
pub fn christoffel(g: &MetricField, x: &[f64]) -> Result<Tensor<f64>> {
    g.admissible(x)?;
    Ok(christoffel_at(g, x))
}

/// Christoffel symbols over any scalar; assumes the base point is admissible.
pub fn christoffel_at<S: Scalar>(g: &MetricField, x: &[S]) -> Tensor<S> {
    let n = g.dim();
    let space = JetSpace::new(n, 1).expect("dimension fits the jet engine");
    let xj: Vec<Jet<S>> = x
        .iter()
        .enumerate()
        .map(|(i, v)| space.var(i, v.clone()))
        .collect();
    let gj = g.components(&xj);
    let value: Tensor<S> = gj.map(|e| e.value());
    let inv = linalg::invert_spd(value.as_slice(), n);
    let inv = Tensor::from_vec(n, &[Variance::Upper, Variance::Upper], inv);
    // d[k * n * n + i * n + j] = d a_ij / d x^k
    let mut deriv = vec![S::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            let grad = gj.at(&[i, j]).gradient(n);
            for (k, gk) in grad.into_iter().enumerate() {
                deriv[k * n * n + i * n + j] = gk;
            }
        }
    }
    let d = |k: usize, i: usize, j: usize| deriv[k * n * n + i * n + j].clone();
    Tensor::from_fn(n, &[Variance::Upper, Variance::Lower, Variance::Lower], |idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let mut acc = S::zero();
        for l in 0..n {
            let sum = d(j, l, k) + d(k, l, j) - d(l, j, k);
            acc += inv.at(&[i, l]).mul_ref(&sum);
        }
        acc.scale(0.5)
    })
}

/// Quadratic geodesic spray `G^i = (1/2) G^i_jk y^j y^k`, with checks.
pub fn spray_riemann(g: &MetricField, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    g.admissible(x)?;
    if y.len() != g.dim() {
        return Err(Error::contract("direction dimension mismatch"));
    }
    Ok(spray_riemann_at(g, x, y))
}

/// Quadratic geodesic spray over any scalar; assumes admissibility.
pub fn spray_riemann_at<S: Scalar>(g: &MetricField, x: &[S], y: &[S]) -> Vec<S> {
    let n = g.dim();
    let gamma = christoffel_at(g, x);
    (0..n)
        .map(|i| {
            let mut acc = S::zero();
            for j in 0..n {
                for k in 0..n {
                    acc += gamma.at(&[i, j, k]).mul_ref(&y[j]).mul_ref(&y[k]);
                }
            }
            acc.scale(0.5)
        })
        .collect()
}

/// Curvature data assembled from a spray at a single `(x, y)`.
#[derive(Clone, Debug)]
pub struct SprayCurvature {
    /// Spray coefficients `G^i` at `(x, y)`.
    pub spray: Vec<f64>,
    /// Riemann curvature `R^i_k`.
    pub riemann: Tensor<f64>,
    /// `d R^i_k / d y^m`, present when assembled with y-derivatives.
    pub riemann_y: Option<Tensor<f64>>,
}

impl SprayCurvature {
    /// Ricci trace `R^m_m`.
    pub fn ricci(&self) -> f64 {
        let n = self.riemann.dim();
        (0..n).map(|m| self.riemann.at(&[m, m])).sum()
    }
}

/// Assembles `R^i_k` from an arbitrary spray:
/// `R^i_k = 2 dG^i/dx^k - y^j d^2G^i/dx^j dy^k + 2 G^j d^2G^i/dy^j dy^k - (dG^i/dy^j)(dG^j/dy^k)`.
///
/// With `with_y_derivatives` the whole assembly is lifted one jet level so the
/// y-gradient of `R^i_k` comes out of the same arithmetic.
pub fn riemann_from_spray<Sp>(
    n: usize,
    x: &[f64],
    y: &[f64],
    spray: Sp,
    with_y_derivatives: bool,
) -> Result<SprayCurvature>
where
    Sp: Fn(&[Jet1], &[Jet1]) -> Vec<Jet1>,
{
    if n < 2 || n > MAX_DIM {
        return Err(Error::contract(format!(
            "dimension {n} outside supported range 2..={MAX_DIM}"
        )));
    }
    if x.len() != n || y.len() != n {
        return Err(Error::contract("point or direction dimension mismatch"));
    }
    let order = if with_y_derivatives { 3 } else { 2 };
    let space = JetSpace::new(2 * n, order)?;
    numkit::clear_poison();
    let xj: Vec<Jet1> = (0..n).map(|i| space.var(i, x[i])).collect();
    let yj: Vec<Jet1> = (0..n).map(|i| space.var(n + i, y[i])).collect();
    let gj = spray(&xj, &yj);
    assert_eq!(gj.len(), n, "spray must return one coefficient per dimension");

    // Multi-index helper over the 2n outer variables.
    let kappa = |slots: &[usize]| -> Vec<usize> {
        let mut k = vec![0usize; 2 * n];
        for &s in slots {
            k[s] += 1;
        }
        k
    };

    let result = if with_y_derivatives {
        let yspace = JetSpace::new(n, 1)?;
        // Truncates the order-3 outer jet to a y-direction 1-jet of the given partial.
        let lift = |j: &Jet1, slots: &[usize]| -> Jet<f64> {
            let base = kappa(slots);
            let value = j.partial(&base);
            let grad: Vec<f64> = (0..n)
                .map(|m| {
                    let mut k = base.clone();
                    k[n + m] += 1;
                    j.partial(&k)
                })
                .collect();
            yspace.linear(value, &grad)
        };
        let yv: Vec<Jet<f64>> = (0..n).map(|m| yspace.var(m, y[m])).collect();
        let g: Vec<Jet<f64>> = gj.iter().map(|j| lift(j, &[])).collect();
        let dgdx = grid2(n, |i, k| lift(&gj[i], &[k]));
        let dgdy = grid2(n, |i, j| lift(&gj[i], &[n + j]));
        let d2gdxdy = grid3(n, |i, j, k| lift(&gj[i], &[j, n + k]));
        let d2gdy2 = grid3(n, |i, j, k| lift(&gj[i], &[n + j, n + k]));
        let rjet = assemble_riemann(n, &yv, &g, &dgdx, &dgdy, &d2gdxdy, &d2gdy2);
        let riemann = rjet.map(|e| e.value());
        let riemann_y = Tensor::from_fn(
            n,
            &[Variance::Upper, Variance::Lower, Variance::Lower],
            |idx| {
                let mut k = vec![0usize; n];
                k[idx[2]] = 1;
                rjet.at(&[idx[0], idx[1]]).partial(&k)
            },
        );
        SprayCurvature {
            spray: g.iter().map(|j| j.value()).collect(),
            riemann,
            riemann_y: Some(riemann_y),
        }
    } else {
        let part = |i: usize, slots: &[usize]| gj[i].partial(&kappa(slots));
        let g: Vec<f64> = (0..n).map(|i| part(i, &[])).collect();
        let dgdx = grid2(n, |i, k| part(i, &[k]));
        let dgdy = grid2(n, |i, j| part(i, &[n + j]));
        let d2gdxdy = grid3(n, |i, j, k| part(i, &[j, n + k]));
        let d2gdy2 = grid3(n, |i, j, k| part(i, &[n + j, n + k]));
        let riemann = assemble_riemann(n, y, &g, &dgdx, &dgdy, &d2gdxdy, &d2gdy2);
        SprayCurvature { spray: g, riemann, riemann_y: None }
    };

    if let Some(site) = numkit::take_poison() {
        return Err(Error::SingularEvaluation(site));
    }
    for v in result.spray.iter().chain(result.riemann.as_slice()) {
        if !v.is_finite() {
            return Err(Error::StencilFailure);
        }
    }
    Ok(result)
}

fn grid2<T>(n: usize, f: impl Fn(usize, usize) -> T) -> Vec<Vec<T>> {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

fn grid3<T>(n: usize, f: impl Fn(usize, usize, usize) -> T) -> Vec<Vec<Vec<T>>> {
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| f(i, j, k)).collect()).collect())
        .collect()
}

/// One shared assembly of the curvature formula, generic over the scalar so the
/// plain and y-lifted paths use identical arithmetic.
fn assemble_riemann<T: Scalar>(
    n: usize,
    y: &[T],
    g: &[T],
    dgdx: &[Vec<T>],
    dgdy: &[Vec<T>],
    d2gdxdy: &[Vec<Vec<T>>],
    d2gdy2: &[Vec<Vec<T>>],
) -> Tensor<T> {
    Tensor::from_fn(n, &[Variance::Upper, Variance::Lower], |idx| {
        let (i, k) = (idx[0], idx[1]);
        let mut acc = dgdx[i][k].scale(2.0);
        for j in 0..n {
            acc -= y[j].mul_ref(&d2gdxdy[i][j][k]);
            acc += g[j].mul_ref(&d2gdy2[i][j][k]).scale(2.0);
            acc -= dgdy[i][j].mul_ref(&dgdy[j][k]);
        }
        acc
    })
}

/// Riemann curvature of the norm `alpha` itself (its quadratic spray fed
/// through the shared assembly).
pub fn riemann_curvature_alpha(g: &MetricField, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
    g.admissible(x)?;
    let n = g.dim();
    if y.len() != n {
        return Err(Error::contract("direction dimension mismatch"));
    }
    let sc = riemann_from_spray(n, x, y, |xj, yj| spray_riemann_at(g, xj, yj), false)?;
    Ok(sc.riemann)
}

/// Least-squares fit of constant sectional curvature over sampled `(x, y)`:
/// `R^i_k ~ mu (|y|_a^2 d^i_k - y^i ybar_k)` with `ybar_k = a_km y^m`.
/// Returns `(mu_hat, residual)` where the residual is the worst relative
/// deviation from the fitted model.
pub fn sectional_constancy_residual(
    g: &MetricField,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<(f64, f64)> {
    if samples.len() < 8 {
        return Err(Error::contract("need at least 8 samples for the curvature fit"));
    }
    let n = g.dim();
    let mut pairs: Vec<(Tensor<f64>, Tensor<f64>)> = Vec::with_capacity(samples.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in samples {
        let r = riemann_curvature_alpha(g, x, y)?;
        let comp = g.components(x);
        let a2 = g.norm_sq(x, y);
        let ybar: Vec<f64> = (0..n)
            .map(|k| (0..n).map(|m| comp.at(&[k, m]) * y[m]).sum())
            .collect();
        let basis = Tensor::from_fn(n, &[Variance::Upper, Variance::Lower], |idx| {
            let (i, k) = (idx[0], idx[1]);
            let mut e = -y[i] * ybar[k];
            if i == k {
                e += a2;
            }
            e
        });
        for (re, be) in r.as_slice().iter().zip(basis.as_slice()) {
            num += re * be;
            den += be * be;
        }
        pairs.push((r, basis));
    }
    if den <= 0.0 {
        return Err(Error::contract("degenerate sample set for the curvature fit"));
    }
    let mu_hat = num / den;
    let mut residual: f64 = 0.0;
    for (r, basis) in &pairs {
        let mut dev: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for (re, be) in r.as_slice().iter().zip(basis.as_slice()) {
            dev += (re - mu_hat * be) * (re - mu_hat * be);
            scale = scale.max(re.abs()).max((mu_hat * be).abs());
        }
        residual = residual.max(dev.sqrt() / scale);
    }
    Ok((mu_hat, residual))
}
