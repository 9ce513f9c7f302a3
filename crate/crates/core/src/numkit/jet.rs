//! Multivariate truncated-Taylor jets: forward-mode derivatives up to total
//! order 3 in up to [`MAX_VARS`] simultaneous directions.
//!
//! A [`Jet`] stores the Taylor coefficients of a quantity with respect to the
//! perturbation variables of a [`JetSpace`]; arithmetic on jets is truncated
//! series arithmetic, so evaluating an ordinary formula on seeded jets yields
//! the formula's derivatives. Coefficients are any [`Scalar`], so jets nest:
//! a `Jet<Jet<f64>>` differentiates a quantity that is itself a derivative.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};

use super::scalar::{clear_poison, set_poison, take_poison, Scalar};
use crate::{Error, Result};

/// Hard cap on simultaneous perturbation directions in one jet space.
pub const MAX_VARS: usize = 12;

const MAX_ORDER: usize = 3;

type MIdx = [u8; MAX_VARS];

fn mdeg(m: &MIdx) -> usize {
    m.iter().map(|&d| d as usize).sum()
}

/// Interned per-(vars, order) tables: monomial enumeration, index lookup,
/// truncated-convolution pairs and per-monomial factorials.
struct ShapeData {
    vars: usize,
    order: usize,
    monomials: Vec<MIdx>,
    index: HashMap<MIdx, u32>,
    mul_pairs: Vec<(u32, u32, u32)>,
}

impl fmt::Debug for ShapeData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetShape(vars={}, order={})", self.vars, self.order)
    }
}

impl ShapeData {
    fn build(vars: usize, order: usize) -> Self {
        let mut monomials = Vec::new();
        let mut cur = [0u8; MAX_VARS];
        fn rec(v: usize, vars: usize, left: usize, cur: &mut MIdx, out: &mut Vec<MIdx>) {
            if v == vars {
                out.push(*cur);
                return;
            }
            for d in 0..=left {
                cur[v] = d as u8;
                rec(v + 1, vars, left - d, cur, out);
            }
            cur[v] = 0;
        }
        rec(0, vars, order, &mut cur, &mut monomials);
        monomials.sort_by_key(|m| (mdeg(m), *m));

        let index: HashMap<MIdx, u32> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (*m, i as u32))
            .collect();

        let mut mul_pairs = Vec::new();
        for (ia, a) in monomials.iter().enumerate() {
            for (ib, b) in monomials.iter().enumerate() {
                if mdeg(a) + mdeg(b) > order {
                    continue;
                }
                let mut sum = [0u8; MAX_VARS];
                for v in 0..vars {
                    sum[v] = a[v] + b[v];
                }
                mul_pairs.push((ia as u32, ib as u32, index[&sum]));
            }
        }

        ShapeData { vars, order, monomials, index, mul_pairs }
    }
}

fn shape(vars: usize, order: usize) -> Arc<ShapeData> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<ShapeData>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((vars, order))
        .or_insert_with(|| Arc::new(ShapeData::build(vars, order)))
        .clone()
}

/// Perturbation variables plus truncation order; every dense jet appearing in
/// one expression must come from the same space.
#[derive(Clone, Debug)]
pub struct JetSpace {
    data: Arc<ShapeData>,
}

impl JetSpace {
    /// `vars` in `1..=MAX_VARS`, `order` in `1..=3`; anything else is rejected.
    pub fn new(vars: usize, order: usize) -> Result<Self> {
        if vars == 0 || vars > MAX_VARS {
            return Err(Error::contract(format!(
                "jet space needs 1..={MAX_VARS} variables, got {vars}"
            )));
        }
        if order == 0 || order > MAX_ORDER {
            return Err(Error::contract(format!(
                "jet truncation order must be 1..={MAX_ORDER}, got {order}"
            )));
        }
        Ok(JetSpace { data: shape(vars, order) })
    }

    pub fn vars(&self) -> usize {
        self.data.vars
    }

    pub fn order(&self) -> usize {
        self.data.order
    }

    /// Number of stored coefficients per jet.
    pub fn len(&self) -> usize {
        self.data.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Shape-free constant; promoted on first contact with a dense jet.
    pub fn constant<S: Scalar>(&self, v: S) -> Jet<S> {
        Jet::constant(v)
    }

    /// Seed for variable `j`: value plus unit first-order coefficient.
    pub fn var<S: Scalar>(&self, j: usize, value: S) -> Jet<S> {
        assert!(j < self.data.vars, "jet variable index out of range");
        let mut grad = vec![S::zero(); self.data.vars];
        grad[j] = S::one();
        self.linear(value, &grad)
    }

    /// Jet with prescribed value and first-order coefficients, zero above.
    pub fn linear<S: Scalar>(&self, value: S, gradient: &[S]) -> Jet<S> {
        assert_eq!(gradient.len(), self.data.vars, "gradient length mismatch");
        let mut coef = vec![S::zero(); self.data.monomials.len()];
        coef[0] = value;
        for (j, g) in gradient.iter().enumerate() {
            let mut m = [0u8; MAX_VARS];
            m[j] = 1;
            coef[self.data.index[&m] as usize] = g.clone();
        }
        Jet { repr: Repr::Dense { shape: self.data.clone(), coef } }
    }
}

/// Truncated Taylor expansion of one scalar quantity.
#[derive(Clone, Debug)]
pub struct Jet<S> {
    repr: Repr<S>,
}

#[derive(Clone, Debug)]
enum Repr<S> {
    Const(S),
    Dense { shape: Arc<ShapeData>, coef: Vec<S> },
}

fn same_shape(a: &Arc<ShapeData>, b: &Arc<ShapeData>) {
    assert!(
        Arc::ptr_eq(a, b) || (a.vars == b.vars && a.order == b.order),
        "jet shape mismatch: ({}, {}) vs ({}, {})",
        a.vars,
        a.order,
        b.vars,
        b.order
    );
}

fn mul_dense<S: Scalar>(shape: &ShapeData, a: &[S], b: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); a.len()];
    for &(ia, ib, io) in &shape.mul_pairs {
        let p = a[ia as usize].mul_ref(&b[ib as usize]);
        out[io as usize] += p;
    }
    out
}

impl<S: Scalar> Jet<S> {
    pub fn constant(v: S) -> Self {
        Jet { repr: Repr::Const(v) }
    }

    /// `(vars, order)` for dense jets, `None` for shape-free constants.
    pub fn shape(&self) -> Option<(usize, usize)> {
        match &self.repr {
            Repr::Const(_) => None,
            Repr::Dense { shape, .. } => Some((shape.vars, shape.order)),
        }
    }

    fn value_ref(&self) -> &S {
        match &self.repr {
            Repr::Const(c) => c,
            Repr::Dense { coef, .. } => &coef[0],
        }
    }

    /// Zeroth-order coefficient.
    pub fn value(&self) -> S {
        self.value_ref().clone()
    }

    /// Raw Taylor coefficient for the multi-index `kappa`.
    pub fn coefficient(&self, kappa: &[usize]) -> S {
        let deg: usize = kappa.iter().sum();
        match &self.repr {
            Repr::Const(c) => {
                if deg == 0 {
                    c.clone()
                } else {
                    S::zero()
                }
            }
            Repr::Dense { shape, coef } => {
                assert_eq!(kappa.len(), shape.vars, "multi-index length mismatch");
                assert!(deg <= shape.order, "multi-index exceeds jet truncation order");
                let mut m = [0u8; MAX_VARS];
                for (v, &k) in kappa.iter().enumerate() {
                    m[v] = k as u8;
                }
                coef[shape.index[&m] as usize].clone()
            }
        }
    }

    /// Partial derivative for `kappa`: coefficient times the multi-factorial.
    pub fn partial(&self, kappa: &[usize]) -> S {
        let fact: f64 = kappa.iter().map(|&k| (1..=k as u64).product::<u64>() as f64).product();
        self.coefficient(kappa).scale(fact)
    }

    /// First-order partials with respect to each of `vars` variables.
    pub fn gradient(&self, vars: usize) -> Vec<S> {
        let mut kappa = vec![0usize; vars];
        (0..vars)
            .map(|j| {
                kappa[j] = 1;
                let g = self.coefficient(&kappa);
                kappa[j] = 0;
                g
            })
            .collect()
    }

    /// Entry-wise map of the coefficients; `f` must be linear in its argument
    /// for the result to remain a consistent expansion.
    pub fn map_coefficients<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Jet<T> {
        match &self.repr {
            Repr::Const(c) => Jet::constant(f(c)),
            Repr::Dense { shape, coef } => Jet {
                repr: Repr::Dense { shape: shape.clone(), coef: coef.iter().map(f).collect() },
            },
        }
    }

    /// True when every coefficient's value part is finite.
    pub fn finite_values(&self) -> bool {
        match &self.repr {
            Repr::Const(c) => c.re().is_finite(),
            Repr::Dense { coef, .. } => coef.iter().all(|c| c.re().is_finite()),
        }
    }

    fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense { .. })
    }

    /// Horner evaluation of `c0 + c1 d + c2 d^2 + c3 d^3` where `d` is `self`
    /// with its constant coefficient removed. Only called on dense jets.
    fn compose(&self, c: [S; 4]) -> Jet<S> {
        let (shape, coef) = match &self.repr {
            Repr::Dense { shape, coef } => (shape, coef),
            Repr::Const(_) => unreachable!("compose is only used on dense jets"),
        };
        let mut d = coef.clone();
        d[0] = S::zero();
        let delta = Jet { repr: Repr::Dense { shape: shape.clone(), coef: d } };
        let [c0, c1, c2, c3] = c;
        let mut acc = Jet::constant(c3);
        acc = acc * delta.clone() + Jet::constant(c2);
        acc = acc * delta.clone() + Jet::constant(c1);
        acc * delta + Jet::constant(c0)
    }
}

impl<S: Scalar> Add for Jet<S> {
    type Output = Jet<S>;
    fn add(self, rhs: Jet<S>) -> Jet<S> {
        use Repr::*;
        match (self.repr, rhs.repr) {
            (Const(a), Const(b)) => Jet::constant(a + b),
            (Const(a), Dense { shape, mut coef }) | (Dense { shape, mut coef }, Const(a)) => {
                coef[0] += a;
                Jet { repr: Dense { shape, coef } }
            }
            (Dense { shape: sa, coef: a }, Dense { shape: sb, coef: b }) => {
                same_shape(&sa, &sb);
                let coef = a.into_iter().zip(b).map(|(x, y)| x + y).collect();
                Jet { repr: Dense { shape: sa, coef } }
            }
        }
    }
}

impl<S: Scalar> Sub for Jet<S> {
    type Output = Jet<S>;
    fn sub(self, rhs: Jet<S>) -> Jet<S> {
        self + (-rhs)
    }
}

impl<S: Scalar> Neg for Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        match self.repr {
            Repr::Const(c) => Jet::constant(-c),
            Repr::Dense { shape, coef } => Jet {
                repr: Repr::Dense { shape, coef: coef.into_iter().map(|c| -c).collect() },
            },
        }
    }
}

impl<S: Scalar> Mul for Jet<S> {
    type Output = Jet<S>;
    fn mul(self, rhs: Jet<S>) -> Jet<S> {
        self.mul_ref(&rhs)
    }
}

impl<S: Scalar> Div for Jet<S> {
    type Output = Jet<S>;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet<S>) -> Jet<S> {
        self * Scalar::recip(&rhs)
    }
}

impl<S: Scalar> AddAssign for Jet<S> {
    fn add_assign(&mut self, rhs: Jet<S>) {
        let lhs = std::mem::replace(self, Jet::constant(S::zero()));
        *self = lhs + rhs;
    }
}

impl<S: Scalar> SubAssign for Jet<S> {
    fn sub_assign(&mut self, rhs: Jet<S>) {
        let lhs = std::mem::replace(self, Jet::constant(S::zero()));
        *self = lhs - rhs;
    }
}

impl<S: Scalar> MulAssign for Jet<S> {
    fn mul_assign(&mut self, rhs: Jet<S>) {
        let lhs = std::mem::replace(self, Jet::constant(S::zero()));
        *self = lhs * rhs;
    }
}

impl<S: Scalar> DivAssign for Jet<S> {
    fn div_assign(&mut self, rhs: Jet<S>) {
        let lhs = std::mem::replace(self, Jet::constant(S::zero()));
        *self = lhs / rhs;
    }
}

impl<S: Scalar> Zero for Jet<S> {
    fn zero() -> Self {
        Jet::constant(S::zero())
    }
    fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Const(c) => c.is_zero(),
            Repr::Dense { coef, .. } => coef.iter().all(Zero::is_zero),
        }
    }
}

impl<S: Scalar> One for Jet<S> {
    fn one() -> Self {
        Jet::constant(S::one())
    }
}

impl<S: Scalar> PartialEq for Jet<S> {
    fn eq(&self, other: &Self) -> bool {
        use Repr::*;
        match (&self.repr, &other.repr) {
            (Const(a), Const(b)) => a == b,
            (Const(a), Dense { coef, .. }) | (Dense { coef, .. }, Const(a)) => {
                coef[0] == *a && coef[1..].iter().all(Zero::is_zero)
            }
            (Dense { shape: sa, coef: a }, Dense { shape: sb, coef: b }) => {
                same_shape(sa, sb);
                a == b
            }
        }
    }
}

impl<S: Scalar> Scalar for Jet<S> {
    fn from_f64(c: f64) -> Self {
        Jet::constant(S::from_f64(c))
    }

    fn re(&self) -> f64 {
        self.value_ref().re()
    }

    fn sqrt(&self) -> Self {
        let v = self.value_ref().clone();
        if v.re() < 0.0 {
            set_poison("square root of a negative value part");
        } else if v.re() == 0.0 && self.is_dense() {
            set_poison("square-root derivative at a zero value part");
        }
        let s0 = v.sqrt();
        if !self.is_dense() {
            return Jet::constant(s0);
        }
        let iv = v.recip();
        let c1 = s0.mul_ref(&iv).scale(0.5);
        let c2 = c1.mul_ref(&iv).scale(-0.25);
        let c3 = c2.mul_ref(&iv).scale(-0.5);
        self.compose([s0, c1, c2, c3])
    }

    fn exp(&self) -> Self {
        let e0 = self.value_ref().exp();
        if !self.is_dense() {
            return Jet::constant(e0);
        }
        let c1 = e0.clone();
        let c2 = e0.scale(0.5);
        let c3 = e0.scale(1.0 / 6.0);
        self.compose([e0, c1, c2, c3])
    }

    fn scale(&self, c: f64) -> Self {
        match &self.repr {
            Repr::Const(v) => Jet::constant(v.scale(c)),
            Repr::Dense { shape, coef } => Jet {
                repr: Repr::Dense {
                    shape: shape.clone(),
                    coef: coef.iter().map(|v| v.scale(c)).collect(),
                },
            },
        }
    }

    fn recip(&self) -> Self {
        let v = self.value_ref().clone();
        if v.re() == 0.0 {
            set_poison("reciprocal of a zero value part");
        }
        let iv = v.recip();
        if !self.is_dense() {
            return Jet::constant(iv);
        }
        let c1 = -iv.mul_ref(&iv);
        let c2 = -c1.mul_ref(&iv);
        let c3 = -c2.mul_ref(&iv);
        self.compose([iv, c1, c2, c3])
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        use Repr::*;
        match (&self.repr, &rhs.repr) {
            (Const(a), Const(b)) => Jet::constant(a.mul_ref(b)),
            (Const(a), Dense { shape, coef }) | (Dense { shape, coef }, Const(a)) => Jet {
                repr: Dense {
                    shape: shape.clone(),
                    coef: coef.iter().map(|c| a.mul_ref(c)).collect(),
                },
            },
            (Dense { shape: sa, coef: a }, Dense { shape: sb, coef: b }) => {
                same_shape(sa, sb);
                Jet { repr: Dense { shape: sa.clone(), coef: mul_dense(sa, a, b) } }
            }
        }
    }
}

/// Taylor data of a scalar function along chosen directions; the output of
/// [`jet_eval`].
#[derive(Debug, Clone)]
pub struct JetEval {
    jet: Jet<f64>,
    vars: usize,
    order: usize,
}

impl JetEval {
    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.jet.value()
    }

    /// Raw Taylor coefficient for the multi-index `kappa` over the directions.
    pub fn coefficient(&self, kappa: &[usize]) -> f64 {
        assert_eq!(kappa.len(), self.vars, "multi-index length mismatch");
        self.jet.coefficient(kappa)
    }

    /// Partial derivative for `kappa` (coefficient times multi-factorial).
    pub fn partial(&self, kappa: &[usize]) -> f64 {
        assert_eq!(kappa.len(), self.vars, "multi-index length mismatch");
        self.jet.partial(kappa)
    }
}

/// Evaluates `f` on jets seeded at `x0` along the perturbation directions
/// `dirs` and returns the Taylor data of the result. Direction `j` becomes
/// jet variable `j`: the coefficient of `kappa` is the Taylor coefficient of
/// `t -> f(x0 + sum_j t_j dirs[j])` at `t = 0`.
///
/// At most `min(2 * x0.len(), MAX_VARS)` directions and order at most 3 are
/// accepted; singular primitives or non-finite output coefficients are
/// reported as errors naming the offending primitive.
pub fn jet_eval<F>(f: F, x0: &[f64], dirs: &[Vec<f64>], order: usize) -> Result<JetEval>
where
    F: Fn(&[Jet<f64>]) -> Jet<f64>,
{
    let n = x0.len();
    if n == 0 {
        return Err(Error::contract("jet_eval needs a non-empty base point"));
    }
    let cap = (2 * n).min(MAX_VARS);
    if dirs.is_empty() || dirs.len() > cap {
        return Err(Error::contract(format!(
            "jet_eval takes 1..={cap} directions here, got {}",
            dirs.len()
        )));
    }
    if dirs.iter().any(|d| d.len() != n) {
        return Err(Error::contract("direction length differs from base point length"));
    }
    let space = JetSpace::new(dirs.len(), order)?;
    clear_poison();
    let args: Vec<Jet<f64>> = (0..n)
        .map(|i| {
            let grad: Vec<f64> = dirs.iter().map(|d| d[i]).collect();
            space.linear(x0[i], &grad)
        })
        .collect();
    let out = f(&args);
    if let Some(what) = take_poison() {
        return Err(Error::SingularEvaluation(what));
    }
    if !out.finite_values() {
        return Err(Error::SingularEvaluation("non-finite jet coefficients"));
    }
    Ok(JetEval { jet: out, vars: dirs.len(), order })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(vars: usize, order: usize) -> JetSpace {
        JetSpace::new(vars, order).unwrap()
    }

    #[test]
    fn square_at_three() {
        let sp = space(1, 2);
        let t: Jet<f64> = sp.var(0, 3.0);
        let f = t.clone() * t;
        assert_eq!(f.value(), 9.0);
        assert_eq!(f.partial(&[1]), 6.0);
        assert_eq!(f.partial(&[2]), 2.0);
    }

    #[test]
    fn sqrt_at_four() {
        let sp = space(1, 1);
        let t: Jet<f64> = sp.var(0, 4.0);
        let f = Scalar::sqrt(&t);
        assert!((f.value() - 2.0).abs() < 1e-15);
        assert!((f.partial(&[1]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mixed_partial_of_product() {
        let sp = space(2, 2);
        let u: Jet<f64> = sp.var(0, 2.0);
        let v: Jet<f64> = sp.var(1, 5.0);
        let f = u * v;
        assert_eq!(f.partial(&[1, 1]), 1.0);
        assert_eq!(f.partial(&[1, 0]), 5.0);
        assert_eq!(f.partial(&[0, 1]), 2.0);
    }

    #[test]
    fn cube_third_derivative() {
        let sp = space(1, 3);
        let t: Jet<f64> = sp.var(0, 1.3);
        let f = t.clone() * t.clone() * t;
        assert!((f.partial(&[3]) - 6.0).abs() < 1e-12);
        assert!((f.partial(&[2]) - 6.0 * 1.3).abs() < 1e-12);
    }

    #[test]
    fn exp_series_coefficients() {
        let sp = space(1, 3);
        let t: Jet<f64> = sp.var(0, 0.0);
        let f = Scalar::exp(&t);
        assert_eq!(f.value(), 1.0);
        assert_eq!(f.partial(&[1]), 1.0);
        assert_eq!(f.partial(&[2]), 1.0);
        assert!((f.partial(&[3]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_series() {
        let sp = space(1, 3);
        let t: Jet<f64> = sp.var(0, 2.0);
        let f = Scalar::recip(&t);
        // 1/t at 2: value 1/2, then -1/4, 2/8, -6/16.
        assert!((f.value() - 0.5).abs() < 1e-15);
        assert!((f.partial(&[1]) + 0.25).abs() < 1e-15);
        assert!((f.partial(&[2]) - 0.25).abs() < 1e-15);
        assert!((f.partial(&[3]) + 0.375).abs() < 1e-15);
    }

    #[test]
    fn constants_behave_like_reals() {
        let sp = space(2, 2);
        let c: Jet<f64> = sp.constant(2.5);
        let z: Jet<f64> = sp.linear(2.5, &[0.0, 0.0]);
        // A dense jet with zero perturbation coefficients equals the constant.
        assert_eq!(c, z);
        let x: Jet<f64> = sp.var(0, 1.0);
        let via_const = x.clone() * c;
        let via_dense = x.scale(2.5);
        assert_eq!(via_const, via_dense);
    }

    #[test]
    fn nested_jets_give_mixed_second_derivative() {
        // f(x, y) = x^2 y; d^2 f / dx dy computed with one jet level per
        // variable instead of a two-variable space.
        let outer = space(1, 1);
        let inner = space(1, 1);
        let x0 = 1.7;
        let y0 = -0.6;
        let x: Jet<Jet<f64>> = Jet::constant(outer.var(0, x0));
        let y: Jet<Jet<f64>> = inner.var(0, Jet::constant(y0));
        let f = x.clone() * x * y;
        let dxy = f.partial(&[1]).partial(&[1]);
        assert!((dxy - 2.0 * x0).abs() < 1e-14);
    }

    #[test]
    fn jet_eval_along_directions() {
        // f(x) = |x|^2 along direction d from x0: second coefficient is |d|^2.
        let f = |x: &[Jet<f64>]| {
            x.iter().fold(Jet::constant(0.0), |acc, xi| acc + xi.mul_ref(xi))
        };
        let x0 = [1.0, 2.0, 3.0];
        let d = vec![0.5, -1.0, 2.0];
        let ev = jet_eval(f, &x0, &[d.clone()], 2).unwrap();
        assert!((ev.value() - 14.0).abs() < 1e-14);
        let grad: f64 = 2.0 * (1.0 * 0.5 + 2.0 * -1.0 + 3.0 * 2.0);
        assert!((ev.partial(&[1]) - grad).abs() < 1e-14);
        let dd: f64 = d.iter().map(|v| v * v).sum();
        assert!((ev.partial(&[2]) - 2.0 * dd).abs() < 1e-14);
    }

    #[test]
    fn jet_eval_rejects_bad_order() {
        let f = |x: &[Jet<f64>]| x[0].clone();
        let err = jet_eval(f, &[1.0], &[vec![1.0]], 4).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let err = jet_eval(f, &[1.0], &[vec![1.0]], 0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn jet_eval_reports_singularities() {
        let recip = |x: &[Jet<f64>]| Scalar::recip(&x[0]);
        let err = jet_eval(recip, &[0.0], &[vec![1.0]], 1).unwrap_err();
        assert!(matches!(err, Error::SingularEvaluation(_)));

        let root = |x: &[Jet<f64>]| Scalar::sqrt(&x[0]);
        let err = jet_eval(root, &[-1.0], &[vec![1.0]], 1).unwrap_err();
        assert!(matches!(err, Error::SingularEvaluation(_)));
    }

    #[test]
    #[should_panic(expected = "jet shape mismatch")]
    fn mixing_shapes_panics() {
        let a: Jet<f64> = space(1, 2).var(0, 1.0);
        let b: Jet<f64> = space(2, 2).var(0, 1.0);
        let _ = a + b;
    }

    #[test]
    fn division_round_trip() {
        let sp = space(2, 3);
        let x: Jet<f64> = sp.var(0, 1.2);
        let y: Jet<f64> = sp.var(1, -2.1);
        let expr = (x.clone() * y.clone() + Jet::constant(3.0)) / y.clone();
        let back = expr * y.clone();
        let direct = x * y + Jet::constant(3.0);
        for kappa in [[0, 0], [1, 0], [0, 1], [1, 1], [2, 1], [0, 3]] {
            assert!(
                (back.partial(&kappa) - direct.partial(&kappa)).abs() < 1e-12,
                "kappa = {kappa:?}"
            );
        }
    }

    #[test]
    fn powi_on_jets() {
        let sp = space(1, 2);
        let t: Jet<f64> = sp.var(0, 1.5);
        let f = Scalar::powi(&t, -2);
        // d/dt t^-2 = -2 t^-3, d^2/dt^2 = 6 t^-4.
        assert!((f.value() - 1.5f64.powi(-2)).abs() < 1e-14);
        assert!((f.partial(&[1]) + 2.0 * 1.5f64.powi(-3)).abs() < 1e-14);
        assert!((f.partial(&[2]) - 6.0 * 1.5f64.powi(-4)).abs() < 1e-13);
    }
}
