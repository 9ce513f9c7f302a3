//! Sparse multivariate polynomials with exact symbolic derivatives. Used by
//! the configurable metric families and as analytic oracles in tests.

use super::scalar::Scalar;

/// Polynomial in `vars` variables as a sum of monomial terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    vars: usize,
    terms: Vec<(f64, Vec<u8>)>,
}

impl Poly {
    pub fn zero(vars: usize) -> Self {
        Poly { vars, terms: Vec::new() }
    }

    pub fn constant(vars: usize, c: f64) -> Self {
        Poly::zero(vars).term(c, &vec![0; vars])
    }

    /// Appends the term `c * x^exps` (builder style).
    pub fn term(mut self, c: f64, exps: &[usize]) -> Self {
        assert_eq!(exps.len(), self.vars, "exponent list length mismatch");
        if c != 0.0 {
            self.terms.push((c, exps.iter().map(|&e| e as u8).collect()));
        }
        self
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn total_degree(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().map(|&d| d as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> S {
        assert_eq!(x.len(), self.vars, "evaluation point length mismatch");
        let mut acc = S::zero();
        for (c, exps) in &self.terms {
            let mut t = S::from_f64(*c);
            for (xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    t = t * xi.powi(e as i32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Exact derivative with respect to variable `v`.
    pub fn partial(&self, v: usize) -> Poly {
        assert!(v < self.vars, "derivative variable out of range");
        let terms = self
            .terms
            .iter()
            .filter(|(_, e)| e[v] > 0)
            .map(|(c, e)| {
                let mut d = e.clone();
                d[v] -= 1;
                (c * e[v] as f64, d)
            })
            .collect();
        Poly { vars: self.vars, terms }
    }
}
