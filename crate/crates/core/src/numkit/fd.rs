//! Finite-difference derivative oracle. Deliberately independent of the jet
//! machinery so the two can cross-check each other.

use crate::{Error, Result};

/// Central-difference weights for the `k`-th derivative in one variable,
/// as (grid offset, weight) pairs in units of `h^{-k}`.
fn stencil(k: usize) -> &'static [(i32, f64)] {
    match k {
        1 => &[(1, 0.5), (-1, -0.5)],
        2 => &[(1, 1.0), (0, -2.0), (-1, 1.0)],
        3 => &[(2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)],
        _ => unreachable!("stencil order out of range"),
    }
}

fn apply_stencil<F>(f: &F, x0: &[f64], kappa: &[usize], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let active: Vec<(usize, &[(i32, f64)])> = kappa
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(v, &k)| (v, stencil(k)))
        .collect();
    let order: usize = kappa.iter().sum();
    let mut idx = vec![0usize; active.len()];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        let mut pt = x0.to_vec();
        for (slot, &(v, st)) in active.iter().enumerate() {
            let (off, wt) = st[idx[slot]];
            pt[v] += off as f64 * h;
            w *= wt;
        }
        let val = f(&pt);
        if !val.is_finite() {
            return Err(Error::StencilFailure);
        }
        acc += w * val;

        let mut slot = 0;
        loop {
            if slot == active.len() {
                return Ok(acc / h.powi(order as i32));
            }
            idx[slot] += 1;
            if idx[slot] < active[slot].1.len() {
                break;
            }
            idx[slot] = 0;
            slot += 1;
        }
    }
}

/// Mixed partial of `f` at `x0` for the multi-index `kappa` (total order
/// 1..=3) by central differences with one Richardson extrapolation step.
/// The base step is `scale * eps^(1/(order + 2))`.
pub fn fd_partial<F>(f: F, x0: &[f64], kappa: &[usize], scale: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if kappa.len() != x0.len() {
        return Err(Error::contract("multi-index length differs from base point length"));
    }
    let order: usize = kappa.iter().sum();
    if order == 0 || order > 3 {
        return Err(Error::contract(format!(
            "finite differences cover derivative orders 1..=3, got {order}"
        )));
    }
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::contract("step scale must be positive and finite"));
    }
    let h = scale * f64::EPSILON.powf(1.0 / (order as f64 + 2.0));
    let fine = apply_stencil(&f, x0, kappa, h)?;
    let coarse = apply_stencil(&f, x0, kappa, 2.0 * h)?;
    // Central differences err in h^2; one Richardson step removes that term.
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_first_derivative_at_zero() {
        let d = fd_partial(|x| x[0].sin(), &[0.0], &[1], 1.0).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn exp_second_derivative_at_one() {
        let d = fd_partial(|x| x[0].exp(), &[1.0], &[2], 1.0).unwrap();
        assert!((d - std::f64::consts::E).abs() < 1e-6, "got {d}");
    }

    #[test]
    fn cube_third_derivative() {
        let d = fd_partial(|x| x[0].powi(3), &[0.7], &[3], 1.0).unwrap();
        assert!((d - 6.0).abs() < 1e-5, "got {d}");
    }

    #[test]
    fn mixed_partial_of_product() {
        let d = fd_partial(|x| x[0] * x[1], &[2.0, 5.0], &[1, 1], 1.0).unwrap();
        assert!((d - 1.0).abs() < 1e-8, "got {d}");
    }

    #[test]
    fn mixed_third_order() {
        // f = u^2 v: d^3/du^2 dv = 2.
        let d = fd_partial(|x| x[0] * x[0] * x[1], &[0.3, -0.4], &[2, 1], 1.0).unwrap();
        assert!((d - 2.0).abs() < 1e-4, "got {d}");
    }

    #[test]
    fn stencil_failure_near_domain_boundary() {
        let err = fd_partial(|x| x[0].sqrt(), &[1e-9], &[1], 1.0).unwrap_err();
        assert_eq!(err, Error::StencilFailure);
    }

    #[test]
    fn contract_violations() {
        assert!(matches!(
            fd_partial(|x| x[0], &[0.0], &[4], 1.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            fd_partial(|x| x[0], &[0.0], &[0], 1.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            fd_partial(|x| x[0], &[0.0, 1.0], &[1], 1.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            fd_partial(|x| x[0], &[0.0], &[1], 0.0),
            Err(Error::Contract(_))
        ));
    }
}
