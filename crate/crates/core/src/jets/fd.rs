//! Central finite differences with one Richardson pass.
//!
//! Used only as an independent check on the jet engine: nothing in the
//! verification pipeline depends on it.

use crate::error::{Error, Result};

use super::MultiIndex;

/// Second-order central stencil for the `k`-th derivative: `(offset, weight)` in units of `h`.
fn stencil(k: usize) -> &'static [(i32, f64)] {
    match k {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("multi-index order is capped at 4"),
    }
}

/// Step used by the cross-validation suites: `1e-3` for orders 1–2, `5e-2` for 3–4.
pub fn default_step(order: usize) -> f64 {
    if order <= 2 {
        1e-3
    } else {
        5e-2
    }
}

fn central<F>(f: &F, x0: &[f64], alpha: &MultiIndex, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let exps: Vec<usize> = alpha.exponents().collect();
    let stencils: Vec<&[(i32, f64)]> = exps.iter().map(|&k| stencil(k)).collect();
    let mut counters = vec![0usize; exps.len()];
    let mut point = x0.to_vec();
    let mut sum = 0.0;
    loop {
        let mut weight = 1.0;
        for (d, s) in stencils.iter().enumerate() {
            let (off, w) = s[counters[d]];
            point[d] = x0[d] + off as f64 * h;
            weight *= w;
        }
        let value = f(&point).ok_or_else(|| Error::StencilOutsideDomain(point.clone()))?;
        sum += weight * value;

        let mut d = 0;
        loop {
            if d == counters.len() {
                return Ok(sum / h.powi(alpha.order() as i32));
            }
            counters[d] += 1;
            if counters[d] < stencils[d].len() {
                break;
            }
            counters[d] = 0;
            d += 1;
        }
    }
}

/// Estimate of `∂^α f(x0)`; `f` returns `None` outside its domain.
pub fn fd_oracle<F>(f: F, x0: &[f64], alpha: &MultiIndex, step: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    if alpha.dim() != x0.len() {
        return Err(Error::Dimension(format!(
            "multi-index of dimension {} at a point of dimension {}",
            alpha.dim(),
            x0.len()
        )));
    }
    let coarse = central(&f, x0, alpha, step)?;
    let fine = central(&f, x0, alpha, step / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
