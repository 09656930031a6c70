//! Distribution geometry of horizontally conformal submersions.
//!
//! Frames are genuine local vector fields (jets of order 1), built from a
//! pivoted kernel of the jet-valued differential and a jet-level
//! Gram–Schmidt pass, so that their covariant derivatives are meaningful.

use crate::error::{Error, Result};
use crate::fields::{Pullback, SmoothMap, REGULAR_THRESHOLD};
use crate::geometry::{MetricJets, MetricPatch};
use crate::jets::Jet;

/// Order of the frame-field jets.
const FRAME_ORDER: usize = 1;
/// Smallest acceptable pivot relative to the largest entry of `dφ`.
const PIVOT_TOL: f64 = 1e-10;

/// Jet-valued local vector field, one jet per coordinate direction.
pub type Field = Vec<Jet>;

#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub base_point: Vec<f64>,
    /// `n` orthonormal fields spanning the horizontal distribution.
    pub horizontal: Vec<Field>,
    /// `m − n` orthonormal fields spanning the fibres.
    pub vertical: Vec<Field>,
    metric: MetricJets,
    /// Source Christoffel values, `k·m² + i·m + j`.
    gamma: Vec<f64>,
}

fn inner_jet(mj: &MetricJets, u: &[Jet], v: &[Jet]) -> Jet {
    let m = u.len();
    let mut acc = u[0].zero_like();
    for i in 0..m {
        for j in 0..m {
            acc += &(mj.g(i, j) * &u[i]) * &v[j];
        }
    }
    acc
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// Pivoted reduction of the jet matrix `dφ` (`n × m`) to a kernel basis.
fn jet_kernel(dphi: &mut [Vec<Jet>], m: usize, point: &[f64]) -> Result<Vec<Field>> {
    let n = dphi.len();
    let scale = dphi
        .iter()
        .flat_map(|r| r.iter().map(|j| j.value().abs()))
        .fold(0.0, f64::max);
    let mut pivot_rows = Vec::with_capacity(n);
    let mut pivot_cols: Vec<usize> = Vec::with_capacity(n);
    let mut free_rows: Vec<usize> = (0..n).collect();
    for _ in 0..n {
        let mut best = (0.0, 0, 0);
        for &r in &free_rows {
            for c in (0..m).filter(|c| !pivot_cols.contains(c)) {
                let v = dphi[r][c].value().abs();
                if v > best.0 {
                    best = (v, r, c);
                }
            }
        }
        let (v, r, c) = best;
        if v <= PIVOT_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::PivotDegeneracy(point.to_vec()));
        }
        let inv = dphi[r][c].recip()?;
        for k in 0..m {
            dphi[r][k] = &dphi[r][k] * &inv;
        }
        for rr in 0..n {
            if rr != r {
                let factor = dphi[rr][c].clone();
                for k in 0..m {
                    let t = &factor * &dphi[r][k];
                    dphi[rr][k] -= &t;
                }
            }
        }
        free_rows.retain(|&x| x != r);
        pivot_rows.push(r);
        pivot_cols.push(c);
    }
    let proto = dphi[0][0].zero_like();
    Ok((0..m)
        .filter(|c| !pivot_cols.contains(c))
        .map(|f| {
            let mut v = vec![proto.clone(); m];
            v[f] = proto.lift(1.0);
            for (&r, &c) in pivot_rows.iter().zip(&pivot_cols) {
                v[c] = -&dphi[r][f];
            }
            v
        })
        .collect())
}

/// Removes the components of `v` along the orthonormal `basis`; returns the residual.
fn orthogonalize(mj: &MetricJets, v: &[Jet], basis: &[Field]) -> Field {
    let mut out = v.to_vec();
    for e in basis {
        let c = inner_jet(mj, &out, e);
        for (o, ei) in out.iter_mut().zip(e) {
            *o -= &(&c * ei);
        }
    }
    out
}

fn normalize(mj: &MetricJets, v: Field) -> Result<Field> {
    let inv_norm = inner_jet(mj, &v, &v).sqrt()?.recip()?;
    Ok(v.iter().map(|c| c * &inv_norm).collect())
}

pub fn adapted_frame(map: &SmoothMap, g_m: &MetricPatch, x: &[f64]) -> Result<AdaptedFrame> {
    let (m, n) = (map.source_dim(), map.target_dim());
    if m < n {
        return Err(Error::Dimension(format!(
            "adapted frame needs source dimension ≥ target dimension, got {m} -> {n}"
        )));
    }
    if g_m.dim() != m {
        return Err(Error::Dimension(format!(
            "map has source dimension {m}, metric has dimension {}",
            g_m.dim()
        )));
    }
    let metric = g_m.jets(x, FRAME_ORDER + 1)?;
    let gamma: Vec<f64> = metric.christoffel()?.iter().map(Jet::value).collect();
    let metric = metric.truncate(FRAME_ORDER);
    let phi = map.jets(x, FRAME_ORDER + 1)?;
    let mut dphi: Vec<Vec<Jet>> = phi
        .iter()
        .map(|p| (0..m).map(|i| p.diff(i)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    // regularity is measured by |dφ|²/n with the target metric unknown here:
    // a zero differential is the only critical case that matters for a frame
    let d0: f64 = dphi.iter().flatten().map(|j| j.value() * j.value()).sum();
    if d0 / n as f64 <= REGULAR_THRESHOLD {
        return Err(Error::CriticalPoint(x.to_vec()));
    }

    let mut vertical: Vec<Field> = Vec::with_capacity(m - n);
    for seed in jet_kernel(&mut dphi, m, x)? {
        let r = orthogonalize(&metric, &seed, &vertical);
        vertical.push(normalize(&metric, r)?);
    }

    let proto = metric.g(0, 0).zero_like();
    let mut horizontal: Vec<Field> = Vec::with_capacity(n);
    let mut remaining: Vec<usize> = (0..m).collect();
    for _ in 0..n {
        let mut best: Option<(f64, usize, Field)> = None;
        for &k in &remaining {
            let mut seed = vec![proto.clone(); m];
            seed[k] = proto.lift(1.0);
            let mut basis = vertical.clone();
            basis.extend(horizontal.iter().cloned());
            let r = orthogonalize(&metric, &seed, &basis);
            let len = inner_jet(&metric, &r, &r).value();
            if best.as_ref().map_or(true, |b| len > b.0) {
                best = Some((len, k, r));
            }
        }
        let (len, k, r) = best.expect("at least n coordinate seeds remain");
        if len <= PIVOT_TOL {
            return Err(Error::PivotDegeneracy(x.to_vec()));
        }
        remaining.retain(|&j| j != k);
        horizontal.push(normalize(&metric, r)?);
    }
    Ok(AdaptedFrame {
        base_point: x.to_vec(),
        horizontal,
        vertical,
        metric,
        gamma,
    })
}

impl AdaptedFrame {
    pub fn source_dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn horizontal_values(&self) -> Vec<Vec<f64>> {
        self.horizontal.iter().map(|f| values(f)).collect()
    }

    pub fn vertical_values(&self) -> Vec<Vec<f64>> {
        self.vertical.iter().map(|f| values(f)).collect()
    }

    /// `g(u, v)` at the base point.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let m = self.source_dim();
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += self.metric.g(i, j).value() * u[i] * v[j];
            }
        }
        s
    }

    fn project(&self, v: &[f64], basis: &[Field]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for e in basis {
            let e = values(e);
            let c = self.inner(v, &e);
            for (o, ei) in out.iter_mut().zip(&e) {
                *o += c * ei;
            }
        }
        out
    }

    pub fn horizontal_part(&self, v: &[f64]) -> Vec<f64> {
        self.project(v, &self.horizontal)
    }

    pub fn vertical_part(&self, v: &[f64]) -> Vec<f64> {
        self.project(v, &self.vertical)
    }

    /// Horizontal part of a jet field, as a jet field.
    fn horizontal_field(&self, v: &[Jet]) -> Field {
        self.project_field(v, &self.horizontal)
    }

    fn vertical_field(&self, v: &[Jet]) -> Field {
        self.project_field(v, &self.vertical)
    }

    fn project_field(&self, v: &[Jet], basis: &[Field]) -> Field {
        let v: Vec<Jet> = v.iter().map(|j| j.truncate(FRAME_ORDER)).collect();
        let mut out = vec![v[0].zero_like(); v.len()];
        for e in basis {
            let c = inner_jet(&self.metric, &v, e);
            for (o, ei) in out.iter_mut().zip(e) {
                *o += &(&c * ei);
            }
        }
        out
    }

    /// `(∇_u Y)^k = u^i(∂_iY^k + Γ^k_ij Y^j)` at the base point.
    pub fn covariant(&self, u: &[f64], y: &[Jet]) -> Result<Vec<f64>> {
        let m = self.source_dim();
        let dy: Vec<Vec<f64>> = y.iter().map(Jet::gradient).collect();
        let yv = values(y);
        let mut out = vec![0.0; m];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..m {
                let mut s = dy[k][i];
                for j in 0..m {
                    s += self.gamma[(k * m + i) * m + j] * yv[j];
                }
                *o += u[i] * s;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanCurvatures {
    /// Mean curvature of the fibres (horizontal).
    pub mu: Vec<f64>,
    /// Mean curvature of the horizontal distribution (vertical).
    pub nu: Vec<f64>,
}

impl AdaptedFrame {
    pub fn mean_curvatures(&self) -> Result<MeanCurvatures> {
        let m = self.source_dim();
        let mean = |fields: &[Field], proj: &dyn Fn(&[f64]) -> Vec<f64>| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; m];
            for e in fields {
                let d = proj(&self.covariant(&values(e), e)?);
                for (a, v) in acc.iter_mut().zip(d) {
                    *a += v;
                }
            }
            let k = fields.len().max(1) as f64;
            Ok(acc.iter().map(|v| v / k).collect())
        };
        Ok(MeanCurvatures {
            mu: mean(&self.vertical, &|v| self.horizontal_part(v))?,
            nu: mean(&self.horizontal, &|v| self.vertical_part(v))?,
        })
    }

    /// `A_E F = (∇_{E^H}F^H)^V` and `B_E F = (∇_{E^V}F^V)^H` for jet fields `E`, `F`.
    pub fn fundamental_tensors(&self, e: &[Jet], f: &[Jet]) -> Result<FundamentalTensors> {
        let ev = values(e);
        let a = self.vertical_part(&self.covariant(&self.horizontal_part(&ev), &self.horizontal_field(f))?);
        let b = self.horizontal_part(&self.covariant(&self.vertical_part(&ev), &self.vertical_field(f))?);
        Ok(FundamentalTensors { a, b })
    }
}

pub fn mean_curvatures(map: &SmoothMap, g_m: &MetricPatch, x: &[f64]) -> Result<MeanCurvatures> {
    adapted_frame(map, g_m, x)?.mean_curvatures()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalTensors {
    /// `A_E F`, vertical.
    pub a: Vec<f64>,
    /// `B_E F`, horizontal.
    pub b: Vec<f64>,
}

/// Coordinate-constant extension of a vector at `x`.
pub fn constant_field(v: &[f64], x: &[f64]) -> Result<Field> {
    let proto = Jet::constant(0.0, x.len(), FRAME_ORDER)?;
    Ok(v.iter().map(|&c| proto.lift(c)).collect())
}

/// `A` and `B` on the coordinate-constant extensions of `e` and `f`.
pub fn fundamental_tensors(
    map: &SmoothMap,
    g_m: &MetricPatch,
    x: &[f64],
    e: &[f64],
    f: &[f64],
) -> Result<FundamentalTensors> {
    let frame = adapted_frame(map, g_m, x)?;
    frame.fundamental_tensors(&constant_field(e, x)?, &constant_field(f, x)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensionViaX {
    /// `X = (2−n)∇^H lnλ − (m−n)μ`
    pub x: Vec<f64>,
    pub dphi_x: Vec<f64>,
    pub tau: Vec<f64>,
    /// `|dφ(X) − τ(φ)|_h`
    pub mismatch: f64,
}

pub fn tension_via_x(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<TensionViaX> {
    let pb = Pullback::new(map, g_m, h_n, x, 2)?;
    let conf = pb.conformality(crate::fields::CONFORMAL_TOL);
    if !conf.is_regular {
        return Err(Error::CriticalPoint(x.to_vec()));
    }
    if !conf.is_hwc {
        return Err(Error::NotConformal {
            point: x.to_vec(),
            residual: conf.hwc_residual,
        });
    }
    let frame = adapted_frame(map, g_m, x)?;
    let (m, n) = (map.source_dim(), map.target_dim());
    let lambda_sq = pb.lambda_sq_jets();
    let grad_ln: Vec<f64> = pb
        .gradient(&lambda_sq)
        .iter()
        .map(|v| v / (2.0 * lambda_sq.value()))
        .collect();
    let grad_h = frame.horizontal_part(&grad_ln);
    let mu = frame.mean_curvatures()?.mu;
    let xv: Vec<f64> = (0..m)
        .map(|i| (2.0 - n as f64) * grad_h[i] - (m - n) as f64 * mu[i])
        .collect();
    let dphi_x = pb.push(&xv);
    let tau: Vec<f64> = pb.tension_jets(0)?.iter().map(Jet::value).collect();
    let diff: Vec<f64> = dphi_x.iter().zip(&tau).map(|(a, b)| a - b).collect();
    Ok(TensionViaX {
        mismatch: pb.norm(&diff),
        x: xv,
        dphi_x,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::norm_sq;
    use approx::assert_abs_diff_eq;

    /// `dx² + dy² + β(x)²dz²` with `β = e^{−x}(1 − e^{x})²`.
    fn twisted() -> (SmoothMap, MetricPatch) {
        let beta = |x: &Jet| -> Result<Jet> {
            let e = x.exp()?;
            Ok(&(-x).exp()? * &(-&e + 1.0).square())
        };
        let g = MetricPatch::new(
            3,
            "twisted product",
            move |x| {
                let one = x[0].lift(1.0);
                let zero = x[0].zero_like();
                let b2 = beta(&x[0])?.square();
                Ok(vec![
                    one.clone(), zero.clone(), zero.clone(),
                    zero.clone(), one, zero.clone(),
                    zero.clone(), zero, b2,
                ])
            },
            |x| x[0] > 0.0,
        );
        let map = SmoothMap::new(3, 2, "projection", |x| Ok(x[..2].to_vec()), |x| x[0] > 0.0);
        (map, g)
    }

    fn f(x: f64) -> f64 {
        -(1.0 + x.exp()) / (1.0 - x.exp())
    }

    #[test]
    fn twisted_frame() {
        let (map, g) = twisted();
        let x = [1.0, 0.3, -0.2];
        let frame = adapted_frame(&map, &g, &x).unwrap();
        let beta = (-1.0f64).exp() * (1.0 - 1.0f64.exp()).powi(2);
        let v = frame.vertical_values();
        assert_eq!(v.len(), 1);
        assert_abs_diff_eq!(v[0][2].abs(), 1.0 / beta, epsilon = 1e-12);
        let all: Vec<Vec<f64>> = frame.vertical_values().into_iter().chain(frame.horizontal_values()).collect();
        for (a, u) in all.iter().enumerate() {
            for (b, w) in all.iter().enumerate() {
                let d = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(frame.inner(u, w), d, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn twisted_mean_curvatures_and_b() {
        let (map, g) = twisted();
        let x = [1.0, 0.0, 0.0];
        let mc = mean_curvatures(&map, &g, &x).unwrap();
        assert_abs_diff_eq!(mc.mu[0], -f(1.0), epsilon = 1e-10);
        assert_abs_diff_eq!(mc.mu[1], 0.0, epsilon = 1e-12);
        assert!(mc.nu.iter().all(|v| v.abs() < 1e-12));

        let frame = adapted_frame(&map, &g, &x).unwrap();
        let v = frame.vertical_values()[0].clone();
        let t = fundamental_tensors(&map, &g, &x, &v, &v).unwrap();
        assert_abs_diff_eq!(t.b[0], -2.1640, epsilon = 1e-4);
        assert_abs_diff_eq!(t.b[0], mc.mu[0], epsilon = 1e-9);
        let t = fundamental_tensors(&map, &g, &x, &[1.0, 0.5, 0.0], &[0.2, 1.0, 0.0]).unwrap();
        assert!(t.a.iter().chain(&t.b).all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn twisted_tension_identity() {
        let (map, g) = twisted();
        let e = MetricPatch::euclidean(2);
        let t = tension_via_x(&map, &g, &e, &[1.5, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(t.x[0], f(1.5), epsilon = 1e-10);
        assert!(t.mismatch < 1e-9);
    }

    #[test]
    fn rank_deficient_map_is_degenerate() {
        let map = SmoothMap::new(
            5,
            5,
            "normalize",
            |x| {
                let r = norm_sq(x).sqrt()?.recip()?;
                Ok(x.iter().map(|c| c * &r).collect())
            },
            |_| true,
        );
        // x/|x| as a map into R⁵ has rank 4, so it is not a submersion onto R⁵
        assert!(matches!(
            adapted_frame(&map, &MetricPatch::euclidean(5), &[2.0, 0.0, 0.0, 0.0, 0.0]),
            Err(Error::PivotDegeneracy(_))
        ));
    }

    #[test]
    fn euclidean_projection_is_flat() {
        let map = SmoothMap::new(3, 2, "projection", |x| Ok(x[..2].to_vec()), |_| true);
        let t = fundamental_tensors(&map, &MetricPatch::euclidean(3), &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0], &[-1.0, 0.5, 2.0])
            .unwrap();
        assert!(t.a.iter().chain(&t.b).all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn constant_map_is_critical() {
        let map = SmoothMap::constant(3, vec![1.0, 2.0]);
        assert!(matches!(
            adapted_frame(&map, &MetricPatch::euclidean(3), &[0.0; 3]),
            Err(Error::CriticalPoint(_))
        ));
    }

    #[test]
    fn inversion_tension_identity() {
        let map = SmoothMap::new(
            4,
            4,
            "inversion",
            |x| {
                let r = norm_sq(x).recip()?;
                Ok(x.iter().map(|xi| xi * &r).collect())
            },
            |_| true,
        );
        let e = MetricPatch::euclidean(4);
        let t = tension_via_x(&map, &e, &e, &[0.3, 0.4, -0.5, 0.6]).unwrap();
        assert!(t.mismatch < 1e-10);
    }
}
