//! Metric-level differential geometry on a coordinate chart.
//!
//! Everything is jet-backed: the metric is evaluated as a matrix of jets, its
//! inverse and Christoffel symbols are jets of lower order, and the
//! differential operators on functions and one-forms consume those jets.
//!
//! Sign conventions: `R(X,Y) = [∇_X, ∇_Y] − ∇_[X,Y]`, stored as
//! `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l`, and `Δf = tr ∇df` (negative spectrum).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jets::{Jet, MAX_ORDER};

/// Jet-evaluable vector-valued function of the chart coordinates.
pub type JetFn = Arc<dyn Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync>;
/// Pointwise domain predicate.
pub type DomainFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

const SYMMETRY_TOL: f64 = 1e-12;

/// A Riemannian metric on a coordinate chart.
#[derive(Clone)]
pub struct MetricPatch {
    dim: usize,
    label: String,
    /// Row-major `dim × dim` components `g_ij`.
    components: JetFn,
    domain: DomainFn,
}

impl fmt::Debug for MetricPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricPatch")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl MetricPatch {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        components: impl Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            components: Arc::new(components),
            domain: Arc::new(domain),
        }
    }

    /// Flat metric `δ_ij` on all of `R^dim`.
    pub fn euclidean(dim: usize) -> Self {
        Self::conformal(dim, format!("euclidean R^{dim}"), |x| Ok(x[0].lift(1.0)), |_| true)
    }

    /// `factor(x) · δ_ij`.
    pub fn conformal(
        dim: usize,
        label: impl Into<String>,
        factor: impl Fn(&[Jet]) -> Result<Jet> + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            dim,
            label,
            move |x: &[Jet]| {
                let f = factor(x)?;
                let zero = f.zero_like();
                let n = x.len();
                Ok((0..n * n)
                    .map(|k| if k / n == k % n { f.clone() } else { zero.clone() })
                    .collect())
            },
            domain,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && (self.domain)(x)
    }

    /// Raw component jets for arbitrary input jets (no domain or SPD checks).
    pub fn components(&self, vars: &[Jet]) -> Result<Vec<Jet>> {
        if vars.len() != self.dim {
            return Err(Error::Dimension(format!(
                "metric `{}` has dimension {}, got {} coordinates",
                self.label,
                self.dim,
                vars.len()
            )));
        }
        let g = (self.components)(vars)?;
        if g.len() != self.dim * self.dim {
            return Err(Error::Dimension(format!(
                "metric `{}` returned {} components",
                self.label,
                g.len()
            )));
        }
        Ok(g)
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain {
                point: x.to_vec(),
                label: self.label.clone(),
            });
        }
        Ok(())
    }

    /// Metric and inverse as jets of the given order at `x`.
    pub fn jets(&self, x: &[f64], order: usize) -> Result<MetricJets> {
        self.check_point(x)?;
        if order > MAX_ORDER {
            return Err(Error::JetBudget {
                needed: order,
                available: MAX_ORDER,
            });
        }
        let vars = Jet::variables(x, order)?;
        MetricJets::from_components(self.dim, self.components(&vars)?, &self.label, x)
    }
}

/// Metric, inverse metric and (lazily) Christoffel symbols as jets at one point.
#[derive(Clone, Debug)]
pub struct MetricJets {
    dim: usize,
    g: Vec<Jet>,
    inv: Vec<Jet>,
}

impl MetricJets {
    /// Checks symmetry and positive definiteness at the constant term and
    /// inverts `g` at jet level.
    pub fn from_components(dim: usize, g: Vec<Jet>, label: &str, point: &[f64]) -> Result<Self> {
        let not_spd = || Error::NotSpd {
            label: label.to_string(),
            point: point.to_vec(),
        };
        let g0 = DMatrix::from_fn(dim, dim, |i, j| g[i * dim + j].value());
        if g0.iter().any(|v| !v.is_finite()) {
            return Err(not_spd());
        }
        let scale = g0.amax().max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (g0[(i, j)] - g0[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(not_spd());
                }
            }
        }
        let eig = SymmetricEigen::new(g0.clone());
        if eig.eigenvalues.min() <= 0.0 {
            return Err(not_spd());
        }
        let inv0 = g0.try_inverse().ok_or_else(not_spd)?;
        let inv = jet_matrix_inverse(dim, &g, &inv0);
        Ok(Self { dim, g, inv })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.g[0].order()
    }

    pub fn g(&self, i: usize, j: usize) -> &Jet {
        &self.g[i * self.dim + j]
    }

    pub fn inv(&self, i: usize, j: usize) -> &Jet {
        &self.inv[i * self.dim + j]
    }

    pub fn g_values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.g(i, j).value())
    }

    pub fn inv_values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.inv(i, j).value())
    }

    /// A copy with every jet truncated to `order`.
    pub fn truncate(&self, order: usize) -> Self {
        Self {
            dim: self.dim,
            g: self.g.iter().map(|j| j.truncate(order)).collect(),
            inv: self.inv.iter().map(|j| j.truncate(order)).collect(),
        }
    }

    /// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, one order below the metric.
    /// Flattened as `k·d² + i·d + j`.
    pub fn christoffel(&self) -> Result<Vec<Jet>> {
        let d = self.dim;
        let order = self.order();
        if order == 0 {
            return Err(Error::JetBudget {
                needed: 1,
                available: 0,
            });
        }
        // dg[l][i*d + j] = ∂_l g_ij
        let dg: Vec<Vec<Jet>> = (0..d)
            .map(|l| self.g.iter().map(|gij| gij.diff(l)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let inv: Vec<Jet> = self.inv.iter().map(|j| j.truncate(order - 1)).collect();
        // first kind: Γ_{l,ij}
        let mut first = Vec::with_capacity(d * d * d);
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let v = &(&dg[i][j * d + l] + &dg[j][i * d + l]) - &dg[l][i * d + j];
                    first.push(v.scale(0.5));
                }
            }
        }
        let mut out = Vec::with_capacity(d * d * d);
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut acc = inv[0].zero_like();
                    for l in 0..d {
                        acc += &inv[k * d + l] * &first[l * d * d + i * d + j];
                    }
                    out.push(acc);
                }
            }
        }
        Ok(out)
    }
}

/// `X ← X(2I − GX)` from the constant-term inverse until every order is exact.
fn jet_matrix_inverse(d: usize, g: &[Jet], inv0: &DMatrix<f64>) -> Vec<Jet> {
    let proto = &g[0];
    let mut x: Vec<Jet> = (0..d * d)
        .map(|k| proto.lift(inv0[(k / d, k % d)]))
        .collect();
    let mut exact = 1;
    while exact <= proto.order() {
        let gx = mat_mul(d, g, &x);
        let correction: Vec<Jet> = (0..d * d)
            .map(|k| {
                let diag = if k / d == k % d { 2.0 } else { 0.0 };
                (-&gx[k]).add_scalar(diag)
            })
            .collect();
        x = mat_mul(d, &x, &correction);
        exact *= 2;
    }
    x
}

fn mat_mul(d: usize, a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = a[0].zero_like();
            for k in 0..d {
                acc += &a[i * d + k] * &b[k * d + j];
            }
            out.push(acc);
        }
    }
    out
}

/// Christoffel symbols at a point.
#[derive(Clone, Debug)]
pub struct ConnectionData {
    pub point: Vec<f64>,
    dim: usize,
    christoffel: Vec<Jet>,
}

impl ConnectionData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_ij` at the point.
    pub fn value(&self, k: usize, i: usize, j: usize) -> f64 {
        self.jet(k, i, j).value()
    }

    pub fn jet(&self, k: usize, i: usize, j: usize) -> &Jet {
        let d = self.dim;
        &self.christoffel[k * d * d + i * d + j]
    }

    pub fn jets(&self) -> &[Jet] {
        &self.christoffel
    }
}

/// Christoffel symbols as jets of `jet_order` (the metric is expanded one order higher).
pub fn christoffel(metric: &MetricPatch, x: &[f64], jet_order: usize) -> Result<ConnectionData> {
    if jet_order + 1 > MAX_ORDER {
        return Err(Error::JetBudget {
            needed: jet_order + 1,
            available: MAX_ORDER,
        });
    }
    let mj = metric.jets(x, jet_order + 1)?;
    Ok(ConnectionData {
        point: x.to_vec(),
        dim: metric.dim(),
        christoffel: mj.christoffel()?,
    })
}

/// Riemann, Ricci and scalar curvature at a point.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    dim: usize,
    /// `R^l_{ijk}` flattened as `l·d³ + i·d² + j·d + k`.
    riemann: Vec<f64>,
    ricci: Vec<f64>,
    pub scalar: f64,
    metric: Vec<f64>,
}

impl CurvatureData {
    /// From Christoffel jets of order ≥ 1 and the metric values at the point.
    pub fn from_christoffel(dim: usize, gamma: &[Jet], g: &DMatrix<f64>, inv: &DMatrix<f64>) -> Self {
        let d = dim;
        let gm = |k: usize, i: usize, j: usize| &gamma[k * d * d + i * d + j];
        let mut riemann = vec![0.0; d * d * d * d];
        for l in 0..d {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let mut r = gm(l, j, k).gradient()[i] - gm(l, i, k).gradient()[j];
                        for p in 0..d {
                            r += gm(l, i, p).value() * gm(p, j, k).value()
                                - gm(l, j, p).value() * gm(p, i, k).value();
                        }
                        riemann[((l * d + i) * d + j) * d + k] = r;
                    }
                }
            }
        }
        let mut ricci = vec![0.0; d * d];
        for j in 0..d {
            for k in 0..d {
                ricci[j * d + k] = (0..d).map(|i| riemann[((i * d + i) * d + j) * d + k]).sum();
            }
        }
        let scalar = (0..d)
            .flat_map(|j| (0..d).map(move |k| (j, k)))
            .map(|(j, k)| inv[(j, k)] * ricci[j * d + k])
            .sum();
        Self {
            dim,
            riemann,
            ricci,
            scalar,
            metric: g.iter().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R^l_{ijk}`: the `∂_l` component of `R(∂_i, ∂_j)∂_k`.
    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim;
        self.riemann[((l * d + i) * d + j) * d + k]
    }

    /// `⟨R(∂_i, ∂_j)∂_k, ∂_l⟩`.
    pub fn lowered(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|m| self.metric[l * d + m] * self.riemann(m, i, j, k))
            .sum()
    }

    /// `Ric_jk = R^i_{ijk}`.
    pub fn ricci(&self, j: usize, k: usize) -> f64 {
        self.ricci[j * self.dim + k]
    }

    /// `R(u, v)w` for coordinate vectors.
    pub fn apply(&self, u: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if v[j] == 0.0 {
                    continue;
                }
                for k in 0..d {
                    let c = u[i] * v[j] * w[k];
                    if c == 0.0 {
                        continue;
                    }
                    for (l, o) in out.iter_mut().enumerate() {
                        *o += c * self.riemann(l, i, j, k);
                    }
                }
            }
        }
        out
    }

    /// `Ric(v)` as a vector: `(Ric v)^a = g^{ab} Ric_bc v^c`.
    pub fn ricci_vector(&self, v: &[f64], inv: &DMatrix<f64>) -> Vec<f64> {
        let d = self.dim;
        let low: Vec<f64> = (0..d)
            .map(|b| (0..d).map(|c| self.ricci(b, c) * v[c]).sum())
            .collect();
        (0..d)
            .map(|a| (0..d).map(|b| inv[(a, b)] * low[b]).sum())
            .collect()
    }
}

pub fn curvature(metric: &MetricPatch, x: &[f64]) -> Result<CurvatureData> {
    let mj = metric.jets(x, 2)?;
    let gamma = mj.christoffel()?;
    Ok(CurvatureData::from_christoffel(
        metric.dim(),
        &gamma,
        &mj.g_values(),
        &mj.inv_values(),
    ))
}

/// `g^{ij} ∂_j f` as jets one order below `f`.
pub(crate) fn gradient_jets(df: &[Jet], mj: &MetricJets) -> Vec<Jet> {
    let d = mj.dim();
    let order = df[0].order();
    (0..d)
        .map(|i| {
            let mut acc = df[0].zero_like();
            for j in 0..d {
                acc += &mj.inv(i, j).truncate(order) * &df[j];
            }
            acc
        })
        .collect()
}

/// `g^{ij}(∂_i ω_j − Γ^k_ij ω_k)`, one order below `ω`.
pub(crate) fn divergence_jets(omega: &[Jet], mj: &MetricJets, gamma: &[Jet]) -> Result<Jet> {
    let d = mj.dim();
    let order = omega[0].order();
    if order == 0 {
        return Err(Error::JetBudget {
            needed: 1,
            available: 0,
        });
    }
    let lo = order - 1;
    let mut acc = Jet::constant(0.0, d, lo)?;
    for i in 0..d {
        for j in 0..d {
            let mut term = omega[j].diff(i)?;
            for k in 0..d {
                term -= &gamma[k * d * d + i * d + j].truncate(lo) * &omega[k].truncate(lo);
            }
            acc += &mj.inv(i, j).truncate(lo) * &term;
        }
    }
    Ok(acc)
}

/// Evaluates a jet-evaluable scalar at `x` with the given order.
fn eval_scalar(
    f: &dyn Fn(&[Jet]) -> Result<Jet>,
    x: &[f64],
    order: usize,
) -> Result<Jet> {
    let vars = Jet::variables(x, order)?;
    f(&vars)
}

/// `(∇f)^i = g^{ij} ∂_j f`.
pub fn gradient(
    f: &dyn Fn(&[Jet]) -> Result<Jet>,
    metric: &MetricPatch,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mj = metric.jets(x, 1)?;
    let fj = eval_scalar(f, x, 1)?;
    let df: Vec<Jet> = (0..x.len()).map(|i| fj.diff(i)).collect::<Result<_>>()?;
    Ok(gradient_jets(&df, &mj).iter().map(Jet::value).collect())
}

/// Covariant divergence of a one-form.
pub fn div_oneform(
    omega: &dyn Fn(&[Jet]) -> Result<Vec<Jet>>,
    metric: &MetricPatch,
    x: &[f64],
) -> Result<f64> {
    let mj = metric.jets(x, 1)?;
    let gamma = mj.christoffel()?;
    let om = omega(&Jet::variables(x, 1)?)?;
    if om.len() != metric.dim() {
        return Err(Error::Dimension(format!(
            "one-form has {} components on a {}-dimensional chart",
            om.len(),
            metric.dim()
        )));
    }
    Ok(divergence_jets(&om, &mj, &gamma)?.value())
}

/// `Δf = tr ∇df`, computed as the divergence of `df`.
pub fn laplace_beltrami(
    f: &dyn Fn(&[Jet]) -> Result<Jet>,
    metric: &MetricPatch,
    x: &[f64],
) -> Result<f64> {
    let mj = metric.jets(x, 1)?;
    let gamma = mj.christoffel()?;
    let fj = eval_scalar(f, x, 2)?;
    let df: Vec<Jet> = (0..x.len()).map(|i| fj.diff(i)).collect::<Result<_>>()?;
    Ok(divergence_jets(&df, &mj, &gamma)?.value())
}
