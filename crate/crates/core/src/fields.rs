//! Map-level operators: differential, conformality, tension, p-tension,
//! the pullback connection and Laplacian, and the bitension field.
//!
//! All of them are assembled from a [`Pullback`] context, which holds the
//! map's jets at a point together with the source metric jets and the target
//! metric, inverse metric and Christoffel symbols composed through the map.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{divergence_jets, CurvatureData, DomainFn, JetFn, MetricJets, MetricPatch};
use crate::jets::{Composer, Jet, MAX_ORDER};

/// A point is regular when `λ²` exceeds this.
pub const REGULAR_THRESHOLD: f64 = 1e-12;

/// Tolerance used when an operation requires a conformal map.
pub const CONFORMAL_TOL: f64 = 1e-8;

/// A smooth map `φ` between coordinate charts.
#[derive(Clone)]
pub struct SmoothMap {
    source_dim: usize,
    target_dim: usize,
    label: String,
    components: JetFn,
    domain: DomainFn,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("source_dim", &self.source_dim)
            .field("target_dim", &self.target_dim)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl SmoothMap {
    pub fn new(
        source_dim: usize,
        target_dim: usize,
        label: impl Into<String>,
        components: impl Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            source_dim,
            target_dim,
            label: label.into(),
            components: Arc::new(components),
            domain: Arc::new(domain),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, format!("identity of R^{dim}"), |x| Ok(x.to_vec()), |_| true)
    }

    pub fn constant(source_dim: usize, value: Vec<f64>) -> Self {
        let n = value.len();
        Self::new(
            source_dim,
            n,
            "constant map",
            move |x| Ok(value.iter().map(|&v| x[0].lift(v)).collect()),
            |_| true,
        )
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.source_dim && (self.domain)(x)
    }

    /// Component jets for arbitrary input jets (no domain check).
    pub fn components(&self, vars: &[Jet]) -> Result<Vec<Jet>> {
        if vars.len() != self.source_dim {
            return Err(Error::Dimension(format!(
                "map `{}` has source dimension {}, got {} coordinates",
                self.label,
                self.source_dim,
                vars.len()
            )));
        }
        let out = (self.components)(vars)?;
        if out.len() != self.target_dim {
            return Err(Error::Dimension(format!(
                "map `{}` returned {} components, expected {}",
                self.label,
                out.len(),
                self.target_dim
            )));
        }
        Ok(out)
    }

    /// `φ^α` as jets of the given order at `x`.
    pub fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain {
                point: x.to_vec(),
                label: self.label.clone(),
            });
        }
        self.components(&Jet::variables(x, order)?)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jets(x, 0)?.iter().map(Jet::value).collect())
    }
}

/// `(dφ)^α_i = ∂φ^α/∂x^i` as an `n × m` matrix.
pub fn differential(map: &SmoothMap, x: &[f64]) -> Result<DMatrix<f64>> {
    let phi = map.jets(x, 1)?;
    let grads: Vec<Vec<f64>> = phi.iter().map(Jet::gradient).collect();
    Ok(DMatrix::from_fn(map.target_dim(), map.source_dim(), |a, i| grads[a][i]))
}

/// Outcome of the horizontal weak conformality test at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalityData {
    pub is_hwc: bool,
    pub dilation_sq: f64,
    pub hwc_residual: f64,
    pub is_regular: bool,
}

/// Compares `dφ g⁻¹ dφᵀ` with `λ² h⁻¹`.
fn conformality(
    dphi: &DMatrix<f64>,
    ginv: &DMatrix<f64>,
    h: &DMatrix<f64>,
    hinv: &DMatrix<f64>,
    tol: f64,
) -> ConformalityData {
    let n = h.nrows() as f64;
    let co = dphi * ginv * dphi.transpose();
    let raw = (&co * h).trace() / n;
    let is_regular = raw > REGULAR_THRESHOLD;
    let dilation_sq = if is_regular { raw } else { 0.0 };
    let hwc_residual = (co - hinv * raw).amax() / raw.max(1.0);
    ConformalityData {
        is_hwc: hwc_residual <= tol,
        dilation_sq,
        hwc_residual,
        is_regular,
    }
}

pub fn hwc_check(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
    tol: f64,
) -> Result<ConformalityData> {
    check_dims(map, g_m, h_n)?;
    let dphi = differential(map, x)?;
    let g = g_m.jets(x, 0)?;
    let y = map.eval(x)?;
    let h = h_n.jets(&y, 0)?;
    Ok(conformality(
        &dphi,
        &g.inv_values(),
        &h.g_values(),
        &h.inv_values(),
        tol,
    ))
}

fn check_dims(map: &SmoothMap, g_m: &MetricPatch, h_n: &MetricPatch) -> Result<()> {
    if map.source_dim() != g_m.dim() || map.target_dim() != h_n.dim() {
        return Err(Error::Dimension(format!(
            "map `{}` is R^{} -> R^{} but metrics have dimensions {} and {}",
            map.label(),
            map.source_dim(),
            map.target_dim(),
            g_m.dim(),
            h_n.dim()
        )));
    }
    Ok(())
}

/// Map, metrics and target geometry as jets at a single source point.
///
/// With map jets of order `K` (2 ≤ K ≤ 4):
/// `dφ`, `g`, `g⁻¹`, `h∘φ`, `h⁻¹∘φ` are known to order `K − 1`,
/// `Γ^M` and `Γ^N∘φ` to order `K − 2` (at least 1), and the target
/// curvature is evaluated at `φ(x)`.
#[derive(Clone, Debug)]
pub struct Pullback {
    m: usize,
    n: usize,
    order: usize,
    point: Vec<f64>,
    image: Vec<f64>,
    phi: Vec<Jet>,
    /// `α·m + i`
    dphi: Vec<Jet>,
    source: MetricJets,
    source_gamma: Vec<Jet>,
    h: Vec<Jet>,
    hinv: Vec<Jet>,
    /// `Γ^α_βγ ∘ φ`, flattened as `α·n² + β·n + γ`.
    target_gamma: Vec<Jet>,
    h0: DMatrix<f64>,
    hinv0: DMatrix<f64>,
    curvature: CurvatureData,
    /// `M^αβ = g^{ij} ∂_iφ^α ∂_jφ^β`
    co_metric: Vec<Jet>,
}

impl Pullback {
    pub fn new(
        map: &SmoothMap,
        g_m: &MetricPatch,
        h_n: &MetricPatch,
        x: &[f64],
        order: usize,
    ) -> Result<Self> {
        check_dims(map, g_m, h_n)?;
        if order > MAX_ORDER {
            return Err(Error::JetBudget {
                needed: order,
                available: MAX_ORDER,
            });
        }
        let order = order.max(2);
        let (m, n) = (map.source_dim(), map.target_dim());
        if !g_m.contains(x) {
            return Err(Error::OutsideDomain {
                point: x.to_vec(),
                label: g_m.label().to_string(),
            });
        }
        let phi = map.jets(x, order)?;
        let image: Vec<f64> = phi.iter().map(Jet::value).collect();
        let dphi = phi
            .iter()
            .flat_map(|p| (0..m).map(move |i| p.diff(i)))
            .collect::<Result<Vec<_>>>()?;

        let source = g_m.jets(x, order - 1)?;
        let source_gamma = source.christoffel()?;

        let target = h_n.jets(&image, (order - 1).max(2))?;
        let gamma_y = target.christoffel()?;
        let h0 = target.g_values();
        let hinv0 = target.inv_values();
        let curvature = CurvatureData::from_christoffel(n, &gamma_y, &h0, &hinv0);

        let composer = Composer::new(&phi, order - 1)?;
        let compose = |f: &dyn Fn(usize, usize) -> Jet| -> Result<Vec<Jet>> {
            (0..n * n).map(|k| composer.apply(&f(k / n, k % n))).collect()
        };
        let h = compose(&|a, b| target.g(a, b).clone())?;
        let hinv = compose(&|a, b| target.inv(a, b).clone())?;
        let target_gamma = gamma_y
            .iter()
            .map(|j| composer.apply(j))
            .collect::<Result<Vec<_>>>()?;

        let co_metric = co_metric(m, n, &dphi, &source);
        Ok(Self {
            m,
            n,
            order,
            point: x.to_vec(),
            image,
            phi,
            dphi,
            source,
            source_gamma,
            h,
            hinv,
            target_gamma,
            h0,
            hinv0,
            curvature,
            co_metric,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.m
    }

    pub fn target_dim(&self) -> usize {
        self.n
    }

    /// Jet order of the map components.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// `φ(x)`.
    pub fn image(&self) -> &[f64] {
        &self.image
    }

    pub fn phi(&self) -> &[Jet] {
        &self.phi
    }

    /// `∂_iφ^α`.
    pub fn dphi(&self, a: usize, i: usize) -> &Jet {
        &self.dphi[a * self.m + i]
    }

    pub fn dphi_values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.m, |a, i| self.dphi(a, i).value())
    }

    pub fn source(&self) -> &MetricJets {
        &self.source
    }

    /// `Γ^k_ij` of the source metric, flattened as `k·m² + i·m + j`.
    pub fn source_gamma(&self) -> &[Jet] {
        &self.source_gamma
    }

    /// `h_αβ ∘ φ`.
    pub fn h(&self, a: usize, b: usize) -> &Jet {
        &self.h[a * self.n + b]
    }

    /// `h^αβ ∘ φ`.
    pub fn hinv(&self, a: usize, b: usize) -> &Jet {
        &self.hinv[a * self.n + b]
    }

    /// `Γ^α_βγ ∘ φ`.
    pub fn target_gamma(&self, a: usize, b: usize, c: usize) -> &Jet {
        &self.target_gamma[(a * self.n + b) * self.n + c]
    }

    pub fn h_values(&self) -> &DMatrix<f64> {
        &self.h0
    }

    pub fn hinv_values(&self) -> &DMatrix<f64> {
        &self.hinv0
    }

    /// Curvature of the target at `φ(x)`.
    pub fn target_curvature(&self) -> &CurvatureData {
        &self.curvature
    }

    /// `g^{ij} ∂_iφ^α ∂_jφ^β`.
    pub fn co_metric(&self, a: usize, b: usize) -> &Jet {
        &self.co_metric[a * self.n + b]
    }

    pub fn conformality(&self, tol: f64) -> ConformalityData {
        conformality(
            &self.dphi_values(),
            &self.source.inv_values(),
            &self.h0,
            &self.hinv0,
            tol,
        )
    }

    /// `|dφ|² = h_αβ g^{ij} ∂_iφ^α ∂_jφ^β`, order `K − 1`.
    pub fn energy_density_jets(&self) -> Jet {
        let mut acc = self.co_metric[0].zero_like();
        for (h, c) in self.h.iter().zip(&self.co_metric) {
            acc += h * c;
        }
        acc
    }

    /// `λ² = |dφ|²/n`, order `K − 1` (meaningful for horizontally weakly conformal maps).
    pub fn lambda_sq_jets(&self) -> Jet {
        self.energy_density_jets().scale(1.0 / self.n as f64)
    }

    /// `h(u, v)` at `φ(x)`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += self.h0[(a, b)] * u[a] * v[b];
            }
        }
        s
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// `dφ(X)` at the point for a source vector `X`.
    pub fn push(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|a| (0..self.m).map(|i| self.dphi(a, i).value() * v[i]).sum())
            .collect()
    }

    /// `g^{ij} ∂_j f` at the point.
    pub fn gradient(&self, f: &Jet) -> Vec<f64> {
        let df = f.gradient();
        let inv = self.source.inv_values();
        (0..self.m)
            .map(|i| (0..self.m).map(|j| inv[(i, j)] * df[j]).sum())
            .collect()
    }

    /// `Δf = tr ∇df` at the point; `f` needs order ≥ 2.
    pub fn laplacian(&self, f: &Jet) -> Result<f64> {
        let df = (0..self.m).map(|i| f.diff(i)).collect::<Result<Vec<_>>>()?;
        Ok(divergence_jets(&df, &self.source, &self.source_gamma)?.value())
    }

    /// Divergence of a one-form given by its component jets (order ≥ 1).
    pub fn divergence(&self, omega: &[Jet]) -> Result<f64> {
        Ok(divergence_jets(omega, &self.source, &self.source_gamma)?.value())
    }

    fn budget(&self, needed: usize, available: usize) -> Result<()> {
        if needed > available {
            return Err(Error::JetBudget { needed, available });
        }
        Ok(())
    }

    /// The three pieces of `τ^α` as jets of order `k`:
    /// `g^{ij}∂_i∂_jφ^α`, `−g^{ij}Γ^l_ij ∂_lφ^α` and `Γ^α_βγ(φ) M^βγ`.
    pub fn tension_terms(&self, k: usize) -> Result<[Vec<Jet>; 3]> {
        self.budget(k + 2, self.order)?;
        let (m, n) = (self.m, self.n);
        let ginv = |i: usize, j: usize| self.source.inv(i, j).truncate(k);
        let zero = self.phi[0].truncate(k).zero_like();

        let mut trace_gamma = vec![zero.clone(); m];
        for (l, tg) in trace_gamma.iter_mut().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    *tg += &ginv(i, j) * &self.source_gamma[(l * m + i) * m + j].truncate(k);
                }
            }
        }

        let mut hess = vec![zero.clone(); n];
        let mut conn = vec![zero.clone(); n];
        let mut target = vec![zero.clone(); n];
        for a in 0..n {
            for i in 0..m {
                let di = self.dphi(a, i);
                for j in 0..m {
                    hess[a] += &ginv(i, j) * &di.diff(j)?.truncate(k);
                }
                conn[a] -= &trace_gamma[i] * &di.truncate(k);
            }
            for b in 0..n {
                for c in 0..n {
                    target[a] +=
                        &self.target_gamma(a, b, c).truncate(k) * &self.co_metric(b, c).truncate(k);
                }
            }
        }
        Ok([hess, conn, target])
    }

    /// `τ(φ)^α` as jets of order `k ≤ K − 2`.
    pub fn tension_jets(&self, k: usize) -> Result<Vec<Jet>> {
        let [a, b, c] = self.tension_terms(k)?;
        Ok((0..self.n).map(|i| &(&a[i] + &b[i]) + &c[i]).collect())
    }

    /// `(∇^φ_i V)^α = ∂_iV^α + Γ^α_βγ(φ) V^β ∂_iφ^γ`, flattened as `i·n + α`,
    /// one order below `V`.
    pub fn cov_derivative(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        let (m, n) = (self.m, self.n);
        if v.len() != n {
            return Err(Error::Dimension(format!(
                "section has {} components, target dimension is {n}",
                v.len()
            )));
        }
        let r = v[0].order();
        self.budget(1, r)?;
        let k = r - 1;
        self.budget(k, self.target_gamma[0].order())?;
        let vk: Vec<Jet> = v.iter().map(|j| j.truncate(k)).collect();
        // a[α·n + γ] = Γ^α_βγ V^β
        let mut a = vec![vk[0].zero_like(); n * n];
        for al in 0..n {
            for be in 0..n {
                for ga in 0..n {
                    a[al * n + ga] += &self.target_gamma(al, be, ga).truncate(k) * &vk[be];
                }
            }
        }
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for al in 0..n {
                let mut acc = v[al].diff(i)?;
                for ga in 0..n {
                    acc += &a[al * n + ga] * &self.dphi(ga, i).truncate(k);
                }
                out.push(acc);
            }
        }
        Ok(out)
    }

    /// `tr_g(∇^φ∇^φ − ∇^φ_∇)V`, two orders below `V`.
    pub fn trace_hessian(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        let (m, n) = (self.m, self.n);
        let d = self.cov_derivative(v)?;
        let k = d[0].order();
        self.budget(1, k)?;
        let lo = k - 1;
        let ginv = |i: usize, j: usize| self.source.inv(i, j).truncate(lo);
        let mut out = vec![d[0].truncate(lo).zero_like(); n];
        for i in 0..m {
            let second = self.cov_derivative(&d[i * n..(i + 1) * n])?;
            for j in 0..m {
                let w = ginv(i, j);
                for l in 0..m {
                    let gam = self.source_gamma[(l * m + i) * m + j].truncate(lo);
                    let coeff = &w * &gam;
                    for (al, o) in out.iter_mut().enumerate() {
                        *o -= &coeff * &d[l * n + al].truncate(lo);
                    }
                }
                for (al, o) in out.iter_mut().enumerate() {
                    *o += &w * &second[j * n + al];
                }
            }
        }
        Ok(out)
    }

    /// `g^{ij} R^N(dφ(∂_i), v) dφ(∂_j)` at the point.
    pub fn curvature_trace(&self, v: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let dphi = self.dphi_values();
        let inv = self.source.inv_values();
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..n).map(|a| dphi[(a, i)]).collect())
            .collect();
        let mut out = vec![0.0; n];
        for i in 0..m {
            // w = g^{ij} dφ(∂_j)
            let w: Vec<f64> = (0..n)
                .map(|a| (0..m).map(|j| inv[(i, j)] * cols[j][a]).sum())
                .collect();
            for (o, r) in out.iter_mut().zip(self.curvature.apply(&cols[i], v, &w)) {
                *o += r;
            }
        }
        out
    }
}

fn co_metric(m: usize, n: usize, dphi: &[Jet], source: &MetricJets) -> Vec<Jet> {
    // u[β·m + i] = g^{ij} ∂_jφ^β
    let mut u = Vec::with_capacity(n * m);
    for b in 0..n {
        for i in 0..m {
            let mut acc = dphi[0].zero_like();
            for j in 0..m {
                acc += source.inv(i, j) * &dphi[b * m + j];
            }
            u.push(acc);
        }
    }
    let mut out = vec![dphi[0].zero_like(); n * n];
    for a in 0..n {
        for b in a..n {
            let mut acc = dphi[0].zero_like();
            for i in 0..m {
                acc += &dphi[a * m + i] * &u[b * m + i];
            }
            out[b * n + a] = acc.clone();
            out[a * n + b] = acc;
        }
    }
    out
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

#[derive(Clone, Debug)]
pub struct TensionData {
    pub tau: Vec<f64>,
    pub tau_norm_sq: f64,
    /// Jets of `τ^α` when requested with `jet_order > 0`.
    pub as_jet: Option<Vec<Jet>>,
    /// `max(1, largest h-norm among the three coordinate pieces)`.
    pub scale: f64,
}

impl TensionData {
    pub fn normalized(&self) -> f64 {
        self.tau_norm_sq.sqrt() / self.scale
    }
}

impl Pullback {
    pub fn tension(&self, jet_order: usize) -> Result<TensionData> {
        let terms = self.tension_terms(jet_order)?;
        let scale = terms
            .iter()
            .map(|t| self.norm(&values(t)))
            .fold(1.0, f64::max);
        let jets: Vec<Jet> = (0..self.n)
            .map(|i| &(&terms[0][i] + &terms[1][i]) + &terms[2][i])
            .collect();
        let tau = values(&jets);
        Ok(TensionData {
            tau_norm_sq: self.inner(&tau, &tau).max(0.0),
            tau,
            as_jet: (jet_order > 0).then_some(jets),
            scale,
        })
    }
}

pub fn tension(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
    jet_order: usize,
) -> Result<TensionData> {
    if jet_order > 2 {
        return Err(Error::JetBudget {
            needed: jet_order + 2,
            available: MAX_ORDER,
        });
    }
    Pullback::new(map, g_m, h_n, x, jet_order + 2)?.tension(jet_order)
}

/// `τ_p = |dφ|^{p−4}[|dφ|²τ + ((p−2)/2) dφ(∇|dφ|²)]`.
pub fn p_tension(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    p: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    if !(p > 1.0) {
        return Err(Error::InvalidParam(format!("p-tension needs p > 1, got {p}")));
    }
    let pb = Pullback::new(map, g_m, h_n, x, 2)?;
    let e = pb.energy_density_jets();
    let e0 = e.value();
    let n = pb.target_dim();
    if e0 / n as f64 <= REGULAR_THRESHOLD {
        if p < 4.0 {
            return Err(Error::SingularPTension(p));
        }
        return Ok(vec![0.0; n]);
    }
    let tau = values(&pb.tension_jets(0)?);
    let push = pb.push(&pb.gradient(&e));
    let factor = e0.powf((p - 4.0) / 2.0);
    Ok((0..n)
        .map(|a| factor * (e0 * tau[a] + 0.5 * (p - 2.0) * push[a]))
        .collect())
}

/// `Δ^φ V = −tr_g(∇^φ∇^φ − ∇^φ_∇)V` for a section given by jet-evaluable components.
pub fn pullback_laplacian(
    section: &dyn Fn(&[Jet]) -> Result<Vec<Jet>>,
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<Vec<f64>> {
    let pb = Pullback::new(map, g_m, h_n, x, 2)?;
    let v = section(&Jet::variables(x, 2)?)?;
    Ok(pb.trace_hessian(&v)?.iter().map(|j| -j.value()).collect())
}

#[derive(Clone, Debug)]
pub struct BitensionData {
    pub tension: TensionData,
    /// `τ²(φ)^α`.
    pub vector: Vec<f64>,
    /// `−Δ^φτ = tr(∇^φ∇^φ − ∇^φ_∇)τ`.
    pub laplacian_term: Vec<f64>,
    /// `tr_g R^N(dφ, τ)dφ`.
    pub curvature_term: Vec<f64>,
    pub norm: f64,
    pub scale: f64,
    pub normalized: f64,
}

impl Pullback {
    /// Requires map jets of order 4.
    pub fn bitension(&self) -> Result<BitensionData> {
        let tension = self.tension(2)?;
        let tau = tension.as_jet.as_ref().expect("jet_order 2 keeps jets");
        let laplacian_term = values(&self.trace_hessian(tau)?);
        let curvature_term = self.curvature_trace(&tension.tau);
        let vector: Vec<f64> = laplacian_term
            .iter()
            .zip(&curvature_term)
            .map(|(l, c)| l - c)
            .collect();
        let norm = self.norm(&vector);
        let scale = self
            .norm(&laplacian_term)
            .max(self.norm(&curvature_term))
            .max(1.0);
        Ok(BitensionData {
            tension,
            vector,
            laplacian_term,
            curvature_term,
            norm,
            scale,
            normalized: norm / scale,
        })
    }
}

pub fn bitension(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<BitensionData> {
    Pullback::new(map, g_m, h_n, x, 4)?.bitension()
}

/// Left-hand side of the conformal biharmonicity equation
/// `dφ(tr∇²G) − Δ(lnλ)dφ(G) + 2dφ(∇|G|²) + (2−n)|G|²dφ(G) + λ²Ric^N(dφ(G))`
/// with `G = ∇lnλ`.
#[derive(Clone, Debug)]
pub struct EqfData {
    pub vector: Vec<f64>,
    /// The five summands in the order above.
    pub terms: [Vec<f64>; 5],
    pub dilation_sq: f64,
    pub norm: f64,
    /// `|eqf|_h / λ`: the norm measured against `dφ` of a source orthonormal frame.
    pub frame_norm: f64,
    pub scale: f64,
    pub normalized: f64,
}

impl Pullback {
    /// Requires an equal-dimension conformal map and map jets of order 4.
    pub fn eqf(&self) -> Result<EqfData> {
        let (m, n) = (self.m, self.n);
        if m != n {
            return Err(Error::Dimension(format!(
                "conformal equation needs equal dimensions, got {m} -> {n}"
            )));
        }
        let conf = self.conformality(CONFORMAL_TOL);
        if !conf.is_regular {
            return Err(Error::CriticalPoint(self.point.clone()));
        }
        if !conf.is_hwc {
            return Err(Error::NotConformal {
                point: self.point.clone(),
                residual: conf.hwc_residual,
            });
        }
        self.budget(4, self.order)?;
        let lambda_sq = self.lambda_sq_jets();
        let ln_lambda = lambda_sq.ln()?.scale(0.5);
        let dln = (0..m).map(|i| ln_lambda.diff(i)).collect::<Result<Vec<_>>>()?;
        let ginv = |i: usize, j: usize, k: usize| self.source.inv(i, j).truncate(k);
        let gam = |k: usize, i: usize, j: usize, o: usize| {
            self.source_gamma[(k * m + i) * m + j].truncate(o)
        };

        // G^k = g^{kj} ∂_j lnλ, order 2
        let big_g: Vec<Jet> = (0..m)
            .map(|k| {
                let mut acc = dln[0].zero_like();
                for j in 0..m {
                    acc += &ginv(k, j, 2) * &dln[j];
                }
                acc
            })
            .collect();
        // T[k·m + j] = ∂_jG^k + Γ^k_jl G^l, order 1
        let mut t = Vec::with_capacity(m * m);
        for k in 0..m {
            for j in 0..m {
                let mut acc = big_g[k].diff(j)?;
                for l in 0..m {
                    acc += &gam(k, j, l, 1) * &big_g[l].truncate(1);
                }
                t.push(acc);
            }
        }
        let mut hess_g = vec![0.0; m];
        for (k, hk) in hess_g.iter_mut().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    let mut v = t[k * m + j].gradient()[i];
                    for l in 0..m {
                        v += gam(k, i, l, 0).value() * t[l * m + j].value()
                            - gam(l, i, j, 0).value() * t[k * m + l].value();
                    }
                    *hk += ginv(i, j, 0).value() * v;
                }
            }
        }
        let lap_ln = self.divergence(&dln)?;
        let mut g_sq = dln[0].zero_like();
        for i in 0..m {
            for j in 0..m {
                g_sq += &(&ginv(i, j, 2) * &dln[i]) * &dln[j];
            }
        }
        let grad_g_sq = self.gradient(&g_sq);
        let g0 = values(&big_g);
        let dg = self.push(&g0);
        let nf = n as f64;

        let t1 = self.push(&hess_g);
        let t2: Vec<f64> = dg.iter().map(|v| -lap_ln * v).collect();
        let t3: Vec<f64> = self.push(&grad_g_sq).iter().map(|v| 2.0 * v).collect();
        let t4: Vec<f64> = dg.iter().map(|v| (2.0 - nf) * g_sq.value() * v).collect();
        let t5: Vec<f64> = self
            .curvature
            .ricci_vector(&dg, &self.hinv0)
            .iter()
            .map(|v| conf.dilation_sq * v)
            .collect();
        let terms = [t1, t2, t3, t4, t5];
        let vector: Vec<f64> = (0..n).map(|a| terms.iter().map(|t| t[a]).sum()).collect();
        let norm = self.norm(&vector);
        let scale = terms.iter().map(|t| self.norm(t)).fold(1.0, f64::max);
        Ok(EqfData {
            frame_norm: norm / conf.dilation_sq.sqrt(),
            dilation_sq: conf.dilation_sq,
            normalized: norm / scale,
            vector,
            terms,
            norm,
            scale,
        })
    }
}

pub fn eqf_residual(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<EqfData> {
    if map.source_dim() != map.target_dim() {
        return Err(Error::Dimension(format!(
            "conformal equation needs equal dimensions, got {} -> {}",
            map.source_dim(),
            map.target_dim()
        )));
    }
    Pullback::new(map, g_m, h_n, x, 4)?.eqf()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyDensities {
    /// `|dφ|^p / p`
    pub e_p: f64,
    /// `|τ(φ)|² / 2`
    pub e_bi: f64,
}

pub fn energy_densities(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    p: f64,
    x: &[f64],
) -> Result<EnergyDensities> {
    let pb = Pullback::new(map, g_m, h_n, x, 2)?;
    let e = pb.energy_density_jets().value().max(0.0);
    let t = pb.tension(0)?;
    Ok(EnergyDensities {
        e_p: e.powf(p / 2.0) / p,
        e_bi: 0.5 * t.tau_norm_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::norm_sq;
    use approx::assert_abs_diff_eq;

    fn inversion(n: usize) -> SmoothMap {
        SmoothMap::new(
            n,
            n,
            "inversion",
            |x| {
                let r = norm_sq(x).recip()?;
                Ok(x.iter().map(|xi| xi * &r).collect())
            },
            |x| x.iter().map(|v| v * v).sum::<f64>() > 0.0,
        )
    }

    fn ball(n: usize) -> MetricPatch {
        MetricPatch::conformal(
            n,
            "hyperbolic ball",
            |x| (-&norm_sq(x) + 1.0).powi(-2).map(|j| j.scale(4.0)),
            |x| x.iter().map(|v| v * v).sum::<f64>() < 1.0,
        )
    }

    fn sphere(n: usize) -> MetricPatch {
        MetricPatch::conformal(
            n,
            "sphere chart",
            |x| (&norm_sq(x) + 1.0).powi(-2).map(|j| j.scale(4.0)),
            |_| true,
        )
    }

    fn unit_ball(n: usize) -> MetricPatch {
        let e = MetricPatch::euclidean(n);
        MetricPatch::new(
            n,
            "euclidean ball",
            move |x| e.components(x),
            |x| x.iter().map(|v| v * v).sum::<f64>() < 1.0,
        )
    }

    fn vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(*x, *y, epsilon = tol);
        }
    }

    #[test]
    fn differential_of_inversion() {
        let d = differential(&inversion(4), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]));
        assert!((d - expected).amax() < 1e-14);
    }

    #[test]
    fn differential_of_constant_is_zero() {
        let d = differential(&SmoothMap::constant(3, vec![1.0, 2.0]), &[0.3, 0.1, 0.2]).unwrap();
        assert_eq!(d.amax(), 0.0);
    }

    #[test]
    fn inversion_dilation() {
        let e = MetricPatch::euclidean(4);
        let c = hwc_check(&inversion(4), &e, &e, &[2.0, 0.0, 0.0, 0.0], 1e-10).unwrap();
        assert!(c.is_hwc && c.is_regular);
        assert_abs_diff_eq!(c.dilation_sq, 1.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_map_is_degenerate_hwc() {
        let e = MetricPatch::euclidean(3);
        let c = hwc_check(&SmoothMap::constant(3, vec![0.0; 3]), &e, &e, &[1.0, 2.0, 3.0], 1e-10)
            .unwrap();
        assert!(c.is_hwc && !c.is_regular);
        assert_eq!(c.dilation_sq, 0.0);
    }

    #[test]
    fn inversion_tension() {
        let e = MetricPatch::euclidean(4);
        let t = tension(&inversion(4), &e, &e, &[1.0, 0.0, 0.0, 0.0], 0).unwrap();
        vec_close(&t.tau, &[-4.0, 0.0, 0.0, 0.0], 1e-12);
        assert_abs_diff_eq!(t.tau_norm_sq, 16.0, epsilon = 1e-11);
    }

    #[test]
    fn ball_identity_tension() {
        let t = tension(&SmoothMap::identity(4), &unit_ball(4), &ball(4), &[0.5, 0.0, 0.0, 0.0], 1)
            .unwrap();
        vec_close(&t.tau, &[-8.0 / 3.0, 0.0, 0.0, 0.0], 1e-12);
        assert_eq!(t.as_jet.unwrap()[0].order(), 1);
    }

    #[test]
    fn identity_is_harmonic() {
        let s = sphere(3);
        let x = [0.3, -0.2, 0.5];
        let b = bitension(&SmoothMap::identity(3), &s, &s, &x).unwrap();
        assert!(b.tension.tau_norm_sq < 1e-24);
        assert!(b.norm < 1e-12);
    }

    #[test]
    fn p_two_matches_tension() {
        let e = MetricPatch::euclidean(3);
        let x = [0.4, 0.9, -0.3];
        let t = tension(&inversion(3), &e, &e, &x, 0).unwrap();
        let tp = p_tension(&inversion(3), &e, &e, 2.0, &x).unwrap();
        vec_close(&t.tau, &tp, 1e-13);
    }

    #[test]
    fn inversion_is_four_harmonic() {
        let e = MetricPatch::euclidean(4);
        for r in [0.5, 1.0, 2.0] {
            let tp = p_tension(&inversion(4), &e, &e, 4.0, &[r, 0.0, 0.0, 0.0]).unwrap();
            vec_close(&tp, &[0.0; 4], 1e-10);
        }
    }

    #[test]
    fn p_tension_at_critical_point() {
        let e = MetricPatch::euclidean(2);
        let map = SmoothMap::constant(2, vec![1.0, 1.0]);
        assert!(matches!(
            p_tension(&map, &e, &e, 3.0, &[0.0, 0.0]),
            Err(Error::SingularPTension(_))
        ));
        assert_eq!(p_tension(&map, &e, &e, 5.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn flat_pullback_laplacian_is_componentwise() {
        let e = MetricPatch::euclidean(3);
        let b = ball(3);
        let x = [0.2, 0.1, -0.4];
        let f = |x: &[Jet]| -> Result<Jet> { Ok(&(&x[0] * &x[1]).exp()? + &x[2].powi(3)?) };
        let section = |x: &[Jet]| -> Result<Vec<Jet>> { Ok(vec![f(x)?, x[0].square(), f(x)?.scale(2.0)]) };
        let lap = pullback_laplacian(&section, &SmoothMap::identity(3), &b, &e, &x).unwrap();
        let lb = crate::geometry::laplace_beltrami(&f, &b, &x).unwrap();
        let lb2 = crate::geometry::laplace_beltrami(&|x: &[Jet]| Ok(x[0].square()), &b, &x).unwrap();
        vec_close(&lap, &[-lb, -lb2, -2.0 * lb], 1e-12);
    }

    #[test]
    fn constant_section_on_flat_target() {
        let e = MetricPatch::euclidean(2);
        let lap = pullback_laplacian(
            &|x: &[Jet]| Ok(vec![x[0].lift(3.0), x[0].lift(-1.0)]),
            &inversion(2),
            &e,
            &e,
            &[0.5, 0.7],
        )
        .unwrap();
        vec_close(&lap, &[0.0, 0.0], 1e-13);
    }

    #[test]
    fn laplacian_of_inversion_tension_is_nonzero() {
        let e = MetricPatch::euclidean(3);
        // τ = −2(n−2) x / |x|⁴ with n = 3
        let tau = |x: &[Jet]| -> Result<Vec<Jet>> {
            let r = norm_sq(x).powi(-2)?.scale(-2.0);
            Ok(x.iter().map(|xi| xi * &r).collect())
        };
        let lap = pullback_laplacian(&tau, &inversion(3), &e, &e, &[1.0, 0.0, 0.0]).unwrap();
        assert!(lap.iter().map(|v| v * v).sum::<f64>().sqrt() > 0.1);
    }

    #[test]
    fn inversion_bitension_dichotomy() {
        let e4 = MetricPatch::euclidean(4);
        for x in [[1.0, 0.0, 0.0, 0.0], [0.6, 0.8, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]] {
            let b = bitension(&inversion(4), &e4, &e4, &x).unwrap();
            assert!(b.normalized < 1e-8, "{x:?}: {}", b.normalized);
        }
        let e3 = MetricPatch::euclidean(3);
        let b = bitension(&inversion(3), &e3, &e3, &[1.0, 0.0, 0.0]).unwrap();
        assert!(b.normalized > 1e-2);
    }

    #[test]
    fn ball_identity_bitension() {
        let b4 = bitension(&SmoothMap::identity(4), &unit_ball(4), &ball(4), &[0.3, 0.0, 0.0, 0.0])
            .unwrap();
        assert!(b4.normalized < 1e-8);
        let b3 = bitension(&SmoothMap::identity(3), &unit_ball(3), &ball(3), &[0.3, 0.0, 0.0])
            .unwrap();
        assert!(b3.normalized > 1e-2);
    }

    #[test]
    fn curvature_trace_sign() {
        // For conformal maps, tr R(dφ, τ)dφ = −λ² Ric(τ) under the stored conventions.
        let pb = Pullback::new(
            &SmoothMap::identity(3),
            &MetricPatch::euclidean(3),
            &sphere(3),
            &[0.5, 0.1, 0.0],
            2,
        )
        .unwrap();
        let lambda_sq = pb.conformality(1e-10).dilation_sq;
        let v = [0.3, -1.0, 2.0];
        let ric = pb.target_curvature().ricci_vector(&v, pb.hinv_values());
        let expected: Vec<f64> = ric.iter().map(|r| -lambda_sq * r).collect();
        vec_close(&pb.curvature_trace(&v), &expected, 1e-12);
    }

    #[test]
    fn stereo_eqf_value() {
        let eqf = eqf_residual(&SmoothMap::identity(3), &MetricPatch::euclidean(3), &sphere(3), &[0.5, 0.0, 0.0])
            .unwrap();
        vec_close(&eqf.vector, &[1.536, 0.0, 0.0], 1e-10);
        let eqf4 = eqf_residual(
            &SmoothMap::identity(4),
            &MetricPatch::euclidean(4),
            &sphere(4),
            &[0.2, 0.4, -0.1, 0.3],
        )
        .unwrap();
        assert!(eqf4.norm < 1e-9);
    }

    #[test]
    fn eqf_rejects_non_conformal() {
        let e = MetricPatch::euclidean(2);
        let map = SmoothMap::new(2, 2, "shear", |x| Ok(vec![&x[0] + &x[1], x[1].clone()]), |_| true);
        assert!(matches!(
            eqf_residual(&map, &e, &e, &[0.1, 0.2]),
            Err(Error::NotConformal { .. })
        ));
        let proj = SmoothMap::new(3, 2, "projection", |x| Ok(x[..2].to_vec()), |_| true);
        assert!(matches!(
            eqf_residual(&proj, &MetricPatch::euclidean(3), &e, &[0.1, 0.2, 0.3]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn energy_density_values() {
        let e = MetricPatch::euclidean(4);
        let d = energy_densities(&SmoothMap::identity(4), &e, &e, 2.0, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_abs_diff_eq!(d.e_p, 2.0, epsilon = 1e-14);
        assert_eq!(d.e_bi, 0.0);
        let d = energy_densities(&inversion(4), &e, &e, 2.0, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(d.e_bi, 8.0, epsilon = 1e-11);
        let d = energy_densities(&SmoothMap::constant(4, vec![0.0; 4]), &e, &e, 2.0, &[1.0; 4]).unwrap();
        assert_eq!((d.e_p, d.e_bi), (0.0, 0.0));
    }
}
