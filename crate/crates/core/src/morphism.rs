//! The four biharmonic-morphism conditions and the trace screen.
//!
//! A map is a biharmonic morphism iff it is horizontally weakly conformal,
//! biharmonic, satisfies `λ²τ + dφ(∇λ²) = 0` (4-harmonicity for HWC maps)
//! and, at regular points,
//! `|τ|⁴ − 2Δλ²|τ|² + 4Δλ² div⟨dφ,τ⟩ + n(Δλ²)² + 2⟨dφ,τ⟩(∇|τ|²) + |S|² = 0`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fields::{Pullback, SmoothMap, CONFORMAL_TOL};
use crate::geometry::MetricPatch;
use crate::jets::Jet;

/// Default tolerance on normalized residuals.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Symmetrized trace of `dφ ⊗ ∇^φτ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SData {
    pub components: DMatrix<f64>,
    pub norm_sq: f64,
}

/// Constituents of the long equation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LongeqTerms {
    pub tau_norm_sq: f64,
    pub lap_lambda_sq: f64,
    /// `div⟨dφ, τ⟩`
    pub div_pairing: f64,
    /// `⟨dφ, τ⟩(∇|τ|²)`
    pub pairing_grad: f64,
    pub s_norm_sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LongeqData {
    pub constituents: LongeqTerms,
    /// `|τ|⁴, −2Δλ²|τ|², 4Δλ² div, n(Δλ²)², 2⟨dφ,τ⟩(∇|τ|²), |S|²`
    pub terms: [f64; 6],
    pub total: f64,
    /// Sum of the first five terms (everything except `|S|²`).
    pub partial_sum: f64,
    /// `|total| / max(1, largest |term|)`
    pub normalized: f64,
}

impl LongeqTerms {
    fn assemble(self, n: usize) -> LongeqData {
        let t = self.tau_norm_sq;
        let l = self.lap_lambda_sq;
        let terms = [
            t * t,
            -2.0 * l * t,
            4.0 * l * self.div_pairing,
            n as f64 * l * l,
            2.0 * self.pairing_grad,
            self.s_norm_sq,
        ];
        let partial_sum = terms[..5].iter().sum::<f64>();
        let total = partial_sum + terms[5];
        let scale = terms.iter().map(|v| v.abs()).fold(1.0, f64::max);
        LongeqData {
            constituents: self,
            terms,
            total,
            partial_sum,
            normalized: total.abs() / scale,
        }
    }

    /// `nΔλ² + 2div⟨dφ,τ⟩ − |τ|²` and its normalization scale.
    fn trace(&self, n: usize) -> (f64, f64) {
        let a = n as f64 * self.lap_lambda_sq;
        let b = 2.0 * self.div_pairing;
        let c = self.tau_norm_sq;
        (a + b - c, a.abs().max(b.abs()).max(c).max(1.0))
    }
}

impl Pullback {
    fn require_hwc(&self) -> Result<f64> {
        let conf = self.conformality(CONFORMAL_TOL);
        if !conf.is_hwc {
            return Err(Error::NotConformal {
                point: self.point().to_vec(),
                residual: conf.hwc_residual,
            });
        }
        Ok(conf.dilation_sq)
    }

    /// `S^αβ` from `τ` jets of order ≥ 1 and the dilation.
    fn s_data(&self, tau: &[Jet], lambda_sq: f64) -> SData {
        let (m, n) = (self.source_dim(), self.target_dim());
        let dphi = self.dphi_values();
        let ginv = self.source().inv_values();
        let hinv = self.hinv_values();
        let tau0: Vec<f64> = tau.iter().map(Jet::value).collect();
        let dtau: Vec<Vec<f64>> = tau.iter().map(Jet::gradient).collect();
        let x = DMatrix::from_fn(n, n, |a, b| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += ginv[(i, j)] * dphi[(a, i)] * dtau[b][j];
                }
            }
            for d in 0..n {
                for c in 0..n {
                    s += lambda_sq * hinv[(a, d)] * self.target_gamma(b, c, d).value() * tau0[c];
                }
            }
            s
        });
        let components = &x + x.transpose();
        SData {
            norm_sq: frobenius_h(&components, self.h_values()),
            components,
        }
    }

    /// `λ²τ + dφ(∇λ²)`.
    fn eqc_vector(&self, tau: &[f64], lambda_sq: &Jet) -> Vec<f64> {
        let push = self.push(&self.gradient(lambda_sq));
        let l = lambda_sq.value();
        tau.iter().zip(push).map(|(t, p)| l * t + p).collect()
    }

    /// Needs map jets of order ≥ 3 and `τ` jets of order `K − 2`.
    fn longeq_terms(&self, tau: &[Jet], lambda_sq: &Jet) -> Result<LongeqTerms> {
        let (m, n) = (self.source_dim(), self.target_dim());
        let k = tau[0].order();
        let mut tau_sq = tau[0].zero_like();
        for a in 0..n {
            for b in 0..n {
                tau_sq += &(&self.h(a, b).truncate(k) * &tau[a]) * &tau[b];
            }
        }
        // ω_i = h(dφ(∂_i), τ)
        let omega: Vec<Jet> = (0..m)
            .map(|i| {
                let mut acc = tau[0].zero_like();
                for a in 0..n {
                    for b in 0..n {
                        acc += &(&self.h(a, b).truncate(k) * &self.dphi(a, i).truncate(k)) * &tau[b];
                    }
                }
                acc
            })
            .collect();
        let grad = self.gradient(&tau_sq);
        let pairing_grad = omega.iter().zip(&grad).map(|(w, g)| w.value() * g).sum();
        let s = self.s_data(tau, lambda_sq.value());
        Ok(LongeqTerms {
            tau_norm_sq: tau_sq.value(),
            lap_lambda_sq: self.laplacian(lambda_sq)?,
            div_pairing: self.divergence(&omega)?,
            pairing_grad,
            s_norm_sq: s.norm_sq,
        })
    }
}

/// `h_αδ h_βμ S^αβ S^δμ = tr(hShS)`.
fn frobenius_h(s: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    let hs = h * s;
    (&hs * &hs).trace().max(0.0)
}

pub fn s_tensor(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<SData> {
    let pb = Pullback::new(map, g_m, h_n, x, 3)?;
    let lambda_sq = pb.require_hwc()?;
    Ok(pb.s_data(&pb.tension_jets(1)?, lambda_sq))
}

pub fn condition_eqc(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<Vec<f64>> {
    let pb = Pullback::new(map, g_m, h_n, x, 2)?;
    let tau: Vec<f64> = pb.tension_jets(0)?.iter().map(Jet::value).collect();
    Ok(pb.eqc_vector(&tau, &pb.lambda_sq_jets()))
}

fn regular_hwc_pullback(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<Pullback> {
    let pb = Pullback::new(map, g_m, h_n, x, 3)?;
    pb.require_hwc()?;
    if !pb.conformality(CONFORMAL_TOL).is_regular {
        return Err(Error::CriticalPoint(x.to_vec()));
    }
    Ok(pb)
}

/// Left-hand side of the long equation with its six terms. Regular points only.
pub fn longeq_residual(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<LongeqData> {
    let pb = regular_hwc_pullback(map, g_m, h_n, x)?;
    let terms = pb.longeq_terms(&pb.tension_jets(1)?, &pb.lambda_sq_jets())?;
    Ok(terms.assemble(pb.target_dim()))
}

/// `nΔλ² + 2div⟨dφ,τ⟩ − |τ|²`, a necessary condition for a morphism.
pub fn trace_screen(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<f64> {
    let pb = regular_hwc_pullback(map, g_m, h_n, x)?;
    let terms = pb.longeq_terms(&pb.tension_jets(1)?, &pb.lambda_sq_jets())?;
    Ok(terms.trace(pb.target_dim()).0)
}

/// `A^αβ = h^αβΔλ² + Sym(g^{ij}∂_iφ^α∂_jτ^β) + τ^ατ^β` for a flat Cartesian target.
pub fn flat_target_a(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    let pb = regular_hwc_pullback(map, g_m, h_n, x)?;
    let n = pb.target_dim();
    let flat = (0..n * n * n).all(|k| pb.target_gamma(k / (n * n), (k / n) % n, k % n).value() == 0.0);
    if !flat {
        return Err(Error::InvalidParam(format!(
            "target `{}` is not flat in its coordinates",
            h_n.label()
        )));
    }
    let tau = pb.tension_jets(1)?;
    let lap = pb.laplacian(&pb.lambda_sq_jets())?;
    let s = pb.s_data(&tau, 0.0).components;
    let t: Vec<f64> = tau.iter().map(Jet::value).collect();
    Ok(DMatrix::from_fn(n, n, |a, b| {
        pb.hinv_values()[(a, b)] * lap + s[(a, b)] + t[a] * t[b]
    }))
}

/// `|A|²` contracted with the target metric.
pub fn flat_target_a_norm_sq(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
) -> Result<f64> {
    let a = flat_target_a(map, g_m, h_n, x)?;
    let y = map.eval(x)?;
    Ok(frobenius_h(&a, &h_n.jets(&y, 0)?.g_values()))
}

/// The four defining conditions, in the order they are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Hwc,
    Biharmonic,
    FourHarmonic,
    Longeq,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Hwc,
        Condition::Biharmonic,
        Condition::FourHarmonic,
        Condition::Longeq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Hwc => "hwc",
            Condition::Biharmonic => "biharmonic",
            Condition::FourHarmonic => "fourharmonic",
            Condition::Longeq => "longeq",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdicts {
    pub hwc: bool,
    pub biharmonic: bool,
    pub fourharmonic: bool,
    /// Vacuously true at critical points.
    pub longeq: bool,
    /// Derived screen, not part of the morphism conjunction.
    pub trace: bool,
    pub harmonic: bool,
}

impl Verdicts {
    pub fn get(&self, c: Condition) -> bool {
        match c {
            Condition::Hwc => self.hwc,
            Condition::Biharmonic => self.biharmonic,
            Condition::FourHarmonic => self.fourharmonic,
            Condition::Longeq => self.longeq,
        }
    }

    pub fn is_morphism(&self) -> bool {
        Condition::ALL.iter().all(|&c| self.get(c))
    }
}

/// Per-point residuals; all `*_residual` fields are normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct PointReport {
    pub point: Vec<f64>,
    pub regular: bool,
    pub dilation_sq: f64,
    pub tau_norm_sq: f64,
    pub bitension_norm: f64,
    pub tension_residual: f64,
    pub hwc_residual: f64,
    pub bitension_residual: f64,
    pub fourharmonic_residual: f64,
    /// `None` at critical points.
    pub longeq_residual: Option<f64>,
    pub trace_residual: Option<f64>,
    pub longeq: Option<LongeqData>,
    /// Raw `nΔλ² + 2div⟨dφ,τ⟩ − |τ|²`.
    pub trace_value: Option<f64>,
    pub verdicts: Verdicts,
}

pub fn point_report(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    x: &[f64],
    tol: f64,
) -> Result<PointReport> {
    let pb = Pullback::new(map, g_m, h_n, x, 4)?;
    let n = pb.target_dim();
    let conf = pb.conformality(tol);
    let bi = pb.bitension()?;
    let tau_jets = bi.tension.as_jet.as_ref().expect("order-2 tension jets");
    let lambda_sq = pb.lambda_sq_jets();

    let eqc = pb.eqc_vector(&bi.tension.tau, &lambda_sq);
    let eqc_scale = {
        let l = lambda_sq.value();
        let a: Vec<f64> = bi.tension.tau.iter().map(|t| l * t).collect();
        let b = pb.push(&pb.gradient(&lambda_sq));
        pb.norm(&a).max(pb.norm(&b)).max(1.0)
    };
    let fourharmonic_residual = pb.norm(&eqc) / eqc_scale;

    let (longeq, trace_value, trace_residual) = if conf.is_regular {
        let t1: Vec<Jet> = tau_jets.iter().map(|j| j.truncate(2)).collect();
        let terms = pb.longeq_terms(&t1, &lambda_sq)?;
        let (tr, scale) = terms.trace(n);
        (Some(terms.assemble(n)), Some(tr), Some(tr.abs() / scale))
    } else {
        (None, None, None)
    };
    let longeq_residual = longeq.as_ref().map(|l| l.normalized);
    let tension_residual = bi.tension.normalized();
    let verdicts = Verdicts {
        hwc: conf.is_hwc,
        biharmonic: bi.normalized < tol,
        fourharmonic: fourharmonic_residual < tol,
        longeq: longeq_residual.map_or(true, |r| r < tol),
        trace: trace_residual.map_or(true, |r| r < tol),
        harmonic: tension_residual < tol,
    };
    Ok(PointReport {
        point: x.to_vec(),
        regular: conf.is_regular,
        dilation_sq: conf.dilation_sq,
        tau_norm_sq: bi.tension.tau_norm_sq,
        bitension_norm: bi.norm,
        tension_residual,
        hwc_residual: conf.hwc_residual,
        bitension_residual: bi.normalized,
        fourharmonic_residual,
        longeq_residual,
        trace_residual,
        longeq,
        trace_value,
        verdicts,
    })
}

/// Aggregate over sampled points. Sampling can refute a claim, never prove it.
#[derive(Clone, Debug, PartialEq)]
pub struct MorphismReport {
    pub tol: f64,
    pub points: Vec<PointReport>,
    pub hwc: bool,
    pub harmonic: bool,
    pub biharmonic: bool,
    pub fourharmonic: bool,
    pub longeq: bool,
    pub trace: bool,
    pub is_morphism: bool,
    /// First failing condition, scanning points in order and conditions in
    /// [`Condition::ALL`] order within a point.
    pub first_failure: Option<(Condition, usize)>,
}

impl MorphismReport {
    pub fn from_points(points: Vec<PointReport>, tol: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPoints);
        }
        let all = |f: fn(&Verdicts) -> bool| points.iter().all(|p| f(&p.verdicts));
        let first_failure = points.iter().enumerate().find_map(|(i, p)| {
            Condition::ALL
                .iter()
                .find(|&&c| !p.verdicts.get(c))
                .map(|&c| (c, i))
        });
        Ok(Self {
            tol,
            hwc: all(|v| v.hwc),
            harmonic: all(|v| v.harmonic),
            biharmonic: all(|v| v.biharmonic),
            fourharmonic: all(|v| v.fourharmonic),
            longeq: all(|v| v.longeq),
            trace: all(|v| v.trace),
            is_morphism: first_failure.is_none(),
            first_failure,
            points,
        })
    }
}

pub fn morphism_verdict(
    map: &SmoothMap,
    g_m: &MetricPatch,
    h_n: &MetricPatch,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<MorphismReport> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    let reports = points
        .iter()
        .map(|x| point_report(map, g_m, h_n, x, tol))
        .collect::<Result<Vec<_>>>()?;
    MorphismReport::from_points(reports, tol)
}
