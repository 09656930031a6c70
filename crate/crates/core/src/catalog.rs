//! Built-in examples: metrics, maps, expected verdicts, sampling regions and
//! closed-form reference values.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fields::SmoothMap;
use crate::geometry::MetricPatch;
use crate::jets::{norm_sq, Jet, MAX_DIM};

/// Entry ids in listing order.
pub const ENTRY_IDS: [&str; 8] = [
    "inversion",
    "radial",
    "stereo_identity",
    "ball_identity",
    "half_identity",
    "h4_flat",
    "conf_flat",
    "twisted_projection",
];

/// Numeric parameters shared by all entries; each entry reads the ones it needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    /// Margin keeping domains away from singular sets.
    pub delta: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n: 4,
            m: 5,
            eps: 1.0,
            c1: 1.0,
            c2: 1.0,
            delta: 0.05,
        }
    }
}

/// Claims made about an entry; `None` means no claim.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Expected {
    pub harmonic: Option<bool>,
    pub biharmonic: Option<bool>,
    pub morphism: Option<bool>,
    pub proper: Option<bool>,
}

impl Expected {
    fn new(harmonic: bool, biharmonic: bool, morphism: bool) -> Self {
        Self {
            harmonic: Some(harmonic),
            biharmonic: Some(biharmonic),
            morphism: Some(morphism),
            proper: Some(biharmonic && !harmonic),
        }
    }
}

/// Where sample points are drawn.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// `r_min ≤ |x| ≤ r_max`, uniform in volume; optionally `x_last/|x| ≥ min_last`.
    Shell {
        dim: usize,
        r_min: f64,
        r_max: f64,
        min_last: Option<f64>,
    },
    /// `lo ≤ x_axis ≤ hi`, every other coordinate in `[−half_width, half_width]`.
    Slab {
        dim: usize,
        axis: usize,
        lo: f64,
        hi: f64,
        half_width: f64,
    },
}

impl Region {
    pub fn dim(&self) -> usize {
        match *self {
            Region::Shell { dim, .. } | Region::Slab { dim, .. } => dim,
        }
    }

    /// The region's two main bounds (`r_min, r_max` or `lo, hi`).
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Region::Shell { r_min, r_max, .. } => (r_min, r_max),
            Region::Slab { lo, hi, .. } => (lo, hi),
        }
    }

    /// Same region with replaced main bounds.
    pub fn with_bounds(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParam(format!("bad region bounds [{lo}, {hi}]")));
        }
        let mut r = self.clone();
        match &mut r {
            Region::Shell { r_min, r_max, .. } => {
                if lo < 0.0 {
                    return Err(Error::InvalidParam("shell radii must be non-negative".into()));
                }
                (*r_min, *r_max) = (lo, hi);
            }
            Region::Slab { lo: l, hi: h, .. } => (*l, *h) = (lo, hi),
        }
        Ok(r)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match *self {
            Region::Shell {
                r_min,
                r_max,
                min_last,
                ..
            } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                r >= r_min && r <= r_max && min_last.map_or(true, |c| x[x.len() - 1] >= c * r)
            }
            Region::Slab {
                axis,
                lo,
                hi,
                half_width,
                ..
            } => x.iter().enumerate().all(|(i, &v)| {
                if i == axis {
                    (lo..=hi).contains(&v)
                } else {
                    v.abs() <= half_width
                }
            }),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            Region::Shell {
                dim, r_min, r_max, ..
            } => loop {
                let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let len = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
                if len < 1e-12 {
                    continue;
                }
                let d = dim as i32;
                let u: f64 = rng.gen();
                let r = (r_min.powi(d) + u * (r_max.powi(d) - r_min.powi(d))).powf(1.0 / d as f64);
                let x: Vec<f64> = dir.iter().map(|v| v / len * r).collect();
                if self.contains(&x) {
                    break x;
                }
            },
            Region::Slab {
                dim,
                axis,
                lo,
                hi,
                half_width,
            } => (0..dim)
                .map(|i| {
                    if i == axis {
                        rng.gen_range(lo..=hi)
                    } else {
                        rng.gen_range(-half_width..=half_width)
                    }
                })
                .collect(),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Region::Shell {
                r_min,
                r_max,
                min_last,
                ..
            } => {
                write!(f, "{r_min} <= |x| <= {r_max}")?;
                if let Some(c) = min_last {
                    write!(f, ", x_last/|x| >= {c}")?;
                }
                Ok(())
            }
            Region::Slab {
                axis,
                lo,
                hi,
                half_width,
                ..
            } => write!(
                f,
                "{lo} <= x_{} <= {hi}, other |x_i| <= {half_width}",
                axis + 1
            ),
        }
    }
}

/// Reference value produced by a closed-form oracle.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl OracleValue {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            OracleValue::Scalar(v) => Some(*v),
            OracleValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            OracleValue::Vector(v) => Some(v),
            OracleValue::Scalar(_) => None,
        }
    }
}

type OracleFn = Arc<dyn Fn(&[f64]) -> Result<OracleValue> + Send + Sync>;

#[derive(Clone)]
struct Oracle {
    name: &'static str,
    eval: OracleFn,
}

/// A fully wired example.
#[derive(Clone)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: String,
    pub params: Params,
    pub source_metric: MetricPatch,
    pub target_metric: MetricPatch,
    pub map: SmoothMap,
    pub expected: Expected,
    pub region: Region,
    oracles: Vec<Oracle>,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("id", &self.id)
            .field("params", &self.params)
            .field("expected", &self.expected)
            .field("region", &self.region)
            .field("oracles", &self.oracle_names())
            .finish_non_exhaustive()
    }
}

impl CatalogEntry {
    pub fn oracle_names(&self) -> Vec<&'static str> {
        self.oracles.iter().map(|o| o.name).collect()
    }

    /// Whether source and target have equal dimension (conformal-equation entries).
    pub fn is_equidimensional(&self) -> bool {
        self.map.source_dim() == self.map.target_dim()
    }
}

pub fn oracle_residual(entry: &CatalogEntry, which: &str, x: &[f64]) -> Result<OracleValue> {
    let oracle = entry
        .oracles
        .iter()
        .find(|o| o.name == which)
        .ok_or_else(|| Error::UnknownOracle {
            entry: entry.id.to_string(),
            name: which.to_string(),
        })?;
    if x.len() != entry.map.source_dim() {
        return Err(Error::Dimension(format!(
            "entry `{}` expects points of dimension {}, got {}",
            entry.id,
            entry.map.source_dim(),
            x.len()
        )));
    }
    (oracle.eval)(x)
}

/// Listing row with default parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryInfo {
    pub id: &'static str,
    pub description: String,
    pub params: Params,
    pub expected: Expected,
    pub region: String,
    pub oracles: Vec<&'static str>,
}

pub fn list_entries() -> Vec<EntryInfo> {
    ENTRY_IDS
        .iter()
        .map(|id| {
            let e = instantiate(id, &Params::default()).expect("default parameters are valid");
            EntryInfo {
                id: e.id,
                description: e.description.clone(),
                params: e.params,
                region: e.region.to_string(),
                oracles: e.oracle_names(),
                expected: e.expected,
            }
        })
        .collect()
}

/// `count` seeded points from the entry's region, all inside the map's domain.
pub fn sample_points(entry: &CatalogEntry, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_region(entry, &entry.region, count, seed)
}

pub fn sample_region(entry: &CatalogEntry, region: &Region, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < 1000 * count.max(1) {
        attempts += 1;
        let x = region.sample(&mut rng);
        if entry.map.contains(&x) && entry.source_metric.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn r2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn scalar(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> OracleFn {
    Arc::new(move |x| Ok(OracleValue::Scalar(f(x))))
}

fn vector(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> OracleFn {
    Arc::new(move |x| Ok(OracleValue::Vector(f(x))))
}

fn oracle(name: &'static str, eval: OracleFn) -> Oracle {
    Oracle { name, eval }
}

/// `4/(1 + ε|y|²)²`: round sphere (`ε = 1`) or hyperbolic ball (`ε = −1`).
fn space_form(dim: usize, eps: f64, delta: f64) -> MetricPatch {
    let label = if eps > 0.0 { "sphere chart" } else { "hyperbolic ball" };
    MetricPatch::conformal(
        dim,
        label,
        move |y| (&norm_sq(y).scale(eps) + 1.0).powi(-2).map(|j| j.scale(4.0)),
        move |y| eps > 0.0 || r2(y) < (1.0 - delta).powi(2),
    )
}

/// Euclidean metric restricted to a domain.
fn euclidean_on(dim: usize, label: &str, domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> MetricPatch {
    let e = MetricPatch::euclidean(dim);
    MetricPatch::new(dim, label, move |x| e.components(x), domain)
}

fn validate(id: &str, p: &Params) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidParam(msg));
    if !(p.delta > 0.0 && p.delta < 0.5) {
        return bad(format!("delta must lie in (0, 0.5), got {}", p.delta));
    }
    match id {
        "inversion" | "stereo_identity" | "ball_identity" | "half_identity" | "conf_flat" => {
            if p.n < 2 || p.n > MAX_DIM {
                return bad(format!("n must lie in 2..={MAX_DIM}, got {}", p.n));
            }
        }
        "radial" => {
            if p.m < 3 || p.m > MAX_DIM {
                return bad(format!("m must lie in 3..={MAX_DIM}, got {}", p.m));
            }
        }
        _ => {}
    }
    if matches!(id, "stereo_identity" | "conf_flat") && p.eps != 1.0 && p.eps != -1.0 {
        return bad(format!("eps must be +1 or -1, got {}", p.eps));
    }
    if id == "twisted_projection" {
        if p.c1 == 0.0 || !p.c1.is_finite() {
            return bad(format!("c1 must be a nonzero real, got {}", p.c1));
        }
        if !(p.c2 > 0.0 && p.c2.is_finite()) {
            return bad(format!("c2 must be positive, got {}", p.c2));
        }
    }
    Ok(())
}

pub fn instantiate(id: &str, params: &Params) -> Result<CatalogEntry> {
    let p = *params;
    match id {
        "inversion" | "radial" | "stereo_identity" | "ball_identity" | "half_identity" | "h4_flat"
        | "conf_flat" | "twisted_projection" => validate(id, &p)?,
        _ => return Err(Error::UnknownEntry(id.to_string())),
    }
    Ok(match id {
        "inversion" => inversion(p),
        "radial" => radial(p),
        "stereo_identity" => stereo_identity(p),
        "ball_identity" => ball_identity(p),
        "half_identity" => half_identity(p),
        "h4_flat" => h4_flat(p),
        "conf_flat" => conf_flat(p),
        "twisted_projection" => twisted_projection(p),
        _ => unreachable!(),
    })
}

fn inversion(p: Params) -> CatalogEntry {
    let (n, delta) = (p.n, p.delta);
    let domain = move |x: &[f64]| r2(x) > delta * delta;
    CatalogEntry {
        id: "inversion",
        description: format!("inversion x -> x/|x|^2 of R^{n} minus the origin"),
        params: p,
        source_metric: euclidean_on(n, "euclidean R^n minus origin", domain),
        target_metric: MetricPatch::euclidean(n),
        map: SmoothMap::new(
            n,
            n,
            "inversion",
            |x| {
                let r = norm_sq(x).recip()?;
                Ok(x.iter().map(|xi| xi * &r).collect())
            },
            domain,
        ),
        expected: Expected::new(n == 2, n == 2 || n == 4, n == 4),
        region: Region::Shell {
            dim: n,
            r_min: 0.5,
            r_max: 2.0,
            min_last: None,
        },
        oracles: vec![oracle("lambda_sq", scalar(|x| r2(x).powi(-2)))],
    }
}

fn radial(p: Params) -> CatalogEntry {
    let (m, delta) = (p.m, p.delta);
    let domain = move |x: &[f64]| {
        let r = r2(x).sqrt();
        r > delta && x[x.len() - 1] > (-1.0 + delta) * r
    };
    CatalogEntry {
        id: "radial",
        description: format!(
            "radial projection x -> x/|x| from R^{m} minus the origin onto S^{} (stereographic chart)",
            m - 1
        ),
        params: p,
        source_metric: euclidean_on(m, "euclidean R^m minus origin", domain),
        target_metric: space_form(m - 1, 1.0, delta),
        map: SmoothMap::new(
            m,
            m - 1,
            "radial projection",
            move |x| {
                // y = u'/(1 + u_m) with u = x/|x|, i.e. y = x'/(|x| + x_m)
                let denom = (&norm_sq(x).sqrt()? + &x[m - 1]).recip()?;
                Ok(x[..m - 1].iter().map(|xi| xi * &denom).collect())
            },
            domain,
        ),
        expected: Expected::new(true, true, m == 4),
        region: Region::Shell {
            dim: m,
            r_min: 0.5,
            r_max: 2.0,
            min_last: Some(-0.5),
        },
        oracles: vec![oracle("lambda_sq", scalar(|x| 1.0 / r2(x)))],
    }
}

fn eqf_stereo(n: usize, eps: f64) -> OracleFn {
    vector(move |x| {
        let r = r2(x);
        let c = -8.0 * (n as f64 - 4.0) * (1.0 - eps * r) / (1.0 + eps * r).powi(3);
        x.iter().map(|v| c * v).collect()
    })
}

fn four_dim_only(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> OracleFn {
    Arc::new(move |x| {
        if n != 4 {
            return Err(Error::InvalidParam(format!(
                "this closed form holds in dimension 4 only, entry has n = {n}"
            )));
        }
        Ok(OracleValue::Scalar(f(x)))
    })
}

fn stereo_identity(p: Params) -> CatalogEntry {
    let (n, eps, delta) = (p.n, p.eps, p.delta);
    let domain = move |x: &[f64]| eps > 0.0 || r2(x) < (1.0 - delta).powi(2);
    let description = if eps > 0.0 {
        format!("identity from euclidean R^{n} to the round sphere chart 4/(1+|x|^2)^2")
    } else {
        format!("identity from the euclidean unit ball B^{n} to 4/(1-|x|^2)^2")
    };
    CatalogEntry {
        id: "stereo_identity",
        description,
        params: p,
        source_metric: euclidean_on(n, "euclidean source", domain),
        target_metric: space_form(n, eps, delta),
        map: SmoothMap::new(n, n, "identity", |x| Ok(x.to_vec()), domain),
        expected: Expected::new(n == 2, n == 2 || n == 4, false),
        region: Region::Shell {
            dim: n,
            r_min: 0.1,
            r_max: 0.8,
            min_last: None,
        },
        oracles: vec![
            oracle(
                "lambda_sq",
                scalar(move |x| 4.0 / (1.0 + eps * r2(x)).powi(2)),
            ),
            oracle("eqf_stereo", eqf_stereo(n, eps)),
            oracle(
                "eqd_stereo",
                four_dim_only(n, move |x| {
                    let r = r2(x);
                    4096.0 * r * (1.0 + 2.0 * eps - 3.0 * eps * r) / (1.0 + eps * r).powi(8)
                }),
            ),
            oracle(
                "eqd_stereo_exact",
                four_dim_only(n, move |x| {
                    let r = r2(x);
                    3.0 * 4096.0 * r * (eps - r) / (1.0 + eps * r).powi(8)
                }),
            ),
        ],
    }
}

fn ball_identity(p: Params) -> CatalogEntry {
    let (n, delta) = (p.n, p.delta);
    let domain = move |x: &[f64]| r2(x) < (1.0 - delta).powi(2);
    CatalogEntry {
        id: "ball_identity",
        description: format!("identity from the euclidean unit ball B^{n} to hyperbolic space 4/(1-|x|^2)^2"),
        params: p,
        source_metric: euclidean_on(n, "euclidean unit ball", domain),
        target_metric: space_form(n, -1.0, delta),
        map: SmoothMap::new(n, n, "identity", |x| Ok(x.to_vec()), domain),
        expected: Expected::new(n == 2, n == 2 || n == 4, false),
        region: Region::Shell {
            dim: n,
            r_min: 0.1,
            r_max: 0.8,
            min_last: None,
        },
        oracles: vec![
            oracle("lambda_sq", scalar(|x| 4.0 / (1.0 - r2(x)).powi(2))),
            oracle(
                "eqf_ball",
                vector(move |x| {
                    let r = r2(x);
                    let c = 8.0 * (4.0 - n as f64) * (1.0 + r) / (1.0 - r).powi(3);
                    x.iter().map(|v| c * v).collect()
                }),
            ),
        ],
    }
}

fn half_identity(p: Params) -> CatalogEntry {
    let (n, delta) = (p.n, p.delta);
    let domain = move |x: &[f64]| x[n - 1] > delta;
    CatalogEntry {
        id: "half_identity",
        description: format!("identity from the euclidean upper half-space R^{n}_+ to hyperbolic space (1/x_n^2) ds^2"),
        params: p,
        source_metric: euclidean_on(n, "euclidean upper half-space", domain),
        target_metric: MetricPatch::conformal(
            n,
            "upper half-space model",
            move |x| x[n - 1].powi(-2),
            domain,
        ),
        map: SmoothMap::new(n, n, "identity", |x| Ok(x.to_vec()), domain),
        expected: Expected::new(n == 2, n == 2 || n == 4, false),
        region: Region::Slab {
            dim: n,
            axis: n - 1,
            lo: 0.5,
            hi: 3.0,
            half_width: 1.0,
        },
        oracles: vec![
            oracle("lambda_sq", scalar(move |x| x[n - 1].powi(-2))),
            oracle(
                "eqf_half",
                vector(move |x| {
                    let mut v = vec![0.0; n];
                    v[n - 1] = 2.0 * (n as f64 - 4.0) / x[n - 1].powi(3);
                    v
                }),
            ),
        ],
    }
}

fn h4_flat(p: Params) -> CatalogEntry {
    let delta = p.delta;
    let domain = move |x: &[f64]| x[3] > delta;
    CatalogEntry {
        id: "h4_flat",
        description: "identity from hyperbolic space (H^4, (1/x_4^2) ds^2) to the euclidean half-space".into(),
        params: Params { n: 4, ..p },
        source_metric: MetricPatch::conformal(4, "upper half-space model", |x| x[3].powi(-2), domain),
        target_metric: euclidean_on(4, "euclidean upper half-space", domain),
        map: SmoothMap::new(4, 4, "identity", |x| Ok(x.to_vec()), domain),
        expected: Expected::new(false, false, false),
        region: Region::Slab {
            dim: 4,
            axis: 3,
            lo: 0.5,
            hi: 3.0,
            half_width: 1.0,
        },
        oracles: vec![
            oracle("lambda_sq", scalar(|x| x[3] * x[3])),
            // −2 dφ(e₄) with e₄ = x⁴∂₄ the unit normal direction
            oracle("eqf_h4_flat", vector(|x| vec![0.0, 0.0, 0.0, -2.0 * x[3]])),
        ],
    }
}

fn conf_flat(p: Params) -> CatalogEntry {
    let (n, eps, delta) = (p.n, p.eps, p.delta);
    let domain = move |x: &[f64]| eps > 0.0 || r2(x) < (1.0 - delta).powi(2);
    CatalogEntry {
        id: "conf_flat",
        description: format!("identity from (R^{n}, 4/(1+eps|x|^2)^2 ds^2) to euclidean R^{n}"),
        params: p,
        source_metric: space_form(n, eps, delta),
        target_metric: MetricPatch::euclidean(n),
        map: SmoothMap::new(n, n, "identity", |x| Ok(x.to_vec()), domain),
        expected: Expected::new(n == 2, n == 2, false),
        region: Region::Shell {
            dim: n,
            r_min: 0.1,
            r_max: 0.8,
            min_last: None,
        },
        oracles: vec![
            oracle("lambda_sq", scalar(move |x| (1.0 + eps * r2(x)).powi(2) / 4.0)),
            // (2 + (4−n)ε|x|²) dφ(X) with X = Σ x^k e_k in a source orthonormal frame
            oracle(
                "eqf_conf_flat",
                vector(move |x| {
                    let r = r2(x);
                    let c = (2.0 + (4.0 - n as f64) * eps * r) * (1.0 + eps * r) / 2.0;
                    x.iter().map(|v| c * v).collect()
                }),
            ),
        ],
    }
}

/// `β(x) = c₂e^{−c₁x}(1 − e^{c₁x})²`.
fn beta_jet(x: &Jet, c1: f64, c2: f64) -> Result<Jet> {
    let e = x.scale(c1).exp()?;
    Ok(x.scale(-c1).exp()?.scale(c2) * (-&e + 1.0).square())
}

/// `β′/β = −c₁(1 + e^{c₁x})/(1 − e^{c₁x})`.
pub fn twisted_f(x: f64, c1: f64) -> f64 {
    let e = (c1 * x).exp();
    -c1 * (1.0 + e) / (1.0 - e)
}

fn twisted_projection(p: Params) -> CatalogEntry {
    let (c1, c2, delta) = (p.c1, p.c2, p.delta);
    let domain = move |x: &[f64]| if c1 > 0.0 { x[0] > delta } else { x[0] < -delta };
    let (lo, hi) = if c1 > 0.0 { (0.5, 3.0) } else { (-3.0, -0.5) };
    CatalogEntry {
        id: "twisted_projection",
        description: "projection (x,y,z) -> (x,y) from dx^2+dy^2+beta(x)^2 dz^2, beta = c2 e^{-c1 x}(1-e^{c1 x})^2".into(),
        params: p,
        source_metric: MetricPatch::new(
            3,
            "twisted product",
            move |x| {
                let one = x[0].lift(1.0);
                let zero = x[0].zero_like();
                let b2 = beta_jet(&x[0], c1, c2)?.square();
                Ok(vec![
                    one.clone(),
                    zero.clone(),
                    zero.clone(),
                    zero.clone(),
                    one,
                    zero.clone(),
                    zero.clone(),
                    zero,
                    b2,
                ])
            },
            domain,
        ),
        target_metric: MetricPatch::euclidean(2),
        map: SmoothMap::new(3, 2, "projection", |x| Ok(x[..2].to_vec()), domain),
        expected: Expected::new(false, true, false),
        region: Region::Slab {
            dim: 3,
            axis: 0,
            lo,
            hi,
            half_width: 1.0,
        },
        oracles: vec![
            oracle("lambda_sq", scalar(|_| 1.0)),
            oracle(
                "beta",
                Arc::new(move |x| {
                    let j = Jet::constant(x[0], 1, 0)?;
                    Ok(OracleValue::Scalar(beta_jet(&j, c1, c2)?.value()))
                }),
            ),
            // f f′ + f″ with f = (ln β)′, differentiated at jet level
            oracle(
                "ode",
                Arc::new(move |x| {
                    let t = Jet::variable(0, x[0], 1, 3)?;
                    let f = beta_jet(&t, c1, c2)?.ln()?.diff(0)?;
                    let f1 = f.diff(0)?;
                    let f2 = f1.diff(0)?;
                    Ok(OracleValue::Scalar(f.value() * f1.value() + f2.value()))
                }),
            ),
        ],
    }
}
