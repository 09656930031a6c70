use std::io::Write;

use biharm_core::catalog::{list_entries, sample_region, EntryInfo};
use biharm_core::fields::bitension;
use biharm_core::morphism::{point_report, MorphismReport, PointReport};
use biharm_core::{instantiate, CatalogEntry, Expected, Params, ENGINE_VERSION};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{ListArgs, RunArgs, SweepArgs};
use crate::{json, CliError};

pub const SCHEMA: &str = "biharm-report/1";

#[derive(Debug, Serialize)]
pub struct ParamsEcho {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
}

impl From<Params> for ParamsEcho {
    fn from(p: Params) -> Self {
        Self {
            n: p.n,
            m: p.m,
            eps: p.eps,
            c1: p.c1,
            c2: p.c2,
            delta: p.delta,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ExpectedEcho {
    pub harmonic: Option<bool>,
    pub biharmonic: Option<bool>,
    pub morphism: Option<bool>,
    pub proper: Option<bool>,
}

impl From<Expected> for ExpectedEcho {
    fn from(e: Expected) -> Self {
        Self {
            harmonic: e.harmonic,
            biharmonic: e.biharmonic,
            morphism: e.morphism,
            proper: e.proper,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub entry: String,
    pub description: String,
    pub params: ParamsEcho,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub region: String,
}

#[derive(Debug, Serialize)]
pub struct Residuals {
    pub tension: f64,
    pub hwc: f64,
    pub bitension: f64,
    pub fourharmonic: f64,
    pub longeq: Option<f64>,
    pub trace: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct PointVerdicts {
    pub harmonic: bool,
    pub hwc: bool,
    pub biharmonic: bool,
    pub fourharmonic: bool,
    pub longeq: bool,
    pub trace: bool,
    pub morphism: bool,
}

#[derive(Debug, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub regular: bool,
    pub lambda_sq: f64,
    pub tau_norm_sq: f64,
    pub bitension_norm: f64,
    pub residuals: Residuals,
    /// The six terms of the long equation, at regular points.
    pub longeq_terms: Option<[f64; 6]>,
    pub verdicts: PointVerdicts,
}

impl PointRecord {
    fn new(index: usize, r: &PointReport) -> Self {
        let v = r.verdicts;
        Self {
            index,
            x: r.point.clone(),
            regular: r.regular,
            lambda_sq: r.dilation_sq,
            tau_norm_sq: r.tau_norm_sq,
            bitension_norm: r.bitension_norm,
            residuals: Residuals {
                tension: r.tension_residual,
                hwc: r.hwc_residual,
                bitension: r.bitension_residual,
                fourharmonic: r.fourharmonic_residual,
                longeq: r.longeq_residual,
                trace: r.trace_residual,
            },
            longeq_terms: r.longeq.as_ref().map(|l| l.terms),
            verdicts: PointVerdicts {
                harmonic: v.harmonic,
                hwc: v.hwc,
                biharmonic: v.biharmonic,
                fourharmonic: v.fourharmonic,
                longeq: v.longeq,
                trace: v.trace,
                morphism: v.is_morphism(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub condition: &'static str,
    pub index: usize,
}

#[derive(Debug, Serialize)]
pub struct Aggregate {
    pub harmonic: bool,
    pub hwc: bool,
    pub biharmonic: bool,
    pub fourharmonic: bool,
    pub longeq: bool,
    pub trace: bool,
    pub morphism: bool,
    pub proper: bool,
    pub first_failure: Option<Failure>,
}

#[derive(Debug, Serialize)]
pub struct ClaimDiff {
    pub claim: &'static str,
    pub expected: bool,
    pub observed: bool,
    pub status: &'static str,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub schema: &'static str,
    pub engine_version: &'static str,
    pub command: &'static str,
    pub config: ConfigEcho,
    pub points: Vec<PointRecord>,
    pub aggregate: Aggregate,
    pub expected: ExpectedEcho,
    pub diff: Vec<ClaimDiff>,
    pub matches: bool,
}

fn entry_for(run: &RunArgs, params: Params) -> Result<CatalogEntry, CliError> {
    run.validate()?;
    Ok(instantiate(&run.entry, &params)?)
}

fn sample(entry: &CatalogEntry, run: &RunArgs) -> Result<(Vec<Vec<f64>>, String), CliError> {
    let region = match run.region {
        Some((lo, hi)) => entry.region.with_bounds(lo, hi)?,
        None => entry.region.clone(),
    };
    let pts = sample_region(entry, &region, run.samples, run.seed);
    if pts.len() < run.samples {
        return Err(CliError::Usage(format!(
            "could only draw {} of {} points inside the map's domain from region {region}",
            pts.len(),
            run.samples
        )));
    }
    Ok((pts, region.to_string()))
}

fn diff(expected: &Expected, observed: &Aggregate) -> Vec<ClaimDiff> {
    [
        ("harmonic", expected.harmonic, observed.harmonic),
        ("biharmonic", expected.biharmonic, observed.biharmonic),
        ("morphism", expected.morphism, observed.morphism),
        ("proper", expected.proper, observed.proper),
    ]
    .into_iter()
    .filter_map(|(claim, e, o)| {
        e.map(|e| ClaimDiff {
            claim,
            expected: e,
            observed: o,
            status: if e == o { "match" } else { "mismatch" },
        })
    })
    .collect()
}

pub fn check(run: &RunArgs) -> Result<CheckReport, CliError> {
    let params = run.params();
    let entry = entry_for(run, params)?;
    let (pts, region) = sample(&entry, run)?;
    // indexed parallel collect keeps sample order
    let reports = pts
        .par_iter()
        .map(|x| point_report(&entry.map, &entry.source_metric, &entry.target_metric, x, run.tol))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Vec<PointRecord> = reports.iter().enumerate().map(|(i, r)| PointRecord::new(i, r)).collect();
    let agg = MorphismReport::from_points(reports, run.tol)?;
    let aggregate = Aggregate {
        harmonic: agg.harmonic,
        hwc: agg.hwc,
        biharmonic: agg.biharmonic,
        fourharmonic: agg.fourharmonic,
        longeq: agg.longeq,
        trace: agg.trace,
        morphism: agg.is_morphism,
        proper: agg.biharmonic && !agg.harmonic,
        first_failure: agg.first_failure.map(|(c, index)| Failure {
            condition: c.name(),
            index,
        }),
    };
    let diff = diff(&entry.expected, &aggregate);
    let matches = diff.iter().all(|d| d.expected == d.observed);
    Ok(CheckReport {
        schema: SCHEMA,
        engine_version: ENGINE_VERSION,
        command: "check",
        config: ConfigEcho {
            entry: entry.id.to_string(),
            description: entry.description.clone(),
            params: params.into(),
            samples: run.samples,
            seed: run.seed,
            tol: run.tol,
            region,
        },
        points,
        aggregate,
        expected: entry.expected.into(),
        diff,
        matches,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub dim: usize,
    pub region: String,
    pub max_tension_residual: f64,
    pub min_bitension_residual: f64,
    pub max_bitension_residual: f64,
    pub harmonic: bool,
    pub biharmonic: bool,
    pub expected_harmonic: Option<bool>,
    pub expected_biharmonic: Option<bool>,
    pub status: &'static str,
}

#[derive(Debug, Serialize)]
pub struct SweepConfig {
    pub entry: String,
    /// Which parameter the sweep varies (`n` or `m`).
    pub varied: &'static str,
    pub dims: Vec<usize>,
    pub params: ParamsEcho,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub schema: &'static str,
    pub engine_version: &'static str,
    pub command: &'static str,
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    /// Dimensions where the bitension vanishes at every sample.
    pub vanishing_dims: Vec<usize>,
    /// Dimensions where the tension already vanishes.
    pub harmonic_dims: Vec<usize>,
    pub matches: bool,
}

pub fn sweep(args: &SweepArgs) -> Result<SweepReport, CliError> {
    let run = &args.run;
    let base = run.params();
    let varied = match run.entry.as_str() {
        "radial" => "m",
        "h4_flat" | "twisted_projection" => {
            return Err(CliError::Usage(format!("entry {} has no dimension parameter to sweep", run.entry)))
        }
        _ => "n",
    };
    let dims = &args.dims.0;
    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        let params = if varied == "m" { Params { m: dim, ..base } } else { Params { n: dim, ..base } };
        let entry = entry_for(run, params)?;
        let (pts, region) = sample(&entry, run)?;
        let residuals = pts
            .par_iter()
            .map(|x| {
                let b = bitension(&entry.map, &entry.source_metric, &entry.target_metric, x)?;
                Ok((b.tension.normalized(), b.normalized))
            })
            .collect::<Result<Vec<(f64, f64)>, biharm_core::Error>>()?;
        let max_t = residuals.iter().map(|r| r.0).fold(0.0, f64::max);
        let max_b = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
        let min_b = residuals.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let (harmonic, biharmonic) = (max_t < run.tol, max_b < run.tol);
        let ex = entry.expected;
        let ok = ex.harmonic.map_or(true, |e| e == harmonic) && ex.biharmonic.map_or(true, |e| e == biharmonic);
        rows.push(SweepRow {
            dim,
            region,
            max_tension_residual: max_t,
            min_bitension_residual: min_b,
            max_bitension_residual: max_b,
            harmonic,
            biharmonic,
            expected_harmonic: ex.harmonic,
            expected_biharmonic: ex.biharmonic,
            status: if ok { "match" } else { "mismatch" },
        });
    }
    let vanishing_dims = rows.iter().filter(|r| r.biharmonic).map(|r| r.dim).collect();
    let harmonic_dims = rows.iter().filter(|r| r.harmonic).map(|r| r.dim).collect();
    let matches = rows.iter().all(|r| r.status == "match");
    Ok(SweepReport {
        schema: SCHEMA,
        engine_version: ENGINE_VERSION,
        command: "sweep",
        config: SweepConfig {
            entry: run.entry.clone(),
            varied,
            dims: dims.clone(),
            params: base.into(),
            samples: run.samples,
            seed: run.seed,
            tol: run.tol,
        },
        rows,
        vanishing_dims,
        harmonic_dims,
        matches,
    })
}

#[derive(Debug, Serialize)]
struct EntryRecord {
    id: &'static str,
    description: String,
    params: ParamsEcho,
    expected: ExpectedEcho,
    region: String,
    oracles: Vec<&'static str>,
}

impl From<EntryInfo> for EntryRecord {
    fn from(e: EntryInfo) -> Self {
        Self {
            id: e.id,
            description: e.description,
            params: e.params.into(),
            expected: e.expected.into(),
            region: e.region,
            oracles: e.oracles,
        }
    }
}

fn claim(c: Option<bool>) -> &'static str {
    match c {
        Some(true) => "yes",
        Some(false) => "no",
        None => "-",
    }
}

pub fn list(args: &ListArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut entries = list_entries();
    if let Some(id) = &args.id {
        entries.retain(|e| e.id == id);
        if entries.is_empty() {
            return Err(biharm_core::Error::UnknownEntry(id.clone()).into());
        }
    }
    if args.json {
        let records: Vec<EntryRecord> = entries.into_iter().map(Into::into).collect();
        if args.id.is_some() {
            json::write(out, &records[0])?;
        } else {
            json::write(out, &records)?;
        }
        return Ok(());
    }
    if args.id.is_some() {
        let e = &entries[0];
        writeln!(out, "id           {}", e.id)?;
        writeln!(out, "description  {}", e.description)?;
        let p = e.params;
        writeln!(
            out,
            "defaults     n={} m={} eps={} c1={} c2={} delta={}",
            p.n, p.m, p.eps, p.c1, p.c2, p.delta
        )?;
        writeln!(out, "region       {}", e.region)?;
        let x = e.expected;
        writeln!(
            out,
            "expected     harmonic={} biharmonic={} morphism={} proper={}",
            claim(x.harmonic),
            claim(x.biharmonic),
            claim(x.morphism),
            claim(x.proper)
        )?;
        writeln!(out, "oracles      {}", e.oracles.join(", "))?;
        return Ok(());
    }
    writeln!(
        out,
        "{:<20} {:>8} {:>10} {:>8} {:>6}  description",
        "id", "harmonic", "biharmonic", "morphism", "proper"
    )?;
    for e in entries {
        let x = e.expected;
        writeln!(
            out,
            "{:<20} {:>8} {:>10} {:>8} {:>6}  {}",
            e.id,
            claim(x.harmonic),
            claim(x.biharmonic),
            claim(x.morphism),
            claim(x.proper),
            e.description
        )?;
    }
    Ok(())
}
