use std::io::{self, Write};

use crate::report::{CheckReport, SweepReport};

fn flag(b: bool) -> char {
    if b {
        'y'
    } else {
        '.'
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2e}"))
}

pub fn check(out: &mut dyn Write, r: &CheckReport) -> io::Result<()> {
    let c = &r.config;
    let p = &c.params;
    writeln!(out, "entry    {} ({})", c.entry, c.description)?;
    writeln!(
        out,
        "params   n={} m={} eps={} c1={} c2={} delta={}",
        p.n, p.m, p.eps, p.c1, p.c2, p.delta
    )?;
    writeln!(out, "region   {}", c.region)?;
    writeln!(out, "sampling {} points, seed {}, tol {:e}", c.samples, c.seed, c.tol)?;
    writeln!(out)?;
    writeln!(
        out,
        "{:>4} {:>8} {:>11} {:>11} {:>9} {:>9} {:>9} {:>9} {:>9}  H C B 4 L",
        "#", "|x|", "lambda^2", "|tau|^2", "tension", "bitens", "4-harm", "longeq", "trace"
    )?;
    for pt in &r.points {
        let s = &pt.residuals;
        let v = &pt.verdicts;
        let norm = pt.x.iter().map(|t| t * t).sum::<f64>().sqrt();
        writeln!(
            out,
            "{:>4} {:>8.4} {:>11.4e} {:>11.4e} {:>9.2e} {:>9.2e} {:>9.2e} {:>9} {:>9}  {} {} {} {} {}",
            pt.index,
            norm,
            pt.lambda_sq,
            pt.tau_norm_sq,
            s.tension,
            s.bitension,
            s.fourharmonic,
            opt(s.longeq),
            opt(s.trace),
            flag(v.harmonic),
            flag(v.hwc),
            flag(v.biharmonic),
            flag(v.fourharmonic),
            flag(v.longeq)
        )?;
    }
    let a = &r.aggregate;
    writeln!(out)?;
    writeln!(
        out,
        "aggregate harmonic={} hwc={} biharmonic={} 4-harmonic={} longeq={} trace={} morphism={} proper={}",
        a.harmonic, a.hwc, a.biharmonic, a.fourharmonic, a.longeq, a.trace, a.morphism, a.proper
    )?;
    if let Some(f) = &a.first_failure {
        writeln!(out, "first failing condition: {} at point {}", f.condition, f.index)?;
    }
    writeln!(out)?;
    writeln!(out, "{:<12} {:>8} {:>8}  status", "claim", "expected", "observed")?;
    for d in &r.diff {
        writeln!(out, "{:<12} {:>8} {:>8}  {}", d.claim, d.expected, d.observed, d.status)?;
    }
    writeln!(out, "result: {}", if r.matches { "MATCH" } else { "MISMATCH" })
}

pub fn sweep(out: &mut dyn Write, r: &SweepReport) -> io::Result<()> {
    let c = &r.config;
    writeln!(
        out,
        "sweep {} over {} in {:?}, {} points each, seed {}, tol {:e}",
        c.entry, c.varied, c.dims, c.samples, c.seed, c.tol
    )?;
    writeln!(out)?;
    writeln!(
        out,
        "{:>4} {:>12} {:>12} {:>12}  {:<10} {:<10} status",
        c.varied, "max tension", "min bitens", "max bitens", "harmonic", "biharmonic"
    )?;
    for row in &r.rows {
        let note = if row.harmonic {
            "  <- harmonic"
        } else if row.biharmonic {
            "  <- bitension vanishes"
        } else {
            ""
        };
        writeln!(
            out,
            "{:>4} {:>12.3e} {:>12.3e} {:>12.3e}  {:<10} {:<10} {}{}",
            row.dim,
            row.max_tension_residual,
            row.min_bitension_residual,
            row.max_bitension_residual,
            row.harmonic,
            row.biharmonic,
            row.status,
            note
        )?;
    }
    writeln!(out)?;
    writeln!(out, "vanishing bitension at {} = {:?}", c.varied, r.vanishing_dims)?;
    writeln!(out, "result: {}", if r.matches { "MATCH" } else { "MISMATCH" })
}
