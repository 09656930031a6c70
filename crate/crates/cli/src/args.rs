use std::path::PathBuf;

use biharm_core::Params;
use clap::{Args, Parser, Subcommand};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "biharm", version, about = "Verify biharmonic maps and morphisms from the built-in catalog")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog entries and their expected verdicts.
    List(ListArgs),
    /// Sample an entry and diff observed verdicts against the expected ones.
    Check(CheckArgs),
    /// Maximum normalized bitension per dimension.
    Sweep(SweepArgs),
}

impl Command {
    pub fn out(&self) -> Option<&PathBuf> {
        match self {
            Command::List(a) => a.out.as_ref(),
            Command::Check(a) => a.run.out.as_ref(),
            Command::Sweep(a) => a.run.out.as_ref(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ListArgs {
    /// Show a single entry.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub json: bool,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Catalog entry id.
    #[arg(long)]
    pub entry: String,
    /// Source dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Source dimension of the radial projection.
    #[arg(long)]
    pub m: Option<usize>,
    /// Curvature sign of the stereographic metrics (+1 or -1).
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Twisted projection exponent rate.
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<f64>,
    /// Twisted projection amplitude.
    #[arg(long)]
    pub c2: Option<f64>,
    /// Distance kept from singular sets.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of sample points.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Sampling seed.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Tolerance on normalized residuals.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Override the sampling region's main bounds, as `LO,HI`.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    pub region: Option<(f64, f64)>,
    /// Emit a JSON report.
    #[arg(long)]
    pub json: bool,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn params(&self) -> Params {
        let d = Params::default();
        Params {
            n: self.n.unwrap_or(d.n),
            m: self.m.unwrap_or(d.m),
            eps: self.eps.unwrap_or(d.eps),
            c1: self.c1.unwrap_or(d.c1),
            c2: self.c2.unwrap_or(d.c2),
            delta: self.delta.unwrap_or(d.delta),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.samples == 0 {
            return Err(CliError::Usage("--samples must be positive".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be a positive number, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Dimensions, as `A..B` (inclusive) or a comma list.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Dims,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dims(pub Vec<usize>);

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("bounds must satisfy LO <= HI, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    let dims: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
        let b: usize = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
        if a > b {
            return Err(format!("empty range {a}..{b}"));
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad dimension {t:?}: {e}")))
            .collect::<Result<_, _>>()?
    };
    if dims.is_empty() {
        return Err("no dimensions given".into());
    }
    Ok(Dims(dims))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parse() {
        assert_eq!(parse_dims("2..5").unwrap().0, vec![2, 3, 4, 5]);
        assert_eq!(parse_dims("3,5").unwrap().0, vec![3, 5]);
        assert_eq!(parse_dims("4").unwrap().0, vec![4]);
        assert!(parse_dims("5..2").is_err());
        assert!(parse_dims("x").is_err());
    }

    #[test]
    fn bounds_parse() {
        assert_eq!(parse_bounds("0.5,2").unwrap(), (0.5, 2.0));
        assert_eq!(parse_bounds("-3,-0.5").unwrap(), (-3.0, -0.5));
        assert!(parse_bounds("2,1").is_err());
        assert!(parse_bounds("1").is_err());
    }
}
