use std::path::{Path, PathBuf};
use std::sync::Arc;

use nonlocal_eigen::boundary::BoundaryData;
use nonlocal_eigen::discretize::GridFunction;
use nonlocal_eigen::geometry::{DomainKind, DomainSpec, QuadGrid};
use nonlocal_eigen::kernels::{OperatorKind, OperatorSpec};
use nonlocal_eigen::spectral::SpectralData;
use serde::Serialize;

use crate::CliError;

/// A named datum `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    One,
    DeltaPow { alpha: f64 },
    Eigmode { j: usize },
    Table { path: PathBuf, x: Vec<f64>, y: Vec<f64> },
}

fn call_arg<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')').map(str::trim)
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let bad = |what: &str| CliError::Config(format!("bad g profile '{s}': {what}"));
        match s {
            "zero" => return Ok(Profile::Zero),
            "one" => return Ok(Profile::One),
            _ => {}
        }
        if let Some(a) = call_arg(s, "delta_pow") {
            let alpha = a.parse().map_err(|_| bad("exponent is not a number"))?;
            return Ok(Profile::DeltaPow { alpha });
        }
        if let Some(a) = call_arg(s, "eigmode") {
            let j: usize = a.parse().map_err(|_| bad("mode index is not a positive integer"))?;
            if j == 0 {
                return Err(bad("modes are numbered from 1"));
            }
            return Ok(Profile::Eigmode { j });
        }
        if let Some(p) = call_arg(s, "table").or_else(|| s.strip_prefix('@')) {
            return Self::read_table(Path::new(p));
        }
        Err(bad("expected zero, one, delta_pow(a), eigmode(j), table(path) or @path"))
    }

    /// Two columns `x, value`; a non-numeric first row is taken as a header.
    fn read_table(path: &Path) -> Result<Self, CliError> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::Config(format!("cannot read table {}: {e}", path.display())))?;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| CliError::Config(format!("table {}: {e}", path.display())))?;
            if rec.len() != 2 {
                return Err(CliError::Config(format!("table row {} needs two columns", i + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    x.push(a);
                    y.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(CliError::Config(format!("table row {} is not numeric", i + 1))),
            }
        }
        if x.len() < 2 || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("table needs at least two rows with increasing x".into()));
        }
        Ok(Profile::Table {
            path: path.to_path_buf(),
            x,
            y,
        })
    }

    pub fn on_grid(&self, grid: &Arc<QuadGrid>, sd: Option<&SpectralData>) -> Result<GridFunction, CliError> {
        Ok(match self {
            Profile::Zero => GridFunction::zeros(grid.clone()),
            Profile::One => GridFunction::from_fn(grid.clone(), |_, _| 1.0),
            Profile::DeltaPow { alpha } => GridFunction::delta_pow(grid.clone(), *alpha),
            Profile::Eigmode { j } => {
                let sd = sd.ok_or_else(|| CliError::Config("eigmode needs a spectrum".into()))?;
                if *j > sd.len() {
                    return Err(CliError::Config(format!("eigmode({j}) exceeds the {} computed modes", sd.len())));
                }
                sd.mode(j - 1)
            }
            Profile::Table { x, y, .. } => {
                let (lo, hi) = (x[0], x[x.len() - 1]);
                let mut values = Vec::with_capacity(grid.len());
                for &p in &grid.nodes {
                    if p < lo || p > hi {
                        return Err(CliError::Config(format!("table does not cover the node x = {p}")));
                    }
                    let k = x.partition_point(|&v| v <= p).clamp(1, x.len() - 1);
                    let t = (p - x[k - 1]) / (x[k] - x[k - 1]);
                    values.push(y[k - 1] + t * (y[k] - y[k - 1]));
                }
                GridFunction {
                    grid: grid.clone(),
                    values,
                }
            }
        })
    }
}

pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad {what} entry '{t}'")))
        })
        .collect()
}

pub fn parse_boundary(s: &str, kind: DomainKind) -> Result<BoundaryData, CliError> {
    let v = parse_list(s, "--h")?;
    match (kind, v.as_slice()) {
        (DomainKind::Interval, [c]) => Ok(BoundaryData::Interval { left: *c, right: *c }),
        (DomainKind::Interval, [l, r]) => Ok(BoundaryData::Interval { left: *l, right: *r }),
        (DomainKind::Ball, [c]) => Ok(BoundaryData::Ball { value: *c }),
        _ => Err(CliError::Config(format!(
            "--h needs {} for this domain",
            if kind == DomainKind::Interval { "one or two values" } else { "one value" }
        ))),
    }
}

/// Everything a command needs, echoed into every JSON sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub op: OperatorKind,
    pub s: f64,
    pub domain: DomainKind,
    pub n: usize,
    pub r: f64,
    #[serde(rename = "N")]
    pub nodes: usize,
    pub grade: f64,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub lambda_list: Option<Vec<f64>>,
    pub g: Profile,
    pub h: BoundaryData,
    pub k_frac: f64,
    pub out: PathBuf,
    pub seed: u64,
    pub index: usize,
    pub approach: String,
    pub s_list: Vec<f64>,
    pub version: &'static str,
}

impl RunConfig {
    pub fn domain_spec(&self) -> Result<DomainSpec, CliError> {
        Ok(DomainSpec::new(self.domain, self.n, self.r)?)
    }

    pub fn operator(&self) -> Result<OperatorSpec, CliError> {
        Ok(OperatorSpec::new(self.op, self.s, self.domain_spec()?)?.with_sfl_matrix_terms(self.m))
    }
}
