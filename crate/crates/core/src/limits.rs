//! The `s → 1` ladder: eigenvalues, resolvents, Martin kernels and large
//! solutions against the classical Dirichlet Laplacian on the same grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::BoundaryData;
use crate::discretize::{assemble_green_matrix, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, QuadGrid};
use crate::kernels::{martin_kernel, OperatorKind, OperatorSpec};
use crate::solver::solve_large;
use crate::spectral::{apply_glambda, eigendecompose, lambda_context, SpectralData};

/// Number of nearest-boundary nodes used by the exponent fit.
pub const FIT_NODES: usize = 5;
/// Relative slack allowed in the monotonicity flags.
pub const LADDER_SLACK: f64 = 0.1;

/// An operator family `s ↦ ℒ_s` on a fixed grid.
#[derive(Debug, Clone)]
pub struct SFamily {
    pub kind: OperatorKind,
    pub grid: Arc<QuadGrid>,
}

impl SFamily {
    pub fn new(kind: OperatorKind, grid: Arc<QuadGrid>) -> Result<Self> {
        if kind == OperatorKind::Classical {
            return Err(Error::InvalidOperator("the family must be RFL or SFL".into()));
        }
        Ok(Self { kind, grid })
    }

    pub fn at(&self, s: f64) -> Result<OperatorSpec> {
        OperatorSpec::new(self.kind, s, self.grid.domain)
    }

    /// The classical endpoint. For the SFL family this is the classical
    /// Green's function written as its sine series, the representation the
    /// family itself is assembled in.
    pub fn limit(&self) -> Result<OperatorSpec> {
        match self.kind {
            OperatorKind::Sfl => OperatorSpec::sfl(1.0, self.grid.domain),
            _ => OperatorSpec::classical(self.grid.domain),
        }
    }

    fn spectrum(&self, op: &OperatorSpec) -> Result<SpectralData> {
        eigendecompose(Arc::new(assemble_green_matrix(op, self.grid.clone())?))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SLimitRow {
    pub s: f64,
    pub lambda_1: f64,
    /// `|λ_1(s) − λ_1(1)|`
    pub lambda_1_dist: f64,
    /// `sup_{j ≤ j_max} |1/λ_j(s) − 1/λ_j(1)|`
    pub omega: f64,
    /// `|⟨φ_1(s), φ_1(1)⟩_W|`
    pub alignment_1: f64,
    /// `max |D_s − D_1| / D_1` over interior samples in `K`.
    pub kernel_dist: f64,
    /// Resolvent or large-solution distance to the classical limit.
    pub sol_dist: f64,
    /// `‖v_λ(s)‖_{L∞(K)}`
    pub sup_k: f64,
    /// Theoretical blow-up exponent.
    pub b: f64,
    /// `−slope` of `log|v|` against `log δ` near the boundary.
    pub fitted_exponent: f64,
    /// `|v_λ(s)|·δ^b` at the node nearest the boundary.
    pub amplification: f64,
}

impl SLimitRow {
    fn new(s: f64, b: f64) -> Self {
        Self {
            s,
            lambda_1: f64::NAN,
            lambda_1_dist: f64::NAN,
            omega: f64::NAN,
            alignment_1: f64::NAN,
            kernel_dist: f64::NAN,
            sol_dist: f64::NAN,
            sup_k: f64::NAN,
            b,
            fitted_exponent: f64::NAN,
            amplification: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SLimitReport {
    pub kind: OperatorKind,
    pub rows: Vec<SLimitRow>,
    /// `λ_j(1)` for `j ≤ j_max` (empty when not computed).
    pub limit_lambdas: Vec<f64>,
    pub lambda_1_monotone: bool,
    pub omega_monotone: bool,
    pub sol_dist_monotone: bool,
    pub kernel_dist_monotone: bool,
}

impl SLimitReport {
    fn finish(kind: OperatorKind, rows: Vec<SLimitRow>, limit_lambdas: Vec<f64>) -> Self {
        let col = |f: fn(&SLimitRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        Self {
            kind,
            lambda_1_monotone: strictly_decreasing(&col(|r| r.lambda_1_dist)),
            omega_monotone: decreasing_with_slack(&col(|r| r.omega)),
            sol_dist_monotone: decreasing_with_slack(&col(|r| r.sol_dist)),
            kernel_dist_monotone: decreasing_with_slack(&col(|r| r.kernel_dist)),
            rows,
            limit_lambdas,
        }
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_nan()) || v.windows(2).all(|w| w[1] < w[0])
}

fn decreasing_with_slack(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_nan()) || v.windows(2).all(|w| w[1] <= (1.0 + LADDER_SLACK) * w[0])
}

fn check_ladder(s_list: &[f64]) -> Result<()> {
    if s_list.is_empty() {
        return Err(Error::InvalidInput("empty s ladder".into()));
    }
    if let Some(s) = s_list.iter().find(|&&s| !(s > 0.5 && s < 1.0)) {
        return Err(Error::InvalidInput(format!("ladder values must lie in (1/2, 1), got {s}")));
    }
    Ok(())
}

fn check_regular(sd: &SpectralData, lambda: f64) -> Result<()> {
    lambda_context(sd, lambda).map(|_| ())
}

fn align(sd: &SpectralData, other: &SpectralData, j: usize) -> f64 {
    let w = &sd.kernel.grid.weights;
    (0..w.len())
        .map(|i| w[i] * sd.modes[(i, j)] * other.modes[(i, j)])
        .sum::<f64>()
        .abs()
}

/// Eigenvalue ladder against the classical spectrum on the same grid.
pub fn spectral_convergence_s(family: &SFamily, s_list: &[f64], j_max: usize) -> Result<SLimitReport> {
    check_ladder(s_list)?;
    let limit = family.spectrum(&family.limit()?)?;
    let j_max = j_max.clamp(1, limit.len());
    let rows = s_list
        .par_iter()
        .map(|&s| {
            let op = family.at(s)?;
            let sd = family.spectrum(&op)?;
            let mut row = SLimitRow::new(s, op.b);
            row.lambda_1 = sd.lambda_1();
            row.lambda_1_dist = (sd.lambda_1() - limit.lambda_1()).abs();
            row.omega = (0..j_max.min(sd.len()))
                .map(|j| (1.0 / sd.lambdas[j] - 1.0 / limit.lambdas[j]).abs())
                .fold(0.0, f64::max);
            row.alignment_1 = align(&sd, &limit, 0);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SLimitReport::finish(family.kind, rows, limit.lambdas[..j_max].to_vec()))
}

/// `‖𝔾_{ℒ_s−λ}f − 𝔾_{ℒ_1−λ}f‖_{L²}` along the ladder.
pub fn resolvent_convergence_s(family: &SFamily, s_list: &[f64], lambda: f64, f: &GridFunction) -> Result<SLimitReport> {
    check_ladder(s_list)?;
    let limit = family.spectrum(&family.limit()?)?;
    let target = apply_glambda(&limit, &lambda_context(&limit, lambda)?, f)?;
    let rows = s_list
        .par_iter()
        .map(|&s| {
            let op = family.at(s)?;
            let sd = family.spectrum(&op)?;
            let u = apply_glambda(&sd, &lambda_context(&sd, lambda)?, f)?;
            let mut row = SLimitRow::new(s, op.b);
            row.lambda_1 = sd.lambda_1();
            row.lambda_1_dist = (sd.lambda_1() - limit.lambda_1()).abs();
            row.sol_dist = u.sub(&target)?.norm_l2();
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SLimitReport::finish(family.kind, rows, vec![limit.lambda_1()]))
}

/// Least-squares slope of `log|v|` against `log δ` over the nodes nearest
/// the boundary point `z`, negated (so it estimates the blow-up exponent).
pub fn boundary_exponent_fit(v: &GridFunction, z: f64, count: usize) -> Result<f64> {
    let idx = v.grid.nearest_to_boundary(z, count);
    if idx.len() < 2 {
        return Err(Error::InvalidInput("not enough nodes for an exponent fit".into()));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| v.grid.delta[i].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| v.values[i].abs().ln()).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Numerical("exponent fit hit a zero value".into()));
    }
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// Interior sample pairs `(z, y)` with `y` in `K = {δ ≥ k_frac·r}`.
fn kernel_samples(grid: &QuadGrid, k_frac: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let r = grid.domain.radius;
    let n = grid.domain.dim;
    let mut out = Vec::new();
    for i in grid.compact_indices(k_frac) {
        let rho = grid.nodes[i];
        match grid.domain.kind {
            DomainKind::Interval => {
                for z in [-r, r] {
                    out.push((vec![z], vec![rho]));
                }
            }
            DomainKind::Ball => {
                let mut z = vec![0.0; n];
                z[0] = r;
                for k in 0..5 {
                    let th = k as f64 * PI / 4.0;
                    let mut y = vec![0.0; n];
                    y[0] = rho * th.cos();
                    if n > 1 {
                        y[1] = rho * th.sin();
                    }
                    out.push((z.clone(), y));
                }
            }
        }
    }
    out
}

/// `max |D_s(z,y) − D_1(z,y)| / D_1(z,y)` over interior samples.
pub fn martin_kernel_distance(op: &OperatorSpec, grid: &QuadGrid, k_frac: f64) -> Result<f64> {
    let limit = OperatorSpec::classical(op.domain)?;
    let mut worst = 0.0f64;
    for (z, y) in kernel_samples(grid, k_frac) {
        let a = martin_kernel(op, &z, &y)?;
        let b = martin_kernel(&limit, &z, &y)?;
        worst = worst.max((a - b).abs() / b);
    }
    Ok(worst)
}

fn l1_on_compact(v: &GridFunction, w: &GridFunction, k_frac: f64) -> f64 {
    let g = &v.grid;
    g.compact_indices(k_frac)
        .iter()
        .map(|&i| g.weights[i] * (v.values[i] - w.values[i]).abs())
        .sum()
}

/// Large solutions along the ladder against
/// `v₁ = 𝕄₁(h) + 𝔾_{ℒ₁−λ}(g + λ𝕄₁(h))`.
pub fn large_solution_limit_s(
    family: &SFamily,
    s_list: &[f64],
    lambda: f64,
    g: &GridFunction,
    h: &BoundaryData,
    k_frac: f64,
) -> Result<SLimitReport> {
    check_ladder(s_list)?;
    let limit_op = family.limit()?;
    let limit = family.spectrum(&limit_op)?;
    let v1 = solve_large(&limit_op, &limit, &lambda_context(&limit, lambda)?, g, h, k_frac)?.v();
    let z = family.grid.domain.radius;
    let rows = s_list
        .par_iter()
        .map(|&s| {
            let op = family.at(s)?;
            let sd = family.spectrum(&op)?;
            check_regular(&sd, lambda)?;
            let rep = solve_large(&op, &sd, &lambda_context(&sd, lambda)?, g, h, k_frac)?;
            let v = rep.v();
            let near = v.grid.nearest_to_boundary(z, 1)[0];
            let mut row = SLimitRow::new(s, op.b);
            row.lambda_1 = sd.lambda_1();
            row.lambda_1_dist = (sd.lambda_1() - limit.lambda_1()).abs();
            row.sol_dist = l1_on_compact(&v, &v1, k_frac);
            row.sup_k = rep.sup_k;
            row.fitted_exponent = boundary_exponent_fit(&v, z, FIT_NODES)?;
            row.amplification = v.values[near].abs() * v.grid.delta[near].powf(op.b);
            row.kernel_dist = martin_kernel_distance(&op, &family.grid, k_frac)?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SLimitReport::finish(family.kind, rows, vec![limit.lambda_1()]))
}

/// Every ladder column at once: eigenvalues, kernels and large solutions.
pub fn ladder(
    family: &SFamily,
    s_list: &[f64],
    j_max: usize,
    lambda: f64,
    g: &GridFunction,
    h: &BoundaryData,
    k_frac: f64,
) -> Result<SLimitReport> {
    let spec = spectral_convergence_s(family, s_list, j_max)?;
    let large = large_solution_limit_s(family, s_list, lambda, g, h, k_frac)?;
    let rows = spec
        .rows
        .iter()
        .zip(&large.rows)
        .map(|(a, b)| SLimitRow {
            omega: a.omega,
            alignment_1: a.alignment_1,
            ..b.clone()
        })
        .collect();
    Ok(SLimitReport::finish(family.kind, rows, spec.limit_lambdas))
}
