//! Nyström discretization of the Green operator `𝔾₀f(x) = ∫ 𝒢₀(x,y) f(y) dy`
//! on a [`QuadGrid`], grid functions, and the weighted norms.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, QuadGrid};
use crate::kernels::{dirichlet_mode, green_interval, green_radial, OperatorKind, OperatorSpec, Pt};
use crate::quadrature::{integrate, Tolerance};

/// How the diagonal entries were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    /// `K_ii = (1/w_i) ∫_{cell_i} 𝒢₀(x_i, y) dy`.
    CellAverage,
    /// Truncated eigenfunction series evaluated on the diagonal.
    SeriesPointwise,
}

/// Symmetric Nyström matrix `K_ij ≈ 𝒢₀(x_i, x_j)`.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    pub op: OperatorSpec,
    pub grid: Arc<QuadGrid>,
    pub matrix: DMatrix<f64>,
    pub diagonal_rule: DiagonalRule,
}

/// Values at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Arc<QuadGrid>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<QuadGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid function has non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<QuadGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Sample `f(x, δ(x))` at the nodes.
    pub fn from_fn(grid: Arc<QuadGrid>, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = grid.nodes.iter().zip(&grid.delta).map(|(&x, &d)| f(x, d)).collect();
        Self { grid, values }
    }

    /// `δ^α` on the grid.
    pub fn delta_pow(grid: Arc<QuadGrid>, alpha: f64) -> Self {
        Self::from_fn(grid, |_, d| d.powf(alpha))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch("grid functions live on different grids".into()))
        }
    }

    /// Weighted inner product `Σ w_i u_i v_i`.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_grid(other)?;
        Ok(weighted_dot(&self.grid.weights, &self.values, &other.values))
    }

    pub fn norm_l2(&self) -> f64 {
        weighted_dot(&self.grid.weights, &self.values, &self.values).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&self, a: f64) -> GridFunction {
        self.map(|v| a * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.check_grid(other)?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.lin_comb(1.0, other, -1.0)
    }
}

pub(crate) fn weighted_dot(w: &[f64], u: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
}

fn diagonal_cell_average(op: &OperatorSpec, grid: &QuadGrid, i: usize) -> f64 {
    let xi = Pt::new(grid.nodes[i], grid.delta[i]);
    let ball = grid.domain.kind == DomainKind::Ball;
    let f = |t: f64| {
        let (y, dy, jac) = grid.map_param(t);
        let yp = Pt::new(y, dy);
        let g = if ball {
            green_radial(op, xi, yp) * grid.radial_factor(y)
        } else {
            green_interval(op, xi, yp)
        };
        g * jac
    };
    let tol = Tolerance::new(1e-14, 1e-10);
    let t = grid.params[i];
    let left = integrate(f, grid.param_edges[i], t, tol).value;
    let right = integrate(f, t, grid.param_edges[i + 1], tol).value;
    (left + right) / grid.weights[i]
}

/// Assemble the Nyström matrix of `𝔾₀` for `op` on `grid`.
pub fn assemble_green_matrix(op: &OperatorSpec, grid: Arc<QuadGrid>) -> Result<DiscreteKernel> {
    if op.domain != grid.domain {
        return Err(Error::GridMismatch("operator and grid live on different domains".into()));
    }
    if op.kind == OperatorKind::Sfl {
        return assemble_sfl(op, grid);
    }
    let n = grid.len();
    let ball = grid.domain.kind == DomainKind::Ball;
    let pts: Vec<Pt> = (0..n).map(|i| Pt::new(grid.nodes[i], grid.delta[i])).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(n - i);
            row.push(diagonal_cell_average(op, &grid, i));
            for j in i + 1..n {
                row.push(if ball {
                    green_radial(op, pts[i], pts[j])
                } else {
                    green_interval(op, pts[i], pts[j])
                });
            }
            row
        })
        .collect();
    let mut matrix = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            matrix[(i, i + k)] = v;
            matrix[(i + k, i)] = v;
        }
    }
    finish(op, grid, matrix, DiagonalRule::CellAverage)
}

/// `K = Φ D Φᵀ` with the first `M` Dirichlet modes (M = N unless the
/// operator carries a different truncation for matrices).
fn assemble_sfl(op: &OperatorSpec, grid: Arc<QuadGrid>) -> Result<DiscreteKernel> {
    if op.s <= 0.5 {
        return Err(Error::InvalidOperator(format!("SFL needs s > 1/2, got {}", op.s)));
    }
    let n = grid.len();
    let m = op.sfl_matrix_terms.unwrap_or(n);
    let r = grid.domain.radius;
    let mut phi = DMatrix::zeros(n, m);
    let mut scaled = DMatrix::zeros(n, m);
    for k in 0..m {
        for i in 0..n {
            let (mu, v) = dirichlet_mode(r, k + 1, grid.nodes[i]);
            phi[(i, k)] = v;
            scaled[(i, k)] = v / mu.powf(op.s);
        }
    }
    let matrix = &scaled * phi.transpose();
    finish(op, grid, matrix, DiagonalRule::SeriesPointwise)
}

fn finish(op: &OperatorSpec, grid: Arc<QuadGrid>, matrix: DMatrix<f64>, rule: DiagonalRule) -> Result<DiscreteKernel> {
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite kernel entry".into()));
    }
    Ok(DiscreteKernel {
        op: *op,
        grid,
        matrix,
        diagonal_rule: rule,
    })
}

impl DiscreteKernel {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `u_i = Σ_j K_ij w_j f_j` on raw values.
    pub fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        let wf: Vec<f64> = f.iter().zip(&self.grid.weights).map(|(f, w)| f * w).collect();
        let n = self.len();
        (0..n)
            .map(|i| self.matrix.row(i).iter().zip(&wf).map(|(k, v)| k * v).sum())
            .collect()
    }

    /// `A = W^{1/2} K W^{1/2}`.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let sw: Vec<f64> = self.grid.weights.iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(self.len(), self.len(), |i, j| sw[i] * self.matrix[(i, j)] * sw[j])
    }

    /// Row-major little-endian f64 bytes of `K`.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let n = self.len();
        let mut out = Vec::with_capacity(8 * n * n);
        for i in 0..n {
            for j in 0..n {
                out.extend_from_slice(&self.matrix[(i, j)].to_le_bytes());
            }
        }
        out
    }
}

/// `𝔾₀f` on the grid.
pub fn apply_g0(dk: &DiscreteKernel, f: &GridFunction) -> Result<GridFunction> {
    if !(Arc::ptr_eq(&dk.grid, &f.grid) || *dk.grid == *f.grid) {
        return Err(Error::GridMismatch("function and kernel live on different grids".into()));
    }
    Ok(GridFunction {
        grid: dk.grid.clone(),
        values: dk.apply_values(&f.values),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "param")]
pub enum NormKind {
    /// `Σ w_i |f_i| δ_i^α`
    L1Delta(f64),
    L2,
    Linf,
    /// `max |f_i| / δ_i^α`
    LinfOverDelta(f64),
    Lp(f64),
}

/// Quadrature norm of a grid function. `gamma` is the boundary exponent of
/// the operator: `L1Delta(α)` needs `α > −1 − γ`.
pub fn weighted_norm(f: &GridFunction, kind: NormKind, gamma: f64) -> Result<f64> {
    let g = &f.grid;
    let it = f.values.iter().zip(&g.weights).zip(&g.delta);
    Ok(match kind {
        NormKind::L1Delta(alpha) => {
            if alpha <= -1.0 - gamma {
                return Err(Error::InvalidInput(format!(
                    "weight exponent {alpha} is outside the admissible range (> {})",
                    -1.0 - gamma
                )));
            }
            it.map(|((v, w), d)| w * v.abs() * d.powf(alpha)).sum()
        }
        NormKind::L2 => f.norm_l2(),
        NormKind::Linf => f.max_abs(),
        NormKind::LinfOverDelta(alpha) => it.fold(0.0, |m, ((v, _), d)| m.max(v.abs() / d.powf(alpha))),
        NormKind::Lp(p) => {
            if !(p >= 1.0) {
                return Err(Error::InvalidInput(format!("Lp norm needs p >= 1, got {p}")));
            }
            it.map(|((v, w), _)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    })
}
