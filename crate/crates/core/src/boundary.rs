//! Martin operator `𝕄(h)`, the γ-normal derivative of `𝔾₀`, and the
//! weighted trace `Bu(z) = lim u(x)/𝕄(1)(x)`.
//!
//! On the interval the boundary measure is counting measure on `{−r, r}`.
//! On the ball only constant boundary data are supported.

use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteKernel, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, QuadGrid};
use crate::kernels::{martin_interval, martin_unit, OperatorKind, OperatorSpec, Pt};
use crate::special::gamma;
use std::sync::Arc;

/// Default bound on `max |f|` accepted by [`gamma_normal_derivative_g0`].
pub const BOUNDED_CAP: f64 = 1e12;

/// Number of near-boundary nodes used by the trace extrapolation.
pub const TRACE_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryData {
    /// Values at `−r` and `+r`.
    Interval { left: f64, right: f64 },
    /// Constant value on the sphere.
    Ball { value: f64 },
}

impl BoundaryData {
    pub fn constant(value: f64, kind: DomainKind) -> Self {
        match kind {
            DomainKind::Interval => BoundaryData::Interval { left: value, right: value },
            DomainKind::Ball => BoundaryData::Ball { value },
        }
    }

    pub fn zero(kind: DomainKind) -> Self {
        Self::constant(0.0, kind)
    }

    /// `h(z)`; `z` is an interval endpoint or the ball radius.
    pub fn value_at(&self, z: f64) -> f64 {
        match *self {
            BoundaryData::Interval { left, right } => {
                if z < 0.0 {
                    left
                } else {
                    right
                }
            }
            BoundaryData::Ball { value } => value,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            BoundaryData::Interval { left, right } => left.abs().max(right.abs()),
            BoundaryData::Ball { value } => value.abs(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            BoundaryData::Interval { left, right } => left.is_finite() && right.is_finite(),
            BoundaryData::Ball { value } => value.is_finite(),
        }
    }
}

fn check_data(op: &OperatorSpec, h: &BoundaryData) -> Result<()> {
    if !h.is_finite() {
        return Err(Error::InvalidInput("boundary data must be finite".into()));
    }
    match (op.domain.kind, h) {
        (DomainKind::Interval, BoundaryData::Interval { .. }) | (DomainKind::Ball, BoundaryData::Ball { .. }) => Ok(()),
        _ => Err(Error::InvalidInput("boundary data do not match the domain".into())),
    }
}

fn check_operator(op: &OperatorSpec) -> Result<()> {
    if op.kind == OperatorKind::Sfl && op.domain.kind == DomainKind::Ball {
        return Err(Error::Unsupported("no Martin kernel for the SFL on a ball".into()));
    }
    Ok(())
}

fn points(grid: &QuadGrid) -> impl Iterator<Item = Pt> + '_ {
    grid.nodes.iter().zip(&grid.delta).map(|(&x, &d)| Pt::new(x, d))
}

/// `𝕄(h)(x) = ∫_{∂Ω} D_γ𝒢₀(z, x) h(z) dℋ^{n−1}(z)` at the grid nodes.
pub fn martin_apply(op: &OperatorSpec, grid: Arc<QuadGrid>, h: &BoundaryData) -> Result<GridFunction> {
    check_operator(op)?;
    check_data(op, h)?;
    if op.domain != grid.domain {
        return Err(Error::GridMismatch("operator and grid live on different domains".into()));
    }
    let values = match *h {
        BoundaryData::Interval { left, right } => points(&grid)
            .map(|p| left * martin_interval(op, -1.0, p) + right * martin_interval(op, 1.0, p))
            .collect(),
        BoundaryData::Ball { value } => points(&grid).map(|p| value * martin_unit(op, p)).collect(),
    };
    GridFunction::new(grid, values)
}

/// `𝕄(1)` at the grid nodes.
pub fn martin_unit_grid(op: &OperatorSpec, grid: Arc<QuadGrid>) -> Result<GridFunction> {
    martin_apply(op, grid.clone(), &BoundaryData::constant(1.0, grid.domain.kind))
}

/// `D_γ𝔾₀(f)(z) = ∫_Ω D_γ𝒢₀(z, y) f(y) dy` for bounded `f`. On the ball `z`
/// is any boundary point (radial data make the value independent of it).
pub fn gamma_normal_derivative_g0(
    op: &OperatorSpec,
    dk: &DiscreteKernel,
    z: f64,
    f: &GridFunction,
    cap: f64,
) -> Result<f64> {
    check_operator(op)?;
    let grid = &dk.grid;
    if f.len() != grid.len() {
        return Err(Error::GridMismatch("function does not live on the kernel grid".into()));
    }
    let r = grid.domain.radius;
    if (z.abs() - r).abs() > 1e-12 * r {
        return Err(Error::InvalidInput(format!("{z} is not a boundary point")));
    }
    let sup = f.max_abs();
    if sup > cap {
        return Err(Error::InvalidInput(format!("datum is not bounded: max |f| = {sup:e}")));
    }
    let kernel: Vec<f64> = match grid.domain.kind {
        DomainKind::Interval => points(grid).map(|p| martin_interval(op, z.signum(), p)).collect(),
        DomainKind::Ball => {
            let area = grid.domain.boundary_measure();
            points(grid).map(|p| martin_unit(op, p) / area).collect()
        }
    };
    Ok(grid
        .weights
        .iter()
        .zip(&kernel)
        .zip(&f.values)
        .map(|((w, k), v)| w * k * v)
        .sum())
}

/// What is extrapolated toward the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "param")]
pub enum TraceMode {
    /// `u / 𝕄(1)`.
    Ratio,
    /// `Γ(1+s)² δ^{1−s} u` (RFL only).
    RflExplicit,
    /// `δ^α u`.
    DeltaPower(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub z: f64,
    pub value: f64,
    pub error: f64,
    pub mode: TraceMode,
    /// Boundary distances of the nodes used, nearest first.
    pub deltas: Vec<f64>,
    /// Sequence values at those nodes.
    pub samples: Vec<f64>,
}

/// Value at 0 of the interpolating polynomial through `(x_k, y_k)` (Neville).
pub fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p[0]
}

/// Weighted trace of `u` at the boundary point `z` by polynomial
/// extrapolation in δ along the nodes nearest to `z`.
pub fn weighted_trace(op: &OperatorSpec, u: &GridFunction, z: f64, mode: TraceMode) -> Result<TraceReport> {
    let grid = &u.grid;
    let r = grid.domain.radius;
    if (z.abs() - r).abs() > 1e-12 * r {
        return Err(Error::InvalidInput(format!("{z} is not a boundary point")));
    }
    let idx = grid.nearest_to_boundary(z, TRACE_NODES);
    if idx.len() < TRACE_NODES {
        return Err(Error::Numerical(format!(
            "only {} nodes near the boundary point {z}",
            idx.len()
        )));
    }
    let deltas: Vec<f64> = idx.iter().map(|&i| grid.delta[i]).collect();
    let samples: Vec<f64> = match mode {
        TraceMode::Ratio => {
            check_operator(op)?;
            idx.iter()
                .map(|&i| u.values[i] / martin_unit(op, Pt::new(grid.nodes[i], grid.delta[i])))
                .collect()
        }
        TraceMode::RflExplicit => {
            if op.kind != OperatorKind::Rfl {
                return Err(Error::InvalidOperator("the explicit trace formula is for the RFL".into()));
            }
            let c = gamma(1.0 + op.s).powi(2);
            idx.iter().map(|&i| c * grid.delta[i].powf(1.0 - op.s) * u.values[i]).collect()
        }
        TraceMode::DeltaPower(alpha) => idx.iter().map(|&i| grid.delta[i].powf(alpha) * u.values[i]).collect(),
    };
    let value = extrapolate_to_zero(&deltas, &samples);
    let lower = extrapolate_to_zero(&deltas[..TRACE_NODES - 1], &samples[..TRACE_NODES - 1]);
    let error = (value - lower).abs();
    let mean = samples.iter().map(|v| v.abs()).sum::<f64>() / samples.len() as f64;
    if !value.is_finite() || error > value.abs().max(mean) {
        return Err(Error::Numerical(format!(
            "trace sequence at {z} does not settle: value {value:e}, error {error:e}"
        )));
    }
    Ok(TraceReport {
        z,
        value,
        error,
        mode,
        deltas,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{apply_g0, assemble_green_matrix};
    use crate::geometry::{build_grid, DomainSpec};
    use crate::quadrature::{integrate, Tolerance};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn setup(s: f64, n: usize) -> (OperatorSpec, Arc<QuadGrid>) {
        let d = DomainSpec::interval(1.0).unwrap();
        (OperatorSpec::rfl(s, d).unwrap(), Arc::new(build_grid(d, n, 2.0).unwrap()))
    }

    fn cv(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt() / m.abs()
    }

    #[test]
    fn martin_unit_is_explicit_harmonic() {
        let (op, grid) = setup(0.75, 256);
        let m1 = martin_unit_grid(&op, grid.clone()).unwrap();
        let scaled: Vec<f64> = (0..grid.len())
            .map(|i| m1.values[i] * (grid.delta[i] * (2.0 - grid.delta[i])).powf(0.25))
            .collect();
        assert!(cv(&scaled) < 1e-8);
    }

    #[test]
    fn classical_martin_is_affine() {
        let d = DomainSpec::interval(1.0).unwrap();
        let op = OperatorSpec::classical(d).unwrap();
        let grid = Arc::new(build_grid(d, 64, 2.0).unwrap());
        let v = martin_apply(&op, grid.clone(), &BoundaryData::Interval { left: 2.0, right: 5.0 }).unwrap();
        for (x, val) in grid.nodes.iter().zip(&v.values) {
            assert_relative_eq!(*val, 3.5 + 1.5 * x, epsilon = 1e-13);
        }
        let zero = martin_apply(&op, grid, &BoundaryData::zero(DomainKind::Interval)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn wrong_data_rejected() {
        let (op, grid) = setup(0.75, 32);
        assert!(martin_apply(&op, grid.clone(), &BoundaryData::Ball { value: 1.0 }).is_err());
        assert!(martin_apply(&op, grid, &BoundaryData::Interval { left: f64::NAN, right: 1.0 }).is_err());
    }

    #[test]
    fn normal_derivative_half_oracle() {
        let (op, grid) = setup(0.5, 256);
        let dk = assemble_green_matrix(&op, grid.clone()).unwrap();
        let one = GridFunction::from_fn(grid.clone(), |_, _| 1.0);
        let got = gamma_normal_derivative_g0(&op, &dk, 1.0, &one, BOUNDED_CAP).unwrap();
        // √2/π ∫ √((1+y)/(1−y)) dy with y = sin θ: √2/π · π = √2.
        let oracle = integrate(
            |t: f64| 2f64.sqrt() / PI * (1.0 + t.sin()),
            -PI / 2.0,
            PI / 2.0,
            Tolerance::default(),
        )
        .value;
        assert_relative_eq!(oracle, 2f64.sqrt(), epsilon = 1e-12);
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
        let zero = GridFunction::zeros(grid.clone());
        assert_eq!(gamma_normal_derivative_g0(&op, &dk, 1.0, &zero, BOUNDED_CAP).unwrap(), 0.0);
        let huge = GridFunction::from_fn(grid, |_, d| 1.0 / d.powi(3));
        assert!(gamma_normal_derivative_g0(&op, &dk, 1.0, &huge, 1e6).is_err());
    }

    #[test]
    fn neville_is_exact_on_polynomials() {
        let x = [0.1, 0.2, 0.35, 0.5, 0.9];
        let y: Vec<f64> = x.iter().map(|t| 3.0 - 2.0 * t + t * t * t).collect();
        assert_relative_eq!(extrapolate_to_zero(&x, &y), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn traces() {
        let (op, grid) = setup(0.75, 512);
        let m1 = martin_unit_grid(&op, grid.clone()).unwrap();
        for z in [-1.0, 1.0] {
            let t = weighted_trace(&op, &m1, z, TraceMode::Ratio).unwrap();
            assert!((t.value - 1.0).abs() < 1e-4);
        }
        let v = martin_apply(&op, grid.clone(), &BoundaryData::Interval { left: 2.0, right: 5.0 }).unwrap();
        assert!((weighted_trace(&op, &v, -1.0, TraceMode::Ratio).unwrap().value - 2.0).abs() < 1e-3);
        assert!((weighted_trace(&op, &v, 1.0, TraceMode::Ratio).unwrap().value - 5.0).abs() < 1e-3);
        let dk = assemble_green_matrix(&op, grid.clone()).unwrap();
        let f = GridFunction::from_fn(grid, |x, _| 1.0 + x);
        let u = apply_g0(&dk, &f).unwrap();
        assert!(weighted_trace(&op, &u, 1.0, TraceMode::Ratio).unwrap().value.abs() < 1e-3);
        assert!(weighted_trace(&op, &u, 0.5, TraceMode::Ratio).is_err());
    }
}
