//! Green's functions and Martin kernels of the supported operators.
//!
//! * RFL on a ball (and on an interval, the ball with n = 1): Boggio's formula
//!   `𝒢 = c_{n,s} |x−y|^{2s−n} I(ρ)` with `I(ρ) = ∫₀^ρ t^{s−1}(1+t)^{−n/2} dt`.
//! * SFL on an interval: truncated eigenfunction series of the Dirichlet
//!   Laplacian.
//! * Classical Laplacian: closed-form Green's function and Poisson kernel.
//!
//! Pointwise entry points take points as coordinate slices. The matrix
//! assembly goes through [`Pt`], which carries the boundary distance so that
//! `r² − |x|² = δ(2r − δ)` is formed without cancellation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainSpec};
use crate::quadrature::{integrate, Tolerance};
use crate::special::{gamma, sine_series, sphere_area};

/// Default number of SFL series terms for pointwise evaluation.
pub const SFL_DEFAULT_TERMS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Rfl,
    Sfl,
    Classical,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorKind::Rfl => "rfl",
            OperatorKind::Sfl => "sfl",
            OperatorKind::Classical => "classical",
        })
    }
}

/// An operator of order `2s` on a domain, with its boundary exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub s: f64,
    /// Boundary behavior of solutions: `u ≍ δ^γ`.
    pub gamma: f64,
    /// Blow-up exponent of large solutions, `b = 1 − 2s + γ`.
    pub b: f64,
    pub domain: DomainSpec,
    /// Series truncation for pointwise SFL kernels.
    pub sfl_terms: usize,
    /// Series truncation for assembled SFL matrices; `None` means one mode
    /// per grid node.
    #[serde(default)]
    pub sfl_matrix_terms: Option<usize>,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, s: f64, domain: DomainSpec) -> Result<Self> {
        let gamma = match kind {
            OperatorKind::Rfl => {
                if !(s > 0.0 && s < 1.0) {
                    return Err(Error::InvalidOperator(format!("RFL needs s in (0,1), got {s}")));
                }
                s
            }
            OperatorKind::Sfl => {
                // s = 1 is admitted so the series can be checked against the
                // classical Green's function.
                if !(s > 0.5 && s <= 1.0) {
                    return Err(Error::InvalidOperator(format!(
                        "SFL needs s in (1/2,1) so that gamma < 2s, got {s}"
                    )));
                }
                if domain.kind != DomainKind::Interval {
                    return Err(Error::Unsupported("SFL is implemented on the interval only".into()));
                }
                1.0
            }
            OperatorKind::Classical => {
                if s != 1.0 {
                    return Err(Error::InvalidOperator(format!(
                        "the classical Laplacian has s = 1, got {s}"
                    )));
                }
                1.0
            }
        };
        Ok(Self {
            kind,
            s,
            gamma,
            b: match kind {
                OperatorKind::Rfl => 1.0 - s,
                OperatorKind::Sfl => 2.0 - 2.0 * s,
                OperatorKind::Classical => 0.0,
            },
            domain,
            sfl_terms: SFL_DEFAULT_TERMS,
            sfl_matrix_terms: None,
        })
    }

    pub fn rfl(s: f64, domain: DomainSpec) -> Result<Self> {
        Self::new(OperatorKind::Rfl, s, domain)
    }

    pub fn sfl(s: f64, domain: DomainSpec) -> Result<Self> {
        Self::new(OperatorKind::Sfl, s, domain)
    }

    pub fn classical(domain: DomainSpec) -> Result<Self> {
        Self::new(OperatorKind::Classical, 1.0, domain)
    }

    pub fn with_sfl_terms(mut self, terms: usize) -> Self {
        self.sfl_terms = terms.max(1);
        self
    }

    pub fn with_sfl_matrix_terms(mut self, terms: Option<usize>) -> Self {
        self.sfl_matrix_terms = terms.map(|m| m.max(1));
        self
    }

    /// Kernel has a logarithmic diagonal singularity (n = 2s).
    pub fn log_case(&self) -> bool {
        (self.domain.dim as f64 - 2.0 * self.s).abs() < 1e-14
    }
}

/// A point given by its coordinate (interval) or radius (ball) together with
/// its boundary distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pt {
    pub x: f64,
    pub delta: f64,
}

impl Pt {
    pub fn new(x: f64, delta: f64) -> Self {
        Self { x, delta }
    }

    /// Point from its coordinate (or radius).
    pub fn at(domain: &DomainSpec, x: f64) -> Self {
        Self {
            x,
            delta: domain.radius - x.abs(),
        }
    }

    /// r² − x², formed from δ.
    pub(crate) fn gap(&self, r: f64) -> f64 {
        self.delta * (2.0 * r - self.delta)
    }
}

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-15,
        rel: 1e-13,
        max_intervals: 4000,
    }
}

/// `I(ρ) = ∫₀^ρ t^{s−1}(1+t)^{−n/2} dt`.
///
/// With `x = t/(1+t)` this is the incomplete beta integral `B(ρ/(1+ρ); s, n/2 − s)`.
/// For `ρ > 1` the upper part is mapped by `t ↦ 1/t` to `B(·; n/2 − s, s)`, so
/// every series is evaluated at an argument `≤ 1/2`.
pub fn boggio_integral(n: usize, s: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let h = n as f64 / 2.0;
    if n == 1 && s == 0.5 {
        return 2.0 * rho.sqrt().asinh();
    }
    if s == 1.0 {
        return if n == 2 {
            rho.ln_1p()
        } else {
            ((1.0 + rho).powf(1.0 - h) - 1.0) / (1.0 - h)
        };
    }
    let a = h - s;
    if a.abs() < 1e-3 {
        return boggio_integral_quadrature(n, s, rho);
    }
    if rho <= 1.0 {
        return incomplete_beta_series(rho / (1.0 + rho), s, a);
    }
    incomplete_beta_series(0.5, s, a) + incomplete_beta_series(0.5, a, s)
        - incomplete_beta_series(1.0 / (1.0 + rho), a, s)
}

/// `x^p Σ_k (1−q)_k x^k / (k! (p+k))`: an antiderivative of
/// `x^{p−1}(1−x)^{q−1}` for `x ≤ 1/2`, any real `p ∉ {0, −1, …}`.
fn incomplete_beta_series(x: f64, p: f64, q: f64) -> f64 {
    let mut c = 1.0;
    let mut xk = 1.0;
    let mut sum = 1.0 / p;
    for k in 0..200 {
        let kf = k as f64;
        c *= (kf + 1.0 - q) / (kf + 1.0);
        xk *= x;
        let term = c * xk / (p + kf + 1.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    x.powf(p) * sum
}

/// `I(ρ)` by adaptive Gauss–Kronrod quadrature after substitutions that
/// remove the endpoint singularities.
pub fn boggio_integral_quadrature(n: usize, s: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let h = n as f64 / 2.0;
    // [0, min(ρ,1)] with t = v^{1/s}, which removes the t^{s−1} endpoint singularity.
    let m = rho.min(1.0);
    let inv_s = 1.0 / s;
    let head = integrate(
        |v: f64| (1.0 + v.powf(inv_s)).powf(-h),
        0.0,
        m.powf(s),
        quad_tol(),
    )
    .value
        / s;
    if rho <= 1.0 {
        return head;
    }
    // [1, ρ] with t = e^{−u}, u ∈ [−ln ρ, 0]: ∫ e^{(h−s)u} (1+e^u)^{−h} du.
    let a = h - s;
    let tail = integrate(
        |u: f64| {
            let w = u.exp();
            w.powf(a) * (1.0 + w).powf(-h)
        },
        -rho.ln(),
        0.0,
        quad_tol(),
    )
    .value;
    head + tail
}

/// Boggio kernel from the distance and the gaps `r² − |x|²`, `r² − |y|²`.
fn boggio(n: usize, s: f64, r: f64, dist: f64, gap_x: f64, gap_y: f64) -> f64 {
    let c = gamma(n as f64 / 2.0) / (4f64.powf(s) * gamma(s).powi(2) * PI.powf(n as f64 / 2.0));
    let rho = gap_x * gap_y / (r * r * dist * dist);
    c * dist.powf(2.0 * s - n as f64) * boggio_integral(n, s, rho)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn check_interior(domain: &DomainSpec, x: &[f64]) -> Result<f64> {
    let d = domain.delta(x)?;
    if d <= 0.0 {
        return Err(Error::OutsideDomain(x.to_vec()));
    }
    Ok(d)
}

fn check_boundary(domain: &DomainSpec, z: &[f64]) -> Result<()> {
    if z.len() != domain.dim || (norm(z) - domain.radius).abs() > 1e-12 * domain.radius {
        return Err(Error::InvalidInput(format!("{z:?} is not a boundary point")));
    }
    Ok(())
}

/// RFL Green's function on a ball (Boggio). Points are full coordinate
/// vectors; an interval is the ball with n = 1.
pub fn rfl_green_ball(op: &OperatorSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if op.kind != OperatorKind::Rfl {
        return Err(Error::InvalidOperator("Boggio's formula is for the RFL".into()));
    }
    let r = op.domain.radius;
    let dx = check_interior(&op.domain, x)?;
    let dy = check_interior(&op.domain, y)?;
    let dist = distance(x, y);
    if dist == 0.0 {
        return Err(Error::DiagonalRequested);
    }
    let gx = dx * (2.0 * r - dx);
    let gy = dy * (2.0 * r - dy);
    Ok(boggio(op.domain.dim, op.s, r, dist, gx, gy))
}

/// RFL Martin kernel `D_s𝒢₀(z, y)` on a ball.
pub fn rfl_martin_kernel_ball(op: &OperatorSpec, z: &[f64], y: &[f64]) -> Result<f64> {
    if op.kind != OperatorKind::Rfl {
        return Err(Error::InvalidOperator("expected the RFL".into()));
    }
    check_boundary(&op.domain, z)?;
    let dy = check_interior(&op.domain, y)?;
    let dist = distance(z, y);
    if dist == 0.0 {
        return Err(Error::DiagonalRequested);
    }
    let (n, s, r) = (op.domain.dim as f64, op.s, op.domain.radius);
    let c = gamma(n / 2.0) / (2f64.powf(s) * s * gamma(s).powi(2) * PI.powf(n / 2.0));
    let gy = dy * (2.0 * r - dy);
    Ok(c * gy.powf(s) / (r.powf(s) * dist.powf(n)))
}

/// Classical Poisson kernel of a ball; `|𝕊⁰| = 2` on the interval.
pub fn poisson_kernel_classical(domain: &DomainSpec, z: &[f64], y: &[f64]) -> Result<f64> {
    check_boundary(domain, z)?;
    let dy = check_interior(domain, y)?;
    let dist = distance(z, y);
    if dist == 0.0 {
        return Err(Error::DiagonalRequested);
    }
    let r = domain.radius;
    let n = domain.dim;
    Ok(dy * (2.0 * r - dy) / (sphere_area(n) * r * dist.powi(n as i32)))
}

/// Newtonian potential Φ(t) with −ΔΦ = δ₀ (radial profile).
fn newton_potential(n: usize, t: f64) -> f64 {
    if n == 2 {
        -t.ln() / (2.0 * PI)
    } else {
        t.powf(2.0 - n as f64) / ((n as f64 - 2.0) * sphere_area(n))
    }
}

/// Green's function of the Dirichlet Laplacian on an interval or ball.
pub fn classical_green(domain: &DomainSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_interior(domain, x)?;
    check_interior(domain, y)?;
    let dist = distance(x, y);
    if dist == 0.0 {
        return Err(Error::DiagonalRequested);
    }
    let r = domain.radius;
    if domain.dim == 1 {
        let (lo, hi) = if x[0] < y[0] { (x[0], y[0]) } else { (y[0], x[0]) };
        return Ok((r - hi) * (r + lo) / (2.0 * r));
    }
    // Kelvin reflection: Φ(|x−y|) − Φ(|y|·|x − y*|/r), y* = r² y/|y|².
    let ny = norm(y);
    let image = if ny == 0.0 {
        r
    } else {
        let scale = r * r / (ny * ny);
        let d: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - scale * b).powi(2))
            .sum::<f64>()
            .sqrt();
        ny * d / r
    };
    let n = domain.dim;
    Ok(newton_potential(n, dist) - newton_potential(n, image))
}

fn sfl_check(op: &OperatorSpec) -> Result<()> {
    if op.kind != OperatorKind::Sfl {
        return Err(Error::InvalidOperator("expected the SFL".into()));
    }
    if op.s <= 0.5 {
        return Err(Error::InvalidOperator(format!("SFL needs s > 1/2, got {}", op.s)));
    }
    Ok(())
}

/// k-th Dirichlet eigenpair on (−r, r): `(μ_k, φ_k(x))`, L²-normalized.
pub fn dirichlet_mode(r: f64, k: usize, x: f64) -> (f64, f64) {
    let w = k as f64 * PI / (2.0 * r);
    (w * w, (w * (x + r)).sin() / r.sqrt())
}

fn sfl_series(op: &OperatorSpec, x: f64, y: f64, terms: usize) -> f64 {
    let r = op.domain.radius;
    let base = PI / (2.0 * r);
    let (ax, ay) = (base * (x + r), base * (y + r));
    let mut sum = 0.0;
    for k in 1..=terms {
        let kf = k as f64;
        let mu = (kf * base).powi(2);
        sum += (kf * ax).sin() * (kf * ay).sin() / mu.powf(op.s);
    }
    sum / r
}

/// SFL Green's function on the interval, truncated at `op.sfl_terms` modes.
pub fn sfl_green_interval(op: &OperatorSpec, x: f64, y: f64) -> Result<f64> {
    sfl_check(op)?;
    let r = op.domain.radius;
    if x.abs() > r || y.abs() > r {
        return Err(Error::OutsideDomain(vec![x, y]));
    }
    if x.abs() == r || y.abs() == r {
        return Ok(0.0);
    }
    Ok(sfl_series(op, x, y, op.sfl_terms))
}

/// Angle θ of `y` seen from the boundary point `z`, so that
/// `D(z, y) ∝ Σ k^{1−2s} sin(kθ)`.
fn sfl_martin_angle(op: &OperatorSpec, z: f64, y: f64) -> Result<f64> {
    let r = op.domain.radius;
    if (z.abs() - r).abs() > 1e-12 * r {
        return Err(Error::InvalidInput(format!("{z} is not a boundary point")));
    }
    if !(y.abs() < r) {
        return Err(Error::OutsideDomain(vec![y]));
    }
    let theta = PI * (y + r) / (2.0 * r);
    // At z = +r the series carries (−1)^{k+1}, i.e. the angle π − θ.
    Ok(if z < 0.0 { theta } else { PI * (r - y) / (2.0 * r) })
}

pub(crate) fn sfl_martin_prefactor(op: &OperatorSpec) -> f64 {
    let r = op.domain.radius;
    (PI / (2.0 * r)).powf(1.0 - 2.0 * op.s) / r
}

/// SFL Martin kernel `D₁𝒢₀(z, y)` on the interval, summed exactly through
/// the polylogarithm expansion of `Σ k^{1−2s} sin(kθ)`.
pub fn sfl_martin_kernel_interval(op: &OperatorSpec, z: f64, y: f64) -> Result<f64> {
    sfl_check(op)?;
    let theta = sfl_martin_angle(op, z, y)?;
    Ok(sfl_martin_prefactor(op) * sine_series(2.0 * op.s - 1.0, theta))
}

/// Same kernel, Abel-summed with `q = 1 − 1/m` and Richardson-extrapolated
/// over `q ∈ {1 − 1/m, 1 − 2/m, 1 − 4/m}`. Accurate once `m·θ ≫ 1`.
pub fn sfl_martin_kernel_abel(op: &OperatorSpec, z: f64, y: f64, m: usize) -> Result<f64> {
    sfl_check(op)?;
    let theta = sfl_martin_angle(op, z, y)?;
    let p = 2.0 * op.s - 1.0;
    let abel = |h: f64| -> f64 {
        let q = 1.0 - h;
        let terms = (40.0 / h).ceil() as usize;
        let mut qk = 1.0;
        let mut sum = 0.0;
        for k in 1..=terms {
            qk *= q;
            let kf = k as f64;
            sum += qk * (kf * theta).sin() / kf.powf(p);
        }
        sum
    };
    let h = 1.0 / m as f64;
    let s1 = abel(h);
    let s2 = abel(2.0 * h);
    let s4 = abel(4.0 * h);
    Ok(sfl_martin_prefactor(op) * (8.0 * s1 - 6.0 * s2 + s4) / 3.0)
}

/// Pointwise Green's function of any supported operator.
pub fn green(op: &OperatorSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    match op.kind {
        OperatorKind::Rfl => rfl_green_ball(op, x, y),
        OperatorKind::Sfl => {
            if x.len() != 1 || y.len() != 1 {
                return Err(Error::InvalidInput("SFL points are scalars".into()));
            }
            if x[0] == y[0] {
                return Err(Error::DiagonalRequested);
            }
            sfl_green_interval(op, x[0], y[0])
        }
        OperatorKind::Classical => classical_green(&op.domain, x, y),
    }
}

/// Pointwise Martin kernel `D_γ𝒢₀(z, y)` of any supported operator.
pub fn martin_kernel(op: &OperatorSpec, z: &[f64], y: &[f64]) -> Result<f64> {
    match op.kind {
        OperatorKind::Rfl => rfl_martin_kernel_ball(op, z, y),
        OperatorKind::Sfl => {
            if z.len() != 1 || y.len() != 1 {
                return Err(Error::InvalidInput("SFL points are scalars".into()));
            }
            sfl_martin_kernel_interval(op, z[0], y[0])
        }
        OperatorKind::Classical => poisson_kernel_classical(&op.domain, z, y),
    }
}

/// Green's function between two interval points, δ-accurate.
pub(crate) fn green_interval(op: &OperatorSpec, a: Pt, b: Pt) -> f64 {
    let r = op.domain.radius;
    match op.kind {
        OperatorKind::Rfl => boggio(1, op.s, r, (a.x - b.x).abs(), a.gap(r), b.gap(r)),
        OperatorKind::Sfl => sfl_series(op, a.x, b.x, op.sfl_terms),
        OperatorKind::Classical => {
            let (lo, hi) = if a.x < b.x { (a, b) } else { (b, a) };
            let right = if hi.x >= 0.0 { hi.delta } else { r - hi.x };
            let left = if lo.x <= 0.0 { lo.delta } else { r + lo.x };
            right * left / (2.0 * r)
        }
    }
}

/// Spherical average of the Green's function over `|x| = a`, `|y| = b`:
/// the kernel acting on radial functions.
pub(crate) fn green_radial(op: &OperatorSpec, a: Pt, b: Pt) -> f64 {
    let n = op.domain.dim;
    let r = op.domain.radius;
    match op.kind {
        OperatorKind::Classical => {
            let hi = if a.x >= b.x { a } else { b };
            if n == 1 {
                hi.delta / 2.0
            } else {
                newton_potential(n, hi.x) - newton_potential(n, r)
            }
        }
        OperatorKind::Rfl => {
            let (ga, gb) = (a.gap(r), b.gap(r));
            if n == 1 {
                let near = boggio(1, op.s, r, (a.x - b.x).abs(), ga, gb);
                let far = boggio(1, op.s, r, a.x + b.x, ga, gb);
                return 0.5 * (near + far);
            }
            let diff = (a.x - b.x).powi(2);
            let prod = 4.0 * a.x * b.x;
            let f = |theta: f64| {
                let half = (0.5 * theta).sin();
                let dist = (diff + prod * half * half).sqrt();
                boggio(n, op.s, r, dist, ga, gb) * theta.sin().powi(n as i32 - 2)
            };
            let norm = sphere_area(n - 1) / sphere_area(n);
            norm * integrate(f, 0.0, PI, Tolerance::new(1e-14, 1e-11)).value
        }
        // Rejected at construction.
        OperatorKind::Sfl => f64::NAN,
    }
}

/// Distance from an interval point to the endpoint `sign·r`, δ-accurate.
fn endpoint_distance(r: f64, sign: f64, p: Pt) -> f64 {
    if p.x * sign >= 0.0 {
        p.delta
    } else {
        2.0 * r - p.delta
    }
}

/// Martin kernel `D_γ𝒢₀(sign·r, y)` on the interval, δ-accurate.
pub(crate) fn martin_interval(op: &OperatorSpec, sign: f64, p: Pt) -> f64 {
    let r = op.domain.radius;
    let dist = endpoint_distance(r, sign, p);
    match op.kind {
        OperatorKind::Rfl => {
            let s = op.s;
            p.gap(r).powf(s) / (2f64.powf(s) * s * gamma(s).powi(2) * r.powf(s) * dist)
        }
        OperatorKind::Sfl => {
            sfl_martin_prefactor(op) * sine_series(2.0 * op.s - 1.0, PI * dist / (2.0 * r))
        }
        OperatorKind::Classical => (2.0 * r - dist) / (2.0 * r),
    }
}

/// `𝕄(1)` on the interval, or radially on the ball.
pub fn martin_unit(op: &OperatorSpec, p: Pt) -> f64 {
    let r = op.domain.radius;
    match (op.kind, op.domain.kind) {
        (_, DomainKind::Interval) => martin_interval(op, -1.0, p) + martin_interval(op, 1.0, p),
        (OperatorKind::Rfl, DomainKind::Ball) => {
            let s = op.s;
            2.0 / (2f64.powf(s) * s * gamma(s).powi(2)) * r.powf(1.0 - s) * p.gap(r).powf(s - 1.0)
        }
        (OperatorKind::Classical, DomainKind::Ball) => 1.0,
        (OperatorKind::Sfl, DomainKind::Ball) => f64::NAN,
    }
}

/// Extremes of `𝒢₀` against the two-sided comparison expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
    /// The comparison used `ln(1 + δ^γ δ^γ / |x−y|^{2γ})` (case n = 2s).
    pub log_case: bool,
}

/// Sweep `𝒢₀(x,y) / (|x−y|^{2s−n} min(δ^γ(x)δ^γ(y)/|x−y|^{2γ}, 1))` over the
/// sample of off-diagonal pairs.
pub fn check_k1_bounds(op: &OperatorSpec, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<KernelBoundReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let n = op.domain.dim as f64;
    let log_case = op.log_case();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (x, y) in pairs {
        let g = green(op, x, y)?;
        let dist = distance(x, y);
        let dx = op.domain.delta(x)?;
        let dy = op.domain.delta(y)?;
        let q = (dx * dy).powf(op.gamma) / dist.powf(2.0 * op.gamma);
        let cmp = if log_case {
            q.ln_1p()
        } else {
            dist.powf(2.0 * op.s - n) * q.min(1.0)
        };
        let ratio = g / cmp;
        if !ratio.is_finite() || ratio <= 0.0 {
            return Err(Error::Numerical(format!("bound ratio {ratio} at {x:?}, {y:?}")));
        }
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(KernelBoundReport {
        min_ratio: lo,
        max_ratio: hi,
        samples: pairs.len(),
        log_case,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn interval() -> DomainSpec {
        DomainSpec::interval(1.0).unwrap()
    }

    #[test]
    fn boggio_integral_matches_closed_forms() {
        // n = 1, s = 1/2 closed form against the generic quadrature path
        // (s slightly perturbed from 1/2 converges to it).
        let exact = 2.0 * 3f64.sqrt().asinh();
        assert_relative_eq!(boggio_integral(1, 0.5, 3.0), exact, epsilon = 1e-15);
        assert_relative_eq!(boggio_integral(1, 0.5 + 1e-9, 3.0), exact, epsilon = 1e-7);
        assert_relative_eq!(boggio_integral_quadrature(1, 0.5, 3.0), exact, epsilon = 1e-12);
        // n = 3, s = 1/2: ∫ t^{-1/2}(1+t)^{-3/2} = 2√ρ/√(1+ρ)
        for rho in [0.01f64, 0.7, 1.0, 5.0, 1e6] {
            let want = 2.0 * (rho / (1.0 + rho)).sqrt();
            assert_relative_eq!(boggio_integral(3, 0.5, rho), want, max_relative = 1e-11);
        }
        // n = 2, s = 1/2: ∫ t^{-1/2}/(1+t) = 2 atan√ρ
        for rho in [0.3f64, 2.0, 1e8] {
            let want = 2.0 * rho.sqrt().atan();
            assert_relative_eq!(boggio_integral(2, 0.5, rho), want, max_relative = 1e-11);
        }
    }

    #[test]
    fn boggio_series_matches_quadrature() {
        for n in [1, 2, 3] {
            for s in [0.1, 0.3, 0.49, 0.51, 0.75, 0.9, 0.995] {
                for rho in [1e-6, 0.2, 1.0, 1.7, 40.0, 1e5, 1e12] {
                    let a = boggio_integral(n, s, rho);
                    let b = boggio_integral_quadrature(n, s, rho);
                    assert_relative_eq!(a, b, max_relative = 1e-11);
                }
            }
        }
    }

    #[test]
    fn rfl_green_closed_form_at_half() {
        let op = OperatorSpec::rfl(0.5, interval()).unwrap();
        let g = rfl_green_ball(&op, &[0.0], &[0.5]).unwrap();
        assert_relative_eq!(g, (2.0 + 3f64.sqrt()).ln() / PI, epsilon = 1e-12);
        assert!(matches!(rfl_green_ball(&op, &[0.2], &[0.2]), Err(Error::DiagonalRequested)));
        assert!(rfl_green_ball(&op, &[1.2], &[0.2]).is_err());
    }

    #[test]
    fn rfl_green_vanishes_at_boundary() {
        let op = OperatorSpec::rfl(0.75, interval()).unwrap();
        let far = rfl_green_ball(&op, &[0.9], &[0.0]).unwrap();
        let near = rfl_green_ball(&op, &[1.0 - 1e-8], &[0.0]).unwrap();
        assert!(near < 1e-4 * far);
        assert!(rfl_green_ball(&op, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn rfl_green_tends_to_classical() {
        let d = interval();
        let op = OperatorSpec::rfl(0.999, d).unwrap();
        for (x, y) in [(0.0, 0.5), (-0.3, 0.8)] {
            let c = classical_green(&d, &[x], &[y]).unwrap();
            let g = rfl_green_ball(&op, &[x], &[y]).unwrap();
            assert!((g - c).abs() < 1e-2 * c, "{g} vs {c}");
        }
    }

    #[test]
    fn rfl_martin_examples() {
        let op = OperatorSpec::rfl(0.5, interval()).unwrap();
        let v = rfl_martin_kernel_ball(&op, &[1.0], &[0.0]).unwrap();
        assert_relative_eq!(v, 2f64.sqrt() / PI, epsilon = 1e-14);
        assert!(rfl_martin_kernel_ball(&op, &[0.5], &[0.0]).is_err());

        let ball = DomainSpec::ball(3, 1.0).unwrap();
        let op = OperatorSpec::rfl(0.999_999, ball).unwrap();
        let v = rfl_martin_kernel_ball(&op, &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(v, 1.0 / (4.0 * PI), max_relative = 1e-5);
    }

    #[test]
    fn rfl_martin_pair_is_martin_unit() {
        let d = interval();
        for s in [0.3, 0.5, 0.75] {
            let op = OperatorSpec::rfl(s, d).unwrap();
            for y in [-0.9, -0.2, 0.0, 0.6, 0.99] {
                let sum = rfl_martin_kernel_ball(&op, &[1.0], &[y]).unwrap()
                    + rfl_martin_kernel_ball(&op, &[-1.0], &[y]).unwrap();
                assert_relative_eq!(sum, martin_unit(&op, Pt::at(&d, y)), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn poisson_examples() {
        let ball = DomainSpec::ball(3, 1.0).unwrap();
        let v = poisson_kernel_classical(&ball, &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(v, 1.0 / (4.0 * PI), epsilon = 1e-15);
        let d = interval();
        assert_relative_eq!(poisson_kernel_classical(&d, &[1.0], &[0.0]).unwrap(), 0.5);
        for y in [-0.7, 0.1, 0.95] {
            let total = poisson_kernel_classical(&d, &[1.0], &[y]).unwrap()
                + poisson_kernel_classical(&d, &[-1.0], &[y]).unwrap();
            assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        }
        // Normalization on the 2-sphere for an on-axis point.
        let y_axis = [0.0, 0.0, 0.5];
        let axis_total = integrate(
            |t: f64| {
                let z = [0.0, t.sin(), t.cos()];
                poisson_kernel_classical(&ball, &z, &y_axis).unwrap() * 2.0 * PI * t.sin()
            },
            0.0,
            PI,
            Tolerance::default(),
        );
        assert_relative_eq!(axis_total.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn classical_green_forms() {
        let d = interval();
        assert_relative_eq!(classical_green(&d, &[0.0], &[0.5]).unwrap(), 0.25);
        let ball = DomainSpec::ball(3, 1.0).unwrap();
        // G(0, y) = (1/|y| − 1)/(4π)
        let g = classical_green(&ball, &[0.0, 0.0, 0.0], &[0.5, 0.0, 0.0]).unwrap();
        assert_relative_eq!(g, 1.0 / (4.0 * PI), epsilon = 1e-15);
        let a = classical_green(&ball, &[0.1, 0.2, 0.3], &[-0.4, 0.1, 0.0]).unwrap();
        let b = classical_green(&ball, &[-0.4, 0.1, 0.0], &[0.1, 0.2, 0.3]).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn sfl_green_at_s_one_matches_classical() {
        let d = interval();
        let op = OperatorSpec::sfl(1.0, d).unwrap().with_sfl_terms(10_000);
        for (x, y) in [(0.0, 0.5), (-0.7, 0.2), (0.9, -0.95)] {
            let c = classical_green(&d, &[x], &[y]).unwrap();
            assert!((sfl_green_interval(&op, x, y).unwrap() - c).abs() < 1e-6);
        }
    }

    #[test]
    fn sfl_green_symmetry_and_boundary() {
        let op = OperatorSpec::sfl(0.75, interval()).unwrap().with_sfl_terms(2000);
        let a = sfl_green_interval(&op, 0.2, -0.7).unwrap();
        let b = sfl_green_interval(&op, -0.7, 0.2).unwrap();
        assert!((a - b).abs() < 1e-13);
        assert_eq!(sfl_green_interval(&op, 1.0, 0.3).unwrap(), 0.0);
        assert_eq!(sfl_green_interval(&op, 0.3, -1.0).unwrap(), 0.0);
        assert!(OperatorSpec::sfl(0.5, interval()).is_err());
        assert!(OperatorSpec::sfl(0.75, DomainSpec::ball(2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn sfl_martin_reduces_to_classical_slope() {
        let op = OperatorSpec::sfl(1.0, interval()).unwrap();
        for y in [-0.8, 0.0, 0.4] {
            assert_relative_eq!(sfl_martin_kernel_interval(&op, 1.0, y).unwrap(), 0.5 * (1.0 + y), epsilon = 1e-12);
            assert_relative_eq!(sfl_martin_kernel_interval(&op, -1.0, y).unwrap(), 0.5 * (1.0 - y), epsilon = 1e-12);
        }
    }

    #[test]
    fn sfl_martin_normal_derivative_coefficients() {
        // d_k(−1) = kπ/2: the normal derivative of each mode at −1.
        for k in 1..6 {
            let h = 1e-6;
            let (_, f) = dirichlet_mode(1.0, k, -1.0 + h);
            assert_relative_eq!(f / h, k as f64 * PI / 2.0, max_relative = 1e-9 * (k * k) as f64 + 1e-10);
        }
    }

    #[test]
    fn sfl_martin_abel_agrees_with_exact_and_is_positive() {
        let op = OperatorSpec::sfl(0.75, interval()).unwrap();
        for y in [-0.6, -0.1, 0.3, 0.7] {
            let exact = sfl_martin_kernel_interval(&op, 1.0, y).unwrap();
            let abel = sfl_martin_kernel_abel(&op, 1.0, y, 4000).unwrap();
            assert!(exact > 0.0);
            assert_relative_eq!(exact, abel, max_relative = 1e-6);
        }
    }

    #[test]
    fn k1_report() {
        let op = OperatorSpec::rfl(0.75, interval()).unwrap();
        let single = vec![(vec![0.1], vec![0.4])];
        let rep = check_k1_bounds(&op, &single).unwrap();
        assert_eq!(rep.min_ratio, rep.max_ratio);
        assert!(check_k1_bounds(&op, &[]).is_err());
        let half = OperatorSpec::rfl(0.5, interval()).unwrap();
        assert!(check_k1_bounds(&half, &single).unwrap().log_case);
    }
}
