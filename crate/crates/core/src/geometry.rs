//! Supported domains (interval and ball), the boundary distance δ, and
//! boundary-graded composite Gauss–Legendre grids.
//!
//! Interval grids live on (−r, r). Ball grids are radial: nodes are radii in
//! (0, r) and the weights carry the spherical factor |𝕊^{n−1}| ρ^{n−1}, so
//! `Σ w_i f(ρ_i)` approximates `∫_{B_r} f(|x|) dx`.
//!
//! The grading map sends a uniform panel parameter `t` to the physical
//! coordinate with `δ = r (1 − |t|)^β`. δ is computed from `t` directly,
//! never as `r − |x|`, so near-boundary nodes keep full relative accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::special::{ball_volume, sphere_area};

/// Nodes per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Ball,
}

/// A bounded domain centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub dim: usize,
    pub radius: f64,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidDomain(format!("radius must be positive, got {radius}")));
        }
        match kind {
            DomainKind::Interval if dim != 1 => Err(Error::InvalidDomain(format!(
                "an interval has dimension 1, got n = {dim}"
            ))),
            DomainKind::Ball if dim == 0 => {
                Err(Error::InvalidDomain("ball dimension must be at least 1".into()))
            }
            _ => Ok(Self { kind, dim, radius }),
        }
    }

    pub fn interval(radius: f64) -> Result<Self> {
        Self::new(DomainKind::Interval, 1, radius)
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(DomainKind::Ball, dim, radius)
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        ball_volume(self.dim, self.radius)
    }

    /// δ(x) = r − |x| for a point of the closed domain.
    pub fn delta(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, domain dimension is {}",
                x.len(),
                self.dim
            )));
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > self.radius {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(self.radius - norm)
    }

    /// δ as a function of the radial coordinate (or the interval coordinate).
    pub fn delta_radial(&self, rho: f64) -> Result<f64> {
        if rho.abs() > self.radius {
            return Err(Error::OutsideDomain(vec![rho]));
        }
        Ok(self.radius - rho.abs())
    }

    /// The two boundary points of an interval (counting measure on ∂Ω).
    pub fn boundary_points(&self) -> Vec<f64> {
        match self.kind {
            DomainKind::Interval => vec![-self.radius, self.radius],
            DomainKind::Ball => vec![self.radius],
        }
    }

    /// ℋ^{n−1}(∂Ω); counting measure when n = 1.
    pub fn boundary_measure(&self) -> f64 {
        sphere_area(self.dim) * self.radius.powi(self.dim as i32 - 1)
    }
}

/// Quadrature grid on a domain, graded toward the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadGrid {
    pub domain: DomainSpec,
    /// Interval coordinates, or radii for a ball; ascending.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub delta: Vec<f64>,
    /// Cell boundaries: node `i` owns `[cell_edges[i], cell_edges[i + 1]]`.
    pub cell_edges: Vec<f64>,
    pub grading: f64,
    /// Nodes and cell boundaries in the uniform panel parameter `t`.
    pub params: Vec<f64>,
    pub param_edges: Vec<f64>,
}

impl QuadGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Physical coordinate, δ and `dx/dt` at panel parameter `t`.
    pub fn map_param(&self, t: f64) -> (f64, f64, f64) {
        grading_map(self.domain.radius, self.grading, t)
    }

    /// Volume element of the radial variable (1 on an interval).
    pub fn radial_factor(&self, rho: f64) -> f64 {
        match self.domain.kind {
            DomainKind::Interval => 1.0,
            DomainKind::Ball => sphere_area(self.domain.dim) * rho.powi(self.domain.dim as i32 - 1),
        }
    }

    /// Quadrature of grid values: Σ w_i f_i.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }

    /// Indices of nodes with δ ≥ `frac`·r (the compact set K).
    pub fn compact_indices(&self, frac: f64) -> Vec<usize> {
        let cut = frac * self.domain.radius;
        (0..self.len()).filter(|&i| self.delta[i] >= cut).collect()
    }

    /// Indices of the `count` nodes closest to the boundary point `z`,
    /// ordered by increasing δ.
    pub fn nearest_to_boundary(&self, z: f64, count: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = match self.domain.kind {
            DomainKind::Interval => (0..self.len())
                .filter(|&i| self.nodes[i] * z > 0.0)
                .collect(),
            DomainKind::Ball => (0..self.len()).collect(),
        };
        idx.sort_by(|&a, &b| self.delta[a].total_cmp(&self.delta[b]));
        idx.truncate(count);
        idx
    }
}

/// `t ↦ (x, δ, dx/dt)` with `δ = r(1 − |t|)^β`.
fn grading_map(r: f64, beta: f64, t: f64) -> (f64, f64, f64) {
    let gap = 1.0 - t.abs();
    let delta = r * gap.powf(beta);
    let jac = r * beta * gap.powf(beta - 1.0);
    let x = if t == 0.0 { 0.0 } else { t.signum() * (r - delta) };
    (x, delta, jac)
}

fn panel_orders(total: usize, panels: usize) -> Vec<usize> {
    let base = total / panels;
    let extra = total % panels;
    let mut orders = vec![base; panels];
    // Hand out the remainder alternately from both ends so interval grids
    // stay symmetric whenever that is possible.
    let mut lo = 0;
    let mut hi = panels;
    for k in 0..extra {
        if k % 2 == 0 {
            orders[lo] += 1;
            lo += 1;
        } else {
            hi -= 1;
            orders[hi] += 1;
        }
    }
    orders
}

/// Build a composite Gauss–Legendre grid with `n` nodes and grading
/// exponent `grading` (1 = uniform panels).
pub fn build_grid(domain: DomainSpec, n: usize, grading: f64) -> Result<QuadGrid> {
    if n < 8 {
        return Err(Error::InvalidGrid(format!("need at least 8 nodes, got {n}")));
    }
    if !(grading >= 1.0) || !grading.is_finite() {
        return Err(Error::InvalidGrid(format!("grading exponent must be >= 1, got {grading}")));
    }
    let r = domain.radius;
    let beta = grading;

    // Panels over the parameter interval: (−1, 1) for an interval (an even
    // number, so t = 0 is a panel edge), (0, 1) for the radial variable.
    let (t_lo, panels) = match domain.kind {
        DomainKind::Interval => (-1.0, 2 * n.div_ceil(2 * PANEL_ORDER)),
        DomainKind::Ball => (0.0, n.div_ceil(PANEL_ORDER)),
    };
    let width = (1.0 - t_lo) / panels as f64;
    let orders = panel_orders(n, panels);

    let mut ts = Vec::with_capacity(n);
    let mut tw = Vec::with_capacity(n);
    let mut t_edges = Vec::with_capacity(n + 1);
    for (p, &order) in orders.iter().enumerate() {
        let a = t_lo + p as f64 * width;
        let (x, w) = gauss_legendre(order);
        let mut edge = a;
        for (xi, wi) in x.iter().zip(&w) {
            t_edges.push(edge);
            ts.push(a + 0.5 * width * (xi + 1.0));
            tw.push(0.5 * width * wi);
            edge += 0.5 * width * wi;
        }
    }
    t_edges.push(1.0);

    let map = |t: f64| grading_map(r, beta, t);

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    for (&t, &w) in ts.iter().zip(&tw) {
        let (x, d, jac) = map(t);
        let mut weight = w * jac;
        if domain.kind == DomainKind::Ball {
            weight *= sphere_area(domain.dim) * x.powi(domain.dim as i32 - 1);
        }
        nodes.push(x);
        weights.push(weight);
        delta.push(d);
    }
    let cell_edges = t_edges.iter().map(|&t| map(t).0).collect();

    let grid = QuadGrid {
        domain,
        nodes,
        weights,
        delta,
        cell_edges,
        grading,
        params: ts,
        param_edges: t_edges,
    };
    if grid.weights.iter().any(|w| !(*w > 0.0)) || grid.delta.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Numerical("grid produced a nonpositive weight or δ".into()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn make_domain_examples() {
        let d = DomainSpec::new(DomainKind::Interval, 1, 1.0).unwrap();
        assert_eq!(d.boundary_points(), vec![-1.0, 1.0]);
        assert!(DomainSpec::new(DomainKind::Ball, 3, 1.0).is_ok());
        assert!(DomainSpec::new(DomainKind::Interval, 2, 1.0).is_err());
        assert!(DomainSpec::new(DomainKind::Ball, 2, 0.0).is_err());
        assert!(DomainSpec::new(DomainKind::Ball, 2, -1.0).is_err());
    }

    #[test]
    fn delta_examples() {
        let d = DomainSpec::interval(1.0).unwrap();
        assert_eq!(d.delta(&[0.0]).unwrap(), 1.0);
        assert_eq!(d.delta(&[0.75]).unwrap(), 0.25);
        assert!(d.delta(&[1.5]).is_err());
        let b = DomainSpec::ball(3, 2.0).unwrap();
        assert_relative_eq!(b.delta(&[1.5, 0.0, 0.0]).unwrap(), 0.5);
        assert_relative_eq!(b.delta(&[0.9, 1.2, 0.0]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn interval_weights_sum_to_length() {
        let d = DomainSpec::interval(1.0).unwrap();
        let g = build_grid(d, 64, 1.0).unwrap();
        assert_relative_eq!(g.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
        let g = build_grid(d, 64, 2.0).unwrap();
        assert_relative_eq!(g.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn graded_grid_integrates_inverse_sqrt_distance() {
        let g = build_grid(DomainSpec::interval(1.0).unwrap(), 64, 2.0).unwrap();
        let v: f64 = g.weights.iter().zip(&g.delta).map(|(w, d)| w / d.sqrt()).sum();
        assert!((v - 4.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn ball_volume_quadrature() {
        let g = build_grid(DomainSpec::ball(3, 1.0).unwrap(), 64, 2.0).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 4.0 * PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn weighted_distance_integrals() {
        // ∫_{−1}^{1} (1 − |x|)^α dx = 2/(α + 1)
        let g = build_grid(DomainSpec::interval(1.0).unwrap(), 256, 2.0).unwrap();
        for alpha in [-0.5, 0.5, 1.0] {
            let v: f64 = g.weights.iter().zip(&g.delta).map(|(w, d)| w * d.powf(alpha)).sum();
            assert!((v - 2.0 / (alpha + 1.0)).abs() < 1e-6, "alpha {alpha}: {v}");
        }
    }

    #[test]
    fn grid_is_sorted_interior_and_symmetric() {
        for n in [8, 64, 100, 256] {
            let g = build_grid(DomainSpec::interval(2.0).unwrap(), n, 2.0).unwrap();
            assert_eq!(g.len(), n);
            assert!(g.nodes.windows(2).all(|p| p[0] < p[1]));
            assert!(g.nodes.iter().all(|x| x.abs() < 2.0));
            assert_eq!(g.cell_edges.len(), n + 1);
            for i in 0..n {
                assert!(g.cell_edges[i] < g.nodes[i] && g.nodes[i] < g.cell_edges[i + 1]);
                assert_relative_eq!(g.delta[i], 2.0 - g.nodes[i].abs(), epsilon = 1e-14);
            }
            if n % 2 == 0 {
                for i in 0..n / 2 {
                    assert_relative_eq!(g.nodes[i], -g.nodes[n - 1 - i], epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn grading_concentrates_nodes_near_boundary() {
        let d = DomainSpec::interval(1.0).unwrap();
        let uniform = build_grid(d, 128, 1.0).unwrap();
        let graded = build_grid(d, 128, 2.0).unwrap();
        let min_u = uniform.delta.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_g = graded.delta.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_g < 0.1 * min_u);
    }

    #[test]
    fn grid_convergence_for_rough_integrand() {
        // |x − 0.3|^{3/2} has a singular second derivative inside a panel.
        let exact = (1.3f64.powf(2.5) + 0.7f64.powf(2.5)) / 2.5;
        let d = DomainSpec::interval(1.0).unwrap();
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| {
                let g = build_grid(d, n, 2.0).unwrap();
                let f: Vec<f64> = g.nodes.iter().map(|x| (x - 0.3f64).abs().powf(1.5)).collect();
                (g.integrate(&f) - exact).abs()
            })
            .collect();
        assert!(errs[1] <= 1.1 * errs[0] && errs[2] <= 1.1 * errs[1], "{errs:?}");
    }

    #[test]
    fn rejects_bad_grids() {
        let d = DomainSpec::interval(1.0).unwrap();
        assert!(build_grid(d, 4, 2.0).is_err());
        assert!(build_grid(d, 64, 0.5).is_err());
    }
}
