//! Eigendecomposition of the discrete Green operator, the resolvent `𝔾_λ`,
//! eigenspace projections and the spectral norms `ℍ^k_ℒ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteKernel, GridFunction};
use crate::error::{Error, Result};

/// Relative gap below which neighboring eigenvalues form one group.
pub const TAU_MULT: f64 = 1e-6;
/// Discrete `𝔾₀` eigenvalues below this fraction of the largest are dropped.
pub const MU_FLOOR: f64 = 1e-14;
/// Tolerance of the orthogonality check on `E^⊥` inputs.
pub const ORTHO_TOL: f64 = 1e-8;

/// Discrete eigenpairs of `ℒ`, ascending, `W`-orthonormal.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub kernel: Arc<DiscreteKernel>,
    pub lambdas: Vec<f64>,
    /// Column `j` holds `φ_{j+1}` at the grid nodes.
    pub modes: DMatrix<f64>,
    pub tau_mult: f64,
    /// Largest eigenvalue of `W^{1/2} K W^{1/2}`.
    pub mu_max: f64,
    /// Modes dropped by the floor.
    pub discarded: usize,
    /// Half-open index ranges of eigenvalue groups.
    pub groups: Vec<(usize, usize)>,
}

/// Position of `λ` relative to the discrete spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaContext {
    pub lambda: f64,
    /// Number of eigenvalue groups spanning `E`.
    pub index: usize,
    /// Number of modes spanning `E`.
    pub e_modes: usize,
    /// First eigenvalue above `E`; infinite if `E` exhausts the spectrum.
    pub bar_lambda: f64,
    /// `min_j |λ_j − λ|`.
    pub d_sigma: f64,
    pub lambda_1: f64,
    /// `λ` lies within `τ_mult` of an eigenvalue.
    pub singular: bool,
}

impl LambdaContext {
    fn require_regular(&self, sd: &SpectralData) -> Result<()> {
        if self.singular {
            let (index, nearest) = sd.nearest(self.lambda);
            return Err(Error::SingularLambda {
                lambda: self.lambda,
                nearest,
                index: index + 1,
            });
        }
        Ok(())
    }
}

fn group_eigenvalues(lambdas: &[f64], tau: f64) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    for j in 1..=lambdas.len() {
        if j == lambdas.len() || (lambdas[j] - lambdas[j - 1]) > tau * lambdas[j].abs() {
            groups.push((start, j));
            start = j;
        }
    }
    groups
}

/// Full dense eigendecomposition of `A = W^{1/2} K W^{1/2}`.
pub fn eigendecompose(dk: Arc<DiscreteKernel>) -> Result<SpectralData> {
    let a = dk.symmetrized();
    let scale = a.amax();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Numerical("kernel matrix is zero or non-finite".into()));
    }
    if (&a - a.transpose()).amax() > 1e-10 * scale {
        return Err(Error::Numerical("kernel matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(a);
    let mu_max = eig.eigenvalues.max();
    let mu_min = eig.eigenvalues.min();
    if mu_min < -1e-8 * mu_max {
        return Err(Error::Numerical(format!(
            "kernel matrix is indefinite: min eigenvalue {mu_min:e}, max {mu_max:e}"
        )));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] > MU_FLOOR * mu_max)
        .collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
    let n = dk.len();
    let discarded = n - order.len();
    let inv_sw: Vec<f64> = dk.grid.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut modes = DMatrix::zeros(n, order.len());
    let mut lambdas = Vec::with_capacity(order.len());
    for (col, &k) in order.iter().enumerate() {
        lambdas.push(1.0 / eig.eigenvalues[k]);
        let psi = eig.eigenvectors.column(k);
        for i in 0..n {
            modes[(i, col)] = psi[i] * inv_sw[i];
        }
        let v = modes.column(col);
        let flip = if col == 0 {
            v.sum() < 0.0
        } else {
            let cut = 1e-10 * v.amax();
            v.iter().find(|x| x.abs() > cut).is_some_and(|&x| x < 0.0)
        };
        if flip {
            modes.column_mut(col).neg_mut();
        }
    }
    let groups = group_eigenvalues(&lambdas, TAU_MULT);
    Ok(SpectralData {
        kernel: dk,
        lambdas,
        modes,
        tau_mult: TAU_MULT,
        mu_max,
        discarded,
        groups,
    })
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambda_1(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn grid(&self) -> &Arc<crate::geometry::QuadGrid> {
        &self.kernel.grid
    }

    /// `φ_{j+1}` (zero-based `j`) as a grid function.
    pub fn mode(&self, j: usize) -> GridFunction {
        GridFunction {
            grid: self.kernel.grid.clone(),
            values: self.modes.column(j).iter().cloned().collect(),
        }
    }

    /// `⟨f, φ_j⟩_W` for every retained mode.
    pub fn coefficients(&self, f: &GridFunction) -> Result<Vec<f64>> {
        self.check(f)?;
        let wf = DVector::from_iterator(
            f.len(),
            f.values.iter().zip(&self.kernel.grid.weights).map(|(v, w)| v * w),
        );
        Ok((self.modes.transpose() * wf).iter().cloned().collect())
    }

    /// `Σ_j a_j φ_j`.
    pub fn synthesize(&self, coeffs: &[f64]) -> GridFunction {
        let c = DVector::from_column_slice(coeffs);
        GridFunction {
            grid: self.kernel.grid.clone(),
            values: (&self.modes * c).iter().cloned().collect(),
        }
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.len() != self.kernel.len()
            || !(Arc::ptr_eq(&f.grid, &self.kernel.grid) || *f.grid == *self.kernel.grid)
        {
            return Err(Error::GridMismatch("function does not live on the spectral grid".into()));
        }
        Ok(())
    }

    /// Index (zero-based) and value of the eigenvalue nearest to `λ`.
    pub fn nearest(&self, lambda: f64) -> (usize, f64) {
        let mut best = (0, self.lambdas[0]);
        for (j, &l) in self.lambdas.iter().enumerate() {
            if (l - lambda).abs() < (best.1 - lambda).abs() {
                best = (j, l);
            }
        }
        best
    }

    /// Zero-based group containing mode `j`.
    pub fn group_of(&self, j: usize) -> usize {
        self.groups.iter().position(|&(a, b)| a <= j && j < b).unwrap_or(self.groups.len())
    }

    /// Representative eigenvalue of a (zero-based) group.
    pub fn group_value(&self, g: usize) -> f64 {
        self.lambdas[self.groups[g].0]
    }

    /// Max `|⟨φ_j, φ_k⟩_W − δ_jk|` over the first `count` modes.
    pub fn orthonormality_residual(&self, count: usize) -> f64 {
        let m = count.min(self.len());
        let w = &self.kernel.grid.weights;
        let mut worst = 0.0f64;
        for j in 0..m {
            for k in j..m {
                let dot: f64 = (0..w.len()).map(|i| w[i] * self.modes[(i, j)] * self.modes[(i, k)]).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

fn build_context(sd: &SpectralData, lambda: f64, covering: bool) -> LambdaContext {
    let (_, nearest) = sd.nearest(lambda);
    let d_sigma = (nearest - lambda).abs();
    let singular = d_sigma <= sd.tau_mult * nearest.abs().max(f64::MIN_POSITIVE);
    // Groups at or below λ; a group within τ of λ counts as reached.
    let mut index = sd
        .groups
        .iter()
        .take_while(|&&(a, _)| {
            let v = sd.lambdas[a];
            v <= lambda || (v - lambda).abs() <= sd.tau_mult * v.abs()
        })
        .count();
    if covering && index < sd.groups.len() {
        let reached = index > 0 && {
            let v = sd.group_value(index - 1);
            (v - lambda).abs() <= sd.tau_mult * v.abs()
        };
        if !reached {
            index += 1;
        }
    }
    let e_modes = if index == 0 { 0 } else { sd.groups[index - 1].1 };
    let bar_lambda = if index < sd.groups.len() {
        sd.group_value(index)
    } else {
        f64::INFINITY
    };
    LambdaContext {
        lambda,
        index,
        e_modes,
        bar_lambda,
        d_sigma,
        lambda_1: sd.lambda_1(),
        singular,
    }
}

/// Context with `E` spanned by the groups with eigenvalue `≤ λ`.
/// Fails when `λ` is within `τ_mult` of the spectrum.
pub fn lambda_context(sd: &SpectralData, lambda: f64) -> Result<LambdaContext> {
    let ctx = build_context(sd, lambda, false);
    ctx.require_regular(sd)?;
    Ok(ctx)
}

/// As [`lambda_context`] but also accepted at eigenvalues; used for
/// projections, which stay defined there.
pub fn lambda_context_any(sd: &SpectralData, lambda: f64) -> LambdaContext {
    build_context(sd, lambda, false)
}

/// Context whose `E` also contains the first group at or above `λ`, so that
/// the `E^⊥` resolvent stays bounded as `λ` approaches that eigenvalue.
pub fn lambda_context_covering(sd: &SpectralData, lambda: f64) -> LambdaContext {
    build_context(sd, lambda, true)
}

/// `𝔾_λf = Σ_j ⟨f,φ_j⟩ φ_j / (λ_j − λ)`.
pub fn apply_glambda(sd: &SpectralData, ctx: &LambdaContext, f: &GridFunction) -> Result<GridFunction> {
    ctx.require_regular(sd)?;
    let c = sd.coefficients(f)?;
    let a: Vec<f64> = c.iter().zip(&sd.lambdas).map(|(c, l)| c / (l - ctx.lambda)).collect();
    Ok(sd.synthesize(&a))
}

/// Fixed-point iteration `u ← λ𝔾₀u + 𝔾₀f`, valid for `|λ| < λ_1`.
pub fn apply_glambda_neumann(
    dk: &DiscreteKernel,
    ctx: &LambdaContext,
    f: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<GridFunction> {
    let lambda = ctx.lambda;
    if lambda.abs() >= ctx.lambda_1 {
        return Err(Error::NotContractive {
            lambda,
            lambda_1: ctx.lambda_1,
        });
    }
    if f.len() != dk.len() {
        return Err(Error::GridMismatch("function does not live on the kernel grid".into()));
    }
    let w = &dk.grid.weights;
    let g0f = dk.apply_values(&f.values);
    let mut u = g0f.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        let ku = dk.apply_values(&u);
        let next: Vec<f64> = ku.iter().zip(&g0f).map(|(a, b)| lambda * a + b).collect();
        let diff: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        residual = crate::discretize::weighted_dot(w, &diff, &diff).sqrt();
        u = next;
        if residual <= tol {
            return Ok(GridFunction {
                grid: dk.grid.clone(),
                values: u,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `f^⊥ = f − Σ_{j ∈ E} ⟨f,φ_j⟩ φ_j`.
pub fn project_perp(sd: &SpectralData, ctx: &LambdaContext, f: &GridFunction) -> Result<GridFunction> {
    let c = sd.coefficients(f)?;
    let mut a = vec![0.0; sd.len()];
    a[..ctx.e_modes].copy_from_slice(&c[..ctx.e_modes]);
    f.sub(&sd.synthesize(&a))
}

/// Projection onto the eigenspace of a (zero-based) group.
pub fn project_group(sd: &SpectralData, group: usize, f: &GridFunction) -> Result<GridFunction> {
    let c = sd.coefficients(f)?;
    let (lo, hi) = sd.groups[group];
    let mut a = vec![0.0; sd.len()];
    a[lo..hi].copy_from_slice(&c[lo..hi]);
    Ok(sd.synthesize(&a))
}

/// `𝔾_λ` restricted to `E^⊥`: `Σ_{j ∉ E} ⟨f,φ_j⟩ φ_j / (λ_j − λ)`.
pub fn apply_glambda_perp(sd: &SpectralData, ctx: &LambdaContext, f_perp: &GridFunction) -> Result<GridFunction> {
    let c = sd.coefficients(f_perp)?;
    let scale = f_perp.norm_l2().max(1.0);
    let leak = c[..ctx.e_modes].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if leak > ORTHO_TOL * scale {
        return Err(Error::NotOrthogonal(leak));
    }
    let mut a = vec![0.0; sd.len()];
    for j in ctx.e_modes..sd.len() {
        let gap = sd.lambdas[j] - ctx.lambda;
        if gap.abs() <= sd.tau_mult * sd.lambdas[j].abs() {
            return Err(Error::SingularLambda {
                lambda: ctx.lambda,
                nearest: sd.lambdas[j],
                index: j + 1,
            });
        }
        a[j] = c[j] / gap;
    }
    Ok(sd.synthesize(&a))
}

/// `‖u‖_{ℍ^k_ℒ} = (Σ λ_j^k ⟨u,φ_j⟩²)^{1/2}`.
pub fn spectral_norm_hk(sd: &SpectralData, u: &GridFunction, k: f64) -> Result<f64> {
    if k < 0.0 {
        return Err(Error::InvalidInput(format!("spectral norm order must be >= 0, got {k}")));
    }
    let c = sd.coefficients(u)?;
    Ok(c.iter().zip(&sd.lambdas).map(|(c, l)| l.powf(k) * c * c).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{apply_g0, assemble_green_matrix};
    use crate::geometry::{build_grid, DomainSpec};
    use crate::kernels::OperatorSpec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rfl(n: usize) -> SpectralData {
        let d = DomainSpec::interval(1.0).unwrap();
        let grid = Arc::new(build_grid(d, n, 2.0).unwrap());
        let dk = assemble_green_matrix(&OperatorSpec::rfl(0.75, d).unwrap(), grid).unwrap();
        eigendecompose(Arc::new(dk)).unwrap()
    }

    fn random(sd: &SpectralData, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridFunction::from_fn(sd.grid().clone(), |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn sfl_spectrum_is_analytic() {
        let d = DomainSpec::interval(1.0).unwrap();
        let grid = Arc::new(build_grid(d, 256, 1.0).unwrap());
        let dk = assemble_green_matrix(&OperatorSpec::sfl(0.75, d).unwrap(), grid).unwrap();
        let sd = eigendecompose(Arc::new(dk)).unwrap();
        for k in 1..=10 {
            let exact = (k as f64 * PI / 2.0).powf(1.5);
            assert_relative_eq!(sd.lambdas[k - 1], exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn rfl_basic_structure() {
        let sd = rfl(128);
        assert!(sd.lambda_1() > 0.0);
        assert!(sd.lambdas.windows(2).all(|p| p[0] <= p[1]));
        assert!(sd.orthonormality_residual(20) < 1e-8);
        let phi1 = sd.mode(0);
        assert!(phi1.min() >= -1e-8 * phi1.max());
    }

    #[test]
    fn contexts() {
        let sd = rfl(64);
        let (l1, l2) = (sd.lambdas[0], sd.lambdas[1]);
        let c = lambda_context(&sd, 0.0).unwrap();
        assert_eq!((c.index, c.e_modes), (0, 0));
        assert_relative_eq!(c.bar_lambda, l1);
        assert_relative_eq!(c.d_sigma, l1);
        assert_eq!(lambda_context(&sd, 0.5 * (l1 + l2)).unwrap().index, 1);
        assert!(matches!(lambda_context(&sd, l1), Err(Error::SingularLambda { .. })));
        let any = lambda_context_any(&sd, l1);
        assert!(any.singular && any.index == 1);
        let cov = lambda_context_covering(&sd, 0.9 * l1);
        assert_eq!((cov.index, cov.e_modes), (1, 1));
        assert_relative_eq!(cov.bar_lambda, l2);
        assert_eq!(lambda_context_covering(&sd, l1).index, 1);
    }

    #[test]
    fn resolvent_routes_agree() {
        let sd = rfl(128);
        let f = random(&sd, 7);
        let ctx0 = lambda_context(&sd, 0.0).unwrap();
        let spectral = apply_glambda(&sd, &ctx0, &f).unwrap();
        let direct = apply_g0(&sd.kernel, &f).unwrap();
        assert!(spectral.sub(&direct).unwrap().norm_l2() < 1e-8 * direct.norm_l2().max(1.0));
        let ctx = lambda_context(&sd, 0.5 * sd.lambda_1()).unwrap();
        let a = apply_glambda(&sd, &ctx, &f).unwrap();
        let b = apply_glambda_neumann(&sd.kernel, &ctx, &f, 1e-12, 500).unwrap();
        assert!(a.sub(&b).unwrap().norm_l2() < 1e-8);
        let bad = lambda_context_any(&sd, 1.5 * sd.lambda_1());
        assert!(matches!(
            apply_glambda_neumann(&sd.kernel, &bad, &f, 1e-12, 500),
            Err(Error::NotContractive { .. })
        ));
        let one_step = apply_glambda_neumann(&sd.kernel, &ctx0, &f, 1e-14, 1).unwrap();
        assert_eq!(one_step.values, direct.values);
    }

    #[test]
    fn resolvent_acts_diagonally_and_is_bounded() {
        let sd = rfl(64);
        let lambda = 0.3 * (sd.lambdas[1] + sd.lambdas[2]);
        let ctx = lambda_context(&sd, lambda).unwrap();
        let phi = sd.mode(2);
        let u = apply_glambda(&sd, &ctx, &phi).unwrap();
        let want = phi.scale(1.0 / (sd.lambdas[2] - lambda));
        assert!(u.sub(&want).unwrap().max_abs() < 1e-9 * want.max_abs());
        for seed in 0..10 {
            let f = random(&sd, seed);
            let u = apply_glambda(&sd, &ctx, &f).unwrap();
            assert!(u.norm_l2() <= f.norm_l2() / ctx.d_sigma * (1.0 + 1e-12));
        }
    }

    #[test]
    fn projections() {
        let sd = rfl(64);
        let ctx = lambda_context(&sd, 0.5 * (sd.lambdas[1] + sd.lambdas[2])).unwrap();
        assert!(project_perp(&sd, &ctx, &sd.mode(0)).unwrap().max_abs() < 1e-10);
        let f = random(&sd, 3);
        let p = project_perp(&sd, &ctx, &f).unwrap();
        let c = sd.coefficients(&p).unwrap();
        assert!(c[..2].iter().all(|v| v.abs() < 1e-10));
        let pp = project_perp(&sd, &ctx, &p).unwrap();
        assert!(pp.sub(&p).unwrap().max_abs() < 1e-12);
        let phi3 = sd.mode(2);
        let u = apply_glambda_perp(&sd, &ctx, &phi3).unwrap();
        assert!(u.sub(&phi3.scale(1.0 / (sd.lambdas[2] - ctx.lambda))).unwrap().max_abs() < 1e-9);
        assert!(matches!(apply_glambda_perp(&sd, &ctx, &f), Err(Error::NotOrthogonal(_))));
        let zero = GridFunction::zeros(sd.grid().clone());
        assert_eq!(apply_glambda_perp(&sd, &ctx, &zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn spectral_norms() {
        let sd = rfl(64);
        let phi = sd.mode(4);
        assert_relative_eq!(spectral_norm_hk(&sd, &phi, 2.0).unwrap(), sd.lambdas[4], max_relative = 1e-9);
        let f = random(&sd, 11);
        assert_relative_eq!(spectral_norm_hk(&sd, &f, 0.0).unwrap(), f.norm_l2(), max_relative = 1e-10);
        let g0f = apply_g0(&sd.kernel, &f).unwrap();
        assert_relative_eq!(spectral_norm_hk(&sd, &g0f, 2.0).unwrap(), f.norm_l2(), max_relative = 1e-8);
        let h1 = spectral_norm_hk(&sd, &f, 1.0).unwrap();
        assert!(sd.lambda_1() * f.norm_l2().powi(2) <= h1 * h1 * (1.0 + 1e-12));
        assert!(spectral_norm_hk(&sd, &f, -1.0).is_err());
    }

    #[test]
    fn grouping_merges_close_values() {
        let g = group_eigenvalues(&[1.0, 1.0 + 1e-9, 2.0, 3.0, 3.0], 1e-6);
        assert_eq!(g, vec![(0, 2), (2, 3), (3, 5)]);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let sd = rfl(64);
        let other = Arc::new(build_grid(DomainSpec::interval(1.0).unwrap(), 32, 2.0).unwrap());
        assert!(sd.coefficients(&GridFunction::zeros(other)).is_err());
    }
}
