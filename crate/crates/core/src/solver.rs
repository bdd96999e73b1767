//! Large solutions `v_λ = v_h + 𝔾_λ(g + λ v_h)` with their `E`/`E^⊥` split,
//! Fredholm diagnostics near an eigenvalue, λ-sweeps, and the maximum
//! principle, Poincaré and solution-notion verifiers.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{martin_apply, BoundaryData};
use crate::discretize::{apply_g0, weighted_norm, DiscreteKernel, GridFunction, NormKind};
use crate::error::{Error, Result};
use crate::geometry::QuadGrid;
use crate::kernels::OperatorSpec;
use crate::spectral::{
    apply_glambda, apply_glambda_neumann, lambda_context, lambda_context_covering, project_group, LambdaContext,
    SpectralData,
};

/// Default compact set `K = {δ ≥ 0.25 r}`.
pub const DEFAULT_K_FRAC: f64 = 0.25;
/// Default threshold of `A_i^±` relative to `‖P_{E_i}‖_∞`.
pub const DEFAULT_EPS_FRAC: f64 = 1e-3;

/// A solution with its representation `v_λ = v_h + explicit + u^⊥`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub lambda: f64,
    pub context: LambdaContext,
    pub h: Option<BoundaryData>,
    pub nodes: Vec<f64>,
    pub delta: Vec<f64>,
    pub g: Vec<f64>,
    pub v_h: Vec<f64>,
    /// `Σ_{j ∈ E} ⟨g + λv_h, φ_j⟩ φ_j / (λ_j − λ)`.
    pub explicit: Vec<f64>,
    pub u_perp: Vec<f64>,
    pub v_lambda: Vec<f64>,
    pub v_l1_dgamma: f64,
    pub u_perp_l1_dgamma: f64,
    pub k_frac: f64,
    pub sup_k: f64,
    pub inf_omega: f64,
    /// `‖(v−v_h) − λ𝔾₀(v−v_h) − 𝔾₀(g+λv_h)‖_{L²}`.
    pub green_residual: f64,
    /// `max_{j ∈ E} |⟨u^⊥, φ_j⟩|`.
    pub perp_leak: f64,
    /// `‖u^⊥δ^γ‖_{L¹} / (‖gδ^γ‖_{L¹} + ‖h‖_∞)`.
    pub uniform_constant: f64,
    #[serde(skip)]
    pub grid: Option<Arc<QuadGrid>>,
}

impl SolveReport {
    pub fn v(&self) -> GridFunction {
        self.as_fn(&self.v_lambda)
    }

    pub fn as_fn(&self, values: &[f64]) -> GridFunction {
        GridFunction {
            grid: self.grid.clone().expect("report carries its grid"),
            values: values.to_vec(),
        }
    }
}

fn sup_on_compact(grid: &QuadGrid, values: &[f64], k_frac: f64) -> f64 {
    grid.compact_indices(k_frac).iter().fold(0.0f64, |m, &i| m.max(values[i].abs()))
}

fn solve_split(
    sd: &SpectralData,
    ctx: &LambdaContext,
    gamma: f64,
    g: &GridFunction,
    v_h: GridFunction,
    h: Option<BoundaryData>,
    k_frac: f64,
) -> Result<SolveReport> {
    if ctx.singular {
        lambda_context(sd, ctx.lambda)?;
    }
    let lambda = ctx.lambda;
    let data = g.lin_comb(1.0, &v_h, lambda)?;
    let c = sd.coefficients(&data)?;
    let mut explicit_c = vec![0.0; sd.len()];
    let mut perp_c = vec![0.0; sd.len()];
    for j in 0..sd.len() {
        let a = c[j] / (sd.lambdas[j] - lambda);
        if j < ctx.e_modes {
            explicit_c[j] = a;
        } else {
            perp_c[j] = a;
        }
    }
    let explicit = sd.synthesize(&explicit_c);
    let u_perp = sd.synthesize(&perp_c);
    let w = explicit.add(&u_perp)?;
    let v = v_h.add(&w)?;

    let dk = &sd.kernel;
    let g0w = apply_g0(dk, &w)?;
    let g0data = apply_g0(dk, &data)?;
    let resid = w.lin_comb(1.0, &g0w, -lambda)?.sub(&g0data)?;
    let leak = sd.coefficients(&u_perp)?[..ctx.e_modes]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    let grid = sd.grid().clone();
    let v_l1 = weighted_norm(&v, NormKind::L1Delta(gamma), gamma)?;
    let up_l1 = weighted_norm(&u_perp, NormKind::L1Delta(gamma), gamma)?;
    let g_l1 = weighted_norm(g, NormKind::L1Delta(gamma), gamma)?;
    let h_sup = h.map(|h| h.sup_norm()).unwrap_or(0.0);
    let denom = g_l1 + h_sup;
    Ok(SolveReport {
        lambda,
        context: *ctx,
        h,
        nodes: grid.nodes.clone(),
        delta: grid.delta.clone(),
        g: g.values.clone(),
        v_h: v_h.values.clone(),
        explicit: explicit.values,
        u_perp: u_perp.values,
        sup_k: sup_on_compact(&grid, &v.values, k_frac),
        inf_omega: v.min(),
        v_lambda: v.values,
        v_l1_dgamma: v_l1,
        u_perp_l1_dgamma: up_l1,
        k_frac,
        green_residual: resid.norm_l2(),
        perp_leak: leak,
        uniform_constant: if denom > 0.0 { up_l1 / denom } else { 0.0 },
        grid: Some(grid),
    })
}

/// `v_λ = 𝔾_λ(f)` with homogeneous boundary data.
pub fn solve_dirichlet(op: &OperatorSpec, sd: &SpectralData, ctx: &LambdaContext, f: &GridFunction) -> Result<SolveReport> {
    let zero = GridFunction::zeros(sd.grid().clone());
    solve_split(sd, ctx, op.gamma, f, zero, None, DEFAULT_K_FRAC)
}

/// Large solution `v_λ = v_h + 𝔾_λ(g + λ v_h)` with `v_h = 𝕄(h)`.
pub fn solve_large(
    op: &OperatorSpec,
    sd: &SpectralData,
    ctx: &LambdaContext,
    g: &GridFunction,
    h: &BoundaryData,
    k_frac: f64,
) -> Result<SolveReport> {
    let v_h = martin_apply(op, sd.grid().clone(), h)?;
    solve_split(sd, ctx, op.gamma, g, v_h, Some(*h), k_frac)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FredholmCase {
    /// `P_{E_i}(g + λ_i v_h) = 0`: solutions converge.
    Vanishing,
    /// Nonzero projection: solutions blow up like `1/|λ_i − λ|`.
    BlowUp,
}

#[derive(Debug, Clone, Serialize)]
pub struct FredholmReport {
    /// One-based index of the eigenvalue group.
    pub group: usize,
    pub lambda_i: f64,
    pub projection: Vec<f64>,
    pub projection_l2: f64,
    pub projection_sup: f64,
    pub eps: f64,
    pub a_plus: Vec<usize>,
    pub a_minus: Vec<usize>,
    pub case: FredholmCase,
    /// Sign of the blow-up on `A_i^+` as `λ ↗ λ_i` (`A_i^−` and `λ ↘ λ_i`
    /// flip it).
    pub sign_below_on_a_plus: f64,
}

/// Projection of `g + λ_i v_h` onto the eigenspace of group `group`
/// (one-based) and the sets `A_i^± = {±P > ε}`. `eps` defaults to
/// `10⁻³‖P‖_∞`.
pub fn fredholm_diagnose(
    sd: &SpectralData,
    op: &OperatorSpec,
    g: &GridFunction,
    h: &BoundaryData,
    group: usize,
    eps: Option<f64>,
) -> Result<FredholmReport> {
    if group == 0 || group > sd.groups.len() {
        return Err(Error::InvalidInput(format!("no eigenvalue group #{group}")));
    }
    let gi = group - 1;
    let lambda_i = sd.group_value(gi);
    let v_h = martin_apply(op, sd.grid().clone(), h)?;
    let data = g.lin_comb(1.0, &v_h, lambda_i)?;
    let p = project_group(sd, gi, &data)?;
    let sup = p.max_abs();
    // |⟨F, φ⟩| ≤ ‖Fδ^γ‖_{L¹} ‖φ/δ^γ‖_∞ sets the scale of a vanishing projection.
    let (lo, hi) = sd.groups[gi];
    let phi_scale = (lo..hi)
        .map(|j| weighted_norm(&sd.mode(j), NormKind::LinfOverDelta(op.gamma), op.gamma).unwrap_or(0.0))
        .fold(0.0, f64::max);
    let scale = weighted_norm(&data, NormKind::L1Delta(op.gamma), op.gamma)? * phi_scale * phi_scale;
    let case = if sup <= 1e-9 * scale.max(f64::MIN_POSITIVE) {
        FredholmCase::Vanishing
    } else {
        FredholmCase::BlowUp
    };
    let eps = eps.unwrap_or(DEFAULT_EPS_FRAC * sup);
    let a_plus = (0..p.len()).filter(|&i| p.values[i] > eps).collect();
    let a_minus = (0..p.len()).filter(|&i| p.values[i] < -eps).collect();
    Ok(FredholmReport {
        group,
        lambda_i,
        projection_l2: p.norm_l2(),
        projection_sup: sup,
        projection: p.values,
        eps,
        a_plus,
        a_minus,
        case,
        sign_below_on_a_plus: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Below,
    Above,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// `sup_{K ∩ A_i^+} |v_λ|`.
    pub sup_k: f64,
    /// `inf_{K ∩ A_i^+} v_λ`.
    pub inf_k: f64,
    pub inf_omega: f64,
    pub u_perp_l1_dgamma: f64,
    /// `⟨v_λ, φ_i⟩` for the first mode of the group.
    pub proj_i: f64,
    /// `sup_k · |λ_i − λ|`.
    pub product: f64,
    /// `|⟨v_λ, φ_i⟩| · |λ_i − λ|`.
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub group: usize,
    pub lambda_i: f64,
    pub approach: Approach,
    pub case: FredholmCase,
    pub k_frac: f64,
    pub rows: Vec<SweepRow>,
    /// Mean of `sup_k · |λ_i − λ|`.
    pub fitted_constant: f64,
    /// `(max − min)/mean` of that product.
    pub spread: f64,
    /// `max/min` of `‖u^⊥δ^γ‖_{L¹}` along the sweep.
    pub u_perp_band: f64,
    /// `|⟨g + λ_i v_h, φ_i⟩|`, the limit of `rate`.
    pub rate_limit: f64,
    pub sup_k_monotone: bool,
    pub inf_k_monotone: bool,
    #[serde(skip)]
    pub solutions: Vec<SolveReport>,
}

/// Solve along `lambdas` as `λ → λ_i` from one side.
#[allow(clippy::too_many_arguments)]
pub fn sweep_lambda(
    op: &OperatorSpec,
    sd: &SpectralData,
    g: &GridFunction,
    h: &BoundaryData,
    group: usize,
    approach: Approach,
    lambdas: &[f64],
    k_frac: f64,
) -> Result<SweepReport> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("empty lambda list".into()));
    }
    let diag = fredholm_diagnose(sd, op, g, h, group, None)?;
    let lambda_i = diag.lambda_i;
    for &l in lambdas {
        let side_ok = match approach {
            Approach::Below => l < lambda_i,
            Approach::Above => l > lambda_i,
        };
        if !side_ok {
            return Err(Error::InvalidInput(format!(
                "lambda {l} is not on the requested side of {lambda_i}"
            )));
        }
        let (j, nearest) = sd.nearest(l);
        if (nearest - l).abs() <= sd.tau_mult * nearest.abs() {
            return Err(Error::SingularLambda {
                lambda: l,
                nearest,
                index: j + 1,
            });
        }
    }
    let mut ordered = lambdas.to_vec();
    ordered.sort_by(|a, b| (b - lambda_i).abs().total_cmp(&(a - lambda_i).abs()));

    let grid = sd.grid().clone();
    let compact = grid.compact_indices(k_frac);
    let watch: Vec<usize> = if diag.a_plus.is_empty() {
        compact.clone()
    } else {
        compact.iter().copied().filter(|i| diag.a_plus.contains(i)).collect()
    };
    let phi_i = sd.mode(sd.groups[group - 1].0);
    let rate_limit = {
        let v_h = martin_apply(op, grid.clone(), h)?;
        g.lin_comb(1.0, &v_h, lambda_i)?.inner(&phi_i)?.abs()
    };

    let mut rows = Vec::with_capacity(ordered.len());
    let mut solutions = Vec::with_capacity(ordered.len());
    for &l in &ordered {
        let ctx = lambda_context_covering(sd, l);
        let rep = solve_large(op, sd, &ctx, g, h, k_frac)?;
        let v = &rep.v_lambda;
        let sup_k = watch.iter().fold(0.0f64, |m, &i| m.max(v[i].abs()));
        let inf_k = watch.iter().fold(f64::INFINITY, |m, &i| m.min(v[i]));
        let proj = rep.v().inner(&phi_i)?;
        let gap = (lambda_i - l).abs();
        rows.push(SweepRow {
            lambda: l,
            sup_k,
            inf_k,
            inf_omega: rep.inf_omega,
            u_perp_l1_dgamma: rep.u_perp_l1_dgamma,
            proj_i: proj,
            product: sup_k * gap,
            rate: proj.abs() * gap,
        });
        solutions.push(rep);
    }
    let products: Vec<f64> = rows.iter().map(|r| r.product).collect();
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    let (pmin, pmax) = min_max(&products);
    let uperp: Vec<f64> = rows.iter().map(|r| r.u_perp_l1_dgamma).collect();
    let (umin, umax) = min_max(&uperp);
    let sup_k_monotone = rows.windows(2).all(|w| w[1].sup_k > w[0].sup_k);
    let inf_k_monotone = rows.windows(2).all(|w| w[1].inf_k > w[0].inf_k);
    Ok(SweepReport {
        group,
        lambda_i,
        approach,
        case: diag.case,
        k_frac,
        rows,
        fitted_constant: mean,
        spread: if mean != 0.0 { (pmax - pmin) / mean.abs() } else { 0.0 },
        u_perp_band: if umin > 0.0 { umax / umin } else { f64::INFINITY },
        rate_limit,
        sup_k_monotone,
        inf_k_monotone,
        solutions,
    })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Random nonnegative data of several shapes, cycling with the trial index:
/// uniform noise, sparse spikes, a Gaussian bump, and `δ^{−α}` with
/// `α ∈ (0.2, 0.9)` (unbounded but in `L¹(δ^γ)`).
pub fn random_nonnegative(grid: &Arc<QuadGrid>, trial: usize, rng: &mut ChaCha8Rng) -> GridFunction {
    let r = grid.domain.radius;
    match trial % 4 {
        0 => GridFunction::from_fn(grid.clone(), |_, _| rng.random_range(0.0..1.0)),
        1 => {
            let mut v = vec![0.0; grid.len()];
            for _ in 0..5 {
                let i = rng.random_range(0..grid.len());
                v[i] += rng.random_range(0.0..1.0) / grid.weights[i];
            }
            GridFunction {
                grid: grid.clone(),
                values: v,
            }
        }
        2 => {
            let c = rng.random_range(-0.9..0.9) * r;
            let w = rng.random_range(0.02..0.5) * r;
            GridFunction::from_fn(grid.clone(), |x, _| (-((x - c) / w).powi(2)).exp())
        }
        _ => {
            let alpha = rng.random_range(0.2..0.9);
            let a = rng.random_range(0.1..1.0);
            GridFunction::from_fn(grid.clone(), |_, d| a * d.powf(-alpha))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxPrincipleFailure {
    pub trial: usize,
    pub min: f64,
    pub max: f64,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxPrincipleReport {
    pub lambda: f64,
    pub trials: usize,
    /// Most negative `min u / max u` observed.
    pub worst_ratio: f64,
    pub failures: Vec<MaxPrincipleFailure>,
}

impl MaxPrincipleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `u = 𝔾_λ f ≥ 0` for random `f ≥ 0`, `λ < λ_1`.
pub fn check_max_principle(sd: &SpectralData, lambda: f64, trials: usize, seed: u64) -> Result<MaxPrincipleReport> {
    if lambda >= sd.lambda_1() {
        return Err(Error::InvalidInput(format!(
            "the maximum principle needs lambda < lambda_1 = {}",
            sd.lambda_1()
        )));
    }
    let ctx = lambda_context(sd, lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = sd.grid().clone();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for trial in 0..trials {
        let f = random_nonnegative(&grid, trial, &mut rng);
        let u = apply_glambda(sd, &ctx, &f)?;
        let (lo, hi) = (u.min(), u.max());
        let ratio = if hi > 0.0 { lo / hi } else { lo };
        worst = worst.min(ratio);
        if lo < -1e-8 * hi.max(0.0) {
            failures.push(MaxPrincipleFailure {
                trial,
                min: lo,
                max: hi,
                f: f.values,
            });
        }
    }
    Ok(MaxPrincipleReport {
        lambda,
        trials,
        worst_ratio: worst,
        failures,
    })
}

/// `min u` for `u = 𝔾_λ φ_1` at `λ = (λ_1 + λ_2)/2`; negative by design.
pub fn max_principle_negative_control(sd: &SpectralData) -> Result<f64> {
    let lambda = 0.5 * (sd.lambda_1() + sd.group_value(1.min(sd.groups.len() - 1)));
    let ctx = lambda_context(sd, lambda)?;
    Ok(apply_glambda(sd, &ctx, &sd.mode(0))?.min())
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub trials: usize,
    /// Largest `λ_1⟨φ,𝔾₀φ⟩ / ⟨φ,φ⟩` over the random trials.
    pub max_ratio: f64,
    /// `|λ_1⟨φ_1,𝔾₀φ_1⟩ − ⟨φ_1,φ_1⟩|`.
    pub equality_residual: f64,
    /// Ratio at `φ_2`; equals `λ_1/λ_2`.
    pub second_mode_ratio: f64,
    pub passed: bool,
}

/// `λ_1⟨φ, 𝔾₀φ⟩ ≤ ⟨φ, φ⟩`.
pub fn check_poincare(sd: &SpectralData, dk: &DiscreteKernel, trials: usize, seed: u64) -> Result<PoincareReport> {
    let l1 = sd.lambda_1();
    let ratio = |phi: &GridFunction| -> Result<f64> {
        let g = apply_g0(dk, phi)?;
        Ok(l1 * phi.inner(&g)? / phi.inner(phi)?)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let phi = GridFunction::from_fn(sd.grid().clone(), |_, _| rng.random_range(-1.0..1.0));
        worst = worst.max(ratio(&phi)?);
    }
    let phi1 = sd.mode(0);
    let g1 = apply_g0(dk, &phi1)?;
    let eq = (l1 * phi1.inner(&g1)? - phi1.inner(&phi1)?).abs();
    let second = if sd.len() > 1 { ratio(&sd.mode(1))? } else { f64::NAN };
    Ok(PoincareReport {
        trials,
        max_ratio: worst,
        equality_residual: eq,
        second_mode_ratio: second,
        passed: worst <= 1.0 + 1e-8 && eq < 1e-8,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NotionResiduals {
    /// `‖u − 𝔾_λf‖_{L²}`
    pub r1: f64,
    /// `‖u − λ𝔾₀u − 𝔾₀f‖_{L²}`
    pub r5: f64,
    /// `max_j |(λ_j − λ)⟨u,φ_j⟩ − ⟨f,φ_j⟩|`
    pub r6: f64,
}

impl NotionResiduals {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r5).max(self.r6)
    }
}

/// Residuals of `u` in the three computable senses of solution.
pub fn notion_residuals(
    sd: &SpectralData,
    dk: &DiscreteKernel,
    ctx: &LambdaContext,
    f: &GridFunction,
    u: &GridFunction,
) -> Result<NotionResiduals> {
    let r1 = u.sub(&apply_glambda(sd, ctx, f)?)?.norm_l2();
    let g0u = apply_g0(dk, u)?;
    let g0f = apply_g0(dk, f)?;
    let r5 = u.lin_comb(1.0, &g0u, -ctx.lambda)?.sub(&g0f)?.norm_l2();
    let cu = sd.coefficients(u)?;
    let cf = sd.coefficients(f)?;
    let r6 = (0..sd.len())
        .map(|j| ((sd.lambdas[j] - ctx.lambda) * cu[j] - cf[j]).abs())
        .fold(0.0, f64::max);
    Ok(NotionResiduals { r1, r5, r6 })
}

/// Residuals for the spectral route and, when `|λ| < λ_1`, the Neumann route.
pub fn check_notions(
    sd: &SpectralData,
    dk: &DiscreteKernel,
    ctx: &LambdaContext,
    f: &GridFunction,
) -> Result<Vec<(String, NotionResiduals)>> {
    let mut out = Vec::new();
    let u = apply_glambda(sd, ctx, f)?;
    out.push(("spectral".to_string(), notion_residuals(sd, dk, ctx, f, &u)?));
    if ctx.lambda.abs() < ctx.lambda_1 {
        let u = apply_glambda_neumann(dk, ctx, f, 1e-13, 10_000)?;
        out.push(("neumann".to_string(), notion_residuals(sd, dk, ctx, f, &u)?));
    }
    Ok(out)
}

/// `|⟨f, 𝔾_λg⟩ − ⟨g, 𝔾_λf⟩| / (‖f‖‖g‖)`.
pub fn by_parts_residual(sd: &SpectralData, ctx: &LambdaContext, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let a = f.inner(&apply_glambda(sd, ctx, g)?)?;
    let b = g.inner(&apply_glambda(sd, ctx, f)?)?;
    Ok((a - b).abs() / (f.norm_l2() * g.norm_l2()))
}

/// `‖u^⊥δ^γ‖_{L¹}` for `u^⊥ = 𝔾_λ^⊥ f^⊥` at each `λ = frac·λ_1`, with `E`
/// covering the first group.
pub fn perp_sweep(op: &OperatorSpec, sd: &SpectralData, f: &GridFunction, fractions: &[f64]) -> Result<Vec<f64>> {
    fractions
        .iter()
        .map(|&fr| {
            let ctx = lambda_context_covering(sd, fr * sd.lambda_1());
            let fp = crate::spectral::project_perp(sd, &ctx, f)?;
            let u = crate::spectral::apply_glambda_perp(sd, &ctx, &fp)?;
            weighted_norm(&u, NormKind::L1Delta(op.gamma), op.gamma)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{weighted_trace, TraceMode};
    use crate::discretize::assemble_green_matrix;
    use crate::geometry::{build_grid, DomainKind, DomainSpec};
    use crate::spectral::eigendecompose;
    use approx::assert_relative_eq;

    fn setup(n: usize) -> (OperatorSpec, SpectralData) {
        let d = DomainSpec::interval(1.0).unwrap();
        let op = OperatorSpec::rfl(0.75, d).unwrap();
        let grid = Arc::new(build_grid(d, n, 2.0).unwrap());
        let dk = assemble_green_matrix(&op, grid).unwrap();
        (op, eigendecompose(Arc::new(dk)).unwrap())
    }

    fn one(kind: DomainKind) -> BoundaryData {
        BoundaryData::constant(1.0, kind)
    }

    #[test]
    fn dirichlet_examples() {
        let (op, sd) = setup(128);
        let l1 = sd.lambda_1();
        let ctx = lambda_context(&sd, 0.5 * l1).unwrap();
        let rep = solve_dirichlet(&op, &sd, &ctx, &sd.mode(0)).unwrap();
        let want = sd.mode(0).scale(2.0 / l1);
        assert!(rep.v().sub(&want).unwrap().max_abs() < 1e-9 * want.max_abs());
        let f = GridFunction::delta_pow(sd.grid().clone(), -0.5);
        let rep = solve_dirichlet(&op, &sd, &ctx, &f).unwrap();
        assert!(rep.v_l1_dgamma.is_finite() && rep.green_residual < 1e-6);
    }

    #[test]
    fn large_solution_examples() {
        let (op, sd) = setup(128);
        let zero = GridFunction::zeros(sd.grid().clone());
        let ctx0 = lambda_context(&sd, 0.0).unwrap();
        let rep = solve_large(&op, &sd, &ctx0, &zero, &BoundaryData::zero(DomainKind::Interval), 0.25).unwrap();
        assert_eq!(rep.v().max_abs(), 0.0);
        let rep = solve_large(&op, &sd, &ctx0, &zero, &one(DomainKind::Interval), 0.25).unwrap();
        assert_eq!(rep.v_lambda, rep.v_h);
        let ctx = lambda_context_covering(&sd, 0.5 * sd.lambda_1());
        let rep = solve_large(&op, &sd, &ctx, &zero, &one(DomainKind::Interval), 0.25).unwrap();
        assert!(rep.green_residual < 1e-6, "{}", rep.green_residual);
        assert!(rep.perp_leak < 1e-8);
        let total: Vec<f64> = (0..rep.v_lambda.len())
            .map(|i| rep.v_h[i] + rep.explicit[i] + rep.u_perp[i] - rep.v_lambda[i])
            .collect();
        assert!(total.iter().all(|v| v.abs() < 1e-12 * rep.v().max_abs()));
        let w = rep.v().sub(&rep.as_fn(&rep.v_h)).unwrap();
        assert!(weighted_trace(&op, &w, 1.0, TraceMode::Ratio).unwrap().value.abs() < 1e-3);
    }

    #[test]
    fn fredholm_cases() {
        let (op, sd) = setup(128);
        let zero = GridFunction::zeros(sd.grid().clone());
        let g = sd.mode(1).scale(sd.lambdas[1] - sd.lambdas[0]);
        let rep = fredholm_diagnose(&sd, &op, &g, &BoundaryData::zero(DomainKind::Interval), 1, None).unwrap();
        assert_eq!(rep.case, FredholmCase::Vanishing);
        let rep = fredholm_diagnose(&sd, &op, &zero, &one(DomainKind::Interval), 1, None).unwrap();
        assert_eq!(rep.case, FredholmCase::BlowUp);
        assert!(!rep.a_plus.is_empty() && rep.a_minus.is_empty());
        let big = fredholm_diagnose(&sd, &op, &zero, &one(DomainKind::Interval), 1, Some(2.0 * rep.projection_sup)).unwrap();
        assert!(big.a_plus.is_empty() && big.a_minus.is_empty());
        assert!(fredholm_diagnose(&sd, &op, &zero, &one(DomainKind::Interval), 0, None).is_err());
    }

    #[test]
    fn sweep_case_b() {
        let (op, sd) = setup(128);
        let zero = GridFunction::zeros(sd.grid().clone());
        let l1 = sd.lambda_1();
        let lambdas: Vec<f64> = [0.9, 0.95, 0.975, 0.9875].iter().map(|f| f * l1).collect();
        let rep = sweep_lambda(&op, &sd, &zero, &one(DomainKind::Interval), 1, Approach::Below, &lambdas, 0.25).unwrap();
        assert!(rep.spread < 0.05, "{}", rep.spread);
        assert!(rep.inf_k_monotone && rep.sup_k_monotone);
        assert!(sweep_lambda(&op, &sd, &zero, &one(DomainKind::Interval), 1, Approach::Above, &lambdas, 0.25).is_err());
        assert!(sweep_lambda(&op, &sd, &zero, &one(DomainKind::Interval), 1, Approach::Below, &[l1], 0.25).is_err());
    }

    #[test]
    fn max_principle_and_control() {
        let (_, sd) = setup(128);
        for lambda in [-5.0, 0.0, 0.9 * sd.lambda_1()] {
            let rep = check_max_principle(&sd, lambda, 20, 1).unwrap();
            assert!(rep.passed(), "{lambda}: {}", rep.worst_ratio);
        }
        assert!(check_max_principle(&sd, 1.1 * sd.lambda_1(), 5, 1).is_err());
        assert!(max_principle_negative_control(&sd).unwrap() < 0.0);
    }

    #[test]
    fn poincare_and_notions() {
        let (_, sd) = setup(128);
        let rep = check_poincare(&sd, &sd.kernel, 50, 3).unwrap();
        assert!(rep.passed);
        assert_relative_eq!(rep.second_mode_ratio, sd.lambdas[0] / sd.lambdas[1], max_relative = 1e-8);
        let ctx = lambda_context(&sd, 0.5 * sd.lambda_1()).unwrap();
        let phi3 = sd.mode(2);
        for (_, r) in check_notions(&sd, &sd.kernel, &ctx, &phi3).unwrap() {
            assert!(r.max() < 1e-8, "{r:?}");
        }
        let u = apply_glambda(&sd, &ctx, &phi3).unwrap().map(|v| v * 1.01);
        assert!(notion_residuals(&sd, &sd.kernel, &ctx, &phi3, &u).unwrap().r5 > 1e-3);
    }
}
