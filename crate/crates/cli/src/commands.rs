use std::sync::Arc;

use nonlocal_eigen::discretize::{assemble_green_matrix, DiscreteKernel};
use nonlocal_eigen::geometry::{build_grid, QuadGrid};
use nonlocal_eigen::kernels::{OperatorKind, OperatorSpec};
use nonlocal_eigen::limits::{ladder, SFamily};
use nonlocal_eigen::solver::{solve_large, sweep_lambda, Approach};
use nonlocal_eigen::spectral::{eigendecompose, lambda_context, lambda_context_covering, SpectralData};
use nonlocal_eigen::verify::{run_verify, VerifyConfig};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{num, write_json, Csv};
use crate::CliError;

struct Setup {
    op: OperatorSpec,
    grid: Arc<QuadGrid>,
    sd: SpectralData,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let op = cfg.operator()?;
    let grid = Arc::new(build_grid(op.domain, cfg.nodes, cfg.grade)?);
    let dk: DiscreteKernel = assemble_green_matrix(&op, grid.clone())?;
    let sd = eigendecompose(Arc::new(dk))?;
    Ok(Setup { op, grid, sd })
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    result: T,
}

#[derive(Serialize)]
struct EigenSummary<'a> {
    lambda_1: f64,
    gaps: Vec<f64>,
    phi1_bracket: (f64, f64),
    groups: usize,
    discarded: usize,
    mu_max: f64,
    orthonormality_residual: f64,
    lambdas: &'a [f64],
    nodes: &'a [f64],
    delta: &'a [f64],
    weights: &'a [f64],
}

pub fn eigen(cfg: &RunConfig) -> Result<(), CliError> {
    let Setup { op, grid, sd } = setup(cfg)?;
    let mut csv = Csv::new(["j".to_string(), "lambda".to_string()].into_iter().chain((0..grid.len()).map(|i| format!("phi_{i}"))));
    for j in 0..sd.len() {
        let mut row = vec![(j + 1).to_string(), num(sd.lambdas[j])];
        row.extend(sd.modes.column(j).iter().map(|&v| num(v)));
        csv.rows.push(row);
    }
    csv.write(&cfg.out.join("eigen.csv"))?;
    let phi = sd.mode(0);
    let bracket = (0..grid.len()).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
        let q = phi.values[i] / grid.delta[i].powf(op.gamma);
        (lo.min(q), hi.max(q))
    });
    let summary = EigenSummary {
        lambda_1: sd.lambda_1(),
        gaps: sd.lambdas.windows(2).take(10).map(|w| w[1] - w[0]).collect(),
        phi1_bracket: bracket,
        groups: sd.groups.len(),
        discarded: sd.discarded,
        mu_max: sd.mu_max,
        orthonormality_residual: sd.orthonormality_residual(sd.len()),
        lambdas: &sd.lambdas,
        nodes: &grid.nodes,
        delta: &grid.delta,
        weights: &grid.weights,
    };
    write_json(&cfg.out.join("eigen.json"), &Sidecar { config: cfg, result: summary })?;
    println!("lambda_1 = {}", num(sd.lambda_1()));
    for j in 1..sd.len().min(5) {
        println!("lambda_{} = {}", j + 1, num(sd.lambdas[j]));
    }
    Ok(())
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.lambda_list.is_some() {
        return Err(CliError::Config("solve takes a single --lambda".into()));
    }
    let Setup { op, grid, sd } = setup(cfg)?;
    let lambda = cfg.lambda.unwrap_or(0.0);
    lambda_context(&sd, lambda)?;
    let ctx = lambda_context_covering(&sd, lambda);
    let g = cfg.g.on_grid(&grid, Some(&sd))?;
    let rep = solve_large(&op, &sd, &ctx, &g, &cfg.h, cfg.k_frac)?;
    let mut csv = Csv::new(["x", "delta", "v_h", "explicit", "u_perp", "v_lambda"]);
    for i in 0..grid.len() {
        csv.push_nums(&[
            grid.nodes[i],
            grid.delta[i],
            rep.v_h[i],
            rep.explicit[i],
            rep.u_perp[i],
            rep.v_lambda[i],
        ]);
    }
    csv.write(&cfg.out.join("profile.csv"))?;
    write_json(&cfg.out.join("solution.json"), &Sidecar { config: cfg, result: &rep })?;
    println!(
        "lambda = {}  sup_K |v| = {}  inf v = {}  green residual = {:e}",
        num(lambda),
        num(rep.sup_k),
        num(rep.inf_omega),
        rep.green_residual
    );
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let Setup { op, grid, sd } = setup(cfg)?;
    let approach = match cfg.approach.as_str() {
        "below" => Approach::Below,
        "above" => Approach::Above,
        a => return Err(CliError::Config(format!("--approach must be below or above, got {a}"))),
    };
    if cfg.index == 0 || cfg.index > sd.groups.len() {
        return Err(CliError::Config(format!("--index must lie in 1..={}", sd.groups.len())));
    }
    let lambda_i = sd.group_value(cfg.index - 1);
    let lambdas = match &cfg.lambda_list {
        Some(l) => l.clone(),
        None => {
            let sign = if approach == Approach::Below { -1.0 } else { 1.0 };
            [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|e| lambda_i * (1.0 + sign * e)).collect()
        }
    };
    let g = cfg.g.on_grid(&grid, Some(&sd))?;
    let rep = sweep_lambda(&op, &sd, &g, &cfg.h, cfg.index, approach, &lambdas, cfg.k_frac)?;
    let mut csv = Csv::new(["lambda", "supK", "infOmega", "uperp_L1_dgamma", "proj_i", "infK", "product"]);
    for r in &rep.rows {
        csv.push_nums(&[r.lambda, r.sup_k, r.inf_omega, r.u_perp_l1_dgamma, r.proj_i, r.inf_k, r.product]);
    }
    csv.footer = vec![
        format!("lambda_i={}", num(rep.lambda_i)),
        format!("fitted_constant={}", num(rep.fitted_constant)),
        format!("spread={}", num(rep.spread)),
        format!("uperp_band={}", num(rep.u_perp_band)),
        format!("rate_limit={}", num(rep.rate_limit)),
        format!("case={}", serde_json::to_value(rep.case)?.as_str().unwrap_or("")),
        format!("supK_monotone={}", rep.sup_k_monotone),
    ];
    csv.write(&cfg.out.join("sweep.csv"))?;
    write_json(&cfg.out.join("sweep.json"), &Sidecar { config: cfg, result: &rep })?;
    println!(
        "lambda_{} = {}  fitted constant = {}  spread = {:.3}%",
        cfg.index,
        num(rep.lambda_i),
        num(rep.fitted_constant),
        100.0 * rep.spread
    );
    Ok(())
}

pub fn limit_s(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.op == OperatorKind::Classical {
        return Err(CliError::Config("limit-s needs --op rfl or sfl".into()));
    }
    let domain = cfg.domain_spec()?;
    let grid = Arc::new(build_grid(domain, cfg.nodes, cfg.grade)?);
    let fam = SFamily::new(cfg.op, grid.clone())?;
    let g = cfg.g.on_grid(&grid, None)?;
    let rep = ladder(&fam, &cfg.s_list, 5, cfg.lambda.unwrap_or(0.0), &g, &cfg.h, cfg.k_frac)?;
    let mut csv = Csv::new(["s", "lambda_1", "kernel_dist", "sol_dist", "b", "fitted_exponent"]);
    for r in &rep.rows {
        csv.push_nums(&[r.s, r.lambda_1, r.kernel_dist, r.sol_dist, r.b, r.fitted_exponent]);
    }
    csv.write(&cfg.out.join("ladder.csv"))?;
    write_json(&cfg.out.join("ladder.json"), &Sidecar { config: cfg, result: &rep })?;
    for r in &rep.rows {
        println!("s = {:<6} lambda_1 = {}  b = {}  fit = {}", r.s, num(r.lambda_1), num(r.b), num(r.fitted_exponent));
    }
    Ok(())
}

/// Returns whether every check passed.
pub fn verify(cfg: &RunConfig) -> Result<bool, CliError> {
    if cfg.op != OperatorKind::Rfl || cfg.domain_spec()? != nonlocal_eigen::geometry::DomainSpec::interval(1.0)? {
        return Err(CliError::Config("verify runs on the RFL over (-1, 1)".into()));
    }
    let vc = VerifyConfig {
        s: cfg.s,
        n: cfg.nodes,
        grading: cfg.grade,
        k_frac: cfg.k_frac,
        seed: cfg.seed,
        ..VerifyConfig::default()
    };
    let rep = run_verify(vc)?;
    for c in &rep.checks {
        println!(
            "[{}] {:>2} {:<32} {} (tolerance {})",
            if c.passed { "pass" } else { "FAIL" },
            c.criterion,
            c.name,
            num(c.measured),
            num(c.tolerance)
        );
    }
    for n in &rep.notes {
        println!("[note] {:>2} {:<32} {}", n.criterion, n.name, n.detail);
    }
    write_json(&cfg.out.join("verify.json"), &Sidecar { config: cfg, result: &rep })?;
    Ok(rep.all_passed)
}
