//! Shape of the query cost: tallies over a parameter grid compared with the
//! nominal power law, pair by pair, plus the fallback frequency of the
//! rejection RGO in the well-conditioned pipeline.

use crate::chain::ChainState;
use crate::composite::{accelerated_composite_sample, CompositeConfig, CompositeProblem};
use crate::error::{invalid, Result};
use crate::finitesum::{accelerated_finitesum_sample, sample_finitesum, FiniteSumConfig};
use crate::models::{build_model, ModelSpec};
use crate::optimize::SvrgConfig;
use crate::oracle::{ClosureFunction, FunctionOracle, ProblemMeta};
use crate::parallel::run_chains;
use crate::reduction::ReductionConfig;
use crate::wellcond::{metropolized_fallback, sample_wellconditioned};

use super::{draws_with_diag, log_log_slope, Check};

/// Chains averaged per grid point.
pub const CHAINS: usize = 4;
pub const KAPPAS: [f64; 3] = [2.0, 4.0, 8.0];
pub const DIMS: [usize; 3] = [4, 16, 64];
const EPS: f64 = 0.1;
/// Chains for the fallback-frequency check.
pub const FALLBACK_CHAINS: usize = 20;

fn finitesum_spec(kappa: f64) -> ModelSpec {
    ModelSpec::QuadraticFinitesum { n: 10, curvature: vec![1.0], smoothness: Some(kappa), spread: 1.0, data_seed: 3 }
}

/// Mean of `job` over [`CHAINS`] chains.
fn mean_tally(seed: u64, job: impl Fn(&mut ChainState) -> Result<u64> + Sync + Send) -> Result<f64> {
    let runs = run_chains(CHAINS, seed, |_, st| job(st));
    let mut s = 0.0;
    for r in runs {
        s += r.value? as f64;
    }
    Ok(s / CHAINS as f64)
}

/// One check per consecutive grid pair: `(tally ratio) / (nominal ratio)`
/// must lie in `[1/2, 2]`.
fn shape_checks(name: &str, grid: &[f64], tallies: &[f64], power: f64) -> Vec<Check> {
    let slope = log_log_slope(grid, tallies);
    let mut out = Vec::new();
    for k in 1..grid.len() {
        let r = (tallies[k] / tallies[k - 1]) / (grid[k] / grid[k - 1]).powf(power);
        let detail = format!("tallies {tallies:?} over {grid:?}; fitted exponent {slope:.3}, nominal {power}");
        let mut c = Check::at_most(format!("{name}_{}_to_{}", grid[k - 1], grid[k]), (r.ln()).abs(), 2f64.ln(), detail);
        c.detail = format!("normalized ratio {r:.3}; {}", c.detail);
        out.push(c);
    }
    out
}

fn finitesum_tallies(seed: u64) -> Result<Vec<f64>> {
    let cfg = FiniteSumConfig::default();
    KAPPAS
        .iter()
        .map(|&k| {
            let m = build_model(&finitesum_spec(k))?;
            let fs = m.finite_sum.clone().ok_or_else(|| invalid("expected a finite-sum model"))?;
            mean_tally(seed, |st| {
                let f = fs.with_fresh_counter();
                sample_finitesum(&f, &m.x_star, EPS, &cfg, st)?;
                Ok(f.tally().total())
            })
        })
        .collect()
}

fn accel_finitesum_tallies(seed: u64) -> Result<Vec<f64>> {
    let (cfg, svrg, red) = (FiniteSumConfig::default(), SvrgConfig::default(), ReductionConfig::default());
    KAPPAS
        .iter()
        .map(|&k| {
            let m = build_model(&finitesum_spec(k))?;
            let fs = m.finite_sum.clone().ok_or_else(|| invalid("expected a finite-sum model"))?;
            mean_tally(seed, |st| {
                let f = fs.with_fresh_counter();
                accelerated_finitesum_sample(&f, EPS, &cfg, &svrg, &red, st)?;
                Ok(f.tally().total())
            })
        })
        .collect()
}

fn accel_composite_tallies(seed: u64) -> Result<Vec<f64>> {
    let cfg = CompositeConfig { c_k: 1.0, ..CompositeConfig::default() };
    let red = ReductionConfig::default();
    KAPPAS
        .iter()
        .map(|&k| {
            let m = build_model(&ModelSpec::LassoGaussian { curvature: vec![1.0, k], mean: vec![1.0, -0.5], reg: vec![0.5, 0.5] })?;
            mean_tally(seed, |st| {
                let f = m.f.with_fresh_counter();
                let problem = CompositeProblem::new(f.clone(), m.g.clone(), m.x_star.clone())?;
                accelerated_composite_sample(&problem, EPS, &cfg, &red, st)?;
                Ok(f.tally().total())
            })
        })
        .collect()
}

/// `f = sum_j a_j x_j^2 / 2` with `a_j` spread over `[1, 2]`.
fn gaussian_oracle(d: usize) -> Result<FunctionOracle> {
    let a: Vec<f64> = (0..d).map(|j| 1.0 + j as f64 / (d - 1).max(1) as f64).collect();
    let b = a.clone();
    FunctionOracle::new(
        ClosureFunction::new(
            d,
            move |x: &[f64]| x.iter().zip(&a).map(|(xi, ai)| 0.5 * ai * xi * xi).sum(),
            move |x: &[f64], g: &mut [f64]| g.iter_mut().zip(x).zip(&b).for_each(|((gi, xi), bi)| *gi = bi * xi),
        ),
        ProblemMeta::new(2.0, 1.0, d)?,
    )
}

fn fallback_tallies(seed: u64) -> Result<Vec<f64>> {
    DIMS.iter()
        .map(|&d| {
            let f = gaussian_oracle(d)?;
            mean_tally(seed, |st| {
                let g = f.with_fresh_counter();
                metropolized_fallback(&g, &vec![0.0; d], 0.01, st)?;
                Ok(g.tally().total())
            })
        })
        .collect()
}

fn fallback_frequency(seed: u64) -> Result<Check> {
    let (d, kappa) = (10usize, 10.0);
    let m = build_model(&ModelSpec::Gaussian {
        curvature: (0..d).map(|j| 1.0 + (kappa - 1.0) * j as f64 / (d - 1) as f64).collect(),
        mean: vec![0.0; d],
    })?;
    let red = ReductionConfig::default();
    let (_, diag) = draws_with_diag(FALLBACK_CHAINS, seed, |st| sample_wellconditioned(&m.f, &m.x_star, EPS, &red, st).map(|o| o.x))?;
    let calls = diag.xsample_calls as f64;
    let freq = diag.gate_failures as f64 / calls;
    let se = (freq * (1.0 - freq) / calls).sqrt();
    let bound = 1.0 / (d as f64 * (kappa * d as f64 / EPS).ln());
    Ok(Check::at_most(
        "fallback_frequency",
        freq,
        bound + 3.0 * se,
        format!("{} gate failures in {} calls; d = {d}, kappa = {kappa}, eps = {EPS}", diag.gate_failures, diag.xsample_calls),
    ))
}

pub fn run(seed: u64) -> Result<Vec<Check>> {
    let kappas = KAPPAS.to_vec();
    let dims: Vec<f64> = DIMS.iter().map(|&d| d as f64).collect();
    let mut out = shape_checks("finitesum_kappa_squared", &kappas, &finitesum_tallies(seed)?, 2.0);
    out.extend(shape_checks("accelerated_composite_kappa", &kappas, &accel_composite_tallies(seed)?, 1.0));
    out.extend(shape_checks("accelerated_finitesum_kappa", &kappas, &accel_finitesum_tallies(seed)?, 1.0));
    out.extend(shape_checks("fallback_dim", &dims, &fallback_tallies(seed)?, 1.0));
    out.push(fallback_frequency(seed)?);
    Ok(out)
}
