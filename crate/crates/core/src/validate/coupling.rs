//! Agreement between the subsampled walk and the exact-filter walk under
//! shared randomness, and the subset-size tail bound.

use crate::error::{invalid, Result};
use crate::finitesum::{coupled_walks, safe_step, MrwParams};
use crate::models::build_model;
use crate::stats::{binomial_upper_tail, mean_se};

use super::estimators::large_sum;
use super::{draws, with_retry, Check};

/// Paired runs.
pub const RUNS: usize = 1000;
pub const STEPS: usize = 200;
pub const DELTA: f64 = 0.1;

fn disagreement(seed: u64, control: bool) -> Result<Check> {
    let m = build_model(&large_sum())?;
    let fs = m.finite_sum.clone().ok_or_else(|| invalid("expected a finite-sum model"))?;
    let meta = fs.meta();
    let step = if control { 1.0 / meta.smoothness } else { safe_step(&meta, fs.n(), STEPS, DELTA) };
    let params = MrwParams::new(fs.n(), step, STEPS, DELTA)?;
    let sd = (1.0 / meta.smoothness).sqrt();
    let runs = draws(RUNS, seed, |st| {
        let x0: Vec<f64> = m.x_star.iter().map(|c| c + sd * st.rng.normal()).collect();
        Ok(coupled_walks(&fs, &params, &x0, st))
    })?;
    let diverged: Vec<f64> = runs.iter().map(|r| if r.diverged_at.is_some() { 1.0 } else { 0.0 }).collect();
    let capped: usize = runs.iter().map(|r| r.capped_steps).sum();
    let out_of_band: usize = runs.iter().map(|r| r.out_of_band_steps).sum();
    let (freq, se) = mean_se(&diverged);
    let detail = format!(
        "{RUNS} paired runs of K = {STEPS}, n = {}, h = {step:.3e}, p = {:.4}; {capped} capped and {out_of_band} out-of-band steps",
        fs.n(),
        params.inclusion
    );
    if control {
        // A step far outside the agreement regime must produce disagreements.
        return Ok(Check::at_least("large_step_control_disagrees", freq, 1.0 / RUNS as f64, detail));
    }
    Ok(Check::at_most("walks_disagree_at_most_delta", freq, DELTA + 3.0 * se, detail))
}

fn subset_tail() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in [20u64, 50, 200, 1000] {
        for p in [0.05, 0.2, 0.5, 0.9] {
            let k = (2.0 * p * n as f64).floor() as u64;
            let exact = binomial_upper_tail(n, p, k)?;
            let bound = (-3.0 * p * n as f64 / 14.0).exp();
            out.push(Check::at_most(
                format!("subset_tail_n_{n}_p_{p}"),
                exact,
                bound,
                format!("P(|S| > 2pn) exact {exact:.4e}, bound exp(-3pn/14) {bound:.4e}"),
            ));
        }
    }
    Ok(out)
}

pub fn run(seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![with_retry(seed, |s| disagreement(s, false))?, with_retry(seed, |s| disagreement(s, true))?];
    out.extend(subset_tail()?);
    Ok(out)
}
