//! Mean rejection rounds of the two exact y/x-step samplers, inside their
//! gates, from stationary inputs.

use crate::chain::ChainState;
use crate::composite::{ysample, JointParams};
use crate::error::Result;
use crate::linalg::{dist_sq, norm};
use crate::models::{build_model, Model, ModelSpec};
use crate::stats::mean_se;
use crate::wellcond::{xsample, xsample_eta, xsample_gate};

use super::{draws, with_retry, Check};

pub const CALLS: usize = 10_000;

/// Diagonal Gaussian in 10 dimensions with curvatures 1..=10.
pub fn model_spec() -> ModelSpec {
    ModelSpec::Gaussian { curvature: (1..=10).map(f64::from).collect(), mean: vec![0.0; 10] }
}

fn exact_draw(m: &Model, st: &mut ChainState) -> Vec<f64> {
    let ModelSpec::Gaussian { curvature, mean } = &m.spec else { unreachable!("rejection suite uses a Gaussian model") };
    curvature.iter().zip(mean).map(|(a, c)| c + st.rng.normal() / a.sqrt()).collect()
}

fn rounds_check(name: &str, rounds: Vec<Option<u64>>, detail: &str) -> Check {
    let inside: Vec<f64> = rounds.iter().flatten().map(|&r| r as f64).collect();
    let (mean, se) = mean_se(&inside);
    let mut c = Check::at_most(
        name,
        mean,
        2.0 + 3.0 * se,
        format!("{} of {} calls inside the gate; se {se}; {detail}", inside.len(), rounds.len()),
    );
    if inside.len() < rounds.len() / 2 {
        c.pass = false;
        c.detail.push_str("; too few calls inside the gate");
    }
    c
}

fn xsample_rounds(seed: u64) -> Result<Check> {
    let m = build_model(&model_spec())?;
    let meta = m.meta();
    let (eta, gate) = (xsample_eta(&meta), xsample_gate(&meta));
    let rounds = draws(CALLS, seed, |st| {
        let x = exact_draw(&m, st);
        let y: Vec<f64> = x.iter().map(|xi| xi + eta.sqrt() * st.rng.normal()).collect();
        if norm(&m.f.gradient_vec(&y)?) > gate {
            return Ok(None);
        }
        let before = st.diag.xsample_rounds;
        let mut out = vec![0.0; y.len()];
        xsample(&m.f, &y, eta, gate, 0.01, st, &mut out)?;
        Ok(Some(st.diag.xsample_rounds - before))
    })?;
    Ok(rounds_check("xsample_mean_rounds", rounds, &format!("d = 10, kappa = 10, eta = {eta}")))
}

fn ysample_rounds(seed: u64) -> Result<Check> {
    let m = build_model(&model_spec())?;
    let params = JointParams::new(&m.meta(), &m.x_star, 0.1 / 18.0, 1.0)?;
    let rounds = draws(CALLS, seed, |st| {
        let x = exact_draw(&m, st);
        if dist_sq(&x, &params.x_star).sqrt() > params.region_radius {
            return Ok(None);
        }
        let before = st.diag.ysample_rounds;
        let mut out = vec![0.0; x.len()];
        ysample(&m.f, &x, &params, st, &mut out)?;
        Ok(Some(st.diag.ysample_rounds - before))
    })?;
    Ok(rounds_check("ysample_mean_rounds", rounds, &format!("d = 10, kappa = 10, eta = {}", params.eta)))
}

pub fn run(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![with_retry(seed, xsample_rounds)?, with_retry(seed, ysample_rounds)?])
}
