//! Distributional exactness of the oracles and end-to-end samplers on 1D
//! models, by KS tests against quadrature CDFs.

use crate::composite::{composite_sample, CompositeConfig, CompositeProblem, JointParams};
use crate::error::Result;
use crate::models::{build_model, ModelSpec};
use crate::oracle::RgoSampler;
use crate::quadrature::{quadrature_domain, quadrature_moments_1d, DEFAULT_NODES};
use crate::reduction::ReductionConfig;
use crate::rgo::SeparableRgo;
use crate::stats::ks_one_sample;
use crate::wellcond::{sample_wellconditioned, xsample, xsample_eta, xsample_gate};

use super::{draws, with_retry, Check, ALPHA};

/// Draws per test.
pub const DRAWS: usize = 100_000;
const TESTS: f64 = 6.0;

/// `f(x) = softplus(2x) + x^2 / 2`.
pub fn logistic_model() -> ModelSpec {
    ModelSpec::Custom1d { logistic_weight: 1.0, logistic_slope: 2.0, quad_weight: 1.0, quad_center: 0.0, l1_weight: 0.0 }
}

/// `f(x) = (x - 1)^2 / 2`, `g(x) = |x|`.
pub fn lasso_model() -> ModelSpec {
    ModelSpec::Custom1d { logistic_weight: 0.0, logistic_slope: 0.0, quad_weight: 1.0, quad_center: 1.0, l1_weight: 1.0 }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn ks_check(name: &str, samples: &[f64], log_density: &dyn Fn(f64) -> f64, lo: f64, hi: f64, detail: String) -> Result<Check> {
    let q = quadrature_moments_1d(log_density, lo, hi, DEFAULT_NODES)?;
    let t = ks_one_sample(samples, |x| q.cdf(x))?;
    Ok(Check::p_above(name, t.statistic, t.p_value, ALPHA / TESTS, format!("{} draws; {detail}", samples.len())))
}

fn xsample_check(seed: u64) -> Result<Check> {
    let m = build_model(&logistic_model())?;
    let meta = m.meta();
    let (lambda, gate, y) = (xsample_eta(&meta), xsample_gate(&meta), 0.5);
    let f = m.f.clone();
    let xs = draws(DRAWS, seed, |st| {
        let mut out = [0.0];
        xsample(&f, &[y], lambda, gate, 0.01, st, &mut out)?;
        Ok(out[0])
    })?;
    let (lo, hi) = quadrature_domain(y, 1.0 / lambda);
    ks_check(
        "xsample",
        &xs,
        &|x| -softplus(2.0 * x) - 0.5 * x * x - (x - y).powi(2) / (2.0 * lambda),
        lo,
        hi,
        format!("y = {y}, lambda = {lambda}"),
    )
}

fn ysample_check(seed: u64) -> Result<Check> {
    let m = build_model(&logistic_model())?;
    let params = JointParams::new(&m.meta(), &m.x_star, 0.1 / 18.0, 1.0)?;
    let x = m.x_star[0] + 0.3;
    let f = m.f.clone();
    let p = params.clone();
    let ys = draws(DRAWS, seed, |st| {
        let mut out = [0.0];
        crate::composite::ysample(&f, &[x], &p, st, &mut out)?;
        Ok(out[0])
    })?;
    let eta = params.eta;
    let (lo, hi) = quadrature_domain(x, 1.0 / eta);
    ks_check("ysample", &ys, &|y| -softplus(2.0 * y) - 0.5 * y * y - (y - x).powi(2) / (2.0 * eta), lo, hi, format!("x = {x}, eta = {eta}"))
}

fn rgo_check(
    name: &str,
    rgo: SeparableRgo,
    lambda: f64,
    v: f64,
    log_density: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<Check> {
    let xs = draws(DRAWS, seed, |st| {
        let mut out = [0.0];
        rgo.sample(lambda, &[v], 0.0, st, &mut out)?;
        Ok(out[0])
    })?;
    ks_check(name, &xs, log_density, lo, hi, format!("v = {v}, lambda = {lambda}"))
}

fn wellcond_check(seed: u64) -> Result<Check> {
    let m = build_model(&logistic_model())?;
    let (f, xs_) = (m.f.clone(), m.x_star.clone());
    let cfg = ReductionConfig::default();
    let xs = draws(DRAWS, seed, |st| Ok(sample_wellconditioned(&f, &xs_, 0.01, &cfg, st)?.x[0]))?;
    let (lo, hi) = quadrature_domain(m.x_star[0], 1.0);
    ks_check("wellcond_end_to_end", &xs, &|x| -softplus(2.0 * x) - 0.5 * x * x, lo, hi, "eps = 0.01".into())
}

fn composite_check(seed: u64) -> Result<Check> {
    let m = build_model(&lasso_model())?;
    let problem = CompositeProblem::new(m.f.clone(), m.g.clone(), m.x_star.clone())?;
    let cfg = CompositeConfig { c_k: 1.0, ..CompositeConfig::default() };
    let xs = draws(DRAWS, seed, |st| Ok(composite_sample(&problem, 0.1, &cfg, st)?.x[0]))?;
    let (lo, hi) = quadrature_domain(m.x_star[0], 1.0);
    ks_check(
        "composite_end_to_end",
        &xs,
        &|x| -0.5 * (x - 1.0).powi(2) - x.abs(),
        lo,
        hi,
        "f = (x-1)^2/2, g = |x|, eps = 0.1, C_K = 1".into(),
    )
}

pub fn run(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        with_retry(seed, xsample_check)?,
        with_retry(seed, ysample_check)?,
        with_retry(seed, |s| {
            rgo_check(
                "truncated_gaussian_rgo",
                SeparableRgo::boxed(vec![-1.0], vec![1.0])?,
                1.0,
                5.0,
                &|x| -0.5 * (x - 5.0).powi(2),
                -1.0,
                1.0,
                s,
            )
        })?,
        with_retry(seed, |s| {
            let (lo, hi) = quadrature_domain(0.0, 2.0);
            rgo_check("l1_rgo", SeparableRgo::l1(vec![2.0]), 0.5, 1.0, &|x| -(x - 1.0).powi(2) - 2.0 * x.abs(), lo, hi, s)
        })?,
        with_retry(seed, wellcond_check)?,
        with_retry(seed, composite_check)?,
    ])
}
