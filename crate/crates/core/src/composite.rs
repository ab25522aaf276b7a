//! Composite sampling for `exp(-f - g)`: smooth `f` by first-order access,
//! `g` through its restricted Gaussian oracle.
//!
//! The sampler runs a Gibbs chain on the joint density
//! `exp(-f(y) - g(x) - |y - x|^2 / (2 eta) - eta L^2 |x - x*|^2 / 2)` and
//! corrects its `x`-marginal with a one-draw unbiased estimate of the
//! density ratio, accepted by rejection inside a high-probability ball.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{invalid, Error, Result};
use crate::linalg::{dist_sq, dot, norm_sq};
use crate::optimize::prox_grad_minimize;
use crate::oracle::{add_quadratic, combine_quadratics, shift_to_shared_min, FunctionOracle, ProblemMeta, RgoHandle, RgoSampler};
use crate::reduction::{alternate_sample, warm_start_composite, AlternateOutcome, ReductionConfig};
use crate::wellcond::metropolized_fallback;

/// Default multiplier in the joint-chain length.
pub const DEFAULT_CK: f64 = 100.0;
/// Multiplier from the mixing analysis, `2^26 * 100`.
pub const ANALYSIS_CK: f64 = 6_710_886_400.0;

/// `exp(-f - g)` with `x_star` minimizing `f + g`.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    pub f: FunctionOracle,
    pub g: RgoHandle,
    pub x_star: Vec<f64>,
}

impl CompositeProblem {
    pub fn new(f: FunctionOracle, g: RgoHandle, x_star: Vec<f64>) -> Result<Self> {
        if g.dim() != f.dim() || x_star.len() != f.dim() {
            return Err(invalid("composite problem dimension mismatch"));
        }
        if !f.provides_gradient() {
            return Err(Error::Unsupported("composite sampling needs gradients of f".into()));
        }
        Ok(Self { f, g, x_star })
    }
}

/// Tunables of the composite sampler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositeConfig {
    /// Multiplier `C_K` in the joint-chain length.
    pub c_k: f64,
    /// Rejection rounds before giving up with an anomaly.
    pub max_rounds: usize,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        Self { c_k: DEFAULT_CK, max_rounds: 64 }
    }
}

/// Step size, chain length and radii of the joint chain for failure
/// budget `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    pub eta: f64,
    pub iterations: usize,
    pub delta: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub dim: usize,
    /// `R_delta = 4 sqrt(d ln(16 kappa / delta) / mu)`.
    pub radius: f64,
    /// Ball around `x*` where the y-step is exact rejection sampling.
    pub region_radius: f64,
    /// Tolerance of the y-step fallback outside that ball.
    pub fallback_tol: f64,
    pub x_star: Vec<f64>,
}

impl JointParams {
    pub fn new(meta: &ProblemMeta, x_star: &[f64], delta: f64, c_k: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) || !(c_k > 0.0) {
            return Err(invalid(format!("need delta in (0,1) and C_K > 0, got {delta}, {c_k}")));
        }
        let l = meta.smoothness;
        let mu = meta.strong_convexity;
        let kappa = meta.kappa();
        let d = meta.dim as f64;
        let lg = (16.0 * kappa / delta).ln();
        let eta = 1.0 / (32.0 * l * kappa * d * lg);
        let mix_log = (d * (16.0 * kappa).ln() / (4.0 * delta)).ln().max(1.0);
        let k = (c_k / (eta * mu) * mix_log).ceil();
        if !k.is_finite() || k > 1e15 {
            return Err(invalid("joint-chain length overflows"));
        }
        let iterations = (k as usize).max(1);
        let radius = 4.0 * (d * lg / mu).sqrt();
        let region_radius = (kappa * d * lg).sqrt() * radius;
        let fallback_tol = delta / (2.0 * iterations as f64 * d * (d * kappa / delta).ln().max(1.0));
        Ok(Self {
            eta,
            iterations,
            delta,
            smoothness: l,
            strong_convexity: mu,
            dim: meta.dim,
            radius,
            region_radius,
            fallback_tol,
            x_star: x_star.to_vec(),
        })
    }

    /// `eta L <= 1`, `eta L^2 R^2 <= 1/2` and `400 d^2 eta <= R^2`.
    pub fn check_invariants(&self) -> Result<()> {
        let l = self.smoothness;
        let r2 = self.radius * self.radius;
        let d = self.dim as f64;
        let slack = 1.0 + 1e-12;
        if self.eta * l > slack || self.eta * l * l * r2 > 0.5 * slack || 400.0 * d * d * self.eta > r2 * slack {
            return Err(Error::Anomaly(format!("joint-chain invariants fail for eta={}, R={}", self.eta, self.radius)));
        }
        Ok(())
    }
}

/// Draws `y` from the density proportional to
/// `exp(-f(y) - |y - x|^2 / (2 eta))`: exact rejection from
/// `N(x - eta grad f(x), eta I)` inside the region ball, the Metropolized
/// fallback outside it.
pub fn ysample(f: &FunctionOracle, x: &[f64], params: &JointParams, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
    let eta = params.eta;
    let g = f.gradient_vec(x)?;
    state.diag.ysample_calls += 1;
    if dist_sq(x, &params.x_star).sqrt() > params.region_radius {
        state.diag.ysample_fallbacks += 1;
        let target = add_quadratic(f, x, 1.0 / eta)?;
        let center: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
        let y = metropolized_fallback(&target, &center, params.fallback_tol, state)?;
        out.copy_from_slice(&y);
        return Ok(());
    }
    let fx = f.value(x);
    let sd = eta.sqrt();
    let d = x.len();
    let mut step = vec![0.0; d];
    for _ in 0..1_000_000u32 {
        state.diag.ysample_rounds += 1;
        for i in 0..d {
            step[i] = -eta * g[i] + sd * state.rng.normal();
            out[i] = x[i] + step[i];
        }
        let log_acc = fx + dot(&g, &step) - f.value(out);
        if state.rng.uniform_open().ln() <= log_acc {
            return Ok(());
        }
    }
    Err(Error::Anomaly("y-step rejection exceeded 1e6 rounds".into()))
}

/// Runs the joint Gibbs chain for `params.iterations` rounds and returns
/// the final `x`. `f` and `g` must share the minimizer `params.x_star`.
pub fn sample_joint_dist(f: &FunctionOracle, g: &RgoHandle, params: &JointParams, state: &mut ChainState) -> Result<Vec<f64>> {
    let l = params.smoothness;
    let eta = params.eta;
    let d = params.dim;
    state.diag.joint_calls += 1;
    let mut x = g.sample_vec(1.0 / (l + eta * l * l), &params.x_star, 0.0, state)?;
    let mut y = vec![0.0; d];
    let ridge = 1.0 / (eta * l * l);
    for _ in 0..params.iterations {
        ysample(f, &x, params, state, &mut y)?;
        let (lam, v) = combine_quadratics(eta, &y, ridge, &params.x_star);
        g.sample(lam, &v, 0.0, state, &mut x)?;
    }
    Ok(x)
}

/// `ln theta` for the estimator of the density ratio between the target and
/// the joint chain's `x`-marginal, given a draw `y` from the y-step at `x`.
/// The `g` terms cancel, so only `f` is queried. The gradient term enters
/// with a minus sign: `E exp(-<grad, u> - (L + 1/eta)|u|^2/2)` carries
/// `exp(+eta |grad|^2 / (2 (1 + eta L)))`, which this cancels.
pub fn log_theta(f_x: f64, grad_x: &[f64], f_y: f64, x: &[f64], y: &[f64], params: &JointParams) -> f64 {
    let l = params.smoothness;
    let eta = params.eta;
    let d = params.dim as f64;
    let mut lin = 0.0;
    for i in 0..x.len() {
        lin += grad_x[i] * (y[i] - x[i]);
    }
    f_y - f_x - lin - 0.5 * l * dist_sq(y, x) - eta * norm_sq(grad_x) / (2.0 * (1.0 + eta * l))
        + 0.5 * d * (eta * l).ln_1p()
        + 0.5 * eta * l * l * dist_sq(x, &params.x_star)
}

/// Draws `y` at `x` and returns `(ln theta, y)`.
pub fn theta_estimator(f: &FunctionOracle, x: &[f64], params: &JointParams, state: &mut ChainState) -> Result<(f64, Vec<f64>)> {
    let mut y = vec![0.0; x.len()];
    ysample(f, x, params, state, &mut y)?;
    let fx = f.value(x);
    let gx = f.gradient_vec(x)?;
    let fy = f.value(&y);
    Ok((log_theta(fx, &gx, fy, x, &y, params), y))
}

/// Radius `4 sqrt(d ln(288 kappa / eps) / mu)` of the acceptance ball.
pub fn omega_radius(meta: &ProblemMeta, eps: f64) -> f64 {
    4.0 * (meta.dim as f64 * (288.0 * meta.kappa() / eps).ln() / meta.strong_convexity).sqrt()
}

/// Rejection loop over joint-chain draws for `f`, `g` sharing `x*`:
/// accept `x` in the ball with probability `theta / 4`.
pub fn composite_sample_shared_min(
    f: &FunctionOracle,
    g: &RgoHandle,
    params: &JointParams,
    eps: f64,
    cfg: &CompositeConfig,
    state: &mut ChainState,
) -> Result<Vec<f64>> {
    let meta = ProblemMeta::new(params.smoothness, params.strong_convexity, params.dim)?;
    let omega = omega_radius(&meta, eps);
    let log4 = 4f64.ln();
    for _ in 0..cfg.max_rounds {
        state.diag.estimator_rounds += 1;
        let x = sample_joint_dist(f, g, params, state)?;
        if dist_sq(&x, &params.x_star).sqrt() > omega {
            state.diag.omega_misses += 1;
            continue;
        }
        let tau = state.rng.uniform_open();
        let (lt, _) = theta_estimator(f, &x, params, state)?;
        if state.diag.estimator_rounds == 1 || lt > state.diag.max_log_theta {
            state.diag.max_log_theta = state.diag.max_log_theta.max(lt);
        }
        if lt > log4 + 1e-9 {
            warn!("density-ratio estimate {} exceeds 4 inside the acceptance ball", lt.exp());
        }
        if tau.ln() <= lt - log4 {
            return Ok(x);
        }
    }
    state.diag.estimator_round_cap_hits += 1;
    Err(Error::Anomaly(format!("composite rejection loop exceeded {} rounds", cfg.max_rounds)))
}

/// Result of [`composite_sample`].
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeOutcome {
    pub x: Vec<f64>,
    pub params: JointParams,
}

/// Samples `exp(-f - g)` to total variation `eps`.
pub fn composite_sample(problem: &CompositeProblem, eps: f64, cfg: &CompositeConfig, state: &mut ChainState) -> Result<CompositeOutcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    let (ft, gt) = shift_to_shared_min(&problem.f, &problem.g, &problem.x_star)?;
    let params = JointParams::new(&problem.f.meta(), &problem.x_star, eps / 18.0, cfg.c_k)?;
    params.check_invariants()?;
    let x = composite_sample_shared_min(&ft, &gt, &params, eps, cfg, state)?;
    Ok(CompositeOutcome { x, params })
}

/// RGO for `f + g` served by [`composite_sample`] on
/// `f + |x - v|^2 / (2 lambda)` with `g` as the composite part.
pub struct CompositeRgo {
    f: FunctionOracle,
    g: RgoHandle,
    cfg: CompositeConfig,
}

impl CompositeRgo {
    pub fn new(f: FunctionOracle, g: RgoHandle, cfg: CompositeConfig) -> Self {
        Self { f, g, cfg }
    }
}

impl RgoSampler for CompositeRgo {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn sample(&self, lambda: f64, center: &[f64], tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
        let inner = add_quadratic(&self.f, center, 1.0 / lambda)?;
        let tol = 1e-9 * inner.meta().smoothness.sqrt();
        let opt = prox_grad_minimize(&inner, &self.g, center, tol, 100_000)?;
        state.diag.optimizer_iterations += opt.iterations as u64;
        let problem = CompositeProblem::new(inner, self.g.clone(), opt.x)?;
        let res = composite_sample(&problem, tv_tol, &self.cfg, state)?;
        out.copy_from_slice(&res.x);
        state.diag.tv_budget_spent += tv_tol;
        Ok(())
    }

    fn exact(&self) -> bool {
        false
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        self.g.value(x).map(|g| g + self.f.value(x))
    }
}

/// Accelerated composite sampler: the reduction at `eta = 1/L` on `f + g`,
/// each oracle call a composite sample of a subproblem with condition
/// number at most 2.
pub fn accelerated_composite_sample(
    problem: &CompositeProblem,
    eps: f64,
    cfg: &CompositeConfig,
    red: &ReductionConfig,
    state: &mut ChainState,
) -> Result<AlternateOutcome> {
    let m = problem.f.meta();
    let (_, gt) = shift_to_shared_min(&problem.f, &problem.g, &problem.x_star)?;
    let start = warm_start_composite(&problem.x_star, m.smoothness, m.kappa(), &gt, state)?;
    let eta = 1.0 / m.smoothness;
    let rgo = RgoHandle::new(CompositeRgo::new(problem.f.clone(), problem.g.clone(), *cfg), eta);
    alternate_sample(&rgo, eta, m.strong_convexity, &start, eps, red, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ClosureFunction;
    use crate::rgo::SeparableRgo;

    fn quad1(a: f64, m: f64) -> FunctionOracle {
        FunctionOracle::new(
            ClosureFunction::new(1, move |x: &[f64]| 0.5 * a * (x[0] - m).powi(2), move |x: &[f64], g: &mut [f64]| g[0] = a * (x[0] - m)),
            ProblemMeta::new(a, a, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn joint_params_invariants_hold() {
        for &(l, mu, d, delta) in &[(1.0, 1.0, 1, 0.01), (10.0, 1.0, 3, 1e-4), (2.0, 0.5, 20, 0.1)] {
            let m = ProblemMeta::new(l, mu, d).unwrap();
            let p = JointParams::new(&m, &vec![0.0; d], delta, 1.0).unwrap();
            p.check_invariants().unwrap();
            assert!((p.eta * l * l * p.radius * p.radius - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_matches_radius_at_eps_over_18() {
        let m = ProblemMeta::new(3.0, 1.0, 2).unwrap();
        let p = JointParams::new(&m, &[0.0, 0.0], 0.05 / 18.0, 1.0).unwrap();
        assert!((omega_radius(&m, 0.05) - p.radius).abs() < 1e-12);
    }

    #[test]
    fn log_theta_is_bounded_by_log4_near_minimizer() {
        let f = quad1(1.0, 0.0);
        let m = f.meta();
        let p = JointParams::new(&m, &[0.0], 0.01, 1.0).unwrap();
        let mut st = ChainState::new(1, 0);
        for &x in &[-1.0, 0.0, 0.5, 2.0] {
            for _ in 0..50 {
                let (lt, _) = theta_estimator(&f, &[x], &p, &mut st).unwrap();
                assert!(lt <= 4f64.ln());
            }
        }
    }

    #[test]
    fn lasso_1d_moments() {
        // exp(-(x-1)^2/2 - |x|) is the l1-tilted Gaussian with v = 1, lambda = 1.
        let f = quad1(1.0, 1.0);
        let g = RgoHandle::new(SeparableRgo::l1(vec![1.0]), f64::INFINITY);
        let prob = CompositeProblem::new(f, g, vec![0.0]).unwrap();
        let cfg = CompositeConfig { c_k: 0.5, max_rounds: 64 };
        let n = 600;
        let mut s = 0.0;
        for c in 0..n {
            let mut st = ChainState::new(2, c);
            s += composite_sample(&prob, 0.1, &cfg, &mut st).unwrap().x[0];
        }
        // Mean frozen from high-precision quadrature of the target.
        let mean = s / n as f64;
        assert!((mean - 0.503_222_564_564_713).abs() < 4.0 * 0.75 / (n as f64).sqrt(), "{mean}");
    }
}
