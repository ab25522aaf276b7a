//! Subsampled Metropolized random walk for `exp(-F)` with
//! `F = (1/n) sum_i f_i`, and its accelerated wrapper.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{invalid, Result};
use crate::gaussian::{sample_gaussian, strongly_logconcave_radius, RngStream};
use crate::optimize::{svrg_minimize, SvrgConfig};
use crate::oracle::{FiniteSumOracle, ProblemMeta, RgoHandle, RgoSampler};
use crate::reduction::{alternate_sample, warm_start_gaussian, AlternateOutcome, ReductionConfig};

/// Parameters of one run of the subsampled walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrwParams {
    pub step: f64,
    pub inclusion: f64,
    pub iterations: usize,
    /// Largest accepted subset size, `floor(2 p n)`.
    pub subset_cap: usize,
}

/// Multipliers on the step size, iteration count and radius formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiniteSumConfig {
    pub step_coef: f64,
    pub iter_coef: f64,
    pub radius_coef: f64,
}

impl Default for FiniteSumConfig {
    fn default() -> Self {
        Self { step_coef: 1.0, iter_coef: 1.0, radius_coef: 1.0 }
    }
}

/// `min(1, 5 ln(12 K / delta) / n)`.
pub fn inclusion_probability(n: usize, iterations: usize, delta: f64) -> f64 {
    (5.0 * (12.0 * iterations as f64 / delta).ln() / n as f64).min(1.0)
}

/// `ln(n kappa d / eps)` floored at 1.
fn log_factor(n: usize, meta: &ProblemMeta, eps: f64) -> f64 {
    (n as f64 * meta.kappa() * meta.dim as f64 / eps).ln().max(1.0)
}

impl MrwParams {
    /// Builds parameters from a step size and iteration count, deriving the
    /// inclusion probability for failure budget `delta`.
    pub fn new(n: usize, step: f64, iterations: usize, delta: f64) -> Result<Self> {
        if !(step > 0.0) || iterations == 0 || !(delta > 0.0 && delta < 1.0) || n == 0 {
            return Err(invalid("walk needs step > 0, iterations > 0, delta in (0,1), n > 0"));
        }
        let p = inclusion_probability(n, iterations, delta);
        Ok(Self { step, inclusion: p, iterations, subset_cap: (2.0 * p * n as f64).floor() as usize })
    }

    /// Default schedule at total-variation target `eps`:
    /// `1/h = c_h L kappa d log^2`, `K = c_K kappa^2 d log^3`, with
    /// `log = ln(n kappa d / eps)` and failure budget `eps / 2`.
    pub fn for_target(meta: &ProblemMeta, n: usize, eps: f64, cfg: &FiniteSumConfig) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0,1), got {eps}")));
        }
        let lg = log_factor(n, meta, eps);
        let kappa = meta.kappa();
        let d = meta.dim as f64;
        let step = 1.0 / (cfg.step_coef * meta.smoothness * kappa * d * lg * lg);
        let k = (cfg.iter_coef * kappa * kappa * d * lg.powi(3)).ceil() as usize;
        Self::new(n, step, k.max(1), eps / 2.0)
    }

    /// Radius of the high-probability region used in the analysis,
    /// `c_R sqrt(d ln(kappa / eps) / mu)` (reported, not used by the walk).
    pub fn region_radius(meta: &ProblemMeta, eps: f64, cfg: &FiniteSumConfig) -> f64 {
        let lg = (meta.kappa() / eps).ln().max(1.0);
        cfg.radius_coef * (meta.dim as f64 * lg / meta.strong_convexity).sqrt()
    }
}

/// Explicit constants for the three per-iteration conditions under which
/// the subsampled filter agrees with the exact one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConditions {
    pub c_x: f64,
    pub c_xi: f64,
    pub r_x: f64,
}

impl FilterConditions {
    /// Constants from Gaussian tail bounds so that each condition fails with
    /// probability at most `delta / (4K)` per iteration (the radius is
    /// for a start of warmness `kappa^(d/2)`).
    pub fn from_tails(meta: &ProblemMeta, n: usize, iterations: usize, delta: f64) -> Self {
        let d = meta.dim as f64;
        let t = 4.0 * iterations as f64 / delta;
        let c_xi = 1.0 + (2.0 * t.ln() / d).sqrt();
        let c_x = (2.0 * (n as f64 * t).ln()).sqrt();
        let log_tail = t.ln() + 0.5 * d * meta.kappa().ln();
        let r_x = strongly_logconcave_radius(meta.dim, meta.strong_convexity, (-log_tail).exp().max(f64::MIN_POSITIVE));
        Self { c_x, c_xi, r_x }
    }

    /// Largest step for which the conditions force the filter band:
    /// `1 / (98 C_x^2 L^2 R_x^2 + 7 L C_xi^2 d)`.
    pub fn step_bound(&self, smoothness: f64, dim: usize) -> f64 {
        1.0 / (98.0 * (self.c_x * smoothness * self.r_x).powi(2) + 7.0 * smoothness * self.c_xi * self.c_xi * dim as f64)
    }

    /// Whether the three conditions hold at `x` for noise `xi`.
    pub fn hold(&self, fs: &FiniteSumOracle, x: &[f64], x_star: &[f64], xi: &[f64]) -> bool {
        let d = x.len();
        if crate::linalg::dist_sq(x, x_star).sqrt() > self.r_x {
            return false;
        }
        if crate::linalg::norm(xi) > self.c_xi * (d as f64).sqrt() {
            return false;
        }
        let mut g = vec![0.0; d];
        for i in 0..fs.n() {
            fs.summand_gradient(i, x, &mut g);
            if crate::linalg::dot(&g, xi).abs() > self.c_x * crate::linalg::norm(&g) {
                return false;
            }
        }
        true
    }
}

/// Step size that keeps the walk in the agreement regime for `iterations`
/// steps with failure budget `delta`.
pub fn safe_step(meta: &ProblemMeta, n: usize, iterations: usize, delta: f64) -> f64 {
    FilterConditions::from_tails(meta, n, iterations, delta).step_bound(meta.smoothness, meta.dim)
}

/// Probability that the exact filter accepts a move with
/// `ln ratio = F(x) - F(y)`.
pub fn exact_filter_probability(log_ratio: f64) -> f64 {
    let s = 0.5 * log_ratio;
    let lo = (0.75f64).ln();
    let hi = (4.0f64 / 3.0).ln();
    if s > hi {
        1.0
    } else if s >= lo {
        0.75 * s.exp()
    } else {
        log_ratio.exp()
    }
}

/// Includes each index independently with probability `p`.
pub fn draw_subset(n: usize, p: f64, rng: &mut RngStream, out: &mut Vec<usize>) {
    out.clear();
    for i in 0..n {
        if rng.uniform() < p {
            out.push(i);
        }
    }
}

/// Unbiased estimate of `sqrt(exp(F(x) - F(y)))` from the summands in
/// `subset`: the product of `(1/p)(sqrt(exp((f_i(x) - f_i(y))/n)) - 1) + 1`.
///
/// Returns `(gamma, nonpositive)`, where `nonpositive` flags a factor
/// `<= 0` (possible only outside the agreement regime).
pub fn gamma_estimator(fs: &FiniteSumOracle, x: &[f64], y: &[f64], subset: &[usize], p: f64) -> (f64, bool) {
    let n = fs.n() as f64;
    let mut log_abs = 0.0;
    let mut negative = false;
    let mut nonpositive = false;
    for &i in subset {
        let t = (fs.summand_value(i, x) - fs.summand_value(i, y)) / (2.0 * n);
        let factor = 1.0 + t.exp_m1() / p;
        if factor <= 0.0 {
            nonpositive = true;
            if factor == 0.0 {
                return (0.0, true);
            }
            negative = !negative;
        }
        log_abs += factor.abs().ln();
    }
    let g = log_abs.exp();
    (if negative { -g } else { g }, nonpositive)
}

/// Outcome of one filter step of the subsampled walk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterDecision {
    pub accept: bool,
    pub gamma: f64,
    pub subset_size: usize,
    pub capped: bool,
    pub guard: bool,
    pub tau: f64,
}

fn subsampled_filter(
    fs: &FiniteSumOracle,
    x: &[f64],
    y: &[f64],
    params: &MrwParams,
    subset: &mut Vec<usize>,
    state: &mut ChainState,
) -> FilterDecision {
    draw_subset(fs.n(), params.inclusion, &mut state.rng, subset);
    let capped = subset.len() > params.subset_cap;
    let (gamma, guard) = if capped { (f64::NAN, false) } else { gamma_estimator(fs, x, y, subset, params.inclusion) };
    let tau = state.rng.uniform();
    let accept = !capped && !guard && tau <= 0.75 * gamma;
    FilterDecision { accept, gamma, subset_size: subset.len(), capped, guard, tau }
}

/// Runs the subsampled walk for `params.iterations` steps from `x0`.
///
/// Per step: `y = x + sqrt(2h) xi`, a Bernoulli(`p`) subset `S`, and
/// acceptance iff `tau <= (3/4) gamma` and `|S| <= floor(2pn)`. Costs
/// `2|S|` summand value queries per uncapped step.
pub fn finitesum_mrw(fs: &FiniteSumOracle, params: &MrwParams, x0: &[f64], state: &mut ChainState) -> Result<Vec<f64>> {
    if x0.len() != fs.dim() {
        return Err(invalid("start dimension mismatch"));
    }
    let d = fs.dim();
    let sd = (2.0 * params.step).sqrt();
    let mut x = x0.to_vec();
    let mut y = vec![0.0; d];
    let mut subset = Vec::with_capacity(params.subset_cap + 1);
    let mut guard_hits = 0u64;
    for _ in 0..params.iterations {
        for i in 0..d {
            y[i] = x[i] + sd * state.rng.normal();
        }
        let dec = subsampled_filter(fs, &x, &y, params, &mut subset, state);
        state.diag.mrw_steps += 1;
        if dec.capped {
            state.diag.mrw_capped += 1;
        }
        if dec.guard {
            guard_hits += 1;
        }
        if dec.accept {
            std::mem::swap(&mut x, &mut y);
            state.diag.mrw_accepts += 1;
        }
    }
    if guard_hits > 0 {
        warn!("subsampled filter saw {guard_hits} nonpositive factors; the step size is outside the agreement regime");
        state.diag.mrw_guard_rejections += guard_hits;
    }
    Ok(x)
}

/// One step of the exact-filter walk on `F` (full evaluations). `fx` caches
/// `F(x)` and is updated on acceptance. Returns whether the move was taken.
pub fn exact_filter_step(fs: &FiniteSumOracle, x: &mut Vec<f64>, fx: &mut f64, step: f64, rng: &mut RngStream) -> bool {
    let d = x.len();
    let sd = (2.0 * step).sqrt();
    let y: Vec<f64> = (0..d).map(|i| x[i] + sd * rng.normal()).collect();
    let fy = fs.full_value(&y);
    let alpha = exact_filter_probability(*fx - fy);
    if rng.uniform() <= alpha {
        *x = y;
        *fx = fy;
        true
    } else {
        false
    }
}

/// `iterations` steps of the exact-filter walk from `x0`.
pub fn exact_filter_walk(fs: &FiniteSumOracle, x0: &[f64], step: f64, iterations: usize, state: &mut ChainState) -> Vec<f64> {
    let mut x = x0.to_vec();
    let mut fx = fs.full_value(&x);
    for _ in 0..iterations {
        state.diag.mrw_steps += 1;
        if exact_filter_step(fs, &mut x, &mut fx, step, &mut state.rng) {
            state.diag.mrw_accepts += 1;
        }
    }
    x
}

/// Result of [`sample_finitesum`].
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSumOutcome {
    pub x: Vec<f64>,
    pub params: MrwParams,
    pub region_radius: f64,
}

/// Samples `exp(-F)` to total variation `eps` given the minimizer `x_star`:
/// start at `N(x_star, I / L)` and run the subsampled walk.
pub fn sample_finitesum(
    fs: &FiniteSumOracle,
    x_star: &[f64],
    eps: f64,
    cfg: &FiniteSumConfig,
    state: &mut ChainState,
) -> Result<FiniteSumOutcome> {
    let m = fs.meta();
    if x_star.len() != m.dim {
        return Err(invalid("x_star dimension mismatch"));
    }
    let params = MrwParams::for_target(&m, fs.n(), eps, cfg)?;
    let start = warm_start_gaussian(x_star, m.smoothness, m.kappa(), state);
    let x = finitesum_mrw(fs, &params, &start.x, state)?;
    Ok(FiniteSumOutcome { x, params, region_radius: MrwParams::region_radius(&m, eps, cfg) })
}

/// Outcome of a coupled run of the subsampled and exact-filter walks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupledRun {
    /// First step at which the two walks made different decisions.
    pub diverged_at: Option<usize>,
    pub capped_steps: usize,
    pub out_of_band_steps: usize,
}

/// Acceptance probability of the subsampled filter at `(x, y)`,
/// `(3/4) E[gamma; |S| <= cap]`, by dynamic programming over subset sizes.
pub fn subsampled_accept_probability(fs: &FiniteSumOracle, x: &[f64], y: &[f64], params: &MrwParams) -> f64 {
    let n = fs.n();
    let p = params.inclusion;
    let cap = params.subset_cap.min(n);
    let mut poly = vec![0.0; cap + 1];
    poly[0] = 1.0;
    for i in 0..n {
        let t = (fs.summand_value(i, x) - fs.summand_value(i, y)) / (2.0 * n as f64);
        let c = p * (1.0 + t.exp_m1() / p);
        for k in (0..=cap).rev() {
            let carry = if k > 0 { poly[k - 1] * c } else { 0.0 };
            poly[k] = poly[k] * (1.0 - p) + carry;
        }
    }
    (0.75 * poly.iter().sum::<f64>()).clamp(0.0, 1.0)
}

/// Runs the subsampled walk and the exact-filter walk from the same start,
/// sharing proposal noise. The exact walk's uniform is a measure-preserving
/// function of the subsampled walk's `(S, tau)`, which couples the two
/// accept decisions maximally. Stops at the first disagreement.
pub fn coupled_walks(fs: &FiniteSumOracle, params: &MrwParams, x0: &[f64], state: &mut ChainState) -> CoupledRun {
    let d = fs.dim();
    let sd = (2.0 * params.step).sqrt();
    let mut x = x0.to_vec();
    let mut fx = fs.full_value(&x);
    let mut y = vec![0.0; d];
    let mut subset = Vec::new();
    let mut run = CoupledRun { diverged_at: None, capped_steps: 0, out_of_band_steps: 0 };
    let lo = (0.75f64).ln();
    let hi = (4.0f64 / 3.0).ln();
    for k in 0..params.iterations {
        for i in 0..d {
            y[i] = x[i] + sd * state.rng.normal();
        }
        let dec = subsampled_filter(fs, &x, &y, params, &mut subset, state);
        let fy = fs.full_value(&y);
        let half_log = 0.5 * (fx - fy);
        if half_log < lo || half_log > hi {
            run.out_of_band_steps += 1;
        }
        if dec.capped {
            run.capped_steps += 1;
        }
        let alpha = subsampled_accept_probability(fs, &x, &y, params);
        let alpha_ref = exact_filter_probability(fx - fy);
        let thresh = (0.75 * dec.gamma).clamp(0.0, 1.0);
        let u = if dec.accept {
            if thresh > 0.0 {
                alpha * dec.tau / thresh
            } else {
                0.0
            }
        } else if dec.capped || dec.guard || thresh >= 1.0 {
            alpha + (1.0 - alpha) * dec.tau
        } else {
            alpha + (1.0 - alpha) * (dec.tau - thresh) / (1.0 - thresh)
        };
        let ref_accept = u <= alpha_ref;
        if ref_accept != dec.accept {
            run.diverged_at = Some(k);
            return run;
        }
        if dec.accept {
            std::mem::swap(&mut x, &mut y);
            fx = fy;
        }
    }
    run
}

/// Random-walk RGO for a finite sum: ridge every summand, locate the
/// subproblem minimizer with SVRG, then run the subsampled walk.
pub struct FiniteSumRgo {
    fs: FiniteSumOracle,
    cfg: FiniteSumConfig,
    svrg: SvrgConfig,
}

impl FiniteSumRgo {
    pub fn new(fs: FiniteSumOracle, cfg: FiniteSumConfig, svrg: SvrgConfig) -> Self {
        Self { fs, cfg, svrg }
    }
}

impl RgoSampler for FiniteSumRgo {
    fn dim(&self) -> usize {
        self.fs.dim()
    }

    fn sample(&self, lambda: f64, center: &[f64], tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
        let sub = self.fs.with_ridge(center, 1.0 / lambda)?;
        let m = sub.meta();
        let svrg = SvrgConfig { tol: 0.01 * m.strong_convexity / m.smoothness.sqrt(), ..self.svrg };
        let opt = svrg_minimize(&sub, center, &svrg, &mut state.rng)?;
        state.diag.optimizer_iterations += opt.result.iterations as u64;
        let params = MrwParams::for_target(&m, sub.n(), tv_tol, &self.cfg)?;
        let mut x0 = vec![0.0; m.dim];
        sample_gaussian(&opt.result.x, 1.0 / m.smoothness, &mut state.rng, &mut x0);
        let x = finitesum_mrw(&sub, &params, &x0, state)?;
        out.copy_from_slice(&x);
        state.diag.tv_budget_spent += tv_tol;
        Ok(())
    }

    fn exact(&self) -> bool {
        false
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        Some(self.fs.full_value(x))
    }
}

/// Step `eta = max(1/L, sqrt(n / (L^2 d log^3(n kappa d / eps))))` of the
/// accelerated finite-sum sampler.
pub fn accelerated_eta(meta: &ProblemMeta, n: usize, eps: f64) -> f64 {
    let lg = log_factor(n, meta, eps);
    let l = meta.smoothness;
    (1.0 / l).max((n as f64 / (l * l * meta.dim as f64 * lg.powi(3))).sqrt())
}

/// Accelerated finite-sum sampler: SVRG for `x*`, a Gaussian warm start,
/// and the reduction with [`FiniteSumRgo`] as the oracle.
pub fn accelerated_finitesum_sample(
    fs: &FiniteSumOracle,
    eps: f64,
    cfg: &FiniteSumConfig,
    svrg: &SvrgConfig,
    red: &ReductionConfig,
    state: &mut ChainState,
) -> Result<AlternateOutcome> {
    let m = fs.meta();
    let opt = svrg_minimize(fs, &vec![0.0; m.dim], svrg, &mut state.rng)?.result.require_converged()?;
    state.diag.optimizer_iterations += opt.iterations as u64;
    let eta = accelerated_eta(&m, fs.n(), eps);
    let rgo = RgoHandle::new(FiniteSumRgo::new(fs.clone(), *cfg, *svrg), eta);
    let start = warm_start_gaussian(&opt.x, m.smoothness, m.kappa(), state);
    alternate_sample(&rgo, eta, m.strong_convexity, &start, eps, red, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FiniteSumFunction;

    struct Shifted {
        centers: Vec<f64>,
    }
    impl FiniteSumFunction for Shifted {
        fn n(&self) -> usize {
            self.centers.len()
        }
        fn dim(&self) -> usize {
            1
        }
        fn summand_value(&self, i: usize, x: &[f64]) -> f64 {
            0.5 * (x[0] - self.centers[i]).powi(2)
        }
        fn summand_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] - self.centers[i];
        }
    }

    fn shifted(n: usize) -> FiniteSumOracle {
        let centers = (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * 0.5).collect();
        FiniteSumOracle::new(Shifted { centers }, ProblemMeta::new(1.0, 1.0, 1).unwrap()).unwrap()
    }

    #[test]
    fn exact_filter_cases() {
        let r = |s: f64| 2.0 * s.ln();
        assert_eq!(exact_filter_probability(r(1.5)), 1.0);
        assert!((exact_filter_probability(r(1.0)) - 0.75).abs() < 1e-15);
        assert!((exact_filter_probability(r(0.5)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn one_summand_gamma_is_exact_middle_case() {
        let fs = shifted(1);
        let (g, bad) = gamma_estimator(&fs, &[0.3], &[0.1], &[0], 1.0);
        let expected = ((0.5 * 0.09 - 0.5 * 0.01) / 2.0f64).exp();
        assert!(!bad);
        assert!((g - expected).abs() < 1e-15);
    }

    #[test]
    fn dp_acceptance_matches_enumeration() {
        let fs = shifted(6);
        let params = MrwParams { step: 0.01, inclusion: 0.3, iterations: 1, subset_cap: 3 };
        let (x, y) = ([0.4], [0.1]);
        let mut total = 0.0;
        for mask in 0u32..64 {
            let s: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
            if s.len() > 3 {
                continue;
            }
            let w = 0.3f64.powi(s.len() as i32) * 0.7f64.powi(6 - s.len() as i32);
            total += w * gamma_estimator(&fs, &x, &y, &s, 0.3).0;
        }
        let dp = subsampled_accept_probability(&fs, &x, &y, &params);
        assert!((dp - 0.75 * total).abs() < 1e-14);
    }

    #[test]
    fn walk_queries_stay_within_cap() {
        let fs = shifted(40);
        let params = MrwParams::new(40, 0.01, 200, 0.1).unwrap();
        let mut st = ChainState::new(1, 0);
        finitesum_mrw(&fs, &params, &[0.0], &mut st).unwrap();
        let per_iter = fs.tally().values as f64 / 200.0;
        assert!(per_iter <= 4.0 * params.inclusion * 40.0);
    }

    #[test]
    fn shifted_quadratics_moments() {
        // F = mean of (x - c_i)^2 / 2 is N(mean(c), 1); mean(c) = 0.
        let fs = shifted(5);
        let cfg = FiniteSumConfig { step_coef: 4.0, iter_coef: 16.0, radius_coef: 1.0 };
        let n = 1500;
        let (mut s, mut s2) = (0.0, 0.0);
        for c in 0..n {
            let mut st = ChainState::new(8, c);
            let out = sample_finitesum(&fs, &[0.0], 0.1, &cfg, &mut st).unwrap();
            s += out.x[0];
            s2 += out.x[0] * out.x[0];
        }
        let m = s / n as f64;
        assert!(m.abs() < 3.5 / (n as f64).sqrt());
        assert!((s2 / n as f64 - m * m - 1.0).abs() < 0.12);
    }

    #[test]
    fn safe_step_is_below_default_step() {
        let m = ProblemMeta::new(2.0, 1.0, 3).unwrap();
        let safe = safe_step(&m, 10, 1000, 0.1);
        let dflt = MrwParams::for_target(&m, 10, 0.1, &FiniteSumConfig::default()).unwrap().step;
        assert!(safe > 0.0 && safe < dflt);
    }
}
