//! Well-conditioned sampling: an exact rejection RGO for smooth `f`, its
//! Metropolized fallback, and the zeroth-order variant.

use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{invalid, Error, Result};
use crate::finitesum::exact_filter_walk;
use crate::gaussian::sample_gaussian;
use crate::linalg::{dot, norm};
use crate::optimize::{agd_minimize, finite_difference_oracle};
use crate::oracle::{add_quadratic, FiniteSumOracle, FunctionOracle, ProblemMeta, RgoHandle, RgoSampler};
use crate::reduction::{alternate_sample, warm_start_gaussian, AlternateOutcome, ReductionConfig};

const MAX_REJECTION_ROUNDS: u64 = 1_000_000;

/// `max(ln kappa, 1)`; keeps the step size and gate finite at `kappa = 1`.
pub fn log_kappa_floor(kappa: f64) -> f64 {
    kappa.ln().max(1.0)
}

/// Step size `1 / (8 L d ln kappa)` of the rejection RGO.
pub fn xsample_eta(meta: &ProblemMeta) -> f64 {
    1.0 / (8.0 * meta.smoothness * meta.dim as f64 * log_kappa_floor(meta.kappa()))
}

/// Gradient gate `3 sqrt(L) d ln kappa` above which the fallback is used.
pub fn xsample_gate(meta: &ProblemMeta) -> f64 {
    3.0 * meta.smoothness.sqrt() * meta.dim as f64 * log_kappa_floor(meta.kappa())
}

/// Step count `ceil(10 d ln(max(d, 2) / tol))` of the fallback chain.
pub fn fallback_steps(dim: usize, tv_tol: f64) -> usize {
    let d = dim as f64;
    (10.0 * d * (d.max(2.0) / tv_tol).ln()).ceil().max(1.0) as usize
}

/// Metropolis-adjusted Langevin chain on `target`, started from
/// `N(start_center, I / L_target)` with step `0.1 / (L_target d)`.
///
/// Charges `tv_tol` to the chain's total-variation budget.
pub fn metropolized_fallback(target: &FunctionOracle, start_center: &[f64], tv_tol: f64, state: &mut ChainState) -> Result<Vec<f64>> {
    if !(tv_tol > 0.0 && tv_tol < 1.0) {
        return Err(invalid(format!("fallback tolerance must lie in (0,1), got {tv_tol}")));
    }
    let m = target.meta();
    let d = m.dim;
    let h = 0.1 / (m.smoothness * d as f64);
    let steps = fallback_steps(d, tv_tol);
    let mut x = vec![0.0; d];
    sample_gaussian(start_center, 1.0 / m.smoothness, &mut state.rng, &mut x);
    let mut vx = target.value(&x);
    let mut gx = target.gradient_vec(&x)?;
    let mut xp = vec![0.0; d];
    let mut gp = vec![0.0; d];
    let sd = (2.0 * h).sqrt();
    state.diag.fallback_calls += 1;
    for _ in 0..steps {
        for i in 0..d {
            xp[i] = x[i] - h * gx[i] + sd * state.rng.normal();
        }
        let vp = target.value(&xp);
        target.gradient(&xp, &mut gp)?;
        let mut fwd = 0.0;
        let mut bwd = 0.0;
        for i in 0..d {
            let a = xp[i] - x[i] + h * gx[i];
            let b = x[i] - xp[i] + h * gp[i];
            fwd += a * a;
            bwd += b * b;
        }
        let log_alpha = -vp + vx - bwd / (4.0 * h) + fwd / (4.0 * h);
        state.diag.fallback_steps += 1;
        if state.rng.uniform_open().ln() <= log_alpha {
            std::mem::swap(&mut x, &mut xp);
            std::mem::swap(&mut gx, &mut gp);
            vx = vp;
            state.diag.fallback_accepts += 1;
        }
    }
    state.diag.tv_budget_spent += tv_tol;
    Ok(x)
}

/// One RGO call for smooth `f`: draws from the density proportional to
/// `exp(-f(x) - |x - y|^2 / (2 lambda))`.
///
/// Inside the gradient gate this is exact rejection sampling from
/// `N(y - lambda grad f(y), lambda I)`; outside it falls back to
/// [`metropolized_fallback`] at tolerance `tv_tol`.
pub fn xsample(f: &FunctionOracle, y: &[f64], lambda: f64, gate: f64, tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
    let d = f.dim();
    let g = f.gradient_vec(y)?;
    state.diag.xsample_calls += 1;
    if norm(&g) > gate {
        state.diag.gate_failures += 1;
        let target = add_quadratic(f, y, 1.0 / lambda)?;
        let center: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - lambda * gi).collect();
        let x = metropolized_fallback(&target, &center, tv_tol, state)?;
        out.copy_from_slice(&x);
        return Ok(());
    }
    let fy = f.value(y);
    let sd = lambda.sqrt();
    let mut step = vec![0.0; d];
    for _ in 0..MAX_REJECTION_ROUNDS {
        state.diag.xsample_rounds += 1;
        for i in 0..d {
            step[i] = -lambda * g[i] + sd * state.rng.normal();
            out[i] = y[i] + step[i];
        }
        let log_acc = fy + dot(&g, &step) - f.value(out);
        if state.rng.uniform_open().ln() <= log_acc {
            return Ok(());
        }
    }
    Err(Error::Anomaly(format!("rejection RGO exceeded {MAX_REJECTION_ROUNDS} rounds")))
}

/// [`xsample`] packaged as an approximate RGO for `f`.
pub struct XSampleRgo {
    f: FunctionOracle,
    gate: f64,
}

impl XSampleRgo {
    pub fn new(f: FunctionOracle) -> Result<Self> {
        if !f.provides_gradient() {
            return Err(Error::Unsupported("the rejection RGO needs gradients".into()));
        }
        let gate = xsample_gate(&f.meta());
        Ok(Self { f, gate })
    }
}

impl RgoSampler for XSampleRgo {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn sample(&self, lambda: f64, center: &[f64], tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
        xsample(&self.f, center, lambda, self.gate, tv_tol, state, out)
    }
    fn exact(&self) -> bool {
        false
    }
    fn value(&self, x: &[f64]) -> Option<f64> {
        Some(self.f.value(x))
    }
}

/// Samples `exp(-f)` for `L`-smooth, `mu`-strongly convex `f` with
/// minimizer `x_star`, to total variation `eps`.
pub fn sample_wellconditioned(
    f: &FunctionOracle,
    x_star: &[f64],
    eps: f64,
    cfg: &ReductionConfig,
    state: &mut ChainState,
) -> Result<AlternateOutcome> {
    let m = f.meta();
    if x_star.len() != m.dim {
        return Err(invalid("x_star dimension mismatch"));
    }
    let eta = xsample_eta(&m);
    let rgo = RgoHandle::new(XSampleRgo::new(f.clone())?, eta);
    let start = warm_start_gaussian(x_star, m.smoothness, m.kappa(), state);
    alternate_sample(&rgo, eta, m.strong_convexity, &start, eps, cfg, state)
}

/// Constants of the zeroth-order inner walk: step `c_h / (L kappa d)` and
/// `c_k kappa^2 d ln(kappa d / tol)` iterations on each subproblem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZerothConfig {
    pub step_coef: f64,
    pub iter_coef: f64,
}

impl Default for ZerothConfig {
    fn default() -> Self {
        Self { step_coef: 0.5, iter_coef: 4.0 }
    }
}

/// RGO for `f` from value queries only: finite-difference AGD locates the
/// subproblem minimizer, then an exact-filter random walk samples it.
pub struct ZerothRgo {
    f: FunctionOracle,
    cfg: ZerothConfig,
}

impl ZerothRgo {
    pub fn new(f: FunctionOracle, cfg: ZerothConfig) -> Self {
        Self { f, cfg }
    }
}

impl RgoSampler for ZerothRgo {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn sample(&self, lambda: f64, center: &[f64], tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
        let sub = add_quadratic(&self.f, center, 1.0 / lambda)?;
        let m = sub.meta();
        let fd = finite_difference_oracle(&sub)?;
        let tol = 0.01 * m.strong_convexity / m.smoothness.sqrt();
        let opt = agd_minimize(&fd, center, tol, 10_000)?;
        state.diag.optimizer_iterations += opt.iterations as u64;
        let kappa = m.kappa();
        let d = m.dim as f64;
        let h = self.cfg.step_coef / (m.smoothness * kappa * d);
        let k = (self.cfg.iter_coef * kappa * kappa * d * ((kappa * d).max(2.0) / tv_tol).ln()).ceil() as usize;
        let mut x0 = vec![0.0; m.dim];
        sample_gaussian(&opt.x, 1.0 / m.smoothness, &mut state.rng, &mut x0);
        let single = FiniteSumOracle::single(&sub)?;
        let x = exact_filter_walk(&single, &x0, h, k, state);
        out.copy_from_slice(&x);
        state.diag.tv_budget_spent += tv_tol;
        Ok(())
    }

    fn exact(&self) -> bool {
        false
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        Some(self.f.value(x))
    }
}

/// Value-query-only sampler for `exp(-f)`: the reduction at `eta = 1/L`
/// with [`ZerothRgo`] as the oracle.
pub fn sample_wellconditioned_zeroth(
    f: &FunctionOracle,
    x_star: &[f64],
    eps: f64,
    zcfg: &ZerothConfig,
    cfg: &ReductionConfig,
    state: &mut ChainState,
) -> Result<AlternateOutcome> {
    let m = f.meta();
    if x_star.len() != m.dim {
        return Err(invalid("x_star dimension mismatch"));
    }
    let eta = 1.0 / m.smoothness;
    let rgo = RgoHandle::new(ZerothRgo::new(f.clone(), *zcfg), eta);
    let start = warm_start_gaussian(x_star, m.smoothness, m.kappa(), state);
    alternate_sample(&rgo, eta, m.strong_convexity, &start, eps, cfg, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ClosureFunction;

    fn quad(l: f64, mu: f64) -> FunctionOracle {
        // f(x) = (l x0^2 + mu x1^2) / 2
        FunctionOracle::new(
            ClosureFunction::new(
                2,
                move |x: &[f64]| 0.5 * (l * x[0] * x[0] + mu * x[1] * x[1]),
                move |x: &[f64], g: &mut [f64]| {
                    g[0] = l * x[0];
                    g[1] = mu * x[1];
                },
            ),
            ProblemMeta::new(l, mu, 2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constants_with_kappa_floor() {
        let m = ProblemMeta::new(1.0, 1.0, 2).unwrap();
        assert_eq!(xsample_eta(&m), 1.0 / 16.0);
        assert_eq!(xsample_gate(&m), 6.0);
        assert_eq!(fallback_steps(4, 0.01), (40.0 * 400f64.ln()).ceil() as usize);
    }

    #[test]
    fn xsample_matches_gaussian_conditional() {
        // For quadratic f the RGO target is Gaussian with precision a + 1/lambda.
        let f = quad(2.0, 1.0);
        let lambda = 0.05;
        let y = [0.4, -0.2];
        let n = 20_000;
        let mut st = ChainState::new(2, 0);
        let mut out = [0.0; 2];
        let mut s = [0.0; 2];
        for _ in 0..n {
            xsample(&f, &y, lambda, 1e9, 0.01, &mut st, &mut out).unwrap();
            s[0] += out[0];
            s[1] += out[1];
        }
        for (i, a) in [2.0, 1.0].iter().enumerate() {
            let prec = a + 1.0 / lambda;
            let mean = (y[i] / lambda) / prec;
            let se = (1.0 / prec / n as f64).sqrt();
            assert!((s[i] / n as f64 - mean).abs() < 4.0 * se);
        }
        assert_eq!(st.diag.gate_failures, 0);
    }

    #[test]
    fn gate_failure_routes_to_fallback() {
        let f = quad(2.0, 1.0);
        let mut st = ChainState::new(3, 0);
        let mut out = [0.0; 2];
        xsample(&f, &[100.0, 0.0], 0.05, 1.0, 0.01, &mut st, &mut out).unwrap();
        assert_eq!(st.diag.gate_failures, 1);
        assert_eq!(st.diag.fallback_calls, 1);
        assert!((st.diag.tv_budget_spent - 0.01).abs() < 1e-15);
        // Conditional mean is 100 / (1 + 2 * 0.05) ~ 90.9 with sd ~ 0.21.
        assert!((out[0] - 100.0 / 1.1).abs() < 2.0);
    }

    #[test]
    fn fallback_samples_quadratic_target() {
        let f = quad(4.0, 1.0);
        let n = 3000;
        let mut s2 = [0.0; 2];
        for c in 0..n {
            let mut st = ChainState::new(4, c);
            let x = metropolized_fallback(&f, &[0.0, 0.0], 0.01, &mut st).unwrap();
            s2[0] += x[0] * x[0];
            s2[1] += x[1] * x[1];
        }
        assert!((s2[0] / n as f64 - 0.25).abs() < 0.03);
        assert!((s2[1] / n as f64 - 1.0).abs() < 0.12);
    }

    #[test]
    fn wellconditioned_gaussian_moments() {
        let f = quad(4.0, 1.0);
        let n = 2000;
        let mut s2 = [0.0; 2];
        for c in 0..n {
            let mut st = ChainState::new(5, c);
            let out = sample_wellconditioned(&f, &[0.0, 0.0], 0.05, &ReductionConfig::default(), &mut st).unwrap();
            s2[0] += out.x[0] * out.x[0];
            s2[1] += out.x[1] * out.x[1];
        }
        assert!((s2[0] / n as f64 - 0.25).abs() < 0.04);
        assert!((s2[1] / n as f64 - 1.0).abs() < 0.15);
    }

    #[test]
    fn zeroth_uses_values_only() {
        let f = FunctionOracle::new(ClosureFunction::value_only(1, |x: &[f64]| 0.5 * x[0] * x[0]), ProblemMeta::new(1.0, 1.0, 1).unwrap())
            .unwrap();
        let n = 400;
        let mut s2 = 0.0;
        for c in 0..n {
            let mut st = ChainState::new(6, c);
            let out =
                sample_wellconditioned_zeroth(&f, &[0.0], 0.1, &ZerothConfig::default(), &ReductionConfig::default(), &mut st).unwrap();
            s2 += out.x[0] * out.x[0];
        }
        assert!((s2 / n as f64 - 1.0).abs() < 0.25);
        assert_eq!(f.tally().gradients, 0);
        assert!(f.tally().values > 0);
    }
}
