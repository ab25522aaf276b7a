//! The alternating-sampling framework: a Gibbs sampler on the joint density
//! `exp(-f(x) - |x - y|^2 / (2 eta))` whose `x`-marginal is the target.

use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{invalid, Result};
use crate::gaussian::sample_gaussian;
use crate::oracle::RgoHandle;

/// Default multiplier in the iteration count.
pub const DEFAULT_REDUCTION_CONSTANT: f64 = 4.0;

/// A starting point together with `ln beta`, the log of its warmness.
#[derive(Clone, Debug, PartialEq)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub log_warmness: f64,
}

/// Number of outer iterations
/// `T = ceil(c / (eta mu) * ln(max(ln beta, e) / eps))`, with the outer
/// logarithm floored at 1.
pub fn iteration_count(eta: f64, mu: f64, log_warmness: f64, eps: f64, constant: f64) -> Result<usize> {
    if !(eta > 0.0 && mu > 0.0 && eps > 0.0 && eps < 1.0 && constant > 0.0) || !(log_warmness >= 0.0) {
        return Err(invalid(format!(
            "iteration_count needs eta, mu, c > 0, eps in (0,1), ln beta >= 0; got eta={eta}, mu={mu}, eps={eps}"
        )));
    }
    let lb = log_warmness.max(std::f64::consts::E);
    let outer = (lb / eps).ln().max(1.0);
    let t = (constant / (eta * mu) * outer).ceil();
    if !t.is_finite() || t > usize::MAX as f64 / 4.0 {
        return Err(invalid("iteration count overflows"));
    }
    Ok((t as usize).max(1))
}

/// Draw from `N(x_star, I / L)`; warmness `kappa^(d/2)` for an `L`-smooth,
/// `mu`-strongly convex target minimized at `x_star`.
pub fn warm_start_gaussian(x_star: &[f64], smoothness: f64, kappa: f64, state: &mut ChainState) -> WarmStart {
    let mut x = vec![0.0; x_star.len()];
    sample_gaussian(x_star, 1.0 / smoothness, &mut state.rng, &mut x);
    WarmStart { x, log_warmness: 0.5 * x_star.len() as f64 * kappa.ln() }
}

/// Draw from the density proportional to `exp(-L/2 |x - x_star|^2 - g(x))`
/// using one exact RGO call; warmness `kappa^(d/2)` when `f` and `g` share
/// the minimizer `x_star`.
pub fn warm_start_composite(x_star: &[f64], smoothness: f64, kappa: f64, g: &RgoHandle, state: &mut ChainState) -> Result<WarmStart> {
    let x = g.sample_vec(1.0 / smoothness, x_star, 0.0, state)?;
    Ok(WarmStart { x, log_warmness: 0.5 * x_star.len() as f64 * kappa.ln() })
}

/// Settings for [`alternate_sample`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub constant: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self { constant: DEFAULT_REDUCTION_CONSTANT }
    }
}

/// Result of [`alternate_sample`].
#[derive(Clone, Debug, PartialEq)]
pub struct AlternateOutcome {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub per_call_tol: f64,
}

/// Alternates `y ~ N(x, eta I)` and `x ~ RGO(eta, y)` for `T` rounds.
///
/// Each oracle call gets tolerance `eps / (2T)`, so approximate oracles
/// spend at most `eps / 2` in total.
pub fn alternate_sample(
    rgo: &RgoHandle,
    eta: f64,
    mu: f64,
    start: &WarmStart,
    eps: f64,
    cfg: &ReductionConfig,
    state: &mut ChainState,
) -> Result<AlternateOutcome> {
    if eta > rgo.eta_cap() * (1.0 + 1e-12) {
        return Err(invalid(format!("eta={eta} exceeds the oracle cap {}", rgo.eta_cap())));
    }
    if start.x.len() != rgo.dim() {
        return Err(invalid("start dimension does not match the oracle"));
    }
    let t = iteration_count(eta, mu, start.log_warmness, eps, cfg.constant)?;
    let tol = eps / (2.0 * t as f64);
    let mut x = start.x.clone();
    let mut y = vec![0.0; x.len()];
    for _ in 0..t {
        sample_gaussian(&x, eta, &mut state.rng, &mut y);
        rgo.sample(eta, &y, tol, state, &mut x)?;
    }
    Ok(AlternateOutcome { x, y, iterations: t, per_call_tol: tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rgo::SeparableRgo;

    #[test]
    fn iteration_count_reference_value() {
        // eta*mu = 1, beta = e^e, eps = 1/e: ln(e * e) = 2, T = 4 * 2.
        let e = std::f64::consts::E;
        assert_eq!(iteration_count(1.0, 1.0, e, 1.0 / e, 4.0).unwrap(), 8);
    }

    #[test]
    fn iteration_count_floors() {
        // ln beta below e is floored; outer log below 1 is floored.
        let a = iteration_count(0.5, 1.0, 0.0, 0.9, 4.0).unwrap();
        let b = iteration_count(0.5, 1.0, 1.0, 0.9, 4.0).unwrap();
        assert_eq!(a, b);
        // ln(e / 0.99) is just above 1.
        assert_eq!(iteration_count(1.0, 1.0, 0.0, 0.99, 1.0).unwrap(), 2);
        assert!(iteration_count(1.0, 1.0, 1.0, 1.0, 4.0).is_err());
        assert!(iteration_count(-1.0, 1.0, 1.0, 0.1, 4.0).is_err());
    }

    #[test]
    fn rejects_eta_above_cap() {
        let g = RgoHandle::new(SeparableRgo::zero(1), 0.1);
        let mut st = ChainState::new(0, 0);
        let ws = WarmStart { x: vec![0.0], log_warmness: 0.0 };
        assert!(alternate_sample(&g, 0.2, 1.0, &ws, 0.1, &ReductionConfig::default(), &mut st).is_err());
    }

    #[test]
    fn gaussian_target_moments() {
        // g(x) = x^2/2 with an exact oracle; the chain targets N(0, 1).
        let g = RgoHandle::new(SeparableRgo::zero(1).with_quadratic(vec![1.0], vec![0.0]).unwrap(), f64::INFINITY);
        let n = 4000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for c in 0..n {
            let mut st = ChainState::new(11, c);
            let ws = warm_start_gaussian(&[0.0], 1.0, 1.0, &mut st);
            let out = alternate_sample(&g, 1.0, 1.0, &ws, 0.05, &ReductionConfig::default(), &mut st).unwrap();
            s += out.x[0];
            s2 += out.x[0] * out.x[0];
        }
        let m = s / n as f64;
        assert!(m.abs() < 4.0 / (n as f64).sqrt());
        assert!((s2 / n as f64 - 1.0).abs() < 0.1);
    }
}
