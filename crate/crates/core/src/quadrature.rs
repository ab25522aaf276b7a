//! One-dimensional quadrature for normalizers, moments and CDFs of
//! unnormalized log-densities, plus the structural checks built on it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default node count for [`quadrature_moments_1d`].
pub const DEFAULT_NODES: usize = 20_001;

/// Normalizer, moments and CDF of a 1D density known up to a constant.
#[derive(Clone, Debug)]
pub struct Quadrature1d {
    pub log_normalizer: f64,
    pub mean: f64,
    pub variance: f64,
    nodes: Vec<f64>,
    cdf: Vec<f64>,
}

impl Quadrature1d {
    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// CDF by linear interpolation of the cumulative trapezoid rule.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return 0.0;
        }
        if x >= self.nodes[n - 1] {
            return 1.0;
        }
        let h = (self.nodes[n - 1] - self.nodes[0]) / (n - 1) as f64;
        let k = (((x - self.nodes[0]) / h) as usize).min(n - 2);
        let t = (x - self.nodes[k]) / h;
        self.cdf[k] + t * (self.cdf[k + 1] - self.cdf[k])
    }
}

fn simpson_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n - 1 {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

fn check_grid(lo: f64, hi: f64, n_nodes: usize) -> Result<usize> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid(format!("quadrature needs finite lo < hi, got [{lo}, {hi}]")));
    }
    if n_nodes < 4001 {
        return Err(invalid("quadrature needs at least 4001 nodes"));
    }
    Ok(if n_nodes % 2 == 0 { n_nodes + 1 } else { n_nodes })
}

fn eval_log_density(log_density: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = (hi - lo) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| if i == n - 1 { hi } else { lo + h * i as f64 }).collect();
    let mut ls = Vec::with_capacity(n);
    for &x in &nodes {
        let l = log_density(x);
        if !l.is_finite() {
            return Err(Error::Anomaly(format!("log-density is {l} at node {x}")));
        }
        ls.push(l);
    }
    Ok((nodes, ls))
}

/// Composite Simpson in log-stabilized form; returns `ln int exp(l)`.
pub fn log_integral(log_density: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n_nodes: usize) -> Result<f64> {
    let n = check_grid(lo, hi, n_nodes)?;
    let (_, ls) = eval_log_density(log_density, lo, hi, n)?;
    let m = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h = (hi - lo) / (n - 1) as f64;
    let s: f64 = ls.iter().enumerate().map(|(i, l)| simpson_weight(i, n) * (l - m).exp()).sum();
    Ok(m + (s * h / 3.0).ln())
}

/// Normalizer, mean, variance and CDF of `exp(log_density)` on `[lo, hi]`.
pub fn quadrature_moments_1d(log_density: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n_nodes: usize) -> Result<Quadrature1d> {
    let n = check_grid(lo, hi, n_nodes)?;
    let (nodes, ls) = eval_log_density(log_density, lo, hi, n)?;
    let m = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h = (hi - lo) / (n - 1) as f64;
    let w: Vec<f64> = ls.iter().map(|l| (l - m).exp()).collect();
    let (mut s0, mut s1) = (0.0, 0.0);
    for i in 0..n {
        let c = simpson_weight(i, n) * w[i];
        s0 += c;
        s1 += c * nodes[i];
    }
    let mean = s1 / s0;
    let s2: f64 = (0..n).map(|i| simpson_weight(i, n) * w[i] * (nodes[i] - mean).powi(2)).sum();
    let mut cdf = vec![0.0; n];
    for i in 1..n {
        cdf[i] = cdf[i - 1] + 0.5 * (w[i - 1] + w[i]);
    }
    let total = cdf[n - 1];
    cdf.iter_mut().for_each(|c| *c /= total);
    Ok(Quadrature1d { log_normalizer: m + (s0 * h / 3.0).ln(), mean, variance: s2 / s0, nodes, cdf })
}

/// Interval `x* +- max(10, sqrt(2 ln 1e12 / mu)) / sqrt(mu)` holding all
/// but a negligible share of a `mu`-strongly logconcave density.
pub fn quadrature_domain(x_star: f64, mu: f64) -> (f64, f64) {
    let w = 10f64.max((2.0 * 1e12f64.ln() / mu).sqrt()) / mu.sqrt();
    (x_star - w, x_star + w)
}

/// Ratio `int exp(-f) / int exp(-f - |x - x*|^2 / (2 lambda))` against its
/// bound `(1 + 1 / (mu lambda))^(d/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRatio {
    pub log_ratio: f64,
    pub log_bound: f64,
}

impl NormRatio {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.log_ratio <= self.log_bound + rel_tol
    }
}

/// Normalization-ratio check for a separable `f = sum_i f_i(x_i)`, one
/// closure per coordinate.
pub fn normratio_check(coords: &[&dyn Fn(f64) -> f64], x_star: &[f64], mu: f64, lambda: f64) -> Result<NormRatio> {
    if coords.len() != x_star.len() || !(mu > 0.0 && lambda > 0.0) {
        return Err(invalid("normratio_check needs one closure per coordinate and mu, lambda > 0"));
    }
    let mut log_ratio = 0.0;
    for (fi, &c) in coords.iter().zip(x_star) {
        let (lo, hi) = quadrature_domain(c, mu);
        let a = log_integral(&|x| -fi(x), lo, hi, DEFAULT_NODES)?;
        let b = log_integral(&|x| -fi(x) - (x - c).powi(2) / (2.0 * lambda), lo, hi, DEFAULT_NODES)?;
        log_ratio += a - b;
    }
    let log_bound = 0.5 * x_star.len() as f64 * (1.0 / (mu * lambda)).ln_1p();
    Ok(NormRatio { log_ratio, log_bound })
}

/// `|E[y] - x|` for `y ~ exp(-f(y) - (y - x)^2 / (2 eta))` in 1D, with the
/// bound `2 eta L R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinPerturb {
    pub deviation: f64,
    pub bound: f64,
    pub conditions_met: bool,
}

pub fn min_perturb_check(f: &dyn Fn(f64) -> f64, smoothness: f64, x_star: f64, x: f64, radius: f64, eta: f64) -> Result<MinPerturb> {
    if (x - x_star).abs() > radius {
        return Err(invalid("min_perturb_check needs |x - x*| <= R"));
    }
    let cap = (1.0 / (2.0 * smoothness * smoothness * radius * radius)).min(radius * radius / 400.0);
    let (lo, hi) = quadrature_domain(x, 1.0 / eta);
    let q = quadrature_moments_1d(&|y| -f(y) - (y - x).powi(2) / (2.0 * eta), lo, hi, DEFAULT_NODES)?;
    Ok(MinPerturb { deviation: (q.mean - x).abs(), bound: 2.0 * eta * smoothness * radius, conditions_met: eta <= cap })
}

/// Density-ratio quantities for the auxiliary joint density of the
/// composite sampler, in 1D, for `f` and `g` sharing the minimizer `x*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeRatios {
    /// `ln(Z_hat / Z)` and its bracket.
    pub log_norm_ratio: f64,
    pub log_norm_lower: f64,
    pub log_norm_upper: f64,
    /// Extremes of `d pi / d pi_hat` over the grid, and the maximum over
    /// grid points inside the ball of radius `omega`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub max_ratio_in_omega: f64,
}

/// The 1D composite model in the form the density-ratio checks need.
pub struct Composite1d<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub g: &'a dyn Fn(f64) -> f64,
    pub x_star: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub eta: f64,
}

impl Composite1d<'_> {
    /// `ln int_y exp(-f(y) - (y - x)^2 / (2 eta)) dy`.
    pub fn log_inner(&self, x: f64, n_nodes: usize) -> Result<f64> {
        let w = 14.0 * self.eta.sqrt();
        log_integral(&|y| -(self.f)(y) - (y - x).powi(2) / (2.0 * self.eta), x - w, x + w, n_nodes)
    }

    /// `ln(p(x) / p_hat(x))` with `p = exp(-f - g)` and
    /// `p_hat(x) = (2 pi eta)^(-1/2) int_y exp(-f(y) - g(x) - |y-x|^2/(2 eta) - eta L^2 |x-x*|^2 / 2) dy`;
    /// the `g` terms cancel.
    pub fn log_theta_target(&self, x: f64, n_nodes: usize) -> Result<f64> {
        let l = self.smoothness;
        Ok(-(self.f)(x) + 0.5 * (2.0 * std::f64::consts::PI * self.eta).ln() - self.log_inner(x, n_nodes)?
            + 0.5 * self.eta * l * l * (x - self.x_star).powi(2))
    }

    /// Nested quadrature over `[lo, hi]` for the ratio checks.
    pub fn ratios(&self, omega: f64, outer_nodes: usize, inner_nodes: usize) -> Result<CompositeRatios> {
        let (eta, l, mu) = (self.eta, self.smoothness, self.strong_convexity);
        let (lo, hi) = quadrature_domain(self.x_star, mu);
        let n = check_grid(lo, hi, outer_nodes)?;
        let h = (hi - lo) / (n - 1) as f64;
        let mut log_p = Vec::with_capacity(n);
        let mut log_ph = Vec::with_capacity(n);
        for i in 0..n {
            let x = lo + h * i as f64;
            let gx = (self.g)(x);
            log_p.push(-(self.f)(x) - gx);
            log_ph.push(self.log_inner(x, inner_nodes)? - gx - 0.5 * eta * l * l * (x - self.x_star).powi(2));
        }
        let lse = |v: &[f64]| {
            let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + (v.iter().enumerate().map(|(i, a)| simpson_weight(i, n) * (a - m).exp()).sum::<f64>() * h / 3.0).ln()
        };
        let (lz, lzh) = (lse(&log_p), lse(&log_ph));
        let mut out = CompositeRatios {
            log_norm_ratio: lzh - lz,
            log_norm_lower: 0.5 * (2.0 * std::f64::consts::PI * eta / (1.0 + eta * l)).ln() - 0.5 * (eta * l * l / mu).ln_1p(),
            log_norm_upper: 0.5 * (2.0 * std::f64::consts::PI * eta).ln(),
            min_ratio: f64::INFINITY,
            max_ratio: 0.0,
            max_ratio_in_omega: 0.0,
        };
        for i in 0..n {
            let x = lo + h * i as f64;
            let r = (log_p[i] - lz - log_ph[i] + lzh).exp();
            out.min_ratio = out.min_ratio.min(r);
            out.max_ratio = out.max_ratio.max(r);
            if (x - self.x_star).abs() <= omega {
                out.max_ratio_in_omega = out.max_ratio_in_omega.max(r);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_normalizer() {
        let q = quadrature_moments_1d(&|x| -0.5 * x * x, -10.0, 10.0, 4001).unwrap();
        let want = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((q.log_normalizer - want).abs() < 1e-8);
        assert!(q.mean.abs() < 1e-12);
        assert!((q.variance - 1.0).abs() < 1e-8);
        assert!((q.cdf(0.0) - 0.5).abs() < 1e-9);
        assert!((q.cdf(1.0) - crate::gaussian::norm_cdf(1.0)).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_grids_and_nonfinite_nodes() {
        assert!(quadrature_moments_1d(&|x| -x * x, 1.0, 0.0, 4001).is_err());
        assert!(quadrature_moments_1d(&|x| -x * x, 0.0, 1.0, 100).is_err());
        assert!(quadrature_moments_1d(&|x| if x > 0.5 { f64::NEG_INFINITY } else { 0.0 }, 0.0, 1.0, 4001).is_err());
    }

    #[test]
    fn laplace_gaussian_moments() {
        // exp(-x^2/2 - |x|): Z = 2 sqrt(2 pi) e^{1/2} Phi(-1).
        let q = quadrature_moments_1d(&|x: f64| -0.5 * x * x - x.abs(), -12.0, 12.0, DEFAULT_NODES).unwrap();
        let z = 2.0 * (2.0 * std::f64::consts::PI).sqrt() * 0.5f64.exp() * crate::gaussian::norm_cdf(-1.0);
        assert!((q.log_normalizer - z.ln()).abs() < 1e-8);
        // E x^2 = 1 - E|x|, E|x| = 2 int_0^inf x e^{-x^2/2-x} / Z.
        let e_abs = 2.0 * (1.0 - (2.0 * std::f64::consts::PI).sqrt() * 0.5f64.exp() * crate::gaussian::norm_cdf(-1.0)) / z;
        assert!((q.variance - (1.0 - e_abs)).abs() < 1e-7);
    }

    #[test]
    fn normratio_tight_on_quadratics() {
        let mu = 2.5;
        let f = move |x: f64| 0.5 * mu * (x - 1.0).powi(2);
        for lambda in [0.1, 1.0, 30.0] {
            let r = normratio_check(&[&f, &f], &[1.0, 1.0], mu, lambda).unwrap();
            assert!((r.log_ratio - r.log_bound).abs() < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn normratio_strict_on_l1() {
        let f = |x: f64| 0.5 * x * x + x.abs();
        let r = normratio_check(&[&f], &[0.0], 1.0, 1.0).unwrap();
        assert!(r.log_ratio < r.log_bound - 1e-3);
        let far = normratio_check(&[&f], &[0.0], 1.0, 1e8).unwrap();
        assert!(far.log_ratio.abs() < 1e-6);
    }

    #[test]
    fn min_perturb_log_cosh() {
        let f = |y: f64| y.cosh().ln();
        let r = 1.0;
        let eta = (1.0f64 / 2.0).min(r * r / 400.0);
        let m = min_perturb_check(&f, 1.0, 0.0, 0.8, r, eta).unwrap();
        assert!(m.conditions_met);
        assert!(m.deviation <= m.bound, "{m:?}");
        assert!(m.deviation > 0.0);
    }
}
