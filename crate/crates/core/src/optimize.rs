//! First-order minimizers used to locate `x*` for warm starts.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::RngStream;
use crate::linalg::{dist_sq, norm};
use crate::oracle::{FiniteSumOracle, FunctionOracle, ProblemMeta, RgoHandle, SmoothFunction};

/// Output of an optimizer run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Stationarity measure at exit (gradient or gradient-mapping norm).
    pub residual: f64,
    pub converged: bool,
}

impl OptResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence { iterations: self.iterations, residual: self.residual })
        }
    }
}

fn accelerated<P>(f: &FunctionOracle, prox: P, x0: &[f64], tol: f64, max_iter: usize) -> Result<OptResult>
where
    P: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if x0.len() != f.dim() || !(tol > 0.0) {
        return Err(invalid("optimizer needs a start of matching dimension and tol > 0"));
    }
    let m = f.meta();
    let l = m.smoothness;
    let sq = (m.strong_convexity / l).sqrt();
    let beta = (1.0 - sq) / (1.0 + sq);
    let d = x0.len();
    let mut x_prev = x0.to_vec();
    let mut y = x0.to_vec();
    let mut grad = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut x_new = vec![0.0; d];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        f.gradient(&y, &mut grad)?;
        for i in 0..d {
            z[i] = y[i] - grad[i] / l;
        }
        prox(1.0 / l, &z, &mut x_new)?;
        residual = l * dist_sq(&y, &x_new).sqrt();
        if residual <= tol {
            return Ok(OptResult { x: x_new, iterations: it, residual, converged: true });
        }
        for i in 0..d {
            y[i] = x_new[i] + beta * (x_new[i] - x_prev[i]);
        }
        std::mem::swap(&mut x_prev, &mut x_new);
    }
    Ok(OptResult { x: x_prev, iterations: max_iter, residual, converged: false })
}

/// Nesterov's method with constant momentum for `L`-smooth, `mu`-strongly
/// convex `f`. Stops once `|grad f| <= tol` at the extrapolated point; the
/// returned gradient step has gradient norm at most that.
pub fn agd_minimize(f: &FunctionOracle, x0: &[f64], tol: f64, max_iter: usize) -> Result<OptResult> {
    accelerated(
        f,
        |_, z, out| {
            out.copy_from_slice(z);
            Ok(())
        },
        x0,
        tol,
        max_iter,
    )
}

/// Accelerated proximal gradient (FISTA with strong-convexity momentum) on
/// `f + g`. Stops on the gradient-mapping norm. With `g = 0` it follows the
/// same iterates as [`agd_minimize`].
pub fn prox_grad_minimize(f: &FunctionOracle, g: &RgoHandle, x0: &[f64], tol: f64, max_iter: usize) -> Result<OptResult> {
    if g.dim() != f.dim() {
        return Err(invalid("prox_grad_minimize dimension mismatch"));
    }
    accelerated(f, |lam, z, out| g.prox(lam, z, out), x0, tol, max_iter)
}

/// Settings for [`svrg_minimize`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrgConfig {
    pub tol: f64,
    pub max_epochs: usize,
    /// Inner steps per epoch; `None` uses `ceil(2 kappa)`.
    pub epoch_len: Option<usize>,
}

impl Default for SvrgConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_epochs: 10_000, epoch_len: None }
    }
}

/// SVRG output with the per-epoch anchor objectives.
#[derive(Clone, Debug, PartialEq)]
pub struct SvrgResult {
    pub result: OptResult,
    pub epochs: usize,
    /// Best objective seen among anchors after each epoch.
    pub best_so_far: Vec<f64>,
}

/// Stochastic variance-reduced gradient descent with step `1 / (10 L)`.
///
/// Each epoch costs `n` gradient and `n` value queries at the anchor plus
/// two summand gradients per inner step.
pub fn svrg_minimize(fs: &FiniteSumOracle, x0: &[f64], cfg: &SvrgConfig, rng: &mut RngStream) -> Result<SvrgResult> {
    if x0.len() != fs.dim() || !(cfg.tol > 0.0) {
        return Err(invalid("svrg needs a start of matching dimension and tol > 0"));
    }
    let m = fs.meta();
    let step = 1.0 / (10.0 * m.smoothness);
    let epoch_len = cfg.epoch_len.unwrap_or_else(|| (2.0 * m.kappa()).ceil() as usize).max(1);
    let n = fs.n();
    let d = fs.dim();
    let mut anchor = x0.to_vec();
    let mut full = vec![0.0; d];
    let mut gi = vec![0.0; d];
    let mut ga = vec![0.0; d];
    let mut best = (f64::INFINITY, anchor.clone(), f64::INFINITY);
    let mut best_so_far = Vec::new();
    for epoch in 0..cfg.max_epochs {
        fs.full_gradient(&anchor, &mut full);
        let residual = norm(&full);
        let obj = fs.full_value(&anchor);
        if obj < best.0 {
            best = (obj, anchor.clone(), residual);
        }
        best_so_far.push(best.0);
        if residual <= cfg.tol {
            return Ok(SvrgResult {
                result: OptResult { x: anchor, iterations: epoch * epoch_len, residual, converged: true },
                epochs: epoch,
                best_so_far,
            });
        }
        let mut x = anchor.clone();
        for _ in 0..epoch_len {
            let i = rng.index(n);
            fs.summand_gradient(i, &x, &mut gi);
            fs.summand_gradient(i, &anchor, &mut ga);
            for k in 0..d {
                x[k] -= step * (gi[k] - ga[k] + full[k]);
            }
        }
        anchor = x;
    }
    Ok(SvrgResult {
        result: OptResult { x: best.1, iterations: cfg.max_epochs * epoch_len, residual: best.2, converged: false },
        epochs: cfg.max_epochs,
        best_so_far,
    })
}

/// Central-difference gradients from value queries only (`2d` per gradient).
struct FiniteDifference {
    base: FunctionOracle,
}

impl SmoothFunction for FiniteDifference {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mut p = x.to_vec();
        for i in 0..x.len() {
            let h = 6e-6 * x[i].abs().max(1.0);
            p[i] = x[i] + h;
            let fp = self.base.value(&p);
            p[i] = x[i] - h;
            let fm = self.base.value(&p);
            p[i] = x[i];
            out[i] = (fp - fm) / (2.0 * h);
        }
        Ok(())
    }
}

/// Wraps a value-only oracle with finite-difference gradients; queries are
/// charged to `f` as value queries.
pub fn finite_difference_oracle(f: &FunctionOracle) -> Result<FunctionOracle> {
    let m: ProblemMeta = f.meta();
    FunctionOracle::new(FiniteDifference { base: f.clone() }, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ClosureFunction, FiniteSumFunction};
    use crate::rgo::SeparableRgo;

    fn diag_quad(a: Vec<f64>, m: Vec<f64>) -> FunctionOracle {
        let d = a.len();
        let l = a.iter().cloned().fold(0.0, f64::max);
        let mu = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let (a2, m2) = (a.clone(), m.clone());
        FunctionOracle::new(
            ClosureFunction::new(
                d,
                move |x: &[f64]| x.iter().zip(&a).zip(&m).map(|((xi, ai), mi)| 0.5 * ai * (xi - mi).powi(2)).sum(),
                move |x: &[f64], g: &mut [f64]| {
                    for i in 0..x.len() {
                        g[i] = a2[i] * (x[i] - m2[i]);
                    }
                },
            ),
            ProblemMeta::new(l, mu, d).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn agd_iterations_scale_with_sqrt_kappa() {
        let mut its = Vec::new();
        for &k in &[4.0, 16.0, 64.0] {
            let f = diag_quad(vec![1.0, k, 0.5 * (1.0 + k)], vec![1.0, -1.0, 2.0]);
            let x0 = [0.0, 0.0, 0.0];
            let r = agd_minimize(&f, &x0, 1e-8, 100_000).unwrap().require_converged().unwrap();
            assert!(norm(&f.gradient_vec(&r.x).unwrap()) <= 1e-8);
            let bound = 10.0 * f64::sqrt(k) * (f64::sqrt(6.0) * k / 1e-8).ln();
            assert!((r.iterations as f64) <= bound, "k={k} its={}", r.iterations);
            its.push(r.iterations as f64);
        }
        for w in its.windows(2) {
            let ratio = (w[1] / w[0]) / 2.0;
            assert!(ratio > 0.5 && ratio < 2.0, "{its:?}");
        }
    }

    #[test]
    fn fista_with_zero_g_matches_agd() {
        let f = diag_quad(vec![1.0, 9.0], vec![3.0, -2.0]);
        let g = RgoHandle::new(SeparableRgo::zero(2), f64::INFINITY);
        for max_iter in [1, 3, 10, 50] {
            let a = agd_minimize(&f, &[0.0, 0.0], 1e-12, max_iter).unwrap();
            let b = prox_grad_minimize(&f, &g, &[0.0, 0.0], 1e-12, max_iter).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fista_solves_lasso_in_closed_form() {
        // argmin (x-3)^2/2 + |x| = 2 and (x+0.5)^2/2 + |x| = 0.
        let f = diag_quad(vec![1.0, 1.0], vec![3.0, -0.5]);
        let g = RgoHandle::new(SeparableRgo::l1(vec![1.0, 1.0]), f64::INFINITY);
        let r = prox_grad_minimize(&f, &g, &[0.0, 0.0], 1e-10, 1000).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 2.0).abs() < 1e-9 && r.x[1].abs() < 1e-9);
    }

    struct Quads {
        a: Vec<f64>,
        m: Vec<f64>,
    }
    impl FiniteSumFunction for Quads {
        fn n(&self) -> usize {
            self.a.len()
        }
        fn dim(&self) -> usize {
            1
        }
        fn summand_value(&self, i: usize, x: &[f64]) -> f64 {
            0.5 * self.a[i] * (x[0] - self.m[i]).powi(2)
        }
        fn summand_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
            out[0] = self.a[i] * (x[0] - self.m[i]);
        }
    }

    fn quad_sum(n: usize, kappa: f64) -> FiniteSumOracle {
        // Curvatures average to 1 and peak at kappa.
        let mut a = vec![1.0; n];
        a[0] = kappa;
        let s: f64 = a.iter().sum::<f64>() / n as f64;
        let a: Vec<f64> = a.iter().map(|v| v / s).collect();
        let l = a.iter().cloned().fold(0.0, f64::max);
        let m: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        FiniteSumOracle::new(Quads { a, m }, ProblemMeta::new(l, 1.0, 1).unwrap()).unwrap()
    }

    #[test]
    fn svrg_converges_and_best_so_far_is_monotone() {
        let fs = quad_sum(20, 8.0);
        let mut rng = RngStream::new(3, 0);
        let r = svrg_minimize(&fs, &[5.0], &SvrgConfig::default(), &mut rng).unwrap();
        assert!(r.result.converged);
        let mut g = [0.0];
        fs.full_gradient(&r.result.x, &mut g);
        assert!(g[0].abs() <= 1e-8);
        assert!(r.best_so_far.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn svrg_with_one_summand_is_gradient_descent() {
        let fs = quad_sum(1, 1.0);
        let mut rng = RngStream::new(4, 0);
        let r = svrg_minimize(&fs, &[2.0], &SvrgConfig { tol: 1e-6, max_epochs: 10_000, epoch_len: Some(3) }, &mut rng).unwrap();
        // Each inner step contracts by 1 - 1/10 toward the minimizer at sin(0) = 0.
        let x = r.result.x[0];
        let expected = 2.0 * 0.9f64.powi(3 * r.epochs as i32);
        assert!((x - expected).abs() < 1e-12);
    }

    #[test]
    fn svrg_gradient_queries_scale_like_n_plus_kappa() {
        let n = 50;
        let mut q = Vec::new();
        for &k in &[4.0, 16.0, 64.0] {
            let fs = quad_sum(n, k);
            let mut rng = RngStream::new(9, 0);
            let r = svrg_minimize(&fs, &[3.0], &SvrgConfig::default(), &mut rng).unwrap();
            assert!(r.result.converged);
            q.push((fs.tally().gradients as f64, n as f64 + fs.meta().kappa()));
        }
        for w in q.windows(2) {
            let ratio = (w[1].0 / w[0].0) / (w[1].1 / w[0].1);
            assert!(ratio > 1.0 / 3.0 && ratio < 3.0, "{q:?}");
        }
    }

    #[test]
    fn finite_difference_gradient_is_accurate() {
        let f = diag_quad(vec![2.0, 3.0], vec![1.0, 1.0]);
        let fd = finite_difference_oracle(&f).unwrap();
        let g = fd.gradient_vec(&[0.5, 4.0]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-7 && (g[1] - 9.0).abs() < 1e-7);
        assert_eq!(f.tally().values, 4);
    }
}
