//! Function, finite-sum and restricted Gaussian oracles with query counting.

use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::chain::ChainState;
use crate::error::{invalid, Error, Result};
use crate::linalg::dot;

/// Declared smoothness, strong convexity and dimension of a problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub dim: usize,
}

impl ProblemMeta {
    pub fn new(smoothness: f64, strong_convexity: f64, dim: usize) -> Result<Self> {
        let m = Self { smoothness, strong_convexity, dim };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strong_convexity > 0.0) || !(self.smoothness >= self.strong_convexity) || !self.smoothness.is_finite() {
            return Err(invalid(format!("need 0 < mu <= L < inf, got mu={}, L={}", self.strong_convexity, self.smoothness)));
        }
        if self.dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.smoothness / self.strong_convexity
    }
}

/// Number of value and gradient queries issued to an oracle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTally {
    pub values: u64,
    pub gradients: u64,
}

impl QueryTally {
    pub fn total(&self) -> u64 {
        self.values + self.gradients
    }
}

impl std::ops::Add for QueryTally {
    type Output = QueryTally;
    fn add(self, o: QueryTally) -> QueryTally {
        QueryTally { values: self.values + o.values, gradients: self.gradients + o.gradients }
    }
}

impl std::ops::AddAssign for QueryTally {
    fn add_assign(&mut self, o: QueryTally) {
        *self = *self + o;
    }
}

#[derive(Debug, Default)]
struct QueryCounter {
    values: AtomicU64,
    gradients: AtomicU64,
}

impl QueryCounter {
    fn tally(&self) -> QueryTally {
        QueryTally { values: self.values.load(Ordering::Relaxed), gradients: self.gradients.load(Ordering::Relaxed) }
    }
}

/// A convex function with optional gradient access.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, _x: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::Unsupported("gradient".into()))
    }
    fn provides_gradient(&self) -> bool {
        true
    }
}

/// Builds a [`SmoothFunction`] from closures.
pub struct ClosureFunction<V, G> {
    dim: usize,
    value: V,
    gradient: Option<G>,
}

type GradFn = fn(&[f64], &mut [f64]);

impl<V> ClosureFunction<V, GradFn>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn value_only(dim: usize, value: V) -> Self {
        Self { dim, value, gradient: None }
    }
}

impl<V, G> ClosureFunction<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, value: V, gradient: G) -> Self {
        Self { dim, value, gradient: Some(gradient) }
    }
}

impl<V, G> SmoothFunction for ClosureFunction<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.gradient {
            Some(g) => {
                g(x, out);
                Ok(())
            }
            None => Err(Error::Unsupported("gradient".into())),
        }
    }
    fn provides_gradient(&self) -> bool {
        self.gradient.is_some()
    }
}

/// Counted access to a [`SmoothFunction`] with declared regularity.
#[derive(Clone)]
pub struct FunctionOracle {
    func: Arc<dyn SmoothFunction>,
    meta: ProblemMeta,
    counter: Arc<QueryCounter>,
}

impl std::fmt::Debug for FunctionOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionOracle").field("meta", &self.meta).field("tally", &self.tally()).finish()
    }
}

impl FunctionOracle {
    pub fn new(func: impl SmoothFunction + 'static, meta: ProblemMeta) -> Result<Self> {
        Self::from_arc(Arc::new(func), meta)
    }

    pub fn from_arc(func: Arc<dyn SmoothFunction>, meta: ProblemMeta) -> Result<Self> {
        meta.validate()?;
        if func.dim() != meta.dim {
            return Err(invalid(format!("function dimension {} != declared {}", func.dim(), meta.dim)));
        }
        Ok(Self { func, meta, counter: Arc::default() })
    }

    pub fn meta(&self) -> ProblemMeta {
        self.meta
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.counter.values.fetch_add(1, Ordering::Relaxed);
        self.func.value(x)
    }

    #[inline]
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.counter.gradients.fetch_add(1, Ordering::Relaxed);
        self.func.gradient(x, out)
    }

    pub fn gradient_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.dim()];
        self.gradient(x, &mut g)?;
        Ok(g)
    }

    pub fn provides_gradient(&self) -> bool {
        self.func.provides_gradient()
    }

    pub fn tally(&self) -> QueryTally {
        self.counter.tally()
    }

    /// Same function and metadata with an independent query counter.
    pub fn with_fresh_counter(&self) -> Self {
        Self { func: self.func.clone(), meta: self.meta, counter: Arc::default() }
    }

    /// Same function with different declared constants.
    pub fn with_meta(&self, meta: ProblemMeta) -> Result<Self> {
        meta.validate()?;
        Ok(Self { func: self.func.clone(), meta, counter: self.counter.clone() })
    }
}

/// `f(x) - <c, x>`: the smooth half of a shared-minimizer split.
struct LinearShift {
    base: FunctionOracle,
    c: Vec<f64>,
}

impl SmoothFunction for LinearShift {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) - dot(&self.c, x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.gradient(x, out)?;
        for (o, c) in out.iter_mut().zip(&self.c) {
            *o -= c;
        }
        Ok(())
    }
    fn provides_gradient(&self) -> bool {
        self.base.provides_gradient()
    }
}

/// `f(x) + (coef / 2) |x - center|^2`.
struct AddQuadratic {
    base: FunctionOracle,
    center: Vec<f64>,
    coef: f64,
}

impl SmoothFunction for AddQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) + 0.5 * self.coef * crate::linalg::dist_sq(x, &self.center)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.gradient(x, out)?;
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o += self.coef * (xi - ci);
        }
        Ok(())
    }
    fn provides_gradient(&self) -> bool {
        self.base.provides_gradient()
    }
}

/// `f(x) + (coef / 2) |x - center|^2` with constants `L + coef`, `mu + coef`.
/// Queries are forwarded to (and counted by) `f`.
pub fn add_quadratic(f: &FunctionOracle, center: &[f64], coef: f64) -> Result<FunctionOracle> {
    if !(coef >= 0.0) || center.len() != f.dim() {
        return Err(invalid("add_quadratic needs coef >= 0 and a matching center"));
    }
    let m = f.meta();
    let meta = ProblemMeta::new(m.smoothness + coef, m.strong_convexity + coef, m.dim)?;
    FunctionOracle::new(AddQuadratic { base: f.clone(), center: center.to_vec(), coef }, meta)
}

/// Combines two Gaussian factors `N(v1, lambda1)` and `N(v2, lambda2)`:
/// `1/lambda = 1/lambda1 + 1/lambda2`, `v = lambda (v1/lambda1 + v2/lambda2)`.
pub fn combine_quadratics(lambda1: f64, v1: &[f64], lambda2: f64, v2: &[f64]) -> (f64, Vec<f64>) {
    let lambda = 1.0 / (1.0 / lambda1 + 1.0 / lambda2);
    let v = v1.iter().zip(v2).map(|(a, b)| lambda * (a / lambda1 + b / lambda2)).collect();
    (lambda, v)
}

/// A restricted Gaussian oracle for a convex `g`: samples from the density
/// proportional to `exp(-|x - center|^2 / (2 lambda) - g(x))`.
pub trait RgoSampler: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes a draw into `out`. Approximate samplers must stay within
    /// `tv_tol` in total variation and charge what they use to the chain.
    fn sample(&self, lambda: f64, center: &[f64], tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()>;

    /// Whether draws are exact up to floating point.
    fn exact(&self) -> bool;

    fn value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// `argmin_x g(x) + |x - v|^2 / (2 lambda)`.
    fn prox(&self, _lambda: f64, _v: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::Unsupported("prox".into()))
    }
}

/// An RGO together with the largest `lambda` it accepts and a call counter.
#[derive(Clone)]
pub struct RgoHandle {
    sampler: Arc<dyn RgoSampler>,
    eta_cap: f64,
    calls: Arc<AtomicU64>,
}

impl std::fmt::Debug for RgoHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RgoHandle").field("dim", &self.dim()).field("eta_cap", &self.eta_cap).field("exact", &self.exact()).finish()
    }
}

impl RgoHandle {
    pub fn new(sampler: impl RgoSampler + 'static, eta_cap: f64) -> Self {
        Self::from_arc(Arc::new(sampler), eta_cap)
    }

    pub fn from_arc(sampler: Arc<dyn RgoSampler>, eta_cap: f64) -> Self {
        Self { sampler, eta_cap, calls: Arc::default() }
    }

    pub fn dim(&self) -> usize {
        self.sampler.dim()
    }

    pub fn eta_cap(&self) -> f64 {
        self.eta_cap
    }

    pub fn exact(&self) -> bool {
        self.sampler.exact()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn sample(&self, lambda: f64, center: &[f64], tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
        if !(lambda > 0.0) || lambda > self.eta_cap * (1.0 + 1e-12) {
            return Err(invalid(format!("RGO called with lambda={lambda} outside (0, {}]", self.eta_cap)));
        }
        if center.len() != self.dim() || out.len() != self.dim() {
            return Err(invalid("RGO center/output dimension mismatch"));
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        state.diag.rgo_calls += 1;
        self.sampler.sample(lambda, center, tv_tol, state, out)
    }

    pub fn sample_vec(&self, lambda: f64, center: &[f64], tv_tol: f64, state: &mut ChainState) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.sample(lambda, center, tv_tol, state, &mut out)?;
        Ok(out)
    }

    pub fn value(&self, x: &[f64]) -> Option<f64> {
        self.sampler.value(x)
    }

    pub fn prox(&self, lambda: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.sampler.prox(lambda, v, out)
    }
}

/// `g(x) + <c, x>`: the nonsmooth half of a shared-minimizer split.
struct TiltedRgo {
    base: RgoHandle,
    tilt: Vec<f64>,
}

impl RgoSampler for TiltedRgo {
    fn dim(&self) -> usize {
        self.tilt.len()
    }
    fn sample(&self, lambda: f64, center: &[f64], tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
        let shifted: Vec<f64> = center.iter().zip(&self.tilt).map(|(v, c)| v - lambda * c).collect();
        self.base.sample(lambda, &shifted, tv_tol, state, out)
    }
    fn exact(&self) -> bool {
        self.base.exact()
    }
    fn value(&self, x: &[f64]) -> Option<f64> {
        self.base.value(x).map(|g| g + dot(&self.tilt, x))
    }
    fn prox(&self, lambda: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        let shifted: Vec<f64> = v.iter().zip(&self.tilt).map(|(a, c)| a - lambda * c).collect();
        self.base.prox(lambda, &shifted, out)
    }
}

/// Moves the linear term `<grad f(x*), x>` from `f` to `g` so that both
/// halves are minimized at `x_star`. The sum `f + g` is unchanged.
pub fn shift_to_shared_min(f: &FunctionOracle, g: &RgoHandle, x_star: &[f64]) -> Result<(FunctionOracle, RgoHandle)> {
    if x_star.len() != f.dim() || g.dim() != f.dim() {
        return Err(invalid("shift_to_shared_min dimension mismatch"));
    }
    let c = f.gradient_vec(x_star)?;
    let f_tilde = FunctionOracle::new(LinearShift { base: f.clone(), c: c.clone() }, f.meta())?;
    let g_tilde = RgoHandle::new(TiltedRgo { base: g.clone(), tilt: c }, g.eta_cap());
    Ok((f_tilde, g_tilde))
}

/// A sum `F = (1/n) sum_i f_i` given summand by summand.
pub trait FiniteSumFunction: Send + Sync {
    fn n(&self) -> usize;
    fn dim(&self) -> usize;
    fn summand_value(&self, i: usize, x: &[f64]) -> f64;
    fn summand_gradient(&self, i: usize, x: &[f64], out: &mut [f64]);
}

/// Counted access to a [`FiniteSumFunction`]. `meta.smoothness` bounds every
/// summand; `meta.strong_convexity` is that of the average.
#[derive(Clone)]
pub struct FiniteSumOracle {
    func: Arc<dyn FiniteSumFunction>,
    meta: ProblemMeta,
    counter: Arc<QueryCounter>,
}

impl std::fmt::Debug for FiniteSumOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteSumOracle").field("n", &self.n()).field("meta", &self.meta).finish()
    }
}

impl FiniteSumOracle {
    pub fn new(func: impl FiniteSumFunction + 'static, meta: ProblemMeta) -> Result<Self> {
        meta.validate()?;
        if func.dim() != meta.dim || func.n() == 0 {
            return Err(invalid("finite sum needs n >= 1 summands of the declared dimension"));
        }
        Ok(Self { func: Arc::new(func), meta, counter: Arc::default() })
    }

    pub fn n(&self) -> usize {
        self.func.n()
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    pub fn meta(&self) -> ProblemMeta {
        self.meta
    }

    #[inline]
    pub fn summand_value(&self, i: usize, x: &[f64]) -> f64 {
        self.counter.values.fetch_add(1, Ordering::Relaxed);
        self.func.summand_value(i, x)
    }

    #[inline]
    pub fn summand_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.counter.gradients.fetch_add(1, Ordering::Relaxed);
        self.func.summand_gradient(i, x, out)
    }

    /// `F(x)`, costing `n` value queries.
    pub fn full_value(&self, x: &[f64]) -> f64 {
        let n = self.n();
        (0..n).map(|i| self.summand_value(i, x)).sum::<f64>() / n as f64
    }

    /// `grad F(x)`, costing `n` gradient queries.
    pub fn full_gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut g = vec![0.0; self.dim()];
        for i in 0..n {
            self.summand_gradient(i, x, &mut g);
            crate::linalg::axpy(1.0 / n as f64, &g, out);
        }
    }

    pub fn tally(&self) -> QueryTally {
        self.counter.tally()
    }

    pub fn with_fresh_counter(&self) -> Self {
        Self { func: self.func.clone(), meta: self.meta, counter: Arc::default() }
    }

    /// `F` as a single function; each query fans out to all summands.
    pub fn as_function(&self) -> Result<FunctionOracle> {
        FunctionOracle::new(FullSum { fs: self.clone() }, self.meta)
    }

    /// Every summand plus `(coef / 2) |x - center|^2`.
    pub fn with_ridge(&self, center: &[f64], coef: f64) -> Result<FiniteSumOracle> {
        if center.len() != self.dim() || !(coef >= 0.0) {
            return Err(invalid("ridge needs coef >= 0 and a matching center"));
        }
        let m = self.meta;
        let meta = ProblemMeta::new(m.smoothness + coef, m.strong_convexity + coef, m.dim)?;
        FiniteSumOracle::new(RidgeSum { base: self.clone(), center: center.to_vec(), coef }, meta)
    }

    /// A single function viewed as a one-summand sum.
    pub fn single(f: &FunctionOracle) -> Result<FiniteSumOracle> {
        FiniteSumOracle::new(SingleSum { f: f.clone() }, f.meta())
    }
}

struct FullSum {
    fs: FiniteSumOracle,
}

impl SmoothFunction for FullSum {
    fn dim(&self) -> usize {
        self.fs.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.fs.full_value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.fs.full_gradient(x, out);
        Ok(())
    }
}

struct RidgeSum {
    base: FiniteSumOracle,
    center: Vec<f64>,
    coef: f64,
}

impl FiniteSumFunction for RidgeSum {
    fn n(&self) -> usize {
        self.base.n()
    }
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn summand_value(&self, i: usize, x: &[f64]) -> f64 {
        self.base.summand_value(i, x) + 0.5 * self.coef * crate::linalg::dist_sq(x, &self.center)
    }
    fn summand_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.base.summand_gradient(i, x, out);
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o += self.coef * (xi - ci);
        }
    }
}

struct SingleSum {
    f: FunctionOracle,
}

impl FiniteSumFunction for SingleSum {
    fn n(&self) -> usize {
        1
    }
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn summand_value(&self, _i: usize, x: &[f64]) -> f64 {
        self.f.value(x)
    }
    fn summand_gradient(&self, _i: usize, x: &[f64], out: &mut [f64]) {
        // Callers only reach this through gradient-capable oracles.
        self.f.gradient(x, out).expect("summand gradient");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rgo::SeparableRgo;

    fn quad(a: f64, m: f64) -> FunctionOracle {
        FunctionOracle::new(
            ClosureFunction::new(1, move |x: &[f64]| 0.5 * a * (x[0] - m).powi(2), move |x: &[f64], g: &mut [f64]| g[0] = a * (x[0] - m)),
            ProblemMeta::new(a, a, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn meta_rejects_bad_constants() {
        assert!(ProblemMeta::new(1.0, 2.0, 1).is_err());
        assert!(ProblemMeta::new(1.0, 0.0, 1).is_err());
        assert!(ProblemMeta::new(1.0, 1.0, 0).is_err());
        assert_eq!(ProblemMeta::new(4.0, 2.0, 3).unwrap().kappa(), 2.0);
    }

    #[test]
    fn counters_track_queries_and_reset() {
        let f = quad(2.0, 1.0);
        f.value(&[0.0]);
        f.value(&[1.0]);
        f.gradient_vec(&[0.0]).unwrap();
        assert_eq!(f.tally(), QueryTally { values: 2, gradients: 1 });
        let g = f.with_fresh_counter();
        assert_eq!(g.tally().total(), 0);
        let c = f.clone();
        c.value(&[3.0]);
        assert_eq!(f.tally().values, 3);
    }

    #[test]
    fn value_only_function_reports_missing_gradient() {
        let f =
            FunctionOracle::new(ClosureFunction::value_only(1, |x: &[f64]| x[0] * x[0]), ProblemMeta::new(2.0, 2.0, 1).unwrap()).unwrap();
        assert!(!f.provides_gradient());
        assert!(matches!(f.gradient_vec(&[1.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn combine_quadratics_matches_hand_calculation() {
        let (l, v) = combine_quadratics(1.0, &[2.0], 3.0, &[-2.0]);
        assert!((l - 0.75).abs() < 1e-15);
        assert!((v[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shift_preserves_sum_and_moves_minimizer() {
        // f = (x-1)^2/2, g = |x|; minimizer of f+g is 0 (subgradient of |x| at 0 covers 1).
        let f = quad(1.0, 1.0);
        let g = RgoHandle::new(SeparableRgo::l1(vec![1.0]), f64::INFINITY);
        let xs = [0.0];
        let (ft, gt) = shift_to_shared_min(&f, &g, &xs).unwrap();
        for &x in &[-2.0, -0.3, 0.0, 0.7, 5.0] {
            let s0 = f.value(&[x]) + g.value(&[x]).unwrap();
            let s1 = ft.value(&[x]) + gt.value(&[x]).unwrap();
            assert!((s0 - s1).abs() < 1e-12);
        }
        assert!(ft.gradient_vec(&xs).unwrap()[0].abs() < 1e-15);
        // x* also minimizes g~ = |x| - x: prox at x* is a fixed point.
        let mut out = [0.0];
        gt.prox(0.5, &xs, &mut out).unwrap();
        assert!(out[0].abs() < 1e-15);
    }

    #[test]
    fn handle_enforces_eta_cap() {
        let g = RgoHandle::new(SeparableRgo::zero(1), 0.5);
        let mut st = ChainState::new(0, 0);
        assert!(g.sample_vec(0.6, &[0.0], 0.0, &mut st).is_err());
        assert!(g.sample_vec(0.5, &[0.0], 0.0, &mut st).is_ok());
        assert_eq!(g.calls(), 1);
    }

    struct Shifted(Vec<f64>);
    impl FiniteSumFunction for Shifted {
        fn n(&self) -> usize {
            self.0.len()
        }
        fn dim(&self) -> usize {
            1
        }
        fn summand_value(&self, i: usize, x: &[f64]) -> f64 {
            0.5 * (x[0] - self.0[i]).powi(2)
        }
        fn summand_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] - self.0[i];
        }
    }

    #[test]
    fn finite_sum_full_queries_and_ridge() {
        let fs = FiniteSumOracle::new(Shifted(vec![0.0, 2.0]), ProblemMeta::new(1.0, 1.0, 1).unwrap()).unwrap();
        assert!((fs.full_value(&[1.0]) - 0.5).abs() < 1e-15);
        assert_eq!(fs.tally().values, 2);
        let r = fs.with_ridge(&[3.0], 2.0).unwrap();
        assert_eq!(r.meta().smoothness, 3.0);
        let mut g = [0.0];
        r.full_gradient(&[1.0], &mut g);
        assert!((g[0] - (0.0 + 2.0 * (1.0 - 3.0))).abs() < 1e-15);
        // Ridge queries are forwarded to the base counter.
        assert_eq!(fs.tally().gradients, 2);
    }
}
