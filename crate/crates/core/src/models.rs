//! Built-in target distributions with exact oracles and ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::{norm_cdf, RngStream};
use crate::linalg::{dot, norm_sq};
use crate::optimize::{prox_grad_minimize, svrg_minimize, SvrgConfig};
use crate::oracle::{ClosureFunction, FiniteSumFunction, FiniteSumOracle, FunctionOracle, ProblemMeta, RgoHandle};
use crate::quadrature::{quadrature_domain, quadrature_moments_1d, Quadrature1d, DEFAULT_NODES};
use crate::rgo::SeparableRgo;

/// Serializable description of a target `exp(-f - g)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `f = sum_j a_j (x_j - m_j)^2 / 2`, `g = 0`.
    Gaussian { curvature: Vec<f64>, mean: Vec<f64> },
    /// Gaussian `f` restricted to a box.
    BoxGaussian { curvature: Vec<f64>, mean: Vec<f64>, lower: Vec<f64>, upper: Vec<f64> },
    /// Gaussian `f` plus `g = sum_j r_j |x_j|`.
    LassoGaussian { curvature: Vec<f64>, mean: Vec<f64>, reg: Vec<f64> },
    /// Ridge logistic regression on synthetic data, written as a finite sum
    /// `f_i = n softplus(-b_i <a_i, x>) + ridge |x|^2 / 2`.
    LogisticFinitesum { n: usize, dim: usize, ridge: f64, scale: f64, data_seed: u64 },
    /// `f_i = sum_j a_j (x_j - c_ij)^2 / 2` with random centers of spread
    /// `spread`; `smoothness` may declare a looser bound than `max a_j`.
    QuadraticFinitesum {
        n: usize,
        curvature: Vec<f64>,
        #[serde(default)]
        smoothness: Option<f64>,
        spread: f64,
        data_seed: u64,
    },
    /// `f = w softplus(s x) + q (x - c)^2 / 2`, `g = r |x|`.
    #[serde(rename = "custom_1d")]
    Custom1d { logistic_weight: f64, logistic_slope: f64, quad_weight: f64, quad_center: f64, l1_weight: f64 },
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Gaussian { curvature, .. }
            | ModelSpec::BoxGaussian { curvature, .. }
            | ModelSpec::LassoGaussian { curvature, .. }
            | ModelSpec::QuadraticFinitesum { curvature, .. } => curvature.len(),
            ModelSpec::LogisticFinitesum { dim, .. } => *dim,
            ModelSpec::Custom1d { .. } => 1,
        }
    }

    pub fn is_finite_sum(&self) -> bool {
        matches!(self, ModelSpec::LogisticFinitesum { .. } | ModelSpec::QuadraticFinitesum { .. })
    }

    /// Whether `g` is nonzero.
    pub fn has_composite(&self) -> bool {
        match self {
            ModelSpec::BoxGaussian { .. } | ModelSpec::LassoGaussian { .. } => true,
            ModelSpec::Custom1d { l1_weight, .. } => *l1_weight > 0.0,
            _ => false,
        }
    }

    /// Whether the whole target has an exact RGO.
    pub fn has_target_rgo(&self) -> bool {
        match self {
            ModelSpec::Gaussian { .. } | ModelSpec::BoxGaussian { .. } | ModelSpec::LassoGaussian { .. } => true,
            ModelSpec::Custom1d { logistic_weight, .. } => *logistic_weight == 0.0,
            _ => false,
        }
    }
}

/// Reference distribution for a model.
#[derive(Clone, Debug)]
pub enum Truth {
    /// Independent Gaussian coordinates.
    Gaussian { mean: Vec<f64>, variance: Vec<f64> },
    /// Independent coordinates with quadrature marginals.
    Separable(Vec<Quadrature1d>),
    /// No closed form; compare against long runs of an exact-filter chain.
    ReferenceChain,
}

impl Truth {
    pub fn marginal_cdf(&self, i: usize, x: f64) -> Option<f64> {
        match self {
            Truth::Gaussian { mean, variance } => Some(norm_cdf((x - mean[i]) / variance[i].sqrt())),
            Truth::Separable(q) => Some(q[i].cdf(x)),
            Truth::ReferenceChain => None,
        }
    }

    pub fn mean(&self) -> Option<Vec<f64>> {
        match self {
            Truth::Gaussian { mean, .. } => Some(mean.clone()),
            Truth::Separable(q) => Some(q.iter().map(|q| q.mean).collect()),
            Truth::ReferenceChain => None,
        }
    }

    pub fn variance(&self) -> Option<Vec<f64>> {
        match self {
            Truth::Gaussian { variance, .. } => Some(variance.clone()),
            Truth::Separable(q) => Some(q.iter().map(|q| q.variance).collect()),
            Truth::ReferenceChain => None,
        }
    }
}

/// A built model: oracles, minimizer and ground truth.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: ModelSpec,
    /// Smooth part; for finite sums, the average with every query fanned out.
    pub f: FunctionOracle,
    /// Exact RGO for `g` (the zero penalty for smooth kinds).
    pub g: RgoHandle,
    pub finite_sum: Option<FiniteSumOracle>,
    /// Exact RGO for the whole target `f + g`, when one exists.
    pub target_rgo: Option<RgoHandle>,
    /// Minimizer of `f + g`.
    pub x_star: Vec<f64>,
    pub truth: Truth,
}

impl Model {
    pub fn meta(&self) -> ProblemMeta {
        self.f.meta()
    }

    /// `f + g` at `x`, infinite outside the domain of `g`.
    pub fn potential(&self, x: &[f64]) -> f64 {
        self.f.value(x) + self.g.value(x).unwrap_or(0.0)
    }
}

fn check_len(name: &str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d || v.iter().any(|a| !a.is_finite()) {
        return Err(invalid(format!("{name} must have {d} finite entries")));
    }
    Ok(())
}

fn quadratic_parts(curvature: &[f64], mean: &[f64]) -> Result<(FunctionOracle, ProblemMeta)> {
    let d = curvature.len();
    if d == 0 || curvature.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(invalid("curvature must be positive and finite"));
    }
    check_len("mean", mean, d)?;
    let l = curvature.iter().cloned().fold(0.0, f64::max);
    let mu = curvature.iter().cloned().fold(f64::INFINITY, f64::min);
    let meta = ProblemMeta::new(l, mu, d)?;
    let (a, m) = (curvature.to_vec(), mean.to_vec());
    let (a2, m2) = (a.clone(), m.clone());
    let f = FunctionOracle::new(
        ClosureFunction::new(
            d,
            move |x: &[f64]| (0..x.len()).map(|j| 0.5 * a[j] * (x[j] - m[j]).powi(2)).sum(),
            move |x: &[f64], out: &mut [f64]| {
                for j in 0..x.len() {
                    out[j] = a2[j] * (x[j] - m2[j]);
                }
            },
        ),
        meta,
    )?;
    Ok((f, meta))
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct LogisticSum {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    ridge: f64,
}

impl FiniteSumFunction for LogisticSum {
    fn n(&self) -> usize {
        self.labels.len()
    }
    fn dim(&self) -> usize {
        self.features[0].len()
    }
    fn summand_value(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.labels.len() as f64;
        n * softplus(-self.labels[i] * dot(&self.features[i], x)) + 0.5 * self.ridge * norm_sq(x)
    }
    fn summand_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let n = self.labels.len() as f64;
        let b = self.labels[i];
        let c = -n * b * sigmoid(-b * dot(&self.features[i], x));
        for j in 0..x.len() {
            out[j] = c * self.features[i][j] + self.ridge * x[j];
        }
    }
}

struct QuadraticSum {
    curvature: Vec<f64>,
    centers: Vec<Vec<f64>>,
}

impl FiniteSumFunction for QuadraticSum {
    fn n(&self) -> usize {
        self.centers.len()
    }
    fn dim(&self) -> usize {
        self.curvature.len()
    }
    fn summand_value(&self, i: usize, x: &[f64]) -> f64 {
        let c = &self.centers[i];
        (0..x.len()).map(|j| 0.5 * self.curvature[j] * (x[j] - c[j]).powi(2)).sum()
    }
    fn summand_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let c = &self.centers[i];
        for j in 0..x.len() {
            out[j] = self.curvature[j] * (x[j] - c[j]);
        }
    }
}

fn separable_truth(curvature: &[f64], mean: &[f64], rgo: &SeparableRgo, mode: &[f64]) -> Result<Truth> {
    let mut qs = Vec::with_capacity(curvature.len());
    for j in 0..curvature.len() {
        let (a, m) = (curvature[j], mean[j]);
        let (mut lo, mut hi) = quadrature_domain(mode[j], a);
        let pen: Box<dyn Fn(f64) -> f64> = match rgo.penalty() {
            crate::rgo::Penalty::None => Box::new(|_| 0.0),
            crate::rgo::Penalty::Box { lower, upper } => {
                lo = lo.max(lower[j]);
                hi = hi.min(upper[j]);
                Box::new(|_| 0.0)
            }
            crate::rgo::Penalty::L1 { reg } => {
                let r = reg[j];
                Box::new(move |x: f64| r * x.abs())
            }
        };
        qs.push(quadrature_moments_1d(&|x| -0.5 * a * (x - m).powi(2) - pen(x), lo, hi, DEFAULT_NODES)?);
    }
    Ok(Truth::Separable(qs))
}

/// Builds oracles, minimizer and ground truth for `spec`.
pub fn build_model(spec: &ModelSpec) -> Result<Model> {
    let inf = f64::INFINITY;
    match spec {
        ModelSpec::Gaussian { curvature, mean } => {
            let (f, _) = quadratic_parts(curvature, mean)?;
            let d = curvature.len();
            let target = SeparableRgo::zero(d).with_quadratic(curvature.clone(), mean.clone())?;
            Ok(Model {
                spec: spec.clone(),
                f,
                g: RgoHandle::new(SeparableRgo::zero(d), inf),
                finite_sum: None,
                target_rgo: Some(RgoHandle::new(target, inf)),
                x_star: mean.clone(),
                truth: Truth::Gaussian { mean: mean.clone(), variance: curvature.iter().map(|a| 1.0 / a).collect() },
            })
        }
        ModelSpec::BoxGaussian { curvature, mean, lower, upper } => {
            let (f, _) = quadratic_parts(curvature, mean)?;
            let d = curvature.len();
            check_len("lower", lower, d)?;
            check_len("upper", upper, d)?;
            let g = SeparableRgo::boxed(lower.clone(), upper.clone())?;
            let x_star: Vec<f64> = (0..d).map(|j| mean[j].clamp(lower[j], upper[j])).collect();
            let truth = separable_truth(curvature, mean, &g, &x_star)?;
            let target = g.clone().with_quadratic(curvature.clone(), mean.clone())?;
            Ok(Model {
                spec: spec.clone(),
                f,
                g: RgoHandle::new(g, inf),
                finite_sum: None,
                target_rgo: Some(RgoHandle::new(target, inf)),
                x_star,
                truth,
            })
        }
        ModelSpec::LassoGaussian { curvature, mean, reg } => {
            let (f, _) = quadratic_parts(curvature, mean)?;
            let d = curvature.len();
            check_len("reg", reg, d)?;
            if reg.iter().any(|r| *r < 0.0) {
                return Err(invalid("reg must be nonnegative"));
            }
            let g = SeparableRgo::l1(reg.clone());
            let x_star: Vec<f64> = (0..d).map(|j| mean[j].signum() * (mean[j].abs() - reg[j] / curvature[j]).max(0.0)).collect();
            let truth = separable_truth(curvature, mean, &g, &x_star)?;
            let target = g.clone().with_quadratic(curvature.clone(), mean.clone())?;
            Ok(Model {
                spec: spec.clone(),
                f,
                g: RgoHandle::new(g, inf),
                finite_sum: None,
                target_rgo: Some(RgoHandle::new(target, inf)),
                x_star,
                truth,
            })
        }
        ModelSpec::LogisticFinitesum { n, dim, ridge, scale, data_seed } => {
            if *n == 0 || *dim == 0 || !(*ridge > 0.0) || !(*scale > 0.0) {
                return Err(invalid("logistic model needs n, dim >= 1 and ridge, scale > 0"));
            }
            let mut rng = RngStream::new(*data_seed, 0);
            let mut features = Vec::with_capacity(*n);
            let mut labels = Vec::with_capacity(*n);
            for _ in 0..*n {
                let mut a = vec![0.0; *dim];
                rng.fill_normal(&mut a);
                a.iter_mut().for_each(|v| *v *= scale);
                features.push(a);
                labels.push(if rng.uniform() < 0.5 { -1.0 } else { 1.0 });
            }
            let lmax = features.iter().map(|a| norm_sq(a)).fold(0.0, f64::max);
            let meta = ProblemMeta::new(*n as f64 * lmax / 4.0 + ridge, *ridge, *dim)?;
            let fs = FiniteSumOracle::new(LogisticSum { features, labels, ridge: *ridge }, meta)?;
            finite_sum_model(spec, fs, *data_seed, None)
        }
        ModelSpec::QuadraticFinitesum { n, curvature, smoothness, spread, data_seed } => {
            let d = curvature.len();
            if *n == 0 || d == 0 || curvature.iter().any(|a| !(*a > 0.0)) || !(*spread >= 0.0) {
                return Err(invalid("quadratic finite sum needs n >= 1, positive curvature and spread >= 0"));
            }
            let amax = curvature.iter().cloned().fold(0.0, f64::max);
            let amin = curvature.iter().cloned().fold(f64::INFINITY, f64::min);
            let l = smoothness.unwrap_or(amax);
            if l < amax {
                return Err(invalid("declared smoothness is below the largest curvature"));
            }
            let mut rng = RngStream::new(*data_seed, 0);
            let centers: Vec<Vec<f64>> = (0..*n)
                .map(|_| {
                    let mut c = vec![0.0; d];
                    rng.fill_normal(&mut c);
                    c.iter_mut().for_each(|v| *v *= spread);
                    c
                })
                .collect();
            let mut mean = vec![0.0; d];
            for c in &centers {
                crate::linalg::axpy(1.0 / *n as f64, c, &mut mean);
            }
            let meta = ProblemMeta::new(l, amin, d)?;
            let fs = FiniteSumOracle::new(QuadraticSum { curvature: curvature.clone(), centers }, meta)?;
            let truth = Truth::Gaussian { mean: mean.clone(), variance: curvature.iter().map(|a| 1.0 / a).collect() };
            finite_sum_model(spec, fs, *data_seed, Some((mean, truth)))
        }
        ModelSpec::Custom1d { logistic_weight: w, logistic_slope: s, quad_weight: q, quad_center: c, l1_weight: r } => {
            if !(*w >= 0.0 && *q > 0.0 && *r >= 0.0) || !s.is_finite() || !c.is_finite() {
                return Err(invalid("custom_1d needs logistic_weight, l1_weight >= 0 and quad_weight > 0"));
            }
            let meta = ProblemMeta::new(q + w * s * s / 4.0, *q, 1)?;
            let (w, s, q, c, r) = (*w, *s, *q, *c, *r);
            let f = FunctionOracle::new(
                ClosureFunction::new(
                    1,
                    move |x: &[f64]| w * softplus(s * x[0]) + 0.5 * q * (x[0] - c).powi(2),
                    move |x: &[f64], out: &mut [f64]| out[0] = w * s * sigmoid(s * x[0]) + q * (x[0] - c),
                ),
                meta,
            )?;
            let g = if r > 0.0 { SeparableRgo::l1(vec![r]) } else { SeparableRgo::zero(1) };
            let target_rgo = if w == 0.0 { Some(RgoHandle::new(g.clone().with_quadratic(vec![q], vec![c])?, inf)) } else { None };
            let g = RgoHandle::new(g, inf);
            let opt =
                prox_grad_minimize(&f.with_fresh_counter(), &g, &[c], 1e-12 * meta.smoothness.sqrt(), 100_000)?.require_converged()?;
            let (lo, hi) = quadrature_domain(opt.x[0], q);
            let quad = quadrature_moments_1d(&|x| -w * softplus(s * x) - 0.5 * q * (x - c).powi(2) - r * x.abs(), lo, hi, DEFAULT_NODES)?;
            Ok(Model { spec: spec.clone(), f, g, finite_sum: None, target_rgo, x_star: opt.x, truth: Truth::Separable(vec![quad]) })
        }
    }
}

fn finite_sum_model(spec: &ModelSpec, fs: FiniteSumOracle, seed: u64, known: Option<(Vec<f64>, Truth)>) -> Result<Model> {
    let d = fs.dim();
    let (x_star, truth) = match known {
        Some(k) => k,
        None => {
            let cfg = SvrgConfig { tol: 1e-10 * fs.meta().smoothness.sqrt(), ..SvrgConfig::default() };
            let opt = svrg_minimize(&fs.with_fresh_counter(), &vec![0.0; d], &cfg, &mut RngStream::new(seed, 1))?;
            let x_star = opt.result.require_converged()?.x;
            let truth = if d == 1 {
                let probe = fs.with_fresh_counter();
                let (lo, hi) = quadrature_domain(x_star[0], fs.meta().strong_convexity);
                Truth::Separable(vec![quadrature_moments_1d(&|x| -probe.full_value(&[x]), lo, hi, DEFAULT_NODES)?])
            } else {
                Truth::ReferenceChain
            };
            (x_star, truth)
        }
    };
    Ok(Model {
        spec: spec.clone(),
        f: fs.as_function()?,
        g: RgoHandle::new(SeparableRgo::zero(d), f64::INFINITY),
        finite_sum: Some(fs),
        target_rgo: None,
        x_star,
        truth,
    })
}

/// Checks that the declared `(L, mu)` bracket the curvature of `f` along
/// coordinate and random directions at `points` random points, by central
/// differences of the gradient. Finite sums are checked summand by summand
/// against `L` and on the average against `mu`.
pub fn certify_curvature(model: &Model, points: usize, seed: u64) -> Result<bool> {
    let m = model.meta();
    let d = m.dim;
    let mut rng = RngStream::new(seed, 2);
    let spread = 3.0 / m.strong_convexity.sqrt();
    let slack = 1e-4;
    let mut x = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let (mut gp, mut gm) = (vec![0.0; d], vec![0.0; d]);
    for k in 0..points {
        rng.fill_normal(&mut x);
        for j in 0..d {
            x[j] = model.x_star[j] + spread * x[j];
        }
        if k % 2 == 0 || d == 1 {
            dir.iter_mut().for_each(|v| *v = 0.0);
            dir[k % d] = 1.0;
        } else {
            rng.fill_normal(&mut dir);
            let nd = norm_sq(&dir).sqrt();
            dir.iter_mut().for_each(|v| *v /= nd);
        }
        let h = 1e-5 * (1.0 + norm_sq(&x).sqrt());
        let curv = |grad: &dyn Fn(&[f64], &mut [f64]), gp: &mut Vec<f64>, gm: &mut Vec<f64>| {
            let xp: Vec<f64> = (0..d).map(|j| x[j] + h * dir[j]).collect();
            let xm: Vec<f64> = (0..d).map(|j| x[j] - h * dir[j]).collect();
            grad(&xp, gp);
            grad(&xm, gm);
            (0..d).map(|j| (gp[j] - gm[j]) * dir[j]).sum::<f64>() / (2.0 * h)
        };
        let avg = curv(&|p, o| model.f.gradient(p, o).expect("model f has a gradient"), &mut gp, &mut gm);
        if avg < m.strong_convexity * (1.0 - slack) || avg > m.smoothness * (1.0 + slack) {
            return Ok(false);
        }
        if let Some(fs) = &model.finite_sum {
            for i in 0..fs.n() {
                let c = curv(&|p, o| fs.summand_gradient(i, p, o), &mut gp, &mut gm);
                if c < -slack * m.smoothness || c > m.smoothness * (1.0 + slack) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainState;

    #[test]
    fn gaussian_metadata() {
        let m = build_model(&ModelSpec::Gaussian { curvature: vec![1.0, 25.0], mean: vec![0.0, 0.0] }).unwrap();
        assert_eq!(m.meta().kappa(), 25.0);
        assert!(certify_curvature(&m, 100, 0).unwrap());
    }

    #[test]
    fn box_rgo_stays_inside() {
        let m = build_model(&ModelSpec::BoxGaussian {
            curvature: vec![1.0, 2.0],
            mean: vec![5.0, 0.0],
            lower: vec![-1.0, -0.5],
            upper: vec![1.0, 0.5],
        })
        .unwrap();
        let rgo = m.target_rgo.as_ref().unwrap();
        let mut st = ChainState::new(1, 0);
        for k in 0..2000 {
            let x = rgo.sample_vec(0.3, &[3.0 * (k as f64).sin(), 2.0], 0.0, &mut st).unwrap();
            assert!((-1.0..=1.0).contains(&x[0]) && (-0.5..=0.5).contains(&x[1]));
        }
        assert_eq!(m.x_star, vec![1.0, 0.0]);
    }

    #[test]
    fn spec_json_round_trip_and_unknown_fields() {
        let s = ModelSpec::Custom1d { logistic_weight: 1.0, logistic_slope: 2.0, quad_weight: 1.0, quad_center: 0.5, l1_weight: 0.0 };
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"kind\":\"custom_1d\""));
        assert_eq!(serde_json::from_str::<ModelSpec>(&j).unwrap(), s);
        let bad = r#"{"kind":"gaussian","curvature":[1.0],"mean":[0.0],"extra":1}"#;
        assert!(serde_json::from_str::<ModelSpec>(bad).is_err());
    }

    #[test]
    fn logistic_bounds_certified() {
        let m = build_model(&ModelSpec::LogisticFinitesum { n: 20, dim: 3, ridge: 1.0, scale: 0.3, data_seed: 4 }).unwrap();
        assert!(certify_curvature(&m, 100, 1).unwrap());
        let mut g = vec![0.0; 3];
        m.f.gradient(&m.x_star, &mut g).unwrap();
        assert!(norm_sq(&g).sqrt() < 1e-6);
        assert!(matches!(m.truth, Truth::ReferenceChain));
    }

    #[test]
    fn understated_smoothness_fails_certification() {
        let mut m = build_model(&ModelSpec::Gaussian { curvature: vec![1.0, 4.0], mean: vec![0.0, 0.0] }).unwrap();
        m.f = m.f.with_meta(ProblemMeta::new(2.0, 1.0, 2).unwrap()).unwrap();
        assert!(!certify_curvature(&m, 100, 0).unwrap());
    }

    #[test]
    fn custom_1d_minimizer_and_truth() {
        let m = build_model(&ModelSpec::Custom1d {
            logistic_weight: 0.0,
            logistic_slope: 0.0,
            quad_weight: 1.0,
            quad_center: 1.0,
            l1_weight: 1.0,
        })
        .unwrap();
        assert!(m.x_star[0].abs() < 1e-9);
        // (x - 1)^2/2 + |x|: mean from mpmath quadrature.
        assert!((m.truth.mean().unwrap()[0] - 0.503222564564713).abs() < 1e-7);
        assert!(m.target_rgo.is_some());
    }

    #[test]
    fn quadratic_finitesum_truth_is_average_center() {
        let m =
            build_model(&ModelSpec::QuadraticFinitesum { n: 5, curvature: vec![2.0], smoothness: Some(8.0), spread: 1.0, data_seed: 3 })
                .unwrap();
        assert_eq!(m.meta().kappa(), 4.0);
        let mut g = vec![0.0];
        m.f.gradient(&m.x_star, &mut g).unwrap();
        assert!(g[0].abs() < 1e-12);
        assert!(certify_curvature(&m, 50, 0).unwrap());
    }
}
