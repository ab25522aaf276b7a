//! Random streams, normal-distribution special functions and the exact
//! one-dimensional restricted Gaussian oracles (truncated and l1-tilted).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Error, Result};

/// Deterministic random stream identified by `(seed, stream_id)`.
///
/// Chains draw from disjoint streams of the same seed, so results do not
/// depend on how chains are scheduled across workers.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `(0, 1)`, safe to take logarithms of.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.inner.random::<f64>();
            if u > 0.0 {
                return u;
            }
        }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.normal();
        }
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal survival function `1 - Phi(x)`, accurate in the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `ln Phi(x)`, accurate for very negative `x`.
pub fn log_ndtr(x: f64) -> f64 {
    if x > 5.0 {
        (-norm_sf(x)).ln_1p()
    } else if x > -20.0 {
        norm_cdf(x).ln()
    } else {
        // Asymptotic expansion of the Mills ratio.
        let z2 = x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..8 {
            term *= -((2 * k - 1) as f64) / z2;
            sum += term;
        }
        -0.5 * z2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + sum.ln()
    }
}

/// `ln(1 - Phi(x))`.
pub fn log_ndtr_upper(x: f64) -> f64 {
    log_ndtr(-x)
}

/// Inverse of the standard normal CDF (Wichura's AS241, double precision).
pub fn ndtri(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r + 6.726_577_092_700_87e4) * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r + 3.930_789_580_009_271e4) * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r + 2.417_807_251_774_506e-1) * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545_4)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r + 1.519_866_656_361_645_7e-2) * r
            + 1.481_039_764_274_800_7e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r + 1.242_660_947_388_078_4e-3) * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_049e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_104;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r + 1.846_318_317_510_054_8e-5) * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// `ln` of the Gaussian normalizer `(2 pi lambda)^(d/2)`.
pub fn log_gaussian_normalizer(lambda: f64, dim: usize) -> f64 {
    0.5 * dim as f64 * (2.0 * PI * lambda).ln()
}

/// Writes a draw from `N(mean, var * I)` into `out`.
pub fn sample_gaussian(mean: &[f64], var: f64, rng: &mut RngStream, out: &mut [f64]) {
    let s = var.sqrt();
    for (o, m) in out.iter_mut().zip(mean) {
        *o = m + s * rng.normal();
    }
}

/// Natural log of the standard normal mass of `[a, b]`.
pub fn log_normal_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        let la = log_ndtr_upper(a);
        let lb = log_ndtr_upper(b);
        la + (-(lb - la).exp()).ln_1p()
    } else if b <= 0.0 {
        log_normal_mass(-b, -a)
    } else {
        (1.0 - norm_sf(b) - norm_cdf(a)).ln()
    }
}

const TAIL_SWITCH: f64 = 8.0;
const MIN_MASS_LN: f64 = -690.775_527_898_213_7; // ln(1e-300)

/// Standard normal restricted to `[a, b]` with `b > 0`.
fn std_truncated(a: f64, b: f64, rng: &mut RngStream) -> f64 {
    if a >= TAIL_SWITCH {
        return std_tail(a, b, rng);
    }
    let u = rng.uniform_open();
    if a >= 0.0 {
        // Work with upper-tail probabilities so `a` in (0, 8) keeps precision.
        let pa = norm_sf(a);
        let pb = if b.is_finite() { norm_sf(b) } else { 0.0 };
        let q = pa - u * (pa - pb);
        -ndtri(q)
    } else {
        let pa = norm_cdf(a);
        let pb = if b.is_finite() { norm_cdf(b) } else { 1.0 };
        ndtri(pa + u * (pb - pa))
    }
}

/// Rejection sampling for `[a, b]` with `a >= 8`.
fn std_tail(a: f64, b: f64, rng: &mut RngStream) -> f64 {
    if b.is_finite() && 0.5 * (b * b - a * a) < 1.0 {
        loop {
            let z = a + (b - a) * rng.uniform();
            if rng.uniform_open().ln() <= 0.5 * (a * a - z * z) {
                return z;
            }
        }
    }
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let z = a - rng.uniform_open().ln() / alpha;
        if z > b {
            continue;
        }
        if rng.uniform_open().ln() <= -0.5 * (z - alpha) * (z - alpha) {
            return z;
        }
    }
}

/// Draws from `N(mean, var)` restricted to `[lower, upper]`.
///
/// Fails with [`Error::Underflow`] when the interval carries less than
/// `1e-300` of the Gaussian mass.
pub fn sample_truncated_normal(mean: f64, var: f64, lower: f64, upper: f64, rng: &mut RngStream) -> Result<f64> {
    if !(var > 0.0) || !mean.is_finite() {
        return Err(invalid(format!("truncated normal needs var > 0 and finite mean, got var={var}, mean={mean}")));
    }
    if !(lower < upper) {
        return Err(invalid(format!("empty interval [{lower}, {upper}]")));
    }
    let s = var.sqrt();
    let a = (lower - mean) / s;
    let b = (upper - mean) / s;
    if log_normal_mass(a, b) < MIN_MASS_LN {
        return Err(Error::Underflow(format!("interval [{lower}, {upper}] has negligible mass under N({mean}, {var})")));
    }
    let z = if b <= 0.0 { -std_truncated(-b, -a, rng) } else { std_truncated(a, b, rng) };
    Ok((mean + s * z).clamp(lower, upper))
}

/// Log-weights of the two half-line components of the l1-tilted Gaussian
/// `exp(-(x - v)^2 / (2 lambda) - r |x|)`, with the common factor
/// `exp(r^2 lambda / 2)` dropped: `(positive, negative)`.
pub fn l1_branch_log_weights(v: f64, lambda: f64, r: f64) -> (f64, f64) {
    let s = lambda.sqrt();
    let pos = -v * r + log_ndtr((v - r * lambda) / s);
    let neg = v * r + log_ndtr(-(v + r * lambda) / s);
    (pos, neg)
}

/// `ln` of `int exp(-(x - v)^2 / (2 lambda) - r |x|) dx`.
pub fn l1_log_normalizer(v: f64, lambda: f64, r: f64) -> f64 {
    let (p, n) = l1_branch_log_weights(v, lambda, r);
    let m = p.max(n);
    m + ((p - m).exp() + (n - m).exp()).ln() + 0.5 * r * r * lambda + 0.5 * (2.0 * PI * lambda).ln()
}

/// Exact draw from the density proportional to
/// `exp(-(x - v)^2 / (2 lambda) - r |x|)`.
pub fn sample_l1_quadratic_1d(v: f64, lambda: f64, r: f64, rng: &mut RngStream) -> Result<f64> {
    if !(lambda > 0.0) || !(r >= 0.0) || !v.is_finite() {
        return Err(invalid(format!("l1 oracle needs lambda > 0, r >= 0, finite v; got {lambda}, {r}, {v}")));
    }
    if r == 0.0 {
        return Ok(v + lambda.sqrt() * rng.normal());
    }
    let (lp, ln) = l1_branch_log_weights(v, lambda, r);
    // Probability of the positive branch, computed without overflow.
    let p_pos = 1.0 / (1.0 + (ln - lp).exp());
    if rng.uniform() < p_pos {
        sample_truncated_normal(v - r * lambda, lambda, 0.0, f64::INFINITY, rng)
    } else {
        sample_truncated_normal(v + r * lambda, lambda, f64::NEG_INFINITY, 0.0, rng)
    }
}

/// Radius `R` with `Pr[|x - x*| > R] <= delta` for a `mu`-strongly
/// logconcave density in dimension `d`.
pub fn strongly_logconcave_radius(dim: usize, mu: f64, delta: f64) -> f64 {
    let d = dim as f64;
    let t = (1.0 / delta).ln() / d;
    (d / mu).sqrt() * (2.0 + 2.0 * t.powf(0.25).max(t.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ndtri_inverts_cdf() {
        for &p in &[1e-300, 1e-50, 1e-12, 1e-4, 0.02, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-10] {
            let x = ndtri(p);
            let back = norm_cdf(x);
            assert!(((back - p) / p).abs() < 1e-9, "p={p} x={x} back={back}");
        }
        assert!((ndtri(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((ndtri(0.5)).abs() < 1e-16);
    }

    #[test]
    fn log_ndtr_matches_direct_and_asymptotic() {
        for &x in &[-3.0, 0.0, 2.0, 6.0] {
            assert!((log_ndtr(x) - norm_cdf(x).ln()).abs() < 1e-12);
        }
        // Continuity across the asymptotic switch.
        let a = log_ndtr(-20.0 + 1e-9);
        let b = log_ndtr(-20.0 - 1e-9);
        assert!((a - b).abs() < 1e-6);
        // ln Phi(-40) frozen from the integral definition.
        assert!((log_ndtr(-40.0) - (-804.608_442_013_754_1)).abs() < 1e-8);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let xa: Vec<f64> = (0..5).map(|_| a.normal()).collect();
        let xb: Vec<f64> = (0..5).map(|_| b.normal()).collect();
        let xc: Vec<f64> = (0..5).map(|_| c.normal()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn truncated_stays_in_interval() {
        let mut rng = RngStream::new(1, 0);
        for &(m, lo, hi) in &[(5.0, -1.0, 1.0), (0.0, 9.0, f64::INFINITY), (0.0, 30.0, 30.5), (-30.0, 0.0, 1.0)] {
            for _ in 0..200 {
                let x = sample_truncated_normal(m, 1.0, lo, hi, &mut rng).unwrap();
                assert!(x >= lo && x <= hi);
            }
        }
    }

    #[test]
    fn truncated_far_tail_mean() {
        // Mean of N(0,1) on [10, inf) is phi(10)/Q(10).
        let mut rng = RngStream::new(2, 0);
        let n = 20_000;
        let m: f64 = (0..n).map(|_| sample_truncated_normal(0.0, 1.0, 10.0, f64::INFINITY, &mut rng).unwrap()).sum::<f64>() / n as f64;
        let exact = 10.098_093_233_962_5;
        assert!((m - exact).abs() < 0.01, "{m}");
    }

    #[test]
    fn truncated_underflow_is_an_error() {
        let mut rng = RngStream::new(3, 0);
        let r = sample_truncated_normal(0.0, 1.0, 40.0, 41.0, &mut rng);
        assert!(matches!(r, Err(Error::Underflow(_))));
        assert!(sample_truncated_normal(0.0, 1.0, 1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn l1_normalizer_against_trapezoid() {
        for &(v, lam, r) in &[(1.0, 0.5, 2.0), (-3.0, 2.0, 0.3), (0.0, 1.0, 1.0)] {
            let h = 1e-4;
            let mut s = 0.0;
            let mut x = -40.0;
            while x <= 40.0 {
                s += (-(x - v) * (x - v) / (2.0 * lam) - r * f64::abs(x)).exp() * h;
                x += h;
            }
            assert!((l1_log_normalizer(v, lam, r) - s.ln()).abs() < 1e-6);
        }
    }

    #[test]
    fn radius_is_monotone_in_delta() {
        assert!(strongly_logconcave_radius(3, 1.0, 1e-6) > strongly_logconcave_radius(3, 1.0, 1e-2));
        assert!(strongly_logconcave_radius(3, 4.0, 1e-2) < strongly_logconcave_radius(3, 1.0, 1e-2));
    }
}
