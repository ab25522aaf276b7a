//! Goodness-of-fit and two-sample tests, and small Monte Carlo helpers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{invalid, Result};
use crate::gaussian::RngStream;

/// Permutations used by [`energy_test`].
pub const ENERGY_PERMUTATIONS: usize = 500;
/// Per-side cap on points entering the multivariate energy statistic.
pub const ENERGY_CAP: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let r = n_eff.sqrt();
    kolmogorov_sf((r + 0.12 + 0.11 / r) * d)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    if samples.is_empty() {
        return Err(invalid("KS test needs samples"));
    }
    let s = sorted(samples);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(TestResult { statistic: d, p_value: ks_p(d, n) })
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("KS test needs samples on both sides"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(TestResult { statistic: d, p_value: ks_p(d, na * nb / (na + nb)) })
}

/// Within-group sum of pairwise distances over the labelled entries of a
/// sorted pooled sample.
fn group_pair_sum(pooled: &[f64], labels: &[bool], want: bool, size: usize) -> f64 {
    let mut s = 0.0;
    let mut rank = 0.0;
    for (z, &l) in pooled.iter().zip(labels) {
        if l == want {
            s += (2.0 * rank - size as f64 + 1.0) * z;
            rank += 1.0;
        }
    }
    s
}

fn energy_from_sums(total: f64, sa: f64, sb: f64, na: usize, nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let cross = total - sa - sb;
    2.0 * cross / (na * nb) - 2.0 * sa / (na * na) - 2.0 * sb / (nb * nb)
}

fn energy_1d(a: &[f64], b: &[f64], rng: &mut RngStream) -> TestResult {
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&x| (x, false))).collect();
    pooled.sort_by(|p, q| p.0.total_cmp(&q.0));
    let z: Vec<f64> = pooled.iter().map(|p| p.0).collect();
    let mut labels: Vec<bool> = pooled.iter().map(|p| p.1).collect();
    let n = z.len();
    let total: f64 = z.iter().enumerate().map(|(i, x)| (2.0 * i as f64 - n as f64 + 1.0) * x).sum();
    let stat = |labels: &[bool]| {
        energy_from_sums(total, group_pair_sum(&z, labels, true, a.len()), group_pair_sum(&z, labels, false, b.len()), a.len(), b.len())
    };
    let obs = stat(&labels);
    let mut hits = 0;
    for _ in 0..ENERGY_PERMUTATIONS {
        rng.shuffle(&mut labels);
        if stat(&labels) >= obs - 1e-12 * obs.abs() {
            hits += 1;
        }
    }
    TestResult { statistic: obs, p_value: (hits + 1) as f64 / (ENERGY_PERMUTATIONS + 1) as f64 }
}

fn thin(rows: &[Vec<f64>], cap: usize) -> Vec<&Vec<f64>> {
    if rows.len() <= cap {
        return rows.iter().collect();
    }
    (0..cap).map(|k| &rows[k * rows.len() / cap]).collect()
}

fn energy_multi(a: &[Vec<f64>], b: &[Vec<f64>], rng: &mut RngStream) -> TestResult {
    let (ta, tb) = (thin(a, ENERGY_CAP), thin(b, ENERGY_CAP));
    let pts: Vec<&Vec<f64>> = ta.iter().chain(tb.iter()).cloned().collect();
    let n = pts.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = crate::linalg::dist_sq(pts[i], pts[j]).sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let total: f64 = dist.iter().sum::<f64>() / 2.0;
    let (na, nb) = (ta.len(), tb.len());
    let stat = |labels: &[bool]| {
        let (mut sa, mut sb) = (0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                match (labels[i], labels[j]) {
                    (true, true) => sa += dist[i * n + j],
                    (false, false) => sb += dist[i * n + j],
                    _ => {}
                }
            }
        }
        energy_from_sums(total, sa, sb, na, nb)
    };
    let mut labels: Vec<bool> = (0..n).map(|i| i < na).collect();
    let obs = stat(&labels);
    let mut hits = 0;
    for _ in 0..ENERGY_PERMUTATIONS {
        rng.shuffle(&mut labels);
        if stat(&labels) >= obs - 1e-12 * obs.abs() {
            hits += 1;
        }
    }
    TestResult { statistic: obs, p_value: (hits + 1) as f64 / (ENERGY_PERMUTATIONS + 1) as f64 }
}

/// Energy-distance permutation test on rows of equal dimension.
pub fn energy_test(a: &[Vec<f64>], b: &[Vec<f64>], rng: &mut RngStream) -> Result<TestResult> {
    let d = check_rows(a, b)?;
    if d == 1 {
        let (fa, fb): (Vec<f64>, Vec<f64>) = (a.iter().map(|r| r[0]).collect(), b.iter().map(|r| r[0]).collect());
        Ok(energy_1d(&fa, &fb, rng))
    } else {
        Ok(energy_multi(a, b, rng))
    }
}

fn check_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("two-sample test needs rows on both sides"));
    }
    let d = a[0].len();
    if d == 0 || a.iter().chain(b).any(|r| r.len() != d) {
        return Err(invalid("dimension mismatch between samples"));
    }
    Ok(d)
}

/// Per-marginal KS with Bonferroni correction, the energy test, and their
/// combination `min(1, 2 min(p_ks, p_energy))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleReport {
    pub marginal_ks: Vec<TestResult>,
    pub ks_p_bonferroni: f64,
    pub energy: TestResult,
    pub p_value: f64,
}

pub fn two_sample_test(a: &[Vec<f64>], b: &[Vec<f64>], seed: u64) -> Result<TwoSampleReport> {
    let d = check_rows(a, b)?;
    let mut marginal_ks = Vec::with_capacity(d);
    for j in 0..d {
        let (ca, cb): (Vec<f64>, Vec<f64>) = (a.iter().map(|r| r[j]).collect(), b.iter().map(|r| r[j]).collect());
        marginal_ks.push(ks_two_sample(&ca, &cb)?);
    }
    let ks_p_bonferroni = bonferroni(marginal_ks.iter().map(|t| t.p_value));
    let energy = energy_test(a, b, &mut RngStream::new(seed, u64::MAX))?;
    let p_value = (2.0 * ks_p_bonferroni.min(energy.p_value)).min(1.0);
    Ok(TwoSampleReport { marginal_ks, ks_p_bonferroni, energy, p_value })
}

/// `min(1, m min_i p_i)`.
pub fn bonferroni(ps: impl IntoIterator<Item = f64>) -> f64 {
    let (mut m, mut lo) = (0usize, 1.0f64);
    for p in ps {
        m += 1;
        lo = lo.min(p);
    }
    (m as f64 * lo).min(1.0)
}

/// Sample mean and its standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// `P(Bin(n, p) > k)`.
pub fn binomial_upper_tail(n: u64, p: f64, k: u64) -> Result<f64> {
    let b = Binomial::new(p, n).map_err(|e| invalid(e.to_string()))?;
    Ok(b.sf(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::norm_cdf;

    fn normals(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut r = RngStream::new(seed, 0);
        (0..n).map(|_| r.normal() + shift).collect()
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Asymptotic critical values: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01.
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_one_sample_calibrated_and_powered() {
        let x = normals(1, 10_000, 0.0);
        assert!(ks_one_sample(&x, norm_cdf).unwrap().p_value > 0.01);
        let y = normals(2, 10_000, 0.1);
        assert!(ks_one_sample(&y, norm_cdf).unwrap().p_value < 1e-3);
    }

    #[test]
    fn identical_inputs_give_p_one() {
        let x: Vec<Vec<f64>> = normals(3, 200, 0.0).into_iter().map(|v| vec![v, -v]).collect();
        let r = two_sample_test(&x, &x, 7).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.ks_p_bonferroni, 1.0);
    }

    #[test]
    fn shifted_normals_rejected() {
        let a: Vec<Vec<f64>> = normals(4, 10_000, 0.0).into_iter().map(|v| vec![v]).collect();
        let b: Vec<Vec<f64>> = normals(5, 10_000, 0.5).into_iter().map(|v| vec![v]).collect();
        assert!(two_sample_test(&a, &b, 1).unwrap().p_value < 1e-3);
    }

    #[test]
    fn energy_1d_matches_brute_force() {
        let a = normals(6, 30, 0.0);
        let b = normals(7, 20, 0.3);
        let mut e = 0.0;
        for x in &a {
            for y in &b {
                e += 2.0 * (x - y).abs() / (30.0 * 20.0);
            }
        }
        for x in &a {
            for y in &a {
                e -= (x - y).abs() / 900.0;
            }
        }
        for x in &b {
            for y in &b {
                e -= (x - y).abs() / 400.0;
            }
        }
        let r = energy_1d(&a, &b, &mut RngStream::new(0, 0));
        assert!((r.statistic - e).abs() < 1e-10);
        let ra: Vec<Vec<f64>> = a.iter().map(|v| vec![*v, 0.0]).collect();
        let rb: Vec<Vec<f64>> = b.iter().map(|v| vec![*v, 0.0]).collect();
        let m = energy_multi(&ra, &rb, &mut RngStream::new(0, 0));
        assert!((m.statistic - e).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(two_sample_test(&[vec![1.0]], &[vec![1.0, 2.0]], 0).is_err());
    }

    #[test]
    fn binomial_tail_small_case() {
        // P(Bin(3, 1/2) > 1) = 1/2.
        assert!((binomial_upper_tail(3, 0.5, 1).unwrap() - 0.5).abs() < 1e-12);
    }
}
