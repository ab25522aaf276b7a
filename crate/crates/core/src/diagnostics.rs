//! Moment diagnostics for samples claimed to follow a `mu`-strongly
//! logconcave law.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::RngStream;
use crate::linalg::{dist_sq, dot, mean_rows, norm};
use crate::stats::mean_se;

/// Minimum sample size accepted by [`slc_moment_check`].
pub const MIN_MOMENT_SAMPLES: usize = 10_000;
const DIRECTIONS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub checks: Vec<MomentCheck>,
    pub pass: bool,
}

impl MomentReport {
    pub fn check(&self, name: &str) -> Option<&MomentCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, terms: &[f64], bound: f64) -> MomentCheck {
    let (value, se) = mean_se(terms);
    MomentCheck { name: name.into(), value, se, bound, pass: value <= bound + 3.0 * se }
}

/// Directional variances against `1/mu` for ten random unit directions,
/// `E|x - mean|^4` against `3 d^2 / mu^2`, and `E|x - x*|^2` against `d / mu`,
/// each within three standard errors.
pub fn slc_moment_check(samples: &[Vec<f64>], mu: f64, x_star: &[f64], rng: &mut RngStream) -> Result<MomentReport> {
    if samples.len() < MIN_MOMENT_SAMPLES {
        return Err(invalid(format!("moment check needs at least {MIN_MOMENT_SAMPLES} samples")));
    }
    let d = x_star.len();
    if !(mu > 0.0) || samples.iter().any(|r| r.len() != d) {
        return Err(invalid("moment check needs mu > 0 and rows matching x_star"));
    }
    let mean = mean_rows(samples);
    let mut checks = Vec::new();
    for k in 0..DIRECTIONS {
        let mut theta = vec![0.0; d];
        rng.fill_normal(&mut theta);
        let nt = norm(&theta);
        theta.iter_mut().for_each(|t| *t /= nt);
        let c = dot(&theta, &mean);
        let terms: Vec<f64> = samples.iter().map(|r| (dot(&theta, r) - c).powi(2)).collect();
        checks.push(check(&format!("directional_variance_{k}"), &terms, 1.0 / mu));
    }
    let fourth: Vec<f64> = samples.iter().map(|r| dist_sq(r, &mean).powi(2)).collect();
    checks.push(check("fourth_moment", &fourth, 3.0 * (d * d) as f64 / (mu * mu)));
    let second: Vec<f64> = samples.iter().map(|r| dist_sq(r, x_star)).collect();
    checks.push(check("distance_to_minimizer", &second, d as f64 / mu));
    let pass = checks.iter().all(|c| c.pass);
    Ok(MomentReport { checks, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gaussian_passes() {
        let mut r = RngStream::new(11, 0);
        let mu: f64 = 2.0;
        let rows: Vec<Vec<f64>> = (0..20_000).map(|_| vec![r.normal() / mu.sqrt(), r.normal() / mu.sqrt()]).collect();
        let rep = slc_moment_check(&rows, mu, &[0.0, 0.0], &mut r).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn bimodal_fails_fourth_moment() {
        let mut r = RngStream::new(12, 0);
        let rows: Vec<Vec<f64>> = (0..20_000)
            .map(|_| {
                let s = if r.uniform() < 0.5 { -3.0 } else { 3.0 };
                vec![s + 0.2 * r.normal()]
            })
            .collect();
        let rep = slc_moment_check(&rows, 1.0, &[0.0], &mut r).unwrap();
        assert!(!rep.check("fourth_moment").unwrap().pass);
        assert!(!rep.pass);
    }

    #[test]
    fn small_samples_rejected() {
        let mut r = RngStream::new(0, 0);
        assert!(slc_moment_check(&[vec![0.0]], 1.0, &[0.0], &mut r).is_err());
    }
}
