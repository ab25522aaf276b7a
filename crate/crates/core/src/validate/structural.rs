//! Deterministic bound checks by quadrature: normalization ratios, the
//! mean perturbation of a tilted Gaussian, the auxiliary density bracket of
//! the composite sampler, and warm-start warmness.

use crate::composite::omega_radius;
use crate::error::Result;
use crate::models::build_model;
use crate::oracle::shift_to_shared_min;
use crate::quadrature::{log_integral, min_perturb_check, normratio_check, quadrature_domain, Composite1d, DEFAULT_NODES};

use super::estimators::composite_model;
use super::exactness::logistic_model;
use super::Check;

/// Absolute slack on log-scale quadrature comparisons.
const QUAD_TOL: f64 = 1e-8;

fn log_cosh(y: f64) -> f64 {
    y.abs() + (-2.0 * y.abs()).exp().ln_1p() - std::f64::consts::LN_2
}

fn normratio(out: &mut Vec<Check>) -> Result<()> {
    let mu = 2.5;
    let q = move |x: f64| 0.5 * mu * (x - 1.0).powi(2);
    for lambda in [0.1, 1.0, 30.0] {
        let r = normratio_check(&[&q, &q], &[1.0, 1.0], mu, lambda)?;
        out.push(Check::at_most(
            format!("normratio_equality_quadratic_lambda_{lambda}"),
            (r.log_ratio - r.log_bound).abs(),
            QUAD_TOL,
            format!("log ratio {}, log bound {}", r.log_ratio, r.log_bound),
        ));
    }
    let l1 = move |x: f64| 0.5 * mu * x * x + x.abs();
    for lambda in [0.1, 1.0, 30.0] {
        let r = normratio_check(&[&l1], &[0.0], mu, lambda)?;
        out.push(Check::at_most(
            format!("normratio_strict_l1_lambda_{lambda}"),
            r.log_ratio - r.log_bound,
            -1e-4,
            format!("log ratio {}, log bound {}", r.log_ratio, r.log_bound),
        ));
    }
    let r = normratio_check(&[&l1], &[0.0], mu, 1e9)?;
    out.push(Check::at_most("normratio_tends_to_one", r.log_ratio.abs(), 1e-6, format!("lambda = 1e9, log ratio {}", r.log_ratio)));
    Ok(())
}

fn min_perturb(out: &mut Vec<Check>) -> Result<()> {
    for &(x, r) in &[(0.3f64, 0.5f64), (0.8, 1.0), (2.0, 2.0), (4.0, 5.0)] {
        let cap = (1.0 / (2.0 * r * r)).min(r * r / 400.0);
        for eta in [cap, cap / 10.0] {
            let m = min_perturb_check(&log_cosh, 1.0, 0.0, x, r, eta)?;
            let mut c = Check::at_most(
                format!("min_perturb_x_{x}_r_{r}_eta_{eta:.3e}"),
                m.deviation,
                m.bound,
                format!("f = log cosh, L = 1, conditions met: {}", m.conditions_met),
            );
            c.pass &= m.conditions_met;
            out.push(c);
        }
    }
    Ok(())
}

fn composite_ratios(out: &mut Vec<Check>) -> Result<()> {
    let m = build_model(&composite_model())?;
    let meta = m.meta();
    let (ft, gt) = shift_to_shared_min(&m.f, &m.g, &m.x_star)?;
    let fv = |x: f64| ft.value(&[x]);
    let gv = |x: f64| gt.value(&[x]).unwrap_or(f64::INFINITY);
    let eps = 0.1;
    let (l, kappa) = (meta.smoothness, meta.kappa());
    let nominal_eta = 1.0 / (32.0 * l * kappa * (288.0 * kappa / eps).ln());
    let omega = omega_radius(&meta, eps);
    for (tag, eta) in [("nominal_eta", nominal_eta), ("large_eta", 0.25)] {
        let model = Composite1d { f: &fv, g: &gv, x_star: m.x_star[0], smoothness: l, strong_convexity: meta.strong_convexity, eta };
        let r = model.ratios(omega, 4001, 4001)?;
        let detail = format!("eta = {eta:.4e}, log ratio {} in [{}, {}]", r.log_norm_ratio, r.log_norm_lower, r.log_norm_upper);
        out.push(Check::at_most(format!("normratiobound_lower_{tag}"), r.log_norm_lower - r.log_norm_ratio, QUAD_TOL, detail.clone()));
        out.push(Check::at_most(format!("normratiobound_upper_{tag}"), r.log_norm_ratio - r.log_norm_upper, QUAD_TOL, detail));
        if tag == "nominal_eta" {
            out.push(Check::at_least("densityratio_min", r.min_ratio, 0.5, format!("eta = {eta:.4e}, whole grid")));
            out.push(Check::at_most(
                "densityratio_max_in_omega",
                r.max_ratio_in_omega,
                2.0,
                format!("eta = {eta:.4e}, omega = {omega:.4}"),
            ));
        }
    }
    Ok(())
}

/// `sup_x ln(start(x) / target(x))` on the quadrature grid.
fn log_sup_ratio(log_start: &dyn Fn(f64) -> f64, log_target: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let zs = log_integral(log_start, lo, hi, DEFAULT_NODES)?;
    let zt = log_integral(log_target, lo, hi, DEFAULT_NODES)?;
    let n = DEFAULT_NODES;
    let h = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| lo + h * i as f64).map(|x| (log_start(x) - zs) - (log_target(x) - zt)).fold(f64::NEG_INFINITY, f64::max))
}

fn warmness(out: &mut Vec<Check>) -> Result<()> {
    let m = build_model(&logistic_model())?;
    let meta = m.meta();
    let (l, x0) = (meta.smoothness, m.x_star[0]);
    let (lo, hi) = quadrature_domain(x0, meta.strong_convexity);
    let w = log_sup_ratio(&|x| -0.5 * l * (x - x0).powi(2), &|x| -m.f.value(&[x]), lo, hi)?;
    let bound = 0.5 * meta.kappa().ln();
    out.push(Check::at_most("warmness_gaussian_start", w, bound + QUAD_TOL, format!("log warmness {w}, log kappa^(d/2) {bound}")));

    let m = build_model(&composite_model())?;
    let meta = m.meta();
    let (l, x0) = (meta.smoothness, m.x_star[0]);
    let (ft, gt) = shift_to_shared_min(&m.f, &m.g, &m.x_star)?;
    let (lo, hi) = quadrature_domain(x0, meta.strong_convexity);
    let g = |x: f64| gt.value(&[x]).unwrap_or(f64::INFINITY);
    let w = log_sup_ratio(&|x| -g(x) - 0.5 * l * (x - x0).powi(2), &|x| -ft.value(&[x]) - g(x), lo, hi)?;
    let bound = 0.5 * meta.kappa().ln();
    out.push(Check::at_most("warmness_composite_start", w, bound + QUAD_TOL, format!("log warmness {w}, log kappa^(d/2) {bound}")));
    Ok(())
}

pub fn run(_seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    normratio(&mut out)?;
    min_perturb(&mut out)?;
    composite_ratios(&mut out)?;
    warmness(&mut out)?;
    Ok(out)
}
