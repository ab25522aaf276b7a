//! Exact restricted Gaussian oracles for coordinate-separable `g`.

use crate::chain::ChainState;
use crate::error::{invalid, Result};
use crate::gaussian::{sample_l1_quadratic_1d, sample_truncated_normal};
use crate::oracle::RgoSampler;

/// Nonsmooth part of a separable penalty.
#[derive(Clone, Debug, PartialEq)]
pub enum Penalty {
    None,
    /// Indicator of the box `[lower, upper]`.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `sum_i reg_i |x_i|`.
    L1 {
        reg: Vec<f64>,
    },
}

/// `g(x) = sum_i a_i (x_i - m_i)^2 / 2 + penalty(x)`, sampled exactly
/// coordinate by coordinate.
#[derive(Clone, Debug)]
pub struct SeparableRgo {
    dim: usize,
    curvature: Vec<f64>,
    center: Vec<f64>,
    penalty: Penalty,
}

impl SeparableRgo {
    pub fn zero(dim: usize) -> Self {
        Self { dim, curvature: vec![0.0; dim], center: vec![0.0; dim], penalty: Penalty::None }
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(invalid("box needs lower < upper in every coordinate"));
        }
        let dim = lower.len();
        Ok(Self { penalty: Penalty::Box { lower, upper }, ..Self::zero(dim) })
    }

    pub fn l1(reg: Vec<f64>) -> Self {
        let dim = reg.len();
        Self { penalty: Penalty::L1 { reg }, ..Self::zero(dim) }
    }

    /// Adds the diagonal quadratic `sum_i a_i (x_i - m_i)^2 / 2`.
    pub fn with_quadratic(mut self, curvature: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if curvature.len() != self.dim || center.len() != self.dim || curvature.iter().any(|a| !(*a >= 0.0)) {
            return Err(invalid("quadratic part needs nonnegative curvature of matching dimension"));
        }
        for i in 0..self.dim {
            let a = self.curvature[i] + curvature[i];
            if a > 0.0 {
                self.center[i] = (self.curvature[i] * self.center[i] + curvature[i] * center[i]) / a;
            }
            self.curvature[i] = a;
        }
        Ok(self)
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    /// Mean and variance of the Gaussian factor in coordinate `i`.
    #[inline]
    fn coordinate_gaussian(&self, i: usize, lambda: f64, v: f64) -> (f64, f64) {
        if self.curvature[i] == 0.0 {
            return (v, lambda);
        }
        let prec = 1.0 / lambda + self.curvature[i];
        ((v / lambda + self.curvature[i] * self.center[i]) / prec, 1.0 / prec)
    }
}

impl RgoSampler for SeparableRgo {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, lambda: f64, center: &[f64], _tv_tol: f64, state: &mut ChainState, out: &mut [f64]) -> Result<()> {
        for i in 0..self.dim {
            let (m, var) = self.coordinate_gaussian(i, lambda, center[i]);
            out[i] = match &self.penalty {
                Penalty::None => m + var.sqrt() * state.rng.normal(),
                Penalty::Box { lower, upper } => sample_truncated_normal(m, var, lower[i], upper[i], &mut state.rng)?,
                Penalty::L1 { reg } => sample_l1_quadratic_1d(m, var, reg[i], &mut state.rng)?,
            };
        }
        Ok(())
    }

    fn exact(&self) -> bool {
        true
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        let mut s = 0.0;
        for i in 0..self.dim {
            s += 0.5 * self.curvature[i] * (x[i] - self.center[i]).powi(2);
        }
        match &self.penalty {
            Penalty::None => {}
            Penalty::Box { lower, upper } => {
                if x.iter().zip(lower).zip(upper).any(|((xi, l), u)| xi < l || xi > u) {
                    return Some(f64::INFINITY);
                }
            }
            Penalty::L1 { reg } => s += x.iter().zip(reg).map(|(xi, r)| r * xi.abs()).sum::<f64>(),
        }
        Some(s)
    }

    fn prox(&self, lambda: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        for i in 0..self.dim {
            let (m, var) = self.coordinate_gaussian(i, lambda, v[i]);
            out[i] = match &self.penalty {
                Penalty::None => m,
                Penalty::Box { lower, upper } => m.clamp(lower[i], upper[i]),
                Penalty::L1 { reg } => m.signum() * (m.abs() - reg[i] * var).max(0.0),
            };
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prox_of_l1_is_soft_threshold() {
        let g = SeparableRgo::l1(vec![1.0, 1.0]);
        let mut out = [0.0; 2];
        g.prox(0.5, &[2.0, 0.3], &mut out).unwrap();
        assert_eq!(out, [1.5, 0.0]);
    }

    #[test]
    fn prox_with_quadratic_and_box() {
        let g = SeparableRgo::boxed(vec![-1.0], vec![1.0]).unwrap().with_quadratic(vec![1.0], vec![5.0]).unwrap();
        let mut out = [0.0];
        // Unconstrained minimizer of (x-5)^2/2 + (x-0)^2/2 is 2.5, clamped to 1.
        g.prox(1.0, &[0.0], &mut out).unwrap();
        assert_eq!(out[0], 1.0);
        assert_eq!(g.value(&[2.0]), Some(f64::INFINITY));
    }

    #[test]
    fn quadratic_rgo_moments() {
        // exp(-x^2/(2*1) - 3(x-1)^2/2): precision 4, mean 3/4.
        let g = SeparableRgo::zero(1).with_quadratic(vec![3.0], vec![1.0]).unwrap();
        let mut st = ChainState::new(5, 0);
        let n = 40_000;
        let mut out = [0.0];
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            g.sample(1.0, &[0.0], 0.0, &mut st, &mut out).unwrap();
            s += out[0];
            s2 += out[0] * out[0];
        }
        let m = s / n as f64;
        let v = s2 / n as f64 - m * m;
        assert!((m - 0.75).abs() < 4.0 * (0.25f64 / n as f64).sqrt());
        assert!((v - 0.25).abs() < 0.01);
    }
}
