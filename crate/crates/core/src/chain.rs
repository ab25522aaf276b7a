//! Per-chain state: the random stream plus running diagnostics.

use serde::{Deserialize, Serialize};

use crate::gaussian::RngStream;

/// Counters collected while a single chain runs.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ChainDiagnostics {
    pub rgo_calls: u64,
    pub xsample_calls: u64,
    pub xsample_rounds: u64,
    pub gate_failures: u64,
    pub fallback_calls: u64,
    pub fallback_steps: u64,
    pub fallback_accepts: u64,
    pub ysample_calls: u64,
    pub ysample_rounds: u64,
    pub ysample_fallbacks: u64,
    pub joint_calls: u64,
    pub estimator_rounds: u64,
    pub omega_misses: u64,
    pub estimator_round_cap_hits: u64,
    pub max_log_theta: f64,
    pub mrw_steps: u64,
    pub mrw_accepts: u64,
    pub mrw_capped: u64,
    pub mrw_guard_rejections: u64,
    pub optimizer_iterations: u64,
    /// Total variation charged by approximate oracle calls.
    pub tv_budget_spent: f64,
}

impl ChainDiagnostics {
    pub fn merge(&mut self, o: &ChainDiagnostics) {
        self.rgo_calls += o.rgo_calls;
        self.xsample_calls += o.xsample_calls;
        self.xsample_rounds += o.xsample_rounds;
        self.gate_failures += o.gate_failures;
        self.fallback_calls += o.fallback_calls;
        self.fallback_steps += o.fallback_steps;
        self.fallback_accepts += o.fallback_accepts;
        self.ysample_calls += o.ysample_calls;
        self.ysample_rounds += o.ysample_rounds;
        self.ysample_fallbacks += o.ysample_fallbacks;
        self.joint_calls += o.joint_calls;
        self.estimator_rounds += o.estimator_rounds;
        self.omega_misses += o.omega_misses;
        self.estimator_round_cap_hits += o.estimator_round_cap_hits;
        self.max_log_theta = self.max_log_theta.max(o.max_log_theta);
        self.mrw_steps += o.mrw_steps;
        self.mrw_accepts += o.mrw_accepts;
        self.mrw_capped += o.mrw_capped;
        self.mrw_guard_rejections += o.mrw_guard_rejections;
        self.optimizer_iterations += o.optimizer_iterations;
        self.tv_budget_spent += o.tv_budget_spent;
    }
}

/// Mutable state threaded through every sampler call of one chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub rng: RngStream,
    pub diag: ChainDiagnostics,
}

impl ChainState {
    pub fn new(seed: u64, chain: u64) -> Self {
        Self { rng: RngStream::new(seed, chain), diag: ChainDiagnostics::default() }
    }
}
