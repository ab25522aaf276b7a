//! Fan-out of independent chains. Chain `c` always draws from stream
//! `(seed, c)`, so results do not depend on the worker count or on whether
//! the `parallel` feature is enabled.

use crate::chain::{ChainDiagnostics, ChainState};

/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "RGO_THREADS";

/// Output of one chain with its diagnostics.
#[derive(Clone, Debug)]
pub struct ChainRun<T> {
    pub value: T,
    pub diag: ChainDiagnostics,
}

/// Worker count from `RGO_THREADS`, or the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn one<T, F>(seed: u64, c: usize, job: &F) -> ChainRun<T>
where
    F: Fn(usize, &mut ChainState) -> T,
{
    let mut st = ChainState::new(seed, c as u64);
    let value = job(c, &mut st);
    ChainRun { value, diag: st.diag }
}

/// Runs `chains` chains one after another.
pub fn run_chains_sequential<T, F>(chains: usize, seed: u64, job: F) -> Vec<ChainRun<T>>
where
    F: Fn(usize, &mut ChainState) -> T,
{
    (0..chains).map(|c| one(seed, c, &job)).collect()
}

/// Runs `chains` chains on a pool of [`worker_count`] threads; output is in
/// chain order.
#[cfg(feature = "parallel")]
pub fn run_chains<T, F>(chains: usize, seed: u64, job: F) -> Vec<ChainRun<T>>
where
    T: Send,
    F: Fn(usize, &mut ChainState) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let workers = worker_count();
    if workers <= 1 || chains <= 1 {
        return run_chains_sequential(chains, seed, job);
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..chains).into_par_iter().map(|c| one(seed, c, &job)).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running chains sequentially");
            run_chains_sequential(chains, seed, job)
        }
    }
}

/// Sequential stand-in used when the `parallel` feature is off.
#[cfg(not(feature = "parallel"))]
pub fn run_chains<T, F>(chains: usize, seed: u64, job: F) -> Vec<ChainRun<T>>
where
    T: Send,
    F: Fn(usize, &mut ChainState) -> T + Sync + Send,
{
    run_chains_sequential(chains, seed, job)
}
