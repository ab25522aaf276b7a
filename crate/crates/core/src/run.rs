//! The `run` pipeline: build the model, fan out chains, collect samples and
//! a report.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainDiagnostics, ChainState};
use crate::composite::{accelerated_composite_sample, composite_sample, CompositeProblem};
use crate::config::{RunConfig, SamplerKind};
use crate::error::{invalid, Error, Result};
use crate::finitesum::{accelerated_finitesum_sample, sample_finitesum};
use crate::models::{build_model, Model};
use crate::oracle::{FiniteSumOracle, FunctionOracle, QueryTally};
use crate::parallel::run_chains;
use crate::reduction::{alternate_sample, warm_start_composite};
use crate::stats::{bonferroni, ks_one_sample, TestResult};
use crate::wellcond::{sample_wellconditioned, sample_wellconditioned_zeroth};

/// Query counts and outcome of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub values: u64,
    pub gradients: u64,
    pub summand_values: u64,
    pub summand_gradients: u64,
    pub rgo_calls: u64,
    /// Outer iterations (reduction rounds or walk steps).
    pub iterations: usize,
    pub error: Option<String>,
}

/// Ratios derived from the summed diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub xsample_mean_rounds: Option<f64>,
    pub ysample_mean_rounds: Option<f64>,
    pub xsample_fallback_fraction: Option<f64>,
    pub mrw_acceptance: Option<f64>,
}

/// Per-marginal KS of the output against the model's reference law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthCheck {
    pub marginal_ks: Vec<TestResult>,
    pub p_bonferroni: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub dim: usize,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub kappa: f64,
    pub x_star: Vec<f64>,
    pub samples: usize,
    pub totals: QueryTally,
    pub summand_totals: QueryTally,
    pub diagnostics: ChainDiagnostics,
    pub rates: Rates,
    pub anomalies: Vec<String>,
    pub truth_check: Option<TruthCheck>,
    pub wall_time_s: Option<f64>,
    pub chains: Vec<ChainSummary>,
}

fn ratio(a: u64, b: u64) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl Rates {
    pub fn from_diag(d: &ChainDiagnostics) -> Self {
        Rates {
            xsample_mean_rounds: ratio(d.xsample_rounds, d.xsample_calls),
            ysample_mean_rounds: ratio(d.ysample_rounds, d.ysample_calls),
            xsample_fallback_fraction: ratio(d.fallback_calls, d.xsample_calls),
            mrw_acceptance: ratio(d.mrw_accepts, d.mrw_steps),
        }
    }
}

/// Runs one chain of `sampler` on per-chain oracle copies; returns the
/// draw and the number of outer iterations.
pub fn sample_one(
    model: &Model,
    f: &FunctionOracle,
    fs: Option<&FiniteSumOracle>,
    cfg: &RunConfig,
    state: &mut ChainState,
) -> Result<(Vec<f64>, usize)> {
    let c = &cfg.constants;
    let need_fs = || fs.ok_or_else(|| invalid("sampler needs a finite-sum model"));
    match cfg.sampler {
        SamplerKind::Wellcond => {
            let o = sample_wellconditioned(f, &model.x_star, cfg.eps, &c.reduction, state)?;
            Ok((o.x, o.iterations))
        }
        SamplerKind::WellcondZeroth => {
            let o = sample_wellconditioned_zeroth(f, &model.x_star, cfg.eps, &c.zeroth, &c.reduction, state)?;
            Ok((o.x, o.iterations))
        }
        SamplerKind::Composite => {
            let p = CompositeProblem::new(f.clone(), model.g.clone(), model.x_star.clone())?;
            let o = composite_sample(&p, cfg.eps, &c.composite, state)?;
            Ok((o.x, o.params.iterations))
        }
        SamplerKind::CompositeAccel => {
            let p = CompositeProblem::new(f.clone(), model.g.clone(), model.x_star.clone())?;
            let o = accelerated_composite_sample(&p, cfg.eps, &c.composite, &c.reduction, state)?;
            Ok((o.x, o.iterations))
        }
        SamplerKind::Finitesum => {
            let o = sample_finitesum(need_fs()?, &model.x_star, cfg.eps, &c.finitesum, state)?;
            Ok((o.x, o.params.iterations))
        }
        SamplerKind::FinitesumAccel => {
            let o = accelerated_finitesum_sample(need_fs()?, cfg.eps, &c.finitesum, &c.svrg, &c.reduction, state)?;
            Ok((o.x, o.iterations))
        }
        SamplerKind::ReductionDirect => {
            let rgo = model.target_rgo.as_ref().ok_or_else(|| invalid("model has no exact target RGO"))?;
            let m = model.meta();
            let start = warm_start_composite(&model.x_star, m.smoothness, m.kappa(), rgo, state)?;
            let o = alternate_sample(rgo, 1.0 / m.smoothness, m.strong_convexity, &start, cfg.eps, &c.reduction, state)?;
            Ok((o.x, o.iterations))
        }
    }
}

/// Minimum chain count before the report includes a [`TruthCheck`].
pub const TRUTH_CHECK_MIN: usize = 100;

/// Executes `cfg`; returns the report and the samples in chain order.
pub fn run(cfg: &RunConfig) -> Result<(RunReport, Vec<Vec<f64>>)> {
    cfg.validate()?;
    let start = Instant::now();
    let model = build_model(&cfg.model)?;
    info!("running {} chains of {:?}", cfg.chains, cfg.sampler);
    let results = run_chains(cfg.chains, cfg.seed, |_, st| {
        let fs = model.finite_sum.as_ref().map(|f| f.with_fresh_counter());
        let f = match &fs {
            Some(fs) => fs.as_function(),
            None => Ok(model.f.with_fresh_counter()),
        };
        let out = f.and_then(|f| sample_one(&model, &f, fs.as_ref(), cfg, st).map(|r| (r, f.tally())));
        (out, fs.map(|f| f.tally()).unwrap_or_default())
    });
    let m = model.meta();
    let mut samples = Vec::with_capacity(cfg.chains);
    let mut chains = Vec::with_capacity(cfg.chains);
    let mut diagnostics = ChainDiagnostics::default();
    let mut totals = QueryTally::default();
    let mut summand_totals = QueryTally::default();
    let mut anomalies = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        diagnostics.merge(&r.diag);
        let (out, st) = r.value;
        summand_totals += st;
        let mut summary = ChainSummary {
            chain: k,
            values: 0,
            gradients: 0,
            summand_values: st.values,
            summand_gradients: st.gradients,
            rgo_calls: r.diag.rgo_calls,
            iterations: 0,
            error: None,
        };
        match out {
            Ok(((x, it), t)) => {
                summary.values = t.values;
                summary.gradients = t.gradients;
                summary.iterations = it;
                totals += t;
                samples.push(x);
            }
            Err(e) => {
                let msg = format!("chain {k} (seed {}, stream {k}): {e}", cfg.seed);
                warn!("{msg}");
                summary.error = Some(e.to_string());
                anomalies.push(msg);
            }
        }
        chains.push(summary);
    }
    let truth_check = if samples.len() >= TRUTH_CHECK_MIN && model.truth.marginal_cdf(0, 0.0).is_some() {
        let mut marginal_ks = Vec::with_capacity(m.dim);
        for j in 0..m.dim {
            let col: Vec<f64> = samples.iter().map(|r| r[j]).collect();
            marginal_ks.push(ks_one_sample(&col, |x| model.truth.marginal_cdf(j, x).unwrap_or(f64::NAN))?);
        }
        let p = bonferroni(marginal_ks.iter().map(|t| t.p_value));
        Some(TruthCheck { marginal_ks, p_bonferroni: p, pass: p > 0.01 })
    } else {
        None
    };
    let report = RunReport {
        config: cfg.clone(),
        dim: m.dim,
        smoothness: m.smoothness,
        strong_convexity: m.strong_convexity,
        kappa: m.kappa(),
        x_star: model.x_star.clone(),
        samples: samples.len(),
        totals,
        summand_totals,
        rates: Rates::from_diag(&diagnostics),
        diagnostics,
        anomalies,
        truth_check,
        wall_time_s: cfg.timings.then(|| start.elapsed().as_secs_f64()),
        chains,
    };
    Ok((report, samples))
}

/// Writes rows as CSV with shortest round-trip decimal formatting.
pub fn write_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_csv_to(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

pub fn write_csv_to(w: &mut impl Write, rows: &[Vec<f64>]) -> Result<()> {
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_csv`]; every row must have the same width.
pub fn read_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    for (k, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| invalid(format!("{}:{}: {e}", path.display(), k + 1)))?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() {
                return Err(invalid(format!("{}:{}: ragged row", path.display(), k + 1)));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::Json)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs `cfg` and writes whichever outputs it names.
pub fn run_and_write(cfg: &RunConfig) -> Result<RunReport> {
    let (report, samples) = run(cfg)?;
    if let Some(p) = &cfg.output.samples {
        write_csv(p, &samples)?;
    }
    if let Some(p) = &cfg.output.report {
        write_json(p, &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    fn cfg(sampler: SamplerKind, model: ModelSpec, chains: usize) -> RunConfig {
        RunConfig { model, sampler, eps: 0.1, seed: 5, chains, constants: Default::default(), output: Default::default(), timings: false }
    }

    #[test]
    fn gaussian_wellcond_shape() {
        let c = cfg(SamplerKind::Wellcond, ModelSpec::Gaussian { curvature: vec![1.0, 2.0], mean: vec![0.0, 1.0] }, 200);
        let (rep, rows) = run(&c).unwrap();
        assert_eq!(rows.len(), 200);
        assert!(rows.iter().all(|r| r.len() == 2));
        assert!(rep.anomalies.is_empty());
        let sum: u64 = rep.chains.iter().map(|c| c.gradients).sum();
        assert_eq!(sum, rep.totals.gradients);
        assert!(rep.truth_check.is_some());
        assert!(rep.wall_time_s.is_none());
    }

    #[test]
    fn replay_is_byte_identical() {
        let c = cfg(SamplerKind::ReductionDirect, ModelSpec::LassoGaussian { curvature: vec![1.0], mean: vec![1.0], reg: vec![1.0] }, 50);
        let (r1, s1) = run(&c).unwrap();
        let (r2, s2) = run(&c).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_csv_to(&mut a, &s1).unwrap();
        write_csv_to(&mut b, &s2).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let rows = vec![vec![0.1, -1e-300, 1.0 / 3.0], vec![f64::MAX, 5e-324, -0.0]];
        write_csv(&p, &rows).unwrap();
        let back = read_csv(&p).unwrap();
        for (x, y) in rows.iter().flatten().zip(back.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
