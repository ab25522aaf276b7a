use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rgo_sampling::config::{RunConfig, SamplerKind};
use rgo_sampling::models::ModelSpec;
use rgo_sampling::run::{read_csv, run, run_and_write, write_json};
use rgo_sampling::stats::two_sample_test;
use rgo_sampling::validate::{run_suite, Suite, SuiteReport};

#[derive(Parser)]
#[command(name = "rgo", version, about = "Samplers for structured logconcave distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chains described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a validation suite, or `all` of them.
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the suite reports as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query tallies per sample over a parameter sweep.
    Bench {
        #[arg(long, value_enum)]
        sweep: Sweep,
        #[arg(long, value_enum, default_value = "wellcond")]
        sampler: BenchSampler,
        #[arg(long, default_value_t = 16)]
        chains: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compare two sample CSVs (marginal KS plus energy test).
    TwoSample {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    Kappa,
    Dim,
    Eps,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchSampler {
    Wellcond,
    WellcondZeroth,
    Composite,
    CompositeAccel,
    Finitesum,
    FinitesumAccel,
}

impl BenchSampler {
    fn kind(self) -> SamplerKind {
        match self {
            BenchSampler::Wellcond => SamplerKind::Wellcond,
            BenchSampler::WellcondZeroth => SamplerKind::WellcondZeroth,
            BenchSampler::Composite => SamplerKind::Composite,
            BenchSampler::CompositeAccel => SamplerKind::CompositeAccel,
            BenchSampler::Finitesum => SamplerKind::Finitesum,
            BenchSampler::FinitesumAccel => SamplerKind::FinitesumAccel,
        }
    }

    /// A model this sampler accepts with the given curvatures.
    fn model(self, curvature: Vec<f64>) -> ModelSpec {
        let d = curvature.len();
        match self {
            BenchSampler::Wellcond | BenchSampler::WellcondZeroth => ModelSpec::Gaussian { curvature, mean: vec![0.0; d] },
            BenchSampler::Composite | BenchSampler::CompositeAccel => {
                ModelSpec::LassoGaussian { curvature, mean: vec![1.0; d], reg: vec![1.0; d] }
            }
            BenchSampler::Finitesum | BenchSampler::FinitesumAccel => {
                ModelSpec::QuadraticFinitesum { n: 20, curvature, smoothness: None, spread: 1.0, data_seed: 1 }
            }
        }
    }
}

fn spread(d: usize, kappa: f64) -> Vec<f64> {
    if d == 1 {
        return vec![kappa];
    }
    (0..d).map(|j| 1.0 + (kappa - 1.0) * j as f64 / (d - 1) as f64).collect()
}

fn bench(sweep: Sweep, sampler: BenchSampler, chains: usize, seed: u64) -> Result<()> {
    let points: Vec<(f64, Vec<f64>, f64)> = match sweep {
        Sweep::Kappa => [2.0, 4.0, 8.0, 16.0].iter().map(|&k| (k, spread(2, k), 0.1)).collect(),
        Sweep::Dim => [2usize, 4, 8, 16].iter().map(|&d| (d as f64, spread(d, 4.0), 0.1)).collect(),
        Sweep::Eps => [0.2, 0.1, 0.05, 0.025].iter().map(|&e| (e, spread(2, 4.0), e)).collect(),
    };
    let label = match sweep {
        Sweep::Kappa => "kappa",
        Sweep::Dim => "dim",
        Sweep::Eps => "eps",
    };
    println!("{label},values_per_sample,gradients_per_sample,summand_queries_per_sample,rgo_calls_per_sample,failed_chains");
    for (x, curvature, eps) in points {
        let cfg = RunConfig {
            model: sampler.model(curvature),
            sampler: sampler.kind(),
            eps,
            seed,
            chains,
            constants: Default::default(),
            output: Default::default(),
            timings: false,
        };
        cfg.validate()?;
        let (rep, _) = run(&cfg)?;
        let ok = rep.samples.max(1) as f64;
        println!(
            "{x},{},{},{},{},{}",
            rep.totals.values as f64 / ok,
            rep.totals.gradients as f64 / ok,
            rep.summand_totals.total() as f64 / ok,
            rep.diagnostics.rgo_calls as f64 / ok,
            chains - rep.samples
        );
    }
    Ok(())
}

fn validate(suite: &str, seed: u64, out: Option<&Path>) -> Result<bool> {
    let suites: Vec<Suite> = if suite == "all" { Suite::ALL.to_vec() } else { vec![Suite::parse(suite)?] };
    let mut reports: Vec<SuiteReport> = Vec::new();
    for s in suites {
        let r = run_suite(s, seed).with_context(|| format!("suite {}", s.name()))?;
        for c in &r.checks {
            println!(
                "{} {}/{}: statistic {:.6e} threshold {:.6e}{}{}",
                if c.pass { "ok  " } else { "FAIL" },
                s.name(),
                c.name,
                c.statistic,
                c.threshold,
                c.p_value.map(|p| format!(" p {p:.4e}")).unwrap_or_default(),
                if c.retried { " (retried)" } else { "" }
            );
        }
        println!("{} {}", if r.pass { "PASS" } else { "FAIL" }, s.name());
        reports.push(r);
    }
    if let Some(p) = out {
        write_json(p, &reports)?;
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let rep = run_and_write(&cfg)?;
            let summary = serde_json::json!({
                "samples": rep.samples,
                "chains": rep.config.chains,
                "totals": rep.totals,
                "summand_totals": rep.summand_totals,
                "rates": rep.rates,
                "anomalies": rep.anomalies.len(),
                "truth_check_pass": rep.truth_check.as_ref().map(|t| t.pass),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(rep.anomalies.is_empty())
        }
        Command::Validate { suite, seed, out } => validate(&suite, seed, out.as_deref()),
        Command::Bench { sweep, sampler, chains, seed } => {
            if chains == 0 {
                bail!("--chains must be at least 1");
            }
            bench(sweep, sampler, chains, seed)?;
            Ok(true)
        }
        Command::TwoSample { a, b, seed } => {
            let xa = read_csv(&a).with_context(|| format!("reading {}", a.display()))?;
            let xb = read_csv(&b).with_context(|| format!("reading {}", b.display()))?;
            let rep = two_sample_test(&xa, &xb, seed)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(rep.p_value > rgo_sampling::validate::ALPHA)
        }
    }
}
