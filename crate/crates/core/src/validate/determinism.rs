//! Replays: the same seed must give byte-identical suite reports, sample
//! CSVs and run reports.

use crate::composite::CompositeConfig;
use crate::config::{Constants, RunConfig, SamplerKind};
use crate::error::Result;
use crate::models::ModelSpec;
use crate::run::{run as run_config, write_csv_to};

use super::{run_suite, Check, Suite};

/// Suites cheap enough to replay here.
pub const REPLAYED: [Suite; 3] = [Suite::Rejection, Suite::Structural, Suite::Coupling];

fn configs(seed: u64) -> Vec<RunConfig> {
    let base = |model: ModelSpec, sampler: SamplerKind| RunConfig {
        model,
        sampler,
        eps: 0.1,
        seed,
        chains: 8,
        constants: Constants { composite: CompositeConfig { c_k: 1.0, ..CompositeConfig::default() }, ..Constants::default() },
        output: Default::default(),
        timings: false,
    };
    vec![
        base(ModelSpec::Gaussian { curvature: vec![1.0, 3.0], mean: vec![0.0, 1.0] }, SamplerKind::Wellcond),
        base(
            ModelSpec::Custom1d { logistic_weight: 1.0, logistic_slope: 2.0, quad_weight: 1.0, quad_center: 0.0, l1_weight: 0.0 },
            SamplerKind::WellcondZeroth,
        ),
        base(ModelSpec::LassoGaussian { curvature: vec![1.0, 2.0], mean: vec![1.0, -0.5], reg: vec![1.0, 1.0] }, SamplerKind::Composite),
        base(
            ModelSpec::BoxGaussian { curvature: vec![1.0, 2.0], mean: vec![0.0, 2.0], lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] },
            SamplerKind::ReductionDirect,
        ),
        base(
            ModelSpec::QuadraticFinitesum { n: 10, curvature: vec![1.0, 2.0], smoothness: None, spread: 1.0, data_seed: 2 },
            SamplerKind::Finitesum,
        ),
        base(ModelSpec::LogisticFinitesum { n: 10, dim: 2, ridge: 1.0, scale: 0.5, data_seed: 4 }, SamplerKind::FinitesumAccel),
    ]
}

fn run_bytes(cfg: &RunConfig) -> Result<(Vec<u8>, Vec<u8>)> {
    let (report, samples) = run_config(cfg)?;
    let mut csv = Vec::new();
    write_csv_to(&mut csv, &samples)?;
    Ok((csv, serde_json::to_vec_pretty(&report)?))
}

pub fn run(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for suite in REPLAYED {
        let a = serde_json::to_vec_pretty(&run_suite(suite, seed)?)?;
        let b = serde_json::to_vec_pretty(&run_suite(suite, seed)?)?;
        out.push(Check::at_least(
            format!("suite_{}_replay", suite.name()),
            f64::from(u8::from(a == b)),
            1.0,
            format!("{} JSON bytes", a.len()),
        ));
    }
    for cfg in configs(seed) {
        let (csv_a, json_a) = run_bytes(&cfg)?;
        let (csv_b, json_b) = run_bytes(&cfg)?;
        let tag = serde_json::to_value(cfg.sampler)?.as_str().unwrap_or("run").to_string();
        out.push(Check::at_least(
            format!("run_{tag}_csv_replay"),
            f64::from(u8::from(csv_a == csv_b)),
            1.0,
            format!("{} CSV bytes", csv_a.len()),
        ));
        out.push(Check::at_least(
            format!("run_{tag}_json_replay"),
            f64::from(u8::from(json_a == json_b)),
            1.0,
            format!("{} JSON bytes", json_a.len()),
        ));
    }
    Ok(out)
}
