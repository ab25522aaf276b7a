//! Run configuration as flat JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::composite::CompositeConfig;
use crate::error::{Error, Result};
use crate::finitesum::FiniteSumConfig;
use crate::models::ModelSpec;
use crate::optimize::SvrgConfig;
use crate::reduction::ReductionConfig;
use crate::wellcond::ZerothConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Wellcond,
    WellcondZeroth,
    Composite,
    CompositeAccel,
    Finitesum,
    FinitesumAccel,
    ReductionDirect,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 7] = [
        SamplerKind::Wellcond,
        SamplerKind::WellcondZeroth,
        SamplerKind::Composite,
        SamplerKind::CompositeAccel,
        SamplerKind::Finitesum,
        SamplerKind::FinitesumAccel,
        SamplerKind::ReductionDirect,
    ];

    /// Whether this sampler can target `model`.
    pub fn supports(self, model: &ModelSpec) -> bool {
        match self {
            SamplerKind::Wellcond | SamplerKind::WellcondZeroth => !model.has_composite(),
            SamplerKind::Composite | SamplerKind::CompositeAccel => !model.is_finite_sum(),
            SamplerKind::Finitesum | SamplerKind::FinitesumAccel => model.is_finite_sum(),
            SamplerKind::ReductionDirect => model.has_target_rgo(),
        }
    }
}

/// Overrides of algorithm constants; omitted keys keep their defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub reduction: ReductionConfig,
    pub composite: CompositeConfig,
    pub finitesum: FiniteSumConfig,
    pub zeroth: ZerothConfig,
    pub svrg: SvrgConfig,
}

/// Where to write results; unset paths are not written.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub samples: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub sampler: SamplerKind,
    pub eps: f64,
    pub seed: u64,
    pub chains: usize,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub output: OutputPaths,
    /// Record wall time in the report. Off by default so reports replay
    /// byte for byte.
    #[serde(default)]
    pub timings: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Collects every problem with the configuration into one error.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.eps > 0.0 && self.eps < 1.0) {
            problems.push(format!("eps must lie in (0,1), got {}", self.eps));
        }
        if self.chains == 0 {
            problems.push("chains must be at least 1".to_string());
        }
        if self.model.dim() == 0 {
            problems.push("model dimension must be at least 1".to_string());
        }
        if !self.sampler.supports(&self.model) {
            problems.push(format!(
                "sampler {:?} cannot target model kind {}",
                self.sampler,
                serde_json::to_value(&self.model).ok().and_then(|v| v["kind"].as_str().map(String::from)).unwrap_or_default()
            ));
        }
        let c = &self.constants;
        let positive = [
            ("constants.reduction.constant", c.reduction.constant),
            ("constants.composite.c_k", c.composite.c_k),
            ("constants.finitesum.step_coef", c.finitesum.step_coef),
            ("constants.finitesum.iter_coef", c.finitesum.iter_coef),
            ("constants.finitesum.radius_coef", c.finitesum.radius_coef),
            ("constants.zeroth.step_coef", c.zeroth.step_coef),
            ("constants.zeroth.iter_coef", c.zeroth.iter_coef),
            ("constants.svrg.tol", c.svrg.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        }
        if c.composite.max_rounds == 0 {
            problems.push("constants.composite.max_rounds must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"model":{"kind":"gaussian","curvature":[1.0,2.0],"mean":[0.0,0.0]},
        "sampler":"wellcond","eps":0.05,"seed":3,"chains":4}"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let c = RunConfig::from_json(BASE).unwrap();
        assert_eq!(c.constants, Constants::default());
        assert!(!c.timings);
    }

    #[test]
    fn partial_constant_override() {
        let text = BASE.replace("\"chains\":4", "\"chains\":4,\"constants\":{\"composite\":{\"c_k\":1.0}}");
        let c = RunConfig::from_json(&text).unwrap();
        assert_eq!(c.constants.composite.c_k, 1.0);
        assert_eq!(c.constants.composite.max_rounds, CompositeConfig::default().max_rounds);
    }

    #[test]
    fn eps_and_seed_are_required() {
        assert!(RunConfig::from_json(&BASE.replace("\"eps\":0.05,", "")).is_err());
        assert!(RunConfig::from_json(&BASE.replace("\"seed\":3,", "")).is_err());
        assert!(RunConfig::from_json(&BASE.replace("\"chains\":4", "\"chains\":4,\"bogus\":1")).is_err());
    }

    #[test]
    fn all_problems_listed_together() {
        let text = r#"{"model":{"kind":"logistic_finitesum","n":5,"dim":2,"ridge":1.0,"scale":1.0,"data_seed":1},
            "sampler":"composite","eps":1.5,"seed":3,"chains":0}"#;
        match RunConfig::from_json(text) {
            Err(Error::Config(msg)) => {
                assert!(msg.contains("eps"));
                assert!(msg.contains("chains"));
                assert!(msg.contains("logistic_finitesum"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn compatibility_matrix() {
        let lasso = ModelSpec::LassoGaussian { curvature: vec![1.0], mean: vec![0.0], reg: vec![1.0] };
        assert!(!SamplerKind::Wellcond.supports(&lasso));
        assert!(SamplerKind::Composite.supports(&lasso));
        assert!(SamplerKind::ReductionDirect.supports(&lasso));
        assert!(!SamplerKind::Finitesum.supports(&lasso));
    }
}
