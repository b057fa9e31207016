use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use zoll_core::metrics::MetricJson;
use zoll_core::sweepout::GridResolution;
use zoll_core::verify::VerifyParams;
use zoll_core::{FlowParams, MetricSpec};

/// Run configuration, read from `--config` and overridden by flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub metric: Option<MetricJson>,
    pub grid: GridResolution,
    pub flow: FlowParams,
    pub delta_len: f64,
    pub verify: VerifyParams,
    pub out: PathBuf,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Seed for random launches and sample points.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metric: None,
            grid: GridResolution::default(),
            flow: FlowParams::default(),
            delta_len: 1e-2,
            verify: VerifyParams::default(),
            out: PathBuf::from("out"),
            workers: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub metric: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

impl RunConfig {
    pub fn load(config: Option<&Path>, overrides: &Overrides) -> anyhow::Result<Self> {
        let mut cfg = match config {
            Some(path) => serde_json::from_str(&read(path)?)
                .with_context(|| format!("malformed config {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(path) = &overrides.metric {
            let json = serde_json::from_str(&read(path)?)
                .with_context(|| format!("malformed metric {}", path.display()))?;
            cfg.metric = Some(json);
        }
        if let Some(out) = &overrides.out {
            cfg.out = out.clone();
        }
        if overrides.workers.is_some() {
            cfg.workers = overrides.workers;
        }
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        self.flow.validate()?;
        if !(self.delta_len > 0.0) {
            bail!("delta_len must be positive, got {}", self.delta_len);
        }
        let v = &self.verify;
        if !(v.closure_tol > 0.0 && v.match_tol > 0.0) || v.launches == 0 || v.points == 0 {
            bail!("verification tolerances and sample counts must be positive");
        }
        if self.workers == Some(0) {
            bail!("workers must be at least 1");
        }
        Ok(())
    }

    pub fn metric(&self) -> anyhow::Result<MetricSpec> {
        let Some(json) = self.metric.clone() else {
            bail!("no metric given: pass --metric <file> or set \"metric\" in the config");
        };
        Ok(MetricSpec::try_from(json)?)
    }

    /// Creates the output directory.
    pub fn out_dir(&self) -> anyhow::Result<&Path> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create output directory {}", self.out.display()))?;
        Ok(&self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_uses_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"grid": {"n_dir": 32, "n_off": 7}, "flow": {"n": 128}}"#).unwrap();
        assert_eq!(cfg.grid.n_meridian, 16);
        assert_eq!(cfg.flow.n, 128);
        assert_eq!(cfg.flow.collapse_length, 1e-2);
        assert_eq!(cfg.delta_len, 1e-2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"gird": {}}"#).is_err());
    }

    #[test]
    fn nonpositive_tolerances_are_rejected() {
        let cfg = RunConfig { delta_len: 0.0, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.flow.stall_tol = -1.0;
        assert!(cfg.validate().is_err());
    }
}
