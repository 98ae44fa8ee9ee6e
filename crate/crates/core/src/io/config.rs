use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mec::MecConfig;
use crate::predict::PipelineParams;
use crate::tracegen::SimConfig;

/// Top-level configuration file: `[sim]`, `[mec]` and `[pipeline]` tables,
/// each optional and defaulted field by field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub sim: SimConfig,
    pub mec: MecConfig,
    pub pipeline: PipelineParams,
}

impl ConfigFile {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.mec.validate()?;
        self.pipeline.dbscan.validate()?;
        if !(self.pipeline.prewarm_ttl_s.is_finite() && self.pipeline.prewarm_ttl_s >= 0.0) {
            return Err(Error::validation("pipeline.prewarm_ttl_s", "must be non-negative"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn offending_key(message: &str) -> String {
    message
        .split_once("unknown field `")
        .and_then(|(_, rest)| rest.split_once('`'))
        .map_or_else(|| "config".to_owned(), |(key, _)| key.to_owned())
}

pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    let cfg: ConfigFile = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_owned();
        Error::validation(offending_key(&msg), msg)
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mec::PlacementPolicy;
    use crate::ServiceKind;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, ConfigFile::default());
        assert_eq!(cfg.sim.num_ues, 500);
        assert_eq!(cfg.sim.update_meters, 100.0);
        assert_eq!(cfg.sim.num_ecs, 10);
        assert_eq!(cfg.sim.sim_duration_s, 43_200);
        assert_eq!(cfg.mec.vms_per_ec, 2);
        assert_eq!(cfg.mec.policy, PlacementPolicy::FirstFit);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ConfigFile::default();
        cfg.sim.seed = 99;
        cfg.mec.policy = PlacementPolicy::BestFit;
        let text = cfg.to_toml().unwrap();
        assert_eq!(parse_config_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_tables_fill_in_defaults() {
        let cfg = parse_config_str("[sim]\nnum_ues = 42\n[mec]\npolicy = \"Random\"\n").unwrap();
        assert_eq!(cfg.sim.num_ues, 42);
        assert_eq!(cfg.sim.enbs_per_ec, 3);
        assert_eq!(cfg.mec.policy, PlacementPolicy::Random);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config_str("[sim]\nnum_uess = 3\n").unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref key, .. } if key == "num_uess"),
            "{err}"
        );
    }

    #[test]
    fn bad_probabilities_rejected() {
        let mut cfg = ConfigFile::default();
        cfg.sim.service_probabilities.insert(ServiceKind::Mime, 0.1);
        let err = parse_config_str(&cfg.to_toml().unwrap()).unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref key, .. } if key == "service_probabilities"),
            "{err}"
        );
    }

    #[test]
    fn app_larger_than_vm_rejected() {
        let err = parse_config_str("[mec.app_resources]\nram_gb = 9.0\ncores = 2.0\nstorage_gb = 2.0\n").unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref key, .. } if key == "app_resources"),
            "{err}"
        );
    }
}
