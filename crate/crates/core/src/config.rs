//! TOML run configuration and the run manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{validate_config, AllocationConfig, BucketSchema};
use crate::model::TrainParams;
use crate::sim::SimConfig;
use crate::{Error, Result};

/// Everything a command needs, resolved from built-in defaults, an optional
/// TOML file and command-line flags (in increasing precedence).
///
/// ```toml
/// [sim]
/// seed = 7
/// items_per_round = 500
///
/// [allocation]
/// total_budget = 250000
///
/// [train]
/// epochs = 200
///
/// [buckets]
/// edges = [0, 100, 200, 400, 800, 1600]
/// representative = [50, 100, 200, 400, 800, 1600]
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub allocation: AllocationConfig,
    pub train: TrainParams,
    pub buckets: BucketSchema,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Sets the root seed for both simulation and training.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.sim.seed = seed;
            self.train.seed = seed;
        }
        self
    }

    /// Checks every section. A zero budget is allowed here: it yields an
    /// all-unfunded plan rather than an error.
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let schema = BucketSchema::new(self.buckets.edges.clone(), self.buckets.representative.clone())?;
        let allocation =
            AllocationConfig { total_budget: self.allocation.total_budget.max(1), ..self.allocation.clone() };
        validate_config(allocation, &schema)?;
        if !(self.train.learning_rate > 0.0 && self.train.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive and finite".into()));
        }
        if self.train.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.train.batch_size == Some(0) {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Written next to every command's outputs. Paths are recorded as given on
/// the command line; `outputs` are relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub config: RunConfig,
    /// Input path to sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub duration_ms: u64,
}
