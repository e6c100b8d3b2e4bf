//! Campaign configuration, read from TOML (`.toml`) or JSON (anything else).
//!
//! ```toml
//! problems = [12, 13, 14, 15]
//! replications = 3
//! base_seed = 1
//! mode = "desk"              # standard | desk | overkill
//! max_enrichment = 120       # optional, default 100 + 10 M
//! initial_size = 10          # optional, default max(10, 2 M)
//! baselines = true           # surrogate-free IS and SuS rows
//! output_dir = "campaign"
//! jobs = 4
//! registry = "registry.json" # optional, relative to this file
//! tower_geometry = "tower.txt"
//!
//! [strategies]
//! surrogates = ["PCK"]
//! estimators = ["SuS", "MCS"]
//! learning = ["U"]
//! stopping = ["Co"]
//! ids = []
//! ```

use std::path::{Path, PathBuf};

use alr_core::reliability::SolverMode;
use alr_core::strategy::{expand_strategy_grid, Strategy, StrategyFilter};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub problems: Vec<u32>,
    pub strategies: StrategyFilter,
    pub replications: usize,
    pub base_seed: u64,
    pub mode: SolverMode,
    pub initial_size: Option<usize>,
    pub max_enrichment: Option<usize>,
    pub baselines: bool,
    pub output_dir: PathBuf,
    pub jobs: usize,
    pub registry: Option<PathBuf>,
    pub tower_geometry: Option<PathBuf>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            problems: vec![12, 13, 14, 15],
            strategies: StrategyFilter::default(),
            replications: 3,
            base_seed: 1,
            mode: SolverMode::Desk,
            initial_size: None,
            max_enrichment: None,
            baselines: false,
            output_dir: PathBuf::from("campaign"),
            jobs: 1,
            registry: None,
            tower_geometry: None,
        }
    }
}

impl CampaignConfig {
    /// Reads a config; relative `registry` and `tower_geometry` paths are
    /// made relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: Self = if path.extension().is_some_and(|e| e == "toml") { toml::from_str(&text)? } else { serde_json::from_str(&text)? };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.registry, &mut cfg.tower_geometry].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Config(m.into()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.problems.is_empty() {
            return bad("no problems selected");
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        self.strategies.validate()?;
        if self.strategies().is_empty() && !self.baselines {
            return bad("the strategy filter selects nothing");
        }
        Ok(())
    }

    pub fn strategies(&self) -> Vec<Strategy> {
        expand_strategy_grid(&self.strategies)
    }
}
