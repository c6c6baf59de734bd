//! The JSON run configuration. Every section is optional in the file and
//! falls back to the simulation presets.

use std::path::{Path, PathBuf};

use netresp_core::baseline::BaselineConfig;
use netresp_core::eval::Statistic;
use netresp_core::gibbs::ChainConfig;
use netresp_core::model::HyperParams;
use netresp_core::network::BlockPartition;
use netresp_core::sim::{four_blocks, hemisphere_partition, lobe_partition, ScenarioConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, IoContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    #[default]
    Vector,
    Matrix,
    EdgeList,
}

/// Input paths. Relative paths resolve against the working directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dataset: Option<PathBuf>,
    pub format: DatasetFormat,
    /// Edge-list inputs, used with `format = "edge-list"`.
    pub edges: Option<PathBuf>,
    pub traits: Option<PathBuf>,
    pub nodes: Option<usize>,
    pub mask: Option<PathBuf>,
    pub model_draws: Option<PathBuf>,
    pub baseline_draws: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskKind {
    #[default]
    Simulation,
    HardEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    pub protocol: MaskKind,
    pub lower: f64,
    pub upper: f64,
    /// Subjects masked per trait value (simulation protocol).
    pub per_trait: usize,
    /// Share of subjects masked (hard-edge protocol).
    pub subject_fraction: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self { protocol: MaskKind::Simulation, lower: 0.2, upper: 0.8, per_trait: 2, subject_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionSpec {
    #[default]
    Hemisphere,
    Lobe,
    Blocks,
    /// Explicit block label per node.
    Labels(Vec<usize>),
}

impl PartitionSpec {
    pub fn resolve(&self, nodes: usize) -> Result<BlockPartition> {
        let p = match self {
            Self::Hemisphere => hemisphere_partition(nodes),
            Self::Lobe => lobe_partition(nodes),
            Self::Blocks => four_blocks(nodes),
            Self::Labels(l) => BlockPartition::new(l.clone()),
        };
        if p.nodes() != nodes {
            return Err(CliError::Mismatch(format!("partition has {} labels for V={nodes}", p.nodes())));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpcConfig {
    pub level: f64,
    pub statistics: Vec<Statistic>,
    pub partition: PartitionSpec,
}

impl Default for PpcConfig {
    fn default() -> Self {
        Self { level: 0.95, statistics: Statistic::ALL.to_vec(), partition: PartitionSpec::Hemisphere }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives every command: scenario, mask, both samplers and the checks.
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Iterations between checkpoints of the main sampler.
    pub checkpoint_every: u64,
    pub data: DataConfig,
    pub simulate: ScenarioConfig,
    pub mask: MaskConfig,
    pub model: HyperParams,
    pub chain: ChainConfig,
    pub baseline: BaselineConfig,
    pub ppc: PpcConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            workers: 0,
            checkpoint_every: 500,
            data: DataConfig::default(),
            simulate: ScenarioConfig::default(),
            mask: MaskConfig::default(),
            model: HyperParams::default(),
            chain: ChainConfig::default(),
            baseline: BaselineConfig::default(),
            ppc: PpcConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read(path).at(path)?;
        serde_json::from_slice(&text).map_err(|source| CliError::Json { path: path.into(), source })
    }

    /// Copies the top-level seed into the sections that carry their own.
    pub fn normalized(mut self) -> Self {
        self.simulate.seed = self.seed;
        self.chain.seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.simulate.validate()?;
        self.model.validate()?;
        self.chain.validate()?;
        self.baseline.validate()?;
        if self.checkpoint_every == 0 {
            return Err(CliError::Usage("checkpoint_every must be positive".into()));
        }
        if !(self.ppc.level > 0.0 && self.ppc.level < 1.0) {
            return Err(CliError::Usage(format!("ppc level {} outside (0,1)", self.ppc.level)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("config serializes");
        v.push(b'\n');
        v
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses `--rk`: a single value `N` or an inclusive range `A..B`.
pub fn parse_rk(s: &str) -> std::result::Result<Vec<usize>, String> {
    let one = |t: &str| t.trim().parse::<usize>().ok().filter(|&v| v >= 1);
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        match (one(a), one(b)) {
            (Some(a), Some(b)) if a <= b => Ok((a..=b).collect()),
            _ => Err(format!("invalid range `{s}`; expected A..B with 1 <= A <= B")),
        }
    } else {
        one(s).map(|v| vec![v]).ok_or_else(|| format!("invalid latent dimension `{s}`"))
    }
}
