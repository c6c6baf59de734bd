//! Binary draw files, their JSON sidecars and sampler checkpoints.
//!
//! A draw file is the 8-byte magic `NRDRAWS1`, then three little-endian
//! u64 values (subjects, edges, draws), then every probability as a
//! little-endian f64 in draw-major order: draw, subject, edge.

use std::path::Path;

use netresp_core::baseline::BaselineConfig;
use netresp_core::gibbs::ChainConfig;
use netresp_core::model::{ChainMeta, HyperParams, LatentState, PosteriorDraws};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, IoContext, Result};

const MAGIC: &[u8; 8] = b"NRDRAWS1";

pub fn encode_draws(d: &PosteriorDraws) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * d.probs.len());
    out.extend_from_slice(MAGIC);
    for v in [d.subjects, d.edges, d.num_draws()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for p in &d.probs {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_draws`]; `meta` is attached to the result.
pub fn decode_draws(bytes: &[u8], meta: ChainMeta, path: &Path) -> Result<PosteriorDraws> {
    let bad = |m: &str| CliError::Parse { path: path.into(), line: 0, message: m.into() };
    if bytes.len() < 32 || &bytes[..8] != MAGIC {
        return Err(bad("not a draw file"));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap()) as usize;
    let (subjects, edges, draws) = (word(0), word(1), word(2));
    let count = subjects
        .checked_mul(edges)
        .and_then(|x| x.checked_mul(draws))
        .ok_or_else(|| bad("draw file header overflows"))?;
    if bytes.len() != 32 + 8 * count {
        return Err(bad("draw file length does not match its header"));
    }
    let mut d = PosteriorDraws::new(subjects, edges, meta);
    d.probs = bytes[32..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Model,
    Baseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Model => "model",
            Self::Baseline => "baseline",
        }
    }
}

/// JSON sidecar describing a draw file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawsSidecar {
    pub method: Method,
    pub data_file: String,
    pub subjects: usize,
    pub edges: usize,
    pub draws: usize,
    pub chain: ChainMeta,
    pub hyper: Option<HyperParams>,
    pub baseline: Option<BaselineConfig>,
    /// Baseline cells whose empirical mean used the all-trait fallback.
    pub fallbacks: Option<Vec<(usize, usize)>>,
    pub dataset_sha256: String,
    pub config_sha256: String,
}

/// Loads `<stem>.json` and the draw file it names, checking that they agree.
pub fn load_draws(sidecar_path: &Path) -> Result<(DrawsSidecar, PosteriorDraws)> {
    let text = std::fs::read(sidecar_path).at(sidecar_path)?;
    let side: DrawsSidecar =
        serde_json::from_slice(&text).map_err(|source| CliError::Json { path: sidecar_path.into(), source })?;
    let data_path = sidecar_path.parent().unwrap_or(Path::new(".")).join(&side.data_file);
    let bytes = std::fs::read(&data_path).at(&data_path)?;
    let d = decode_draws(&bytes, side.chain.clone(), &data_path)?;
    if d.subjects != side.subjects || d.edges != side.edges || d.num_draws() != side.draws {
        return Err(CliError::Mismatch(format!(
            "{} does not match its sidecar {}",
            data_path.display(),
            sidecar_path.display()
        )));
    }
    Ok((side, d))
}

/// Everything needed to continue a main-sampler run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub completed: u64,
    pub chain: ChainConfig,
    pub hyper: HyperParams,
    pub dataset_sha256: String,
    pub state: LatentState,
    pub response: Vec<bool>,
    pub latents: Vec<LatentState>,
    pub loglik_trace: Vec<(u64, f64)>,
    pub draws_sha256: String,
}

pub const CHECKPOINT_JSON: &str = "checkpoint.json";
pub const CHECKPOINT_DRAWS: &str = "checkpoint.draws.bin";
