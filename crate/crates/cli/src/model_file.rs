//! On-disk model format.

use std::path::Path;

use anyhow::{bail, Context, Result};
use scsvm::{ModelMeta, PrimalModel, RawDataset, SignMask};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    /// Weights in the original feature space.
    pub w: Vec<f64>,
    /// Per feature: `1` for `w ≥ 0`, `-1` for `w ≤ 0`, `0` for free.
    pub sigma: Vec<i8>,
    pub lambda: f64,
    pub solver: String,
    pub iterations: usize,
    pub final_gap: Option<f64>,
    /// `None` for solvers without a certificate.
    pub certified: Option<bool>,
    /// Rows were scaled to unit norm before training (and are before prediction).
    pub normalize: bool,
    /// SHA-256 of the training data as loaded, before any preprocessing.
    pub dataset_fingerprint: String,
}

impl ModelFile {
    pub fn new(model: &PrimalModel, certified: Option<bool>, normalize: bool, fingerprint: String) -> Self {
        let mask = &model.sign_mask;
        let sigma = (0..mask.d())
            .map(|h| match (mask.is_constrained(h), mask.is_negated(h)) {
                (false, _) => 0,
                (true, false) => 1,
                (true, true) => -1,
            })
            .collect();
        ModelFile {
            schema_version: SCHEMA_VERSION,
            w: model.w.clone(),
            sigma,
            lambda: model.lambda,
            solver: model.meta.solver.clone(),
            iterations: model.meta.iterations,
            final_gap: model.meta.final_gap,
            certified,
            normalize,
            dataset_fingerprint: fingerprint,
        }
    }

    pub fn d(&self) -> usize {
        self.w.len()
    }

    pub fn to_model(&self) -> Result<PrimalModel> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("unsupported model schema version {}", self.schema_version);
        }
        if self.sigma.len() != self.w.len() {
            bail!(
                "model has {} weights but {} sign entries",
                self.w.len(),
                self.sigma.len()
            );
        }
        let pos: Vec<usize> = (0..self.d()).filter(|&h| self.sigma[h] == 1).collect();
        let neg: Vec<usize> = (0..self.d()).filter(|&h| self.sigma[h] == -1).collect();
        if let Some(h) = (0..self.d()).find(|&h| !(-1..=1).contains(&self.sigma[h])) {
            bail!("invalid sign entry {} for feature {h}", self.sigma[h]);
        }
        let mask = SignMask::new(self.d(), &pos, &neg)?;
        Ok(PrimalModel {
            w: self.w.clone(),
            lambda: self.lambda,
            sign_mask: mask,
            meta: ModelMeta {
                solver: self.solver.clone(),
                iterations: self.iterations,
                final_gap: self.final_gap,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("cannot write model {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("cannot read model {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid model file {}", path.display()))
    }
}

pub fn fingerprint(raw: &RawDataset) -> String {
    let mut h = Sha256::new();
    h.update((raw.d as u64).to_le_bytes());
    h.update((raw.n() as u64).to_le_bytes());
    for y in &raw.labels {
        h.update(y.to_bits().to_le_bytes());
    }
    for x in &raw.features {
        h.update(x.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}
