// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Architecture and training settings. Fields without a value in a JSON
/// config take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Width of each of the structural and functional embeddings.
    pub d: usize,
    /// Width of the technology embedding.
    pub d_p: usize,
    pub n_gat_layers: usize,
    pub n_tx_blocks: usize,
    pub n_heads: usize,
    /// Number of delay classes.
    pub k: usize,
    /// Width of one delay class in ps.
    pub bin_width: f64,
    /// Concatenate the technology embedding into the classifier input.
    pub use_tech_embedding: bool,
    pub alpha: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub mask_fraction: f64,
    pub neg_ratio: f64,
    /// Structural-only pre-training epochs.
    pub pretrain_stage1_epochs: usize,
    /// Joint pre-training epochs.
    pub pretrain_stage2_epochs: usize,
    pub finetune_epochs: usize,
    /// Epochs without validation-loss improvement before fine-tuning stops.
    pub patience: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 16,
            d_p: 8,
            n_gat_layers: 2,
            n_tx_blocks: 2,
            n_heads: 4,
            k: 8,
            bin_width: 100.0,
            use_tech_embedding: true,
            alpha: 1.0,
            beta: 1.0,
            learning_rate: 1e-4,
            batch_size: 32,
            seed: 0,
            mask_fraction: 0.1,
            neg_ratio: 1.0,
            pretrain_stage1_epochs: 60,
            pretrain_stage2_epochs: 60,
            finetune_epochs: 20,
            patience: 5,
        }
    }
}

impl ModelConfig {
    /// 128-wide views, 4 transformer blocks of 8 heads.
    pub fn full_scale() -> Self {
        Self { d: 128, d_p: 32, n_tx_blocks: 4, n_heads: 8, ..Self::default() }
    }

    /// Width of a node embedding after concatenating both views.
    pub fn width(&self) -> usize {
        2 * self.d
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.d == 0 || self.d_p == 0 {
            return bad("embedding widths must be positive".into());
        }
        if self.n_heads == 0 || !self.width().is_multiple_of(self.n_heads) {
            return bad(format!("2d = {} is not divisible by {} heads", self.width(), self.n_heads));
        }
        if self.k < 2 {
            return bad(format!("need at least 2 classes, got {}", self.k));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return bad("bin width must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.mask_fraction) || self.neg_ratio < 0.0 {
            return bad("mask fraction must be in [0, 1] and the negative ratio non-negative".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            return bad("learning rate must be non-negative".into());
        }
        Ok(())
    }

    /// Whether two configs produce parameter sets of the same layout.
    pub fn same_architecture(&self, other: &Self) -> bool {
        (self.d, self.d_p, self.n_gat_layers, self.n_tx_blocks, self.n_heads, self.k, self.use_tech_embedding)
            == (other.d, other.d_p, other.n_gat_layers, other.n_tx_blocks, other.n_heads, other.k, other.use_tech_embedding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        assert!(ModelConfig::full_scale().validate().is_ok());
        assert!(ModelConfig { n_heads: 5, ..Default::default() }.validate().is_err());
        assert!(ModelConfig { k: 1, ..Default::default() }.validate().is_err());
        let partial: ModelConfig = serde_json::from_str(r#"{"d": 8, "n_heads": 2}"#).unwrap();
        assert_eq!(partial.d, 8);
        assert_eq!(partial.k, 8);
    }
}
