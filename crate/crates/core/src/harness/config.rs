use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::Centering;
use crate::error::{Error, Result};
use crate::subspace::ModelFamily;

/// Parameters of the planted-subspace generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Number of classes generated (the pool runs draw from).
    pub class_count: usize,
    pub shape: Vec<usize>,
    /// Family of the planted per-class model.
    pub family: ModelFamily,
    /// Column count of every planted leaf (or Tucker factor) basis.
    pub leaf_rank: usize,
    /// Planted internal-node rank as a fraction of `min(∏_{i∈s} I_i, r_l · r_r)`.
    pub internal_fraction: f64,
    pub samples_per_class: usize,
    /// Noise norm relative to the signal norm (signals have unit norm).
    pub noise_sigma: f64,
    /// Draw every class's axis-0 basis from disjoint columns of one
    /// orthogonal matrix, making the class subspaces mutually orthogonal.
    pub orthogonal_classes: bool,
    /// Every class uses the same leaf bases, so classes differ only in their
    /// internal (transfer) structure. Requires a hierarchical family.
    pub shared_leaves: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            class_count: 4,
            shape: vec![4, 4, 4, 4],
            family: ModelFamily::Tt,
            leaf_rank: 2,
            internal_fraction: 0.25,
            samples_per_class: 20,
            noise_sigma: 0.1,
            orthogonal_classes: false,
            shared_leaves: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Directory laid out as `root/<label>/<file>` with PGM (P5) or CSV matrices.
    Images {
        path: PathBuf,
        /// Image rows are split into these axes (product must equal the row count).
        #[serde(default)]
        row_factors: Vec<usize>,
        #[serde(default)]
        col_factors: Vec<usize>,
    },
    Synthetic(SyntheticSpec),
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic(SyntheticSpec::default())
    }
}

/// Full description of a sweep or learning-curve run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// Classes drawn per repetition.
    pub classes_per_run: usize,
    /// Number of labels (in sorted order) forming the pool; all labels when absent.
    pub pool_size: Option<usize>,
    pub train_fraction: f64,
    pub repetitions: usize,
    pub families: Vec<ModelFamily>,
    /// Tucker: fraction of every axis rank. HT/TT: fraction of internal ranks.
    pub rank_fractions: Vec<f64>,
    /// HT/TT leaf rank fraction.
    pub leaf_fraction: f64,
    /// Per-class training sizes for learning curves.
    pub training_sizes: Vec<usize>,
    pub centering: Centering,
    /// Reuse one train/test split of each class across repetitions.
    pub freeze_split: bool,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSpec::default(),
            classes_per_run: 4,
            pool_size: None,
            train_fraction: 0.5,
            repetitions: 10,
            families: vec![ModelFamily::Tucker, ModelFamily::Ht, ModelFamily::Tt],
            rank_fractions: (1..=10).map(|i| i as f64 / 10.0).collect(),
            leaf_fraction: 0.7,
            training_sizes: vec![1, 2, 4, 8],
            centering: Centering::Global,
            freeze_split: false,
            seed: 0,
            output: None,
        }
    }
}

fn fraction_ok(f: f64) -> bool {
    f > 0.0 && f <= 1.0
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.classes_per_run == 0 {
            return bad("classes_per_run must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if !fraction_ok(self.leaf_fraction) {
            return bad(format!("leaf_fraction {} outside (0, 1]", self.leaf_fraction));
        }
        if let Some(f) = self.rank_fractions.iter().find(|f| !fraction_ok(**f)) {
            return bad(format!("rank fraction {f} outside (0, 1]"));
        }
        if self.families.is_empty() || self.rank_fractions.is_empty() {
            return bad("families and rank_fractions must be non-empty".into());
        }
        if let Some(p) = self.pool_size {
            if p < self.classes_per_run {
                return bad(format!("pool of {p} cannot supply {} classes", self.classes_per_run));
            }
        }
        match &self.dataset {
            DatasetSpec::Synthetic(s) => {
                if s.class_count == 0 || s.samples_per_class == 0 || s.shape.len() < 2 {
                    return bad("synthetic dataset needs classes, samples and order >= 2".into());
                }
                if s.noise_sigma < 0.0 || !fraction_ok(s.internal_fraction) {
                    return bad("synthetic noise must be >= 0 and internal_fraction in (0, 1]".into());
                }
            }
            DatasetSpec::Images { row_factors, col_factors, .. } => {
                if row_factors.contains(&0) || col_factors.contains(&0) {
                    return bad("reshape factors must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Reads a config file. A results sidecar (which embeds the config under
    /// `"config"`) is accepted as well.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        let inner = match value.get("config") {
            Some(c) => c.clone(),
            None => value,
        };
        let cfg: ExperimentConfig =
            serde_json::from_value(inner).map_err(|e| Error::format(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
