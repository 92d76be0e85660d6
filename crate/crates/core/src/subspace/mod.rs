//! Tucker, hierarchical Tucker and tensor-train subspace models.

pub mod hierarchical;
pub mod tree;
pub mod tucker;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::DenseTensor;

pub use hierarchical::{
    learn_hierarchical, learn_tensor_train, project_ht_factored, project_ht_materialized,
    project_tt, HtModel, TtModel,
};
pub use tree::{DimensionTree, TreeKind, TreeNode};
pub use tucker::{learn_tucker, project_tucker, TuckerModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Tucker,
    Ht,
    Tt,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Tucker => "tucker",
            ModelFamily::Ht => "ht",
            ModelFamily::Tt => "tt",
        }
    }

    pub fn tree_kind(self) -> Option<TreeKind> {
        match self {
            ModelFamily::Tucker => None,
            ModelFamily::Ht => Some(TreeKind::Balanced),
            ModelFamily::Tt => Some(TreeKind::Chain),
        }
    }

    /// Schemes a sweep emits for this family.
    pub fn default_schemes(self) -> &'static [ProjectionScheme] {
        match self {
            ModelFamily::Tucker => &[ProjectionScheme::ModeProducts],
            ModelFamily::Ht => &[ProjectionScheme::Materialized, ProjectionScheme::Factored],
            ModelFamily::Tt => &[ProjectionScheme::Materialized],
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tucker" => Ok(ModelFamily::Tucker),
            "ht" | "hierarchical" => Ok(ModelFamily::Ht),
            "tt" | "tensor-train" => Ok(ModelFamily::Tt),
            other => Err(Error::Config(format!("unknown model family {other:?}"))),
        }
    }
}

/// How a test tensor is mapped to subspace coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionScheme {
    /// Tucker: `Uᵢᵀ` along every axis.
    ModeProducts,
    /// HT/TT: stored root-child bases applied to the root unfolding.
    Materialized,
    /// HT/TT: root-child bases rebuilt from leaf bases and transfer matrices.
    Factored,
}

impl ProjectionScheme {
    pub fn name(self) -> &'static str {
        match self {
            ProjectionScheme::ModeProducts => "mode-products",
            ProjectionScheme::Materialized => "materialized",
            ProjectionScheme::Factored => "factored",
        }
    }

    pub fn supports(self, family: ModelFamily) -> bool {
        matches!(
            (family, self),
            (ModelFamily::Tucker, ProjectionScheme::ModeProducts)
                | (ModelFamily::Ht | ModelFamily::Tt, ProjectionScheme::Materialized)
                | (ModelFamily::Ht | ModelFamily::Tt, ProjectionScheme::Factored)
        )
    }

    pub(crate) fn check(self, family: ModelFamily) -> Result<()> {
        if self.supports(family) {
            Ok(())
        } else {
            Err(Error::Scheme {
                scheme: self.name().into(),
                family: family.name().into(),
            })
        }
    }
}

impl fmt::Display for ProjectionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProjectionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode-products" | "modes" => Ok(ProjectionScheme::ModeProducts),
            "materialized" | "hier1" => Ok(ProjectionScheme::Materialized),
            "factored" | "hier2" => Ok(ProjectionScheme::Factored),
            other => Err(Error::Config(format!("unknown projection scheme {other:?}"))),
        }
    }
}

/// Structure of a model to learn: family plus ranks.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Tucker(Vec<usize>),
    Ht(DimensionTree),
    Tt(DimensionTree),
}

impl ModelSpec {
    pub fn family(&self) -> ModelFamily {
        match self {
            ModelSpec::Tucker(_) => ModelFamily::Tucker,
            ModelSpec::Ht(_) => ModelFamily::Ht,
            ModelSpec::Tt(_) => ModelFamily::Tt,
        }
    }
}

/// Everything the cost model needs: ambient shape plus model structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelLayout {
    pub shape: Vec<usize>,
    pub spec: ModelSpec,
}

/// A rank lowered by the sweep layer to keep learning well posed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankClamp {
    pub node: Vec<usize>,
    pub requested: usize,
    pub applied: usize,
}

fn fraction_of(fraction: f64, full: usize) -> usize {
    ((fraction * full as f64).round() as usize).clamp(1, full.max(1))
}

/// Resolves fractional ranks for `samples` training tensors of `shape`.
///
/// Each node's rank is `round(fraction · full_rank)` (at least 1), where the
/// full rank is the ceiling of the node's stacked unfolding. Internal-node
/// ranks above the product of their children's ranks are clamped and the
/// clamp is reported. Tucker uses `leaf_fraction` on every axis.
pub fn fractional_spec(
    family: ModelFamily,
    shape: &[usize],
    samples: usize,
    leaf_fraction: f64,
    internal_fraction: f64,
) -> Result<(ModelSpec, Vec<RankClamp>)> {
    for f in [leaf_fraction, internal_fraction] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!("rank fraction {f} outside (0, 1]")));
        }
    }
    if samples == 0 {
        return Err(Error::Empty("no training samples".into()));
    }
    let total: usize = shape.iter().product();
    let Some(kind) = family.tree_kind() else {
        let ranks = shape
            .iter()
            .map(|&i| fraction_of(leaf_fraction, i.min(samples * (total / i))))
            .collect();
        return Ok((ModelSpec::Tucker(ranks), Vec::new()));
    };
    let mut tree = DimensionTree::of_kind(kind, shape.len())?;
    let mut clamps = Vec::new();
    let order: Vec<usize> = tree.bottom_up().filter(|&i| i != DimensionTree::ROOT).collect();
    for idx in order {
        let full = tree.full_rank(idx, shape, samples);
        let rank = if tree.node(idx).is_leaf() {
            fraction_of(leaf_fraction, full)
        } else {
            let requested = fraction_of(internal_fraction, full);
            let ceiling = tree.rank_ceiling(idx, shape, samples);
            if requested > ceiling {
                clamps.push(RankClamp {
                    node: tree.node(idx).axes.axes().to_vec(),
                    requested,
                    applied: ceiling,
                });
                ceiling
            } else {
                requested
            }
        };
        tree.set_rank(idx, rank)?;
    }
    let spec = match family {
        ModelFamily::Ht => ModelSpec::Ht(tree),
        _ => ModelSpec::Tt(tree),
    };
    Ok((spec, clamps))
}

/// Projection coefficients of one tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Matrix(Matrix),
    Core(DenseTensor),
}

impl AsRef<[f64]> for Coefficients {
    fn as_ref(&self) -> &[f64] {
        match self {
            Coefficients::Matrix(m) => m.as_slice(),
            Coefficients::Core(t) => t.as_slice(),
        }
    }
}

/// Squared Frobenius norm of projection coefficients. With orthonormal bases
/// this is the squared norm of the orthogonal projection onto the subspace.
pub fn projection_energy(coefficients: &impl AsRef<[f64]>) -> f64 {
    coefficients.as_ref().iter().map(|c| c * c).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubspaceModel {
    Tucker(TuckerModel),
    Ht(HtModel),
    Tt(TtModel),
}

impl SubspaceModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            SubspaceModel::Tucker(_) => ModelFamily::Tucker,
            SubspaceModel::Ht(_) => ModelFamily::Ht,
            SubspaceModel::Tt(_) => ModelFamily::Tt,
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            SubspaceModel::Tucker(m) => m.shape(),
            SubspaceModel::Ht(m) => m.shape(),
            SubspaceModel::Tt(m) => m.as_hierarchical().shape(),
        }
    }

    pub fn hierarchical(&self) -> Option<&HtModel> {
        match self {
            SubspaceModel::Tucker(_) => None,
            SubspaceModel::Ht(m) => Some(m),
            SubspaceModel::Tt(m) => Some(m.as_hierarchical()),
        }
    }

    pub fn layout(&self) -> ModelLayout {
        let spec = match self {
            SubspaceModel::Tucker(m) => ModelSpec::Tucker(m.ranks()),
            SubspaceModel::Ht(m) => ModelSpec::Ht(m.tree().clone()),
            SubspaceModel::Tt(m) => ModelSpec::Tt(m.as_hierarchical().tree().clone()),
        };
        ModelLayout {
            shape: self.shape().to_vec(),
            spec,
        }
    }

    pub fn project(&self, x: &DenseTensor, scheme: ProjectionScheme) -> Result<Coefficients> {
        scheme.check(self.family())?;
        match (self, scheme) {
            (SubspaceModel::Tucker(m), _) => m.project(x).map(Coefficients::Core),
            (_, ProjectionScheme::Factored) => self
                .hierarchical()
                .expect("hierarchical family")
                .project_factored(x)
                .map(Coefficients::Matrix),
            (SubspaceModel::Tt(m), _) => m.project(x).map(Coefficients::Matrix),
            (SubspaceModel::Ht(m), _) => m.project_materialized(x).map(Coefficients::Matrix),
        }
    }

    pub fn energy(&self, x: &DenseTensor, scheme: ProjectionScheme) -> Result<f64> {
        Ok(projection_energy(&self.project(x, scheme)?))
    }

    pub fn default_scheme(&self) -> ProjectionScheme {
        self.family().default_schemes()[0]
    }
}

pub fn learn_model(samples: &[DenseTensor], spec: &ModelSpec) -> Result<SubspaceModel> {
    match spec {
        ModelSpec::Tucker(ranks) => learn_tucker(samples, ranks).map(SubspaceModel::Tucker),
        ModelSpec::Ht(tree) => learn_hierarchical(samples, tree).map(SubspaceModel::Ht),
        ModelSpec::Tt(tree) => learn_tensor_train(samples, tree).map(SubspaceModel::Tt),
    }
}
