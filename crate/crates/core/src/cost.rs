//! Storage and projection cost accounting.
//!
//! Storage counts the real scalars a projection scheme keeps. Projection cost
//! counts multiply-accumulates of the dense products the scheme performs, with
//! an `m×n` by `n×k` product costing `m·n·k`, plus the squared-norm reduction
//! of the coefficients (one multiply per coefficient). Forming `A ⊗ B` costs
//! one multiply per output entry.
//!
//! The tensor-train materialized scheme omits the final squared-norm term so
//! that symmetric configurations reproduce the closed form
//! `n⁴r + n³rr′` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::{DimensionTree, ModelFamily, ModelLayout, ModelSpec, ProjectionScheme, SubspaceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub storage_scalars: u64,
    pub projection_macs: u64,
    /// Ambient dimension `∏ I_i` of the vectorized tensor.
    pub ambient_dim: u64,
}

impl CostReport {
    pub fn normalized_storage(&self) -> f64 {
        self.storage_scalars as f64 / self.ambient_dim as f64
    }

    pub fn normalized_projection(&self) -> f64 {
        self.projection_macs as f64 / self.ambient_dim as f64
    }
}

pub fn cost_general(model: &SubspaceModel, scheme: ProjectionScheme) -> Result<CostReport> {
    cost_for_layout(&model.layout(), scheme)
}

/// Costs from shapes and ranks alone.
pub fn cost_for_layout(layout: &ModelLayout, scheme: ProjectionScheme) -> Result<CostReport> {
    scheme.check(layout.spec.family())?;
    let shape: Vec<u64> = layout.shape.iter().map(|&i| i as u64).collect();
    let ambient_dim = shape.iter().product();
    let (storage_scalars, projection_macs) = match &layout.spec {
        ModelSpec::Tucker(ranks) => tucker_costs(&shape, ranks)?,
        ModelSpec::Ht(tree) => hierarchical_costs(&layout.shape, tree, scheme, true)?,
        ModelSpec::Tt(tree) => {
            let with_energy = scheme != ProjectionScheme::Materialized;
            hierarchical_costs(&layout.shape, tree, scheme, with_energy)?
        }
    };
    Ok(CostReport {
        storage_scalars,
        projection_macs,
        ambient_dim,
    })
}

fn tucker_costs(shape: &[u64], ranks: &[usize]) -> Result<(u64, u64)> {
    if ranks.len() != shape.len() {
        return Err(Error::Shape("one Tucker rank per axis required".into()));
    }
    let ranks: Vec<u64> = ranks.iter().map(|&r| r as u64).collect();
    let storage = shape.iter().zip(&ranks).map(|(i, r)| i * r).sum();
    // mode k maps extent I_k to r_k with axes < k already compressed
    let mut current = shape.to_vec();
    let mut macs = 0;
    for k in 0..shape.len() {
        let others: u64 = current.iter().enumerate().filter(|&(a, _)| a != k).map(|(_, v)| v).product();
        macs += ranks[k] * shape[k] * others;
        current[k] = ranks[k];
    }
    macs += ranks.iter().product::<u64>();
    Ok((storage, macs))
}

fn rank_of(tree: &DimensionTree, idx: usize) -> Result<u64> {
    tree.rank(idx)
        .map(|r| r as u64)
        .ok_or_else(|| Error::Tree(format!("node {:?} has no rank", tree.node(idx).axes.axes())))
}

/// Cost of rebuilding a node basis from leaves and transfers.
fn rebuild_cost(tree: &DimensionTree, shape: &[usize], idx: usize) -> Result<u64> {
    let node = tree.node(idx);
    let Some((l, r)) = node.children else {
        return Ok(0);
    };
    let (rl, rr) = (rank_of(tree, l)?, rank_of(tree, r)?);
    let dl = tree.node(l).axes.extent(shape) as u64;
    let dr = tree.node(r).axes.extent(shape) as u64;
    let ds = node.axes.extent(shape) as u64;
    let kron = dl * rl * dr * rr;
    let transfer = ds * rl * rr * rank_of(tree, idx)?;
    Ok(rebuild_cost(tree, shape, l)? + rebuild_cost(tree, shape, r)? + kron + transfer)
}

fn hierarchical_costs(
    shape: &[usize],
    tree: &DimensionTree,
    scheme: ProjectionScheme,
    with_energy: bool,
) -> Result<(u64, u64)> {
    if tree.order() != shape.len() {
        return Err(Error::Shape("tree order differs from shape".into()));
    }
    let (c1, c2) = tree.root_children();
    let (r1, r2) = (rank_of(tree, c1)?, rank_of(tree, c2)?);
    let d1 = tree.node(c1).axes.extent(shape) as u64;
    let d2 = tree.node(c2).axes.extent(shape) as u64;
    // X (d1×d2) · U_{c2} (d2×r2), then U_{c1}ᵀ (r1×d1) · (d1×r2)
    let mut macs = d1 * d2 * r2 + r1 * d1 * r2;
    if with_energy {
        macs += r1 * r2;
    }
    let storage = match scheme {
        ProjectionScheme::Materialized => d1 * r1 + d2 * r2,
        ProjectionScheme::Factored => {
            macs += rebuild_cost(tree, shape, c1)? + rebuild_cost(tree, shape, c2)?;
            let mut total = 0;
            for idx in 1..tree.len() {
                let node = tree.node(idx);
                total += match node.children {
                    None => shape[node.axes.first()] as u64 * rank_of(tree, idx)?,
                    Some((l, r)) => rank_of(tree, l)? * rank_of(tree, r)? * rank_of(tree, idx)?,
                };
            }
            total
        }
        ProjectionScheme::ModeProducts => unreachable!("checked by scheme.check"),
    };
    Ok((storage, macs))
}

fn positive(values: &[u64]) -> Result<()> {
    if values.contains(&0) {
        return Err(Error::Config("sizes and ranks must be at least 1".into()));
    }
    Ok(())
}

/// Order-4 Tucker with all factors `n×r`: `(4nr, n⁴r + n³r² + n²r³ + nr⁴ + r⁴)`.
pub fn cost_formula_tucker(n: u64, r: u64) -> Result<(u64, u64)> {
    positive(&[n, r])?;
    let storage = 4 * n * r;
    let projection = n.pow(4) * r + n.pow(3) * r.pow(2) + n.pow(2) * r.pow(3) + n * r.pow(4) + r.pow(4);
    Ok((storage, projection))
}

/// Order-4 balanced HT, materialized root-child bases of size `n²×r′`:
/// `(2n²r′, n⁴r′ + n²r′² + r′²)`.
pub fn cost_formula_hier1(n: u64, rp: u64) -> Result<(u64, u64)> {
    positive(&[n, rp])?;
    Ok((2 * n * n * rp, n.pow(4) * rp + n * n * rp * rp + rp * rp))
}

/// Order-4 balanced HT, leaf bases `n×r` and transfers `r²×r′`:
/// `(4nr + 2r²r′, n⁴r′ + n²r′² + r′² + 2n²r² + 2n²r²r′)`.
pub fn cost_formula_hier2(n: u64, r: u64, rp: u64) -> Result<(u64, u64)> {
    positive(&[n, r, rp])?;
    let storage = 4 * n * r + 2 * r * r * rp;
    let projection =
        n.pow(4) * rp + n * n * rp * rp + rp * rp + 2 * n * n * r * r + 2 * n * n * r * r * rp;
    Ok((storage, projection))
}

/// Order-4 tensor train, top basis `n³×r′` and last leaf `n×r`:
/// `(n³r′ + nr, n⁴r + n³rr′)`.
pub fn cost_formula_tt(n: u64, r: u64, rp: u64) -> Result<(u64, u64)> {
    positive(&[n, r, rp])?;
    Ok((n.pow(3) * rp + n * r, n.pow(4) * r + n.pow(3) * r * rp))
}

/// Symmetric order-4 layout with leaf rank `r` and internal rank `rp`.
pub fn symmetric_layout(family: ModelFamily, n: usize, r: usize, rp: usize) -> Result<ModelLayout> {
    let shape = vec![n; 4];
    let spec = match family {
        ModelFamily::Tucker => ModelSpec::Tucker(vec![r; 4]),
        ModelFamily::Ht => ModelSpec::Ht(DimensionTree::balanced(4)?.with_uniform_ranks(r, rp)?),
        ModelFamily::Tt => ModelSpec::Tt(DimensionTree::tensor_train(4)?.with_uniform_ranks(r, rp)?),
    };
    Ok(ModelLayout { shape, spec })
}
