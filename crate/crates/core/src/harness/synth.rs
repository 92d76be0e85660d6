//! Planted-subspace synthetic datasets.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::classifier::LabeledTensor;
use crate::error::{Error, Result};
use crate::harness::config::SyntheticSpec;
use crate::harness::rng::{stream, Stream};
use crate::linalg::random_orthonormal;
use crate::matrix::{kron, Matrix};
use crate::subspace::{DimensionTree, HtModel, ModelFamily, SubspaceModel, TtModel, TuckerModel};
use crate::tensor::DenseTensor;

pub fn class_label(index: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(2);
    format!("class{index:0width$}")
}

/// Planted internal ranks: `round(fraction · min(∏_{i∈s} I_i, r_l · r_r))`,
/// at least 1. The minimum is the largest rank node `s` can have given its
/// children.
pub fn planted_tree(family: ModelFamily, shape: &[usize], leaf_rank: usize, internal_fraction: f64) -> Result<DimensionTree> {
    let kind = family
        .tree_kind()
        .ok_or_else(|| Error::Config("Tucker models have no tree".into()))?;
    let mut tree = DimensionTree::of_kind(kind, shape.len())?;
    let order: Vec<usize> = tree.bottom_up().filter(|&i| i != DimensionTree::ROOT).collect();
    for idx in order {
        let rank = match tree.node(idx).children {
            None => leaf_rank,
            Some((l, r)) => {
                let inside = tree.node(idx).axes.extent(shape);
                let full = inside.min(tree.rank(l).unwrap_or(1) * tree.rank(r).unwrap_or(1));
                ((internal_fraction * full as f64).round() as usize).clamp(1, full)
            }
        };
        tree.set_rank(idx, rank)?;
    }
    Ok(tree)
}

fn check_spec(spec: &SyntheticSpec) -> Result<()> {
    if spec.class_count == 0 || spec.samples_per_class == 0 || spec.shape.len() < 2 {
        return Err(Error::Config("synthetic dataset needs classes, samples and order >= 2".into()));
    }
    for &extent in &spec.shape {
        if spec.leaf_rank == 0 || spec.leaf_rank > extent {
            return Err(Error::Rank {
                what: "planted leaf rank".into(),
                rank: spec.leaf_rank,
                max: extent,
            });
        }
    }
    if spec.shared_leaves && (spec.orthogonal_classes || spec.family == ModelFamily::Tucker) {
        return Err(Error::Config(
            "shared leaves need a hierarchical family and non-orthogonal classes".into(),
        ));
    }
    if spec.orthogonal_classes {
        let needed = spec.class_count * spec.leaf_rank;
        if needed > spec.shape[0] {
            return Err(Error::Rank {
                what: format!("{} orthogonal classes on axis 0", spec.class_count),
                rank: needed,
                max: spec.shape[0],
            });
        }
    }
    Ok(())
}

/// Leaf bases fixed before the per-class draws: either one set shared by
/// every class, or a block of orthonormal axis-0 columns split between classes.
enum SharedDraw {
    None,
    Leaves(Vec<Matrix>),
    Axis0(Matrix),
}

fn shared_draw(spec: &SyntheticSpec, seed: u64) -> Result<SharedDraw> {
    let mut rng = stream(seed, Stream::SyntheticShared, 0);
    if spec.shared_leaves {
        let leaves = spec
            .shape
            .iter()
            .map(|&n| random_orthonormal(&mut rng, n, spec.leaf_rank))
            .collect::<Result<_>>()?;
        Ok(SharedDraw::Leaves(leaves))
    } else if spec.orthogonal_classes {
        Ok(SharedDraw::Axis0(random_orthonormal(
            &mut rng,
            spec.shape[0],
            spec.class_count * spec.leaf_rank,
        )?))
    } else {
        Ok(SharedDraw::None)
    }
}

fn draw_model<R: Rng>(spec: &SyntheticSpec, rng: &mut R, shared: &SharedDraw, class: usize) -> Result<SubspaceModel> {
    let shape = &spec.shape;
    let leaves: Vec<Matrix> = match shared {
        SharedDraw::Leaves(l) => l.clone(),
        _ => shape
            .iter()
            .enumerate()
            .map(|(axis, &extent)| match shared {
                SharedDraw::Axis0(q) if axis == 0 => Ok(Matrix::from_fn(q.rows(), spec.leaf_rank, |i, j| {
                    q.get(i, class * spec.leaf_rank + j)
                })),
                _ => random_orthonormal(rng, extent, spec.leaf_rank),
            })
            .collect::<Result<_>>()?,
    };
    if spec.family == ModelFamily::Tucker {
        return Ok(SubspaceModel::Tucker(TuckerModel::from_factors(leaves)?));
    }
    let tree = planted_tree(spec.family, shape, spec.leaf_rank, spec.internal_fraction)?;
    let mut bases: Vec<Option<Matrix>> = vec![None; tree.len()];
    let mut transfers: Vec<Option<Matrix>> = vec![None; tree.len()];
    for idx in tree.bottom_up().filter(|&i| i != DimensionTree::ROOT) {
        let node = tree.node(idx);
        match node.children {
            None => bases[idx] = Some(leaves[node.axes.first()].clone()),
            Some((l, r)) => {
                let rl = tree.rank(l).expect("set");
                let rr = tree.rank(r).expect("set");
                let b = random_orthonormal(rng, rl * rr, node.rank.expect("set"))?;
                let u = kron(bases[l].as_ref().expect("child"), bases[r].as_ref().expect("child")).matmul(&b)?;
                bases[idx] = Some(u);
                transfers[idx] = Some(b);
            }
        }
    }
    let model = HtModel::from_parts(tree, shape.clone(), bases, transfers)?;
    Ok(match spec.family {
        ModelFamily::Tt => SubspaceModel::Tt(TtModel::new(model)?),
        _ => SubspaceModel::Ht(model),
    })
}

/// Unit-norm random element of a planted subspace.
fn draw_signal<R: Rng>(model: &SubspaceModel, rng: &mut R) -> Result<DenseTensor> {
    let signal = match model {
        SubspaceModel::Tucker(m) => {
            let ranks = m.ranks();
            let n: usize = ranks.iter().product();
            let core = DenseTensor::new(ranks, (0..n).map(|_| rng.sample(StandardNormal)).collect())?;
            m.reconstruct(&core)?
        }
        other => {
            let m = other.hierarchical().expect("hierarchical family");
            let (l, r) = m.tree().root_children();
            let (rl, rr) = (m.node_basis(l).cols(), m.node_basis(r).cols());
            let c = Matrix::from_fn(rl, rr, |_, _| rng.sample(StandardNormal));
            m.reconstruct(&c)?
        }
    };
    let norm = signal.frobenius_norm();
    Ok(if norm > 0.0 { signal.scale(1.0 / norm) } else { signal })
}

/// Per class: a random model of `spec.family`, then samples equal to unit-norm
/// random subspace elements plus white noise with expected norm
/// `spec.noise_sigma`. Deterministic in `seed`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Vec<LabeledTensor>> {
    check_spec(spec)?;
    let size: usize = spec.shape.iter().product();
    let shared = shared_draw(spec, seed)?;
    let noise_std = spec.noise_sigma / (size as f64).sqrt();
    let mut out = Vec::with_capacity(spec.class_count * spec.samples_per_class);
    for c in 0..spec.class_count {
        let mut rng = stream(seed, Stream::SyntheticClass, c as u64);
        let model = draw_model(spec, &mut rng, &shared, c)?;
        let label = class_label(c, spec.class_count);
        for _ in 0..spec.samples_per_class {
            let signal = draw_signal(&model, &mut rng)?;
            let sample = if noise_std > 0.0 {
                let noise: Vec<f64> = (0..size)
                    .map(|_| noise_std * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                signal.add(&DenseTensor::new(spec.shape.clone(), noise)?)?
            } else {
                signal
            };
            out.push(LabeledTensor::new(label.clone(), sample));
        }
    }
    Ok(out)
}

/// The planted per-class models, regenerated from the same seed.
pub fn planted_models(spec: &SyntheticSpec, seed: u64) -> Result<Vec<SubspaceModel>> {
    check_spec(spec)?;
    let shared = shared_draw(spec, seed)?;
    (0..spec.class_count)
        .map(|c| {
            let mut rng = stream(seed, Stream::SyntheticClass, c as u64);
            draw_model(spec, &mut rng, &shared, c)
        })
        .collect()
}
