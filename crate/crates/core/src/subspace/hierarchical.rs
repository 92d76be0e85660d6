//! Hierarchical Tucker subspaces learned bottom-up over a dimension tree.

use crate::error::{Error, Result};
use crate::linalg::leading_left_singular_vectors;
use crate::matrix::{kron, Matrix};
use crate::subspace::tree::DimensionTree;
use crate::tensor::{fold, unfold, AxisSet, DenseTensor};

/// Hierarchical subspace: leaf bases `U_i`, and for each internal non-root
/// node `s` with children `(l, r)` a basis `U_s = (U_l ⊗ U_r) · B_s`.
///
/// The subspace itself is the column span of `U_{c1} ⊗ U_{c2}` for the root
/// children `c1, c2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HtModel {
    tree: DimensionTree,
    shape: Vec<usize>,
    /// Node basis per tree node; `None` only for the root.
    bases: Vec<Option<Matrix>>,
    /// Transfer matrix per internal non-root node.
    transfers: Vec<Option<Matrix>>,
}

impl HtModel {
    /// Assembles a model from explicit factors, checking the structural invariants.
    pub fn from_parts(
        tree: DimensionTree,
        shape: Vec<usize>,
        bases: Vec<Option<Matrix>>,
        transfers: Vec<Option<Matrix>>,
    ) -> Result<Self> {
        if shape.len() != tree.order() || bases.len() != tree.len() || transfers.len() != tree.len() {
            return Err(Error::Shape("model parts do not match the tree".into()));
        }
        for idx in 1..tree.len() {
            let node = tree.node(idx);
            let basis = bases[idx]
                .as_ref()
                .ok_or_else(|| Error::Tree(format!("node {:?} has no basis", node.axes.axes())))?;
            let rank = node.rank.unwrap_or(0);
            if basis.shape() != (node.axes.extent(&shape), rank) {
                return Err(Error::Shape(format!(
                    "basis of node {:?} is {}x{}",
                    node.axes.axes(),
                    basis.rows(),
                    basis.cols()
                )));
            }
            match (node.children, &transfers[idx]) {
                (None, None) => {}
                (Some((l, r)), Some(b)) => {
                    let kids = tree.rank(l).unwrap_or(0) * tree.rank(r).unwrap_or(0);
                    if b.shape() != (kids, rank) {
                        return Err(Error::Shape(format!(
                            "transfer matrix of node {:?} is {}x{}, expected {kids}x{rank}",
                            node.axes.axes(),
                            b.rows(),
                            b.cols()
                        )));
                    }
                }
                _ => {
                    return Err(Error::Tree(format!(
                        "transfer matrix presence wrong at node {:?}",
                        node.axes.axes()
                    )))
                }
            }
        }
        Ok(HtModel {
            tree,
            shape,
            bases,
            transfers,
        })
    }

    pub fn tree(&self) -> &DimensionTree {
        &self.tree
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn leaf_basis(&self, axis: usize) -> &Matrix {
        self.node_basis(self.tree.leaf_of_axis(axis))
    }

    /// Stored basis of a non-root node.
    pub fn node_basis(&self, idx: usize) -> &Matrix {
        self.bases[idx].as_ref().expect("non-root node basis")
    }

    pub fn transfer(&self, idx: usize) -> Option<&Matrix> {
        self.transfers[idx].as_ref()
    }

    pub(crate) fn parts(&self) -> (&[Option<Matrix>], &[Option<Matrix>]) {
        (&self.bases, &self.transfers)
    }

    /// Rebuilds a node basis from leaf bases and transfer matrices only.
    pub fn factored_basis(&self, idx: usize) -> Matrix {
        match self.tree.node(idx).children {
            None => self.node_basis(idx).clone(),
            Some((l, r)) => {
                let kr = kron(&self.factored_basis(l), &self.factored_basis(r));
                let b = self.transfers[idx].as_ref().expect("internal node transfer");
                kr.matmul(b).expect("transfer rows match children ranks")
            }
        }
    }

    /// Dimension of the subspace, `r_{c1} · r_{c2}`.
    pub fn dimension(&self) -> usize {
        let (l, r) = self.tree.root_children();
        self.node_basis(l).cols() * self.node_basis(r).cols()
    }

    fn check_input(&self, x: &DenseTensor) -> Result<()> {
        if x.shape() != self.shape.as_slice() {
            return Err(Error::Shape(format!(
                "input {:?} does not match model shape {:?}",
                x.shape(),
                self.shape
            )));
        }
        Ok(())
    }

    fn root_unfolding(&self, x: &DenseTensor) -> Result<Matrix> {
        let (l, _) = self.tree.root_children();
        unfold(x, &self.tree.node(l).axes)
    }

    /// Coefficients `U_{c1}ᵀ · X^{(c1)} · U_{c2}` using the stored root-child bases.
    pub fn project_materialized(&self, x: &DenseTensor) -> Result<Matrix> {
        self.check_input(x)?;
        let (l, r) = self.tree.root_children();
        let xm = self.root_unfolding(x)?;
        let right = xm.matmul(self.node_basis(r))?;
        self.node_basis(l).tr_matmul(&right)
    }

    /// Same coefficients as [`HtModel::project_materialized`], with the root-child
    /// bases rebuilt from leaf bases and transfer matrices.
    pub fn project_factored(&self, x: &DenseTensor) -> Result<Matrix> {
        self.check_input(x)?;
        let (l, r) = self.tree.root_children();
        let ul = self.factored_basis(l);
        let ur = self.factored_basis(r);
        let xm = self.root_unfolding(x)?;
        ul.tr_matmul(&xm.matmul(&ur)?)
    }

    /// Maps root coefficients `C` back to the ambient tensor `fold(U_{c1} C U_{c2}ᵀ)`.
    pub fn reconstruct(&self, coefficients: &Matrix) -> Result<DenseTensor> {
        let (l, r) = self.tree.root_children();
        let ul = self.node_basis(l);
        let ur = self.node_basis(r);
        if coefficients.shape() != (ul.cols(), ur.cols()) {
            return Err(Error::Shape("coefficient matrix does not match root ranks".into()));
        }
        let m = ul.matmul(coefficients)?.matmul(&ur.transpose())?;
        fold(&m, &self.tree.node(l).axes, &self.shape)
    }
}

/// Learns a hierarchical subspace from equally shaped samples.
///
/// Leaves take the top left singular vectors of the stacked-sample unfolding.
/// An internal node `s` with children `(l, r)` forms `Ũ = U_l ⊗ U_r`, takes
/// the top left singular vectors `W` of `Ũᵀ X^{(s)}` and sets `B_s = W`,
/// `U_s = Ũ W`. This has the same leading left singular subspace as
/// `Ũ Ũᵀ X^{(s)}` at a fraction of the cost.
pub fn learn_hierarchical(samples: &[DenseTensor], tree: &DimensionTree) -> Result<HtModel> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Empty("no training samples".into()))?;
    let shape = first.shape().to_vec();
    tree.validate_ranks(&shape, samples.len())?;
    let stacked = DenseTensor::stack(samples)?;

    let mut bases: Vec<Option<Matrix>> = vec![None; tree.len()];
    let mut transfers: Vec<Option<Matrix>> = vec![None; tree.len()];
    for idx in tree.bottom_up() {
        if idx == DimensionTree::ROOT {
            continue;
        }
        let node = tree.node(idx);
        let rank = node.rank.expect("validated");
        let unfolded = unfold(&stacked, &node.axes)?;
        match node.children {
            None => {
                bases[idx] = Some(leading_left_singular_vectors(&unfolded, rank)?);
            }
            Some((l, r)) => {
                let u_tilde = kron(
                    bases[l].as_ref().expect("child before parent"),
                    bases[r].as_ref().expect("child before parent"),
                );
                let compressed = u_tilde.tr_matmul(&unfolded)?;
                let w = leading_left_singular_vectors(&compressed, rank)?;
                bases[idx] = Some(u_tilde.matmul(&w)?);
                transfers[idx] = Some(w);
            }
        }
    }
    HtModel::from_parts(tree.clone(), shape, bases, transfers)
}

/// Tensor-train subspace: a hierarchical model over the chain tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TtModel(HtModel);

impl TtModel {
    pub fn new(model: HtModel) -> Result<Self> {
        if !model.tree().is_chain() {
            return Err(Error::Tree("tensor-train model needs the chain tree".into()));
        }
        Ok(TtModel(model))
    }

    pub fn as_hierarchical(&self) -> &HtModel {
        &self.0
    }

    pub fn into_hierarchical(self) -> HtModel {
        self.0
    }

    /// Coefficients `U_{0..n-1}ᵀ · X^{(0..n-1)} · U_{n-1}` with the stored top basis.
    pub fn project(&self, x: &DenseTensor) -> Result<Matrix> {
        self.0.project_materialized(x)
    }
}

pub fn learn_tensor_train(samples: &[DenseTensor], tree: &DimensionTree) -> Result<TtModel> {
    TtModel::new(learn_hierarchical(samples, tree)?)
}

pub fn project_ht_materialized(model: &HtModel, x: &DenseTensor) -> Result<Matrix> {
    model.project_materialized(x)
}

pub fn project_ht_factored(model: &HtModel, x: &DenseTensor) -> Result<Matrix> {
    model.project_factored(x)
}

pub fn project_tt(model: &TtModel, x: &DenseTensor) -> Result<Matrix> {
    model.project(x)
}

/// Axis set of the first root child, the row side of the root unfolding.
pub fn root_row_axes(tree: &DimensionTree) -> &AxisSet {
    &tree.node(tree.root_children().0).axes
}
