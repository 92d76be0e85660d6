use crate::error::{Error, Result};
use crate::linalg::leading_left_singular_vectors;
use crate::matrix::Matrix;
use crate::tensor::{unfold, AxisSet, DenseTensor};

/// Tucker subspace `span(U_0 ⊗ … ⊗ U_{n-1})` with one orthonormal factor per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    shape: Vec<usize>,
    factors: Vec<Matrix>,
}

impl TuckerModel {
    pub fn from_factors(factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Empty("Tucker model needs at least one factor".into()));
        }
        let shape = factors.iter().map(Matrix::rows).collect();
        Ok(TuckerModel { shape, factors })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::cols).collect()
    }

    pub fn dimension(&self) -> usize {
        self.ranks().iter().product()
    }

    /// Core coefficients: `Uᵢᵀ` applied along each axis in ascending order.
    pub fn project(&self, x: &DenseTensor) -> Result<DenseTensor> {
        if x.shape() != self.shape.as_slice() {
            return Err(Error::Shape(format!(
                "input {:?} does not match model shape {:?}",
                x.shape(),
                self.shape
            )));
        }
        let mut core = x.clone();
        for (axis, u) in self.factors.iter().enumerate() {
            core = core.mode_product_transposed(axis, u)?;
        }
        Ok(core)
    }

    /// Maps a core back to the ambient space.
    pub fn reconstruct(&self, core: &DenseTensor) -> Result<DenseTensor> {
        let mut t = core.clone();
        for (axis, u) in self.factors.iter().enumerate() {
            t = t.mode_product_transposed(axis, &u.transpose())?;
        }
        Ok(t)
    }
}

/// Truncated HOSVD: `U_i` holds the top `ranks[i]` left singular vectors of
/// the stacked-sample unfolding along axis `i`.
pub fn learn_tucker(samples: &[DenseTensor], ranks: &[usize]) -> Result<TuckerModel> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Empty("no training samples".into()))?;
    let shape = first.shape();
    if ranks.len() != shape.len() {
        return Err(Error::Shape(format!(
            "{} ranks for an order-{} tensor",
            ranks.len(),
            shape.len()
        )));
    }
    let total: usize = shape.iter().product();
    for (axis, (&r, &extent)) in ranks.iter().zip(shape).enumerate() {
        let max = extent.min(samples.len() * (total / extent));
        if r == 0 || r > max {
            return Err(Error::Rank {
                what: format!("Tucker axis {axis}"),
                rank: r,
                max,
            });
        }
    }
    let stacked = DenseTensor::stack(samples)?;
    let factors = ranks
        .iter()
        .enumerate()
        .map(|(axis, &r)| {
            let m = unfold(&stacked, &AxisSet::new([axis])?)?;
            leading_left_singular_vectors(&m, r)
        })
        .collect::<Result<Vec<_>>>()?;
    TuckerModel::from_factors(factors)
}

pub fn project_tucker(model: &TuckerModel, x: &DenseTensor) -> Result<DenseTensor> {
    model.project(x)
}
