//! Dense order-n tensors, unfoldings and reshapes.
//!
//! Every tensor uses one linearization: the multi-index `(i_0, …, i_{n-1})`
//! maps to a flat offset with `i_0` varying slowest (row-major). Unfoldings
//! combine the row axes and the column axes lexicographically under the same
//! rule, so `unfold(t, {0..k})` is a plain reinterpretation of the data.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Sorted, duplicate-free, non-empty set of zero-based axis indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AxisSet(Vec<usize>);

impl AxisSet {
    pub fn new(axes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = axes.into_iter().collect();
        v.sort_unstable();
        let before = v.len();
        v.dedup();
        if v.len() != before {
            return Err(Error::Axes("duplicate axis".into()));
        }
        if v.is_empty() {
            return Err(Error::Axes("empty axis set".into()));
        }
        Ok(AxisSet(v))
    }

    /// Contiguous range `start..end`.
    pub fn range(start: usize, end: usize) -> Result<Self> {
        AxisSet::new(start..end)
    }

    pub fn axes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, axis: usize) -> bool {
        self.0.binary_search(&axis).is_ok()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn is_contiguous(&self) -> bool {
        self.last() - self.first() + 1 == self.0.len()
    }

    /// Axes of `0..order` not in `self`; may be empty.
    pub fn complement(&self, order: usize) -> Vec<usize> {
        (0..order).filter(|a| !self.contains(*a)).collect()
    }

    /// Product of the extents of the axes in this set.
    pub fn extent(&self, shape: &[usize]) -> usize {
        self.0.iter().map(|&a| shape[a]).product()
    }

    fn check(&self, order: usize) -> Result<()> {
        if self.last() >= order {
            return Err(Error::Axes(format!(
                "axis {} out of range for order-{order} tensor",
                self.last()
            )));
        }
        if self.len() == order {
            return Err(Error::Axes("row axes must be a strict subset".into()));
        }
        Ok(())
    }
}

/// Dense real tensor with explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        let size: usize = shape.iter().product();
        if size != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {size} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        check_shape(&shape)?;
        let size = shape.iter().product();
        Ok(DenseTensor {
            shape,
            data: vec![0.0; size],
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    /// Same data reinterpreted under a new shape.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<DenseTensor> {
        check_shape(new_shape)?;
        if new_shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {new_shape:?}",
                self.shape
            )));
        }
        Ok(DenseTensor {
            shape: new_shape.to_vec(),
            data: self.data.clone(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn sub(&self, rhs: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn add(&self, rhs: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn scale(&self, alpha: f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    fn zip_with(&self, rhs: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<DenseTensor> {
        if self.shape != rhs.shape {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.shape, rhs.shape
            )));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Entrywise mean of equally shaped tensors.
    pub fn mean<'a>(tensors: impl IntoIterator<Item = &'a DenseTensor>) -> Result<DenseTensor> {
        let mut iter = tensors.into_iter();
        let first = iter.next().ok_or_else(|| Error::Empty("mean of no tensors".into()))?;
        let mut acc = first.data.clone();
        let mut count = 1usize;
        for t in iter {
            if t.shape != first.shape {
                return Err(Error::Shape("mean over inconsistent shapes".into()));
            }
            for (a, v) in acc.iter_mut().zip(&t.data) {
                *a += v;
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        DenseTensor::new(first.shape.clone(), acc)
    }

    /// Stacks equally shaped tensors along a new trailing axis of length `samples.len()`.
    pub fn stack(samples: &[DenseTensor]) -> Result<DenseTensor> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Empty("no samples to stack".into()))?;
        let n = samples.len();
        let size = first.len();
        let mut data = vec![0.0; size * n];
        for (k, s) in samples.iter().enumerate() {
            if s.shape != first.shape {
                return Err(Error::Shape(format!(
                    "sample {k} has shape {:?}, expected {:?}",
                    s.shape, first.shape
                )));
            }
            for (j, &v) in s.data.iter().enumerate() {
                data[j * n + k] = v;
            }
        }
        let mut shape = first.shape.clone();
        shape.push(n);
        DenseTensor::new(shape, data)
    }

    /// Applies `uᵀ` along `axis`: the axis of extent `I` becomes extent `u.cols()`.
    pub fn mode_product_transposed(&self, axis: usize, u: &Matrix) -> Result<DenseTensor> {
        if axis >= self.order() || u.rows() != self.shape[axis] {
            return Err(Error::Shape(format!(
                "mode-{axis} product of {:?} with {}x{} factor",
                self.shape,
                u.rows(),
                u.cols()
            )));
        }
        let pre: usize = self.shape[..axis].iter().product();
        let post: usize = self.shape[axis + 1..].iter().product();
        let extent = self.shape[axis];
        let r = u.cols();
        let mut out = vec![0.0; pre * r * post];
        for p in 0..pre {
            for i in 0..extent {
                let src = &self.data[(p * extent + i) * post..(p * extent + i + 1) * post];
                for (a, &uia) in u.row(i).iter().enumerate() {
                    if uia == 0.0 {
                        continue;
                    }
                    let dst = &mut out[(p * r + a) * post..(p * r + a + 1) * post];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += uia * s;
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[axis] = r;
        DenseTensor::new(shape, out)
    }
}

impl AsRef<[f64]> for DenseTensor {
    fn as_ref(&self) -> &[f64] {
        &self.data
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::Shape("tensor order must be at least 1".into()));
    }
    if shape.contains(&0) {
        return Err(Error::Shape(format!("zero extent in shape {shape:?}")));
    }
    Ok(())
}

/// Row and column strides of each tensor axis inside the unfolding along `rows`.
fn unfolding_strides(shape: &[usize], rows: &AxisSet) -> (Vec<usize>, usize, usize) {
    let order = shape.len();
    let cols = rows.complement(order);
    let mut stride = vec![0usize; order];
    let mut acc = 1;
    for &a in rows.axes().iter().rev() {
        stride[a] = acc;
        acc *= shape[a];
    }
    let n_rows = acc;
    acc = 1;
    for &a in cols.iter().rev() {
        stride[a] = acc;
        acc *= shape[a];
    }
    (stride, n_rows, acc)
}

/// Visits every multi-index in linearization order, passing the (row, col)
/// position inside the unfolding along `rows`.
fn for_each_unfolded(shape: &[usize], rows: &AxisSet, mut f: impl FnMut(usize, usize, usize)) {
    let (stride, _, _) = unfolding_strides(shape, rows);
    let is_row: Vec<bool> = (0..shape.len()).map(|a| rows.contains(a)).collect();
    let order = shape.len();
    let mut index = vec![0usize; order];
    let (mut r, mut c) = (0usize, 0usize);
    let total: usize = shape.iter().product();
    for flat in 0..total {
        f(flat, r, c);
        // odometer increment, last axis fastest
        let mut a = order;
        while a > 0 {
            a -= 1;
            index[a] += 1;
            if is_row[a] {
                r += stride[a];
            } else {
                c += stride[a];
            }
            if index[a] < shape[a] {
                break;
            }
            let back = shape[a] * stride[a];
            if is_row[a] {
                r -= back;
            } else {
                c -= back;
            }
            index[a] = 0;
        }
    }
}

/// Matricization with the axes of `rows` combined lexicographically into the
/// row index and the remaining axes (ascending) into the column index.
pub fn unfold(t: &DenseTensor, rows: &AxisSet) -> Result<Matrix> {
    rows.check(t.order())?;
    let (_, n_rows, n_cols) = unfolding_strides(&t.shape, rows);
    let mut out = vec![0.0; n_rows * n_cols];
    for_each_unfolded(&t.shape, rows, |flat, r, c| {
        out[r * n_cols + c] = t.data[flat];
    });
    Matrix::from_vec(n_rows, n_cols, out)
}

/// Inverse of [`unfold`].
pub fn fold(m: &Matrix, rows: &AxisSet, shape: &[usize]) -> Result<DenseTensor> {
    check_shape(shape)?;
    rows.check(shape.len())?;
    let (_, n_rows, n_cols) = unfolding_strides(shape, rows);
    if m.shape() != (n_rows, n_cols) {
        return Err(Error::Shape(format!(
            "{}x{} matrix cannot fold into {shape:?} along {:?}",
            m.rows(),
            m.cols(),
            rows.axes()
        )));
    }
    let mut data = vec![0.0; n_rows * n_cols];
    let src = m.as_slice();
    for_each_unfolded(shape, rows, |flat, r, c| {
        data[flat] = src[r * n_cols + c];
    });
    DenseTensor::new(shape.to_vec(), data)
}

pub fn reshape(t: &DenseTensor, new_shape: &[usize]) -> Result<DenseTensor> {
    t.reshape(new_shape)
}

pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    t.frobenius_norm()
}
