//! Reference implementations used as oracles. None of these touch the
//! library's SVD, Kronecker or unfolding code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tensorsub::subspace::{DimensionTree, HtModel, SubspaceModel, TtModel, TuckerModel};
use tensorsub::{DenseTensor, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_tensor<R: Rng>(rng: &mut R, shape: &[usize]) -> DenseTensor {
    let n = shape.iter().product();
    DenseTensor::new(shape.to_vec(), (0..n).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Dense row-major matrices as plain vectors of rows.
pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let k = b.len();
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| (0..k).map(|t| row[t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &Dense) -> Dense {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// `a ⊗ b` written out index by index.
pub fn kron_ref(a: &Dense, b: &Dense) -> Dense {
    let (ar, ac) = (a.len(), a[0].len());
    let (br, bc) = (b.len(), b[0].len());
    let mut out = vec![vec![0.0; ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Unfolding by explicit multi-index arithmetic: row index runs over `rows`
/// (lexicographic, first slowest), column index over the remaining axes.
pub fn unfold_ref(t: &DenseTensor, rows: &[usize]) -> Dense {
    let shape = t.shape();
    let cols: Vec<usize> = (0..shape.len()).filter(|a| !rows.contains(a)).collect();
    let nr: usize = rows.iter().map(|&a| shape[a]).product();
    let nc: usize = cols.iter().map(|&a| shape[a]).product();
    let mut out = vec![vec![0.0; nc]; nr];
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..t.len() {
        let mut rem = flat;
        for a in (0..shape.len()).rev() {
            idx[a] = rem % shape[a];
            rem /= shape[a];
        }
        let r = rows.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]);
        let c = cols.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]);
        out[r][c] = t.as_slice()[flat];
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order and matching eigenvectors as columns.
pub fn jacobi_eigen(a: &Dense) -> (Vec<f64>, Dense) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Dense = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&i| v[r][i]).collect()).collect();
    (values, vectors)
}

/// Top-`r` left singular vectors via eigenvectors of `m mᵀ`.
pub fn leading_subspace_ref(m: &Dense, r: usize) -> Dense {
    let (_, vecs) = jacobi_eigen(&mul(m, &transpose(m)));
    vecs.iter().map(|row| row[..r].to_vec()).collect()
}

/// Orthonormal basis for the column span (modified Gram-Schmidt, twice).
pub fn orthonormalize(a: &Dense) -> Dense {
    let rows = a.len();
    let cols = a[0].len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    for j in 0..cols {
        let mut v: Vec<f64> = (0..rows).map(|i| a[i][j]).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    (0..rows).map(|i| q.iter().map(|u| u[i]).collect()).collect()
}

/// Orthogonal projector onto the column span of `a`.
pub fn projector(a: &Dense) -> Dense {
    let q = orthonormalize(a);
    mul(&q, &transpose(&q))
}

pub fn max_abs(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Explicit basis of a model's subspace in `R^{∏ I}`, built from the stored
/// factors with [`kron_ref`].
pub fn explicit_basis(model: &SubspaceModel) -> Dense {
    match model {
        SubspaceModel::Tucker(m) => m
            .factors()
            .iter()
            .map(to_dense)
            .reduce(|acc, f| kron_ref(&acc, &f))
            .unwrap(),
        other => {
            let ht = other.hierarchical().unwrap();
            let (l, r) = ht.tree().root_children();
            kron_ref(&factored_ref(ht, l), &factored_ref(ht, r))
        }
    }
}

/// Node basis rebuilt from leaves and transfers: `(U_l ⊗ U_r) B_s`.
pub fn factored_ref(ht: &HtModel, idx: usize) -> Dense {
    match ht.tree().node(idx).children {
        None => to_dense(ht.node_basis(idx)),
        Some((l, r)) => mul(
            &kron_ref(&factored_ref(ht, l), &factored_ref(ht, r)),
            &to_dense(ht.transfer(idx).unwrap()),
        ),
    }
}

/// `‖P vec(x)‖²` with an explicit projector.
pub fn brute_energy(model: &SubspaceModel, x: &DenseTensor) -> f64 {
    let p = projector(&explicit_basis(model));
    p.iter()
        .map(|row| row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum::<f64>().powi(2))
        .sum()
}

/// Random model with orthonormal factors for a tree with ranks set.
pub fn random_hierarchical<R: Rng>(rng: &mut R, tree: &DimensionTree, shape: &[usize]) -> HtModel {
    let mut bases: Vec<Option<Matrix>> = vec![None; tree.len()];
    let mut transfers: Vec<Option<Matrix>> = vec![None; tree.len()];
    for idx in tree.bottom_up().filter(|&i| i != DimensionTree::ROOT) {
        let node = tree.node(idx);
        let rank = node.rank.unwrap();
        match node.children {
            None => bases[idx] = Some(tensorsub::linalg::random_orthonormal(rng, shape[node.axes.first()], rank).unwrap()),
            Some((l, r)) => {
                let kids = tree.rank(l).unwrap() * tree.rank(r).unwrap();
                let b = tensorsub::linalg::random_orthonormal(rng, kids, rank).unwrap();
                let u = tensorsub::matrix::kron(bases[l].as_ref().unwrap(), bases[r].as_ref().unwrap())
                    .matmul(&b)
                    .unwrap();
                bases[idx] = Some(u);
                transfers[idx] = Some(b);
            }
        }
    }
    HtModel::from_parts(tree.clone(), shape.to_vec(), bases, transfers).unwrap()
}

pub fn random_tucker<R: Rng>(rng: &mut R, shape: &[usize], ranks: &[usize]) -> TuckerModel {
    let factors = shape
        .iter()
        .zip(ranks)
        .map(|(&n, &r)| tensorsub::linalg::random_orthonormal(rng, n, r).unwrap())
        .collect();
    TuckerModel::from_factors(factors).unwrap()
}

pub fn random_tt<R: Rng>(rng: &mut R, tree: &DimensionTree, shape: &[usize]) -> TtModel {
    TtModel::new(random_hierarchical(rng, tree, shape)).unwrap()
}

/// Tree with random feasible ranks: leaves in `1..=min(I, cap)`, internal
/// nodes in `1..=min(r_l r_r, extent, cap)`.
pub fn random_ranks<R: Rng>(rng: &mut R, mut tree: DimensionTree, shape: &[usize], cap: usize) -> DimensionTree {
    for idx in tree.bottom_up().filter(|&i| i != DimensionTree::ROOT).collect::<Vec<_>>() {
        let node = tree.node(idx).clone();
        let max = match node.children {
            None => shape[node.axes.first()].min(cap),
            Some((l, r)) => (tree.rank(l).unwrap() * tree.rank(r).unwrap())
                .min(node.axes.extent(shape))
                .min(cap),
        };
        tree.set_rank(idx, rng.random_range(1..=max)).unwrap();
    }
    tree
}

/// Learning exactly as written in the algorithm listing: each internal node
/// takes the top singular subspace of `Ũ Ũᵀ X^{(s)}` and sets
/// `B_s = Ũᵀ U_s`. Returns node projectors `U_s U_sᵀ` by tree index.
pub fn printed_algorithm_projectors(samples: &[DenseTensor], tree: &DimensionTree) -> Vec<Option<Dense>> {
    let stacked = DenseTensor::stack(samples).unwrap();
    let mut bases: Vec<Option<Dense>> = vec![None; tree.len()];
    for idx in tree.bottom_up().filter(|&i| i != DimensionTree::ROOT) {
        let node = tree.node(idx);
        let rank = node.rank.unwrap();
        let x = unfold_ref(&stacked, node.axes.axes());
        let u = match node.children {
            None => leading_subspace_ref(&x, rank),
            Some((l, r)) => {
                let ut = kron_ref(bases[l].as_ref().unwrap(), bases[r].as_ref().unwrap());
                let projected = mul(&mul(&ut, &transpose(&ut)), &x);
                leading_subspace_ref(&projected, rank)
            }
        };
        bases[idx] = Some(u);
    }
    bases.into_iter().map(|b| b.map(|u| mul(&u, &transpose(&u)))).collect()
}
