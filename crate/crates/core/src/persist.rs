//! Saving and loading trained libraries.
//!
//! A library is stored as two files: JSON metadata (`name.json`) describing
//! structure and array locations, and a flat little-endian `f64` blob
//! (`name.bin`) holding every array in row-major order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{Centering, ClassLibrary};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::subspace::{DimensionTree, HtModel, ModelFamily, ProjectionScheme, SubspaceModel, TtModel, TuckerModel};
use crate::tensor::{AxisSet, DenseTensor};

const FORMAT: &str = "tensorsub-library";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayRef {
    offset: usize,
    dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeMeta {
    node_sets: Vec<Vec<usize>>,
    ranks: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelMeta {
    Tucker { factors: Vec<ArrayRef> },
    Hierarchical {
        tree: TreeMeta,
        bases: Vec<Option<ArrayRef>>,
        transfers: Vec<Option<ArrayRef>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ClassMeta {
    label: String,
    center: Option<ArrayRef>,
    model: ModelMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LibraryMeta {
    format: String,
    version: u32,
    family: ModelFamily,
    scheme: ProjectionScheme,
    centering: Centering,
    shape: Vec<usize>,
    data: String,
    mean: ArrayRef,
    classes: Vec<ClassMeta>,
}

#[derive(Default)]
struct Blob(Vec<f64>);

impl Blob {
    fn push(&mut self, dims: Vec<usize>, data: &[f64]) -> ArrayRef {
        let offset = self.0.len();
        self.0.extend_from_slice(data);
        ArrayRef { offset, dims }
    }

    fn matrix(&mut self, m: &Matrix) -> ArrayRef {
        self.push(vec![m.rows(), m.cols()], m.as_slice())
    }

    fn tensor(&mut self, t: &DenseTensor) -> ArrayRef {
        self.push(t.shape().to_vec(), t.as_slice())
    }

    fn slice(&self, a: &ArrayRef) -> Result<&[f64]> {
        let len: usize = a.dims.iter().product();
        self.0
            .get(a.offset..a.offset + len)
            .ok_or_else(|| Error::Shape(format!("array at {} of {len} values runs past the data file", a.offset)))
    }

    fn get_matrix(&self, a: &ArrayRef) -> Result<Matrix> {
        let [r, c] = a.dims[..] else {
            return Err(Error::Shape(format!("expected a matrix, got dims {:?}", a.dims)));
        };
        Matrix::from_vec(r, c, self.slice(a)?.to_vec())
    }

    fn get_tensor(&self, a: &ArrayRef) -> Result<DenseTensor> {
        DenseTensor::new(a.dims.clone(), self.slice(a)?.to_vec())
    }
}

fn data_path(meta_path: &Path) -> PathBuf {
    meta_path.with_extension("bin")
}

fn model_meta(model: &SubspaceModel, blob: &mut Blob) -> ModelMeta {
    let ht = match model {
        SubspaceModel::Tucker(m) => {
            return ModelMeta::Tucker {
                factors: m.factors().iter().map(|f| blob.matrix(f)).collect(),
            }
        }
        SubspaceModel::Ht(m) => m,
        SubspaceModel::Tt(m) => m.as_hierarchical(),
    };
    let tree = ht.tree();
    let (bases, transfers) = ht.parts();
    ModelMeta::Hierarchical {
        tree: TreeMeta {
            node_sets: tree.node_sets(),
            ranks: (0..tree.len()).map(|i| tree.rank(i)).collect(),
        },
        bases: bases.iter().map(|b| b.as_ref().map(|m| blob.matrix(m))).collect(),
        transfers: transfers.iter().map(|b| b.as_ref().map(|m| blob.matrix(m))).collect(),
    }
}

/// Writes `path` (JSON metadata) and the matching `.bin` data file.
pub fn save_library(lib: &ClassLibrary, path: &Path) -> Result<()> {
    let mut blob = Blob::default();
    let mean = blob.tensor(lib.centering());
    let classes = lib
        .models()
        .iter()
        .map(|(label, model)| ClassMeta {
            label: label.clone(),
            center: lib.class_centers().map(|c| blob.tensor(&c[label])),
            model: model_meta(model, &mut blob),
        })
        .collect();
    let bin = data_path(path);
    let meta = LibraryMeta {
        format: FORMAT.into(),
        version: VERSION,
        family: lib.family(),
        scheme: lib.scheme(),
        centering: if lib.class_centers().is_some() { Centering::PerClass } else { Centering::Global },
        shape: lib.shape().to_vec(),
        data: bin.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
        mean,
        classes,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::format(path, e.to_string()))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
    let bytes: Vec<u8> = blob.0.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))
}

fn load_model(family: ModelFamily, shape: &[usize], meta: &ModelMeta, blob: &Blob) -> Result<SubspaceModel> {
    match (family, meta) {
        (ModelFamily::Tucker, ModelMeta::Tucker { factors }) => {
            let factors = factors.iter().map(|a| blob.get_matrix(a)).collect::<Result<Vec<_>>>()?;
            Ok(SubspaceModel::Tucker(TuckerModel::from_factors(factors)?))
        }
        (ModelFamily::Ht | ModelFamily::Tt, ModelMeta::Hierarchical { tree, bases, transfers }) => {
            let sets = tree
                .node_sets
                .iter()
                .map(|s| AxisSet::new(s.iter().copied()))
                .collect::<Result<Vec<_>>>()?;
            let mut t = DimensionTree::from_node_sets(shape.len(), &sets)?;
            if t.node_sets() != tree.node_sets || tree.ranks.len() != t.len() {
                return Err(Error::Tree("stored node order does not match the rebuilt tree".into()));
            }
            for (i, r) in tree.ranks.iter().enumerate() {
                if let Some(r) = r {
                    t.set_rank(i, *r)?;
                }
            }
            let load = |v: &[Option<ArrayRef>]| {
                v.iter()
                    .map(|a| a.as_ref().map(|a| blob.get_matrix(a)).transpose())
                    .collect::<Result<Vec<_>>>()
            };
            let model = HtModel::from_parts(t, shape.to_vec(), load(bases)?, load(transfers)?)?;
            Ok(if family == ModelFamily::Tt {
                SubspaceModel::Tt(TtModel::new(model)?)
            } else {
                SubspaceModel::Ht(model)
            })
        }
        _ => Err(Error::Config(format!("stored model does not match family {family}"))),
    }
}

pub fn load_library(path: &Path) -> Result<ClassLibrary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let meta: LibraryMeta = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if meta.format != FORMAT || meta.version != VERSION {
        return Err(Error::format(path, format!("unsupported library format {} v{}", meta.format, meta.version)));
    }
    let bin = path.with_file_name(&meta.data);
    let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::format(&bin, "length is not a multiple of 8 bytes"));
    }
    let blob = Blob(
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
    );
    let mean = blob.get_tensor(&meta.mean)?;
    let mut models = BTreeMap::new();
    let mut centers = BTreeMap::new();
    for class in &meta.classes {
        models.insert(class.label.clone(), load_model(meta.family, &meta.shape, &class.model, &blob)?);
        if let Some(c) = &class.center {
            centers.insert(class.label.clone(), blob.get_tensor(c)?);
        }
    }
    let centers = match meta.centering {
        Centering::Global => None,
        Centering::PerClass => Some(centers),
    };
    ClassLibrary::from_parts(mean, centers, models, meta.scheme)
}
