//! Python bindings: tensors, subspace learning, projection energies,
//! classification, cost accounting and the experiment harness.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tensorsub::cost::{
    cost_formula_hier1, cost_formula_hier2, cost_formula_tt, cost_formula_tucker, cost_general, CostReport,
};
use tensorsub::harness::config::{ExperimentConfig, SyntheticSpec};
use tensorsub::harness::{generate_synthetic, run_learning_curve, run_rank_sweep};
use tensorsub::harness::output::write_csv;
use tensorsub::persist::{load_library, save_library};
use tensorsub::{
    fractional_spec, learn_model, train_library, unfold, AxisSet, Centering, ClassLibrary, DenseTensor, LabeledTensor, ModelFamily, SubspaceModel,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(err)
}

/// Dense row-major tensor of f64.
#[pyclass(name = "Tensor", module = "tensorsub_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyTensor(DenseTensor);

#[pymethods]
impl PyTensor {
    #[new]
    fn new(shape: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        DenseTensor::new(shape, data).map(PyTensor).map_err(err)
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.shape().to_vec()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    fn norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// Matricization with `axes` as rows: returns `(rows, cols, data)`.
    fn unfold(&self, axes: Vec<usize>) -> PyResult<(usize, usize, Vec<f64>)> {
        let axes = AxisSet::new(axes).map_err(err)?;
        let m = unfold(&self.0, &axes).map_err(err)?;
        Ok((m.rows(), m.cols(), m.into_vec()))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Tensor(shape={:?})", self.0.shape())
    }
}

fn costs_dict(c: &CostReport) -> (u64, u64, f64, f64) {
    (c.storage_scalars, c.projection_macs, c.normalized_storage(), c.normalized_projection())
}

/// A learned Tucker, HT or TT subspace.
#[pyclass(name = "Model", module = "tensorsub_py", frozen)]
struct PyModel(SubspaceModel);

#[pymethods]
impl PyModel {
    /// Learns a model from samples with ranks chosen as fractions of full rank.
    #[staticmethod]
    #[pyo3(signature = (samples, family, rank_fraction, leaf_fraction=None))]
    fn learn(samples: Vec<PyTensor>, family: &str, rank_fraction: f64, leaf_fraction: Option<f64>) -> PyResult<Self> {
        let family: ModelFamily = parse(family)?;
        let samples: Vec<DenseTensor> = samples.into_iter().map(|t| t.0).collect();
        let first = samples.first().ok_or_else(|| err("no samples"))?;
        let leaf = leaf_fraction.unwrap_or(rank_fraction);
        let (spec, _) = fractional_spec(family, first.shape(), samples.len(), leaf, rank_fraction).map_err(err)?;
        learn_model(&samples, &spec).map(PyModel).map_err(err)
    }

    #[getter]
    fn family(&self) -> String {
        self.0.family().to_string()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.shape().to_vec()
    }

    #[getter]
    fn default_scheme(&self) -> String {
        self.0.default_scheme().to_string()
    }

    /// Squared norm of the projection of `x` onto the subspace.
    #[pyo3(signature = (x, scheme=None))]
    fn energy(&self, x: &PyTensor, scheme: Option<&str>) -> PyResult<f64> {
        let scheme = match scheme {
            Some(s) => parse(s)?,
            None => self.0.default_scheme(),
        };
        self.0.energy(&x.0, scheme).map_err(err)
    }

    /// `(storage, projection_macs, normalized_storage, normalized_projection)`.
    #[pyo3(signature = (scheme=None))]
    fn costs(&self, scheme: Option<&str>) -> PyResult<(u64, u64, f64, f64)> {
        let scheme = match scheme {
            Some(s) => parse(s)?,
            None => self.0.default_scheme(),
        };
        cost_general(&self.0, scheme).map(|c| costs_dict(&c)).map_err(err)
    }
}

/// One model per class plus the centering mean.
#[pyclass(name = "Library", module = "tensorsub_py", frozen)]
struct PyLibrary(ClassLibrary);

fn labeled(samples: Vec<PyTensor>, labels: Vec<String>) -> PyResult<Vec<LabeledTensor>> {
    if samples.len() != labels.len() {
        return Err(err("samples and labels differ in length"));
    }
    Ok(labels.into_iter().zip(samples).map(|(l, t)| LabeledTensor::new(l, t.0)).collect())
}

#[pymethods]
impl PyLibrary {
    #[staticmethod]
    #[pyo3(signature = (samples, labels, family, rank_fraction, leaf_fraction=None, scheme=None, centering="global"))]
    fn train(
        samples: Vec<PyTensor>,
        labels: Vec<String>,
        family: &str,
        rank_fraction: f64,
        leaf_fraction: Option<f64>,
        scheme: Option<&str>,
        centering: &str,
    ) -> PyResult<Self> {
        let family: ModelFamily = parse(family)?;
        let scheme = match scheme {
            Some(s) => parse(s)?,
            None => family.default_schemes()[0],
        };
        let centering = match centering {
            "global" => Centering::Global,
            "per-class" => Centering::PerClass,
            other => return Err(err(format!("unknown centering {other:?}"))),
        };
        let train = labeled(samples, labels)?;
        // ranks from the smallest class so every class model is feasible
        let mut counts = std::collections::BTreeMap::new();
        for t in &train {
            *counts.entry(t.label.as_str()).or_insert(0usize) += 1;
        }
        let n = counts.values().copied().min().ok_or_else(|| err("no samples"))?;
        let shape = train[0].tensor.shape().to_vec();
        let leaf = leaf_fraction.unwrap_or(rank_fraction);
        let (spec, _) = fractional_spec(family, &shape, n, leaf, rank_fraction).map_err(err)?;
        train_library(&train, &spec, scheme, centering).map(PyLibrary).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_library(&path).map(PyLibrary).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_library(&self.0, &path).map_err(err)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().map(String::from).collect()
    }

    fn scores(&self, x: &PyTensor) -> PyResult<Vec<(String, f64)>> {
        let s = self.0.scores(&x.0).map_err(err)?;
        Ok(s.into_iter().map(|(l, e)| (l.to_string(), e)).collect())
    }

    fn classify(&self, x: &PyTensor) -> PyResult<String> {
        self.0.classify(&x.0).map(String::from).map_err(err)
    }

    /// Error rate on a labeled test set.
    fn evaluate(&self, samples: Vec<PyTensor>, labels: Vec<String>) -> PyResult<f64> {
        let test = labeled(samples, labels)?;
        self.0.evaluate(&test).map(|r| r.error_rate).map_err(err)
    }
}

/// Closed-form `(storage, projection_macs)` for symmetric `n^4` models.
#[pyfunction]
#[pyo3(signature = (model, n, r, rp=1))]
fn cost_formula(model: &str, n: u64, r: u64, rp: u64) -> PyResult<(u64, u64)> {
    match model {
        "tucker" => cost_formula_tucker(n, r),
        "hier1" => cost_formula_hier1(n, rp),
        "hier2" => cost_formula_hier2(n, r, rp),
        "tt" => cost_formula_tt(n, r, rp),
        other => return Err(err(format!("unknown model {other:?}"))),
    }
    .map_err(err)
}

/// Synthetic dataset from a JSON spec: list of `(label, Tensor)`.
#[pyfunction]
fn synthetic(spec_json: &str, seed: u64) -> PyResult<Vec<(String, PyTensor)>> {
    let spec: SyntheticSpec = serde_json::from_str(spec_json).map_err(err)?;
    let data = generate_synthetic(&spec, seed).map_err(err)?;
    Ok(data.into_iter().map(|t| (t.label, PyTensor(t.tensor))).collect())
}

fn run(config_json: &str, curve: bool) -> PyResult<String> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json).map_err(err)?;
    cfg.validate().map_err(err)?;
    let rows = if curve { run_learning_curve(&cfg) } else { run_rank_sweep(&cfg) }.map_err(err)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(err)
}

/// Runs a rank sweep from a JSON config and returns the CSV text.
#[pyfunction]
fn sweep(py: Python<'_>, config_json: &str) -> PyResult<String> {
    py.detach(|| run(config_json, false))
}

/// Runs a learning curve from a JSON config and returns the CSV text.
#[pyfunction]
fn learning_curve(py: Python<'_>, config_json: &str) -> PyResult<String> {
    py.detach(|| run(config_json, true))
}

#[pymodule]
fn tensorsub_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyLibrary>()?;
    m.add_function(wrap_pyfunction!(cost_formula, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(learning_curve, m)?)?;
    m.add("SCHEMES", ["mode-products", "materialized", "factored"])?;
    Ok(())
}
