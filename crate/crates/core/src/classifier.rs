//! Nearest-subspace classification by maximal projection energy.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::{learn_model, ModelFamily, ModelSpec, ProjectionScheme, SubspaceModel};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTensor {
    pub label: String,
    pub tensor: DenseTensor,
}

impl LabeledTensor {
    pub fn new(label: impl Into<String>, tensor: DenseTensor) -> Self {
        LabeledTensor {
            label: label.into(),
            tensor,
        }
    }
}

/// Which mean is subtracted before learning and projecting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// One mean over all training samples.
    #[default]
    Global,
    /// Each class model uses the mean of its own training samples.
    PerClass,
}

/// One learned model per class plus the training mean.
#[derive(Debug, Clone)]
pub struct ClassLibrary {
    centering: DenseTensor,
    class_centers: Option<BTreeMap<String, DenseTensor>>,
    models: BTreeMap<String, SubspaceModel>,
    family: ModelFamily,
    scheme: ProjectionScheme,
}

pub fn group_by_label(samples: &[LabeledTensor]) -> BTreeMap<String, Vec<&DenseTensor>> {
    let mut groups: BTreeMap<String, Vec<&DenseTensor>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.label.clone()).or_default().push(&s.tensor);
    }
    groups
}

impl ClassLibrary {
    pub fn from_parts(
        centering: DenseTensor,
        class_centers: Option<BTreeMap<String, DenseTensor>>,
        models: BTreeMap<String, SubspaceModel>,
        scheme: ProjectionScheme,
    ) -> Result<Self> {
        let first = models
            .values()
            .next()
            .ok_or_else(|| Error::Empty("library without classes".into()))?;
        let family = first.family();
        scheme.check(family)?;
        for (label, m) in &models {
            if m.family() != family || m.shape() != centering.shape() {
                return Err(Error::Shape(format!(
                    "model for class {label:?} does not match the library"
                )));
            }
        }
        if let Some(centers) = &class_centers {
            if !centers.keys().eq(models.keys()) {
                return Err(Error::Config("class centers do not match class models".into()));
            }
        }
        Ok(ClassLibrary {
            centering,
            class_centers,
            models,
            family,
            scheme,
        })
    }

    pub fn centering(&self) -> &DenseTensor {
        &self.centering
    }

    pub fn class_centers(&self) -> Option<&BTreeMap<String, DenseTensor>> {
        self.class_centers.as_ref()
    }

    pub fn models(&self) -> &BTreeMap<String, SubspaceModel> {
        &self.models
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn scheme(&self) -> ProjectionScheme {
        self.scheme
    }

    pub fn shape(&self) -> &[usize] {
        self.centering.shape()
    }

    /// Same models evaluated with another projection scheme.
    pub fn with_scheme(&self, scheme: ProjectionScheme) -> Result<ClassLibrary> {
        scheme.check(self.family)?;
        let mut lib = self.clone();
        lib.scheme = scheme;
        Ok(lib)
    }

    /// Projection energy of `x` for each class, in label order.
    pub fn scores(&self, x: &DenseTensor) -> Result<Vec<(&str, f64)>> {
        if x.shape() != self.shape() {
            return Err(Error::Shape(format!(
                "input {:?} does not match library shape {:?}",
                x.shape(),
                self.shape()
            )));
        }
        let global = x.sub(&self.centering)?;
        self.models
            .iter()
            .map(|(label, model)| {
                let energy = match &self.class_centers {
                    Some(centers) => model.energy(&x.sub(&centers[label])?, self.scheme)?,
                    None => model.energy(&global, self.scheme)?,
                };
                Ok((label.as_str(), energy))
            })
            .collect()
    }

    /// Label with the largest projection energy; ties go to the lowest label.
    pub fn classify(&self, x: &DenseTensor) -> Result<&str> {
        let scores = self.scores(x)?;
        let mut best = scores[0];
        for &(label, energy) in &scores[1..] {
            if energy > best.1 {
                best = (label, energy);
            }
        }
        Ok(best.0)
    }

    pub fn evaluate(&self, test: &[LabeledTensor]) -> Result<EvaluationResult> {
        if test.is_empty() {
            return Err(Error::Empty("empty test set".into()));
        }
        if let Some(unknown) = test.iter().find(|t| !self.models.contains_key(&t.label)) {
            return Err(Error::UnknownLabel(unknown.label.clone()));
        }
        let predictions: Vec<&str> = test
            .par_iter()
            .map(|t| self.classify(&t.tensor))
            .collect::<Result<_>>()?;
        let mut confusion: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut wrong = 0usize;
        for (t, p) in test.iter().zip(&predictions) {
            if t.label != *p {
                wrong += 1;
            }
            *confusion.entry((t.label.clone(), p.to_string())).or_default() += 1;
        }
        let error_rate = wrong as f64 / test.len() as f64;
        Ok(EvaluationResult {
            error_rate,
            confusion,
            per_run_rates: vec![error_rate],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    /// Misclassified over total test points.
    pub error_rate: f64,
    /// `(true, predicted) → count`.
    pub confusion: BTreeMap<(String, String), usize>,
    pub per_run_rates: Vec<f64>,
}

impl EvaluationResult {
    /// Test points per true class.
    pub fn class_totals(&self) -> BTreeMap<&str, usize> {
        let mut totals = BTreeMap::new();
        for ((truth, _), count) in &self.confusion {
            *totals.entry(truth.as_str()).or_default() += count;
        }
        totals
    }
}

/// Trains one model per class with the same structure for every class.
pub fn train_library(
    train: &[LabeledTensor],
    spec: &ModelSpec,
    scheme: ProjectionScheme,
    centering: Centering,
) -> Result<ClassLibrary> {
    train_library_with(train, spec.family(), scheme, centering, |_, _| Ok(spec.clone()))
}

/// Trains one model per class, asking `spec_for(label, sample_count)` for each
/// class's structure.
pub fn train_library_with(
    train: &[LabeledTensor],
    family: ModelFamily,
    scheme: ProjectionScheme,
    centering: Centering,
    spec_for: impl Fn(&str, usize) -> Result<ModelSpec> + Sync,
) -> Result<ClassLibrary> {
    scheme.check(family)?;
    let groups = group_by_label(train);
    if groups.is_empty() {
        return Err(Error::Empty("empty training set".into()));
    }
    let mean = DenseTensor::mean(train.iter().map(|t| &t.tensor))?;
    let centers: Option<BTreeMap<String, DenseTensor>> = match centering {
        Centering::Global => None,
        Centering::PerClass => Some(
            groups
                .iter()
                .map(|(label, ts)| Ok((label.clone(), DenseTensor::mean(ts.iter().copied())?)))
                .collect::<Result<_>>()?,
        ),
    };
    let models = groups
        .par_iter()
        .map(|(label, samples)| {
            let center = centers.as_ref().map_or(&mean, |c| &c[label]);
            let centered = samples
                .iter()
                .map(|s| s.sub(center))
                .collect::<Result<Vec<_>>>()?;
            let spec = spec_for(label, centered.len())?;
            if spec.family() != family {
                return Err(Error::Config("per-class spec family differs from library family".into()));
            }
            Ok((label.clone(), learn_model(&centered, &spec)?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    ClassLibrary::from_parts(mean, centers, models, scheme)
}

pub fn classify<'a>(lib: &'a ClassLibrary, x: &DenseTensor) -> Result<&'a str> {
    lib.classify(x)
}

pub fn evaluate(lib: &ClassLibrary, test: &[LabeledTensor]) -> Result<EvaluationResult> {
    lib.evaluate(test)
}
