//! Rank sweeps and learning curves.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{group_by_label, train_library_with, LabeledTensor};
use crate::cost::cost_general;
use crate::error::{Error, Result};
use crate::harness::config::{DatasetSpec, ExperimentConfig};
use crate::harness::data::load_image_dataset;
use crate::harness::rng::{stream, Stream};
use crate::harness::synth::generate_synthetic;
use crate::subspace::{fractional_spec, ModelFamily, ProjectionScheme, RankClamp};

/// One line of sweep output: a (family, scheme, rank setting, training size)
/// cell averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultRow {
    pub family: ModelFamily,
    pub scheme: ProjectionScheme,
    pub rank_fraction: f64,
    pub leaf_fraction: f64,
    pub samples_per_class: usize,
    pub norm_storage: f64,
    pub norm_projection: f64,
    pub mean_error: f64,
    /// Sample standard deviation over repetitions (0 for a single one).
    pub std_error: f64,
    pub errors: Vec<f64>,
    pub seed: u64,
    pub clamps: Vec<RankClamp>,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Vec<LabeledTensor>> {
    match &cfg.dataset {
        DatasetSpec::Images {
            path,
            row_factors,
            col_factors,
        } => load_image_dataset(path, row_factors, col_factors),
        DatasetSpec::Synthetic(spec) => generate_synthetic(spec, cfg.seed),
    }
}

/// Training and test halves of the classes drawn for one repetition.
#[derive(Debug, Clone)]
pub struct RunSplit {
    pub classes: Vec<String>,
    /// Per chosen class, in `classes` order.
    pub train: Vec<Vec<LabeledTensor>>,
    pub test: Vec<LabeledTensor>,
}

impl RunSplit {
    pub fn train_flat(&self) -> Vec<LabeledTensor> {
        self.train.iter().flatten().cloned().collect()
    }
}

/// Draws the classes and the per-class split for repetition `rep`.
pub fn draw_split(cfg: &ExperimentConfig, data: &[LabeledTensor], rep: usize) -> Result<RunSplit> {
    let mut groups: BTreeMap<String, Vec<&LabeledTensor>> = BTreeMap::new();
    for item in data {
        groups.entry(item.label.clone()).or_default().push(item);
    }
    let mut pool: Vec<(String, Vec<&LabeledTensor>)> = groups.into_iter().collect();
    if let Some(p) = cfg.pool_size {
        if p > pool.len() {
            return Err(Error::Config(format!("pool of {p} classes but dataset has {}", pool.len())));
        }
        pool.truncate(p);
    }
    if cfg.classes_per_run > pool.len() {
        return Err(Error::Config(format!(
            "{} classes per run but only {} available",
            cfg.classes_per_run,
            pool.len()
        )));
    }
    let mut choice_rng = stream(cfg.seed, Stream::ClassChoice, rep as u64);
    let mut chosen = index::sample(&mut choice_rng, pool.len(), cfg.classes_per_run).into_vec();
    chosen.sort_unstable();

    let split_rep = if cfg.freeze_split { 0 } else { rep as u64 + 1 };
    let mut split = RunSplit {
        classes: Vec::new(),
        train: Vec::new(),
        test: Vec::new(),
    };
    for pi in chosen {
        let (label, members) = &pool[pi];
        if members.len() < 2 {
            return Err(Error::Config(format!("class {label:?} has fewer than two samples")));
        }
        let mut rng = stream(cfg.seed, Stream::Split, (split_rep << 24) | pi as u64);
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.shuffle(&mut rng);
        let n_train = ((cfg.train_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        let mut train_idx = order[..n_train].to_vec();
        let mut test_idx = order[n_train..].to_vec();
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        split.classes.push(label.clone());
        split.train.push(train_idx.iter().map(|&i| members[i].clone()).collect());
        split.test.extend(test_idx.iter().map(|&i| members[i].clone()));
    }
    Ok(split)
}

struct CellResult {
    /// Per scheme: (error, normalized storage, normalized projection).
    per_scheme: Vec<(f64, f64, f64)>,
    clamps: Vec<RankClamp>,
    samples_per_class: usize,
}

fn fractions_for(cfg: &ExperimentConfig, family: ModelFamily, fraction: f64) -> (f64, f64) {
    match family {
        ModelFamily::Tucker => (fraction, fraction),
        _ => (cfg.leaf_fraction, fraction),
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    family: ModelFamily,
    fraction: f64,
    train: &[LabeledTensor],
    test: &[LabeledTensor],
) -> Result<CellResult> {
    let shape = train
        .first()
        .ok_or_else(|| Error::Empty("empty training split".into()))?
        .tensor
        .shape()
        .to_vec();
    let (leaf_f, internal_f) = fractions_for(cfg, family, fraction);
    let schemes = family.default_schemes();

    let counts: Vec<usize> = group_by_label(train).values().map(Vec::len).collect();
    let mut clamps = Vec::new();
    for &n in &counts {
        for c in fractional_spec(family, &shape, n, leaf_f, internal_f)?.1 {
            if !clamps.contains(&c) {
                clamps.push(c);
            }
        }
    }

    let lib = train_library_with(train, family, schemes[0], cfg.centering, |_, n| {
        fractional_spec(family, &shape, n, leaf_f, internal_f).map(|(s, _)| s)
    })?;
    let per_scheme = schemes
        .iter()
        .map(|&scheme| {
            let lib = lib.with_scheme(scheme)?;
            let error = lib.evaluate(test)?.error_rate;
            let mut storage = 0.0;
            let mut projection = 0.0;
            for model in lib.models().values() {
                let c = cost_general(model, scheme)?;
                storage += c.normalized_storage();
                projection += c.normalized_projection();
            }
            let k = lib.models().len() as f64;
            Ok((error, storage / k, projection / k))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellResult {
        per_scheme,
        clamps,
        samples_per_class: counts.iter().copied().min().unwrap_or(0),
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Cells keyed by (family, fraction, size); each holds one result per repetition.
fn aggregate(
    cfg: &ExperimentConfig,
    keys: &[(ModelFamily, f64, Option<usize>)],
    results: Vec<Vec<CellResult>>,
) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (&(family, fraction, size), reps) in keys.iter().zip(results) {
        let (leaf_fraction, _) = fractions_for(cfg, family, fraction);
        let mut clamps: Vec<RankClamp> = Vec::new();
        for r in &reps {
            for c in &r.clamps {
                if !clamps.contains(c) {
                    clamps.push(c.clone());
                }
            }
        }
        let samples = size.unwrap_or_else(|| reps.iter().map(|r| r.samples_per_class).min().unwrap_or(0));
        for (si, &scheme) in family.default_schemes().iter().enumerate() {
            let errors: Vec<f64> = reps.iter().map(|r| r.per_scheme[si].0).collect();
            let (mean_error, std_error) = mean_std(&errors);
            let k = reps.len() as f64;
            let norm_storage = reps.iter().map(|r| r.per_scheme[si].1).sum::<f64>() / k;
            let norm_projection = reps.iter().map(|r| r.per_scheme[si].2).sum::<f64>() / k;
            rows.push(ResultRow {
                family,
                scheme,
                rank_fraction: fraction,
                leaf_fraction,
                samples_per_class: samples,
                norm_storage,
                norm_projection,
                mean_error,
                std_error,
                errors,
                seed: cfg.seed,
                clamps: clamps.clone(),
            });
        }
    }
    rows
}

/// Error and normalized costs for every family and rank fraction, averaged
/// over repetitions. Tucker sweeps every axis rank together; HT/TT keep leaves
/// at `leaf_fraction` and sweep the internal ranks.
pub fn run_rank_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    run_rank_sweep_on(cfg, &data)
}

pub fn run_rank_sweep_on(cfg: &ExperimentConfig, data: &[LabeledTensor]) -> Result<Vec<ResultRow>> {
    let splits = (0..cfg.repetitions)
        .map(|rep| draw_split(cfg, data, rep))
        .collect::<Result<Vec<_>>>()?;
    let flat: Vec<Vec<LabeledTensor>> = splits.iter().map(RunSplit::train_flat).collect();
    let keys: Vec<(ModelFamily, f64, Option<usize>)> = cfg
        .families
        .iter()
        .flat_map(|&f| cfg.rank_fractions.iter().map(move |&r| (f, r, None)))
        .collect();
    let results = keys
        .par_iter()
        .map(|&(family, fraction, _)| {
            (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| run_cell(cfg, family, fraction, &flat[rep], &splits[rep].test))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cfg, &keys, results))
}

/// First `m` training samples of each class drawn without replacement;
/// `m` equal to the class size keeps the full training half.
fn subsample(cfg: &ExperimentConfig, split: &RunSplit, rep: usize, m: usize) -> Result<Vec<LabeledTensor>> {
    let mut out = Vec::new();
    for (ci, class) in split.train.iter().enumerate() {
        if m == 0 || m > class.len() {
            return Err(Error::Config(format!(
                "training size {m} exceeds the {} training samples of class {:?}",
                class.len(),
                split.classes[ci]
            )));
        }
        if m == class.len() {
            out.extend(class.iter().cloned());
            continue;
        }
        let id = ((rep as u64) << 32) | ((m as u64) << 16) | ci as u64;
        let mut rng = stream(cfg.seed, Stream::Subsample, id);
        let mut picked = index::sample(&mut rng, class.len(), m).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| class[i].clone()));
    }
    Ok(out)
}

/// Error versus per-class training size on a fixed test half.
pub fn run_learning_curve(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    run_learning_curve_on(cfg, &data)
}

pub fn run_learning_curve_on(cfg: &ExperimentConfig, data: &[LabeledTensor]) -> Result<Vec<ResultRow>> {
    if cfg.training_sizes.is_empty() {
        return Err(Error::Config("learning curve needs training_sizes".into()));
    }
    let splits = (0..cfg.repetitions)
        .map(|rep| draw_split(cfg, data, rep))
        .collect::<Result<Vec<_>>>()?;
    let subsets: Vec<Vec<Vec<LabeledTensor>>> = splits
        .iter()
        .enumerate()
        .map(|(rep, s)| {
            cfg.training_sizes
                .iter()
                .map(|&m| subsample(cfg, s, rep, m))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let keys: Vec<(ModelFamily, f64, Option<usize>)> = cfg
        .families
        .iter()
        .flat_map(|&f| {
            cfg.rank_fractions
                .iter()
                .flat_map(move |&r| cfg.training_sizes.iter().map(move |&m| (f, r, Some(m))))
        })
        .collect();
    let results = keys
        .par_iter()
        .map(|&(family, fraction, m)| {
            let mi = cfg
                .training_sizes
                .iter()
                .position(|&x| Some(x) == m)
                .expect("size from config");
            (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| run_cell(cfg, family, fraction, &subsets[rep][mi], &splits[rep].test))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cfg, &keys, results))
}
