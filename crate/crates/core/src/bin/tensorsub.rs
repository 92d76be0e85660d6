use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tensorsub::classifier::{train_library_with, Centering};
use tensorsub::cost::{
    cost_for_layout, cost_formula_hier1, cost_formula_hier2, cost_formula_tt, cost_formula_tucker, symmetric_layout,
};
use tensorsub::harness::config::{DatasetSpec, ExperimentConfig};
use tensorsub::harness::data::write_dataset;
use tensorsub::harness::experiment::{load_dataset, run_learning_curve, run_rank_sweep};
use tensorsub::harness::output::{emit_results, format_float};
use tensorsub::persist::{load_library, save_library};
use tensorsub::subspace::{fractional_spec, ModelFamily, ModelLayout, ProjectionScheme};

#[derive(Parser)]
#[command(name = "tensorsub", version, about = "Tensor subspace classifiers: sweeps, learning curves and cost tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error and cost versus rank fraction for each family.
    Sweep(Common),
    /// Error versus per-class training size.
    LearningCurve(Common),
    /// Write the configured synthetic dataset as a CSV image directory.
    SynthGen(Common),
    /// Train one library on the whole dataset and save it.
    Train {
        #[command(flatten)]
        common: Common,
        /// Model family to train.
        #[arg(long, default_value = "tt")]
        family: ModelFamily,
        /// Projection scheme (defaults to the family's first scheme).
        #[arg(long)]
        scheme: Option<ProjectionScheme>,
        /// Rank fraction (Tucker: every axis; HT/TT: internal nodes).
        #[arg(long, default_value_t = 0.5)]
        rank_fraction: f64,
    },
    /// Classify a dataset with a saved library.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Library metadata written by `train`.
        #[arg(long)]
        library: PathBuf,
        /// Override the library's projection scheme.
        #[arg(long)]
        scheme: Option<ProjectionScheme>,
    },
    /// Storage and projection costs.
    Costs {
        #[command(flatten)]
        common: Common,
        /// Symmetric order-4 layout with axis size n (otherwise the config's dataset is used).
        #[arg(long)]
        n: Option<usize>,
        /// Leaf (Tucker factor) rank for the symmetric layout.
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Internal rank for the symmetric layout.
        #[arg(long, default_value_t = 1)]
        rp: usize,
        /// Print only the closed-form polynomials.
        #[arg(long)]
        formula: bool,
    },
}

/// Options shared by every subcommand; flags override the config file.
#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment config (a results sidecar also works).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory; results go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Image dataset directory laid out as <root>/<label>/<file>.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    row_factors: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    col_factors: Option<Vec<usize>>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<ModelFamily>>,
    #[arg(long, value_delimiter = ',')]
    rank_fractions: Option<Vec<f64>>,
    #[arg(long)]
    leaf_fraction: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    training_sizes: Option<Vec<usize>>,
    #[arg(long)]
    classes_per_run: Option<usize>,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long, value_parser = parse_centering)]
    centering: Option<Centering>,
    #[arg(long)]
    freeze_split: bool,
    /// Synthetic noise level relative to the signal norm.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    samples_per_class: Option<usize>,
}

fn parse_centering(s: &str) -> std::result::Result<Centering, String> {
    match s {
        "global" => Ok(Centering::Global),
        "per-class" => Ok(Centering::PerClass),
        _ => Err(format!("unknown centering {s:?} (global, per-class)")),
    }
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.data {
            cfg.dataset = DatasetSpec::Images {
                path: path.clone(),
                row_factors: self.row_factors.clone().unwrap_or_default(),
                col_factors: self.col_factors.clone().unwrap_or_default(),
            };
        } else if let DatasetSpec::Images { row_factors, col_factors, .. } = &mut cfg.dataset {
            if let Some(rf) = &self.row_factors {
                *row_factors = rf.clone();
            }
            if let Some(cf) = &self.col_factors {
                *col_factors = cf.clone();
            }
        }
        if let DatasetSpec::Synthetic(s) = &mut cfg.dataset {
            if let Some(v) = self.noise_sigma {
                s.noise_sigma = v;
            }
            if let Some(v) = self.samples_per_class {
                s.samples_per_class = v;
            }
        }
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*};
        }
        set!(seed, repetitions, families, rank_fractions, leaf_fraction, training_sizes, classes_per_run, train_fraction, centering);
        if self.pool_size.is_some() {
            cfg.pool_size = self.pool_size;
        }
        if self.freeze_split {
            cfg.freeze_split = true;
        }
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cost_line(out: &mut dyn Write, family: ModelFamily, layout: &ModelLayout, extra: &str) -> Result<()> {
    for &scheme in family.default_schemes() {
        let c = cost_for_layout(layout, scheme)?;
        writeln!(
            out,
            "{family},{scheme},{extra}{},{},{},{}",
            c.storage_scalars,
            c.projection_macs,
            format_float(c.normalized_storage()),
            format_float(c.normalized_projection())
        )?;
    }
    Ok(())
}

fn costs(common: &Common, n: Option<usize>, r: usize, rp: usize, formula: bool) -> Result<()> {
    let mut out = output_writer(common.out.as_deref())?;
    if let Some(n) = n {
        if formula {
            let (n, r, rp) = (n as u64, r as u64, rp as u64);
            writeln!(out, "model,storage,projection")?;
            for (name, (s, p)) in [
                ("tucker", cost_formula_tucker(n, r)?),
                ("hier1", cost_formula_hier1(n, rp)?),
                ("hier2", cost_formula_hier2(n, r, rp)?),
                ("tt", cost_formula_tt(n, r, rp)?),
            ] {
                writeln!(out, "{name},{s},{p}")?;
            }
            return Ok(());
        }
        writeln!(out, "family,scheme,storage,projection,normStorage,normProjection")?;
        for family in [ModelFamily::Tucker, ModelFamily::Ht, ModelFamily::Tt] {
            cost_line(&mut *out, family, &symmetric_layout(family, n, r, rp)?, "")?;
        }
        return Ok(());
    }
    if formula {
        bail!("--formula needs --n");
    }
    // fractional layouts for the configured dataset and training size
    let cfg = common.resolve()?;
    let data = load_dataset(&cfg)?;
    let shape = data[0].tensor.shape().to_vec();
    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for item in &data {
        *counts.entry(&item.label).or_default() += 1;
    }
    let smallest = counts.values().copied().min().unwrap_or(1);
    let samples = ((cfg.train_fraction * smallest as f64).round() as usize).clamp(1, smallest.max(2) - 1);
    writeln!(out, "family,scheme,rankFraction,storage,projection,normStorage,normProjection")?;
    for &family in &cfg.families {
        for &f in &cfg.rank_fractions {
            let leaf = if family == ModelFamily::Tucker { f } else { cfg.leaf_fraction };
            let (spec, _) = fractional_spec(family, &shape, samples, leaf, f)?;
            let layout = ModelLayout { shape: shape.clone(), spec };
            cost_line(&mut *out, family, &layout, &format!("{},", format_float(f)))?;
        }
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep(common) => {
            let cfg = common.resolve()?;
            let rows = run_rank_sweep(&cfg)?;
            emit_results(&rows, cfg.output.as_deref(), "sweep", &cfg)?;
        }
        Command::LearningCurve(common) => {
            let cfg = common.resolve()?;
            let rows = run_learning_curve(&cfg)?;
            emit_results(&rows, cfg.output.as_deref(), "learning-curve", &cfg)?;
        }
        Command::SynthGen(common) => {
            let cfg = common.resolve()?;
            if !matches!(cfg.dataset, DatasetSpec::Synthetic(_)) {
                bail!("synth-gen needs a synthetic dataset in the config");
            }
            let out = cfg.output.clone().context("synth-gen needs --out <dir>")?;
            let data = load_dataset(&cfg)?;
            let (rf, cf) = write_dataset(&out, &data)?;
            let mut images = cfg.clone();
            images.dataset = DatasetSpec::Images {
                path: out.clone(),
                row_factors: rf,
                col_factors: cf,
            };
            images.output = None;
            let cfg_path = out.join("config.json");
            std::fs::write(&cfg_path, serde_json::to_string_pretty(&images)?)?;
            eprintln!("wrote {} tensors to {}; reload with --config {}", data.len(), out.display(), cfg_path.display());
        }
        Command::Train {
            common,
            family,
            scheme,
            rank_fraction,
        } => {
            let cfg = common.resolve()?;
            let out = cfg.output.clone().context("train needs --out <library.json>")?;
            let scheme = scheme.unwrap_or(family.default_schemes()[0]);
            let data = load_dataset(&cfg)?;
            let shape = data[0].tensor.shape().to_vec();
            let leaf = if family == ModelFamily::Tucker { rank_fraction } else { cfg.leaf_fraction };
            let lib = train_library_with(&data, family, scheme, cfg.centering, |_, n| {
                fractional_spec(family, &shape, n, leaf, rank_fraction).map(|(s, _)| s)
            })?;
            save_library(&lib, &out)?;
            eprintln!("trained {} classes ({family}, {scheme}) -> {}", lib.models().len(), out.display());
        }
        Command::Classify { common, library, scheme } => {
            let cfg = common.resolve()?;
            let mut lib = load_library(&library).with_context(|| format!("loading {}", library.display()))?;
            if let Some(s) = scheme {
                lib = lib.with_scheme(s)?;
            }
            let data = load_dataset(&cfg)?;
            let mut out = output_writer(cfg.output.as_deref())?;
            writeln!(out, "index,label,predicted")?;
            let mut wrong = 0usize;
            for (i, item) in data.iter().enumerate() {
                let predicted = lib.classify(&item.tensor)?;
                wrong += usize::from(predicted != item.label);
                writeln!(out, "{i},{},{predicted}", item.label)?;
            }
            eprintln!("error rate {}", format_float(wrong as f64 / data.len() as f64));
        }
        Command::Costs { common, n, r, rp, formula } => costs(&common, n, r, rp, formula)?,
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
