//! Config resolution: built-in defaults, overlaid by an optional TOML file
//! (sections per module, unknown keys rejected), overlaid by command-line
//! flags.

use anyhow::{anyhow, bail, Context, Result};
use awgan_core::losses::{GenLossFamily, LossFamily};
use awgan_core::nn::LrMode;
use awgan_core::trainer::{OptimizerKind, TrainConfig, WeightMode};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// `[train]` section of the config file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSection {
    mode: Option<WeightMode>,
    loss: Option<LossFamily>,
    gen_loss: Option<GenLossFamily>,
    iterations: Option<u64>,
    batch_size: Option<usize>,
    ratio: Option<usize>,
    seed: Option<u64>,
    optimizer: Option<OptimizerKind>,
    lr_d: Option<f64>,
    lr_g: Option<f64>,
    lr_mode: Option<LrMode>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    adam_eps: Option<f64>,
    latent_dim: Option<usize>,
    gen_sizes: Option<Vec<usize>>,
    disc_sizes: Option<Vec<usize>>,
    leaky_slope: Option<f64>,
    coverage_samples: Option<usize>,
    pin_weights: Option<(f64, f64)>,
}

/// `[aw]` section: selection thresholds.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AwSection {
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    epsilon: Option<f64>,
    delta: Option<f64>,
}

/// `[data]` section: the ring mixture.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    n_modes: Option<usize>,
    radius: Option<f64>,
    std: Option<f64>,
}

/// `[output]` section.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    train: TrainSection,
    #[serde(default)]
    aw: AwSection,
    #[serde(default)]
    data: DataSection,
    #[serde(default)]
    output: OutputSection,
}

/// Flag values shared by `train`, `diagnose` and `grid`. `None` means "not
/// given on the command line".
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub mode: Option<WeightMode>,
    pub task: Option<String>,
    pub seed: Option<u64>,
    pub iters: Option<u64>,
    pub batch_size: Option<usize>,
    pub loss: Option<LossFamily>,
    pub gen_loss: Option<GenLossFamily>,
    pub ratio: Option<usize>,
    pub optimizer: Option<OptimizerKind>,
    pub lr_d: Option<f64>,
    pub lr_g: Option<f64>,
    pub lr_mode: Option<LrMode>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub adam_eps: Option<f64>,
    pub latent_dim: Option<usize>,
    pub gen_sizes: Option<Vec<usize>>,
    pub disc_sizes: Option<Vec<usize>>,
    pub leaky_slope: Option<f64>,
    pub n_modes: Option<usize>,
    pub radius: Option<f64>,
    pub std: Option<f64>,
    pub coverage_samples: Option<usize>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub pin_weights: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
}

/// Fully resolved configuration plus the output root.
pub struct Resolved {
    pub cfg: TrainConfig,
    pub out_root: PathBuf,
}

fn apply<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

/// Builds the effective config: defaults, then the file, then the flags.
pub fn resolve(config_path: Option<&Path>, flags: &Overrides) -> Result<Resolved> {
    let mut cfg = TrainConfig::default();
    let mut out_root: Option<PathBuf> = None;

    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let file: FileConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        apply(&mut cfg.weight_mode, file.train.mode);
        apply(&mut cfg.loss_family, file.train.loss);
        apply(&mut cfg.gen_loss, file.train.gen_loss);
        apply(&mut cfg.iterations, file.train.iterations);
        apply(&mut cfg.batch_size, file.train.batch_size);
        apply(&mut cfg.ratio, file.train.ratio);
        apply(&mut cfg.seed, file.train.seed);
        apply(&mut cfg.optimizer, file.train.optimizer);
        apply(&mut cfg.lr_d, file.train.lr_d);
        apply(&mut cfg.lr_g, file.train.lr_g);
        apply(&mut cfg.lr_mode, file.train.lr_mode);
        apply(&mut cfg.beta1, file.train.beta1);
        apply(&mut cfg.beta2, file.train.beta2);
        apply(&mut cfg.adam_eps, file.train.adam_eps);
        apply(&mut cfg.latent_dim, file.train.latent_dim);
        apply(&mut cfg.gen_sizes, file.train.gen_sizes);
        apply(&mut cfg.disc_sizes, file.train.disc_sizes);
        apply(&mut cfg.leaky_slope, file.train.leaky_slope);
        apply(&mut cfg.coverage_samples, file.train.coverage_samples);
        if file.train.pin_weights.is_some() {
            cfg.pin_weights = file.train.pin_weights;
        }
        apply(&mut cfg.aw.alpha1, file.aw.alpha1);
        apply(&mut cfg.aw.alpha2, file.aw.alpha2);
        apply(&mut cfg.aw.epsilon, file.aw.epsilon);
        apply(&mut cfg.aw.delta, file.aw.delta);
        apply(&mut cfg.mixture.n_modes, file.data.n_modes);
        apply(&mut cfg.mixture.radius, file.data.radius);
        apply(&mut cfg.mixture.std, file.data.std);
        out_root = file.output.dir;
    }

    if let Some(task) = &flags.task {
        if task != "ring8" {
            bail!("unknown task {task:?}; the synthetic task is \"ring8\"");
        }
    }
    apply(&mut cfg.weight_mode, flags.mode);
    apply(&mut cfg.seed, flags.seed);
    apply(&mut cfg.iterations, flags.iters);
    apply(&mut cfg.batch_size, flags.batch_size);
    apply(&mut cfg.loss_family, flags.loss);
    apply(&mut cfg.gen_loss, flags.gen_loss);
    apply(&mut cfg.ratio, flags.ratio);
    apply(&mut cfg.optimizer, flags.optimizer);
    apply(&mut cfg.lr_d, flags.lr_d);
    apply(&mut cfg.lr_g, flags.lr_g);
    apply(&mut cfg.lr_mode, flags.lr_mode);
    apply(&mut cfg.beta1, flags.beta1);
    apply(&mut cfg.beta2, flags.beta2);
    apply(&mut cfg.adam_eps, flags.adam_eps);
    apply(&mut cfg.latent_dim, flags.latent_dim);
    apply(&mut cfg.gen_sizes, flags.gen_sizes.clone());
    apply(&mut cfg.disc_sizes, flags.disc_sizes.clone());
    apply(&mut cfg.leaky_slope, flags.leaky_slope);
    apply(&mut cfg.mixture.n_modes, flags.n_modes);
    apply(&mut cfg.mixture.radius, flags.radius);
    apply(&mut cfg.mixture.std, flags.std);
    apply(&mut cfg.coverage_samples, flags.coverage_samples);
    apply(&mut cfg.aw.alpha1, flags.alpha1);
    apply(&mut cfg.aw.alpha2, flags.alpha2);
    apply(&mut cfg.aw.epsilon, flags.epsilon);
    apply(&mut cfg.aw.delta, flags.delta);
    if flags.pin_weights.is_some() {
        cfg.pin_weights = flags.pin_weights;
    }

    let out_root = flags
        .out
        .clone()
        .or(out_root)
        .or_else(|| std::env::var_os("AWGAN_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));

    cfg.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(Resolved { cfg, out_root })
}

/// Effective-config snapshot written into every run directory.
pub fn snapshot_toml(cfg: &TrainConfig) -> Result<String> {
    toml::to_string_pretty(cfg).context("serializing config snapshot")
}

/// Short mode tag used in run-directory names.
pub fn mode_tag(mode: WeightMode) -> &'static str {
    match mode {
        WeightMode::PlainSum => "plain",
        WeightMode::AwNormalized => "aw-normalized",
        WeightMode::AwNonNormalized => "aw-nonnormalized",
    }
}
