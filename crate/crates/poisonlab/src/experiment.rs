//! Configuration-driven experiment orchestration: dataset caching, the
//! poisoning sweep grid, unlearning comparisons, Hessian/LRR studies, and
//! the CSV/JSON outputs they emit.
//!
//! Every cell of a sweep is keyed by (dataset, model, protocol, α, seed)
//! plus the config hash; completed cells leave a RunRecord JSON and a QPCK
//! checkpoint behind and are skipped on rerun.

use crate::checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
use crate::corruption::{apply_plan, CorruptionPlan, PartitionedData, Protocol};
use crate::curvature::{hessian_report, hessian_subset, lrr, HessianReport, HESSIAN_SUBSET_SIZE};
use crate::dataset::{read_cache, write_cache, LabeledDataset};
use crate::error::{Error, Result};
use crate::mlp::{MlpConfig, MlpModel};
use crate::mnist::load_mnist_pair;
use crate::model::{Model, ModelKind};
use crate::optim::{train, MetricsLog, TrainConfig};
use crate::qnn::{QnnConfig, QnnModel};
use crate::rng::Rng64;
use crate::unlearning::{unlearn, UnlearnConfig, UnlearnMethod, UnlearnTrace};
use crate::xxz::{build_xxz_dataset_sites, XXZ_SITES};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn default_protocol() -> String {
    "label_flip".into()
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}
fn default_methods() -> Vec<String> {
    vec![
        "retrain".into(),
        "finetune".into(),
        "scrub".into(),
        "grad_asc".into(),
    ]
}

/// One JSON document per experiment; unset fields take the defaults from
/// the hyperparameter table below and are materialized into the echo.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub model: String,
    #[serde(default = "default_protocol")]
    pub protocol: String,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub qnn_depth: Option<usize>,
    #[serde(default)]
    pub mlp_hidden: Option<[usize; 2]>,
    /// Capacity-sweep grid: QNN depths or MLP hidden-dim pairs; when set,
    /// poison-train loops over shapes and emits capacity_summary.csv.
    #[serde(default)]
    pub capacity_depths: Vec<usize>,
    #[serde(default)]
    pub capacity_hidden: Vec<[usize; 2]>,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub unlearn_steps: Option<usize>,
    #[serde(default)]
    pub unlearn_learning_rate: Option<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default)]
    pub mnist_images: Option<PathBuf>,
    #[serde(default)]
    pub mnist_labels: Option<PathBuf>,
    /// XXZ chain length; the paper value 12 unless overridden (smoke tests).
    #[serde(default)]
    pub xxz_sites: Option<usize>,
    #[serde(default)]
    pub mnist_train_per_class: Option<usize>,
    #[serde(default)]
    pub mnist_val_total: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset_kind()?;
        self.model_kind()?;
        self.protocol()?;
        for &a in &self.alphas {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::usage(format!("alpha {a} outside [0, 1]")));
            }
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::usage("seeds must be distinct"));
        }
        for m in &self.methods {
            UnlearnMethod::parse(m)?;
        }
        Ok(())
    }

    pub fn dataset_kind(&self) -> Result<DatasetKind> {
        match self.dataset.as_str() {
            "xxz" => Ok(DatasetKind::Xxz),
            "mnist" => Ok(DatasetKind::Mnist),
            other => Err(Error::usage(format!(
                "unknown dataset '{other}'; valid: xxz, mnist"
            ))),
        }
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        match self.model.as_str() {
            "qnn" => Ok(ModelKind::Qnn),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::usage(format!(
                "unknown model '{other}'; valid: qnn, mlp"
            ))),
        }
    }

    pub fn protocol(&self) -> Result<Protocol> {
        match self.protocol.as_str() {
            "label_flip" => Ok(Protocol::LabelFlip),
            "feature_randomize" => Ok(Protocol::FeatureRandomize),
            other => Err(Error::usage(format!(
                "unknown protocol '{other}'; valid: label_flip, feature_randomize"
            ))),
        }
    }

    pub fn sites(&self) -> usize {
        self.xxz_sites.unwrap_or(XXZ_SITES)
    }

    /// SHA-256 of the canonical JSON serialization; echoed into every record.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Xxz,
    Mnist,
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetKind::Xxz => write!(f, "xxz"),
            DatasetKind::Mnist => write!(f, "mnist"),
        }
    }
}

/// Resolved output/cache locations shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub base_seed: u64,
}

impl RunContext {
    pub fn new(out_dir: PathBuf, cache_dir: PathBuf, base_seed: u64) -> Result<Self> {
        fs::create_dir_all(&out_dir)?;
        fs::create_dir_all(&cache_dir)?;
        fs::create_dir_all(out_dir.join("records"))?;
        fs::create_dir_all(out_dir.join("checkpoints"))?;
        Ok(RunContext {
            out_dir,
            cache_dir,
            base_seed,
        })
    }
}

// ---------------------------------------------------------------------------
// Hyperparameter table (initial-training and unlearning defaults)
// ---------------------------------------------------------------------------

/// Initial-training defaults per (dataset, model):
/// XXZ: MLP 400 epochs / batch 32 / lr 0.01, QNN 200 / 32 / 0.03;
/// MNIST: MLP 100 / 128 / 0.01, QNN 100 / 256 / 0.005.
pub fn default_train_config(dataset: DatasetKind, model: ModelKind, seed: u64) -> TrainConfig {
    match (dataset, model) {
        (DatasetKind::Xxz, ModelKind::Mlp) => TrainConfig::new(400, 32, 0.01, seed),
        (DatasetKind::Xxz, ModelKind::Qnn) => TrainConfig::new(200, 32, 0.03, seed),
        (DatasetKind::Mnist, ModelKind::Mlp) => TrainConfig::new(100, 128, 0.01, seed),
        (DatasetKind::Mnist, ModelKind::Qnn) => TrainConfig::new(100, 256, 0.005, seed),
    }
}

/// Unlearning step size: 0.01 on XXZ, 0.001 on MNIST.
pub fn default_unlearn_lr(dataset: DatasetKind) -> f64 {
    match dataset {
        DatasetKind::Xxz => 0.01,
        DatasetKind::Mnist => 0.001,
    }
}

/// Default ansatz depth / hidden layout per dataset.
pub fn default_qnn_depth(dataset: DatasetKind) -> usize {
    match dataset {
        DatasetKind::Xxz => 4,
        DatasetKind::Mnist => 6,
    }
}
pub fn default_mlp_hidden(dataset: DatasetKind) -> [usize; 2] {
    match dataset {
        DatasetKind::Xxz => [64, 16],
        DatasetKind::Mnist => [16, 4],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelShape {
    Qnn { n_qubits: usize, depth: usize },
    Mlp { input_dim: usize, hidden: [usize; 2] },
}

impl ModelShape {
    pub fn resolve(
        dataset: DatasetKind,
        model: ModelKind,
        sites: usize,
        qnn_depth: Option<usize>,
        mlp_hidden: Option<[usize; 2]>,
    ) -> ModelShape {
        let n_qubits = match dataset {
            DatasetKind::Xxz => sites,
            DatasetKind::Mnist => 10,
        };
        match model {
            ModelKind::Qnn => ModelShape::Qnn {
                n_qubits,
                depth: qnn_depth.unwrap_or_else(|| default_qnn_depth(dataset)),
            },
            ModelKind::Mlp => ModelShape::Mlp {
                input_dim: match dataset {
                    // complex amplitudes split into (Re, Im)
                    DatasetKind::Xxz => 2 * (1 << sites),
                    DatasetKind::Mnist => crate::mnist::PADDED_DIM,
                },
                hidden: mlp_hidden.unwrap_or_else(|| default_mlp_hidden(dataset)),
            },
        }
    }

    pub fn checkpoint_shape(&self) -> Vec<u32> {
        match *self {
            ModelShape::Qnn { n_qubits, depth } => vec![n_qubits as u32, depth as u32],
            ModelShape::Mlp { input_dim, hidden } => {
                vec![input_dim as u32, hidden[0] as u32, hidden[1] as u32]
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ModelShape::Qnn { depth, .. } => format!("d{depth}"),
            ModelShape::Mlp { hidden, .. } => format!("h{}x{}", hidden[0], hidden[1]),
        }
    }
}

pub fn build_model(shape: &ModelShape) -> Box<dyn Model> {
    match *shape {
        ModelShape::Qnn { n_qubits, depth } => Box::new(QnnModel::new(QnnConfig::new(n_qubits, depth))),
        ModelShape::Mlp { input_dim, hidden } => {
            Box::new(MlpModel::new(MlpConfig::new(input_dim, hidden)))
        }
    }
}

// ---------------------------------------------------------------------------
// Seed derivation: per-cell streams independent of scheduling order
// ---------------------------------------------------------------------------

pub fn cell_seed(base: u64, alpha: f64, seed: u64, tag: u64) -> u64 {
    Rng64::derive(base ^ alpha.to_bits(), seed.wrapping_mul(0x100000001b3) ^ tag).next_u64()
}

// ---------------------------------------------------------------------------
// Dataset resolution with QPLD caching
// ---------------------------------------------------------------------------

/// Load (train, validation) for the config, generating and caching on miss.
/// Returns whether the cache was hit.
pub fn load_datasets(
    config: &ExperimentConfig,
    ctx: &RunContext,
) -> Result<(LabeledDataset, LabeledDataset, bool)> {
    let (train_path, val_path) = dataset_cache_paths(config, ctx)?;
    if train_path.exists() && val_path.exists() {
        return Ok((read_cache(&train_path)?, read_cache(&val_path)?, true));
    }
    let (train, val) = match config.dataset_kind()? {
        DatasetKind::Xxz => build_xxz_dataset_sites(config.sites())?,
        DatasetKind::Mnist => {
            let images = config.mnist_images.as_ref().ok_or_else(|| {
                Error::usage("mnist dataset requires mnist_images in the config")
            })?;
            let labels = config.mnist_labels.as_ref().ok_or_else(|| {
                Error::usage("mnist dataset requires mnist_labels in the config")
            })?;
            load_mnist_pair(
                images,
                labels,
                (1, 9),
                config.mnist_train_per_class.unwrap_or(250),
                config.mnist_val_total.unwrap_or(1000),
                ctx.base_seed,
            )?
        }
    };
    write_cache(&train_path, &train)?;
    write_cache(&val_path, &val)?;
    Ok((train, val, false))
}

pub fn dataset_cache_paths(
    config: &ExperimentConfig,
    ctx: &RunContext,
) -> Result<(PathBuf, PathBuf)> {
    let stem = match config.dataset_kind()? {
        DatasetKind::Xxz => format!("xxz_L{}", config.sites()),
        DatasetKind::Mnist => format!(
            "mnist_t{}_v{}_s{}",
            config.mnist_train_per_class.unwrap_or(250),
            config.mnist_val_total.unwrap_or(1000),
            ctx.base_seed
        ),
    };
    Ok((
        ctx.cache_dir.join(format!("{stem}_train.qpld")),
        ctx.cache_dir.join(format!("{stem}_val.qpld")),
    ))
}

// ---------------------------------------------------------------------------
// Cell execution with resume
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub base_seed: u64,
    pub dataset: String,
    pub model: String,
    pub shape: String,
    pub protocol: String,
    pub alpha: f64,
    pub seed: u64,
    pub metrics: MetricsLog,
    pub final_val_accuracy: f64,
    pub wall_seconds: f64,
    pub failure: Option<String>,
}

fn cell_stem(
    dataset: DatasetKind,
    model: ModelKind,
    shape: &ModelShape,
    protocol: Protocol,
    alpha: f64,
    seed: u64,
) -> String {
    format!(
        "{dataset}_{model}_{}_{protocol}_a{alpha:.3}_s{seed}",
        shape.label()
    )
}

/// Poison the training set (α=0 means no-op) and train a fresh model.
/// Checkpoint + RunRecord land in the context's out_dir; an existing pair
/// from the same config hash is reused instead of retraining.
#[allow(clippy::too_many_arguments)]
pub fn ensure_poison_cell(
    config: &ExperimentConfig,
    ctx: &RunContext,
    shape: &ModelShape,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    protocol: Protocol,
    alpha: f64,
    seed: u64,
) -> Result<(RunRecord, Vec<f64>, PartitionedData)> {
    let dataset = config.dataset_kind()?;
    let model_kind = config.model_kind()?;
    let stem = cell_stem(dataset, model_kind, shape, protocol, alpha, seed);
    let record_path = ctx.out_dir.join("records").join(format!("{stem}.json"));
    let ckpt_path = ctx.out_dir.join("checkpoints").join(format!("{stem}.qpck"));
    let hash = config.hash();

    let s_cell = cell_seed(ctx.base_seed, alpha, seed, 0x747261696e);
    let plan = CorruptionPlan::new(protocol, alpha, cell_seed(s_cell, alpha, seed, 0x636f7272), train_set)?;
    let partition = apply_plan(train_set, &plan)?;

    if record_path.exists() && ckpt_path.exists() {
        let text = fs::read_to_string(&record_path)?;
        let record: RunRecord = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("corrupt record {}: {e}", record_path.display())))?;
        if record.config_hash == hash && record.base_seed == ctx.base_seed && record.failure.is_none() {
            let ckpt = read_checkpoint(&ckpt_path)?;
            return Ok((record, ckpt.params, partition));
        }
    }

    let model = build_model(shape);
    let mut train_cfg = default_train_config(dataset, model_kind, s_cell);
    if let Some(e) = config.epochs {
        train_cfg.epochs = e;
    }
    if let Some(b) = config.batch_size {
        train_cfg.batch_size = b;
    }
    if let Some(lr) = config.learning_rate {
        train_cfg.learning_rate = lr;
    }

    let composite = partition.composite_train();
    let start = Instant::now();
    let init = model.init_params(s_cell);
    let (params, metrics) = train(model.as_ref(), init, &composite, val_set, &train_cfg)?;
    let record = RunRecord {
        config_hash: hash,
        base_seed: ctx.base_seed,
        dataset: dataset.to_string(),
        model: model_kind.to_string(),
        shape: shape.label(),
        protocol: protocol.to_string(),
        alpha,
        seed,
        final_val_accuracy: metrics.final_val_accuracy().unwrap_or(f64::NAN),
        metrics,
        wall_seconds: start.elapsed().as_secs_f64(),
        failure: None,
    };
    write_checkpoint(
        &ckpt_path,
        &Checkpoint {
            model_kind,
            shape: shape.checkpoint_shape(),
            params: params.clone(),
        },
    )?;
    fs::write(&record_path, serde_json::to_string_pretty(&record).unwrap())?;
    Ok((record, params, partition))
}

fn write_failure_record(
    config: &ExperimentConfig,
    ctx: &RunContext,
    shape: &ModelShape,
    protocol: Protocol,
    alpha: f64,
    seed: u64,
    err: &Error,
) -> Result<()> {
    let dataset = config.dataset_kind()?;
    let model_kind = config.model_kind()?;
    let stem = cell_stem(dataset, model_kind, shape, protocol, alpha, seed);
    let record = RunRecord {
        config_hash: config.hash(),
        base_seed: ctx.base_seed,
        dataset: dataset.to_string(),
        model: model_kind.to_string(),
        shape: shape.label(),
        protocol: protocol.to_string(),
        alpha,
        seed,
        metrics: MetricsLog::default(),
        final_val_accuracy: f64::NAN,
        wall_seconds: 0.0,
        failure: Some(err.to_string()),
    };
    let path = ctx
        .out_dir
        .join("records")
        .join(format!("{stem}.failed.json"));
    fs::write(&path, serde_json::to_string_pretty(&record).unwrap())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

const POISON_HEADER: [&str; 9] = [
    "dataset", "model", "protocol", "alpha", "seed", "epoch", "train_loss", "train_acc", "val_acc",
];
const UNLEARN_HEADER: [&str; 11] = [
    "dataset",
    "model",
    "protocol",
    "alpha",
    "seed",
    "method",
    "step",
    "val_acc",
    "forget_acc",
    "retain_loss",
    "forget_loss",
];

/// Every command rewrites its full row set (resumed cells included), so the
/// file is truncated to keep reruns idempotent.
fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)
        .map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    Ok(w)
}

fn csv_row(w: &mut csv::Writer<fs::File>, fields: &[String]) -> Result<()> {
    w.write_record(fields)
        .map_err(|e| Error::Config(format!("csv write failed: {e}")))
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

/// generate-data: build and cache the configured dataset.
pub fn cmd_generate_data(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let (train, val, hit) = load_datasets(config, ctx)?;
    let (train_path, _) = dataset_cache_paths(config, ctx)?;
    println!(
        "dataset {}: {} train / {} validation samples ({}) -> {}",
        config.dataset,
        train.len(),
        val.len(),
        if hit { "cache hit" } else { "generated" },
        train_path.display()
    );
    Ok(())
}

/// poison-train: the (α, seed) training grid, plus the capacity sweep when
/// a shape grid is configured. Returns the number of failed cells.
pub fn cmd_poison_train(config: &ExperimentConfig, ctx: &RunContext) -> Result<usize> {
    if config.alphas.is_empty() {
        return Err(Error::usage("poison-train requires a nonempty alpha list"));
    }
    let (train_set, val_set, _) = load_datasets(config, ctx)?;
    let protocol = config.protocol()?;
    let dataset = config.dataset_kind()?;
    let model_kind = config.model_kind()?;

    let shapes: Vec<ModelShape> = capacity_shapes(config)?;
    let sweep_is_capacity = shapes.len() > 1;

    let mut failures = 0usize;
    let mut sweep_csv = csv_writer(&ctx.out_dir.join("poison_sweep.csv"), &POISON_HEADER)?;
    let mut cap_csv = if sweep_is_capacity {
        Some(csv_writer(
            &ctx.out_dir.join("capacity_summary.csv"),
            &[
                "dataset", "model", "shape", "protocol", "alpha", "seed", "final_val_acc",
            ],
        )?)
    } else {
        None
    };
    let mut summaries: Vec<(f64, Vec<f64>)> = Vec::new();

    for shape in &shapes {
        for &alpha in &config.alphas {
            let mut finals = Vec::new();
            for &seed in &config.seeds {
                match ensure_poison_cell(
                    config, ctx, shape, &train_set, &val_set, protocol, alpha, seed,
                ) {
                    Ok((record, _, _)) => {
                        for e in &record.metrics.epochs {
                            csv_row(
                                &mut sweep_csv,
                                &[
                                    dataset.to_string(),
                                    model_kind.to_string(),
                                    protocol.to_string(),
                                    format!("{alpha}"),
                                    format!("{seed}"),
                                    format!("{}", e.epoch),
                                    format!("{}", e.train_loss),
                                    format!("{}", e.train_accuracy),
                                    format!("{}", e.val_accuracy),
                                ],
                            )?;
                        }
                        if let Some(w) = cap_csv.as_mut() {
                            csv_row(
                                w,
                                &[
                                    dataset.to_string(),
                                    model_kind.to_string(),
                                    shape.label(),
                                    protocol.to_string(),
                                    format!("{alpha}"),
                                    format!("{seed}"),
                                    format!("{}", record.final_val_accuracy),
                                ],
                            )?;
                        }
                        finals.push(record.final_val_accuracy);
                    }
                    Err(e) => {
                        eprintln!("cell (shape {}, alpha {alpha}, seed {seed}) failed: {e}", shape.label());
                        write_failure_record(config, ctx, shape, protocol, alpha, seed, &e)?;
                        failures += 1;
                    }
                }
            }
            if !sweep_is_capacity {
                summaries.push((alpha, finals));
            }
        }
    }
    sweep_csv
        .flush()
        .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    if let Some(mut w) = cap_csv {
        w.flush()
            .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    }

    if !summaries.is_empty() {
        let mut w = csv_writer(
            &ctx.out_dir.join("poison_summary.csv"),
            &[
                "dataset",
                "model",
                "protocol",
                "alpha",
                "n_seeds",
                "mean_val_acc",
                "std_val_acc",
            ],
        )?;
        for (alpha, finals) in summaries {
            let (mean, std) = mean_std(&finals);
            csv_row(
                &mut w,
                &[
                    dataset.to_string(),
                    model_kind.to_string(),
                    protocol.to_string(),
                    format!("{alpha}"),
                    format!("{}", finals.len()),
                    format!("{mean}"),
                    format!("{std}"),
                ],
            )?;
        }
        w.flush()
            .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    }
    Ok(failures)
}

fn capacity_shapes(config: &ExperimentConfig) -> Result<Vec<ModelShape>> {
    let dataset = config.dataset_kind()?;
    let model = config.model_kind()?;
    let sites = config.sites();
    let grid: Vec<ModelShape> = match model {
        ModelKind::Qnn => config
            .capacity_depths
            .iter()
            .map(|&d| ModelShape::resolve(dataset, model, sites, Some(d), None))
            .collect(),
        ModelKind::Mlp => config
            .capacity_hidden
            .iter()
            .map(|&h| ModelShape::resolve(dataset, model, sites, None, Some(h)))
            .collect(),
    };
    if grid.is_empty() {
        Ok(vec![ModelShape::resolve(
            dataset,
            model,
            sites,
            config.qnn_depth,
            config.mlp_hidden,
        )])
    } else {
        Ok(grid)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

/// unlearn: train (or reuse) the poisoned checkpoint for each seed, then run
/// every configured method for `steps` full-retain-batch updates.
pub fn cmd_unlearn(config: &ExperimentConfig, ctx: &RunContext) -> Result<usize> {
    let alpha = *config
        .alphas
        .first()
        .ok_or_else(|| Error::usage("unlearn requires one alpha (the poisoning level)"))?;
    let (train_set, val_set, _) = load_datasets(config, ctx)?;
    let protocol = config.protocol()?;
    let dataset = config.dataset_kind()?;
    let model_kind = config.model_kind()?;
    let shape = capacity_shapes(config)?[0];
    let methods: Vec<UnlearnMethod> = config
        .methods
        .iter()
        .map(|m| UnlearnMethod::parse(m))
        .collect::<Result<_>>()?;

    let mut failures = 0usize;
    let mut csv = csv_writer(&ctx.out_dir.join("unlearning.csv"), &UNLEARN_HEADER)?;
    for &seed in &config.seeds {
        let (_, poisoned, partition) = match ensure_poison_cell(
            config, ctx, &shape, &train_set, &val_set, protocol, alpha, seed,
        ) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("poisoned checkpoint (alpha {alpha}, seed {seed}) failed: {e}");
                write_failure_record(config, ctx, &shape, protocol, alpha, seed, &e)?;
                failures += 1;
                continue;
            }
        };
        let model = build_model(&shape);
        for &method in &methods {
            let mut ucfg = UnlearnConfig::new(
                method,
                config
                    .unlearn_learning_rate
                    .unwrap_or_else(|| default_unlearn_lr(dataset)),
                cell_seed(ctx.base_seed, alpha, seed, 0x756e6c65),
            );
            if let Some(s) = config.unlearn_steps {
                ucfg.steps = s;
            }
            match unlearn(model.as_ref(), &poisoned, &partition, &val_set, &ucfg) {
                Ok((params, trace)) => {
                    write_unlearn_trace(
                        &mut csv, dataset, model_kind, protocol, alpha, seed, method, &trace,
                    )?;
                    let stem = format!(
                        "{}_unlearned_{method}",
                        cell_stem(dataset, model_kind, &shape, protocol, alpha, seed)
                    );
                    write_checkpoint(
                        &ctx.out_dir.join("checkpoints").join(format!("{stem}.qpck")),
                        &Checkpoint {
                            model_kind,
                            shape: shape.checkpoint_shape(),
                            params,
                        },
                    )?;
                    if let Some(reason) = trace.aborted {
                        eprintln!("unlearn {method} (seed {seed}) aborted: {reason}");
                        failures += 1;
                    }
                }
                Err(e) => {
                    eprintln!("unlearn {method} (seed {seed}) failed: {e}");
                    failures += 1;
                }
            }
        }
    }
    csv.flush()
        .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    Ok(failures)
}

#[allow(clippy::too_many_arguments)]
fn write_unlearn_trace(
    csv: &mut csv::Writer<fs::File>,
    dataset: DatasetKind,
    model: ModelKind,
    protocol: Protocol,
    alpha: f64,
    seed: u64,
    method: UnlearnMethod,
    trace: &UnlearnTrace,
) -> Result<()> {
    for s in &trace.steps {
        csv_row(
            csv,
            &[
                dataset.to_string(),
                model.to_string(),
                protocol.to_string(),
                format!("{alpha}"),
                format!("{seed}"),
                method.to_string(),
                format!("{}", s.step),
                format!("{}", s.val_accuracy),
                format!("{}", s.forgetting_accuracy),
                format!("{}", s.retain_loss),
                format!("{}", s.forget_loss),
            ],
        )?;
    }
    Ok(())
}

/// hessian: matched clean/noisy pairs (same seed, same subset) per α, with
/// the trace ratio written to lrr_summary.csv and per-run reports to JSON.
pub fn cmd_hessian(config: &ExperimentConfig, ctx: &RunContext) -> Result<usize> {
    if config.alphas.is_empty() {
        return Err(Error::usage("hessian requires a nonempty alpha list"));
    }
    let (train_set, val_set, _) = load_datasets(config, ctx)?;
    let protocol = config.protocol()?;
    let dataset = config.dataset_kind()?;
    let model_kind = config.model_kind()?;
    let shape = capacity_shapes(config)?[0];
    let model = build_model(&shape);

    let mut failures = 0usize;
    let mut csv = csv_writer(
        &ctx.out_dir.join("lrr_summary.csv"),
        &[
            "dataset",
            "model",
            "protocol",
            "alpha",
            "seed",
            "trace_clean",
            "trace_noisy",
            "lrr",
        ],
    )?;
    for &seed in &config.seeds {
        let subset_seed = cell_seed(ctx.base_seed, 0.0, seed, 0x73756273);
        let clean = match hessian_for_alpha(
            config, ctx, &shape, model.as_ref(), &train_set, &val_set, protocol, 0.0, seed,
            subset_seed,
        ) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("clean hessian (seed {seed}) failed: {e}");
                failures += 1;
                continue;
            }
        };
        for &alpha in &config.alphas {
            let report = if alpha == 0.0 {
                clean.clone()
            } else {
                match hessian_for_alpha(
                    config, ctx, &shape, model.as_ref(), &train_set, &val_set, protocol, alpha,
                    seed, subset_seed,
                ) {
                    Ok(r) => r,
                    Err(e) => {
                        eprintln!("hessian (alpha {alpha}, seed {seed}) failed: {e}");
                        failures += 1;
                        continue;
                    }
                }
            };
            let ratio = lrr(report.trace, clean.trace)?;
            csv_row(
                &mut csv,
                &[
                    dataset.to_string(),
                    model_kind.to_string(),
                    protocol.to_string(),
                    format!("{alpha}"),
                    format!("{seed}"),
                    format!("{}", clean.trace),
                    format!("{}", report.trace),
                    format!("{ratio}"),
                ],
            )?;
        }
    }
    csv.flush()
        .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    Ok(failures)
}

#[allow(clippy::too_many_arguments)]
fn hessian_for_alpha(
    config: &ExperimentConfig,
    ctx: &RunContext,
    shape: &ModelShape,
    model: &dyn Model,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    protocol: Protocol,
    alpha: f64,
    seed: u64,
    subset_seed: u64,
) -> Result<HessianReport> {
    let stem = format!(
        "{}_hessian",
        cell_stem(config.dataset_kind()?, config.model_kind()?, shape, protocol, alpha, seed)
    );
    let report_path = ctx.out_dir.join("records").join(format!("{stem}.json"));
    if report_path.exists() {
        let text = fs::read_to_string(&report_path)?;
        if let Ok(r) = serde_json::from_str::<HessianReport>(&text) {
            return Ok(r);
        }
    }
    let (_, params, partition) =
        ensure_poison_cell(config, ctx, shape, train_set, val_set, protocol, alpha, seed)?;
    // curvature of the loss the model was trained on, at its own optimum
    let composite = partition.composite_train();
    let subset = hessian_subset(&composite, HESSIAN_SUBSET_SIZE, subset_seed);
    let report = hessian_report(model, &params, &subset, crate::curvature::DEFAULT_STEP, alpha, seed)?;
    fs::write(&report_path, serde_json::to_string(&report).unwrap())?;
    Ok(report)
}

/// report: aggregate the sweep CSVs into per-figure summary tables.
pub fn cmd_report(ctx: &RunContext) -> Result<()> {
    let poison = ctx.out_dir.join("poison_sweep.csv");
    if poison.exists() {
        let mut rdr = csv::Reader::from_path(&poison)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", poison.display())))?;
        // final-epoch val accuracy per (dataset, model, protocol, alpha, seed)
        use std::collections::BTreeMap;
        let mut finals: BTreeMap<(String, String, String, String), BTreeMap<String, (u64, f64)>> =
            BTreeMap::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::Config(format!("csv parse: {e}")))?;
            let key = (
                row[0].to_string(),
                row[1].to_string(),
                row[2].to_string(),
                row[3].to_string(),
            );
            let seed = row[4].to_string();
            let epoch: u64 = row[5].parse().unwrap_or(0);
            let val: f64 = row[8].parse().unwrap_or(f64::NAN);
            let entry = finals.entry(key).or_default().entry(seed).or_insert((0, val));
            if epoch >= entry.0 {
                *entry = (epoch, val);
            }
        }
        let out = ctx.out_dir.join("report_poison.csv");
        let mut w = csv_writer(
            &out,
            &[
                "dataset",
                "model",
                "protocol",
                "alpha",
                "n_seeds",
                "mean_val_acc",
                "std_val_acc",
            ],
        )?;
        for ((dataset, model, protocol, alpha), per_seed) in finals {
            let vals: Vec<f64> = per_seed.values().map(|&(_, v)| v).collect();
            let (mean, std) = mean_std(&vals);
            csv_row(
                &mut w,
                &[
                    dataset,
                    model,
                    protocol,
                    alpha,
                    format!("{}", vals.len()),
                    format!("{mean}"),
                    format!("{std}"),
                ],
            )?;
        }
        w.flush()
            .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
        println!("wrote {}", out.display());
    }

    let unlearning = ctx.out_dir.join("unlearning.csv");
    if unlearning.exists() {
        use std::collections::BTreeMap;
        let out = ctx.out_dir.join("report_unlearning.csv");
        let mut w = csv_writer(
            &out,
            &[
                "dataset",
                "model",
                "method",
                "mean_final_val_acc",
                "mean_final_forget_acc",
            ],
        )?;
        // two passes: find each method's final step, then average the
        // final-step rows across seeds
        let mut rdr2 = csv::Reader::from_path(&unlearning)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", unlearning.display())))?;
        let mut max_step: BTreeMap<(String, String, String), u64> = BTreeMap::new();
        for row in rdr2.records() {
            let row = row.map_err(|e| Error::Config(format!("csv parse: {e}")))?;
            let key = (row[0].to_string(), row[1].to_string(), row[5].to_string());
            let step: u64 = row[6].parse().unwrap_or(0);
            let m = max_step.entry(key).or_insert(0);
            if step > *m {
                *m = step;
            }
        }
        let mut rdr3 = csv::Reader::from_path(&unlearning)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", unlearning.display())))?;
        let mut last_rows: BTreeMap<(String, String, String), Vec<(f64, f64)>> = BTreeMap::new();
        for row in rdr3.records() {
            let row = row.map_err(|e| Error::Config(format!("csv parse: {e}")))?;
            let key = (row[0].to_string(), row[1].to_string(), row[5].to_string());
            let step: u64 = row[6].parse().unwrap_or(0);
            if Some(&step) == max_step.get(&key) {
                let val: f64 = row[7].parse().unwrap_or(f64::NAN);
                let forget: f64 = row[8].parse().unwrap_or(f64::NAN);
                last_rows.entry(key).or_default().push((val, forget));
            }
        }
        for ((dataset, model, method), rows) in last_rows {
            let vals: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let forgets: Vec<f64> = rows.iter().map(|r| r.1).collect();
            csv_row(
                &mut w,
                &[
                    dataset,
                    model,
                    method,
                    format!("{}", mean_std(&vals).0),
                    format!("{}", mean_std(&forgets).0),
                ],
            )?;
        }
        w.flush()
            .map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
