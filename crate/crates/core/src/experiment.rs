//! End-to-end commands: generate, train, evaluate and the three sweeps.
//!
//! Every command writes into one output directory and leaves a
//! `<command>.manifest.json` next to its outputs. The manifest holds the
//! resolved configuration plus content hashes of the inputs, which is enough
//! to rerun the command and get byte-identical CSV and checkpoint files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint;
use crate::config::ExperimentConfig;
use crate::data::{io, make_initial_adjacency, sample_seed, split_dataset, GraphSample, InitialAdjacency};
use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;
use crate::metrics::{evaluate_predictions, report_csv, EdgeClassReport, EvalRow, MmdConfig, REPORT_HEADER};
use crate::model::{binarize, GlnModel};
use crate::train::{train_with, EpochLoss, LossTrace};

pub const DATASET_FILE: &str = "dataset.ndjson";
pub const SUMMARY_FILE: &str = "dataset_summary.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOSS_FILE: &str = "loss.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const EVAL_SAMPLES_FILE: &str = "eval_samples.csv";
pub const DEPTH_FILE: &str = "depth_sweep.csv";
pub const ROBUSTNESS_FILE: &str = "robustness.csv";
pub const ABLATION_FILE: &str = "ablation.csv";

/// Git-style object id: SHA-256 over `blob <len>\0<content>`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| GlnError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(content_hash(&bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashedFile {
    pub path: PathBuf,
    pub hash: String,
}

impl HashedFile {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            hash: file_hash(path)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub started_at: u64,
    pub finished_at: u64,
    pub inputs: Vec<HashedFile>,
    pub checkpoints: Vec<PathBuf>,
    pub metrics: Vec<PathBuf>,
    pub outputs: Vec<HashedFile>,
}

impl RunManifest {
    fn begin(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            config: config.resolved(),
            started_at: unix_now(),
            finished_at: 0,
            inputs: Vec::new(),
            checkpoints: Vec::new(),
            metrics: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn finish(mut self, out_dir: &Path) -> Result<Self> {
        self.finished_at = unix_now();
        let mut produced: Vec<PathBuf> = self.checkpoints.clone();
        produced.extend(self.metrics.iter().cloned());
        for p in produced {
            self.outputs.push(HashedFile::of(&p)?);
        }
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        fs::write(path, serde_json::to_string_pretty(&self)?)?;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Fails if an input file no longer has the recorded content.
    pub fn verify_inputs(&self) -> Result<()> {
        for f in &self.inputs {
            let now = file_hash(&f.path)?;
            if now != f.hash {
                return Err(GlnError::Format(format!("{} changed since the run was recorded", f.path.display())));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub family: String,
    pub samples: usize,
    pub n: usize,
    pub d: usize,
    pub mean_edge_density: f64,
}

impl DatasetSummary {
    pub fn of(samples: &[GraphSample]) -> Result<Self> {
        let (n, d) = uniform_shape(samples)?;
        let mean_edge_density = samples.iter().map(GraphSample::density).sum::<f64>() / samples.len() as f64;
        Ok(Self {
            family: samples[0].family.to_string(),
            samples: samples.len(),
            n,
            d,
            mean_edge_density,
        })
    }
}

/// `(n, d)` shared by all samples.
pub fn uniform_shape(samples: &[GraphSample]) -> Result<(usize, usize)> {
    let first = samples.first().ok_or_else(|| GlnError::Config("dataset is empty".into()))?;
    let shape = (first.n(), first.feature_dim());
    if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| (s.n(), s.feature_dim()) != shape) {
        return Err(GlnError::Config(format!(
            "sample {i} has n = {}, d = {} but sample 0 has n = {}, d = {}",
            s.n(),
            s.feature_dim(),
            shape.0,
            shape.1
        )));
    }
    Ok(shape)
}

fn prepare_dir(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct GenOutput {
    pub dataset: PathBuf,
    pub summary: DatasetSummary,
}

pub fn cmd_gen(config: &ExperimentConfig, out_dir: &Path) -> Result<GenOutput> {
    config.validate()?;
    prepare_dir(out_dir)?;
    let mut manifest = RunManifest::begin("gen", config);
    let samples = config.dataset.generate(config.seeds.data)?;
    let summary = DatasetSummary::of(&samples)?;
    let dataset = out_dir.join(DATASET_FILE);
    io::save_dataset(&dataset, &samples)?;
    let summary_path = out_dir.join(SUMMARY_FILE);
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    manifest.metrics = vec![dataset.clone(), summary_path];
    manifest.finish(out_dir)?;
    Ok(GenOutput { dataset, summary })
}

/// The deterministic train/test partition used by every command.
pub fn split(config: &ExperimentConfig, samples: Vec<GraphSample>) -> Result<(Vec<GraphSample>, Vec<GraphSample>)> {
    uniform_shape(&samples)?;
    split_dataset(samples, config.train.train_fraction, config.seeds.data)
}

/// Trains a fresh `layers`-block model on `train`.
pub fn fit(
    config: &ExperimentConfig,
    layers: usize,
    train: &[GraphSample],
    on_epoch: impl FnMut(&EpochLoss),
) -> Result<(GlnModel, LossTrace)> {
    let mut model = config.init_model(layers)?;
    let trace = train_with(&mut model, train, &config.train_config(), on_epoch)?;
    Ok((model, trace))
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: GlnModel,
    pub trace: LossTrace,
    pub checkpoint: PathBuf,
    pub loss_csv: PathBuf,
}

pub fn cmd_train(
    config: &ExperimentConfig,
    dataset: &Path,
    out_dir: &Path,
    on_epoch: impl FnMut(&EpochLoss),
) -> Result<TrainOutput> {
    config.validate()?;
    prepare_dir(out_dir)?;
    let mut manifest = RunManifest::begin("train", config);
    manifest.inputs.push(HashedFile::of(dataset)?);
    let samples = io::load_dataset(dataset)?;
    check_config_shape(config, &samples)?;
    let (train, _) = split(config, samples)?;
    let (model, trace) = fit(config, config.model.layers, &train, on_epoch)?;
    let checkpoint_path = out_dir.join(CHECKPOINT_FILE);
    checkpoint::save(&model, &checkpoint_path)?;
    let loss_csv = out_dir.join(LOSS_FILE);
    fs::write(&loss_csv, trace.to_csv())?;
    manifest.checkpoints.push(checkpoint_path.clone());
    manifest.metrics.push(loss_csv.clone());
    manifest.finish(out_dir)?;
    Ok(TrainOutput {
        model,
        trace,
        checkpoint: checkpoint_path,
        loss_csv,
    })
}

fn check_config_shape(config: &ExperimentConfig, samples: &[GraphSample]) -> Result<()> {
    let (n, d) = uniform_shape(samples)?;
    if (n, d) != (config.dataset.n(), config.dataset.feature_dim()) {
        return Err(GlnError::Config(format!(
            "dataset has n = {n}, d = {d}; configuration expects n = {}, d = {}",
            config.dataset.n(),
            config.dataset.feature_dim()
        )));
    }
    Ok(())
}

fn check_model_shape(model: &GlnModel, samples: &[GraphSample]) -> Result<()> {
    let (n, d) = uniform_shape(samples)?;
    if (n, d) != (model.n(), model.input_dim()) {
        return Err(GlnError::Config(format!(
            "dataset has n = {n}, d = {d}; checkpoint expects n = {}, d = {}",
            model.n(),
            model.input_dim()
        )));
    }
    Ok(())
}

/// Binary predictions from `(features, A0)`, with `A0 = initial(i)` for sample `i`.
pub fn predict_graphs(
    model: &GlnModel,
    samples: &[GraphSample],
    mut initial: impl FnMut(usize) -> Result<DenseMatrix>,
) -> Result<Vec<DenseMatrix>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let a0 = initial(i)?;
            let out = model.forward(&s.features, &a0)?;
            Ok(binarize(&out.adjacency, model.epsilon()))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub per_sample: Vec<EdgeClassReport>,
    pub row: EvalRow,
}

/// Scores the model from `(features, I)` against each sample's ground truth.
pub fn evaluate(model: &GlnModel, samples: &[GraphSample], mmd: &MmdConfig) -> Result<Evaluation> {
    check_model_shape(model, samples)?;
    let n = model.n();
    let predicted = predict_graphs(model, samples, |_| Ok(DenseMatrix::identity(n)))?;
    let truth: Vec<DenseMatrix> = samples.iter().map(|s| s.adjacency.clone()).collect();
    let (per_sample, row) = evaluate_predictions(&predicted, &truth, mmd)?;
    Ok(Evaluation { per_sample, row })
}

fn per_sample_csv(samples: &[GraphSample], reports: &[EdgeClassReport]) -> String {
    let mut out = String::from("seed,acc,iou,dice,precision,recall\n");
    for (s, r) in samples.iter().zip(reports) {
        let _ = writeln!(out, "{},{},{},{},{},{}", s.seed, r.accuracy, r.iou, r.dice, r.precision, r.recall);
    }
    out
}

#[derive(Clone, Debug)]
pub struct EvalOutput {
    pub evaluation: Evaluation,
    pub report: PathBuf,
}

/// Evaluates a checkpoint on the test split of `dataset`.
pub fn cmd_eval(config: &ExperimentConfig, checkpoint_path: &Path, dataset: &Path, out_dir: &Path) -> Result<EvalOutput> {
    config.validate()?;
    prepare_dir(out_dir)?;
    let mut manifest = RunManifest::begin("eval", config);
    manifest.inputs.push(HashedFile::of(checkpoint_path)?);
    manifest.inputs.push(HashedFile::of(dataset)?);
    let model = checkpoint::load(checkpoint_path)?;
    let samples = io::load_dataset(dataset)?;
    check_model_shape(&model, &samples)?;
    let (_, test) = split(config, samples)?;
    let evaluation = evaluate(&model, &test, &config.mmd)?;
    let report = out_dir.join(EVAL_FILE);
    fs::write(&report, report_csv(&[evaluation.row]))?;
    let per_sample = out_dir.join(EVAL_SAMPLES_FILE);
    fs::write(&per_sample, per_sample_csv(&test, &evaluation.per_sample))?;
    manifest.metrics = vec![report.clone(), per_sample];
    manifest.finish(out_dir)?;
    Ok(EvalOutput { evaluation, report })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthRow {
    pub layers: usize,
    pub row: EvalRow,
}

pub fn depth_csv(rows: &[DepthRow]) -> String {
    let mut out = format!("L,{REPORT_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{}", r.layers, r.row.csv_fields());
    }
    out
}

/// One model per depth, all with the same seeds and split.
pub fn depth_sweep(config: &ExperimentConfig, samples: Vec<GraphSample>) -> Result<Vec<DepthRow>> {
    let (train, test) = split(config, samples)?;
    config
        .sweep
        .depths
        .iter()
        .map(|&layers| {
            let (model, _) = fit(config, layers, &train, |_| {})?;
            Ok(DepthRow {
                layers,
                row: evaluate(&model, &test, &config.mmd)?.row,
            })
        })
        .collect()
}

pub fn cmd_depth_sweep(config: &ExperimentConfig, dataset: &Path, out_dir: &Path) -> Result<Vec<DepthRow>> {
    config.validate()?;
    prepare_dir(out_dir)?;
    let mut manifest = RunManifest::begin("depth-sweep", config);
    manifest.inputs.push(HashedFile::of(dataset)?);
    let samples = io::load_dataset(dataset)?;
    check_config_shape(config, &samples)?;
    let rows = depth_sweep(config, samples)?;
    let path = out_dir.join(DEPTH_FILE);
    fs::write(&path, depth_csv(&rows))?;
    manifest.metrics.push(path);
    manifest.finish(out_dir)?;
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustnessRow {
    pub proportion: f64,
    pub runs: usize,
    pub degree_mmd: f64,
    pub clustering_mmd: f64,
    pub orbit_mmd: f64,
}

pub fn robustness_csv(rows: &[RobustnessRow]) -> String {
    let mut out = String::from("p,runs,degree_mmd,clustering_mmd,orbit_mmd\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.proportion, r.runs, r.degree_mmd, r.clustering_mmd, r.orbit_mmd
        );
    }
    out
}

/// Mean discrepancies when the first block starts from a random structure.
///
/// `p = 0` is the identity start, evaluated once. Otherwise each run draws
/// a fresh `A0` per sample, seeded from the data seed, the proportion's
/// position and the run index.
pub fn robustness(
    config: &ExperimentConfig,
    model: &GlnModel,
    test: &[GraphSample],
) -> Result<Vec<RobustnessRow>> {
    check_model_shape(model, test)?;
    let truth: Vec<DenseMatrix> = test.iter().map(|s| s.adjacency.clone()).collect();
    let n = model.n();
    let mut rows = Vec::with_capacity(config.sweep.proportions.len());
    for (pi, &p) in config.sweep.proportions.iter().enumerate() {
        let runs = if p == 0.0 { 1 } else { config.sweep.runs };
        let mut sums = [0.0; 3];
        for run in 0..runs {
            let cell = sample_seed(sample_seed(config.seeds.data, pi), run);
            let predicted = predict_graphs(model, test, |i| {
                let mode = if p == 0.0 {
                    InitialAdjacency::Identity
                } else {
                    InitialAdjacency::RandomProportion {
                        p,
                        seed: sample_seed(cell, i),
                    }
                };
                make_initial_adjacency(n, mode)
            })?;
            let m = crate::metrics::compare_graphs(&predicted, &truth, &config.mmd)?;
            sums[0] += m.degree_mmd;
            sums[1] += m.clustering_mmd;
            sums[2] += m.orbit_mmd;
        }
        let k = runs as f64;
        rows.push(RobustnessRow {
            proportion: p,
            runs,
            degree_mmd: sums[0] / k,
            clustering_mmd: sums[1] / k,
            orbit_mmd: sums[2] / k,
        });
    }
    Ok(rows)
}

pub fn cmd_robustness(
    config: &ExperimentConfig,
    checkpoint_path: &Path,
    dataset: &Path,
    out_dir: &Path,
) -> Result<Vec<RobustnessRow>> {
    config.validate()?;
    prepare_dir(out_dir)?;
    let mut manifest = RunManifest::begin("robustness", config);
    manifest.inputs.push(HashedFile::of(checkpoint_path)?);
    manifest.inputs.push(HashedFile::of(dataset)?);
    let model = checkpoint::load(checkpoint_path)?;
    let samples = io::load_dataset(dataset)?;
    check_model_shape(&model, &samples)?;
    let (_, test) = split(config, samples)?;
    let rows = robustness(config, &model, &test)?;
    let path = out_dir.join(ROBUSTNESS_FILE);
    fs::write(&path, robustness_csv(&rows))?;
    manifest.metrics.push(path);
    manifest.finish(out_dir)?;
    Ok(rows)
}

/// Loss combination of one ablation row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AblationVariant {
    pub name: &'static str,
    /// Class-balanced edge loss on.
    pub hed: bool,
    /// Dice structural loss on.
    pub iou: bool,
    /// L2 weight decay on.
    pub reg: bool,
}

pub const ABLATION_VARIANTS: [AblationVariant; 6] = [
    AblationVariant { name: "HED", hed: true, iou: false, reg: false },
    AblationVariant { name: "HED+Reg", hed: true, iou: false, reg: true },
    AblationVariant { name: "IoU", hed: false, iou: true, reg: false },
    AblationVariant { name: "IoU+Reg", hed: false, iou: true, reg: true },
    AblationVariant { name: "IoU+HED", hed: true, iou: true, reg: false },
    AblationVariant { name: "IoU+HED+Reg", hed: true, iou: true, reg: true },
];

impl AblationVariant {
    pub fn find(name: &str) -> Option<Self> {
        ABLATION_VARIANTS.into_iter().find(|v| v.name.eq_ignore_ascii_case(name))
    }

    /// `base` with this variant's loss terms switched on or off. A term that
    /// is on keeps its base weight, or 1 if the base has it off.
    pub fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let on = |w: f64| if w > 0.0 { w } else { 1.0 };
        let mut c = base.clone();
        c.loss.psi1 = if self.hed { on(base.loss.psi1) } else { 0.0 };
        c.loss.psi2 = if self.iou { on(base.loss.psi2) } else { 0.0 };
        c.loss.weight_decay = if self.reg { base.sweep.ablation_weight_decay } else { 0.0 };
        c
    }
}

/// The variants named in `config.sweep.ablation_variants`, in that order.
pub fn ablation_variants(config: &ExperimentConfig) -> Result<Vec<AblationVariant>> {
    let names = &config.sweep.ablation_variants;
    if names.is_empty() {
        return Err(GlnError::Config("no ablation variants selected".into()));
    }
    names
        .iter()
        .map(|n| {
            AblationVariant::find(n).ok_or_else(|| {
                let all: Vec<_> = ABLATION_VARIANTS.iter().map(|v| v.name).collect();
                GlnError::Config(format!("unknown ablation variant `{n}`; expected one of {}", all.join(", ")))
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: AblationVariant,
    pub row: EvalRow,
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("variant,acc,iou,dice,degree_mmd,clustering_mmd,orbit_mmd\n");
    for r in rows {
        let (e, m) = (&r.row.edges, &r.row.mmd);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.variant.name, e.accuracy, e.iou, e.dice, m.degree_mmd, m.clustering_mmd, m.orbit_mmd
        );
    }
    out
}

pub fn ablation(config: &ExperimentConfig, samples: Vec<GraphSample>, variants: &[AblationVariant]) -> Result<Vec<AblationRow>> {
    let (train, test) = split(config, samples)?;
    variants
        .iter()
        .map(|v| {
            let cfg = v.apply(config);
            let (model, _) = fit(&cfg, cfg.model.layers, &train, |_| {})?;
            Ok(AblationRow {
                variant: *v,
                row: evaluate(&model, &test, &cfg.mmd)?.row,
            })
        })
        .collect()
}

pub fn cmd_ablation(config: &ExperimentConfig, dataset: &Path, out_dir: &Path) -> Result<Vec<AblationRow>> {
    config.validate()?;
    prepare_dir(out_dir)?;
    let mut manifest = RunManifest::begin("ablation", config);
    manifest.inputs.push(HashedFile::of(dataset)?);
    let samples = io::load_dataset(dataset)?;
    check_config_shape(config, &samples)?;
    let rows = ablation(config, samples, &ablation_variants(config)?)?;
    let path = out_dir.join(ABLATION_FILE);
    fs::write(&path, ablation_csv(&rows))?;
    manifest.metrics.push(path);
    manifest.finish(out_dir)?;
    Ok(rows)
}

/// `i,j,probability` for every predicted edge of dataset sample `index`.
pub fn predicted_edges_csv(model: &GlnModel, sample: &GraphSample) -> Result<String> {
    check_model_shape(model, std::slice::from_ref(sample))?;
    let out = model.forward(&sample.features, &DenseMatrix::identity(model.n()))?;
    let a = &out.adjacency;
    let mut csv = String::from("i,j,probability\n");
    for i in 0..model.n() {
        for j in (i + 1)..model.n() {
            if a[(i, j)] > model.epsilon() {
                let _ = writeln!(csv, "{i},{j},{}", a[(i, j)]);
            }
        }
    }
    Ok(csv)
}

pub fn cmd_predict(checkpoint_path: &Path, dataset: &Path, index: usize) -> Result<String> {
    let model = checkpoint::load(checkpoint_path)?;
    let samples = io::load_dataset(dataset)?;
    let sample = samples
        .get(index)
        .ok_or_else(|| GlnError::Config(format!("sample {index} out of range (dataset has {})", samples.len())))?;
    predicted_edges_csv(&model, sample)
}
