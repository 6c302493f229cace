use serde::{Deserialize, Serialize};

use gln::config::{DatasetConfig, ExperimentConfig};
use gln::data::{adjacency_from_edges, GraphSample};
use gln::experiment::{evaluate, split};
use gln::metrics::{compare_stats, edge_class_metrics, EdgeClassReport, EvalRow, GraphStats, MmdConfig, MmdReport};
use gln::model::binarize;
use gln::train::{EpochLoss, Trainer};
use gln::{DenseMatrix, GlnError, Result};

/// Largest node count the page accepts; the pair-wise layer is `n × n`.
pub const MAX_NODES: usize = 100;

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

fn parse_config(config_json: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json)?;
    cfg.validate()?;
    if cfg.dataset.n() > MAX_NODES {
        return Err(GlnError::Config(format!(
            "{} nodes per graph; the page is limited to {MAX_NODES}",
            cfg.dataset.n()
        )));
    }
    Ok(cfg)
}

pub fn preset_config(name: &str) -> Result<String> {
    let mut cfg = ExperimentConfig::preset(name)?;
    match &mut cfg.dataset {
        DatasetConfig::Figures(spec) => spec.side = 8,
        DatasetConfig::Surface(_) | DatasetConfig::Community(_) => {}
    }
    cfg.dataset.set_samples(20);
    cfg.model.hidden = 16;
    cfg.train.learning_rate = Some(1e-3);
    cfg.train.epochs = Some(1);
    to_json(&cfg.resolved())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleView {
    pub family: String,
    pub variant: String,
    pub n: usize,
    /// Row-major `n × d` features.
    pub features: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
    pub stats: GraphStats,
}

impl SampleView {
    fn of(s: &GraphSample) -> Result<Self> {
        Ok(Self {
            family: s.family.to_string(),
            variant: s.variant.clone(),
            n: s.n(),
            features: (0..s.n()).map(|i| s.features.row(i).to_vec()).collect(),
            edges: s.edges(),
            stats: GraphStats::of(&s.adjacency)?,
        })
    }
}

pub fn generate_sample(config_json: &str, index: usize) -> Result<String> {
    let cfg = parse_config(config_json)?;
    let sample = cfg.dataset.sample(index, cfg.seeds.data)?;
    to_json(&SampleView::of(&sample)?)
}

#[derive(Debug, Deserialize)]
pub struct CompareRequest {
    pub n: usize,
    pub left: Vec<Vec<(usize, usize)>>,
    pub right: Vec<Vec<(usize, usize)>>,
    #[serde(default)]
    pub sigma: MmdConfig,
}

#[derive(Debug, Serialize)]
pub struct CompareView {
    pub left: Vec<GraphStats>,
    pub right: Vec<GraphStats>,
    pub mmd: MmdReport,
    /// Pairwise scores of `left[i]` against `right[i]` when the sets have equal size.
    pub pairwise: Option<Vec<EdgeClassReport>>,
}

pub fn compare_graph_sets(request_json: &str) -> Result<String> {
    let req: CompareRequest = serde_json::from_str(request_json)?;
    let build = |set: &[Vec<(usize, usize)>]| -> Result<Vec<DenseMatrix>> {
        set.iter().map(|edges| adjacency_from_edges(req.n, edges)).collect()
    };
    let (left, right) = (build(&req.left)?, build(&req.right)?);
    let stats = |set: &[DenseMatrix]| set.iter().map(GraphStats::of).collect::<Result<Vec<_>>>();
    let (ls, rs) = (stats(&left)?, stats(&right)?);
    let mmd = compare_stats(&ls, &rs, &req.sigma)?;
    let pairwise = if left.len() == right.len() {
        Some(left.iter().zip(&right).map(|(p, t)| edge_class_metrics(p, t)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    to_json(&CompareView {
        left: ls,
        right: rs,
        mmd,
        pairwise,
    })
}

pub struct Session {
    config: ExperimentConfig,
    trainer: Trainer,
    train: Vec<GraphSample>,
    test: Vec<GraphSample>,
}

#[derive(Debug, Serialize)]
pub struct PredictionView {
    pub sample: SampleView,
    /// Upper-triangle pairs with probability above ε.
    pub predicted: Vec<(usize, usize, f64)>,
    pub scores: EdgeClassReport,
}

impl Session {
    pub fn new(config_json: &str) -> Result<Self> {
        let config = parse_config(config_json)?;
        let samples = config.dataset.generate(config.seeds.data)?;
        let (train, test) = split(&config, samples)?;
        let tc = config.train_config();
        let trainer = Trainer::new(config.init_model(config.model.layers)?, tc.adam, tc.loss, tc.shuffle_seed)?;
        Ok(Self {
            config,
            trainer,
            train,
            test,
        })
    }

    pub fn train_epochs(&mut self, epochs: usize) -> Result<String> {
        let losses = (0..epochs)
            .map(|_| self.trainer.run_epoch(&self.train))
            .collect::<Result<Vec<EpochLoss>>>()?;
        to_json(&losses)
    }

    pub fn predict(&self, index: usize) -> Result<String> {
        let sample = self
            .test
            .get(index)
            .ok_or_else(|| GlnError::Config(format!("test sample {index} out of range")))?;
        let model = self.trainer.model();
        let out = model.forward(&sample.features, &DenseMatrix::identity(model.n()))?;
        let eps = model.epsilon();
        let mut predicted = Vec::new();
        for i in 0..model.n() {
            for j in (i + 1)..model.n() {
                let p = out.adjacency[(i, j)];
                if p > eps {
                    predicted.push((i, j, p));
                }
            }
        }
        let scores = edge_class_metrics(&binarize(&out.adjacency, eps), &sample.adjacency)?;
        to_json(&PredictionView {
            sample: SampleView::of(sample)?,
            predicted,
            scores,
        })
    }

    pub fn evaluate(&self) -> Result<String> {
        let row: EvalRow = evaluate(self.trainer.model(), &self.test, &self.config.mmd)?.row;
        to_json(&row)
    }

    pub fn test_size(&self) -> usize {
        self.test.len()
    }

    pub fn epochs_done(&self) -> usize {
        self.trainer.epochs_done()
    }
}
