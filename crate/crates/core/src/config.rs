//! Declarative experiment configuration, stored as TOML.
//!
//! Every key may be omitted. Learning rate and epoch count fall back to
//! per-family values when unset; [`ExperimentConfig::resolved`] fills them in.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    gen_community, gen_figure_image, gen_surface, sample_seed, CommunitySpec, Family, FigureImageSpec,
    GraphSample, SurfaceKind, SurfaceParams, SurfaceSpec, TransformMode,
};
use crate::error::{GlnError, Result};
use crate::loss::LossWeights;
use crate::metrics::MmdConfig;
use crate::model::{ActivationSchedule, GlnModel, ModelShape};
use crate::optim::AdamConfig;
use crate::train::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceDataset {
    /// Sample `i` uses `kinds[i % kinds.len()]`.
    pub kinds: Vec<SurfaceKind>,
    pub u_steps: usize,
    pub v_steps: usize,
    pub samples: usize,
    pub params: SurfaceParams,
    pub transform: TransformMode,
}

impl Default for SurfaceDataset {
    fn default() -> Self {
        Self {
            kinds: vec![SurfaceKind::Torus],
            u_steps: 10,
            v_steps: 10,
            samples: 200,
            params: SurfaceParams::default(),
            transform: TransformMode::Random,
        }
    }
}

impl SurfaceDataset {
    pub fn spec(&self, index: usize) -> SurfaceSpec {
        SurfaceSpec {
            kind: self.kinds[index % self.kinds.len()],
            params: self.params,
            u_steps: self.u_steps,
            v_steps: self.v_steps,
            transform: self.transform,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DatasetConfig {
    Community(CommunitySpec),
    Surface(SurfaceDataset),
    Figures(FigureImageSpec),
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Community(CommunitySpec::default())
    }
}

impl DatasetConfig {
    pub fn family(&self) -> Family {
        match self {
            DatasetConfig::Community(_) => Family::Community,
            DatasetConfig::Surface(_) => Family::Surface,
            DatasetConfig::Figures(_) => Family::Figures,
        }
    }

    pub fn samples(&self) -> usize {
        match self {
            DatasetConfig::Community(c) => c.samples,
            DatasetConfig::Surface(s) => s.samples,
            DatasetConfig::Figures(f) => f.samples,
        }
    }

    pub fn set_samples(&mut self, samples: usize) {
        match self {
            DatasetConfig::Community(c) => c.samples = samples,
            DatasetConfig::Surface(s) => s.samples = samples,
            DatasetConfig::Figures(f) => f.samples = samples,
        }
    }

    /// Node count shared by every sample.
    pub fn n(&self) -> usize {
        match self {
            DatasetConfig::Community(c) => c.n(),
            DatasetConfig::Surface(s) => s.u_steps * s.v_steps,
            DatasetConfig::Figures(f) => f.n(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            DatasetConfig::Community(_) => 2,
            DatasetConfig::Surface(_) | DatasetConfig::Figures(_) => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DatasetConfig::Community(c) => c.validate(),
            DatasetConfig::Surface(s) => {
                if s.kinds.is_empty() {
                    return Err(GlnError::Config("surface dataset needs at least one kind".into()));
                }
                s.spec(0).validate()
            }
            DatasetConfig::Figures(f) => f.validate(),
        }
    }

    pub fn sample(&self, index: usize, data_seed: u64) -> Result<GraphSample> {
        let seed = sample_seed(data_seed, index);
        match self {
            DatasetConfig::Community(c) => gen_community(c, seed),
            DatasetConfig::Surface(s) => gen_surface(&s.spec(index), seed),
            DatasetConfig::Figures(f) => gen_figure_image(f, seed),
        }
    }

    pub fn generate(&self, data_seed: u64) -> Result<Vec<GraphSample>> {
        self.validate()?;
        (0..self.samples()).map(|i| self.sample(i, data_seed)).collect()
    }

    pub fn default_learning_rate(&self) -> f64 {
        match self {
            DatasetConfig::Community(_) => 1e-5,
            _ => 5e-6,
        }
    }

    pub fn default_epochs(&self) -> usize {
        match self {
            DatasetConfig::Surface(_) => 200,
            _ => 150,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hidden: usize,
    pub layers: usize,
    pub kernels: usize,
    pub epsilon: f64,
    pub activations: ActivationSchedule,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            layers: 5,
            kernels: 3,
            epsilon: 0.5,
            activations: ActivationSchedule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub train_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            learning_rate: None,
            epochs: None,
            train_fraction: 0.8,
        }
    }
}

/// The three sources of randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    /// Dataset generation, train/test split and random initial adjacencies.
    pub data: u64,
    /// Parameter initialisation.
    pub init: u64,
    /// Sample order during training.
    pub shuffle: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            data: 0,
            init: 1,
            shuffle: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub depths: Vec<usize>,
    pub proportions: Vec<f64>,
    pub runs: usize,
    /// Weight decay used by the "+Reg" ablation variants.
    pub ablation_weight_decay: f64,
    /// Ablation variants to train, by name.
    pub ablation_variants: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            depths: (1..=5).collect(),
            proportions: (1..=10).map(|i| i as f64 / 10.0).collect(),
            runs: 5,
            ablation_weight_decay: 1e-4,
            ablation_variants: crate::experiment::ABLATION_VARIANTS.iter().map(|v| v.name.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub loss: LossWeights,
    pub train: TrainSection,
    pub seeds: Seeds,
    pub mmd: MmdConfig,
    pub sweep: SweepConfig,
}

pub const PRESETS: &[&str] = &[
    "community-c2",
    "community-c4",
    "surf100-<kind>",
    "surf400-<kind>",
    "figures",
    "figures-paper",
    "desk-community",
    "desk-torus",
    "desk-figures",
];

impl ExperimentConfig {
    pub fn with_dataset(name: &str, dataset: DatasetConfig) -> Self {
        Self {
            name: name.to_string(),
            output_dir: PathBuf::from(name),
            dataset,
            ..Default::default()
        }
    }

    /// A named configuration; see [`PRESETS`]. `<kind>` is a surface kind
    /// name or `mixed`.
    pub fn preset(name: &str) -> Result<Self> {
        let surface = |res: usize, kind: &str| -> Result<Self> {
            let kinds = if kind == "mixed" {
                SurfaceKind::ALL.to_vec()
            } else {
                vec![SurfaceKind::ALL
                    .into_iter()
                    .find(|k| k.name() == kind)
                    .ok_or_else(|| GlnError::Config(format!("unknown surface kind `{kind}`")))?]
            };
            let side = if res == 100 { 10 } else { 20 };
            Ok(Self::with_dataset(
                name,
                DatasetConfig::Surface(SurfaceDataset {
                    kinds,
                    u_steps: side,
                    v_steps: side,
                    ..Default::default()
                }),
            ))
        };
        let cfg = match name {
            "community-c2" => Self::with_dataset(name, DatasetConfig::Community(CommunitySpec::with_communities(2))),
            "community-c4" => Self::with_dataset(name, DatasetConfig::Community(CommunitySpec::with_communities(4))),
            "figures" => Self::with_dataset(
                name,
                DatasetConfig::Figures(FigureImageSpec {
                    samples: 500,
                    ..Default::default()
                }),
            ),
            "figures-paper" => Self::with_dataset(name, DatasetConfig::Figures(FigureImageSpec::default())),
            "desk-community" => {
                let mut c = Self::with_dataset(
                    name,
                    DatasetConfig::Community(CommunitySpec {
                        samples: 50,
                        ..CommunitySpec::with_communities(2)
                    }),
                );
                c.train.epochs = Some(150);
                c.train.learning_rate = Some(1e-5);
                c
            }
            "desk-torus" => {
                let mut c = surface(100, "torus")?;
                c.dataset.set_samples(20);
                c.train.epochs = Some(30);
                c.train.learning_rate = Some(DESK_LEARNING_RATE);
                c
            }
            "desk-figures" => {
                let mut c = Self::with_dataset(
                    name,
                    DatasetConfig::Figures(FigureImageSpec {
                        samples: 200,
                        ..Default::default()
                    }),
                );
                c.train.epochs = Some(DESK_FIGURE_EPOCHS);
                c.train.learning_rate = Some(DESK_LEARNING_RATE);
                c
            }
            other => {
                if let Some(kind) = other.strip_prefix("surf100-") {
                    surface(100, kind)?
                } else if let Some(kind) = other.strip_prefix("surf400-") {
                    surface(400, kind)?
                } else {
                    return Err(GlnError::Config(format!(
                        "unknown preset `{other}`; expected one of {}",
                        PRESETS.join(", ")
                    )));
                }
            }
        };
        Ok(cfg)
    }

    pub fn learning_rate(&self) -> f64 {
        self.train.learning_rate.unwrap_or_else(|| self.dataset.default_learning_rate())
    }

    pub fn epochs(&self) -> usize {
        self.train.epochs.unwrap_or_else(|| self.dataset.default_epochs())
    }

    /// Copy with every family-dependent default written out.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.train.learning_rate = Some(self.learning_rate());
        c.train.epochs = Some(self.epochs());
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.loss.validate()?;
        let lr = self.learning_rate();
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(GlnError::Config(format!("learning rate {lr} must be positive")));
        }
        if !(self.train.train_fraction > 0.0 && self.train.train_fraction < 1.0) {
            return Err(GlnError::Config("train_fraction must lie in (0, 1)".into()));
        }
        if self.model.hidden == 0 || self.model.layers == 0 || self.model.kernels == 0 {
            return Err(GlnError::Config("hidden, layers and kernels must be positive".into()));
        }
        if self.sweep.runs == 0 {
            return Err(GlnError::Config("sweep runs must be positive".into()));
        }
        if self.sweep.proportions.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(GlnError::Config("proportions must lie in [0, 1]".into()));
        }
        if self.sweep.depths.is_empty() || self.sweep.depths.contains(&0) {
            return Err(GlnError::Config("depths must be nonempty and positive".into()));
        }
        crate::experiment::ablation_variants(self)?;
        Ok(())
    }

    pub fn model_shape(&self, layers: usize) -> ModelShape {
        ModelShape::uniform(
            self.dataset.feature_dim(),
            self.model.hidden,
            layers,
            self.dataset.n(),
            self.model.kernels,
        )
    }

    /// Freshly initialised model with `layers` blocks.
    pub fn init_model(&self, layers: usize) -> Result<GlnModel> {
        let mut model = GlnModel::init(self.model_shape(layers), self.model.epsilon, self.seeds.init)?;
        model.set_activations(self.model.activations);
        Ok(model)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs(),
            adam: AdamConfig {
                learning_rate: self.learning_rate(),
                ..Default::default()
            },
            loss: self.loss,
            shuffle_seed: self.seeds.shuffle,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| GlnError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| GlnError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Learning rate of the short desk presets.
pub const DESK_LEARNING_RATE: f64 = 1e-3;
pub const DESK_FIGURE_EPOCHS: usize = 10;
