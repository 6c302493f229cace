//! Per-graph Adam training of a [`GlnModel`].

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::data::GraphSample;
use crate::error::{GlnError, Result};
use crate::loss::{total_loss, LossWeights};
use crate::matrix::DenseMatrix;
use crate::model::GlnModel;
use crate::optim::{AdamConfig, AdamState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    pub loss: LossWeights,
    pub shuffle_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub total: f64,
    pub edge: f64,
    pub dice: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_total: f64,
    pub mean_edge: f64,
    pub mean_dice: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossTrace {
    pub epochs: Vec<EpochLoss>,
}

impl LossTrace {
    /// `epoch,mean_total,mean_Lc,mean_Ls` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_total,mean_Lc,mean_Ls\n");
        for e in &self.epochs {
            let _ = writeln!(out, "{},{},{},{}", e.epoch, e.mean_total, e.mean_edge, e.mean_dice);
        }
        out
    }

    pub fn first(&self) -> Option<&EpochLoss> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }
}

/// Loss and parameter gradients for one sample, without updating anything.
pub fn loss_and_gradients(
    model: &GlnModel,
    sample: &GraphSample,
    initial: &DenseMatrix,
    weights: &LossWeights,
) -> Result<(StepLoss, Vec<DenseMatrix>)> {
    let mut tape = Tape::new();
    let vars = model.register(&mut tape);
    let h0 = tape.constant(sample.features.clone());
    let a0 = tape.constant(initial.clone());
    let out = model.forward_on_tape(&mut tape, &vars, h0, a0)?;
    let loss = total_loss(&mut tape, out.adjacency, &sample.adjacency, vars.iter(), weights)?;
    let grads = tape.backward(loss.total)?;
    let step = StepLoss {
        total: tape.value(loss.total)[(0, 0)],
        edge: tape.value(loss.edge)[(0, 0)],
        dice: tape.value(loss.dice)[(0, 0)],
    };
    let params = model.parameters();
    let grads = vars
        .iter()
        .zip(params)
        .map(|(v, p)| grads.wrt(v, p.shape()))
        .collect();
    Ok((step, grads))
}

/// Owns the optimiser state and sample-order RNG across epochs.
#[derive(Debug)]
pub struct Trainer {
    model: GlnModel,
    adam: AdamState,
    weights: LossWeights,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(model: GlnModel, adam: AdamConfig, weights: LossWeights, shuffle_seed: u64) -> Result<Self> {
        weights.validate()?;
        let state = AdamState::new(adam, &model.parameters());
        Ok(Self {
            model,
            adam: state,
            weights,
            rng: ChaCha8Rng::seed_from_u64(shuffle_seed),
            epoch: 0,
        })
    }

    pub fn model(&self) -> &GlnModel {
        &self.model
    }

    pub fn into_model(self) -> GlnModel {
        self.model
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    pub fn step(&mut self, sample: &GraphSample) -> Result<StepLoss> {
        let initial = DenseMatrix::identity(self.model.n());
        let (loss, grads) = loss_and_gradients(&self.model, sample, &initial, &self.weights)?;
        if !loss.total.is_finite() {
            return Err(GlnError::Diverged {
                epoch: self.epoch,
                sample: 0,
                loss: loss.total,
            });
        }
        self.adam.step(&mut self.model.parameters_mut(), &grads)?;
        Ok(loss)
    }

    /// One pass over `samples` in a freshly shuffled order.
    pub fn run_epoch(&mut self, samples: &[GraphSample]) -> Result<EpochLoss> {
        check_samples(&self.model, samples)?;
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut self.rng);
        let (mut total, mut edge, mut dice) = (0.0, 0.0, 0.0);
        for &idx in &order {
            let loss = self.step(&samples[idx]).map_err(|e| match e {
                GlnError::Diverged { epoch, loss, .. } => GlnError::Diverged { epoch, sample: idx, loss },
                other => other,
            })?;
            total += loss.total;
            edge += loss.edge;
            dice += loss.dice;
        }
        let count = samples.len().max(1) as f64;
        self.epoch += 1;
        Ok(EpochLoss {
            epoch: self.epoch,
            mean_total: total / count,
            mean_edge: edge / count,
            mean_dice: dice / count,
        })
    }
}

fn check_samples(model: &GlnModel, samples: &[GraphSample]) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        if s.n() != model.n() || s.feature_dim() != model.input_dim() {
            return Err(GlnError::Config(format!(
                "sample {i} has n = {}, d = {}; model expects n = {}, d = {}",
                s.n(),
                s.feature_dim(),
                model.n(),
                model.input_dim()
            )));
        }
    }
    Ok(())
}

/// Trains in place and returns the per-epoch mean losses.
pub fn train(model: &mut GlnModel, samples: &[GraphSample], config: &TrainConfig) -> Result<LossTrace> {
    train_with(model, samples, config, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    model: &mut GlnModel,
    samples: &[GraphSample],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<LossTrace> {
    check_samples(model, samples)?;
    let mut trainer = Trainer::new(model.clone(), config.adam, config.loss, config.shuffle_seed)?;
    let mut trace = LossTrace::default();
    for _ in 0..config.epochs {
        let e = trainer.run_epoch(samples)?;
        on_epoch(&e);
        trace.epochs.push(e);
    }
    *model = trainer.into_model();
    Ok(trace)
}
