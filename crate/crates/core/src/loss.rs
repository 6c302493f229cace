//! Training objectives: class-balanced edge cross-entropy, dice structural
//! loss and their weighted sum.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

/// How the edge-loss class weights are derived from `β = |Y+| / |Y|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMode {
    /// Positive pairs weighted by `β`, negatives by `1 - β`.
    #[default]
    PaperLiteral,
    /// Weights swapped so the rarer class is up-weighted.
    HedStandard,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub psi1: f64,
    pub psi2: f64,
    pub weight_decay: f64,
    pub balance_mode: BalanceMode,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            psi1: 1.0,
            psi2: 1.0,
            weight_decay: 0.0,
            balance_mode: BalanceMode::PaperLiteral,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(self.psi1) && ok(self.psi2) && ok(self.weight_decay)) {
            return Err(GlnError::Config("loss weights must be finite and nonnegative".into()));
        }
        if self.psi1 + self.psi2 <= 0.0 {
            return Err(GlnError::Config("psi1 + psi2 must be positive".into()));
        }
        Ok(())
    }
}

/// Checks a ground-truth adjacency: square, binary, symmetric, empty diagonal.
pub fn validate_labels(truth: &DenseMatrix) -> Result<()> {
    if !truth.is_square() {
        return Err(GlnError::InvalidLabel(format!(
            "adjacency is {}x{}",
            truth.rows(),
            truth.cols()
        )));
    }
    let n = truth.rows();
    for i in 0..n {
        for j in 0..n {
            let x = truth[(i, j)];
            if x != 0.0 && x != 1.0 {
                return Err(GlnError::InvalidLabel(format!("entry ({i},{j}) = {x} is not binary")));
            }
            if i == j && x != 0.0 {
                return Err(GlnError::InvalidLabel(format!("self-loop at node {i}")));
            }
            if x != truth[(j, i)] {
                return Err(GlnError::InvalidLabel(format!("asymmetric pair ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// `(w_pos, w_neg)` for a ground truth, counted over unordered pairs.
pub fn class_weights(truth: &DenseMatrix, mode: BalanceMode) -> (f64, f64) {
    let n = truth.rows();
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs == 0 {
        return (0.0, 0.0);
    }
    let positives = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| truth[(i, j)] == 1.0)
        .count();
    let beta = positives as f64 / pairs as f64;
    match mode {
        BalanceMode::PaperLiteral => (beta, 1.0 - beta),
        BalanceMode::HedStandard => (1.0 - beta, beta),
    }
}

pub fn edge_class_loss(
    tape: &mut Tape,
    pred: Var,
    truth: &DenseMatrix,
    mode: BalanceMode,
) -> Result<Var> {
    validate_labels(truth)?;
    let (w_pos, w_neg) = class_weights(truth, mode);
    tape.balanced_bce(pred, truth, w_pos, w_neg)
}

pub fn dice_structural_loss(tape: &mut Tape, pred: Var, truth: &DenseMatrix) -> Result<Var> {
    tape.dice(pred, truth)
}

/// Value-only edge loss.
pub fn edge_class_loss_value(pred: &DenseMatrix, truth: &DenseMatrix, mode: BalanceMode) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.constant(pred.clone());
    let l = edge_class_loss(&mut tape, p, truth, mode)?;
    Ok(tape.value(l)[(0, 0)])
}

/// Value-only dice loss.
pub fn dice_structural_loss_value(pred: &DenseMatrix, truth: &DenseMatrix) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.constant(pred.clone());
    let l = dice_structural_loss(&mut tape, p, truth)?;
    Ok(tape.value(l)[(0, 0)])
}

#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub total: Var,
    pub edge: Var,
    pub dice: Var,
}

/// `ψ1·L_c + ψ2·L_s (+ λ Σ‖θ‖²)` on the final adjacency.
pub fn total_loss(
    tape: &mut Tape,
    adjacency: Var,
    truth: &DenseMatrix,
    params: impl IntoIterator<Item = Var>,
    weights: &LossWeights,
) -> Result<LossVars> {
    let edge = edge_class_loss(tape, adjacency, truth, weights.balance_mode)?;
    let dice = dice_structural_loss(tape, adjacency, truth)?;
    let a = tape.scale(edge, weights.psi1);
    let b = tape.scale(dice, weights.psi2);
    let mut total = tape.add(a, b)?;
    if weights.weight_decay > 0.0 {
        for p in params {
            let sq = tape.sum_squares(p);
            let reg = tape.scale(sq, weights.weight_decay);
            total = tape.add(total, reg)?;
        }
    }
    Ok(LossVars { total, edge, dice })
}
