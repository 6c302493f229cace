//! Define-by-run reverse-mode automatic differentiation over [`DenseMatrix`].
//!
//! A [`Tape`] records every primitive in execution order; [`Tape::backward`]
//! walks the records once, newest first, and accumulates adjoints. Values are
//! referred to by [`Var`] handles, which are only meaningful for the tape that
//! issued them. The tape is rebuilt for every forward pass.

use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Sum(Var),
    SumSquares(Var),
    SymNormalize {
        input: Var,
        // (1 + row_sum)^(-1/2) of the symmetrised input
        inv_sqrt_degree: Vec<f64>,
    },
    BalancedBce {
        pred: Var,
        target: DenseMatrix,
        w_pos: f64,
        w_neg: f64,
    },
    Dice {
        pred: Var,
        target: DenseMatrix,
    },
}

#[derive(Debug)]
struct Node {
    value: DenseMatrix,
    op: Op,
    requires_grad: bool,
}

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before any log.
pub const PROB_CLAMP: f64 = 1e-12;

/// Tolerated asymmetry of an adjacency fed to [`Tape::sym_normalize`].
pub const ADJACENCY_SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A trainable leaf; [`Tape::backward`] reports its gradient.
    pub fn param(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// An untracked leaf.
    pub fn constant(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, var: Var) -> &DenseMatrix {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn push(&mut self, value: DenseMatrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Transpose(a), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).sub(self.value(b))?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    /// Entrywise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).hadamard(self.value(b))?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a).scale(factor);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Scale(a, factor), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Sigmoid(a), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Tanh(a), rg)
    }

    /// Sum of all entries, as a 1x1 value.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = DenseMatrix::scalar(self.value(a).sum());
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Sum(a), rg)
    }

    /// Squared Frobenius norm, as a 1x1 value.
    pub fn sum_squares(&mut self, a: Var) -> Var {
        let value = DenseMatrix::scalar(self.value(a).sum_squares());
        let rg = self.any_grad(&[a]);
        self.push(value, Op::SumSquares(a), rg)
    }

    /// Renormalised propagation operator `D̂^-1/2 (A + I) D̂^-1/2` with
    /// `D̂ = diag(row sums of A) + I`.
    ///
    /// The input must be nonnegative and symmetric up to
    /// [`ADJACENCY_SYMMETRY_TOL`]; it is symmetrised before use.
    pub fn sym_normalize(&mut self, a: Var) -> Result<Var> {
        let adj = self.value(a);
        if !adj.is_square() {
            return Err(GlnError::InvalidAdjacency(format!(
                "adjacency must be square, got {}x{}",
                adj.rows(),
                adj.cols()
            )));
        }
        if let Some(x) = adj.as_slice().iter().find(|x| !(**x >= 0.0)) {
            return Err(GlnError::InvalidAdjacency(format!(
                "entry {x} is negative or not a number"
            )));
        }
        let asym = adj.asymmetry().unwrap_or(0.0);
        if asym > ADJACENCY_SYMMETRY_TOL {
            return Err(GlnError::InvalidAdjacency(format!(
                "asymmetry {asym:e} exceeds {ADJACENCY_SYMMETRY_TOL:e}"
            )));
        }
        let n = adj.rows();
        let sym = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (adj[(i, j)] + adj[(j, i)]));
        let inv_sqrt_degree: Vec<f64> = sym
            .row_sums()
            .into_iter()
            .map(|r| (1.0 + r).sqrt().recip())
            .collect();
        let s = &inv_sqrt_degree;
        let value = DenseMatrix::from_fn(n, n, |i, j| {
            let b = sym[(i, j)] + if i == j { 1.0 } else { 0.0 };
            b * s[i] * s[j]
        });
        let rg = self.any_grad(&[a]);
        Ok(self.push(
            value,
            Op::SymNormalize {
                input: a,
                inv_sqrt_degree,
            },
            rg,
        ))
    }

    /// Class-weighted binary cross-entropy over the strictly upper triangle:
    /// `-w_pos Σ_{t=1} ln p - w_neg Σ_{t=0} ln(1 - p)`.
    pub fn balanced_bce(
        &mut self,
        pred: Var,
        target: &DenseMatrix,
        w_pos: f64,
        w_neg: f64,
    ) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != target.shape() || !p.is_square() {
            return Err(GlnError::Dimension(format!(
                "edge loss: prediction {}x{} vs target {}x{}",
                p.rows(),
                p.cols(),
                target.rows(),
                target.cols()
            )));
        }
        let n = p.rows();
        let mut loss = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let q = p[(i, j)].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                if target[(i, j)] == 1.0 {
                    loss -= w_pos * q.ln();
                } else {
                    loss -= w_neg * (1.0 - q).ln();
                }
            }
        }
        let rg = self.any_grad(&[pred]);
        Ok(self.push(
            DenseMatrix::scalar(loss),
            Op::BalancedBce {
                pred,
                target: target.clone(),
                w_pos,
                w_neg,
            },
            rg,
        ))
    }

    /// `1 - 2 Σ p·t / (Σ p² + Σ t²)` over every entry, `0` when both are zero.
    pub fn dice(&mut self, pred: Var, target: &DenseMatrix) -> Result<Var> {
        let p = self.value(pred);
        let (inter, denom) = dice_terms(p, target)?;
        let loss = if denom == 0.0 {
            0.0
        } else {
            1.0 - 2.0 * inter / denom
        };
        let rg = self.any_grad(&[pred]);
        Ok(self.push(
            DenseMatrix::scalar(loss),
            Op::Dice {
                pred,
                target: target.clone(),
            },
            rg,
        ))
    }

    /// Gradients of the scalar `root` with respect to every tracked value.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let root_value = self.value(root);
        if root_value.shape() != (1, 1) {
            return Err(GlnError::Contract(format!(
                "backward needs a 1x1 root, got {}x{}",
                root_value.rows(),
                root_value.cols()
            )));
        }
        let mut grads: Vec<Option<DenseMatrix>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(DenseMatrix::scalar(1.0));

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(&node.op, &node.value, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(
        &self,
        op: &Op,
        out: &DenseMatrix,
        g: &DenseMatrix,
        grads: &mut [Option<DenseMatrix>],
    ) -> Result<()> {
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.requires_grad(*a) {
                    let da = g.matmul_t(self.value(*b))?;
                    self.send(grads, *a, da);
                }
                if self.requires_grad(*b) {
                    let db = self.value(*a).t_matmul(g)?;
                    self.send(grads, *b, db);
                }
            }
            Op::Transpose(a) => self.send(grads, *a, g.transpose()),
            Op::Add(a, b) => {
                self.send(grads, *a, g.clone());
                self.send(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.send(grads, *a, g.clone());
                self.send(grads, *b, g.scale(-1.0));
            }
            Op::Mul(a, b) => {
                if self.requires_grad(*a) {
                    self.send(grads, *a, g.hadamard(self.value(*b))?);
                }
                if self.requires_grad(*b) {
                    self.send(grads, *b, g.hadamard(self.value(*a))?);
                }
            }
            Op::Scale(a, k) => self.send(grads, *a, g.scale(*k)),
            Op::Sigmoid(a) => {
                let da = g.zip_map(out, "sigmoid", |gi, s| gi * s * (1.0 - s))?;
                self.send(grads, *a, da);
            }
            Op::Tanh(a) => {
                let da = g.zip_map(out, "tanh", |gi, t| gi * (1.0 - t * t))?;
                self.send(grads, *a, da);
            }
            Op::Sum(a) => {
                let (r, c) = self.value(*a).shape();
                self.send(grads, *a, DenseMatrix::filled(r, c, g[(0, 0)]));
            }
            Op::SumSquares(a) => {
                let da = self.value(*a).scale(2.0 * g[(0, 0)]);
                self.send(grads, *a, da);
            }
            Op::SymNormalize {
                input,
                inv_sqrt_degree: s,
            } => {
                let adj = self.value(*input);
                let n = adj.rows();
                let b = |i: usize, j: usize| {
                    0.5 * (adj[(i, j)] + adj[(j, i)]) + if i == j { 1.0 } else { 0.0 }
                };
                // d/ds_i collects every output entry in row i and column i.
                let mut ds = vec![0.0; n];
                for i in 0..n {
                    for k in 0..n {
                        ds[i] += g[(i, k)] * b(i, k) * s[k] + g[(k, i)] * b(k, i) * s[k];
                    }
                }
                // s_i = (1 + r_i)^(-1/2), r_i = Σ_j sym_ij
                let dr: Vec<f64> = (0..n).map(|i| -0.5 * ds[i] * s[i].powi(3)).collect();
                let dsym = DenseMatrix::from_fn(n, n, |i, j| g[(i, j)] * s[i] * s[j] + dr[i]);
                let da = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (dsym[(i, j)] + dsym[(j, i)]));
                self.send(grads, *input, da);
            }
            Op::BalancedBce {
                pred,
                target,
                w_pos,
                w_neg,
            } => {
                let p = self.value(*pred);
                let n = p.rows();
                let scale = g[(0, 0)];
                let mut dp = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let x = p[(i, j)];
                        if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&x) {
                            continue;
                        }
                        dp[(i, j)] = if target[(i, j)] == 1.0 {
                            -scale * w_pos / x
                        } else {
                            scale * w_neg / (1.0 - x)
                        };
                    }
                }
                self.send(grads, *pred, dp);
            }
            Op::Dice { pred, target } => {
                let p = self.value(*pred);
                let (inter, denom) = dice_terms(p, target)?;
                let dp = if denom == 0.0 {
                    DenseMatrix::zeros(p.rows(), p.cols())
                } else {
                    let scale = g[(0, 0)];
                    p.zip_map(target, "dice", |pi, ti| {
                        -2.0 * scale * (ti * denom - 2.0 * pi * inter) / (denom * denom)
                    })?
                };
                self.send(grads, *pred, dp);
            }
        }
        Ok(())
    }

    fn send(&self, grads: &mut [Option<DenseMatrix>], to: Var, contribution: DenseMatrix) {
        if !self.requires_grad(to) {
            return;
        }
        match &mut grads[to.0] {
            Some(acc) => acc.accumulate(&contribution),
            slot @ None => *slot = Some(contribution),
        }
    }
}

fn dice_terms(p: &DenseMatrix, t: &DenseMatrix) -> Result<(f64, f64)> {
    if p.shape() != t.shape() {
        return Err(GlnError::Dimension(format!(
            "dice: prediction {}x{} vs target {}x{}",
            p.rows(),
            p.cols(),
            t.rows(),
            t.cols()
        )));
    }
    let inter = p.hadamard(t)?.sum();
    Ok((inter, p.sum_squares() + t.sum_squares()))
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<DenseMatrix>>,
}

impl Gradients {
    /// Gradient of `var`, or `None` if the root does not depend on it.
    pub fn get(&self, var: Var) -> Option<&DenseMatrix> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Gradient of `var`, zero-filled to `shape` when the root does not depend on it.
    pub fn wrt(&self, var: Var, shape: (usize, usize)) -> DenseMatrix {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| DenseMatrix::zeros(shape.0, shape.1))
    }
}
